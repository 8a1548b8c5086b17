//! Small numerical kernels shared by the geometry modules.

use nalgebra::{DMatrix, DVector};

/// Gauss-Legendre nodes and weights on `[0, 1]`.
///
/// Nodes come from Newton iteration on the Legendre recurrence.
pub fn gauss_legendre_unit(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    let nodes = nodes.into_iter().map(|x| 0.5 * (x + 1.0)).collect();
    let weights = weights.into_iter().map(|w| 0.5 * w).collect();
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Radical inverse in the given base (van der Corput sequence).
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Halton point `index` in `[0,1)^dim`.
pub fn halton(index: usize, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|d| radical_inverse(index as u64 + 1, PRIMES[d % PRIMES.len()]))
        .collect()
}

/// One classical RK4 step for `y' = f(t, y)`.
pub fn rk4_step<F>(f: &mut F, t: f64, y: &DVector<f64>, dt: f64) -> crate::Result<DVector<f64>>
where
    F: FnMut(f64, &DVector<f64>) -> crate::Result<DVector<f64>>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * dt, &(y + &k1 * (0.5 * dt)))?;
    let k3 = f(t + 0.5 * dt, &(y + &k2 * (0.5 * dt)))?;
    let k4 = f(t + dt, &(y + &k3 * dt))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// RK4 along a uniformly sampled curve, using the middle sample of each
/// interval pair as the half step. Values at the middle samples come from the
/// cubic Hermite interpolant; a trailing odd interval is closed with Heun's rule.
///
/// `rhs(i, y)` evaluates the right side at sample `i`.
pub fn rk4_on_samples<F>(
    samples: usize,
    dt: f64,
    y0: &DVector<f64>,
    mut rhs: F,
) -> crate::Result<Vec<DVector<f64>>>
where
    F: FnMut(usize, &DVector<f64>) -> crate::Result<DVector<f64>>,
{
    let mut out = Vec::with_capacity(samples);
    out.push(y0.clone());
    let mut y = y0.clone();
    let mut i = 0;
    while i + 2 < samples {
        let h = 2.0 * dt;
        let k1 = rhs(i, &y)?;
        let k2 = rhs(i + 1, &(&y + &k1 * (0.5 * h)))?;
        let k3 = rhs(i + 1, &(&y + &k2 * (0.5 * h)))?;
        let k4 = rhs(i + 2, &(&y + &k3 * h))?;
        let next = &y + (&k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let end_slope = rhs(i + 2, &next)?;
        out.push((&y + &next) * 0.5 + (k1 - end_slope) * (h / 8.0));
        out.push(next.clone());
        y = next;
        i += 2;
    }
    if i + 1 < samples {
        let k1 = rhs(i, &y)?;
        let k2 = rhs(i + 1, &(&y + &k1 * dt))?;
        y = &y + (k1 + k2) * (0.5 * dt);
        out.push(y);
    }
    Ok(out)
}

/// Modified Gram-Schmidt under a symmetric bilinear form given as a closure.
///
/// Vectors whose residual norm falls below `drop_tol` are skipped.
pub fn gram_schmidt<I>(
    candidates: &[DVector<f64>],
    fixed: &[DVector<f64>],
    inner: I,
    want: usize,
    drop_tol: f64,
) -> Vec<DVector<f64>>
where
    I: Fn(&DVector<f64>, &DVector<f64>) -> f64,
{
    // Orthonormalize the fixed set first so projection against it is exact.
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for f in fixed {
        let mut v = f.clone();
        for b in &basis {
            let c = inner(&v, b);
            v -= b * c;
        }
        let n = inner(&v, &v).max(0.0).sqrt();
        if n > 1e-12 {
            basis.push(v / n);
        }
    }
    let n_fixed = basis.len();
    for cand in candidates {
        if basis.len() - n_fixed >= want {
            break;
        }
        let mut v = cand.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = inner(&v, b);
                v -= b * c;
            }
        }
        let n = inner(&v, &v).max(0.0).sqrt();
        if n > drop_tol {
            basis.push(v / n);
        }
    }
    basis.split_off(n_fixed)
}

/// Inverse of a small symmetric positive definite matrix.
pub fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().cholesky().map(|c| c.inverse())
}

pub fn wrap_periodic(x: f64, lo: f64, hi: f64) -> f64 {
    let span = hi - lo;
    lo + (x - lo).rem_euclid(span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for order in 1..12 {
            let (x, w) = gauss_legendre_unit(order);
            for deg in 0..(2 * order) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = 1.0 / (deg as f64 + 1.0);
                assert!((q - exact).abs() < 1e-13, "order {order} deg {deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn halton_is_in_unit_cube_and_distinct() {
        let pts: Vec<_> = (0..64).map(|i| halton(i, 2)).collect();
        for p in &pts {
            assert!(p.iter().all(|c| (0.0..1.0).contains(c)));
        }
        assert_ne!(pts[0], pts[1]);
    }

    #[test]
    fn rk4_matches_exponential() {
        let mut f = |_t: f64, y: &DVector<f64>| Ok(y.clone());
        let mut y = DVector::from_element(1, 1.0);
        for i in 0..100 {
            y = rk4_step(&mut f, i as f64 * 0.01, &y, 0.01).unwrap();
        }
        assert!((y[0] - 1f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn gram_schmidt_spans_complement() {
        let fixed = vec![DVector::from_vec(vec![1.0, 1.0, 0.0])];
        let cands: Vec<_> = (0..3)
            .map(|i| DVector::from_fn(3, |j, _| if i == j { 1.0 } else { 0.0 }))
            .collect();
        let out = gram_schmidt(&cands, &fixed, |a, b| a.dot(b), 2, 1e-6);
        assert_eq!(out.len(), 2);
        for v in &out {
            assert!((v.norm() - 1.0).abs() < 1e-12);
            assert!(v.dot(&fixed[0]).abs() < 1e-12);
        }
        assert!(out[0].dot(&out[1]).abs() < 1e-12);
    }
}
