use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;

use super::*;

fn dv(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

#[test]
fn euclidean_geodesic_is_straight_line() {
    let e = AmbientSpace::euclidean(2);
    let p = Point::new(&[0.0, 0.0]);
    let path = e.geodesic(&p, &Tangent::new(p.clone(), &[1.0, 0.0]), 8).unwrap();
    assert!((path.end() - dv(&[1.0, 0.0])).norm() < 1e-15);
    for s in &path.samples {
        assert_eq!(s.velocity, dv(&[1.0, 0.0]));
    }
}

#[test]
fn sphere_quarter_great_circle() {
    let s = AmbientSpace::sphere(2, 1.0);
    let p = Point::new(&[1.0, 0.0, 0.0]);
    let path = s
        .geodesic(&p, &Tangent::new(p.clone(), &[0.0, FRAC_PI_2, 0.0]), 16)
        .unwrap();
    assert!((path.end() - dv(&[0.0, 1.0, 0.0])).norm() < 1e-12);
    for smp in &path.samples {
        assert!((smp.point.norm() - 1.0).abs() < 1e-12);
        assert!(smp.point.dot(&smp.velocity).abs() < 1e-12);
    }
}

#[test]
fn identity_chart_geodesic_is_straight() {
    let c = AmbientSpace::chart(2, ChartMetric::Flat, 100.0);
    let p = Point::new(&[0.1, 0.2]);
    let path = c.geodesic(&p, &Tangent::new(p.clone(), &[1.0, 1.0]), 256).unwrap();
    assert!((path.end() - dv(&[1.1, 1.2])).norm() < 1e-8);
}

#[test]
fn chart_geodesic_reports_domain_escape() {
    let c = AmbientSpace::chart(2, ChartMetric::Flat, 1.0);
    let p = Point::new(&[0.0, 0.0]);
    let err = c
        .geodesic(&p, &Tangent::new(p.clone(), &[2.0, 0.0]), 64)
        .unwrap_err();
    assert!(matches!(err, GeomError::DomainEscape { .. }));
}

#[test]
fn sphere_distance_between_orthogonal_points() {
    let s = AmbientSpace::sphere(2, 1.0);
    let (d, v) = s
        .distance_and_log(&Point::new(&[1.0, 0.0, 0.0]), &Point::new(&[0.0, 0.0, 1.0]))
        .unwrap();
    assert!((d - FRAC_PI_2).abs() < 1e-14);
    assert!((v.components - dv(&[0.0, 0.0, FRAC_PI_2])).norm() < 1e-14);
}

#[test]
fn hyperboloid_distance_by_construction() {
    let h = AmbientSpace::hyperbolic(2, -1.0);
    let q = Point::new(&[1f64.cosh(), 1f64.sinh(), 0.0]);
    let (d, _) = h.distance_and_log(&Point::new(&[1.0, 0.0, 0.0]), &q).unwrap();
    assert!((d - 1.0).abs() < 1e-12);
}

#[test]
fn antipodal_pairs_are_rejected() {
    let s = AmbientSpace::sphere(2, 2.0);
    let err = s.log(&dv(&[2.0, 0.0, 0.0]), &dv(&[-2.0, 0.0, 0.0])).unwrap_err();
    assert!(matches!(err, GeomError::NonUniqueGeodesic(_)));
}

#[test]
fn exp_log_roundtrip_space_forms() {
    let cases = [
        (AmbientSpace::euclidean(3), dv(&[0.3, -1.0, 2.0]), dv(&[1.0, 0.5, -0.5])),
        (
            AmbientSpace::sphere(2, 1.5),
            dv(&[1.5, 0.0, 0.0]),
            AmbientSpace::sphere(2, 1.5).project_point(&dv(&[0.2, 1.0, -0.7])),
        ),
        (
            AmbientSpace::hyperbolic(2, -0.5),
            AmbientSpace::hyperbolic(2, -0.5).project_point(&dv(&[0.0, 0.1, 0.2])),
            AmbientSpace::hyperbolic(2, -0.5).project_point(&dv(&[0.0, -1.3, 0.8])),
        ),
    ];
    for (space, p, q) in cases {
        let (d, v) = space.log(&p, &q).unwrap();
        let end = space.exp(&p, &v).unwrap();
        assert!((end - &q).norm() < 1e-9, "{space:?}");
        assert!((space.norm(&p, &v) - d).abs() < 1e-12);
    }
}

#[test]
fn chart_shooting_roundtrip() {
    let c = AmbientSpace::chart(2, ChartMetric::StereographicSphere { radius: 1.0 }, 50.0);
    let p = dv(&[0.2, -0.3]);
    let q = dv(&[0.9, 0.4]);
    let (d, v) = c.log(&p, &q).unwrap();
    let end = c.exp(&p, &v).unwrap();
    assert!((end - &q).norm() < 1e-6);
    // Oracle: great-circle distance between the inverse stereographic images.
    let lift = |x: &DVector<f64>| {
        let r2 = x.norm_squared();
        dv(&[2.0 * x[0] / (1.0 + r2), 2.0 * x[1] / (1.0 + r2), (r2 - 1.0) / (r2 + 1.0)])
    };
    let oracle = lift(&p).dot(&lift(&q)).clamp(-1.0, 1.0).acos();
    assert!((d - oracle).abs() < 1e-8, "{d} vs {oracle}");
}

#[test]
fn flat_chart_matches_euclidean_space() {
    let c = AmbientSpace::chart(3, ChartMetric::Flat, 100.0);
    let e = AmbientSpace::euclidean(3);
    let p = dv(&[0.5, -0.25, 1.0]);
    let q = dv(&[-1.0, 0.75, 0.3]);
    let (dc, vc) = c.log(&p, &q).unwrap();
    let (de, ve) = e.log(&p, &q).unwrap();
    assert!((dc - de).abs() < 1e-6);
    assert!((vc - ve).norm() < 1e-6);
    let pc = c.geodesic_from(&p, &dv(&[0.1, 0.2, 0.3]), 64).unwrap();
    let w = dv(&[1.0, -2.0, 0.5]);
    assert!((c.transport_along_geodesic(&pc, &w).unwrap() - &w).norm() < 1e-6);
}

#[test]
fn euclidean_transport_is_identity() {
    let e = AmbientSpace::euclidean(3);
    let path = e.geodesic_from(&dv(&[0.0, 0.0, 0.0]), &dv(&[1.0, 2.0, 3.0]), 4).unwrap();
    let w = dv(&[0.3, 0.1, -0.2]);
    assert_eq!(e.transport_along_geodesic(&path, &w).unwrap(), w);
}

#[test]
fn transport_is_an_isometry() {
    let spaces = [
        (AmbientSpace::sphere(2, 1.0), dv(&[0.0, 0.0, 1.0]), dv(&[1.2, 0.0, 0.0]), dv(&[0.3, 0.8, 0.0])),
        (AmbientSpace::hyperbolic(2, -1.0), dv(&[1.0, 0.0, 0.0]), dv(&[0.0, 0.7, 0.4]), dv(&[0.0, -0.2, 1.0])),
        (
            AmbientSpace::chart(2, ChartMetric::ConformalBump { amplitude: 0.3 }, 10.0),
            dv(&[-0.5, 0.1]),
            dv(&[1.0, 0.3]),
            dv(&[0.2, 1.0]),
        ),
    ];
    for (space, p, v, w) in spaces {
        let path = space.geodesic_from(&p, &v, 256).unwrap();
        let field = space.transport_field(&path, &w).unwrap();
        let w0 = space.norm(&p, &w);
        let a0 = space.inner(&p, &w, &v);
        for (s, u) in path.samples.iter().zip(&field) {
            assert!((space.norm(&s.point, u) - w0).abs() < 1e-10, "{space:?}");
            assert!((space.inner(&s.point, u, &s.velocity) - a0).abs() < 1e-9);
        }
    }
}

#[test]
fn latitude_loop_holonomy_on_unit_sphere() {
    let s = AmbientSpace::sphere(2, 1.0);
    let theta = PI / 3.0;
    let n = 4096;
    let dt = std::f64::consts::TAU / n as f64;
    let (st, ct) = theta.sin_cos();
    let pts: Vec<_> = (0..=n)
        .map(|i| {
            let t = i as f64 * dt;
            dv(&[st * t.cos(), st * t.sin(), ct])
        })
        .collect();
    let vel: Vec<_> = (0..=n)
        .map(|i| {
            let t = i as f64 * dt;
            dv(&[-st * t.sin(), st * t.cos(), 0.0])
        })
        .collect();
    // e_theta at t = 0
    let v0 = dv(&[ct, 0.0, -st]);
    let out = s.transport_along_samples(&pts, &vel, dt, &v0).unwrap();
    let end = out.last().unwrap();
    let e_phi = dv(&[0.0, 1.0, 0.0]);
    let angle = end.dot(&e_phi).atan2(end.dot(&v0)).rem_euclid(std::f64::consts::TAU);
    let expected = std::f64::consts::TAU * (1.0 - theta.cos());
    assert!((angle - expected).abs() < 1e-5, "{angle} vs {expected}");
}

#[test]
fn space_form_curvatures() {
    let s = AmbientSpace::sphere(2, 2.0);
    let x = dv(&[2.0, 0.0, 0.0]);
    let k = s
        .sectional_curvature_at(&x, &dv(&[0.0, 1.0, 0.0]), &dv(&[0.0, 0.3, 1.0]))
        .unwrap();
    assert!((k - 0.25).abs() < 1e-15);
    let e = AmbientSpace::euclidean(3);
    let k = e
        .sectional_curvature_at(&x, &dv(&[0.0, 1.0, 0.0]), &dv(&[1.0, 0.0, 0.0]))
        .unwrap();
    assert_eq!(k, 0.0);
}

#[test]
fn stereographic_chart_has_unit_curvature() {
    let c = AmbientSpace::chart(2, ChartMetric::StereographicSphere { radius: 1.0 }, 50.0);
    let k = c
        .sectional_curvature_at(&dv(&[0.3, -0.1]), &dv(&[1.0, 0.0]), &dv(&[0.4, 1.0]))
        .unwrap();
    assert!((k - 1.0).abs() < 1e-5, "{k}");
}

#[test]
fn conformal_bump_curvature_matches_laplacian_formula() {
    // K = -exp(-2 phi) * Laplacian(phi) for g = exp(2 phi) I in two dimensions.
    let a = 0.4;
    let c = AmbientSpace::chart(2, ChartMetric::ConformalBump { amplitude: a }, 10.0);
    for x in [dv(&[0.0, 0.0]), dv(&[0.5, -0.2]), dv(&[1.1, 0.7])] {
        let r2 = x.norm_squared();
        let phi = a * (-r2).exp();
        let lap = a * (-r2).exp() * (4.0 * r2 - 4.0);
        let oracle = -(-2.0 * phi).exp() * lap;
        let k = c
            .sectional_curvature_at(&x, &dv(&[1.0, 0.0]), &dv(&[0.0, 1.0]))
            .unwrap();
        assert!((k - oracle).abs() < 1e-5, "{k} vs {oracle}");
    }
}

#[test]
fn degenerate_plane_is_an_error() {
    let s = AmbientSpace::sphere(2, 1.0);
    let x = dv(&[1.0, 0.0, 0.0]);
    let err = s
        .sectional_curvature_at(&x, &dv(&[0.0, 1.0, 0.0]), &dv(&[0.0, 2.0, 0.0]))
        .unwrap_err();
    assert!(matches!(err, GeomError::DegeneratePlane(_)));
}

#[test]
fn coarse_chart_transport_reports_resolution() {
    let c = AmbientSpace::chart(2, ChartMetric::ConformalBump { amplitude: 2.0 }, 10.0)
        .with_ode_steps(2);
    let path = c.geodesic_from(&dv(&[-1.5, 0.2]), &dv(&[3.0, 0.0]), 2).unwrap();
    let err = c.transport_along_geodesic(&path, &dv(&[0.0, 1.0])).unwrap_err();
    assert!(matches!(err, GeomError::Resolution { .. }));
}
