use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::run::ScenarioResult;
use super::ScenarioError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Series<'a> {
    label: String,
    x: &'a [f64],
    y: &'a [f64],
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + lo.abs()) {
        let pad = 0.5 * (1.0 + lo.abs()) * 1e-3;
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>
"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, (x0, x1): (f64, f64), (y0, y1): (f64, f64)) {
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(out, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#);
    let _ = writeln!(out, r#"<text x="{l}" y="{}" text-anchor="start">{x0:.4}</text>"#, b + 16.0);
    let _ = writeln!(out, r#"<text x="{r}" y="{}" text-anchor="end">{x1:.4}</text>"#, b + 16.0);
    let _ = writeln!(out, r#"<text x="{}" y="{b}" text-anchor="end">{y0:.4e}</text>"#, l - 4.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{y1:.4e}</text>"#, l - 4.0, t + 4.0);
}

fn line_plot(title: &str, series: &[Series]) -> String {
    let xr = range(series.iter().flat_map(|s| s.x.iter().copied()));
    let yr = range(series.iter().flat_map(|s| s.y.iter().copied()));
    let sx = |x: f64| MARGIN + (x - xr.0) / (xr.1 - xr.0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - yr.0) / (yr.1 - yr.0) * (HEIGHT - 2.0 * MARGIN);
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, xr, yr);
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .x
            .iter()
            .zip(s.y)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 4.0,
            MARGIN + 14.0 * (i as f64 + 1.0),
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn bar_plot(title: &str, bars: &[(String, f64, bool)]) -> String {
    let yr = range(bars.iter().map(|b| b.1).chain(std::iter::once(0.0)));
    let sy = |y: f64| HEIGHT - MARGIN - (y - yr.0) / (yr.1 - yr.0) * (HEIGHT - 2.0 * MARGIN);
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, (0.0, bars.len() as f64), yr);
    let slot = (WIDTH - 2.0 * MARGIN) / bars.len().max(1) as f64;
    for (i, (label, value, pass)) in bars.iter().enumerate() {
        let x = MARGIN + slot * i as f64 + 0.15 * slot;
        let (top, bottom) = (sy(value.max(0.0)), sy(value.min(0.0)));
        let color = if *pass { "#2ca02c" } else { "#d62728" };
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{color}"><title>{}: {value:e}</title></rect>"#,
            0.7 * slot,
            (bottom - top).max(0.5),
            escape(label)
        );
        let _ = writeln!(
            out,
            r#"<text transform="translate({:.2},{:.2}) rotate(-60)" font-size="9">{}</text>"#,
            x + 0.35 * slot,
            HEIGHT - MARGIN + 12.0,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Write the SVG plots of every result into `dir`: check residuals, transport
/// defect traces `f(s)` and distance profiles `L(s)`. Returns the files written.
pub fn emit_plots(results: &[ScenarioResult], dir: &Path) -> Result<Vec<PathBuf>, ScenarioError> {
    let io = |p: &Path, e: std::io::Error| ScenarioError::Io(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();
    let mut write = |file: String, svg: String| -> Result<(), ScenarioError> {
        let path = dir.join(file);
        std::fs::write(&path, svg).map_err(|e| io(&path, e))?;
        written.push(path);
        Ok(())
    };
    for r in results {
        let stem = file_stem(&r.name);
        let bars: Vec<(String, f64, bool)> = r.checks.iter().map(|c| (c.check.clone(), c.residual, c.pass)).collect();
        write(format!("{stem}-residuals.svg"), bar_plot(&format!("{}: check residuals", r.name), &bars))?;
        if !r.defects.is_empty() {
            let series: Vec<Series> = r
                .defects
                .iter()
                .enumerate()
                .map(|(i, d)| Series {
                    label: format!("probe {i}"),
                    x: &d.s,
                    y: &d.f,
                })
                .collect();
            write(format!("{stem}-defect.svg"), line_plot(&format!("{}: transport defect f(s)", r.name), &series))?;
        }
        let profiles: Vec<Series> = r
            .bottlenecks
            .iter()
            .filter(|b| !b.profile_s.is_empty())
            .enumerate()
            .map(|(i, b)| Series {
                label: format!("assigner {i}"),
                x: &b.profile_s,
                y: &b.profile_distance,
            })
            .collect();
        if !profiles.is_empty() {
            write(format!("{stem}-profile.svg"), line_plot(&format!("{}: distance profile L(s)", r.name), &profiles))?;
        }
    }
    Ok(written)
}
