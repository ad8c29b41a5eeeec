//! Minimal static SVG overlay of an ensemble estimate and its prediction.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use super::report::Residual;
use crate::error::Result;

const W: f64 = 800.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;

pub fn overlay_svg(path: &Path, title: &str, rows: &[Residual], lo: f64, hi: f64) -> Result<()> {
    let pts: Vec<&Residual> = rows.iter().filter(|r| r.omega >= lo && r.omega <= hi).collect();
    let (ymin, ymax) = pts
        .iter()
        .flat_map(|r| [r.mean - r.std_err, r.mean + r.std_err, r.analytic])
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (ymin, ymax) = if ymin < ymax { (ymin, ymax) } else { (0.0, 1.0) };
    let x = |w: f64| MARGIN + (w - lo) / (hi - lo).max(f64::MIN_POSITIVE) * (W - 2.0 * MARGIN);
    let y = |v: f64| H - MARGIN - (v - ymin) / (ymax - ymin) * (H - 2.0 * MARGIN);
    let line = |f: &dyn Fn(&Residual) -> f64| {
        pts.iter().map(|r| format!("{:.2},{:.2}", x(r.omega), y(f(r)))).collect::<Vec<_>>().join(" ")
    };

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#, W - 2.0 * MARGIN, H - 2.0 * MARGIN);
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle">{title}</text>"#, W / 2.0);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (w, v) = (lo + f * (hi - lo), ymin + f * (ymax - ymin));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{:.4}</text>"#, x(w), H - MARGIN + 18.0, w / (2.0 * PI) / 1e6);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.3}</text>"#, MARGIN - 6.0, y(v) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">omega / 2pi (MHz)</text>"#, W / 2.0, H - 15.0);
    let _ = writeln!(s, r#"<polyline fill="none" stroke="gray" stroke-width="1" points="{}"/>"#, line(&|r| r.mean));
    let _ = writeln!(s, r#"<polyline fill="none" stroke="crimson" stroke-width="1.5" points="{}"/>"#, line(&|r| r.analytic));
    let _ = writeln!(s, r#"<text x="{}" y="{}" fill="gray">ensemble</text>"#, W - MARGIN - 120.0, MARGIN + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" fill="crimson">analytic</text>"#, W - MARGIN - 120.0, MARGIN + 32.0);
    s.push_str("</svg>\n");
    std::fs::write(path, s)?;
    Ok(())
}
