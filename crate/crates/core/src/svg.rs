//! Minimal self-contained SVG plots: a heat map and a multi-series line plot.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn extent(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Grayscale-to-orange ramp for `t ∈ [0, 1]`.
fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * t.sqrt()) as u8;
    let g = (200.0 * t) as u8;
    let b = (80.0 * (1.0 - t)) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str, xr: (f64, f64), yr: (f64, f64)) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + (W - LEFT - RIGHT) / 2.0,
        H - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        TOP + (H - TOP - BOTTOM) / 2.0,
        TOP + (H - TOP - BOTTOM) / 2.0,
        escape(y_label)
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let x = LEFT + f * (W - LEFT - RIGHT);
        let y = H - BOTTOM - f * (H - TOP - BOTTOM);
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{:.4}</text>"#,
            H - BOTTOM + 16.0,
            xr.0 + f * (xr.1 - xr.0)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.4}</text>"#,
            LEFT - 4.0,
            y + 4.0,
            yr.0 + f * (yr.1 - yr.0)
        );
    }
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
}

/// Heat map of `values[row][col]` with columns along `x` and rows along `y`;
/// `marks` are drawn as small circles.
pub fn heat_map(
    x: &[f64],
    y: &[f64],
    values: &[Vec<f64>],
    title: &str,
    x_label: &str,
    y_label: &str,
    marks: &[(f64, f64)],
) -> String {
    let xr = extent(x);
    let yr = extent(y);
    let vmax = values.iter().flatten().copied().fold(0.0f64, f64::max);
    let mut out = String::new();
    frame(&mut out, title, x_label, y_label, xr, yr);
    let pw = (W - LEFT - RIGHT) / x.len().max(1) as f64;
    let ph = (H - TOP - BOTTOM) / y.len().max(1) as f64;
    for (r, row) in values.iter().enumerate() {
        let top = H - BOTTOM - (r + 1) as f64 * ph;
        for (c, &v) in row.iter().enumerate() {
            let t = if vmax > 0.0 { v / vmax } else { 0.0 };
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                LEFT + c as f64 * pw,
                pw + 0.05,
                ph + 0.05,
                color(t)
            );
        }
    }
    for &(mx, my) in marks {
        let px = LEFT + (mx - xr.0) / (xr.1 - xr.0) * (W - LEFT - RIGHT);
        let py = H - BOTTOM - (my - yr.0) / (yr.1 - yr.0) * (H - TOP - BOTTOM);
        let _ = writeln!(out, r#"<circle cx="{px:.2}" cy="{py:.2}" r="1.5" fill="cyan"/>"#);
    }
    out.push_str("</svg>\n");
    out
}

/// Line plot; each series is `(label, points)`. Series whose label starts
/// with `o` are drawn as markers instead of lines.
pub fn line_plot(series: &[(&str, Vec<(f64, f64)>)], title: &str, x_label: &str, y_label: &str) -> String {
    let xs: Vec<f64> = series.iter().flat_map(|s| s.1.iter().map(|p| p.0)).collect();
    let ys: Vec<f64> = series.iter().flat_map(|s| s.1.iter().map(|p| p.1)).collect();
    let xr = extent(&xs);
    let (ylo, yhi) = extent(&ys);
    let yr = (ylo.min(0.0), yhi);
    let mut out = String::new();
    frame(&mut out, title, x_label, y_label, xr, yr);
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    for (i, (label, pts)) in series.iter().enumerate() {
        let col = palette[i % palette.len()];
        let map = |(x, y): (f64, f64)| {
            (
                LEFT + (x - xr.0) / (xr.1 - xr.0) * (W - LEFT - RIGHT),
                H - BOTTOM - (y - yr.0) / (yr.1 - yr.0) * (H - TOP - BOTTOM),
            )
        };
        if label.starts_with('o') {
            for &p in pts {
                let (px, py) = map(p);
                let _ = writeln!(out, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="none" stroke="{col}"/>"#);
            }
        } else {
            let path: Vec<String> = pts
                .iter()
                .map(|&p| {
                    let (px, py) = map(p);
                    format!("{px:.2},{py:.2}")
                })
                .collect();
            let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{col}"/>"#, path.join(" "));
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{col}">{}</text>"#,
            LEFT + 8.0,
            TOP + 16.0 + 14.0 * i as f64,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_map_is_well_formed() {
        let s = heat_map(&[1.0, 2.0], &[0.0], &[vec![0.0, 1.0]], "a<b", "x", "y", &[(1.5, 0.0)]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("a&lt;b"));
        assert_eq!(s.matches("<circle").count(), 1);
    }

    #[test]
    fn line_plot_markers() {
        let s = line_plot(&[("o data", vec![(0.0, 1.0), (1.0, 2.0)]), ("fit", vec![(0.0, 1.0), (1.0, 2.0)])], "t", "x", "y");
        assert_eq!(s.matches("<circle").count(), 2);
        assert_eq!(s.matches("<polyline").count(), 1);
    }
}
