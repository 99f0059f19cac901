use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

/// A standalone log-log plot of `series` with a dashed reference line of
/// slope `target_slope` through the first point.
pub fn render_svg_loglog(series: &[(f64, f64)], target_slope: f64, title: &str) -> Result<String> {
    if series.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "a log-log plot needs at least two points, got {}",
            series.len()
        )));
    }
    if let Some(&(x, y)) = series
        .iter()
        .find(|&&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(Error::InvalidParameter(format!(
            "point ({x}, {y}) cannot be drawn on log axes"
        )));
    }
    if !target_slope.is_finite() {
        return Err(Error::InvalidParameter("reference slope must be finite".into()));
    }
    let logs: Vec<(f64, f64)> = series.iter().map(|&(x, y)| (x.log10(), y.log10())).collect();
    let (x0, x1) = bounds(logs.iter().map(|p| p.0));
    if x1 <= x0 {
        return Err(Error::InvalidParameter("all abscissae coincide".into()));
    }
    let (mut y0, mut y1) = bounds(logs.iter().map(|p| p.1));
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |lx: f64| MARGIN + (lx - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |ly: f64| HEIGHT - MARGIN - (ly - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!("<title>{}</title>\n", escape(title)));
    svg.push_str(&format!(
        "<defs><clipPath id=\"plot\"><rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\"/></clipPath></defs>\n",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    ));
    for d in (x0.ceil() as i32)..=(x1.floor() as i32) {
        let x = sx(d as f64);
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#ccc\"/>\n<text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">1e{d}</text>\n",
            HEIGHT - MARGIN,
            MARGIN,
            HEIGHT - MARGIN + 18.0
        ));
    }
    for d in (y0.ceil() as i32)..=(y1.floor() as i32) {
        let y = sy(d as f64);
        svg.push_str(&format!(
            "<line x1=\"{MARGIN}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#ccc\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">1e{d}</text>\n",
            WIDTH - MARGIN,
            MARGIN - 6.0,
            y + 4.0
        ));
    }
    let (lx, ly) = logs[0];
    svg.push_str(&format!(
        "<line clip-path=\"url(#plot)\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n",
        sx(x0),
        sy(ly + target_slope * (x0 - lx)),
        sx(x1),
        sy(ly + target_slope * (x1 - lx))
    ));
    let points: Vec<String> = logs
        .iter()
        .map(|&(a, b)| format!("{:.2},{:.2}", sx(a), sy(b)))
        .collect();
    svg.push_str(&format!(
        "<polyline clip-path=\"url(#plot)\" points=\"{}\" fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"2\"/>\n",
        points.join(" ")
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        MARGIN - 20.0,
        escape(title)
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">dashed: slope {target_slope}</text>\n",
        WIDTH - MARGIN,
        HEIGHT - 12.0
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes [`render_svg_loglog`] to `path`.
pub fn emit_svg_loglog(series: &[(f64, f64)], target_slope: f64, path: &Path) -> Result<()> {
    let title = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    std::fs::write(path, render_svg_loglog(series, target_slope, &title)?)?;
    Ok(())
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(svg: &str, tag: &str) -> String {
        let start = svg.find(tag).unwrap();
        svg[start..].lines().next().unwrap().to_string()
    }

    #[test]
    fn reference_line_through_the_data() {
        let svg = render_svg_loglog(&[(10.0, 10.0), (100.0, 100.0)], 1.0, "t").unwrap();
        let poly = coords(&svg, "<polyline");
        let line = coords(&svg, "<line clip-path");
        assert!(poly.contains("points=\"60.00,360.00 580.00,60.00\""), "{poly}");
        assert!(
            line.contains("x1=\"60.00\" y1=\"360.00\" x2=\"580.00\" y2=\"60.00\""),
            "{line}"
        );
    }

    #[test]
    fn preconditions() {
        assert!(render_svg_loglog(&[(10.0, 1.0)], 1.0, "t").is_err());
        assert!(render_svg_loglog(&[(10.0, 1.0), (20.0, 0.0)], 1.0, "t").is_err());
        assert!(render_svg_loglog(&[(10.0, 1.0), (10.0, 2.0)], 1.0, "t").is_err());
    }

    #[test]
    fn deterministic() {
        let s = [(1e3, 2.0), (1e4, 7.0), (1e5, 30.0)];
        assert_eq!(
            render_svg_loglog(&s, 1.0, "a").unwrap(),
            render_svg_loglog(&s, 1.0, "a").unwrap()
        );
    }
}
