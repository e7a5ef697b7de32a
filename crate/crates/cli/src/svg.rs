//! Hand-rolled SVG output: one closed polyline per body boundary, axis-equal
//! framing, fixed color palette, text legend. No plotting dependency.

use stargeo_core::StarBody;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

const CANVAS: f64 = 640.0;
const MARGIN: f64 = 40.0;

/// Render 2-D body boundaries (grid order, closed) into an SVG document.
/// 3-D bodies are drawn as their z = 0 great-circle slice is not available
/// on a Fibonacci grid, so they are projected to the xy plane point cloud.
pub fn render_bodies(bodies: &[&StarBody]) -> String {
    let mut polylines: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for body in bodies {
        let grid = body.grid();
        let pts: Vec<(f64, f64)> = (0..grid.len())
            .map(|i| {
                let u = grid.direction(i);
                let r = body.radial_values()[i];
                (r * u[0], r * u[1])
            })
            .collect();
        polylines.push((body.label().to_string(), pts));
    }

    // Axis-equal framing over all points, 5% padding.
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for (_, pts) in &polylines {
        for (x, y) in pts {
            min_x = min_x.min(*x);
            max_x = max_x.max(*x);
            min_y = min_y.min(*y);
            max_y = max_y.max(*y);
        }
    }
    if !min_x.is_finite() {
        min_x = -1.0;
        max_x = 1.0;
        min_y = -1.0;
        max_y = 1.0;
    }
    let span = (max_x - min_x).max(max_y - min_y).max(1e-12) * 1.05;
    let cx = 0.5 * (min_x + max_x);
    let cy = 0.5 * (min_y + max_y);
    let scale = (CANVAS - 2.0 * MARGIN) / span;
    let to_px = |x: f64, y: f64| {
        (
            CANVAS / 2.0 + (x - cx) * scale,
            CANVAS / 2.0 - (y - cy) * scale,
        )
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CANVAS}\" height=\"{CANVAS}\" viewBox=\"0 0 {CANVAS} {CANVAS}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Axes through the origin.
    let (ox, oy) = to_px(0.0, 0.0);
    out.push_str(&format!(
        "<line x1=\"0\" y1=\"{oy:.2}\" x2=\"{CANVAS}\" y2=\"{oy:.2}\" stroke=\"#dddddd\"/>\n"
    ));
    out.push_str(&format!(
        "<line x1=\"{ox:.2}\" y1=\"0\" x2=\"{ox:.2}\" y2=\"{CANVAS}\" stroke=\"#dddddd\"/>\n"
    ));

    for (i, (_, pts)) in polylines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (j, (x, y)) in pts.iter().enumerate() {
            let (px, py) = to_px(*x, *y);
            if j == 0 {
                d.push_str(&format!("M{px:.3},{py:.3}"));
            } else {
                d.push_str(&format!("L{px:.3},{py:.3}"));
            }
        }
        d.push('Z');
        out.push_str(&format!(
            "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"
        ));
    }

    // Legend.
    for (i, (label, _)) in polylines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = 20.0 + 18.0 * i as f64;
        out.push_str(&format!(
            "<rect x=\"12\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n",
            y - 10.0
        ));
        out.push_str(&format!(
            "<text x=\"30\" y=\"{y:.1}\" font-family=\"monospace\" font-size=\"13\">{}</text>\n",
            xml_escape(label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use stargeo_core::SphereGrid;
    use std::sync::Arc;

    #[test]
    fn renders_closed_paths_and_legend() {
        let g = Arc::new(SphereGrid::new(2, 64).unwrap());
        let b1 = StarBody::ball(g.clone(), 1.0);
        let b2 = StarBody::lq_ball(g.clone(), 1.0, 1.0);
        let svg = render_bodies(&[&b1, &b2]);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.contains("1*B"));
        assert!(svg.ends_with("</svg>\n"));
        // Deterministic output.
        assert_eq!(svg, render_bodies(&[&b1, &b2]));
    }
}
