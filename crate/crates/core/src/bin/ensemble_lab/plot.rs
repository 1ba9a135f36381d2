//! Deterministic SVG line plots: fixed canvas, no external assets,
//! byte-identical output for identical input.

use ensemble_lab::{LabError, Result, SampledCurve};

const W: f64 = 800.0;
const H: f64 = 520.0;
const ML: f64 = 70.0; // margins
const MR: f64 = 20.0;
const MT: f64 = 20.0;
const MB: f64 = 50.0;

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn fmt(v: f64) -> String {
    // fixed formatting so output is byte-stable
    format!("{v:.3}")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 1e4 || a < 1e-3 {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Render one SVG with a polyline per named curve. Flagged (non-finite)
/// points are drawn as crosses pinned to the bottom axis.
pub fn render_svg(curves: &[(String, SampledCurve)]) -> Result<String> {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (_, c) in curves {
        let (fx, fy) = c.finite_points();
        xs.extend(fx);
        ys.extend(fy);
        xs.extend(c.x.iter().zip(&c.y).filter(|(_, y)| !y.is_finite()).map(|(x, _)| *x));
    }
    if xs.is_empty() || ys.is_empty() {
        return Err(LabError::Usage("nothing to plot: no points".into()));
    }
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = bounds(&ys);
    let px = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
    let py = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    s.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"#ffffff\"/>\n"
    ));
    // axes
    s.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\"/>\n",
        fmt(ML),
        fmt(H - MB),
        fmt(W - MR),
        fmt(H - MB)
    ));
    s.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\"/>\n",
        fmt(ML),
        fmt(MT),
        fmt(ML),
        fmt(H - MB)
    ));
    // ticks
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = x0 + t * (x1 - x0);
        let yv = y0 + t * (y1 - y0);
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\"/>\n",
            fmt(px(xv)),
            fmt(H - MB),
            fmt(px(xv)),
            fmt(H - MB + 5.0)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            fmt(px(xv)),
            fmt(H - MB + 20.0),
            tick_label(xv)
        ));
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\"/>\n",
            fmt(ML - 5.0),
            fmt(py(yv)),
            fmt(ML),
            fmt(py(yv))
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            fmt(ML - 8.0),
            fmt(py(yv) + 4.0),
            tick_label(yv)
        ));
    }
    // curves
    for (i, (name, c)) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = c
            .x
            .iter()
            .zip(&c.y)
            .filter(|(_, y)| y.is_finite())
            .map(|(x, y)| format!("{},{}", fmt(px(*x)), fmt(py(*y))))
            .collect();
        if pts.len() >= 2 {
            s.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                pts.join(" ")
            ));
        } else if pts.len() == 1 {
            let xy: Vec<&str> = pts[0].split(',').collect();
            s.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{color}\"/>\n",
                xy[0], xy[1]
            ));
        }
        // flagged markers at the bottom axis
        for (x, _) in c.x.iter().zip(&c.y).filter(|(_, y)| !y.is_finite()) {
            let cx = px(*x);
            let cy = H - MB - 6.0;
            s.push_str(&format!(
                "<path d=\"M {} {} L {} {} M {} {} L {} {}\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                fmt(cx - 4.0),
                fmt(cy - 4.0),
                fmt(cx + 4.0),
                fmt(cy + 4.0),
                fmt(cx - 4.0),
                fmt(cy + 4.0),
                fmt(cx + 4.0),
                fmt(cy - 4.0)
            ));
        }
        // legend
        let ly = MT + 16.0 * (i as f64 + 1.0);
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            fmt(W - MR - 160.0),
            fmt(ly - 4.0),
            fmt(W - MR - 140.0),
            fmt(ly - 4.0)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">{}</text>\n",
            fmt(W - MR - 134.0),
            fmt(ly),
            name
        ));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    }
}
