//! Minimal static SVG line charts. Plots are a convenience output: any
//! failure here is reported as a warning and never changes the exit code,
//! so this module never panics on odd data, it just draws what it can.

use std::fmt::Write as _;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: &'a [(f64, f64)],
}

/// Vertical annotation line with a label, in data coordinates.
pub struct Mark<'a> {
    pub x: f64,
    pub label: &'a str,
}

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const ML: f64 = 78.0;
const MR: f64 = 24.0;
const MT: f64 = 46.0;
const MB: f64 = 58.0;
const N_TICKS: usize = 6;

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e6).contains(&a) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series<'_>],
    marks: &[Mark<'_>],
) -> String {
    let finite = |p: &&(f64, f64)| p.0.is_finite() && p.1.is_finite();
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for p in s.points.iter().filter(finite) {
            x_min = x_min.min(p.0);
            x_max = x_max.max(p.0);
            y_min = y_min.min(p.1);
            y_max = y_max.max(p.1);
        }
    }
    if !(x_min.is_finite() && y_min.is_finite()) {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if x_max <= x_min {
        x_max = x_min + 1.0;
    }
    if y_max <= y_min {
        y_max = y_min + 1.0;
    }
    // A little headroom so curves do not sit on the frame.
    let pad = (y_max - y_min) * 0.05;
    y_min -= pad;
    y_max += pad;

    let pw = WIDTH - ML - MR;
    let ph = HEIGHT - MT - MB;
    let sx = move |x: f64| ML + (x - x_min) / (x_max - x_min) * pw;
    let sy = move |y: f64| MT + ph - (y - y_min) / (y_max - y_min) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"13\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );

    for i in 0..=N_TICKS {
        let fx = x_min + (x_max - x_min) * i as f64 / N_TICKS as f64;
        let fy = y_min + (y_max - y_min) * i as f64 / N_TICKS as f64;
        let px = sx(fx);
        let py = sy(fy);
        let _ = writeln!(
            svg,
            "<line x1=\"{px:.1}\" y1=\"{MT}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#eee\"/>",
            MT + ph
        );
        let _ = writeln!(
            svg,
            "<line x1=\"{ML}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" stroke=\"#eee\"/>",
            ML + pw
        );
        let _ = writeln!(
            svg,
            "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            MT + ph + 18.0,
            fmt_tick(fx)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            ML - 8.0,
            py + 4.0,
            fmt_tick(fy)
        );
    }
    let _ = writeln!(
        svg,
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"#333\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        ML + pw / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        "<text x=\"20\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.1})\">{}</text>",
        MT + ph / 2.0,
        MT + ph / 2.0,
        escape(y_label)
    );

    for m in marks {
        if !m.x.is_finite() || m.x < x_min || m.x > x_max {
            continue;
        }
        let px = sx(m.x);
        let _ = writeln!(
            svg,
            "<line x1=\"{px:.1}\" y1=\"{MT}\" x2=\"{px:.1}\" y2=\"{:.1}\" \
             stroke=\"#999\" stroke-dasharray=\"5 4\"/>",
            MT + ph
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" fill=\"#555\" \
             transform=\"rotate(-90 {:.1} {:.1})\">{}</text>",
            px - 4.0,
            MT + 14.0,
            px - 4.0,
            MT + 14.0,
            escape(m.label)
        );
    }

    for (si, s) in series.iter().enumerate() {
        let mut d = String::new();
        for p in s.points.iter().filter(finite) {
            let cmd = if d.is_empty() { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{:.2} {:.2} ", sx(p.0), sy(p.1));
        }
        if d.is_empty() {
            continue;
        }
        let _ = writeln!(
            svg,
            "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"/>",
            d.trim_end(),
            s.color
        );
        let ly = MT + 18.0 + 18.0 * si as f64;
        let _ = writeln!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" \
             stroke=\"{}\" stroke-width=\"3\"/>",
            ML + pw - 150.0,
            ML + pw - 120.0,
            s.color
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            ML + pw - 112.0,
            ly + 4.0,
            escape(s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Write the chart; failures come back as a message for a stderr warning.
pub fn write_chart(
    path: &std::path::Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series<'_>],
    marks: &[Mark<'_>],
) -> Result<(), String> {
    let svg = line_chart(title, x_label, y_label, series, marks);
    crate::util::write_atomic(path, svg.as_bytes()).map_err(|e| format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_contains_axes_series_and_marks() {
        let pts = [(0.0, 0.0), (1.0, 2.0), (2.0, 1.0)];
        let svg = line_chart(
            "t",
            "z (um)",
            "F (uN)",
            &[Series { label: "force", color: "#1f77b4", points: &pts }],
            &[Mark { x: 1.0, label: "peak" }],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("force"));
        assert!(svg.contains("peak"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn degenerate_data_still_renders() {
        let svg = line_chart("t", "x", "y", &[Series { label: "s", color: "red", points: &[] }], &[]);
        assert!(svg.contains("</svg>"));
        let one = [(5.0, 5.0)];
        let svg2 = line_chart("t", "x", "y", &[Series { label: "s", color: "red", points: &one }], &[]);
        assert!(svg2.contains("</svg>"));
    }
}
