//! Minimal SVG line plots: axes, min/max tick labels, one polyline per
//! series, and a text legend. No plotting dependency.

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    /// Maps a data value into [0, 1]; degenerate ranges pin to the middle.
    fn unit(&self, v: f64) -> f64 {
        let (v, lo, hi) = if self.log {
            (v.log10(), self.lo.log10(), self.hi.log10())
        } else {
            (v, self.lo, self.hi)
        };
        if hi - lo <= 0.0 {
            0.5
        } else {
            (v - lo) / (hi - lo)
        }
    }
}

fn finite(points: &[(f64, f64)], log_x: bool, log_y: bool) -> Vec<(f64, f64)> {
    points
        .iter()
        .copied()
        .filter(|(x, y)| {
            x.is_finite() && y.is_finite() && (!log_x || *x > 0.0) && (!log_y || *y > 0.0)
        })
        .collect()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if a >= 1e4 || a < 1e-3 {
        format!("{v:.2e}")
    } else {
        format!("{v:.4}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

/// Renders the series as one SVG document. Log axes drop non-positive
/// points from the affected series instead of failing.
pub fn render_line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    log_x: bool,
    log_y: bool,
) -> String {
    let cleaned: Vec<(String, Vec<(f64, f64)>)> = series
        .iter()
        .map(|s| (s.label.clone(), finite(&s.points, log_x, log_y)))
        .collect();
    let all: Vec<(f64, f64)> = cleaned.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let (x_lo, x_hi) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| {
            (lo.min(*x), hi.max(*x))
        });
    let (y_lo, y_hi) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, y)| {
            (lo.min(*y), hi.max(*y))
        });
    let have_data = !all.is_empty();
    let x_axis = Axis {
        lo: if have_data { x_lo } else { 0.0 },
        hi: if have_data { x_hi } else { 1.0 },
        log: log_x && have_data,
    };
    let y_axis = Axis {
        lo: if have_data { y_lo } else { 0.0 },
        hi: if have_data { y_hi } else { 1.0 },
        log: log_y && have_data,
    };

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_px = |x: f64, y: f64| {
        (
            MARGIN_LEFT + x_axis.unit(x) * plot_w,
            MARGIN_TOP + (1.0 - y_axis.unit(y)) * plot_h,
        )
    };

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    s.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));
    // Axis lines.
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    s.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n"
    ));
    s.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    ));
    if have_data {
        s.push_str(&format!(
            "<text x=\"{x0}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            y0 + 16.0,
            tick_label(x_axis.lo)
        ));
        s.push_str(&format!(
            "<text x=\"{x1}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            y0 + 16.0,
            tick_label(x_axis.hi)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            x0 - 6.0,
            y0 + 4.0,
            tick_label(y_axis.lo)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            x0 - 6.0,
            y1 + 4.0,
            tick_label(y_axis.hi)
        ));
    }
    for (i, (label, points)) in cleaned.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if points.len() > 1 {
            let coords: Vec<String> = points
                .iter()
                .map(|&(x, y)| {
                    let (px, py) = to_px(x, y);
                    format!("{px:.2},{py:.2}")
                })
                .collect();
            s.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                coords.join(" ")
            ));
        }
        for &(x, y) in points {
            let (px, py) = to_px(x, y);
            s.push_str(&format!(
                "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"2.5\" fill=\"{color}\"/>\n"
            ));
        }
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>\n",
            x1 - 150.0,
            y1 + 16.0 * (i as f64 + 1.0),
            escape(label)
        ));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_contains_axes_series_and_labels() {
        let series = [
            Series {
                label: "avg".to_string(),
                points: vec![(1.0, 0.5), (10.0, 0.05), (100.0, 0.005)],
            },
            Series {
                label: "gd".to_string(),
                points: vec![(1.0, 0.4), (100.0, 0.4)],
            },
        ];
        let svg = render_line_plot("risk vs paths", "N", "excess risk", &series, true, true);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("risk vs paths"));
        assert!(svg.contains("excess risk"));
        assert!(svg.contains("avg") && svg.contains("gd"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn log_axes_drop_nonpositive_points_without_failing() {
        let series = [Series {
            label: "only".to_string(),
            points: vec![(0.0, 1.0), (10.0, 0.0), (5.0, 2.0), (50.0, 4.0)],
        }];
        let svg = render_line_plot("p", "x", "y", &series, true, true);
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn empty_series_still_render_a_frame() {
        let svg = render_line_plot("empty", "x", "y", &[], false, false);
        assert!(svg.contains("<line"));
        assert!(!svg.contains("polyline"));
    }
}
