//! Minimal deterministic SVG charts.
//!
//! The CSV tables are the contract; these charts are a convenience layer for
//! eyeballing sweep results without external tooling. Rendering is fully
//! deterministic (fixed layout, fixed palette, fixed-precision coordinates),
//! so chart files can be compared byte-for-byte across reruns.

use std::io::Write as _;
use std::path::Path;

use crate::error::Result;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_TOP: f64 = 45.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// One named curve; `errors[i]`, when present, draws a symmetric error bar
/// around `points[i]`.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub errors: Option<Vec<f64>>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            errors: None,
        }
    }

    pub fn with_errors(mut self, errors: Vec<f64>) -> Self {
        assert_eq!(
            errors.len(),
            self.points.len(),
            "one error per point required"
        );
        self.errors = Some(errors);
        self
    }
}

/// A line chart with markers, optional error bars, and a legend.
#[derive(Clone, Debug)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl Chart {
    pub fn new(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
    ) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
        }
    }

    pub fn add(&mut self, series: Series) -> &mut Self {
        self.series.push(series);
        self
    }

    fn data_range(&self) -> ((f64, f64), (f64, f64)) {
        let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
        let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for (i, &(x, y)) in s.points.iter().enumerate() {
                let e = s.errors.as_ref().map_or(0.0, |e| e[i]);
                xs = (xs.0.min(x), xs.1.max(x));
                ys = (ys.0.min(y - e), ys.1.max(y + e));
            }
        }
        if !xs.0.is_finite() {
            xs = (0.0, 1.0);
            ys = (0.0, 1.0);
        }
        (pad_range(xs), pad_range(ys))
    }

    /// Renders the chart to an SVG document.
    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.data_range();
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
        let sy = |y: f64| MARGIN_TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;

        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
        ));
        out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
            MARGIN_LEFT + plot_w / 2.0,
            escape(&self.title)
        ));

        // Axes, ticks, and grid lines.
        out.push_str(&format!(
            "<rect x=\"{MARGIN_LEFT:.1}\" y=\"{MARGIN_TOP:.1}\" width=\"{plot_w:.1}\" \
             height=\"{plot_h:.1}\" fill=\"none\" stroke=\"#333\"/>\n"
        ));
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            let px = sx(fx);
            let py = sy(fy);
            out.push_str(&format!(
                "<line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" \
                 stroke=\"#ddd\"/>\n",
                MARGIN_TOP,
                MARGIN_TOP + plot_h
            ));
            out.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" \
                 stroke=\"#ddd\"/>\n",
                MARGIN_LEFT,
                MARGIN_LEFT + plot_w
            ));
            out.push_str(&format!(
                "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
                MARGIN_TOP + plot_h + 18.0,
                tick_label(fx)
            ));
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"12\">{}</text>\n",
                MARGIN_LEFT - 6.0,
                py + 4.0,
                tick_label(fy)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"20\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"13\" \
             transform=\"rotate(-90 20 {:.1})\">{}</text>\n",
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_TOP + plot_h / 2.0,
            escape(&self.y_label)
        ));

        for (si, s) in self.series.iter().enumerate() {
            let color = PALETTE[si % PALETTE.len()];
            if let Some(errors) = &s.errors {
                for (&(x, y), &e) in s.points.iter().zip(errors) {
                    if e <= 0.0 {
                        continue;
                    }
                    let (px, lo, hi) = (sx(x), sy(y - e), sy(y + e));
                    out.push_str(&format!(
                        "<path class=\"errbar\" d=\"M{px:.1} {lo:.1} L{px:.1} {hi:.1} \
                         M{:.1} {lo:.1} L{:.1} {lo:.1} M{:.1} {hi:.1} L{:.1} {hi:.1}\" \
                         stroke=\"{color}\" fill=\"none\"/>\n",
                        px - 4.0,
                        px + 4.0,
                        px - 4.0,
                        px + 4.0
                    ));
                }
            }
            let path: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
                .collect();
            if path.len() > 1 {
                out.push_str(&format!(
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" \
                     stroke-width=\"1.5\"/>\n",
                    path.join(" ")
                ));
            }
            for &(x, y) in &s.points {
                out.push_str(&format!(
                    "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>\n",
                    sx(x),
                    sy(y)
                ));
            }
            // Legend entry.
            let ly = MARGIN_TOP + 14.0 + 18.0 * si as f64;
            let lx = WIDTH - MARGIN_RIGHT + 12.0;
            out.push_str(&format!(
                "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" \
                 stroke=\"{color}\" stroke-width=\"2\"/>\n",
                lx + 22.0
            ));
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{}</text>\n",
                lx + 28.0,
                ly + 4.0,
                escape(&s.label)
            ));
        }
        out.push_str("</svg>\n");
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.render().as_bytes())?;
        Ok(())
    }
}

fn pad_range((lo, hi): (f64, f64)) -> (f64, f64) {
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - pad, hi + pad)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    let s = if a >= 1000.0 {
        format!("{v:.0}")
    } else if a >= 1.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.3}")
    };
    // Trim trailing zeros after a decimal point, then a dangling point.
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_chart() -> Chart {
        let mut c = Chart::new("demo", "x", "y");
        c.add(Series::new("a", vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)]));
        c.add(
            Series::new("b", vec![(0.0, 0.5), (1.0, 0.2), (2.0, 0.9)])
                .with_errors(vec![0.1, 0.0, 0.2]),
        );
        c
    }

    #[test]
    fn renders_expected_elements() {
        let svg = demo_chart().render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 6);
        // Two error bars (the zero-width one is skipped).
        assert_eq!(svg.matches("class=\"errbar\"").count(), 2);
        assert!(svg.contains(">demo</text>"));
        assert!(svg.contains(">a</text>"));
    }

    #[test]
    fn rendering_is_deterministic() {
        assert_eq!(demo_chart().render(), demo_chart().render());
    }

    #[test]
    fn degenerate_inputs_stay_finite() {
        let mut c = Chart::new("flat", "x", "y");
        c.add(Series::new("p", vec![(1.0, 2.0)]));
        let svg = c.render();
        assert!(!svg.contains("NaN"));
        let empty = Chart::new("empty", "x", "y").render();
        assert!(empty.contains("</svg>"));
        assert!(!empty.contains("NaN"));
    }

    #[test]
    fn escapes_markup_in_labels() {
        let mut c = Chart::new("a<b & c>d", "x", "y");
        c.add(Series::new("s&p", vec![(0.0, 0.0), (1.0, 1.0)]));
        let svg = c.render();
        assert!(svg.contains("a&lt;b &amp; c&gt;d"));
        assert!(svg.contains("s&amp;p"));
    }

    #[test]
    fn tick_labels_are_compact() {
        assert_eq!(tick_label(0.0), "0");
        assert_eq!(tick_label(0.25), "0.25");
        assert_eq!(tick_label(12.0), "12");
        assert_eq!(tick_label(0.5004), "0.5");
        assert_eq!(tick_label(2000.0), "2000");
    }

    #[test]
    fn saves_to_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chart.svg");
        demo_chart().save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("<svg"));
    }
}
