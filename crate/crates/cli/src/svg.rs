//! Minimal static SVG line charts: polylines, optional mean/std bands,
//! linear or log axes with tick labels, and a legend. No external renderer.

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 74.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 52.0;

const PALETTE: [&str; 7] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];

/// One plotted series; `band` entries are (x, low, high).
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub band: Option<Vec<(f64, f64, f64)>>,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

struct AxisMap {
    min: f64,
    max: f64,
    log: bool,
    lo_px: f64,
    hi_px: f64,
}

impl AxisMap {
    fn project(&self, v: f64) -> f64 {
        let (a, b, x) = if self.log {
            (self.min.log10(), self.max.log10(), v.max(self.min).log10())
        } else {
            (self.min, self.max, v)
        };
        let t = if b > a { (x - a) / (b - a) } else { 0.5 };
        self.lo_px + t * (self.hi_px - self.lo_px)
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (0.001..100000.0).contains(&a) {
        let s = format!("{v}");
        if s.len() <= 8 {
            s
        } else {
            format!("{v:.3}")
        }
    } else {
        format!("{v:.0e}")
    }
}

/// Tick positions: decades on log axes, a handful of round steps otherwise.
fn ticks(min: f64, max: f64, log: bool) -> Vec<f64> {
    if log {
        let lo = min.log10().floor() as i64;
        let hi = max.log10().ceil() as i64;
        let span = (hi - lo).max(1);
        let stride = (span as usize).div_ceil(10).max(1) as i64;
        return (lo..=hi).step_by(stride as usize).map(|k| 10f64.powi(k as i32)).collect();
    }
    let span = (max - min).max(f64::MIN_POSITIVE);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(mag * 10.0);
    let mut v = (min / step).floor() * step;
    let mut out = Vec::new();
    while v <= max + step * 1e-9 {
        if v >= min - step * 1e-9 {
            out.push(v);
        }
        v += step;
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart {
    pub fn to_svg(&self) -> String {
        // Data ranges; log axes ignore non-positive values.
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for s in &self.series {
            for (x, y) in &s.points {
                xs.push(*x);
                ys.push(*y);
            }
            if let Some(band) = &s.band {
                for (x, lo, hi) in band {
                    xs.push(*x);
                    ys.push(*lo);
                    ys.push(*hi);
                }
            }
        }
        let keep = |v: &f64, log: bool| v.is_finite() && (!log || *v > 0.0);
        xs.retain(|v| keep(v, self.log_x));
        ys.retain(|v| keep(v, self.log_y));
        let (x_min, x_max) = bounds(&xs, self.log_x);
        let (y_min, y_max) = bounds(&ys, self.log_y);

        let x_axis = AxisMap {
            min: x_min,
            max: x_max,
            log: self.log_x,
            lo_px: MARGIN_L,
            hi_px: WIDTH - MARGIN_R,
        };
        let y_axis = AxisMap {
            min: y_min,
            max: y_max,
            log: self.log_y,
            lo_px: HEIGHT - MARGIN_B,
            hi_px: MARGIN_T,
        };

        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
        ));
        out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        out.push_str(&format!(
            "<text x=\"{}\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
            WIDTH / 2.0,
            xml_escape(&self.title)
        ));

        // Axes and ticks.
        let (x0, y0) = (MARGIN_L, HEIGHT - MARGIN_B);
        out.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"black\"/>\n",
            WIDTH - MARGIN_R
        ));
        out.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{MARGIN_T}\" stroke=\"black\"/>\n"
        ));
        for t in ticks(x_min, x_max, self.log_x) {
            let px = x_axis.project(t);
            out.push_str(&format!(
                "<line x1=\"{px}\" y1=\"{y0}\" x2=\"{px}\" y2=\"{}\" stroke=\"black\"/>\n",
                y0 + 5.0
            ));
            out.push_str(&format!(
                "<text x=\"{px}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                y0 + 18.0,
                fmt_tick(t)
            ));
        }
        for t in ticks(y_min, y_max, self.log_y) {
            let py = y_axis.project(t);
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{py}\" x2=\"{x0}\" y2=\"{py}\" stroke=\"black\"/>\n",
                x0 - 5.0
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
                x0 - 8.0,
                py + 4.0,
                fmt_tick(t)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
            (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
            HEIGHT - 14.0,
            xml_escape(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
            (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
            (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
            xml_escape(&self.y_label)
        ));

        // Bands below lines.
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            if let Some(band) = &s.band {
                let pts: Vec<(f64, f64, f64)> = band
                    .iter()
                    .filter(|(x, _, hi)| {
                        x.is_finite() && hi.is_finite() && (!self.log_x || *x > 0.0)
                    })
                    .map(|(x, lo, hi)| (*x, lo.max(y_min), hi.max(y_min)))
                    .collect();
                if pts.len() >= 2 {
                    let mut path = String::from("M");
                    for (x, _, hi) in &pts {
                        path.push_str(&format!(
                            " {:.2},{:.2}",
                            x_axis.project(*x),
                            y_axis.project(*hi)
                        ));
                    }
                    for (x, lo, _) in pts.iter().rev() {
                        path.push_str(&format!(
                            " L {:.2},{:.2}",
                            x_axis.project(*x),
                            y_axis.project(*lo)
                        ));
                    }
                    path.push_str(" Z");
                    out.push_str(&format!(
                        "<path d=\"{path}\" fill=\"{color}\" fill-opacity=\"0.18\" stroke=\"none\"/>\n"
                    ));
                }
            }
        }
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|(x, y)| {
                    x.is_finite()
                        && y.is_finite()
                        && (!self.log_x || *x > 0.0)
                        && (!self.log_y || *y > 0.0)
                })
                .map(|(x, y)| format!("{:.2},{:.2}", x_axis.project(*x), y_axis.project(*y)))
                .collect();
            if pts.len() >= 2 {
                out.push_str(&format!(
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"/>\n",
                    pts.join(" ")
                ));
            }
            // Legend entry.
            let ly = MARGIN_T + 8.0 + 16.0 * i as f64;
            let lx = WIDTH - MARGIN_R - 150.0;
            out.push_str(&format!(
                "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                lx + 22.0
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
                lx + 28.0,
                ly + 4.0,
                xml_escape(&s.label)
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn bounds(values: &[f64], log: bool) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        min = min.min(*v);
        max = max.max(*v);
    }
    if !min.is_finite() || !max.is_finite() {
        return if log { (0.1, 10.0) } else { (0.0, 1.0) };
    }
    if log {
        // A touch of headroom in decades.
        (min / 1.5, max * 1.5)
    } else if min == max {
        (min - 0.5, max + 0.5)
    } else {
        let pad = 0.03 * (max - min);
        (min - pad, max + pad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_wellformed_svg() {
        let chart = Chart {
            title: "demo".into(),
            x_label: "t".into(),
            y_label: "value".into(),
            log_x: false,
            log_y: true,
            series: vec![Series {
                label: "a".into(),
                points: vec![(0.0, 1.0), (1.0, 0.1), (2.0, 0.01)],
                band: Some(vec![(0.0, 0.5, 2.0), (1.0, 0.05, 0.2), (2.0, 0.005, 0.02)]),
            }],
        };
        let svg = chart.to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("fill-opacity"));
        assert_eq!(svg.matches("<svg").count(), 1);
    }

    #[test]
    fn log_ticks_are_decades() {
        let t = ticks(0.001, 1.0, true);
        assert_eq!(t, vec![0.001, 0.01, 0.1, 1.0]);
    }

    #[test]
    fn zero_band_is_flat() {
        // Deterministic runs give std = 0; the band degenerates to the line.
        let chart = Chart {
            title: "flat".into(),
            x_label: "t".into(),
            y_label: "v".into(),
            log_x: false,
            log_y: false,
            series: vec![Series {
                label: "a".into(),
                points: vec![(0.0, 1.0), (1.0, 1.0)],
                band: Some(vec![(0.0, 1.0, 1.0), (1.0, 1.0, 1.0)]),
            }],
        };
        let svg = chart.to_svg();
        assert!(svg.contains("path"));
    }
}
