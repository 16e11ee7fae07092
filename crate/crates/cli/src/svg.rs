//! Standalone SVG 1.1 line and scatter charts.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Scatter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub style: Style,
    pub log_x: bool,
    pub log_y: bool,
    pub width: u32,
    pub height: u32,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && c != '\t' => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

/// Axis mapping from data to the transformed (possibly log10) scale.
#[derive(Debug, Clone, Copy)]
struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn transform(&self, v: f64) -> Option<f64> {
        match (self.log, v.is_finite()) {
            (_, false) => None,
            (true, _) if v <= 0.0 => None,
            (true, _) => Some(v.log10()),
            (false, _) => Some(v),
        }
    }

    fn fit(log: bool, values: impl Iterator<Item = f64>) -> Option<Axis> {
        let probe = Axis { log, lo: 0.0, hi: 1.0 };
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter_map(|v| probe.transform(v)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return None;
        }
        if hi - lo < 1e-12 * lo.abs().max(1.0) {
            let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
            lo -= pad;
            hi += pad;
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        }
        Some(Axis { log, lo, hi })
    }

    fn unit(&self, t: f64) -> f64 {
        (t - self.lo) / (self.hi - self.lo)
    }

    /// Tick positions on the transformed scale with their labels.
    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let step = ((self.hi - self.lo) / 8.0).ceil().max(1.0);
            let mut out = Vec::new();
            let mut e = self.lo;
            while e <= self.hi + 1e-9 {
                out.push((e, format!("1e{}", e.round() as i64)));
                e += step;
            }
            return out;
        }
        let step = nice_step((self.hi - self.lo) / 5.0);
        let first = (self.lo / step).ceil() * step;
        let mut out = Vec::new();
        let mut k = 0;
        loop {
            let v = first + k as f64 * step;
            if v > self.hi + step * 1e-9 {
                break;
            }
            let v = if v.abs() < step * 1e-9 { 0.0 } else { v };
            out.push((v, format_tick(v)));
            k += 1;
        }
        out
    }
}

fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e5 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    }
}

/// Render the chart; `None` when no series has a drawable point.
pub fn render(chart: &Chart) -> Option<String> {
    let all = || chart.series.iter().flat_map(|s| s.points.iter());
    let xa = Axis::fit(chart.log_x, all().map(|p| p.0))?;
    let ya = Axis::fit(chart.log_y, all().map(|p| p.1))?;
    let (w, h) = (chart.width as f64, chart.height as f64);
    let pw = (w - MARGIN_LEFT - MARGIN_RIGHT).max(10.0);
    let ph = (h - MARGIN_TOP - MARGIN_BOTTOM).max(10.0);
    let px = |t: f64| MARGIN_LEFT + xa.unit(t) * pw;
    let py = |t: f64| MARGIN_TOP + (1.0 - ya.unit(t)) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
        MARGIN_LEFT + pw / 2.0,
        escape(&chart.title)
    );

    // grid, ticks and axes
    let _ = writeln!(s, r##"<g stroke="#dddddd" stroke-width="1">"##);
    for (t, _) in xa.ticks() {
        let _ = writeln!(s, r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}"/>"#, px(t), MARGIN_TOP, MARGIN_TOP + ph);
    }
    for (t, _) in ya.ticks() {
        let _ = writeln!(s, r#"<line x1="{1:.2}" y1="{0:.2}" x2="{2:.2}" y2="{0:.2}"/>"#, py(t), MARGIN_LEFT, MARGIN_LEFT + pw);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_LEFT:.2}" y="{MARGIN_TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    for (t, label) in xa.ticks() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            px(t),
            MARGIN_TOP + ph + 18.0,
            escape(&label)
        );
    }
    for (t, label) in ya.ticks() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 6.0,
            py(t) + 4.0,
            escape(&label)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + pw / 2.0,
        h - 15.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0:.2}" text-anchor="middle" transform="rotate(-90 18 {0:.2})">{1}</text>"#,
        MARGIN_TOP + ph / 2.0,
        escape(&chart.y_label)
    );

    // data
    for (k, series) in chart.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = series
            .points
            .iter()
            .filter_map(|&(x, y)| Some((px(xa.transform(x)?), py(ya.transform(y)?))))
            .collect();
        match chart.style {
            Style::Line if pts.len() > 1 => {
                let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    coords.join(" ")
                );
            }
            _ => {
                let _ = writeln!(s, r#"<g fill="{color}">"#);
                for (x, y) in &pts {
                    let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3"/>"#);
                }
                let _ = writeln!(s, "</g>");
            }
        }
        let ly = MARGIN_TOP + 10.0 + 18.0 * k as f64;
        let lx = MARGIN_LEFT + pw + 12.0;
        let _ = writeln!(s, r#"<rect x="{lx:.2}" y="{:.2}" width="12" height="12" fill="{color}"/>"#, ly - 10.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, lx + 18.0, escape(&series.name));
    }
    let _ = writeln!(s, "</svg>");
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart(style: Style, log: bool) -> Chart {
        Chart {
            title: "a < b & c".into(),
            x_label: "m".into(),
            y_label: "var".into(),
            series: vec![
                Series { name: "hat".into(), points: vec![(1.0, 3.0), (2.0, 1.6), (4.0, 0.8), (8.0, f64::NAN)] },
                Series { name: "oracle".into(), points: vec![(1.0, 3.1), (2.0, 1.5), (4.0, 0.78)] },
            ],
            style,
            log_x: log,
            log_y: log,
            width: 800,
            height: 500,
        }
    }

    #[test]
    fn renders_escaped_text_and_one_shape_per_series() {
        let svg = render(&chart(Style::Line, true)).unwrap();
        assert!(svg.contains("a &lt; b &amp; c"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        let svg = render(&chart(Style::Scatter, false)).unwrap();
        assert_eq!(svg.matches("<circle").count(), 6);
    }

    #[test]
    fn nothing_to_draw() {
        let mut c = chart(Style::Line, true);
        c.series = vec![Series { name: "neg".into(), points: vec![(-1.0, -1.0)] }];
        assert!(render(&c).is_none());
    }

    #[test]
    fn single_point_gets_a_range() {
        let mut c = chart(Style::Scatter, false);
        c.series = vec![Series { name: "p".into(), points: vec![(2.0, 2.0)] }];
        assert!(!render(&c).unwrap().contains("NaN"));
    }

    #[test]
    fn nice_steps() {
        assert_eq!(nice_step(0.3), 0.5);
        assert_eq!(nice_step(1.0), 1.0);
        assert_eq!(nice_step(17.0), 20.0);
        assert_eq!(format_tick(0.25), "0.25");
        assert_eq!(format_tick(2e-5), "2.0e-5");
    }
}
