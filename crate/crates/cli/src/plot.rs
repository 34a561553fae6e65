//! Minimal SVG line charts with a base-10 logarithmic y-axis.

use std::fmt::Write as _;

const W: f64 = 760.0;
const H: f64 = 460.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
    /// Index into the palette; series sharing a colour belong together.
    pub color: usize,
}

#[derive(Debug, Clone)]
pub struct LogPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 8.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

impl LogPlot {
    /// Points with a non-positive or non-finite y value break the line.
    pub fn render(&self) -> String {
        let usable = |p: &(f64, f64)| p.0.is_finite() && p.1.is_finite() && p.1 > 0.0;
        let pts: Vec<(f64, f64)> = self.series.iter().flat_map(|s| s.points.iter().copied()).filter(usable).collect();
        let x_max = pts.iter().map(|p| p.0).fold(0.0f64, f64::max).max(1.0);
        let x_min = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).min(0.0);
        let (mut y_lo, mut y_hi) = pts
            .iter()
            .map(|p| p.1.log10())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !y_lo.is_finite() {
            (y_lo, y_hi) = (-1.0, 0.0);
        }
        let (y_lo, mut y_hi) = (y_lo.floor(), y_hi.ceil());
        if y_hi <= y_lo {
            y_hi = y_lo + 1.0;
        }
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * pw;
        let sy = |ly: f64| TOP + (y_hi - ly) / (y_hi - y_lo) * ph;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        // grid and ticks
        let decades = (y_hi - y_lo) as usize;
        let every = decades.div_ceil(12).max(1);
        for d in (0..=decades).step_by(every) {
            let ly = y_lo + d as f64;
            let y = sy(ly);
            let _ = writeln!(
                svg,
                r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#e0e0e0"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0,
                ly as i64
            );
        }
        let step = nice_step(x_max - x_min);
        let mut x = (x_min / step).ceil() * step;
        while x <= x_max + 1e-9 {
            let px = sx(x);
            let _ = writeln!(
                svg,
                r##"<line x1="{px:.1}" y1="{TOP}" x2="{px:.1}" y2="{:.1}" stroke="#f0f0f0"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
                TOP + ph,
                TOP + ph + 16.0,
                x
            );
            x += step;
        }
        let _ = writeln!(
            svg,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[s.color % PALETTE.len()];
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let mut segment: Vec<(f64, f64)> = Vec::new();
            let flush = |seg: &mut Vec<(f64, f64)>, svg: &mut String| {
                match seg.as_slice() {
                    [] => {}
                    [(cx, cy)] => {
                        let _ = writeln!(svg, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="2.5" fill="{color}"/>"#);
                    }
                    pts => {
                        let list: Vec<String> = pts.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
                        let _ = writeln!(
                            svg,
                            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                            list.join(" ")
                        );
                    }
                }
                seg.clear();
            };
            for p in &s.points {
                if usable(p) {
                    segment.push((sx(p.0), sy(p.1.log10())));
                } else {
                    flush(&mut segment, &mut svg);
                }
            }
            flush(&mut segment, &mut svg);
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="1.5"{dash}/><text x="{}" y="{}">{}</text>"#,
                lx + 24.0,
                lx + 30.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plot(points: Vec<(f64, f64)>) -> LogPlot {
        LogPlot {
            title: "t <1>".into(),
            x_label: "k".into(),
            y_label: "y".into(),
            series: vec![Series {
                label: "a&b".into(),
                points,
                dashed: true,
                color: 0,
            }],
        }
    }

    #[test]
    fn renders_well_formed_svg() {
        let svg = plot(vec![(0.0, 1.0), (1.0, 1e-3), (2.0, 0.0), (3.0, 1e-8), (4.0, 1e-9)]).render();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("t &lt;1&gt;") && svg.contains("a&amp;b"));
        // zero breaks the line into two polylines
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">1e-9<") && svg.contains(">1e0<"));
    }

    #[test]
    fn single_point_and_empty_series() {
        let svg = plot(vec![(0.0, 0.5)]).render();
        assert!(svg.contains("<circle"));
        let empty = plot(vec![]).render();
        assert!(empty.contains("</svg>"));
    }

    #[test]
    fn tick_steps_are_round() {
        assert_eq!(nice_step(80.0), 10.0);
        assert_eq!(nice_step(7.0), 1.0);
        assert_eq!(nice_step(1500.0), 200.0);
    }
}
