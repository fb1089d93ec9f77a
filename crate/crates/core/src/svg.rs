//! Minimal SVG line and scatter plots.

use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub style: Style,
    /// (x, y, optional error bar half-width)
    pub points: Vec<(f64, f64, Option<f64>)>,
}

impl Series {
    pub fn line(name: &str, xy: impl IntoIterator<Item = (f64, f64)>) -> Self {
        Series { name: name.into(), style: Style::Line, points: xy.into_iter().map(|(x, y)| (x, y, None)).collect() }
    }

    pub fn markers(name: &str, pts: impl IntoIterator<Item = (f64, f64, f64)>) -> Self {
        Series { name: name.into(), style: Style::Markers, points: pts.into_iter().map(|(x, y, e)| (x, y, Some(e))).collect() }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const W: f64 = 640.0;
const H: f64 = 420.0;
const L: f64 = 70.0;
const R: f64 = 20.0;
const T: f64 = 40.0;
const B: f64 = 55.0;

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let mut v = Vec::new();
    let mut x = (lo / step).ceil() * step;
    while x <= hi + 1e-9 * span {
        v.push(if x.abs() < 1e-12 * span { 0.0 } else { x });
        x += step;
    }
    v
}

fn fmt_tick(x: f64) -> String {
    if x != 0.0 && (x.abs() >= 1e4 || x.abs() < 1e-2) {
        format!("{x:.1e}")
    } else {
        let s = format!("{x:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Plot { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), series: vec![] }
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &(x, y, e) in &s.points {
                if !(x.is_finite() && y.is_finite()) {
                    continue;
                }
                let e = e.unwrap_or(0.0);
                b = (b.0.min(x), b.1.max(x), b.2.min(y - e), b.3.max(y + e));
            }
        }
        if !b.0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |lo: f64, hi: f64| if hi > lo { ((hi - lo) * 0.05, (hi - lo) * 0.05) } else { (0.5, 0.5) };
        let (px, _) = pad(b.0, b.1);
        let (py, _) = pad(b.2, b.3);
        (b.0 - px, b.1 + px, b.2 - py, b.3 + py)
    }

    pub fn to_svg(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let sx = |x: f64| L + (x - x0) / (x1 - x0) * (W - L - R);
        let sy = |y: f64| H - B - (y - y0) / (y1 - y0) * (H - T - B);
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, esc(&self.title));
        let _ = writeln!(s, r#"<rect x="{L}" y="{T}" width="{}" height="{}" fill="none" stroke="black"/>"#, W - L - R, H - T - B);
        for x in ticks(x0, x1) {
            let _ = writeln!(s, r#"<line x1="{0:.2}" x2="{0:.2}" y1="{1}" y2="{2}" stroke="black"/><text x="{0:.2}" y="{3}" text-anchor="middle">{4}</text>"#, sx(x), H - B, H - B + 5.0, H - B + 18.0, fmt_tick(x));
        }
        for y in ticks(y0, y1) {
            let _ = writeln!(s, r#"<line x1="{0}" x2="{1}" y1="{2:.2}" y2="{2:.2}" stroke="black"/><text x="{3}" y="{4:.2}" text-anchor="end">{5}</text>"#, L - 5.0, L, sy(y), L - 8.0, sy(y) + 4.0, fmt_tick(y));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, L + (W - L - R) / 2.0, H - 15.0, esc(&self.x_label));
        let _ = writeln!(s, r#"<text transform="translate(18,{}) rotate(-90)" text-anchor="middle">{}</text>"#, T + (H - T - B) / 2.0, esc(&self.y_label));
        for (i, ser) in self.series.iter().enumerate() {
            let c = COLORS[i % COLORS.len()];
            let pts: Vec<&(f64, f64, Option<f64>)> = ser.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
            match ser.style {
                Style::Line => {
                    let path: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
                    let _ = writeln!(s, r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
                }
                Style::Markers => {
                    for p in pts {
                        if let Some(e) = p.2 {
                            let _ = writeln!(s, r#"<line x1="{0:.2}" x2="{0:.2}" y1="{1:.2}" y2="{2:.2}" stroke="{c}"/>"#, sx(p.0), sy(p.1 - e), sy(p.1 + e));
                        }
                        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{c}"/>"#, sx(p.0), sy(p.1));
                    }
                }
            }
            let ly = T + 16.0 + 16.0 * i as f64;
            let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{c}"/><text x="{}" y="{}">{}</text>"#, W - R - 150.0, ly - 9.0, W - R - 135.0, ly, esc(&ser.name));
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_series() {
        let p = Plot::new("t", "x", "y")
            .with(Series::line("a", (0..10).map(|i| (i as f64, (i as f64).sin()))))
            .with(Series::markers("b", [(1.0, 0.5, 0.1)]));
        let s = p.to_svg();
        assert!(s.starts_with("<svg") && s.contains("polyline") && s.contains("circle"));
        assert_eq!(ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
    }
}
