//! Minimal SVG writer for line panels, vector fields and trajectories.

use std::fmt::Write as _;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// One series of points with optional symmetric error bars.
#[derive(Clone, Debug, Default)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64, f64)>,
}

/// Data-to-pixel transform of one panel.
#[derive(Clone, Copy, Debug)]
struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.xmin) / (self.xmax - self.xmin) * self.w
    }
    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.ymin) / (self.ymax - self.ymin) * self.h
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if (hi - lo).abs() < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// A grid of panels written as one SVG document.
pub struct Canvas {
    cols: usize,
    panel_w: f64,
    panel_h: f64,
    panels: Vec<String>,
}

impl Canvas {
    pub fn new(cols: usize) -> Self {
        Self { cols: cols.max(1), panel_w: 320.0, panel_h: 260.0, panels: Vec::new() }
    }

    fn origin(&self, i: usize) -> (f64, f64) {
        ((i % self.cols) as f64 * self.panel_w, (i / self.cols) as f64 * self.panel_h)
    }

    fn frame(&self, i: usize, xr: (f64, f64), yr: (f64, f64)) -> Frame {
        let (ox, oy) = self.origin(i);
        Frame { x0: ox + 50.0, y0: oy + 30.0, w: self.panel_w - 70.0, h: self.panel_h - 75.0, xmin: xr.0, xmax: xr.1, ymin: yr.0, ymax: yr.1 }
    }

    fn axes(out: &mut String, f: &Frame, title: &str, xlabel: &str) {
        let _ = write!(
            out,
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##,
            f.x0, f.y0, f.w, f.h
        );
        let _ = write!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{}</text>"#,
            f.x0 + f.w / 2.0,
            f.y0 - 10.0,
            esc(title)
        );
        let _ = write!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
            f.x0 + f.w / 2.0,
            f.y0 + f.h + 30.0,
            esc(xlabel)
        );
        for t in 0..=4 {
            let fx = f.xmin + (f.xmax - f.xmin) * t as f64 / 4.0;
            let fy = f.ymin + (f.ymax - f.ymin) * t as f64 / 4.0;
            let _ = write!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="9" text-anchor="middle">{}</text>"#,
                f.px(fx),
                f.y0 + f.h + 13.0,
                tick(fx)
            );
            let _ = write!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="9" text-anchor="end">{}</text>"#,
                f.x0 - 4.0,
                f.py(fy) + 3.0,
                tick(fy)
            );
        }
    }

    /// Line panel with error bars and a legend.
    pub fn line_panel(&mut self, title: &str, xlabel: &str, series: &[Series]) {
        let i = self.panels.len();
        let pts = series.iter().flat_map(|s| s.points.iter());
        let (mut xl, mut xh, mut yl, mut yh) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y, e) in pts {
            xl = xl.min(x);
            xh = xh.max(x);
            yl = yl.min(y - e);
            yh = yh.max(y + e);
        }
        let f = self.frame(i, padded(xl, xh), padded(yl, yh));
        let mut out = String::new();
        Self::axes(&mut out, &f, title, xlabel);
        for (si, s) in series.iter().enumerate() {
            let c = color(si);
            let path: Vec<String> = s.points.iter().map(|&(x, y, _)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
            let _ = write!(out, r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
            for &(x, y, e) in &s.points {
                let (px, py) = (f.px(x), f.py(y));
                if e > 0.0 {
                    let _ = write!(
                        out,
                        r#"<line class="errorbar" x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="{c}"/>"#,
                        f.py(y - e),
                        f.py(y + e)
                    );
                }
                let _ = write!(out, r#"<circle cx="{px:.2}" cy="{py:.2}" r="2.5" fill="{c}"/>"#);
            }
            let _ = write!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="9" fill="{c}">{}</text>"#,
                f.x0 + 4.0,
                f.y0 + 11.0 + 10.0 * si as f64,
                esc(&s.label)
            );
        }
        self.panels.push(out);
    }

    /// Arrow field over a grid plus optional trajectories.
    ///
    /// `vectors` are (x, y, dx, dy); arrows are scaled so the longest spans
    /// 90% of a grid cell. Each trajectory is drawn as a polyline with a
    /// circle at its first point.
    pub fn field_panel(&mut self, title: &str, xlabel: &str, vectors: &[(f64, f64, f64, f64)], trajectories: &[Vec<(f64, f64)>]) {
        let i = self.panels.len();
        let (mut xl, mut xh, mut yl, mut yh) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y, _, _) in vectors {
            xl = xl.min(x);
            xh = xh.max(x);
            yl = yl.min(y);
            yh = yh.max(y);
        }
        for &(x, y) in trajectories.iter().flatten() {
            xl = xl.min(x);
            xh = xh.max(x);
            yl = yl.min(y);
            yh = yh.max(y);
        }
        let f = self.frame(i, padded(xl, xh), padded(yl, yh));
        let mut out = String::new();
        Self::axes(&mut out, &f, title, xlabel);
        let n = (vectors.len() as f64).sqrt().max(1.0);
        let cell = (f.w.min(f.h) / n) * 0.9;
        let longest = vectors.iter().map(|v| v.2.hypot(v.3)).fold(0.0, f64::max);
        for &(x, y, dx, dy) in vectors {
            let (px, py) = (f.px(x), f.py(y));
            let len = dx.hypot(dy);
            let scale = if longest > 0.0 { cell / longest } else { 0.0 };
            let (ex, ey) = (px + dx * scale, py - dy * scale);
            let _ = write!(
                out,
                r##"<line class="arrow" x1="{px:.2}" y1="{py:.2}" x2="{ex:.2}" y2="{ey:.2}" stroke="#999" stroke-width="{}"/>"##,
                if len > 0.0 { 1.0 } else { 0.5 }
            );
            if len > 0.0 {
                let _ = write!(out, r##"<circle cx="{ex:.2}" cy="{ey:.2}" r="1.2" fill="#666"/>"##);
            }
        }
        for (ti, t) in trajectories.iter().enumerate() {
            let c = color(ti);
            let path: Vec<String> = t.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
            let _ = write!(out, r#"<polyline fill="none" stroke="{c}" stroke-width="1.2" points="{}"/>"#, path.join(" "));
            if let Some(&(x, y)) = t.first() {
                let _ = write!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="none" stroke="{c}"/>"#, f.px(x), f.py(y));
            }
        }
        self.panels.push(out);
    }

    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    pub fn render(&self) -> String {
        let rows = self.panels.len().div_ceil(self.cols).max(1);
        let cols = self.cols.min(self.panels.len().max(1));
        let (w, h) = (cols as f64 * self.panel_w, rows as f64 * self.panel_h);
        let mut out = format!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
        );
        out.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
        for p in &self.panels {
            out.push_str("<g>");
            out.push_str(p);
            out.push_str("</g>");
        }
        out.push_str("</svg>\n");
        out
    }
}

fn tick(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}
