//! Log-log SVG plots of `|u|(t)` with a dashed guide at the predicted slope.

use std::fmt::Write as _;

use num_complex::Complex64;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
/// Lower plot limit relative to the largest magnitude.
const DYNAMIC_RANGE: f64 = 1e-16;
const MAX_POINTS: usize = 1500;

pub struct Guide {
    /// Slope of the dashed line in log-log coordinates.
    pub slope: f64,
    /// A point the line passes through.
    pub anchor: (f64, f64),
    /// Time range over which it is drawn.
    pub span: (f64, f64),
}

pub struct Plot<'a> {
    pub title: String,
    pub samples: &'a [(f64, Complex64)],
    /// Name of the plotted magnitude, e.g. `|u|`.
    pub ylabel: &'a str,
    pub guide: Option<Guide>,
}

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn px(&self, t: f64) -> f64 {
        LEFT + (t.log10() - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v.log10() - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(plot: &Plot) -> String {
    let pts: Vec<(f64, f64)> = plot.samples.iter().filter(|(t, v)| *t > 0.0 && v.norm() > 0.0).map(|(t, v)| (*t, v.norm())).collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(&plot.title));
    if pts.is_empty() {
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">no nonzero samples</text>"#, WIDTH / 2.0, HEIGHT / 2.0);
        svg.push_str("</svg>\n");
        return svg;
    }

    let tmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let tmax = pts.iter().map(|p| p.0).fold(0.0, f64::max);
    let vmax = pts.iter().map(|p| p.1).fold(0.0, f64::max);
    let vmin = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).max(vmax * DYNAMIC_RANGE);
    let mut x = (tmin.log10().floor(), tmax.log10().ceil());
    let mut y = (vmin.log10().floor(), vmax.log10().ceil());
    if x.1 <= x.0 {
        x.1 = x.0 + 1.0;
    }
    if y.1 <= y.0 {
        y.1 = y.0 + 1.0;
    }
    let axes = Axes { x, y };
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);

    let _ = writeln!(svg, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    for k in x.0 as i32..=x.1 as i32 {
        let px = axes.px(10f64.powi(k));
        let _ = writeln!(svg, r##"<line x1="{px:.2}" y1="{y1}" x2="{px:.2}" y2="{y0}" stroke="#ddd"/>"##);
        let _ = writeln!(svg, r#"<text x="{px:.2}" y="{}" text-anchor="middle">1e{k}</text>"#, y0 + 16.0);
    }
    let ystep = ((y.1 - y.0) / 8.0).ceil().max(1.0) as i32;
    let mut k = y.0 as i32;
    while k <= y.1 as i32 {
        let py = axes.py(10f64.powi(k));
        let _ = writeln!(svg, r##"<line x1="{x0}" y1="{py:.2}" x2="{x1}" y2="{py:.2}" stroke="#ddd"/>"##);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{k}</text>"#, x0 - 6.0, py + 4.0);
        k += ystep;
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">t</text>"#, (x0 + x1) / 2.0, HEIGHT - 10.0);
    let _ = writeln!(svg, r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#, (y0 + y1) / 2.0, (y0 + y1) / 2.0, escape(plot.ylabel));

    let stride = pts.len().div_ceil(MAX_POINTS).max(1);
    let mut path = String::new();
    for (i, (t, v)) in pts.iter().enumerate().filter(|(i, _)| i % stride == 0 || *i == pts.len() - 1) {
        let v = v.max(vmin);
        let _ = write!(path, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, axes.px(*t), axes.py(v));
    }
    let _ = writeln!(svg, r##"<path d="{path}" fill="none" stroke="#1f5fa8" stroke-width="1.5"/>"##);

    if let Some(g) = &plot.guide {
        let at = |t: f64| g.anchor.1 * (t / g.anchor.0).powf(g.slope);
        let (ta, tb) = (g.span.0.max(10f64.powf(x.0)), g.span.1.min(10f64.powf(x.1)));
        let (va, vb) = (at(ta), at(tb));
        if ta < tb && va > 0.0 && vb > 0.0 {
            let _ = writeln!(
                svg,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c0392b" stroke-width="1.5" stroke-dasharray="6 4"/>"##,
                axes.px(ta),
                axes.py(va),
                axes.px(tb),
                axes.py(vb)
            );
            let _ = writeln!(
                svg,
                r##"<text x="{}" y="{}" text-anchor="end" fill="#c0392b">predicted slope {:.4}</text>"##,
                x1 - 6.0,
                y1 + 16.0,
                g.slope
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
