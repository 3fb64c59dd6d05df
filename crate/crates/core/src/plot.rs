//! Plain-text SVG figures: ICC curves, risk heatmap, agreement scatter and
//! the four-panel threshold trade-off chart.

use std::fmt::Write;

use crate::filter::HeatmapTable;
use crate::irt::CurveTable;
use crate::metrics::{RegressionStats, SweepRow};

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Self { body: String::new(), width, height }
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" font-size="{}" text-anchor="{anchor}" font-family="sans-serif">{}</text>"#,
            fmt(x),
            fmt(y),
            size,
            escape(content)
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, extra: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{stroke}"{extra}/>"#,
            fmt(x1),
            fmt(y1),
            fmt(x2),
            fmt(y2)
        );
    }

    fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, label: &str) {
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{},{}", fmt(*x), fmt(*y))).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline fill="none" stroke="{stroke}" stroke-width="1.5" data-series="{}" points="{}"/>"#,
            escape(label),
            pts.join(" ")
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

/// Plot area mapping data coordinates to pixels.
#[derive(Clone, Copy)]
struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.height - (y - self.y.0) / (self.y.1 - self.y.0) * self.height
    }

    fn axes(&self, svg: &mut Svg, title: &str, xlabel: &str, ylabel: &str) {
        let _ = writeln!(
            svg.body,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
            fmt(self.left),
            fmt(self.top),
            fmt(self.width),
            fmt(self.height)
        );
        for k in 0..=4 {
            let fx = self.x.0 + (self.x.1 - self.x.0) * k as f64 / 4.0;
            let fy = self.y.0 + (self.y.1 - self.y.0) * k as f64 / 4.0;
            let (px, py) = (self.px(fx), self.py(fy));
            let bottom = self.top + self.height;
            svg.line(px, bottom, px, bottom + 4.0, "#333", "");
            svg.text(px, bottom + 16.0, 10.0, "middle", &fmt(fx));
            svg.line(self.left - 4.0, py, self.left, py, "#333", "");
            svg.text(self.left - 6.0, py + 3.0, 10.0, "end", &fmt(fy));
        }
        svg.text(self.left + self.width / 2.0, self.top - 8.0, 13.0, "middle", title);
        svg.text(self.left + self.width / 2.0, self.top + self.height + 32.0, 11.0, "middle", xlabel);
        let (lx, ly) = (self.left - 40.0, self.top + self.height / 2.0);
        let _ = writeln!(
            svg.body,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 {} {})">{}</text>"#,
            fmt(lx),
            fmt(ly),
            fmt(lx),
            fmt(ly),
            escape(ylabel)
        );
    }
}

/// Item characteristic curves, one polyline per item.
pub fn icc_svg(curves: &CurveTable) -> String {
    let mut svg = Svg::new(760.0, 460.0);
    let x0 = curves.theta.first().copied().unwrap_or(-4.0);
    let x1 = curves.theta.last().copied().unwrap_or(4.0);
    let frame = Frame {
        left: 70.0,
        top: 40.0,
        width: 500.0,
        height: 360.0,
        x: (x0, if x1 > x0 { x1 } else { x0 + 1.0 }),
        y: (0.0, 1.0),
    };
    frame.axes(&mut svg, "Item characteristic curves", "ability", "probability of success");
    for (k, (id, col)) in curves.item_ids.iter().zip(&curves.columns).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = curves.theta.iter().zip(col).map(|(&t, &p)| (frame.px(t), frame.py(p))).collect();
        svg.polyline(&pts, color, id);
        let ly = 50.0 + 14.0 * k as f64;
        svg.line(590.0, ly - 4.0, 610.0, ly - 4.0, color, r#" stroke-width="2""#);
        svg.text(615.0, ly, 10.0, "start", id);
    }
    svg.finish()
}

/// Blue (0) to red (1), linear in each channel.
pub fn risk_color(risk: f64) -> String {
    let v = risk.clamp(0.0, 1.0);
    let red = (255.0 * v).round() as u8;
    let blue = (255.0 * (1.0 - v)).round() as u8;
    format!("#{red:02x}00{blue:02x}")
}

/// Students in rows, items in columns.
pub fn heatmap_svg(table: &HeatmapTable) -> String {
    let n_rows = table.students.len().max(1);
    let n_cols = table.item_ids.len().max(1);
    let cell_w = (600.0 / n_cols as f64).clamp(6.0, 40.0);
    let cell_h = (600.0 / n_rows as f64).clamp(1.0, 16.0);
    let (left, top) = (80.0, 90.0);
    let width = left + cell_w * n_cols as f64 + 90.0;
    let height = top + cell_h * n_rows as f64 + 30.0;
    let mut svg = Svg::new(width.ceil(), height.ceil());
    svg.text(left + cell_w * n_cols as f64 / 2.0, 20.0, 13.0, "middle", "Risk |s - p| per student and rubric item");
    for (j, id) in table.item_ids.iter().enumerate() {
        let x = left + cell_w * (j as f64 + 0.5);
        let _ = writeln!(
            svg.body,
            r#"<text x="{}" y="{}" font-size="9" font-family="sans-serif" transform="rotate(-60 {} {})">{}</text>"#,
            fmt(x),
            fmt(top - 4.0),
            fmt(x),
            fmt(top - 4.0),
            escape(id)
        );
    }
    let label_rows = cell_h >= 8.0;
    for (i, student) in table.students.iter().enumerate() {
        let y = top + cell_h * i as f64;
        if label_rows {
            svg.text(left - 4.0, y + cell_h * 0.8, 8.0, "end", student);
        }
        for j in 0..table.item_ids.len() {
            let fill = match table.get(i, j) {
                Some(v) => risk_color(v),
                None => "#dddddd".to_string(),
            };
            let _ = writeln!(
                svg.body,
                r#"<rect class="cell" data-row="{i}" data-col="{j}" x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
                fmt(left + cell_w * j as f64),
                fmt(y),
                fmt(cell_w),
                fmt(cell_h)
            );
        }
    }
    // colour bar
    let bar_x = left + cell_w * n_cols as f64 + 20.0;
    for k in 0..20 {
        let v = 1.0 - k as f64 / 19.0;
        let _ = writeln!(
            svg.body,
            r#"<rect x="{}" y="{}" width="14" height="10" fill="{}"/>"#,
            fmt(bar_x),
            fmt(top + 10.0 * k as f64),
            risk_color(v)
        );
    }
    svg.text(bar_x + 18.0, top + 8.0, 9.0, "start", "1");
    svg.text(bar_x + 18.0, top + 198.0, 9.0, "start", "0");
    svg.finish()
}

/// AI totals against ground-truth totals with identity and regression lines.
pub fn scatter_svg(points: &[(f64, f64)], stats: Option<&RegressionStats>, max_total: f64) -> String {
    let mut svg = Svg::new(560.0, 520.0);
    let hi = points.iter().flat_map(|&(x, y)| [x, y]).fold(max_total, f64::max).max(1.0);
    let frame = Frame { left: 70.0, top: 50.0, width: 420.0, height: 400.0, x: (0.0, hi), y: (0.0, hi) };
    frame.axes(&mut svg, "Total AI score versus total ground-truth score", "ground-truth total", "AI total");
    svg.line(frame.px(0.0), frame.py(0.0), frame.px(hi), frame.py(hi), "#999", r#" stroke-dasharray="4 3""#);
    for &(x, y) in points {
        let _ = writeln!(
            svg.body,
            r##"<circle class="point" cx="{}" cy="{}" r="2.5" fill="#1f77b4" fill-opacity="0.6"/>"##,
            fmt(frame.px(x)),
            fmt(frame.py(y))
        );
    }
    if let Some(s) = stats {
        let y0 = s.offset;
        let y1 = s.offset + s.slope * hi;
        svg.line(frame.px(0.0), frame.py(y0), frame.px(hi), frame.py(y1), "#d62728", r#" stroke-width="1.5""#);
        let label = format!("slope {:.2}  offset {:.2}  R² {:.2}  n = {}", s.slope, s.offset, s.r2, s.n);
        svg.text(frame.left + 8.0, frame.top + 16.0, 11.0, "start", &label);
    }
    svg.finish()
}

/// R², slope, offset fraction and acceptance rate against r, one polyline
/// per t in each panel.
pub fn sweep_svg(rows: &[SweepRow]) -> String {
    let mut ts: Vec<f64> = Vec::new();
    for row in rows {
        if !ts.contains(&row.t) {
            ts.push(row.t);
        }
    }
    type Getter = fn(&SweepRow) -> Option<f64>;
    let panels: [(&str, Getter); 4] = [
        ("R²", |r| r.stats.map(|s| s.r2)),
        ("slope", |r| r.stats.map(|s| s.slope)),
        ("offset fraction", |r| r.stats.map(|s| s.offset_fraction)),
        ("acceptance rate", |r| Some(r.acceptance_rate)),
    ];
    let mut svg = Svg::new(900.0, 720.0);
    let r_lo = rows.iter().map(|r| r.r).fold(f64::INFINITY, f64::min);
    let r_hi = rows.iter().map(|r| r.r).fold(f64::NEG_INFINITY, f64::max);
    let (r_lo, r_hi) = if r_lo.is_finite() && r_hi > r_lo { (r_lo, r_hi) } else { (0.0, 1.0) };
    for (k, (name, get)) in panels.iter().enumerate() {
        let values: Vec<f64> = rows.iter().filter_map(get).filter(|v| v.is_finite()).collect();
        let (mut lo, mut hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if *name == "R²" || *name == "acceptance rate" {
            (lo, hi) = (lo.min(0.0), hi.max(1.0));
        }
        if hi - lo < 1e-9 {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        }
        let frame = Frame {
            left: 80.0 + 420.0 * (k % 2) as f64,
            top: 50.0 + 330.0 * (k / 2) as f64,
            width: 330.0,
            height: 240.0,
            x: (r_lo, r_hi),
            y: (lo, hi),
        };
        frame.axes(&mut svg, name, "maximum risk r", name);
        for (ti, &t) in ts.iter().enumerate() {
            let color = PALETTE[ti % PALETTE.len()];
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|row| row.t == t)
                .filter_map(|row| get(row).filter(|v| v.is_finite()).map(|v| (frame.px(row.r), frame.py(v))))
                .collect();
            svg.polyline(&pts, color, &format!("t={t}"));
        }
    }
    for (ti, &t) in ts.iter().enumerate() {
        let x = 80.0 + 110.0 * ti as f64;
        let color = PALETTE[ti % PALETTE.len()];
        svg.line(x, 700.0, x + 20.0, 700.0, color, r#" stroke-width="2""#);
        svg.text(x + 24.0, 704.0, 11.0, "start", &format!("t = {t}"));
    }
    svg.finish()
}
