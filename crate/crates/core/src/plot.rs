//! Static SVG figures: ablation index bars, degradation curves and a Lorenz
//! phase-plane preview.

use svg::node::element::{Group, Line, Polyline, Rectangle, Text};
use svg::Document;

use crate::attribution::{AblationRecord, DualAxisReport};
use crate::transfer::{AccuracyTable, SweepKind};

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const FONT: &str = "sans-serif";

/// Plot area inside a panel, mapping data ranges to pixels.
struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        self.x0 + (v - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn y(&self, v: f64) -> f64 {
        self.y0 + self.h - (v - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }
}

fn fmt(v: f64) -> String {
    format!("{:.2}", v)
}

fn text(x: f64, y: f64, s: &str, size: u32, anchor: &str) -> Text {
    Text::new(s)
        .set("x", fmt(x))
        .set("y", fmt(y))
        .set("font-family", FONT)
        .set("font-size", size)
        .set("text-anchor", anchor)
}

fn line(x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) -> Line {
    Line::new()
        .set("x1", fmt(x1))
        .set("y1", fmt(y1))
        .set("x2", fmt(x2))
        .set("y2", fmt(y2))
        .set("stroke", stroke)
}

/// Range padded so that it contains zero and is never degenerate.
fn span(values: impl Iterator<Item = f64>, include_zero: bool) -> (f64, f64) {
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if include_zero {
        lo = lo.min(0.0);
        hi = hi.max(0.0);
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let pad = 0.05 * (hi - lo);
    (if lo < 0.0 { lo - pad } else { lo }, if hi > 0.0 { hi + pad } else { hi })
}

fn axes(f: &Frame, xlabel: &str, ylabel: &str, yticks: usize) -> Group {
    let mut g = Group::new()
        .add(line(f.x0, f.y0 + f.h, f.x0 + f.w, f.y0 + f.h, "black"))
        .add(line(f.x0, f.y0, f.x0, f.y0 + f.h, "black"));
    for k in 0..=yticks {
        let v = f.yr.0 + (f.yr.1 - f.yr.0) * k as f64 / yticks as f64;
        let y = f.y(v);
        g = g
            .add(line(f.x0 - 4.0, y, f.x0, y, "black"))
            .add(text(f.x0 - 6.0, y + 4.0, &format!("{v:.3}"), 10, "end"));
    }
    g.add(text(f.x0 + f.w / 2.0, f.y0 + f.h + 44.0, xlabel, 12, "middle"))
        .add(
            text(0.0, 0.0, ylabel, 12, "middle").set(
                "transform",
                format!("translate({},{}) rotate(-90)", fmt(f.x0 - 58.0), fmt(f.y0 + f.h / 2.0)),
            ),
        )
}

fn bar_panel(title: &str, ylabel: &str, bars: &[(String, f64, bool)], x0: f64, w: f64) -> Group {
    let f = Frame {
        x0: x0 + 70.0,
        y0: 50.0,
        w: w - 90.0,
        h: 260.0,
        xr: (0.0, bars.len().max(1) as f64),
        yr: span(bars.iter().map(|b| b.1), true),
    };
    let mut g = Group::new()
        .add(text(f.x0 + f.w / 2.0, 30.0, title, 14, "middle"))
        .add(axes(&f, "", ylabel, 5))
        .add(line(f.x0, f.y(0.0), f.x0 + f.w, f.y(0.0), "#888"));
    for (k, (label, v, highlight)) in bars.iter().enumerate() {
        let (ya, yb) = (f.y(*v), f.y(0.0));
        let cx = f.x(k as f64 + 0.5);
        let bw = 0.7 * f.w / bars.len() as f64;
        g = g
            .add(
                Rectangle::new()
                    .set("x", fmt(cx - bw / 2.0))
                    .set("y", fmt(ya.min(yb)))
                    .set("width", fmt(bw))
                    .set("height", fmt((ya - yb).abs()))
                    .set("fill", if *highlight { PALETTE[1] } else { PALETTE[0] }),
            )
            .add(text(0.0, 0.0, label, 10, "end").set(
                "transform",
                format!("translate({},{}) rotate(-40)", fmt(cx), fmt(f.y0 + f.h + 12.0)),
            ));
    }
    g
}

/// Two panels: 100 x ESI of error-increasing ablations (ascending |ESI|)
/// and RSI of all ablations (descending). Headline candidates in red.
pub fn ablation_chart(report: &DualAxisReport) -> String {
    let energy = report.energy_candidate.as_ref().map(|c| c.group.as_str());
    let robust = report.robustness_candidate.as_ref().map(|c| c.group.as_str());
    let bars = |rs: &[AblationRecord], f: &dyn Fn(&AblationRecord) -> f64, hl: Option<&str>| {
        rs.iter()
            .map(|r| (r.group.clone(), f(r), Some(r.group.as_str()) == hl))
            .collect::<Vec<_>>()
    };
    let esi = bars(&report.esi_ranking, &|r| 100.0 * r.esi, energy);
    let rsi = bars(&report.rsi_ranking, &|r| r.rsi, robust);
    let doc = Document::new()
        .set("viewBox", (0, 0, 960, 420))
        .set("width", 960)
        .set("height", 420)
        .add(Rectangle::new().set("width", 960).set("height", 420).set("fill", "white"))
        .add(bar_panel("Energy sensitivity (ESI)", "100 x ESI", &esi, 0.0, 480.0))
        .add(bar_panel("Robustness sensitivity (RSI)", "RSI", &rsi, 480.0, 480.0));
    doc.to_string()
}

/// Accuracy against condition, one polyline per model.
pub fn degradation_chart(t: &AccuracyTable) -> String {
    let xlabel = match t.sweep_kind {
        SweepKind::Budget => "Inference budget ratio",
        SweepKind::Noise => "Noise standard deviation",
    };
    let f = Frame {
        x0: 80.0,
        y0: 40.0,
        w: 480.0,
        h: 280.0,
        xr: span(t.rows.iter().map(|r| r.condition), false),
        yr: span(t.rows.iter().map(|r| r.accuracy), false),
    };
    let mut doc = Document::new()
        .set("viewBox", (0, 0, 780, 400))
        .set("width", 780)
        .set("height", 400)
        .add(Rectangle::new().set("width", 780).set("height", 400).set("fill", "white"))
        .add(axes(&f, xlabel, "Accuracy (%)", 5));
    let mut conds: Vec<f64> = t.rows.iter().map(|r| r.condition).collect();
    conds.sort_by(f64::total_cmp);
    conds.dedup();
    for c in conds {
        doc = doc.add(text(f.x(c), f.y0 + f.h + 16.0, &format!("{c:.2}"), 10, "middle"));
    }
    for (k, model) in t.models().into_iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = t
            .curve(model)
            .iter()
            .map(|&(c, a)| format!("{},{}", fmt(f.x(c)), fmt(f.y(a))))
            .collect();
        doc = doc
            .add(
                Polyline::new()
                    .set("points", pts.join(" "))
                    .set("fill", "none")
                    .set("stroke", colour)
                    .set("stroke-width", 2),
            )
            .add(line(590.0, 60.0 + 20.0 * k as f64, 610.0, 60.0 + 20.0 * k as f64, colour).set("stroke-width", 2))
            .add(text(616.0, 64.0 + 20.0 * k as f64, model, 11, "start"));
    }
    doc.to_string()
}

/// x-z projection of a Lorenz trajectory.
pub fn lorenz_preview(states: &[[f64; 3]]) -> String {
    let f = Frame {
        x0: 70.0,
        y0: 30.0,
        w: 400.0,
        h: 340.0,
        xr: span(states.iter().map(|s| s[0]), false),
        yr: span(states.iter().map(|s| s[2]), false),
    };
    let pts: Vec<String> = states
        .iter()
        .map(|s| format!("{},{}", fmt(f.x(s[0])), fmt(f.y(s[2]))))
        .collect();
    Document::new()
        .set("viewBox", (0, 0, 500, 430))
        .set("width", 500)
        .set("height", 430)
        .add(Rectangle::new().set("width", 500).set("height", 430).set("fill", "white"))
        .add(axes(&f, "x", "z", 4))
        .add(
            Polyline::new()
                .set("points", pts.join(" "))
                .set("fill", "none")
                .set("stroke", PALETTE[0])
                .set("stroke-width", 0.6),
        )
        .to_string()
}
