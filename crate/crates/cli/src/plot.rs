//! Two-panel SVG line charts: a utility metric next to the log-scale
//! violation rate.

use std::fmt::Write;

use seditor_core::harness::MetricsRow;

/// Display floor for zero violation rates on the log axis.
pub const LOG_FLOOR: f64 = 1e-6;

const COLORS: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 280.0;
const MARGIN: f64 = 50.0;

pub struct Series<'a> {
    pub label: String,
    pub rows: &'a [MetricsRow],
}

#[derive(Clone, Copy)]
pub enum Metric {
    SuccessRate,
    Return,
}

impl Metric {
    fn title(self) -> &'static str {
        match self {
            Metric::SuccessRate => "success rate",
            Metric::Return => "mean episode return",
        }
    }

    fn pick(self, r: &MetricsRow) -> f64 {
        match self {
            Metric::SuccessRate => r.success_rate,
            Metric::Return => r.mean_episode_return,
        }
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            let v = if log { v.max(LOG_FLOOR).log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Self { lo, hi, log }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.max(LOG_FLOOR).log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn label(&self, f: f64) -> String {
        let v = self.lo + f * (self.hi - self.lo);
        if self.log {
            format!("1e{v:.1}")
        } else {
            format!("{v:.3}")
        }
    }
}

fn panel(
    out: &mut String,
    x0: f64,
    title: &str,
    series: &[Series<'_>],
    pick: &dyn Fn(&MetricsRow) -> f64,
    log: bool,
    hline: Option<f64>,
) {
    let xs = Axis::fit(series.iter().flat_map(|s| s.rows.iter().map(|r| r.env_steps as f64)), false);
    let ys = Axis::fit(
        series
            .iter()
            .flat_map(|s| s.rows.iter().map(pick))
            .chain(hline),
        log,
    );
    let px = |v: f64| x0 + MARGIN + xs.frac(v) * (PANEL_W - 1.5 * MARGIN);
    let py = |v: f64| MARGIN + (1.0 - ys.frac(v)) * (PANEL_H - 2.0 * MARGIN);
    let (left, right) = (x0 + MARGIN, x0 + PANEL_W - 0.5 * MARGIN);
    let (top, bottom) = (MARGIN, PANEL_H - MARGIN);
    let _ = writeln!(
        out,
        r##"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
        right - left,
        bottom - top
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{title}</text>"#,
        (left + right) / 2.0,
        top - 12.0
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let y = bottom - f * (bottom - top);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{}</text>"#,
            left - 4.0,
            y + 3.0,
            ys.label(f)
        );
        let x = left + f * (right - left);
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"#,
            bottom + 14.0,
            xs.label(f)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11">env steps</text>"#,
        (left + right) / 2.0,
        bottom + 30.0
    );
    if let Some(c) = hline {
        let y = py(c);
        let _ = writeln!(
            out,
            r##"<line class="target" x1="{left:.2}" y1="{y:.2}" x2="{right:.2}" y2="{y:.2}" stroke="#000" stroke-dasharray="6,4"/>"##
        );
    }
    for (k, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .rows
            .iter()
            .filter(|r| pick(r).is_finite())
            .map(|r| format!("{:.2},{:.2}", px(r.env_steps as f64), py(pick(r))))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            COLORS[k % COLORS.len()],
            pts.join(" ")
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// `metric` on the left panel, violation rate (log axis, dashed line at
/// `target`) on the right, one legend entry per series.
pub fn render(metric: Metric, series: &[Series<'_>], target: Option<f64>) -> String {
    let legend_h = 18.0 * series.len() as f64 + 10.0;
    let (w, h) = (2.0 * PANEL_W, PANEL_H + legend_h);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    panel(&mut out, 0.0, metric.title(), series, &|r| metric.pick(r), false, None);
    panel(
        &mut out,
        PANEL_W,
        "violation rate (log scale)",
        series,
        &|r| r.violation_rate,
        true,
        target,
    );
    for (k, s) in series.iter().enumerate() {
        let y = PANEL_H + 14.0 + 18.0 * k as f64;
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(
            out,
            r#"<g class="legend"><line x1="{MARGIN}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="3"/><text x="{:.2}" y="{:.2}" font-size="12">{}</text></g>"#,
            MARGIN + 24.0,
            MARGIN + 30.0,
            y + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}
