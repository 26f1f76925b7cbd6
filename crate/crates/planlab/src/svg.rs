//! Minimal self-contained SVG line charts.
//!
//! Every experiment figure is a handful of series with optional confidence
//! intervals, so one renderer covers them all: inline styles, no external
//! assets, axes with tick labels, a legend, and vertical error bars. The
//! x-axis can be switched to a log scale for sample-size sweeps.

use std::fmt::Write;

use crate::error::{Error, Result};

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 48.0;
const MARGIN_BOTTOM: f64 = 64.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// One chart point. When both CI bounds are present an error bar is drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint {
    pub x: f64,
    pub y: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

impl ChartPoint {
    pub fn plain(x: f64, y: f64) -> Self {
        Self {
            x,
            y,
            ci_low: None,
            ci_high: None,
        }
    }

    pub fn with_ci(x: f64, y: f64, ci_low: f64, ci_high: f64) -> Self {
        Self {
            x,
            y,
            ci_low: Some(ci_low),
            ci_high: Some(ci_high),
        }
    }
}

/// A labelled line with markers.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartSeries {
    pub label: String,
    pub points: Vec<ChartPoint>,
}

/// Chart frame: title, axis labels, and x-scale choice.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartConfig {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
}

/// Escape the five XML-reserved characters for use in text nodes and
/// attribute values.
pub fn escape_xml(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            other => out.push(other),
        }
    }
    out
}

/// Evenly spaced ticks over `[lo, hi]` snapped to a 1/2/5 decade step.
fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw_step = span / 5.0;
    let magnitude = 10.0_f64.powf(raw_step.log10().floor());
    let residual = raw_step / magnitude;
    let step = if residual <= 1.0 {
        magnitude
    } else if residual <= 2.0 {
        2.0 * magnitude
    } else if residual <= 5.0 {
        5.0 * magnitude
    } else {
        10.0 * magnitude
    };
    let mut ticks = Vec::new();
    let mut tick = (lo / step).ceil() * step;
    while tick <= hi + step * 1e-9 {
        ticks.push(if tick.abs() < step * 1e-9 { 0.0 } else { tick });
        tick += step;
    }
    ticks
}

fn fmt_tick(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    let magnitude = value.abs();
    if !(1e-3..1e5).contains(&magnitude) {
        return format!("{value:.1e}");
    }
    let mut text = format!("{value:.4}");
    while text.contains('.') && (text.ends_with('0') || text.ends_with('.')) {
        text.pop();
    }
    text
}

struct Frame {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
    log_x: bool,
}

impl Frame {
    fn x_pos(&self, x: f64) -> f64 {
        let x = if self.log_x { x.log10() } else { x };
        MARGIN_LEFT
            + (x - self.x_lo) / (self.x_hi - self.x_lo) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y_pos(&self, y: f64) -> f64 {
        HEIGHT
            - MARGIN_BOTTOM
            - (y - self.y_lo) / (self.y_hi - self.y_lo) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

/// Render the chart to a complete standalone SVG document.
pub fn render_line_chart(config: &ChartConfig, series: &[ChartSeries]) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::invalid("chart needs at least one non-empty series"));
    }
    let points = series.iter().flat_map(|s| s.points.iter());
    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for p in points {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::invalid("chart points must be finite"));
        }
        if config.log_x && p.x <= 0.0 {
            return Err(Error::invalid(format!(
                "log x-axis requires positive x, got {}",
                p.x
            )));
        }
        x_lo = x_lo.min(p.x);
        x_hi = x_hi.max(p.x);
        y_lo = y_lo.min(p.ci_low.unwrap_or(p.y));
        y_hi = y_hi.max(p.ci_high.unwrap_or(p.y));
    }
    if x_lo == x_hi {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if y_lo == y_hi {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let y_pad = (y_hi - y_lo) * 0.06;
    let frame = Frame {
        x_lo: if config.log_x { x_lo.log10() } else { x_lo },
        x_hi: if config.log_x { x_hi.log10() } else { x_hi },
        y_lo: y_lo - y_pad,
        y_hi: y_hi + y_pad,
        log_x: config.log_x,
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"13\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"26\" text-anchor=\"middle\" font-size=\"16\">{}</text>",
        WIDTH / 2.0,
        escape_xml(&config.title)
    );

    let plot_left = MARGIN_LEFT;
    let plot_right = WIDTH - MARGIN_RIGHT;
    let plot_top = MARGIN_TOP;
    let plot_bottom = HEIGHT - MARGIN_BOTTOM;

    let x_ticks: Vec<f64> = if config.log_x {
        let mut values: Vec<f64> = series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.x))
            .collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        values
    } else {
        linear_ticks(frame.x_lo, frame.x_hi)
    };
    for &tick in &x_ticks {
        let x = frame.x_pos(tick);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.1}\" y1=\"{plot_top:.1}\" x2=\"{x:.1}\" y2=\"{plot_bottom:.1}\" \
             stroke=\"#e0e0e0\" stroke-width=\"1\"/>"
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            plot_bottom + 20.0,
            escape_xml(&fmt_tick(tick))
        );
    }
    for tick in linear_ticks(frame.y_lo, frame.y_hi) {
        let y = frame.y_pos(tick);
        let _ = writeln!(
            svg,
            "<line x1=\"{plot_left:.1}\" y1=\"{y:.1}\" x2=\"{plot_right:.1}\" y2=\"{y:.1}\" \
             stroke=\"#e0e0e0\" stroke-width=\"1\"/>"
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            plot_left - 8.0,
            y + 4.0,
            escape_xml(&fmt_tick(tick))
        );
    }
    let _ = writeln!(
        svg,
        "<rect x=\"{plot_left:.1}\" y=\"{plot_top:.1}\" width=\"{:.1}\" height=\"{:.1}\" \
         fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>",
        plot_right - plot_left,
        plot_bottom - plot_top
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        (plot_left + plot_right) / 2.0,
        HEIGHT - 18.0,
        escape_xml(&config.x_label)
    );
    let _ = writeln!(
        svg,
        "<text x=\"20\" y=\"{:.1}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 20 {:.1})\">{}</text>",
        (plot_top + plot_bottom) / 2.0,
        (plot_top + plot_bottom) / 2.0,
        escape_xml(&config.y_label)
    );

    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        for p in &s.points {
            if let (Some(lo), Some(hi)) = (p.ci_low, p.ci_high) {
                let x = frame.x_pos(p.x);
                let y_low = frame.y_pos(lo);
                let y_high = frame.y_pos(hi);
                let _ = writeln!(
                    svg,
                    "<line x1=\"{x:.1}\" y1=\"{y_low:.1}\" x2=\"{x:.1}\" y2=\"{y_high:.1}\" \
                     stroke=\"{color}\" stroke-width=\"1.2\"/>"
                );
                for cap in [y_low, y_high] {
                    let _ = writeln!(
                        svg,
                        "<line x1=\"{:.1}\" y1=\"{cap:.1}\" x2=\"{:.1}\" y2=\"{cap:.1}\" \
                         stroke=\"{color}\" stroke-width=\"1.2\"/>",
                        x - 4.0,
                        x + 4.0
                    );
                }
            }
        }
        let path: Vec<String> = s
            .points
            .iter()
            .map(|p| format!("{:.1},{:.1}", frame.x_pos(p.x), frame.y_pos(p.y)))
            .collect();
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>",
            path.join(" ")
        );
        for p in &s.points {
            let _ = writeln!(
                svg,
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>",
                frame.x_pos(p.x),
                frame.y_pos(p.y)
            );
        }
    }

    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let y = plot_top + 16.0 + 18.0 * idx as f64;
        let x = plot_right - 150.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"{color}\" stroke-width=\"1.8\"/>",
            x + 22.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            x + 28.0,
            y + 4.0,
            escape_xml(&s.label)
        );
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}
