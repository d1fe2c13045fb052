//! Standalone SVG charts for reports: signed residual bars, the cumulative
//! POTH line and score bars.
//!
//! Every chart is 800×500 px. The plotting area leaves 70 px on the left
//! for the y axis, 30 px on the right, 50 px on top for the title and
//! 90 px at the bottom for rotated treatment labels.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::report::HierarchyReport;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 500.0;
pub const MARGIN_LEFT: f64 = 70.0;
pub const MARGIN_RIGHT: f64 = 30.0;
pub const MARGIN_TOP: f64 = 50.0;
pub const MARGIN_BOTTOM: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Residuals,
    Cumulative,
    Scores,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "residuals" => Ok(PlotKind::Residuals),
            "cumulative" => Ok(PlotKind::Cumulative),
            "scores" => Ok(PlotKind::Scores),
            other => Err(Error::Parse(format!("unknown plot kind `{other}`"))),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn plot_w() -> f64 {
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    }

    fn plot_h() -> f64 {
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    }

    fn y(&self, v: f64) -> f64 {
        MARGIN_TOP + (self.y_max - v) / (self.y_max - self.y_min) * Self::plot_h()
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn y_axis(out: &mut String, frame: &Frame, ticks: &[f64], label: &str) {
    let x = MARGIN_LEFT;
    let _ = writeln!(
        out,
        r#"<line class="axis" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
        frame.y(frame.y_max),
        frame.y(frame.y_min)
    );
    for &t in ticks {
        let y = frame.y(t);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{t:.2}</text>"#,
            x - 5.0,
            x - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 18 {:.2})">{}</text>"#,
        MARGIN_TOP + Frame::plot_h() / 2.0,
        MARGIN_TOP + Frame::plot_h() / 2.0,
        escape(label)
    );
}

fn x_axis(out: &mut String, y: f64) {
    let _ = writeln!(
        out,
        r#"<line class="axis" x1="{MARGIN_LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#,
        WIDTH - MARGIN_RIGHT
    );
}

fn category_label(out: &mut String, x: f64, text: &str) {
    let y = HEIGHT - MARGIN_BOTTOM + 14.0;
    let _ = writeln!(
        out,
        r#"<text x="{x:.2}" y="{y:.2}" text-anchor="end" font-size="11" transform="rotate(-45 {x:.2} {y:.2})">{}</text>"#,
        escape(text)
    );
}

fn bars(out: &mut String, frame: &Frame, series: &[(String, f64)], base: f64, fill: &str) {
    let slot = Frame::plot_w() / series.len() as f64;
    let width = slot * 0.6;
    let base_y = frame.y(base);
    for (i, (label, v)) in series.iter().enumerate() {
        let cx = MARGIN_LEFT + slot * (i as f64 + 0.5);
        let top = frame.y(*v).min(base_y);
        let h = (frame.y(*v) - base_y).abs();
        let _ = writeln!(
            out,
            r#"<rect class="bar" x="{:.2}" y="{top:.2}" width="{width:.2}" height="{h:.2}" fill="{fill}"><title>{}: {v:.4}</title></rect>"#,
            cx - width / 2.0,
            escape(label)
        );
        category_label(out, cx, label);
    }
}

fn residual_chart(report: &HierarchyReport) -> Result<String> {
    let series = report
        .residual_series()
        .ok_or(Error::MissingSeries("residuals"))?;
    let peak = series.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let bound = ((peak.max(0.05)) * 10.0).ceil() / 10.0;
    let frame = Frame {
        y_min: -bound,
        y_max: bound,
    };
    let mut out = String::new();
    header(&mut out, &format!("POTH residuals (POTH = {:.3})", report.poth));
    let ticks: Vec<f64> = (0..=4).map(|i| -bound + bound * 0.5 * f64::from(i)).collect();
    y_axis(&mut out, &frame, &ticks, "POTH residual");
    x_axis(&mut out, frame.y(0.0));
    bars(&mut out, &frame, &series, 0.0, "#4c72b0");
    out.push_str("</svg>\n");
    Ok(out)
}

fn cumulative_chart(report: &HierarchyReport) -> Result<String> {
    let values = report
        .cumulative
        .as_ref()
        .ok_or(Error::MissingSeries("cumulative"))?;
    let frame = Frame {
        y_min: 0.0,
        y_max: 1.0,
    };
    let mut out = String::new();
    header(&mut out, "Cumulative POTH for the best k treatments");
    let ticks: Vec<f64> = (0..=5).map(|i| f64::from(i) * 0.2).collect();
    y_axis(&mut out, &frame, &ticks, "cPOTH");
    x_axis(&mut out, frame.y(0.0));
    let slot = Frame::plot_w() / values.len() as f64;
    let points: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .map(|(i, v)| (MARGIN_LEFT + slot * (i as f64 + 0.5), frame.y(*v)))
        .collect();
    let path: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let _ = writeln!(
        out,
        r##"<polyline points="{}" fill="none" stroke="#c44e52" stroke-width="2"/>"##,
        path.join(" ")
    );
    for (i, ((x, y), v)) in points.iter().zip(values).enumerate() {
        let k = i + 2;
        let _ = writeln!(
            out,
            r##"<circle class="marker" cx="{x:.2}" cy="{y:.2}" r="4" fill="#c44e52"><title>k = {k}: {v:.4}</title></circle>"##
        );
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{k}</text>"#,
            HEIGHT - MARGIN_BOTTOM + 16.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">k</text>"#,
        MARGIN_LEFT + Frame::plot_w() / 2.0,
        HEIGHT - MARGIN_BOTTOM + 40.0
    );
    out.push_str("</svg>\n");
    Ok(out)
}

fn score_chart(report: &HierarchyReport) -> Result<String> {
    let series = report.score_series();
    if series.is_empty() {
        return Err(Error::MissingSeries("scores"));
    }
    let frame = Frame {
        y_min: 0.0,
        y_max: 1.0,
    };
    let mut out = String::new();
    let name = match report.kind {
        crate::ranking::ScoreKind::Sucra => "SUCRA",
        crate::ranking::ScoreKind::Pscore => "P-score",
    };
    header(&mut out, &format!("{name} by treatment (POTH = {:.3})", report.poth));
    let ticks: Vec<f64> = (0..=5).map(|i| f64::from(i) * 0.2).collect();
    y_axis(&mut out, &frame, &ticks, name);
    x_axis(&mut out, frame.y(0.0));
    bars(&mut out, &frame, &series, 0.0, "#55a868");
    out.push_str("</svg>\n");
    Ok(out)
}

/// Renders `kind` for `report`. Fails when the report lacks the series.
pub fn render(report: &HierarchyReport, kind: PlotKind) -> Result<String> {
    match kind {
        PlotKind::Residuals => residual_chart(report),
        PlotKind::Cumulative => cumulative_chart(report),
        PlotKind::Scores => score_chart(report),
    }
}
