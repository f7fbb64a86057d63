//! Report rendering: JSON files, CSV tables for plotting and plain-text
//! summaries for the terminal.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nilm_core::cost::{CostReport, ResourceUsage};
use nilm_core::features::{FeatureLayout, FeatureVector};
use nilm_core::models::TrainedModel;
use nilm_core::pipeline::{outcome_label, Decision, Outcome};
use nilm_core::signal::{LabelTrack, SwitchAction};
use nilm_core::train::{Evaluation, MdaReport, SweepReport};
use serde::Serialize;

use crate::{FileError, Result};

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| FileError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value).expect("reports serialize");
    write_text(path, &(json + "\n"))
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 fields")
}

/// `window,<feature names…>`, one row per window.
pub fn features_csv(features: &[FeatureVector], layout: &FeatureLayout) -> String {
    let header: Vec<&str> = std::iter::once("window").chain(layout.names()).collect();
    csv_bytes(
        &header,
        features
            .iter()
            .map(|f| std::iter::once(f.window_index.to_string()).chain(f.values.iter().map(f64::to_string))),
    )
}

/// `window,active,toggled`; ids joined with `+`, toggles as `id:on`.
pub fn label_track_csv(labels: &LabelTrack) -> String {
    csv_bytes(
        &["window", "active", "toggled"],
        labels.windows.iter().enumerate().map(|(j, w)| {
            let toggled: Vec<String> = w
                .toggled
                .iter()
                .map(|(id, a)| format!("{id}:{}", if *a == SwitchAction::On { "on" } else { "off" }))
                .collect();
            [j.to_string(), w.active_label(), toggled.join("+")]
        }),
    )
}

/// Event log: `window_index,delta_p_w,direction,valid,label`.
pub fn event_log_csv(decisions: &[Decision], model: &TrainedModel) -> String {
    csv_bytes(
        &["window_index", "delta_p_w", "direction", "valid", "label"],
        decisions.iter().map(|d| {
            [
                d.event.window_index.to_string(),
                d.event.delta_p_w.to_string(),
                d.event.direction.as_str().to_string(),
                (d.outcome != Outcome::Invalid).to_string(),
                outcome_label(model, d.outcome),
            ]
        }),
    )
}

/// One row per sweep point, for accuracy/MAC/Flash trade-off plots.
pub fn sweep_csv(report: &SweepReport) -> String {
    let header = [
        "feature_count",
        "accuracy",
        "precision",
        "recall",
        "classification_mac",
        "classification_cycles",
        "extraction_cycles",
        "total_cycles",
        "flash_bytes",
        "sram_bytes",
        "fits_budget",
        "chosen",
    ];
    csv_bytes(
        &header,
        report.points.iter().enumerate().map(|(k, p)| {
            let c = &p.cost;
            [
                p.feature_count.to_string(),
                p.accuracy.to_string(),
                p.precision.to_string(),
                p.recall.to_string(),
                c.classification.mac.to_string(),
                c.classification.cycles.to_string(),
                c.extraction.cycles.to_string(),
                c.total.cycles.to_string(),
                c.total.flash_bytes.to_string(),
                c.total.sram_bytes.to_string(),
                c.verdict.fits().to_string(),
                (k == report.chosen).to_string(),
            ]
        }),
    )
}

/// `rank,feature,name,importance`.
pub fn mda_csv(report: &MdaReport) -> String {
    csv_bytes(
        &["rank", "feature", "name", "importance"],
        report.ranking.iter().enumerate().map(|(r, &k)| {
            [
                (r + 1).to_string(),
                k.to_string(),
                report.feature_names.get(k).cloned().unwrap_or_default(),
                report.importances[k].to_string(),
            ]
        }),
    )
}

fn usage_row(out: &mut String, name: &str, u: &ResourceUsage) {
    let _ = writeln!(
        out,
        "{name:<16}{:>14}{:>14}{:>14}{:>14}",
        u.mac, u.cycles, u.flash_bytes, u.sram_bytes
    );
}

pub fn cost_table(report: &CostReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "profile: {}", report.profile);
    let _ = writeln!(out, "{:<16}{:>14}{:>14}{:>14}{:>14}", "stage", "MAC", "cycles", "flash B", "SRAM B");
    usage_row(&mut out, "extraction", &report.extraction);
    usage_row(&mut out, "classification", &report.classification);
    usage_row(&mut out, "total", &report.total);
    let v = &report.verdict;
    let mark = |ok: bool| if ok { "fits" } else { "OVER" };
    let _ = writeln!(out, "cycles: {} (margin {})", mark(v.fits_cycles), v.cycles_margin);
    let _ = writeln!(out, "flash:  {} (margin {} B)", mark(v.fits_flash), v.flash_margin_bytes);
    let _ = writeln!(out, "sram:   {} (margin {} B)", mark(v.fits_sram), v.sram_margin_bytes);
    out
}

pub fn metrics_text(e: &Evaluation, classes: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "accuracy {:.4}  precision {:.4}  recall {:.4}",
        e.accuracy, e.precision, e.recall
    );
    let width = classes.iter().map(String::len).max().unwrap_or(0).max(5);
    let _ = write!(out, "{:>width$}", "truth");
    for c in 0..classes.len() {
        let _ = write!(out, "{c:>6}");
    }
    out.push('\n');
    for (c, row) in e.confusion.counts().iter().enumerate() {
        let _ = write!(out, "{:>width$}", classes[c]);
        for n in row {
            let _ = write!(out, "{n:>6}");
        }
        out.push('\n');
    }
    out
}

pub fn sweep_text(report: &SweepReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>4}{:>10}{:>12}{:>12}{:>6}", "m", "accuracy", "cycles", "flash B", "fits");
    for (k, p) in report.points.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>4}{:>10.4}{:>12}{:>12}{:>6}{}",
            p.feature_count,
            p.accuracy,
            p.cost.total.cycles,
            p.cost.total.flash_bytes,
            if p.cost.verdict.fits() { "yes" } else { "no" },
            if k == report.chosen { "  <- chosen" } else { "" }
        );
    }
    let c = report.chosen_point();
    let _ = writeln!(
        out,
        "chosen: {} features ({}), max accuracy {:.4}{}",
        c.feature_count,
        if report.feasible { "fits the budget" } else { "no point within tolerance fits the budget" },
        report.max_accuracy,
        if report.overfitting_dip { ", full vector dips below tolerance" } else { "" }
    );
    out
}
