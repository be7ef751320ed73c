use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::AblationRecord;
use crate::circuit::GroupConfig;

/// Error-increasing ablations sorted by `|ESI|` ascending (ties by name).
/// Smaller magnitude means more error per unit of spike change.
pub fn rank_esi(records: &[AblationRecord], exclude_input_ports: bool) -> Vec<AblationRecord> {
    let mut out: Vec<AblationRecord> = records
        .iter()
        .filter(|r| r.delta_mse > 0.0 && !(exclude_input_ports && r.is_input_port))
        .cloned()
        .collect();
    out.sort_by(|a, b| {
        a.esi
            .abs()
            .total_cmp(&b.esi.abs())
            .then_with(|| a.group.cmp(&b.group))
    });
    out
}

/// All records sorted by RSI descending (ties by name).
pub fn rank_rsi(records: &[AblationRecord]) -> Vec<AblationRecord> {
    let mut out = records.to_vec();
    out.sort_by(|a, b| match b.rsi.total_cmp(&a.rsi) {
        Ordering::Equal => a.group.cmp(&b.group),
        o => o,
    });
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub group: String,
    pub nodes: usize,
    /// Group members as listed in the group configuration.
    pub members: Vec<String>,
    /// ESI for the energy axis, RSI for the robustness axis.
    pub index: f64,
    pub delta_mse: f64,
    pub delta_spike_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualAxisReport {
    pub esi_ranking: Vec<AblationRecord>,
    /// ESI ranking without input-port groups.
    pub esi_ranking_internal: Vec<AblationRecord>,
    pub rsi_ranking: Vec<AblationRecord>,
    /// Ablations that lowered the error; listed, never ranked.
    pub error_decreasing: Vec<String>,
    pub energy_candidate: Option<Candidate>,
    /// Set when no internal ablation increased the error.
    pub energy_axis_note: Option<String>,
    pub robustness_candidate: Option<Candidate>,
    pub records: Vec<AblationRecord>,
}

fn candidate(r: &AblationRecord, gc: &GroupConfig, index: f64) -> Candidate {
    Candidate {
        group: r.group.clone(),
        nodes: r.nodes,
        members: gc.resolve(&r.group).map(|m| m.to_vec()).unwrap_or_default(),
        index,
        delta_mse: r.delta_mse,
        delta_spike_pct: r.delta_spike_pct,
    }
}

pub fn dual_axis_report(records: &[AblationRecord], gc: &GroupConfig) -> DualAxisReport {
    let esi_ranking = rank_esi(records, false);
    let esi_ranking_internal = rank_esi(records, true);
    let rsi_ranking = rank_rsi(records);
    let energy_candidate = esi_ranking_internal.first().map(|r| candidate(r, gc, r.esi));
    let energy_axis_note = energy_candidate.is_none().then(|| {
        "no internal ablation increased the prediction error; energy axis is empty".to_string()
    });
    let robustness_candidate = rsi_ranking.first().map(|r| candidate(r, gc, r.rsi));
    let mut error_decreasing: Vec<String> = records
        .iter()
        .filter(|r| r.delta_mse < 0.0)
        .map(|r| r.group.clone())
        .collect();
    error_decreasing.sort();
    DualAxisReport {
        esi_ranking,
        esi_ranking_internal,
        rsi_ranking,
        error_decreasing,
        energy_candidate,
        energy_axis_note,
        robustness_candidate,
        records: records.to_vec(),
    }
}

/// Markdown summary: both rankings followed by the headline candidates.
pub fn markdown_table(report: &DualAxisReport) -> String {
    let mut s = String::new();
    s.push_str("## ESI ranking (error-increasing ablations)\n\n");
    s.push_str("| Rank | Substructure | Nodes | 100 x ESI | dSpike % | dMSE % | Input port |\n");
    s.push_str("|---:|---|---:|---:|---:|---:|:---:|\n");
    for (k, r) in report.esi_ranking.iter().enumerate() {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {:.2} | {:.2} | {:.2} | {} |",
            k + 1,
            r.group,
            r.nodes,
            100.0 * r.esi,
            r.delta_spike_pct,
            r.delta_mse_pct,
            if r.is_input_port { "yes" } else { "" }
        );
    }
    s.push_str("\n## RSI ranking\n\n");
    s.push_str("| Rank | Substructure | Nodes | RSI | MSE after | dMSE |\n");
    s.push_str("|---:|---|---:|---:|---:|---:|\n");
    for (k, r) in report.rsi_ranking.iter().enumerate() {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {:.4} | {:.4} | {:+.4} |",
            k + 1,
            r.group,
            r.nodes,
            r.rsi,
            r.mse_after,
            r.delta_mse
        );
    }
    s.push_str("\n## Candidates\n\n");
    s.push_str("| Axis | Substructure | Nodes | Index |\n|---|---|---:|---:|\n");
    match &report.energy_candidate {
        Some(c) => {
            let _ = writeln!(s, "| Energy (ESI) | {} | {} | {:.4} |", c.group, c.nodes, c.index);
        }
        None => s.push_str("| Energy (ESI) | none | | |\n"),
    }
    if let Some(c) = &report.robustness_candidate {
        let _ = writeln!(s, "| Robustness (RSI) | {} | {} | {:.4} |", c.group, c.nodes, c.index);
    }
    if let Some(note) = &report.energy_axis_note {
        let _ = writeln!(s, "\n{note}");
    }
    if !report.error_decreasing.is_empty() {
        let _ = writeln!(
            s,
            "\nError-decreasing ablations (not ranked): {}",
            report.error_decreasing.join(", ")
        );
    }
    s
}
