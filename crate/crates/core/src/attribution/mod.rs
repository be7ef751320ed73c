//! Substructure ablation of a trained network and the two indices built on
//! it: the energy sensitivity index (spike change per unit of error change)
//! and the robustness sensitivity index (relative error increase).

mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{GroupConfig, Port};
use crate::error::{Error, Result};
use crate::snn::{evaluate, EvalMetrics, EvalMode, SnnModel, Window};

pub use report::{dual_axis_report, markdown_table, rank_esi, rank_rsi, Candidate, DualAxisReport};

/// Default denominator guard for [`esi`].
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// `ΔSpike% / (|ΔMSE%| + ε)`.
pub fn esi(delta_spike_pct: f64, delta_mse_pct: f64, epsilon: f64) -> f64 {
    delta_spike_pct / (delta_mse_pct.abs() + epsilon)
}

/// `(mse_after − mse_baseline) / mse_baseline`.
pub fn rsi(mse_after: f64, mse_baseline: f64) -> Result<f64> {
    if !(mse_baseline > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "baseline MSE must be positive, got {mse_baseline}"
        )));
    }
    Ok((mse_after - mse_baseline) / mse_baseline)
}

/// `100 · (after − before) / before`; zero when both are zero.
pub fn percent_change(after: f64, before: f64) -> Result<f64> {
    if before == 0.0 {
        if after == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::InvalidParameter(
            "relative change against a zero baseline".into(),
        ));
    }
    Ok(100.0 * (after - before) / before)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRecord {
    pub group: String,
    pub nodes: usize,
    pub mse_before: f64,
    pub mse_after: f64,
    pub spikes_before: f64,
    pub spikes_after: f64,
    pub delta_mse: f64,
    pub delta_mse_pct: f64,
    pub delta_spike_pct: f64,
    pub esi: f64,
    pub rsi: f64,
    pub is_input_port: bool,
}

impl AblationRecord {
    /// Fills the derived fields from the raw measurements.
    pub fn new(
        group: impl Into<String>,
        nodes: usize,
        is_input_port: bool,
        (mse_before, spikes_before): (f64, f64),
        (mse_after, spikes_after): (f64, f64),
        epsilon: f64,
    ) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        let delta_mse_pct = percent_change(mse_after, mse_before)?;
        let delta_spike_pct = percent_change(spikes_after, spikes_before)?;
        Ok(Self {
            group: group.into(),
            nodes,
            mse_before,
            mse_after,
            spikes_before,
            spikes_after,
            delta_mse: mse_after - mse_before,
            delta_mse_pct,
            delta_spike_pct,
            esi: esi(delta_spike_pct, delta_mse_pct, epsilon),
            rsi: rsi(mse_after, mse_before)?,
            is_input_port,
        })
    }

    /// Recomputes the derived fields and requires exact agreement.
    pub fn check(&self, epsilon: f64) -> Result<()> {
        let fresh = Self::new(
            self.group.clone(),
            self.nodes,
            self.is_input_port,
            (self.mse_before, self.spikes_before),
            (self.mse_after, self.spikes_after),
            epsilon,
        )?;
        if fresh != *self {
            return Err(Error::InvalidParameter(format!(
                "ablation record `{}` is not self-consistent",
                self.group
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationSweep {
    pub baseline: EvalMetrics,
    pub epsilon: f64,
    pub records: Vec<AblationRecord>,
}

/// Evaluates the intact model once, then every group with its nodes
/// disabled and their projections removed. Parameters are never retrained;
/// conditions run in parallel and come back in the order given.
pub fn run_ablation_sweep<S: AsRef<str> + Sync>(
    m: &SnnModel,
    gc: &GroupConfig,
    windows: &[Window],
    groups: &[S],
    epsilon: f64,
) -> Result<AblationSweep> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let baseline = evaluate(m, windows, EvalMode::TeacherForced)?;
    let resolved = groups
        .iter()
        .map(|g| {
            let g = g.as_ref();
            Ok((g, gc.indices(g, m.circuit())?, gc.port(g)? == Port::Input))
        })
        .collect::<Result<Vec<_>>>()?;
    let records = resolved
        .par_iter()
        .map(|(name, idx, is_input)| {
            let after = evaluate(&m.ablated(idx), windows, EvalMode::TeacherForced)
                .map_err(|e| e.in_stage(&format!("ablation of {name}")))?;
            let rec = AblationRecord::new(
                *name,
                idx.len(),
                *is_input,
                (baseline.mse, baseline.spikes_per_sample),
                (after.mse, after.spikes_per_sample),
                epsilon,
            )?;
            rec.check(epsilon)?;
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationSweep {
        baseline,
        epsilon,
        records,
    })
}
