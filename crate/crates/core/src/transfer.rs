//! Degradation scores over accuracy sweeps.
//!
//! A sweep table lists `(model, condition, accuracy)` rows, accuracy in
//! percent. For a budget sweep the condition is the fraction of inference
//! budget kept, with reference `1.0`; for a noise sweep it is the noise
//! standard deviation, with reference `0.0`. Both scores are the mean
//! accuracy drop per unit of condition change, so smaller means slower
//! degradation.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Budget sweep shipped with the crate.
pub const BUNDLED_BUDGET_SWEEP: &str = include_str!("../fixtures/budget_sweep.csv");
/// Noise sweep shipped with the crate.
pub const BUNDLED_NOISE_SWEEP: &str = include_str!("../fixtures/noise_sweep.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Budget,
    Noise,
}

impl SweepKind {
    pub fn reference(self) -> f64 {
        match self {
            SweepKind::Budget => 1.0,
            SweepKind::Noise => 0.0,
        }
    }

    fn admits(self, c: f64) -> bool {
        match self {
            SweepKind::Budget => c > 0.0 && c <= 1.0,
            SweepKind::Noise => c >= 0.0 && c.is_finite(),
        }
    }
}

impl std::str::FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "budget" => Ok(SweepKind::Budget),
            "noise" => Ok(SweepKind::Noise),
            other => Err(Error::InvalidParameter(format!(
                "sweep kind must be `budget` or `noise`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub model: String,
    pub condition: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub sweep_kind: SweepKind,
    pub rows: Vec<AccuracyRow>,
}

impl AccuracyTable {
    /// Validates ranges, uniqueness of `(model, condition)` and the presence
    /// of a reference row for every model.
    pub fn new(sweep_kind: SweepKind, rows: Vec<AccuracyRow>) -> Result<Self> {
        let mut seen = BTreeMap::<&str, Vec<f64>>::new();
        for r in &rows {
            if !sweep_kind.admits(r.condition) {
                return Err(Error::Table(format!(
                    "condition {} out of range for a {:?} sweep (model {})",
                    r.condition, sweep_kind, r.model
                )));
            }
            if !(0.0..=100.0).contains(&r.accuracy) {
                return Err(Error::Table(format!(
                    "accuracy {} out of range [0, 100] (model {}, condition {})",
                    r.accuracy, r.model, r.condition
                )));
            }
            let conds = seen.entry(&r.model).or_default();
            if conds.contains(&r.condition) {
                return Err(Error::Table(format!(
                    "duplicate row for model {} at condition {}",
                    r.model, r.condition
                )));
            }
            conds.push(r.condition);
        }
        for (model, conds) in &seen {
            if !conds.contains(&sweep_kind.reference()) {
                return Err(Error::Table(format!(
                    "missing reference condition {} for model {model}",
                    sweep_kind.reference()
                )));
            }
        }
        Ok(Self { sweep_kind, rows })
    }

    pub fn from_csv_str(text: &str, sweep_kind: SweepKind) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = rdr
            .headers()
            .map_err(|e| Error::parse("accuracy table", e))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["model", "condition", "accuracy"] {
            return Err(Error::parse(
                "accuracy table",
                "header must be `model,condition,accuracy`",
            ));
        }
        let rows = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<AccuracyRow>, _>>()
            .map_err(|e| Error::parse("accuracy table", e))?;
        Self::new(sweep_kind, rows)
    }

    /// Models in first-appearance order.
    pub fn models(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.model.as_str()) {
                out.push(&r.model);
            }
        }
        out
    }

    /// `(condition, accuracy)` for one model, sorted by condition.
    pub fn curve(&self, model: &str) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.model == model)
            .map(|r| (r.condition, r.accuracy))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts
    }
}

pub fn load_accuracy_table(path: impl AsRef<Path>, sweep_kind: SweepKind) -> Result<AccuracyTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    AccuracyTable::from_csv_str(&text, sweep_kind)
}

pub fn bundled_table(sweep_kind: SweepKind) -> AccuracyTable {
    let text = match sweep_kind {
        SweepKind::Budget => BUNDLED_BUDGET_SWEEP,
        SweepKind::Noise => BUNDLED_NOISE_SWEEP,
    };
    AccuracyTable::from_csv_str(text, sweep_kind).expect("bundled table is valid")
}

/// Mean of `(Acc(ref) − Acc(c)) / |ref − c|` over non-reference conditions.
fn degradation(t: &AccuracyTable, model: &str, kind: SweepKind) -> Result<f64> {
    if t.sweep_kind != kind {
        return Err(Error::InvalidParameter(format!(
            "expected a {kind:?} table, got {:?}",
            t.sweep_kind
        )));
    }
    let curve = t.curve(model);
    if curve.is_empty() {
        return Err(Error::Table(format!("no rows for model {model}")));
    }
    let reference = kind.reference();
    let acc_ref = curve
        .iter()
        .find(|p| p.0 == reference)
        .map(|p| p.1)
        .ok_or_else(|| Error::Table(format!("missing reference condition {reference} for model {model}")))?;
    let terms: Vec<f64> = curve
        .iter()
        .filter(|p| p.0 != reference)
        .map(|&(c, acc)| (acc_ref - acc) / (reference - c).abs())
        .collect();
    if terms.is_empty() {
        return Err(Error::Table(format!(
            "model {model} has no rows besides the reference condition"
        )));
    }
    Ok(terms.iter().sum::<f64>() / terms.len() as f64)
}

/// `S_c = mean over b < 1 of (Acc(1) − Acc(b)) / (1 − b)`.
pub fn budget_degradation_score(t: &AccuracyTable, model: &str) -> Result<f64> {
    degradation(t, model, SweepKind::Budget)
}

/// `S_n = mean over σ > 0 of (Acc(0) − Acc(σ)) / σ`.
pub fn noise_degradation_score(t: &AccuracyTable, model: &str) -> Result<f64> {
    degradation(t, model, SweepKind::Noise)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub model: String,
    pub score: f64,
}

/// Score of every model in the table, in first-appearance order.
pub fn score_all(t: &AccuracyTable) -> Result<Vec<ModelScore>> {
    t.models()
        .into_iter()
        .map(|m| {
            Ok(ModelScore {
                model: m.to_string(),
                score: degradation(t, m, t.sweep_kind)?,
            })
        })
        .collect()
}
