use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::Window;
use super::model::{SnnModel, STATE_DIM};
use super::network::{forward, free_run, SpikeFn};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub mse: f64,
    /// `None` when the targets have zero variance.
    pub r2: Option<f64>,
    /// `None` when predictions or targets have zero variance.
    pub corr: Option<f64>,
    pub spikes_per_sample: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    #[default]
    TeacherForced,
    /// Only the first input of each window is used; later inputs are the
    /// model's own predictions.
    FreeRunning,
}

/// Pooled regression metrics over flattened `(prediction, target)` pairs.
pub fn regression_metrics(pairs: &[(f64, f64)]) -> (f64, Option<f64>, Option<f64>) {
    let n = pairs.len() as f64;
    let mean_t = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mean_p = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let (mut ss_res, mut ss_tot, mut ss_p, mut cov) = (0.0, 0.0, 0.0, 0.0);
    for &(p, t) in pairs {
        ss_res += (p - t).powi(2);
        ss_tot += (t - mean_t).powi(2);
        ss_p += (p - mean_p).powi(2);
        cov += (p - mean_p) * (t - mean_t);
    }
    let mse = ss_res / n;
    let r2 = (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot);
    let corr = (ss_tot > 0.0 && ss_p > 0.0).then(|| (cov / (ss_p * ss_tot).sqrt()).clamp(-1.0, 1.0));
    (mse, r2, corr)
}

/// Evaluates without touching the model. Samples run in parallel; the
/// pooled sums are reduced in sample order.
pub fn evaluate(m: &SnnModel, windows: &[Window], mode: EvalMode) -> Result<EvalMetrics> {
    if windows.is_empty() {
        return Err(Error::InvalidParameter("evaluation set is empty".into()));
    }
    let outs = windows
        .par_iter()
        .map(|w| match mode {
            EvalMode::TeacherForced => forward(m, &w.inputs, SpikeFn::Heaviside),
            EvalMode::FreeRunning => free_run(m, w.inputs[0], w.len()),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::with_capacity(windows.len() * windows[0].len() * STATE_DIM);
    let mut spikes = 0.0;
    for (w, o) in windows.iter().zip(&outs) {
        for (p, t) in o.predictions.iter().zip(&w.targets) {
            pairs.extend(p.iter().copied().zip(t.iter().copied()));
        }
        spikes += o.total_spikes;
    }
    let (mse, r2, corr) = regression_metrics(&pairs);
    Ok(EvalMetrics {
        mse,
        r2,
        corr,
        spikes_per_sample: spikes / windows.len() as f64,
        samples: windows.len(),
    })
}

/// Pooled MSE only (used inside the training loop).
pub fn mean_squared_error(m: &SnnModel, windows: &[Window]) -> Result<f64> {
    evaluate(m, windows, EvalMode::TeacherForced).map(|e| e.mse)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictor() {
        let pairs: Vec<_> = [1.0, 2.0, -3.0, 0.5].iter().map(|&v| (v, v)).collect();
        let (mse, r2, corr) = regression_metrics(&pairs);
        assert_eq!(mse, 0.0);
        assert_eq!(r2, Some(1.0));
        assert!((corr.unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mean_predictor_has_zero_r2() {
        let t = [1.0, 2.0, 3.0, 6.0];
        let pairs: Vec<_> = t.iter().map(|&v| (3.0, v)).collect();
        let (mse, r2, corr) = regression_metrics(&pairs);
        assert_eq!(r2, Some(0.0));
        assert_eq!(corr, None);
        assert_eq!(mse, (4.0 + 1.0 + 0.0 + 9.0) / 4.0);
    }

    #[test]
    fn hand_computed_two_sample_case() {
        // two samples x one step x three dims, flattened:
        // targets     [1, 0, 2,  3, 1, -1]
        // predictions [1, 1, 1,  2, 1,  0]
        let t = [1.0, 0.0, 2.0, 3.0, 1.0, -1.0];
        let p = [1.0, 1.0, 1.0, 2.0, 1.0, 0.0];
        let pairs: Vec<_> = p.iter().copied().zip(t.iter().copied()).collect();
        let (mse, r2, corr) = regression_metrics(&pairs);
        // residuals 0,-1,1,1,0,-1 -> SS_res = 4, MSE = 4/6
        assert!((mse - 4.0 / 6.0).abs() < 1e-15);
        // mean target 1 -> SS_tot = 0+1+1+4+0+4 = 10
        assert!((r2.unwrap() - 0.6).abs() < 1e-15);
        // mean prediction 1 -> dp = 0,0,0,1,0,-1 ; dt = 0,-1,1,2,0,-2
        // cov = 2 + 2 = 4 ; ss_p = 2 ; r = 4 / sqrt(2 * 10)
        assert!((corr.unwrap() - 4.0 / 20f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_variance_targets_flagged() {
        let pairs = vec![(0.1, 1.0), (0.2, 1.0)];
        let (_, r2, corr) = regression_metrics(&pairs);
        assert_eq!(r2, None);
        assert_eq!(corr, None);
    }
}
