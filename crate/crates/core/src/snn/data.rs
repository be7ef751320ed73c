use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::STATE_DIM;
use super::train::TrainConfig;
use crate::dynamics::{lorenz_trajectory, LorenzParams};
use crate::error::{Error, Result};

/// One-step-ahead prediction window: `targets[t]` is the state after `inputs[t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub inputs: Vec<[f64; STATE_DIM]>,
    pub targets: Vec<[f64; STATE_DIM]>,
}

impl Window {
    /// Builds a window from `horizon + 1` consecutive states.
    pub fn from_states(states: &[[f64; STATE_DIM]]) -> Self {
        Self {
            inputs: states[..states.len() - 1].to_vec(),
            targets: states[1..].to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: [f64; STATE_DIM],
    pub std: [f64; STATE_DIM],
}

impl Normalizer {
    pub fn fit(states: &[[f64; STATE_DIM]]) -> Self {
        let n = states.len() as f64;
        let mut mean = [0.0; STATE_DIM];
        let mut std = [0.0; STATE_DIM];
        for d in 0..STATE_DIM {
            mean[d] = states.iter().map(|s| s[d]).sum::<f64>() / n;
            let var = states.iter().map(|s| (s[d] - mean[d]).powi(2)).sum::<f64>() / n;
            std[d] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Self { mean, std }
    }

    pub fn apply(&self, s: [f64; STATE_DIM]) -> [f64; STATE_DIM] {
        std::array::from_fn(|d| (s[d] - self.mean[d]) / self.std[d])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LorenzDataset {
    pub train: Vec<Window>,
    pub val: Vec<Window>,
    pub test: Vec<Window>,
    pub normalizer: Normalizer,
}

/// Runs one long Lorenz trajectory, drops the transient, slices it into
/// disjoint windows of `horizon + 1` states, shuffles them with the config
/// seed and splits train/validation/test. States are z-scored with
/// statistics of the training windows.
pub fn lorenz_dataset(lorenz: &LorenzParams, cfg: &TrainConfig) -> Result<LorenzDataset> {
    cfg.validate()?;
    let total = cfg.train_windows + cfg.val_windows + cfg.test_windows;
    if total == 0 {
        return Err(Error::InvalidParameter("dataset has no windows".into()));
    }
    let span = cfg.horizon + 1;
    let params = LorenzParams {
        steps: cfg.transient + total * span,
        ..lorenz.clone()
    };
    let traj = lorenz_trajectory(&params)?;
    let body = &traj[cfg.transient + 1..];
    let mut chunks: Vec<&[[f64; STATE_DIM]]> = body.chunks_exact(span).take(total).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    chunks.shuffle(&mut rng);

    let (train, rest) = chunks.split_at(cfg.train_windows);
    let (val, test) = rest.split_at(cfg.val_windows);
    let fit_on: Vec<[f64; STATE_DIM]> = if train.is_empty() {
        body.to_vec()
    } else {
        train.iter().flat_map(|c| c.iter().copied()).collect()
    };
    let normalizer = Normalizer::fit(&fit_on);
    let to_windows = |cs: &[&[[f64; STATE_DIM]]]| -> Vec<Window> {
        cs.iter()
            .map(|c| {
                let z: Vec<_> = c.iter().map(|s| normalizer.apply(*s)).collect();
                Window::from_states(&z)
            })
            .collect()
    };
    Ok(LorenzDataset {
        train: to_windows(train),
        val: to_windows(val),
        test: to_windows(test),
        normalizer: normalizer.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> TrainConfig {
        TrainConfig {
            horizon: 20,
            train_windows: 6,
            val_windows: 2,
            test_windows: 3,
            transient: 100,
            ..Default::default()
        }
    }

    #[test]
    fn split_sizes_and_shapes() {
        let d = lorenz_dataset(&LorenzParams::default(), &cfg()).unwrap();
        assert_eq!((d.train.len(), d.val.len(), d.test.len()), (6, 2, 3));
        assert!(d.train.iter().all(|w| w.len() == 20));
        // teacher forcing: next input is the previous target
        let w = &d.test[0];
        assert_eq!(w.inputs[1], w.targets[0]);
    }

    #[test]
    fn training_windows_are_z_scored() {
        let d = lorenz_dataset(&LorenzParams::default(), &cfg()).unwrap();
        let xs: Vec<f64> = d
            .train
            .iter()
            .flat_map(|w| w.inputs.iter().chain(w.targets.last()).map(|s| s[0]))
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 1e-9);
    }

    #[test]
    fn deterministic() {
        let a = lorenz_dataset(&LorenzParams::default(), &cfg()).unwrap();
        let b = lorenz_dataset(&LorenzParams::default(), &cfg()).unwrap();
        assert_eq!(a, b);
    }
}
