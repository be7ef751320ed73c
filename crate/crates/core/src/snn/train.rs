use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::Window;
use super::metrics::mean_squared_error;
use super::model::{Params, SnnModel, STATE_DIM};
use super::network::{sse_and_grad, SpikeFn};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub horizon: usize,
    pub lr: f64,
    pub seed: u64,
    pub batch_size: usize,
    pub train_windows: usize,
    pub val_windows: usize,
    pub test_windows: usize,
    /// Lorenz steps discarded before slicing windows.
    pub transient: usize,
    /// Stop after this many optimizer updates.
    pub max_steps: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 60,
            horizon: 100,
            lr: 1e-3,
            seed: 42,
            batch_size: 1,
            train_windows: 48,
            val_windows: 12,
            test_windows: 24,
            transient: 1000,
            max_steps: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.horizon == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "epochs, horizon and batch_size must be >= 1".into(),
            ));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidParameter(format!("learning rate {}", self.lr)));
        }
        Ok(())
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Params,
    v: Params,
}

impl Adam {
    pub fn new(like: &Params, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: like.zeros_like(),
            v: like.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut Params, grad: &Params) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let groups = params
            .slices_mut()
            .into_iter()
            .zip(grad.slices())
            .zip(self.m.slices_mut().into_iter().zip(self.v.slices_mut()));
        for ((p, g), (m, v)) in groups {
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                p[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SnnModel,
    /// Entry 0 is the untrained model.
    pub history: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub selected_epoch: usize,
    pub updates: usize,
}

/// Mean-squared-error gradient over a batch; per-sample passes run in
/// parallel and are summed in batch order.
pub fn batch_gradient(m: &SnnModel, batch: &[&Window], spike_fn: SpikeFn) -> Result<(f64, Params)> {
    let parts = batch
        .par_iter()
        .map(|w| sse_and_grad(m, &w.inputs, &w.targets, spike_fn))
        .collect::<Result<Vec<_>>>()?;
    let count: usize = batch.iter().map(|w| w.len() * STATE_DIM).sum();
    let scale = 1.0 / count as f64;
    let mut grad = m.params.zeros_like();
    let mut sse = 0.0;
    for (s, g, _) in &parts {
        sse += s;
        grad.add_scaled(g, scale);
    }
    Ok((sse * scale, grad))
}

/// Keeps recurrent gains non-negative and off the zero cells of the circuit.
fn project(m: &mut SnnModel) {
    let n = m.n();
    let cm = m.circuit.matrix().clone();
    for (k, g) in m.params.gain.iter_mut().enumerate() {
        if cm[(k / n, k % n)] == 0.0 || *g < 0.0 {
            *g = 0.0;
        }
    }
}

/// Minibatch BPTT with the surrogate spike derivative and Adam.
///
/// After every epoch the train and validation MSE are measured; the
/// returned parameters are those with the lowest validation MSE among
/// epochs whose train MSE does not exceed the initial one (epoch 0, the
/// untrained model, always qualifies).
pub fn train(model: &SnnModel, cfg: &TrainConfig, train: &[Window], val: &[Window]) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidParameter("training set is empty".into()));
    }
    let score = |m: &SnnModel| -> Result<(f64, Option<f64>)> {
        let tr = mean_squared_error(m, train)?;
        let va = if val.is_empty() {
            None
        } else {
            Some(mean_squared_error(m, val)?)
        };
        Ok((tr, va))
    };

    let mut m = model.clone();
    let mut opt = Adam::new(&m.params, cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (train0, val0) = score(&m)?;
    let mut history = vec![EpochRecord {
        epoch: 0,
        train_mse: train0,
        val_mse: val0,
    }];
    let mut best = (val0.unwrap_or(train0), 0usize, m.params.clone());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut updates = 0usize;

    'epochs: for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            if cfg.max_steps.is_some_and(|k| updates >= k) {
                break 'epochs;
            }
            let batch: Vec<&Window> = chunk.iter().map(|&i| &train[i]).collect();
            let (loss, grad) = batch_gradient(&m, &batch, SpikeFn::Heaviside)
                .map_err(|_| Error::Diverged { epoch, loss: f64::NAN })?;
            if !loss.is_finite() || !grad.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            opt.step(&mut m.params, &grad);
            project(&mut m);
            updates += 1;
        }
        let (tr, va) = score(&m).map_err(|_| Error::Diverged { epoch, loss: f64::NAN })?;
        if !tr.is_finite() {
            return Err(Error::Diverged { epoch, loss: tr });
        }
        history.push(EpochRecord {
            epoch,
            train_mse: tr,
            val_mse: va,
        });
        let key = va.unwrap_or(tr);
        if tr <= train0 && key < best.0 {
            best = (key, epoch, m.params.clone());
        }
    }

    let (_, selected_epoch, params) = best;
    m.params = params;
    Ok(TrainOutcome {
        model: m,
        history,
        selected_epoch,
        updates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_first_step_moves_by_lr() {
        let p0 = Params {
            enc_w: vec![1.0, -1.0],
            enc_b: vec![0.0],
            gain: vec![],
            out_w: vec![],
            out_b: vec![0.5],
        };
        let mut p = p0.clone();
        let g = Params {
            enc_w: vec![3.0, -0.2],
            enc_b: vec![0.0],
            gain: vec![],
            out_w: vec![],
            out_b: vec![1e-3],
        };
        Adam::new(&p, 0.01).step(&mut p, &g);
        assert!((p.enc_w[0] - (1.0 - 0.01)).abs() < 1e-8);
        assert!((p.enc_w[1] - (-1.0 + 0.01)).abs() < 1e-8);
        assert_eq!(p.enc_b[0], 0.0);
        assert!(p.out_b[0] < 0.5);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { epochs: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { horizon: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }
}
