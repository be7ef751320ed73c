//! Leaky integrate-and-fire membranes and exponential current synapses.
//!
//! Both use exponential-Euler updates, which are exact for input held
//! constant over a step.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LifParams {
    pub tau_m: f64,
    pub v_rest: f64,
    pub r_m: f64,
    pub v_th: f64,
    pub v_reset: f64,
    pub dt: f64,
}

impl Default for LifParams {
    fn default() -> Self {
        Self {
            tau_m: 20.0,
            v_rest: 0.0,
            r_m: 1.0,
            v_th: 1.0,
            v_reset: 0.0,
            dt: 1.0,
        }
    }
}

impl LifParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_m > 0.0 && self.dt > 0.0) {
            return Err(Error::InvalidParameter("tau_m and dt must be > 0".into()));
        }
        if self.v_th <= self.v_rest {
            return Err(Error::InvalidParameter("v_th must exceed v_rest".into()));
        }
        Ok(())
    }

    /// Per-step membrane retention `exp(-dt / tau_m)`.
    pub fn decay(&self) -> f64 {
        (-self.dt / self.tau_m).exp()
    }

    /// Sub-threshold membrane update for constant total current `i` over one step.
    #[inline]
    pub fn integrate(&self, v: f64, i: f64, decay: f64) -> f64 {
        let target = self.v_rest + self.r_m * i;
        target + (v - target) * decay
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynapseParams {
    pub tau_s: f64,
    pub dt: f64,
}

impl Default for SynapseParams {
    fn default() -> Self {
        Self { tau_s: 5.0, dt: 1.0 }
    }
}

impl SynapseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_s > 0.0 && self.dt > 0.0) {
            return Err(Error::InvalidParameter("tau_s and dt must be > 0".into()));
        }
        Ok(())
    }

    pub fn decay(&self) -> f64 {
        (-self.dt / self.tau_s).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub v: Vec<f64>,
    pub i_syn: Vec<f64>,
    pub spikes: Vec<bool>,
}

impl NetworkState {
    pub fn at_rest(n: usize, p: &LifParams) -> Self {
        Self {
            v: vec![p.v_rest; n],
            i_syn: vec![0.0; n],
            spikes: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn spike_count(&self) -> usize {
        self.spikes.iter().filter(|&&s| s).count()
    }
}

/// Advances every membrane one step under `i_syn + input_current`, then
/// applies the threshold rule and resets spiking nodes to `v_reset`.
/// The synaptic currents are carried over unchanged.
pub fn lif_step(state: &NetworkState, input_current: &[f64], p: &LifParams) -> NetworkState {
    assert_eq!(state.len(), input_current.len(), "input length mismatch");
    let decay = p.decay();
    let mut v = Vec::with_capacity(state.len());
    let mut spikes = Vec::with_capacity(state.len());
    for ((&v0, &syn), &ext) in state.v.iter().zip(&state.i_syn).zip(input_current) {
        let vn = p.integrate(v0, syn + ext, decay);
        let fired = vn >= p.v_th;
        spikes.push(fired);
        v.push(if fired { p.v_reset } else { vn });
    }
    NetworkState {
        v,
        i_syn: state.i_syn.clone(),
        spikes,
    }
}

/// `I <- I * exp(-dt/tau_s) + W S` with `(W S)_i = sum_j w_ij S_j`.
pub fn synapse_step(
    i_syn: &[f64],
    spikes: &[bool],
    weights: &DMatrix<f64>,
    p: &SynapseParams,
) -> Vec<f64> {
    let n = i_syn.len();
    assert_eq!(spikes.len(), n);
    assert_eq!(weights.nrows(), n);
    let decay = p.decay();
    let mut out: Vec<f64> = i_syn.iter().map(|&c| c * decay).collect();
    for (j, _) in spikes.iter().enumerate().filter(|(_, &s)| s) {
        for (i, o) in out.iter_mut().enumerate() {
            *o += weights[(i, j)];
        }
    }
    out
}

/// Analytic time for a membrane starting at rest to reach threshold under
/// constant current `i`; `None` if the steady state stays below threshold.
pub fn first_spike_time(p: &LifParams, i: f64) -> Option<f64> {
    let drive = p.r_m * i;
    let gap = p.v_th - p.v_rest;
    (drive > gap).then(|| p.tau_m * (drive / (drive - gap)).ln())
}
