//! Forward simulation of an [`SnnModel`] over a window and the matching
//! backpropagation-through-time pass.
//!
//! Per step `t`, with `a = exp(-dt/tau_m)` and `b = exp(-dt/tau_s)`:
//!
//! ```text
//! I_t     = i_syn_t + scatter(E x_t + e)        (encoder drives input nodes)
//! Vpre_t  = a V_t + (1 - a)(V_rest + R_m I_t)
//! s_t     = spike(Vpre_t - V_th)
//! V_t+1   = Vpre_t (1 - s_t) + V_reset s_t
//! i_syn   = b i_syn_t + W s_t
//! r_t+1   = b r_t + (1 - b) s_t[outputs]
//! y_t     = O r_t+1 + o
//! ```

use serde::{Deserialize, Serialize};

use super::model::{Params, SnnModel, STATE_DIM};
use crate::error::{Error, Result};

/// Spike nonlinearity used in the forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpikeFn {
    /// Binary threshold; backward uses a rectangular surrogate of width 1
    /// centred on `V_th`.
    #[default]
    Heaviside,
    /// `clamp(V - V_th + 1/2, 0, 1)`, whose true derivative is that same
    /// rectangle. Used to check the backward pass against finite differences.
    Relaxed,
}

impl SpikeFn {
    #[inline]
    fn value(self, v: f64, th: f64) -> f64 {
        match self {
            SpikeFn::Heaviside => (v >= th) as u8 as f64,
            SpikeFn::Relaxed => (v - th + 0.5).clamp(0.0, 1.0),
        }
    }

    #[inline]
    fn surrogate(v: f64, th: f64) -> f64 {
        if (v - th).abs() < 0.5 {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub predictions: Vec<[f64; STATE_DIM]>,
    /// Spike value per step per node, row-major `steps x n`.
    pub spikes: Vec<f64>,
    pub total_spikes: f64,
}

impl ForwardOutput {
    pub fn spikes_per_node(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for row in self.spikes.chunks(n) {
            for (o, s) in out.iter_mut().zip(row) {
                *o += s;
            }
        }
        out
    }
}

struct Tape {
    vpre: Vec<f64>,
    /// Filtered readout traces after each step, `steps x n_out`.
    rates: Vec<f64>,
}

/// Where the encoder input comes from at each step.
enum Drive<'a> {
    Teacher(&'a [[f64; STATE_DIM]]),
    /// Start from the given state, then feed back each prediction.
    FreeRun([f64; STATE_DIM], usize),
}

fn simulate(
    m: &SnnModel,
    drive: Drive<'_>,
    spike_fn: SpikeFn,
    record: bool,
) -> Result<(ForwardOutput, Option<Tape>)> {
    let n = m.n();
    let n_out = m.output_nodes.len();
    let steps = match drive {
        Drive::Teacher(x) => x.len(),
        Drive::FreeRun(_, k) => k,
    };
    let a = m.lif.decay();
    let b = m.syn.decay();
    let w = m.weights_by_source();
    let p = &m.params;

    let mut v = vec![m.lif.v_rest; n];
    let mut isyn = vec![0.0; n];
    let mut rate = vec![0.0; n_out];
    let mut s = vec![0.0; n];
    let mut spikes = Vec::with_capacity(steps * n);
    let mut predictions = Vec::with_capacity(steps);
    let mut tape = record.then(|| Tape {
        vpre: Vec::with_capacity(steps * n),
        rates: Vec::with_capacity(steps * n_out),
    });
    let mut x = match drive {
        Drive::FreeRun(x0, _) => x0,
        Drive::Teacher(xs) => xs.first().copied().unwrap_or_default(),
    };
    let mut total = 0.0;

    for t in 0..steps {
        if let Drive::Teacher(xs) = drive {
            x = xs[t];
        }
        let mut current = isyn.clone();
        for (k, &node) in m.input_nodes.iter().enumerate() {
            let row = &p.enc_w[k * STATE_DIM..(k + 1) * STATE_DIM];
            current[node] += p.enc_b[k] + row.iter().zip(&x).map(|(w, x)| w * x).sum::<f64>();
        }
        for i in 0..n {
            let vp = m.lif.integrate(v[i], current[i], a);
            let si = if m.silenced[i] {
                0.0
            } else {
                spike_fn.value(vp, m.lif.v_th)
            };
            if let Some(tp) = tape.as_mut() {
                tp.vpre.push(vp);
            }
            s[i] = si;
            v[i] = vp * (1.0 - si) + m.lif.v_reset * si;
        }
        for c in isyn.iter_mut() {
            *c *= b;
        }
        for (j, &sj) in s.iter().enumerate() {
            if sj != 0.0 {
                let col = &w[j * n..(j + 1) * n];
                for (c, wij) in isyn.iter_mut().zip(col) {
                    *c += wij * sj;
                }
            }
        }
        for (r, &o) in rate.iter_mut().zip(&m.output_nodes) {
            *r = b * *r + (1.0 - b) * s[o];
        }
        let mut y = [0.0; STATE_DIM];
        for (d, yd) in y.iter_mut().enumerate() {
            let row = &p.out_w[d * n_out..(d + 1) * n_out];
            *yd = p.out_b[d] + row.iter().zip(&rate).map(|(w, r)| w * r).sum::<f64>();
        }
        if y.iter().chain(&v).any(|z| !z.is_finite()) {
            return Err(Error::NonFinite {
                step: t,
                what: "network state".into(),
            });
        }
        if let Some(tp) = tape.as_mut() {
            tp.rates.extend_from_slice(&rate);
        }
        total += s.iter().sum::<f64>();
        spikes.extend_from_slice(&s);
        predictions.push(y);
        if let Drive::FreeRun(..) = drive {
            x = y;
        }
    }

    Ok((
        ForwardOutput {
            predictions,
            spikes,
            total_spikes: total,
        },
        tape,
    ))
}

/// Teacher-forced run: `inputs[t]` drives step `t`, prediction `t` is the
/// estimate of the following state.
pub fn forward(m: &SnnModel, inputs: &[[f64; STATE_DIM]], spike_fn: SpikeFn) -> Result<ForwardOutput> {
    simulate(m, Drive::Teacher(inputs), spike_fn, false).map(|(o, _)| o)
}

/// Closed-loop rollout seeded with `start`, feeding predictions back as input.
pub fn free_run(m: &SnnModel, start: [f64; STATE_DIM], steps: usize) -> Result<ForwardOutput> {
    simulate(m, Drive::FreeRun(start, steps), SpikeFn::Heaviside, false).map(|(o, _)| o)
}

/// Sum of squared errors over one window together with its gradient.
pub fn sse_and_grad(
    m: &SnnModel,
    inputs: &[[f64; STATE_DIM]],
    targets: &[[f64; STATE_DIM]],
    spike_fn: SpikeFn,
) -> Result<(f64, Params, f64)> {
    assert_eq!(inputs.len(), targets.len());
    let (out, tape) = simulate(m, Drive::Teacher(inputs), spike_fn, true)?;
    let tape = tape.expect("recorded");
    let n = m.n();
    let n_out = m.output_nodes.len();
    let steps = inputs.len();
    let a = m.lif.decay();
    let b = m.syn.decay();
    let (r_m, v_th, v_reset) = (m.lif.r_m, m.lif.v_th, m.lif.v_reset);
    let w = m.weights_by_source();
    let p = &m.params;
    let mut g = p.zeros_like();
    let mut gw = vec![0.0; n * n]; // by source, like `w`

    let mut sse = 0.0;
    let mut g_v = vec![0.0; n];
    let mut g_isyn = vec![0.0; n];
    let mut g_rate = vec![0.0; n_out];
    let mut g_s = vec![0.0; n];

    for t in (0..steps).rev() {
        let s = &out.spikes[t * n..(t + 1) * n];
        let vpre = &tape.vpre[t * n..(t + 1) * n];
        let rate = &tape.rates[t * n_out..(t + 1) * n_out];

        let mut gy = [0.0; STATE_DIM];
        for d in 0..STATE_DIM {
            let e = out.predictions[t][d] - targets[t][d];
            sse += e * e;
            gy[d] = 2.0 * e;
            g.out_b[d] += gy[d];
            for k in 0..n_out {
                g.out_w[d * n_out + k] += gy[d] * rate[k];
                g_rate[k] += p.out_w[d * n_out + k] * gy[d];
            }
        }

        g_s.iter_mut().for_each(|x| *x = 0.0);
        for (k, &o) in m.output_nodes.iter().enumerate() {
            g_s[o] += (1.0 - b) * g_rate[k];
            g_rate[k] *= b;
        }
        for j in 0..n {
            let col = &w[j * n..(j + 1) * n];
            g_s[j] += col.iter().zip(&g_isyn).map(|(w, g)| w * g).sum::<f64>();
            if s[j] != 0.0 {
                let gcol = &mut gw[j * n..(j + 1) * n];
                for (gw, gi) in gcol.iter_mut().zip(&g_isyn) {
                    *gw += gi * s[j];
                }
            }
        }

        let mut g_current = vec![0.0; n];
        for i in 0..n {
            let ds = if m.silenced[i] {
                0.0
            } else {
                SpikeFn::surrogate(vpre[i], v_th)
            };
            let g_vpre = g_v[i] * (1.0 - s[i]) + (g_s[i] + g_v[i] * (v_reset - vpre[i])) * ds;
            g_v[i] = a * g_vpre;
            g_current[i] = (1.0 - a) * r_m * g_vpre;
            g_isyn[i] = b * g_isyn[i] + g_current[i];
        }

        let x = &inputs[t];
        for (k, &node) in m.input_nodes.iter().enumerate() {
            let gc = g_current[node];
            g.enc_b[k] += gc;
            for d in 0..STATE_DIM {
                g.enc_w[k * STATE_DIM + d] += gc * x[d];
            }
        }
    }

    let cm = m.circuit.matrix();
    for j in 0..n {
        for i in 0..n {
            let a_ij = cm[(i, j)];
            if a_ij > 0.0 {
                g.gain[i * n + j] = gw[j * n + i] * m.signs[j] * a_ij;
            }
        }
    }
    Ok((sse, g, out.total_spikes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Circuit, GroupConfig, Port};
    use crate::dynamics::{first_spike_time, lif_step, synapse_step, LifParams, NetworkState};
    use crate::snn::model::{build_model, ModelConfig};
    use std::collections::BTreeMap;

    fn one_node() -> SnnModel {
        let c = Circuit::new(vec!["x".into()], vec![vec![0.0]], BTreeMap::new()).unwrap();
        let mut gc = GroupConfig::new();
        gc.insert("in", ["x"], Port::Input).insert("out", ["x"], Port::Output);
        build_model(&c, &gc, &ModelConfig::default(), 0).unwrap()
    }

    #[test]
    fn dead_network_predicts_zero() {
        let mut m = one_node();
        m.params = m.params.zeros_like();
        let xs = vec![[1.0, -2.0, 0.5]; 50];
        let out = forward(&m, &xs, SpikeFn::Heaviside).unwrap();
        assert!(out.predictions.iter().all(|y| *y == [0.0; 3]));
        assert_eq!(out.total_spikes, 0.0);
    }

    #[test]
    fn single_neuron_fires_with_closed_form_period() {
        let mut m = one_node();
        m.params = m.params.zeros_like();
        let drive = 1.5;
        m.params.enc_b[0] = drive;
        let steps = 200;
        let out = forward(&m, &vec![[0.0; 3]; steps], SpikeFn::Heaviside).unwrap();
        let period = (first_spike_time(&LifParams::default(), drive).unwrap()).ceil() as usize;
        let times: Vec<usize> = (0..steps).filter(|&t| out.spikes[t] == 1.0).collect();
        assert_eq!(times[0] + 1, period);
        for pair in times.windows(2) {
            assert_eq!(pair[1] - pair[0], period);
        }
        assert_eq!(out.total_spikes as usize, steps / period);
    }

    #[test]
    fn matches_the_dynamics_kernels() {
        let c = crate::circuit::synthesize_circuit(&crate::circuit::defaults::synthesis_spec(42)).unwrap();
        let m = build_model(&c, &crate::circuit::defaults::group_config(), &ModelConfig::default(), 5)
            .unwrap();
        let xs: Vec<[f64; 3]> = (0..80)
            .map(|t| {
                let t = t as f64 * 0.1;
                [2.0 * t.sin(), 2.0 * t.cos(), 1.0]
            })
            .collect();
        let out = forward(&m, &xs, SpikeFn::Heaviside).unwrap();

        let n = m.n();
        let w = nalgebra::DMatrix::from_fn(n, n, |i, j| m.weight(i, j));
        let mut state = NetworkState::at_rest(n, &m.lif);
        for (t, x) in xs.iter().enumerate() {
            let mut ext = vec![0.0; n];
            for (k, &node) in m.input_nodes().iter().enumerate() {
                ext[node] = m.params.enc_b[k]
                    + (0..3).map(|d| m.params.enc_w[k * 3 + d] * x[d]).sum::<f64>();
            }
            state = lif_step(&state, &ext, &m.lif);
            for i in 0..n {
                assert_eq!(state.spikes[i] as u8 as f64, out.spikes[t * n + i], "t={t} i={i}");
            }
            state.i_syn = synapse_step(&state.i_syn, &state.spikes, &w, &m.syn);
        }
        assert!(out.total_spikes > 0.0);
    }

    #[test]
    fn free_run_is_deterministic() {
        let m = one_node();
        let a = free_run(&m, [0.3, 0.1, -0.2], 40).unwrap();
        let b = free_run(&m, [0.3, 0.1, -0.2], 40).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.predictions.len(), 40);
    }
}
