use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, GroupConfig, Port};
use crate::dynamics::{LifParams, SynapseParams};
use crate::error::{Error, Result};

/// Dimension of the Lorenz state fed to the encoder and predicted by the readout.
pub const STATE_DIM: usize = 3;

/// Trainable parameters. Matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// `|input nodes| x 3`
    pub enc_w: Vec<f64>,
    pub enc_b: Vec<f64>,
    /// `n x n` non-negative gains; only cells with a positive circuit entry are used.
    pub gain: Vec<f64>,
    /// `3 x |output nodes|`
    pub out_w: Vec<f64>,
    pub out_b: Vec<f64>,
}

impl Params {
    pub fn zeros_like(&self) -> Self {
        Self {
            enc_w: vec![0.0; self.enc_w.len()],
            enc_b: vec![0.0; self.enc_b.len()],
            gain: vec![0.0; self.gain.len()],
            out_w: vec![0.0; self.out_w.len()],
            out_b: vec![0.0; self.out_b.len()],
        }
    }

    pub fn slices(&self) -> [&[f64]; 5] {
        [&self.enc_w, &self.enc_b, &self.gain, &self.out_w, &self.out_b]
    }

    pub fn slices_mut(&mut self) -> [&mut Vec<f64>; 5] {
        [
            &mut self.enc_w,
            &mut self.enc_b,
            &mut self.gain,
            &mut self.out_w,
            &mut self.out_b,
        ]
    }

    /// In-place `self += other * k`.
    pub fn add_scaled(&mut self, other: &Params, k: f64) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += k * s;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Wiring and initialisation knobs that are not part of the training loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub lif: LifParams,
    pub syn: SynapseParams,
    /// Group whose nodes feed the readout; defaults to every output-port group.
    pub readout_group: Option<String>,
    /// Initial value of every recurrent gain.
    pub init_gain: f64,
    /// Multiplier on the encoder initialisation range.
    pub input_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            lif: LifParams::default(),
            syn: SynapseParams::default(),
            readout_group: None,
            init_gain: 40.0,
            input_scale: 4.0,
        }
    }
}

/// LIF network bound to a fixed circuit topology.
#[derive(Debug, Clone, PartialEq)]
pub struct SnnModel {
    pub(crate) circuit: Circuit,
    pub(crate) signs: Vec<f64>,
    pub(crate) input_nodes: Vec<usize>,
    pub(crate) output_nodes: Vec<usize>,
    pub(crate) silenced: Vec<bool>,
    pub params: Params,
    pub lif: LifParams,
    pub syn: SynapseParams,
    pub seed: u64,
}

/// `-1` for inhibitory (`i_` prefix) categories, `+1` otherwise.
pub fn node_sign(name: &str) -> f64 {
    if name.starts_with("i_") {
        -1.0
    } else {
        1.0
    }
}

fn uniform(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Wires encoder to the input-port nodes and readout to the output group,
/// with recurrent weights `sign_j * A_ij * gain_ij`.
pub fn build_model(c: &Circuit, gc: &GroupConfig, cfg: &ModelConfig, seed: u64) -> Result<SnnModel> {
    cfg.lif.validate()?;
    cfg.syn.validate()?;
    gc.validate(c)?;
    let input_nodes = gc.port_indices(Port::Input, c)?;
    if input_nodes.is_empty() {
        return Err(Error::InvalidParameter("no input_port group configured".into()));
    }
    let output_nodes = match &cfg.readout_group {
        Some(g) => gc.indices(g, c)?,
        None => gc.port_indices(Port::Output, c)?,
    };
    if output_nodes.is_empty() {
        return Err(Error::InvalidParameter("no output_port group configured".into()));
    }

    let n = c.n();
    let (n_in, n_out) = (input_nodes.len(), output_nodes.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let enc_scale = cfg.input_scale / (STATE_DIM as f64).sqrt();
    let out_scale = 1.0 / (n_out as f64).sqrt();
    let enc_w = uniform(&mut rng, n_in * STATE_DIM, enc_scale);
    let enc_b = uniform(&mut rng, n_in, enc_scale);
    let out_w = uniform(&mut rng, STATE_DIM * n_out, out_scale);
    let out_b = uniform(&mut rng, STATE_DIM, out_scale);
    let m = c.matrix();
    let gain = (0..n * n)
        .map(|k| if m[(k / n, k % n)] > 0.0 { cfg.init_gain } else { 0.0 })
        .collect();

    Ok(SnnModel {
        circuit: c.clone(),
        signs: c.node_names().iter().map(|s| node_sign(s)).collect(),
        input_nodes,
        output_nodes,
        silenced: vec![false; n],
        params: Params {
            enc_w,
            enc_b,
            gain,
            out_w,
            out_b,
        },
        lif: cfg.lif.clone(),
        syn: cfg.syn.clone(),
        seed,
    })
}

impl SnnModel {
    /// Reassembles a model from stored parts (used by checkpoints).
    pub fn from_parts(
        circuit: Circuit,
        input_nodes: Vec<usize>,
        output_nodes: Vec<usize>,
        params: Params,
        lif: LifParams,
        syn: SynapseParams,
        seed: u64,
    ) -> Result<Self> {
        let n = circuit.n();
        let bad = |what: &str| Error::InvalidParameter(format!("model {what} has wrong shape"));
        if input_nodes.iter().chain(&output_nodes).any(|&i| i >= n) {
            return Err(bad("port indices"));
        }
        if params.enc_w.len() != input_nodes.len() * STATE_DIM
            || params.enc_b.len() != input_nodes.len()
        {
            return Err(bad("encoder"));
        }
        if params.out_w.len() != output_nodes.len() * STATE_DIM || params.out_b.len() != STATE_DIM {
            return Err(bad("readout"));
        }
        if params.gain.len() != n * n {
            return Err(bad("gain"));
        }
        Ok(Self {
            signs: circuit.node_names().iter().map(|s| node_sign(s)).collect(),
            silenced: vec![false; n],
            circuit,
            input_nodes,
            output_nodes,
            params,
            lif,
            syn,
            seed,
        })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn n(&self) -> usize {
        self.circuit.n()
    }

    pub fn input_nodes(&self) -> &[usize] {
        &self.input_nodes
    }

    pub fn output_nodes(&self) -> &[usize] {
        &self.output_nodes
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn silenced(&self) -> &[bool] {
        &self.silenced
    }

    /// Effective recurrent weights, column-major: entry `j * n + i` is the
    /// weight of `j -> i`.
    pub fn weights_by_source(&self) -> Vec<f64> {
        let n = self.n();
        let m = self.circuit.matrix();
        let mut w = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                w[j * n + i] = self.signs[j] * m[(i, j)] * self.params.gain[i * n + j];
            }
        }
        w
    }

    /// Effective weight of `pre -> post`.
    pub fn weight(&self, post: usize, pre: usize) -> f64 {
        let n = self.n();
        self.signs[pre] * self.circuit.weight(post, pre) * self.params.gain[post * n + pre]
    }

    /// Copy of the model with `group` removed: its projections are zeroed in
    /// the circuit and its nodes can no longer spike. Parameters are shared.
    pub fn ablated(&self, group: &[usize]) -> SnnModel {
        let mut out = self.clone();
        out.circuit = self.circuit.ablate_indices(group);
        for &g in group {
            out.silenced[g] = true;
        }
        out
    }
}
