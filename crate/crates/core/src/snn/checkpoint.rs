//! Checkpoint format: one JSON object with
//!
//! * `tensors`: flat map `name -> {shape, data}` (`enc_w`, `enc_b`, `gain`,
//!   `out_w`, `out_b`, all row-major);
//! * `circuit`: the circuit document the model was built on;
//! * `input_nodes`, `output_nodes`: node indices of the encoder and readout;
//! * `lif`, `syn`, `seed`, and a free-form `config` value.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Params, SnnModel, STATE_DIM};
use crate::circuit::{Circuit, CircuitDocument};
use crate::dynamics::{LifParams, SynapseParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    fn new(shape: Vec<usize>, data: Vec<f64>) -> Self {
        Self { shape, data }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub tensors: BTreeMap<String, Tensor>,
    pub circuit: CircuitDocument,
    pub input_nodes: Vec<usize>,
    pub output_nodes: Vec<usize>,
    pub lif: LifParams,
    pub syn: SynapseParams,
    pub seed: u64,
    #[serde(default)]
    pub config: serde_json::Value,
}

impl Checkpoint {
    pub fn from_model(m: &SnnModel, config: serde_json::Value) -> Self {
        let (n, n_in, n_out) = (m.n(), m.input_nodes().len(), m.output_nodes().len());
        let p = &m.params;
        let tensors = BTreeMap::from([
            ("enc_w".to_string(), Tensor::new(vec![n_in, STATE_DIM], p.enc_w.clone())),
            ("enc_b".to_string(), Tensor::new(vec![n_in], p.enc_b.clone())),
            ("gain".to_string(), Tensor::new(vec![n, n], p.gain.clone())),
            ("out_w".to_string(), Tensor::new(vec![STATE_DIM, n_out], p.out_w.clone())),
            ("out_b".to_string(), Tensor::new(vec![STATE_DIM], p.out_b.clone())),
        ]);
        Self {
            tensors,
            circuit: m.circuit().to_document(),
            input_nodes: m.input_nodes().to_vec(),
            output_nodes: m.output_nodes().to_vec(),
            lif: m.lif.clone(),
            syn: m.syn.clone(),
            seed: m.seed,
            config,
        }
    }

    pub fn into_model(self) -> Result<SnnModel> {
        let mut tensors = self.tensors;
        let mut take = |name: &str| -> Result<Vec<f64>> {
            let t = tensors
                .remove(name)
                .ok_or_else(|| Error::parse("checkpoint", format!("missing tensor `{name}`")))?;
            if t.shape.iter().product::<usize>() != t.data.len() {
                return Err(Error::parse("checkpoint", format!("tensor `{name}` shape mismatch")));
            }
            Ok(t.data)
        };
        let params = Params {
            enc_w: take("enc_w")?,
            enc_b: take("enc_b")?,
            gain: take("gain")?,
            out_w: take("out_w")?,
            out_b: take("out_b")?,
        };
        if !params.is_finite() {
            return Err(Error::NonFinite { step: 0, what: "checkpoint parameters".into() });
        }
        let circuit = Circuit::from_document(self.circuit)?;
        SnnModel::from_parts(
            circuit,
            self.input_nodes,
            self.output_nodes,
            params,
            self.lif,
            self.syn,
            self.seed,
        )
    }
}

pub fn save_checkpoint(m: &SnnModel, config: serde_json::Value, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&Checkpoint::from_model(m, config))
        .map_err(|e| Error::parse("checkpoint", e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(SnnModel, serde_json::Value)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ck: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    let config = ck.config.clone();
    Ok((ck.into_model()?, config))
}
