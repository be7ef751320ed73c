use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand::{seq::index, Rng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{spectral_radius, Circuit};
use crate::error::{Error, Result};

/// Targets for a statistics-matched surrogate circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisSpec {
    pub n: usize,
    pub nonzero_edges: usize,
    pub prob_range: (f64, f64),
    pub target_spectral_radius: f64,
    pub seed: u64,
    /// Node names; empty means `n0..n{n-1}`.
    pub node_names: Vec<String>,
    /// Rows whose diagonal cell may not carry an edge (input ports).
    pub no_self_loops: Vec<usize>,
}

impl Default for SynthesisSpec {
    fn default() -> Self {
        super::defaults::synthesis_spec(42)
    }
}

impl SynthesisSpec {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.prob_range;
        if self.n == 0 {
            return Err(Error::InvalidParameter("synthesis needs n >= 1".into()));
        }
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "probability range ({lo}, {hi}) must satisfy 0 < low <= high <= 1"
            )));
        }
        if !(self.target_spectral_radius > 0.0 && self.target_spectral_radius.is_finite()) {
            return Err(Error::InvalidParameter(
                "target spectral radius must be positive".into(),
            ));
        }
        if !self.node_names.is_empty() && self.node_names.len() != self.n {
            return Err(Error::InvalidParameter(format!(
                "{} node names given for n = {}",
                self.node_names.len(),
                self.n
            )));
        }
        if let Some(&bad) = self.no_self_loops.iter().find(|&&i| i >= self.n) {
            return Err(Error::InvalidParameter(format!(
                "self-loop exclusion row {bad} out of range"
            )));
        }
        Ok(())
    }
}

/// Draws `nonzero_edges` cells uniformly without replacement, fills them
/// with log-uniform magnitudes, then rescales the whole matrix to the
/// target spectral radius (clamping at 1).
pub fn synthesize_circuit(spec: &SynthesisSpec) -> Result<Circuit> {
    spec.validate()?;
    let n = spec.n;
    let mut forbidden = vec![false; n];
    for &i in &spec.no_self_loops {
        forbidden[i] = true;
    }
    let cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !(i == j && forbidden[i]))
        .collect();
    if spec.nonzero_edges > cells.len() {
        return Err(Error::Infeasible(format!(
            "{} edges requested but only {} cells available after excluding input self-loops",
            spec.nonzero_edges,
            cells.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let picked = index::sample(&mut rng, cells.len(), spec.nonzero_edges);
    let (ln_lo, ln_hi) = (spec.prob_range.0.ln(), spec.prob_range.1.ln());
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in picked.iter() {
        let u: f64 = rng.random();
        let (i, j) = cells[k];
        m[(i, j)] = (ln_lo + u * (ln_hi - ln_lo)).exp();
    }

    let raw_radius = spectral_radius(&m);
    let mut metadata = BTreeMap::new();
    metadata.insert("source".to_string(), "synthetic surrogate".to_string());
    metadata.insert("synthesis.seed".to_string(), spec.seed.to_string());
    metadata.insert("synthesis.raw_spectral_radius".to_string(), raw_radius.to_string());

    if spec.nonzero_edges > 0 {
        if raw_radius <= 0.0 {
            return Err(Error::Infeasible(
                "sampled edge pattern is nilpotent; cannot rescale to a positive spectral radius"
                    .into(),
            ));
        }
        let scale = spec.target_spectral_radius / raw_radius;
        let mut clamped = 0usize;
        m.iter_mut().for_each(|v| {
            *v *= scale;
            if *v > 1.0 {
                *v = 1.0;
                clamped += 1;
            }
        });
        metadata.insert("synthesis.scale".to_string(), scale.to_string());
        metadata.insert("synthesis.clamped_entries".to_string(), clamped.to_string());
        metadata.insert(
            "synthesis.spectral_radius".to_string(),
            spectral_radius(&m).to_string(),
        );
    }

    let names = if spec.node_names.is_empty() {
        (0..n).map(|i| format!("n{i}")).collect()
    } else {
        spec.node_names.clone()
    };
    Circuit::from_matrix(names, m, metadata)
}
