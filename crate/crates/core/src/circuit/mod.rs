//! Directed connection-probability graph over neural categories.
//!
//! Entry `(i, j)` of the matrix is the connection probability from
//! presynaptic category `j` to postsynaptic category `i`: rows are
//! targets, columns are sources.

mod cluster;
pub mod defaults;
mod groups;
mod stats;
mod synth;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cluster::{cluster_communities, node_features};
pub use groups::{GroupConfig, GroupSpec, Port};
pub use stats::{graph_stats, spectral_radius, GraphStats};
pub use synth::{synthesize_circuit, SynthesisSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    node_names: Vec<String>,
    matrix: DMatrix<f64>,
    metadata: BTreeMap<String, String>,
}

/// On-disk layout of a connection matrix: row-major, postsynaptic rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitDocument {
    pub nodes: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl Circuit {
    pub fn new(
        node_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        let n = node_names.len();
        if rows.len() != n {
            return Err(Error::RowCount {
                rows: rows.len(),
                expected: n,
            });
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NotSquare {
                    row,
                    len: r.len(),
                    expected: n,
                });
            }
        }
        let matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::from_matrix(node_names, matrix, metadata)
    }

    pub fn from_matrix(
        node_names: Vec<String>,
        matrix: DMatrix<f64>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        let n = node_names.len();
        if n == 0 {
            return Err(Error::InvalidParameter(
                "circuit needs at least one node".into(),
            ));
        }
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::NotSquare {
                row: 0,
                len: matrix.ncols(),
                expected: n,
            });
        }
        let mut seen = HashSet::with_capacity(n);
        for (index, name) in node_names.iter().enumerate() {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateNode {
                    name: name.clone(),
                    index,
                });
            }
        }
        for row in 0..n {
            for col in 0..n {
                let value = matrix[(row, col)];
                if !(0.0..=1.0).contains(&value) {
                    return Err(Error::ProbabilityOutOfRange { row, col, value });
                }
            }
        }
        Ok(Self {
            node_names,
            matrix,
            metadata,
        })
    }

    pub fn from_document(doc: CircuitDocument) -> Result<Self> {
        Self::new(doc.nodes, doc.matrix, doc.metadata)
    }

    pub fn to_document(&self) -> CircuitDocument {
        let n = self.n();
        CircuitDocument {
            nodes: self.node_names.clone(),
            matrix: (0..n)
                .map(|i| (0..n).map(|j| self.matrix[(i, j)]).collect())
                .collect(),
            metadata: self.metadata.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.node_names.len()
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    /// Weight of the projection `pre -> post`.
    pub fn weight(&self, post: usize, pre: usize) -> f64 {
        self.matrix[(post, pre)]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.node_names.iter().position(|n| n == name)
    }

    pub fn indices_of<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|s| {
                let s = s.as_ref();
                self.index_of(s)
                    .ok_or_else(|| Error::UnknownNode(s.to_string()))
            })
            .collect()
    }

    /// Removes every projection into or out of `group`. The receiver is
    /// left untouched.
    pub fn ablate<S: AsRef<str>>(&self, group: &[S]) -> Result<Circuit> {
        let idx = self.indices_of(group)?;
        Ok(self.ablate_indices(&idx))
    }

    pub fn ablate_indices(&self, group: &[usize]) -> Circuit {
        let mut out = self.clone();
        for &g in group {
            out.matrix.row_mut(g).fill(0.0);
            out.matrix.column_mut(g).fill(0.0);
        }
        out
    }

    pub fn nonzero_edges(&self) -> usize {
        self.matrix.iter().filter(|&&v| v > 0.0).count()
    }
}

pub fn load_circuit(path: impl AsRef<Path>) -> Result<Circuit> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: CircuitDocument = serde_json::from_str(&text)
        .map_err(|e| Error::parse(path.display().to_string(), e))?;
    Circuit::from_document(doc)
}

pub fn save_circuit(circuit: &Circuit, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&circuit.to_document())
        .map_err(|e| Error::parse("circuit document", e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("n{i}")).collect()
    }

    fn half(n: usize) -> Circuit {
        Circuit::new(names(n), vec![vec![0.5; n]; n], BTreeMap::new()).unwrap()
    }

    #[test]
    fn rejects_out_of_range_entry() {
        let err = Circuit::new(names(2), vec![vec![0.0, 1.5], vec![0.0, 0.0]], BTreeMap::new())
            .unwrap_err();
        assert!(err.to_string().contains("probability out of range"));
        assert!(matches!(
            err,
            Error::ProbabilityOutOfRange { row: 0, col: 1, .. }
        ));
    }

    #[test]
    fn rejects_negative_and_nan() {
        assert!(Circuit::new(names(1), vec![vec![-0.1]], BTreeMap::new()).is_err());
        assert!(Circuit::new(names(1), vec![vec![f64::NAN]], BTreeMap::new()).is_err());
    }

    #[test]
    fn rejects_ragged_and_short_matrices() {
        let err = Circuit::new(names(2), vec![vec![0.0, 0.0], vec![0.0]], BTreeMap::new())
            .unwrap_err();
        assert!(matches!(err, Error::NotSquare { row: 1, len: 1, expected: 2 }));
        let err = Circuit::new(names(2), vec![vec![0.0, 0.0]], BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::RowCount { rows: 1, expected: 2 }));
    }

    #[test]
    fn rejects_duplicate_names() {
        let err = Circuit::new(
            vec!["a".into(), "a".into()],
            vec![vec![0.0; 2]; 2],
            BTreeMap::new(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateNode { index: 1, .. }));
    }

    #[test]
    fn ablate_hand_example() {
        let c = half(3);
        let a = c.ablate(&["n1"]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == 1 || j == 1 { 0.0 } else { 0.5 };
                assert_eq!(a.weight(i, j), expect);
            }
        }
        assert_eq!(a.nonzero_edges(), 4);
        // input untouched
        assert_eq!(c.nonzero_edges(), 9);
    }

    #[test]
    fn ablate_empty_and_full() {
        let c = half(3);
        assert_eq!(c.ablate::<&str>(&[]).unwrap(), c);
        let all = c.ablate(c.node_names()).unwrap();
        assert_eq!(all.nonzero_edges(), 0);
    }

    #[test]
    fn ablate_unknown_node() {
        assert!(matches!(
            half(2).ablate(&["zz"]),
            Err(Error::UnknownNode(_))
        ));
    }

    #[test]
    fn load_reports_missing_file() {
        let err = load_circuit("/definitely/not/here.json").unwrap_err();
        assert!(err.to_string().contains("file not found"));
    }

    #[test]
    fn single_node_document() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("one.json");
        std::fs::write(&p, r#"{"nodes":["a"],"matrix":[[0]]}"#).unwrap();
        let c = load_circuit(&p).unwrap();
        assert_eq!(c.n(), 1);
        assert_eq!(graph_stats(&c).density, 0.0);
    }

    #[test]
    fn document_round_trip_preserves_order() {
        let c = Circuit::new(
            vec!["z".into(), "a".into()],
            vec![vec![0.0, 0.25], vec![0.125, 0.0]],
            BTreeMap::from([("source".to_string(), "test".to_string())]),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        save_circuit(&c, &p).unwrap();
        assert_eq!(load_circuit(&p).unwrap(), c);
    }
}
