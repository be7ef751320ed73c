use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::Circuit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub n: usize,
    pub nonzero_edges: usize,
    pub density: f64,
    pub spectral_radius: f64,
    /// Smallest strictly positive entry; `None` for an empty graph.
    pub prob_min: Option<f64>,
    pub prob_max: Option<f64>,
}

/// Largest eigenvalue magnitude. Symmetric matrices use the symmetric
/// eigensolver; anything else goes through the real Schur form.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    if m == &m.transpose() {
        return m.symmetric_eigenvalues().iter().map(|v| v.abs()).fold(0.0, f64::max);
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn graph_stats(c: &Circuit) -> GraphStats {
    let n = c.n();
    let positive = c.matrix().iter().copied().filter(|&v| v > 0.0);
    let (mut count, mut lo, mut hi) = (0usize, f64::INFINITY, f64::NEG_INFINITY);
    for v in positive {
        count += 1;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    GraphStats {
        n,
        nonzero_edges: count,
        density: count as f64 / (n * n) as f64,
        spectral_radius: spectral_radius(c.matrix()),
        prob_min: (count > 0).then_some(lo),
        prob_max: (count > 0).then_some(hi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn circuit(rows: Vec<Vec<f64>>) -> Circuit {
        let names = (0..rows.len()).map(|i| format!("n{i}")).collect();
        Circuit::new(names, rows, BTreeMap::new()).unwrap()
    }

    #[test]
    fn permutation_matrix() {
        let s = graph_stats(&circuit(vec![vec![0.0, 1.0], vec![1.0, 0.0]]));
        assert_eq!(s.density, 0.5);
        assert_eq!(s.nonzero_edges, 2);
        assert_eq!(s.spectral_radius, 1.0);
    }

    #[test]
    fn diagonal_matrix() {
        let s = graph_stats(&circuit(vec![
            vec![0.2, 0.0, 0.0],
            vec![0.0, 0.5, 0.0],
            vec![0.0, 0.0, 0.1],
        ]));
        assert_eq!(s.density, 1.0 / 3.0);
        assert!((s.spectral_radius - 0.5).abs() < 1e-12);
        assert_eq!(s.prob_min, Some(0.1));
        assert_eq!(s.prob_max, Some(0.5));
    }

    #[test]
    fn rotation_like_cycle_has_complex_spectrum() {
        // 3-cycle with weight w: eigenvalues are w times the cube roots of unity
        let w = 0.3;
        let s = graph_stats(&circuit(vec![
            vec![0.0, 0.0, w],
            vec![w, 0.0, 0.0],
            vec![0.0, w, 0.0],
        ]));
        assert!((s.spectral_radius - w).abs() < 1e-12);
    }

    #[test]
    fn empty_graph() {
        let s = graph_stats(&circuit(vec![vec![0.0]]));
        assert_eq!(s.nonzero_edges, 0);
        assert_eq!(s.spectral_radius, 0.0);
        assert_eq!(s.prob_min, None);
    }
}
