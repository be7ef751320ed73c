use super::Circuit;
use crate::error::{Error, Result};

/// Per-node `[in-degree, out-degree, in-strength, out-strength]`, each
/// z-scored across nodes (constant features map to 0).
pub fn node_features(c: &Circuit) -> Vec<[f64; 4]> {
    let n = c.n();
    let m = c.matrix();
    let mut raw = vec![[0.0; 4]; n];
    for i in 0..n {
        for j in 0..n {
            let w = m[(i, j)];
            if w > 0.0 {
                // i receives from j
                raw[i][0] += 1.0;
                raw[j][1] += 1.0;
                raw[i][2] += w;
                raw[j][3] += w;
            }
        }
    }
    for f in 0..4 {
        let mean = raw.iter().map(|r| r[f]).sum::<f64>() / n as f64;
        let var = raw.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        for r in raw.iter_mut() {
            r[f] = if sd > 0.0 { (r[f] - mean) / sd } else { 0.0 };
        }
    }
    raw
}

fn euclid(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Average-linkage agglomerative clustering down to `k` clusters.
///
/// Ties on linkage distance go to the pair whose lowest member indices are
/// smallest. Clusters come back ordered by their lowest node index, members
/// in node order.
pub fn cluster_communities(c: &Circuit, k: usize) -> Result<Vec<Vec<String>>> {
    let n = c.n();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "cluster count {k} outside 1..={n}"
        )));
    }
    let feats = node_features(c);
    // active clusters, keyed by position; each holds sorted member indices
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| euclid(&feats[i], &feats[j])).collect())
        .collect();

    while clusters.len() > k {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let d = dist[a][b];
                // clusters stay sorted by lowest member, so (a, b) order is the tie-break
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, a, b));
                }
            }
        }
        let (_, a, b) = best.expect("at least two clusters");
        let (na, nb) = (clusters[a].len() as f64, clusters[b].len() as f64);
        for x in 0..clusters.len() {
            if x != a && x != b {
                let d = (na * dist[a][x] + nb * dist[b][x]) / (na + nb);
                dist[a][x] = d;
                dist[x][a] = d;
            }
        }
        let merged = clusters.remove(b);
        dist.remove(b);
        for row in dist.iter_mut() {
            row.remove(b);
        }
        clusters[a].extend(merged);
        clusters[a].sort_unstable();
    }

    let names = c.node_names();
    Ok(clusters
        .into_iter()
        .map(|cl| cl.into_iter().map(|i| names[i].clone()).collect())
        .collect())
}
