//! Structural quality measures for a trained layout.

use crate::embedding::EmbeddingMatrix;
use crate::error::{check_dims, Error, Result};
use crate::graph::Graph;

/// Mean embedding distance over adjacent pairs divided by the mean over
/// non-adjacent pairs. Small values mean edges are short relative to the
/// overall spread.
pub fn adjacency_distance_ratio(g: &Graph, u: &EmbeddingMatrix) -> Result<f64> {
    check_dims(g.node_count(), u.rows())?;
    let (mut adj_sum, mut adj_n, mut far_sum, mut far_n) = (0.0, 0usize, 0.0, 0usize);
    for a in 0..g.node_count() {
        let neighbors = g.neighbor_ids(a);
        for b in (a + 1)..g.node_count() {
            let d = u.distance(a, b);
            if neighbors.binary_search(&b).is_ok() {
                adj_sum += d;
                adj_n += 1;
            } else {
                far_sum += d;
                far_n += 1;
            }
        }
    }
    if adj_n == 0 || far_n == 0 {
        return Err(Error::invalid(
            "distance ratio needs both adjacent and non-adjacent pairs",
        ));
    }
    Ok((adj_sum / adj_n as f64) / (far_sum / far_n as f64))
}

/// Ranks starting at 1, ties receiving the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x.len(), y.len())?;
    if x.len() < 2 {
        return Err(Error::invalid("correlation needs at least two samples"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::invalid("correlation undefined for constant input"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x.len(), y.len())?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Spearman correlation between BFS hop distance and embedding distance over
/// all connected node pairs.
pub fn hop_distance_spearman(g: &Graph, u: &EmbeddingMatrix) -> Result<f64> {
    check_dims(g.node_count(), u.rows())?;
    let mut hops = Vec::new();
    let mut dists = Vec::new();
    for a in 0..g.node_count() {
        let from_a = g.bfs_hops(a);
        for (b, h) in from_a.iter().enumerate().skip(a + 1) {
            if let Some(h) = h {
                hops.push(*h as f64);
                dists.push(u.distance(a, b));
            }
        }
    }
    spearman(&hops, &dists)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutMetrics {
    pub distance_ratio: f64,
    pub hop_spearman: f64,
}

pub fn layout_metrics(g: &Graph, u: &EmbeddingMatrix) -> Result<LayoutMetrics> {
    Ok(LayoutMetrics {
        distance_ratio: adjacency_distance_ratio(g, u)?,
        hop_spearman: hop_distance_spearman(g, u)?,
    })
}
