//! Attractive and repulsive force terms of the spring-electrical model.
//!
//! Every node is pulled toward its neighbors by a linear spring,
//! `-p * w_ij * (u_i - u_j)`, and pushed away from every other node by
//! `q * w~ * (u_i - u_j) / sum_m (|u_i[m] - u_j[m]| + b)^2`. The bias `b` keeps
//! the repulsive denominator at least `n * b^2`, so forces stay finite even
//! for coincident nodes.
//!
//! The pairwise functions are checked entry points. The per-node kernels work
//! on raw row slices and always accumulate in ascending node order, so a
//! node's force is bit-identical no matter which worker computes it.

use std::ops::{Deref, Index};

use crate::embedding::EmbeddingMatrix;
use crate::error::{check_dims, Error, Result};
use crate::graph::{Graph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceParams {
    /// Attraction coefficient.
    pub p: f64,
    /// Repulsion coefficient.
    pub q: f64,
    /// Distance bias added to every absolute coordinate difference.
    pub bias: f64,
    /// Repulsive weight applied uniformly to all pairs.
    pub repulsive_weight: f64,
}

impl Default for ForceParams {
    fn default() -> Self {
        ForceParams {
            p: 1.0,
            q: 5.0,
            bias: 0.01,
            repulsive_weight: 1.0,
        }
    }
}

impl ForceParams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("p", self.p),
            ("q", self.q),
            ("bias", self.bias),
            ("repulsive_weight", self.repulsive_weight),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// A force acting on one node, same dimension as an embedding row.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceVector(Vec<f64>);

impl ForceVector {
    pub fn zeros(dim: usize) -> Self {
        ForceVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for ForceVector {
    fn from(v: Vec<f64>) -> Self {
        ForceVector(v)
    }
}

impl Deref for ForceVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for ForceVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// `-p * w * (u_i - u_j)`.
pub fn attractive_pair(ui: &[f64], uj: &[f64], weight: f64, p: f64) -> Result<ForceVector> {
    check_dims(ui.len(), uj.len())?;
    let scale = -p * weight;
    Ok(ui
        .iter()
        .zip(uj)
        .map(|(a, b)| scale * (a - b))
        .collect::<Vec<_>>()
        .into())
}

/// `sum_m (|u_i[m] - u_j[m]| + b)^2`.
pub fn biased_sq_distance(ui: &[f64], uj: &[f64], bias: f64) -> Result<f64> {
    check_dims(ui.len(), uj.len())?;
    Ok(biased_sq_distance_unchecked(ui, uj, bias))
}

/// `q * w~ * (u_i - u_j) / biased_sq_distance(u_i, u_j, b)`.
pub fn repulsive_pair(
    ui: &[f64],
    uj: &[f64],
    repulsive_weight: f64,
    q: f64,
    bias: f64,
) -> Result<ForceVector> {
    check_dims(ui.len(), uj.len())?;
    let scale = q * repulsive_weight / biased_sq_distance_unchecked(ui, uj, bias);
    Ok(ui
        .iter()
        .zip(uj)
        .map(|(a, b)| scale * (a - b))
        .collect::<Vec<_>>()
        .into())
}

/// Attraction on node `k` summed over its neighbors.
pub fn node_attractive(
    g: &Graph,
    u: &EmbeddingMatrix,
    k: NodeId,
    params: &ForceParams,
) -> Result<ForceVector> {
    check_graph(g, u, k)?;
    let mut out = vec![0.0; u.dim()];
    accumulate_attractive(g, u, k, params, &mut out);
    Ok(out.into())
}

/// Repulsion on node `k` from every other node, neighbors included.
pub fn node_repulsive(
    g: &Graph,
    u: &EmbeddingMatrix,
    k: NodeId,
    params: &ForceParams,
) -> Result<ForceVector> {
    check_graph(g, u, k)?;
    let mut out = vec![0.0; u.dim()];
    accumulate_repulsive(u, k, params, &mut out);
    Ok(out.into())
}

/// `||f_a + f_r||^2`.
pub fn node_energy(fa: &[f64], fr: &[f64]) -> Result<f64> {
    check_dims(fa.len(), fr.len())?;
    Ok(fa.iter().zip(fr).map(|(a, r)| (a + r) * (a + r)).sum())
}

/// Net force on `k`, attraction first, written into `out`.
///
/// `out` must have length `u.dim()`; its previous contents are overwritten.
pub(crate) fn net_force_into(
    g: &Graph,
    u: &EmbeddingMatrix,
    k: NodeId,
    params: &ForceParams,
    out: &mut [f64],
    scratch: &mut [f64],
) {
    out.fill(0.0);
    accumulate_attractive(g, u, k, params, out);
    scratch.fill(0.0);
    accumulate_repulsive(u, k, params, scratch);
    for (o, r) in out.iter_mut().zip(scratch.iter()) {
        *o += r;
    }
}

fn check_graph(g: &Graph, u: &EmbeddingMatrix, k: NodeId) -> Result<()> {
    check_dims(g.node_count(), u.rows())?;
    g.check_node(k)
}

#[inline]
fn biased_sq_distance_unchecked(ui: &[f64], uj: &[f64], bias: f64) -> f64 {
    // Four independent partial sums let the compiler vectorize the loop.
    let mut acc = [0.0f64; 4];
    let mut a = ui.chunks_exact(4);
    let mut b = uj.chunks_exact(4);
    for (x, y) in (&mut a).zip(&mut b) {
        for lane in 0..4 {
            let t = (x[lane] - y[lane]).abs() + bias;
            acc[lane] += t * t;
        }
    }
    let mut tail = 0.0;
    for (x, y) in a.remainder().iter().zip(b.remainder()) {
        let t = (x - y).abs() + bias;
        tail += t * t;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn accumulate_attractive(
    g: &Graph,
    u: &EmbeddingMatrix,
    k: NodeId,
    params: &ForceParams,
    out: &mut [f64],
) {
    let uk = u.row(k);
    for (&i, &w) in g.neighbor_ids(k).iter().zip(g.neighbor_weights(k)) {
        let scale = -params.p * w;
        for ((o, a), b) in out.iter_mut().zip(uk).zip(u.row(i)) {
            *o += scale * (a - b);
        }
    }
}

fn accumulate_repulsive(u: &EmbeddingMatrix, k: NodeId, params: &ForceParams, out: &mut [f64]) {
    let uk = u.row(k);
    let coeff = params.q * params.repulsive_weight;
    for i in (0..u.rows()).filter(|&i| i != k) {
        let ui = u.row(i);
        let scale = coeff / biased_sq_distance_unchecked(uk, ui, params.bias);
        for ((o, a), b) in out.iter_mut().zip(uk).zip(ui) {
            *o += scale * (a - b);
        }
    }
}
