//! Synchronous force-directed training loop.
//!
//! Each iteration freezes the current embedding, computes the net force on
//! every node against that snapshot, records the energy (sum of squared net
//! force norms), and then moves every node by `h_t * f_k`, with the
//! displacement clipped to `delta_max`. Nodes are split into contiguous index
//! ranges, one per worker; each node's force is a fixed-order sequential sum,
//! so the result does not depend on the worker count.

use std::fmt::Write as _;

use log::{debug, warn};
use rayon::prelude::*;

use crate::embedding::EmbeddingMatrix;
use crate::error::{check_dims, Error, Result};
use crate::force::{net_force_into, ForceParams};
use crate::graph::Graph;

/// Global learning-speed schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpeedSchedule {
    /// `h_t = h0 / (1 + t / tau)`.
    #[default]
    Decay,
    /// `h_t = h0`.
    Constant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub max_iters: usize,
    pub energy_rel_tol: f64,
    pub patience: usize,
    /// Lower bound on the denominator of the relative energy change.
    pub energy_floor: f64,
    pub h0: f64,
    pub tau: f64,
    pub schedule: SpeedSchedule,
    pub delta_max: f64,
    pub seed: u64,
    pub worker_count: usize,
    pub force: ForceParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            max_iters: 500,
            energy_rel_tol: 1e-4,
            patience: 10,
            energy_floor: 1e-12,
            h0: 0.1,
            tau: 100.0,
            schedule: SpeedSchedule::Decay,
            delta_max: 1.0,
            seed: 0,
            worker_count: 1,
            force: ForceParams::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.force.validate()?;
        if self.dim < 2 {
            return Err(Error::invalid(format!(
                "dim must be at least 2, got {}",
                self.dim
            )));
        }
        if self.max_iters == 0 || self.patience == 0 || self.worker_count == 0 {
            return Err(Error::invalid(
                "max_iters, patience and worker_count must be positive",
            ));
        }
        for (name, v) in [
            ("energy_rel_tol", self.energy_rel_tol),
            ("energy_floor", self.energy_floor),
            ("h0", self.h0),
            ("tau", self.tau),
            ("delta_max", self.delta_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Learning speed for iteration `t` (0-based).
    pub fn speed(&self, t: usize) -> f64 {
        match self.schedule {
            SpeedSchedule::Decay => self.h0 / (1.0 + t as f64 / self.tau),
            SpeedSchedule::Constant => self.h0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    EnergyStable,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct TrainState {
    /// Completed iterations.
    pub iteration: usize,
    pub energy: Vec<f64>,
    /// Net forces from the most recent step, row-aligned with the embedding.
    pub forces: EmbeddingMatrix,
    pub embedding: EmbeddingMatrix,
    pub stop: Option<StopReason>,
}

impl TrainState {
    pub fn new(embedding: EmbeddingMatrix) -> Self {
        TrainState {
            iteration: 0,
            energy: Vec::new(),
            forces: EmbeddingMatrix::zeros(embedding.rows(), embedding.dim()),
            embedding,
            stop: None,
        }
    }

    /// CSV `iter,energy,energy_per_dim`, iterations numbered from 1.
    pub fn trace_csv(&self) -> String {
        let dim = self.embedding.dim() as f64;
        let mut out = String::from("iter,energy,energy_per_dim\n");
        for (t, e) in self.energy.iter().enumerate() {
            writeln!(out, "{},{},{}", t + 1, e, e / dim).unwrap();
        }
        out
    }
}

pub fn init_embedding(node_count: usize, dim: usize, seed: u64) -> Result<EmbeddingMatrix> {
    EmbeddingMatrix::random(node_count, dim, seed)
}

/// Runs `body` on a pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, body: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(body))
}

/// Net force on every node against the frozen embedding `u`.
///
/// Must run inside the worker pool; nodes are split into `workers`
/// contiguous ranges.
pub(crate) fn compute_forces(
    g: &Graph,
    u: &EmbeddingMatrix,
    params: &ForceParams,
    workers: usize,
) -> EmbeddingMatrix {
    let (rows, dim) = (u.rows(), u.dim());
    let mut forces = EmbeddingMatrix::zeros(rows, dim);
    let per_worker = rows.div_ceil(workers.max(1)).max(1);
    forces
        .as_mut_slice()
        .par_chunks_mut(per_worker * dim)
        .enumerate()
        .for_each(|(chunk, out)| {
            let first = chunk * per_worker;
            let mut scratch = vec![0.0; dim];
            for (offset, row) in out.chunks_exact_mut(dim).enumerate() {
                net_force_into(g, u, first + offset, params, row, &mut scratch);
            }
        });
    forces
}

fn energy_of(forces: &EmbeddingMatrix) -> f64 {
    (0..forces.rows())
        .map(|k| forces.row(k).iter().map(|v| v * v).sum::<f64>())
        .sum()
}

/// `sum_k ||f_a(k) + f_r(k)||^2`, accumulated in ascending node order.
pub fn total_energy(g: &Graph, u: &EmbeddingMatrix, params: &ForceParams) -> Result<f64> {
    check_dims(g.node_count(), u.rows())?;
    let mut total = 0.0;
    let mut net = vec![0.0; u.dim()];
    let mut scratch = vec![0.0; u.dim()];
    for k in 0..g.node_count() {
        net_force_into(g, u, k, params, &mut net, &mut scratch);
        total += net.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(total)
}

/// One synchronous update. Must run inside the worker pool when
/// `cfg.worker_count > 1` is meant to take effect; see [`step`].
fn step_in_pool(g: &Graph, state: &mut TrainState, cfg: &TrainConfig) -> Result<()> {
    check_dims(g.node_count(), state.embedding.rows())?;
    let forces = compute_forces(g, &state.embedding, &cfg.force, cfg.worker_count);
    if let Some(pos) = forces.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteForce {
            node: pos / forces.dim(),
            iteration: state.iteration,
        });
    }
    let energy = energy_of(&forces);

    let h = cfg.speed(state.iteration);
    let dim = forces.dim();
    state
        .embedding
        .as_mut_slice()
        .par_chunks_mut(dim)
        .zip(forces.as_slice().par_chunks(dim))
        .for_each(|(row, f)| {
            let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt() * h;
            let scale = if norm > cfg.delta_max {
                h * cfg.delta_max / norm
            } else {
                h
            };
            for (x, fv) in row.iter_mut().zip(f) {
                *x += scale * fv;
            }
        });

    state.forces = forces;
    state.energy.push(energy);
    state.iteration += 1;
    Ok(())
}

/// Advances `state` by one synchronous iteration using `cfg.worker_count`
/// workers.
pub fn step(g: &Graph, state: &mut TrainState, cfg: &TrainConfig) -> Result<()> {
    cfg.validate()?;
    with_workers(cfg.worker_count, || step_in_pool(g, state, cfg))?
}

/// Stopping rule: the last `patience` relative energy changes are all below
/// `energy_rel_tol`, or `max_iters` iterations have completed.
pub fn converged(trace: &[f64], cfg: &TrainConfig) -> bool {
    stop_reason(trace, cfg).is_some()
}

pub fn stop_reason(trace: &[f64], cfg: &TrainConfig) -> Option<StopReason> {
    if trace.len() > cfg.patience {
        let window = &trace[trace.len() - cfg.patience - 1..];
        let stable = window.windows(2).all(|w| {
            let change = (w[1] - w[0]).abs() / w[0].max(cfg.energy_floor);
            change < cfg.energy_rel_tol
        });
        if stable {
            return Some(StopReason::EnergyStable);
        }
    }
    (trace.len() >= cfg.max_iters).then_some(StopReason::MaxIterations)
}

/// Fraction of transitions `t -> t+1` with `t > after` (iterations numbered
/// from 1) where the energy did not increase. `None` if there are none.
pub fn descent_fraction(trace: &[f64], after: usize) -> Option<f64> {
    let pairs: Vec<&[f64]> = trace.windows(2).skip(after).collect();
    if pairs.is_empty() {
        return None;
    }
    let down = pairs.iter().filter(|w| w[1] <= w[0]).count();
    Some(down as f64 / pairs.len() as f64)
}

/// Full training run from a seeded random start.
pub fn train(g: &Graph, cfg: &TrainConfig) -> Result<TrainState> {
    train_with_observer(g, cfg, |_| {})
}

/// Like [`train`], calling `observer` with the initial state and after every
/// iteration.
pub fn train_with_observer(
    g: &Graph,
    cfg: &TrainConfig,
    observer: impl FnMut(&TrainState) + Send,
) -> Result<TrainState> {
    cfg.validate()?;
    let init = init_embedding(g.node_count(), cfg.dim, cfg.seed)?;
    train_from(g, init, cfg, observer)
}

/// Training loop from a given starting embedding.
pub fn train_from(
    g: &Graph,
    init: EmbeddingMatrix,
    cfg: &TrainConfig,
    mut observer: impl FnMut(&TrainState) + Send,
) -> Result<TrainState> {
    cfg.validate()?;
    check_dims(cfg.dim, init.dim())?;
    let mut state = TrainState::new(init);
    observer(&state);
    with_workers(cfg.worker_count, || -> Result<()> {
        loop {
            step_in_pool(g, &mut state, cfg)?;
            observer(&state);
            if let Some(reason) = stop_reason(&state.energy, cfg) {
                state.stop = Some(reason);
                return Ok(());
            }
            if state.iteration % 50 == 0 {
                debug!(
                    "iteration {}: energy {:.6e}",
                    state.iteration,
                    state.energy.last().unwrap()
                );
            }
        }
    })??;
    if state.stop == Some(StopReason::MaxIterations) {
        warn!(
            "stopped at max_iters = {} before the energy stabilized (last energy {:.6e})",
            cfg.max_iters,
            state.energy.last().unwrap()
        );
    }
    Ok(state)
}
