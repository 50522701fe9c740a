use gforce::force::{node_attractive, node_repulsive};
use gforce::trainer::{step, train_from};
use gforce::{
    grid_graph, train, EmbeddingMatrix, ForceParams, Graph, StopReason, TrainConfig, TrainState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(n: usize, p_edge: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.gen::<f64>() < p_edge {
                edges.push((a, b, rng.gen_range(0.1..3.0)));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

fn random_matrix(rows: usize, dim: usize, seed: u64) -> EmbeddingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
    EmbeddingMatrix::from_flat(rows, dim, data).unwrap()
}

/// Straight transcription of the force definitions over a dense weight matrix.
fn naive_forces(
    g: &Graph,
    u: &EmbeddingMatrix,
    prm: &ForceParams,
    k: usize,
) -> (Vec<f64>, Vec<f64>) {
    let n = u.dim();
    let mut fa = vec![0.0; n];
    let mut fr = vec![0.0; n];
    for j in 0..g.node_count() {
        if j == k {
            continue;
        }
        let w = g.edge_weight(k, j).unwrap_or(0.0);
        let mut denom = 0.0;
        for m in 0..n {
            let d = u.row(k)[m] - u.row(j)[m];
            denom += (d.abs() + prm.bias) * (d.abs() + prm.bias);
        }
        for m in 0..n {
            let d = u.row(k)[m] - u.row(j)[m];
            fa[m] -= prm.p * w * d;
            fr[m] += prm.q * prm.repulsive_weight * d / denom;
        }
    }
    (fa, fr)
}

#[test]
fn kernels_match_naive_double_loop() {
    let prm = ForceParams::default();
    for seed in 0..20 {
        let g = random_graph(30, 0.2, seed);
        let u = random_matrix(30, 8, seed + 1000);
        for k in 0..30 {
            let (fa, fr) = naive_forces(&g, &u, &prm, k);
            let a = node_attractive(&g, &u, k, &prm).unwrap();
            let r = node_repulsive(&g, &u, k, &prm).unwrap();
            for m in 0..8 {
                assert!((a[m] - fa[m]).abs() <= 1e-12, "attr seed {seed} node {k}");
                assert!((r[m] - fr[m]).abs() <= 1e-12, "rep seed {seed} node {k}");
            }
        }
    }
}

#[test]
fn step_is_independent_of_node_processing_order() {
    let g = random_graph(40, 0.15, 3);
    let u0 = random_matrix(40, 5, 4);
    let cfg = TrainConfig {
        dim: 5,
        delta_max: 0.05,
        ..TrainConfig::default()
    };

    // Reverse-order reference against the frozen snapshot.
    let h = cfg.speed(0);
    let mut expected = u0.clone();
    for k in (0..40).rev() {
        let a = node_attractive(&g, &u0, k, &cfg.force).unwrap();
        let r = node_repulsive(&g, &u0, k, &cfg.force).unwrap();
        let f: Vec<f64> = a.iter().zip(r.iter()).map(|(x, y)| x + y).collect();
        let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt() * h;
        let scale = if norm > cfg.delta_max {
            h * cfg.delta_max / norm
        } else {
            h
        };
        for (x, fv) in expected.row_mut(k).iter_mut().zip(&f) {
            *x += scale * fv;
        }
    }

    let mut state = TrainState::new(u0);
    step(&g, &mut state, &cfg).unwrap();
    assert_eq!(state.embedding.as_slice(), expected.as_slice());
}

#[test]
fn output_is_bit_identical_across_worker_counts() {
    let g = random_graph(97, 0.05, 8);
    let base = TrainConfig {
        dim: 6,
        max_iters: 40,
        seed: 21,
        ..TrainConfig::default()
    };
    let reference = train(&g, &base).unwrap();
    for workers in [2, 3, 4, 7] {
        let cfg = TrainConfig {
            worker_count: workers,
            ..base.clone()
        };
        let got = train(&g, &cfg).unwrap();
        assert_eq!(
            got.embedding.as_slice(),
            reference.embedding.as_slice(),
            "{workers} workers"
        );
        assert_eq!(got.energy, reference.energy);
    }
}

#[test]
fn coordinates_stay_within_the_displacement_budget() {
    let g = random_graph(60, 0.1, 5);
    let cfg = TrainConfig {
        dim: 3,
        max_iters: 80,
        delta_max: 0.5,
        schedule: gforce::SpeedSchedule::Constant,
        h0: 1.0,
        ..TrainConfig::default()
    };
    let state = train(&g, &cfg).unwrap();
    assert!(state.embedding.is_finite());
    assert!(state.embedding.max_abs() <= 1.0 + state.iteration as f64 * cfg.delta_max);
}

/// Separation `r` at which `p = q / sum_m (r |e_m| + b)^2` for unit direction
/// `e`, found by bisection.
fn equilibrium_along(direction: &[f64], p: f64, q: f64, b: f64) -> f64 {
    let excess = |r: f64| {
        direction
            .iter()
            .map(|e| (r * e.abs() + b).powi(2))
            .sum::<f64>()
            - q / p
    };
    let (mut lo, mut hi) = (0.0, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn two_nodes_settle_at_the_directional_equilibrium() {
    let g = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
    for seed in 1..=5 {
        let cfg = TrainConfig {
            dim: 2,
            seed,
            max_iters: 5000,
            ..TrainConfig::default()
        };
        let state = train(&g, &cfg).unwrap();
        assert_eq!(state.stop, Some(StopReason::EnergyStable));
        let u = &state.embedding;
        let sep = u.distance(0, 1);
        let dir: Vec<f64> = u
            .row(0)
            .iter()
            .zip(u.row(1))
            .map(|(a, b)| (a - b) / sep)
            .collect();
        let want = equilibrium_along(&dir, 1.0, 5.0, 0.01);
        assert!((sep - want).abs() < 1e-3, "seed {seed}: {sep} vs {want}");
    }
}

#[test]
fn grid_neighbors_end_closer_than_non_neighbors() {
    let g = grid_graph(15, 15).unwrap();
    let cfg = TrainConfig {
        dim: 2,
        ..TrainConfig::default()
    };
    let state = train(&g, &cfg).unwrap();
    let ratio = gforce::layout::adjacency_distance_ratio(&g, &state.embedding).unwrap();
    assert!(ratio < 1.0, "ratio {ratio}");
}

#[test]
fn resuming_from_a_midpoint_reproduces_the_tail() {
    let g = random_graph(30, 0.2, 9);
    let cfg = TrainConfig {
        dim: 4,
        max_iters: 30,
        schedule: gforce::SpeedSchedule::Constant,
        energy_rel_tol: 1e-300,
        ..TrainConfig::default()
    };
    let full = train(&g, &cfg).unwrap();
    let mut half_cfg = cfg.clone();
    half_cfg.max_iters = 15;
    let half = train(&g, &half_cfg).unwrap();
    let rest = train_from(&g, half.embedding, &half_cfg, |_| {}).unwrap();
    assert_eq!(rest.embedding.as_slice(), full.embedding.as_slice());
}
