use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gforce::eval::{run_protocol, ClassifierConfig, SplitSpec};
use gforce::layout::layout_metrics;
use gforce::pca::project_2d;
use gforce::trainer::{descent_fraction, train_from, train_with_observer, with_workers};
use gforce::{
    grid_graph, parse_edge_list, parse_embedding, parse_labels, EmbeddingMatrix, Graph,
    NamedEmbedding, StopReason, TrainState,
};
use log::info;

use crate::config::{Manifest, Resolved, TrainArgs};
use crate::output::{sibling, write_atomic, Outputs};

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

pub fn load_graph(path: &Path, weighted: bool) -> Result<Graph> {
    let g = parse_edge_list(open(path)?, weighted)
        .with_context(|| format!("cannot parse edge list {}", path.display()))?;
    let g = if weighted { g } else { g.binarized() };
    info!(
        "loaded {}: {} nodes, {} edges",
        path.display(),
        g.node_count(),
        g.edge_count()
    );
    Ok(g)
}

fn load_embedding(path: &Path) -> Result<NamedEmbedding> {
    parse_embedding(open(path)?)
        .with_context(|| format!("cannot parse embedding {}", path.display()))
}

fn stop_label(state: &TrainState) -> String {
    match state.stop {
        Some(StopReason::EnergyStable) => "energy_stable",
        Some(StopReason::MaxIterations) => "max_iters",
        None => "none",
    }
    .to_owned()
}

fn run_training(g: &Graph, settings: &Resolved) -> Result<TrainState> {
    run_training_observed(g, settings, |_| {})
}

fn run_training_observed(
    g: &Graph,
    settings: &Resolved,
    observer: impl FnMut(&TrainState) + Send,
) -> Result<TrainState> {
    let cfg = settings.train_config()?;
    let state = train_with_observer(g, &cfg, observer)?;
    info!(
        "trained n={} for {} iterations ({}), final energy {:.6e}",
        cfg.dim,
        state.iteration,
        stop_label(&state),
        state.energy.last().copied().unwrap_or(0.0)
    );
    Ok(state)
}

fn manifest_json(m: &Manifest) -> Result<String> {
    let mut s = serde_json::to_string_pretty(m)?;
    s.push('\n');
    Ok(s)
}

pub fn embed(edges: &Path, start: Option<&Path>, output: &Path, args: &TrainArgs) -> Result<()> {
    let settings = args.resolve(100)?;
    let g = load_graph(edges, settings.weighted)?;
    let state = match start {
        Some(path) => {
            let init = load_embedding(path)?.aligned_to(&g)?;
            let cfg = settings.train_config()?;
            train_from(&g, init, &cfg, |_| {})?
        }
        None => run_training(&g, &settings)?,
    };

    let mut inputs = vec![edges.display().to_string()];
    inputs.extend(start.map(|p| p.display().to_string()));
    let mut out = Outputs::default();
    out.add(output.to_owned(), state.embedding.to_text(g.node_names())?);
    out.add(sibling(output, "trace.csv"), state.trace_csv());
    out.add(sibling(output, "map"), g.mapping_table());
    let manifest = Manifest {
        command: "embed",
        inputs,
        outputs: out.paths(),
        settings: &settings,
        iterations: vec![state.iteration],
        stop: vec![stop_label(&state)],
    };
    out.add(sibling(output, "manifest.json"), manifest_json(&manifest)?);
    out.commit()
}

fn snapshot_header(dim: usize) -> String {
    let mut h = String::from("iter,node");
    if dim == 2 {
        h.push_str(",x,y");
    } else {
        for j in 1..=dim {
            write!(h, ",u{j}").unwrap();
        }
    }
    h.push('\n');
    h
}

fn append_snapshot(out: &mut String, iteration: usize, u: &EmbeddingMatrix) {
    for k in 0..u.rows() {
        write!(out, "{iteration},{k}").unwrap();
        for v in u.row(k) {
            write!(out, ",{v:.8e}").unwrap();
        }
        out.push('\n');
    }
}

pub fn grid_verify(
    rows: usize,
    cols: usize,
    every: usize,
    output: &Path,
    args: &TrainArgs,
) -> Result<()> {
    if rows < 2 || cols < 2 {
        bail!("grid needs at least 2 rows and 2 columns, got {rows}x{cols}");
    }
    if every == 0 {
        bail!("--snapshot-every must be at least 1");
    }
    let settings = args.resolve(2)?;
    let g = grid_graph(rows, cols)?;

    let mut snapshots = snapshot_header(settings.dim);
    let mut frames = 0usize;
    let state = run_training_observed(&g, &settings, |s| {
        if s.iteration % every == 0 {
            append_snapshot(&mut snapshots, s.iteration, &s.embedding);
            frames += 1;
        }
    })?;
    let metrics = layout_metrics(&g, &state.embedding)?;

    let mut m = String::from("metric,value\n");
    writeln!(m, "rows,{rows}").unwrap();
    writeln!(m, "cols,{cols}").unwrap();
    writeln!(m, "iterations,{}", state.iteration).unwrap();
    writeln!(m, "stop,{}", stop_label(&state)).unwrap();
    writeln!(m, "final_energy,{:.8e}", state.energy.last().unwrap()).unwrap();
    writeln!(m, "distance_ratio,{:.8e}", metrics.distance_ratio).unwrap();
    writeln!(m, "hop_spearman,{:.8e}", metrics.hop_spearman).unwrap();
    match descent_fraction(&state.energy, 10) {
        Some(f) => writeln!(m, "descent_fraction,{f:.8e}").unwrap(),
        None => writeln!(m, "descent_fraction,").unwrap(),
    }
    writeln!(m, "frames,{frames}").unwrap();
    info!(
        "grid {rows}x{cols}: ratio {:.4}, spearman {:.4}",
        metrics.distance_ratio, metrics.hop_spearman
    );

    let mut out = Outputs::default();
    out.add(output.join("metrics.csv"), m);
    out.add(output.join("snapshots.csv"), snapshots);
    out.add(output.join("trace.csv"), state.trace_csv());
    let manifest = Manifest {
        command: "grid-verify",
        inputs: vec![format!("grid:{rows}x{cols}")],
        outputs: out.paths(),
        settings: &settings,
        iterations: vec![state.iteration],
        stop: vec![stop_label(&state)],
    };
    out.add(output.join("manifest.json"), manifest_json(&manifest)?);
    out.commit()
}

/// Either an edge-list file or a synthetic `ROWSxCOLS` grid.
pub enum GraphSource {
    File(PathBuf),
    Grid(usize, usize),
}

impl GraphSource {
    pub fn parse_grid(spec: &str) -> Result<(usize, usize)> {
        let (r, c) = spec
            .split_once(['x', 'X'])
            .with_context(|| format!("grid must look like ROWSxCOLS, got {spec:?}"))?;
        Ok((r.trim().parse()?, c.trim().parse()?))
    }

    fn load(&self, weighted: bool) -> Result<Graph> {
        match self {
            GraphSource::File(p) => load_graph(p, weighted),
            GraphSource::Grid(r, c) => Ok(grid_graph(*r, *c)?),
        }
    }

    fn describe(&self) -> String {
        match self {
            GraphSource::File(p) => p.display().to_string(),
            GraphSource::Grid(r, c) => format!("grid:{r}x{c}"),
        }
    }
}

pub fn energy_sweep(
    source: &GraphSource,
    dims: &[usize],
    output: &Path,
    args: &TrainArgs,
) -> Result<()> {
    if dims.len() < 2 {
        bail!(
            "energy-sweep needs at least two dimensions, got {}",
            dims.len()
        );
    }
    let settings = args.resolve(100)?;
    let g = source.load(settings.weighted)?;

    let mut summary = String::from("dim,iterations,stop,final_energy,energy_per_dim\n");
    let mut traces = String::from("dim,iter,energy_per_dim\n");
    let mut iterations = Vec::new();
    let mut stops = Vec::new();
    for &dim in dims {
        let run = Resolved {
            dim,
            ..settings.clone()
        };
        let state = run_training(&g, &run)?;
        let e = *state.energy.last().unwrap();
        writeln!(
            summary,
            "{dim},{},{},{e:.8e},{:.8e}",
            state.iteration,
            stop_label(&state),
            e / dim as f64
        )
        .unwrap();
        for (t, e) in state.energy.iter().enumerate() {
            writeln!(traces, "{dim},{},{:.8e}", t + 1, e / dim as f64).unwrap();
        }
        iterations.push(state.iteration);
        stops.push(stop_label(&state));
    }

    let mut out = Outputs::default();
    out.add(output.join("summary.csv"), summary);
    out.add(output.join("traces.csv"), traces);
    let manifest = Manifest {
        command: "energy-sweep",
        inputs: vec![source.describe()],
        outputs: out.paths(),
        settings: &settings,
        iterations,
        stop: stops,
    };
    out.add(output.join("manifest.json"), manifest_json(&manifest)?);
    out.commit()
}

pub struct EvaluateArgs<'a> {
    pub edges: &'a Path,
    pub labels: &'a Path,
    pub load_embedding: Option<&'a Path>,
    pub dataset: Option<&'a str>,
    pub repeats: usize,
    pub split_seed: u64,
    pub output: &'a Path,
}

pub fn evaluate(e: &EvaluateArgs, args: &TrainArgs) -> Result<()> {
    if e.repeats == 0 {
        bail!("--repeats must be at least 1");
    }
    let settings = args.resolve(100)?;
    let g = load_graph(e.edges, settings.weighted)?;
    let labels = parse_labels(open(e.labels)?, &g)
        .with_context(|| format!("cannot parse labels {}", e.labels.display()))?;
    if labels.labeled_count() == 0 {
        bail!("{} assigns no labels", e.labels.display());
    }

    let (u, iterations, stop) = match e.load_embedding {
        Some(path) => (load_embedding(path)?.aligned_to(&g)?, vec![], vec![]),
        None => {
            let state = run_training(&g, &settings)?;
            let stop = stop_label(&state);
            (state.embedding, vec![state.iteration], vec![stop])
        }
    };

    let specs: Vec<SplitSpec> = SplitSpec::protocol(e.split_seed)
        .into_iter()
        .map(|s| SplitSpec {
            repeat_count: e.repeats,
            ..s
        })
        .collect();
    let report = with_workers(settings.threads, || {
        run_protocol(&labels, &u, &specs, &ClassifierConfig::default())
    })??;
    for m in &report.means {
        info!(
            "ratio {:.1}: micro-F1 {:.4}, macro-F1 {:.4}",
            m.ratio, m.micro_f1, m.macro_f1
        );
    }

    let dataset = match e.dataset {
        Some(d) => d.to_owned(),
        None => e.edges.file_stem().map_or_else(
            || "dataset".to_owned(),
            |s| s.to_string_lossy().into_owned(),
        ),
    };
    let mut inputs = vec![
        e.edges.display().to_string(),
        e.labels.display().to_string(),
    ];
    if let Some(p) = e.load_embedding {
        inputs.push(p.display().to_string());
    }
    let mut out = Outputs::default();
    out.add(e.output.to_owned(), report.to_csv(&dataset));
    let manifest = Manifest {
        command: "evaluate",
        inputs,
        outputs: out.paths(),
        settings: &settings,
        iterations,
        stop,
    };
    out.add(
        sibling(e.output, "manifest.json"),
        manifest_json(&manifest)?,
    );
    out.commit()
}

pub fn project(embedding: &Path, output: &Path) -> Result<()> {
    let named = load_embedding(embedding)?;
    let proj = project_2d(&named.matrix)?;
    let mut csv = String::from("node,x,y\n");
    for (name, [x, y]) in named.names.iter().zip(&proj.coords) {
        writeln!(csv, "{name},{x:.8e},{y:.8e}").unwrap();
    }
    write_atomic(output, &csv)
}
