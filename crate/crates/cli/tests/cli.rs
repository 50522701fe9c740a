use std::path::Path;
use std::process::{Command, Output};

fn gforce(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gforce"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn embed_two_node_graph() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("g.txt"), "a b\n").unwrap();
    let out = gforce(
        &[
            "embed",
            "g.txt",
            "--dim",
            "2",
            "-o",
            "emb.txt",
            "--threads",
            "1",
        ],
        dir.path(),
    );
    ok(&out);
    let emb = read(dir.path().join("emb.txt"));
    let lines: Vec<&str> = emb.lines().collect();
    assert_eq!(lines[0], "2 2");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("a ") && lines[2].starts_with("b "));
    assert!(read(dir.path().join("emb.trace.csv")).starts_with("iter,energy,energy_per_dim\n1,"));
    assert_eq!(read(dir.path().join("emb.map")), "0 a\n1 b\n");
    let manifest: serde_json::Value =
        serde_json::from_str(&read(dir.path().join("emb.manifest.json"))).unwrap();
    assert_eq!(manifest["settings"]["q"], 5.0);
}

#[test]
fn embed_is_repeatable_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let mut edges = String::new();
    for i in 0..40 {
        edges.push_str(&format!(
            "n{i} n{}\nn{i} n{}\n",
            (i + 1) % 40,
            (i * 7 + 3) % 40
        ));
    }
    std::fs::write(dir.path().join("g.txt"), edges).unwrap();
    let common = [
        "embed",
        "g.txt",
        "--dim",
        "8",
        "--max-iters",
        "60",
        "--seed",
        "3",
    ];
    for (name, threads) in [("a.txt", "1"), ("b.txt", "1"), ("c.txt", "4")] {
        let mut args = common.to_vec();
        args.extend(["-o", name, "--threads", threads]);
        ok(&gforce(&args, dir.path()));
    }
    let a = std::fs::read(dir.path().join("a.txt")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.txt")).unwrap());
    assert_eq!(a, std::fs::read(dir.path().join("c.txt")).unwrap());
}

#[test]
fn missing_input_names_the_path_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = gforce(&["embed", "absent.txt", "-o", "emb.txt"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.txt"));
    assert!(!dir.path().join("emb.txt").exists());
}

#[test]
fn parse_error_reports_line_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("g.txt"), "a b\nc\n").unwrap();
    let out = gforce(&["embed", "g.txt", "-o", "emb.txt"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn weighted_and_binarize_conflict() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("g.txt"), "a b 2\n").unwrap();
    let out = gforce(&["embed", "g.txt", "--weighted", "--binarize"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("g.txt"), "a b\nb c\n").unwrap();
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"dim": 3, "seed": 5, "max_iters": 7}"#,
    )
    .unwrap();
    ok(&gforce(
        &[
            "embed", "g.txt", "--config", "c.json", "--seed", "6", "-o", "e.txt",
        ],
        dir.path(),
    ));
    let m: serde_json::Value =
        serde_json::from_str(&read(dir.path().join("e.manifest.json"))).unwrap();
    assert_eq!(m["settings"]["dim"], 3);
    assert_eq!(m["settings"]["seed"], 6);
    assert!(read(dir.path().join("e.txt")).starts_with("3 3\n"));
}

fn point_in_triangle(p: [f64; 2], a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> bool {
    let cross = |o: [f64; 2], s: [f64; 2], t: [f64; 2]| {
        (s[0] - o[0]) * (t[1] - o[1]) - (s[1] - o[1]) * (t[0] - o[0])
    };
    let (d1, d2, d3) = (cross(a, b, p), cross(b, c, p), cross(c, a, p));
    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(neg && pos)
}

#[test]
fn grid_verify_small_grid_is_convex_and_counts_frames() {
    let dir = tempfile::tempdir().unwrap();
    ok(&gforce(
        &[
            "grid-verify",
            "--rows",
            "2",
            "--cols",
            "2",
            "--max-iters",
            "95",
            "-o",
            "out",
        ],
        dir.path(),
    ));
    let metrics = read(dir.path().join("out/metrics.csv"));
    let get = |key: &str| -> String {
        metrics
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{key},")))
            .unwrap()
            .to_owned()
    };
    let iters: usize = get("iterations").parse().unwrap();
    let frames: usize = get("frames").parse().unwrap();
    assert_eq!(frames, iters / 10 + 1);

    let snaps = read(dir.path().join("out/snapshots.csv"));
    let last = iters / 10 * 10;
    let pts: Vec<[f64; 2]> = snaps
        .lines()
        .skip(1)
        .filter(|l| l.starts_with(&format!("{last},")))
        .map(|l| {
            let f: Vec<f64> = l.split(',').skip(2).map(|v| v.parse().unwrap()).collect();
            [f[0], f[1]]
        })
        .collect();
    assert_eq!(pts.len(), 4);
    let snaps_per_frame = snaps.lines().skip(1).count();
    assert_eq!(snaps_per_frame, 4 * frames);
    for i in 0..4 {
        let others: Vec<[f64; 2]> = (0..4).filter(|&j| j != i).map(|j| pts[j]).collect();
        assert!(
            !point_in_triangle(pts[i], others[0], others[1], others[2]),
            "node {i} inside hull"
        );
    }
}

#[test]
fn grid_verify_rejects_degenerate_grid() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        !gforce(&["grid-verify", "--rows", "1", "--cols", "5"], dir.path())
            .status
            .success()
    );
}

#[test]
fn energy_sweep_repeated_dim_gives_identical_rows() {
    let dir = tempfile::tempdir().unwrap();
    ok(&gforce(
        &[
            "energy-sweep",
            "--grid",
            "4x4",
            "--dims",
            "3,3",
            "--max-iters",
            "40",
            "-o",
            "sw",
        ],
        dir.path(),
    ));
    let summary = read(dir.path().join("sw/summary.csv"));
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], rows[1]);
    let traces = read(dir.path().join("sw/traces.csv"));
    assert!(traces.starts_with("dim,iter,energy_per_dim\n3,1,"));
}

#[test]
fn energy_sweep_needs_two_dims() {
    let dir = tempfile::tempdir().unwrap();
    let out = gforce(
        &["energy-sweep", "--grid", "3x3", "--dims", "4"],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(!dir.path().join("energy_sweep").exists());
}

fn labeled_fixture(dir: &Path) {
    // Two loosely joined cliques, labelled by clique.
    let mut edges = String::new();
    let mut labels = String::new();
    for c in 0..2 {
        for i in 0..10 {
            for j in (i + 1)..10 {
                edges.push_str(&format!("v{} v{}\n", c * 10 + i, c * 10 + j));
            }
            labels.push_str(&format!("v{} class{c}\n", c * 10 + i));
        }
    }
    edges.push_str("v0 v10\n");
    std::fs::write(dir.join("g.txt"), edges).unwrap();
    std::fs::write(dir.join("l.txt"), labels).unwrap();
}

#[test]
fn evaluate_writes_protocol_rows_and_reuses_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    labeled_fixture(dir.path());
    let train = ["--dim", "4", "--max-iters", "100", "--seed", "2"];
    let mut args = vec!["evaluate", "g.txt", "l.txt", "-o", "r1.csv"];
    args.extend(train);
    ok(&gforce(&args, dir.path()));
    let report = read(dir.path().join("r1.csv"));
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "dataset,ratio,repeat,micro_f1,macro_f1");
    assert_eq!(lines.len(), 1 + 25 + 5);
    assert_eq!(lines.iter().filter(|l| l.contains(",mean,")).count(), 5);
    assert!(lines[1].starts_with("g,0.4,0,"));

    let mut args = vec!["embed", "g.txt", "-o", "e.txt"];
    args.extend(train);
    ok(&gforce(&args, dir.path()));
    ok(&gforce(
        &[
            "evaluate",
            "g.txt",
            "l.txt",
            "--load-embedding",
            "e.txt",
            "-o",
            "r2.csv",
        ],
        dir.path(),
    ));
    assert_eq!(report, read(dir.path().join("r2.csv")));
}

#[test]
fn project_writes_node_xy() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("e.txt"),
        "4 3\na 1 0 0\nb -1 0 0\nc 0 2 0\nd 0 -2 0\n",
    )
    .unwrap();
    ok(&gforce(&["project", "e.txt", "-o", "p.csv"], dir.path()));
    let csv = read(dir.path().join("p.csv"));
    let rows: Vec<Vec<String>> = csv
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    assert_eq!(rows[0], ["node", "x", "y"]);
    assert_eq!(rows.len(), 5);
    // Largest spread is along the second input axis.
    let c: f64 = rows[3][1].parse().unwrap();
    assert!((c.abs() - 2.0).abs() < 1e-9);
}
