use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mlmod::io::{load_result, parse_multiplex, Source};
use mlmod::{datasets, modularity, CouplingSpec, ModularityParams};
use tempfile::TempDir;

fn mlmod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlmod"))
        .args(args)
        .env("MLMOD_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = mlmod(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const TWO_LAYERS: &str = "\
1 1 2 1
1 2 3 1
1 1 3 1
1 4 5 1
1 5 6 1
1 4 6 1
1 3 4 1
2 1 2 1
2 2 3 1
2 1 3 1
2 4 5 1
2 5 6 1
2 4 6 1
2 3 4 1
";

const TWO_LAYER_FILE: &str = "1 1 a\n2 1 b\n";

const TWO_COUPLINGS: &str = "1 1 1 2 1\n2 1 1 2 1\n3 1 1 2 1\n4 1 1 2 1\n5 1 1 2 1\n6 1 1 2 1\n";

#[test]
fn karate_detect_finds_two_factions() {
    let dir = TempDir::new().unwrap();
    let out = ok(&["detect", "--input", "builtin:karate", "--max-depth", "1", "--out", path(dir.path())]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("communities = 2"));
    let saved = load_result(&dir.path().join("mspec.result")).unwrap();
    assert_eq!(saved.result.partition.n_communities(), 2);
    assert_eq!(saved.n_nodes, 34);
}

#[test]
fn karate_full_recursion_splits_further() {
    let dir = TempDir::new().unwrap();
    ok(&["detect", "--input", "builtin:karate", "--out", path(dir.path())]);
    let saved = load_result(&dir.path().join("mspec.result")).unwrap();
    assert!(saved.result.partition.n_communities() > 2);
    let trace = &saved.result.q_trace;
    assert!(trace.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn emitted_q_matches_rescoring() {
    let dir = TempDir::new().unwrap();
    ok(&["detect", "--input", "builtin:karate", "--algorithm", "mlouv", "--out", path(dir.path())]);
    let saved = load_result(&dir.path().join("mlouv.result")).unwrap();
    let net = datasets::karate();
    let q = modularity::modularity(
        &net,
        &CouplingSpec::uniform(1.0),
        &ModularityParams::new(1),
        &saved.result.partition,
    )
    .unwrap();
    assert!((q - saved.result.q_total).abs() <= 1e-9 * q.abs().max(1.0));
}

#[test]
fn bad_path_exits_two_without_output() {
    let dir = TempDir::new().unwrap();
    let out = mlmod(&["detect", "--input", "/no/such/file.edges", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn malformed_edge_line_reports_location() {
    let dir = TempDir::new().unwrap();
    let edges = write(dir.path(), "bad.edges", "1 1 2 1\n1 2 x 1\n");
    let out = mlmod(&["detect", "--input", &edges, "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2:"));
}

#[test]
fn edgeless_network_is_a_single_community() {
    let dir = TempDir::new().unwrap();
    let edges = write(dir.path(), "empty.edges", "# nothing\n");
    let layers = write(dir.path(), "empty.layers", "1 1 only\n");
    let out_dir = dir.path().join("out");
    ok(&["detect", "--input", &edges, "--layers-file", &layers, "--nodes", "4", "--out", path(&out_dir)]);
    let saved = load_result(&out_dir.join("mspec.result")).unwrap();
    assert_eq!(saved.result.partition.n_communities(), 1);
    assert_eq!(saved.result.q_total, 0.0);
}

#[test]
fn same_seed_gives_identical_files() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        ok(&[
            "detect",
            "--input",
            "builtin:karate",
            "--replica-layers",
            "3",
            "--algorithm",
            "mlouv",
            "--seed",
            "7",
            "--out",
            path(d.path()),
        ]);
    }
    assert_eq!(
        fs::read(a.path().join("mlouv.result")).unwrap(),
        fs::read(b.path().join("mlouv.result")).unwrap()
    );
}

#[test]
fn sweep_reaches_full_consistency_at_strong_coupling() {
    let dir = TempDir::new().unwrap();
    let edges = write(dir.path(), "two.edges", TWO_LAYERS);
    let layers = write(dir.path(), "two.layers", TWO_LAYER_FILE);
    let couplings = write(dir.path(), "two.couplings", TWO_COUPLINGS);
    ok(&[
        "sweep",
        "--input",
        &edges,
        "--layers-file",
        &layers,
        "--couplings-file",
        &couplings,
        "--omega",
        "0,100",
        "--out",
        path(dir.path()),
    ]);
    let summary = fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
    let last = summary.lines().last().unwrap();
    assert!(last.starts_with("100,"), "{summary}");
    assert_eq!(last.rsplit(',').next().unwrap().parse::<f64>().unwrap(), 1.0, "{summary}");
    assert!(dir.path().join("sweep_01.result").exists());
    assert!(dir.path().join("sweep_02.result").exists());
    let labels = fs::read_to_string(dir.path().join("sweep_labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 1 + 12);
}

#[test]
fn compare_single_cell_has_zero_variance() {
    let dir = TempDir::new().unwrap();
    let out = ok(&[
        "compare",
        "--input",
        "builtin:karate",
        "--replica-layers",
        "2",
        "--algorithm",
        "mspec",
        "--rho",
        "0.5",
        "--out",
        path(dir.path()),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("mspec"));
    let csv = fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "algorithm,rho=0.5,Variance,Mean");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "mspec");
    assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
    assert_eq!(row[1].parse::<f64>().unwrap(), row[3].parse::<f64>().unwrap());
}

#[test]
fn compare_rejects_density_outside_unit_interval() {
    let dir = TempDir::new().unwrap();
    let out = mlmod(&["compare", "--input", "builtin:karate", "--rho", "1.5", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn convert_identity_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let edges = write(dir.path(), "two.edges", TWO_LAYERS);
    let layers = write(dir.path(), "two.layers", TWO_LAYER_FILE);
    ok(&["convert", "--input", &edges, "--layers-file", &layers, "--out", path(&first)]);
    ok(&[
        "convert",
        "--input",
        path(&first.join("network.edges")),
        "--layers-file",
        path(&first.join("network.layers")),
        "--out",
        path(&second),
    ]);
    for f in ["network.edges", "network.layers"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
}

const GRID_EDGES: &str = "\
1 1 2 1
1 2 3 1
2 1 2 1
3 2 3 1
4 1 3 1
";

#[test]
fn convert_flattens_a_two_by_two_grid() {
    let dir = TempDir::new().unwrap();
    let edges = write(dir.path(), "grid.edges", GRID_EDGES);
    let grid = write(dir.path(), "grid.layers", "1 a 1 1\n2 b 1 2\n3 c 2 1\n4 d 2 2\n");
    let couplings = write(dir.path(), "grid.couplings", "1 1 2\n2 3 4\n");
    let out_dir = dir.path().join("out");
    ok(&[
        "convert",
        "--input",
        &edges,
        "--grid-file",
        &grid,
        "--couplings-file",
        &couplings,
        "--out",
        path(&out_dir),
    ]);
    let layers = fs::read_to_string(out_dir.join("network.layers")).unwrap();
    assert_eq!(layers.lines().filter(|l| !l.starts_with('#')).count(), 4);
    assert!(out_dir.join("network.locations").exists());
    assert!(out_dir.join("network.couplings").exists());
}

#[test]
fn convert_rejects_ragged_grid() {
    let dir = TempDir::new().unwrap();
    let edges = write(dir.path(), "grid.edges", GRID_EDGES);
    let grid = write(dir.path(), "grid.layers", "1 a 1 1\n2 b 1 2\n3 c 2 1\n4 d 2 2 3\n");
    let out_dir = dir.path().join("out");
    let out = mlmod(&["convert", "--input", &edges, "--grid-file", &grid, "--out", path(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.join("network.edges").exists());
}

#[test]
fn detection_after_conversion_matches_flat_input() {
    let dir = TempDir::new().unwrap();
    let edges = write(dir.path(), "two.edges", TWO_LAYERS);
    let layers = write(dir.path(), "two.layers", TWO_LAYER_FILE);
    let conv = dir.path().join("conv");
    ok(&["convert", "--input", &edges, "--layers-file", &layers, "--out", path(&conv)]);
    let direct = dir.path().join("direct");
    let via = dir.path().join("via");
    ok(&["detect", "--input", &edges, "--layers-file", &layers, "--out", path(&direct)]);
    ok(&[
        "detect",
        "--input",
        path(&conv.join("network.edges")),
        "--layers-file",
        path(&conv.join("network.layers")),
        "--out",
        path(&via),
    ]);
    let a = load_result(&direct.join("mspec.result")).unwrap();
    let b = load_result(&via.join("mspec.result")).unwrap();
    assert_eq!(a.result.partition, b.result.partition);
    assert_eq!(a.result.q_total, b.result.q_total);

    let text = fs::read_to_string(conv.join("network.edges")).unwrap();
    let lt = fs::read_to_string(conv.join("network.layers")).unwrap();
    let net = parse_multiplex(Source::new("e", &text), Some(Source::new("l", &lt)), None).unwrap();
    assert_eq!(net.n_layers(), 2);
    assert_eq!(net.n_nodes(), 6);
}
