use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use indset::config::BenchmarkConfig;
use indset::io;
use indset_core::partition::{self, Partition};
use indset_core::stats;

fn indset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_indset"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = indset(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(args: &[&str]) -> i32 {
    indset(args).status.code().unwrap()
}

fn repo(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
        .display()
        .to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_design(path: &Path) -> (io::Header, Vec<io::DesignRow>) {
    io::read_design(std::io::BufReader::new(fs::File::open(path).unwrap())).unwrap()
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.edges"), dir.path().join("b.edges"));
    for out in [&a, &b] {
        ok(&[
            "generate",
            "--family",
            "ER",
            "--n",
            "60",
            "--p",
            "0.1",
            "--seed",
            "9",
            "--out",
            s(out),
        ]);
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.contains("# params = n=60;p=0.1"));
    assert!(text.contains("# seed = 9"));

    let empty = ok(&[
        "generate", "--family", "ER", "--n", "10", "--p", "0", "--seed", "1",
    ]);
    let body = String::from_utf8(empty.stdout).unwrap();
    assert!(body.lines().all(|l| l.starts_with('#')));
    assert!(String::from_utf8_lossy(&empty.stderr).contains("edges = 0"));
}

#[test]
fn parameter_errors_exit_with_two() {
    assert_eq!(
        code(&["generate", "--family", "ER", "--n", "10", "--p", "2", "--seed", "1"]),
        2
    );
    assert_eq!(
        code(&["generate", "--family", "BA", "--n", "10", "--seed", "1"]),
        2
    );
    let fig = repo("fixtures/small12.edges");
    let args = [
        "design",
        "--graph",
        &fig,
        "--one-based",
        "--estimand",
        "total",
        "--rho-target",
        "0.5",
        "--seed",
        "1",
    ];
    assert_eq!(code(&args), 2);
}

#[test]
fn figure_one_total_design() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let fig = repo("fixtures/small12.edges");
    ok(&[
        "design",
        "--graph",
        &fig,
        "--one-based",
        "--estimand",
        "total",
        "--sigma",
        "0.5",
        "--seed",
        "4",
        "--out",
        s(&out),
    ]);
    let (h, rows) = read_design(&out);
    assert_eq!(rows.len(), 12);
    assert_eq!(h.get("estimand"), Some("total"));
    // ids stay 1-based and the partition is valid on the loaded graph
    let g = indset::cli::read_graph(Path::new(&fig), true).unwrap();
    let independent: Vec<usize> = rows
        .iter()
        .filter(|r| r.set == 'I')
        .map(|r| r.vertex_id - 1)
        .collect();
    Partition::from_independent(&g, &independent)
        .unwrap()
        .check(&g)
        .unwrap();
    // the treatment of an independent unit follows its exposure
    for r in rows.iter().filter(|r| r.set == 'I') {
        assert_eq!(r.z == 1, r.rho.unwrap() > 0.5);
    }
}

/// Recomputes every independent unit's exposure from the graph and Z_A.
fn check_exposures(graph: &str, one_based: bool, rows: &[io::DesignRow]) {
    let g = indset::cli::read_graph(Path::new(graph), one_based).unwrap();
    let base = usize::from(one_based);
    let mut z = vec![false; g.n()];
    for r in rows.iter().filter(|r| r.set == 'A') {
        z[r.vertex_id - base] = r.z == 1;
    }
    let rho = partition::full_exposure(&g, &z).unwrap();
    for r in rows.iter().filter(|r| r.set == 'I') {
        assert!((r.rho.unwrap() - rho[r.vertex_id - base]).abs() < 1e-12);
        assert_eq!(r.degree, g.degree(r.vertex_id - base));
    }
}

#[test]
fn direct_design_at_zero_exposure() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.edges");
    let out = dir.path().join("d.csv");
    ok(&[
        "generate",
        "--family",
        "ER",
        "--n",
        "80",
        "--p",
        "0.1",
        "--seed",
        "2",
        "--out",
        s(&graph),
    ]);
    ok(&[
        "design",
        "--graph",
        s(&graph),
        "--estimand",
        "direct",
        "--rho-target",
        "0",
        "--lipschitz",
        "10",
        "--seed",
        "3",
        "--out",
        s(&out),
    ]);
    let (h, rows) = read_design(&out);
    assert!(rows.iter().filter(|r| r.set == 'A').all(|r| r.z == 0));
    assert_eq!(h.parse::<f64>("norm_delta").unwrap(), Some(0.0));
    assert_eq!(h.parse::<f64>("bias_bound").unwrap(), Some(0.0));
    check_exposures(s(&graph), false, &rows);
    let used: Vec<_> = rows.iter().filter(|r| r.used == 1).collect();
    assert_eq!(used.iter().filter(|r| r.z == 1).count() * 2, used.len());
}

#[test]
fn spillover_design_reports_its_objective() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("path.edges");
    fs::write(&graph, "0 1\n1 2\n2 3\n3 4\n4 5\n5 6\n6 7\n").unwrap();
    let out = dir.path().join("d.csv");
    ok(&[
        "design",
        "--graph",
        s(&graph),
        "--estimand",
        "spillover",
        "--seed",
        "5",
        "--out",
        s(&out),
    ]);
    let (h, rows) = read_design(&out);
    let rho: Vec<f64> = rows.iter().filter_map(|r| r.rho).collect();
    let objective = rho.len() as f64 * stats::variance(&rho);
    assert!((h.parse::<f64>("objective").unwrap().unwrap() - objective).abs() < 1e-12);
    check_exposures(s(&graph), false, &rows);
    // the design file reproduces itself from its header
    let again = dir.path().join("again.csv");
    ok(&[
        "design",
        "--graph",
        s(&graph),
        "--estimand",
        "spillover",
        "--seed",
        h.get("seed").unwrap(),
        "--out",
        s(&again),
    ]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

fn write_outcomes(path: &Path, rows: &[io::DesignRow], f: impl Fn(&io::DesignRow) -> f64) {
    let y: Vec<(usize, f64)> = rows.iter().map(|r| (r.vertex_id, f(r))).collect();
    let mut buf = Vec::new();
    io::write_outcomes(&io::Header::new(), &y, &mut buf).unwrap();
    fs::write(path, buf).unwrap();
}

fn estimate_row(design: &Path, outcomes: &Path) -> Vec<String> {
    let out = ok(&["estimate", "--design", s(design), "--outcomes", s(outcomes)]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(
        lines.next(),
        Some("estimand,point,predicted_variance,bias_bound,norm_delta,var_rho")
    );
    lines.next().unwrap().split(',').map(String::from).collect()
}

#[test]
fn estimates_recover_noiseless_effects() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.edges");
    ok(&[
        "generate",
        "--family",
        "ER",
        "--n",
        "100",
        "--p",
        "0.1",
        "--seed",
        "8",
        "--out",
        s(&graph),
    ]);
    for (estimand, truth) in [("spillover", 10.0), ("total", 30.0)] {
        let design = dir.path().join(format!("{estimand}.csv"));
        ok(&[
            "design",
            "--graph",
            s(&graph),
            "--estimand",
            estimand,
            "--sigma",
            "0.5",
            "--seed",
            "1",
            "--out",
            s(&design),
        ]);
        let (_, rows) = read_design(&design);
        let y = dir.path().join("y.csv");
        write_outcomes(&y, &rows, |r| {
            1.0 + 20.0 * f64::from(r.z) + 10.0 * r.rho.unwrap_or(0.0)
        });
        let row = estimate_row(&design, &y);
        assert_eq!(
            row[0],
            if estimand == "total" {
                "total"
            } else {
                "spillover(z=1)"
            }
        );
        assert!((row[1].parse::<f64>().unwrap() - truth).abs() < 1e-9);
        assert!(row[2].parse::<f64>().unwrap() > 0.0);

        write_outcomes(&y, &rows, |_| 7.0);
        assert!(estimate_row(&design, &y)[1].parse::<f64>().unwrap().abs() < 1e-9);
    }
}

const HAND_DESIGN: &str = "\
# estimand = direct
# rho_target = 0.5
vertex_id,set,z,rho,degree,used
1,I,1,0.5,2,1
2,I,1,0.5,2,1
3,I,0,0.5,2,1
4,I,0,0.5,2,1
5,A,1,,4,0
";

#[test]
fn hand_computed_difference_in_means() {
    let dir = tempfile::tempdir().unwrap();
    let design = dir.path().join("d.csv");
    let y = dir.path().join("y.csv");
    fs::write(&design, HAND_DESIGN).unwrap();
    fs::write(&y, "vertex_id,y\n1,5\n2,4\n3,2\n4,1\n").unwrap();
    let row = estimate_row(&design, &y);
    assert_eq!(row[0], "direct(0.5)");
    assert_eq!(row[1].parse::<f64>().unwrap(), 3.0);
    assert_eq!(row[4].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn missing_outcomes_list_the_units() {
    let dir = tempfile::tempdir().unwrap();
    let design = dir.path().join("d.csv");
    let y = dir.path().join("y.csv");
    fs::write(&design, HAND_DESIGN).unwrap();
    fs::write(&y, "vertex_id,y\n1,5\n3,2\n").unwrap();
    let out = indset(&["estimate", "--design", s(&design), "--outcomes", s(&y)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2, 4"));
}

#[test]
fn degenerate_designs_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let design = dir.path().join("d.csv");
    let y = dir.path().join("y.csv");
    fs::write(
        &design,
        HAND_DESIGN
            .replace("direct", "spillover")
            .replace("# rho_target = 0.5", "# z = 1"),
    )
    .unwrap();
    fs::write(&y, "vertex_id,y\n1,5\n2,4\n3,2\n4,1\n").unwrap();
    assert_eq!(
        code(&["estimate", "--design", s(&design), "--outcomes", s(&y)]),
        4
    );
}

#[test]
fn malformed_inputs_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("bad.edges");
    fs::write(&graph, "0 1\n2 2\n").unwrap();
    let out = indset(&[
        "design",
        "--graph",
        s(&graph),
        "--estimand",
        "total",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    assert_eq!(
        code(&[
            "design",
            "--graph",
            "/nonexistent/g.edges",
            "--estimand",
            "total",
            "--seed",
            "1"
        ]),
        3
    );
}

#[test]
fn simulate_writes_a_report_table() {
    let out = ok(&[
        "simulate",
        "--family",
        "ER",
        "--n",
        "40",
        "--p",
        "0.1",
        "--estimand",
        "spillover",
        "--reps",
        "20",
        "--seed",
        "3",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], indset::engine::REPORT_COLUMNS);
    assert_eq!(body.len(), 6);
    assert!(text.contains("# seed = 3"));
    assert_eq!(
        code(&[
            "simulate",
            "--family",
            "ER",
            "--n",
            "40",
            "--p",
            "0.1",
            "--estimand",
            "direct",
            "--designs",
            "EgoClusters",
            "--reps",
            "5",
            "--seed",
            "3"
        ]),
        2
    );
}

#[test]
fn benchmark_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.cfg");
    fs::write(
        &cfg,
        "seed = 5\nreps = 30\n[[graph]]\nfamily = \"SW\"\nn = 30\np = 0.1\n[[graph]]\nfamily = \"BA\"\nn = 30\nm = 1\n\
         [design]\nname = [\"IS\", \"CR\", \"EgoClusters\"]\nestimand = \"direct\"\n[sweep]\ngamma = [5, 10]\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&[
        "benchmark",
        "--config",
        s(&cfg),
        "--out",
        s(&a),
        "--threads",
        "1",
    ]);
    ok(&[
        "benchmark",
        "--config",
        s(&cfg),
        "--out",
        s(&b),
        "--threads",
        "3",
    ]);
    let mut names: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    // EgoClusters has no direct estimator and is skipped: 2 designs x 2 metrics x 2 graphs series
    assert_eq!(names.len(), 2 + 8);
    for n in &names {
        assert_eq!(
            fs::read(a.join(n)).unwrap(),
            fs::read(b.join(n)).unwrap(),
            "{n}"
        );
    }
    let grid = fs::read_to_string(a.join("tiny_grid.csv")).unwrap();
    assert!(grid.contains("gamma,graph,params,IS_bias,IS_variance,CR_bias,CR_variance"));
    assert!(!grid.contains("threads"));
}

#[test]
fn benchmark_schema_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.cfg");
    fs::write(&cfg, "seed = 1\nreps = 5\n[graph]\nfamily = \"ER\"\nn = 10\np = 0.1\n[design]\nname = []\nestimand = \"total\"\n").unwrap();
    let out = indset(&["benchmark", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("design.name"));
}

#[test]
fn shipped_configs_have_the_table_shapes() {
    let load = |name: &str| {
        BenchmarkConfig::from_toml(&fs::read_to_string(repo(&format!("configs/{name}"))).unwrap())
            .unwrap()
    };
    let t2 = load("table2.cfg");
    assert_eq!((t2.graphs.len(), t2.designs.len(), t2.reps), (7, 5, 2000));
    let t3 = load("table3.cfg");
    assert_eq!((t3.graphs.len(), t3.designs.len(), t3.reps), (7, 4, 2000));
    let f2 = load("fig2.cfg");
    assert_eq!(f2.sweep_gamma, vec![5.0, 10.0, 15.0, 20.0]);
    assert_eq!((f2.reps / f2.reps_per_graph, f2.reps_per_graph), (50, 40));
}
