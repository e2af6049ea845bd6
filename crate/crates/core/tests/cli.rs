use std::path::Path;
use std::process::{Command, Output};

fn rideshare(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rideshare"))
        .current_dir(dir)
        .env_remove("RIDESHARE_SEED")
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = rideshare(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Graph plus a small, quickly trained model.
fn fixture(dir: &Path) {
    ok(
        dir,
        &[
            "gen-graph",
            "--vertices",
            "35",
            "--seed",
            "7",
            "-o",
            "g.txt",
        ],
    );
    ok(
        dir,
        &[
            "gen-data",
            "--examples",
            "400",
            "--seed",
            "2",
            "-o",
            "d.csv",
        ],
    );
    ok(
        dir,
        &[
            "train", "--data", "d.csv", "--epochs", "5", "--seed", "2", "-o", "m.txt",
        ],
    );
}

fn avg_sat(text: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix("avg_sat "))
        .unwrap()
        .trim()
        .parse()
        .unwrap()
}

#[test]
fn pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    for alg in ["simsat", "optimal", "cost", "gain"] {
        let out = ok(
            d,
            &[
                "solve",
                "--graph",
                "g.txt",
                "--model",
                "m.txt",
                "--passengers",
                "7",
                "--algorithm",
                alg,
            ],
        );
        let v = avg_sat(&out);
        assert!((1.0..=7.0).contains(&v), "{alg}: {v}");
        assert!(out.lines().filter(|l| l.starts_with("cab ")).count() >= 2);
    }
}

#[test]
fn time_only_reports_four() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    for seed in ["1", "2", "3"] {
        let out = ok(
            d,
            &[
                "solve",
                "--graph",
                "g.txt",
                "--model",
                "m.txt",
                "--algorithm",
                "time",
                "--seed",
                seed,
            ],
        );
        assert_eq!(avg_sat(&out), 4.0);
    }
}

#[test]
fn bench_writes_one_aggregate_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    ok(
        d,
        &[
            "bench",
            "--graph",
            "g.txt",
            "--model",
            "m.txt",
            "--n",
            "6..10",
            "--samples",
            "2",
            "--out",
            "b",
            "--chart",
        ],
    );
    let agg = std::fs::read_to_string(d.join("b/aggregate.csv")).unwrap();
    assert_eq!(
        agg.lines().next().unwrap(),
        "algorithm,n,mean_sat,stderr,mean_cost"
    );
    assert_eq!(agg.lines().count(), 1 + 25);
    let results = std::fs::read_to_string(d.join("b/results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 25 * 2);
    assert!(d.join("b/chart.svg").exists());

    ok(d, &["report", "--results", "b/results.csv", "--out", "r"]);
    assert_eq!(
        std::fs::read_to_string(d.join("r/aggregate.csv")).unwrap(),
        agg
    );
}

#[test]
fn same_arguments_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for out in ["a", "b"] {
        ok(
            d,
            &[
                "gen-graph",
                "--vertices",
                "40",
                "--seed",
                "5",
                "-o",
                &format!("{out}.graph"),
            ],
        );
        ok(
            d,
            &[
                "gen-data",
                "--examples",
                "200",
                "--seed",
                "5",
                "-o",
                &format!("{out}.csv"),
            ],
        );
        ok(
            d,
            &[
                "train",
                "--data",
                &format!("{out}.csv"),
                "--epochs",
                "3",
                "--seed",
                "5",
                "-o",
                &format!("{out}.model"),
            ],
        );
    }
    for ext in ["graph", "csv", "model"] {
        let a = std::fs::read(d.join(format!("a.{ext}"))).unwrap();
        let b = std::fs::read(d.join(format!("b.{ext}"))).unwrap();
        assert_eq!(a, b, "{ext}");
    }
}

#[test]
fn seed_comes_from_flag_then_config_then_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("c.cfg"), "seed = 9\n").unwrap();
    let seed_line = |out: Output| {
        let err = String::from_utf8(out.stderr).unwrap();
        err.split_whitespace()
            .find(|w| w.starts_with("seed="))
            .unwrap()
            .to_string()
    };
    let run = |args: &[&str], env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_rideshare"));
        c.current_dir(d).env_remove("RIDESHARE_SEED").args(args);
        if let Some(v) = env {
            c.env("RIDESHARE_SEED", v);
        }
        c.output().unwrap()
    };
    let base = ["gen-graph", "-o", "g.txt"];
    assert_eq!(seed_line(run(&base, None)), "seed=0");
    assert_eq!(seed_line(run(&base, Some("4"))), "seed=4");
    let cfg = ["--config", "c.cfg", "gen-graph", "-o", "g.txt"];
    assert_eq!(seed_line(run(&cfg, Some("4"))), "seed=9");
    let flag = [
        "--config",
        "c.cfg",
        "gen-graph",
        "-o",
        "g.txt",
        "--seed",
        "3",
    ];
    assert_eq!(seed_line(run(&flag, Some("4"))), "seed=3");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let code = |args: &[&str]| rideshare(d, args).status.code().unwrap();
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["gen-graph", "--no-such-flag", "-o", "x"]), 1);
    assert_eq!(code(&["no-such-command"]), 1);
    assert_eq!(code(&["gen-graph", "--grid", "3by4", "-o", "x"]), 1);
    std::fs::write(d.join("bad.cfg"), "colour = blue\n").unwrap();
    assert_eq!(code(&["--config", "bad.cfg", "gen-graph", "-o", "x"]), 1);
    // Missing input file is a failure at run time.
    assert_eq!(code(&["report", "--results", "missing.csv"]), 2);
    ok(d, &["gen-graph", "--vertices", "35", "-o", "g.txt"]);
    std::fs::write(d.join("m.txt"), "not a model").unwrap();
    assert_eq!(
        code(&[
            "solve",
            "--graph",
            "g.txt",
            "--model",
            "m.txt",
            "--algorithm",
            "optimal",
            "--passengers",
            "11"
        ]),
        1
    );
}

#[test]
fn import_and_crop() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // A path 0-1-2-3-4 with a shortcut 0-4.
    std::fs::write(d.join("n.csv"), "0,0,0\n1,1,0\n2,2,0\n3,3,0\n4,4,0\n").unwrap();
    std::fs::write(d.join("e.csv"), "0,1,1\n1,2,1\n2,3,1\n3,4,1\n0,4,1.5\n").unwrap();
    ok(
        d,
        &[
            "import-graph",
            "--nodes",
            "n.csv",
            "--edges",
            "e.csv",
            "--origin",
            "0",
            "--crop",
            "3",
            "-o",
            "g.txt",
        ],
    );
    let text = std::fs::read_to_string(d.join("g.txt")).unwrap();
    let nodes: Vec<&str> = text.lines().filter(|l| l.starts_with("N ")).collect();
    assert_eq!(nodes.len(), 3);
    assert!(nodes.iter().any(|l| l.starts_with("N 4 ")));
    assert!(!nodes
        .iter()
        .any(|l| l.starts_with("N 2 ") || l.starts_with("N 3 ")));
    assert_eq!(
        rideshare(
            d,
            &[
                "import-graph",
                "--nodes",
                "n.csv",
                "--edges",
                "e.csv",
                "--origin",
                "9",
                "-o",
                "x"
            ]
        )
        .status
        .code(),
        Some(1)
    );
}
