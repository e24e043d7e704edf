use std::process::{Command, Output};

fn ring_gather(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ring-gather"))
        .args(args)
        .env_remove("RING_GATHER_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn classify_terminal() {
    let o = ring_gather(&["classify", "--occ", "11111.11111...."]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("tag: Terminal\n"), "{out}");
    assert!(out.contains("symmetry: Symmetric"));
}

#[test]
fn classify_rejects_bad_string() {
    let o = ring_gather(&["classify", "--occ", "11#.."]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("invalid occupancy character"));
}

#[test]
fn simulate_terminal_gathers() {
    let o = ring_gather(&[
        "simulate",
        "--occ",
        "11111.11111....",
        "--n",
        "15",
        "--k",
        "10",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("outcome: Gathered"));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines.len() > 2);
    assert!(lines[0].contains("\"scheduler\":\"synchronous\""));
    assert!(lines.last().unwrap().contains("Gathered"));
}

#[test]
fn simulate_writes_file_and_seed_from_env() {
    let dir = std::env::temp_dir().join(format!("ring-gather-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let a = dir.join("a.jsonl");
    let b = dir.join("b.jsonl");
    let occ = "11.111.1.1.111.";
    let o = ring_gather(&[
        "simulate",
        "--occ",
        occ,
        "--scheduler",
        "random",
        "--seed",
        "7",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_ring-gather"))
        .args([
            "simulate",
            "--occ",
            occ,
            "--scheduler",
            "random",
            "--out",
            b.to_str().unwrap(),
        ])
        .env("RING_GATHER_SEED", "7")
        .output()
        .unwrap();
    assert!(o.status.success());
    let ta = std::fs::read_to_string(&a).unwrap();
    assert_eq!(ta, std::fs::read_to_string(&b).unwrap());
    assert!(ta.lines().next().unwrap().contains("\"seed\":7"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn simulate_names_violated_constraint() {
    let cases = [
        (
            "1111111111.....",
            "--k",
            "9",
            "occupancy string has 10 robots",
        ),
        ("11111.1111.....", "", "", "k must be even"),
        ("1111.1111......", "", "", "k must be greater than 8"),
        ("11111.11111.....", "", "", "n must be odd"),
        ("11111.11111..", "", "", "n must be greater than k+3"),
    ];
    for (occ, flag, val, msg) in cases {
        let mut args = vec!["simulate", "--occ", occ];
        if !flag.is_empty() {
            args.extend([flag, val]);
        }
        let o = ring_gather(&args);
        assert_eq!(o.status.code(), Some(2), "{occ}");
        assert!(stderr(&o).contains(msg), "{occ}: {}", stderr(&o));
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn simulate_rejects_exhaustive_and_unknown_schedulers() {
    let o = ring_gather(&[
        "simulate",
        "--occ",
        "11111.11111....",
        "--scheduler",
        "exhaustive",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = ring_gather(&[
        "simulate",
        "--occ",
        "11111.11111....",
        "--scheduler",
        "fifo",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown scheduler"));
}

#[test]
fn enumerate_relaxed_excludes_periodic() {
    let o = ring_gather(&["enumerate", "--n", "9", "--k", "3", "--relaxed"]);
    assert!(o.status.success());
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    // 7 necklace classes of 3 beads on 9 nodes up to dihedral symmetry, one periodic.
    assert_eq!(lines.len(), 6);
    assert!(!lines.contains(&"..1..1..1".to_string()));
    assert!(stderr(&o).contains("count: 6"));
}

#[test]
fn enumerate_counts_valid_sizes() {
    let o = ring_gather(&["enumerate", "--n", "15", "--k", "10"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 110);
}

#[test]
fn enumerate_without_relaxed_checks_sizes() {
    let o = ring_gather(&["enumerate", "--n", "9", "--k", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("k must be even"));
}

#[test]
fn verify_small_grid_reports_json() {
    let o = ring_gather(&[
        "verify",
        "--n",
        "15",
        "--random-runs",
        "1",
        "--lazy-runs",
        "1",
        "--jobs",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["runs"], 330);
    assert_eq!(report["initial_configs"]["15"], 110);
    assert_eq!(report["all_passed"], true);
    assert_eq!(report["checks"]["round_bound"]["passed"], 330);
    assert_eq!(report["phase2_transitions"]["15"]["passed"], true);
    assert!(report["wall_clock_secs"].as_f64().is_some());
}

#[test]
fn verify_fails_on_tight_round_bound() {
    let o = ring_gather(&[
        "verify",
        "--n",
        "15",
        "--random-runs",
        "0",
        "--lazy-runs",
        "0",
        "--c",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["all_passed"], false);
    let first = &report["checks"]["round_bound"]["first_counterexample"];
    assert_eq!(first["scheduler"], "synchronous");
    assert!(first["description"].as_str().unwrap().contains("exceeds 0"));
}
