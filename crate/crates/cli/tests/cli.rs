//! End-to-end runs of the `lcosd` binary.

use std::fs;
use std::process::{Command, Output};

fn lcosd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcosd")).args(args).env_remove("LCOSD_WORKERS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SIM: &[&str] = &[
    "simulate",
    "--n=16",
    "--k=8",
    "--code-seed=4",
    "--ebn0=2,4",
    "--delta=4",
    "--l-max=64",
    "--max-frames=400",
    "--max-errors=1000",
    "--no-timing",
    "--mld",
];

#[test]
fn simulate_is_reproducible_across_worker_counts() {
    let one = lcosd(&[SIM, &["--workers=1"]].concat());
    let two = lcosd(&[SIM, &["--workers=2"]].concat());
    assert!(one.status.success(), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, two.stdout);
    let text = stdout(&one);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "ebn0_db,frames,errors,fer,l_avg,ml_certified,seconds,mld_errors,mld_fer");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r[1], "400");
        assert_eq!(r[6], "0.000");
        let errors: u64 = r[2].parse().unwrap();
        let mld: u64 = r[7].parse().unwrap();
        assert!(mld <= errors);
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# predictor run\nn=64\nk=32\ndelta=4\nl_max=1,16\nebn0=2\nsamples=500\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = lcosd(&["predict", "--config", cfg]);
    assert!(from_file.status.success(), "{}", String::from_utf8_lossy(&from_file.stderr));
    assert!(stdout(&from_file).starts_with("ebn0_db,eps_1,eps_16,cond_mean,bound\n"));

    let out = dir.path().join("p.csv");
    let overridden = lcosd(&["predict", "--config", cfg, "--l-max=1,2,4", "--output", out.to_str().unwrap()]);
    assert!(overridden.status.success());
    assert!(overridden.stdout.is_empty());
    assert!(fs::read_to_string(&out).unwrap().starts_with("ebn0_db,eps_1,eps_2,eps_4,cond_mean,bound\n"));
}

#[test]
fn configuration_errors_exit_with_status_two() {
    let cases: &[&[&str]] = &[
        &["simulate", "--n=16", "--k=8", "--ebn0=2", "--delta=9", "--l-max=4"],
        &["simulate", "--ebn0=2", "--delta=1", "--l-max=4"],
        &["predict", "--n=16", "--k=8", "--delta=2", "--l-max=0", "--ebn0=1"],
        &["tune", "--n=64", "--k=32", "--ebn0=2", "--target=1.5"],
        &["count-dist", "--n=64", "--k=32", "--delta=4", "--ebn0=2", "--cap=10", "--thresholds=100"],
        &["predict", "--config", "/nonexistent/lcosd.cfg"],
        &["frobnicate"],
    ];
    for args in cases {
        assert_eq!(lcosd(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn unreadable_code_file_is_a_configuration_error_and_bad_output_path_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.alist");
    fs::write(&bad, "not an alist").unwrap();
    let o = lcosd(&["simulate", "--alist", bad.to_str().unwrap(), "--ebn0=2", "--delta=1", "--l-max=4"]);
    assert_eq!(o.status.code(), Some(2));

    let o = lcosd(&[
        "count-dist",
        "--n=32",
        "--k=16",
        "--delta=4",
        "--ebn0=2",
        "--samples=50",
        "--thresholds=10",
        "--output",
        "/nonexistent/dir/out.csv",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn tune_and_count_dist_emit_tables() {
    let t = lcosd(&["tune", "--n=64", "--k=32", "--ebn0=2", "--target=0.5", "--deltas=2,4", "--samples=300"]);
    assert!(t.status.success());
    let text = stdout(&t);
    assert!(text.starts_with("delta,l_star,t_avg_ms,t_max_ms,best\n"));
    // A lax target is met with a single search, and the smallest δ is cheapest.
    assert!(text.contains("\n2,1,") && text.lines().nth(1).unwrap().ends_with(",1"));

    let c = lcosd(&["count-dist", "--n=32", "--k=16", "--delta=4", "--ebn0=1", "--samples=200", "--workers=1"]);
    assert!(c.status.success());
    assert_eq!(stdout(&c).lines().count(), 5);
}
