//! End-to-end tests of the command-line interface: flag handling, exit
//! codes, output files, and run-to-run determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chebeig"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn chebeig")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn summary_field(stdout: &str, key: &str) -> String {
    let line = stdout
        .lines()
        .find(|l| l.starts_with("iters="))
        .unwrap_or_else(|| panic!("no summary line in {stdout:?}"));
    line.split_whitespace()
        .find_map(|tok| tok.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("missing {key} in {line:?}"))
        .to_string()
}

#[test]
fn generate_writes_expected_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.bin");
    let res = run(&[
        "generate", "--n", "100", "--uniform", "0,1", "--seed", "1", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr_of(&res));
    assert_eq!(std::fs::metadata(&out).unwrap().len(), 80_000);
    let printed = stdout_of(&res);
    assert!(printed.contains("n=100"), "summary: {printed}");
    assert!(printed.contains("seed=1"));

    // Same flags twice: byte-identical output.
    let out2 = dir.path().join("m2.bin");
    let res2 = run(&[
        "generate", "--n", "100", "--uniform", "0,1", "--seed", "1", "--out",
        out2.to_str().unwrap(),
    ]);
    assert!(res2.status.success());
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(&out2).unwrap()
    );
}

#[test]
fn generate_rejects_zero_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z.bin");
    let res = run(&[
        "generate", "--n", "0", "--uniform", "0,1", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(1), "{}", stderr_of(&res));
}

#[test]
fn unknown_flag_is_usage_error() {
    let res = run(&["solve", "--frobnicate"]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn uniform_and_matrix_file_conflict() {
    let res = run(&[
        "solve", "--n", "10", "--uniform", "0,1", "--matrix-file", "x.bin", "--nev", "2",
        "--nex", "2",
    ]);
    assert_eq!(res.status.code(), Some(1));
    let res = run(&["solve", "--n", "10", "--nev", "2", "--nex", "2"]);
    assert_eq!(res.status.code(), Some(1), "need a matrix source");
}

fn solve_small(dir: &Path, extra: &[&str]) -> Output {
    let evals = dir.join("evals.txt");
    let stats = dir.join("stats.csv");
    let mut args = vec![
        "solve".to_string(),
        "--n".into(), "60".into(),
        "--uniform".into(), "0,1".into(),
        "--nev".into(), "6".into(),
        "--nex".into(), "6".into(),
        "--grid".into(), "2x2".into(),
        "--seed".into(), "1".into(),
        "--out-evals".into(), evals.to_str().unwrap().into(),
        "--stats".into(), stats.to_str().unwrap().into(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    bin().args(&args).output().expect("spawn chebeig")
}

#[test]
fn solve_produces_ascending_eigenvalues_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let res = solve_small(dir.path(), &[]);
    assert_eq!(res.status.code(), Some(0), "{}", stderr_of(&res));

    let evals: Vec<f64> = std::fs::read_to_string(dir.path().join("evals.txt"))
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(evals.len(), 6);
    assert!(evals.iter().all(|x| x.is_finite()));
    assert!(evals.windows(2).all(|w| w[0] <= w[1]));
    // Uniform[0,1] at N=60: λ_k = (k−1)/59.
    for (k, lam) in evals.iter().enumerate() {
        let want = k as f64 / 59.0;
        assert!((lam - want).abs() < 1e-9, "λ{k} = {lam}");
    }

    let stats = std::fs::read_to_string(dir.path().join("stats.csv")).unwrap();
    assert!(stats.starts_with("# scalar=r64\nkernel,iteration,"));
    let records = chebeig::profiler::parse_csv(&stats).unwrap();
    assert!(records.iter().any(|r| r.kernel.name() == "Filter"));
    assert!(records.iter().any(|r| r.kernel.name() == "Lanczos"));

    let out = stdout_of(&res);
    let iters: usize = summary_field(&out, "iters").parse().unwrap();
    assert!(iters >= 1);
    let locked: usize = summary_field(&out, "locked").parse().unwrap();
    assert!(locked >= 6);
    summary_field(&out, "time_s");
}

#[test]
fn unsupported_grid_is_rejected() {
    let res = run(&[
        "solve", "--n", "60", "--uniform", "0,1", "--nev", "6", "--nex", "6", "--grid",
        "3x2", "--dist", "block-cyclic",
    ]);
    assert_eq!(res.status.code(), Some(1));
    let msg = stderr_of(&res);
    assert!(
        msg.contains("unsupported") && msg.contains("redistribution"),
        "message: {msg}"
    );
}

#[test]
fn qr_variants_share_convergence_counts() {
    let dir = tempfile::tempdir().unwrap();
    let auto = solve_small(dir.path(), &["--qr", "auto"]);
    assert_eq!(auto.status.code(), Some(0), "{}", stderr_of(&auto));
    let hh = solve_small(dir.path(), &["--qr", "hhqr"]);
    assert_eq!(hh.status.code(), Some(0), "{}", stderr_of(&hh));
    let (sa, sh) = (stdout_of(&auto), stdout_of(&hh));
    assert_eq!(summary_field(&sa, "iters"), summary_field(&sh, "iters"));
    assert_eq!(summary_field(&sa, "matvecs"), summary_field(&sh, "matvecs"));
}

#[test]
fn deterministic_outputs() {
    let da = tempfile::tempdir().unwrap();
    let db = tempfile::tempdir().unwrap();
    let ra = solve_small(da.path(), &[]);
    let rb = solve_small(db.path(), &[]);
    assert_eq!(ra.status.code(), Some(0));
    assert_eq!(rb.status.code(), Some(0));
    assert_eq!(
        std::fs::read(da.path().join("evals.txt")).unwrap(),
        std::fs::read(db.path().join("evals.txt")).unwrap(),
        "eigenvalue files must be byte-identical"
    );
    // Stats: identical apart from the timing columns.
    let pa = chebeig::profiler::parse_csv(
        &std::fs::read_to_string(da.path().join("stats.csv")).unwrap(),
    )
    .unwrap();
    let pb = chebeig::profiler::parse_csv(
        &std::fs::read_to_string(db.path().join("stats.csv")).unwrap(),
    )
    .unwrap();
    assert_eq!(pa.len(), pb.len());
    for (x, y) in pa.iter().zip(&pb) {
        assert_eq!(x.kernel, y.kernel);
        assert_eq!(x.iteration, y.iteration);
        assert_eq!(x.messages, y.messages);
        assert_eq!(x.words, y.words);
    }
}

#[test]
fn matrix_file_roundtrip_and_size_check() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.bin");
    let res = run(&[
        "generate", "--n", "40", "--uniform", "0,1", "--seed", "3", "--out",
        m.to_str().unwrap(),
    ]);
    assert!(res.status.success());

    let evals = dir.path().join("e.txt");
    let res = run(&[
        "solve", "--n", "40", "--matrix-file", m.to_str().unwrap(), "--nev", "4", "--nex",
        "4", "--seed", "3", "--grid", "2x1", "--out-evals", evals.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", stderr_of(&res));

    // Wrong --n for the file: I/O error, exit 2.
    let res = run(&[
        "solve", "--n", "41", "--matrix-file", m.to_str().unwrap(), "--nev", "4", "--nex", "4",
    ]);
    assert_eq!(res.status.code(), Some(2));
    // Missing file: exit 2.
    let res = run(&[
        "solve", "--n", "40", "--matrix-file", "no-such-file.bin", "--nev", "4", "--nex", "4",
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn non_convergence_exits_3_with_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let res = solve_small(dir.path(), &["--max-iter", "1", "--tol", "1e-14"]);
    assert_eq!(res.status.code(), Some(3), "{}", stderr_of(&res));
    // Partial outputs still written.
    assert!(dir.path().join("evals.txt").exists());
    assert!(dir.path().join("stats.csv").exists());
    let evals: Vec<f64> = std::fs::read_to_string(dir.path().join("evals.txt"))
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(evals.len(), 6);
}

#[test]
fn complex_scalar_solve() {
    let dir = tempfile::tempdir().unwrap();
    let evals = dir.path().join("c.txt");
    let res = run(&[
        "solve", "--n", "48", "--uniform", "-1,1", "--scalar", "c128", "--nev", "4", "--nex",
        "4", "--grid", "2x2", "--seed", "2", "--out-evals", evals.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", stderr_of(&res));
    let vals: Vec<f64> = std::fs::read_to_string(&evals)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    for (k, lam) in vals.iter().enumerate() {
        let want = -1.0 + 2.0 * k as f64 / 47.0;
        assert!((lam - want).abs() < 1e-9, "λ{k} = {lam}");
    }
}

#[test]
fn eigenvector_output_has_matrix_file_format() {
    let dir = tempfile::tempdir().unwrap();
    let evecs = dir.path().join("v.bin");
    let res = run(&[
        "solve", "--n", "30", "--uniform", "0,1", "--nev", "3", "--nex", "3", "--seed", "4",
        "--out-evecs", evecs.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", stderr_of(&res));
    assert_eq!(std::fs::metadata(&evecs).unwrap().len(), 30 * 3 * 8);
}
