use std::process::Command;

fn qwsearch(args: &[&str], threads: &str) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qwsearch"))
        .args(args)
        .env("QWSEARCH_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str], threads: &str) -> String {
    let out = qwsearch(args, threads);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn exact_hitting_time_csv() {
    let text = stdout(&["--quantity", "ht", "--torus", "9"], "1");
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# qwsearch quantity=ht"));
    assert!(text.contains("quantity,value,error_bound,method,seed"));
    assert!(text.contains("ht,1.6325556438791"));
}

#[test]
fn same_seed_same_bytes_across_thread_counts() {
    let args = [
        "--quantity", "ht", "--torus", "7", "--method", "monte-carlo", "--samples", "30000", "--seed", "9",
    ];
    assert_eq!(stdout(&args, "1"), stdout(&args, "3"));
    let sim = ["--quantity", "traj-sim", "--star", "2", "--steps", "40", "--s", "0,0.5", "--seed", "2"];
    assert_eq!(stdout(&sim, "1"), stdout(&sim, "4"));
}

#[test]
fn chain_round_trip_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("torus.txt");
    let text = stdout(&["--quantity", "chain", "--torus", "3"], "1");
    let body: String = text.lines().filter(|l| !l.starts_with("# qwsearch")).map(|l| format!("{l}\n")).collect();
    std::fs::write(&path, body).unwrap();
    let p = path.to_str().unwrap();
    let from_file = stdout(&["--quantity", "ht", "--file", p, "--marked", "0"], "1");
    let direct = stdout(&["--quantity", "ht", "--torus", "3", "--marked", "0"], "1");
    let value = |s: &str| s.lines().find(|l| l.starts_with("ht,")).unwrap().split(',').nth(1).unwrap().to_string();
    assert_eq!(value(&from_file), value(&direct));
}

#[test]
fn errors_are_reported_on_stderr() {
    let out = qwsearch(&["--quantity", "ht", "--torus", "4", "--marked", ""], "1");
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error,InvalidMarkedSet,"), "{err}");
    let out = qwsearch(&["--quantity", "ht"], "1");
    assert!(!out.status.success());
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let args = ["--quantity", "lemma5-grid", "--lemma-t", "1,3", "--p-points", "5", "--samples", "2000"];
    let direct = stdout(&args, "1");
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    stdout(&with_out, "2");
    assert_eq!(std::fs::read_to_string(&path).unwrap(), direct);
}
