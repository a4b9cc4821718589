use std::path::Path;
use std::process::{Command, Output};

fn driftbench(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftbench"))
        .args(args)
        .current_dir(cwd)
        .env("DRIFTBENCH_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn generate_writes_stream_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = driftbench(
        &[
            "generate", "--n", "40", "--d", "3", "--powers", "4", "--seed", "7", "--out", "s.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x_1,x_2,x_3,y,y_true"));
    assert_eq!(lines.count(), 40);

    let again = driftbench(
        &[
            "generate", "--n", "40", "--d", "3", "--powers", "4", "--seed", "7", "--out", "t.csv",
        ],
        dir.path(),
    );
    assert!(again.status.success());
    assert_eq!(
        text,
        std::fs::read_to_string(dir.path().join("t.csv")).unwrap()
    );
}

#[test]
fn run_writes_results_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = driftbench(
        &[
            "run",
            "--n",
            "64",
            "--d",
            "2",
            "--powers",
            "5",
            "--algo",
            "iflh-awv",
            "--algo",
            "ogd-fixed-restart",
            "--runs",
            "2",
            "--out",
            "res",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("iflh-awv"));
    let results = std::fs::read_to_string(dir.path().join("res/results.csv")).unwrap();
    assert!(results.starts_with(
        "algorithm,run,seed,t,y_hat,y,y_true,inst_err,cum_err,bound,active_experts\n"
    ));
    assert_eq!(results.lines().count(), 1 + 2 * 2 * 64);
    let summary = std::fs::read_to_string(dir.path().join("res/summary.csv")).unwrap();
    assert!(summary.starts_with("algorithm,t,mean_cum_err,std_cum_err,bound\n"));
    assert!(dir.path().join("res/config.json").exists());
}

#[test]
fn run_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "name": "from-file",
        "data": {"n": 30, "d": 1, "input_mode": "constant-one", "shift": {"type": "hard", "starts": [1, 10, 20]}},
        "algorithms": [
            {"name": "iflh-ma", "kind": "meta", "subroutine": {"type": "moving-average"}},
            {"name": "oracle", "kind": "oracle", "mode": "scalar"}
        ],
        "runs": 2
    }"#;
    std::fs::write(dir.path().join("c.json"), config).unwrap();
    let out = driftbench(
        &["--quiet", "run", "--config", "c.json", "--out", "o"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).is_empty());
    assert!(dir.path().join("o/summary.csv").exists());
}

#[test]
fn bound_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = driftbench(
        &["bound", "--t", "1000", "--t", "8", "--tv", "10"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,bound");
    let value: f64 = lines[1].strip_prefix("1000,").unwrap().parse().unwrap();
    assert!((value - 46.415888336127786).abs() < 1e-9);
    assert!(lines[2].starts_with("8,"));
}

#[test]
fn presets_list_names_groups() {
    let dir = tempfile::tempdir().unwrap();
    let out = driftbench(&["presets", "list"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    for name in ["fig2", "fig3", "fig4", "kernel", "fig4-log-d10"] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn preset_run_writes_one_directory_per_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = driftbench(
        &[
            "presets",
            "run",
            "--preset",
            "fig2-equal",
            "--runs",
            "1",
            "--out",
            "p",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("p/fig2-equal/results.csv").exists());
}

#[test]
fn bad_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"name": "x"}"#).unwrap();
    let out = driftbench(&["run", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));

    let out = driftbench(
        &["run", "--algo", "iflh-ma", "--runs", "0", "--out", "x"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));

    let out = driftbench(&["run", "--algo", "no-such-algo"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_or_unwritable_files_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = driftbench(&["run", "--config", "absent.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));

    std::fs::write(dir.path().join("blocker"), "").unwrap();
    let out = driftbench(
        &["generate", "--n", "5", "--out", "blocker/s.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}
