use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn duelsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_duelsim"))
        .args(args)
        .env("DUELSIM_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.cfg");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn hyperparams_prints_practical_schedule() {
    let out = duelsim(&["hyperparams", "--d", "10", "--n", "50", "--horizon", "10000"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("tau       500"), "{text}");
    // sqrt(10 ln 10^4)
    assert!(text.contains("c1        9.59"), "{text}");
}

#[test]
fn hyperparams_theory_mode() {
    let out = duelsim(&["hyperparams", "--mode", "theory", "--d", "3", "--n", "10", "--horizon", "1000"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("mode      theory"));
}

#[test]
fn parameter_errors_exit_with_one() {
    assert_eq!(code(&duelsim(&["hyperparams", "--mode", "wild", "--d", "3", "--n", "4", "--horizon", "100"])), 1);
    assert_eq!(code(&duelsim(&["hyperparams", "--d", "10", "--n", "4", "--horizon", "10"])), 1);
    assert_eq!(code(&duelsim(&["hyperparams", "--d", "3"])), 1);
    assert_eq!(code(&duelsim(&["no-such-command"])), 1);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.cfg").display().to_string();
    assert_eq!(code(&duelsim(&["run", "--config", &missing, "--out", "x.csv"])), 1);

    let cfg = write_config(dir.path(), "n = 5\nthis line has no equals sign\n");
    let out = duelsim(&["run", "--config", &cfg, "--out", "x.csv"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let cfg = write_config(dir.path(), "n = 5\nd = 2\nhorizon = 50\npolicies = random\n");
    assert_eq!(code(&duelsim(&["run", "--config", &cfg])), 1, "no output path");
}

#[test]
fn run_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "# small smoke experiment\nn = 6\nd = 2\nhorizon = 80\nruns = 2\nseed = 4\npolicies = colstim, maxinp, dts, ss, random\n",
    );
    let records = dir.path().join("records.csv");
    let out = duelsim(&["run", "--config", &cfg, "--out", records.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("policy"));
    let text = fs::read_to_string(&records).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("run,t,policy,avg_regret_cum,weak_regret_cum,select_ns"));
    assert_eq!(lines.count(), 2 * 80 * 5);
    assert!(!text.contains('\r'));

    let curves = dir.path().join("curves.csv");
    let out = duelsim(&["summarize", "--in", records.to_str().unwrap(), "--out", curves.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let curves = fs::read_to_string(&curves).unwrap();
    assert!(curves.starts_with("policy,t,runs,avg_mean,avg_std,weak_mean,weak_std\n"));
    assert_eq!(curves.lines().count(), 1 + 5 * 80);
}

#[test]
fn seed_flag_changes_the_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n = 5\nd = 2\nhorizon = 40\nruns = 1\nseed = 1\npolicies = random\n");
    let read = |seed: &str, name: &str| {
        let path = dir.path().join(name);
        assert_eq!(code(&duelsim(&["run", "--config", &cfg, "--seed", seed, "--out", path.to_str().unwrap()])), 0);
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(read("9", "a.csv"), read("9", "b.csv"));
    assert_ne!(read("9", "a.csv"), read("10", "c.csv"));
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.csv");
    assert_eq!(code(&duelsim(&["summarize", "--in", missing.to_str().unwrap(), "--out", "y.csv"])), 2);

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,b,c\n1,2,3\n").unwrap();
    assert_eq!(code(&duelsim(&["summarize", "--in", bad.to_str().unwrap(), "--out", "y.csv"])), 2);

    let cfg = write_config(dir.path(), "n = 5\nd = 2\nhorizon = 40\nruns = 1\npolicies = random\n");
    let out = dir.path().join("no-such-dir").join("r.csv");
    assert_eq!(code(&duelsim(&["run", "--config", &cfg, "--out", out.to_str().unwrap()])), 2);
}
