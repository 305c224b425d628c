use std::path::Path;
use std::process::Command;

fn lab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_kpp-lab")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn wave_subcommand_writes_report_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "w.toml", "[wave]\nspeeds = [2.0, 2.5]\n");
    let out_dir = dir.path().join("out");
    let o = lab(&["wave", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--svg"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert!(report.starts_with("c,z_min,z_max"));
    assert!(out_dir.join("wave_c2.5.csv").exists());
    assert!(out_dir.join("waves.svg").exists());
    assert!(out_dir.join("metadata.toml").exists());
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lab(&["speed"]).status.code(), Some(1));
    assert_eq!(lab(&["frobnicate"]).status.code(), Some(1));
    let bad = write(dir.path(), "bad.toml", "[solver]\nt_end = 1.0\nmystery = 3\n");
    let o = lab(&["speed", "--config", &bad, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mystery"));
    let single = write(dir.path(), "one.toml", "[study]\nepsilons = [0.02]\n");
    let o = lab(&["speed", "--config", &single, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(lab(&["--help"]).status.code(), Some(0));
}

#[test]
fn failed_check_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sab.toml",
        "[geometry]\nhi = 2.4\n[solver]\nt_end = 0.25\n[study]\nepsilons = [0.04]\nk_hat = 0.5\nmotion_samples = 2\ngeneration_samples = 2\n",
    );
    let o = lab(&["barriers", "--config", &cfg, "--out", dir.path().join("b").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL super_ordering"));
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sc.toml", "[wave]\nspeeds = [1.0]\nz_span = 0.5\n");
    let o = lab(&["wave", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
