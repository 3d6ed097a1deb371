use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn refnft(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refnft"))
        .args(args)
        .env_remove("REFNFT_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(&path, "epochs = 6\nseeds = [3]\nn_publishers = 2\nhidden = 8\n").unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn help_exits_zero() {
    let out = refnft(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("simulate"));
}

#[test]
fn unknown_flag_is_named() {
    let out = refnft(&["simulate", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--bogus"));
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = refnft(&["simulate", "--config", "/no/such/file.toml", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "epochs = 3\nwobble = 1\n").unwrap();
    let out = refnft(&["simulate", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("wobble"));
}

#[test]
fn simulate_writes_rewards_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out = refnft(&["simulate", "--config", &config, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("rewards.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("run_id,axis_value,seed,epoch,publisher,reward_raw,reward_norm")
    );
    assert_eq!(lines.count(), 12);
    let echo = fs::read_to_string(dir.path().join("config.toml")).unwrap();
    assert!(echo.contains("epochs = 6"));
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let read = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = refnft(&["simulate", "--config", &config, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        fs::read(out_dir.join("rewards.csv")).unwrap()
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn sweep_writes_one_file_pair_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out = refnft(&[
        "sweep",
        "--config",
        &config,
        "--axis",
        "d_hat",
        "--values",
        "2,4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["d_hat_2.csv", "d_hat_2.toml", "d_hat_4.csv", "d_hat_4.toml", "summary.tsv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn bad_sweep_axis_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = refnft(&["sweep", "--axis", "colour", "--values", "1", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists());
}

#[test]
fn analysis_commands_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cases: [(&[&str], &str); 3] = [
        (&["verify-finality", "--trials", "20"], "finality.txt"),
        (&["nonconvexity", "--points", "21"], "nonconvexity.txt"),
        (&["exploitability", "--levels", "2,2,1,2", "--iterations", "30"], "exploitability.txt"),
    ];
    for (args, file) in cases {
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--out", d]);
        let out = refnft(&full);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!fs::read_to_string(dir.path().join(file)).unwrap().is_empty());
    }
}

#[test]
fn wrong_level_count_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = refnft(&["exploitability", "--levels", "2,2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
