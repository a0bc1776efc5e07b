use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qfreq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfreq")).args(args).output().unwrap()
}

fn fit_curve(out: &Path, extra: &[&str]) -> Output {
    let out = out.to_str().unwrap();
    let mut args = vec!["fit-curve", "--seed", "7", "--iterations", "20", "--out", out];
    args.extend_from_slice(extra);
    qfreq(&args)
}

#[test]
fn fit_curve_writes_manifest_and_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let o = fit_curve(dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with(dir.path().join("manifest.json").to_str().unwrap()));
    for name in ["manifest.json", "train_log.csv", "spectrum.csv", "residuals.csv"] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
    let log = fs::read_to_string(dir.path().join("train_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 21, "header plus iterations 0..20");
}

#[test]
fn runs_are_byte_identical_across_thread_counts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(fit_curve(a.path(), &["--threads", "1"]).status.success());
    assert!(fit_curve(b.path(), &["--threads", "4"]).status.success());
    for name in ["train_log.csv", "spectrum.csv", "residuals.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "experiment = \"fit-curve\"\nseed = 3\n[train]\niterations = 100\n").unwrap();
    let out = dir.path().join("out");
    let o = qfreq(&["fit-curve", "--config", cfg.to_str().unwrap(), "--iterations", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 3);
    assert_eq!(m["metrics"]["iterations_run"], 4);
}

#[test]
fn bad_input_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "experiment = \"fit-curve\"\nunknown_key = 1\n").unwrap();
    for args in [
        vec!["fit-curve", "--config", bad.to_str().unwrap()],
        vec!["fit-curve", "--config", "/nonexistent/run.toml"],
        vec!["fit-curve", "--eta", "-1"],
        vec!["no-such-command"],
    ] {
        assert_eq!(qfreq(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn numeric_blow_up_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = fit_curve(dir.path(), &["--eta", "1e308"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["complete"], false);
}

#[test]
fn spectrum_reports_the_encoding_bandwidth() {
    let dir = tempfile::tempdir().unwrap();
    let o = qfreq(&["spectrum", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["metrics"]["max_frequency"], 80);
}
