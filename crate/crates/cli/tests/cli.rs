use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[model]
name = "gaussian-well"

[grid]
extent = 6.0
points = 128

[observable]
center = [0.0, 0.0]
width = [0.6, 0.6]

[sweep]
hbar = [0.2]
orders = [0, 1]
times = [0.5, 1.0]

[calibration]
order = 1
t = 0.5
hbar = 0.2

[checks]
slopes = false
"#;

fn semiclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semiclab")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("small.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn selftest_passes() {
    let out = semiclab(&["selftest"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.lines().count() >= 3);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn runs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let first = semiclab(&["run", &cfg, "--out", a.to_str().unwrap()]);
    let second = semiclab(&["run", &cfg, "--out", b.to_str().unwrap(), "--threads", "1"]);
    for out in [&first, &second] {
        assert_ne!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["errors.csv", "bounds.csv", "summary.txt"] {
        let x = fs::read(a.join(name)).unwrap();
        assert_eq!(x, fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    let errors = fs::read_to_string(a.join("errors.csv")).unwrap();
    assert!(errors.starts_with("model,hbar,N,t,error,bound,within_bound"));
    assert_eq!(errors.lines().count(), 5);
    assert!(errors.contains("calibration"));
    let bounds = fs::read_to_string(a.join("bounds.csv")).unwrap();
    assert!(bounds.starts_with("N,t,hbar,alpha,e_k,Gamma_k,remainder_bound,TN,Nk"));
}

#[test]
fn bounds_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = semiclab(&["bounds", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("bounds.csv").exists());
}

#[test]
fn calibrate_writes_constants() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = semiclab(&["calibrate", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("calibration.toml")).unwrap();
    assert!(text.contains("alpha") && text.contains("e = "));
}

#[test]
fn bad_config_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("gaussian-well", "no-such-model"));
    let out = semiclab(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-model"));
    let out = semiclab(&["run", &tmp.path().join("missing.toml").to_string_lossy()]);
    assert_eq!(out.status.code(), Some(2));
}
