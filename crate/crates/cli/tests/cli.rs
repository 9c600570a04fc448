use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn fracnash(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracnash")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("experiment.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn column(csv: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(csv).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).expect("column present");
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

#[test]
fn certify_nash_identity_has_unit_infimum() {
    let dir = TempDir::new().unwrap();
    let o = fracnash(&["certify-nash", "--seed", "3", "--out", "out"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let inf: f64 = column(&dir.path().join("out/certify_nash.csv"), "infimum")[0].parse().unwrap();
    assert!((inf - 1.0).abs() < 1e-12);
    assert!(dir.path().join("out/certificate_00.txt").exists());
    let manifest = fs::read_to_string(dir.path().join("out/manifest.txt")).unwrap();
    assert!(manifest.contains("wall_time_s") && manifest.contains("[config]"));
}

#[test]
fn subordinate_route_deviation_from_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "command = \"subordinate\"\nseed = 1\nalpha = [0.5]\nt = [0.1, 1.0]\n\n[generator]\nkind = \"cycle\"\nn = 64\n",
    );
    let o = fracnash(&["--config", &cfg, "--out", "out"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for v in column(&dir.path().join("out/subordinate.csv"), "route_deviation") {
        assert!(v.parse::<f64>().unwrap() <= 1e-6);
    }
}

#[test]
fn torus_regimes_follow_trichotomy() {
    let dir = TempDir::new().unwrap();
    let o = fracnash(&["torus-sweep", "--seed", "1", "--out", "out"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let status = column(&dir.path().join("out/torus_regimes.csv"), "status");
    assert_eq!(status, ["divergent", "threshold", "finite"]);
    let header = fs::read_to_string(dir.path().join("out/torus_sweep.csv")).unwrap();
    assert!(header.starts_with("gamma,alpha,t,K,status,value,beta_hat\n"));
}

#[test]
fn strict_turns_inconclusive_into_failure() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "command = \"torus-sweep\"\nseed = 1\nalpha = [0.5]\nt = [2.6155]\n");
    let lax = fracnash(&["--config", &cfg, "--out", "lax"], dir.path());
    assert_eq!(code(&lax), 0);
    assert_eq!(column(&dir.path().join("lax/torus_sweep.csv"), "status"), ["inconclusive"]);
    let strict = fracnash(&["--config", &cfg, "--out", "strict", "--strict"], dir.path());
    assert_eq!(code(&strict), 1);
    assert!(String::from_utf8_lossy(&strict.stderr).contains("torus_sweep.csv"));
}

#[test]
fn failing_assertion_exits_one_with_certificate_path() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "command = \"certify-nash\"\nseed = 5\n\n[tolerance]\nmin_infimum = 2.0\n");
    let o = fracnash(&["--config", &cfg, "--out", "out"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("certificate_00.txt"));
    let manifest = fs::read_to_string(dir.path().join("out/manifest.txt")).unwrap();
    assert!(manifest.contains("status = fail"));
}

#[test]
fn config_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let cases = [
        "command = \"subordinate\"\n",
        "command = \"subordinate\"\nseed = 1\nbogus = 3\n",
        "command = \"jensen-check\"\nseed = 1\nfunctions = [\"sin\"]\n",
        "command = \"no-such-command\"\nseed = 1\n",
        "command = \"subordinate\"\nseed = 1\nalpha = [-0.5]\n",
        "command = \"subordinate\"\nseed = 1\n[generator]\nkind = \"cycle\"\nn = 1\n",
        "this is not toml",
    ];
    for text in cases {
        let cfg = write_config(dir.path(), text);
        let o = fracnash(&["--config", &cfg, "--out", "out"], dir.path());
        assert_eq!(code(&o), 2, "config {text:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(code(&fracnash(&["--seed", "1"], dir.path())), 2);
    assert_eq!(code(&fracnash(&["--config", "missing.toml"], dir.path())), 2);
    assert_eq!(code(&fracnash(&["certify-nash", "--seed", "x"], dir.path())), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    for out in ["a", "b"] {
        let o = fracnash(&["half-power-check", "--seed", "11", "--out", out, "--jobs", "2"], dir.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let single = fracnash(&["half-power-check", "--seed", "11", "--out", "c", "--jobs", "1"], dir.path());
    assert_eq!(code(&single), 0);
    for other in ["b", "c"] {
        let a = fs::read(dir.path().join("a/half_power_check.csv")).unwrap();
        let b = fs::read(dir.path().join(other).join("half_power_check.csv")).unwrap();
        assert_eq!(a, b);
    }
}
