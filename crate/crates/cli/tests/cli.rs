use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use moyal_cli::report::read_cases;
use moyal_cli::RunConfig;

fn moyal(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_moyal"));
    cmd.args(args);
    if let Some(w) = workers {
        cmd.env("MOYAL_WORKERS", w);
    }
    cmd.output().expect("binary runs")
}

fn small_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/small.toml")
}

fn write_config(dir: &Path, config: &RunConfig) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, config.to_toml().unwrap()).unwrap();
    path
}

#[test]
fn verify_small_config_is_deterministic_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let cfg = small_config();
    let out = moyal(&["verify", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()], Some("1"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = moyal(&["verify", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()], Some("8"));
    assert_eq!(out.status.code(), Some(0));
    let ca = std::fs::read(a.join("cases.csv")).unwrap();
    assert_eq!(ca, std::fs::read(b.join("cases.csv")).unwrap());
    assert_eq!(std::fs::read(a.join("summary.json")).unwrap(), std::fs::read(b.join("summary.json")).unwrap());

    let rows = read_cases(&a.join("cases.csv")).unwrap();
    assert_eq!(rows.len(), 6 + 12 + 4 + 12);
    assert!(rows.windows(2).all(|w| (w[0].theorem, w[0].trial) <= (w[1].theorem, w[1].trial)));
    let hash = &rows[0].config_hash;
    assert!(rows.iter().all(|r| &r.config_hash == hash && r.backend.contains("\"h\"") && r.element.contains("seed")));
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["suites"].as_array().unwrap().len(), 4);
    assert_eq!(summary["failures"], 0);
}

#[test]
fn seed_flag_changes_cases() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = RunConfig::from_toml(&std::fs::read_to_string(small_config()).unwrap()).unwrap();
    config.suites.truncate(1);
    let cfg = write_config(dir.path(), &config);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    moyal(&["verify", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()], None);
    moyal(&["verify", "--config", cfg.to_str().unwrap(), "--seed", "8", "--out", b.to_str().unwrap()], None);
    let (ra, rb) = (read_cases(&a.join("cases.csv")).unwrap(), read_cases(&b.join("cases.csv")).unwrap());
    assert_ne!(ra[0].seed, rb[0].seed);
    assert_ne!(ra[0].config_hash, rb[0].config_hash);
}

#[test]
fn gate_violation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = "backend = \"moyal\"\nmaster_seed = 1\n\n[[suites]]\ntheorem = \"R17\"\ntrials = 2\nparams = [{ p = 1.5, s = 1.5 }]\n";
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, text).unwrap();
    let out = moyal(&["verify", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parameter gate"));
    assert!(!dir.path().join("cases.csv").exists());
}

#[test]
fn inequality_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = RunConfig::from_toml(&std::fs::read_to_string(small_config()).unwrap()).unwrap();
    let mut suite = moyal_cli::SuiteConfig::new(moyal_core::TheoremId::R12, 2);
    suite.params = vec![moyal_core::harness::params(&[("p", 4.0 / 3.0)])];
    config.suites = vec![suite];
    let cfg = write_config(dir.path(), &config);
    let out = moyal(&["verify", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    let rows = read_cases(&dir.path().join("cases.csv")).unwrap();
    assert!(rows.iter().all(|r| !r.pass && r.reason == "inequality violated"));
}

#[test]
fn empty_suite_list_writes_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.toml");
    std::fs::write(&path, "backend = \"moyal\"\nmaster_seed = 3\n").unwrap();
    let out = moyal(&["verify", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("cases.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("theorem,trial,params,lhs,rhs,ratio,pass,seed"));
}

#[test]
fn classical_backend_shares_the_report_schema() {
    let dir = tempfile::tempdir().unwrap();
    let text = "backend = \"classical\"\nmaster_seed = 5\n\n[[suites]]\ntheorem = \"R2\"\ntrials = 3\n\n[[suites]]\ntheorem = \"R9\"\ntrials = 2\n";
    let path = dir.path().join("c.toml");
    std::fs::write(&path, text).unwrap();
    let out = moyal(&["verify", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_cases(&dir.path().join("cases.csv")).unwrap();
    assert!(rows.iter().all(|r| r.backend.contains("classical")));

    let m = tempfile::tempdir().unwrap();
    let cfg = small_config();
    moyal(&["verify", "--config", cfg.to_str().unwrap(), "--out", m.path().to_str().unwrap()], None);
    let header = |p: &Path| std::fs::read_to_string(p.join("cases.csv")).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header(dir.path()), header(m.path()));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "backend = \"classical\"\nmaster_seed = 5\n\n[[suites]]\ntheorem = \"R17\"\ntrials = 3\n").unwrap();
    let out = moyal(&["verify", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn roundtrip_probe() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("roundtrip.csv");
    let out = moyal(&["probe", "quantize-roundtrip", "--h", "1", "--N", "128", "--out", file.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let sup: f64 = text.lines().find_map(|l| l.strip_prefix("sup_roundtrip_error,")).unwrap().trim_end_matches(',').parse().unwrap();
    assert!(sup < 1e-4, "{sup}");
    assert_eq!(std::fs::read_to_string(file).unwrap(), text);
}

#[test]
fn heat_decay_probe_prints_slope() {
    let out = moyal(&["probe", "heat-decay", "--p", "1.3333", "--q", "4", "--tmin", "0.5", "--tmax", "20"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("kind,t,value"));
    assert_eq!(text.lines().filter(|l| l.starts_with("curve,")).count(), 8);
    let slope: f64 = text.lines().find_map(|l| l.strip_prefix("slope,,")).unwrap().parse().unwrap();
    assert!(slope < 0.0 && slope.is_finite());
}

#[test]
fn multiplier_norm_probe() {
    let out = moyal(&["probe", "multiplier-norm", "--symbol", "heat", "--t", "1", "--p", "1.5", "--q", "3", "--trials", "3", "--N", "64", "--n", "64"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let vals: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!(vals.iter().all(|v| v.is_finite() && *v > 0.0));
    let out = moyal(&["probe", "multiplier-norm", "--symbol", "heat", "--t", "1", "--p", "3", "--q", "3"], None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    let out = moyal(&["probe", "bogus"], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(moyal(&[], None).status.code(), Some(1));
    assert_eq!(moyal(&["verify", "--config", "/nonexistent.toml"], None).status.code(), Some(1));
    let out = moyal(&["verify", "--config", small_config().to_str().unwrap()], Some("zero"));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn default_config_command_prints_shipped_config() {
    let out = moyal(&["default-config"], None);
    assert_eq!(out.status.code(), Some(0));
    let c = RunConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(c, RunConfig::default());
}
