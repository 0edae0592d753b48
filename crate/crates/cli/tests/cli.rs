use std::path::Path;
use std::process::{Command, Output};

fn zoneopt(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_zoneopt"));
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("ZONEOPT_THREADS", n),
        None => cmd.env_remove("ZONEOPT_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const MESH: &str = "master_seed = 4\ntrials = 3\nhorizon = 30\nbatch = 5\nstride = 10\n\
                    [topology]\nagents = 6\nradius = 0.7\n";

#[test]
fn run_writes_identical_csv_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mesh.toml", MESH);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let out = zoneopt(&["run", &cfg, "--output", a.to_str().unwrap()], Some("3"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = zoneopt(&["--deterministic", "run", &cfg, "--output", b.to_str().unwrap()], None);
    assert!(out.status.success());
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    assert!(String::from_utf8(ta)
        .unwrap()
        .starts_with("trial,iter,opt_gap,cons_vio,phi,psi,potential,oracle_calls,wall_seconds\n"));
    assert!(dir.path().join("a_summary.csv").exists());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("batch = 5") && stdout.contains("smoothing"), "{stdout}");
}

#[test]
fn invalid_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "horizon = 10\ntrials = 0\n[topology]\nagents = 3\n",
    );
    let out = zoneopt(&["run", &cfg], None);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("line 2: trials"), "{stderr}");
}

#[test]
fn sweep_writes_one_file_per_size() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mesh.toml", MESH);
    let out_path = dir.path().join("s.csv");
    let out = zoneopt(
        &["sweep", &cfg, "--agents", "5,7", "--output", out_path.to_str().unwrap()],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["s_N5.csv", "s_N7.csv", "s_N5_summary.csv", "s_sweep.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 3);
}

#[test]
fn spectra_prints_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mesh.toml", MESH);
    let out = zoneopt(&["spectra", &cfg], None);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    for key in ["sigma_min", "norm_lplus", "rho_min", "k "] {
        assert!(stdout.contains(key), "{stdout}");
    }
}

#[test]
fn validate_passes() {
    let out = zoneopt(&["validate"], None);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 5, "{stdout}");
}
