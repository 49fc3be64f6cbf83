use std::fs;
use std::path::Path;
use std::process::Command;

use magnon_walk::cli::{self, RunArgs, RunConfig, OUT_ENV};
use magnon_walk::model;

const BIN: &str = env!("CARGO_BIN_EXE_magnon-walk");

const TINY: &str = r#"
preset = "base"

[params]
fock_dim = 6
alpha = 1.0
n_steps = 3
m_phase = 32

[solver]
samples_per_segment = 2

[analysis]
fit_steps = 3
wigner_grid = "2.0:7"
"#;

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn parse_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn csv_values_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), "tiny.toml", TINY);
    let out = dir.path().join("out");
    let cfg = cli::resolve(&RunArgs {
        config: Some(cfg_path),
        out: Some(out.clone()),
        ..RunArgs::default()
    })
    .unwrap();
    let data = cli::simulate(&cfg).unwrap();
    cli::emit(&data, &cfg).unwrap();

    let (header, rows) = parse_csv(&out.join("holevo.csv"));
    assert_eq!(header, ["step", "t_ns", "sharpness", "sigma_H"]);
    assert_eq!(rows.len(), 3);
    for (row, point) in rows.iter().zip(&data.series.points) {
        assert_eq!(row[0].parse::<usize>().unwrap(), point.step);
        assert_eq!(row[1].parse::<f64>().unwrap().to_bits(), point.t.to_bits());
        assert_eq!(row[2].parse::<f64>().unwrap().to_bits(), point.sharpness.to_bits());
        assert_eq!(row[3].parse::<f64>().unwrap().to_bits(), point.sigma_h.to_bits());
    }

    let (header, rows) = parse_csv(&out.join("timeseries.csv"));
    assert_eq!(header, ["t_ns", "n_c", "P_e", "P_g", "drive_on"]);
    assert_eq!(rows.len(), data.trajectory.samples.len());
    for (row, s) in rows.iter().zip(&data.trajectory.samples) {
        assert_eq!(row[1].parse::<f64>().unwrap().to_bits(), s.n_c.to_bits());
        assert_eq!(row[4], if s.drive_on { "1" } else { "0" });
    }

    let (header, rows) = parse_csv(&out.join("phase_step2.csv"));
    assert_eq!(header, ["phi_rad", "P"]);
    assert_eq!(rows.len(), 32);
    let total: f64 = rows.iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);

    let (header, rows) = parse_csv(&out.join("wigner_step1.csv"));
    assert_eq!(header, ["x", "p", "W"]);
    assert_eq!(rows.len(), 49);
}

#[test]
fn identical_configs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), "tiny.toml", TINY);
    let mut manifests = Vec::new();
    for name in ["a", "b"] {
        let cfg = cli::resolve(&RunArgs {
            config: Some(cfg_path.clone()),
            out: Some(dir.path().join(name)),
            ..RunArgs::default()
        })
        .unwrap();
        manifests.push(cli::run(&cfg).unwrap());
    }
    assert_eq!(manifests[0].artifacts, manifests[1].artifacts);
    for file in manifests[0].artifacts.keys() {
        assert_eq!(
            fs::read(dir.path().join("a").join(file)).unwrap(),
            fs::read(dir.path().join("b").join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn manifest_matches_derive() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::from_preset("base", dir.path()).unwrap();
    cfg.params.fock_dim = 6;
    cfg.params.alpha = magnon_walk::linalg::re(1.0);
    cfg.params.n_steps = 2;
    cfg.fit_steps = 2;
    cfg.emit.wigner = false;
    cli::run(&cfg).unwrap();
    let m = cli::read_manifest(dir.path()).unwrap();
    assert_eq!(m.derived, model::derive(&cfg.params).unwrap());
    assert_eq!(m.config, cfg);
    assert!(!m.artifacts.keys().any(|k| k.starts_with("wigner")));
    assert_eq!(m.artifacts.len(), 5);
}

#[test]
fn binary_run_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), "tiny.toml", TINY);

    let ok = Command::new(BIN)
        .args(["run", "--config"])
        .arg(&cfg_path)
        .args(["--steps", "2", "--fit-steps", "2", "--method", "rk4", "--no-wigner"])
        .env(OUT_ENV, dir.path().join("root"))
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let out = dir.path().join("root").join("tiny");
    let m = cli::read_manifest(&out).unwrap();
    assert_eq!(m.config.params.n_steps, 2);
    assert_eq!(m.config.method.to_string(), "rk4");
    assert!(String::from_utf8_lossy(&ok.stdout).contains("slope"));

    let code = |args: &[&str]| {
        Command::new(BIN)
            .args(args)
            .env(OUT_ENV, dir.path().join("bad"))
            .status()
            .unwrap()
            .code()
    };
    assert_eq!(code(&["run", "--preset", "missing"]), Some(1));
    assert_eq!(code(&["run", "--preset", "base", "--fit-steps", "9"]), Some(1));
    assert_eq!(code(&["run", "--preset", "base", "--wigner-grid", "x"]), Some(1));
    let bad = write_config(dir.path(), "bad.toml", "[params]\nnu_eps0 = 0.01\n");
    assert_eq!(code(&["run", "--config", bad.to_str().unwrap()]), Some(1));
    let unknown = write_config(dir.path(), "unknown.toml", "[solver]\nstep = 1\n");
    assert_eq!(code(&["run", "--config", unknown.to_str().unwrap()]), Some(1));
}

#[test]
fn verify_subcommand_passes() {
    let out = Command::new(BIN).arg("verify").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 20);
    assert!(text.lines().all(|l| l.ends_with("PASS")));
}

#[test]
fn batch_runs_each_config_into_its_own_directory() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "first.toml", TINY);
    let b = write_config(dir.path(), "second.toml", &TINY.replace("n_steps = 3", "n_steps = 2").replace("fit_steps = 3", "fit_steps = 2"));
    let root = dir.path().join("batch");
    let status = Command::new(BIN)
        .arg("batch")
        .arg(&a)
        .arg(&b)
        .arg("--out")
        .arg(&root)
        .arg("--no-wigner")
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(cli::read_manifest(&root.join("first")).unwrap().config.params.n_steps, 3);
    assert_eq!(cli::read_manifest(&root.join("second")).unwrap().config.params.n_steps, 2);
}
