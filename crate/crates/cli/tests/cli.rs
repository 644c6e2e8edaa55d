use std::fs;
use std::path::Path;
use std::process::Command;

use pmcontract_cli::{parse_config_with, run, Scenario};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pmcontract"))
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn only_file(dir: &Path, prefix: &str) -> std::path::PathBuf {
    let mut hits: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with(prefix))
        .collect();
    assert_eq!(hits.len(), 1, "{prefix} in {}", dir.display());
    hits.pop().unwrap()
}

#[test]
fn identical_data_have_zero_lyapunov() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("c.txt");
    fs::write(
        &cfg_path,
        "diffusion.n = 0.5\n\
         exponents.alpha = 0.8\n\
         exponents.p = 2.5\n\
         grid.cells = 64\n\
         solver.t_end = 0.2\n\
         solver.sample_every = 0.02\n\
         initial.u = cosine(base=1, amplitude=0.3, mode=2)\n\
         initial.v = cosine(base=1, amplitude=0.3, mode=2)\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = bin().args(["contract", "--config"]).arg(&cfg_path).arg("--out").arg(&out).output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    let rows = csv_rows(&only_file(&out, "contract_vu"));
    assert_eq!(rows.len(), 11);
    for r in rows {
        assert_eq!(r[1].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "pass");
}

#[test]
fn region_classification_matches_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("region");
    let status = bin().args(["region", "--out"]).arg(&out).output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    let n: f64 = 0.5;
    let rows = csv_rows(&out.join("region.csv"));
    assert_eq!(rows.len(), 100 * 221);
    for r in &rows {
        let (alpha, p): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        if alpha < n {
            assert_eq!(r[2], "outside");
            continue;
        }
        let s = (alpha * alpha - n * n).sqrt();
        let c = 2.0 / (n * n) * (1.0 - alpha);
        let (lo, hi) = (1.0 + c * (alpha - s), 1.0 + c * (alpha + s));
        if p > lo + 1e-6 && p < hi - 1e-6 {
            assert_eq!(r[2], "interior", "{r:?}");
        } else if p < lo - 1e-6 || p > hi + 1e-6 {
            assert_eq!(r[2], "outside", "{r:?}");
        }
    }
}

#[test]
fn sweep_inside_k_is_monotone_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "sweep.n = 0.5\nsweep.alpha = 0.6:0.85:5\nsweep.p = 2:2.8:5\ngrid.cells = 64\n\
         solver.t_end = 0.3\nsolver.sample_every = 0.03\noutput = {}\n",
        dir.path().join("s").display()
    );
    let cfg = parse_config_with(&text, Some(Scenario::Sweep)).unwrap();
    let outcome = run(&cfg, 3).unwrap();
    assert!(outcome.passed());
    let rows = csv_rows(&only_file(&cfg.output, "sweep_"));
    assert_eq!(rows.len(), 25);
    assert!(rows.iter().all(|r| r[3] == "interior" && r[8] == "true"), "{rows:?}");
}

#[test]
fn runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (k, workers) in [1, 4].into_iter().enumerate() {
        let out = dir.path().join(format!("r{k}"));
        let text = "sweep.n = -0.5, 0.5\nsweep.alpha = 0.7:0.9:3\nsweep.p = 2:3:3\ngrid.cells = 64\n\
                    solver.t_end = 0.2\nsolver.sample_every = 0.05\nseed = 9\n";
        let cfg_path = dir.path().join(format!("c{k}.txt"));
        fs::write(&cfg_path, text).unwrap();
        let status = bin()
            .args(["sweep", "--workers", &workers.to_string(), "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap()
            .status;
        assert_eq!(status.code(), Some(0));
        outputs.push(fs::read(only_file(&out, "sweep_")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn invalid_configuration_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.txt");
    fs::write(&cfg_path, "diffusion.n = 0.5\nexponents.alpha = 0.3\n").unwrap();
    let out = bin().args(["contract", "--config"]).arg(&cfg_path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn snapshots_round_trip_through_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let text = "grid.cells = 32\nsolver.t_end = 0.1\nsolver.sample_every = 0.05\n";
    let cfg_path = dir.path().join("c.txt");
    fs::write(&cfg_path, text).unwrap();
    let status = bin().args(["simulate", "--config"]).arg(&cfg_path).arg("--out").arg(&out).output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    let traj = pmcontract_core::solver::Trajectory::load(&out.join("trajectory")).unwrap();
    assert_eq!(traj.len(), 3);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert!(files.iter().any(|f| f["path"] == "trajectory/snap_00002.bin"));
    for f in files {
        let bytes = fs::read(out.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"], pmcontract_core::grid::snapshot::sha256_hex(&bytes));
    }
}
