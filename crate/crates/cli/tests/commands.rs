use std::path::Path;
use std::process::{Command, Output};

use cubist::ancilla::AncillaOptimum;
use cubist::fock::StateVector;
use cubist::gate::GateRunSummary;
use cubist::grid_io::read_grid_csv;
use cubist::phase_space::WignerGrid;
use cubist::validation::ValidationReport;
use serde_json::Value;

fn cubist(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cubist"))
        .current_dir(dir)
        .env_remove("CUBIST_WORKERS")
        .args(args)
        .output()
        .expect("spawn cubist")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn manifest(dir: &Path, out: &str) -> Value {
    serde_json::from_str(&read(dir, &format!("{out}.manifest.json"))).unwrap()
}

#[test]
fn optimize_n3_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = cubist(d, &["ancilla", "optimize", "--n", "3", "--out", "a.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("ratio to Gaussian limit"));
    let opt: AncillaOptimum = serde_json::from_str(&read(d, "a.json")).unwrap();
    for (c, want) in opt.coefficients.iter().zip([0.17, 0.56, 0.73, 0.35]) {
        assert!((c.norm() - want).abs() < 0.01, "{} vs {want}", c.norm());
    }
    let m = manifest(d, "a.json");
    assert_eq!(m["command"], "ancilla optimize");
    assert_eq!(m["config"]["n"], 3);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);

    let o = cubist(d, &["ancilla", "optimize", "--n", "5", "--out", "b1.json"]);
    assert_eq!(code(&o), 0);
    let o = cubist(d, &["ancilla", "optimize", "--n", "5", "--out", "b2.json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(read(d, "b1.json"), read(d, "b2.json"));
}

#[test]
fn optimize_n0_is_the_reference() {
    let dir = tempfile::tempdir().unwrap();
    let o = cubist(dir.path(), &["ancilla", "optimize", "--n", "0", "--out", "z.json"]);
    assert_eq!(code(&o), 0);
    let opt: AncillaOptimum = serde_json::from_str(&read(dir.path(), "z.json")).unwrap();
    assert_eq!(opt.ratio, 1.0);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&cubist(d, &["ancilla", "optimize", "--n", "13", "--out", "x.json"])), 2);
    assert_eq!(code(&cubist(d, &["ancilla", "optimize", "--n", "three", "--out", "x.json"])), 2);
    assert_eq!(code(&cubist(d, &["ancilla", "map", "--lambda-range", "-1,1", "--out", "x.csv"])), 2);
    assert_eq!(code(&cubist(d, &["ancilla", "map", "--resolution", "3000x2000", "--out", "x.csv"])), 2);
    assert_eq!(code(&cubist(d, &["wigner", "--state", "missing.json", "--out", "x.csv"])), 2);
    assert_eq!(code(&cubist(d, &["gate", "run", "--t1", "1.5", "--out", "x.json"])), 2);
    assert_eq!(code(&cubist(d, &["gate", "run", "--ancilla", "bogus", "--out", "x.json"])), 2);
    assert_eq!(code(&cubist(d, &["bogus"])), 2);
    std::fs::write(d.join("bad.json"), "{ not json").unwrap();
    assert_eq!(code(&cubist(d, &["--config", "bad.json", "validate", "--out", "x.json"])), 2);
}

#[test]
fn map_db_minimum_matches_optimizer() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["ancilla", "map", "--n", "1", "--unit", "dB", "--resolution", "60", "--out", "m.csv"];
    let o = cubist(d, &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let g = read_grid_csv(&read(d, "m.csv")).unwrap();
    assert_eq!(g.unit.as_deref(), Some("dB"));
    let o = cubist(d, &["ancilla", "optimize", "--n", "1", "--out", "o.json"]);
    assert_eq!(code(&o), 0);
    let opt: AncillaOptimum = serde_json::from_str(&read(d, "o.json")).unwrap();
    let best = g.values.iter().cloned().fold(f64::INFINITY, f64::min);
    // one-cell quantization: largest change of the map between neighbouring cells
    let (nl, nd) = (g.x.count, g.p.count);
    let mut cell = 0.0f64;
    for i in 0..nl {
        for j in 0..nd {
            let v = g.values[i * nd + j];
            if i + 1 < nl {
                cell = cell.max((g.values[(i + 1) * nd + j] - v).abs());
            }
            if j + 1 < nd {
                cell = cell.max((g.values[i * nd + j + 1] - v).abs());
            }
        }
    }
    let want = opt.variance_db();
    assert!(best >= want - 1e-9, "map {best} below optimum {want}");
    assert!(best - want <= cell, "map {best} vs optimum {want}, cell {cell}");

    cubist(d, &[&args[..9], &["m2.csv"]].concat());
    assert_eq!(read(d, "m.csv"), read(d, "m2.csv"));
}

#[test]
fn map_n0_single_basin() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = cubist(d, &["ancilla", "map", "--n", "0", "--resolution", "50", "--out", "m.csv"]);
    assert_eq!(code(&o), 0);
    let g = read_grid_csv(&read(d, "m.csv")).unwrap();
    assert_eq!(g.unit.as_deref(), Some("raw"));
    let (nl, nd) = (g.x.count, g.p.count);
    let mut minima = 0;
    for i in 0..nl {
        for j in 0..nd {
            let v = g.values[i * nd + j];
            let mut lowest = true;
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)] {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                if a >= 0 && b >= 0 && a < nl as i64 && b < nd as i64 && g.values[a as usize * nd + b as usize] <= v {
                    lowest = false;
                }
            }
            minima += lowest as usize;
        }
    }
    assert_eq!(minima, 1);
}

#[test]
fn wigner_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = cubist(d, &["wigner", "--state", "ideal-cubic", "--gamma", "0.1", "--axes", "-4,4,81", "--out", "c.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let w = WignerGrid::from_csv(&read(d, "c.csv")).unwrap();
    let n = w.x_axis.count;
    for ix in 0..n {
        for ip in 0..w.p_axis.count {
            assert_eq!(w.get(ix, ip), w.get(n - 1 - ix, ip));
        }
    }

    let mut changes = Vec::new();
    for k in [1, 3] {
        let out = format!("o{k}.csv");
        let o = cubist(d, &["wigner", "--state", &format!("optimized-{k}"), "--axes", "-6,6,121", "--out", &out]);
        assert_eq!(code(&o), 0);
        let w = WignerGrid::from_csv(&read(d, &out)).unwrap();
        changes.push(w.sign_changes_along_p(w.nearest_x(0.0)));
        let m = manifest(d, &out);
        assert!(m["p_offset"].as_f64().unwrap().is_finite());
    }
    assert!(changes[1] >= changes[0], "{changes:?}");

    let vac = serde_json::to_string(&StateVector::vacuum(3).unwrap()).unwrap();
    std::fs::write(d.join("vac.json"), vac).unwrap();
    let o = cubist(d, &["wigner", "--state", "vac.json", "--axes", "-1,1,21", "--out", "v.csv"]);
    assert_eq!(code(&o), 0);
    let w = WignerGrid::from_csv(&read(d, "v.csv")).unwrap();
    assert!((w.get(10, 10) - std::f64::consts::FRAC_1_PI).abs() < 1e-9);
}

#[test]
fn gate_run_squeezer_limit_and_repeatability() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["gate", "run", "--gamma", "1e-6", "--shots", "500", "--ancilla", "vacuum", "--seed", "4"];
    let o = cubist(d, &[&args[..], &["--out", "g1.json", "--shots-csv", "s.csv"]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s: GateRunSummary = serde_json::from_str(&read(d, "g1.json")).unwrap();
    assert!(s.mean_fidelity > 0.99, "{}", s.mean_fidelity);
    assert_eq!(s.n_completed, 500);
    let csv = read(d, "s.csv");
    assert_eq!(csv.lines().count(), 501);
    assert!(csv.starts_with("index,q,theta,y,p_disp,fidelity"));
    let m = manifest(d, "g1.json");
    assert_eq!(m["seed"], 4);
    assert_eq!(m["config"]["gamma"], 1e-6);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);

    cubist(d, &[&args[..], &["--out", "g2.json"]].concat());
    assert_eq!(read(d, "g1.json"), read(d, "g2.json"));
    let o = Command::new(env!("CARGO_BIN_EXE_cubist"))
        .current_dir(d)
        .env("CUBIST_WORKERS", "2")
        .args([&args[..], &["--out", "g3.json"]].concat())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(read(d, "g1.json"), read(d, "g3.json"));
}

#[test]
fn gate_run_optimized_beats_vacuum() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut f = Vec::new();
    for anc in ["vacuum", "optimized-5"] {
        let out = format!("{anc}.json");
        let o = cubist(d, &["gate", "run", "--gamma", "0.1", "--shots", "400", "--seed", "1", "--ancilla", anc, "--out", &out]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let s: GateRunSummary = serde_json::from_str(&read(d, &out)).unwrap();
        f.push(s.mean_fidelity);
    }
    assert!(f[1] > f[0], "{f:?}");
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cfg.json"), r#"{"gamma": 0.05, "T1": 0.6, "shots": 20, "seed": 9, "ancilla": {"kind": "optimized", "n": 1}}"#)
        .unwrap();
    let o = cubist(d, &["--config", "cfg.json", "gate", "run", "--shots", "30", "--out", "g.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s: GateRunSummary = serde_json::from_str(&read(d, "g.json")).unwrap();
    assert_eq!(s.n_shots, 30);
    assert_eq!((s.config.gamma, s.config.t1, s.config.seed), (0.05, 0.6, 9));
    let m = manifest(d, "g.json");
    assert_eq!(m["config"]["shots"], 30);
    assert_eq!(m["config"]["T1"], 0.6);

    // the echoed config reproduces the run
    let echoed = m["config"].to_string();
    std::fs::write(d.join("again.json"), echoed).unwrap();
    let o = cubist(d, &["--config", "again.json", "gate", "run", "--out", "g2.json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(read(d, "g.json"), read(d, "g2.json"));
}

#[test]
fn validate_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = cubist(d, &["validate", "--suite", "identities", "--out", "i.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r: ValidationReport = serde_json::from_str(&read(d, "i.json")).unwrap();
    assert!(r.passed);
    let balanced = r.checks.iter().find(|c| c.name == "closed form equals balanced formula").unwrap();
    assert!(balanced.value < 1e-10);

    let o = cubist(d, &["validate", "--suite", "sampler", "--out", "s.json"]);
    assert_eq!(code(&o), 0);
    let r: ValidationReport = serde_json::from_str(&read(d, "s.json")).unwrap();
    assert!(r.checks.iter().filter(|c| c.name.starts_with("chi-square")).count() == 3);

    cubist(d, &["validate", "--suite", "all", "--out", "a1.json"]);
    cubist(d, &["validate", "--suite", "all", "--out", "a2.json"]);
    assert_eq!(read(d, "a1.json"), read(d, "a2.json"));
}
