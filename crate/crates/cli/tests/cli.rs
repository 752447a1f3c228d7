use std::fs;
use std::path::{Path, PathBuf};

use fnls::dynamics::flow;
use fnls::measures::GaussianSampler;
use fnls::spectral_core::{hs_norm_sq, mass};
use fnls::Field64;
use fnls_cli::formats;
use fnls_cli::{main_with_args, ExperimentConfig};
use serde_json::Value;
use tempfile::TempDir;

fn run(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["fnlslab".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push(format!("--out={}", out.display()));
    main_with_args(argv)
}

/// `(config line, header, rows)` of a CSV artifact.
fn read_csv(path: &Path) -> (String, Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let (first, rest) = text.split_once('\n').unwrap();
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (first.to_string(), header, rows)
}

fn f(x: &str) -> f64 {
    x.parse().unwrap()
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

/// Every artifact except the manifest, by name.
fn artifacts(out: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p: PathBuf| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn formats_doc_lists_every_header() {
    let doc = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/FORMATS.md")).unwrap();
    for (name, header) in formats::ALL {
        assert!(doc.contains(name), "{name} missing from FORMATS.md");
        assert!(doc.contains(&header.join(",")), "header of {name} missing from FORMATS.md");
    }
}

#[test]
fn simulate_golden_against_core() {
    let dir = TempDir::new().unwrap();
    let args = ["simulate", "--model.alpha=1.5", "--grid.n_trunc=8", "--t_final=0.2", "--integrator.dt=1e-2", "--seed=5"];
    assert_eq!(run(dir.path(), &args), 0);
    let (cfg_line, header, rows) = read_csv(&dir.path().join("simulate.csv"));
    assert_eq!(header, formats::SIMULATE);
    let cfg: ExperimentConfig = serde_json::from_str(cfg_line.strip_prefix("# config=").unwrap()).unwrap();
    assert_eq!(cfg.model.alpha, 1.5);
    assert_eq!(cfg.grid.n_trunc, 8);
    assert_eq!(cfg.output_dir, dir.path());

    let g = cfg.grid_spec().unwrap();
    let u0: Field64 = GaussianSampler::new(cfg.model.s, 8, 5).sample(0);
    let traj = flow(&u0, 0.2, &cfg.model, &g, &cfg.integrator).unwrap();
    assert_eq!(rows.len(), traj.len());
    for (row, (t, u)) in rows.iter().zip(traj.times.iter().zip(&traj.states)) {
        assert!((f(&row[0]) - t).abs() <= 1e-10);
        assert!((f(&row[1]) - mass(u)).abs() <= 1e-10 * mass(u));
        assert!((f(&row[3]) - hs_norm_sq(u, cfg.model.s)).abs() <= 1e-10 * hs_norm_sq(u, cfg.model.s));
    }
    let m = manifest(dir.path());
    assert_eq!(m["status"], "pass");
    assert_eq!(m["files"][0], "simulate.csv");
}

#[test]
fn simulate_zero_datum_stays_zero() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(dir.path(), &["simulate", "--simulate.initial=zero", "--t_final=0.05", "--grid.n_trunc=4"]), 0);
    let (_, _, rows) = read_csv(&dir.path().join("simulate.csv"));
    assert!(rows.len() > 1);
    for row in rows {
        // wick mass is −σ_N, every other quantity vanishes
        assert_eq!(f(&row[1]), 0.0);
        assert!(f(&row[2]) < 0.0);
        assert_eq!(f(&row[3]), 0.0);
        assert_eq!(f(&row[4]), 0.0);
        assert_eq!(f(&row[5]), 0.0);
    }
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(run(d, &["lemma", "nope"]), 2);
    assert_eq!(manifest(d)["exit_code"], 2);
    assert_eq!(run(d, &["simulate", "--model.alpha=0.9"]), 2);
    assert_eq!(run(d, &["simulate", "--model.typo=1"]), 2);
    assert_eq!(run(d, &["simulate", "--config=/nonexistent/x.json"]), 2);
    assert_eq!(run(d, &["quasi", "--samples=10"]), 2);
    assert_eq!(run(d, &["tau-tail", "--samples=10"]), 2);
    assert_eq!(run(d, &["frobnicate"]), 2);
    assert_eq!(run(d, &["--help"]), 0);
    // a negative tolerance cannot be met
    assert_eq!(run(d, &["simulate", "--t_final=0.01", "--grid.n_trunc=4", "--simulate.mass_tol=-1"]), 1);
    assert_eq!(manifest(d)["status"], "gate failure");
}

#[test]
fn config_file_is_merged_under_overrides() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("c.json");
    fs::write(&file, r#"{"model": {"alpha": 1.7}, "t_final": 0.01, "grid": {"n_trunc": 4}}"#).unwrap();
    let out = dir.path().join("o");
    let args = ["simulate", "--config", file.to_str().unwrap(), "--model.s=0.4"];
    assert_eq!(run(&out, &args), 0);
    let m = manifest(&out);
    assert_eq!(m["config"]["model"]["alpha"], 1.7);
    assert_eq!(m["config"]["model"]["s"], 0.4);
    assert_eq!(m["config"]["grid"]["n_trunc"], 4);
}

#[test]
fn quasi_at_time_zero_is_exact() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(dir.path(), &["quasi", "--grid.n_trunc=4", "--t_final=0", "--samples=1000"]), 0);
    let (_, header, rows) = read_csv(&dir.path().join("quasi.csv"));
    assert_eq!(header, formats::QUASI);
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert_eq!(row[3], "0");
        assert_eq!(row[4], row[6]);
        assert_eq!(row[5], row[7]);
        assert_eq!(f(&row[8]), 0.0);
    }
}

#[test]
fn quasi_stderr_scales_with_samples() {
    let common = ["quasi", "--grid.n_trunc=4", "--t_final=0.2", "--integrator.dt=1e-2"];
    let stderrs = |k: usize| {
        let dir = TempDir::new().unwrap();
        let mut args = common.to_vec();
        let s = format!("--samples={k}");
        args.push(&s);
        run(dir.path(), &args);
        let (_, _, rows) = read_csv(&dir.path().join("quasi.csv"));
        rows.iter().map(|r| f(&r[5])).collect::<Vec<_>>()
    };
    let (a, b) = (stderrs(2000), stderrs(8000));
    for (x, y) in a.iter().zip(&b) {
        let r = y / x;
        assert!((0.35..0.7).contains(&r), "stderr ratio {r}");
    }
}

#[test]
fn density_lp_vanishes_at_time_zero() {
    let dir = TempDir::new().unwrap();
    let args = [
        "density-lp",
        "--samples=200",
        "--density_lp.n_values=[2,4]",
        "--density_lp.t_values=[0,0.1]",
        "--integrator.dt=1e-2",
    ];
    assert_eq!(run(dir.path(), &args), 0);
    let (_, header, rows) = read_csv(&dir.path().join("density_lp.csv"));
    assert_eq!(header, formats::DENSITY_LP);
    assert_eq!(rows.len(), 8);
    for row in &rows {
        if f(&row[1]) == 0.0 {
            assert_eq!(f(&row[3]), 0.0);
            assert_eq!(f(&row[4]), 0.0);
        } else {
            assert!(f(&row[3]).is_finite() && f(&row[3]) >= 0.0);
        }
    }
    // the smallest truncation has no predecessor
    assert!(rows.iter().filter(|r| r[0] == "2").all(|r| r[6].is_empty()));
    let (_, fit_header, fits) = read_csv(&dir.path().join("density_lp_fit.csv"));
    assert_eq!(fit_header, formats::DENSITY_LP_FIT);
    assert_eq!(fits.len(), 4);
}

#[test]
fn tau_tail_is_monotone_and_thread_independent() {
    let args = ["tau-tail", "--grid.n_trunc=2", "--samples=1000", "--integrator.dt=2e-2", "--tau.m_cap=6"];
    let one = TempDir::new().unwrap();
    let eight = TempDir::new().unwrap();
    let mut a1 = args.to_vec();
    a1.extend(["--threads", "1"]);
    let mut a8 = args.to_vec();
    a8.extend(["--threads", "8"]);
    let c1 = run(one.path(), &a1);
    let (_, header, rows) = read_csv(&one.path().join("tau_tail.csv"));
    assert_eq!(header, formats::TAU_TAIL);
    assert_eq!(rows.len(), 7);
    let s: Vec<f64> = rows.iter().map(|r| f(&r[3])).collect();
    assert!(s.windows(2).all(|w| w[1] <= w[0]));
    assert!(manifest(one.path())["summary"]["monotone"].as_bool().unwrap());

    assert_eq!(run(eight.path(), &a8), c1);
    // the config line names the output directory, so compare everything after it
    let body = |d: &Path, name: &str| {
        let t = fs::read_to_string(d.join(name)).unwrap();
        t.split_once('\n').unwrap().1.to_string()
    };
    for name in ["tau_tail.csv", "tau_samples.csv"] {
        assert_eq!(body(one.path(), name), body(eight.path(), name));
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let cases: [&[&str]; 3] = [
        &["quasi", "--grid.n_trunc=3", "--samples=1000", "--t_final=0.1", "--integrator.dt=1e-2"],
        &["lemma", "psi", "--lemma.n_max=12"],
        &["simulate", "--grid.n_trunc=6", "--t_final=0.1"],
    ];
    for args in cases {
        let mut a1 = args.to_vec();
        a1.extend(["--threads", "1"]);
        let mut a8 = args.to_vec();
        a8.extend(["--threads", "8"]);
        run(d, &a1);
        let first = artifacts(d);
        run(d, &a8);
        assert_eq!(first, artifacts(d), "{args:?}");
    }
}

#[test]
fn lemma_reports_embed_config() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(dir.path(), &["lemma", "sstar"]), 0);
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("lemma_sstar.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["model"]["alpha"], 2.0);
    assert_eq!(v["report"]["pass"], true);
    assert!((v["report"]["s_star"].as_f64().unwrap() - 0.302776).abs() < 1e-4);
}
