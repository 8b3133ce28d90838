use std::path::PathBuf;
use std::process::{Command, Output};

use bosonq::dynamics::GateList;
use bosonq::linalg::{max_abs, unitary_evolution};
use bosonq::{PauliSum, C64};

const SPIN_BOSON: &str = r#"{"model":"spin_boson","params":{"delta":1.0,"epsilon":2.0,"omegas":[2.0],"couplings":[0.7],"cutoffs":[3]},"encoding":"binary"}"#;

fn bosonq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bosonq")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bosonq-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn empty_argv_prints_usage_and_exits_2() {
    let o = bosonq(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn unknown_subcommand_is_a_validation_error() {
    assert_eq!(bosonq(&["fly"]).status.code(), Some(2));
}

#[test]
fn compile_reproduces_spin_boson_decomposition() {
    let o = bosonq(&["compile", "--model", SPIN_BOSON]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let h = PauliSum::from_text(&stdout(&o)).unwrap();
    let g = 0.7;
    let (s2, s3) = (2f64.sqrt(), 3f64.sqrt());
    for (label, want) in [
        ("XII", 1.0),
        ("ZII", 1.0),
        ("III", 3.0),
        ("IIZ", -1.0),
        ("IZI", -2.0),
        ("XIX", g / 2.0 * (1.0 + s3)),
        ("XZX", g / 2.0 * (1.0 - s3)),
        ("XXX", g / 2.0 * s2),
        ("XYY", g / 2.0 * s2),
    ] {
        assert!((h.coefficient(label) - C64::new(want, 0.0)).norm() <= 1e-12, "{label}");
    }
    assert_eq!(h.len(), 9);
}

#[test]
fn compile_output_is_byte_identical_across_runs() {
    let a = bosonq(&["compile", "--model", SPIN_BOSON, "--format", "json"]);
    let b = bosonq(&["compile", "--model", SPIN_BOSON, "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn json_floats_round_trip_exactly() {
    let text = stdout(&bosonq(&["compile", "--model", SPIN_BOSON, "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let h = PauliSum::from_text(&stdout(&bosonq(&["compile", "--model", SPIN_BOSON]))).unwrap();
    for t in v["terms"].as_array().unwrap() {
        let re = t["re"].as_f64().unwrap();
        assert_eq!(re.to_bits(), h.coefficient(t["label"].as_str().unwrap()).re.to_bits());
    }
}

#[test]
fn malformed_json_reports_line_and_column() {
    let path = scratch("bad.json");
    std::fs::write(&path, "{\"model\": \"spin_boson\",\n  \"params\": {\"delta\": 1.0,, }}").unwrap();
    let o = bosonq(&["compile", "--model", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2 column"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_rejected() {
    let doc = SPIN_BOSON.replace("\"cutoffs\":[3]", "\"cutoffs\":[3],\"extra\":1");
    assert_eq!(bosonq(&["compile", "--model", &doc]).status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_4() {
    let o = bosonq(&["xy", "--n", "4", "--out", "/nonexistent-dir/xy.csv"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn stalled_flow_exits_3() {
    let o = bosonq(&["wegner", "--matrix", "[[1, 0.5], [0.5, 1]]", "--s-max", "10"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("stalled pairs [(0, 1)]"));
}

#[test]
fn circuits_export_reimports_to_the_trotter_step() {
    let path = scratch("step.qasm");
    let o = bosonq(&["compile", "--model", SPIN_BOSON, "--circuits", path.to_str().unwrap(), "--dt", "0.05"]);
    assert_eq!(o.status.code(), Some(0));
    let gl = GateList::from_qasm(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let h = PauliSum::from_text(&stdout(&o)).unwrap();
    let mut want = bosonq::linalg::identity(8);
    for t in h.terms() {
        want = unitary_evolution(&t.to_matrix().unwrap(), 0.05) * want;
    }
    assert!(max_abs(&(gl.unitary() - want)) <= 1e-12);
}

#[test]
fn walk_emits_25_correlation_rows() {
    let o = bosonq(&["walk"]);
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(r.headers().unwrap(), vec!["p", "q", "gamma"]);
    let rows: Vec<_> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 25);
    let gamma = |p: usize, q: usize| rows[p * 5 + q][2].parse::<f64>().unwrap();
    for p in 0..5 {
        for q in 0..5 {
            assert!((gamma(p, q) - gamma(q, p)).abs() <= 1e-12);
        }
    }
}

#[test]
fn walk_methods_agree() {
    let parse = |o: Output| -> Vec<f64> {
        csv::Reader::from_reader(o.stdout.as_slice())
            .records()
            .map(|r| r.unwrap()[2].parse().unwrap())
            .collect()
    };
    let e = parse(bosonq(&["walk", "--u", "100", "--method", "exact"]));
    let t = parse(bosonq(&["walk", "--u", "100", "--method", "trotter"]));
    assert!(e.iter().zip(&t).all(|(a, b)| (a - b).abs() <= 1e-6));
}

#[test]
fn pds_sweep_columns() {
    let o = bosonq(&["pds", "--g", "0,1", "--k", "3"]);
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(r.headers().unwrap(), vec!["g", "E_ED", "E_PDS1", "E_PDS2", "E_PDS3"]);
    for rec in r.records() {
        let rec = rec.unwrap();
        let e: f64 = rec[1].parse().unwrap();
        for k in 2..5 {
            assert!(rec[k].parse::<f64>().unwrap() >= e - 1e-9);
        }
    }
}

#[test]
fn trunc_emits_one_row_per_time() {
    let o = bosonq(&["trunc", "--lambda0", "1", "--chi", "2", "--t", "1..10", "--eps", "1e-3", "--modes", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(r.headers().unwrap(), vec!["t[1/omega]", "eps", "N", "delta_lambda", "s", "lambda_tilde"]);
    let cut: Vec<usize> = r.records().map(|x| x.unwrap()[5].parse().unwrap()).collect();
    assert_eq!(cut.len(), 10);
    assert!(cut.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn blockenc_json_reports_error_within_bound() {
    let o = bosonq(&["blockenc", "--lambda", "16", "--delta", "0.01"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["xi"], 256);
    assert!(v["error"].as_f64().unwrap() <= v["bound"].as_f64().unwrap());
}

#[test]
fn prep_is_seed_deterministic() {
    let a = bosonq(&["prep", "--random", "5", "--seed", "7"]);
    let b = bosonq(&["prep", "--random", "5", "--seed", "7"]);
    let c = bosonq(&["prep", "--random", "5", "--seed", "8"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    for run in v.as_array().unwrap() {
        assert!(run["simulation"]["fidelity"].as_f64().unwrap() >= 1.0 - 1e-10);
    }
}

#[test]
fn prep_rejects_unnormalized_coefficients() {
    assert_eq!(bosonq(&["prep", "--coefficients", "1,1"]).status.code(), Some(2));
}

#[test]
fn xy_spectrum_csv() {
    let o = bosonq(&["xy", "--n", "7", "--gamma", "0.3", "--lambda", "-0.4"]);
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(r.headers().unwrap(), vec!["k[2pi/N]", "epsilon_k", "delta_k", "E_k"]);
    assert_eq!(r.records().count(), 7);
}

#[test]
fn downfold_converges_to_exact_energy() {
    let o = bosonq(&["downfold"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let gap = (v["result"]["energy"].as_f64().unwrap() - v["result"]["exact"].as_f64().unwrap()).abs();
    assert!(gap <= 1e-6);
}

#[test]
fn lindblad_trace_and_columns() {
    let o = bosonq(&["lindblad", "--time", "0.5", "--every", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let header = r.headers().unwrap().clone();
    assert_eq!(&header[0], "t[1/omega]");
    assert_eq!(&header[header.len() - 1], "purity");
    for rec in r.records() {
        let rec = rec.unwrap();
        let total: f64 = (1..9).map(|i| rec[i].parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() <= 1e-8);
    }
}

#[test]
fn evolve_error_stays_below_bound() {
    let o = bosonq(&["evolve", "--model", SPIN_BOSON, "--time", "1", "--steps", "50", "--samples", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    for rec in r.records() {
        let rec = rec.unwrap();
        assert!(rec[1].parse::<f64>().unwrap() <= rec[2].parse::<f64>().unwrap() + 1e-15);
    }
}

#[test]
fn every_selftest_passes() {
    for cmd in [
        "compile", "evolve", "walk", "lindblad", "pds", "downfold", "trunc", "blockenc", "prep", "wegner", "xy",
    ] {
        let o = bosonq(&[cmd, "--selftest", "--seed", "11"]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stdout(&o));
        assert!(!stdout(&o).contains("FAIL"));
    }
}
