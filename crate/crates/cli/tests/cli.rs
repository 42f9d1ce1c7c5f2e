use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn out_dir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str], out: &PathBuf) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spin1-pxp"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn summary(args: &[&str], name: &str) -> (Value, PathBuf) {
    let out = out_dir(name);
    let o = run(args, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    (serde_json::from_slice(&o.stdout).unwrap(), out)
}

#[test]
fn basis_model2_obc() {
    let (s, out) = summary(&["basis", "--model", "II", "--L", "4", "--bc", "obc"], "basis_ii");
    assert_eq!(s["dim"], 60);
    assert_eq!(s["closed_form_matches"], true);
    let export = std::fs::read_to_string(out.join("basis.csv")).unwrap();
    assert_eq!(export.lines().filter(|l| !l.starts_with('#') && !l.starts_with("index")).count(), 60);
}

#[test]
fn basis_free_chain() {
    let (s, _) = summary(&["basis", "--model", "free", "--L", "3"], "basis_free");
    assert_eq!(s["dim"], 27);
}

#[test]
fn forbid_list_equals_model3() {
    let (s, _) = summary(&["basis", "--forbid", "00,++", "--L", "2", "--bc", "obc"], "basis_forbid");
    assert_eq!(s["dim"], 7);
    assert_eq!(s["constraint"], "MODEL_III");
}

#[test]
fn basis_reports_sector_dimension() {
    let (s, out) = summary(&["basis", "--model", "I", "--L", "10", "--sector", "k=0,inv=+1"], "basis_sector");
    assert!(s["sector_dim"].as_u64().unwrap() > 0);
    assert!(out.join("sector.txt").exists());
}

#[test]
fn fsa_model3_first_error() {
    let (s, out) = summary(&["fsa", "--model", "III", "--L", "12"], "fsa_iii");
    assert_eq!(s["n_f"], 2);
    let got = s["delta_nf"].as_f64().unwrap();
    assert!((got - 1.0 / (4.0 * (4.0 * 12.0 - 11.0))).abs() < 1e-10);
    assert_eq!(s["convention"], "norm2");
    assert!(out.join("fsa.csv").exists() && out.join("fsa_spectrum.csv").exists());
}

#[test]
fn fsa_norm_convention_is_square_root() {
    let (a, _) = summary(&["fsa", "--model", "II", "--L", "10"], "fsa_norm2");
    let (b, _) = summary(&["fsa", "--model", "II", "--L", "10", "--fsa-convention", "norm"], "fsa_norm");
    let d2 = a["delta_nf"].as_f64().unwrap();
    let d1 = b["delta_nf"].as_f64().unwrap();
    assert!((d1 * d1 - d2).abs() < 1e-12);
}

#[test]
fn quench_model2_conserves_norm() {
    let (s, out) = summary(&["quench", "--model", "II", "--L", "12", "--tmax", "2"], "quench_ii");
    assert!(s["norm_defect"].as_f64().unwrap() < 1e-10);
    let csv = std::fs::read_to_string(out.join("quench.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "norm").unwrap();
    let mut rows = 0;
    for line in lines {
        let norm: f64 = line.split(',').nth(col).unwrap().parse().unwrap();
        assert!((norm - 1.0).abs() < 1e-10);
        rows += 1;
    }
    assert_eq!(rows, 41);
}

#[test]
fn verify_model1_passes() {
    let out = out_dir("verify_i");
    let o = run(&["verify", "--model", "I", "--L", "10"], &out);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{text}");
    assert!(!text.contains("FAIL"));
    for name in ["N_pp conservation", "spectrum symmetry", "inert census", "special state"] {
        assert!(text.contains(&format!("PASS {name}")), "missing {name}: {text}");
    }
}

#[test]
fn spectrum_and_fragments_in_sector() {
    let (s, out) = summary(&["spectrum", "--model", "I", "--L", "10", "--sector", "k=0,inv=+1"], "spectrum_sector");
    assert!(s["mirror_defect"].as_f64().unwrap() < 1e-10);
    assert!(s["max_residual"].as_f64().unwrap() < 1e-10);
    assert!(out.join("eigenreport.csv").exists() && out.join("gibbs_sz.csv").exists());
    let (f, _) = summary(&["fragments", "--model", "I", "--L", "10"], "fragments_full");
    assert_eq!(f["inert_states"], f["inert_closed_form"]);
    assert_eq!(f["fragments"], 277);
}

#[test]
fn entropy_reports_special_states() {
    let (s, _) = summary(&["entropy", "--model", "I", "--L", "8"], "entropy_i");
    let special = s["special_states"].as_array().unwrap();
    assert_eq!(special.len(), 2);
    let expect = (2.0f64 * 8.0 / 4.0).ln() + 0.5 * 2f64.ln();
    for st in special {
        assert!((st["S"].as_f64().unwrap() - expect).abs() < 1e-10);
    }
}

#[test]
fn outputs_are_deterministic_and_replayable() {
    let args = ["spectrum", "--model", "III", "--L", "8"];
    let (_, a) = summary(&args, "det_a");
    let (_, b) = summary(&args, "det_b");
    let read = |p: &PathBuf| std::fs::read(p.join("eigenreport.csv")).unwrap();
    assert_eq!(read(&a), read(&b));

    let replay = out_dir("det_replay");
    std::fs::create_dir_all(&replay).unwrap();
    let config = std::fs::read_to_string(a.join("run_config.json")).unwrap();
    let config = config.replace(a.to_str().unwrap(), replay.to_str().unwrap());
    std::fs::write(replay.join("cfg.json"), config).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_spin1-pxp"))
        .arg("replay")
        .arg(replay.join("cfg.json"))
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(read(&a), read(&replay));
}

#[test]
fn exit_codes() {
    let out = out_dir("exit");
    let code = |args: &[&str]| run(args, &out).status.code().unwrap();
    assert_eq!(code(&["basis", "--L", "4"]), 2);
    assert_eq!(code(&["basis", "--model", "II", "--L", "4", "--sector", "k=1,inv=+1"]), 2);
    assert_eq!(code(&["fsa", "--model", "I", "--L", "7"]), 2);
    assert_eq!(code(&["spectrum", "--model", "free", "--L", "10"]), 4);
}

#[test]
fn help_lists_every_option() {
    let help = |sub: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_spin1-pxp")).args([sub, "--help"]).output().unwrap();
        String::from_utf8(o.stdout).unwrap()
    };
    let common = ["--model", "--forbid", "--L", "--bc", "--sector", "--out", "--workers"];
    for sub in ["basis", "spectrum", "fragments", "fsa", "quench", "entropy", "verify"] {
        let text = help(sub);
        for flag in common {
            assert!(text.contains(flag), "{sub} --help lacks {flag}");
        }
    }
    let quench = help("quench");
    for flag in ["--tmax", "--dt", "--method", "--cut"] {
        assert!(quench.contains(flag));
    }
    assert!(help("fsa").contains("--fsa-convention"));
}
