//! Drives the installed binary in separate processes: the decoder must
//! reconstruct from the container file alone, and the validation
//! subcommands must gate their exit codes on the reports.

use std::path::Path;
use std::process::Command;

use srm_core::coding::{self, Coder, CodingConfig, ModelChoice, QuantizerConfig};
use srm_core::harness::{synth_signal, SynthSignal};
use srm_core::sensing::{Mode, Selection, SensingSpec, Signal};
use srm_core::transforms::TransformOp;

fn srm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_srm"))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) {
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

fn write_f64(path: &Path, values: &[f64]) {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes).unwrap();
}

fn read_f64(path: &Path) -> Vec<f64> {
    std::fs::read(path)
        .unwrap()
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

fn test_spec() -> SensingSpec {
    SensingSpec {
        mode: Mode::Rc,
        transform: TransformOp::wht(128).unwrap(),
        n: 128,
        m: 32,
        selection: Selection::WithoutReplacement,
        seed: 414,
    }
}

fn test_config() -> CodingConfig {
    CodingConfig {
        model: ModelChoice::Auto,
        quantizer: QuantizerConfig::Uniform {
            levels: 32,
            delta_sat: 1e-3,
        },
        coder: Coder::Vlc,
        prediction: 2,
        top_k: 32,
        lag_window: 32,
    }
}

fn test_signal(n: usize) -> Signal {
    synth_signal(&SynthSignal::Ar1 { rho: 0.9 }, n, 77).unwrap()
}

#[test]
fn decode_reconstructs_from_the_container_alone() {
    let dir = tempfile::tempdir().unwrap();
    let spec = test_spec();
    let config = test_config();
    let x = test_signal(spec.n);
    let spec_path = dir.path().join("spec.json");
    let cfg_path = dir.path().join("cfg.json");
    let x_path = dir.path().join("x.f64");
    let stream_path = dir.path().join("s.srmc");
    write_json(&spec_path, &spec);
    write_json(&cfg_path, &config);
    write_f64(&x_path, x.samples());

    let status = srm()
        .args(["encode", "--in"])
        .arg(&x_path)
        .arg("--spec")
        .arg(&spec_path)
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(&stream_path)
        .status()
        .unwrap();
    assert!(status.success());

    let expected = coding::encode(&x, &spec, &config).unwrap();
    assert_eq!(std::fs::read(&stream_path).unwrap(), expected.bytes);

    std::fs::remove_file(&x_path).unwrap();
    std::fs::remove_file(&spec_path).unwrap();
    std::fs::remove_file(&cfg_path).unwrap();

    let zhat_path = dir.path().join("zhat.f64");
    let meta_path = dir.path().join("meta.json");
    let status = srm()
        .args(["decode", "--in"])
        .arg(&stream_path)
        .arg("--out")
        .arg(&zhat_path)
        .arg("--json")
        .arg(&meta_path)
        .status()
        .unwrap();
    assert!(status.success());

    let zhat = read_f64(&zhat_path);
    assert_eq!(zhat.len(), expected.reconstruction.len());
    for (a, b) in zhat.iter().zip(&expected.reconstruction) {
        assert_eq!(a.to_bits(), b.to_bits());
    }

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&meta_path).unwrap()).unwrap();
    let side: serde_json::Value =
        serde_json::from_str(&serde_json::to_string(&expected.side_info).unwrap()).unwrap();
    assert_eq!(meta["side_info"], side);
    assert_eq!(meta["values"], 32);
}

#[test]
fn corrupt_containers_fail_the_decode_process() {
    let dir = tempfile::tempdir().unwrap();
    let spec = test_spec();
    let config = test_config();
    let x = test_signal(spec.n);
    let out = coding::encode(&x, &spec, &config).unwrap();
    let mut bytes = out.bytes.clone();
    bytes[6] ^= 0xA5;
    let stream_path = dir.path().join("bad.srmc");
    std::fs::write(&stream_path, &bytes).unwrap();

    let output = srm()
        .args(["decode", "--in"])
        .arg(&stream_path)
        .arg("--out")
        .arg(dir.path().join("zhat.f64"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("self-check"), "stderr: {stderr}");
}

#[test]
fn measurement_output_formats_agree_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let spec = test_spec();
    let spec_path = dir.path().join("spec.json");
    write_json(&spec_path, &spec);
    let bin_path = dir.path().join("y.f64");
    let csv_path = dir.path().join("y.csv");
    for out in [&bin_path, &csv_path] {
        let status = srm()
            .args(["measure", "--spec"])
            .arg(&spec_path)
            .args(["--synth", r#"{"name":"smooth"}"#])
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let binary = read_f64(&bin_path);
    let text: Vec<f64> = std::fs::read_to_string(&csv_path)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(binary.len(), 32);
    for (a, b) in binary.iter().zip(&text) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn validation_exit_codes_follow_the_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({
        "spec": {
            "mode": "rc",
            "transform": {"kind": "wht", "order": 64},
            "n": 64,
            "m": 16,
            "selection": "without_replacement",
            "seed": 1
        },
        "signal": {"source": "synthetic", "kind": {"name": "smooth"}},
        "trials": 2000,
        "probe": [2, 3, 5, 8],
        "t_grid": [0.0, 1.0, 2.0, 3.0],
        "base_seed": 2024
    });
    let cfg_path = dir.path().join("exp.json");
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();
    let report_path = dir.path().join("report.json");

    let status = srm()
        .args(["validate-moments", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&report_path)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["trials"], 2000);

    let status = srm()
        .args(["validate-moments", "--config"])
        .arg(&cfg_path)
        .args(["--max-z", "0.0"])
        .status()
        .unwrap();
    assert!(!status.success());

    let mut starved = cfg;
    starved["trials"] = serde_json::json!(500);
    std::fs::write(&cfg_path, starved.to_string()).unwrap();
    let output = srm()
        .args(["validate-moments", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert!(!output.status.success());
}

#[test]
fn replacement_reports_the_exact_ratio() {
    let output = srm()
        .args(["replacement", "--n", "10", "--m", "2"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&String::from_utf8(output.stdout).unwrap()).unwrap();
    assert_eq!(report["exact_ratio"], 0.9);
}
