//! End-to-end checks of the command-line interface via the built binary.

use std::io::Write;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ate"))
}

fn temp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("ate_cli_test_{}_{name}", std::process::id()));
    p
}

fn write_csv(name: &str, contents: &str) -> PathBuf {
    let p = temp_path(name);
    let mut f = std::fs::File::create(&p).unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    p
}

fn balanced_csv(n: usize) -> String {
    let mut s = String::from("y,w,x1,x2\n");
    let mut r = ate_toolkit::rng::stream(77);
    for i in 0..n {
        let x1 = ate_toolkit::rng::standard_normal(&mut r);
        let x2 = ate_toolkit::rng::standard_normal(&mut r);
        let w = i % 2;
        let y = w as f64 + 0.5 * x1 + ate_toolkit::rng::standard_normal(&mut r);
        s.push_str(&format!("{y},{w},{x1},{x2}\n"));
    }
    s
}

#[test]
fn estimate_emits_json_and_exit_zero() {
    let data = write_csv("est.csv", &balanced_csv(40));
    let out = bin()
        .args(["estimate", "--data"])
        .arg(&data)
        .args(["--outcome", "y", "--treatment", "w", "--methods", "naive,ols"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed.as_array().unwrap().len(), 2);
    assert_eq!(parsed[0]["method"], "naive");
    std::fs::remove_file(data).ok();
}

#[test]
fn missing_data_flag_is_usage_error() {
    let out = bin().args(["estimate", "--outcome", "y"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn single_arm_data_exits_three() {
    let data = write_csv("onearm.csv", "y,w,x\n1,1,0\n2,1,1\n3,1,0\n4,1,1\n");
    let out = bin()
        .args(["estimate", "--data"])
        .arg(&data)
        .args(["--outcome", "y", "--treatment", "w", "--methods", "naive"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_file(data).ok();
}

#[test]
fn text_treatment_exits_two() {
    let data = write_csv("yes.csv", "y,w,x\n1,yes,0\n2,no,1\n");
    let out = bin()
        .args(["estimate", "--data"])
        .arg(&data)
        .args(["--outcome", "y", "--treatment", "w"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_file(data).ok();
}

#[test]
fn report_writes_file_and_histogram_bins_sum_to_n() {
    let n = 80;
    let data = write_csv("rep.csv", &balanced_csv(n));
    let out_json = temp_path("rep.json");
    let out_hist = temp_path("rep_hist.csv");
    let out = bin()
        .args(["report", "--data"])
        .arg(&data)
        .args(["--outcome", "y", "--treatment", "w", "--methods", "naive"])
        .args(["--bootstrap", "40", "--half-sample-reps", "10", "--trees", "60"])
        .arg("--out")
        .arg(&out_json)
        .arg("--hist")
        .arg(&out_hist)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_json).unwrap()).unwrap();
    assert_eq!(report["rows"][0]["method"], "naive");
    let hist = std::fs::read_to_string(&out_hist).unwrap();
    let total: usize = hist
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, n);
    for p in [data, out_json, out_hist] {
        std::fs::remove_file(p).ok();
    }
}

#[test]
fn report_is_byte_identical_for_same_seed() {
    let data = write_csv("det.csv", &balanced_csv(60));
    let out_a = temp_path("det_a.json");
    let out_b = temp_path("det_b.json");
    for out_path in [&out_a, &out_b] {
        let out = bin()
            .args(["report", "--data"])
            .arg(&data)
            .args(["--outcome", "y", "--treatment", "w", "--methods", "naive,dre"])
            .args(["--seed", "9", "--bootstrap", "25", "--half-sample-reps", "8"])
            .args(["--trees", "40"])
            .arg("--out")
            .arg(out_path)
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert_eq!(a, b, "same seed gave different report bytes");
    for p in [data, out_a, out_b] {
        std::fs::remove_file(p).ok();
    }
}

#[test]
fn simulate_randomized_naive_is_unbiased() {
    let out = bin()
        .args(["simulate", "--dgp", "randomized", "--n", "400", "--reps", "60"])
        .args(["--seed", "3", "--methods", "naive"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let bias = parsed["per_method"][0]["bias"].as_f64().unwrap();
    let mc_se = parsed["per_method"][0]["mc_se"].as_f64().unwrap();
    assert!(bias.abs() < 3.0 * mc_se, "bias {bias} vs mc se {mc_se}");
}

#[test]
fn unknown_dgp_is_usage_error() {
    let out = bin()
        .args(["simulate", "--dgp", "mystery", "--n", "100", "--reps", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bias_hist_svg_written() {
    let data = write_csv("hist.csv", &balanced_csv(70));
    let out_svg = temp_path("bias.svg");
    let out = bin()
        .args(["bias-hist", "--data"])
        .arg(&data)
        .args(["--outcome", "y", "--treatment", "w", "--trees", "40", "--bins", "8"])
        .arg("--out")
        .arg(&out_svg)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(&out_svg).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("<rect"));
    for p in [data, out_svg] {
        std::fs::remove_file(p).ok();
    }
}
