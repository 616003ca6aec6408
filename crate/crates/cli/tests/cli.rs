use std::process::{Command, Output};

use serde_json::Value;

fn pstop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pstop")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn basel_verifies() {
    let out = pstop(&["verify-identity", "basel", "--tol", "1e-7"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["id"], "basel");
    assert_eq!(v["pass"], true);
    let rhs = v["rhs"].as_f64().unwrap();
    assert!((rhs - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-15);
}

#[test]
fn unreachable_tolerance_exits_one() {
    let out = pstop(&["verify-identity", "leibniz", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sampling_is_byte_identical() {
    let args = ["sample", "--rule", "winding-sym", "--r", "1", "--n", "500", "--seed", "42", "--format", "csv"];
    let (a, b) = (pstop(&args), pstop(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("re,im,winding_index,steps"));
    assert_eq!(text.lines().count(), 501);
    let other = pstop(&["sample", "--rule", "winding-sym", "--r", "1", "--n", "500", "--seed", "43", "--format", "csv"]);
    assert_ne!(text.as_bytes(), &other.stdout[..]);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(pstop(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(pstop(&["list", "--nope"]).status.code(), Some(2));
    assert_eq!(pstop(&["density", "disk", "--param", "zz=1"]).status.code(), Some(2));
    assert_eq!(pstop(&["density", "no_such_density"]).status.code(), Some(2));
    assert_eq!(pstop(&["sample", "--rule", "exit"]).status.code(), Some(2));
    assert_eq!(pstop(&["export", "--density", "disk"]).status.code(), Some(2));
    assert_eq!(pstop(&["density", "disk", "--param", "a=1"]).status.code(), Some(2));
}

#[test]
fn list_is_sorted_and_tagged() {
    let v = json(&pstop(&["list", "densities"]));
    let ids: Vec<&str> = v["densities"].as_array().unwrap().iter().map(|d| d["id"].as_str().unwrap()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    assert!(ids.contains(&"disk"));
    assert!(v["densities"][0]["tag"].is_string());
}

#[test]
fn export_has_fixed_header_and_row_count() {
    let out = pstop(&["export", "--density", "strip", "--curve", "1", "--grid", "25", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "s,value,cdf");
    assert_eq!(lines.len(), 26);
    let cdfs: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(cdfs.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn density_value_and_cdf() {
    // Poisson kernel of the unit disk from 0.5 at angle 0: (1 − 1/4)/(2π·1/4)
    let v = json(&pstop(&["density", "disk", "--s", "0"]));
    assert!((v["value"].as_f64().unwrap() - 1.5 / std::f64::consts::PI).abs() < 1e-14);
    let v = json(&pstop(&["cdf", "halfplane", "--s", "0"]));
    assert!((v["cdf"].as_f64().unwrap() - 0.5).abs() < 1e-14);
    let v = json(&pstop(&["density", "annulus"]));
    let total: f64 = v["curves"].as_array().unwrap().iter().map(|c| c["mass"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn dynkin_on_annulus_includes_log() {
    let out = pstop(&["dynkin", "annulus"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let hs: Vec<&str> = v["results"].as_array().unwrap().iter().map(|r| r["h"].as_str().unwrap()).collect();
    assert_eq!(hs, ["re_z1", "im_z1", "re_z2", "log_abs"]);
}

#[test]
fn coco_reports_certified_divergence() {
    let out = pstop(&["verify-identity", "coco_diagnostic"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["diagnostic"]["terms_vanish"], false);
}

#[test]
fn small_gate_run() {
    let out = pstop(&["verify-density", "disk", "--n", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["results"][0]["id"], "disk");
    assert_eq!(v["results"][0]["n_used"], 2000);
}
