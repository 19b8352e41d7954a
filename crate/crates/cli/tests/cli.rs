use std::process::{Command, Output};

use serde_json::Value;

fn mstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mstab")).args(args).env_remove("MSTAB_PRECISION").output().unwrap()
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn a2_limit() -> Value {
    json_of(&mstab(&["limit", "--heart", "A2", "--family", "(-1+it, 1+it)"]))
}

#[test]
fn strata_labeled_counts() {
    let v = json_of(&mstab(&["strata", "--n", "3", "--levels", "1", "--labeled"]));
    assert_eq!(v["schema"], 1);
    let graphs = v["graphs"].as_array().unwrap();
    let mut by_kappa = std::collections::BTreeMap::new();
    for g in graphs {
        let mut k: Vec<u64> = g["edges"].as_array().unwrap().iter().map(|e| e["kappa"].as_u64().unwrap()).collect();
        k.sort();
        *by_kappa.entry(k).or_insert(0) += 1;
    }
    assert_eq!(by_kappa, [(vec![4], 6), (vec![4, 4], 3), (vec![5], 4)].into_iter().collect());
}

#[test]
fn strata_census_is_byte_stable() {
    let a = mstab(&["strata", "--n", "3", "--levels", "3"]);
    let b = mstab(&["strata", "--n", "3", "--levels", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let golden = include_str!("../../core/tests/golden/a3_census.json");
    assert_eq!(String::from_utf8(a.stdout).unwrap(), golden);
}

#[test]
fn strata_table_and_dot() {
    let t = mstab(&["strata", "--n", "3", "--levels", "2", "--format", "table"]);
    assert!(t.status.success());
    let text = String::from_utf8(t.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    let d = mstab(&["strata", "--n", "2", "--format", "dot"]);
    assert!(String::from_utf8(d.stdout).unwrap().starts_with("digraph"));
}

#[test]
fn limit_of_a2_family() {
    let v = a2_limit();
    assert_eq!(v["lambda"], "1/64");
    let top = &v["msc"]["top_heart"]["simples"];
    let classes: Vec<(u64, Value)> = top.as_array().unwrap().iter().map(|s| (s["label"].as_u64().unwrap(), s["class"].clone())).collect();
    assert_eq!(classes, vec![(1, serde_json::json!([1, 1])), (2, serde_json::json!([0, -1]))]);
    let levels = v["msc"]["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 2);
    assert_eq!(levels[1]["simples"], serde_json::json!([1]));
    // the unrotated datum is exact: Z0(S2[1]) = -1 and Z1(E) = 2i
    assert_eq!(v["unrotated"]["levels"][0]["charge"]["2"], serde_json::json!([-1, 1, 0, 1]));
    assert_eq!(v["unrotated"]["levels"][1]["charge"]["1"], serde_json::json!([0, 1, 2, 1]));
}

#[test]
fn braid_center() {
    let v = json_of(&mstab(&["braid", "--n", "2", "--word", "(1 2)^3"]));
    assert_eq!(v["matrix"], serde_json::json!([[-1, 0], [0, -1]]));
    let t = mstab(&["braid", "--n", "2", "--word", "2", "--format", "table"]);
    assert_eq!(String::from_utf8(t.stdout).unwrap(), "   1   0\n  -1   1\n");
}

#[test]
fn validate_plumb_and_rotate_roundtrip() {
    let m = a2_limit()["unrotated"].to_string();
    let v = json_of(&mstab(&["msc-validate", "--input", &m]));
    assert_eq!(v["valid"], true);
    assert_eq!(v["vanishing_chain"]["levels"][0]["labels"], serde_json::json!([1]));

    let p = json_of(&mstab(&["plumb", "--input", &m, "--tau", "-2i"]));
    assert_eq!(p["levels"].as_array().unwrap().len(), 1);
    let unplumbed = json_of(&mstab(&["plumb", "--input", &m, "--tau", "inf"]));
    assert_eq!(unplumbed["levels"].as_array().unwrap().len(), 2);

    // lambda = 2 returns the same charges on the doubly shifted heart
    let r = json_of(&mstab(&["c-act", "--input", &m, "--lambda", "2"]));
    assert_eq!(r["levels"], serde_json::from_str::<Value>(&m).unwrap()["levels"]);
    assert_eq!(r["top_heart"]["provenance"]["shift"], 2);
}

#[test]
fn input_from_file_and_stdin() {
    let m = a2_limit()["unrotated"].to_string();
    let dir = std::env::temp_dir().join(format!("mstab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("msc.json");
    std::fs::write(&path, &m).unwrap();
    let a = mstab(&["msc-validate", "--input", path.to_str().unwrap()]);
    assert!(a.status.success());

    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_mstab"))
        .args(["msc-validate", "--input", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(m.as_bytes()).unwrap();
    let b = child.wait_with_output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn defect_grid() {
    let m = a2_limit()["unrotated"].to_string();
    let v = json_of(&mstab(&["defect", "--input", &m, "--lambda", "1/4", "--lambda", "i/2", "--tau", "1/3-2i", "--tau", "-5i"]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r["within_bound"] == true));
    assert!(rows.iter().filter(|r| r["lambda"] == "i/2").all(|r| r["zero_certified"] == true));
    let t = mstab(&["defect", "--input", &m, "--lambda", "1/4", "--tau", "-3i", "--format", "table"]);
    assert_eq!(String::from_utf8(t.stdout).unwrap().lines().count(), 2);
}

#[test]
fn numeric_precision_from_env() {
    let args = ["limit", "--family", "(-1+it, 1+it)"];
    let exact = a2_limit();
    let out = Command::new(env!("CARGO_BIN_EXE_mstab")).args(args).env("MSTAB_PRECISION", "numeric").output().unwrap();
    let v = json_of(&out);
    assert!(v["msc"]["levels"][0]["charge"]["2"]["re"].is_f64());
    assert!(v["msc"]["levels"][0]["charge"]["2"].get("rad").is_none());
    assert_ne!(v["msc"], exact["msc"]);
    let flag = json_of(&mstab(&["--precision", "numeric", "--digits", "5", "limit", "--family", "(-1+it, 1+it)"]));
    let re = flag["msc"]["levels"][0]["charge"]["2"]["re"].as_f64().unwrap();
    assert_eq!(re, -0.99880);
}

#[test]
fn twist_data_and_tilts() {
    let v = json_of(&mstab(&["twist-data", "--rho", "1,1;2"]));
    assert_eq!(v["levels"][0]["ell"], 2);
    assert_eq!(v["levels"][1]["kappa_hat"], serde_json::json!([5]));
    let t = json_of(&mstab(&["tilt", "--word", "2"]));
    assert_eq!(t["heart"]["simples"][1]["class"], serde_json::json!([0, -1]));
    let back = json_of(&mstab(&["tilt", "--word", "2 -2"]));
    assert_eq!(back["key"], json_of(&mstab(&["tilt", "--word", ""]))["key"]);
    let g = mstab(&["exchange-graph", "--heart", "A3", "--radius", "1", "--format", "dot"]);
    assert!(String::from_utf8(g.stdout).unwrap().contains("->"));
}

#[test]
fn exit_codes() {
    assert_eq!(mstab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(mstab(&["msc-validate", "--input", "{\"top_heart\": "]).status.code(), Some(2));
    let bad_field = mstab(&["msc-validate", "--input", "{\"schema\": 1, \"top_heart\": \"A2\", \"levels\": [{\"simples\": [1, 2], \"charge\": {\"1\": true}}]}"]);
    assert_eq!(bad_field.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_field.stderr).contains("/levels/0/charge/1"));
    assert_eq!(mstab(&["braid", "--n", "2", "--word", "(1 2"]).status.code(), Some(2));
    assert_eq!(mstab(&["c-act", "--input", "{}", "--lambda", "1", "--format", "dot"]).status.code(), Some(2));
    // well formed but not a stability condition
    assert_eq!(mstab(&["limit", "--family", "(1, 1)"]).status.code(), Some(1));
    let invalid = "{\"schema\": 1, \"top_heart\": \"A2\", \"levels\": [{\"simples\": [1, 2], \"charge\": {\"1\": \"1\", \"2\": \"i\"}}]}";
    assert_eq!(mstab(&["msc-validate", "--input", invalid]).status.code(), Some(1));
}
