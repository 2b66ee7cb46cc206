use std::path::PathBuf;
use std::process::{Command, Output};

use laqcc::clifford::{random_grid, random_ladder, CliffordCircuit, CliffordGate};
use laqcc::stateprep::{ghz_state, uniform_superposition};
use serde_json::Value;

fn laqcc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_laqcc")).args(args).env_remove("LAQCC_SEED").output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn scratch_file(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("laqcc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

#[test]
fn w4_exhaustive_passes() {
    let out = laqcc(&["prep", "w", "--n", "4", "--branches", "exhaustive"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["fidelity"], 1.0);
    assert_eq!(r["exhaustive"], true);
    assert_eq!(r["protocol"], "w_state");
    assert_eq!(r["parameters"]["n"], 4);
}

#[test]
fn dicke_factoradic_passes() {
    let out = laqcc(&["prep", "dicke", "--n", "4", "--k", "2", "--method", "factoradic"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["fidelity"], 1.0);
}

#[test]
fn small_k_above_bound_is_infeasible() {
    let out = laqcc(&["prep", "dicke", "--n", "4", "--k", "3", "--method", "small-k"]);
    assert_eq!(code(&out), 3);
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&laqcc(&["prep", "w", "--n", "4", "--bogus"])), 2);
    assert_eq!(code(&laqcc(&["prep", "w"])), 2);
    assert_eq!(code(&laqcc(&["prep", "ghz", "--n", "3", "--branches", "sample:0"])), 2);
    assert_eq!(code(&laqcc(&["prep", "uniform", "--q", "0"])), 2);
    assert_eq!(code(&laqcc(&["verify"])), 2);
    assert_eq!(code(&laqcc(&["frobnicate"])), 2);
}

fn without_time(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_time_ms");
    v
}

#[test]
fn same_seed_same_report() {
    let args = ["prep", "dicke", "--n", "6", "--k", "2", "--method", "small-k", "--branches", "sample:12", "--seed", "77"];
    let a = json(&laqcc(&args));
    let b = json(&laqcc(&args));
    assert_eq!(without_time(a.clone()), without_time(b));
    assert_eq!(a["seed"], 77);
    assert_eq!(a["branches_checked"], 12);
    assert_eq!(a["exhaustive"], false);
}

#[test]
fn seed_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_laqcc"))
        .args(["prep", "ghz", "--n", "3", "--branches", "sample:4"])
        .env("LAQCC_SEED", "31")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["seed"], 31);
}

#[test]
fn flatten_ladder_and_grid() {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(4);
    let ladder = random_ladder(&mut rng, 3, 3).unwrap();
    let path = scratch_file("ladder.json", &ladder.to_json().unwrap());
    let out = laqcc(&["flatten", "ladder", "--input", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["passed"], true);
    assert_eq!(r["check"]["branches"], 16);
    assert_eq!(r["resources"]["rounds"], 1);

    // a ladder file is not a grid
    assert_eq!(code(&laqcc(&["flatten", "grid", "--input", path.to_str().unwrap()])), 2);

    let grid = random_grid(&mut rng, 2, 2, 2).unwrap();
    let path = scratch_file("grid.json", &grid.to_json().unwrap());
    let out = laqcc(&["flatten", "grid", "--input", path.to_str().unwrap(), "--emit-program"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["exhaustive"], true);
    assert!(r["program"]["layers"].is_array());
}

#[test]
fn flatten_identity_ladder_from_hand_written_json() {
    let c = CliffordCircuit::ladder(2, vec![CliffordGate::new("cnot", &[0, 1])]).unwrap();
    let text = c.to_json().unwrap();
    let path = scratch_file("cnot.json", &text);
    let out = laqcc(&["flatten", "ladder", "--input", path.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["check"]["branches"], 4);
}

#[test]
fn transforms_on_prepared_programs() {
    for (name, program) in [
        ("ghz3.json", ghz_state(3).unwrap().program),
        ("uniform3.json", uniform_superposition(3).unwrap().program),
    ] {
        let path = scratch_file(name, &program.to_json().unwrap());
        let p = path.to_str().unwrap();
        let out = laqcc(&["transform", "defer", "--input", p]);
        assert_eq!(code(&out), 0, "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let r = json(&out);
        assert_eq!(r["checked"], true);
        assert!(r["total_variation"].as_f64().unwrap() <= 1e-9);

        let out = laqcc(&["transform", "postselect", "--input", p, "--seed", "5"]);
        assert_eq!(code(&out), 0, "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let r = json(&out);
        let want = r["transcript_probability"].as_f64().unwrap();
        assert!((r["flag_probability"].as_f64().unwrap() - want).abs() < 1e-9);
    }
}

#[test]
fn malformed_program_is_a_usage_error() {
    let path = scratch_file("bad.json", "{\"qubits\": 2}");
    assert_eq!(code(&laqcc(&["transform", "defer", "--input", path.to_str().unwrap()])), 2);
    assert_eq!(code(&laqcc(&["transform", "defer", "--input", "/nonexistent/program.json"])), 2);
}

#[test]
fn numbers_conversions() {
    // (2,1,0) has digit 2 at weight 2, so only the last position takes the one
    let r = json(&laqcc(&["numbers", "fac2comb", "--digits", "2,1,0", "--k", "1"]));
    assert_eq!(r["bits"], "001");
    assert_eq!(r["z"], serde_json::json!([1, 0]));
    assert_eq!(r["o"], serde_json::json!([0]));

    let r = json(&laqcc(&["numbers", "comb2fac", "--bits", "001", "--z", "1,0", "--o", "0"]));
    assert_eq!(r["digits"], serde_json::json!([2, 1, 0]));

    let out = laqcc(&["numbers", "check-bijection", "--n", "5"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["checks"].as_array().unwrap().len(), 6);
    assert_eq!(r["checks"][2]["image_size"], 10);

    assert_eq!(code(&laqcc(&["numbers", "fac2comb", "--digits", "3,0,0", "--k", "1"])), 2);
    assert_eq!(code(&laqcc(&["numbers", "comb2fac", "--bits", "011", "--z", "1,0", "--o", "0"])), 2);
}

#[test]
fn verify_selected_criteria() {
    let out = laqcc(&["verify", "--criterion", "1,3,7", "--max-n", "4"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["criteria"].as_array().unwrap().len(), 3);
    assert_eq!(r["passed"], true);
}
