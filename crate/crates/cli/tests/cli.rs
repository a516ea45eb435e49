//! End-to-end runs of the `ti` binary: printed values, golden outputs,
//! file round trips and exit codes.
//!
//! Set `TI_UPDATE_GOLDEN=1` to rewrite the golden files.

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use ti_core::layer1;
use ti_core::tiling::{evaluate_tiling, tiling_from_file, TileRuleSet, TilingFile};

fn ti(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ti")).args(args).env_remove("TI_TILE_BUDGET").output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = ti(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn here(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(rel)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ti-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn golden(name: &str, args: &[&str]) {
    let out = ti(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let path = here(&format!("golden/{name}.json"));
    if std::env::var_os("TI_UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &out.stdout).unwrap();
    }
    let want = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&want), "golden {name}");
}

#[test]
fn reduce_prints_grid_side() {
    assert_eq!(ok_json(&["reduce", "--x", "1"]), 11);
    // 4 * 3 (the value of 11) - 2 * 2 (ones in 11) + 3
    assert_eq!(ok_json(&["reduce", "--x", "0"]), 9);
}

#[test]
fn mu_prints_interval_count() {
    assert_eq!(ok_json(&["mu", "--n", "16"]), 2);
    assert_eq!(ok_json(&["mu", "--n", "18"]), 3);
}

#[test]
fn final_row_text_matches_its_census() {
    let v = ok_json(&["simulate", "--layer", "1", "--n", "16", "--dump-final"]);
    let row = layer1::parse_row(v["final_row"].as_str().unwrap()).unwrap();
    let recount: Vec<u64> = layer1::sizes(&row).iter().map(|&s| s as u64).collect();
    let printed: Vec<u64> = v["final_sizes"].as_array().unwrap().iter().map(|s| s.as_u64().unwrap()).collect();
    assert_eq!(recount, printed);
    assert_eq!(printed, vec![4, 2]);
}

#[test]
fn golden_outputs() {
    golden("simulate_l1_n16", &["simulate", "--layer", "1", "--n", "16", "--dump-final"]);
    golden("simulate_l2_n40", &["simulate", "--layer", "2", "--n", "40", "--dump-final"]);
    golden("simulate_l3_n11", &["simulate", "--layer", "3", "--n", "11"]);
    golden("consensus", &["simulate", "--layer", "3", "--n", "5", "--ys", "31,21,31"]);
    golden("inject_n64", &["inject", "--n", "64", "--seed", "7", "--count", "2", "--placement", "interval"]);
    golden("krentel_ends1_n2", &["krentel", "--toy", "ends1-n2", "--x", "11"]);
    golden("verify_lemmas", &["verify-lemmas", "--n-list", "16,100"]);
}

#[test]
fn output_is_independent_of_thread_count() {
    let args = ["inject", "--n", "80", "--seed", "11", "--count", "3", "--placement", "uniform"];
    let one = ti(&[&["--threads", "1"][..], &args[..]].concat());
    let two = ti(&[&["--threads", "2"][..], &args[..]].concat());
    assert_eq!(one.stdout, two.stdout);
    assert_eq!(one.stdout, ti(&args).stdout);
}

#[test]
fn pretty_art_goes_to_stderr() {
    let plain = ti(&["simulate", "--layer", "1", "--n", "12"]);
    let pretty = ti(&["--pretty", "simulate", "--layer", "1", "--n", "12"]);
    assert_eq!(plain.stdout, pretty.stdout);
    assert!(plain.stderr.is_empty());
    assert_eq!(String::from_utf8_lossy(&pretty.stderr).lines().count(), 10);
}

#[test]
fn solve_witness_round_trip() {
    let rules = here("fixtures/squares.json");
    let w = scratch("witness.json");
    let v = ok_json(&["solve", "--rules", rules.to_str().unwrap(), "--height", "3", "--width", "3", "--witness", w.to_str().unwrap()]);
    let rs = TileRuleSet::from_json_str(&std::fs::read_to_string(&rules).unwrap()).unwrap();
    let file: TilingFile = serde_json::from_str(&std::fs::read_to_string(&w).unwrap()).unwrap();
    let g = tiling_from_file(&rs, &file).unwrap();
    assert_eq!(evaluate_tiling(&rs, &g).unwrap(), v["min_cost"].as_i64().unwrap());
    let ex = ok_json(&["solve", "--rules", rules.to_str().unwrap(), "--height", "3", "--width", "3", "--method", "exhaustive"]);
    assert_eq!(ex["min_cost"], v["min_cost"]);
}

#[test]
fn compiled_pairs_keep_the_minimum() {
    let rules = here("fixtures/squares.json");
    let v = ok_json(&["compile-squares", "--rules", rules.to_str().unwrap(), "--height", "3", "--width", "3"]);
    let lowered = scratch("pairs.json");
    std::fs::write(&lowered, v["rules"].to_string()).unwrap();
    assert!(v["rules"]["squares"].as_array().unwrap().is_empty());
    let a = ok_json(&["solve", "--rules", rules.to_str().unwrap(), "--height", "3", "--width", "3"]);
    let b = ok_json(&["solve", "--rules", lowered.to_str().unwrap(), "--height", "3", "--width", "3"]);
    assert_eq!(a["min_cost"], b["min_cost"]);
}

#[test]
fn compiled_machine_tiles_its_own_run_for_free() {
    let machine = here("fixtures/flipper.json");
    let v = ok_json(&["compile-tm", "--machine", machine.to_str().unwrap()]);
    let rs = TileRuleSet::from_json_str(&v.to_string()).unwrap();
    // □ plus 3 tape tiles plus 2 x 3 head tiles
    assert_eq!(rs.size(), 10);
    // flipper on 01#: go/0 1 #, 1 go/1 #, 1 0 go/#, then back/# idles
    let rows = [["go/0", "1", "#"], ["1", "go/1", "#"], ["1", "0", "go/#"]];
    let file = TilingFile { n: None, rows: rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect() };
    let g = tiling_from_file(&rs, &file).unwrap();
    assert_eq!(evaluate_tiling(&rs, &g).unwrap(), 0);
    let bad = TilingFile { n: None, rows: vec![file.rows[0].clone(), file.rows[0].clone()] };
    assert!(evaluate_tiling(&rs, &tiling_from_file(&rs, &bad).unwrap()).unwrap() > 0);
}

#[test]
fn injected_rows_audit_the_same() {
    let out = scratch("rows.json");
    let v = ok_json(&["inject", "--n", "60", "--seed", "5", "--count", "2", "--out", out.to_str().unwrap()]);
    let a = ok_json(&["audit", "--rows", out.to_str().unwrap()]);
    assert_eq!(a["faults"], v["report"]["faults"]);
    assert_eq!(a["row_costs"], v["report"]["row_costs"]);
    let clean = ok_json(&["audit", "--n", "60"]);
    assert_eq!(clean["faults"][0], 0);
}

#[test]
fn krentel_defaults_to_the_correct_answers() {
    let v = ok_json(&["krentel", "--toy", "ends1-n1", "--x", "1"]);
    assert_eq!(v["z"], v["true_answers"]);
    assert_eq!(v["minimizer"], v["true_answers"]);
    assert_eq!(v["recovered_f"], v["f"]);
    let file = scratch("toy.json");
    let exported = ti(&["krentel", "--toy", "ends1-n1", "--export"]);
    std::fs::write(&file, &exported.stdout).unwrap();
    let w = ok_json(&["krentel", "--problem", file.to_str().unwrap(), "--x", "1"]);
    assert_eq!(v, w);
}

#[test]
fn exit_codes() {
    assert_eq!(ti(&["mu"]).status.code(), Some(2));
    assert_eq!(ti(&["simulate", "--layer", "5", "--n", "16"]).status.code(), Some(2));
    assert_eq!(ti(&["mu", "--n", "3"]).status.code(), Some(2));
    assert_eq!(ti(&["solve", "--rules", "/nonexistent.json", "--height", "2", "--width", "2"]).status.code(), Some(2));
    let rules = here("fixtures/squares.json");
    let r = rules.to_str().unwrap();
    assert_eq!(ti(&["solve", "--rules", r, "--height", "3", "--width", "3", "--budget", "1"]).status.code(), Some(3));
    let env = Command::new(env!("CARGO_BIN_EXE_ti"))
        .args(["solve", "--rules", r, "--height", "3", "--width", "3"])
        .env("TI_TILE_BUDGET", "1")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(3));
}
