use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn hexgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hexgap")).args(args).output().expect("binary runs")
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn reference_gaps() -> String {
    manifest_dir().join("data/reference_gaps.json").display().to_string()
}

fn load(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn schema_errors(schema_file: &str, doc: &Value) -> Vec<String> {
    let dir = manifest_dir().join("schemas");
    let config = load(&dir.join("config.schema.json"));
    let schema = load(&dir.join(schema_file));
    let registry = jsonschema::Registry::new().add("json-schema:///config.schema.json", config).unwrap().prepare().unwrap();
    let validator = jsonschema::options().with_registry(&registry).with_base_uri("json-schema:///").build(&schema).unwrap();
    validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path())).collect()
}

fn assert_valid(schema_file: &str, doc: &Value) {
    let errors = schema_errors(schema_file, doc);
    assert!(errors.is_empty(), "{schema_file}: {errors:#?}\n{doc:#}");
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("error record on stderr");
    let v: Value = serde_json::from_str(line).unwrap();
    assert_valid("error.schema.json", &v);
    v
}

#[test]
fn gap_of_c5_matches_table_value() {
    let out = hexgap(&["gap", "--system", "C", "--K", "5", "--json", "-"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_valid("gap.schema.json", &v);
    let gap = v["gap"].as_f64().unwrap();
    assert!((0.388..0.389).contains(&gap), "{gap}");
    assert_eq!(v["config"]["tol"], 1e-10);
    assert_eq!(v["config"]["max_dim"], 2_000_000);
}

#[test]
fn dense_gap_of_single_edge_is_one() {
    let out = hexgap(&["gap", "--system", "C", "--K", "2", "--solver", "dense", "--strategy", "all_sectors", "--json", "-"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_valid("gap.schema.json", &v);
    assert!((v["gap"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let kernel: u64 = v["sectors"].as_array().unwrap().iter().map(|s| s["kernel_dimension_estimate"].as_u64().unwrap()).sum();
    assert_eq!(kernel, 9);
}

#[test]
fn text_report_mentions_gap_and_runtime() {
    let out = hexgap(&["gap", "--system", "chain", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("H_2 (8 sites, 10 edges)"), "{text}");
    assert!(text.contains("lower bound") && text.contains("runtime"));
}

#[test]
fn cached_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out =
            hexgap(&["gap", "--system", "C", "--K", "6", "--cache", cache.to_str().unwrap(), "--json", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        (std::fs::read(&path).unwrap(), String::from_utf8(out.stdout).unwrap())
    };
    let (first, text1) = run("a.json");
    let (second, text2) = run("b.json");
    assert!(text1.contains("(computed,") && text2.contains("(cache hit,"));
    assert_eq!(first, second);
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 1);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let run = |threads: &str| {
        let mut v = stdout_json(&hexgap(&["gap", "--system", "C", "--K", "7", "--threads", threads, "--json", "-"]));
        v.as_object_mut().unwrap().remove("config");
        v
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn different_seeds_use_different_cache_keys() {
    let key = |seed: &str| {
        stdout_json(&hexgap(&["gap", "--system", "C", "--K", "3", "--seed", seed, "--json", "-"]))["cache_key"].clone()
    };
    assert_ne!(key("0"), key("1"));
}

#[test]
fn budget_refusal_exits_4() {
    let out = hexgap(&["gap", "--system", "C", "--K", "4", "--max-dim", "10"]);
    assert_eq!(out.status.code(), Some(4));
    let e = stderr_json(&out);
    assert_eq!(e["error"], "budget");
    assert_eq!(e["details"]["dim"], 44);
}

#[test]
fn dense_cutoff_is_a_refusal() {
    let out = hexgap(&["gap", "--system", "C", "--K", "8", "--solver", "dense"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["error"], "dense_cutoff");
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["gap", "--system", "C"],
        vec!["gap", "--system", "sun"],
        vec!["gap", "--system", "sun", "--a", "0.5"],
        vec!["gap", "--system", "C", "--K", "5", "--tol=-1"],
        vec!["gap", "--system", "D"],
        vec!["table", "3"],
        vec!["certify", "chain", "--K", "5", "--gaps-file", "/nonexistent.json"],
        vec!["certify", "chain", "--K", "14", "--gap", "A"],
    ] {
        let out = hexgap(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        stderr_json(&out);
    }
}

#[test]
fn audit_k14_passes() {
    let out = hexgap(&["audit", "--n", "29", "--K", "14", "--json", "-"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_valid("audit.schema.json", &v);
    assert_eq!(v["pass"], true);
    let class = |report: &str, name: &str| {
        v[report]["classes"].as_array().unwrap().iter().find(|c| c["class"] == name).unwrap()["totals"].clone()
    };
    assert_eq!(class("edges", "diag_up"), serde_json::json!([85]));
    assert_eq!(class("edges", "horizontal"), serde_json::json!([84]));
    assert_eq!(class("pairs", "wedge_left"), serde_json::json!([72]));
    assert!(v["pairs"]["max_disjoint"]["total"].as_u64().unwrap() <= 72);
}

#[test]
fn audit_small_k_and_bad_n() {
    assert_eq!(hexgap(&["audit", "--n", "21", "--K", "4"]).status.code(), Some(0));
    let out = hexgap(&["audit", "--n", "20", "--K", "14"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "domain");
}

#[test]
fn certify_chain_from_supplied_gaps() {
    let file = reference_gaps();
    let out = hexgap(&["certify", "chain", "--K", "14", "--gaps-file", &file, "--json", "-"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_valid("certificate.schema.json", &v);
    assert_eq!(v["verdict"], "certified");
    assert_eq!(v["gamma_min_system"], "A");
    assert_eq!(v["constant_c"], 0.015);
    assert_eq!(v["threshold"]["fraction"], "13/84");
    assert!(v["solver_metadata"].as_array().unwrap().iter().all(|m| m["source"] == "supplied"));
}

#[test]
fn gap_flags_override_the_file() {
    let file = reference_gaps();
    let out = hexgap(&["certify", "chain", "--K", "14", "--gaps-file", &file, "--gap", "A=0.154", "--json", "-"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_valid("certificate.schema.json", &v);
    assert_eq!(v["verdict"], "failed");
    assert!(v["constant_c"].is_null());
    assert!(v["bound"].as_f64().unwrap() < 0.0);
}

#[test]
fn certify_chain_k4_fails_with_computed_c() {
    let file = reference_gaps();
    let out = hexgap(&["certify", "chain", "--K", "4", "--gaps-file", &file, "--json", "-"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_valid("certificate.schema.json", &v);
    let meta = v["solver_metadata"].as_array().unwrap();
    assert_eq!(meta[2]["system"], "C(4)");
    assert_eq!(meta[2]["source"], "computed");
    assert!(meta[2]["max_residual"].as_f64().unwrap() < 1e-10);
    assert!(v["gaps"]["C"].as_f64().unwrap() > 3.0 / 14.0);
}

#[test]
fn certify_without_data_is_incomplete() {
    let out = hexgap(&["certify", "chain", "--K", "14"]);
    assert_eq!(out.status.code(), Some(4));
    let e = stderr_json(&out);
    assert_eq!(e["error"], "incomplete");
    let systems: Vec<&str> = e["details"].as_array().unwrap().iter().map(|d| d["system"].as_str().unwrap()).collect();
    assert_eq!(systems, ["A", "B", "C(14)"]);
}

#[test]
fn certify_sun_fails_narrowly() {
    let out = hexgap(&["certify", "sun", "--a", "1.4", "--gap", "sun=0.207", "--json", "-"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_valid("certificate.schema.json", &v);
    assert_eq!(v["threshold"]["fraction"], "29/120");
    let shortfall = v["shortfall"].as_f64().unwrap();
    assert!(shortfall > 0.0 && shortfall < 0.17, "{shortfall}");
    let ok = hexgap(&["certify", "sun", "--a", "1.4", "--gap", "S=0.25"]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn table_skips_rows_over_budget() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let out = hexgap(&["table", "2", "--K", "5,13", "--csv", csv.to_str().unwrap(), "--json", "-"]);
    assert_eq!(out.status.code(), Some(4));
    let v = stdout_json(&out);
    assert_valid("table.schema.json", &v);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows[0]["status"], "ok");
    assert_eq!(rows[0]["lower_bound"], 0.388);
    assert_eq!(rows[1]["status"], "skipped");
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "system,K,status,gap,lower_bound,dim,max_residual,note");
    assert!(lines[1].starts_with("C(5),5,ok,0.388"));
    assert!(lines[2].starts_with("C(13),13,skipped,"));
}

#[test]
fn table_1_within_default_budget_only_skips() {
    let out = hexgap(&["table", "1"]);
    assert_eq!(out.status.code(), Some(4));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.matches("skipped").count(), 2, "{text}");
}

#[test]
fn export_projector_and_sector_matrix() {
    let out = hexgap(&["export", "projector"]);
    assert_eq!(out.status.code(), Some(0));
    let m = hexgap::io::matrix_market::read_symmetric(&out.stdout[..]).unwrap();
    assert_eq!(m.dim, 16);
    let trace: f64 = (0..16).map(|i| m.row(i).filter(|&(j, _)| j == i).map(|(_, v)| v).sum::<f64>()).sum();
    assert!((trace - 7.0).abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c4.mtx");
    let out = hexgap(&["export", "mtx", "--system", "C", "--K", "4", "--sector", "-2", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("sector 2Sz=-2"));
    let m = hexgap::io::matrix_market::read_symmetric(text.as_bytes()).unwrap();
    assert_eq!(m.dim, 40);

    let out = hexgap(&["export", "edges", "--system", "A"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 15);
}

#[test]
#[ignore = "solves the 1.7M-dimensional sun sector; run with --ignored"]
fn gap_of_sun_is_0_207_to_three_decimals() {
    let out = hexgap(&["gap", "--system", "sun", "--a", "1.4", "--json", "-"]);
    assert_eq!(out.status.code(), Some(0));
    let gap = stdout_json(&out)["gap"].as_f64().unwrap();
    assert_eq!((gap * 1000.0).round(), 207.0, "{gap}");
    assert!(gap < 29.0 / 120.0);
}
