use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hypfill(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypfill")).args(args).env_remove("HYPFILL_JOBS").output().expect("spawn")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_writes_a_line_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("line.json");
    let run = hypfill(&["gen", "--kind", "line", "--n", "16", "--out", p(&out)]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let v = json(&out);
    assert_eq!(v["dist"].as_array().unwrap().len(), 16);
    assert_eq!(v["dist"][0][15], 15.0);
    assert_eq!(v["labels"].as_array().unwrap().len(), 16);
}

#[test]
fn gen_rejects_two_points() {
    let run = hypfill(&["gen", "--kind", "line", "--n", "2"]);
    assert_eq!(run.status.code(), Some(1));
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        assert_eq!(
            hypfill(&["gen", "--kind", "random", "--n", "12", "--seed", "7", "--out", p(out)]).status.code(),
            Some(0)
        );
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn fill_round_trips_and_rejects_small_tau() {
    let dir = tempfile::tempdir().unwrap();
    let space = dir.path().join("line.json");
    let fill = dir.path().join("fill.json");
    let dot = dir.path().join("fill.dot");
    assert_eq!(hypfill(&["gen", "--kind", "line", "--n", "16", "--out", p(&space)]).status.code(), Some(0));

    let run =
        hypfill(&["fill", "--space", p(&space), "--alpha", "2", "--tau", "4", "--out", p(&fill), "--dot", p(&dot)]);
    assert_eq!(run.status.code(), Some(0));
    let summary = String::from_utf8_lossy(&run.stderr);
    assert!(summary.contains("covering true") && summary.contains("connected true"), "{summary}");
    let file: hypfill::io::FillingFile = serde_json::from_value(json(&fill)).unwrap();
    let base = hypfill::io::load_space(&space).unwrap();
    let g = hypfill::filling::build_filling(&base, &hypfill::filling::FillingParams::new(2.0, 4.0)).unwrap();
    assert_eq!(file.adjacency().unwrap(), g.adjacency());
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("graph filling"));

    let run = hypfill(&["fill", "--space", p(&space), "--alpha", "2", "--tau", "3"]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("tau"));
}

#[test]
fn delta_reports_exhaustive_and_sampled() {
    let dir = tempfile::tempdir().unwrap();
    let space = dir.path().join("line.json");
    let fill = dir.path().join("fill.json");
    let exact = dir.path().join("exact.json");
    let sampled = dir.path().join("sampled.json");
    hypfill(&["gen", "--kind", "line", "--n", "5", "--out", p(&space)]);
    hypfill(&["fill", "--space", p(&space), "--margin", "1", "--out", p(&fill)]);
    let run = hypfill(&["delta", "--filling", p(&fill), "--space", p(&space), "--out", p(&exact)]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let run = hypfill(&[
        "delta",
        "--filling",
        p(&fill),
        "--mode",
        "sampled",
        "--samples",
        "2000",
        "--seed",
        "3",
        "--out",
        p(&sampled),
    ]);
    assert_eq!(run.status.code(), Some(0));
    let (e, s) = (json(&exact), json(&sampled));
    assert_eq!(e["mode"], "exhaustive");
    assert_eq!(s["mode"], "sampled");
    assert!(s["delta"].as_f64().unwrap() <= e["delta"].as_f64().unwrap());
    assert!(e["nu_fit"].is_number() && e["compare_C_fit"].is_number());
    assert!(s["nu_fit"].is_null());
    assert_eq!(e["witness"].as_array().unwrap().len(), 4);
}

#[test]
fn roundtrip_snowflake_and_identity() {
    let dir = tempfile::tempdir().unwrap();
    let space = dir.path().join("line.json");
    let report = dir.path().join("report.json");
    hypfill(&["gen", "--kind", "line", "--n", "16", "--out", p(&space)]);

    let run = hypfill(&[
        "roundtrip",
        "--space",
        p(&space),
        "--eps",
        "0.5",
        "--theta",
        "2",
        "--seed",
        "4",
        "--out",
        p(&report),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let r = json(&report);
    assert_eq!(r["slopes"], serde_json::json!([0.5, 2.0]));
    assert_eq!(r["boundary_matches"], true);
    assert_eq!(r["recovered_passes"], true);
    assert_eq!(r["environment"]["seed"], 4);
    assert!(r["envelope"]["k"].is_number());

    let run = hypfill(&["roundtrip", "--space", p(&space), "--theta", "1", "--tol", "1e-6", "--out", p(&report)]);
    assert_eq!(run.status.code(), Some(0));
    let r = json(&report);
    assert!((r["theta_fit"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
    assert_eq!(r["slopes"], serde_json::json!([1.0, 1.0]));
}

#[test]
fn map_files_and_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src.json");
    let dst = dir.path().join("dst.json");
    hypfill(&["gen", "--kind", "circle", "--n", "8", "--out", p(&src)]);
    hypfill(&["snowflake", "--space", p(&src), "--eps", "0.5", "--out", p(&dst)]);
    let map = dir.path().join("map.json");
    std::fs::write(&map, r#"{ "source": "src.json", "target": "dst.json", "forward": [0,1,2,3,4,5,6,7] }"#).unwrap();

    let boundary = dir.path().join("boundary.json");
    let run = hypfill(&["boundary", "--map", p(&map), "--out", p(&boundary)]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(json(&boundary)["matches_input"], true);

    let ext = dir.path().join("ext.json");
    assert_eq!(hypfill(&["extend", "--map", p(&map), "--theta", "2", "--out", p(&ext)]).status.code(), Some(0));
    let e = json(&ext);
    assert!(e["constants"]["snap_deviation"].as_f64().unwrap() <= 1.0);
    assert_eq!(e["vertex_map"].as_array().unwrap().len(), e["geodesic_map"].as_array().unwrap().len());

    let report = dir.path().join("analysis.json");
    let run = hypfill(&["analyze", "--map", p(&map), "--theta", "2", "--samples", "2000", "--out", p(&report)]);
    assert_eq!(run.status.code(), Some(0));
    assert!(json(&report)["strong_qi"]["D_fit"].is_number());

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{ \"source\": \"src.json\", ").unwrap();
    assert_eq!(hypfill(&["roundtrip", "--map", p(&broken), "--theta", "2"]).status.code(), Some(2));
    assert_eq!(hypfill(&["boundary", "--map", p(&dir.path().join("missing.json"))]).status.code(), Some(2));

    let not_bijective = dir.path().join("bad.json");
    std::fs::write(&not_bijective, r#"{ "source": "src.json", "target": "dst.json", "forward": [0,0,2,3,4,5,6,7] }"#)
        .unwrap();
    assert_eq!(hypfill(&["boundary", "--map", p(&not_bijective)]).status.code(), Some(1));
}

#[test]
fn identical_invocations_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let space = dir.path().join("s.json");
    hypfill(&["gen", "--kind", "cantor", "--n", "8", "--out", p(&space)]);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert_eq!(
        hypfill(&["--jobs", "1", "analyze", "--space", p(&space), "--eps", "0.5", "--theta", "2", "--out", p(&a)])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        hypfill(&["--jobs", "3", "analyze", "--space", p(&space), "--eps", "0.5", "--theta", "2", "--out", p(&b)])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
