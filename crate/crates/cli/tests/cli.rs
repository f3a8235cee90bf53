use std::process::{Command, Output};

use serde_json::Value;

fn rlocal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rlocal")).args(args).env_remove("RLOCAL_CACHE_DIR").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn bounds() {
    let o = rlocal(&["bounds", "--B", "6", "--n", "2", "--kmax", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["lower"], 1);
    assert_eq!(v["upper"], "518400");
    let o = rlocal(&["bounds", "--B", "7", "--n", "1", "--kmax", "3", "--format", "text"]);
    assert_eq!(stdout(&o), "3 <= index <= 5040\n");
    let o = rlocal(&["bounds", "--B", "0", "--n", "2", "--kmax", "6"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn decompose_sl2z() {
    let o = rlocal(&["decompose", "--group", "sl2z", "--format", "text"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("single edge / 4 and 6\n"), "{}", stdout(&o));
    let v = json(&rlocal(&["decompose", "--group", "sl2z", "--r", "6", "--radius", "10"]));
    assert_eq!(v["model_edges"][0]["adhesion_size"], 2);
    let sizes: Vec<u64> = v["model_vertices"].as_array().unwrap().iter().map(|m| m["bag_size"].as_u64().unwrap()).collect();
    assert_eq!(sizes, [6, 4]);
    let dot = stdout(&rlocal(&["decompose", "--group", "sl2z", "--format", "dot"]));
    assert_eq!(
        dot,
        "graph model {\n  node [shape=circle];\n  h0 [label=\"6\", tooltip=\"stabilizer order 6\"];\n  h1 [label=\"4\", tooltip=\"stabilizer order 4\"];\n  h0 -- h1 [label=\"2\"];\n}\n"
    );
}

#[test]
fn discover_free2() {
    let o = rlocal(&["discover", "--group", "free2"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["stabilized"], true);
    let last = v["iterations"].as_array().unwrap().last().unwrap();
    assert_eq!(last["splitting"]["vertex_orders"], serde_json::json!([1]));
    assert_eq!(last["splitting"]["edges"].as_array().unwrap().len(), 2);
}

#[test]
fn discover_caps_exit_two() {
    let o = rlocal(&["discover", "--group", "free2", "--caps", "vertices=10"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["stabilized"], false);
}

#[test]
fn classify() {
    let o = rlocal(&["classify", "--group", "c2_c3", "--element", "a b", "--format", "text"]);
    assert_eq!(stdout(&o), "v0.1 v1.1: hyperbolic, translation length 2\n");
    let v = json(&rlocal(&["classify", "--group", "c2_c3", "--element", "a b a b"]));
    assert_eq!(v["action"]["translation_length"], 4);
    let v = json(&rlocal(&["classify", "--group", "sl2z_amalgam", "--element", "S T"]));
    assert_eq!(v["action"]["kind"], "elliptic");
    let o = rlocal(&["classify", "--group", "sl2z", "--element", "S"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("graph-of-groups"));
}

#[test]
fn subgroup_certificates() {
    let o = rlocal(&["subgroup", "--group", "c2_c3"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["index"], 6);
    assert_eq!(v["rank"], 2);
    assert_eq!(v["torsion_free"], true);
    assert_eq!(v["euler_characteristic"], "-1/6");

    let o = rlocal(&["subgroup", "--group", "sl2z_amalgam", "--method", "congruence", "--modulus", "2", "--matrices", "sl2z"]);
    assert_eq!(o.status.code(), Some(3));
    let v = json(&o);
    assert_eq!(v["index"], 6);
    assert_eq!(v["torsion_free"], false);
    assert!(v["torsion_witnesses"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().starts_with("C4:s2 ")));
}

#[test]
fn nerves() {
    let v = json(&rlocal(&["nerve", "--group", "free2", "--radius", "6"]));
    assert_eq!(v["nerve"]["dimension"], 0);
    assert!(v["nerve"]["components"].as_u64().unwrap() > 1);
    let v = json(&rlocal(&["nerve", "--group", "sl2z"]));
    assert_eq!(v["nerve"]["dimension"], 1);
    assert_eq!(v["nerve"]["components"], 1);
}

#[test]
fn cover_of_the_five_cycle() {
    let o = rlocal(&["cover", "--group", "z5", "--r", "4", "--radius", "5", "--depth", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["displacement"], 5);
    assert_eq!(v["order_threshold"], "9/4");
    assert_eq!(v["ball_preservation"]["pass"], true);
}

#[test]
fn ball_dot_and_caps() {
    let dot = stdout(&rlocal(&["ball", "--group", "z5", "--radius", "2", "--format", "dot"]));
    assert!(dot.starts_with("digraph cayley {"));
    assert_eq!(dot.matches(" -> ").count(), 5);
    let o = rlocal(&["ball", "--group", "sl2z", "--caps", "vertices=100"]);
    assert_eq!(o.status.code(), Some(2));
    let o = rlocal(&["ball", "--group", "sl2z", "--caps", "bogus=1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn report_table_and_reruns() {
    let o = rlocal(&["report", "--group", "c2_c3", "--group", "sl2z", "--group", "sl3z", "--format", "text"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().take(5).collect();
    assert!(rows[0].starts_with("Group"));
    assert!(rows[2].contains("single edge") && rows[2].contains("2 and 3"));
    assert!(rows[3].contains("single edge") && rows[3].contains("4 and 6"));
    assert!(rows[4].contains("out of scope: not virtually free pipeline"));

    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = rlocal(&["report", "--group", "c2_c3", "--seed", "3", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert_eq!(a, b);
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["format"], "rlocal/1");
    assert_eq!(v["summary"]["model_graph"], "single edge");
}

#[test]
fn spec_files_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    std::fs::write(&path, include_str!("../../../fixtures/c2_c3.json")).unwrap();
    let v = json(&rlocal(&["ball", "--group", path.to_str().unwrap(), "--radius", "2"]));
    assert_eq!(v["layer_counts"], serde_json::json!([1, 3, 4]));
    assert_eq!(rlocal(&["ball", "--group", "nowhere"]).status.code(), Some(1));
    assert_eq!(rlocal(&["ball"]).status.code(), Some(1));
    assert_eq!(rlocal(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(rlocal(&["--help"]).status.code(), Some(0));
    assert_eq!(rlocal(&["ball", "--group", "z5", "--group", "z5"]).status.code(), Some(1));
    assert_eq!(rlocal(&["decompose", "--group", "sl2z", "--r", "2"]).status.code(), Some(1));
}

#[test]
fn cache_directory() {
    let dir = tempfile::tempdir().unwrap();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_rlocal"))
            .args(["bounds", "--B", "3", "--n", "2", "--kmax", "3"])
            .env("RLOCAL_CACHE_DIR", dir.path())
            .output()
            .unwrap()
    };
    let first = run();
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1);
    let name = entries[0].file_stem().unwrap().to_str().unwrap().to_string();
    assert_eq!(name.len(), 64);
    assert!(name.chars().all(|c| c.is_ascii_hexdigit()));
    // a doctored entry is served as is, so the second run reads the cache
    let mut entry: Value = serde_json::from_str(&std::fs::read_to_string(&entries[0]).unwrap()).unwrap();
    assert_eq!(entry["output"].as_str().unwrap(), stdout(&first));
    entry["output"] = "cached\n".into();
    std::fs::write(&entries[0], entry.to_string()).unwrap();
    assert_eq!(stdout(&run()), "cached\n");
}
