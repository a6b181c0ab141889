use std::path::Path;
use std::process::{Command, Output};

use augtree::model::{builtin, ModelSpec};
use serde_json::Value;

fn augtree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_augtree")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV report (comments and header dropped).
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn verify_all_passes_on_the_interval() {
    let o = augtree(&["verify", "all", "--model", "builtin:interval", "--lambda", "0.25"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o));
    for suite in ["hitting", "return_ratio", "ever_visit_root"] {
        assert!(r.iter().any(|row| row[0] == suite));
    }
    assert!(r.iter().all(|row| row[5] == "true"));
}

#[test]
fn sharp_critical_bracket_contains_pq() {
    let o = augtree(&["resistance", "critical", "--mode", "sharp", "--model", "builtin:rotated-interval:p=0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let b = doc["lambda_bracket"].as_array().unwrap();
    assert!(b[0].as_f64().unwrap() < 0.25 && 0.25 < b[1].as_f64().unwrap());
    assert_eq!(doc["provenance"]["version"], augtree::VERSION);
}

#[test]
fn gasket_first_level_hitting_law() {
    let o = augtree(&["walk", "hitting", "--model", "builtin:gasket", "--lambda", "0.2", "--level", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 3);
    for row in r {
        assert!((row[2].parse::<f64>().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }
}

#[test]
fn outputs_are_reproducible() {
    let args = [
        "walk", "simulate", "--model", "builtin:interval", "--lambda", "0.25", "--stop-level", "3", "--trials", "3000",
        "--seed", "5",
    ];
    let (a, b) = (augtree(&args), augtree(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with(&format!("# augtree {}\n# config: ", augtree::VERSION)));
}

#[test]
fn saved_tree_and_network_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_string();
    let o = augtree(&[
        "tree", "build", "--model", "builtin:gasket", "--levels", "4", "--out", &p("tree.json"), "--edges-csv",
        &p("h.csv"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let edges = std::fs::read_to_string(p("h.csv")).unwrap();
    assert!(edges.contains("level,x_id,y_id\n1,1,2\n"));
    let o = augtree(&[
        "network", "build", "--tree", &p("tree.json"), "--lambda", "0.2", "--out", &p("net.json"), "--edges-csv",
        &p("c.csv"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(p("c.csv")).unwrap().contains("x,y,c\n"));
    let o = augtree(&["walk", "hitting", "--net", &p("net.json"), "--level", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for row in rows(&stdout(&o)) {
        assert!((row[2].parse::<f64>().unwrap() - 1.0 / 9.0).abs() < 1e-12);
    }

    std::fs::write(p("pairs.csv"), "x,y\n11,22\n#3,#7\n").unwrap();
    let o = augtree(&["kernel", "naim", "--net", &p("net.json"), "--pairs", &p("pairs.csv"), "--trunc", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 2);
    assert!(r.iter().all(|row| row[2].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn curve_and_energy_tables() {
    let o = augtree(&[
        "resistance", "curve", "--model", "builtin:interval", "--lambda", "0.25", "--pair", "0,1", "--nmax", "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    assert_eq!(r[0][0], "1");
    assert_eq!(r[0][1], "0.5");
    let o = augtree(&[
        "energy", "compare", "--model", "builtin:interval", "--lambda", "0.125", "--function", "distance:0.3",
        "--levels", "3..4", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn exit_codes_follow_the_failure_kind() {
    assert_eq!(augtree(&["tree", "build", "--bogus"]).status.code(), Some(1));
    assert_eq!(augtree(&["tree", "build", "--model", "/no/such/file.json"]).status.code(), Some(1));
    assert_eq!(
        augtree(&["walk", "hitting", "--model", "builtin:interval", "--lambda", "1.2", "--level", "2"]).status.code(),
        Some(1)
    );
    // nothing is decidable at this tolerance, so the search cannot start
    let o = augtree(&["resistance", "critical", "--mode", "star", "--model", "builtin:interval", "--tol", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(augtree(&["--help"]).status.code(), Some(0));
}

#[test]
fn builtins_match_the_model_files() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models");
    for (file, name) in [
        ("interval.json", "interval"),
        ("rotated-interval-p0.5.json", "rotated-interval:p=0.5"),
        ("gasket.json", "gasket"),
    ] {
        let from_file = ModelSpec::from_path(dir.join(file)).unwrap();
        assert_eq!(from_file, builtin(name).unwrap(), "{file}");
    }
}
