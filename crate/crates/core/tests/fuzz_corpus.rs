//! Replays the checked-in fuzz corpus through every parser on the stable
//! toolchain, with the same invariants the fuzz targets assert.

use std::fs;
use std::path::PathBuf;

use posstab::io::{parse_cone_json, parse_input_signal_json, parse_operator_csv, parse_operator_json, parse_vector, to_json_string};
use posstab::Norm;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(out.len() >= 4, "corpus for {target} is too small");
    out
}

#[test]
fn operator_json_corpus() {
    let mut accepted = 0;
    for (_, text) in seeds("parse_operator_json") {
        if let Ok(op) = parse_operator_json(&text) {
            accepted += 1;
            assert_eq!(parse_operator_json(&to_json_string(&op).unwrap()).unwrap(), op);
        }
    }
    assert!(accepted >= 3);
}

#[test]
fn operator_csv_corpus() {
    for (name, text) in seeds("parse_operator_csv") {
        match parse_operator_csv(&text) {
            Ok(op) => assert!(op.to_matrix().is_square() && op.to_matrix().is_finite()),
            Err(e) => assert!(["ragged", "nonnumeric", "nan"].contains(&name.as_str()), "{name}: {e}"),
        }
    }
}

#[test]
fn cone_json_corpus() {
    for (name, text) in seeds("parse_cone_json") {
        match parse_cone_json(&text) {
            Ok(cone) => assert!(cone.contains(&cone.axis(), 0.0).unwrap()),
            Err(_) => assert!(["lorentz_dim1", "bad_norm"].contains(&name.as_str()), "{name}"),
        }
    }
}

#[test]
fn input_signal_corpus() {
    for (name, text) in seeds("parse_input_signal_json") {
        match parse_input_signal_json(&text) {
            Ok(u) => assert!(u.sup_norm(Norm::LInf).is_finite()),
            Err(_) => assert!(["missing_p", "ragged"].contains(&name.as_str()), "{name}"),
        }
    }
}

#[test]
fn vector_corpus() {
    for (name, text) in seeds("parse_vector") {
        match parse_vector(&text) {
            Ok(v) => assert!(v.iter().all(|x| x.is_finite())),
            Err(_) => assert!(["empty", "inf"].contains(&name.as_str()), "{name}"),
        }
    }
}
