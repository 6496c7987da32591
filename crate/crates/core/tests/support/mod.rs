#![allow(dead_code)]

pub mod gen;
pub mod oracle;
pub mod suites;

use std::path::PathBuf;

use reprometer::bundle::parse_bundle;
use reprometer::model::StudyBundle;

pub const TOL: f64 = 1e-9;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn load(name: &str) -> StudyBundle {
    let text = std::fs::read_to_string(data_path(name)).expect("fixture readable");
    parse_bundle(&text).expect("fixture parses")
}

pub fn check(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Rounds for comparison against a printed value.
pub fn display(value: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (value * f).round() / f
}
