#![allow(dead_code)]

use hawkes_queue::simulate::EstimateReport;

pub fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol * b.abs().max(1.0), "{a} vs {b} (tol {tol})");
}

/// Asserts a Monte Carlo estimate sits within `k` standard errors of `target`.
pub fn within_se(r: &EstimateReport, target: f64, k: f64) {
    let z = r.z(target);
    assert!(z.abs() < k, "estimate {} +- {} vs {target}: z = {z:.2}", r.point, r.std_error);
}
