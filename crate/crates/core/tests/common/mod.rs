#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_gkpb");

pub fn gkpb(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("GKPB_SEED").output().expect("spawn gkpb")
}

pub fn gkpb_ok(args: &[&str]) -> Output {
    let out = gkpb(args);
    assert!(out.status.success(), "gkpb {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

/// Numeric columns of a CSV body, header skipped.
pub fn read_csv(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().expect("number")).collect()).collect()
}

pub fn read_csv_file(path: &Path) -> Vec<Vec<f64>> {
    read_csv(&std::fs::read_to_string(path).expect("csv file"))
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])).sum()
}

/// Interior local maxima of `y` above `floor · max(y)`.
pub fn local_maxima(y: &[f64], floor: f64) -> Vec<usize> {
    let top = y.iter().copied().fold(0.0, f64::max);
    (1..y.len() - 1).filter(|&j| y[j] > y[j - 1] && y[j] >= y[j + 1] && y[j] > floor * top).collect()
}

/// Location and height of a Gaussian peak of `abs2` from the three samples
/// around index `j`: the parabola through `ln abs2` is exact for a Gaussian.
pub fn gaussian_peak(x: &[f64], abs2: &[f64], j: usize) -> (f64, f64) {
    let h = x[j + 1] - x[j];
    let (l0, l1, l2) = (abs2[j - 1].ln(), abs2[j].ln(), abs2[j + 1].ln());
    let curv = l0 - 2.0 * l1 + l2;
    let s = 0.5 * (l0 - l2) / curv;
    let ln_peak = l1 - 0.125 * (l0 - l2) * (l0 - l2) / curv;
    (x[j] + s * h, ln_peak.exp())
}
