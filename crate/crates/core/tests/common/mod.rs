#![allow(dead_code)]

use gct_lab::harness::{CellSummary, RunOutput, Table};
use gct_lab::model::{make_spike, sample_covariance, ModelParams, SampleCov, SpikePrior, SpikeVector};
use nalgebra::{DMatrix, SymmetricEigen};

pub struct Draw {
    pub v: SpikeVector,
    pub cov: SampleCov,
}

pub fn draw(n: usize, p: usize, m: usize, lambda: f64, prior: SpikePrior, seed: u64) -> Draw {
    let params = ModelParams::new(n, p, m, lambda, prior, seed).unwrap();
    let v = make_spike(p, m, prior, seed).unwrap();
    let cov = sample_covariance(&params, &v).unwrap();
    Draw { v, cov }
}

/// Eigenvalues in ascending order, straight from nalgebra.
pub fn sorted_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().cloned().collect();
    e.sort_by(f64::total_cmp);
    e
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Summary cell for `(lambda, kernel)`; panics when absent.
pub fn cell<'a>(out: &'a RunOutput, lambda: f64, kernel: &str) -> &'a CellSummary {
    out.summary
        .cells
        .iter()
        .find(|c| c.lambda == Some(lambda) && c.kernel == kernel)
        .unwrap_or_else(|| panic!("no cell for lambda = {lambda}, kernel = {kernel}"))
}

pub fn stat_mean(c: &CellSummary, name: &str) -> f64 {
    c.stats.get(name).map(|s| s.mean).unwrap_or(f64::NAN)
}

pub fn csv_string(out: &RunOutput) -> String {
    let mut buf = Vec::new();
    out.table.write_csv(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

pub fn trial_rows(out: &RunOutput) -> &[gct_lab::harness::ResultRow] {
    match &out.table {
        Table::Trials(r) => r,
        _ => panic!("not a trial table"),
    }
}
