//! Builds an experiment from JSON, runs it and prints the CSV and cell means.
//!
//! `cargo run --release --example harness_config`

use gct_lab::harness::{run, ExperimentConfig};

fn main() -> gct_lab::Result<()> {
    let cfg = ExperimentConfig::from_json(
        r#"{
            "mode": "simulate",
            "n": [600], "p": [300], "m": [6],
            "lambda": [1.0, 2.0],
            "kernel": ["soft:t=2", "pca"],
            "trials": 3,
            "base_seed": 11
        }"#,
    )?;
    let out = run(&cfg, Some(1))?;
    out.table
        .write_csv(std::io::stdout().lock())
        .map_err(|source| gct_lab::GctError::Io {
            path: "<stdout>".into(),
            source,
        })?;
    for cell in &out.summary.cells {
        let cos2 = &cell.stats["cos2"];
        println!(
            "# lambda {} {}: mean cos2 {:.3} +- {:.3}",
            cell.lambda.unwrap_or(f64::NAN),
            cell.kernel,
            cos2.mean,
            cos2.stderr.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
