//! Limit spectrum of a noise kernel matrix next to an empirical histogram.
//!
//! `cargo run --release --example bulk_density`

use gct_lab::estimator::kernel_matrix;
use gct_lab::kernels::KernelSpec;
use gct_lab::model::{gaussian_matrix, gram};
use gct_lab::theory::{bulk_edge, DENSITY_ETA};

fn main() -> gct_lab::Result<()> {
    let (n, p) = (800, 400);
    let spec = KernelSpec::soft(1.5)?;
    let law = bulk_edge(spec.a1(), spec.nu2, p as f64 / n as f64)?;
    println!("soft t = 1.5: a1 = {:.4}, |f|^2 = {:.4}, edge = {:.4}", spec.a1(), spec.nu2, law.lambda_plus);

    let s = gram(&gaussian_matrix(n, p, 1));
    let k = kernel_matrix(&s, n, &spec)?.k;
    let eig = k.symmetric_eigenvalues();
    let top = eig.max();
    println!("largest empirical eigenvalue {top:.4}");

    let (lo, hi, bins) = (eig.min() - 0.02, law.lambda_plus + 0.02, 12);
    let h = (hi - lo) / bins as f64;
    println!("{:>9} {:>9} {:>9}", "x", "limit", "sample");
    for b in 0..bins {
        let x = lo + (b as f64 + 0.5) * h;
        let count = eig.iter().filter(|&&e| e >= x - h / 2.0 && e < x + h / 2.0).count();
        let density = law.density_at(x, DENSITY_ETA)?;
        println!("{x:>9.4} {density:>9.4} {:>9.4}", count as f64 / (p as f64 * h));
    }
    Ok(())
}
