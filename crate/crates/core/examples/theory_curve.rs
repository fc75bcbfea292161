//! Phase transitions of the optimal kernel and of the best soft threshold.
//!
//! `cargo run --release --example theory_curve`

use gct_lab::theory::{lambda_star_opt, OptSearch, SoftFamily};

fn main() -> gct_lab::Result<()> {
    let gamma: f64 = 0.5;
    let family = SoftFamily::new(&SoftFamily::default_grid())?;
    let search = OptSearch::default();
    println!("PCA transition for gamma = {gamma}: {:.4}", 1.0 + gamma.sqrt());
    println!("{:>6} {:>10} {:>8} {:>10} {:>6}", "beta", "optimal", "a1", "soft", "t*");
    for beta in [0.1, 0.25, 0.5, 1.0, 1.5, 2.5] {
        let opt = lambda_star_opt(gamma, beta, &search)?;
        let (soft, t) = family.lambda_star(gamma, beta)?;
        println!("{beta:>6.2} {:>10.4} {:>8.4} {soft:>10.4} {t:>6.2}", opt.lambda_star, opt.a1);
    }
    Ok(())
}
