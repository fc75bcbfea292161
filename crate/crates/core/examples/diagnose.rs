//! Resolvent quadratic forms of a noise kernel matrix against their
//! deterministic equivalents.
//!
//! `cargo run --release --example diagnose`

use gct_lab::estimator::quadratic_form_check;
use gct_lab::kernels::KernelSpec;
use gct_lab::rng::{Stream, AUX_STREAM};
use gct_lab::theory::bulk_edge;
use nalgebra::DVector;

fn main() -> gct_lab::Result<()> {
    let spec = KernelSpec::soft(2.0)?;
    for (n, p) in [(500, 250), (1000, 500)] {
        let edge = bulk_edge(spec.a1(), spec.nu2, p as f64 / n as f64)?.lambda_plus;
        let u = DVector::from_vec(Stream::new(7, AUX_STREAM).unit_vector(p));
        let c = quadratic_form_check(n, p, &spec, edge + 1.0, &u, &u, 7)?;
        println!(
            "n = {n}: z = {:.3}, predicted ({:.4}, {:.4}, {:.4}), observed ({:.4}, {:.4}, {:.4}), max deviation {:.4}",
            c.z, c.s, c.s_breve, c.s_ring, c.observed[0], c.observed[1], c.observed[2], c.max_deviation()
        );
    }
    Ok(())
}
