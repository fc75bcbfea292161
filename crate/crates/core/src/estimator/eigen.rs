//! Top eigenpairs of a symmetric matrix.
//!
//! Small matrices go through a full dense decomposition. Larger ones use
//! Lanczos with full reorthogonalization; the tridiagonal projection is small
//! enough to diagonalize densely at every convergence check.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, GctError, Result};
use crate::rng::{Stream, AUX_STREAM};

/// Matrices up to this size are decomposed densely.
pub const DENSE_CUTOFF: usize = 200;

const START_SEED: u64 = 0x5eed_1a2c;

/// Eigenpairs in descending eigenvalue order.
#[derive(Clone, Debug)]
pub struct Eigs {
    pub values: Vec<f64>,
    pub vectors: Vec<DVector<f64>>,
}

/// Largest `k` eigenpairs of the symmetric matrix `a`.
pub fn top_eigs(a: &DMatrix<f64>, k: usize) -> Result<Eigs> {
    let p = a.nrows();
    if a.ncols() != p {
        return Err(invalid("matrix is not square"));
    }
    if k == 0 || k > p {
        return Err(invalid(format!("cannot take {k} eigenpairs of a {p} x {p} matrix")));
    }
    if p <= DENSE_CUTOFF {
        Ok(dense_top(a, k))
    } else {
        lanczos_top(a, k)
    }
}

/// Full symmetric decomposition, sorted descending.
pub fn dense_top(a: &DMatrix<f64>, k: usize) -> Eigs {
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    Eigs {
        values: order[..k].iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: order[..k]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect(),
    }
}

fn start_vector(p: usize, salt: u64) -> DVector<f64> {
    let mut rng = Stream::new(START_SEED ^ salt, AUX_STREAM);
    let mut v = DVector::from_fn(p, |_, _| 1.0 + rng.gaussian());
    v.normalize_mut();
    v
}

/// Projects `w` off the columns of `basis` twice (classical Gram-Schmidt).
fn reorthogonalize(basis: &[DVector<f64>], w: &mut DVector<f64>) {
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(w);
            w.axpy(-c, q, 1.0);
        }
    }
}

/// Lanczos with full reorthogonalization. Converged when every wanted Ritz
/// pair has `|beta_j e_j^T y| <= 1e-10 max(1, |theta|)`.
pub fn lanczos_top(a: &DMatrix<f64>, k: usize) -> Result<Eigs> {
    let p = a.nrows();
    let tol = 1e-10;
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(128);
    let mut alpha: Vec<f64> = Vec::new();
    // beta[j] couples basis[j] and basis[j + 1]; zero after a restart
    let mut beta: Vec<f64> = Vec::new();
    let mut q = start_vector(p, 0);
    let mut restarts = 0u64;
    let mut last_res = f64::INFINITY;
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);

    loop {
        let mut w = a * &q;
        let al = q.dot(&w);
        w.axpy(-al, &q, 1.0);
        basis.push(q.clone());
        alpha.push(al);
        reorthogonalize(&basis, &mut w);
        let b = w.norm();
        let j = basis.len();

        let check = j >= k && (j.is_multiple_of(5) || j == p || b <= 1e-12 * scale * p as f64);
        if check {
            let (vals, vecs) = tridiag_eigs(&alpha, &beta);
            let mut order: Vec<usize> = (0..j).collect();
            order.sort_by(|&x, &y| vals[y].total_cmp(&vals[x]));
            let res: Vec<f64> = order[..k].iter().map(|&i| (b * vecs[(j - 1, i)]).abs()).collect();
            last_res = res.iter().cloned().fold(0.0, f64::max);
            let ok = order[..k]
                .iter()
                .zip(&res)
                .all(|(&i, r)| *r <= tol * vals[i].abs().max(1.0));
            if ok || j == p {
                let mut out = Eigs {
                    values: Vec::with_capacity(k),
                    vectors: Vec::with_capacity(k),
                };
                for &i in &order[..k] {
                    let mut u = DVector::zeros(p);
                    for (r, qb) in basis.iter().enumerate() {
                        u.axpy(vecs[(r, i)], qb, 1.0);
                    }
                    u.normalize_mut();
                    out.values.push(vals[i]);
                    out.vectors.push(u);
                }
                return Ok(out);
            }
        }
        if j == p {
            return Err(GctError::Convergence {
                what: "lanczos",
                iterations: j,
                residual: last_res,
            });
        }
        if b <= 1e-12 * scale * p as f64 {
            // invariant subspace found: continue from a fresh direction
            restarts += 1;
            let mut fresh = start_vector(p, restarts);
            reorthogonalize(&basis, &mut fresh);
            let nf = fresh.norm();
            if nf < 1e-8 {
                return Err(GctError::Convergence {
                    what: "lanczos restart",
                    iterations: j,
                    residual: last_res,
                });
            }
            beta.push(0.0);
            q = fresh / nf;
        } else {
            beta.push(b);
            q = w / b;
        }
    }
}

/// Eigen-decomposition of the tridiagonal matrix with diagonal `alpha` and
/// off-diagonal `beta[..alpha.len() - 1]`.
fn tridiag_eigs(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let j = alpha.len();
    let mut t = DMatrix::zeros(j, j);
    for i in 0..j {
        t[(i, i)] = alpha[i];
        if i + 1 < j {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    (eig.eigenvalues.iter().cloned().collect(), eig.eigenvectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = Stream::new(seed, 0);
        let mut a = DMatrix::zeros(p, p);
        for j in 0..p {
            for i in j..p {
                let x = rng.gaussian();
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        a
    }

    #[test]
    fn rank_one() {
        let p = 300;
        let mut w = DVector::from_fn(p, |i, _| ((i * 7 % 13) as f64) - 6.0);
        w.normalize_mut();
        let a = &w * w.transpose() * 2.5;
        let e = top_eigs(&a, 2).unwrap();
        assert!((e.values[0] - 2.5).abs() < 1e-10);
        assert!(e.values[1].abs() < 1e-10);
        assert!((e.vectors[0].dot(&w).abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lanczos_matches_dense() {
        for seed in 0..4 {
            let a = random_symmetric(260, seed);
            let d = dense_top(&a, 3);
            let l = lanczos_top(&a, 3).unwrap();
            for i in 0..3 {
                assert!((d.values[i] - l.values[i]).abs() < 1e-8);
                let r = &a * &l.vectors[i] - &l.vectors[i] * l.values[i];
                assert!(r.norm() < 1e-7);
            }
        }
    }

    #[test]
    fn degenerate_spectrum_restarts() {
        // identity plus a rank-two bump: Krylov space from one vector is tiny
        let p = 250;
        let mut a = DMatrix::identity(p, p);
        a[(0, 0)] = 5.0;
        a[(1, 1)] = 3.0;
        let e = lanczos_top(&a, 3).unwrap();
        assert!((e.values[0] - 5.0).abs() < 1e-10);
        assert!((e.values[1] - 3.0).abs() < 1e-10);
        assert!((e.values[2] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_k() {
        let a = DMatrix::<f64>::identity(3, 3);
        assert!(top_eigs(&a, 0).is_err());
        assert!(top_eigs(&a, 4).is_err());
    }
}
