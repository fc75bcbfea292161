//! Spiked covariance model: `Sigma = (lambda - 1) v v^T + I`, `S = Z^T Z / n`,
//! `Y = Sigma^{1/2} S Sigma^{1/2}`.
//!
//! `Y` is never formed through a matrix square root. Writing
//! `Sigma^{1/2} = I + (sqrt(lambda) - 1) v v^T` and `w = S v - v` gives
//!
//! ```text
//! Y = S + c v v^T + (sqrt(lambda) - 1) (v w^T + w v^T),
//! c = (sqrt(lambda) - 1)^2 (v^T S v) + 2 (sqrt(lambda) - 1),
//! ```
//!
//! which costs `O(p m)` for `S v` plus one `O(p^2)` pass.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{Stream, NOISE_STREAM, SPIKE_STREAM};

/// Distribution of the nonzero spike entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SpikePrior {
    /// Nonzero entries are `+-1/sqrt(m)`.
    #[default]
    Rademacher,
    /// Nonzero entries are `xi / |xi|` with `xi_i ~ unif([-2,-1] U [1,2])`.
    UniformShell,
}

impl std::str::FromStr for SpikePrior {
    type Err = crate::GctError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rademacher" => Ok(Self::Rademacher),
            "uniform-shell" | "uniform" => Ok(Self::UniformShell),
            other => Err(invalid(format!("unknown spike prior '{other}'"))),
        }
    }
}

/// Unit-norm `m`-sparse spike.
#[derive(Clone, Debug)]
pub struct SpikeVector {
    pub entries: DVector<f64>,
    /// Sorted support indices.
    pub support: Vec<usize>,
    pub prior: SpikePrior,
}

impl SpikeVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    /// Builds a spike from explicit entries; the support is the set of nonzeros.
    pub fn from_entries(entries: DVector<f64>, prior: SpikePrior) -> Self {
        let support = entries
            .iter()
            .enumerate()
            .filter(|(_, x)| **x != 0.0)
            .map(|(i, _)| i)
            .collect();
        Self {
            entries,
            support,
            prior,
        }
    }
}

/// Parameters of one model instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub lambda: f64,
    pub prior: SpikePrior,
    pub seed: u64,
}

impl ModelParams {
    pub fn new(n: usize, p: usize, m: usize, lambda: f64, prior: SpikePrior, seed: u64) -> Result<Self> {
        let params = Self {
            n,
            p,
            m,
            lambda,
            prior,
            seed,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(invalid(format!("n = {} and p = {} must be positive", self.n, self.p)));
        }
        if self.m == 0 || self.m > self.p {
            return Err(invalid(format!("sparsity m = {} must lie in [1, p = {}]", self.m, self.p)));
        }
        if !(self.lambda >= 1.0) || !self.lambda.is_finite() {
            return Err(invalid(format!("lambda = {} must be finite and >= 1", self.lambda)));
        }
        Ok(())
    }

    /// `p / n`.
    pub fn gamma(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    /// `m / sqrt(n)`.
    pub fn beta(&self) -> f64 {
        self.m as f64 / (self.n as f64).sqrt()
    }
}

/// Draws a spike with a uniformly random support of size `m`.
pub fn make_spike(p: usize, m: usize, prior: SpikePrior, seed: u64) -> Result<SpikeVector> {
    if m == 0 || m > p {
        return Err(invalid(format!("sparsity m = {m} must lie in [1, p = {p}]")));
    }
    let mut rng = Stream::new(seed, SPIKE_STREAM);
    let support = rng.subset(p, m);
    let mut entries = DVector::zeros(p);
    match prior {
        SpikePrior::Rademacher => {
            let mag = 1.0 / (m as f64).sqrt();
            for &i in &support {
                let sign = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
                entries[i] = sign * mag;
            }
        }
        SpikePrior::UniformShell => {
            let mut xi = Vec::with_capacity(m);
            for _ in 0..m {
                let mag = 1.0 + rng.uniform_open();
                let sign = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
                xi.push(sign * mag);
            }
            let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (&i, x) in support.iter().zip(&xi) {
                entries[i] = x / norm;
            }
        }
    }
    Ok(SpikeVector {
        entries,
        support,
        prior,
    })
}

/// Sample covariance of noise and of spiked data.
#[derive(Clone, Debug)]
pub struct SampleCov {
    /// Noise Gram matrix `Z^T Z / n`.
    pub s: DMatrix<f64>,
    /// Spiked sample covariance `Sigma^{1/2} S Sigma^{1/2}`.
    pub y: DMatrix<f64>,
    /// Cached `S v`.
    pub sv: DVector<f64>,
    /// Cached `v^T S v`.
    pub vsv: f64,
    /// Raw noise, only kept on request.
    pub z: Option<DMatrix<f64>>,
    pub n: usize,
}

/// Options for [`sample_covariance_with`].
#[derive(Clone, Copy, Debug, Default)]
pub struct SampleOptions {
    pub keep_noise: bool,
}

/// Draws `Z` (n x p, iid N(0,1)) and returns `S` and `Y`.
pub fn sample_covariance(params: &ModelParams, v: &SpikeVector) -> Result<SampleCov> {
    sample_covariance_with(params, v, SampleOptions::default())
}

pub fn sample_covariance_with(
    params: &ModelParams,
    v: &SpikeVector,
    opts: SampleOptions,
) -> Result<SampleCov> {
    params.validate()?;
    if v.len() != params.p {
        return Err(invalid(format!(
            "spike has length {} but p = {}",
            v.len(),
            params.p
        )));
    }
    let z = gaussian_matrix(params.n, params.p, params.seed);
    let s = gram(&z);
    let mut cov = spiked_from_noise(s, v, params.lambda, params.n);
    if opts.keep_noise {
        cov.z = Some(z);
    }
    Ok(cov)
}

/// `n x p` matrix of standard normals, filled row by row from the noise stream.
pub fn gaussian_matrix(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = Stream::new(seed, NOISE_STREAM);
    let mut z = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            z[(i, j)] = rng.gaussian();
        }
    }
    z
}

/// `Z^T Z / n`, symmetrized exactly.
pub fn gram(z: &DMatrix<f64>) -> DMatrix<f64> {
    let n = z.nrows() as f64;
    // an explicit transpose lets the product go through the blocked gemm kernel
    let mut s = z.transpose() * z;
    s /= n;
    symmetrize(&mut s);
    s
}

fn symmetrize(a: &mut DMatrix<f64>) {
    let p = a.nrows();
    for j in 0..p {
        for i in (j + 1)..p {
            let x = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = x;
            a[(j, i)] = x;
        }
    }
}

/// Applies the rank-one expansion to a noise Gram matrix.
pub fn spiked_from_noise(s: DMatrix<f64>, v: &SpikeVector, lambda: f64, n: usize) -> SampleCov {
    let p = s.nrows();
    let mut sv = DVector::zeros(p);
    for &i in &v.support {
        let vi = v.entries[i];
        sv.axpy(vi, &s.column(i), 1.0);
    }
    let vsv: f64 = v.support.iter().map(|&i| v.entries[i] * sv[i]).sum();
    let a = lambda.sqrt() - 1.0;
    let mut y = s.clone();
    if a != 0.0 {
        let c = a * a * vsv + 2.0 * a;
        let w = &sv - &v.entries;
        let vv = &v.entries;
        for j in 0..p {
            let (vj, wj) = (vv[j], w[j]);
            for i in j..p {
                let x = c * vv[i] * vj + a * (vv[i] * wj + w[i] * vj);
                if x != 0.0 {
                    let val = y[(i, j)] + x;
                    y[(i, j)] = val;
                    y[(j, i)] = val;
                }
            }
        }
    }
    SampleCov {
        s,
        y,
        sv,
        vsv,
        z: None,
        n,
    }
}

/// Dense `Sigma^{1/2} S Sigma^{1/2}`; reference route for tests and small problems.
pub fn spiked_dense(s: &DMatrix<f64>, v: &SpikeVector, lambda: f64) -> DMatrix<f64> {
    let p = s.nrows();
    let a = lambda.sqrt() - 1.0;
    let root = DMatrix::identity(p, p) + &v.entries * v.entries.transpose() * a;
    &root * s * &root
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_coordinate_spike() {
        let v = make_spike(4, 1, SpikePrior::Rademacher, 9).unwrap();
        assert_eq!(v.support.len(), 1);
        let i = v.support[0];
        assert_eq!(v.entries[i].abs(), 1.0);
        assert_eq!(v.entries.iter().filter(|x| **x != 0.0).count(), 1);
    }

    #[test]
    fn rademacher_magnitudes() {
        let v = make_spike(100, 25, SpikePrior::Rademacher, 3).unwrap();
        for &i in &v.support {
            assert!((v.entries[i].abs() - 0.2).abs() < 1e-15);
        }
        assert!((v.entries.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_shell_ratio() {
        let v = make_spike(100, 25, SpikePrior::UniformShell, 3).unwrap();
        let mags: Vec<f64> = v.support.iter().map(|&i| v.entries[i].abs()).collect();
        let lo = mags.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = mags.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo <= 2.0 + 1e-12);
        assert!((v.entries.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn support_is_not_first_m() {
        // a uniformly random 5-subset of 1000 is {0..5} with negligible probability
        let contiguous = (0..20u64).all(|seed| {
            let v = make_spike(1000, 5, SpikePrior::Rademacher, seed).unwrap();
            v.support == vec![0, 1, 2, 3, 4]
        });
        assert!(!contiguous);
    }

    #[test]
    fn bad_sparsity_rejected() {
        assert!(make_spike(10, 0, SpikePrior::Rademacher, 0).is_err());
        assert!(make_spike(10, 11, SpikePrior::Rademacher, 0).is_err());
        assert!(ModelParams::new(10, 5, 2, 0.5, SpikePrior::Rademacher, 0).is_err());
    }

    #[test]
    fn lambda_one_gives_y_equal_s() {
        let params = ModelParams::new(50, 20, 4, 1.0, SpikePrior::Rademacher, 5).unwrap();
        let v = make_spike(20, 4, params.prior, 5).unwrap();
        let cov = sample_covariance(&params, &v).unwrap();
        assert_eq!(cov.y, cov.s);
    }

    #[test]
    fn expansion_matches_dense_square_root() {
        let params = ModelParams::new(80, 50, 7, 3.3, SpikePrior::UniformShell, 11).unwrap();
        let v = make_spike(50, 7, params.prior, 11).unwrap();
        let cov = sample_covariance(&params, &v).unwrap();
        let dense = spiked_dense(&cov.s, &v, params.lambda);
        let err = (&cov.y - dense).amax();
        assert!(err < 1e-10, "max deviation {err}");
    }

    #[test]
    fn outputs_are_symmetric_and_reproducible() {
        let params = ModelParams::new(60, 30, 5, 2.0, SpikePrior::Rademacher, 2).unwrap();
        let v = make_spike(30, 5, params.prior, 2).unwrap();
        let a = sample_covariance(&params, &v).unwrap();
        let b = sample_covariance(&params, &v).unwrap();
        assert_eq!(a.y, b.y);
        assert_eq!(a.y, a.y.transpose());
        assert_eq!(a.s, a.s.transpose());
    }

    #[test]
    fn quadratic_form_at_identity_noise() {
        // with S replaced by its expectation I, v^T Y v = lambda
        let v = make_spike(30, 6, SpikePrior::Rademacher, 8).unwrap();
        let cov = spiked_from_noise(DMatrix::identity(30, 30), &v, 4.0, 100);
        let q = (v.entries.transpose() * &cov.y * &v.entries)[(0, 0)];
        assert!((q - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mean_of_y_approximates_sigma() {
        let (n, p, m, lambda) = (500, 50, 5, 4.0);
        let v = make_spike(p, m, SpikePrior::Rademacher, 1).unwrap();
        let mut acc = DMatrix::<f64>::zeros(p, p);
        let trials = 200;
        for seed in 0..trials {
            let params = ModelParams::new(n, p, m, lambda, SpikePrior::Rademacher, seed).unwrap();
            acc += sample_covariance(&params, &v).unwrap().y;
        }
        acc /= trials as f64;
        let sigma = DMatrix::identity(p, p) + &v.entries * v.entries.transpose() * (lambda - 1.0);
        let err = (acc - sigma).amax();
        assert!(err < 4.0 / (trials as f64).sqrt(), "max deviation {err}");
    }
}
