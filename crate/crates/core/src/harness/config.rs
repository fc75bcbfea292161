//! Experiment configuration: one flat JSON document with `"schema": 1`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GctError, Result};
use crate::kernels::{KernelKind, KernelSpec};
use crate::model::SpikePrior;
use crate::theory::SoftFamily;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    TheoryCurve,
    PhaseDiagram,
    #[default]
    Simulate,
    Recover,
    Diagnose,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::TheoryCurve => "theory-curve",
            Mode::PhaseDiagram => "phase-diagram",
            Mode::Simulate => "simulate",
            Mode::Recover => "recover",
            Mode::Diagnose => "diagnose",
        }
    }

    fn monte_carlo(self) -> bool {
        matches!(self, Mode::Simulate | Mode::Recover | Mode::Diagnose)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub mode: Mode,
    pub n: Vec<usize>,
    /// Dimension; alternatively give `gamma` and let `p = round(gamma n)`.
    pub p: Vec<usize>,
    pub gamma: Vec<f64>,
    /// Sparsity; alternatively give `beta` and let `m = round(beta sqrt(n))`.
    pub m: Vec<usize>,
    pub beta: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Kernel grammar strings plus `pca`, `adaptive` and `soft:t=star`.
    pub kernel: Vec<String>,
    pub prior: SpikePrior,
    pub trials: usize,
    pub base_seed: u64,
    pub eps_exponent: f64,
    /// Detection margin above the bulk edge; per-cell default is half the
    /// predicted gap.
    pub detect_eps: Option<f64>,
    /// Thresholds searched for `t_*`.
    pub t_grid: Vec<f64>,
    /// Thresholds tried by the adaptive method. The default `0, 0.25, ..., 3`
    /// covers `t_*` for `beta >= 0.2` at `gamma = 0.5`; much larger thresholds
    /// leave only a handful of nonzeros per row at desk-scale `p`.
    pub adaptive_grid: Vec<f64>,
    /// `diagnose`: evaluate the resolvent at `lambda_+ + z_offset`.
    pub z_offset: f64,
    pub record_runtime: bool,
    pub output: Option<String>,
    pub summary: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA_VERSION,
            mode: Mode::Simulate,
            n: vec![2000],
            p: vec![1000],
            gamma: vec![],
            m: vec![11],
            beta: vec![],
            lambda: vec![1.0],
            kernel: vec!["soft:t=2".into()],
            prior: SpikePrior::Rademacher,
            trials: 20,
            base_seed: 0,
            eps_exponent: crate::estimator::DEFAULT_EPS_EXPONENT,
            detect_eps: None,
            t_grid: SoftFamily::default_grid(),
            adaptive_grid: (0..=12).map(|i| 0.25 * i as f64).collect(),
            z_offset: 1.0,
            record_runtime: false,
            output: None,
            summary: None,
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> GctError {
    GctError::Config(msg.into())
}

/// How one kernel column entry is run.
#[derive(Clone, Debug, PartialEq)]
pub enum Method {
    /// Top eigenpair of `Y` itself.
    Pca,
    Kernel(KernelSpec),
    /// Soft threshold at the `t_*` of the cell's `(gamma, beta)`.
    SoftStar,
    /// Soft threshold with `t` chosen per trial by the largest normalized gap.
    Adaptive,
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Pca => "pca".into(),
            Method::Kernel(s) => s.to_string(),
            Method::SoftStar => "soft:t=star".into(),
            Method::Adaptive => "adaptive".into(),
        }
    }

    /// Threshold of a fixed threshold kernel.
    pub fn fixed_t(&self) -> Option<f64> {
        match self {
            Method::Kernel(s) => match s.kind {
                KernelKind::Soft { t } | KernelKind::Hard { t } => Some(t),
                _ => None,
            },
            _ => None,
        }
    }
}

impl FromStr for Method {
    type Err = GctError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pca" => Ok(Method::Pca),
            "adaptive" => Ok(Method::Adaptive),
            "soft:t=star" => Ok(Method::SoftStar),
            other => other
                .parse::<KernelSpec>()
                .map(Method::Kernel)
                .map_err(|e| cfg_err(format!("kernel '{other}': {e}"))),
        }
    }
}

/// One data-generating cell of a Monte Carlo sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub lambda: f64,
}

impl Cell {
    pub fn gamma(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    pub fn beta(&self) -> f64 {
        self.m as f64 / (self.n as f64).sqrt()
    }

    pub(crate) fn key(&self, prior: SpikePrior) -> [u64; 5] {
        [
            self.n as u64,
            self.p as u64,
            self.m as u64,
            self.lambda.to_bits(),
            prior as u64,
        ]
    }
}

/// A validated configuration, expanded into what the run loops over.
#[derive(Clone, Debug)]
pub struct Plan {
    pub config: ExperimentConfig,
    pub methods: Vec<Method>,
    /// Monte Carlo cells (`simulate`, `recover`, `diagnose`), grid order.
    pub cells: Vec<Cell>,
    /// `(gamma, beta)` pairs for the model-free modes.
    pub gamma_beta: Vec<(f64, f64)>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| cfg_err(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| GctError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks the invariants and expands the grids.
    pub fn plan(&self) -> Result<Plan> {
        if self.schema != SCHEMA_VERSION {
            return Err(cfg_err(format!(
                "schema {} is not supported (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        let finite = |name: &str, xs: &[f64], lo: f64| -> Result<()> {
            match xs.iter().find(|x| !(x.is_finite() && **x >= lo)) {
                Some(x) => Err(cfg_err(format!("{name} value {x} must be finite and >= {lo}"))),
                None => Ok(()),
            }
        };
        finite("lambda", &self.lambda, 1.0)?;
        finite("gamma", &self.gamma, f64::MIN_POSITIVE)?;
        finite("beta", &self.beta, f64::MIN_POSITIVE)?;
        finite("t_grid", &self.t_grid, 0.0)?;
        finite("adaptive_grid", &self.adaptive_grid, 0.0)?;
        if !(self.eps_exponent > 0.25 && self.eps_exponent < 0.5) {
            return Err(cfg_err(format!(
                "eps_exponent = {} must lie in (1/4, 1/2)",
                self.eps_exponent
            )));
        }
        if let Some(e) = self.detect_eps {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(cfg_err(format!("detect_eps = {e} must be finite and >= 0")));
            }
        }
        if !(self.z_offset > 0.0 && self.z_offset.is_finite()) {
            return Err(cfg_err("z_offset must be positive"));
        }
        if self.n.contains(&0) || self.p.contains(&0) || self.m.contains(&0) {
            return Err(cfg_err("n, p and m must be positive"));
        }
        if !self.p.is_empty() && !self.gamma.is_empty() {
            return Err(cfg_err("give either p or gamma, not both"));
        }
        if !self.m.is_empty() && !self.beta.is_empty() {
            return Err(cfg_err("give either m or beta, not both"));
        }

        let methods = self
            .kernel
            .iter()
            .map(|k| k.parse::<Method>())
            .collect::<Result<Vec<_>>>()?;
        let uses_t_grid = methods.contains(&Method::SoftStar) || self.mode == Mode::TheoryCurve;
        if uses_t_grid && self.t_grid.is_empty() {
            return Err(cfg_err("t_grid is empty"));
        }
        if methods.contains(&Method::Adaptive) && self.adaptive_grid.is_empty() {
            return Err(cfg_err("adaptive_grid is empty"));
        }

        let mut plan = Plan {
            config: self.clone(),
            methods,
            cells: vec![],
            gamma_beta: vec![],
        };
        if self.mode.monte_carlo() {
            self.plan_cells(&mut plan)?;
        } else {
            self.plan_theory(&mut plan)?;
        }
        Ok(plan)
    }

    fn plan_cells(&self, plan: &mut Plan) -> Result<()> {
        if self.trials == 0 {
            return Err(cfg_err("trials must be >= 1"));
        }
        if self.n.is_empty() {
            return Err(cfg_err("n grid is empty"));
        }
        if self.p.is_empty() && self.gamma.is_empty() {
            return Err(cfg_err("give p or gamma"));
        }
        if plan.methods.is_empty() {
            return Err(cfg_err("kernel grid is empty"));
        }
        let diagnose = self.mode == Mode::Diagnose;
        if diagnose {
            if plan.methods.iter().any(|m| !matches!(m, Method::Kernel(_))) {
                return Err(cfg_err("diagnose takes explicit kernels only"));
            }
        } else {
            if self.m.is_empty() && self.beta.is_empty() {
                return Err(cfg_err("give m or beta"));
            }
            if self.lambda.is_empty() {
                return Err(cfg_err("lambda grid is empty"));
            }
        }
        for &n in &self.n {
            let ps: Vec<usize> = if self.p.is_empty() {
                self.gamma.iter().map(|g| (g * n as f64).round() as usize).collect()
            } else {
                self.p.clone()
            };
            for p in ps {
                if p == 0 {
                    return Err(cfg_err(format!("gamma grid gives p = 0 at n = {n}")));
                }
                if diagnose {
                    plan.cells.push(Cell { n, p, m: 0, lambda: 1.0 });
                    continue;
                }
                let ms: Vec<usize> = if self.m.is_empty() {
                    let rn = (n as f64).sqrt();
                    self.beta.iter().map(|b| (b * rn).round() as usize).collect()
                } else {
                    self.m.clone()
                };
                for m in ms {
                    if m == 0 || m > p {
                        return Err(cfg_err(format!("m = {m} must lie in [1, p = {p}]")));
                    }
                    for &lambda in &self.lambda {
                        plan.cells.push(Cell { n, p, m, lambda });
                    }
                }
            }
        }
        Ok(())
    }

    fn plan_theory(&self, plan: &mut Plan) -> Result<()> {
        let gammas: Vec<f64> = if !self.gamma.is_empty() {
            self.gamma.clone()
        } else {
            let mut g = vec![];
            for &n in &self.n {
                for &p in &self.p {
                    g.push(p as f64 / n as f64);
                }
            }
            g
        };
        let betas: Vec<f64> = if !self.beta.is_empty() {
            self.beta.clone()
        } else {
            let mut b = vec![];
            for &n in &self.n {
                for &m in &self.m {
                    b.push(m as f64 / (n as f64).sqrt());
                }
            }
            b
        };
        if gammas.is_empty() || betas.is_empty() {
            return Err(cfg_err("gamma and beta grids must be non-empty (directly or via n, p, m)"));
        }
        for &g in &gammas {
            for &b in &betas {
                plan.gamma_beta.push((g, b));
            }
        }
        if self.mode == Mode::PhaseDiagram {
            if self.lambda.is_empty() {
                return Err(cfg_err("lambda grid is empty"));
            }
            if plan.methods.is_empty() {
                return Err(cfg_err("kernel grid is empty"));
            }
            if plan.methods.contains(&Method::Adaptive) {
                return Err(cfg_err("phase-diagram has no theory for the adaptive method"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_plan_is_one_cell() {
        let plan = ExperimentConfig::default().plan().unwrap();
        assert_eq!(plan.cells.len(), 1);
        assert_eq!(plan.cells[0], Cell { n: 2000, p: 1000, m: 11, lambda: 1.0 });
    }

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let cfg = ExperimentConfig {
            lambda: vec![1.0, 1.5],
            ..Default::default()
        };
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert!(ExperimentConfig::from_json(r#"{"schema": 1, "lamda": [1]}"#).is_err());
        let partial = ExperimentConfig::from_json(r#"{"schema": 1, "mode": "recover"}"#).unwrap();
        assert_eq!(partial.mode, Mode::Recover);
        assert_eq!(partial.trials, 20);
    }

    #[test]
    fn derived_dimensions() {
        let cfg = ExperimentConfig {
            n: vec![400],
            p: vec![],
            gamma: vec![0.5],
            m: vec![],
            beta: vec![0.25],
            ..Default::default()
        };
        let plan = cfg.plan().unwrap();
        assert_eq!((plan.cells[0].p, plan.cells[0].m), (200, 5));
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            ExperimentConfig { schema: 2, ..Default::default() },
            ExperimentConfig { trials: 0, ..Default::default() },
            ExperimentConfig { lambda: vec![], ..Default::default() },
            ExperimentConfig { lambda: vec![0.5], ..Default::default() },
            ExperimentConfig { kernel: vec!["cubic".into()], ..Default::default() },
            ExperimentConfig { gamma: vec![0.5], ..Default::default() },
            ExperimentConfig { eps_exponent: 0.5, ..Default::default() },
            ExperimentConfig { m: vec![5000], ..Default::default() },
        ];
        for cfg in bad {
            assert!(matches!(cfg.plan(), Err(GctError::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn method_tokens() {
        assert_eq!("pca".parse::<Method>().unwrap(), Method::Pca);
        assert_eq!("soft:t=star".parse::<Method>().unwrap(), Method::SoftStar);
        let m: Method = "soft:t=1.5".parse().unwrap();
        assert_eq!(m.fixed_t(), Some(1.5));
        assert_eq!(m.label(), "soft:t=1.5");
    }
}
