//! The run engine: parallel trials, deterministic ordering, summaries.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Cell, ExperimentConfig, Method, Mode, Plan};
use super::emit::{self, opt_flag, opt_float, CsvRecord};
use crate::error::{GctError, Result};
use crate::estimator::{
    adaptive_threshold, default_detect_eps, exact_recovery, gct, pca, quadratic_form_check, recover_support,
    support_score, SpectralEstimate,
};
use crate::kernels::KernelSpec;
use crate::model::{make_spike, sample_covariance, ModelParams};
use crate::rng::{trial_seed, Stream, AUX_STREAM};
use crate::theory::{bbp, bulk_edge, lambda_star_opt, spike_forward, OptSearch, Regime, SoftFamily};

/// One Monte Carlo record per (cell, kernel, trial).
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub gamma: f64,
    pub beta: f64,
    pub lambda: f64,
    pub kernel: String,
    pub t: Option<f64>,
    pub trial: usize,
    pub seed: u64,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub gap: Option<f64>,
    pub cos2: Option<f64>,
    pub detected: Option<bool>,
    pub support_score: Option<f64>,
    pub exact_recovery: Option<bool>,
    pub theory_lambda: Option<f64>,
    pub theory_cos2: Option<f64>,
    pub runtime_ms: Option<f64>,
    pub error: Option<String>,
}

impl CsvRecord for ResultRow {
    const HEADER: &'static [&'static str] = &[
        "gamma",
        "beta",
        "lambda",
        "kernel",
        "t",
        "trial",
        "seed",
        "lambda1",
        "lambda2",
        "gap",
        "cos2",
        "detected",
        "support_score",
        "exact_recovery",
        "theory_lambda",
        "theory_cos2",
        "runtime_ms",
        "error",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            emit::fmt_float(self.gamma),
            emit::fmt_float(self.beta),
            emit::fmt_float(self.lambda),
            self.kernel.clone(),
            opt_float(self.t),
            self.trial.to_string(),
            self.seed.to_string(),
            opt_float(self.lambda1),
            opt_float(self.lambda2),
            opt_float(self.gap),
            opt_float(self.cos2),
            opt_flag(self.detected),
            opt_float(self.support_score),
            opt_flag(self.exact_recovery),
            opt_float(self.theory_lambda),
            opt_float(self.theory_cos2),
            opt_float(self.runtime_ms),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

/// `theory-curve` record: optimal and best-soft transitions at one `(gamma, beta)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub gamma: f64,
    pub beta: f64,
    pub lambda_star: Option<f64>,
    pub a1_star: Option<f64>,
    pub lambda_s_star: Option<f64>,
    pub t_star: Option<f64>,
    pub error: Option<String>,
}

impl CsvRecord for CurveRow {
    const HEADER: &'static [&'static str] =
        &["gamma", "beta", "lambda_star", "a1_star", "lambda_s_star", "t_star", "error"];

    fn fields(&self) -> Vec<String> {
        vec![
            emit::fmt_float(self.gamma),
            emit::fmt_float(self.beta),
            opt_float(self.lambda_star),
            opt_float(self.a1_star),
            opt_float(self.lambda_s_star),
            opt_float(self.t_star),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

/// `phase-diagram` record: predictions at one `(gamma, beta, lambda, kernel)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseRow {
    pub gamma: f64,
    pub beta: f64,
    pub lambda: f64,
    pub kernel: String,
    pub t: Option<f64>,
    pub regime: Option<String>,
    pub tau: Option<f64>,
    pub lambda_plus: Option<f64>,
    pub theory_lambda: Option<f64>,
    pub theory_cos2: Option<f64>,
    pub error: Option<String>,
}

impl CsvRecord for PhaseRow {
    const HEADER: &'static [&'static str] = &[
        "gamma",
        "beta",
        "lambda",
        "kernel",
        "t",
        "regime",
        "tau",
        "lambda_plus",
        "theory_lambda",
        "theory_cos2",
        "error",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            emit::fmt_float(self.gamma),
            emit::fmt_float(self.beta),
            emit::fmt_float(self.lambda),
            self.kernel.clone(),
            opt_float(self.t),
            self.regime.clone().unwrap_or_default(),
            opt_float(self.tau),
            opt_float(self.lambda_plus),
            opt_float(self.theory_lambda),
            opt_float(self.theory_cos2),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

/// `diagnose` record: observed and predicted resolvent quadratic forms.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnoseRow {
    pub gamma: f64,
    pub n: usize,
    pub p: usize,
    pub kernel: String,
    pub trial: usize,
    pub seed: u64,
    pub z: Option<f64>,
    pub lambda_plus: Option<f64>,
    pub predicted: Option<[f64; 3]>,
    pub observed: Option<[f64; 3]>,
    pub deviations: Option<[f64; 3]>,
    pub error: Option<String>,
}

impl CsvRecord for DiagnoseRow {
    const HEADER: &'static [&'static str] = &[
        "gamma",
        "n",
        "p",
        "kernel",
        "trial",
        "seed",
        "z",
        "lambda_plus",
        "s",
        "s_breve",
        "s_ring",
        "obs_r",
        "obs_sr",
        "obs_srs",
        "dev_r",
        "dev_sr",
        "dev_srs",
        "error",
    ];

    fn fields(&self) -> Vec<String> {
        let three = |x: Option<[f64; 3]>| -> Vec<String> {
            match x {
                Some(a) => a.iter().map(|v| emit::fmt_float(*v)).collect(),
                None => vec![String::new(); 3],
            }
        };
        let mut out = vec![
            emit::fmt_float(self.gamma),
            self.n.to_string(),
            self.p.to_string(),
            self.kernel.clone(),
            self.trial.to_string(),
            self.seed.to_string(),
            opt_float(self.z),
            opt_float(self.lambda_plus),
        ];
        out.extend(three(self.predicted));
        out.extend(three(self.observed));
        out.extend(three(self.deviations));
        out.push(self.error.clone().unwrap_or_default());
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Table {
    Trials(Vec<ResultRow>),
    Curve(Vec<CurveRow>),
    Phase(Vec<PhaseRow>),
    Diagnose(Vec<DiagnoseRow>),
}

impl Table {
    pub fn len(&self) -> usize {
        match self {
            Table::Trials(r) => r.len(),
            Table::Curve(r) => r.len(),
            Table::Phase(r) => r.len(),
            Table::Diagnose(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rows whose `error` field is set.
    pub fn failures(&self) -> usize {
        match self {
            Table::Trials(r) => r.iter().filter(|x| x.error.is_some()).count(),
            Table::Curve(r) => r.iter().filter(|x| x.error.is_some()).count(),
            Table::Phase(r) => r.iter().filter(|x| x.error.is_some()).count(),
            Table::Diagnose(r) => r.iter().filter(|x| x.error.is_some()).count(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        match self {
            Table::Trials(r) => emit::write_csv(r, out),
            Table::Curve(r) => emit::write_csv(r, out),
            Table::Phase(r) => emit::write_csv(r, out),
            Table::Diagnose(r) => emit::write_csv(r, out),
        }
    }

    pub fn emit_csv(&self, path: &Path) -> Result<()> {
        match self {
            Table::Trials(r) => emit::emit_csv(r, path),
            Table::Curve(r) => emit::emit_csv(r, path),
            Table::Phase(r) => emit::emit_csv(r, path),
            Table::Diagnose(r) => emit::emit_csv(r, path),
        }
    }
}

/// Mean and standard error over the rows of a cell where the value is present.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stat {
    pub count: usize,
    pub mean: f64,
    pub stderr: Option<f64>,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        let k = values.len();
        if k == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / k as f64;
        let stderr = (k > 1).then(|| {
            let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        });
        Some(Stat { count: k, mean, stderr })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub p: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub kernel: String,
    /// Threshold shared by every trial of the cell, if any.
    pub t: Option<f64>,
    pub trials: usize,
    pub failed: usize,
    pub stats: BTreeMap<String, Stat>,
    pub theory_lambda: Option<f64>,
    pub theory_cos2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub version: String,
    pub mode: Mode,
    pub rows: usize,
    pub failed: usize,
    pub config: ExperimentConfig,
    pub cells: Vec<CellSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub table: Table,
    pub summary: Summary,
}

impl RunOutput {
    pub fn failed(&self) -> usize {
        self.summary.failed
    }
}

/// Runs `config` on a pool of `threads` workers (`None`: one per core).
pub fn run(config: &ExperimentConfig, threads: Option<usize>) -> Result<RunOutput> {
    let plan = config.plan()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| GctError::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_plan(&plan))
}

/// Runs an already validated plan on the current rayon pool.
pub fn run_plan(plan: &Plan) -> Result<RunOutput> {
    let (table, cells) = match plan.config.mode {
        Mode::Simulate | Mode::Recover => {
            let (rows, cells) = run_trials(plan)?;
            (Table::Trials(rows), cells)
        }
        Mode::Diagnose => {
            let (rows, cells) = run_diagnose(plan);
            (Table::Diagnose(rows), cells)
        }
        Mode::TheoryCurve => (Table::Curve(run_curve(plan)?), vec![]),
        Mode::PhaseDiagram => (Table::Phase(run_phase(plan)?), vec![]),
    };
    let summary = Summary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        mode: plan.config.mode,
        rows: table.len(),
        failed: table.failures(),
        config: plan.config.clone(),
        cells,
    };
    Ok(RunOutput { table, summary })
}

/// Theory side of one (cell, method) pair.
#[derive(Clone, Debug, Default)]
struct Prediction {
    spec: Option<KernelSpec>,
    t: Option<f64>,
    lambda: Option<f64>,
    cos2: Option<f64>,
    regime: Option<Regime>,
    tau: Option<f64>,
    /// Bulk edge on the scale of the estimator's eigenvalues.
    edge: Option<f64>,
    detect_eps: Option<f64>,
    error: Option<String>,
}

fn predict_kernel(spec: &KernelSpec, gamma: f64, beta: f64, lambda: f64) -> Prediction {
    let mut out = Prediction {
        spec: Some(spec.clone()),
        t: Method::Kernel(spec.clone()).fixed_t(),
        ..Default::default()
    };
    match spike_forward(spec, gamma, beta, lambda) {
        Ok(r) => {
            out.lambda = Some(r.lambda_limit);
            out.cos2 = Some(r.cos2_limit);
            out.regime = Some(r.regime);
            out.tau = Some(r.tau);
            out.edge = Some(r.bulk.lambda_plus);
            out.detect_eps = default_detect_eps(&r);
        }
        Err(GctError::Unidentifiable) => {
            // no outlier: the top eigenvalue sticks to the edge
            if let Ok(law) = bulk_edge(spec.a1(), spec.nu2, gamma) {
                out.lambda = Some(law.lambda_plus);
                out.cos2 = Some(0.0);
                out.tau = Some(0.0);
                out.regime = Some(Regime::Bulk);
                out.edge = Some(law.lambda_plus);
            }
        }
        Err(e) => {
            out.edge = bulk_edge(spec.a1(), spec.nu2, gamma).ok().map(|l| l.lambda_plus);
            out.error = Some(e.to_string());
        }
    }
    out
}

fn predict(method: &Method, soft_star: &StarCache, gamma: f64, beta: f64, lambda: f64) -> Prediction {
    match method {
        Method::Pca => {
            let (eig, cos2) = bbp(gamma, lambda);
            let edge = (1.0 + gamma.sqrt()).powi(2);
            Prediction {
                lambda: Some(eig),
                cos2: Some(cos2),
                edge: Some(edge),
                detect_eps: (cos2 > 0.0).then_some((eig - edge) / 2.0),
                ..Default::default()
            }
        }
        Method::Kernel(spec) => predict_kernel(spec, gamma, beta, lambda),
        Method::SoftStar => match soft_star.get(gamma, beta) {
            Ok((t, spec)) => {
                let mut p = predict_kernel(&spec, gamma, beta, lambda);
                p.t = Some(t);
                p
            }
            Err(e) => Prediction {
                error: Some(e),
                ..Default::default()
            },
        },
        Method::Adaptive => Prediction::default(),
    }
}

/// `t_*` per `(gamma, beta)`, computed up front.
#[derive(Default)]
struct StarCache {
    map: HashMap<(u64, u64), std::result::Result<(f64, KernelSpec), String>>,
}

impl StarCache {
    fn build(plan: &Plan, pairs: &[(f64, f64)]) -> Result<Self> {
        if !plan.methods.contains(&Method::SoftStar) {
            return Ok(Self::default());
        }
        let family = SoftFamily::new(&plan.config.t_grid)?;
        let mut uniq: Vec<(f64, f64)> = vec![];
        for &gb in pairs {
            if !uniq.iter().any(|u| u.0.to_bits() == gb.0.to_bits() && u.1.to_bits() == gb.1.to_bits()) {
                uniq.push(gb);
            }
        }
        let found: Vec<_> = uniq
            .par_iter()
            .map(|&(g, b)| {
                family
                    .lambda_star(g, b)
                    .and_then(|(_, t)| Ok((t, KernelSpec::soft(t)?)))
                    .map_err(|e| e.to_string())
            })
            .collect();
        Ok(Self {
            map: uniq
                .iter()
                .zip(found)
                .map(|(&(g, b), r)| ((g.to_bits(), b.to_bits()), r))
                .collect(),
        })
    }

    fn get(&self, gamma: f64, beta: f64) -> std::result::Result<(f64, KernelSpec), String> {
        self.map
            .get(&(gamma.to_bits(), beta.to_bits()))
            .cloned()
            .unwrap_or_else(|| Err("t_* was not resolved".into()))
    }
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn run_trials(plan: &Plan) -> Result<(Vec<ResultRow>, Vec<CellSummary>)> {
    let cfg = &plan.config;
    let pairs: Vec<(f64, f64)> = plan.cells.iter().map(|c| (c.gamma(), c.beta())).collect();
    let stars = StarCache::build(plan, &pairs)?;
    let nm = plan.methods.len();
    let preds: Vec<Prediction> = (0..plan.cells.len() * nm)
        .into_par_iter()
        .map(|i| {
            let c = &plan.cells[i / nm];
            predict(&plan.methods[i % nm], &stars, c.gamma(), c.beta(), c.lambda)
        })
        .collect();

    let tasks: Vec<(usize, usize)> = (0..plan.cells.len())
        .flat_map(|c| (0..cfg.trials).map(move |t| (c, t)))
        .collect();
    let per_task: Vec<Vec<ResultRow>> = tasks
        .par_iter()
        .map(|&(ci, trial)| trial_rows(plan, &preds[ci * nm..(ci + 1) * nm], &plan.cells[ci], trial))
        .collect();

    // (cell, trial, method) -> (cell, method, trial)
    let mut rows = Vec::with_capacity(per_task.len() * nm);
    for cell_tasks in per_task.chunks(cfg.trials) {
        for mi in 0..nm {
            rows.extend(cell_tasks.iter().map(|t| t[mi].clone()));
        }
    }
    let mut cells = Vec::with_capacity(plan.cells.len() * nm);
    for (k, chunk) in rows.chunks(cfg.trials).enumerate() {
        cells.push(summarize_trials(&plan.cells[k / nm], chunk));
    }
    Ok((rows, cells))
}

fn trial_rows(plan: &Plan, preds: &[Prediction], cell: &Cell, trial: usize) -> Vec<ResultRow> {
    let cfg = &plan.config;
    let seed = trial_seed(cfg.base_seed, &cell.key(cfg.prior), trial as u64);
    let blank = |pred: &Prediction, method: &Method| ResultRow {
        gamma: cell.gamma(),
        beta: cell.beta(),
        lambda: cell.lambda,
        kernel: method.label(),
        t: pred.t,
        trial,
        seed,
        lambda1: None,
        lambda2: None,
        gap: None,
        cos2: None,
        detected: None,
        support_score: None,
        exact_recovery: None,
        theory_lambda: pred.lambda,
        theory_cos2: pred.cos2,
        runtime_ms: None,
        error: None,
    };
    let data = ModelParams::new(cell.n, cell.p, cell.m, cell.lambda, cfg.prior, seed).and_then(|params| {
        let v = make_spike(cell.p, cell.m, cfg.prior, seed)?;
        let cov = sample_covariance(&params, &v)?;
        Ok((v, cov))
    });
    let (v, cov) = match data {
        Ok(d) => d,
        Err(e) => {
            return plan
                .methods
                .iter()
                .zip(preds)
                .map(|(m, p)| ResultRow {
                    error: Some(e.to_string()),
                    ..blank(p, m)
                })
                .collect();
        }
    };

    let mut out = Vec::with_capacity(plan.methods.len());
    for (method, pred) in plan.methods.iter().zip(preds) {
        let mut row = blank(pred, method);
        let start = Instant::now();
        let result: Result<(SpectralEstimate, Option<f64>, Option<f64>)> = match method {
            Method::Pca => pca(&cov.y, Some(&v)).map(|e| (e, pred.edge, pred.detect_eps)),
            Method::Kernel(spec) => gct(&cov.y, cell.n, spec, Some(&v)).map(|e| (e, pred.edge, pred.detect_eps)),
            Method::SoftStar => match &pred.spec {
                Some(spec) => gct(&cov.y, cell.n, spec, Some(&v)).map(|e| (e, pred.edge, pred.detect_eps)),
                None => Err(GctError::Numeric(
                    pred.error.clone().unwrap_or_else(|| "t_* unavailable".into()),
                )),
            },
            Method::Adaptive => adaptive_threshold(&cov.y, cell.n, &cfg.adaptive_grid, Some(&v)).and_then(|(t, e)| {
                row.t = Some(t);
                let spec = KernelSpec::soft(t)?;
                let edge = bulk_edge(spec.a1(), spec.nu2, cell.gamma())?.lambda_plus;
                Ok((e, Some(edge), None))
            }),
        };
        let recovered = result.and_then(|(est, edge, eps)| {
            let support = if cfg.mode == Mode::Recover {
                let s = recover_support(&est.u1, cell.n, cfg.eps_exponent)?;
                Some((support_score(&s, &v), exact_recovery(&s, &v)))
            } else {
                None
            };
            Ok((est, edge, eps, support))
        });
        if cfg.record_runtime {
            row.runtime_ms = Some(ms_since(start));
        }
        match recovered {
            Ok((est, edge, eps, support)) => {
                row.lambda1 = Some(est.lambda1);
                row.lambda2 = Some(est.lambda2);
                row.gap = Some(est.gap);
                row.cos2 = est.cos2;
                let eps = cfg.detect_eps.or(eps);
                row.detected = edge.zip(eps).map(|(edge, eps)| est.lambda1 > edge + eps);
                if let Some((score, exact)) = support {
                    row.support_score = Some(score);
                    row.exact_recovery = Some(exact);
                }
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        out.push(row);
    }
    out
}

fn stat_entry(stats: &mut BTreeMap<String, Stat>, name: &str, values: Vec<f64>) {
    if let Some(s) = Stat::of(&values) {
        stats.insert(name.to_string(), s);
    }
}

fn flag(x: Option<bool>) -> Option<f64> {
    x.map(|b| if b { 1.0 } else { 0.0 })
}

fn summarize_trials(cell: &Cell, rows: &[ResultRow]) -> CellSummary {
    let col = |f: &dyn Fn(&ResultRow) -> Option<f64>| -> Vec<f64> { rows.iter().filter_map(f).collect() };
    let mut stats = BTreeMap::new();
    stat_entry(&mut stats, "lambda1", col(&|r| r.lambda1));
    stat_entry(&mut stats, "lambda2", col(&|r| r.lambda2));
    stat_entry(&mut stats, "gap", col(&|r| r.gap));
    stat_entry(&mut stats, "cos2", col(&|r| r.cos2));
    stat_entry(&mut stats, "detected", col(&|r| flag(r.detected)));
    stat_entry(&mut stats, "support_score", col(&|r| r.support_score));
    stat_entry(&mut stats, "exact_recovery", col(&|r| flag(r.exact_recovery)));
    stat_entry(&mut stats, "t", col(&|r| r.t));
    stat_entry(&mut stats, "runtime_ms", col(&|r| r.runtime_ms));
    let first = &rows[0];
    let shared_t = first
        .t
        .filter(|t| rows.iter().all(|r| r.t.map(f64::to_bits) == Some(t.to_bits())));
    CellSummary {
        n: cell.n,
        p: cell.p,
        m: Some(cell.m),
        gamma: cell.gamma(),
        beta: Some(cell.beta()),
        lambda: Some(cell.lambda),
        kernel: first.kernel.clone(),
        t: shared_t,
        trials: rows.len(),
        failed: rows.iter().filter(|r| r.error.is_some()).count(),
        stats,
        theory_lambda: first.theory_lambda,
        theory_cos2: first.theory_cos2,
    }
}

fn run_diagnose(plan: &Plan) -> (Vec<DiagnoseRow>, Vec<CellSummary>) {
    let cfg = &plan.config;
    let nm = plan.methods.len();
    let tasks: Vec<(usize, usize, usize)> = (0..plan.cells.len())
        .flat_map(|c| (0..nm).flat_map(move |m| (0..cfg.trials).map(move |t| (c, m, t))))
        .collect();
    let rows: Vec<DiagnoseRow> = tasks
        .par_iter()
        .map(|&(ci, mi, trial)| {
            let cell = &plan.cells[ci];
            let Method::Kernel(spec) = &plan.methods[mi] else {
                unreachable!("plan admits explicit kernels only")
            };
            let seed = trial_seed(cfg.base_seed, &cell.key(cfg.prior), trial as u64);
            let mut row = DiagnoseRow {
                gamma: cell.gamma(),
                n: cell.n,
                p: cell.p,
                kernel: spec.to_string(),
                trial,
                seed,
                z: None,
                lambda_plus: None,
                predicted: None,
                observed: None,
                deviations: None,
                error: None,
            };
            let u = nalgebra::DVector::from_vec(Stream::new(seed, AUX_STREAM).unit_vector(cell.p));
            let check = bulk_edge(spec.a1(), spec.nu2, cell.gamma())
                .and_then(|law| quadratic_form_check(cell.n, cell.p, spec, law.lambda_plus + cfg.z_offset, &u, &u, seed));
            match check {
                Ok(c) => {
                    row.z = Some(c.z);
                    row.lambda_plus = Some(c.lambda_plus);
                    row.predicted = Some([c.s, c.s_breve, c.s_ring]);
                    row.observed = Some(c.observed);
                    row.deviations = Some(c.deviations);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();
    let mut cells = vec![];
    for (k, chunk) in rows.chunks(cfg.trials).enumerate() {
        let cell = &plan.cells[k / nm];
        let mut stats = BTreeMap::new();
        for (i, name) in ["dev_r", "dev_sr", "dev_srs"].iter().enumerate() {
            stat_entry(&mut stats, name, chunk.iter().filter_map(|r| r.deviations.map(|d| d[i])).collect());
        }
        cells.push(CellSummary {
            n: cell.n,
            p: cell.p,
            m: None,
            gamma: cell.gamma(),
            beta: None,
            lambda: None,
            kernel: chunk[0].kernel.clone(),
            t: plan.methods[k % nm].fixed_t(),
            trials: chunk.len(),
            failed: chunk.iter().filter(|r| r.error.is_some()).count(),
            stats,
            theory_lambda: None,
            theory_cos2: None,
        });
    }
    (rows, cells)
}

fn run_curve(plan: &Plan) -> Result<Vec<CurveRow>> {
    let family = SoftFamily::new(&plan.config.t_grid)?;
    let search = OptSearch::default();
    Ok(plan
        .gamma_beta
        .par_iter()
        .map(|&(gamma, beta)| {
            let mut row = CurveRow {
                gamma,
                beta,
                lambda_star: None,
                a1_star: None,
                lambda_s_star: None,
                t_star: None,
                error: None,
            };
            let mut errors = vec![];
            match lambda_star_opt(gamma, beta, &search) {
                Ok(o) => {
                    row.lambda_star = Some(o.lambda_star);
                    row.a1_star = Some(o.a1);
                }
                Err(e) => errors.push(e.to_string()),
            }
            match family.lambda_star(gamma, beta) {
                Ok((l, t)) => {
                    row.lambda_s_star = Some(l);
                    row.t_star = Some(t);
                }
                Err(e) => errors.push(e.to_string()),
            }
            if !errors.is_empty() {
                row.error = Some(errors.join("; "));
            }
            row
        })
        .collect())
}

fn run_phase(plan: &Plan) -> Result<Vec<PhaseRow>> {
    let stars = StarCache::build(plan, &plan.gamma_beta)?;
    let lambdas = &plan.config.lambda;
    let mut tasks = vec![];
    for &(g, b) in &plan.gamma_beta {
        for &l in lambdas {
            for m in &plan.methods {
                tasks.push((g, b, l, m));
            }
        }
    }
    Ok(tasks
        .par_iter()
        .map(|&(gamma, beta, lambda, method)| {
            let p = predict(method, &stars, gamma, beta, lambda);
            let regime = match (method, p.regime) {
                (Method::Pca, _) => Some(if p.cos2 > Some(0.0) { "bbp-informative" } else { "bbp-bulk" }.to_string()),
                (_, Some(r)) => serde_json::to_value(r).ok().and_then(|v| v.as_str().map(str::to_string)),
                _ => None,
            };
            PhaseRow {
                gamma,
                beta,
                lambda,
                kernel: method.label(),
                t: p.t,
                regime,
                tau: p.tau,
                lambda_plus: p.edge,
                theory_lambda: p.lambda,
                theory_cos2: p.cos2,
                error: p.error,
            }
        })
        .collect())
}
