//! Bound-versus-error validation runs.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sparsecert::certify::{certify_lowrank, synth_certificate_group, Certificate, LowRankOptions, SynthOptions};
use sparsecert::linalg::{self, Mat, Vector};
use sparsecert::norms::{structure_norm, NormTag};
use sparsecert::recovery::{
    error_bound, recover_penalized, recover_regular, vector_phi, BoundMode, ErrorBudget, RecoveryOptions,
    RecoveryProblem,
};
use sparsecert::structures::{best_sparse_approx, build_structure, RepresentationMap, SparsityStructure, StructureSpec};
use sparsecert::trial_rng;

use crate::io::{self, input_err, InputError};
use crate::{CliError, Outcome};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SensingSpec {
    /// `m x dim(X)` with i.i.d. `N(0, 1/m)` entries.
    Gaussian { m: usize, seed: u64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Magnitude {
    /// Random signs, unit magnitudes.
    #[default]
    Unit,
    Gaussian,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub s: f64,
    #[serde(default)]
    pub magnitude: Magnitude,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(untagged)]
pub enum EpsilonSpec {
    Fixed(f64),
    /// Drawn uniformly from `(lo, hi]` per trial.
    Range([f64; 2]),
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLaw {
    /// `phi(xi) = epsilon * u` with `u` uniform in `[0, 1)`.
    #[default]
    UniformRadius,
    /// `phi(xi) = epsilon`.
    Boundary,
    None,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub epsilon: EpsilonSpec,
    #[serde(default)]
    pub law: NoiseLaw,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum RecoveryMode {
    Regular,
    Penalized,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum CertMethod {
    #[default]
    Auto,
    ColumnLp,
    Ubar,
    Ustar,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub csv: PathBuf,
    #[serde(default)]
    pub summary: Option<PathBuf>,
    /// Write the sensing matrix used by the run.
    #[serde(default)]
    pub matrix: Option<PathBuf>,
}

fn default_modes() -> Vec<RecoveryMode> {
    vec![RecoveryMode::Regular]
}

fn default_phi() -> NormTag {
    NormTag::L1
}

fn default_slack() -> f64 {
    1e-6
}

/// See `schemas/experiment.schema.json`.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub structure: StructureSpec,
    pub sensing: SensingSpec,
    pub signal: SignalSpec,
    pub noise: NoiseSpec,
    #[serde(default = "default_phi")]
    pub phi: NormTag,
    #[serde(default = "default_modes")]
    pub modes: Vec<RecoveryMode>,
    #[serde(default)]
    pub certificate: CertMethod,
    /// Penalty for penalized runs; defaults to `beta`.
    #[serde(default)]
    pub lambda: Option<f64>,
    pub trials: usize,
    /// Allowed excess of the measured error over the bound.
    #[serde(default = "default_slack")]
    pub slack: f64,
    pub output: OutputSpec,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), InputError> {
        if self.trials == 0 {
            return Err(input_err("trials must be >= 1"));
        }
        if self.modes.is_empty() {
            return Err(input_err("modes must not be empty"));
        }
        let (lo, hi) = match self.noise.epsilon {
            EpsilonSpec::Fixed(e) => (e, e),
            EpsilonSpec::Range([lo, hi]) => (lo, hi),
        };
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return Err(input_err("epsilon must be >= 0 (ranges need lo <= hi)"));
        }
        if !(self.signal.s >= 0.0) {
            return Err(input_err("signal sparsity must be >= 0"));
        }
        if !(self.slack >= 0.0) {
            return Err(input_err("slack must be >= 0"));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(input_err("lambda must be positive"));
            }
        }
        Ok(())
    }
}

/// A representation `Bx` fixed by a projector of weight at most `s`
/// (up to block overlaps), pulled back to `x`.
fn draw_signal<R: Rng>(
    rng: &mut R,
    structure: &SparsityStructure,
    b: &RepresentationMap,
    s: f64,
    law: Magnitude,
) -> Vector {
    let mag = |rng: &mut R| match law {
        Magnitude::Unit => {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
        Magnitude::Gaussian => rng.sample::<f64, _>(rand_distr::StandardNormal),
    };
    match structure {
        SparsityStructure::Plain { n } => {
            let k = (s.floor() as usize).min(*n);
            let mut x = Vector::zeros(*n);
            for i in rand::seq::index::sample(rng, *n, k) {
                x[i] = mag(rng);
            }
            x
        }
        SparsityStructure::Group(g) => {
            let mut order: Vec<usize> = (0..g.num_blocks()).collect();
            order.shuffle(rng);
            let mut used = 0.0;
            let mut x = Vector::zeros(g.n);
            for l in order {
                if used + g.weights[l] <= s {
                    used += g.weights[l];
                    for &i in &g.blocks[l] {
                        x[i] = mag(rng);
                    }
                }
            }
            x
        }
        SparsityStructure::LowRank(shape) => {
            let r = (s.floor() as usize).min(shape.q);
            let u = linalg::random_orthonormal(rng, shape.p, r);
            let v = linalg::random_orthonormal(rng, shape.q, r);
            let d = Mat::from_diagonal(&Vector::from_fn(r, |_, _| mag(rng)));
            let w = linalg::vec_of(&(u * d * v.transpose()));
            b.matrix.transpose() * w
        }
    }
}

fn draw_noise<R: Rng>(rng: &mut R, m: usize, phi: NormTag, eps: f64, law: NoiseLaw) -> Vector {
    let radius = match law {
        NoiseLaw::None => return Vector::zeros(m),
        NoiseLaw::Boundary => eps,
        NoiseLaw::UniformRadius => eps * rng.random::<f64>(),
    };
    let g = linalg::gaussian_vector(rng, m);
    let norm = phi.eval(&Mat::from_column_slice(m, 1, g.as_slice()));
    if norm == 0.0 || radius == 0.0 {
        Vector::zeros(m)
    } else {
        g * (radius / norm)
    }
}

fn draw_epsilon<R: Rng>(rng: &mut R, spec: EpsilonSpec) -> f64 {
    match spec {
        EpsilonSpec::Fixed(e) => e,
        EpsilonSpec::Range([lo, hi]) => lo + (hi - lo) * (1.0 - rng.random::<f64>()),
    }
}

pub fn certificate_for(
    a: &Mat,
    b: &RepresentationMap,
    structure: &SparsityStructure,
    s: f64,
    phi: NormTag,
    method: CertMethod,
    lowrank: &LowRankOptions,
) -> sparsecert::Result<Certificate> {
    let unsupported = |what: &str| {
        Err(sparsecert::Error::Unsupported(format!(
            "method {what} does not apply to the {} structure",
            structure.kind_name()
        )))
    };
    match (structure, method) {
        (SparsityStructure::LowRank(_), CertMethod::ColumnLp) => unsupported("column_lp"),
        (SparsityStructure::LowRank(_), CertMethod::Ubar) => {
            certify_lowrank(a, b, structure, s, phi, None, &LowRankOptions { iterations: 0, ..*lowrank })
        }
        (SparsityStructure::LowRank(_), _) => {
            let mut opts = *lowrank;
            if opts.iterations == 0 {
                opts.iterations = LowRankOptions::default().iterations;
            }
            certify_lowrank(a, b, structure, s, phi, None, &opts)
        }
        (_, CertMethod::Auto | CertMethod::ColumnLp) => {
            synth_certificate_group(a, b, structure, s, phi, &SynthOptions::default())
        }
        (_, CertMethod::Ubar) => unsupported("ubar"),
        (_, CertMethod::Ustar) => unsupported("ustar"),
    }
}

#[derive(Debug, Clone, Serialize)]
struct Row {
    trial: usize,
    mode: RecoveryMode,
    s: f64,
    epsilon: f64,
    gamma: f64,
    beta: f64,
    error: f64,
    bound: f64,
    margin: f64,
    status: String,
}

impl Row {
    fn csv(&self) -> String {
        let mode = match self.mode {
            RecoveryMode::Regular => "regular",
            RecoveryMode::Penalized => "penalized",
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.trial,
            mode,
            self.s,
            self.epsilon,
            self.gamma,
            self.beta,
            self.error,
            self.bound,
            self.margin,
            self.status
        )
    }
}

const CSV_HEADER: &str = "trial,mode,s,epsilon,gamma,beta,error,bound,margin,status";

struct Trial<'a> {
    cfg: &'a ExperimentConfig,
    structure: &'a SparsityStructure,
    b: &'a RepresentationMap,
    a: &'a Mat,
    cert: &'a Certificate,
    lambda: f64,
    options: &'a RecoveryOptions,
}

impl Trial<'_> {
    fn run(&self, index: usize) -> Vec<Row> {
        let cfg = self.cfg;
        let mut sig_rng = trial_rng(cfg.signal.seed, index as u64);
        let x = draw_signal(&mut sig_rng, self.structure, self.b, cfg.signal.s, cfg.signal.magnitude);
        let mut noise_rng = trial_rng(cfg.noise.seed, index as u64);
        let eps = draw_epsilon(&mut noise_rng, cfg.noise.epsilon);
        let xi = draw_noise(&mut noise_rng, self.a.nrows(), cfg.phi, eps, cfg.noise.law);
        let phi_xi = cfg.phi.eval(&Mat::from_column_slice(xi.len(), 1, xi.as_slice()));
        let y = self.a * &x + &xi;
        let bx = self.b.apply(&x);
        let delta_x = best_sparse_approx(self.structure, &bx, cfg.signal.s)
            .map(|r| r.delta_x)
            .unwrap_or(f64::NAN);
        let problem = RecoveryProblem {
            a: self.a.clone(),
            b: self.b.clone(),
            y,
            phi: cfg.phi,
            epsilon: eps,
        };
        cfg.modes
            .iter()
            .map(|&mode| {
                let (result, budget, bmode) = match mode {
                    RecoveryMode::Regular => (
                        recover_regular(&problem, self.structure, self.options),
                        ErrorBudget { epsilon: eps, delta_x, phi_xi, ..Default::default() },
                        BoundMode::Regular,
                    ),
                    RecoveryMode::Penalized => (
                        recover_penalized(&problem, self.structure, self.lambda, self.options),
                        ErrorBudget { epsilon: eps, delta_x, phi_xi, lambda: Some(self.lambda), ..Default::default() },
                        BoundMode::Penalized,
                    ),
                };
                let mut row = Row {
                    trial: index,
                    mode,
                    s: cfg.signal.s,
                    epsilon: eps,
                    gamma: self.cert.gamma,
                    beta: self.cert.beta,
                    error: f64::NAN,
                    bound: f64::NAN,
                    margin: f64::NAN,
                    status: String::new(),
                };
                match result {
                    Err(e) => row.status = format!("error: {e}").replace(',', ";"),
                    Ok(r) => {
                        let diff = self.b.apply(&(io::vector(&r.x_hat) - &x));
                        row.error = structure_norm(self.structure, &diff, false);
                        row.status = format!("{:?}", r.report.status).to_lowercase();
                        let budget = ErrorBudget { delta: r.delta, delta_phi: r.delta_phi, ..budget };
                        if let Ok(bound) = error_bound(self.cert.gamma, self.cert.beta, &budget, bmode) {
                            row.bound = bound;
                            row.margin = bound - row.error;
                        }
                    }
                }
                row
            })
            .collect()
    }
}

pub fn run(config_path: &Path, tol: Option<f64>) -> Result<Outcome, CliError> {
    let cfg: ExperimentConfig = io::read_json(config_path)?;
    cfg.validate()?;
    let base = io::base_dir(config_path);
    let (structure, b) = build_structure(&cfg.structure)?;
    vector_phi(cfg.phi)?;
    let a = match &cfg.sensing {
        SensingSpec::Gaussian { m, seed } => {
            if *m == 0 {
                return Err(input_err("sensing m must be >= 1").into());
            }
            linalg::gaussian_matrix(&mut trial_rng(*seed, 0), *m, structure.dim_x()) / (*m as f64).sqrt()
        }
        SensingSpec::File { path } => io::read_matrix(&io::resolve(&base, path))?,
    };
    if a.ncols() != structure.dim_x() {
        return Err(input_err(format!(
            "sensing matrix has {} columns, structure needs {}",
            a.ncols(),
            structure.dim_x()
        ))
        .into());
    }
    if let Some(p) = &cfg.output.matrix {
        io::write_text(&io::resolve(&base, p), &io::format_matrix_csv(&a))?;
    }
    let cert = certificate_for(&a, &b, &structure, cfg.signal.s, cfg.phi, cfg.certificate, &LowRankOptions::default())?;
    let lambda = cfg.lambda.unwrap_or(if cert.beta > 0.0 { cert.beta } else { 1.0 });
    if cfg.modes.contains(&RecoveryMode::Penalized) && lambda < cert.beta {
        return Err(input_err(format!("lambda = {lambda} is below beta = {}", cert.beta)).into());
    }
    let mut options = RecoveryOptions::default();
    if let Some(t) = tol {
        options.split.tol = t;
    }
    let trial = Trial {
        cfg: &cfg,
        structure: &structure,
        b: &b,
        a: &a,
        cert: &cert,
        lambda,
        options: &options,
    };
    let rows: Vec<Row> = (0..cfg.trials).into_par_iter().flat_map_iter(|i| trial.run(i)).collect();

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.csv());
        csv.push('\n');
    }
    let csv_path = io::resolve(&base, &cfg.output.csv);
    io::write_text(&csv_path, &csv)?;

    let failed = rows.iter().filter(|r| r.error.is_nan()).count();
    let checked: Vec<&Row> = rows.iter().filter(|r| !r.margin.is_nan()).collect();
    let violations = checked.iter().filter(|r| r.margin < -cfg.slack).count();
    let worst_margin = checked.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let max_error = rows.iter().map(|r| r.error).filter(|e| !e.is_nan()).fold(0.0, f64::max);
    let summary = json!({
        "trials": cfg.trials,
        "rows": rows.len(),
        "checked": checked.len(),
        "violations": violations,
        "failed_recoveries": failed,
        "worst_margin": if checked.is_empty() { Value::Null } else { json!(worst_margin) },
        "max_error": max_error,
        "slack": cfg.slack,
        "lambda": lambda,
        "certificate": cert.clone().without_matrices(),
        "csv": csv_path,
    });
    if let Some(p) = &cfg.output.summary {
        io::write_json(&io::resolve(&base, p), &summary)?;
    }
    let mut lines = vec![
        format!(
            "certificate: method {:?}, gamma {}, beta {}, valid {}",
            cert.method, cert.gamma, cert.beta, cert.valid
        ),
        format!("rows: {} ({} checked against the bound)", rows.len(), checked.len()),
        format!("max error: {max_error}"),
    ];
    if !checked.is_empty() {
        lines.push(format!("worst margin: {worst_margin}"));
    }
    lines.push(format!("violations: {violations}, failed recoveries: {failed}"));
    lines.push(format!("table: {}", csv_path.display()));
    let code = if !cert.valid {
        lines.push("certificate is not valid (gamma >= 1); bounds were not checked".into());
        4
    } else if violations > 0 || failed > 0 {
        6
    } else {
        0
    };
    Ok(Outcome { code, json: summary, lines })
}
