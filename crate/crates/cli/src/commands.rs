use std::path::Path;

use serde_json::{json, Value};
use sparsecert::certify::{
    check_condition_cs, gamma_s_bruteforce, opt_bar, BruteForceOptions, Certificate, CsOutcome, LowRankOptions,
    Method, VerdictStatus,
};
use sparsecert::engine::SolveStatus;
use sparsecert::norms::NormTag;
use sparsecert::recovery::{
    error_bound, recover_penalized, recover_regular, Backend, BoundMode, ErrorBudget, RecoveryOptions,
    RecoveryProblem,
};
use sparsecert::structures::{
    build_structure, verify_axioms, verify_pairing, RepresentationMap, SparsityStructure, StructureSpec,
};

use crate::experiment::{self, CertMethod};
use crate::io::{self, input_err};
use crate::{BackendArg, Cli, CliError, Command, MethodArg, ModeArg, Outcome};

pub fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Recover { problem, mode, lambda, backend, output } => {
            recover(problem, *mode, *lambda, *backend, output.as_deref(), cli.tol)
        }
        Command::Certify { structure, matrix, s, phi, method, iterations, polish, check, with_matrices, output } => {
            certify(
                &CertifyArgs {
                    structure,
                    matrix,
                    s: *s,
                    phi,
                    method: *method,
                    iterations: *iterations,
                    polish: *polish,
                    check: *check,
                    with_matrices: *with_matrices,
                    output: output.as_deref(),
                },
                cli.seed,
            )
        }
        Command::Nullspace { structure, matrix, s, max_lps } => nullspace(structure, matrix, *s, *max_lps, cli.seed),
        Command::Bound { certificate, gamma, beta, mode, epsilon, delta_x, delta_phi, delta, lambda, phi_xi } => {
            let budget = ErrorBudget {
                epsilon: *epsilon,
                delta_x: *delta_x,
                delta_phi: *delta_phi,
                delta: *delta,
                lambda: *lambda,
                phi_xi: *phi_xi,
            };
            bound(certificate.as_deref(), *gamma, *beta, *mode, &budget)
        }
        Command::Experiment { config } => experiment::run(config, cli.tol),
        Command::Axioms { structure, trials } => axioms(structure, *trials, cli.seed),
    }
}

fn load_structure(path: &Path) -> Result<(SparsityStructure, RepresentationMap), CliError> {
    let spec: StructureSpec = io::read_json(path)?;
    Ok(build_structure(&spec)?)
}

fn parse_phi(s: &str) -> Result<NormTag, CliError> {
    serde_json::from_value(Value::String(s.to_lowercase()))
        .map_err(|_| CliError::Input(format!("unknown norm '{s}' (expected l1, l2 or linf)")))
}

fn recover(
    problem_path: &Path,
    mode: ModeArg,
    lambda: Option<f64>,
    backend: BackendArg,
    output: Option<&Path>,
    tol: Option<f64>,
) -> Result<Outcome, CliError> {
    let file: io::ProblemFile = io::read_json(problem_path)?;
    let (structure, b) = build_structure(&file.structure)?;
    let a = file.a.load(&io::base_dir(problem_path))?;
    let problem = RecoveryProblem {
        a,
        b,
        y: io::vector(&file.y),
        phi: file.phi,
        epsilon: file.epsilon,
    };
    let mut options = RecoveryOptions {
        backend: match backend {
            BackendArg::Auto => Backend::Auto,
            BackendArg::Lp => Backend::Lp,
            BackendArg::Split => Backend::Split,
        },
        ..Default::default()
    };
    if let Some(t) = tol {
        options.split.tol = t;
    }
    let result = match mode {
        ModeArg::Regular => {
            if lambda.is_some() {
                return Err(input_err("--lambda only applies to --mode penalized").into());
            }
            recover_regular(&problem, &structure, &options)
        }
        ModeArg::Penalized => {
            let lambda = lambda.ok_or_else(|| input_err("--mode penalized needs --lambda"))?;
            recover_penalized(&problem, &structure, lambda, &options)
        }
    };
    let result = match result {
        Err(sparsecert::Error::Infeasible) => {
            return Ok(Outcome {
                code: 3,
                json: json!({ "status": "infeasible" }),
                lines: vec!["status: infeasible (no u with phi(Au - y) <= epsilon)".into()],
            })
        }
        other => other?,
    };
    if let Some(p) = output {
        io::write_json(p, &result)?;
    }
    let code = match result.report.status {
        SolveStatus::Optimal => 0,
        SolveStatus::MaxIter => 2,
        SolveStatus::Infeasible => 3,
        SolveStatus::Unbounded => 1,
    };
    let lines = vec![
        format!("status: {:?}", result.report.status).to_lowercase(),
        format!("backend: {:?}", result.backend).to_lowercase(),
        format!("objective: {}", result.objective),
        format!("delta: {}, delta_phi: {}", result.delta, result.delta_phi),
        format!("x_hat: {:?}", result.x_hat),
    ];
    Ok(Outcome { code, json: serde_json::to_value(&result).expect("serializable"), lines })
}

struct CertifyArgs<'a> {
    structure: &'a Path,
    matrix: &'a Path,
    s: f64,
    phi: &'a str,
    method: MethodArg,
    iterations: usize,
    polish: usize,
    check: usize,
    with_matrices: bool,
    output: Option<&'a Path>,
}

fn certify(args: &CertifyArgs, seed: u64) -> Result<Outcome, CliError> {
    let (structure, b) = load_structure(args.structure)?;
    let a = io::read_matrix(args.matrix)?;
    let phi = parse_phi(args.phi)?;
    let method = match args.method {
        MethodArg::Auto => CertMethod::Auto,
        MethodArg::ColumnLp => CertMethod::ColumnLp,
        MethodArg::Ubar => CertMethod::Ubar,
        MethodArg::Ustar => CertMethod::Ustar,
    };
    let lowrank = LowRankOptions { iterations: args.iterations, polish_steps: args.polish, ..Default::default() };
    let cert = experiment::certificate_for(&a, &b, &structure, args.s, phi, method, &lowrank)?;
    let mut lines = vec![
        format!("method: {:?}", cert.method),
        format!("gamma: {}", cert.gamma),
        format!("beta: {}", cert.beta),
        format!("valid: {}", cert.valid),
    ];
    let mut report = json!({ "certificate": cert.clone().without_matrices() });
    if let SparsityStructure::LowRank(shape) = &structure {
        let w = cert.w.as_ref().expect("low-rank certificates carry W");
        let bar = opt_bar(w, shape.p, shape.q, args.s)?;
        lines.push(format!("gamma_bar: {bar}"));
        report["gamma_bar"] = json!(bar);
        if cert.method == Method::LowRankUStar {
            report["gamma_star"] = json!(cert.gamma);
        }
    }
    if let Some(r) = cert.identity_residual(&a, &b) {
        lines.push(format!("identity residual: {r:e}"));
        report["identity_residual"] = json!(r);
    }
    let mut code = if cert.valid { 0 } else { 4 };
    if args.check > 0 {
        let out = check_condition_cs(&a, &b, &structure, args.s, cert.gamma, cert.beta, phi, args.check, seed)?;
        match out {
            CsOutcome::Ok { trials, worst_margin } => {
                lines.push(format!("check: ok over {trials} draws (worst margin {worst_margin:e})"));
                report["check"] = json!({ "ok": true, "trials": trials, "worst_margin": worst_margin });
            }
            CsOutcome::Violation { trial, lhs, rhs, .. } => {
                lines.push(format!("check: violation at draw {trial} ({lhs} > {rhs})"));
                report["check"] = json!({ "ok": false, "trial": trial, "lhs": lhs, "rhs": rhs });
                code = 4;
            }
        }
    }
    if let Some(p) = args.output {
        let written: Certificate = if args.with_matrices { cert } else { cert.without_matrices() };
        io::write_json(p, &written)?;
        lines.push(format!("wrote {}", p.display()));
    }
    Ok(Outcome { code, json: report, lines })
}

fn nullspace(structure_path: &Path, matrix: &Path, s: f64, max_lps: usize, seed: u64) -> Result<Outcome, CliError> {
    let (structure, _) = load_structure(structure_path)?;
    let a = io::read_matrix(matrix)?;
    let opts = BruteForceOptions { max_lps, seed, ..Default::default() };
    let v = gamma_s_bruteforce(&a, &structure, s, &opts)?;
    let status = match v.status {
        VerdictStatus::CertifiedGood => "certified_good",
        VerdictStatus::CertifiedBad => "certified_bad",
        VerdictStatus::Unknown => "unknown",
    };
    let witness = v.witness.as_ref().map(|w| w.as_slice().to_vec());
    let mut lines = vec![format!("status: {status}")];
    if v.exact() {
        lines.push(format!("gamma_s: {}", v.gamma_lo));
    } else {
        lines.push(format!("gamma_s in [{}, {}]", v.gamma_lo, v.gamma_hi));
    }
    if let Some(w) = &witness {
        lines.push(format!("witness: {w:?}"));
    }
    if let Some(e) = &v.explanation {
        lines.push(format!("note: {e}"));
    }
    let json = json!({
        "status": status,
        "gamma_lo": v.gamma_lo,
        "gamma_hi": v.gamma_hi,
        "witness": witness,
        "explanation": v.explanation,
    });
    Ok(Outcome { code: 0, json, lines })
}

fn bound(
    certificate: Option<&Path>,
    gamma: Option<f64>,
    beta: Option<f64>,
    mode: ModeArg,
    budget: &ErrorBudget,
) -> Result<Outcome, CliError> {
    let (gamma, beta) = match certificate {
        Some(p) => {
            if gamma.is_some() || beta.is_some() {
                return Err(input_err("give either --certificate or --gamma/--beta").into());
            }
            let c: Certificate = io::read_json(p)?;
            (c.gamma, c.beta)
        }
        None => (
            gamma.ok_or_else(|| input_err("--gamma is required"))?,
            beta.ok_or_else(|| input_err("--beta is required"))?,
        ),
    };
    let mode = match mode {
        ModeArg::Regular => BoundMode::Regular,
        ModeArg::Penalized => BoundMode::Penalized,
    };
    let value = error_bound(gamma, beta, budget, mode)?;
    Ok(Outcome {
        code: 0,
        json: json!({ "bound": value, "gamma": gamma, "beta": beta }),
        lines: vec![format!("bound: {value}")],
    })
}

fn axioms(structure_path: &Path, trials: usize, seed: u64) -> Result<Outcome, CliError> {
    let (structure, b) = load_structure(structure_path)?;
    let ax = verify_axioms(&structure, trials, seed)?;
    let pairing = verify_pairing(&structure, &b, trials, seed)?;
    let passed = ax.passed() && pairing.violations == 0;
    let lines = vec![
        format!(
            "axioms: {} violations in {} trials (worst margins {:e}, {:e}, {:e})",
            ax.violations.len(),
            ax.trials,
            ax.worst_margin[0],
            ax.worst_margin[1],
            ax.worst_margin[2]
        ),
        format!(
            "pairing inequality: {} violations in {} trials (worst margin {:e})",
            pairing.violations, pairing.trials, pairing.worst_margin
        ),
    ];
    let json = json!({
        "passed": passed,
        "axioms": { "trials": ax.trials, "violations": ax.violations.len(), "worst_margin": ax.worst_margin },
        "pairing": { "trials": pairing.trials, "violations": pairing.violations, "worst_margin": pairing.worst_margin },
    });
    Ok(Outcome { code: if passed { 0 } else { 4 }, json, lines })
}
