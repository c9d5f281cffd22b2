//! Subcommand drivers and the exit-code contract.
//!
//! Exit 0 on success, 1 when output cannot be written, 2 for bad input
//! data or arguments, 3 for numerical failure (the message names the
//! stage) or when more than half of the simulated replications fail.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use icselect::info::{estimate, InfoMethod};
use icselect::lasso::{extract_selection, lasso_fit_with, LassoOptions, PenaltyConfig};
use icselect::npmle::ProfileSolver;
use icselect::selective::{infer_all, InferenceReport};
use icselect::sim::oracle::gaussian_linear_oracle;
use icselect::sim::{run_replications, CoverageTable, QqOutput, SimScenario};

use crate::cli::{Cli, Command, FitArgs, InferArgs, LambdaArgs, MethodArgs, OracleArgs, SimArgs};
use crate::csvio::{read_csv, Table};
use crate::json;

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn data(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    /// Input problems keep code 2; anything else is numerical.
    fn at(stage: &str, e: icselect::Error) -> Self {
        let message = format!("{stage}: {e}");
        if e.is_data_error() {
            Self::data(message)
        } else {
            Self::numeric(message)
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn dispatch(cli: Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::data(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Infer(a) => cmd_infer(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Qq(a) => cmd_qq(&a),
        Command::Oracle(a) => cmd_oracle(&a),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::io(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::io(format!("cannot write to standard output: {e}"))),
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// `None` when no penalty flag was given.
fn penalty_from(args: &LambdaArgs, n: usize) -> Result<Option<PenaltyConfig>, Failure> {
    let p = if let Some(l) = args.lambda {
        PenaltyConfig::fixed(l)
    } else if let Some(c) = args.lambda_c {
        PenaltyConfig::c_sqrt_n(c, n)
    } else if let Some(a) = args.lambda_aic {
        PenaltyConfig::aic_grid(PenaltyConfig::log_grid(a.lo, a.hi, a.k))
    } else {
        return Ok(None);
    };
    p.map(Some).map_err(|e| Failure::at("penalty", e))
}

fn check_methods(m: &MethodArgs) -> Result<(), Failure> {
    if !(m.alpha > 0.0 && m.alpha < 1.0) {
        return Err(Failure::data(format!("--alpha must lie in (0, 1), got {}", m.alpha)));
    }
    if !(m.epsilon > 0.0 && m.epsilon.is_finite()) {
        return Err(Failure::data(format!("--epsilon must be positive, got {}", m.epsilon)));
    }
    Ok(())
}

fn fit_table(table: &Table, args: &FitArgs) -> Result<(ProfileSolver, icselect::lasso::LassoFit), Failure> {
    let n = table.data.n();
    // the default AIC grid spans [0.1 sqrt n, 30 sqrt n]
    let penalty = match penalty_from(&args.lambda, n)? {
        Some(p) => p,
        None => PenaltyConfig::aic_grid(PenaltyConfig::default_aic_grid(n)).map_err(|e| Failure::at("penalty", e))?,
    };
    let penalty = penalty.resolve(&table.data).map_err(|e| Failure::at("AIC penalty search", e))?;
    let solver = ProfileSolver::new(&table.data).map_err(|e| Failure::at("maximal intersections", e))?;
    let fit = lasso_fit_with(&solver, &penalty, None, LassoOptions::default()).map_err(|e| Failure::at("lasso fit", e))?;
    if !fit.converged {
        return Err(Failure::numeric(format!(
            "lasso fit: no convergence after {} iterations (KKT residual {:e})",
            fit.iterations, fit.kkt_active_residual
        )));
    }
    Ok((solver, fit))
}

pub fn cmd_fit(args: &FitArgs) -> Result<(), Failure> {
    let table = read_csv(&args.input)?;
    let (_, fit) = fit_table(&table, args)?;
    emit(args.output.as_deref(), &pretty(&json::fit_document(&fit, &table.names)))
}

pub fn cmd_infer(args: &InferArgs) -> Result<(), Failure> {
    let m = &args.methods;
    check_methods(m)?;
    let table = read_csv(&args.fit.input)?;
    let (_, fit) = fit_table(&table, &args.fit)?;
    let sel = extract_selection(&fit).map_err(|e| Failure::at("selection", e))?;
    let onestep = m.info_onestep.unwrap_or(InfoMethod::Spres);
    let pivot = m.info_pivot.unwrap_or(InfoMethod::Spres);
    let report = if sel.is_empty() {
        InferenceReport {
            coordinates: Vec::new(),
            failures: Vec::new(),
            alpha: m.alpha,
            method_onestep: onestep,
            method_pivot: pivot,
            min_eig_mm_onestep: None,
            min_eig_mm_pivot: None,
            status: Some("nothing selected".into()),
        }
    } else {
        let info = |method: InfoMethod| {
            estimate(method, &table.data, &fit, m.epsilon).map_err(|e| Failure::at(&format!("information ({method})"), e))
        };
        let one = info(onestep)?;
        let piv = if pivot == onestep { one.clone() } else { info(pivot)? };
        infer_all(&fit, &sel, &one, &piv, m.alpha).map_err(|e| Failure::at("selective inference", e))?
    };
    let doc = json::infer_document(&fit, &sel, &report, &table.names, m.epsilon);
    emit(args.fit.output.as_deref(), &pretty(&doc))?;
    if !sel.is_empty() && report.coordinates.is_empty() {
        let (_, e) = &report.failures[0];
        return Err(Failure::numeric(format!("selective inference failed for every selected coordinate: {e}")));
    }
    Ok(())
}

fn seed_or_draw(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

fn scenario(args: &SimArgs) -> Result<SimScenario, Failure> {
    let m = &args.methods;
    check_methods(m)?;
    let mut s = SimScenario::preset_with(args.scenario, args.n, args.reading);
    s.reps = args.reps;
    s.seed = seed_or_draw(args.seed);
    s.alpha = m.alpha;
    s.epsilon = m.epsilon;
    if let Some(x) = m.info_onestep {
        s.info_onestep = x;
    }
    if let Some(x) = m.info_pivot {
        s.info_pivot = x;
    }
    if let Some(p) = penalty_from(&args.lambda, args.n)? {
        s.penalty = p;
    }
    s.validate().map_err(|e| Failure::at("scenario", e))?;
    Ok(s)
}

fn check_failure_rate(table: &CoverageTable) -> Result<(), Failure> {
    if table.failure_rate() > 0.5 {
        let tags: Vec<String> = table.failure_counts.iter().map(|(k, v)| format!("{k} x{v}")).collect();
        return Err(Failure::numeric(format!(
            "replications: {} of {} failed ({}); check the configuration",
            table.failures,
            table.reps,
            tags.join(", ")
        )));
    }
    Ok(())
}

pub fn cmd_simulate(args: &SimArgs) -> Result<(), Failure> {
    let s = scenario(args)?;
    let results = run_replications(&s);
    let table = CoverageTable::from_results(&s, &results);
    emit(args.output.as_deref(), &table.to_csv())?;
    eprintln!(
        "{} reps, {} screened, {} failed, lambda {}",
        table.reps,
        table.screened,
        table.failures,
        results.first().map_or(f64::NAN, |r| r.lambda)
    );
    check_failure_rate(&table)
}

pub fn cmd_qq(args: &SimArgs) -> Result<(), Failure> {
    let s = scenario(args)?;
    let results = run_replications(&s);
    let q = QqOutput::from_results(&results);
    emit(args.output.as_deref(), &q.to_csv())?;
    match (q.ks, &q.status) {
        (Some(ks), _) => eprintln!("{} pooled null p-values, KS {ks}", q.pvalues.len()),
        (None, Some(status)) => eprintln!("{status}"),
        _ => {}
    }
    check_failure_rate(&CoverageTable::from_results(&s, &results))
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<(), Failure> {
    let seed = seed_or_draw(args.seed);
    let out = gaussian_linear_oracle(args.n, args.beta.len(), &args.beta, args.sigma, args.lambda, args.reps, seed)
        .map_err(|e| Failure::at("oracle", e))?;
    let mut csv = String::new();
    let header: Vec<String> = out.selection.model.iter().map(|j| format!("x{}", j + 1)).collect();
    csv.push_str(&header.join(","));
    csv.push('\n');
    for row in &out.pivots {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(csv, "{}", cells.join(","));
    }
    emit(args.output.as_deref(), &csv)?;
    eprintln!("{} draws accepted of {}, KS {}", out.pivots.len(), out.draws_used, out.ks);
    Ok(())
}
