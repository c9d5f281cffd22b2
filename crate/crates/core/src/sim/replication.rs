use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::Result;
use crate::info::estimate;
use crate::lasso::{extract_selection, lasso_fit_with, LassoOptions, SelectionEvent};
use crate::npmle::ProfileSolver;
use crate::selective::{infer_all, InferenceReport};
use crate::stats::{ks_uniform, uniform_quantiles};

use super::{gen_dataset, replication_rng, SimScenario};

/// Outcome of one simulated dataset.
#[derive(Debug, Clone)]
pub struct ReplicationResult {
    pub rep: usize,
    pub lambda: f64,
    pub right_censored: f64,
    pub selection: Option<SelectionEvent>,
    /// Every signal index is selected.
    pub screened: bool,
    pub report: Option<InferenceReport>,
    /// `(index, covered)` for each selected coordinate; empty unless screened.
    pub covered: Vec<(usize, bool)>,
    /// p-values of selected noise coordinates; empty unless screened.
    pub null_pvalues: Vec<f64>,
    pub failure: Option<&'static str>,
    pub failure_message: Option<String>,
}

impl ReplicationResult {
    fn failed(rep: usize, lambda: f64, rc: f64, e: crate::Error) -> Self {
        Self {
            rep,
            lambda,
            right_censored: rc,
            selection: None,
            screened: false,
            report: None,
            covered: Vec::new(),
            null_pvalues: Vec::new(),
            failure: Some(e.tag()),
            failure_message: Some(e.to_string()),
        }
    }

    /// Counts toward coverage.
    pub fn usable(&self) -> bool {
        self.screened && self.failure.is_none()
    }
}

/// Runs replication `rep` on its own random stream.
pub fn run_replication(scenario: &SimScenario, rep: usize) -> ReplicationResult {
    let mut rng = replication_rng(scenario.seed, rep as u64);
    let data = match gen_dataset(scenario, &mut rng) {
        Ok(d) => d,
        Err(e) => return ReplicationResult::failed(rep, f64::NAN, f64::NAN, e),
    };
    let rc = data.right_censored_fraction();
    let penalty = match scenario.penalty_for(data.n()).and_then(|p| p.resolve(&data)) {
        Ok(p) => p,
        Err(e) => return ReplicationResult::failed(rep, f64::NAN, rc, e),
    };
    let lambda = penalty.lambda;
    let solver = match ProfileSolver::new(&data) {
        Ok(s) => s,
        Err(e) => return ReplicationResult::failed(rep, lambda, rc, e),
    };
    let fit = match lasso_fit_with(&solver, &penalty, None, LassoOptions::default()) {
        Ok(f) => f,
        Err(e) => return ReplicationResult::failed(rep, lambda, rc, e),
    };
    let sel = match extract_selection(&fit) {
        Ok(s) => s,
        Err(e) => return ReplicationResult::failed(rep, lambda, rc, e),
    };
    let signals = scenario.signals();
    let screened = !sel.is_empty() && signals.iter().all(|j| sel.model.contains(j));
    let mut out = ReplicationResult {
        rep,
        lambda,
        right_censored: rc,
        selection: Some(sel.clone()),
        screened,
        report: None,
        covered: Vec::new(),
        null_pvalues: Vec::new(),
        failure: None,
        failure_message: None,
    };
    if sel.is_empty() {
        return out;
    }
    let infos = estimate(scenario.info_onestep, &data, &fit, scenario.epsilon).and_then(|one| {
        let piv = if scenario.info_pivot == scenario.info_onestep {
            one.clone()
        } else {
            estimate(scenario.info_pivot, &data, &fit, scenario.epsilon)?
        };
        Ok((one, piv))
    });
    let report = infos.and_then(|(one, piv)| infer_all(&fit, &sel, &one, &piv, scenario.alpha));
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            out.failure = Some(e.tag());
            out.failure_message = Some(e.to_string());
            return out;
        }
    };
    if let Some((_, e)) = report.failures.first() {
        out.failure = Some(e.tag());
        out.failure_message = Some(e.to_string());
    }
    if screened {
        for c in &report.coordinates {
            let truth = scenario.beta_star[c.index];
            out.covered.push((c.index, c.ci_low <= truth && truth <= c.ci_high));
            if truth == 0.0 {
                out.null_pvalues.push(c.p_value);
            }
        }
    }
    out.report = Some(report);
    out
}

/// All replications, in parallel, returned in replication order.
pub fn run_replications(scenario: &SimScenario) -> Vec<ReplicationResult> {
    (0..scenario.reps)
        .into_par_iter()
        .map(|r| run_replication(scenario, r))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    /// Zero-based coordinate.
    pub coordinate: usize,
    pub covered: usize,
    pub reps_used: usize,
}

impl CoverageRow {
    /// NaN when no replication was usable.
    pub fn coverage(&self) -> f64 {
        if self.reps_used == 0 {
            f64::NAN
        } else {
            self.covered as f64 / self.reps_used as f64
        }
    }
}

/// Conditional coverage per signal coordinate.
#[derive(Debug, Clone)]
pub struct CoverageTable {
    pub rows: Vec<CoverageRow>,
    pub reps: usize,
    pub screened: usize,
    pub failures: usize,
    pub failure_counts: BTreeMap<&'static str, usize>,
}

impl CoverageTable {
    pub fn from_results(scenario: &SimScenario, results: &[ReplicationResult]) -> Self {
        let rows = scenario
            .signals()
            .into_iter()
            .map(|j| {
                let mut row = CoverageRow {
                    coordinate: j,
                    covered: 0,
                    reps_used: 0,
                };
                for r in results.iter().filter(|r| r.usable()) {
                    if let Some((_, c)) = r.covered.iter().find(|(i, _)| *i == j) {
                        row.reps_used += 1;
                        row.covered += *c as usize;
                    }
                }
                row
            })
            .collect();
        let mut failure_counts = BTreeMap::new();
        for tag in results.iter().filter_map(|r| r.failure) {
            *failure_counts.entry(tag).or_insert(0) += 1;
        }
        Self {
            rows,
            reps: results.len(),
            screened: results.iter().filter(|r| r.screened).count(),
            failures: results.iter().filter(|r| r.failure.is_some()).count(),
            failure_counts,
        }
    }

    /// `coordinate,coverage,reps_used,failures` with one-based `x` names.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("coordinate,coverage,reps_used,failures\n");
        for r in &self.rows {
            let cov = r.coverage();
            let cov = if cov.is_nan() { String::new() } else { format!("{cov}") };
            let _ = writeln!(s, "x{},{},{},{}", r.coordinate + 1, cov, r.reps_used, self.failures);
        }
        s
    }

    pub fn failure_rate(&self) -> f64 {
        if self.reps == 0 {
            0.0
        } else {
            self.failures as f64 / self.reps as f64
        }
    }
}

/// Runs the scenario and tabulates coverage.
pub fn coverage_experiment(scenario: &SimScenario) -> Result<CoverageTable> {
    scenario.validate()?;
    Ok(CoverageTable::from_results(scenario, &run_replications(scenario)))
}

/// Pooled null p-values against uniform plotting positions.
#[derive(Debug, Clone)]
pub struct QqOutput {
    pub pvalues: Vec<f64>,
    pub uniform: Vec<f64>,
    pub ks: Option<f64>,
    pub status: Option<String>,
}

impl QqOutput {
    pub fn from_results(results: &[ReplicationResult]) -> Self {
        let mut pvalues: Vec<f64> = results
            .iter()
            .filter(|r| r.usable())
            .flat_map(|r| r.null_pvalues.iter().copied())
            .collect();
        pvalues.sort_by(f64::total_cmp);
        let uniform = uniform_quantiles(pvalues.len());
        let status = pvalues.is_empty().then(|| "no null coordinate was selected".to_string());
        Self {
            ks: ks_uniform(&pvalues),
            pvalues,
            uniform,
            status,
        }
    }

    /// `empirical_q,uniform_q`
    pub fn to_csv(&self) -> String {
        let mut s = String::from("empirical_q,uniform_q\n");
        for (e, u) in self.pvalues.iter().zip(&self.uniform) {
            let _ = writeln!(s, "{e},{u}");
        }
        s
    }
}

pub fn null_pvalue_qq(scenario: &SimScenario) -> Result<QqOutput> {
    scenario.validate()?;
    Ok(QqOutput::from_results(&run_replications(scenario)))
}
