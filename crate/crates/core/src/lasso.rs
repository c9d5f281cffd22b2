//! L1-penalised joint estimation of `(beta, Lambda)`.
//!
//! The objective is `P_n l(beta, Lambda) - (lambda / n) ||beta||_1`. The
//! nuisance is profiled out exactly: every candidate `beta` is paired with
//! its profile NPMLE, so the iteration is a proximal Newton ascent on the
//! penalised profile likelihood. The curvature is the profile Hessian
//! `H_bb - H_bL H_LL^{-1} H_Lb` over the positive jumps, and the proximal
//! subproblem is solved by coordinate descent, which yields exact zeros.

use nalgebra::DMatrix;

use crate::data::IntervalDataset;
use crate::error::{Error, Result};
use crate::hazard::{CoxParams, StepCumHazard};
use crate::npmle::{NpmleFit, NpmleOptions, ProfileSolver};

/// KKT tolerance on the mean scale.
pub const TOL_KKT: f64 = 1e-6;
pub const MAX_ITER: usize = 5000;

/// How the penalty level was chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaRule {
    Fixed,
    /// `lambda = C sqrt(n)`
    CSqrtN(f64),
    /// Minimum AIC over a grid of candidate values.
    AicGrid(Vec<f64>),
}

/// Penalty level `lambda`, applied as `(lambda / n) ||beta||_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyConfig {
    /// NaN for an unresolved AIC grid.
    pub lambda: f64,
    pub rule: LambdaRule,
}

impl PenaltyConfig {
    pub fn fixed(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self {
            lambda,
            rule: LambdaRule::Fixed,
        })
    }

    pub fn c_sqrt_n(c: f64, n: usize) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidArgument(format!("C must be >= 0, got {c}")));
        }
        Ok(Self {
            lambda: c * (n as f64).sqrt(),
            rule: LambdaRule::CSqrtN(c),
        })
    }

    pub fn aic_grid(grid: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::InvalidArgument(
                "AIC grid must be nonempty and positive".into(),
            ));
        }
        Ok(Self {
            lambda: f64::NAN,
            rule: LambdaRule::AicGrid(grid),
        })
    }

    /// `k` log-spaced values in `[lo, hi]`.
    pub fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
        if k == 1 {
            return vec![lo];
        }
        let (a, b) = (lo.ln(), hi.ln());
        (0..k)
            .map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp())
            .collect()
    }

    /// Twenty log-spaced points in `[0.1 sqrt(n), 30 sqrt(n)]`.
    pub fn default_aic_grid(n: usize) -> Vec<f64> {
        let s = (n as f64).sqrt();
        Self::log_grid(0.1 * s, 30.0 * s, 20)
    }

    pub fn is_resolved(&self) -> bool {
        self.lambda.is_finite()
    }

    /// Runs the AIC search when the rule requires it.
    pub fn resolve(self, data: &IntervalDataset) -> Result<Self> {
        match &self.rule {
            LambdaRule::AicGrid(grid) if !self.is_resolved() => {
                let lambda = select_lambda_aic(data, grid)?;
                Ok(Self { lambda, ..self })
            }
            _ => Ok(self),
        }
    }
}

/// Output of [`lasso_fit`].
#[derive(Debug, Clone)]
pub struct LassoFit {
    pub beta: Vec<f64>,
    pub lambda0: StepCumHazard,
    pub penalty: PenaltyConfig,
    /// `P_n l - (lambda / n) ||beta||_1`
    pub objective: f64,
    /// `P_n l(beta, Lambda)`
    pub mean_loglik: f64,
    /// Mean-scale score `P_n l_beta` at the fit.
    pub score: Vec<f64>,
    /// `max_{j active} |score_j - (lambda/n) sign(beta_j)|`
    pub kkt_active_residual: f64,
    /// `min_{j inactive} (lambda/n - |score_j|)`; `+inf` when nothing is inactive.
    pub kkt_inactive_slack: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The profile NPMLE hit its jump cap at the returned `beta`.
    pub capped: bool,
    /// Penalised objective after each accepted step.
    pub trace: Vec<f64>,
    pub n: usize,
}

impl LassoFit {
    pub fn params(&self) -> CoxParams {
        CoxParams {
            beta: self.beta.clone(),
            lambda0: self.lambda0.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LassoOptions {
    pub tol_kkt: f64,
    pub max_iter: usize,
    pub npmle: NpmleOptions,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tol_kkt: TOL_KKT,
            max_iter: MAX_ITER,
            npmle: NpmleOptions {
                tol: 1e-10,
                ..NpmleOptions::default()
            },
        }
    }
}

/// Selected model `M = {j : beta_j != 0}` and the signs of its coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionEvent {
    /// Zero-based, strictly increasing.
    pub model: Vec<usize>,
    pub signs: Vec<i8>,
}

impl SelectionEvent {
    pub fn is_empty(&self) -> bool {
        self.model.is_empty()
    }

    pub fn len(&self) -> usize {
        self.model.len()
    }

    pub fn signs_f64(&self) -> Vec<f64> {
        self.signs.iter().map(|&s| s as f64).collect()
    }

    /// Complement of the model in `0..p`.
    pub fn inactive(&self, p: usize) -> Vec<usize> {
        (0..p).filter(|j| !self.model.contains(j)).collect()
    }
}

/// Fits the lasso with the default options.
pub fn lasso_fit(
    data: &IntervalDataset,
    penalty: &PenaltyConfig,
    init: Option<&CoxParams>,
) -> Result<LassoFit> {
    let solver = ProfileSolver::new(data)?;
    lasso_fit_with(&solver, penalty, init, LassoOptions::default())
}

fn l1(beta: &[f64]) -> f64 {
    beta.iter().map(|b| b.abs()).sum()
}

fn kkt(beta: &[f64], score: &[f64], pen: f64) -> (f64, f64) {
    let mut active = 0.0f64;
    let mut slack = f64::INFINITY;
    for (b, g) in beta.iter().zip(score) {
        if *b != 0.0 {
            active = active.max((g - pen * b.signum()).abs());
        } else {
            slack = slack.min(pen - g.abs());
        }
    }
    (active, slack)
}

pub fn lasso_fit_with(
    solver: &ProfileSolver,
    penalty: &PenaltyConfig,
    init: Option<&CoxParams>,
    opts: LassoOptions,
) -> Result<LassoFit> {
    if !penalty.is_resolved() {
        return Err(Error::InvalidArgument(
            "penalty must be resolved to a concrete lambda before fitting".into(),
        ));
    }
    let (n, p) = (solver.n(), solver.p());
    let pen = penalty.lambda / n as f64;
    let mut beta = match init {
        Some(c) if c.beta.len() == p => c.beta.clone(),
        Some(c) => {
            return Err(Error::InvalidArgument(format!(
                "initial beta has length {}, expected {p}",
                c.beta.len()
            )))
        }
        None => vec![0.0; p],
    };
    let start = init.map(|c| solver.project(&c.lambda0));
    let mut np = solver.solve(&beta, start.as_deref(), opts.npmle)?;
    let mut capped = np.capped;
    let mut obj = np.mean_loglik - pen * l1(&beta);
    let mut trace = vec![obj];
    let mut last_change = f64::INFINITY;
    let mut mu = 0.0;

    let finish = |beta: Vec<f64>, np: NpmleFit, obj, iterations, converged, capped, trace| {
        let terms = solver.terms(&beta, np.hazard.jumps())?;
        let score = solver.idx.score_beta(&terms);
        let (act, slack) = kkt(&beta, &score, pen);
        Ok(LassoFit {
            beta,
            mean_loglik: np.mean_loglik,
            lambda0: np.hazard,
            penalty: penalty.clone(),
            objective: obj,
            score,
            kkt_active_residual: act,
            kkt_inactive_slack: slack,
            iterations,
            converged,
            capped,
            trace,
            n,
        })
    };

    for iter in 0..opts.max_iter {
        let terms = solver.terms(&beta, np.hazard.jumps())?;
        let score = solver.idx.score_beta(&terms);
        let (act, slack) = kkt(&beta, &score, pen);
        let kkt_ok = |tol: f64| act <= tol && slack >= -tol;
        if kkt_ok(opts.tol_kkt) && (last_change < 1e-10 || kkt_ok(1e-3 * opts.tol_kkt)) {
            return finish(beta, np, obj, iter, true, capped, trace);
        }

        let curvature = positive_curvature(&profile_hessian(solver, &beta, np.hazard.jumps())?);
        let scale = (0..p).map(|j| curvature[(j, j)]).fold(0.0, f64::max).max(1e-12);
        let mut accepted = false;
        loop {
            let mut b = curvature.clone();
            for j in 0..p {
                b[(j, j)] += mu;
            }
            let cand = prox_quadratic(&b, &score, &beta, pen);
            if cand == beta {
                break;
            }
            let np_c = solver.solve(&cand, Some(np.hazard.jumps()), opts.npmle)?;
            let obj_c = np_c.mean_loglik - pen * l1(&cand);
            if obj_c >= obj {
                last_change = obj_c - obj;
                capped |= np_c.capped;
                beta = cand;
                np = np_c;
                obj = obj_c;
                trace.push(obj);
                mu = if mu < 1e-8 * scale { 0.0 } else { mu * 0.1 };
                accepted = true;
                break;
            }
            mu = if mu == 0.0 { 1e-4 * scale } else { mu * 10.0 };
            if mu > 1e10 * scale {
                break;
            }
        }
        if !accepted {
            let converged = kkt_ok(opts.tol_kkt);
            if converged {
                return finish(beta, np, obj, iter, true, capped, trace);
            }
            return Err(Error::NonConvergence {
                stage: format!("lasso (lambda = {})", penalty.lambda),
                iterations: iter,
                gradient_norm: act.max(-slack),
            });
        }
    }
    Err(Error::NonConvergence {
        stage: format!("lasso (lambda = {})", penalty.lambda),
        iterations: opts.max_iter,
        gradient_norm: f64::NAN,
    })
}

/// Mean-scale Hessian of the profile log likelihood at `(beta, jumps)`,
/// holding zero jumps at zero.
pub(crate) fn profile_hessian(
    solver: &ProfileSolver,
    beta: &[f64],
    jumps: &[f64],
) -> Result<DMatrix<f64>> {
    let terms = solver.terms(beta, jumps)?;
    let (hbb, hbl) = solver.idx.cross_hessians(&terms);
    let free: Vec<usize> = (0..jumps.len()).filter(|&k| jumps[k] > 0.0).collect();
    if free.is_empty() {
        return Ok(hbb);
    }
    let hll = solver.idx.hess_jumps(&terms);
    let k = free.len();
    let neg = DMatrix::from_fn(k, k, |r, c| -hll[(free[r], free[c])]);
    let cross = DMatrix::from_fn(hbb.nrows(), k, |r, c| hbl[(r, free[c])]);
    let solved = match neg.clone().cholesky() {
        Some(ch) => ch.solve(&cross.transpose()),
        None => crate::linalg::pseudo_inverse_sym(&neg).0 * cross.transpose(),
    };
    // H_bb - H_bL H_LL^{-1} H_Lb with H_LL = -neg
    Ok(hbb + &cross * solved)
}

/// `-H` with eigenvalues floored so the proximal model is strictly convex.
fn positive_curvature(h: &DMatrix<f64>) -> DMatrix<f64> {
    let neg = -h;
    let sym = (&neg + neg.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let floor = (1e-8 * top).max(1e-12);
    let vals = eig.eigenvalues.map(|v| v.max(floor));
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Minimises `1/2 (b - beta)' B (b - beta) - g'(b - beta) + pen ||b||_1`
/// by cyclic coordinate descent.
fn prox_quadratic(b_mat: &DMatrix<f64>, g: &[f64], beta: &[f64], pen: f64) -> Vec<f64> {
    let p = beta.len();
    let q: Vec<f64> = (0..p)
        .map(|j| (0..p).map(|k| b_mat[(j, k)] * beta[k]).sum::<f64>() + g[j])
        .collect();
    let mut b = beta.to_vec();
    for _ in 0..100_000 {
        let mut delta = 0.0f64;
        for j in 0..p {
            let r = q[j]
                - (0..p)
                    .filter(|&k| k != j)
                    .map(|k| b_mat[(j, k)] * b[k])
                    .sum::<f64>();
            let new = soft_threshold(r, pen) / b_mat[(j, j)];
            delta = delta.max((new - b[j]).abs());
            b[j] = new;
        }
        let size = b.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        if delta <= 1e-15 * size {
            break;
        }
    }
    b
}

/// Reads off `(M, s_M)` and re-verifies the sign and inactive constraints
/// that characterise the selection event.
pub fn extract_selection(fit: &LassoFit) -> Result<SelectionEvent> {
    if !fit.converged {
        return Err(Error::KktViolation("fit did not converge".into()));
    }
    let model: Vec<usize> = (0..fit.beta.len()).filter(|&j| fit.beta[j] != 0.0).collect();
    let signs: Vec<i8> = model
        .iter()
        .map(|&j| if fit.beta[j] > 0.0 { 1 } else { -1 })
        .collect();
    for (&j, &s) in model.iter().zip(&signs) {
        if !(s as f64 * fit.beta[j] > 0.0) {
            return Err(Error::KktViolation(format!("sign constraint fails at coordinate {j}")));
        }
    }
    let n = fit.n as f64;
    let bound = fit.penalty.lambda * (1.0 + TOL_KKT) + n * 1e-9;
    for j in (0..fit.beta.len()).filter(|j| !model.contains(j)) {
        let v = (n * fit.score[j]).abs();
        if v > bound {
            return Err(Error::KktViolation(format!(
                "inactive coordinate {j}: |n score| = {v} exceeds lambda = {}",
                fit.penalty.lambda
            )));
        }
    }
    Ok(SelectionEvent { model, signs })
}

/// AIC path entry.
#[derive(Debug, Clone)]
pub struct AicPoint {
    pub lambda: f64,
    pub aic: f64,
    pub model_size: usize,
}

/// `AIC(lambda) = -2 n P_n l + 2 |M|` for every grid value (cold starts).
pub fn aic_path(data: &IntervalDataset, grid: &[f64]) -> Result<Vec<AicPoint>> {
    let solver = ProfileSolver::new(data)?;
    grid.iter()
        .map(|&lambda| {
            let fit = lasso_fit_with(
                &solver,
                &PenaltyConfig::fixed(lambda)?,
                None,
                LassoOptions::default(),
            )?;
            let size = fit.beta.iter().filter(|b| **b != 0.0).count();
            Ok(AicPoint {
                lambda,
                aic: -2.0 * data.n() as f64 * fit.mean_loglik + 2.0 * size as f64,
                model_size: size,
            })
        })
        .collect()
}

/// Grid value with minimum AIC; ties go to the larger (sparser) lambda.
pub fn select_lambda_aic(data: &IntervalDataset, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("AIC grid is empty".into()));
    }
    Ok(pick_min_aic(&aic_path(data, grid)?))
}

pub(crate) fn pick_min_aic(path: &[AicPoint]) -> f64 {
    let mut sorted: Vec<&AicPoint> = path.iter().collect();
    sorted.sort_by(|a, b| b.lambda.total_cmp(&a.lambda));
    let mut best = sorted[0];
    for pt in &sorted[1..] {
        if pt.aic < best.aic - 1e-9 * (1.0 + best.aic.abs()) {
            best = pt;
        }
    }
    best.lambda
}
