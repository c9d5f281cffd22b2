//! Profile NPMLE of the baseline cumulative hazard for fixed `beta`.
//!
//! For fixed `beta` the mean log likelihood is concave in the jump vector,
//! so a projected Newton method with an active set for the nonnegativity
//! constraints converges quadratically once the zero pattern settles.

use nalgebra::{DMatrix, DVector};

use crate::data::IntervalDataset;
use crate::error::{Error, Result};
use crate::hazard::StepCumHazard;
use crate::likelihood::{IndexedData, SubjectTerms};
use crate::turnbull::support_points;

/// Stationarity tolerance on the mean-scale jump gradient.
pub const TOL_NPMLE: f64 = 1e-8;
pub const MAX_ITER: usize = 5000;
/// Upper bound on any single jump; reaching it flags the fit.
pub const JUMP_CAP: f64 = 1e8;

#[derive(Debug, Clone, Copy)]
pub struct NpmleOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub jump_cap: f64,
}

impl Default for NpmleOptions {
    fn default() -> Self {
        Self {
            tol: TOL_NPMLE,
            max_iter: MAX_ITER,
            jump_cap: JUMP_CAP,
        }
    }
}

/// Result of one profile solve.
#[derive(Debug, Clone)]
pub struct NpmleFit {
    pub hazard: StepCumHazard,
    /// `P_n l(beta, hazard)`
    pub mean_loglik: f64,
    /// Projected-gradient norm at return.
    pub gradient_norm: f64,
    pub iterations: usize,
    /// Some jump reached [`JUMP_CAP`].
    pub capped: bool,
    /// Mean log likelihood after every accepted iteration.
    pub trace: Vec<f64>,
}

/// Profile NPMLE `argmax_Lambda P_n l(beta, Lambda)` on the maximal-intersection support.
pub fn profile_npmle(
    data: &IntervalDataset,
    beta: &[f64],
    init: Option<&StepCumHazard>,
) -> Result<StepCumHazard> {
    let solver = ProfileSolver::new(data)?;
    let start = init.map(|h| solver.project(h));
    Ok(solver
        .solve(beta, start.as_deref(), NpmleOptions::default())?
        .hazard)
}

/// A reusable profile solver bound to one dataset and its support.
#[derive(Debug, Clone)]
pub struct ProfileSolver {
    pub(crate) idx: IndexedData,
}

impl ProfileSolver {
    pub fn new(data: &IntervalDataset) -> Result<Self> {
        let support = support_points(data)?;
        Ok(Self {
            idx: IndexedData::new(data, &support),
        })
    }

    pub fn support(&self) -> &[f64] {
        &self.idx.support
    }

    pub fn n(&self) -> usize {
        self.idx.n
    }

    pub fn p(&self) -> usize {
        self.idx.p
    }

    /// Jumps of `hazard` re-expressed on this solver's support.
    pub fn project(&self, hazard: &StepCumHazard) -> Vec<f64> {
        let mut prev = 0.0;
        self.idx
            .support
            .iter()
            .map(|&u| {
                let cur = hazard.eval(u);
                let j = cur - prev;
                prev = cur;
                j.max(0.0)
            })
            .collect()
    }

    fn equal_mass(&self) -> Vec<f64> {
        let m = self.idx.m();
        vec![1.0 / m as f64; m]
    }

    pub(crate) fn hazard(&self, jumps: Vec<f64>) -> StepCumHazard {
        StepCumHazard::from_parts_unchecked(self.idx.support.clone(), jumps)
    }

    pub fn solve(
        &self,
        beta: &[f64],
        init: Option<&[f64]>,
        opts: NpmleOptions,
    ) -> Result<NpmleFit> {
        if beta.len() != self.idx.p {
            return Err(Error::InvalidArgument(format!(
                "beta has length {} but data has p = {}",
                beta.len(),
                self.idx.p
            )));
        }
        let etas = self.idx.etas(beta);
        let mut jumps = match init {
            Some(j) if j.len() == self.idx.m() && self.idx.terms(&etas, j).is_ok() => j.to_vec(),
            _ => self.equal_mass(),
        };
        let mut terms = self.idx.terms(&etas, &jumps)?;
        let mut f = IndexedData::mean_loglik(&terms);
        let mut trace = vec![f];
        let mut capped = false;

        for iter in 0..opts.max_iter {
            let grad = self.idx.grad_jumps(&terms);
            let at_cap = |k: usize| jumps[k] >= opts.jump_cap && grad[k] > 0.0;
            let pg = projected_gradient_norm(&jumps, &grad, opts.jump_cap);
            if pg <= opts.tol {
                return Ok(self.finish(jumps, f, pg, iter, capped, trace));
            }

            let total: f64 = jumps.iter().sum();
            let eps = 1e-12 * total.max(1.0);
            let free: Vec<usize> = (0..jumps.len())
                .filter(|&k| !(jumps[k] <= eps && grad[k] <= 0.0) && !at_cap(k))
                .collect();
            for k in 0..jumps.len() {
                if jumps[k] <= eps && grad[k] <= 0.0 {
                    jumps[k] = 0.0;
                }
            }

            let step = newton_direction(&self.idx.hess_jumps(&terms), &grad, &free);
            let gain: f64 = free.iter().zip(&step).map(|(&k, d)| grad[k] * d).sum();

            let mut t = 1.0;
            let mut accepted = None;
            while t > 1e-20 {
                let mut cand = jumps.clone();
                for (&k, d) in free.iter().zip(&step) {
                    cand[k] = (jumps[k] + t * d).clamp(0.0, opts.jump_cap);
                }
                if let Ok(ct) = self.idx.terms(&etas, &cand) {
                    let fc = IndexedData::mean_loglik(&ct);
                    let linear: f64 = (0..cand.len()).map(|k| grad[k] * (cand[k] - jumps[k])).sum();
                    let noise = 1e-14 * (1.0 + f.abs());
                    if fc >= f + 1e-4 * linear || (0.5 * gain <= noise && fc >= f - noise) {
                        accepted = Some((cand, ct, fc));
                        break;
                    }
                }
                t *= 0.5;
            }
            match accepted {
                Some((cand, ct, fc)) => {
                    capped |= cand.iter().any(|&j| j >= opts.jump_cap);
                    jumps = cand;
                    terms = ct;
                    f = fc;
                    trace.push(f);
                }
                None => {
                    // no representable improvement left along the Newton path
                    if pg <= (1e2 * opts.tol).max(1e-10) {
                        return Ok(self.finish(jumps, f, pg, iter, capped, trace));
                    }
                    return Err(Error::NonConvergence {
                        stage: "profile NPMLE line search".into(),
                        iterations: iter,
                        gradient_norm: pg,
                    });
                }
            }
        }
        let grad = self.idx.grad_jumps(&terms);
        let pg = projected_gradient_norm(&jumps, &grad, opts.jump_cap);
        Err(Error::NonConvergence {
            stage: "profile NPMLE".into(),
            iterations: opts.max_iter,
            gradient_norm: pg,
        })
    }

    fn finish(
        &self,
        jumps: Vec<f64>,
        f: f64,
        pg: f64,
        iterations: usize,
        capped: bool,
        trace: Vec<f64>,
    ) -> NpmleFit {
        NpmleFit {
            hazard: self.hazard(jumps),
            mean_loglik: f,
            gradient_norm: pg,
            iterations,
            capped,
            trace,
        }
    }

    /// Subject terms at `(beta, jumps)` on this support.
    pub(crate) fn terms(&self, beta: &[f64], jumps: &[f64]) -> Result<Vec<SubjectTerms>> {
        self.idx.terms(&self.idx.etas(beta), jumps)
    }
}

/// Largest violation of the bound-constrained stationarity conditions.
pub(crate) fn projected_gradient_norm(jumps: &[f64], grad: &[f64], cap: f64) -> f64 {
    jumps
        .iter()
        .zip(grad)
        .map(|(&j, &g)| {
            if j <= 0.0 {
                g.max(0.0)
            } else if j >= cap {
                (-g).max(0.0)
            } else {
                g.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Solves `(-H_FF) d = g_F`, adding a ridge when the block is numerically
/// singular.
fn newton_direction(hess: &DMatrix<f64>, grad: &[f64], free: &[usize]) -> Vec<f64> {
    let k = free.len();
    if k == 0 {
        return Vec::new();
    }
    let neg = DMatrix::from_fn(k, k, |r, c| -hess[(free[r], free[c])]);
    let rhs = DVector::from_iterator(k, free.iter().map(|&i| grad[i]));
    let scale = (0..k).map(|i| neg[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut ridge = 0.0;
    loop {
        let mut m = neg.clone();
        for i in 0..k {
            m[(i, i)] += ridge;
        }
        if let Some(ch) = m.cholesky() {
            return ch.solve(&rhs).iter().copied().collect();
        }
        ridge = if ridge == 0.0 { 1e-12 * scale } else { ridge * 100.0 };
        if ridge > 1e6 * scale {
            // fall back to scaled gradient ascent
            return rhs.iter().map(|g| g / scale).collect();
        }
    }
}
