//! Poisson data augmentation behind the EM algorithm.
//!
//! Each subject gets independent latent counts `Z_ik ~ Poisson(lambda_k w_i)`
//! for the support points `u_k <= R*_i` (`R* = R`, or `L` when
//! right-censored). The observed bracket says the counts up to `L` are all
//! zero and, for finite `R`, that at least one count in `(L, R]` is
//! positive. The expected complete-data log likelihood is
//!
//! ```text
//! Q(beta, Lambda | ~) = sum_i sum_{k: u_k <= R*_i} E[Z_ik] (log lambda_k + beta'X_i) - lambda_k exp(beta'X_i)
//! ```
//!
//! Its beta-gradient at the conditioning point is the PRES score; its
//! maximiser in `Lambda` for fixed `beta` is the closed-form EM update.

use crate::error::{Error, Result};
use crate::hazard::StepCumHazard;
use crate::likelihood::SubjectTerms;
use crate::npmle::ProfileSolver;

/// Conditional expectations of the latent counts given the observed brackets.
#[derive(Debug, Clone)]
pub struct EStep {
    /// `sum_k E[Z_ik]` per subject.
    pub subject_totals: Vec<f64>,
    /// `sum_i E[Z_ik]` per support point.
    pub point_totals: Vec<f64>,
}

fn e_step_from_terms(solver: &ProfileSolver, terms: &[SubjectTerms], jumps: &[f64]) -> EStep {
    let idx = &solver.idx;
    let m = idx.m();
    let mut subject_totals = vec![0.0; idx.n];
    let mut point_totals = vec![0.0; m];
    for (i, t) in terms.iter().enumerate() {
        if let Some(kr) = idx.right_idx[i] {
            // E[Z_ik | sum over (L,R] > 0] = lambda_k w / (1 - exp(-c))
            let scale = t.w / -(-t.c).exp_m1();
            for k in idx.left_idx[i]..kr {
                point_totals[k] += jumps[k] * scale;
            }
            subject_totals[i] = t.c * scale / t.w;
        }
    }
    EStep {
        subject_totals,
        point_totals,
    }
}

/// E-step at `(beta, hazard)`; the hazard must live on the solver's support.
pub fn e_step(solver: &ProfileSolver, beta: &[f64], hazard: &StepCumHazard) -> Result<EStep> {
    check_support(solver, hazard)?;
    let terms = solver.terms(beta, hazard.jumps())?;
    Ok(e_step_from_terms(solver, &terms, hazard.jumps()))
}

/// `S(beta) = dQ(b, Lambda | beta, Lambda)/db` at `b = beta`, on the sum scale.
pub fn expected_complete_score(
    solver: &ProfileSolver,
    beta: &[f64],
    hazard: &StepCumHazard,
) -> Result<Vec<f64>> {
    check_support(solver, hazard)?;
    let idx = &solver.idx;
    let terms = solver.terms(beta, hazard.jumps())?;
    let e = e_step_from_terms(solver, &terms, hazard.jumps());
    let mut prefix = vec![0.0; idx.m() + 1];
    for (k, j) in hazard.jumps().iter().enumerate() {
        prefix[k + 1] = prefix[k] + j;
    }
    let mut score = vec![0.0; idx.p];
    for (i, t) in terms.iter().enumerate() {
        let at_risk = idx.right_idx[i].unwrap_or(idx.left_idx[i]);
        let resid = e.subject_totals[i] - t.w * prefix[at_risk];
        for (s, x) in score.iter_mut().zip(idx.row(i)) {
            *s += x * resid;
        }
    }
    Ok(score)
}

/// One EM update of the hazard for fixed `beta`:
/// `lambda_k = sum_i E[Z_ik] / sum_{i: u_k <= R*_i} w_i`.
pub fn em_update(
    solver: &ProfileSolver,
    beta: &[f64],
    hazard: &StepCumHazard,
) -> Result<StepCumHazard> {
    check_support(solver, hazard)?;
    let idx = &solver.idx;
    let terms = solver.terms(beta, hazard.jumps())?;
    let e = e_step_from_terms(solver, &terms, hazard.jumps());
    let m = idx.m();
    let mut diff = vec![0.0; m + 1];
    for (i, t) in terms.iter().enumerate() {
        let at_risk = idx.right_idx[i].unwrap_or(idx.left_idx[i]);
        diff[0] += t.w;
        diff[at_risk] -= t.w;
    }
    let mut risk = 0.0;
    let jumps = (0..m)
        .map(|k| {
            risk += diff[k];
            if e.point_totals[k] > 0.0 {
                e.point_totals[k] / risk
            } else {
                0.0
            }
        })
        .collect();
    Ok(solver.hazard(jumps))
}

fn check_support(solver: &ProfileSolver, hazard: &StepCumHazard) -> Result<()> {
    if hazard.support() != solver.support() {
        return Err(Error::InvalidArgument(
            "hazard support differs from the maximal-intersection support".into(),
        ));
    }
    Ok(())
}
