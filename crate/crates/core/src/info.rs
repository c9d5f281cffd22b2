//! Estimators of the scaled efficient information `I_n ~ n I`.
//!
//! * `Ls`: Schur complement of the Gram matrix of the beta scores and the
//!   nuisance scores along the unit step directions `I(t >= u_k)`, one per
//!   support point of the fitted hazard.
//! * `Spres`: Richardson-extrapolated Jacobian of the profile score
//!   `S(b) = n P_n l_beta(b, Lambda_b)`.
//! * `Pres`: the same Jacobian, with the score taken from the expected
//!   complete-data log likelihood of the Poisson augmentation.
//! * `Pl`: second differences of the profile log likelihood. Slow and
//!   sensitive to the increment; kept for cross-checks.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::augmentation::expected_complete_score;
use crate::data::IntervalDataset;
use crate::error::{Error, Result};
use crate::lasso::LassoFit;
use crate::linalg::{min_eigenvalue, pseudo_inverse_sym_rel, submatrix, symmetrize};
use crate::npmle::{NpmleOptions, ProfileSolver};

pub const DEFAULT_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InfoMethod {
    Ls,
    Spres,
    Pres,
    Pl,
}

impl InfoMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ls => "ls",
            Self::Spres => "spres",
            Self::Pres => "pres",
            Self::Pl => "pl",
        }
    }
}

impl std::fmt::Display for InfoMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for InfoMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ls" => Ok(Self::Ls),
            "spres" => Ok(Self::Spres),
            "pres" => Ok(Self::Pres),
            "pl" => Ok(Self::Pl),
            other => Err(Error::InvalidArgument(format!("unknown information method `{other}`"))),
        }
    }
}

/// An estimate of `n I`.
#[derive(Debug, Clone)]
pub struct InfoEstimate {
    pub matrix: DMatrix<f64>,
    pub method: InfoMethod,
    /// Increment of the numerical methods.
    pub epsilon: Option<f64>,
    pub symmetrized: bool,
    /// Smallest eigenvalue of `matrix[M, M] / n` for the last recorded selection.
    pub min_eig_mm: Option<f64>,
}

impl InfoEstimate {
    /// `(I_n)_{M,M}`.
    pub fn block(&self, model: &[usize]) -> DMatrix<f64> {
        submatrix(&self.matrix, model)
    }

    /// Records the conditioning of the selected block and returns it.
    pub fn record_selection(&mut self, model: &[usize], n: usize) -> f64 {
        let v = min_eigenvalue(&(self.block(model) / n as f64));
        self.min_eig_mm = Some(v);
        v
    }
}

/// Dispatches on `method`; `epsilon` is ignored by `Ls`.
pub fn estimate(
    method: InfoMethod,
    data: &IntervalDataset,
    fit: &LassoFit,
    epsilon: f64,
) -> Result<InfoEstimate> {
    match method {
        InfoMethod::Ls => info_ls(data, fit),
        InfoMethod::Spres => info_spres(data, fit, epsilon),
        InfoMethod::Pres => info_pres(data, fit, epsilon),
        InfoMethod::Pl => info_pl(data, fit, epsilon),
    }
}

/// `n (A11 - A12 A22^- A21)` at the fitted `(beta, Lambda)`.
pub fn info_ls(data: &IntervalDataset, fit: &LassoFit) -> Result<InfoEstimate> {
    let solver = ProfileSolver::new(data)?;
    let jumps = solver.project(&fit.lambda0);
    let terms = solver.terms(&fit.beta, &jumps)?;
    let b = solver.idx.beta_scores(&terms);
    // directions I(t >= u_k) at the points carrying mass of the fitted hazard
    let support: Vec<usize> = (0..jumps.len()).filter(|&k| jumps[k] > 0.0).collect();
    if support.is_empty() {
        return Err(Error::InvalidArgument("fitted hazard has no positive jump".into()));
    }
    let g = solver.idx.unit_nuisance_scores(&terms).select_columns(&support);
    let matrix = ls_schur(&b, &g)?;
    Ok(InfoEstimate {
        matrix,
        method: InfoMethod::Ls,
        epsilon: None,
        symmetrized: true,
        min_eig_mm: None,
    })
}

/// Schur form from per-subject score rows `b` (`n x p`) and `g` (`n x m`).
pub(crate) fn ls_schur(b: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = b.nrows() as f64;
    let a11 = b.transpose() * b / n;
    let a12 = b.transpose() * g / n;
    let a22 = g.transpose() * g / n;
    let rel = b.ncols().max(g.ncols()) as f64 * 1e-12;
    let (pinv, _) = pseudo_inverse_sym_rel(&a22, rel);
    if pinv.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularGram { tolerance: rel });
    }
    Ok(symmetrize(&((a11 - &a12 * pinv * a12.transpose()) * n)))
}

/// Options for the perturbed profile solves.
fn tight() -> NpmleOptions {
    NpmleOptions {
        tol: 1e-11,
        ..NpmleOptions::default()
    }
}

/// `S(beta) = n P_n l_beta(beta, Lambda_beta)`.
pub fn profile_score(data: &IntervalDataset, beta: &[f64]) -> Result<Vec<f64>> {
    let solver = ProfileSolver::new(data)?;
    solver_profile_score(&solver, beta, None)
}

fn solver_profile_score(solver: &ProfileSolver, beta: &[f64], warm: Option<&[f64]>) -> Result<Vec<f64>> {
    let np = solver.solve(beta, warm, tight())?;
    let terms = solver.terms(beta, np.hazard.jumps())?;
    let n = solver.n() as f64;
    Ok(solver.idx.score_beta(&terms).into_iter().map(|s| s * n).collect())
}

fn solver_pres_score(solver: &ProfileSolver, beta: &[f64], warm: Option<&[f64]>) -> Result<Vec<f64>> {
    let np = solver.solve(beta, warm, tight())?;
    expected_complete_score(solver, beta, &np.hazard)
}

/// Matrix whose row `i` is the five-point central derivative of `f` along
/// `e_i` at `x`.
pub fn richardson_rows<F>(f: F, x: &[f64], eps: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let p = x.len();
    let offsets = [-2.0, -1.0, 1.0, 2.0];
    let evals: Vec<Result<Vec<f64>>> = (0..4 * p)
        .into_par_iter()
        .map(|t| {
            let mut y = x.to_vec();
            y[t / 4] += offsets[t % 4] * eps;
            f(&y).map_err(|e| match e {
                Error::NonConvergence { stage, iterations, gradient_norm } => Error::NonConvergence {
                    stage: format!("{stage} at beta + {} eps e_{}", offsets[t % 4], t / 4),
                    iterations,
                    gradient_norm,
                },
                other => other,
            })
        })
        .collect();
    let evals: Vec<Vec<f64>> = evals.into_iter().collect::<Result<_>>()?;
    let q = evals.first().map_or(0, |v| v.len());
    let mut out = DMatrix::zeros(p, q);
    for i in 0..p {
        let [m2, m1, p1, p2] = [&evals[4 * i], &evals[4 * i + 1], &evals[4 * i + 2], &evals[4 * i + 3]];
        for k in 0..q {
            out[(i, k)] = (m2[k] - 8.0 * m1[k] + 8.0 * p1[k] - p2[k]) / (12.0 * eps);
        }
    }
    Ok(out)
}

/// Hessian of a scalar function by forward second differences:
/// `{f(x + e_i + e_j) - f(x + e_i) - f(x + e_j) + f(x)} / eps^2`.
pub fn second_difference_hessian<F>(f: F, x: &[f64], eps: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let p = x.len();
    let shift = |idx: &[usize]| {
        let mut y = x.to_vec();
        for &i in idx {
            y[i] += eps;
        }
        y
    };
    let f0 = f(x)?;
    let single: Vec<f64> = (0..p)
        .into_par_iter()
        .map(|i| f(&shift(&[i])))
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| (i..p).map(move |j| (i, j))).collect();
    let double: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| f(&shift(&[i, j])))
        .collect::<Result<_>>()?;
    let mut h = DMatrix::zeros(p, p);
    for (&(i, j), v) in pairs.iter().zip(&double) {
        let d = (v - single[i] - single[j] + f0) / (eps * eps);
        h[(i, j)] = d;
        h[(j, i)] = d;
    }
    Ok(h)
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    Ok(())
}

fn numeric(matrix: DMatrix<f64>, method: InfoMethod, eps: f64) -> InfoEstimate {
    InfoEstimate {
        matrix: symmetrize(&matrix),
        method,
        epsilon: Some(eps),
        symmetrized: true,
        min_eig_mm: None,
    }
}

/// Negative Richardson Jacobian of the profile score, symmetrized.
pub fn info_spres(data: &IntervalDataset, fit: &LassoFit, epsilon: f64) -> Result<InfoEstimate> {
    check_epsilon(epsilon)?;
    let solver = ProfileSolver::new(data)?;
    let warm = solver.project(&fit.lambda0);
    let d = richardson_rows(|b| solver_profile_score(&solver, b, Some(&warm)), &fit.beta, epsilon)?;
    Ok(numeric(-d, InfoMethod::Spres, epsilon))
}

/// As [`info_spres`] with the complete-data score of the augmentation.
pub fn info_pres(data: &IntervalDataset, fit: &LassoFit, epsilon: f64) -> Result<InfoEstimate> {
    check_epsilon(epsilon)?;
    let solver = ProfileSolver::new(data)?;
    let warm = solver.project(&fit.lambda0);
    let d = richardson_rows(|b| solver_pres_score(&solver, b, Some(&warm)), &fit.beta, epsilon)?;
    Ok(numeric(-d, InfoMethod::Pres, epsilon))
}

/// Negative second-difference Hessian of the profile log likelihood (sum scale).
pub fn info_pl(data: &IntervalDataset, fit: &LassoFit, epsilon: f64) -> Result<InfoEstimate> {
    check_epsilon(epsilon)?;
    let solver = ProfileSolver::new(data)?;
    let warm = solver.project(&fit.lambda0);
    let n = solver.n() as f64;
    let h = second_difference_hessian(
        |b| Ok(solver.solve(b, Some(&warm), tight())?.mean_loglik),
        &fit.beta,
        epsilon,
    )?;
    Ok(numeric(-h * n, InfoMethod::Pl, epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_is_exact_on_quartics() {
        // f_k(x) = sum_i c_ki x_i^4 + x_i^3 - x_i
        let f = |x: &[f64]| -> Result<Vec<f64>> {
            Ok((0..2)
                .map(|k| {
                    x.iter()
                        .enumerate()
                        .map(|(i, v)| (1.0 + (k + i) as f64) * v.powi(4) + v.powi(3) - v)
                        .sum()
                })
                .collect())
        };
        let x = [0.3, -0.7];
        let d = richardson_rows(f, &x, 0.25).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                let exact = 4.0 * (1.0 + (k + i) as f64) * x[i].powi(3) + 3.0 * x[i].powi(2) - 1.0;
                assert!((d[(i, k)] - exact).abs() <= 1e-14, "{} vs {exact}", d[(i, k)]);
            }
        }
    }

    #[test]
    fn second_difference_is_exact_on_quadratics() {
        let f = |x: &[f64]| -> Result<f64> {
            Ok(1.5 * x[0] * x[0] - 0.5 * x[0] * x[1] + 2.0 * x[1] * x[1] + x[0] - 3.0)
        };
        let h = second_difference_hessian(f, &[0.25, -0.5], 0.5).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[3.0, -0.5, -0.5, 4.0]);
        assert!((h - want).amax() <= 1e-13);
    }

    #[test]
    fn method_names_round_trip() {
        for m in [InfoMethod::Ls, InfoMethod::Spres, InfoMethod::Pres, InfoMethod::Pl] {
            assert_eq!(m.name().parse::<InfoMethod>().unwrap(), m);
        }
        assert!("foo".parse::<InfoMethod>().is_err());
    }

    #[test]
    fn symmetrizing_twice_is_identity() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.5, 3.0]);
        let s = symmetrize(&a);
        assert_eq!(symmetrize(&s), s);
        assert_eq!(s, s.transpose());
    }
}
