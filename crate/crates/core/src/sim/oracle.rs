//! Exact polyhedral inference in the Gaussian linear model.
//!
//! For `y ~ N(X beta*, sigma^2 I)` and the lasso
//! `1/2 ||y - X b||^2 + lambda ||b||_1`, the event `{M, s}` is exactly
//! `{A y <= b}` and the pivot of `gamma' y` with `gamma = (X_M^+)' e_j` is
//! `Unif(0, 1)` given the event in finite samples. This module samples that
//! conditional law by rejection and is the ground truth for the pivot code.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lasso::SelectionEvent;
use crate::normal::truncated_normal_cdf;
use crate::selective::truncation_limits;
use crate::sim::replication_rng;
use crate::stats::ks_uniform;

/// Coordinate descent for `1/2 ||y - X b||^2 + lambda ||b||_1`.
pub fn linear_lasso(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Vec<f64> {
    let p = x.ncols();
    let norms: Vec<f64> = (0..p).map(|j| x.column(j).norm_squared()).collect();
    let mut b = vec![0.0; p];
    let mut resid = y.clone();
    for _ in 0..100_000 {
        let mut delta = 0.0f64;
        for j in 0..p {
            if norms[j] == 0.0 {
                continue;
            }
            let rho = x.column(j).dot(&resid) + norms[j] * b[j];
            let new = if rho > lambda {
                (rho - lambda) / norms[j]
            } else if rho < -lambda {
                (rho + lambda) / norms[j]
            } else {
                0.0
            };
            if new != b[j] {
                resid.axpy(b[j] - new, &x.column(j), 1.0);
                delta = delta.max((new - b[j]).abs());
                b[j] = new;
            }
        }
        if delta <= 1e-14 {
            break;
        }
    }
    b
}

fn selection_of(beta: &[f64]) -> SelectionEvent {
    let model: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
    let signs = model.iter().map(|&j| if beta[j] > 0.0 { 1 } else { -1 }).collect();
    SelectionEvent { model, signs }
}

/// The three-block polyhedron `{y : A y <= b}` of the event `(M, s)`.
pub fn selection_polyhedron(
    x: &DMatrix<f64>,
    sel: &SelectionEvent,
    lambda: f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = x.nrows();
    let inactive = sel.inactive(x.ncols());
    let xm = x.select_columns(&sel.model);
    let xi = x.select_columns(&inactive);
    let s = DVector::from_vec(sel.signs_f64());
    let gram_inv = (xm.transpose() * &xm)
        .try_inverse()
        .ok_or(Error::SingularGram { tolerance: 0.0 })?;
    let proj = &xm * &gram_inv * xm.transpose();
    let resid = DMatrix::identity(n, n) - proj;
    let xm_pinv_t_s = &xm * &gram_inv * &s;

    let k = inactive.len();
    let m = sel.len();
    let mut a = DMatrix::zeros(2 * k + m, n);
    let mut b = DVector::zeros(2 * k + m);
    let inact = xi.transpose() * &resid / lambda;
    let shift = xi.transpose() * &xm_pinv_t_s;
    for r in 0..k {
        a.row_mut(r).copy_from(&inact.row(r));
        a.row_mut(k + r).copy_from(&(-inact.row(r)));
        b[r] = 1.0 - shift[r];
        b[k + r] = 1.0 + shift[r];
    }
    let ds = DMatrix::from_diagonal(&s);
    let act = -&ds * &gram_inv * xm.transpose();
    let bact = -lambda * &ds * &gram_inv * &s;
    for r in 0..m {
        a.row_mut(2 * k + r).copy_from(&act.row(r));
        b[2 * k + r] = bact[r];
    }
    Ok((a, b))
}

/// Conditioned pivot samples.
#[derive(Debug, Clone)]
pub struct OracleOutput {
    /// The conditioning event, the modal nonempty selection of a pilot run.
    pub selection: SelectionEvent,
    /// One row per accepted draw, one column per selected coordinate.
    pub pivots: Vec<Vec<f64>>,
    pub draws_used: usize,
    /// KS distance of the first column to `Unif(0, 1)`.
    pub ks: f64,
}

impl OracleOutput {
    pub fn first_column(&self) -> Vec<f64> {
        self.pivots.iter().map(|r| r[0]).collect()
    }
}

/// Standard normal design with unit-norm columns, drawn once from `seed`.
pub fn oracle_design(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = replication_rng(seed, u64::MAX);
    let mut x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    for mut c in x.column_iter_mut() {
        let norm = c.norm();
        c /= norm;
    }
    x
}

/// Samples `reps` pivot vectors conditioned on a fixed `(M, s)`.
pub fn gaussian_linear_oracle(
    n: usize,
    p: usize,
    beta_star: &[f64],
    sigma: f64,
    lambda: f64,
    reps: usize,
    seed: u64,
) -> Result<OracleOutput> {
    if beta_star.len() != p || !(sigma > 0.0) || !(lambda > 0.0) || reps == 0 || n == 0 {
        return Err(Error::InvalidArgument("invalid oracle configuration".into()));
    }
    let x = oracle_design(n, p, seed);
    let mu = &x * DVector::from_column_slice(beta_star);
    let mut rng = replication_rng(seed, 0);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
        DVector::from_fn(n, |i, _| mu[i] + sigma * rng.sample::<f64, _>(StandardNormal))
    };

    let mut counts: HashMap<(Vec<usize>, Vec<i8>), usize> = HashMap::new();
    for _ in 0..200 {
        let sel = selection_of(&linear_lasso(&x, &draw(&mut rng), lambda));
        if !sel.is_empty() {
            *counts.entry((sel.model, sel.signs)).or_default() += 1;
        }
    }
    let ((model, signs), _) = counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
        .ok_or(Error::RejectionExhausted { accepted: 0, budget: 200 })?;
    let target = SelectionEvent { model, signs };
    let (a, b) = selection_polyhedron(&x, &target, lambda)?;

    let xm = x.select_columns(&target.model);
    let gram_inv = (xm.transpose() * &xm)
        .try_inverse()
        .ok_or(Error::SingularGram { tolerance: 0.0 })?;
    // rows of X_M^+ are the contrasts gamma_j'
    let pinv = &gram_inv * xm.transpose();

    let budget = reps.saturating_mul(2000);
    let mut pivots = Vec::with_capacity(reps);
    let mut used = 0;
    while pivots.len() < reps {
        if used >= budget {
            return Err(Error::RejectionExhausted { accepted: pivots.len(), budget });
        }
        used += 1;
        let y = draw(&mut rng);
        let sel = selection_of(&linear_lasso(&x, &y, lambda));
        if sel != target {
            continue;
        }
        let slack = (&a * &y - &b).max();
        if slack > 1e-8 {
            return Err(Error::KktViolation(format!(
                "selected draw lies outside its polyhedron by {slack}"
            )));
        }
        let mut row = Vec::with_capacity(target.len());
        for j in 0..target.len() {
            let gamma: DVector<f64> = pinv.row(j).transpose();
            let gg = gamma.norm_squared();
            let c = &gamma / gg;
            let stat = gamma.dot(&y);
            let z = &y - &c * stat;
            let (lo, hi) = truncation_limits(&a, &b, &c, &z)?;
            row.push(truncated_normal_cdf(stat, gamma.dot(&mu), sigma * sigma * gg, lo, hi)?);
        }
        pivots.push(row);
    }
    let first: Vec<f64> = pivots.iter().map(|r| r[0]).collect();
    Ok(OracleOutput {
        selection: target,
        ks: ks_uniform(&first).unwrap_or(0.0),
        pivots,
        draws_used: used,
    })
}
