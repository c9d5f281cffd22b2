//! Observed-data log likelihood of the interval-censored Cox model.
//!
//! With `Q(t) = exp{-Lambda(t) exp(beta'X)}` a subject contributes
//! `log{Q(L) - Q(R)}`. Writing `w = exp(beta'X)`, `a = w Lambda(L)` and
//! `c = w {Lambda(R) - Lambda(L)}` this is
//!
//! ```text
//! -a + log(1 - exp(-c))        (R finite)
//! -a                           (R = +inf)
//! ```
//!
//! which is the log-space form used everywhere below: `log1p`-style
//! evaluation of `log(1 - e^{-c})` stays accurate when `c` is tiny and
//! never forms the difference `Q(L) - Q(R)` explicitly.

use crate::data::{dot, IntervalDataset, IntervalObservation};
use crate::error::{Error, Result};
use crate::hazard::{count_at_or_below, CoxParams, StepDirection};

/// Below this value of `c` the bracket carries no hazard mass and
/// `Q(L) - Q(R)` is treated as zero.
pub const DEGENERATE_FLOOR: f64 = 1e-12;

/// `Q(at)` for one subject. Exactly `0` at `+inf` and exactly `1` where
/// `Lambda(at) = 0`.
pub fn survival_factor(obs: &IntervalObservation, params: &CoxParams, at: f64) -> f64 {
    if at == f64::INFINITY {
        return 0.0;
    }
    let cum = params.lambda0.eval(at);
    if cum == 0.0 {
        return 1.0;
    }
    (-cum * dot(&obs.covariates, &params.beta).exp()).exp()
}

/// Per-subject quantities shared by the likelihood and all its derivatives.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SubjectTerms {
    /// `exp(beta'X)`
    pub w: f64,
    /// `w Lambda(L)`
    pub a: f64,
    /// `w {Lambda(R) - Lambda(L)}`; unused when right-censored
    pub c: f64,
    pub finite: bool,
}

impl SubjectTerms {
    fn new(subject: usize, eta: f64, cum_left: f64, mass: Option<f64>) -> Result<Self> {
        let w = eta.exp();
        let a = w * cum_left;
        match mass {
            None => Ok(Self {
                w,
                a,
                c: 0.0,
                finite: false,
            }),
            Some(s) => {
                let c = w * s;
                if !(c > DEGENERATE_FLOOR) || !a.is_finite() {
                    return Err(Error::DegenerateLikelihood { subject });
                }
                Ok(Self {
                    w,
                    a,
                    c,
                    finite: true,
                })
            }
        }
    }

    pub fn loglik(&self) -> f64 {
        if self.finite {
            -self.a + (-(-self.c).exp_m1()).ln()
        } else {
            -self.a
        }
    }

    /// `h'(c) = 1 / (e^c - 1)` where `h(c) = log(1 - e^{-c})`.
    pub fn h1(&self) -> f64 {
        if self.finite {
            1.0 / self.c.exp_m1()
        } else {
            0.0
        }
    }

    /// `h''(c) = -e^{-c} / (1 - e^{-c})^2`.
    pub fn h2(&self) -> f64 {
        if self.finite {
            let d = -(-self.c).exp_m1();
            -(-self.c).exp() / (d * d)
        } else {
            0.0
        }
    }

    /// Derivative of the contribution in the linear predictor.
    pub fn d_eta(&self) -> f64 {
        -self.a + self.c * self.h1()
    }

    pub fn d_eta2(&self) -> f64 {
        self.d_eta() + self.h2() * self.c * self.c
    }
}

fn subject_terms(obs: &IntervalObservation, i: usize, params: &CoxParams) -> Result<SubjectTerms> {
    let eta = dot(&obs.covariates, &params.beta);
    let cum_left = params.lambda0.eval(obs.left);
    let mass = (!obs.is_right_censored()).then(|| params.lambda0.eval(obs.right) - cum_left);
    SubjectTerms::new(i, eta, cum_left, mass)
}

fn check_dims(data: &IntervalDataset, params: &CoxParams) -> Result<()> {
    if params.beta.len() != data.p() {
        return Err(Error::InvalidArgument(format!(
            "beta has length {} but data has p = {}",
            params.beta.len(),
            data.p()
        )));
    }
    Ok(())
}

/// Per-subject log likelihood contributions.
pub fn log_likelihood_terms(data: &IntervalDataset, params: &CoxParams) -> Result<Vec<f64>> {
    check_dims(data, params)?;
    data.observations()
        .iter()
        .enumerate()
        .map(|(i, o)| subject_terms(o, i, params).map(|t| t.loglik()))
        .collect()
}

/// Total log likelihood `sum_i log{Q(L_i) - Q(R_i)}` (sum scale, `n P_n l`).
pub fn log_likelihood(data: &IntervalDataset, params: &CoxParams) -> Result<f64> {
    Ok(log_likelihood_terms(data, params)?.iter().sum())
}

/// Per-subject scores in beta, `l_beta = X w {Lambda(R)Q(R) - Lambda(L)Q(L)} / {Q(L) - Q(R)}`.
pub fn score_beta_terms(data: &IntervalDataset, params: &CoxParams) -> Result<Vec<Vec<f64>>> {
    check_dims(data, params)?;
    data.observations()
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let d = subject_terms(o, i, params)?.d_eta();
            Ok(o.covariates.iter().map(|x| x * d).collect())
        })
        .collect()
}

/// Mean score `P_n l_beta(beta, Lambda)`.
pub fn score_beta(data: &IntervalDataset, params: &CoxParams) -> Result<Vec<f64>> {
    let terms = score_beta_terms(data, params)?;
    Ok(column_means(&terms, data.p()))
}

/// Per-subject nuisance scores along the step direction `g`:
/// `-{Q(L) g(L) w - Q(R) g(R) w} / {Q(L) - Q(R)}`.
pub fn nuisance_score_along(
    data: &IntervalDataset,
    params: &CoxParams,
    direction: &StepDirection,
) -> Result<Vec<f64>> {
    check_dims(data, params)?;
    data.observations()
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let t = subject_terms(o, i, params)?;
            let g_left = direction.eval(o.left);
            let mut v = -t.w * g_left;
            if t.finite {
                v += t.w * t.h1() * (direction.eval(o.right) - g_left);
            }
            Ok(v)
        })
        .collect()
}

/// Dataset mean of [`nuisance_score_along`].
pub fn mean_nuisance_score_along(
    data: &IntervalDataset,
    params: &CoxParams,
    direction: &StepDirection,
) -> Result<f64> {
    let v = nuisance_score_along(data, params, direction)?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

pub(crate) fn column_means(rows: &[Vec<f64>], p: usize) -> Vec<f64> {
    let mut out = vec![0.0; p];
    for r in rows {
        for (o, v) in out.iter_mut().zip(r) {
            *o += v;
        }
    }
    let n = rows.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    out
}

/// Data laid out against a fixed hazard support: every bracket maps to a
/// contiguous index range, so `Lambda(L)` and the bracket mass are prefix
/// sums over the jump vector.
#[derive(Debug, Clone)]
pub(crate) struct IndexedData {
    pub support: Vec<f64>,
    /// `#{k : u_k <= L_i}`
    pub left_idx: Vec<usize>,
    /// `#{k : u_k <= R_i}`, `None` when right-censored
    pub right_idx: Vec<Option<usize>>,
    /// row-major `n x p`
    pub x: Vec<f64>,
    pub n: usize,
    pub p: usize,
}

impl IndexedData {
    pub fn new(data: &IntervalDataset, support: &[f64]) -> Self {
        let obs = data.observations();
        Self {
            support: support.to_vec(),
            left_idx: obs
                .iter()
                .map(|o| count_at_or_below(support, o.left))
                .collect(),
            right_idx: obs
                .iter()
                .map(|o| (!o.is_right_censored()).then(|| count_at_or_below(support, o.right)))
                .collect(),
            x: obs.iter().flat_map(|o| o.covariates.iter().copied()).collect(),
            n: obs.len(),
            p: data.p(),
        }
    }

    pub fn m(&self) -> usize {
        self.support.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn etas(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), beta)).collect()
    }

    pub fn terms(&self, etas: &[f64], jumps: &[f64]) -> Result<Vec<SubjectTerms>> {
        let mut prefix = Vec::with_capacity(jumps.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for j in jumps {
            acc += j;
            prefix.push(acc);
        }
        (0..self.n)
            .map(|i| {
                let kl = self.left_idx[i];
                let mass = self.right_idx[i].map(|kr| prefix[kr] - prefix[kl]);
                SubjectTerms::new(i, etas[i], prefix[kl], mass)
            })
            .collect()
    }

    pub fn mean_loglik(terms: &[SubjectTerms]) -> f64 {
        terms.iter().map(SubjectTerms::loglik).sum::<f64>() / terms.len() as f64
    }

    /// Mean-scale gradient in the jump vector.
    pub fn grad_jumps(&self, terms: &[SubjectTerms]) -> Vec<f64> {
        let m = self.m();
        let mut diff = vec![0.0; m + 1];
        for (i, t) in terms.iter().enumerate() {
            let kl = self.left_idx[i];
            diff[0] -= t.w;
            diff[kl] += t.w;
            if let Some(kr) = self.right_idx[i] {
                let r = t.w * t.h1();
                diff[kl] += r;
                diff[kr] -= r;
            }
        }
        let n = self.n as f64;
        let mut acc = 0.0;
        diff[..m]
            .iter()
            .map(|d| {
                acc += d;
                acc / n
            })
            .collect()
    }

    /// Mean-scale Hessian in the jump vector, `sum_i h''(c_i) w_i^2 1_J 1_J'`,
    /// assembled through a two-dimensional difference array.
    pub fn hess_jumps(&self, terms: &[SubjectTerms]) -> nalgebra::DMatrix<f64> {
        let m = self.m();
        let mut diff = nalgebra::DMatrix::<f64>::zeros(m + 1, m + 1);
        for (i, t) in terms.iter().enumerate() {
            if let Some(kr) = self.right_idx[i] {
                let kl = self.left_idx[i];
                let v = t.h2() * t.w * t.w;
                diff[(kl, kl)] += v;
                diff[(kl, kr)] -= v;
                diff[(kr, kl)] -= v;
                diff[(kr, kr)] += v;
            }
        }
        for r in 0..m {
            for c in 0..m {
                let mut v = diff[(r, c)];
                if r > 0 {
                    v += diff[(r - 1, c)];
                }
                if c > 0 {
                    v += diff[(r, c - 1)];
                }
                if r > 0 && c > 0 {
                    v -= diff[(r - 1, c - 1)];
                }
                diff[(r, c)] = v;
            }
        }
        diff.view((0, 0), (m, m)) / self.n as f64
    }

    /// Mean-scale score in beta.
    pub fn score_beta(&self, terms: &[SubjectTerms]) -> Vec<f64> {
        let mut out = vec![0.0; self.p];
        for (i, t) in terms.iter().enumerate() {
            let d = t.d_eta();
            for (o, x) in out.iter_mut().zip(self.row(i)) {
                *o += x * d;
            }
        }
        let n = self.n as f64;
        out.iter_mut().for_each(|o| *o /= n);
        out
    }

    /// Mean-scale `d^2/dbeta dbeta'` and `d^2/dbeta djump` blocks.
    pub fn cross_hessians(
        &self,
        terms: &[SubjectTerms],
    ) -> (nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>) {
        let (p, m, n) = (self.p, self.m(), self.n as f64);
        let mut hbb = nalgebra::DMatrix::<f64>::zeros(p, p);
        // per-covariate difference arrays over the support
        let mut diff = nalgebra::DMatrix::<f64>::zeros(p, m + 1);
        for (i, t) in terms.iter().enumerate() {
            let x = self.row(i);
            let d2 = t.d_eta2();
            for r in 0..p {
                for c in 0..p {
                    hbb[(r, c)] += x[r] * x[c] * d2;
                }
            }
            let kl = self.left_idx[i];
            let inside = (t.h1() + t.h2() * t.c) * t.w;
            for r in 0..p {
                diff[(r, 0)] -= x[r] * t.w;
                diff[(r, kl)] += x[r] * t.w;
                if let Some(kr) = self.right_idx[i] {
                    diff[(r, kl)] += x[r] * inside;
                    diff[(r, kr)] -= x[r] * inside;
                }
            }
        }
        hbb /= n;
        let mut hbl = nalgebra::DMatrix::<f64>::zeros(p, m);
        for r in 0..p {
            let mut acc = 0.0;
            for k in 0..m {
                acc += diff[(r, k)];
                hbl[(r, k)] = acc / n;
            }
        }
        (hbb, hbl)
    }

    /// Per-subject scores along the unit directions `I(t >= u_k)`, as an
    /// `n x m` matrix.
    pub fn unit_nuisance_scores(&self, terms: &[SubjectTerms]) -> nalgebra::DMatrix<f64> {
        let m = self.m();
        let mut out = nalgebra::DMatrix::<f64>::zeros(self.n, m);
        for (i, t) in terms.iter().enumerate() {
            let kl = self.left_idx[i];
            for k in 0..kl {
                out[(i, k)] = -t.w;
            }
            if let Some(kr) = self.right_idx[i] {
                let r = t.w * t.h1();
                for k in kl..kr {
                    out[(i, k)] = r;
                }
            }
        }
        out
    }

    /// Per-subject beta scores as an `n x p` matrix.
    pub fn beta_scores(&self, terms: &[SubjectTerms]) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.p, |i, j| self.row(i)[j] * terms[i].d_eta())
    }
}

/// Parameters on an explicit support from a jump vector.
#[cfg(test)]
pub(crate) fn params_on(support: &[f64], beta: &[f64], jumps: &[f64]) -> CoxParams {
    CoxParams {
        beta: beta.to_vec(),
        lambda0: crate::hazard::StepCumHazard::from_parts_unchecked(support.to_vec(), jumps.to_vec()),
    }
}
