//! Post-selection inference for the selected coefficients.
//!
//! Given the selection `(M, s)`, the one-step estimator
//! `beta_bar = beta_hat_M + lambda (I_n)_{MM}^{-1} s` and
//! `theta_bar = sqrt(n) beta_bar`, the active constraint
//! `-diag(s) theta_bar <= -(lambda / sqrt n) diag(s) I_MM^{-1} s` is a
//! polyhedron `A theta_bar <= b`. Along a contrast `gamma` it restricts
//! `gamma' theta_bar` to `[V-, V+]`, and the truncated normal CDF of
//! `gamma' theta_bar` is the pivot. Everything here works on the
//! `theta = sqrt(n) beta` scale; reports convert back.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::info::{InfoEstimate, InfoMethod};
use crate::lasso::{LassoFit, SelectionEvent};
use crate::linalg::{spd_inverse, subvector};
use crate::normal::{quantile, truncated_normal_cdf};

/// Pivot ingredients for one contrast.
#[derive(Debug, Clone)]
pub struct PivotSpec {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub gamma: DVector<f64>,
    pub c: DVector<f64>,
    pub z: DVector<f64>,
    pub vminus: f64,
    pub vplus: f64,
    /// `gamma' I_MM^{-1} gamma`
    pub sigma2: f64,
}

impl PivotSpec {
    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// `gamma' theta_bar`
    pub fn statistic(&self, theta_bar: &[f64]) -> f64 {
        self.gamma.iter().zip(theta_bar).map(|(g, t)| g * t).sum()
    }

    /// Pivot value `F(gamma' theta_bar)` at mean `theta`.
    pub fn cdf(&self, theta_bar: &[f64], theta: f64) -> Result<f64> {
        truncated_normal_cdf(self.statistic(theta_bar), theta, self.sigma2, self.vminus, self.vplus)
    }
}

/// `beta_hat_M + lambda [(I_n)_{MM}]^{-1} s_M`.
pub fn one_step_estimator(fit: &LassoFit, sel: &SelectionEvent, info: &InfoEstimate) -> Result<Vec<f64>> {
    let inv = spd_inverse(&info.block(&sel.model))?;
    let correction = inv * DVector::from_vec(sel.signs_f64()) * fit.penalty.lambda;
    Ok(sel
        .model
        .iter()
        .zip(correction.iter())
        .map(|(&j, d)| fit.beta[j] + d)
        .collect())
}

/// Limits of `{t : A (z + c t) <= b}`.
pub fn truncation_limits(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    z: &DVector<f64>,
) -> Result<(f64, f64)> {
    if a.ncols() != c.len() || a.ncols() != z.len() || a.nrows() != b.len() {
        return Err(Error::InvalidArgument("polyhedron dimensions disagree".into()));
    }
    let ac = a * c;
    let az = a * z;
    let scale = ac.amax();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for j in 0..b.len() {
        let r = (b[j] - az[j]) / ac[j];
        if ac[j].abs() <= 1e-14 * scale || ac[j] == 0.0 {
            if az[j] > b[j] + 1e-9 * (1.0 + b[j].abs()) {
                return Err(Error::EmptyTruncation {
                    lower: lo,
                    upper: hi,
                    theta: f64::NAN,
                    sigma: f64::NAN,
                });
            }
        } else if ac[j] < 0.0 {
            lo = lo.max(r);
        } else {
            hi = hi.min(r);
        }
    }
    if !(lo < hi) {
        return Err(Error::EmptyTruncation {
            lower: lo,
            upper: hi,
            theta: f64::NAN,
            sigma: f64::NAN,
        });
    }
    Ok((lo, hi))
}

/// Assembles the pivot for contrast `gamma` with `I_MM = (I_n)_{MM} / n`.
pub fn build_pivot(
    theta_bar: &[f64],
    sel: &SelectionEvent,
    info_pivot: &InfoEstimate,
    lambda: f64,
    n: usize,
    gamma: &[f64],
) -> Result<PivotSpec> {
    let k = sel.len();
    if theta_bar.len() != k || gamma.len() != k {
        return Err(Error::InvalidArgument("theta_bar and gamma must have length |M|".into()));
    }
    if gamma.iter().all(|g| *g == 0.0) {
        return Err(Error::InvalidArgument("gamma must be nonzero".into()));
    }
    let nf = n as f64;
    let inv = spd_inverse(&(info_pivot.block(&sel.model) / nf))?;
    let s = DVector::from_vec(sel.signs_f64());
    let neg_s = DMatrix::from_diagonal(&(-&s));
    let gamma = DVector::from_column_slice(gamma);
    let b = -(lambda / nf.sqrt()) * DMatrix::from_diagonal(&s) * &inv * &s;
    let ig = &inv * &gamma;
    let sigma2 = gamma.dot(&ig);
    let c = ig / sigma2;
    let theta = DVector::from_column_slice(theta_bar);
    let z = &theta - &c * gamma.dot(&theta);
    let slack = (&neg_s * &theta - &b)
        .iter()
        .zip(b.iter())
        .map(|(r, bj)| r / (1.0 + bj.abs()))
        .fold(f64::NEG_INFINITY, f64::max);
    let (vminus, vplus) = truncation_limits(&neg_s, &b, &c, &z)?;
    if slack > 1e-9 {
        // theta_bar breaks its own active constraint
        return Err(Error::EmptyTruncation {
            lower: vminus,
            upper: vplus,
            theta: gamma.dot(&theta),
            sigma: sigma2.sqrt(),
        });
    }
    Ok(PivotSpec {
        a: neg_s,
        b,
        gamma,
        c,
        z,
        vminus,
        vplus,
        sigma2,
    })
}

/// Two-sided `2 min(F, 1 - F)` at mean `null_value`.
pub fn selective_pvalue(spec: &PivotSpec, theta_bar: &[f64], null_value: f64) -> Result<f64> {
    let f = spec.cdf(theta_bar, null_value)?;
    Ok((2.0 * f.min(1.0 - f)).clamp(0.0, 1.0))
}

/// Equal-tailed `1 - alpha` interval for `gamma' theta` by inverting the
/// pivot, which is decreasing in its mean.
pub fn selective_ci(spec: &PivotSpec, theta_bar: &[f64], alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let low = invert(spec, theta_bar, 1.0 - alpha / 2.0)?;
    let high = invert(spec, theta_bar, alpha / 2.0)?;
    Ok((low, high))
}

/// Solves `F_theta(x) = target` for `theta`.
fn invert(spec: &PivotSpec, theta_bar: &[f64], target: f64) -> Result<f64> {
    let x = spec.statistic(theta_bar);
    let sigma = spec.sigma();
    let f = |theta: f64| spec.cdf(theta_bar, theta);
    let cap = 1e3 * sigma;
    let center = x.clamp(spec.vminus, spec.vplus);
    if !center.is_finite() {
        return Err(Error::BracketFailure { target });
    }

    // F decreases in theta: the root lies where F crosses the target from above
    let mut width = 10.0 * sigma;
    while f(center - width)? < target {
        if width >= cap {
            return Ok(f64::NEG_INFINITY);
        }
        width = (2.0 * width).min(cap);
    }
    let mut lo = center - width;
    width = 10.0 * sigma;
    while f(center + width)? > target {
        if width >= cap {
            return Ok(f64::INFINITY);
        }
        width = (2.0 * width).min(cap);
    }
    let mut hi = center + width;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if (fm - target).abs() <= 1e-12 || hi - lo <= 1e-10 * sigma {
            return Ok(mid);
        }
        if fm > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Inference for one selected coordinate, CIs on the beta scale.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateInference {
    /// Zero-based covariate index.
    pub index: usize,
    pub lasso: f64,
    pub one_step: f64,
    pub theta_bar: f64,
    pub vminus: f64,
    pub vplus: f64,
    pub sigma2: f64,
    pub p_value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone)]
pub struct InferenceReport {
    pub coordinates: Vec<CoordinateInference>,
    /// Coordinates whose pivot could not be formed, with the reason.
    pub failures: Vec<(usize, Error)>,
    pub alpha: f64,
    pub method_onestep: InfoMethod,
    pub method_pivot: InfoMethod,
    pub min_eig_mm_onestep: Option<f64>,
    pub min_eig_mm_pivot: Option<f64>,
    /// Set when nothing was selected.
    pub status: Option<String>,
}

impl InferenceReport {
    pub fn coordinate(&self, index: usize) -> Option<&CoordinateInference> {
        self.coordinates.iter().find(|c| c.index == index)
    }
}

/// One-step estimate with `info_onestep`, then a pivot per selected
/// coordinate (`gamma = e_j`) with `info_pivot`.
pub fn infer_all(
    fit: &LassoFit,
    sel: &SelectionEvent,
    info_onestep: &InfoEstimate,
    info_pivot: &InfoEstimate,
    alpha: f64,
) -> Result<InferenceReport> {
    let mut report = InferenceReport {
        coordinates: Vec::new(),
        failures: Vec::new(),
        alpha,
        method_onestep: info_onestep.method,
        method_pivot: info_pivot.method,
        min_eig_mm_onestep: None,
        min_eig_mm_pivot: None,
        status: None,
    };
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if sel.is_empty() {
        report.status = Some("nothing selected".into());
        return Ok(report);
    }
    let n = fit.n;
    let mut one = info_onestep.clone();
    let mut piv = info_pivot.clone();
    report.min_eig_mm_onestep = Some(one.record_selection(&sel.model, n));
    report.min_eig_mm_pivot = Some(piv.record_selection(&sel.model, n));
    let beta_bar = one_step_estimator(fit, sel, &one)?;
    let root_n = (n as f64).sqrt();
    let theta_bar: Vec<f64> = beta_bar.iter().map(|b| b * root_n).collect();
    spd_inverse(&(piv.block(&sel.model) / n as f64))?;

    for (pos, &j) in sel.model.iter().enumerate() {
        let mut gamma = vec![0.0; sel.len()];
        gamma[pos] = 1.0;
        let outcome = build_pivot(&theta_bar, sel, &piv, fit.penalty.lambda, n, &gamma).and_then(|spec| {
            let p_value = selective_pvalue(&spec, &theta_bar, 0.0)?;
            let (lo, hi) = selective_ci(&spec, &theta_bar, alpha)?;
            Ok(CoordinateInference {
                index: j,
                lasso: fit.beta[j],
                one_step: beta_bar[pos],
                theta_bar: theta_bar[pos],
                vminus: spec.vminus,
                vplus: spec.vplus,
                sigma2: spec.sigma2,
                p_value,
                ci_low: lo / root_n,
                ci_high: hi / root_n,
            })
        });
        match outcome {
            Ok(c) => report.coordinates.push(c),
            Err(e) => report.failures.push((j, e)),
        }
    }
    Ok(report)
}

/// Wald interval `x +- z_{1 - alpha/2} sigma` with no truncation.
pub fn wald_interval(x: f64, sigma: f64, alpha: f64) -> (f64, f64) {
    let q = quantile(1.0 - alpha / 2.0);
    (x - q * sigma, x + q * sigma)
}

/// Selected components of a full vector.
pub fn restrict(v: &[f64], sel: &SelectionEvent) -> Vec<f64> {
    subvector(v, &sel.model).iter().copied().collect()
}
