//! Step-function cumulative hazards and signed directions on the same support.

use crate::error::{Error, Result};

/// Nondecreasing right-continuous step function
/// `Lambda(t) = sum_{k : u_k <= t} jump_k` with nonnegative jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCumHazard {
    support: Vec<f64>,
    jumps: Vec<f64>,
}

impl StepCumHazard {
    pub fn new(support: Vec<f64>, jumps: Vec<f64>) -> Result<Self> {
        check_support(&support, jumps.len())?;
        if let Some(k) = jumps.iter().position(|j| !(j.is_finite() && *j >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "jump {k} = {} must be finite and nonnegative",
                jumps[k]
            )));
        }
        Ok(Self { support, jumps })
    }

    /// Equal jumps totalling one; the deterministic starting point for fits.
    pub fn equal_mass(support: Vec<f64>) -> Result<Self> {
        let m = support.len();
        if m == 0 {
            return Err(Error::InvalidArgument("empty support".into()));
        }
        Self::new(support, vec![1.0 / m as f64; m])
    }

    pub(crate) fn from_parts_unchecked(support: Vec<f64>, jumps: Vec<f64>) -> Self {
        Self { support, jumps }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.jumps.iter().sum()
    }

    /// `Lambda(t)`; zero before the first support point, `+inf` at `t = +inf`.
    pub fn eval(&self, t: f64) -> f64 {
        if t == f64::INFINITY {
            return f64::INFINITY;
        }
        let idx = count_at_or_below(&self.support, t);
        self.jumps[..idx].iter().sum()
    }
}

/// Signed increments on a support; the tangent directions `g` used for
/// nuisance scores. Shares the layout of [`StepCumHazard`] without the sign
/// restriction.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDirection {
    support: Vec<f64>,
    increments: Vec<f64>,
}

impl StepDirection {
    pub fn new(support: Vec<f64>, increments: Vec<f64>) -> Result<Self> {
        check_support(&support, increments.len())?;
        if increments.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidArgument("direction increments must be finite".into()));
        }
        Ok(Self {
            support,
            increments,
        })
    }

    /// The indicator `I(t >= u_k)`.
    pub fn unit(support: &[f64], k: usize) -> Self {
        let mut increments = vec![0.0; support.len()];
        increments[k] = 1.0;
        Self {
            support: support.to_vec(),
            increments,
        }
    }

    /// The direction `hazard` itself (scaling submodel).
    pub fn along(hazard: &StepCumHazard) -> Self {
        Self {
            support: hazard.support.clone(),
            increments: hazard.jumps.clone(),
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn eval(&self, t: f64) -> f64 {
        let idx = count_at_or_below(&self.support, t);
        self.increments[..idx].iter().sum()
    }
}

/// Regression coefficients together with the baseline cumulative hazard.
#[derive(Debug, Clone, PartialEq)]
pub struct CoxParams {
    pub beta: Vec<f64>,
    pub lambda0: StepCumHazard,
}

impl CoxParams {
    pub fn new(beta: Vec<f64>, lambda0: StepCumHazard) -> Result<Self> {
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("beta must be finite".into()));
        }
        Ok(Self { beta, lambda0 })
    }
}

/// Number of support points `<= t` (binary search).
pub(crate) fn count_at_or_below(support: &[f64], t: f64) -> usize {
    support.partition_point(|&u| u <= t)
}

fn check_support(support: &[f64], values: usize) -> Result<()> {
    if support.len() != values {
        return Err(Error::InvalidArgument(format!(
            "support has {} points but {} values were given",
            support.len(),
            values
        )));
    }
    if support.iter().any(|u| !u.is_finite() || *u <= 0.0) {
        return Err(Error::InvalidArgument("support points must be finite and positive".into()));
    }
    if support.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("support must be strictly increasing".into()));
    }
    Ok(())
}
