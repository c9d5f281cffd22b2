//! Observed interval-censored data.
//!
//! Each subject contributes a bracket `(L, R]` known to contain the event
//! time, plus a covariate vector. `L = 0` encodes left censoring and
//! `R = +inf` encodes right censoring.

use crate::error::{Error, Result};

/// One subject's censoring bracket and covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalObservation {
    pub left: f64,
    pub right: f64,
    pub covariates: Vec<f64>,
}

impl IntervalObservation {
    pub fn new(left: f64, right: f64, covariates: Vec<f64>) -> Self {
        Self {
            left,
            right,
            covariates,
        }
    }

    pub fn is_right_censored(&self) -> bool {
        self.right == f64::INFINITY
    }

    pub fn is_left_censored(&self) -> bool {
        self.left == 0.0
    }

    fn validate(&self, index: usize, p: usize) -> Result<()> {
        let bad = |reason: String| Error::InvalidObservation { index, reason };
        if !self.left.is_finite() || self.left < 0.0 {
            return Err(bad(format!("left endpoint {} must be finite and >= 0", self.left)));
        }
        if self.right.is_nan() || self.right <= self.left {
            return Err(bad(format!(
                "right endpoint {} must exceed left endpoint {}",
                self.right, self.left
            )));
        }
        if self.covariates.len() != p {
            return Err(bad(format!(
                "expected {p} covariates, found {}",
                self.covariates.len()
            )));
        }
        if let Some(j) = self.covariates.iter().position(|x| !x.is_finite()) {
            return Err(bad(format!("covariate {} is not finite", j + 1)));
        }
        Ok(())
    }
}

/// A validated collection of observations sharing the covariate dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalDataset {
    observations: Vec<IntervalObservation>,
    p: usize,
}

impl IntervalDataset {
    /// Validates every observation. Zero-width brackets (`L == R`) are
    /// rejected, as are datasets in which every subject is right-censored.
    pub fn new(observations: Vec<IntervalObservation>) -> Result<Self> {
        let first = observations
            .first()
            .ok_or_else(|| Error::InvalidDataset("dataset has no observations".into()))?;
        let p = first.covariates.len();
        for (i, obs) in observations.iter().enumerate() {
            obs.validate(i, p)?;
        }
        if observations.iter().all(IntervalObservation::is_right_censored) {
            return Err(Error::NoFiniteIntervals);
        }
        Ok(Self { observations, p })
    }

    pub fn observations(&self) -> &[IntervalObservation] {
        &self.observations
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Fraction of subjects with `R = +inf`.
    pub fn right_censored_fraction(&self) -> f64 {
        let k = self
            .observations
            .iter()
            .filter(|o| o.is_right_censored())
            .count();
        k as f64 / self.n() as f64
    }

    /// Linear predictors `beta' X_i` for every subject.
    pub fn linear_predictors(&self, beta: &[f64]) -> Vec<f64> {
        self.observations
            .iter()
            .map(|o| dot(&o.covariates, beta))
            .collect()
    }

    /// Same data with every time shifted by `offset`; used to check that
    /// evaluation only depends on the ordering of times.
    pub fn shifted(&self, offset: f64) -> Self {
        let observations = self
            .observations
            .iter()
            .map(|o| IntervalObservation {
                left: o.left + offset,
                right: o.right + offset,
                covariates: o.covariates.clone(),
            })
            .collect();
        Self {
            observations,
            p: self.p,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
