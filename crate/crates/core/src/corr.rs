//! Stationary correlation families and numerical checks of the local,
//! non-degeneracy and long-range conditions they are expected to satisfy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form correlation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `r(s,t) = exp(-|s|^a1 - |t|^a2)`.
    #[default]
    SeparableStable,
}

/// A stationary correlation function `r(s,t)` of a homogeneous field.
///
/// `r_longrange` is the level `r` of the long-range condition
/// `sup_{|(s,t)|=d} |r(s,t) log d - r| -> 0`. The closed-form family itself
/// always has level 0; a positive level is realised by the strong mixture in
/// [`crate::field`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationModel {
    pub alpha1: f64,
    pub alpha2: f64,
    #[serde(default)]
    pub r_longrange: f64,
    #[serde(default)]
    pub family: Family,
}

impl CorrelationModel {
    pub fn separable(alpha1: f64, alpha2: f64) -> Result<Self> {
        let m = Self { alpha1, alpha2, r_longrange: 0.0, family: Family::SeparableStable };
        m.validate()?;
        Ok(m)
    }

    pub fn with_longrange(mut self, r: f64) -> Result<Self> {
        self.r_longrange = r;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("alpha1", self.alpha1), ("alpha2", self.alpha2)] {
            if !(a > 0.0 && a <= 2.0) {
                return Err(Error::InvalidParameter(format!("{name} = {a} not in (0, 2]")));
            }
        }
        if !(self.r_longrange >= 0.0 && self.r_longrange.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "r_longrange = {} must be a finite nonnegative number",
                self.r_longrange
            )));
        }
        Ok(())
    }

    /// Exponent sum `|s|^a1 + |t|^a2`.
    #[inline]
    pub fn local_norm(&self, s: f64, t: f64) -> f64 {
        s.abs().powf(self.alpha1) + t.abs().powf(self.alpha2)
    }

    /// `r(s,t)`.
    #[inline]
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        match self.family {
            Family::SeparableStable => (-self.local_norm(s, t)).exp(),
        }
    }

    /// One-dimensional factor along the s axis.
    #[inline]
    pub fn axis1(&self, s: f64) -> f64 {
        (-s.abs().powf(self.alpha1)).exp()
    }

    /// One-dimensional factor along the t axis.
    #[inline]
    pub fn axis2(&self, t: f64) -> f64 {
        (-t.abs().powf(self.alpha2)).exp()
    }

    /// `1 - r(s,t)` without cancellation near the origin.
    #[inline]
    pub fn one_minus(&self, s: f64, t: f64) -> f64 {
        match self.family {
            Family::SeparableStable => -(-self.local_norm(s, t)).exp_m1(),
        }
    }
}

/// Free-function form of [`CorrelationModel::eval`].
pub fn eval_correlation(model: &CorrelationModel, s: f64, t: f64) -> f64 {
    model.eval(s, t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalCheckReport {
    /// `(h, |1 - r(h,h) - (h^a1 + h^a2)| / (h^a1 + h^a2))` along the ladder.
    pub ladder: Vec<(f64, f64)>,
    /// Relative error at the smallest lag.
    pub max_relative_error: f64,
    pub passed: bool,
}

/// Checks the local expansion `1 - r(s,t) ~ |s|^a1 + |t|^a2` on diagonal lags.
pub fn check_a1(model: &CorrelationModel, lag_ladder: &[f64], tol: f64) -> Result<LocalCheckReport> {
    if lag_ladder.is_empty() {
        return Err(Error::InvalidLadder("empty".into()));
    }
    for (i, &h) in lag_ladder.iter().enumerate() {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidLadder(format!("lag {h} is not positive")));
        }
        if i > 0 && h >= lag_ladder[i - 1] {
            return Err(Error::InvalidLadder(format!("lag {h} does not decrease from {}", lag_ladder[i - 1])));
        }
    }
    let ladder: Vec<(f64, f64)> = lag_ladder
        .iter()
        .map(|&h| {
            let norm = model.local_norm(h, h);
            (h, (model.one_minus(h, h) - norm).abs() / norm)
        })
        .collect();
    let last = ladder.last().map(|&(_, e)| e).unwrap_or(f64::NAN);
    Ok(LocalCheckReport { ladder, max_relative_error: last, passed: last < tol })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongRangeReport {
    /// `(d, sup over the circle of |r log d - r_longrange|)`.
    pub deviations: Vec<(f64, f64)>,
    /// Deviations are non-increasing along the radii.
    pub decreasing: bool,
}

/// Evaluates the long-range condition on circles of the given radii.
pub fn check_a3(model: &CorrelationModel, radii: &[f64], n_angles: usize) -> Result<LongRangeReport> {
    if n_angles < 8 {
        return Err(Error::InvalidParameter(format!("n_angles = {n_angles} < 8")));
    }
    for (i, &d) in radii.iter().enumerate() {
        if !(d > 1.0) {
            return Err(Error::RadiusTooSmall(d));
        }
        if i > 0 && d <= radii[i - 1] {
            return Err(Error::InvalidParameter("radii must increase".into()));
        }
    }
    let deviations: Vec<(f64, f64)> = radii
        .iter()
        .map(|&d| {
            let ld = d.ln();
            let sup = (0..n_angles)
                .map(|k| {
                    let th = std::f64::consts::TAU * k as f64 / n_angles as f64;
                    (model.eval(d * th.cos(), d * th.sin()) * ld - model.r_longrange).abs()
                })
                .fold(0.0_f64, f64::max);
            (d, sup)
        })
        .collect();
    let decreasing = deviations.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(LongRangeReport { deviations, decreasing })
}

/// Dense correlation matrix of the grid points `(i*q1, j*q2)`, row-major in
/// `(i, j)`.
pub fn grid_covariance(model: &CorrelationModel, n1: usize, n2: usize, q1: f64, q2: f64) -> Vec<f64> {
    let n = n1 * n2;
    let mut c = vec![0.0; n * n];
    for a in 0..n {
        let (i, j) = (a / n2, a % n2);
        for b in 0..n {
            let (k, l) = (b / n2, b % n2);
            c[a * n + b] = model.eval((i as f64 - k as f64) * q1, (j as f64 - l as f64) * q2);
        }
    }
    c
}
