//! Closed-form and quadrature evaluation of the high-level asymptotics:
//! normal tail, Pickands-type rectangle tail, the scaling `m(u)` and its
//! inverse, the Gumbel-mixture limit laws, and the random-radius tails.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_half_line, normal_expectation};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;
/// Agreement required between successive Hermite orders.
pub const LAW_TOL: f64 = 1e-10;

/// Classical Pickands constant for `alpha = 1`.
pub const PICKANDS_H1: f64 = 1.0;
/// Classical Pickands constant for `alpha = 2`, `1/sqrt(pi)`.
pub const PICKANDS_H2: f64 = 0.564_189_583_547_756_3;

/// `P(W > u)` for standard normal `W`, to near full double precision.
///
/// Below `u = 1.5` a positive-term series for `erf` is used (no cancellation
/// in the series itself); above, the continued fraction of the Mills ratio.
pub fn survival_psi(u: f64) -> f64 {
    if u.is_nan() {
        return f64::NAN;
    }
    if u < 0.0 {
        return 1.0 - survival_psi(-u);
    }
    if u < 1.5 {
        0.5 - 0.5 * erf_series(u / std::f64::consts::SQRT_2)
    } else {
        mills_ratio(u) * (-(0.5 * u * u) - LN_SQRT_2PI).exp()
    }
}

/// `erf(x) = 2/sqrt(pi) exp(-x^2) sum_n 2^n x^(2n+1) / (1 3 5 ... (2n+1))`.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    while term > 1e-17 * sum {
        k += 1.0;
        term *= 2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
    }
    2.0 / std::f64::consts::PI.sqrt() * (-x2).exp() * sum
}

/// `P(W > u) / phi(u)` for `u >= 1.5`, by the continued fraction
/// `1/(u + 1/(u + 2/(u + ...)))` evaluated bottom-up.
fn mills_ratio(u: f64) -> f64 {
    if u < 1.5 {
        return survival_psi(u) / (-(0.5 * u * u) - LN_SQRT_2PI).exp();
    }
    let mut tail = u;
    for k in (1..400).rev() {
        tail = u + k as f64 / tail;
    }
    1.0 / tail
}

/// `ln P(W > u)`, accurate where `P(W > u)` itself would underflow.
pub fn ln_survival_psi(u: f64) -> f64 {
    if u < 5.0 {
        survival_psi(u).ln()
    } else {
        mills_ratio(u).ln() - 0.5 * u * u - LN_SQRT_2PI
    }
}

/// `Psi(u) sqrt(2 pi) u exp(u^2/2)`; tends to 1 and lies in `(u^2/(1+u^2), 1)`.
pub fn mills_ratio_check(u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::InvalidParameter(format!("u = {u} must be positive")));
    }
    Ok(u * mills_ratio(u))
}

/// How the product `m = m1 m2` is split between the two axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    /// `m1 = m2 = sqrt(m)`.
    #[default]
    Symmetric,
    /// `m1 / m2 = aspect`.
    Aspect(f64),
}

/// Exponents and Pickands constants entering the tail of the rectangle
/// supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    pub alpha1: f64,
    pub alpha2: f64,
    pub h1: f64,
    pub h2: f64,
    #[serde(default)]
    pub split: Split,
}

/// Classical constant for `alpha` in `{1, 2}`; `None` otherwise.
pub fn classical_pickands(alpha: f64) -> Option<f64> {
    if alpha == 1.0 {
        Some(PICKANDS_H1)
    } else if alpha == 2.0 {
        Some(PICKANDS_H2)
    } else {
        None
    }
}

impl ScalingSpec {
    /// Spec with the classical constants; other exponents need
    /// [`ScalingSpec::with_constants`].
    pub fn classical(alpha1: f64, alpha2: f64) -> Result<Self> {
        let h1 = classical_pickands(alpha1)
            .ok_or_else(|| Error::InvalidParameter(format!("no classical Pickands constant for alpha = {alpha1}")))?;
        let h2 = classical_pickands(alpha2)
            .ok_or_else(|| Error::InvalidParameter(format!("no classical Pickands constant for alpha = {alpha2}")))?;
        Self::with_constants(alpha1, alpha2, h1, h2)
    }

    pub fn with_constants(alpha1: f64, alpha2: f64, h1: f64, h2: f64) -> Result<Self> {
        let s = Self { alpha1, alpha2, h1, h2, split: Split::Symmetric };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for a in [self.alpha1, self.alpha2] {
            if !(a > 0.0 && a <= 2.0) {
                return Err(Error::InvalidParameter(format!("alpha = {a} not in (0, 2]")));
            }
        }
        for h in [self.h1, self.h2] {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidParameter(format!("Pickands constant {h} must be positive")));
            }
        }
        if let Split::Aspect(k) = self.split {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::InvalidParameter(format!("aspect {k} must be positive")));
            }
        }
        Ok(())
    }

    /// `2/alpha1 + 2/alpha2`.
    pub fn exponent(&self) -> f64 {
        2.0 / self.alpha1 + 2.0 / self.alpha2
    }

    /// `ln(H1 H2 u^(2/a1 + 2/a2) Psi(u))`.
    pub fn ln_unit_tail(&self, u: f64) -> f64 {
        (self.h1 * self.h2).ln() + self.exponent() * u.ln() + ln_survival_psi(u)
    }

    fn unit_tail(&self, u: f64) -> f64 {
        self.h1 * self.h2 * u.powf(self.exponent()) * survival_psi(u)
    }
}

/// `H1 H2 g h u^(2/a1) u^(2/a2) Psi(u)`, the first-order tail of the
/// supremum over `[0,g] x [0,h]`.
pub fn tail_rect(g: f64, h: f64, u: f64, spec: &ScalingSpec) -> Result<f64> {
    if !(g >= 0.0 && h >= 0.0) {
        return Err(Error::InvalidParameter("side lengths must be nonnegative".into()));
    }
    if !(u > 0.0) {
        return Err(Error::InvalidParameter(format!("u = {u} must be positive")));
    }
    if g == 0.0 || h == 0.0 {
        return Ok(0.0);
    }
    let v = g * h * spec.unit_tail(u);
    if v >= 1.0 {
        return Err(Error::NotInAsymptoticRegime(v));
    }
    Ok(v)
}

/// Axis scalings `(m1, m2, m)` with `m = 1 / (H1 H2 u^(2/a1+2/a2) Psi(u))`.
pub fn scaling_m(u: f64, spec: &ScalingSpec) -> Result<(f64, f64, f64)> {
    if !(u > 0.0) {
        return Err(Error::InvalidParameter(format!("u = {u} must be positive")));
    }
    let m = 1.0 / spec.unit_tail(u);
    Ok(split_m(m, spec.split))
}

/// Splits an area `m` into axis lengths.
pub fn split_m(m: f64, split: Split) -> (f64, f64, f64) {
    match split {
        Split::Symmetric => {
            let s = m.sqrt();
            (s, s, m)
        }
        Split::Aspect(k) => {
            let m2 = (m / k).sqrt();
            (k * m2, m2, m)
        }
    }
}

/// Threshold from the expansion
/// `u^2 = 2 ln N + (k-1) ln ln N + 2 ln(H1 H2 2^(k/2) / (2 sqrt(pi)))`,
/// `k = 2/a1 + 2/a2`.
pub fn threshold_expansion(n: f64, spec: &ScalingSpec) -> Result<f64> {
    if !(n > std::f64::consts::E) {
        return Err(Error::InvalidParameter(format!("N = {n} must exceed e")));
    }
    let k = spec.exponent();
    let ln_n = n.ln();
    let c = 2.0 * (spec.h1 * spec.h2 * 2f64.powf(k / 2.0) / (2.0 * std::f64::consts::PI.sqrt())).ln();
    let u2 = 2.0 * ln_n + (k - 1.0) * ln_n.ln() + c;
    if u2 <= 0.0 {
        return Err(Error::NoRoot(n));
    }
    Ok(u2.sqrt())
}

/// Minimiser of `m(u)`: solves `u phi(u) / Psi(u) = k`.
fn monotone_start(spec: &ScalingSpec) -> f64 {
    let k = spec.exponent();
    let f = |u: f64| u / mills_ratio(u) - k;
    let (mut lo, mut hi) = (1e-9, k.sqrt() + 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Solves `m(u) = N` on the increasing branch of `m`.
pub fn threshold_for_area(n: f64, spec: &ScalingSpec) -> Result<f64> {
    if !(n > 1.0) || !n.is_finite() {
        return Err(Error::InvalidParameter(format!("N = {n} must be a finite number above 1")));
    }
    let target = n.ln();
    // g(u) = ln m(u) - ln N, increasing on [u_min, inf)
    let g = |u: f64| -spec.ln_unit_tail(u) - target;
    let u_min = monotone_start(spec);
    if g(u_min) >= 0.0 {
        return Err(Error::NoRoot(n));
    }
    let mut hi = threshold_expansion(n, spec).unwrap_or(u_min + 1.0).max(u_min + 1e-3);
    while g(hi) < 0.0 {
        hi = 2.0 * hi + 1.0;
    }
    let mut lo = u_min;
    let mut u = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gu = g(u);
        if gu == 0.0 {
            break;
        }
        if gu > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        // g'(u) = phi/Psi - k/u
        let dg = 1.0 / mills_ratio(u) - spec.exponent() / u;
        let newton = u - gu / dg;
        let next = if dg > 0.0 && newton >= lo && newton <= hi { newton } else { 0.5 * (lo + hi) };
        let done = (next - u).abs() <= 4.0 * f64::EPSILON * u;
        u = next;
        if done {
            break;
        }
    }
    Ok(u)
}

/// Exponent convention of the Gumbel mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    /// `V = -r + sqrt(2 r) W`.
    OneD,
    /// `V = -2 r + 2 sqrt(r) W`.
    #[default]
    TwoD,
}

impl Flavor {
    /// `(mean, std)` of `V`.
    pub fn moments(self, r: f64) -> (f64, f64) {
        match self {
            Flavor::OneD => (-r, (2.0 * r).sqrt()),
            Flavor::TwoD => (-2.0 * r, 2.0 * r.sqrt()),
        }
    }
}

/// Parameters of the limit `E exp(-c exp(V))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLawSpec {
    pub c: f64,
    pub r: f64,
    #[serde(default)]
    pub flavor: Flavor,
}

impl LimitLawSpec {
    pub fn two_d(c: f64, r: f64) -> Self {
        Self { c, r, flavor: Flavor::TwoD }
    }

    pub fn one_d(c: f64, r: f64) -> Self {
        Self { c, r, flavor: Flavor::OneD }
    }
}

/// `E exp(-c exp(V))` by Gauss-Hermite quadrature with order escalation.
pub fn limit_law(spec: &LimitLawSpec) -> Result<f64> {
    let LimitLawSpec { c, r, flavor } = *spec;
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("c = {c} must be finite and nonnegative")));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("r = {r} must be finite and nonnegative")));
    }
    if c == 0.0 {
        return Ok(1.0);
    }
    if r == 0.0 {
        return Ok((-c).exp());
    }
    let (mu, sigma) = flavor.moments(r);
    Ok(normal_expectation(|w| (-c * (mu + sigma * w).exp()).exp(), LAW_TOL).value)
}

/// Limit for the ball of radius `x sqrt(m(u))`: `c = pi x^2`.
pub fn ball_law(x: f64, r: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!("x = {x} must be nonnegative")));
    }
    limit_law(&LimitLawSpec::two_d(std::f64::consts::PI * x * x, r))
}

/// `C = int_0^inf x^(1-lambda) E exp(-pi x^2 e^V + V) dx`, `V = 2 sqrt(r) W - 2r`.
///
/// The substitution `x = y^(1/(2-lambda))` removes the endpoint singularity;
/// the inner expectation is Gauss-Hermite, the outer integral adaptive
/// Gauss-Kronrod on the half line.
pub fn radial_constant_c(lambda: f64, r: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be nonnegative")));
    }
    if lambda >= 2.0 || !lambda.is_finite() {
        return Err(Error::Nonintegrable(lambda));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("r = {r} must be nonnegative")));
    }
    let pi = std::f64::consts::PI;
    let p = 2.0 / (2.0 - lambda);
    let jac = 1.0 / (2.0 - lambda);
    let (mu, sigma) = Flavor::TwoD.moments(r);
    let inner = |y: f64| -> f64 {
        let a = pi * y.powf(p);
        if r == 0.0 {
            (-a).exp()
        } else {
            normal_expectation(
                |w| {
                    let v = mu + sigma * w;
                    (-a * v.exp() + v).exp()
                },
                1e-13,
            )
            .value
        }
    };
    let (v, _) = integrate_half_line(|y| jac * inner(y), 1e-13, 1e-10);
    Ok(v)
}

/// Tail regime of the random radius `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialCase {
    FiniteSecondMoment,
    /// Survival `P(T > x) = x^(-lambda) l(x)`, `lambda < 2`.
    RegularlyVarying {
        lambda: f64,
    },
    SlowlyVarying,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialSpec {
    pub case: RadialCase,
    /// `E[T^2]`, needed for the finite second moment case.
    pub et2: Option<f64>,
    /// Long-range level `r` of the field.
    #[serde(default)]
    pub r: f64,
}

/// Built-in survival functions for the radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Survival {
    /// `T = value` almost surely.
    PointMass { value: f64 },
    /// `P(T > x) = (x / x0)^(-lambda)` for `x >= x0`.
    Pareto { x0: f64, lambda: f64 },
    /// `P(T > x) = (1 + ln(x / x0))^(-beta)` for `x >= x0`; slowly varying.
    LogPareto { x0: f64, beta: f64 },
}

impl Survival {
    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            Survival::PointMass { value } => {
                if x < value {
                    1.0
                } else {
                    0.0
                }
            }
            Survival::Pareto { x0, lambda } => {
                if x < x0 {
                    1.0
                } else {
                    (x / x0).powf(-lambda)
                }
            }
            Survival::LogPareto { x0, beta } => {
                if x < x0 {
                    1.0
                } else {
                    (1.0 + (x / x0).ln()).powf(-beta)
                }
            }
        }
    }

    /// Inverse-transform draw from a uniform `v` in `(0, 1]`.
    pub fn quantile_upper(&self, v: f64) -> f64 {
        match *self {
            Survival::PointMass { value } => value,
            Survival::Pareto { x0, lambda } => x0 * v.powf(-1.0 / lambda),
            Survival::LogPareto { x0, beta } => x0 * (v.powf(-1.0 / beta) - 1.0).exp(),
        }
    }

    /// `E[T^2]` when finite.
    pub fn second_moment(&self) -> Option<f64> {
        match *self {
            Survival::PointMass { value } => Some(value * value),
            Survival::Pareto { x0, lambda } if lambda > 2.0 => Some(lambda * x0 * x0 / (lambda - 2.0)),
            _ => None,
        }
    }
}

/// Leading-order `P(sup over B(0,T) > u)` for the matching regime.
pub fn radial_tail(
    u: f64,
    spec: &RadialSpec,
    scaling: &ScalingSpec,
    survival: Option<&dyn Fn(f64) -> f64>,
) -> Result<f64> {
    let pi = std::f64::consts::PI;
    match spec.case {
        RadialCase::FiniteSecondMoment => {
            let et2 = spec.et2.ok_or(Error::MissingMoment)?;
            Ok(pi * et2 * scaling.unit_tail(u))
        }
        RadialCase::RegularlyVarying { lambda } => {
            let sf = survival.ok_or(Error::MissingSurvival)?;
            let c = radial_constant_c(lambda, spec.r)?;
            let (_, _, m) = scaling_m(u, scaling)?;
            Ok(2.0 * pi * c * sf(m.sqrt()))
        }
        RadialCase::SlowlyVarying => {
            let sf = survival.ok_or(Error::MissingSurvival)?;
            let (_, _, m) = scaling_m(u, scaling)?;
            Ok(sf(m.sqrt()))
        }
    }
}

/// `Var(exp(-exp(V_r)))` for `V_r = 2 sqrt(r) W - 2r`.
pub fn var_gumbel_mix(r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("r = {r} must be nonnegative")));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let (mu, sigma) = Flavor::TwoD.moments(r);
    let g = |w: f64| (-(mu + sigma * w).exp()).exp();
    let mean = normal_expectation(g, LAW_TOL * 1e-2).value;
    // Centred second moment avoids the cancellation in E g^2 - (E g)^2.
    Ok(normal_expectation(|w| (g(w) - mean).powi(2), LAW_TOL * 1e-2).value)
}

/// `Gamma(1 - lambda/2) pi^(lambda/2 - 1) / 2 * exp(-r lambda (1 - lambda/2))`,
/// the closed form of [`radial_constant_c`] obtained by integrating in `x`
/// first. Exposed for cross-checks.
pub fn radial_constant_closed_form(lambda: f64, r: f64) -> f64 {
    let pi = std::f64::consts::PI;
    gamma(1.0 - lambda / 2.0) * pi.powf(lambda / 2.0 - 1.0) / 2.0 * (-r * lambda * (1.0 - lambda / 2.0)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn normal_tail_oracle(u: f64) -> f64 {
        // adaptive quadrature of the density over [u, u + 40]
        let phi = |x: f64| (-(0.5 * x * x) - LN_SQRT_2PI).exp();
        integrate(phi, u, u + 40.0, 1e-300, 1e-14).0
    }

    #[test]
    fn psi_values() {
        assert_eq!(survival_psi(0.0), 0.5);
        let oracle = normal_tail_oracle(1.0);
        assert_abs_diff_eq!(oracle, 0.158655, epsilon = 1e-6);
        assert_relative_eq!(survival_psi(1.0), oracle, max_relative = 1e-12);
        assert_relative_eq!(survival_psi(-1.0), 1.0 - survival_psi(1.0), max_relative = 1e-14);
        for u in [2.0, 4.0, 7.5, 12.0] {
            assert_relative_eq!(survival_psi(u), normal_tail_oracle(u), max_relative = 1e-12);
        }
    }

    #[test]
    fn ln_psi_matches_direct_and_extends() {
        for u in [0.5, 3.0, 6.0, 15.0, 25.0] {
            assert_relative_eq!(ln_survival_psi(u), survival_psi(u).ln(), max_relative = 1e-12);
        }
        assert!(ln_survival_psi(60.0).is_finite());
    }

    #[test]
    fn mills_bounds() {
        for u in [0.5, 1.0, 2.0, 5.0, 10.0, 30.0] {
            let v = mills_ratio_check(u).unwrap();
            assert!(v > u * u / (1.0 + u * u) && v < 1.0, "{u}: {v}");
        }
        assert!(mills_ratio_check(5.0).unwrap() > 25.0 / 26.0);
        assert!((mills_ratio_check(20.0).unwrap() - 1.0).abs() < 1e-2);
        assert!(mills_ratio_check(0.0).is_err());
    }

    #[test]
    fn tail_rect_values() {
        // alpha = 2: u^(2/a1 + 2/a2) = u^2
        let s2 = ScalingSpec::classical(2.0, 2.0).unwrap();
        let v = tail_rect(1.0, 1.0, 4.0, &s2).unwrap();
        assert_relative_eq!(v, 16.0 / std::f64::consts::PI * survival_psi(4.0), max_relative = 1e-14);
        // alpha = 1 with H = 1/sqrt(pi) injected gives 256/pi Psi(4)
        let s1 = ScalingSpec::with_constants(1.0, 1.0, PICKANDS_H2, PICKANDS_H2).unwrap();
        let v1 = tail_rect(1.0, 1.0, 4.0, &s1).unwrap();
        assert_abs_diff_eq!(v1, 2.581e-3, epsilon = 1e-6);
        assert_eq!(tail_rect(0.0, 1.0, 4.0, &s1).unwrap(), 0.0);
        assert_eq!(tail_rect(2.0, 1.0, 4.0, &s1).unwrap(), 2.0 * v1);
        assert!(matches!(tail_rect(100.0, 100.0, 2.0, &s1), Err(Error::NotInAsymptoticRegime(_))));
    }

    #[test]
    fn scaling_m_values() {
        let s1 = ScalingSpec::with_constants(1.0, 1.0, PICKANDS_H2, PICKANDS_H2).unwrap();
        let (m1, m2, m) = scaling_m(4.0, &s1).unwrap();
        assert_abs_diff_eq!(m, 387.4, epsilon = 0.1);
        assert_relative_eq!(m1 * m2, m, max_relative = 1e-15);
        let s = ScalingSpec::classical(1.0, 1.0).unwrap();
        let mut prev = 0.0;
        for k in 0..=70 {
            let u = 3.0 + 0.1 * k as f64;
            let (_, _, m) = scaling_m(u, &s).unwrap();
            assert!(m > prev);
            prev = m;
            let t = tail_rect(1.0, 1.0, u, &s).unwrap();
            assert_abs_diff_eq!(m * t, 1.0, epsilon = 4.0 * f64::EPSILON);
        }
        let s = ScalingSpec { split: Split::Aspect(4.0), ..s };
        let (m1, m2, m) = scaling_m(4.0, &s).unwrap();
        assert_relative_eq!(m1 / m2, 4.0, max_relative = 1e-14);
        assert_relative_eq!(m1 * m2, m, max_relative = 1e-14);
    }

    #[test]
    fn threshold_roundtrip_and_expansion() {
        for (a1, a2) in [(1.0, 1.0), (2.0, 2.0), (1.0, 2.0)] {
            let s = ScalingSpec::classical(a1, a2).unwrap();
            for k in 0..=16 {
                let u = 2.0 + 0.5 * k as f64;
                let (_, _, m) = scaling_m(u, &s).unwrap();
                if m <= 1.0 {
                    continue;
                }
                let back = threshold_for_area(m, &s).unwrap();
                assert_abs_diff_eq!(back, u, epsilon = 1e-8);
            }
            let root = threshold_for_area(1e4, &s).unwrap();
            let guess = threshold_expansion(1e4, &s).unwrap();
            assert!((root - guess).abs() < 0.5, "{a1},{a2}: {root} vs {guess}");
            let (_, _, m) = scaling_m(root, &s).unwrap();
            assert!(((m - 1e4) / 1e4).abs() < 1e-10);
            assert!(threshold_for_area(2e4, &s).unwrap() > root);
        }
    }

    #[test]
    fn threshold_below_monotone_range() {
        let s = ScalingSpec::classical(1.0, 1.0).unwrap();
        assert!(matches!(threshold_for_area(1.5, &s), Err(Error::NoRoot(_))));
    }

    #[test]
    fn limit_law_degenerate() {
        assert_abs_diff_eq!(limit_law(&LimitLawSpec::two_d(1.0, 0.0)).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(limit_law(&LimitLawSpec::two_d(1.0, 0.0)).unwrap(), 0.3678794, epsilon = 1e-7);
        for r in [0.0, 0.3, 2.0] {
            assert_eq!(limit_law(&LimitLawSpec::two_d(0.0, r)).unwrap(), 1.0);
            assert_eq!(limit_law(&LimitLawSpec::one_d(0.0, r)).unwrap(), 1.0);
        }
        assert!(limit_law(&LimitLawSpec::two_d(-1.0, 0.0)).is_err());
    }

    #[test]
    fn one_d_is_two_d_with_halved_level() {
        // -r + sqrt(2r) W  ==  -2(r/2) + 2 sqrt(r/2) W
        for r in [0.2, 1.0, 1.7] {
            let a = limit_law(&LimitLawSpec::one_d(1.3, r)).unwrap();
            let b = limit_law(&LimitLawSpec::two_d(1.3, r / 2.0)).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn ball_law_reductions() {
        assert_eq!(ball_law(0.0, 0.7).unwrap(), 1.0);
        let x = 1.0 / std::f64::consts::PI.sqrt();
        assert_abs_diff_eq!(ball_law(x, 0.0).unwrap(), (-1.0f64).exp(), epsilon = 1e-12);
        for (x, r) in [(0.3, 0.2), (1.1, 1.5)] {
            let c = std::f64::consts::PI * x * x;
            assert_eq!(ball_law(x, r).unwrap(), limit_law(&LimitLawSpec::two_d(c, r)).unwrap());
        }
    }

    #[test]
    fn radial_constant_against_gamma_reduction() {
        assert_abs_diff_eq!(radial_constant_c(1.0, 0.0).unwrap(), 0.5, epsilon = 1e-9);
        for lambda in [0.0, 0.5, 1.0, 1.5] {
            let c = radial_constant_c(lambda, 0.0).unwrap();
            let pi = std::f64::consts::PI;
            let closed = pi.powf(lambda / 2.0) * gamma(1.0 - lambda / 2.0);
            assert_relative_eq!(2.0 * pi * c, closed, max_relative = 1e-8);
        }
        for (lambda, r) in [(0.5, 0.5), (1.0, 1.0), (1.5, 0.25)] {
            let c = radial_constant_c(lambda, r).unwrap();
            assert_relative_eq!(c, radial_constant_closed_form(lambda, r), max_relative = 1e-7);
        }
        assert!(matches!(radial_constant_c(2.0, 0.0), Err(Error::Nonintegrable(_))));
    }

    #[test]
    fn radial_tail_cases() {
        let u = 4.0;
        let s2 = ScalingSpec::classical(2.0, 2.0).unwrap();
        let fin = RadialSpec { case: RadialCase::FiniteSecondMoment, et2: Some(1.0), r: 0.0 };
        assert_relative_eq!(radial_tail(u, &fin, &s2, None).unwrap(), 16.0 * survival_psi(4.0), max_relative = 1e-14);
        let s1 = ScalingSpec::with_constants(1.0, 1.0, PICKANDS_H2, PICKANDS_H2).unwrap();
        assert_abs_diff_eq!(radial_tail(u, &fin, &s1, None).unwrap(), 8.108e-3, epsilon = 1e-6);
        let no_moment = RadialSpec { et2: None, ..fin };
        assert_eq!(radial_tail(u, &no_moment, &s1, None), Err(Error::MissingMoment));

        let pareto = Survival::Pareto { x0: 1.0, lambda: 1.0 };
        let sf = |x: f64| pareto.survival(x);
        let rv = RadialSpec { case: RadialCase::RegularlyVarying { lambda: 1.0 }, et2: None, r: 0.0 };
        let (_, _, m) = scaling_m(u, &s1).unwrap();
        assert_relative_eq!(
            radial_tail(u, &rv, &s1, Some(&sf)).unwrap(),
            std::f64::consts::PI / m.sqrt(),
            max_relative = 1e-8
        );
        assert_eq!(radial_tail(u, &rv, &s1, None), Err(Error::MissingSurvival));

        let logp = Survival::LogPareto { x0: 1.0, beta: 2.0 };
        let sf = |x: f64| logp.survival(x);
        let sv = RadialSpec { case: RadialCase::SlowlyVarying, et2: None, r: 0.0 };
        assert_eq!(radial_tail(u, &sv, &s1, Some(&sf)).unwrap(), logp.survival(m.sqrt()));
    }

    #[test]
    fn survival_quantiles_invert() {
        for s in [Survival::Pareto { x0: 2.0, lambda: 1.3 }, Survival::LogPareto { x0: 1.0, beta: 0.5 }] {
            for v in [0.9, 0.5, 0.2] {
                assert_relative_eq!(s.survival(s.quantile_upper(v)), v, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn gumbel_mix_variance() {
        assert_eq!(var_gumbel_mix(0.0).unwrap(), 0.0);
        let v = var_gumbel_mix(0.5).unwrap();
        let l2 = limit_law(&LimitLawSpec::two_d(2.0, 0.5)).unwrap();
        let l1 = limit_law(&LimitLawSpec::two_d(1.0, 0.5)).unwrap();
        assert_abs_diff_eq!(v, l2 - l1 * l1, epsilon = 1e-10);
        assert!(v > 0.0);
        assert!(var_gumbel_mix(1e-6).unwrap() < 1e-4);
        assert!(var_gumbel_mix(1e-6).unwrap() > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn law_decreasing_in_c_and_above_jensen(c in 0.01f64..6.0, dc in 0.01f64..3.0, r in 0.0f64..2.0) {
            let a = limit_law(&LimitLawSpec::two_d(c, r)).unwrap();
            let b = limit_law(&LimitLawSpec::two_d(c + dc, r)).unwrap();
            prop_assert!(b < a);
            prop_assert!(a <= 1.0 && a > 0.0);
            prop_assert!(a >= (-c).exp() - 1e-12);
            if r > 1e-3 {
                prop_assert!(a > (-c).exp());
            }
        }
    }

    #[test]
    fn law_tends_to_zero() {
        for r in [0.0, 0.5, 2.0] {
            assert!(limit_law(&LimitLawSpec::two_d(1e6, r)).unwrap() < 0.05);
        }
    }
}
