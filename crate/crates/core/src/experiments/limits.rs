//! Rectangles, balls, pixelated sets and random-radius balls.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    calibrate, count_below, points_below, Calibration, ExperimentConfig, ExperimentResult, FieldDraw, ThresholdRule,
};
use crate::asymptotics::{ball_law, limit_law, radial_tail, LimitLawSpec, RadialSpec, Survival};
use crate::error::{Error, Result};
use crate::field::{make_eps_net_disk, Ball, GridSpec, Rect, Region, RegionIndex, SimpleSet};
use crate::parallel::map_chunks;
use crate::rng::{replicate_rng, streams};
use crate::stats::binomial_stderr;

/// `P(max over [0, x m1) x [0, y m2) <= u)` against `E exp(-x y e^V)`.
pub fn run_rect_limit(cfg: &ExperimentConfig, x: f64, y: f64) -> Result<ExperimentResult> {
    if !(x >= 0.0 && y >= 0.0 && x.is_finite() && y.is_finite()) {
        return Err(Error::InvalidParameter(format!("domain ({x}, {y}) must be nonnegative")));
    }
    if x == 0.0 || y == 0.0 {
        return Err(Error::EmptyRegion);
    }
    let started = Instant::now();
    let cal = calibrate(cfg)?;
    let (l1, l2) = (x * cal.m1, y * cal.m2);
    let frame = GridSpec::new(points_below(l1, cal.q1), points_below(l2, cal.q2), cal.q1, cal.q2)?;
    let counts = count_below(cfg, frame, l1.max(l2), &[Region::Whole], cal.u)?;
    let target = limit_law(&LimitLawSpec::two_d(x * y, cfg.r))?;
    Ok(ExperimentResult::new("rect", (x, y, x * y), &cal, counts[0], cfg.replicates, target, cfg.seed, started))
}

/// Union of scaled simple sets evaluated on one field per replicate. Set
/// coordinates are in units of `(m1, m2)` and must be nonnegative; a single
/// rectangle `[0,x) x [0,y)` reproduces [`run_rect_limit`] exactly.
pub fn run_epsnet_limit(cfg: &ExperimentConfig, sets: &[SimpleSet]) -> Result<Vec<ExperimentResult>> {
    if sets.is_empty() {
        return Err(Error::InvalidParameter("no sets given".into()));
    }
    let started = Instant::now();
    let cal = calibrate(cfg)?;
    let mut regions = Vec::with_capacity(sets.len());
    let (mut l1, mut l2) = (0.0f64, 0.0f64);
    for set in sets {
        if set.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let mut rects = Vec::new();
        for r in set.rects() {
            if r.s0 < 0.0 || r.t0 < 0.0 {
                return Err(Error::InvalidParameter("sets must lie in the positive quadrant".into()));
            }
            let scaled = Rect::new(r.s0 * cal.m1, r.s1 * cal.m1, r.t0 * cal.m2, r.t1 * cal.m2)?;
            l1 = l1.max(scaled.s1);
            l2 = l2.max(scaled.t1);
            rects.push(scaled);
        }
        regions.push(Region::Simple(SimpleSet::new(rects)?));
    }
    let frame = GridSpec::new(points_below(l1, cal.q1), points_below(l2, cal.q2), cal.q1, cal.q2)?;
    let counts = count_below(cfg, frame, l1.max(l2), &regions, cal.u)?;
    sets.iter()
        .zip(counts)
        .map(|(set, c)| {
            let mass = set.measure();
            let target = limit_law(&LimitLawSpec::two_d(mass, cfg.r))?;
            Ok(ExperimentResult::new("simple", (mass, 1.0, mass), &cal, c, cfg.replicates, target, cfg.seed, started))
        })
        .collect()
}

/// Ball frame: square `[0, 2c)^2` with the ball centred at `(c, c)`.
fn ball_frame(cal: &Calibration, reach: f64) -> Result<(GridSpec, f64)> {
    let c = reach + cal.q1.max(cal.q2);
    let frame = GridSpec::new(points_below(2.0 * c, cal.q1), points_below(2.0 * c, cal.q2), cal.q1, cal.q2)?;
    Ok((frame, c))
}

/// `P(max over the ball of radius x sqrt(m) <= u)` against `E exp(-pi x^2 e^V)`.
pub fn run_ball_limit(cfg: &ExperimentConfig, x: f64) -> Result<ExperimentResult> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("x = {x} must be nonnegative")));
    }
    if x == 0.0 {
        return Err(Error::EmptyRegion);
    }
    let started = Instant::now();
    let cal = calibrate(cfg)?;
    let radius = x * cal.m.sqrt();
    let (frame, c) = ball_frame(&cal, radius)?;
    let ball = Region::Ball(Ball { cs: c, ct: c, radius });
    let counts = count_below(cfg, frame, 2.0 * radius, &[ball], cal.u)?;
    let target = ball_law(x, cfg.r)?;
    let mass = std::f64::consts::PI * x * x;
    Ok(ExperimentResult::new("ball", (x, x, mass), &cal, counts[0], cfg.replicates, target, cfg.seed, started))
}

/// Ball together with its inner and outer pixelations, all on the same
/// fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichResult {
    pub inner: ExperimentResult,
    pub ball: ExperimentResult,
    pub outer: ExperimentResult,
    /// `inner >= ball >= outer` in success counts; holds replicate by
    /// replicate since the grid point sets are nested.
    pub holds: bool,
}

/// Ball of radius `x sqrt(m)` sandwiched between pixelations with squares
/// of side `eps sqrt(m)`.
pub fn run_ball_sandwich(cfg: &ExperimentConfig, x: f64, eps: f64) -> Result<SandwichResult> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("x = {x} must be positive")));
    }
    let started = Instant::now();
    let cal = calibrate(cfg)?;
    let scale = cal.m.sqrt();
    let radius = x * scale;
    let (frame, c) = ball_frame(&cal, radius + 2.0 * eps * scale)?;
    let (inner, outer) = make_eps_net_disk((c, c), radius, eps * scale)?;
    let (mi, mo) = (inner.measure() / cal.m, outer.measure() / cal.m);
    let regions = [Region::Simple(inner), Region::Ball(Ball { cs: c, ct: c, radius }), Region::Simple(outer)];
    let counts = count_below(cfg, frame, 2.0 * radius, &regions, cal.u)?;
    let row = |name: &str, mass: f64, count: u64| -> Result<ExperimentResult> {
        let target = limit_law(&LimitLawSpec::two_d(mass, cfg.r))?;
        Ok(ExperimentResult::new(name, (x, eps, mass), &cal, count, cfg.replicates, target, cfg.seed, started))
    };
    let holds = counts[0] >= counts[1] && counts[1] >= counts[2];
    Ok(SandwichResult {
        inner: row("inner", mi, counts[0])?,
        ball: row("ball", std::f64::consts::PI * x * x, counts[1])?,
        outer: row("outer", mo, counts[2])?,
        holds,
    })
}

/// One threshold of a random-radius run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusRung {
    pub result: ExperimentResult,
    /// Exceedance probability `1 - p_hat` and its first-order prediction.
    pub exceed: f64,
    pub predicted: f64,
    pub ratio: f64,
    pub ratio_se: f64,
    /// Radii beyond the cap, counted as exceedances.
    pub censored: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomRadiusResult {
    pub rungs: Vec<RadiusRung>,
    /// `|ratio - 1|` does not grow along the ladder beyond two joint
    /// standard errors.
    pub trend_ok: bool,
    /// Last ratio within `[0.5, 1.5]`.
    pub last_in_band: bool,
}

/// `P(sup over B(c, T) > u)` for an independent random radius `T` along an
/// increasing ladder of thresholds. Radii are in field units; draws above
/// `radius_cap` are not simulated and count as exceedances.
pub fn run_random_radius(
    cfg: &ExperimentConfig,
    spec: &RadialSpec,
    radius: Survival,
    u_ladder: &[f64],
    radius_cap: f64,
) -> Result<RandomRadiusResult> {
    if u_ladder.is_empty() || u_ladder.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("thresholds must be strictly increasing".into()));
    }
    if !(radius_cap > 0.0) {
        return Err(Error::InvalidParameter(format!("radius cap {radius_cap} must be positive")));
    }
    let reach = match radius {
        Survival::PointMass { value } => value.min(radius_cap),
        _ => radius_cap,
    };
    let mut rungs = Vec::with_capacity(u_ladder.len());
    for &u in u_ladder {
        let started = Instant::now();
        let mut c_u = cfg.clone();
        c_u.threshold = ThresholdRule::Fixed { u };
        let cal = calibrate(&c_u)?;
        let scaling = c_u.scaling_spec()?;
        let sf = |x: f64| radius.survival(x);
        let predicted = radial_tail(u, spec, &scaling, Some(&sf))?;
        let (frame, c) = ball_frame(&cal, reach.max(cal.q1))?;
        let proto = FieldDraw::new(&c_u, frame, 2.0 * reach)?;
        let chunks = map_chunks(c_u.replicates, c_u.workers, |range| {
            let mut draw = proto.clone();
            let (mut below, mut censored) = (0u64, 0u64);
            for i in range {
                let v = 1.0 - replicate_rng(c_u.seed, streams::RADIUS, i).random::<f64>();
                let t = radius.quantile_upper(v);
                if t > radius_cap {
                    censored += 1;
                    continue;
                }
                if !(t > 0.0) {
                    below += 1;
                    continue;
                }
                let (a, b) = draw.draw(i);
                match RegionIndex::new(&frame, &Region::Ball(Ball { cs: c, ct: c, radius: t })) {
                    Ok(idx) if a * idx.max(&draw.buf) + b > u => {}
                    _ => below += 1,
                }
            }
            (below, censored)
        });
        let (below, censored) = chunks.into_iter().fold((0, 0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
        let result = ExperimentResult::new(
            "radius",
            (reach, 0.0, 0.0),
            &cal,
            below,
            c_u.replicates,
            1.0 - predicted,
            c_u.seed,
            started,
        );
        let exceed = 1.0 - result.p_hat;
        rungs.push(RadiusRung {
            ratio: exceed / predicted,
            ratio_se: binomial_stderr(exceed, c_u.replicates) / predicted,
            exceed,
            predicted,
            censored,
            result,
        });
    }
    let trend_ok = rungs.windows(2).all(|w| {
        let joint = (w[0].ratio_se.powi(2) + w[1].ratio_se.powi(2)).sqrt();
        (w[1].ratio - 1.0).abs() <= (w[0].ratio - 1.0).abs() + 2.0 * joint
    });
    let last = rungs.last().map(|r| r.ratio).unwrap_or(f64::NAN);
    Ok(RandomRadiusResult { rungs, trend_ok, last_in_band: (0.5..=1.5).contains(&last) })
}

#[cfg(test)]
mod tests {
    use super::super::GridRule;
    use super::*;
    use crate::asymptotics::RadialCase;
    use crate::corr::CorrelationModel;

    fn cfg() -> ExperimentConfig {
        let model = CorrelationModel::separable(1.0, 1.0).unwrap();
        let mut c = ExperimentConfig::new(model, ThresholdRule::Area { n: 25.0 }, GridRule::PerUnit { k: 2 });
        c.replicates = 300;
        c.workers = 1;
        c.seed = 11;
        c
    }

    #[test]
    fn empty_domains_rejected() {
        assert!(matches!(run_rect_limit(&cfg(), 0.0, 1.0), Err(Error::EmptyRegion)));
        assert!(matches!(run_ball_limit(&cfg(), 0.0), Err(Error::EmptyRegion)));
    }

    #[test]
    fn single_rect_matches_rect_run() {
        let c = cfg();
        let a = run_rect_limit(&c, 1.0, 0.5).unwrap();
        let set = SimpleSet::new(vec![Rect::new(0.0, 1.0, 0.0, 0.5).unwrap()]).unwrap();
        let b = &run_epsnet_limit(&c, &[set]).unwrap()[0];
        assert_eq!(a.successes, b.successes);
        assert_eq!(a.target, b.target);
    }

    #[test]
    fn sandwich_is_ordered() {
        let s = run_ball_sandwich(&cfg(), 0.4, 0.1).unwrap();
        assert!(s.holds);
        assert!(s.inner.mass < s.ball.mass && s.ball.mass < s.outer.mass);
        assert!(s.inner.target > s.ball.target && s.ball.target > s.outer.target);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let mut c = cfg();
        c.replicates = 600;
        let a = run_rect_limit(&c, 1.0, 1.0).unwrap();
        c.workers = 3;
        let b = run_rect_limit(&c, 1.0, 1.0).unwrap();
        assert_eq!(a.successes, b.successes);
    }

    #[test]
    fn zero_radius_never_exceeds() {
        let c = cfg();
        let spec = RadialSpec { case: RadialCase::FiniteSecondMoment, et2: Some(0.0), r: 0.0 };
        let res = run_random_radius(&c, &spec, Survival::PointMass { value: 0.0 }, &[2.0], 1.0).unwrap();
        assert_eq!(res.rungs[0].exceed, 0.0);
        assert!(run_random_radius(&c, &spec, Survival::PointMass { value: 1.0 }, &[3.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn censoring_counts_large_radii() {
        let mut c = cfg();
        c.replicates = 200;
        let spec = RadialSpec { case: RadialCase::RegularlyVarying { lambda: 1.0 }, et2: None, r: 0.0 };
        let res = run_random_radius(&c, &spec, Survival::Pareto { x0: 0.5, lambda: 1.0 }, &[3.0], 2.0).unwrap();
        // P(T > 2) = 1/4.
        let frac = res.rungs[0].censored as f64 / 200.0;
        assert!((frac - 0.25).abs() < 0.1, "{frac}");
    }
}
