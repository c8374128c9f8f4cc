//! Monte Carlo verification of the limit laws.
//!
//! Every runner follows the same pattern: resolve the threshold `u`, the
//! area scaling `m` and the grid spacing ([`calibrate`]), lay out a frame
//! grid containing the regions of interest, then count replicates whose
//! grid supremum stays below `u`. Replicate `i` always draws its field from
//! stream `(seed, FIELD, i)` and its mixing variable from
//! `(seed, MIXTURE, i)`, so results are independent of the worker count and
//! runs sharing a seed are coupled.

mod dependence;
mod limits;

pub use dependence::{
    estimate_extremal_index, extremal_index_scan, strong_dependence_discrepancy, DiscrepancyResult,
    ExtremalIndexResult, IndexScan,
};
pub use limits::{
    run_ball_limit, run_ball_sandwich, run_epsnet_limit, run_random_radius, run_rect_limit, RadiusRung,
    RandomRadiusResult, SandwichResult,
};

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{scaling_m, split_m, threshold_for_area, ScalingSpec};
use crate::corr::CorrelationModel;
use crate::error::{Error, Result};
use crate::field::{mix_weight, BlockSampler, GridSpec, Region, RegionIndex, StationarySampler, DEFAULT_MEMORY_CAP};
use crate::parallel::map_chunks;
use crate::rng::{replicate_rng, streams};
use crate::stats::{binomial_stderr, quantile, wilson_interval, Z95};

/// How grid spacings are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GridRule {
    /// `q_i = a u^(-2/alpha_i)`; rounded down to `1/q_i` integral whenever
    /// unit squares or unit blocks are involved.
    Scaled { a: f64 },
    /// `k` points per unit length on both axes.
    PerUnit { k: usize },
}

impl Default for GridRule {
    fn default() -> Self {
        GridRule::Scaled { a: 0.25 }
    }
}

/// How the threshold `u` and area scaling `m` are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ThresholdRule {
    /// Given `u`; `m = m(u)` from the scaling spec.
    Fixed { u: f64 },
    /// `u` solves `m(u) = n`.
    Area { n: f64 },
    /// `u` is the `1 - 1/n` quantile of the grid maximum over a unit
    /// square, so that `m = n` holds for the simulated grid itself.
    EmpiricalArea { n: f64, calibration: u64 },
}

/// Which field the replicates draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// Stationary field when `r = 0`, `Y_T` mixture otherwise.
    #[default]
    Auto,
    Stationary,
    /// `eta`, mixed into `Y_T` when `r > 0`.
    BlockIndependent,
}

fn default_replicates() -> u64 {
    20_000
}

fn default_cap() -> usize {
    DEFAULT_MEMORY_CAP
}

fn default_threshold() -> ThresholdRule {
    ThresholdRule::Area { n: 400.0 }
}

/// Shared configuration of the limit-law experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: CorrelationModel,
    #[serde(default = "default_threshold")]
    pub threshold: ThresholdRule,
    #[serde(default)]
    pub grid: GridRule,
    /// Pickands constants for `m(u)`; classical values when absent.
    #[serde(default)]
    pub scaling: Option<ScalingSpec>,
    /// Mixture level of `Y_T`; `0` keeps the weakly dependent field.
    #[serde(default)]
    pub r: f64,
    /// `T` in the mixing weight `r / log T`; defaults to the largest
    /// side of the simulated domain.
    #[serde(default)]
    pub mix_t: Option<f64>,
    #[serde(default)]
    pub field: FieldKind,
    #[serde(default = "default_replicates")]
    pub replicates: u64,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads, `0` for all cores.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_cap")]
    pub memory_cap: usize,
}

impl ExperimentConfig {
    pub fn new(model: CorrelationModel, threshold: ThresholdRule, grid: GridRule) -> Self {
        Self {
            model,
            threshold,
            grid,
            scaling: None,
            r: 0.0,
            mix_t: None,
            field: FieldKind::Auto,
            replicates: default_replicates(),
            seed: 0,
            workers: 0,
            memory_cap: DEFAULT_MEMORY_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.replicates < 100 {
            return Err(Error::InvalidParameter(format!("need at least 100 replicates, got {}", self.replicates)));
        }
        if !(self.r >= 0.0) || !self.r.is_finite() {
            return Err(Error::InvalidParameter(format!("r = {} must be nonnegative", self.r)));
        }
        if self.r > 0.0 && self.field == FieldKind::Stationary {
            return Err(Error::InvalidParameter("r > 0 needs the block-independent field".into()));
        }
        match self.grid {
            GridRule::Scaled { a } if !(a > 0.0 && a.is_finite()) => {
                return Err(Error::InvalidParameter(format!("grid parameter a = {a} must be positive")))
            }
            GridRule::PerUnit { k: 0 } => return Err(Error::InvalidParameter("k must be at least 1".into())),
            _ => {}
        }
        match self.threshold {
            ThresholdRule::Fixed { u } if !(u > 0.0 && u.is_finite()) => {
                Err(Error::InvalidParameter(format!("u = {u} must be positive")))
            }
            ThresholdRule::Area { n } | ThresholdRule::EmpiricalArea { n, .. } if !(n > 1.0) => {
                Err(Error::InvalidParameter(format!("area N = {n} must exceed 1")))
            }
            ThresholdRule::EmpiricalArea { calibration, n } if (calibration as f64) < 10.0 * n => {
                Err(Error::InvalidParameter(format!("calibration sample {calibration} too small for N = {n}")))
            }
            _ => Ok(()),
        }
    }

    /// Scaling spec in use.
    pub fn scaling_spec(&self) -> Result<ScalingSpec> {
        match self.scaling {
            Some(s) => {
                s.validate()?;
                if s.alpha1 != self.model.alpha1 || s.alpha2 != self.model.alpha2 {
                    return Err(Error::InvalidParameter("scaling exponents differ from the model".into()));
                }
                Ok(s)
            }
            None => ScalingSpec::classical(self.model.alpha1, self.model.alpha2),
        }
    }

    fn uses_blocks(&self) -> bool {
        match self.field {
            FieldKind::Auto => self.r > 0.0,
            FieldKind::Stationary => false,
            FieldKind::BlockIndependent => true,
        }
    }
}

/// Resolved threshold, scaling and grid of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub u: f64,
    pub m: f64,
    pub m1: f64,
    pub m2: f64,
    pub q1: f64,
    pub q2: f64,
}

fn aligned(q: f64) -> f64 {
    1.0 / (1.0 / q - 1e-9).ceil().max(1.0)
}

/// Spacings for threshold `u`. With `align` the scaled rule is rounded so
/// that unit squares hold whole numbers of points.
fn spacing(rule: GridRule, u: f64, model: &CorrelationModel, align: bool) -> (f64, f64) {
    let fix = |q: f64| if align { aligned(q) } else { q };
    match rule {
        GridRule::Scaled { a } => (fix(a * u.powf(-2.0 / model.alpha1)), fix(a * u.powf(-2.0 / model.alpha2))),
        GridRule::PerUnit { k } => (1.0 / k as f64, 1.0 / k as f64),
    }
}

/// Grid maxima of `count` independent unit squares (`[0,1)^2`). A positive
/// `weight` mixes each square with its own standard normal as in `Y_T`.
#[allow(clippy::too_many_arguments)]
pub fn unit_square_maxima(
    model: &CorrelationModel,
    q1: f64,
    q2: f64,
    count: u64,
    weight: f64,
    seed: u64,
    stream: u64,
    workers: usize,
) -> Result<Vec<f64>> {
    let grid = GridSpec::new((1.0 / q1).round() as usize, (1.0 / q2).round() as usize, q1, q2)?;
    let proto = StationarySampler::new(model, grid, DEFAULT_MEMORY_CAP)?;
    let chunks = map_chunks(count, workers, |range| {
        let mut s = proto.clone();
        let mut buf = vec![0.0; grid.points()];
        range
            .map(|i| {
                let mut rng = replicate_rng(seed, stream, i);
                s.sample_into(&mut rng, &mut buf);
                let m = buf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if weight > 0.0 {
                    let w: f64 = rng.sample(StandardNormal);
                    (1.0 - weight).sqrt() * m + weight.sqrt() * w
                } else {
                    m
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// Resolves `u`, `m`, `(m1, m2)` and the grid spacings.
pub fn calibrate(cfg: &ExperimentConfig) -> Result<Calibration> {
    cfg.validate()?;
    let model = &cfg.model;
    let split = cfg.scaling.map(|s| s.split).unwrap_or_default();
    let align = cfg.uses_blocks();
    let (u, m, q) = match cfg.threshold {
        ThresholdRule::Fixed { u } => {
            let (_, _, m) = scaling_m(u, &cfg.scaling_spec()?)?;
            (u, m, spacing(cfg.grid, u, model, align))
        }
        ThresholdRule::Area { n } => {
            let u = threshold_for_area(n, &cfg.scaling_spec()?)?;
            (u, n, spacing(cfg.grid, u, model, align))
        }
        ThresholdRule::EmpiricalArea { n, calibration } => {
            // The spacing cannot depend on the calibrated u; take it from
            // the theoretical threshold instead.
            let q = match cfg.grid {
                GridRule::PerUnit { .. } => spacing(cfg.grid, 1.0, model, true),
                GridRule::Scaled { .. } => spacing(cfg.grid, threshold_for_area(n, &cfg.scaling_spec()?)?, model, true),
            };
            let mut maxima =
                unit_square_maxima(model, q.0, q.1, calibration, 0.0, cfg.seed, streams::CALIBRATION, cfg.workers)?;
            (quantile(&mut maxima, 1.0 - 1.0 / n), n, q)
        }
    };
    let (m1, m2, m) = split_m(m, split);
    Ok(Calibration { u, m, m1, m2, q1: q.0, q2: q.1 })
}

/// One verification row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: String,
    /// Domain parameters in scaled units (`x`, `y`; ball radius in `x`).
    pub x: f64,
    pub y: f64,
    /// Limiting mass `c` of the domain.
    pub mass: f64,
    pub u: f64,
    pub m: f64,
    pub q1: f64,
    pub q2: f64,
    pub replicates: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub target: f64,
    pub stderr: f64,
    pub z_score: f64,
    pub seed: u64,
    pub runtime_secs: f64,
}

impl ExperimentResult {
    #[allow(clippy::too_many_arguments)]
    fn new(
        experiment: &str,
        (x, y, mass): (f64, f64, f64),
        cal: &Calibration,
        successes: u64,
        replicates: u64,
        target: f64,
        seed: u64,
        started: Instant,
    ) -> Self {
        let p_hat = successes as f64 / replicates as f64;
        let (ci_low, ci_high) = wilson_interval(successes, replicates, Z95);
        let stderr = binomial_stderr(p_hat, replicates);
        let z_score = if stderr > 0.0 {
            (p_hat - target) / stderr
        } else if p_hat == target {
            0.0
        } else {
            (p_hat - target).signum() * f64::INFINITY
        };
        Self {
            experiment: experiment.to_string(),
            x,
            y,
            mass,
            u: cal.u,
            m: cal.m,
            q1: cal.q1,
            q2: cal.q2,
            replicates,
            successes,
            p_hat,
            ci_low: ci_low.min(p_hat),
            ci_high: ci_high.max(p_hat),
            target,
            stderr,
            z_score,
            seed,
            runtime_secs: started.elapsed().as_secs_f64(),
        }
    }

    /// `|p_hat - target| <= bias + k * stderr`.
    pub fn within(&self, bias: f64, k: f64) -> bool {
        (self.p_hat - self.target).abs() <= bias + k * self.stderr
    }
}

/// CSV header of [`results_csv`].
pub const RESULT_HEADER: &str =
    "experiment,x,y,mass,u,m,q1,q2,replicates,successes,p_hat,ci_low,ci_high,target,stderr,z_score,seed";

/// Result rows as CSV. Runtime is deliberately left out so that bodies
/// depend only on configuration and seed.
pub fn results_csv(rows: &[ExperimentResult]) -> String {
    let mut s = String::from(RESULT_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{:.10},{:.10},{:.6},{:.10},{:.10},{},{},{:.10},{:.10},{:.10},{:.10},{:.10},{:.6},{}\n",
            r.experiment,
            r.x,
            r.y,
            r.mass,
            r.u,
            r.m,
            r.q1,
            r.q2,
            r.replicates,
            r.successes,
            r.p_hat,
            r.ci_low,
            r.ci_high,
            r.target,
            r.stderr,
            r.z_score,
            r.seed
        ));
    }
    s
}

/// Draws one replicate of the configured field on a fixed frame.
#[derive(Debug, Clone)]
enum FrameSampler {
    Stationary(StationarySampler),
    Blocks(BlockSampler),
}

#[derive(Debug, Clone)]
struct FieldDraw {
    sampler: FrameSampler,
    weight: f64,
    seed: u64,
    buf: Vec<f64>,
}

impl FieldDraw {
    fn new(cfg: &ExperimentConfig, frame: GridSpec, mix_t: f64) -> Result<Self> {
        let sampler = if cfg.uses_blocks() {
            FrameSampler::Blocks(BlockSampler::new(&cfg.model, frame, cfg.memory_cap)?)
        } else {
            FrameSampler::Stationary(StationarySampler::new(&cfg.model, frame, cfg.memory_cap)?)
        };
        let weight = if cfg.r > 0.0 { mix_weight(cfg.r, cfg.mix_t.unwrap_or(mix_t))? } else { 0.0 };
        Ok(Self { sampler, weight, seed: cfg.seed, buf: vec![0.0; frame.points()] })
    }

    /// Samples replicate `i`; returns the affine map `(a, b)` with
    /// `Y = a eta + b` (identity when unmixed).
    fn draw(&mut self, i: u64) -> (f64, f64) {
        let mut rng = replicate_rng(self.seed, streams::FIELD, i);
        match &mut self.sampler {
            FrameSampler::Stationary(s) => s.sample_into(&mut rng, &mut self.buf),
            FrameSampler::Blocks(s) => s.sample_into(&mut rng, &mut self.buf),
        }
        if self.weight == 0.0 {
            return (1.0, 0.0);
        }
        let w: f64 = replicate_rng(self.seed, streams::MIXTURE, i).sample(StandardNormal);
        ((1.0 - self.weight).sqrt(), self.weight.sqrt() * w)
    }
}

/// Number of replicates whose supremum over each region stays `<= u`.
fn count_below(cfg: &ExperimentConfig, frame: GridSpec, mix_t: f64, regions: &[Region], u: f64) -> Result<Vec<u64>> {
    let indices = regions.iter().map(|r| RegionIndex::new(&frame, r)).collect::<Result<Vec<_>>>()?;
    let proto = FieldDraw::new(cfg, frame, mix_t)?;
    let chunks = map_chunks(cfg.replicates, cfg.workers, |range| {
        let mut draw = proto.clone();
        let mut counts = vec![0u64; indices.len()];
        for i in range {
            let (a, b) = draw.draw(i);
            for (c, idx) in counts.iter_mut().zip(&indices) {
                if a * idx.max(&draw.buf) + b <= u {
                    *c += 1;
                }
            }
        }
        counts
    });
    let mut total = vec![0u64; regions.len()];
    for c in chunks {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    Ok(total)
}

/// Points `i` with `i q < len`.
fn points_below(len: f64, q: f64) -> usize {
    let mut n = (len / q).ceil().max(0.0) as usize;
    while n > 0 && (n - 1) as f64 * q >= len {
        n -= 1;
    }
    while (n as f64) * q < len {
        n += 1;
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Rect;

    fn cfg(reps: u64) -> ExperimentConfig {
        let model = CorrelationModel::separable(1.0, 1.0).unwrap();
        let mut c = ExperimentConfig::new(model, ThresholdRule::Fixed { u: 2.5 }, GridRule::PerUnit { k: 2 });
        c.replicates = reps;
        c.workers = 1;
        c
    }

    #[test]
    fn spacing_divides_unit() {
        let m = CorrelationModel::separable(1.0, 2.0).unwrap();
        let (q1, q2) = spacing(GridRule::Scaled { a: 0.25 }, 3.0, &m, true);
        assert_eq!(q1, 1.0 / 36.0);
        assert_eq!(q2, 1.0 / 12.0);
        let (q1, _) = spacing(GridRule::Scaled { a: 0.3 }, 3.0, &m, false);
        assert_eq!(q1, 0.3 / 9.0);
        assert_eq!(aligned(0.5), 0.5);
        assert_eq!(points_below(20.0, 0.5), 40);
        assert_eq!(points_below(0.1, 0.5), 1);
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(50);
        assert!(c.validate().is_err());
        c.replicates = 100;
        assert!(c.validate().is_ok());
        c.r = 0.5;
        c.field = FieldKind::Stationary;
        assert!(c.validate().is_err());
        let mut c = cfg(100);
        c.threshold = ThresholdRule::Area { n: 0.5 };
        assert!(c.validate().is_err());
    }

    #[test]
    fn calibration_rules() {
        let mut c = cfg(100);
        c.threshold = ThresholdRule::Area { n: 400.0 };
        let cal = calibrate(&c).unwrap();
        assert!((cal.m - 400.0).abs() < 1e-9 && (cal.m1 - 20.0).abs() < 1e-12);
        c.threshold = ThresholdRule::EmpiricalArea { n: 100.0, calibration: 20_000 };
        let cal = calibrate(&c).unwrap();
        assert_eq!(cal.m, 100.0);
        let mut maxima = unit_square_maxima(&c.model, 0.5, 0.5, 20_000, 0.0, c.seed, streams::CALIBRATION, 1).unwrap();
        assert_eq!(cal.u, quantile(&mut maxima, 0.99));
    }

    #[test]
    fn coupled_monotonicity() {
        let c = cfg(500);
        let frame = GridSpec::new(20, 20, 0.5, 0.5).unwrap();
        let small = Region::Rect(Rect::new(0.0, 4.0, 0.0, 4.0).unwrap());
        let big = Region::Rect(Rect::new(0.0, 8.0, 0.0, 6.0).unwrap());
        let counts = count_below(&c, frame, 10.0, &[small, big, Region::Whole], 2.5).unwrap();
        assert!(counts[0] >= counts[1] && counts[1] >= counts[2]);
    }

    #[test]
    fn wilson_coverage_on_exact_binomial() {
        // One point per unit block: P(max of n blocks <= u) = Phi(u)^n.
        let u = 1.5;
        let n_blocks = 4.0;
        let target = (1.0 - crate::asymptotics::survival_psi(u)).powf(n_blocks);
        let frame = GridSpec::new(2, 2, 1.0, 1.0).unwrap();
        let mut covered = 0;
        for rep in 0..200 {
            let mut c = cfg(100);
            c.field = FieldKind::BlockIndependent;
            c.seed = 1000 + rep;
            let s = count_below(&c, frame, 10.0, &[Region::Whole], u).unwrap()[0];
            let (lo, hi) = wilson_interval(s, 100, Z95);
            if lo <= target && target <= hi {
                covered += 1;
            }
        }
        let cov = covered as f64 / 200.0;
        assert!((0.90..=0.99).contains(&cov), "{cov}");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let cal = Calibration { u: 3.0, m: 400.0, m1: 20.0, m2: 20.0, q1: 0.5, q2: 0.5 };
        let r = ExperimentResult::new("rect", (1.0, 1.0, 1.0), &cal, 37, 100, 0.37, 5, Instant::now());
        assert!(r.ci_low <= r.p_hat && r.p_hat <= r.ci_high);
        let csv = results_csv(&[r]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(RESULT_HEADER));
        assert_eq!(lines.next().unwrap().split(',').count(), RESULT_HEADER.split(',').count());
    }
}
