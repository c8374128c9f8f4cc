//! Extremal index and the variance discrepancy under strong dependence.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{calibrate, unit_square_maxima, ExperimentConfig, FieldDraw, GridRule};
use crate::asymptotics::var_gumbel_mix;
use crate::error::{Error, Result};
use crate::field::{mix_weight, GridSpec};
use crate::parallel::map_chunks;
use crate::rng::streams;
use crate::stats::Z95;

/// Probabilities outside this range make logarithmic estimators unstable.
const STABLE: (f64, f64) = (0.01, 0.99);

fn per_unit(cfg: &ExperimentConfig) -> Result<usize> {
    match cfg.grid {
        GridRule::PerUnit { k } if k > 0 => Ok(k),
        _ => Err(Error::InvalidParameter("unit-square experiments need a per-unit grid".into())),
    }
}

fn stable(name: &'static str, value: f64) -> Result<()> {
    if (STABLE.0..=STABLE.1).contains(&value) {
        Ok(())
    } else {
        Err(Error::UnstableRegime { name, value })
    }
}

fn frame_max(values: &[f64]) -> f64 {
    values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalIndexResult {
    /// Side of the square `[0, n)^2`.
    pub n: usize,
    pub u: f64,
    pub p_max: f64,
    pub p_unit: f64,
    pub theta: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicates: u64,
    pub unit_samples: u64,
    pub runtime_secs: f64,
}

/// `theta = ln P(max over [0,n)^2 <= u) / (n^2 ln P(max over [0,1)^2 <= u))`
/// with a delta-method interval. The unit probability uses `unit_samples`
/// independent squares of the same field (including the mixing when
/// `r > 0`).
pub fn estimate_extremal_index(cfg: &ExperimentConfig, n: usize, unit_samples: u64) -> Result<ExtremalIndexResult> {
    let cal = calibrate(cfg)?;
    index_at(cfg, n, unit_samples, cal.u, cfg.mix_t.unwrap_or(n as f64))
}

fn index_at(cfg: &ExperimentConfig, n: usize, unit_samples: u64, u: f64, mix_t: f64) -> Result<ExtremalIndexResult> {
    let started = Instant::now();
    let k = per_unit(cfg)?;
    if n == 0 {
        return Err(Error::EmptyRegion);
    }
    if unit_samples < 1000 {
        return Err(Error::InvalidParameter(format!("{unit_samples} unit samples are too few")));
    }
    let q = 1.0 / k as f64;
    let frame = GridSpec::new(n * k, n * k, q, q)?;
    let proto = FieldDraw::new(cfg, frame, mix_t)?;
    let below: u64 = map_chunks(cfg.replicates, cfg.workers, |range| {
        let mut draw = proto.clone();
        range
            .filter(|&i| {
                let (a, b) = draw.draw(i);
                a * frame_max(&draw.buf) + b <= u
            })
            .count() as u64
    })
    .into_iter()
    .sum();
    let weight = proto.weight;
    let maxima =
        unit_square_maxima(&cfg.model, q, q, unit_samples, weight, cfg.seed, streams::UNIT_BLOCKS, cfg.workers)?;
    let unit_below = maxima.iter().filter(|&&m| m <= u).count() as u64;

    let area = (n * n) as f64;
    let p_max = below as f64 / cfg.replicates as f64;
    let p_unit = unit_below as f64 / unit_samples as f64;
    stable("P(max <= u)", p_max)?;
    stable("P(unit <= u)^(n^2)", p_unit.powf(area))?;
    let (lm, lu) = (p_max.ln(), p_unit.ln());
    let theta = lm / (area * lu);
    let rel = (1.0 - p_max) / (cfg.replicates as f64 * p_max * lm * lm)
        + (1.0 - p_unit) / (unit_samples as f64 * p_unit * lu * lu);
    let stderr = theta.abs() * rel.sqrt();
    Ok(ExtremalIndexResult {
        n,
        u,
        p_max,
        p_unit,
        theta,
        stderr,
        ci_low: theta - Z95 * stderr,
        ci_high: theta + Z95 * stderr,
        replicates: cfg.replicates,
        unit_samples,
        runtime_secs: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexScan {
    pub results: Vec<ExtremalIndexResult>,
    /// Largest `|theta_i - theta_j| / sqrt(se_i^2 + se_j^2)` over pairs.
    pub max_pair_z: f64,
}

impl IndexScan {
    /// No pair differs by more than `k` joint standard errors.
    pub fn constant_within(&self, k: f64) -> bool {
        self.max_pair_z <= k
    }
}

/// Extremal index over several domain sizes at one threshold (calibrated
/// once from `cfg`) and one mixing weight (`mix_t`, else `sqrt(m)`).
pub fn extremal_index_scan(cfg: &ExperimentConfig, sides: &[usize], unit_samples: u64) -> Result<IndexScan> {
    let cal = calibrate(cfg)?;
    let mix_t = cfg.mix_t.unwrap_or(cal.m.sqrt());
    let results = sides.iter().map(|&n| index_at(cfg, n, unit_samples, cal.u, mix_t)).collect::<Result<Vec<_>>>()?;
    let mut max_pair_z = 0.0f64;
    for (i, a) in results.iter().enumerate() {
        for b in &results[i + 1..] {
            let z = (a.theta - b.theta).abs() / (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
            max_pair_z = max_pair_z.max(z);
        }
    }
    Ok(IndexScan { results, max_pair_z })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyResult {
    pub n: usize,
    pub u: f64,
    pub r: f64,
    pub weight: f64,
    /// `P(max over [0,2n) x [0,n) <= u)`.
    pub p_full: f64,
    /// Mean of the two `n x n` half probabilities.
    pub p_half: f64,
    pub d_hat: f64,
    pub stderr: f64,
    pub target: f64,
    pub z_score: f64,
    pub replicates: u64,
    pub runtime_secs: f64,
}

/// `D = P(full <= u) - P(half <= u)^2` for `Y_T` on two adjacent `n x n`
/// squares, against `Var(exp(-e^V))`. The mixing weight uses `T = n`
/// unless `mix_t` is set; the threshold normally comes from
/// `EmpiricalArea { n: n^2 }`.
pub fn strong_dependence_discrepancy(cfg: &ExperimentConfig, n: usize) -> Result<DiscrepancyResult> {
    let started = Instant::now();
    let k = per_unit(cfg)?;
    if n == 0 {
        return Err(Error::EmptyRegion);
    }
    if cfg.r > 0.0 && cfg.field == super::FieldKind::Stationary {
        return Err(Error::InvalidParameter("r > 0 needs the block-independent field".into()));
    }
    let cal = calibrate(cfg)?;
    let u = cal.u;
    let mix_t = cfg.mix_t.unwrap_or(n as f64);
    let weight = if cfg.r > 0.0 { mix_weight(cfg.r, mix_t)? } else { 0.0 };
    let q = 1.0 / k as f64;
    let half = n * k;
    let frame = GridSpec::new(2 * half, half, q, q)?;
    let split = half * half;
    let proto = FieldDraw::new(cfg, frame, mix_t)?;
    // Per chunk: sum A, sum 2H, sum (2H)^2, sum A * 2H with A the full
    // indicator and H the mean of the half indicators; integers keep the
    // reduction exact.
    let sums = map_chunks(cfg.replicates, cfg.workers, |range| {
        let mut draw = proto.clone();
        let mut s = [0u64; 4];
        for i in range {
            let (a, b) = draw.draw(i);
            let top = a * frame_max(&draw.buf[..split]) + b <= u;
            let bottom = a * frame_max(&draw.buf[split..]) + b <= u;
            let full = (top && bottom) as u64;
            let h2 = top as u64 + bottom as u64;
            s[0] += full;
            s[1] += h2;
            s[2] += h2 * h2;
            s[3] += full * h2;
        }
        s
    })
    .into_iter()
    .fold([0u64; 4], |mut acc, s| {
        acc.iter_mut().zip(s).for_each(|(a, v)| *a += v);
        acc
    });
    let r = cfg.replicates as f64;
    let p_full = sums[0] as f64 / r;
    let p_half = sums[1] as f64 / (2.0 * r);
    let d_hat = p_full - p_half * p_half;
    // Delta method: D = E A - (E H)^2, gradient (1, -2 E H).
    let var_a = p_full * (1.0 - p_full);
    let var_h = sums[2] as f64 / (4.0 * r) - p_half * p_half;
    let cov = sums[3] as f64 / (2.0 * r) - p_full * p_half;
    let var = (var_a + 4.0 * p_half * p_half * var_h - 4.0 * p_half * cov).max(0.0);
    let stderr = (var / r).sqrt();
    let target = var_gumbel_mix(cfg.r)?;
    let z_score = if stderr > 0.0 { (d_hat - target) / stderr } else { 0.0 };
    Ok(DiscrepancyResult {
        n,
        u,
        r: cfg.r,
        weight,
        p_full,
        p_half,
        d_hat,
        stderr,
        target,
        z_score,
        replicates: cfg.replicates,
        runtime_secs: started.elapsed().as_secs_f64(),
    })
}
