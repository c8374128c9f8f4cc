//! Monte Carlo estimation of Pickands constants from discretised fractional
//! Brownian motion.
//!
//! For `chi(t) = sqrt(2) B(t) - t^alpha`, `Var B(t) = t^alpha`, the target is
//! `h(T, a) = E exp(max_{ja in [0,T]} chi(ja)) / T`, which tends to
//! `H_alpha` as `T -> inf` then `a -> 0`.
//!
//! The plain average of `exp(max chi)` has a Pareto(1)-like tail and
//! badly underestimates its mean at practical sample sizes. The default
//! estimator averages the same quantity under a uniform mixture of the
//! exponential tilts `exp(chi(tau))`, where it becomes
//! `S / sum_j exp(chi_tau(j) - max chi_tau)`, bounded in `[1, S]`.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::EIG_TOL;
use crate::parallel::map_chunks;
use crate::rng::{derive_seed, replicate_rng, rng_from_seed, streams, SimRng};
use crate::stats::{upper_trimmed_mean, Moments};

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} not in (0, 2]")));
    }
    Ok(())
}

/// Number of steps `n` with `n a <= T`.
pub fn steps(a: f64, t: f64) -> Result<usize> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("step a = {a} must be positive")));
    }
    if !(t >= a * (1.0 - 1e-12)) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("horizon T = {t} must be at least a = {a}")));
    }
    Ok((t / a + 1e-9).floor() as usize)
}

#[derive(Clone)]
enum FbmKind {
    /// `alpha = 2`: `B(t) = t Z`.
    Linear,
    Circulant {
        size: usize,
        scale: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    /// Durbin-Levinson: row `k` holds the `k` prediction coefficients.
    Hosking {
        phi: Vec<Vec<f64>>,
        sd: Vec<f64>,
    },
}

/// Reusable exact sampler of `B(ja)`, `j = 0..=n`, `Var B(t) = t^alpha`.
#[derive(Clone)]
pub struct FbmSampler {
    alpha: f64,
    a: f64,
    n: usize,
    kind: FbmKind,
    buf: Vec<Complex<f64>>,
    noise: Vec<f64>,
}

/// Autocovariance of the increments `B((k+1)a) - B(ka)`.
fn fgn_cov(alpha: f64, a: f64, k: usize) -> f64 {
    let k = k as f64;
    0.5 * a.powf(alpha) * ((k + 1.0).powf(alpha) - 2.0 * k.powf(alpha) + (k - 1.0).abs().powf(alpha))
}

impl FbmSampler {
    pub fn new(alpha: f64, a: f64, n: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if !(a > 0.0) {
            return Err(Error::InvalidParameter(format!("step a = {a} must be positive")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("path needs at least one step".into()));
        }
        let kind = if alpha == 2.0 {
            FbmKind::Linear
        } else {
            match Self::circulant(alpha, a, n) {
                Ok(k) => k,
                Err(e) => {
                    log::warn!("Davies-Harte embedding failed ({e}); using Hosking recursion");
                    Self::hosking(alpha, a, n)
                }
            }
        };
        Ok(Self { alpha, a, n, kind, buf: Vec::new(), noise: vec![0.0; n] })
    }

    fn circulant(alpha: f64, a: f64, n: usize) -> Result<FbmKind> {
        let size = (2 * n.max(2) - 2).next_power_of_two();
        let fft = FftPlanner::new().plan_fft_forward(size);
        let mut c: Vec<Complex<f64>> =
            (0..size).map(|k| Complex::new(fgn_cov(alpha, a, k.min(size - k)), 0.0)).collect();
        fft.process(&mut c);
        let max = c.iter().map(|z| z.re).fold(f64::MIN, f64::max);
        let min = c.iter().map(|z| z.re).fold(f64::MAX, f64::min);
        if min < -EIG_TOL * max {
            return Err(Error::EmbeddingFailure { min_eig: min, max_eig: max });
        }
        let scale = c.iter().map(|z| (z.re.max(0.0) / size as f64).sqrt()).collect();
        Ok(FbmKind::Circulant { size, scale, fft })
    }

    fn hosking(alpha: f64, a: f64, n: usize) -> FbmKind {
        let g: Vec<f64> = (0..n).map(|k| fgn_cov(alpha, a, k)).collect();
        let mut phi: Vec<Vec<f64>> = vec![Vec::new()];
        let mut v = g[0];
        let mut sd = vec![v.sqrt()];
        for k in 1..n {
            let prev = &phi[k - 1];
            let num = g[k] - (0..k - 1).map(|j| prev[j] * g[k - 1 - j]).sum::<f64>();
            let kk = num / v;
            let mut row: Vec<f64> = (0..k - 1).map(|j| prev[j] - kk * prev[k - 2 - j]).collect();
            row.push(kk);
            v *= 1.0 - kk * kk;
            sd.push(v.max(0.0).sqrt());
            phi.push(row);
        }
        FbmKind::Hosking { phi, sd }
    }

    /// Number of steps; paths have `n + 1` points.
    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn step(&self) -> f64 {
        self.a
    }

    /// Whether the exact recursion replaced circulant embedding.
    pub fn uses_fallback(&self) -> bool {
        matches!(self.kind, FbmKind::Hosking { .. })
    }

    /// Writes `B(0), B(a), ..., B(na)` into `out`.
    pub fn sample_into(&mut self, rng: &mut SimRng, out: &mut [f64]) {
        let n = self.n;
        out[0] = 0.0;
        match &self.kind {
            FbmKind::Linear => {
                let z: f64 = rng.sample(StandardNormal);
                for (j, o) in out[..=n].iter_mut().enumerate() {
                    *o = j as f64 * self.a * z;
                }
                return;
            }
            FbmKind::Circulant { size, scale, fft } => {
                self.buf.clear();
                self.buf.extend((0..*size).map(|k| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex::new(re, im) * scale[k]
                }));
                fft.process(&mut self.buf);
                for k in 0..n {
                    self.noise[k] = self.buf[k].re;
                }
            }
            FbmKind::Hosking { phi, sd } => {
                for k in 0..n {
                    let pred: f64 = phi[k].iter().enumerate().map(|(j, p)| p * self.noise[k - 1 - j]).sum();
                    let z: f64 = rng.sample(StandardNormal);
                    self.noise[k] = pred + sd[k] * z;
                }
            }
        }
        let mut acc = 0.0;
        for k in 0..n {
            acc += self.noise[k];
            out[k + 1] = acc;
        }
    }
}

/// One path of `B(ja)`, `ja in [0, T]`, `Var B(t) = t^alpha`.
pub fn sample_fbm(alpha: f64, a: f64, t: f64, seed: u64) -> Result<Vec<f64>> {
    let n = steps(a, t)?;
    let mut s = FbmSampler::new(alpha, a, n)?;
    let mut out = vec![0.0; n + 1];
    s.sample_into(&mut rng_from_seed(seed), &mut out);
    Ok(out)
}

/// `exp(max_j (sqrt(2) B(ja) - (ja)^alpha))` for one path.
pub fn functional_naive(path: &[f64], alpha: f64, a: f64) -> f64 {
    let m = path
        .iter()
        .enumerate()
        .map(|(j, b)| std::f64::consts::SQRT_2 * b - (j as f64 * a).powf(alpha))
        .fold(f64::NEG_INFINITY, f64::max);
    m.exp()
}

/// Which unbiased average of the functional to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PickandsMethod {
    /// Uniform mixture of exponential tilts (bounded summands).
    #[default]
    ChangeOfMeasure,
    /// Plain average of `exp(max chi)`.
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PickandsOptions {
    pub method: PickandsMethod,
    /// Worker threads, `0` for all cores.
    pub workers: usize,
}

impl Default for PickandsOptions {
    fn default() -> Self {
        Self { method: PickandsMethod::ChangeOfMeasure, workers: 0 }
    }
}

/// Estimate of `h(T, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PickandsEstimate {
    pub alpha: f64,
    pub a: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub replicates: u64,
    pub h_hat: f64,
    pub stderr: f64,
    /// Mean with the top 1% of summands removed, same scale as `h_hat`;
    /// a large gap to `h_hat` flags undersampling.
    pub trimmed: f64,
    pub method: PickandsMethod,
    pub ladder: Option<Vec<(f64, f64, f64)>>,
}

/// Estimates `h(T, a)` with `replicates` paths.
pub fn estimate_h_ta(
    alpha: f64,
    a: f64,
    t: f64,
    replicates: u64,
    seed: u64,
    opts: PickandsOptions,
) -> Result<PickandsEstimate> {
    check_alpha(alpha)?;
    if replicates < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 replicates, got {replicates}")));
    }
    let n = steps(a, t)?;
    let proto = FbmSampler::new(alpha, a, n)?;
    let pw: Vec<f64> = (0..=n).map(|j| (j as f64 * a).powf(alpha)).collect();
    let s2 = std::f64::consts::SQRT_2;
    let chunks = map_chunks(replicates, opts.workers, |range| {
        let mut sampler = proto.clone();
        let mut path = vec![0.0; n + 1];
        let mut chi = vec![0.0; n + 1];
        let mut vals = Vec::with_capacity((range.end - range.start) as usize);
        for i in range {
            let mut rng = replicate_rng(seed, streams::PICKANDS, i);
            sampler.sample_into(&mut rng, &mut path);
            let v = match opts.method {
                PickandsMethod::Naive => {
                    let m = path.iter().zip(&pw).map(|(b, p)| s2 * b - p).fold(f64::NEG_INFINITY, f64::max);
                    m.exp()
                }
                PickandsMethod::ChangeOfMeasure => {
                    let k = rng.random_range(0..=n);
                    // chi shifted by Cov(sqrt2 B(t), sqrt2 B(tau)) = t^a + tau^a - |t - tau|^a
                    let mut m = f64::NEG_INFINITY;
                    for j in 0..=n {
                        let c = s2 * path[j] + pw[k] - pw[j.abs_diff(k)];
                        chi[j] = c;
                        m = m.max(c);
                    }
                    let sum: f64 = chi.iter().map(|c| (c - m).exp()).sum();
                    (n + 1) as f64 / sum
                }
            };
            vals.push(v);
        }
        vals
    });
    let vals: Vec<f64> = chunks.into_iter().flatten().collect();
    let mom: Moments = vals.iter().cloned().collect();
    Ok(PickandsEstimate {
        alpha,
        a,
        t,
        replicates,
        h_hat: mom.mean / t,
        stderr: mom.stderr() / t,
        trimmed: upper_trimmed_mean(&vals, 0.01) / t,
        method: opts.method,
        ladder: None,
    })
}

/// Default `(a, T)` ladder: `a` shrinking, `T` growing.
pub fn default_ladder(alpha: f64) -> Vec<(f64, f64)> {
    if alpha == 2.0 {
        vec![(0.5, 20.0), (0.25, 30.0), (0.1, 40.0), (0.05, 50.0)]
    } else {
        vec![(0.5, 20.0), (0.1, 30.0), (0.05, 40.0), (0.02, 50.0)]
    }
}

/// Ladder run: the finest rung is the reported value, no fitted extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderResult {
    pub alpha: f64,
    pub rungs: Vec<PickandsEstimate>,
    pub value: f64,
    pub stderr: f64,
    /// Rung values move in one direction, up to two joint standard errors.
    pub monotone: bool,
}

impl LadderResult {
    /// Last rung with the `(a, T, h)` ladder attached.
    pub fn final_estimate(&self) -> PickandsEstimate {
        let mut e = self.rungs.last().expect("ladder has rungs").clone();
        e.ladder = Some(self.rungs.iter().map(|r| (r.a, r.t, r.h_hat)).collect());
        e
    }
}

fn check_ladder(ladder: &[(f64, f64)]) -> Result<()> {
    if ladder.len() < 3 {
        return Err(Error::LadderTooShort(ladder.len()));
    }
    for w in ladder.windows(2) {
        let ((a0, t0), (a1, t1)) = (w[0], w[1]);
        if a1 > a0 || t1 < t0 || (a1 == a0 && t1 == t0) {
            return Err(Error::InvalidLadder(format!(
                "rung ({a1}, {t1}) must refine ({a0}, {t0}): a non-increasing, T non-decreasing"
            )));
        }
    }
    Ok(())
}

/// Runs `estimate_h_ta` on every rung; rung `k` uses its own seed stream.
pub fn extrapolate_h(
    alpha: f64,
    ladder: &[(f64, f64)],
    replicates: u64,
    seed: u64,
    opts: PickandsOptions,
) -> Result<LadderResult> {
    check_alpha(alpha)?;
    check_ladder(ladder)?;
    let rungs = ladder
        .iter()
        .enumerate()
        .map(|(k, &(a, t))| {
            estimate_h_ta(alpha, a, t, replicates, derive_seed(seed, streams::PICKANDS, k as u64), opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let joint = |x: &PickandsEstimate, y: &PickandsEstimate| 2.0 * (x.stderr.powi(2) + y.stderr.powi(2)).sqrt();
    let up = rungs.windows(2).all(|w| w[1].h_hat >= w[0].h_hat - joint(&w[0], &w[1]));
    let down = rungs.windows(2).all(|w| w[1].h_hat <= w[0].h_hat + joint(&w[0], &w[1]));
    let last = rungs.last().expect("ladder has rungs");
    Ok(LadderResult { alpha, value: last.h_hat, stderr: last.stderr, monotone: up || down, rungs })
}

/// Writes `alpha,a,T,replicates,h_hat,stderr` rows.
pub fn ladder_csv(result: &LadderResult) -> String {
    let mut s = String::from("alpha,a,T,replicates,h_hat,stderr\n");
    for r in &result.rungs {
        s.push_str(&format!("{},{},{},{},{:.10},{:.10}\n", r.alpha, r.a, r.t, r.replicates, r.h_hat, r.stderr));
    }
    s
}
