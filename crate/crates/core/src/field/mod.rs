//! Exact grid simulation of the separable field, the block-independent
//! field `eta`, the strongly dependent mixture `Y_T`, and suprema over
//! rectangles, balls and simple sets.

mod factor;
mod io;
mod region;

pub use factor::{AxisFactor, DENSE_LIMIT, EIG_TOL};
pub use io::{read_field, write_field, FIELD_MAGIC};
pub use region::{make_eps_net_ball, make_eps_net_disk, sup_over, Ball, Rect, Region, RegionIndex, SimpleSet};

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::corr::{CorrelationModel, Family};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};

/// Default cap on grid points per sample (128 MiB of values).
pub const DEFAULT_MEMORY_CAP: usize = 1 << 24;

/// Rectangular grid `{(i q1, j q2) : 0 <= i < n1, 0 <= j < n2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
    pub q1: f64,
    pub q2: f64,
}

impl GridSpec {
    pub fn new(n1: usize, n2: usize, q1: f64, q2: f64) -> Result<Self> {
        let g = Self { n1, n2, q1, q2 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::InvalidParameter("grid needs at least one point per axis".into()));
        }
        if !(self.q1 > 0.0 && self.q2 > 0.0 && self.q1.is_finite() && self.q2.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid spacings ({}, {}) must be positive", self.q1, self.q2)));
        }
        Ok(())
    }

    pub fn points(&self) -> usize {
        self.n1.saturating_mul(self.n2)
    }

    pub fn check_cap(&self, cap: usize) -> Result<()> {
        if self.points() > cap {
            return Err(Error::MemoryCap { points: self.points(), cap });
        }
        Ok(())
    }

    /// Field coordinates of grid point `(i, j)`.
    pub fn coord(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.q1, j as f64 * self.q2)
    }

    /// Grid points per unit length on each axis, if the spacings divide 1.
    pub fn per_unit(&self) -> Result<(usize, usize)> {
        Ok((per_unit(self.q1)?, per_unit(self.q2)?))
    }
}

fn per_unit(q: f64) -> Result<usize> {
    let k = (1.0 / q).round();
    if k < 1.0 || ((k * q) - 1.0).abs() > 1e-9 {
        return Err(Error::AlignmentError(q));
    }
    Ok(k as usize)
}

/// How a [`FieldSample`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Stationary,
    BlockIndependent,
    StrongMixture,
}

/// A realised field, row-major: `values[i * n2 + j]` sits at `(i q1, j q2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub seed: u64,
    pub construction: Construction,
}

impl FieldSample {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n2 + j]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn markov_rho(alpha: f64, q: f64) -> Option<f64> {
    // exp(-|h|) on a regular grid is exactly AR(1)
    (alpha == 1.0).then(|| (-q).exp())
}

/// Reusable exact sampler for the stationary separable field on one grid.
#[derive(Debug, Clone)]
pub struct StationarySampler {
    grid: GridSpec,
    f1: AxisFactor,
    f2: AxisFactor,
    z: Vec<f64>,
    y: Vec<f64>,
    col_in: Vec<f64>,
    col_out: Vec<f64>,
    scratch: Vec<Complex<f64>>,
}

impl StationarySampler {
    pub fn new(model: &CorrelationModel, grid: GridSpec, cap: usize) -> Result<Self> {
        model.validate()?;
        grid.validate()?;
        grid.check_cap(cap)?;
        let Family::SeparableStable = model.family;
        let m = *model;
        let f1 = AxisFactor::build(grid.n1, grid.q1, move |h| m.axis1(h), markov_rho(m.alpha1, grid.q1))?;
        let f2 = AxisFactor::build(grid.n2, grid.q2, move |h| m.axis2(h), markov_rho(m.alpha2, grid.q2))?;
        let (m1, m2) = (f1.input_len(), f2.input_len());
        Ok(Self {
            grid,
            z: vec![0.0; m1 * m2],
            y: vec![0.0; grid.n1 * m2],
            col_in: vec![0.0; m1.max(m2)],
            col_out: vec![0.0; grid.n1.max(grid.n2)],
            scratch: Vec::new(),
            f1,
            f2,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Draws one field into `out` (length `n1 * n2`, row-major).
    pub fn sample_into(&mut self, rng: &mut SimRng, out: &mut [f64]) {
        let (n1, n2) = (self.grid.n1, self.grid.n2);
        let (m1, m2) = (self.f1.input_len(), self.f2.input_len());
        debug_assert_eq!(out.len(), n1 * n2);
        for v in self.z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        // Left factor along columns: y = A1 z, shape n1 x m2.
        if let AxisFactor::Markov { rho, .. } = self.f1 {
            let s = (1.0 - rho * rho).sqrt();
            self.y[..m2].copy_from_slice(&self.z[..m2]);
            for i in 1..n1 {
                let (prev, cur) = self.y.split_at_mut(i * m2);
                let prev = &prev[(i - 1) * m2..];
                let zrow = &self.z[i * m2..(i + 1) * m2];
                for ((c, p), z) in cur[..m2].iter_mut().zip(prev).zip(zrow) {
                    *c = rho * p + s * z;
                }
            }
        } else {
            for j in 0..m2 {
                for i in 0..m1 {
                    self.col_in[i] = self.z[i * m2 + j];
                }
                self.f1.apply(&self.col_in[..m1], &mut self.col_out[..n1], &mut self.scratch);
                for i in 0..n1 {
                    self.y[i * m2 + j] = self.col_out[i];
                }
            }
        }
        // Right factor along rows.
        for i in 0..n1 {
            self.f2.apply(&self.y[i * m2..(i + 1) * m2], &mut out[i * n2..(i + 1) * n2], &mut self.scratch);
        }
    }
}

/// Exact sample of the stationary field on `grid`.
pub fn sample_stationary(model: &CorrelationModel, grid: GridSpec, seed: u64) -> Result<FieldSample> {
    sample_stationary_capped(model, grid, seed, DEFAULT_MEMORY_CAP)
}

pub fn sample_stationary_capped(
    model: &CorrelationModel,
    grid: GridSpec,
    seed: u64,
    cap: usize,
) -> Result<FieldSample> {
    let mut sampler = StationarySampler::new(model, grid, cap)?;
    let mut values = vec![0.0; grid.points()];
    sampler.sample_into(&mut rng_from_seed(seed), &mut values);
    Ok(FieldSample { grid, values, seed, construction: Construction::Stationary })
}

/// Sampler for `eta`: an independent stationary copy on every unit block
/// `[j-1, j) x [k-1, k)`.
#[derive(Debug, Clone)]
pub struct BlockSampler {
    grid: GridSpec,
    k1: usize,
    k2: usize,
    block: StationarySampler,
    buf: Vec<f64>,
}

impl BlockSampler {
    pub fn new(model: &CorrelationModel, grid: GridSpec, cap: usize) -> Result<Self> {
        grid.validate()?;
        grid.check_cap(cap)?;
        let (k1, k2) = grid.per_unit()?;
        let inner = GridSpec::new(k1.min(grid.n1), k2.min(grid.n2), grid.q1, grid.q2)?;
        let block = StationarySampler::new(model, inner, cap)?;
        Ok(Self { grid, k1, k2, buf: vec![0.0; inner.points()], block })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Grid points per unit block along each axis.
    pub fn block_shape(&self) -> (usize, usize) {
        (self.k1, self.k2)
    }

    pub fn sample_into(&mut self, rng: &mut SimRng, out: &mut [f64]) {
        let GridSpec { n1, n2, .. } = self.grid;
        let (b1, b2) = (self.block.grid.n1, self.block.grid.n2);
        for bi in 0..n1.div_ceil(self.k1) {
            for bj in 0..n2.div_ceil(self.k2) {
                self.block.sample_into(rng, &mut self.buf);
                let i0 = bi * self.k1;
                let j0 = bj * self.k2;
                for di in 0..b1.min(n1 - i0) {
                    let row = &self.buf[di * b2..];
                    let w = b2.min(n2 - j0);
                    out[(i0 + di) * n2 + j0..(i0 + di) * n2 + j0 + w].copy_from_slice(&row[..w]);
                }
            }
        }
    }
}

/// Block-independent field `eta` on `grid`.
pub fn sample_block_independent(model: &CorrelationModel, grid: GridSpec, seed: u64) -> Result<FieldSample> {
    let mut sampler = BlockSampler::new(model, grid, DEFAULT_MEMORY_CAP)?;
    let mut values = vec![0.0; grid.points()];
    sampler.sample_into(&mut rng_from_seed(seed), &mut values);
    Ok(FieldSample { grid, values, seed, construction: Construction::BlockIndependent })
}

/// Weight `r / log T` of the shared Gaussian in `Y_T`.
pub fn mix_weight(r: f64, t: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("r = {r} must be nonnegative")));
    }
    if !(t > 1.0) {
        return Err(Error::InvalidParameter(format!("T = {t} must exceed 1")));
    }
    let w = r / t.ln();
    if w >= 1.0 {
        return Err(Error::InvalidMix(w));
    }
    Ok(w)
}

/// `values <- sqrt(1 - w) values + sqrt(w) shared`.
pub fn mix_in_place(values: &mut [f64], weight: f64, shared: f64) {
    if weight == 0.0 {
        return;
    }
    let a = (1.0 - weight).sqrt();
    let b = weight.sqrt() * shared;
    for v in values {
        *v = a * *v + b;
    }
}

/// `Y_T = (1 - r/log T)^(1/2) eta + (r/log T)^(1/2) W` with one shared
/// `W ~ N(0,1)` drawn from `w_seed`.
pub fn mix_strong(eta: &FieldSample, r: f64, t: f64, w_seed: u64) -> Result<FieldSample> {
    let w = mix_weight(r, t)?;
    let shared: f64 = rng_from_seed(w_seed).sample(StandardNormal);
    let mut out = eta.clone();
    mix_in_place(&mut out.values, w, shared);
    out.construction = Construction::StrongMixture;
    Ok(out)
}
