//! Per-axis square roots of a 1-D correlation matrix.
//!
//! A separable field on an `n1 x n2` grid has covariance `C1 (x) C2`, so a
//! sample is `A1 Z A2^T` whenever `A_i A_i^T = C_i`. The factor `A_i` may be
//! rectangular: the circulant root consumes more normals than it outputs.

use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest axis handled by dense factorisation.
pub const DENSE_LIMIT: usize = 2048;
/// Relative tolerance for clipping negative eigenvalues.
pub const EIG_TOL: f64 = 1e-8;
const MAX_EMBEDDING: usize = 1 << 24;

/// `A` with `A A^T = C`, `C[i][j] = corr(|i - j| q)`.
#[derive(Clone)]
pub enum AxisFactor {
    /// Exact AR(1) recursion: `corr(h) = rho^(h/q)`.
    Markov { n: usize, rho: f64 },
    /// Dense `n x n` factor (lower Cholesky or symmetric root), row-major.
    Dense { n: usize, lower: bool, m: Vec<f64> },
    /// Cropped symmetric circulant root of size `size`.
    Circulant { n: usize, size: usize, sqrt_eig: Vec<f64>, fwd: Arc<dyn Fft<f64>>, inv: Arc<dyn Fft<f64>> },
}

impl std::fmt::Debug for AxisFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxisFactor::Markov { n, rho } => write!(f, "Markov {{ n: {n}, rho: {rho} }}"),
            AxisFactor::Dense { n, lower, .. } => write!(f, "Dense {{ n: {n}, lower: {lower} }}"),
            AxisFactor::Circulant { n, size, .. } => write!(f, "Circulant {{ n: {n}, size: {size} }}"),
        }
    }
}

impl AxisFactor {
    /// Factor for the lag correlation `corr` on `n` points of spacing `q`.
    /// `markov_rho` short-circuits to the AR(1) recursion when the kernel is
    /// exactly exponential.
    pub fn build(n: usize, q: f64, corr: impl Fn(f64) -> f64, markov_rho: Option<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("axis needs at least one point".into()));
        }
        if let Some(rho) = markov_rho {
            return Ok(AxisFactor::Markov { n, rho });
        }
        if n <= DENSE_LIMIT {
            Self::dense(n, q, &corr)
        } else {
            Self::circulant(n, q, &corr)
        }
    }

    fn dense(n: usize, q: f64, corr: &impl Fn(f64) -> f64) -> Result<Self> {
        let lags: Vec<f64> = (0..n).map(|k| corr(k as f64 * q)).collect();
        let c = DMatrix::from_fn(n, n, |i, j| lags[i.abs_diff(j)]);
        if let Some(ch) = c.clone().cholesky() {
            let l = ch.l();
            let m = (0..n * n).map(|k| l[(k / n, k % n)]).collect();
            return Ok(AxisFactor::Dense { n, lower: true, m });
        }
        // Near-singular (smooth kernels on fine grids): symmetric root with
        // tiny negative eigenvalues clipped.
        let eig = c.symmetric_eigen();
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if min < -EIG_TOL * max {
            return Err(Error::EmbeddingFailure { min_eig: min, max_eig: max });
        }
        log::debug!("Cholesky failed on axis of {n} points; using clipped eigen-root");
        let sq = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        let v = &eig.eigenvectors;
        let root = v * DMatrix::from_diagonal(&sq) * v.transpose();
        let m = (0..n * n).map(|k| root[(k / n, k % n)]).collect();
        Ok(AxisFactor::Dense { n, lower: false, m })
    }

    fn circulant(n: usize, q: f64, corr: &impl Fn(f64) -> f64) -> Result<Self> {
        let mut size = (2 * (n - 1)).next_power_of_two();
        let max_size = (16 * size).min(MAX_EMBEDDING);
        loop {
            let mut planner = FftPlanner::new();
            let fwd = planner.plan_fft_forward(size);
            let inv = planner.plan_fft_inverse(size);
            let mut buf: Vec<Complex<f64>> =
                (0..size).map(|k| Complex::new(corr(k.min(size - k) as f64 * q), 0.0)).collect();
            fwd.process(&mut buf);
            let eig: Vec<f64> = buf.iter().map(|z| z.re).collect();
            let max = eig.iter().cloned().fold(f64::MIN, f64::max);
            let min = eig.iter().cloned().fold(f64::MAX, f64::min);
            if min >= -EIG_TOL * max {
                if min < 0.0 {
                    log::warn!("clipping circulant eigenvalue {min:e} (max {max:e})");
                }
                let sqrt_eig = eig.iter().map(|v| v.max(0.0).sqrt()).collect();
                return Ok(AxisFactor::Circulant { n, size, sqrt_eig, fwd, inv });
            }
            if size >= max_size {
                return Err(Error::EmbeddingFailure { min_eig: min, max_eig: max });
            }
            size *= 2;
        }
    }

    /// Number of output points.
    pub fn output_len(&self) -> usize {
        match self {
            AxisFactor::Markov { n, .. } | AxisFactor::Dense { n, .. } | AxisFactor::Circulant { n, .. } => *n,
        }
    }

    /// Number of standard normals consumed per output vector.
    pub fn input_len(&self) -> usize {
        match self {
            AxisFactor::Circulant { size, .. } => *size,
            _ => self.output_len(),
        }
    }

    /// Writes `A z` into `out[..n]`. `z` has length [`input_len`](Self::input_len);
    /// `scratch` is reused between calls.
    pub fn apply(&self, z: &[f64], out: &mut [f64], scratch: &mut Vec<Complex<f64>>) {
        match self {
            AxisFactor::Markov { n, rho } => {
                let s = (1.0 - rho * rho).max(0.0).sqrt();
                let mut prev = z[0];
                out[0] = prev;
                for k in 1..*n {
                    prev = rho * prev + s * z[k];
                    out[k] = prev;
                }
            }
            AxisFactor::Dense { n, lower, m } => {
                let n = *n;
                for i in 0..n {
                    let row = &m[i * n..(i + 1) * n];
                    let len = if *lower { i + 1 } else { n };
                    out[i] = row[..len].iter().zip(&z[..len]).map(|(a, b)| a * b).sum();
                }
            }
            AxisFactor::Circulant { n, size, sqrt_eig, fwd, inv } => {
                scratch.clear();
                scratch.extend(z.iter().map(|&v| Complex::new(v, 0.0)));
                fwd.process(scratch);
                for (c, s) in scratch.iter_mut().zip(sqrt_eig) {
                    *c *= *s;
                }
                inv.process(scratch);
                let scale = 1.0 / *size as f64;
                for k in 0..*n {
                    out[k] = scratch[k].re * scale;
                }
            }
        }
    }

    /// Materialises `A` as an `n x input_len` row-major matrix (tests only).
    pub fn to_dense(&self) -> Vec<f64> {
        let (n, m) = (self.output_len(), self.input_len());
        let mut res = vec![0.0; n * m];
        let mut e = vec![0.0; m];
        let mut col = vec![0.0; n];
        let mut scratch = Vec::new();
        for j in 0..m {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            self.apply(&e, &mut col, &mut scratch);
            for i in 0..n {
                res[i * m + j] = col[i];
            }
        }
        res
    }
}
