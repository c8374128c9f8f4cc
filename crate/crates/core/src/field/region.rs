//! Regions of the parameter plane and grid suprema over them.
//!
//! Membership is decided on the floating-point coordinates `i * q` exactly,
//! with rectangles half-open and balls closed.

use serde::{Deserialize, Serialize};

use super::{FieldSample, GridSpec};
use crate::error::{Error, Result};

/// Half-open rectangle `[s0, s1) x [t0, t1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub s0: f64,
    pub s1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl Rect {
    pub fn new(s0: f64, s1: f64, t0: f64, t1: f64) -> Result<Self> {
        if !(s0 <= s1 && t0 <= t1) || ![s0, s1, t0, t1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad rectangle [{s0},{s1})x[{t0},{t1})")));
        }
        Ok(Self { s0, s1, t0, t1 })
    }

    pub fn area(&self) -> f64 {
        (self.s1 - self.s0) * (self.t1 - self.t0)
    }

    pub fn is_empty(&self) -> bool {
        self.s0 >= self.s1 || self.t0 >= self.t1
    }

    fn overlaps(&self, o: &Rect) -> bool {
        !self.is_empty() && !o.is_empty() && self.s0 < o.s1 && o.s0 < self.s1 && self.t0 < o.t1 && o.t0 < self.t1
    }
}

/// Closed disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub cs: f64,
    pub ct: f64,
    pub radius: f64,
}

/// Finite union of pairwise disjoint half-open rectangles.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Rect>", into = "Vec<Rect>")]
pub struct SimpleSet {
    rects: Vec<Rect>,
}

impl TryFrom<Vec<Rect>> for SimpleSet {
    type Error = Error;
    fn try_from(v: Vec<Rect>) -> Result<Self> {
        SimpleSet::new(v)
    }
}

impl From<SimpleSet> for Vec<Rect> {
    fn from(s: SimpleSet) -> Self {
        s.rects
    }
}

impl SimpleSet {
    /// Rejects overlapping rectangles.
    pub fn new(rects: Vec<Rect>) -> Result<Self> {
        for r in &rects {
            Rect::new(r.s0, r.s1, r.t0, r.t1)?;
        }
        for i in 0..rects.len() {
            for j in i + 1..rects.len() {
                if rects[i].overlaps(&rects[j]) {
                    return Err(Error::NotDisjoint(i, j));
                }
            }
        }
        Ok(Self { rects })
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    pub fn measure(&self) -> f64 {
        self.rects.iter().map(Rect::area).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.iter().all(Rect::is_empty)
    }
}

/// Anything a supremum can be taken over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Whole,
    Rect(Rect),
    Ball(Ball),
    Simple(SimpleSet),
}

/// First index `i` with `i * q >= a`.
fn first_at_or_above(a: f64, q: f64) -> usize {
    if a <= 0.0 {
        return 0;
    }
    let mut i = (a / q).ceil() as usize;
    while i > 0 && (i - 1) as f64 * q >= a {
        i -= 1;
    }
    while (i as f64) * q < a {
        i += 1;
    }
    i
}

/// Precomputed row runs `(row, j_start, j_end)` of a region on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionIndex {
    runs: Vec<(usize, usize, usize)>,
    n2: usize,
    points: usize,
}

impl RegionIndex {
    pub fn new(grid: &GridSpec, region: &Region) -> Result<Self> {
        let mut runs = Vec::new();
        let GridSpec { n1, n2, q1, q2 } = *grid;
        let push_rect = |r: &Rect, runs: &mut Vec<(usize, usize, usize)>| {
            let i0 = first_at_or_above(r.s0, q1).min(n1);
            let i1 = first_at_or_above(r.s1, q1).min(n1);
            let j0 = first_at_or_above(r.t0, q2).min(n2);
            let j1 = first_at_or_above(r.t1, q2).min(n2);
            if j0 < j1 {
                for i in i0..i1 {
                    runs.push((i, j0, j1));
                }
            }
        };
        match region {
            Region::Whole => runs.extend((0..n1).map(|i| (i, 0, n2))),
            Region::Rect(r) => push_rect(r, &mut runs),
            Region::Simple(s) => {
                for r in s.rects() {
                    push_rect(r, &mut runs);
                }
            }
            Region::Ball(b) => {
                let r2 = b.radius * b.radius;
                for i in 0..n1 {
                    let ds = i as f64 * q1 - b.cs;
                    let rem = r2 - ds * ds;
                    if rem < 0.0 {
                        continue;
                    }
                    let w = rem.sqrt();
                    let inside = |j: usize| {
                        let dt = j as f64 * q2 - b.ct;
                        ds * ds + dt * dt <= r2
                    };
                    let mut j0 = first_at_or_above(b.ct - w, q2).min(n2);
                    while j0 > 0 && inside(j0 - 1) {
                        j0 -= 1;
                    }
                    while j0 < n2 && !inside(j0) && (j0 as f64) * q2 <= b.ct {
                        j0 += 1;
                    }
                    let mut j1 = j0;
                    while j1 < n2 && inside(j1) {
                        j1 += 1;
                    }
                    if j0 < j1 {
                        runs.push((i, j0, j1));
                    }
                }
            }
        }
        let points = runs.iter().map(|&(_, a, b)| b - a).sum();
        if points == 0 {
            return Err(Error::EmptyRegion);
        }
        Ok(Self { runs, n2, points })
    }

    /// Number of grid points covered.
    pub fn points(&self) -> usize {
        self.points
    }

    /// Maximum of `values` (row-major, `n2` columns) over the region.
    pub fn max(&self, values: &[f64]) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for &(i, a, b) in &self.runs {
            for &v in &values[i * self.n2 + a..i * self.n2 + b] {
                m = m.max(v);
            }
        }
        m
    }

    /// Membership mask over the grid, row-major.
    pub fn mask(&self, n1: usize) -> Vec<bool> {
        let mut m = vec![false; n1 * self.n2];
        for &(i, a, b) in &self.runs {
            m[i * self.n2 + a..i * self.n2 + b].iter_mut().for_each(|v| *v = true);
        }
        m
    }
}

/// Maximum of the sample over the grid points lying in `region`.
pub fn sup_over(sample: &FieldSample, region: &Region) -> Result<f64> {
    Ok(RegionIndex::new(&sample.grid, region)?.max(&sample.values))
}

/// Inner and outer pixelations of the closed disk of `radius` about `center`
/// by squares of side `eps` on the lattice anchored at the center. Inner
/// keeps squares whose closure lies in the disk, outer keeps squares meeting
/// it; adjacent kept squares in a lattice row are merged into one rectangle.
pub fn make_eps_net_disk(center: (f64, f64), radius: f64, eps: f64) -> Result<(SimpleSet, SimpleSet)> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius {radius} must be positive")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps {eps} must be positive")));
    }
    let (cs, ct) = center;
    let r2 = radius * radius;
    let k = (radius / eps).ceil() as i64 + 1;
    let edge = |c: f64, m: i64| c + m as f64 * eps;
    let mut inner = Vec::new();
    let mut outer = Vec::new();
    for a in -k..k {
        let (s0, s1) = (edge(cs, a), edge(cs, a + 1));
        let fs = (s0 - cs).abs().max((s1 - cs).abs());
        let ns = if cs < s0 {
            s0 - cs
        } else if cs > s1 {
            cs - s1
        } else {
            0.0
        };
        let mut runs_in: Option<(i64, i64)> = None;
        let mut runs_out: Option<(i64, i64)> = None;
        for b in -k..k {
            let (t0, t1) = (edge(ct, b), edge(ct, b + 1));
            let ft = (t0 - ct).abs().max((t1 - ct).abs());
            let nt = if ct < t0 {
                t0 - ct
            } else if ct > t1 {
                ct - t1
            } else {
                0.0
            };
            // slack absorbs rounding in the corner distances
            if fs * fs + ft * ft <= r2 * (1.0 - 1e-12) {
                runs_in = Some(runs_in.map_or((b, b + 1), |(lo, _)| (lo, b + 1)));
            }
            if ns * ns + nt * nt <= r2 * (1.0 + 1e-12) {
                runs_out = Some(runs_out.map_or((b, b + 1), |(lo, _)| (lo, b + 1)));
            }
        }
        if let Some((lo, hi)) = runs_in {
            inner.push(Rect { s0, s1, t0: edge(ct, lo), t1: edge(ct, hi) });
        }
        if let Some((lo, hi)) = runs_out {
            outer.push(Rect { s0, s1, t0: edge(ct, lo), t1: edge(ct, hi) });
        }
    }
    Ok((SimpleSet { rects: inner }, SimpleSet { rects: outer }))
}

/// ε-net pair for the disk of `radius` centred at the origin.
pub fn make_eps_net_ball(radius: f64, eps: f64) -> Result<(SimpleSet, SimpleSet)> {
    make_eps_net_disk((0.0, 0.0), radius, eps)
}
