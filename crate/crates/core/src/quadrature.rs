//! Gauss-Hermite rules for normal expectations and adaptive Gauss-Kronrod
//! integration on finite and semi-infinite ranges.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Orders tried by [`normal_expectation`], in sequence.
pub const HERMITE_ORDERS: [usize; 7] = [16, 32, 64, 128, 256, 512, 1024];

/// Nodes and weights for `E f(W)`, `W ~ N(0,1)`: `sum w_i f(x_i)`.
#[derive(Debug, Clone)]
pub struct HermiteRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl HermiteRule {
    /// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix of the
    /// probabilists' Hermite polynomials, weights the reciprocal Christoffel
    /// sums `1 / sum_k p_k(x)^2` of the orthonormal polynomials.
    fn build(n: usize) -> Self {
        assert!(n >= 1);
        let mut d = vec![0.0; n];
        let mut e: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
        e.push(0.0);
        tridiagonal_eigenvalues(&mut d, &mut e);
        d.sort_by(f64::total_cmp);
        // exact symmetry about 0
        for i in 0..n / 2 {
            let x = 0.5 * (d[n - 1 - i] - d[i]);
            d[i] = -x;
            d[n - 1 - i] = x;
        }
        if n % 2 == 1 {
            d[n / 2] = 0.0;
        }
        let weights = d.iter().map(|&x| christoffel_weight(x, n)).collect();
        Self { nodes: d, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `1 / sum_{k<n} p_k(x)^2` with `p_k` orthonormal for N(0,1), rescaled on
/// the fly so large `|x|` cannot overflow.
fn christoffel_weight(x: f64, n: usize) -> f64 {
    let (mut p0, mut p1) = (0.0f64, 1.0f64);
    let mut sum = 1.0;
    let mut log_scale = 0.0;
    for k in 1..n {
        let kf = k as f64;
        let p2 = (x * p1 - (kf - 1.0).sqrt() * p0) / kf.sqrt();
        p0 = p1;
        p1 = p2;
        sum += p1 * p1;
        if sum > 1e200 {
            p0 *= 1e-100;
            p1 *= 1e-100;
            sum *= 1e-200;
            log_scale += 200.0 * std::f64::consts::LN_10;
        }
    }
    (-log_scale).exp() / sum
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL (diagonal
/// `d`, subdiagonal `e[0..n-1]`); results overwrite `d`.
fn tridiagonal_eigenvalues(d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 100, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// Cached rule of order `n`.
pub fn hermite_rule(n: usize) -> Arc<HermiteRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<HermiteRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard.entry(n).or_insert_with(|| Arc::new(HermiteRule::build(n))).clone()
}

/// Outcome of an escalating quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Escalated {
    pub value: f64,
    pub order: usize,
    /// Difference between the last two orders.
    pub change: f64,
    pub converged: bool,
}

/// `E f(W)` for standard normal `W`, doubling the Hermite order until two
/// successive orders agree to `tol`.
pub fn normal_expectation<F: Fn(f64) -> f64>(f: F, tol: f64) -> Escalated {
    let mut prev = hermite_rule(HERMITE_ORDERS[0]).expect(&f);
    let mut change = f64::INFINITY;
    for &n in &HERMITE_ORDERS[1..] {
        let cur = hermite_rule(n).expect(&f);
        change = (cur - prev).abs();
        if change <= tol {
            return Escalated { value: cur, order: n, change, converged: true };
        }
        prev = cur;
    }
    log::warn!("Gauss-Hermite escalation stopped at order 1024 with change {change:e}");
    Escalated { value: prev, order: *HERMITE_ORDERS.last().unwrap(), change, converged: false }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = h * XGK[k];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) on `[a, b]` with global error control.
///
/// Returns `(integral, error estimate)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> (f64, f64) {
    let (v, e) = gk15(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    for _ in 0..2000 {
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (idx, _) = intervals.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).unwrap();
        let (lo, hi, v0, e0) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        total += v1 + v2 - v0;
        err += e1 + e2 - e0;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    // Re-sum to shed accumulated rounding from the running updates.
    let total: f64 = intervals.iter().map(|iv| iv.2).sum();
    let err: f64 = intervals.iter().map(|iv| iv.3).sum();
    (total, err)
}

/// `int_0^inf f(y) dy` through `y = t / (1 - t)`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, abs_tol: f64, rel_tol: f64) -> (f64, f64) {
    integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let om = 1.0 - t;
            let y = t / om;
            let v = f(y);
            if v == 0.0 {
                0.0
            } else {
                v / (om * om)
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}
