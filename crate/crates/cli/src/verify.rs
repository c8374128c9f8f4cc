//! `verify`: Monte Carlo experiments with pass/fail gates.
//!
//! ```toml
//! [verify.experiment]            # shared ExperimentConfig
//! model = { alpha1 = 1.0, alpha2 = 1.0 }
//! threshold = { kind = "empirical_area", n = 400.0, calibration = 1000000 }
//! grid = { kind = "per_unit", k = 2 }
//! replicates = 20000
//!
//! [[verify.rect]]
//! x = 1.0
//! y = 1.0
//! ```
//!
//! Every job accepts `with = { ... }` to override `threshold`, `grid`, `r`,
//! `mix_t`, `field` or `replicates` for that job alone.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use gauss_extremes::asymptotics::{RadialSpec, Survival};
use gauss_extremes::experiments::{
    estimate_extremal_index, extremal_index_scan, results_csv, run_ball_limit, run_ball_sandwich, run_epsnet_limit,
    run_random_radius, run_rect_limit, strong_dependence_discrepancy, ExperimentConfig, ExperimentResult, FieldKind,
    GridRule, ThresholdRule,
};
use gauss_extremes::field::{Rect, SimpleSet};

use crate::output::Emit;
use crate::{CmdResult, Common, EXIT_GATE};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub threshold: Option<ThresholdRule>,
    pub grid: Option<GridRule>,
    pub r: Option<f64>,
    pub mix_t: Option<f64>,
    pub field: Option<FieldKind>,
    pub replicates: Option<u64>,
}

impl Overrides {
    fn apply(&self, base: &ExperimentConfig) -> ExperimentConfig {
        let mut c = base.clone();
        if let Some(t) = self.threshold {
            c.threshold = t;
        }
        if let Some(g) = self.grid {
            c.grid = g;
        }
        if let Some(r) = self.r {
            c.r = r;
        }
        if self.mix_t.is_some() {
            c.mix_t = self.mix_t;
        }
        if let Some(f) = self.field {
            c.field = f;
        }
        if let Some(n) = self.replicates {
            c.replicates = n;
        }
        c
    }
}

fn bias() -> f64 {
    0.05
}
fn three() -> f64 {
    3.0
}
fn four() -> f64 {
    4.0
}
fn five() -> f64 {
    5.0
}
fn hundredth() -> f64 {
    0.01
}
fn million() -> u64 {
    1_000_000
}

/// `|p_hat - target| <= bias + k * stderr`; `target` replaces the
/// theoretical value when set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectJob {
    pub x: f64,
    pub y: f64,
    #[serde(default = "bias")]
    pub bias: f64,
    #[serde(default = "three")]
    pub k: f64,
    pub target: Option<f64>,
    #[serde(default)]
    pub with: Overrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallJob {
    pub x: f64,
    #[serde(default = "bias")]
    pub bias: f64,
    #[serde(default = "three")]
    pub k: f64,
    pub target: Option<f64>,
    #[serde(default)]
    pub with: Overrides,
}

/// Simple set given as `[s0, s1, t0, t1]` rectangles in scaled units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimpleJob {
    pub rects: Vec<[f64; 4]>,
    #[serde(default = "bias")]
    pub bias: f64,
    #[serde(default = "three")]
    pub k: f64,
    pub target: Option<f64>,
    #[serde(default)]
    pub with: Overrides,
}

/// Ordering on coupled seeds plus both pixelation targets within `tol` of
/// the ball law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandwichJob {
    pub x: f64,
    pub eps: f64,
    #[serde(default = "hundredth")]
    pub tol: f64,
    #[serde(default)]
    pub with: Overrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusJob {
    pub radius: Survival,
    pub spec: RadialSpec,
    pub u: Vec<f64>,
    pub cap: f64,
    #[serde(default)]
    pub with: Overrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexJob {
    pub n: usize,
    #[serde(default = "million")]
    pub unit_samples: u64,
    pub low: f64,
    pub high: f64,
    #[serde(default)]
    pub with: Overrides,
}

/// `constant = false` expects the scan to fail constancy at `k` joint
/// standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanJob {
    pub n: Vec<usize>,
    #[serde(default = "million")]
    pub unit_samples: u64,
    pub constant: bool,
    #[serde(default = "five")]
    pub k: f64,
    #[serde(default)]
    pub with: Overrides,
}

/// `|D - target| <= bias + k * stderr`, and `D > k * stderr` when
/// `positive`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrongJob {
    pub n: usize,
    #[serde(default = "bias")]
    pub bias: f64,
    #[serde(default = "four")]
    pub k: f64,
    #[serde(default)]
    pub positive: bool,
    #[serde(default)]
    pub with: Overrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub rect: Vec<RectJob>,
    #[serde(default)]
    pub ball: Vec<BallJob>,
    #[serde(default)]
    pub simple: Vec<SimpleJob>,
    #[serde(default)]
    pub sandwich: Vec<SandwichJob>,
    #[serde(default)]
    pub random_radius: Vec<RadiusJob>,
    #[serde(default)]
    pub extremal_index: Vec<IndexJob>,
    #[serde(default)]
    pub index_scan: Vec<ScanJob>,
    #[serde(default)]
    pub strong: Vec<StrongJob>,
}

/// One gate outcome.
#[derive(Debug, Clone, Serialize)]
pub struct Gate {
    pub job: String,
    pub statistic: &'static str,
    pub estimate: f64,
    pub stderr: f64,
    pub target: f64,
    pub pass: bool,
}

pub const GATE_HEADER: &str = "job,statistic,estimate,stderr,target,pass";

fn gates_csv(gates: &[Gate]) -> String {
    let mut s = format!("{GATE_HEADER}\n");
    for g in gates {
        s.push_str(&format!(
            "{},{},{:.10},{:.10},{:.10},{}\n",
            g.job, g.statistic, g.estimate, g.stderr, g.target, g.pass
        ));
    }
    s
}

#[derive(Debug, Default, Serialize)]
struct Outcome {
    gates: Vec<Gate>,
    rows: Vec<ExperimentResult>,
    details: Vec<serde_json::Value>,
}

impl Outcome {
    fn probability(&mut self, job: String, mut r: ExperimentResult, target: Option<f64>, bias: f64, k: f64) {
        if let Some(t) = target {
            r.target = t;
            if r.stderr > 0.0 {
                r.z_score = (r.p_hat - t) / r.stderr;
            }
        }
        self.gates.push(Gate {
            job,
            statistic: "p_hat",
            estimate: r.p_hat,
            stderr: r.stderr,
            target: r.target,
            pass: r.within(bias, k),
        });
        self.rows.push(r);
    }

    fn detail(&mut self, v: &impl Serialize) {
        self.details.push(serde_json::to_value(v).unwrap_or(serde_json::Value::Null));
    }
}

pub fn run(mut cfg: VerifyConfig, seed: Option<u64>, common: &Common) -> CmdResult<u8> {
    let started = Instant::now();
    if let Some(s) = seed {
        cfg.experiment.seed = s;
    }
    cfg.experiment.workers = common.workers;
    let base = &cfg.experiment;
    let mut out = Outcome::default();

    for (i, j) in cfg.rect.iter().enumerate() {
        let r = run_rect_limit(&j.with.apply(base), j.x, j.y)?;
        out.probability(format!("rect{i}"), r, j.target, j.bias, j.k);
    }
    for (i, j) in cfg.ball.iter().enumerate() {
        let r = run_ball_limit(&j.with.apply(base), j.x)?;
        out.probability(format!("ball{i}"), r, j.target, j.bias, j.k);
    }
    for (i, j) in cfg.simple.iter().enumerate() {
        let rects = j.rects.iter().map(|&[s0, s1, t0, t1]| Rect::new(s0, s1, t0, t1)).collect::<Result<Vec<_>, _>>()?;
        let r = run_epsnet_limit(&j.with.apply(base), &[SimpleSet::new(rects)?])?.remove(0);
        out.probability(format!("simple{i}"), r, j.target, j.bias, j.k);
    }
    for (i, j) in cfg.sandwich.iter().enumerate() {
        let s = run_ball_sandwich(&j.with.apply(base), j.x, j.eps)?;
        let gap = (s.inner.target - s.ball.target).abs().max((s.outer.target - s.ball.target).abs());
        let job = format!("sandwich{i}");
        out.gates.push(Gate {
            job: job.clone(),
            statistic: "ordered",
            estimate: s.holds as u8 as f64,
            stderr: 0.0,
            target: 1.0,
            pass: s.holds,
        });
        out.gates.push(Gate {
            job,
            statistic: "target_gap",
            estimate: gap,
            stderr: 0.0,
            target: j.tol,
            pass: gap <= j.tol,
        });
        out.rows.extend([s.inner, s.ball, s.outer]);
    }
    for (i, j) in cfg.random_radius.iter().enumerate() {
        let res = run_random_radius(&j.with.apply(base), &j.spec, j.radius, &j.u, j.cap)?;
        let last = res.rungs.last().expect("nonempty ladder");
        out.gates.push(Gate {
            job: format!("radius{i}"),
            statistic: "ratio_trend",
            estimate: last.ratio,
            stderr: last.ratio_se,
            target: 1.0,
            pass: res.trend_ok && res.last_in_band,
        });
        out.detail(&res);
        out.rows.extend(res.rungs.into_iter().map(|r| r.result));
    }
    for (i, j) in cfg.extremal_index.iter().enumerate() {
        let res = estimate_extremal_index(&j.with.apply(base), j.n, j.unit_samples)?;
        out.gates.push(Gate {
            job: format!("index{i}"),
            statistic: "theta",
            estimate: res.theta,
            stderr: res.stderr,
            target: 0.5 * (j.low + j.high),
            pass: (j.low..=j.high).contains(&res.theta),
        });
        out.detail(&res);
    }
    for (i, j) in cfg.index_scan.iter().enumerate() {
        let scan = extremal_index_scan(&j.with.apply(base), &j.n, j.unit_samples)?;
        out.gates.push(Gate {
            job: format!("scan{i}"),
            statistic: "max_pair_z",
            estimate: scan.max_pair_z,
            stderr: 0.0,
            target: j.k,
            pass: scan.constant_within(j.k) == j.constant,
        });
        out.detail(&scan);
    }
    for (i, j) in cfg.strong.iter().enumerate() {
        let d = strong_dependence_discrepancy(&j.with.apply(base), j.n)?;
        let mut pass = (d.d_hat - d.target).abs() <= j.bias + j.k * d.stderr;
        if j.positive {
            pass &= d.d_hat > j.k * d.stderr;
        }
        out.gates.push(Gate {
            job: format!("strong{i}"),
            statistic: "discrepancy",
            estimate: d.d_hat,
            stderr: d.stderr,
            target: d.target,
            pass,
        });
        out.detail(&d);
    }

    let passed = out.gates.iter().all(|g| g.pass);
    for g in out.gates.iter().filter(|g| !g.pass) {
        log::warn!("gate failed: {} {} = {} (target {})", g.job, g.statistic, g.estimate, g.target);
    }
    let csv = vec![("gates", gates_csv(&out.gates)), ("verify", results_csv(&out.rows))];
    Emit { command: "verify", config: &cfg, results: &out, passed: Some(passed), csv, started }.write(common)?;
    Ok(if passed { 0 } else { EXIT_GATE })
}
