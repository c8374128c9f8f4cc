//! `limits`: deterministic tables over parameter grids.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use gauss_extremes::asymptotics::{
    ball_law, limit_law, radial_constant_c, scaling_m, tail_rect, threshold_for_area, LimitLawSpec, ScalingSpec,
};

use crate::output::Emit;
use crate::{CmdResult, Common, Failure};

/// Cache directory for memoized table values.
pub const CACHE_ENV: &str = "GAUSS_EXTREMES_CACHE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Law {
    #[value(name = "1d")]
    #[serde(rename = "1d")]
    OneD,
    #[value(name = "2d")]
    #[serde(rename = "2d")]
    TwoD,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsArgs {
    /// `E exp(-c e^V)` with the 1-D or 2-D mixing convention (default 2d).
    #[arg(long, value_enum)]
    pub law: Option<Law>,
    /// Ball law `E exp(-pi x^2 e^V)`.
    #[arg(long)]
    #[serde(default)]
    pub ball: bool,
    /// Radial constant `C(lambda, r)`.
    #[arg(long = "radial-C")]
    #[serde(default)]
    pub radial_c: bool,
    /// First-order rectangle tail at `(g, h, u)`.
    #[arg(long)]
    #[serde(default)]
    pub tail_rect: bool,
    /// Area scaling `m(u)` and its split.
    #[arg(long)]
    #[serde(default)]
    pub scaling_m: bool,
    /// Threshold solving `m(u) = n`.
    #[arg(long)]
    #[serde(default)]
    pub threshold: bool,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(default)]
    pub c: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(default)]
    pub r: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(default)]
    pub x: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(default)]
    pub lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(default)]
    pub u: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(default)]
    pub g: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(default)]
    pub h: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(default)]
    pub n: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha2: Option<f64>,
    /// Pickands constants; classical values when omitted.
    #[arg(long, allow_negative_numbers = true)]
    pub h1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub h2: Option<f64>,
}

fn pick(flag: Vec<f64>, file: Vec<f64>) -> Vec<f64> {
    if flag.is_empty() {
        file
    } else {
        flag
    }
}

impl LimitsArgs {
    pub fn merged(self, file: Self) -> Self {
        Self {
            law: self.law.or(file.law),
            ball: self.ball || file.ball,
            radial_c: self.radial_c || file.radial_c,
            tail_rect: self.tail_rect || file.tail_rect,
            scaling_m: self.scaling_m || file.scaling_m,
            threshold: self.threshold || file.threshold,
            c: pick(self.c, file.c),
            r: pick(self.r, file.r),
            x: pick(self.x, file.x),
            lambda: pick(self.lambda, file.lambda),
            u: pick(self.u, file.u),
            g: pick(self.g, file.g),
            h: pick(self.h, file.h),
            n: pick(self.n, file.n),
            alpha1: self.alpha1.or(file.alpha1),
            alpha2: self.alpha2.or(file.alpha2),
            h1: self.h1.or(file.h1),
            h2: self.h2.or(file.h2),
        }
    }

    fn scaling(&self) -> CmdResult<ScalingSpec> {
        let (a1, a2) = (self.alpha1.unwrap_or(1.0), self.alpha2.unwrap_or(1.0));
        Ok(match (self.h1, self.h2) {
            (None, None) => ScalingSpec::classical(a1, a2)?,
            (Some(h1), Some(h2)) => ScalingSpec::with_constants(a1, a2, h1, h2)?,
            _ => return Err(Failure::config("give both --h1 and --h2 or neither")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum Quantity {
    Law1d,
    Law2d,
    Ball,
    RadialC,
    TailRect,
    ScalingM,
    Threshold,
}

impl Quantity {
    fn name(self) -> &'static str {
        match self {
            Quantity::Law1d => "law_1d",
            Quantity::Law2d => "law_2d",
            Quantity::Ball => "ball",
            Quantity::RadialC => "radial_c",
            Quantity::TailRect => "tail_rect",
            Quantity::ScalingM => "scaling_m",
            Quantity::Threshold => "threshold",
        }
    }

    fn params(self) -> &'static [&'static str] {
        match self {
            Quantity::Law1d | Quantity::Law2d => &["c", "r"],
            Quantity::Ball => &["x", "r"],
            Quantity::RadialC => &["lambda", "r"],
            Quantity::TailRect => &["g", "h", "u"],
            Quantity::ScalingM => &["u"],
            Quantity::Threshold => &["n"],
        }
    }
}

fn quantity(args: &LimitsArgs) -> CmdResult<Quantity> {
    let mut chosen = Vec::new();
    if let Some(l) = args.law {
        chosen.push(if l == Law::OneD { Quantity::Law1d } else { Quantity::Law2d });
    }
    for (on, q) in [
        (args.ball, Quantity::Ball),
        (args.radial_c, Quantity::RadialC),
        (args.tail_rect, Quantity::TailRect),
        (args.scaling_m, Quantity::ScalingM),
        (args.threshold, Quantity::Threshold),
    ] {
        if on {
            chosen.push(q);
        }
    }
    match chosen.as_slice() {
        [] => Ok(Quantity::Law2d),
        [q] => Ok(*q),
        _ => Err(Failure::config("choose one of --law, --ball, --radial-C, --tail-rect, --scaling-m, --threshold")),
    }
}

#[derive(Debug, Clone, Serialize)]
struct Row {
    quantity: Quantity,
    params: Vec<f64>,
    value: f64,
}

fn grid_for(args: &LimitsArgs, name: &str) -> Vec<f64> {
    let (given, default) = match name {
        "c" => (&args.c, 1.0),
        "r" => (&args.r, 0.0),
        "x" => (&args.x, 1.0),
        "lambda" => (&args.lambda, 1.0),
        "u" => (&args.u, 3.0),
        "g" => (&args.g, 1.0),
        "h" => (&args.h, 1.0),
        _ => (&args.n, 400.0),
    };
    if given.is_empty() {
        vec![default]
    } else {
        given.clone()
    }
}

/// Cartesian product of the parameter grids, first parameter slowest.
fn product(grids: &[Vec<f64>]) -> Vec<Vec<f64>> {
    grids.iter().fold(vec![Vec::new()], |acc, g| {
        acc.iter()
            .flat_map(|p| {
                g.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect()
    })
}

fn evaluate(q: Quantity, p: &[f64], scaling: &ScalingSpec) -> CmdResult<f64> {
    Ok(match q {
        Quantity::Law1d => limit_law(&LimitLawSpec::one_d(p[0], p[1]))?,
        Quantity::Law2d => limit_law(&LimitLawSpec::two_d(p[0], p[1]))?,
        Quantity::Ball => ball_law(p[0], p[1])?,
        Quantity::RadialC => radial_constant_c(p[0], p[1])?,
        Quantity::TailRect => tail_rect(p[0], p[1], p[2], scaling)?,
        Quantity::ScalingM => scaling_m(p[0], scaling)?.2,
        Quantity::Threshold => threshold_for_area(p[0], scaling)?,
    })
}

/// Memo of `key -> value` in `$GAUSS_EXTREMES_CACHE/limits.json`.
struct Cache {
    path: Option<PathBuf>,
    map: BTreeMap<String, f64>,
    dirty: bool,
}

impl Cache {
    fn open() -> Self {
        let path = std::env::var_os(CACHE_ENV).map(|d| PathBuf::from(d).join("limits.json"));
        let map = path
            .as_ref()
            .and_then(|p| std::fs::read_to_string(p).ok())
            .and_then(|s| serde_json::from_str(&s).ok())
            .unwrap_or_default();
        Self { path, map, dirty: false }
    }

    fn get_or(&mut self, key: String, f: impl FnOnce() -> CmdResult<f64>) -> CmdResult<f64> {
        if self.path.is_some() {
            if let Some(&v) = self.map.get(&key) {
                return Ok(v);
            }
        }
        let v = f()?;
        if self.path.is_some() {
            self.map.insert(key, v);
            self.dirty = true;
        }
        Ok(v)
    }

    fn save(&self) {
        let Some(path) = &self.path else { return };
        if !self.dirty {
            return;
        }
        let res = path
            .parent()
            .map(std::fs::create_dir_all)
            .unwrap_or(Ok(()))
            .and_then(|_| std::fs::write(path, serde_json::to_string(&self.map).unwrap_or_default()));
        if let Err(e) = res {
            log::warn!("cache not written: {e}");
        }
    }
}

pub fn run(args: LimitsArgs, common: &Common) -> CmdResult<u8> {
    let started = Instant::now();
    let q = quantity(&args)?;
    let scaling = args.scaling()?;
    let grids: Vec<Vec<f64>> = q.params().iter().map(|n| grid_for(&args, n)).collect();
    let mut cache = Cache::open();
    let mut rows = Vec::new();
    for p in product(&grids) {
        let key = format!("{}|{:?}|{:?}", q.name(), p, scaling);
        let value = cache.get_or(key, || evaluate(q, &p, &scaling))?;
        rows.push(Row { quantity: q, params: p, value });
    }
    cache.save();
    let mut csv = format!("quantity,{},value\n", q.params().join(","));
    for r in &rows {
        let p: Vec<String> = r.params.iter().map(|v| v.to_string()).collect();
        csv.push_str(&format!("{},{},{}\n", q.name(), p.join(","), r.value));
    }
    Emit { command: "limits", config: &args, results: &rows, passed: None, csv: vec![("limits", csv)], started }
        .write(common)?;
    Ok(0)
}
