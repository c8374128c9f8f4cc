//! `pickands`: `(a, T)` ladder estimates of the Pickands constant.

use std::time::Instant;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use gauss_extremes::asymptotics::classical_pickands;
use gauss_extremes::pickands::{default_ladder, extrapolate_h, ladder_csv, PickandsMethod, PickandsOptions};

use crate::output::Emit;
use crate::{CmdResult, Common, Failure, EXIT_GATE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ChangeOfMeasure,
    Naive,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PickandsArgs {
    /// Exponent in (0, 2].
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// `default` or rungs `a:T,a:T,...` (a non-increasing, T non-decreasing).
    #[arg(long)]
    pub ladder: Option<String>,
    /// Paths per rung.
    #[arg(long)]
    pub replicates: Option<u64>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Gate: final rung within this relative distance of the classical
    /// constant (alpha 1 or 2 only).
    #[arg(long)]
    pub tolerance: Option<f64>,
}

impl PickandsArgs {
    pub fn merged(self, file: Self) -> Self {
        Self {
            alpha: self.alpha.or(file.alpha),
            ladder: self.ladder.or(file.ladder),
            replicates: self.replicates.or(file.replicates),
            method: self.method.or(file.method),
            tolerance: self.tolerance.or(file.tolerance),
        }
    }
}

fn parse_ladder(spec: &str, alpha: f64) -> CmdResult<Vec<(f64, f64)>> {
    if spec == "default" {
        return Ok(default_ladder(alpha));
    }
    spec.split(',')
        .map(|rung| {
            let (a, t) = rung.split_once(':').ok_or_else(|| Failure::config(format!("rung '{rung}' is not a:T")))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Failure::config(format!("rung '{rung}': {e}")));
            Ok((parse(a)?, parse(t)?))
        })
        .collect()
}

pub fn run(args: PickandsArgs, common: &Common) -> CmdResult<u8> {
    let started = Instant::now();
    let alpha = args.alpha.ok_or_else(|| Failure::config("--alpha is required"))?;
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Failure::config(format!("alpha = {alpha} not in (0, 2]")));
    }
    let ladder = parse_ladder(args.ladder.as_deref().unwrap_or("default"), alpha)?;
    let method = match args.method.unwrap_or(Method::ChangeOfMeasure) {
        Method::ChangeOfMeasure => PickandsMethod::ChangeOfMeasure,
        Method::Naive => PickandsMethod::Naive,
    };
    let opts = PickandsOptions { method, workers: common.workers };
    let res = extrapolate_h(alpha, &ladder, args.replicates.unwrap_or(10_000), common.seed, opts)?;
    let passed = match args.tolerance {
        Some(tol) => {
            let h = classical_pickands(alpha)
                .ok_or_else(|| Failure::config("--tolerance needs alpha 1 or 2 (classical constant)"))?;
            Some(((res.value - h) / h).abs() <= tol)
        }
        None => None,
    };
    Emit {
        command: "pickands",
        config: &args,
        results: &res,
        passed,
        csv: vec![("pickands", ladder_csv(&res))],
        started,
    }
    .write(common)?;
    Ok(if passed == Some(false) { EXIT_GATE } else { 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_strings() {
        assert_eq!(parse_ladder("0.5:10,0.1:20", 1.0).unwrap(), vec![(0.5, 10.0), (0.1, 20.0)]);
        assert_eq!(parse_ladder("default", 2.0).unwrap(), default_ladder(2.0));
        assert!(parse_ladder("0.5-10", 1.0).is_err());
    }
}
