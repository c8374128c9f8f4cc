//! `simulate`: one field sample written in the binary field format.

use std::fs::File;
use std::io::BufWriter;
use std::time::Instant;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use gauss_extremes::corr::CorrelationModel;
use gauss_extremes::field::{
    mix_strong, sample_block_independent, sample_stationary_capped, write_field, GridSpec, DEFAULT_MEMORY_CAP,
};
use gauss_extremes::rng::{derive_seed, streams};

use crate::output::Emit;
use crate::{CmdResult, Common, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Stationary,
    BlockIndependent,
    StrongMixture,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long)]
    pub n2: Option<usize>,
    #[arg(long)]
    pub q1: Option<f64>,
    #[arg(long)]
    pub q2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha2: Option<f64>,
    #[arg(long, value_enum)]
    pub construction: Option<Kind>,
    /// Mixture level for `strong_mixture`.
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    /// `T` of the mixing weight; defaults to the longer grid side.
    #[arg(long)]
    pub mix_t: Option<f64>,
    /// Point cap per sample.
    #[arg(long)]
    pub memory_cap: Option<usize>,
}

impl SimulateArgs {
    pub fn merged(self, file: Self) -> Self {
        Self {
            n1: self.n1.or(file.n1),
            n2: self.n2.or(file.n2),
            q1: self.q1.or(file.q1),
            q2: self.q2.or(file.q2),
            alpha1: self.alpha1.or(file.alpha1),
            alpha2: self.alpha2.or(file.alpha2),
            construction: self.construction.or(file.construction),
            r: self.r.or(file.r),
            mix_t: self.mix_t.or(file.mix_t),
            memory_cap: self.memory_cap.or(file.memory_cap),
        }
    }
}

#[derive(Serialize)]
struct Summary {
    n1: usize,
    n2: usize,
    q1: f64,
    q2: f64,
    seed: u64,
    construction: Kind,
    max: f64,
    mean: f64,
    file: Option<String>,
}

pub fn run(args: SimulateArgs, common: &Common) -> CmdResult<u8> {
    let started = Instant::now();
    let n1 = args.n1.unwrap_or(64);
    let n2 = args.n2.unwrap_or(n1);
    let q1 = args.q1.unwrap_or(0.5);
    let q2 = args.q2.unwrap_or(q1);
    let model = CorrelationModel::separable(args.alpha1.unwrap_or(1.0), args.alpha2.unwrap_or(1.0))?;
    let grid = GridSpec::new(n1, n2, q1, q2)?;
    let cap = args.memory_cap.unwrap_or(DEFAULT_MEMORY_CAP);
    grid.check_cap(cap)?;
    let kind = args.construction.unwrap_or(Kind::Stationary);
    let sample = match kind {
        Kind::Stationary => sample_stationary_capped(&model, grid, common.seed, cap)?,
        Kind::BlockIndependent => sample_block_independent(&model, grid, common.seed)?,
        Kind::StrongMixture => {
            let r = args.r.ok_or_else(|| Failure::config("strong_mixture needs --r"))?;
            let t = args.mix_t.unwrap_or((n1 as f64 * q1).max(n2 as f64 * q2));
            let eta = sample_block_independent(&model, grid, common.seed)?;
            mix_strong(&eta, r, t, derive_seed(common.seed, streams::MIXTURE, 0))?
        }
    };
    let file = match &common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join("field.bin");
            write_field(BufWriter::new(File::create(&path)?), &sample)?;
            Some(path.display().to_string())
        }
        None => None,
    };
    let summary = Summary {
        n1,
        n2,
        q1,
        q2,
        seed: common.seed,
        construction: kind,
        max: sample.max(),
        mean: sample.values.iter().sum::<f64>() / sample.values.len() as f64,
        file,
    };
    let csv = format!(
        "n1,n2,q1,q2,seed,construction,max,mean\n{},{},{},{},{},{},{},{}\n",
        n1,
        n2,
        q1,
        q2,
        common.seed,
        kind.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default(),
        summary.max,
        summary.mean
    );
    Emit { command: "simulate", config: &args, results: &summary, passed: None, csv: vec![("simulate", csv)], started }
        .write(common)?;
    Ok(0)
}
