//! CSV/JSON emission. CSV bodies depend only on configuration and seed;
//! timing and versions live in the JSON summary.

use std::io::Write;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::Format;
use crate::{CmdResult, Common};

#[derive(Serialize)]
struct Summary<'a, C: Serialize, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    timestamp_unix: u64,
    runtime_secs: f64,
    seed: u64,
    workers: usize,
    config: &'a C,
    results: &'a R,
    passed: Option<bool>,
}

/// Everything a command produces.
pub struct Emit<'a, C: Serialize, R: Serialize> {
    pub command: &'a str,
    pub config: &'a C,
    pub results: &'a R,
    pub passed: Option<bool>,
    /// `(file stem, body)`; the first one goes to stdout in CSV mode.
    pub csv: Vec<(&'a str, String)>,
    pub started: Instant,
}

impl<C: Serialize, R: Serialize> Emit<'_, C, R> {
    fn summary_json(&self, common: &Common) -> CmdResult<String> {
        let s = Summary {
            tool: "gauss-extremes",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            runtime_secs: self.started.elapsed().as_secs_f64(),
            seed: common.seed,
            workers: common.workers,
            config: self.config,
            results: self.results,
            passed: self.passed,
        };
        serde_json::to_string_pretty(&s).map_err(|e| crate::Failure::runtime(e.to_string()))
    }

    /// Writes `<stem>.csv` files plus `<command>.json` under `--out`, and
    /// prints the primary table (or the summary) to stdout.
    pub fn write(&self, common: &Common) -> CmdResult<()> {
        let json = self.summary_json(common)?;
        if let Some(dir) = &common.out {
            std::fs::create_dir_all(dir)?;
            for (stem, body) in &self.csv {
                write_file(&dir.join(format!("{stem}.csv")), body)?;
            }
            write_file(&dir.join(format!("{}.json", self.command)), &json)?;
        }
        let text = match common.format {
            Format::Csv => self.csv.first().map(|(_, b)| b.clone()).unwrap_or_default(),
            Format::Json => json + "\n",
        };
        let mut stdout = std::io::stdout().lock();
        match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        }
    }
}

fn write_file(path: &Path, body: &str) -> CmdResult<()> {
    std::fs::write(path, body).map_err(|e| crate::Failure::runtime(format!("{}: {e}", path.display())))
}
