//! The three top-level runs. Each returns its output files as in-memory
//! text so callers can write them or compare them.

use std::path::Path;

use crate::config::Config;
use crate::error::Result;
use crate::experiments::run_rate_study;
use crate::output::{field_csv, fmt_f64, write_text};
use crate::pde::{forward, Source};

/// Named text files produced by one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutput {
    pub files: Vec<(&'static str, String)>,
}

impl RunOutput {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| *n == name).map(|(_, s)| s.as_str())
    }

    /// Writes every file into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        for (name, text) in &self.files {
            write_text(&dir.join(name), text)?;
        }
        Ok(())
    }
}

/// `u.csv` (the source on Γ) and `y.csv` (the state on the fine mesh).
pub fn run_forward(cfg: &Config) -> Result<RunOutput> {
    let exp = cfg.experiment()?;
    let (nx, nt, n) = (exp.forward.space.len(), exp.forward.time.len(), exp.gamma.intervals());
    let u = exp.truth();
    let y = forward(Source::Primal(&u, &exp.gamma), &exp.forward)?;
    Ok(RunOutput {
        files: vec![
            ("u.csv", field_csv(u.view(), nx, nt, n)),
            ("y.csv", field_csv(y.view(), nx, nt, n)),
        ],
    })
}

pub const SUMMARY_HEADER: &str = "rel_error,rel_residual,iterations,fixed_point_residual";

/// `reconstruction.csv`, `error.csv`, `trace.csv` and `summary.csv`.
pub fn run_invert(cfg: &Config) -> Result<RunOutput> {
    let exp = cfg.experiment()?;
    let (nx, nt, n) = (exp.forward.space.len(), exp.forward.time.len(), exp.gamma.intervals());
    let rec = exp.reconstruct()?;
    let sol = &rec.solution;
    let err = sol.u.values() - rec.truth.values();
    let summary = format!(
        "{SUMMARY_HEADER}\n{},{},{},{}\n",
        fmt_f64(rec.rel_error.unwrap_or(f64::NAN)),
        fmt_f64(sol.rel_residual),
        sol.iterations,
        fmt_f64(sol.fixed_point_residual)
    );
    Ok(RunOutput {
        files: vec![
            ("reconstruction.csv", field_csv(sol.u.view(), nx, nt, n)),
            ("error.csv", field_csv(err.view(), nx, nt, n)),
            ("trace.csv", sol.trace.to_csv()),
            ("summary.csv", summary),
        ],
    })
}

/// `rates.csv` and `slopes.csv`.
pub fn run_rates(cfg: &Config) -> Result<RunOutput> {
    let exp = cfg.experiment()?;
    let table = run_rate_study(&exp, &cfg.rate_spec()?)?;
    Ok(RunOutput {
        files: vec![("rates.csv", table.to_csv(cfg.output.timing)), ("slopes.csv", table.slopes_csv())],
    })
}
