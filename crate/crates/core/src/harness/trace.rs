//! Inner-iteration traces of a single solve.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ipkrylov::{write_trace_csv, IndicatorSnapshot};
use crate::ipm::{ipm_solve_report, write_solves_csv, write_stats_csv, IpmConfig, IpmIterStats, IpmReport, SolveKind};
use crate::problems::GeneratedProblem;

#[derive(Debug)]
pub struct TraceOutput {
    pub report: IpmReport,
    /// Indicator snapshots of the selected solve: every inner iteration
    /// under fixtol and vartol, iterations from `itstart` on under ipstop.
    pub trace: Vec<IndicatorSnapshot>,
    pub iterations: usize,
}

/// Solves with traces kept and writes `trace.csv` (the selected solve),
/// `solves.csv` (final relative residual of every inner solve) and
/// `stats.csv` (one row per IPM iteration) into `dir`.
pub fn emit_trace(g: &GeneratedProblem, cfg: &IpmConfig, ipm_iter: usize, solve: usize, dir: &Path) -> Result<TraceOutput> {
    let cfg = IpmConfig { keep_traces: true, ..cfg.clone() };
    let report = ipm_solve_report(&g.problem, &*g.precond, &cfg);
    let stats = report.stats.get(ipm_iter).ok_or_else(|| {
        Error::Config(format!("IPM iteration {ipm_iter} requested, the solve ran {}", report.stats.len()))
    })?;
    let rec = stats
        .solves
        .get(solve)
        .ok_or_else(|| Error::Config(format!("solve {solve} requested, IPM iteration {ipm_iter} has {}", stats.solves.len())))?;
    let (trace, iterations) = (rec.trace.clone(), rec.iterations);
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join("trace.csv"))?);
    write_trace_csv(&mut w, &trace)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(dir.join("solves.csv"))?);
    write_solves_csv(&mut w, &report.stats)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(dir.join("stats.csv"))?);
    write_stats_csv(&mut w, &report.stats)?;
    w.flush()?;
    Ok(TraceOutput { report, trace, iterations })
}

/// Final relative residuals of all non-fallback solves that did work.
pub fn final_residuals(stats: &[IpmIterStats]) -> Vec<f64> {
    stats
        .iter()
        .flat_map(|s| &s.solves)
        .filter(|r| r.kind != SolveKind::Fallback && r.iterations > 0 && r.relres > 0.0)
        .map(|r| r.relres)
        .collect()
}

/// `log10(max/min)` of the given positive values; zero for fewer than two.
pub fn orders_of_magnitude(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(0.0, f64::max);
    (hi / lo).log10()
}
