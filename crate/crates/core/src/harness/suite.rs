//! Batch runs over problems, seeds and stopping policies.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use super::defaults::{default_spec, parse_mode, resolve_ipm_config, with_size, IpmOverrides, PolicyKind, PolicyOverrides};
use crate::error::{Error, Result};
use crate::ipm::{ipm_solve_report, IpmConfig, IpmReport};
use crate::problems::{generate, read_meta, Family, GeneratedProblem, ProblemSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub problems: Vec<ProblemSpec>,
    pub seeds: Vec<u64>,
    pub policies: Vec<PolicyKind>,
    pub policy_overrides: PolicyOverrides,
    pub ipm_overrides: IpmOverrides,
    /// `runs.csv` and `summary.csv` are written here when set.
    pub out_dir: Option<PathBuf>,
    pub threads: usize,
}

impl SuiteConfig {
    /// All three policies on one problem with the family defaults.
    pub fn new(problem: ProblemSpec, seeds: Vec<u64>) -> Self {
        Self {
            problems: vec![problem],
            seeds,
            policies: PolicyKind::ALL.to_vec(),
            policy_overrides: PolicyOverrides::default(),
            ipm_overrides: IpmOverrides::default(),
            out_dir: None,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.problems.is_empty() {
            return Err(Error::Config("suite has no problems".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("suite has no seeds".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::Config("suite has no policies".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        for p in &self.problems {
            for &k in &self.policies {
                self.ipm_config(p.family(), k).validate()?;
            }
        }
        Ok(())
    }

    pub fn ipm_config(&self, family: Family, kind: PolicyKind) -> IpmConfig {
        resolve_ipm_config(family, kind, &self.policy_overrides, &self.ipm_overrides)
    }

    /// Reads a `key = value` file; see [`from_key_values`](Self::from_key_values).
    pub fn from_reader<R: BufRead>(r: R) -> Result<Self> {
        Self::from_key_values(&read_meta(r)?)
    }

    /// Keys: `family` (required), `sizes` (comma list of the family size
    /// parameter), model parameters as in problem `meta.txt`, `seeds`
    /// (`0..10` or a comma list), `policies`, `tol`, `tol0`, `tolmax`, `eps`,
    /// `itstart`, `correctors`, `mode`, `ipm_tol`, `max_iter`, `out`, `threads`.
    pub fn from_key_values(kv: &BTreeMap<String, String>) -> Result<Self> {
        let family = Family::parse(kv.get("family").ok_or_else(|| Error::Parse("config has no family".into()))?)?;
        let has_model_keys = kv.keys().any(|k| !SUITE_KEYS.contains(&k.as_str()));
        let base = if has_model_keys { ProblemSpec::from_meta(kv)? } else { default_spec(family) };
        let problems = match kv.get("sizes") {
            None => vec![base],
            Some(list) => split_list(list).map(|s| with_size(base, parse_value("sizes", s)?)).collect::<Result<_>>()?,
        };
        let seeds = match kv.get("seeds") {
            Some(s) => parse_seeds(s)?,
            None => (0..10).collect(),
        };
        let policies = match kv.get("policies") {
            Some(s) => split_list(s).map(PolicyKind::parse).collect::<Result<_>>()?,
            None => PolicyKind::ALL.to_vec(),
        };
        let opt = |k: &str| kv.get(k).map(|v| parse_value::<f64>(k, v)).transpose();
        let opt_usize = |k: &str| kv.get(k).map(|v| parse_value::<usize>(k, v)).transpose();
        let cfg = Self {
            problems,
            seeds,
            policies,
            policy_overrides: PolicyOverrides {
                tol: opt("tol")?,
                tol0: opt("tol0")?,
                tolmax: opt("tolmax")?,
                eps: opt("eps")?,
                itstart: opt_usize("itstart")?,
            },
            ipm_overrides: IpmOverrides {
                correctors: opt_usize("correctors")?,
                mode: kv.get("mode").map(|m| parse_mode(m)).transpose()?,
                ipm_tol: opt("ipm_tol")?,
                max_iter: opt_usize("max_iter")?,
            },
            out_dir: kv.get("out").map(PathBuf::from),
            threads: opt_usize("threads")?.unwrap_or(1),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

const SUITE_KEYS: &[&str] = &[
    "family", "sizes", "seeds", "policies", "tol", "tol0", "tolmax", "eps", "itstart", "correctors", "mode", "ipm_tol",
    "max_iter", "out", "threads",
];

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Parse(format!("bad value for {key}: {v}")))
}

/// `a..b` (half open) or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (parse_value("seeds", a)?, parse_value("seeds", b)?);
        if a >= b {
            return Err(Error::Parse(format!("empty seed range {s}")));
        }
        return Ok((a..b).collect());
    }
    split_list(s).map(|t| parse_value("seeds", t)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub family: Family,
    pub size: String,
    pub seed: u64,
    pub policy: PolicyKind,
    pub ipm_iters: usize,
    /// Predictor, corrector and fallback inner iterations over the whole solve.
    pub total_inner_iters: usize,
    pub wall_time_seconds: f64,
    pub converged: bool,
}

pub const RUNS_HEADER: &str = "family,size,seed,policy,ipm_iters,total_inner_iters,wall_time_seconds,converged";

impl RunRecord {
    pub fn from_report(spec: &ProblemSpec, seed: u64, policy: PolicyKind, r: &IpmReport, secs: f64) -> Self {
        Self {
            family: spec.family(),
            size: spec.size_label(),
            seed,
            policy,
            ipm_iters: r.ipm_iterations(),
            total_inner_iters: r.total_inner_iterations(),
            wall_time_seconds: secs,
            converged: r.converged(),
        }
    }

    fn failed(spec: &ProblemSpec, seed: u64, policy: PolicyKind) -> Self {
        Self {
            family: spec.family(),
            size: spec.size_label(),
            seed,
            policy,
            ipm_iters: 0,
            total_inner_iters: 0,
            wall_time_seconds: 0.0,
            converged: false,
        }
    }
}

pub fn write_runs_csv<W: Write>(mut w: W, records: &[RunRecord]) -> Result<()> {
    writeln!(w, "{RUNS_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{:.6},{}",
            r.family.as_str(),
            r.size,
            r.seed,
            r.policy.as_str(),
            r.ipm_iters,
            r.total_inner_iters,
            r.wall_time_seconds,
            r.converged
        )?;
    }
    Ok(())
}

/// `100·(1 − new/baseline)`.
pub fn reduction_percent(new: f64, baseline: f64) -> f64 {
    100.0 * (1.0 - new / baseline)
}

/// Means over seeds for one problem and policy. The reduction columns are
/// filled on ipstop rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub family: Family,
    pub size: String,
    pub policy: PolicyKind,
    pub runs: usize,
    pub converged: usize,
    pub mean_ipm_iters: f64,
    pub mean_inner_iters: f64,
    pub mean_time_seconds: f64,
    pub red_inner_fixtol: Option<f64>,
    pub red_time_fixtol: Option<f64>,
    pub red_inner_vartol: Option<f64>,
    pub red_time_vartol: Option<f64>,
}

pub const SUMMARY_HEADER: &str = "family,size,policy,runs,converged,mean_ipm_iters,mean_inner_iters,mean_time_seconds,\
red_inner_fixtol,red_time_fixtol,red_inner_vartol,red_time_vartol";

pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Family, String, PolicyKind), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.family, r.size.clone(), r.policy)).or_default().push(r);
    }
    let mut rows: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((family, size, policy), rs)| {
            let k = rs.len() as f64;
            let mean = |f: &dyn Fn(&RunRecord) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / k;
            SummaryRow {
                family,
                size,
                policy,
                runs: rs.len(),
                converged: rs.iter().filter(|r| r.converged).count(),
                mean_ipm_iters: mean(&|r| r.ipm_iters as f64),
                mean_inner_iters: mean(&|r| r.total_inner_iters as f64),
                mean_time_seconds: mean(&|r| r.wall_time_seconds),
                red_inner_fixtol: None,
                red_time_fixtol: None,
                red_inner_vartol: None,
                red_time_vartol: None,
            }
        })
        .collect();
    let lookup: Vec<(Family, String, PolicyKind, f64, f64)> =
        rows.iter().map(|r| (r.family, r.size.clone(), r.policy, r.mean_inner_iters, r.mean_time_seconds)).collect();
    for row in rows.iter_mut().filter(|r| r.policy == PolicyKind::IpStop) {
        let base = |k: PolicyKind| lookup.iter().find(|l| l.0 == row.family && l.1 == row.size && l.2 == k);
        if let Some(b) = base(PolicyKind::FixTol) {
            row.red_inner_fixtol = Some(reduction_percent(row.mean_inner_iters, b.3));
            row.red_time_fixtol = Some(reduction_percent(row.mean_time_seconds, b.4));
        }
        if let Some(b) = base(PolicyKind::VarTol) {
            row.red_inner_vartol = Some(reduction_percent(row.mean_inner_iters, b.3));
            row.red_time_vartol = Some(reduction_percent(row.mean_time_seconds, b.4));
        }
    }
    rows
}

pub fn write_summary_csv<W: Write>(mut w: W, rows: &[SummaryRow]) -> Result<()> {
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.2}"));
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{:.2},{:.2},{:.6},{},{},{},{}",
            r.family.as_str(),
            r.size,
            r.policy.as_str(),
            r.runs,
            r.converged,
            r.mean_ipm_iters,
            r.mean_inner_iters,
            r.mean_time_seconds,
            opt(r.red_inner_fixtol),
            opt(r.red_time_fixtol),
            opt(r.red_inner_vartol),
            opt(r.red_time_vartol)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    /// Ordered by problem, seed, then policy as listed in the config.
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

impl SuiteOutcome {
    pub fn all_converged(&self) -> bool {
        self.records.iter().all(|r| r.converged)
    }

    pub fn row(&self, size: &str, policy: PolicyKind) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.size == size && r.policy == policy)
    }
}

/// Solves one generated problem under one policy.
pub fn run_one(g: &GeneratedProblem, cfg: &IpmConfig) -> (IpmReport, f64) {
    let t = Instant::now();
    let r = ipm_solve_report(&g.problem, &*g.precond, cfg);
    (r, t.elapsed().as_secs_f64())
}

/// Every (problem, seed) cell is generated once and solved under each
/// policy. Cells run on `cfg.threads` workers; a failed generation or solve
/// is recorded as not converged.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    cfg.validate()?;
    let cells: Vec<(&ProblemSpec, u64)> =
        cfg.problems.iter().flat_map(|p| cfg.seeds.iter().map(move |&s| (p, s))).collect();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, Vec<RunRecord>)>> = Mutex::new(Vec::with_capacity(cells.len()));
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(&(spec, seed)) = cells.get(i) else { break };
        let recs = match generate(spec, seed) {
            Ok(g) => cfg
                .policies
                .iter()
                .map(|&k| {
                    let (r, secs) = run_one(&g, &cfg.ipm_config(spec.family(), k));
                    RunRecord::from_report(spec, seed, k, &r, secs)
                })
                .collect(),
            Err(_) => cfg.policies.iter().map(|&k| RunRecord::failed(spec, seed, k)).collect(),
        };
        results.lock().unwrap().push((i, recs));
    };
    let threads = cfg.threads.min(cells.len()).max(1);
    if threads == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(work);
            }
        });
    }
    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|(i, _)| *i);
    let records: Vec<RunRecord> = results.into_iter().flat_map(|(_, r)| r).collect();
    let summary = summarize(&records);
    if let Some(dir) = &cfg.out_dir {
        write_suite_csv(dir, &records, &summary)?;
    }
    Ok(SuiteOutcome { records, summary })
}

pub fn write_suite_csv(dir: &Path, records: &[RunRecord], summary: &[SummaryRow]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join("runs.csv"))?);
    write_runs_csv(&mut w, records)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(dir.join("summary.csv"))?);
    write_summary_csv(&mut w, summary)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(policy: PolicyKind, inner: usize, secs: f64) -> RunRecord {
        RunRecord {
            family: Family::Tomo,
            size: "level=8".into(),
            seed: 0,
            policy,
            ipm_iters: 5,
            total_inner_iters: inner,
            wall_time_seconds: secs,
            converged: true,
        }
    }

    #[test]
    fn reduction_arithmetic() {
        assert!((reduction_percent(400.0, 1000.0) - 60.0).abs() < 1e-12);
        let rows = summarize(&[rec(PolicyKind::FixTol, 1000, 2.0), rec(PolicyKind::IpStop, 400, 1.0)]);
        let ip = rows.iter().find(|r| r.policy == PolicyKind::IpStop).unwrap();
        assert_eq!(ip.red_inner_fixtol, Some(60.0));
        assert_eq!(ip.red_time_fixtol, Some(50.0));
        assert_eq!(ip.red_inner_vartol, None);
    }

    #[test]
    fn seeds_parse() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("4, 7").unwrap(), vec![4, 7]);
        assert!(parse_seeds("3..3").is_err());
    }

    #[test]
    fn config_from_text() {
        let text = "family = tomo\nsizes = 8, 16\nseeds = 0..2\npolicies = fixtol,ipstop\neps = 0.001\n";
        let cfg = SuiteConfig::from_reader(text.as_bytes()).unwrap();
        assert_eq!(cfg.problems.len(), 2);
        assert_eq!(cfg.seeds, vec![0, 1]);
        assert_eq!(cfg.policies, vec![PolicyKind::FixTol, PolicyKind::IpStop]);
        match cfg.ipm_config(Family::Tomo, PolicyKind::IpStop).policy {
            crate::ipm::StoppingPolicy::IpStop(e) => assert_eq!((e.epsilon, e.itstart), (0.001, 5)),
            p => panic!("{p:?}"),
        }
        assert!(SuiteConfig::from_reader("family = tomo\npolicies = exact\n".as_bytes()).is_err());
    }
}
