use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ipstop::harness::{
    default_spec, emit_trace, final_residuals, orders_of_magnitude, parse_seeds, resolve_ipm_config, run_one,
    run_suite, IpmOverrides, PolicyKind, PolicyOverrides, SuiteConfig,
};
use ipstop::ipm::{write_solves_csv, write_stats_csv, IpmConfig, LinearMode};
use ipstop::problems::{
    generate, load_problem_dir, write_f64_bin, write_problem_dir, CsParams, Family, GeneratedProblem, PdeParams,
    ProblemSpec, RandomSpec, TomoParams,
};

#[derive(Parser)]
#[command(name = "ipstop", version, about = "Interior point solver with indicator-based inner stopping")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a problem directory.
    Gen {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one problem under one stopping policy.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Load a problem directory written by `gen` instead of generating.
        #[arg(long)]
        dir: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum, default_value = "ipstop")]
        policy: PolicyArg,
        /// Write stats.csv, solves.csv and x.bin here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a suite over seeds and policies and write runs.csv and summary.csv.
    Bench {
        /// Plain-text `key = value` suite file; flags override nothing in it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// `a..b` or a comma list.
        #[arg(long, default_value = "0..10")]
        seeds: String,
        /// Comma list of policies.
        #[arg(long, default_value = "fixtol,vartol,ipstop")]
        policies: String,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the inner-iteration trace of one solve.
    Trace {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum, default_value = "ipstop")]
        policy: PolicyArg,
        /// IPM iteration (0-based).
        #[arg(long, default_value_t = 2)]
        ipm_iter: usize,
        /// Solve within the IPM iteration (0 is the predictor).
        #[arg(long, default_value_t = 0)]
        solve: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Tomo,
    Cs,
    Pde,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Fixtol,
    Vartol,
    Ipstop,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Fixtol => PolicyKind::FixTol,
            PolicyArg::Vartol => PolicyKind::VarTol,
            PolicyArg::Ipstop => PolicyKind::IpStop,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Normal,
    Augmented,
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long, value_enum, default_value = "tomo")]
    family: FamilyArg,
    /// Tomography grid level.
    #[arg(long)]
    level: Option<usize>,
    /// PDE discretization parameter.
    #[arg(long)]
    nc: Option<u32>,
    /// PDE regularization.
    #[arg(long)]
    beta: Option<f64>,
    /// Rows (CS measurements, random constraints).
    #[arg(long)]
    m: Option<usize>,
    /// Columns (CS signal length, random variables).
    #[arg(long)]
    n: Option<usize>,
    /// Random family only: add a quadratic term.
    #[arg(long)]
    qp: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ProblemArgs {
    fn spec(&self) -> ProblemSpec {
        match self.family {
            FamilyArg::Tomo => {
                let d = TomoParams::default();
                ProblemSpec::Tomo(TomoParams { level: self.level.unwrap_or(d.level), ..d })
            }
            FamilyArg::Cs => {
                let d = CsParams::default();
                let m = self.m.unwrap_or(d.m);
                let n = self.n.unwrap_or(if self.m.is_some() { 4 * m } else { d.n });
                let k = if self.m.is_some() { (m / 8).max(1) } else { d.k_sparse };
                ProblemSpec::Cs(CsParams { m, n, k_sparse: k, ..d })
            }
            FamilyArg::Pde => {
                let d = PdeParams::default();
                ProblemSpec::Pde(PdeParams { nc: self.nc.unwrap_or(d.nc), beta: self.beta.unwrap_or(d.beta), ..d })
            }
            FamilyArg::Random => {
                let ProblemSpec::Random(d) = default_spec(Family::Random) else { unreachable!() };
                let (m, n) = (self.m.unwrap_or(d.m), self.n.unwrap_or(d.n));
                ProblemSpec::Random(if self.qp { RandomSpec::qp(m, n) } else { RandomSpec::lp(m, n) })
            }
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    /// ipstop ε.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    itstart: Option<usize>,
    /// fixtol tolerance, also the ipstop residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    tol0: Option<f64>,
    #[arg(long)]
    tolmax: Option<f64>,
    /// Centrality correctors per IPM iteration.
    #[arg(long)]
    correctors: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// IPM termination tolerance.
    #[arg(long)]
    ipm_tol: Option<f64>,
}

impl SolverArgs {
    fn overrides(&self) -> (PolicyOverrides, IpmOverrides) {
        (
            PolicyOverrides { tol: self.tol, tol0: self.tol0, tolmax: self.tolmax, eps: self.eps, itstart: self.itstart },
            IpmOverrides {
                correctors: self.correctors,
                mode: self.mode.map(|m| match m {
                    ModeArg::Normal => LinearMode::NormalEq,
                    ModeArg::Augmented => LinearMode::Augmented,
                }),
                ipm_tol: self.ipm_tol,
                max_iter: None,
            },
        )
    }

    fn config(&self, family: Family, policy: PolicyKind) -> IpmConfig {
        let (p, i) = self.overrides();
        resolve_ipm_config(family, policy, &p, &i)
    }
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_or_generate(problem: &ProblemArgs, dir: Option<&Path>) -> CliResult<GeneratedProblem> {
    Ok(match dir {
        Some(d) => load_problem_dir(d)?,
        None => generate(&problem.spec(), problem.seed)?,
    })
}

fn write_csv(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> ipstop::Result<()>) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Returns whether every requested run converged.
fn run(cli: Cli) -> CliResult<bool> {
    match cli.cmd {
        Cmd::Gen { problem, out } => {
            let g = generate(&problem.spec(), problem.seed)?;
            write_problem_dir(&out, &g)?;
            println!("wrote {} ({}, n = {}, m = {})", out.display(), g.spec.size_label(), g.problem.n(), g.problem.m());
            Ok(true)
        }
        Cmd::Solve { problem, dir, solver, policy, out } => {
            let g = load_or_generate(&problem, dir.as_deref())?;
            let cfg = solver.config(g.spec.family(), policy.into());
            cfg.validate()?;
            let (r, secs) = run_one(&g, &cfg);
            println!(
                "{} {} seed={} policy={}: {} after {} IPM iterations, {} inner iterations, {:.3}s, objective {:.10e}",
                g.spec.family().as_str(),
                g.spec.size_label(),
                g.seed,
                cfg.policy.name(),
                match &r.status {
                    Ok(()) => "converged".to_string(),
                    Err(e) => format!("failed ({e})"),
                },
                r.ipm_iterations(),
                r.total_inner_iterations(),
                secs,
                r.primal_objective
            );
            if let Some(out) = out {
                std::fs::create_dir_all(&out)?;
                write_csv(&out.join("stats.csv"), |w| write_stats_csv(w, &r.stats))?;
                write_csv(&out.join("solves.csv"), |w| write_solves_csv(w, &r.stats))?;
                write_f64_bin(&out.join("x.bin"), &r.iterate.x)?;
            }
            Ok(r.converged())
        }
        Cmd::Bench { config, problem, solver, seeds, policies, threads, out } => {
            let cfg = match config {
                Some(path) => {
                    let mut c = SuiteConfig::from_reader(BufReader::new(File::open(path)?))?;
                    if out.is_some() {
                        c.out_dir = out;
                    }
                    c
                }
                None => {
                    let (p, i) = solver.overrides();
                    SuiteConfig {
                        problems: vec![problem.spec()],
                        seeds: parse_seeds(&seeds)?,
                        policies: policies.split(',').map(|s| PolicyKind::parse(s.trim())).collect::<Result<_, _>>()?,
                        policy_overrides: p,
                        ipm_overrides: i,
                        out_dir: out,
                        threads,
                    }
                }
            };
            let outcome = run_suite(&cfg)?;
            println!(
                "{:<8} {:<22} {:<7} {:>5} {:>9} {:>10} {:>9} {:>10} {:>10}",
                "family", "size", "policy", "conv", "ipm", "inner", "time[s]", "red_fix%", "red_var%"
            );
            let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.1}"));
            for r in &outcome.summary {
                println!(
                    "{:<8} {:<22} {:<7} {:>2}/{:<2} {:>9.1} {:>10.1} {:>9.3} {:>10} {:>10}",
                    r.family.as_str(),
                    r.size,
                    r.policy.as_str(),
                    r.converged,
                    r.runs,
                    r.mean_ipm_iters,
                    r.mean_inner_iters,
                    r.mean_time_seconds,
                    opt(r.red_inner_fixtol),
                    opt(r.red_inner_vartol)
                );
            }
            if let Some(d) = &cfg.out_dir {
                println!("wrote {}/runs.csv and {}/summary.csv", d.display(), d.display());
            }
            Ok(outcome.all_converged())
        }
        Cmd::Trace { problem, solver, policy, ipm_iter, solve, out } => {
            let g = load_or_generate(&problem, None)?;
            let cfg = solver.config(g.spec.family(), policy.into());
            cfg.validate()?;
            let t = emit_trace(&g, &cfg, ipm_iter, solve, &out)?;
            let res = final_residuals(&t.report.stats);
            println!(
                "IPM iteration {ipm_iter}, solve {solve}: {} inner iterations, {} trace rows; final residuals span {:.1} orders over {} solves",
                t.iterations,
                t.trace.len(),
                orders_of_magnitude(&res),
                res.len()
            );
            println!("wrote trace.csv, solves.csv and stats.csv to {}", out.display());
            Ok(t.report.converged())
        }
    }
}
