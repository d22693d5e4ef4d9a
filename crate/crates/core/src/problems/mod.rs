//! Test problem generators and their preconditioners.

mod cs;
mod io;
mod pde;
mod precond;
mod random;
mod tomo;

use std::collections::BTreeMap;
use std::sync::Arc;

pub use cs::{CsInstance, CsParams};
pub use io::{load_problem_dir, read_f64_bin, read_meta, write_f64_bin, write_problem_dir};
pub use pde::{boundary_nodes, ipm_variable_mapping_pde, q1_matrices, PdeFactory, PdeInstance, PdeParams, PdeTarget};
pub use precond::{
    DenseExactFactory, JacobiFactory, Kron2DiagFactory, Kron2DiagPreconditioner, SchurPreconditioner,
};
pub use random::{gen_random, RandomInstance, RandomSpec};
pub use tomo::{phantom, projection_matrix, TomoInstance, TomoParams};

use crate::error::{Error, Result};
use crate::ipm::{BoundKind, PreconditionerFactory, ProblemInstance};
use crate::linop::mtx::Symmetry;
use crate::linop::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Tomo,
    Cs,
    Pde,
    Random,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Tomo => "tomo",
            Family::Cs => "cs",
            Family::Pde => "pde",
            Family::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tomo" => Ok(Family::Tomo),
            "cs" => Ok(Family::Cs),
            "pde" => Ok(Family::Pde),
            "random" => Ok(Family::Random),
            _ => Err(Error::Parse(format!("unknown problem family {s}"))),
        }
    }
}

/// A problem family with its size and model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemSpec {
    Tomo(TomoParams),
    Cs(CsParams),
    Pde(PdeParams),
    Random(RandomSpec),
}

impl ProblemSpec {
    pub fn family(&self) -> Family {
        match self {
            ProblemSpec::Tomo(_) => Family::Tomo,
            ProblemSpec::Cs(_) => Family::Cs,
            ProblemSpec::Pde(_) => Family::Pde,
            ProblemSpec::Random(_) => Family::Random,
        }
    }

    /// Short size label, e.g. `level=32`.
    pub fn size_label(&self) -> String {
        match self {
            ProblemSpec::Tomo(p) => format!("level={}", p.level),
            ProblemSpec::Cs(p) => format!("m={} n={}", p.m, p.n),
            ProblemSpec::Pde(p) => format!("nc={} beta={:e}", p.nc, p.beta),
            ProblemSpec::Random(p) => format!("m={} n={}{}", p.m, p.n, if p.qp { " qp" } else { "" }),
        }
    }

    pub fn to_meta(&self) -> Vec<(String, String)> {
        let kv = |k: &str, v: String| (k.to_string(), v);
        let mut out = vec![kv("family", self.family().as_str().into())];
        match self {
            ProblemSpec::Tomo(p) => {
                out.push(kv("level", p.level.to_string()));
                out.push(kv("n_angles", p.n_angles.to_string()));
                out.push(kv("rho", format!("{:e}", p.rho)));
                out.push(kv("eta", format!("{:e}", p.eta)));
                out.push(kv("noise_sigma", format!("{:e}", p.noise_sigma)));
                let a = p.atten;
                out.push(kv("atten", format!("{:e},{:e},{:e},{:e}", a[0][0], a[0][1], a[1][0], a[1][1])));
            }
            ProblemSpec::Cs(p) => {
                out.push(kv("m", p.m.to_string()));
                out.push(kv("n", p.n.to_string()));
                out.push(kv("k_sparse", p.k_sparse.to_string()));
                out.push(kv("tau_rel", format!("{:e}", p.tau_rel)));
                out.push(kv("noise_sigma", format!("{:e}", p.noise_sigma)));
                out.push(kv("row_decay", format!("{:e}", p.row_decay)));
            }
            ProblemSpec::Pde(p) => {
                out.push(kv("nc", p.nc.to_string()));
                out.push(kv("beta", format!("{:e}", p.beta)));
                out.push(kv("u_a", format!("{:e}", p.u_a)));
                out.push(kv("u_b", format!("{:e}", p.u_b)));
                out.push(kv("target", p.target.as_str().into()));
            }
            ProblemSpec::Random(p) => {
                out.push(kv("m", p.m.to_string()));
                out.push(kv("n", p.n.to_string()));
                out.push(kv("qp", p.qp.to_string()));
                out.push(kv("q_rank", p.q_rank.to_string()));
                out.push(kv("box_fraction", format!("{:e}", p.box_fraction)));
            }
        }
        out
    }

    /// Parses the keys written by [`to_meta`](Self::to_meta); missing model
    /// parameters take their defaults.
    pub fn from_meta(meta: &BTreeMap<String, String>) -> Result<Self> {
        fn get<T: std::str::FromStr>(meta: &BTreeMap<String, String>, key: &str, default: T) -> Result<T> {
            match meta.get(key) {
                None => Ok(default),
                Some(v) => v.parse().map_err(|_| Error::Parse(format!("bad value for {key}: {v}"))),
            }
        }
        let family = Family::parse(meta.get("family").ok_or_else(|| Error::Parse("meta has no family".into()))?)?;
        Ok(match family {
            Family::Tomo => {
                let d = TomoParams::default();
                let atten = match meta.get("atten") {
                    None => d.atten,
                    Some(v) => {
                        let c: Vec<f64> = v
                            .split(',')
                            .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad atten {v}"))))
                            .collect::<Result<_>>()?;
                        if c.len() != 4 {
                            return Err(Error::Parse(format!("atten needs four values: {v}")));
                        }
                        [[c[0], c[1]], [c[2], c[3]]]
                    }
                };
                ProblemSpec::Tomo(TomoParams {
                    level: get(meta, "level", d.level)?,
                    n_angles: get(meta, "n_angles", d.n_angles)?,
                    rho: get(meta, "rho", d.rho)?,
                    eta: get(meta, "eta", d.eta)?,
                    noise_sigma: get(meta, "noise_sigma", d.noise_sigma)?,
                    atten,
                })
            }
            Family::Cs => {
                let d = CsParams::default();
                ProblemSpec::Cs(CsParams {
                    m: get(meta, "m", d.m)?,
                    n: get(meta, "n", d.n)?,
                    k_sparse: get(meta, "k_sparse", d.k_sparse)?,
                    tau_rel: get(meta, "tau_rel", d.tau_rel)?,
                    noise_sigma: get(meta, "noise_sigma", d.noise_sigma)?,
                    row_decay: get(meta, "row_decay", d.row_decay)?,
                })
            }
            Family::Pde => {
                let d = PdeParams::default();
                let target = match meta.get("target") {
                    Some(t) => PdeTarget::parse(t)?,
                    None => d.target,
                };
                ProblemSpec::Pde(PdeParams {
                    nc: get(meta, "nc", d.nc)?,
                    beta: get(meta, "beta", d.beta)?,
                    u_a: get(meta, "u_a", d.u_a)?,
                    u_b: get(meta, "u_b", d.u_b)?,
                    target,
                })
            }
            Family::Random => {
                let m = get(meta, "m", 10)?;
                let n = get(meta, "n", 20)?;
                let qp = get(meta, "qp", false)?;
                let base = if qp { RandomSpec::qp(m, n) } else { RandomSpec::lp(m, n) };
                ProblemSpec::Random(RandomSpec {
                    q_rank: get(meta, "q_rank", base.q_rank)?,
                    box_fraction: get(meta, "box_fraction", base.box_fraction)?,
                    ..base
                })
            }
        })
    }
}

/// A generated instance in IPM form plus the data it was built from.
#[derive(Clone)]
pub struct GeneratedProblem {
    pub spec: ProblemSpec,
    pub seed: u64,
    pub problem: ProblemInstance,
    pub precond: Arc<dyn PreconditionerFactory>,
    /// Assembled matrices worth saving, by name.
    pub matrices: Vec<(String, Arc<CsrMatrix>, Symmetry)>,
    /// Named data vectors.
    pub vectors: Vec<(String, Vec<f64>)>,
}

fn bound_vectors(bounds: &[BoundKind]) -> (Vec<f64>, Vec<f64>) {
    bounds
        .iter()
        .map(|b| match *b {
            BoundKind::NonNeg => (0.0, f64::INFINITY),
            BoundKind::Box(l, u) => (l, u),
            BoundKind::Free => (f64::NEG_INFINITY, f64::INFINITY),
        })
        .unzip()
}

pub fn gen_tomo(params: TomoParams, seed: u64) -> Result<GeneratedProblem> {
    let inst = TomoInstance::generate(params, seed)?;
    let problem = inst.problem()?;
    Ok(GeneratedProblem {
        spec: ProblemSpec::Tomo(params),
        seed,
        vectors: vec![("w".into(), inst.w.clone()), ("x_true".into(), inst.x_true.clone()), ("c".into(), problem.c.clone())],
        matrices: vec![("R".into(), inst.r.clone(), Symmetry::General)],
        precond: Arc::new(inst.preconditioner()),
        problem,
    })
}

pub fn gen_cs(params: CsParams, seed: u64) -> Result<GeneratedProblem> {
    let inst = CsInstance::generate(params, seed)?;
    let problem = inst.problem()?;
    Ok(GeneratedProblem {
        spec: ProblemSpec::Cs(params),
        seed,
        vectors: vec![("b".into(), inst.b.clone()), ("x_true".into(), inst.x_true.clone()), ("c".into(), problem.c.clone())],
        matrices: vec![("A".into(), Arc::new(CsrMatrix::from_dense(&inst.a)), Symmetry::General)],
        precond: Arc::new(inst.preconditioner()),
        problem,
    })
}

/// The PDE data is deterministic; `seed` is recorded but unused.
pub fn gen_pde(params: PdeParams, seed: u64) -> Result<GeneratedProblem> {
    let inst = PdeInstance::assemble(params)?;
    let problem = ipm_variable_mapping_pde(&inst)?;
    Ok(GeneratedProblem {
        spec: ProblemSpec::Pde(params),
        seed,
        vectors: vec![("y0".into(), inst.y0.clone()), ("f".into(), inst.f.clone()), ("c".into(), problem.c.clone())],
        matrices: vec![
            ("M".into(), inst.mass.clone(), Symmetry::Symmetric),
            ("K".into(), inst.stiffness.clone(), Symmetry::Symmetric),
            ("J".into(), inst.j.clone(), Symmetry::Symmetric),
        ],
        precond: Arc::new(inst.preconditioner()?),
        problem,
    })
}

pub fn gen_random_problem(spec: RandomSpec, seed: u64) -> Result<GeneratedProblem> {
    let inst = gen_random(spec, seed)?;
    let (lower, upper) = bound_vectors(&inst.bounds);
    let mut matrices = vec![("A".into(), Arc::new(CsrMatrix::from_dense(&inst.a)), Symmetry::General)];
    if let Some(q) = &inst.q {
        matrices.push(("Q".into(), Arc::new(CsrMatrix::from_dense(q)), Symmetry::Symmetric));
    }
    Ok(GeneratedProblem {
        spec: ProblemSpec::Random(spec),
        seed,
        vectors: vec![
            ("b".into(), inst.problem.b.clone()),
            ("c".into(), inst.problem.c.clone()),
            ("lower".into(), lower),
            ("upper".into(), upper),
            ("x_true".into(), inst.solution.x.clone()),
        ],
        matrices,
        precond: Arc::new(inst.jacobi()),
        problem: inst.problem,
    })
}

pub fn generate(spec: &ProblemSpec, seed: u64) -> Result<GeneratedProblem> {
    match *spec {
        ProblemSpec::Tomo(p) => gen_tomo(p, seed),
        ProblemSpec::Cs(p) => gen_cs(p, seed),
        ProblemSpec::Pde(p) => gen_pde(p, seed),
        ProblemSpec::Random(p) => gen_random_problem(p, seed),
    }
}
