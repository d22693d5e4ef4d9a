//! Per-family problem sizes, IPM settings and stopping-policy parameters.

use crate::error::{Error, Result};
use crate::ipkrylov::EarlyStopConfig;
use crate::ipm::{IpmConfig, LinearMode, SigmaSchedule, StoppingPolicy};
use crate::problems::{CsParams, Family, PdeParams, ProblemSpec, RandomSpec, TomoParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    FixTol,
    VarTol,
    IpStop,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::FixTol, PolicyKind::VarTol, PolicyKind::IpStop];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::FixTol => "fixtol",
            PolicyKind::VarTol => "vartol",
            PolicyKind::IpStop => "ipstop",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fixtol" => Ok(PolicyKind::FixTol),
            "vartol" => Ok(PolicyKind::VarTol),
            "ipstop" => Ok(PolicyKind::IpStop),
            _ => Err(Error::Parse(format!("unknown policy {s} (expected fixtol, vartol or ipstop)"))),
        }
    }
}

/// Optional replacements for the family defaults of a stopping policy.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PolicyOverrides {
    /// fixtol tolerance; also `τ_inner` of ipstop.
    pub tol: Option<f64>,
    pub tol0: Option<f64>,
    pub tolmax: Option<f64>,
    pub eps: Option<f64>,
    pub itstart: Option<usize>,
}

/// Optional replacements for the family IPM settings.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IpmOverrides {
    pub correctors: Option<usize>,
    pub mode: Option<LinearMode>,
    pub ipm_tol: Option<f64>,
    pub max_iter: Option<usize>,
}

pub fn default_spec(family: Family) -> ProblemSpec {
    match family {
        Family::Tomo => ProblemSpec::Tomo(TomoParams::default()),
        Family::Cs => ProblemSpec::Cs(CsParams::default()),
        Family::Pde => ProblemSpec::Pde(PdeParams::default()),
        Family::Random => ProblemSpec::Random(RandomSpec::lp(20, 50)),
    }
}

/// Changes the main size parameter of a spec: tomography level, CS rows
/// (with `n = 4m` and `k = m/8`), PDE `nc` or random-problem rows (`n = 2.5m`).
pub fn with_size(spec: ProblemSpec, size: usize) -> Result<ProblemSpec> {
    Ok(match spec {
        ProblemSpec::Tomo(p) => ProblemSpec::Tomo(TomoParams { level: size, ..p }),
        ProblemSpec::Cs(p) => ProblemSpec::Cs(CsParams { m: size, n: 4 * size, k_sparse: (size / 8).max(1), ..p }),
        ProblemSpec::Pde(p) => {
            let nc = u32::try_from(size).map_err(|_| Error::Config(format!("nc = {size} too large")))?;
            ProblemSpec::Pde(PdeParams { nc, ..p })
        }
        ProblemSpec::Random(p) => ProblemSpec::Random(RandomSpec { m: size, n: size * 5 / 2, q_rank: size * 5 / 4 + 1, ..p }),
    })
}

pub fn default_ipm_config(family: Family) -> IpmConfig {
    let base = IpmConfig { inner_itmax: 5000, ..IpmConfig::default() }.with_tolerance(1e-8);
    match family {
        Family::Tomo => IpmConfig { start: Some((1.0, 1.0)), ..base },
        Family::Cs => IpmConfig { sigma: SigmaSchedule::Fixed(0.1), max_correctors: 0, ..base },
        Family::Pde => base,
        Family::Random => IpmConfig { inner_itmax: 1000, ..base },
    }
}

/// `(fixtol, tol0, tolmax, ε, itstart)`
fn family_policy_params(family: Family) -> (f64, f64, f64, f64, usize) {
    match family {
        Family::Tomo => (1e-6, 1e-3, 1e-6, 0.01, 5),
        Family::Cs => (1e-1, 1e-1, 1e-2, 0.01, 5),
        Family::Pde => (1e-8, 1e-2, 1e-8, 1e-3, 15),
        Family::Random => (1e-10, 1e-4, 1e-10, 0.01, 5),
    }
}

pub fn default_policy(family: Family, kind: PolicyKind) -> StoppingPolicy {
    resolve_policy(family, kind, &PolicyOverrides::default())
}

pub fn resolve_policy(family: Family, kind: PolicyKind, o: &PolicyOverrides) -> StoppingPolicy {
    let (tol, tol0, tolmax, eps, itstart) = family_policy_params(family);
    let tol = o.tol.unwrap_or(tol);
    match kind {
        PolicyKind::FixTol => StoppingPolicy::FixTol { tol },
        PolicyKind::VarTol => StoppingPolicy::VarTol { tol0: o.tol0.unwrap_or(tol0), tolmax: o.tolmax.unwrap_or(tolmax) },
        PolicyKind::IpStop => {
            StoppingPolicy::IpStop(EarlyStopConfig::new(o.eps.unwrap_or(eps), o.itstart.unwrap_or(itstart), tol))
        }
    }
}

pub fn resolve_ipm_config(family: Family, kind: PolicyKind, p: &PolicyOverrides, o: &IpmOverrides) -> IpmConfig {
    let mut cfg = default_ipm_config(family);
    if let Some(c) = o.correctors {
        cfg.max_correctors = c;
    }
    if let Some(m) = o.mode {
        cfg.linear_mode = m;
    }
    if let Some(t) = o.ipm_tol {
        cfg = cfg.with_tolerance(t);
    }
    if let Some(k) = o.max_iter {
        cfg.max_iter = k;
    }
    cfg.policy = resolve_policy(family, kind, p);
    cfg
}

pub fn parse_mode(s: &str) -> Result<LinearMode> {
    match s {
        "auto" => Ok(LinearMode::Auto),
        "normal" => Ok(LinearMode::NormalEq),
        "augmented" => Ok(LinearMode::Augmented),
        _ => Err(Error::Parse(format!("unknown mode {s} (expected normal, augmented or auto)"))),
    }
}
