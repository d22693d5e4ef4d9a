//! Browser bindings: policy comparison, inner-iteration traces and a
//! tomography reconstruction. Every export returns a JSON string.

use ipstop::harness::{default_ipm_config, resolve_ipm_config, with_size, IpmOverrides, PolicyKind, PolicyOverrides};
use ipstop::ipm::{ipm_solve_report, IpmReport};
use ipstop::problems::{generate, Family, ProblemSpec, TomoParams};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct PolicyRun {
    pub policy: &'static str,
    pub converged: bool,
    pub status: String,
    pub ipm_iters: usize,
    pub total_inner: usize,
    pub inner_per_iter: Vec<usize>,
    /// Final relative residual of every inner solve, in order.
    pub final_relres: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub family: &'static str,
    pub size: String,
    pub runs: Vec<PolicyRun>,
}

#[derive(Debug, Serialize)]
pub struct Trace {
    pub policy: &'static str,
    pub iters: Vec<usize>,
    pub relres: Vec<f64>,
    pub p_inf: Vec<f64>,
    pub d_inf: Vec<f64>,
    pub var_p: Vec<Option<f64>>,
    pub var_d: Vec<Option<f64>>,
    pub var_mx: Vec<Option<f64>>,
    pub var_ms: Vec<Option<f64>>,
}

#[derive(Debug, Serialize)]
pub struct Reconstruction {
    pub level: usize,
    /// Row-major `level × level` images.
    pub soft_true: Vec<f64>,
    pub bone_true: Vec<f64>,
    pub soft: Vec<f64>,
    pub bone: Vec<f64>,
    pub ipm_iters: usize,
    pub total_inner: usize,
}

const MAX_SIZE: [(Family, usize); 4] = [(Family::Tomo, 64), (Family::Cs, 512), (Family::Pde, 6), (Family::Random, 200)];

fn spec_for(family: &str, size: usize) -> Result<ProblemSpec, String> {
    let family = Family::parse(family).map_err(|e| e.to_string())?;
    let cap = MAX_SIZE.iter().find(|(f, _)| *f == family).map(|p| p.1).unwrap_or(0);
    if size == 0 || size > cap {
        return Err(format!("size must be in 1..={cap} for {}", family.as_str()));
    }
    with_size(ipstop::harness::default_spec(family), size).map_err(|e| e.to_string())
}

fn policy_overrides(eps: f64) -> PolicyOverrides {
    PolicyOverrides { eps: (eps > 0.0).then_some(eps), ..Default::default() }
}

fn summarize(kind: PolicyKind, r: &IpmReport) -> PolicyRun {
    PolicyRun {
        policy: kind.as_str(),
        converged: r.converged(),
        status: match &r.status {
            Ok(()) => "converged".into(),
            Err(e) => e.to_string(),
        },
        ipm_iters: r.ipm_iterations(),
        total_inner: r.total_inner_iterations(),
        inner_per_iter: r.stats.iter().map(|s| s.inner_its).collect(),
        final_relres: r.stats.iter().flat_map(|s| s.solves.iter().map(|x| x.relres)).collect(),
    }
}

/// Solves one instance under fixtol, vartol and ipstop (`eps ≤ 0` keeps the family default).
pub fn compare(family: &str, size: usize, seed: u64, eps: f64) -> Result<Comparison, String> {
    let spec = spec_for(family, size)?;
    let g = generate(&spec, seed).map_err(|e| e.to_string())?;
    let po = policy_overrides(eps);
    let runs = PolicyKind::ALL
        .iter()
        .map(|&k| {
            let cfg = resolve_ipm_config(spec.family(), k, &po, &IpmOverrides::default());
            summarize(k, &ipm_solve_report(&g.problem, &*g.precond, &cfg))
        })
        .collect();
    Ok(Comparison { family: spec.family().as_str(), size: spec.size_label(), runs })
}

/// Indicator traces of the predictor solve at `ipm_iter` under fixtol and ipstop.
pub fn trace(family: &str, size: usize, seed: u64, ipm_iter: usize, eps: f64) -> Result<Vec<Trace>, String> {
    let spec = spec_for(family, size)?;
    let g = generate(&spec, seed).map_err(|e| e.to_string())?;
    let po = policy_overrides(eps);
    [PolicyKind::FixTol, PolicyKind::IpStop]
        .iter()
        .map(|&k| {
            let mut cfg = resolve_ipm_config(spec.family(), k, &po, &IpmOverrides::default());
            cfg.keep_traces = true;
            let r = ipm_solve_report(&g.problem, &*g.precond, &cfg);
            let s = r
                .stats
                .get(ipm_iter)
                .and_then(|s| s.solves.first())
                .ok_or_else(|| format!("{} ran only {} IPM iterations", k.as_str(), r.stats.len()))?;
            let t = &s.trace;
            Ok(Trace {
                policy: k.as_str(),
                iters: t.iter().map(|x| x.iter).collect(),
                relres: t.iter().map(|x| x.relres).collect(),
                p_inf: t.iter().map(|x| x.p_inf).collect(),
                d_inf: t.iter().map(|x| x.d_inf).collect(),
                var_p: t.iter().map(|x| x.var_p).collect(),
                var_d: t.iter().map(|x| x.var_d).collect(),
                var_mx: t.iter().map(|x| x.var_mx).collect(),
                var_ms: t.iter().map(|x| x.var_ms).collect(),
            })
        })
        .collect()
}

/// Two-material tomography reconstruction under one policy.
pub fn reconstruct(level: usize, seed: u64, policy: &str, eps: f64) -> Result<Reconstruction, String> {
    let kind = PolicyKind::parse(policy).map_err(|e| e.to_string())?;
    let spec = spec_for("tomo", level)?;
    let ProblemSpec::Tomo(TomoParams { level, .. }) = spec else { unreachable!() };
    let g = generate(&spec, seed).map_err(|e| e.to_string())?;
    let mut cfg = default_ipm_config(Family::Tomo);
    cfg.policy = ipstop::harness::resolve_policy(Family::Tomo, kind, &policy_overrides(eps));
    let r = ipm_solve_report(&g.problem, &*g.precond, &cfg);
    let truth = ipstop::problems::phantom(level);
    let p = level * level;
    let x = &r.iterate.x;
    Ok(Reconstruction {
        level,
        soft_true: truth[..p].to_vec(),
        bone_true: truth[p..].to_vec(),
        soft: x[..p].to_vec(),
        bone: x[p..].to_vec(),
        ipm_iters: r.ipm_iterations(),
        total_inner: r.total_inner_iterations(),
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string())).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = compare)]
pub fn compare_js(family: &str, size: usize, seed: u32, eps: f64) -> Result<String, JsValue> {
    to_js(compare(family, size, seed as u64, eps))
}

#[wasm_bindgen(js_name = trace)]
pub fn trace_js(family: &str, size: usize, seed: u32, ipm_iter: usize, eps: f64) -> Result<String, JsValue> {
    to_js(trace(family, size, seed as u64, ipm_iter, eps))
}

#[wasm_bindgen(js_name = reconstruct)]
pub fn reconstruct_js(level: usize, seed: u32, policy: &str, eps: f64) -> Result<String, JsValue> {
    to_js(reconstruct(level, seed as u64, policy, eps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_small_tomography() {
        let c = compare("tomo", 8, 0, 0.0).unwrap();
        assert_eq!(c.runs.len(), 3);
        assert!(c.runs.iter().all(|r| r.converged));
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"policy\":\"ipstop\""));
    }

    #[test]
    fn sizes_are_capped() {
        assert!(compare("tomo", 1000, 0, 0.0).is_err());
        assert!(compare("pde", 0, 0, 0.0).is_err());
    }

    #[test]
    fn trace_and_reconstruction_shapes() {
        let t = trace("tomo", 8, 1, 1, 0.0).unwrap();
        assert_eq!(t[0].policy, "fixtol");
        assert_eq!(t[0].iters.len(), t[0].relres.len());
        let r = reconstruct(8, 1, "ipstop", 0.0).unwrap();
        assert_eq!(r.soft.len(), 64);
        assert_eq!(r.bone_true.len(), 64);
    }
}
