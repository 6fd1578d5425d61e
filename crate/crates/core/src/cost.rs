//! Running and terminal costs, the relaxed cost functional and its
//! Monte-Carlo estimator.
//!
//! The running cost is the quartic family `F(t, m, u) = a|m|²_{H¹} + b κ(u)⁴`,
//! which dominates `b κ⁴` by construction. The terminal cost tracks a target
//! state, `Ψ(m) = c |m − m_target|²_{L²}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{ControlAtom, ControlOperator, ControlPath, ControlSource};
use crate::dynamics::{check_horizon, sample_wiener, simulate, SimConfig, Trajectory};
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::spectral::{norm_sq, NormKind, SpectralField};
use crate::stats::MeanStderr;

#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    /// Weight of `|m|²_{H¹}` in the running cost.
    pub a: f64,
    /// Weight of `κ(u)⁴`; also the coercivity constant.
    pub b: f64,
    /// Terminal weight.
    pub c: f64,
    pub target: SpectralField,
}

impl CostSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0) || !self.a.is_finite() {
            return Err(Error::range("a", self.a, "a ≥ 0"));
        }
        if !(self.b > 0.0) || !self.b.is_finite() {
            return Err(Error::range("b", self.b, "b > 0"));
        }
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return Err(Error::range("c", self.c, "c ≥ 0"));
        }
        Ok(())
    }

    pub fn coercivity_constant(&self) -> f64 {
        self.b
    }

    #[inline]
    fn integrand(&self, h1_sq: f64, u: &ControlAtom) -> f64 {
        self.a * h1_sq + self.b * u.kappa().powi(4)
    }
}

/// `F(t, m, u) = a|m|²_{H¹} + b κ(u)⁴`.
pub fn running_cost(spec: &CostSpec, _t: f64, m: &SpectralField, u: &ControlAtom) -> f64 {
    spec.integrand(norm_sq(m, NormKind::H1), u)
}

/// `∫ F(t, m, u) q_t(du)`.
pub fn relaxed_running_cost(spec: &CostSpec, _t: f64, m: &SpectralField, q: &dyn ControlSource) -> f64 {
    let h1 = norm_sq(m, NormKind::H1);
    q.average(&|u| spec.integrand(h1, u))
}

/// `Ψ(m) = c |m − m_target|²_{L²}`.
pub fn terminal_cost(spec: &CostSpec, m: &SpectralField) -> f64 {
    spec.c * norm_sq(&m.sub(&spec.target), NormKind::L2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub running: f64,
    pub terminal: f64,
    pub total: f64,
}

/// Left-endpoint quadrature of the running cost plus the terminal cost.
pub fn trajectory_cost(spec: &CostSpec, traj: &Trajectory, q: &dyn ControlPath) -> Result<CostBreakdown> {
    check_horizon("control", q.horizon(), traj.horizon())?;
    let running = traj.integrate(|t, m| relaxed_running_cost(spec, t, m, q.source_at(t)));
    let terminal = terminal_cost(spec, traj.final_state());
    Ok(CostBreakdown {
        running,
        terminal,
        total: running + terminal,
    })
}

/// Monte-Carlo estimate of the relaxed cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub mean: f64,
    pub std_error: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub base_seed: u64,
    /// Mean of the running-cost part alone.
    pub running_mean: f64,
    pub terminal_mean: f64,
}

/// Per-path costs in path order; path `i` uses `derive_seed(base_seed, i)`.
pub fn mc_path_costs(
    cfg: &SimConfig,
    q: &dyn ControlPath,
    op: &dyn ControlOperator,
    spec: &CostSpec,
    paths: usize,
    base_seed: u64,
) -> Result<Vec<CostBreakdown>> {
    let results: Vec<Result<CostBreakdown>> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let w = sample_wiener(cfg.horizon, cfg.steps, derive_seed(base_seed, i as u64))?;
            let traj = simulate(cfg, &w, q, op).map_err(|e| e.with_path(i))?;
            trajectory_cost(spec, &traj, q)
        })
        .collect();
    results.into_iter().collect()
}

#[allow(non_snake_case)]
pub fn mc_estimate_J(
    cfg: &SimConfig,
    q: &dyn ControlPath,
    op: &dyn ControlOperator,
    spec: &CostSpec,
    paths: usize,
    base_seed: u64,
) -> Result<CostEstimate> {
    if paths < 2 {
        return Err(Error::range("N", paths, "N ≥ 2"));
    }
    spec.validate()?;
    let costs = mc_path_costs(cfg, q, op, spec, paths, base_seed)?;
    let total: Vec<f64> = costs.iter().map(|c| c.total).collect();
    let running: Vec<f64> = costs.iter().map(|c| c.running).collect();
    let terminal: Vec<f64> = costs.iter().map(|c| c.terminal).collect();
    let s = MeanStderr::of(&total);
    Ok(CostEstimate {
        mean: s.mean,
        std_error: s.std_error,
        n: paths,
        base_seed,
        running_mean: MeanStderr::of(&running).mean,
        terminal_mean: MeanStderr::of(&terminal).mean,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub constant: f64,
    pub passed: bool,
    /// `min_i F(t_i, m_i, u_i) − C κ(u_i)⁴`.
    pub worst_margin: f64,
    pub violations: Vec<usize>,
}

/// Checks `F(t, m, u) ≥ C κ(u)⁴` on every sample.
pub fn check_coercivity(spec: &CostSpec, samples: &[(f64, SpectralField, ControlAtom)], constant: f64) -> CoercivityReport {
    let mut worst = f64::INFINITY;
    let mut violations = Vec::new();
    for (i, (t, m, u)) in samples.iter().enumerate() {
        let margin = running_cost(spec, *t, m, u) - constant * u.kappa().powi(4);
        worst = worst.min(margin);
        if margin < 0.0 {
            violations.push(i);
        }
    }
    CoercivityReport {
        constant,
        passed: violations.is_empty(),
        worst_margin: worst,
        violations,
    }
}
