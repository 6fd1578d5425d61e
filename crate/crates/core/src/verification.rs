//! Numerical experiments around the a-priori estimates of the Galerkin
//! scheme: uniform energy bounds, pathwise uniqueness and the Itô/Stratonovich
//! correction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{ControlOperator, ControlPath, RelaxedControlSchedule};
use crate::dynamics::{sample_wiener, simulate, SimConfig, Trajectory, WienerPath};
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::spectral::{inner, l4_4, norm, norm_sq, to_physical, weighted_sq, NormKind, SpectralField};
use crate::stats::MeanStderr;

/// The five functionals bounded uniformly in `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyFunctionals {
    /// `sup_t |m(t)|²_{L²}`
    #[serde(rename = "sup_L2_sq")]
    pub sup_l2_sq: f64,
    /// `∫ |m|²_{H¹} dt`
    #[serde(rename = "int_H1_sq")]
    pub int_h1_sq: f64,
    /// `∫ |m|⁴_{L⁴} dt`
    #[serde(rename = "int_L4_4")]
    pub int_l4_4: f64,
    /// `sup_t |m(t)|²_{H¹}`
    #[serde(rename = "sup_H1_sq")]
    pub sup_h1_sq: f64,
    /// `∫ |m|²_{H²} dt`
    #[serde(rename = "int_H2_sq")]
    pub int_h2_sq: f64,
}

impl EnergyFunctionals {
    pub const COLUMNS: [&'static str; 5] = ["sup_L2_sq", "int_H1_sq", "int_L4_4", "sup_H1_sq", "int_H2_sq"];

    pub fn of(traj: &Trajectory) -> Self {
        Self {
            sup_l2_sq: traj.sup(|m| norm_sq(m, NormKind::L2)),
            int_h1_sq: traj.integrate(|_, m| norm_sq(m, NormKind::H1)),
            int_l4_4: traj.integrate(|_, m| l4_4(&to_physical(m))),
            sup_h1_sq: traj.sup(|m| norm_sq(m, NormKind::H1)),
            int_h2_sq: traj.integrate(|_, m| norm_sq(m, NormKind::H2)),
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.sup_l2_sq, self.int_h1_sq, self.int_l4_4, self.sup_h1_sq, self.int_h2_sq]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            sup_l2_sq: a[0],
            int_h1_sq: a[1],
            int_l4_4: a[2],
            sup_h1_sq: a[3],
            int_h2_sq: a[4],
        }
    }

    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite() && *v >= 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub paths: usize,
    pub base_seed: u64,
    pub mean: EnergyFunctionals,
    pub std_error: EnergyFunctionals,
    pub per_path: Vec<EnergyFunctionals>,
}

fn run_paths<T: Send>(
    cfg: &SimConfig,
    paths: usize,
    base_seed: u64,
    f: impl Fn(&WienerPath) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let out: Vec<Result<T>> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let w = sample_wiener(cfg.horizon, cfg.steps, derive_seed(base_seed, i as u64))?;
            f(&w).map_err(|e| e.with_path(i))
        })
        .collect();
    out.into_iter().collect()
}

pub fn energy_report(
    cfg: &SimConfig,
    q: &dyn ControlPath,
    op: &dyn ControlOperator,
    paths: usize,
    base_seed: u64,
) -> Result<EnergyReport> {
    if paths == 0 {
        return Err(Error::range("N", 0, "N ≥ 1"));
    }
    let per_path = run_paths(cfg, paths, base_seed, |w| {
        Ok(EnergyFunctionals::of(&simulate(cfg, w, q, op)?))
    })?;
    let mut mean = [0.0; 5];
    let mut se = [0.0; 5];
    for c in 0..5 {
        let col: Vec<f64> = per_path.iter().map(|e| e.to_array()[c]).collect();
        let s = MeanStderr::of(&col);
        mean[c] = s.mean;
        se[c] = s.std_error;
    }
    Ok(EnergyReport {
        paths,
        base_seed,
        mean: EnergyFunctionals::from_array(mean),
        std_error: EnergyFunctionals::from_array(se),
        per_path,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityTable {
    pub rows: Vec<(usize, EnergyReport)>,
    pub max_over_n: EnergyFunctionals,
    pub min_over_n: EnergyFunctionals,
}

impl StabilityTable {
    /// Column-wise `max / min` across Galerkin levels.
    pub fn ratios(&self) -> [f64; 5] {
        let mx = self.max_over_n.to_array();
        let mn = self.min_over_n.to_array();
        std::array::from_fn(|i| if mx[i] == 0.0 { 1.0 } else { mx[i] / mn[i] })
    }
}

/// Energy reports for each Galerkin level, all driven by the same Wiener
/// paths.
pub fn galerkin_stability_study(
    cfg: &SimConfig,
    n_list: &[usize],
    q: &RelaxedControlSchedule,
    op: &dyn ControlOperator,
    paths: usize,
    base_seed: u64,
) -> Result<StabilityTable> {
    if n_list.is_empty() {
        return Err(Error::Invalid("n_list is empty".into()));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("n_list must be strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let cfg_n = cfg.with_modes(n)?;
        let q_n = q.rebase(cfg.embedding, &cfg_n.basis)?;
        rows.push((n, energy_report(&cfg_n, &q_n, op, paths, base_seed)?));
    }
    let fold = |pick: fn(f64, f64) -> f64| {
        let mut acc = rows[0].1.mean.to_array();
        for (_, r) in &rows[1..] {
            let a = r.mean.to_array();
            for i in 0..5 {
                acc[i] = pick(acc[i], a[i]);
            }
        }
        EnergyFunctionals::from_array(acc)
    };
    let max_over_n = fold(f64::max);
    let min_over_n = fold(f64::min);
    Ok(StabilityTable {
        rows,
        max_over_n,
        min_over_n,
    })
}

/// `|½|m(T)|² + Σ_j Δt (|m|²_{H¹} + |m|⁴_{L⁴})(t_j) − ½|m₀|²|`, the defect of
/// the deterministic energy identity along a discrete trajectory.
pub fn energy_identity_residual(traj: &Trajectory) -> f64 {
    let half = |m: &SpectralField| 0.5 * norm_sq(m, NormKind::L2);
    let dissipation = traj.integrate(|_, m| norm_sq(m, NormKind::H1) + l4_4(&to_physical(m)));
    (half(traj.final_state()) + dissipation - half(&traj.states[0])).abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub delta: f64,
    pub times: Vec<f64>,
    /// `r(t_j) = |m₁(t_j) − m₂(t_j)|²_{L²}`
    pub r: Vec<f64>,
    #[serde(rename = "r_T")]
    pub r_t: f64,
    pub phi_integral: f64,
    /// `ln(r(T)/r(0)) / ∫Φ`, absent when `r(0) = 0` or the ratio is not finite.
    pub gronwall_ratio: Option<f64>,
    pub degenerate: bool,
}

/// The Gronwall weight `Φ₁(t)` (constant normalized to one) at one step.
fn gronwall_weight(m1: &SpectralField, m2: &SpectralField, kappa_mean: f64, d: usize) -> f64 {
    let inf1 = norm(m1, NormKind::Linf);
    let inf2 = norm(m2, NormKind::Linf);
    let grad2 = weighted_sq(m2, 1);
    let gradient_term = if d == 1 {
        grad2 * grad2
    } else {
        grad2 * norm_sq(&m1.sub(m2), NormKind::H2)
    };
    1.0 + inf2 * (inf1 + inf2) + gradient_term + kappa_mean
}

/// Runs two solutions from `m₀` and `m₀ + δ·direction` on the same Wiener
/// path and schedule and measures their L² separation against `∫Φ`.
pub fn pathwise_uniqueness_experiment(
    cfg: &SimConfig,
    q: &dyn ControlPath,
    op: &dyn ControlOperator,
    delta: f64,
    direction: &SpectralField,
    seed: u64,
) -> Result<UniquenessReport> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::range("delta", delta, "delta ≥ 0"));
    }
    cfg.m0.check_same_basis(direction)?;
    let w = sample_wiener(cfg.horizon, cfg.steps, derive_seed(seed, 0))?;
    let mut perturbed = cfg.clone();
    perturbed.m0.axpy(delta, direction);
    let t1 = simulate(cfg, &w, q, op)?;
    let t2 = simulate(&perturbed, &w, q, op)?;

    let r: Vec<f64> = t1
        .states
        .iter()
        .zip(&t2.states)
        .map(|(a, b)| {
            let d = a.sub(b);
            inner(&d, &d)
        })
        .collect();
    let d = cfg.basis.spec().d;
    let phi_integral: f64 = t1
        .times
        .windows(2)
        .zip(t1.states.iter().zip(&t2.states))
        .map(|(t, (m1, m2))| (t[1] - t[0]) * gronwall_weight(m1, m2, q.kappa_mean_at(t[0]), d))
        .sum();
    let r0 = r[0];
    let r_t = *r.last().unwrap();
    let degenerate = r0 == 0.0;
    let gronwall_ratio = if degenerate {
        None
    } else {
        Some((r_t / r0).ln() / phi_integral).filter(|v| v.is_finite())
    };
    Ok(UniquenessReport {
        delta,
        times: t1.times,
        r,
        r_t,
        phi_integral,
        gronwall_ratio,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub dt: f64,
    pub steps: usize,
    pub em_mean: f64,
    pub heun_mean: f64,
    /// `|E|m_EM(T)|² − E|m_Heun(T)|²|`
    pub diff: f64,
    /// Standard error of the per-path difference.
    pub diff_std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyTable {
    pub rows: Vec<ConsistencyRow>,
    /// Least-squares slope of `ln diff` against `ln dt`.
    pub slope: f64,
}

fn step_counts(horizon: f64, dt_list: &[f64]) -> Result<Vec<usize>> {
    if dt_list.is_empty() {
        return Err(Error::Invalid("dt_list is empty".into()));
    }
    if dt_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid("dt_list must be strictly descending".into()));
    }
    let counts = dt_list
        .iter()
        .map(|&dt| {
            let steps = (horizon / dt).round();
            if !(dt > 0.0) || steps < 1.0 || (steps * dt - horizon).abs() > 1e-9 * horizon {
                return Err(Error::Invalid(format!("dt = {dt} does not divide T = {horizon}")));
            }
            Ok(steps as usize)
        })
        .collect::<Result<Vec<_>>>()?;
    let finest = *counts.last().unwrap();
    if let Some(c) = counts.iter().find(|&&c| finest % c != 0) {
        return Err(Error::Invalid(format!("{c} steps do not divide the finest grid of {finest}")));
    }
    Ok(counts)
}

/// Slope of the least-squares line through `(ln x, ln y)`, skipping
/// non-positive `y`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Compares Euler–Maruyama (Itô drift) against Heun (Stratonovich drift) on
/// common Wiener paths refined to the finest step.
pub fn ito_stratonovich_consistency(
    cfg: &SimConfig,
    q: &dyn ControlPath,
    op: &dyn ControlOperator,
    dt_list: &[f64],
    paths: usize,
    base_seed: u64,
) -> Result<ConsistencyTable> {
    if paths < 2 {
        return Err(Error::range("N", paths, "N ≥ 2"));
    }
    let counts = step_counts(cfg.horizon, dt_list)?;
    let finest = *counts.last().unwrap();
    let configs: Vec<(SimConfig, SimConfig)> = counts
        .iter()
        .map(|&s| {
            let mut em = cfg.with_steps(s);
            em.integrator = "euler_maruyama_ito".into();
            let mut heun = em.clone();
            heun.integrator = "heun_stratonovich".into();
            (em, heun)
        })
        .collect();

    // per path: (|m_EM(T)|², |m_Heun(T)|²) for every dt
    let per_path: Vec<Result<Vec<(f64, f64)>>> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let fine = sample_wiener(cfg.horizon, finest, derive_seed(base_seed, i as u64))?;
            counts
                .iter()
                .zip(&configs)
                .map(|(&s, (em, heun))| {
                    let w = fine.coarsen(finest / s)?;
                    let a = simulate(em, &w, q, op).map_err(|e| e.with_path(i))?;
                    let b = simulate(heun, &w, q, op).map_err(|e| e.with_path(i))?;
                    Ok((
                        norm_sq(a.final_state(), NormKind::L2),
                        norm_sq(b.final_state(), NormKind::L2),
                    ))
                })
                .collect()
        })
        .collect();
    let per_path: Vec<Vec<(f64, f64)>> = per_path.into_iter().collect::<Result<_>>()?;

    let rows: Vec<ConsistencyRow> = counts
        .iter()
        .enumerate()
        .map(|(k, &steps)| {
            let em: Vec<f64> = per_path.iter().map(|p| p[k].0).collect();
            let heun: Vec<f64> = per_path.iter().map(|p| p[k].1).collect();
            let diffs: Vec<f64> = per_path.iter().map(|p| p[k].0 - p[k].1).collect();
            let em_mean = MeanStderr::of(&em).mean;
            let heun_mean = MeanStderr::of(&heun).mean;
            ConsistencyRow {
                dt: dt_list[k],
                steps,
                em_mean,
                heun_mean,
                diff: (em_mean - heun_mean).abs(),
                diff_std_error: MeanStderr::of(&diffs).std_error,
            }
        })
        .collect();
    let slope = log_log_slope(
        &rows.iter().map(|r| r.dt).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.diff).collect::<Vec<_>>(),
    );
    Ok(ConsistencyTable { rows, slope })
}
