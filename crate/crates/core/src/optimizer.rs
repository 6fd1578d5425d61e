//! Cross-entropy search over relaxed-control schedules.
//!
//! A candidate is a flat vector holding, for each of the `K` time intervals
//! and each of the `atom_count` atoms, the atom parameters `θ ∈ ℝᵖ` followed
//! by an unnormalized weight. Weights are clamped to be nonnegative and
//! renormalized; an all-zero block falls back to uniform weights.
//!
//! The search coordinates for `θ` are scaled by the H² weight of the mode
//! they embed into, so `κ(u)` is the Euclidean length of an atom's block and
//! every coordinate moves κ on the same scale.
//!
//! Every candidate is scored with the same Monte-Carlo seed, so comparisons
//! use common random numbers and the best-so-far value never increases.
//! Candidate 0 of each generation is the current sampling mean.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{kappa_moment, ControlAtom, ControlOperator, Mixture, RelaxedControlSchedule};
use crate::cost::{mc_estimate_J, CostEstimate, CostSpec};
use crate::dynamics::SimConfig;
use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// Relative slack allowed in the in-loop coercivity check, for quadrature
/// round-off between the cost and the κ-moment.
pub const COERCIVITY_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub population: usize,
    pub elite_fraction: f64,
    pub iterations: usize,
    #[serde(rename = "N")]
    pub mc_paths: usize,
    pub base_seed: u64,
    pub atom_count: usize,
    #[serde(rename = "K")]
    pub knot_count: usize,
    pub init_spread: f64,
    /// Initial value of every scaled θ coordinate in the sampling mean.
    pub init_center: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            population: 16,
            elite_fraction: 0.25,
            iterations: 30,
            mc_paths: 100,
            base_seed: 0,
            atom_count: 2,
            knot_count: 4,
            init_spread: 0.5,
            init_center: 0.0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 {
            return Err(Error::range("population", 0, "population ≥ 1"));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction < 1.0) {
            return Err(Error::range("elite_fraction", self.elite_fraction, "0 < elite_fraction < 1"));
        }
        if self.iterations == 0 {
            return Err(Error::range("iterations", 0, "iterations ≥ 1"));
        }
        if self.mc_paths < 2 {
            return Err(Error::range("N", self.mc_paths, "N ≥ 2"));
        }
        if self.atom_count == 0 {
            return Err(Error::range("atom_count", 0, "atom_count ≥ 1"));
        }
        if self.knot_count == 0 {
            return Err(Error::range("K", 0, "K ≥ 1"));
        }
        if !(self.init_spread > 0.0) || !self.init_spread.is_finite() {
            return Err(Error::range("init_spread", self.init_spread, "init_spread > 0"));
        }
        if !self.init_center.is_finite() {
            return Err(Error::range("init_center", self.init_center, "finite"));
        }
        Ok(())
    }

    pub fn elite_count(&self) -> usize {
        ((self.population as f64 * self.elite_fraction).ceil() as usize).clamp(1, self.population)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Best estimate seen so far.
    #[serde(rename = "best_J")]
    pub best_j: f64,
    pub std_error: f64,
    /// `kappa_moment(q, 4)` of the best-so-far schedule.
    pub kappa4_moment: f64,
    /// Best estimate within this generation alone.
    #[serde(rename = "generation_best_J")]
    pub generation_best_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub iteration: usize,
    pub candidate: usize,
    /// `+∞` when the candidate blew up.
    #[serde(rename = "J")]
    pub j: f64,
    pub running_mean: f64,
    pub kappa4_moment: f64,
    pub coercive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    pub iterations: Vec<IterationRecord>,
    pub candidates: Vec<CandidateRecord>,
    pub best_schedule: RelaxedControlSchedule,
    pub best_estimate: CostEstimate,
    /// Final best value, an upper estimate of the infimum of the cost.
    pub lambda_hat: f64,
    pub coercivity_violations: usize,
}

/// `(J_n, κ⁴-moment)` per iteration for the best-so-far schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizingRow {
    pub iteration: usize,
    #[serde(rename = "J")]
    pub j: f64,
    pub kappa4_moment: f64,
}

pub fn minimizing_sequence_report(trace: &OptimizationTrace) -> Vec<MinimizingRow> {
    trace
        .iterations
        .iter()
        .map(|r| MinimizingRow {
            iteration: r.iteration,
            j: r.best_j,
            kappa4_moment: r.kappa4_moment,
        })
        .collect()
}

/// Weight given to the previous spread when updating from the elites.
const SPREAD_MEMORY: f64 = 0.8;

struct Layout {
    p: usize,
    atoms: usize,
    intervals: usize,
    /// `1/√(1 + λ + λ²)` for each embedded coefficient.
    unscale: Vec<f64>,
}

impl Layout {
    fn new(cfg: &SimConfig, atoms: usize, intervals: usize) -> Self {
        let p = cfg.embedding.p;
        let eig = cfg.basis.eigenvalues();
        let unscale = eig[..p].iter().map(|l| 1.0 / (1.0 + l + l * l).sqrt()).collect();
        Self {
            p,
            atoms,
            intervals,
            unscale,
        }
    }

    fn block(&self) -> usize {
        self.p + 1
    }

    fn dim(&self) -> usize {
        self.intervals * self.atoms * self.block()
    }

    fn initial_mean(&self, center: f64) -> Vec<f64> {
        let mut x = vec![center; self.dim()];
        for chunk in x.chunks_mut(self.block()) {
            chunk[self.p] = 1.0;
        }
        x
    }

    fn schedule(&self, x: &[f64], cfg: &SimConfig) -> Result<RelaxedControlSchedule> {
        let k = self.intervals;
        let horizon = cfg.horizon;
        let mut knots: Vec<f64> = (0..k).map(|i| horizon * i as f64 / k as f64).collect();
        knots.push(horizon);
        let mixtures = x
            .chunks(self.atoms * self.block())
            .map(|interval| {
                let raw: Vec<f64> = interval.chunks(self.block()).map(|b| b[self.p].max(0.0)).collect();
                let total: f64 = raw.iter().sum();
                let weights: Vec<f64> = if total > 0.0 {
                    raw.iter().map(|w| w / total).collect()
                } else {
                    vec![1.0 / self.atoms as f64; self.atoms]
                };
                let entries = interval
                    .chunks(self.block())
                    .zip(weights)
                    .map(|(b, w)| {
                        let theta = b[..self.p].iter().zip(&self.unscale).map(|(x, s)| x * s).collect();
                        Ok((w, ControlAtom::new(theta, cfg.embedding, &cfg.basis)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Mixture::new(entries)
            })
            .collect::<Result<Vec<_>>>()?;
        RelaxedControlSchedule::new(knots, mixtures)
    }
}

struct Scored {
    j: f64,
    estimate: Option<CostEstimate>,
    schedule: RelaxedControlSchedule,
    kappa4: f64,
}

fn score(
    x: &[f64],
    layout: &Layout,
    cfg: &SimConfig,
    spec: &CostSpec,
    op: &dyn ControlOperator,
    opt: &OptimizerConfig,
) -> Result<Scored> {
    let schedule = layout.schedule(x, cfg)?;
    let kappa4 = kappa_moment(&schedule, 4);
    match mc_estimate_J(cfg, &schedule, op, spec, opt.mc_paths, opt.base_seed) {
        Ok(e) => Ok(Scored {
            j: e.mean,
            estimate: Some(e),
            schedule,
            kappa4,
        }),
        Err(Error::BlowUp { .. }) => Ok(Scored {
            j: f64::INFINITY,
            estimate: None,
            schedule,
            kappa4,
        }),
        Err(e) => Err(e),
    }
}

pub fn optimize(
    cfg: &SimConfig,
    spec: &CostSpec,
    op: &dyn ControlOperator,
    opt: &OptimizerConfig,
) -> Result<OptimizationTrace> {
    cfg.validate()?;
    spec.validate()?;
    opt.validate()?;
    cfg.embedding.validate(&cfg.basis)?;
    let layout = Layout::new(cfg, opt.atom_count, opt.knot_count);
    let dim = layout.dim();
    let elites = opt.elite_count();
    let mut mean = layout.initial_mean(opt.init_center);
    let mut spread = vec![opt.init_spread; dim];
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opt.base_seed, u64::MAX));

    let mut iterations = Vec::with_capacity(opt.iterations);
    let mut candidates = Vec::with_capacity(opt.iterations * opt.population);
    let mut best: Option<Scored> = None;
    let mut violations = 0;

    for it in 0..opt.iterations {
        let mut population = Vec::with_capacity(opt.population);
        population.push(mean.clone());
        for _ in 1..opt.population {
            population.push(
                mean.iter()
                    .zip(&spread)
                    .map(|(mu, s)| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        mu + s * z
                    })
                    .collect::<Vec<f64>>(),
            );
        }
        let scored: Vec<Scored> = population
            .par_iter()
            .map(|x| score(x, &layout, cfg, spec, op, opt))
            .collect::<Vec<Result<Scored>>>()
            .into_iter()
            .collect::<Result<_>>()?;

        for (ci, s) in scored.iter().enumerate() {
            let (running, coercive) = match &s.estimate {
                Some(e) => {
                    let lhs = spec.b * s.kappa4;
                    (e.running_mean, lhs <= e.running_mean + COERCIVITY_RTOL * lhs.abs().max(e.running_mean.abs()))
                }
                None => (f64::INFINITY, true),
            };
            if !coercive {
                violations += 1;
            }
            candidates.push(CandidateRecord {
                iteration: it,
                candidate: ci,
                j: s.j,
                running_mean: running,
                kappa4_moment: s.kappa4,
                coercive,
            });
        }

        let mut order: Vec<usize> = (0..scored.len()).collect();
        order.sort_by(|&a, &b| scored[a].j.total_cmp(&scored[b].j).then(a.cmp(&b)));
        let generation_best_j = scored[order[0]].j;

        let elite = &order[..elites];
        for d in 0..dim {
            let m = elite.iter().map(|&i| population[i][d]).sum::<f64>() / elites as f64;
            let v = elite.iter().map(|&i| (population[i][d] - m).powi(2)).sum::<f64>() / elites as f64;
            mean[d] = m;
            spread[d] = (1.0 - SPREAD_MEMORY) * v.sqrt() + SPREAD_MEMORY * spread[d];
        }

        let mut scored = scored;
        let winner = scored.swap_remove(order[0]);
        if winner.estimate.is_some() && best.as_ref().is_none_or(|b| winner.j < b.j) {
            best = Some(winner);
        }
        let record = match &best {
            Some(b) => IterationRecord {
                iteration: it,
                best_j: b.j,
                std_error: b.estimate.as_ref().map_or(f64::NAN, |e| e.std_error),
                kappa4_moment: b.kappa4,
                generation_best_j,
            },
            None => IterationRecord {
                iteration: it,
                best_j: f64::INFINITY,
                std_error: f64::NAN,
                kappa4_moment: f64::NAN,
                generation_best_j,
            },
        };
        iterations.push(record);
    }

    let best = best.ok_or_else(|| Error::Invalid("every optimizer candidate blew up".into()))?;
    Ok(OptimizationTrace {
        iterations,
        candidates,
        lambda_hat: best.j,
        best_estimate: best.estimate.expect("best candidate has an estimate"),
        best_schedule: best.schedule,
        coercivity_violations: violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::AtomEmbedding;
    use crate::spectral::{Basis, BasisSpec};

    fn cfg() -> SimConfig {
        let basis = Basis::new(BasisSpec::new(1, 4, 8).unwrap()).unwrap();
        SimConfig {
            horizon: 1.0,
            steps: 8,
            integrator: "semi_implicit_ito".into(),
            m0: crate::spectral::SpectralField::constant(&basis, [0.5, 0.0, 0.0]),
            h: crate::spectral::SpectralField::constant(&basis, [0.0, 0.0, 1.0]),
            seed: 0,
            terms: Default::default(),
            embedding: AtomEmbedding { p: 2, component: 0 },
            basis,
        }
    }

    #[test]
    fn weights_are_clamped_and_renormalized() {
        let c = cfg();
        let layout = Layout::new(&c, 2, 1);
        let q = layout.schedule(&[0.0, 0.0, -1.0, 0.0, 0.0, 3.0], &c).unwrap();
        assert_eq!(q.mixtures()[0].weights(), vec![0.0, 1.0]);
        let q = layout.schedule(&[0.0, 0.0, -1.0, 0.0, 0.0, -2.0], &c).unwrap();
        assert_eq!(q.mixtures()[0].weights(), vec![0.5, 0.5]);
    }

    #[test]
    fn initial_mean_is_zero_schedule_with_uniform_weights() {
        let c = cfg();
        let layout = Layout::new(&c, 3, 2);
        let q = layout.schedule(&layout.initial_mean(0.0), &c).unwrap();
        assert_eq!(q.knots(), &[0.0, 0.5, 1.0]);
        assert_eq!(kappa_moment(&q, 4), 0.0);
    }

    #[test]
    fn scaled_coordinates_measure_kappa() {
        let c = cfg();
        let layout = Layout::new(&c, 1, 1);
        let q = layout.schedule(&[0.6, 0.8, 1.0], &c).unwrap();
        let k = q.mixtures()[0].entries()[0].1.kappa();
        assert!((k - 1.0).abs() < 1e-14, "{k}");
    }

    #[test]
    fn elite_count_at_least_one() {
        let mut o = OptimizerConfig::default();
        o.population = 1;
        assert_eq!(o.elite_count(), 1);
        o.population = 16;
        assert_eq!(o.elite_count(), 4);
    }

    #[test]
    fn config_rejects_bad_values() {
        let mut o = OptimizerConfig::default();
        o.elite_fraction = 1.0;
        assert!(o.validate().is_err());
        let mut o = OptimizerConfig::default();
        o.init_spread = 0.0;
        assert!(o.validate().is_err());
    }
}
