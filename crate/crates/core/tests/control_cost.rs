mod common;

use common::*;
use llb_core::control::{
    control_operator, dirac, kappa_moment, tightness_diagnostic, AtomEmbedding, ClassicalControl, ControlAtom,
    ControlSource, Mixture, RelaxedControlSchedule,
};
use llb_core::cost::{mc_estimate_J, mc_path_costs, relaxed_running_cost, trajectory_cost, CostSpec};
use llb_core::dynamics::{sample_wiener, simulate};
use llb_core::spectral::{Basis, SpectralField};
use proptest::prelude::*;

fn atoms(b: &Basis, thetas: &[Vec<f64>]) -> Vec<ControlAtom> {
    let e = AtomEmbedding { p: 3, component: 0 };
    thetas.iter().map(|t| ControlAtom::new(t.clone(), e, b).unwrap()).collect()
}

fn weights(raw: &[f64]) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    raw.iter().map(|w| w / s).collect()
}

fn schedule_strategy() -> impl Strategy<Value = RelaxedControlSchedule> {
    let b = basis(1, 4, 16);
    (
        prop::collection::vec(0.05f64..1.0, 1..4),
        prop::collection::vec((prop::collection::vec(-1.0f64..1.0, 3), 0.01f64..1.0), 1..4),
    )
        .prop_map(move |(lengths, atom_spec)| {
            let mut knots = vec![0.0];
            for l in &lengths {
                knots.push(knots.last().unwrap() + l);
            }
            let thetas: Vec<Vec<f64>> = atom_spec.iter().map(|a| a.0.clone()).collect();
            let w = weights(&atom_spec.iter().map(|a| a.1).collect::<Vec<_>>());
            let list = atoms(&b, &thetas);
            let mix: Vec<Mixture> = (0..lengths.len())
                .map(|k| {
                    // rotate atoms so intervals differ
                    let entries = (0..list.len()).map(|i| (w[i], list[(i + k) % list.len()].clone())).collect();
                    Mixture::new(entries).unwrap()
                })
                .collect();
            RelaxedControlSchedule::new(knots, mix).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tightness_is_monotone_in_r(q in schedule_strategy(), r1 in 0.01f64..50.0, r2 in 0.01f64..50.0) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let a = tightness_diagnostic(&q, lo).unwrap();
        let b = tightness_diagnostic(&q, hi).unwrap();
        prop_assert!(b <= a);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
        let kmax = q.mixtures().iter().flat_map(|m| m.entries().iter().map(|e| e.1.kappa())).fold(0.0, f64::max);
        prop_assert_eq!(tightness_diagnostic(&q, kmax).unwrap(), 0.0);
    }

    #[test]
    fn kappa_moments_finite(q in schedule_strategy()) {
        prop_assert!(kappa_moment(&q, 2).is_finite());
        prop_assert!(kappa_moment(&q, 4).is_finite());
        prop_assert!(kappa_moment(&q, 4) >= 0.0);
    }

    #[test]
    fn relaxed_running_cost_is_coercive(q in schedule_strategy(), a in 0.0f64..2.0, bw in 0.01f64..3.0, seed in 0u64..1000) {
        let b = q.basis().clone();
        let m = random_field(&b, &mut rng(seed), 1.0);
        let spec = CostSpec { a, b: bw, c: 1.0, target: SpectralField::zeros(&b) };
        for mix in q.mixtures() {
            let f = relaxed_running_cost(&spec, 0.0, &m, mix);
            let k4 = mix.average(&|u| u.kappa().powi(4));
            prop_assert!(f >= bw * k4 * (1.0 - 1e-14));
        }
    }

    #[test]
    fn control_term_linear_in_weights(w in 0.0f64..1.0, seed in 0u64..1000) {
        let b = basis(1, 4, 16);
        let mut r = rng(seed);
        let m = random_field(&b, &mut r, 1.0);
        let list = atoms(&b, &[vec![0.3, -0.2, 0.1], vec![-0.4, 0.0, 0.5]]);
        let op = control_operator("additive").unwrap();
        let mg = llb_core::spectral::to_physical(&m);
        let mix = Mixture::new(vec![(w, list[0].clone()), (1.0 - w, list[1].clone())]).unwrap();
        let got = mix.control_grid(&*op, &mg).unwrap();
        let a = list[0].control_grid(&*op, &mg).unwrap();
        let c = list[1].control_grid(&*op, &mg).unwrap();
        for j in 0..got.nodes() {
            for k in 0..3 {
                let want = w * a.at(j)[k] + (1.0 - w) * c.at(j)[k];
                prop_assert!((got.at(j)[k] - want).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn dirac_cost_equals_classical_cost_bitwise() {
    let cfg = default_config();
    let op = control_operator("additive").unwrap();
    let u1 = ControlAtom::new(vec![0.2, -0.1, 0.05, 0.0], cfg.embedding, &cfg.basis).unwrap();
    let u2 = ControlAtom::new(vec![-0.1, 0.0, 0.2, 0.1], cfg.embedding, &cfg.basis).unwrap();
    let path = ClassicalControl::from_segments(vec![(0.0, 0.25, u1), (0.25, 1.0, u2)], 1.0).unwrap();
    let relaxed = dirac(&path);
    let spec = CostSpec { a: 0.5, b: 1.0, c: 1.0, target: cfg.m0.scaled(-1.0) };
    let a = mc_path_costs(&cfg, &path, &*op, &spec, 8, 42).unwrap();
    let b = mc_path_costs(&cfg, &relaxed, &*op, &spec, 8, 42).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cost_is_continuous_in_atom_parameters() {
    let cfg = default_config().with_steps(64);
    let op = control_operator("additive").unwrap();
    let spec = CostSpec { a: 1.0, b: 1.0, c: 1.0, target: SpectralField::zeros(&cfg.basis) };
    let w = sample_wiener(1.0, 64, 8).unwrap();
    let theta = [0.3, -0.2, 0.1, 0.05];
    let cost_at = |eps: f64| {
        let t: Vec<f64> = theta.iter().map(|v| v + eps).collect();
        let q = dirac(&ClassicalControl::constant(ControlAtom::new(t, cfg.embedding, &cfg.basis).unwrap(), 1.0).unwrap());
        trajectory_cost(&spec, &simulate(&cfg, &w, &q, &*op).unwrap(), &q).unwrap().total
    };
    let limit = cost_at(0.0);
    let gaps: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5].iter().map(|&e| (cost_at(e) - limit).abs()).collect();
    for g in gaps.windows(2) {
        assert!(g[1] < g[0]);
    }
    assert!(gaps[3] < 1e-3 * limit);
}

#[test]
fn monte_carlo_estimate_is_self_consistent() {
    let cfg = default_config().with_steps(128);
    let op = control_operator("additive").unwrap();
    let q = two_atom_schedule(&cfg);
    let spec = CostSpec { a: 0.0, b: 1.0, c: 1.0, target: cfg.m0.scaled(-1.0) };
    let small = mc_estimate_J(&cfg, &q, &*op, &spec, 1000, 1).unwrap();
    let large = mc_estimate_J(&cfg, &q, &*op, &spec, 10_000, 2).unwrap();
    let se = (small.std_error.powi(2) + large.std_error.powi(2)).sqrt();
    assert!((small.mean - large.mean).abs() <= 3.0 * se, "{small:?} {large:?}");
    assert_eq!(small.n, 1000);
}
