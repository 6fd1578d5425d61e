#![allow(dead_code)]

use llb_core::control::{AtomEmbedding, ControlAtom, Mixture, RelaxedControlSchedule};
use llb_core::dynamics::{DriftTerms, SimConfig};
use llb_core::spectral::{Basis, BasisSpec, SpectralField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn basis(d: usize, n: usize, m: usize) -> Basis {
    Basis::new(BasisSpec::new(d, n, m).unwrap()).unwrap()
}

/// d=1, n=8, M=32, T=1, 256 steps, h=(0,0,1), m₀=(½,0,0).
pub fn default_config() -> SimConfig {
    config_on(basis(1, 8, 32))
}

pub fn config_on(basis: Basis) -> SimConfig {
    SimConfig {
        horizon: 1.0,
        steps: 256,
        integrator: "semi_implicit_ito".into(),
        m0: SpectralField::constant(&basis, [0.5, 0.0, 0.0]),
        h: SpectralField::constant(&basis, [0.0, 0.0, 1.0]),
        seed: 0,
        terms: DriftTerms::default(),
        embedding: AtomEmbedding::default(),
        basis,
    }
}

pub fn random_field(basis: &Basis, rng: &mut ChaCha8Rng, scale: f64) -> SpectralField {
    let len = 3 * basis.spec().modes();
    SpectralField::from_coeffs(basis, (0..len).map(|_| scale * rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn two_atom_schedule(cfg: &SimConfig) -> RelaxedControlSchedule {
    let a = ControlAtom::new(vec![0.3, 0.2, 0.0, 0.1], cfg.embedding, &cfg.basis).unwrap();
    let b = ControlAtom::new(vec![-0.2, 0.0, 0.1, 0.0], cfg.embedding, &cfg.basis).unwrap();
    let mix = Mixture::new(vec![(0.5, a), (0.5, b)]).unwrap();
    RelaxedControlSchedule::new(vec![0.0, cfg.horizon], vec![mix]).unwrap()
}

pub fn zero_schedule(cfg: &SimConfig) -> RelaxedControlSchedule {
    RelaxedControlSchedule::zero(cfg.horizon, cfg.embedding, &cfg.basis).unwrap()
}

pub fn max_abs_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
