//! Galerkin drift/diffusion assembly and time integration.
//!
//! In `H_n` the controlled equation reads, in Itô form,
//!
//! ```text
//! dm = P_n[Δm + m×Δm − (1+|m|²)m + ½(m×h)×h + ∫L(m,u)q_t(du)] dt + P_n(m×h + h) dW
//! ```
//!
//! with all physical constants set to one. Nonlinear terms are evaluated on
//! the collocation grid and projected back with [`to_spectral`].

mod integrators;
mod wiener;

pub use integrators::{
    integrator, integrators, EulerMaruyamaIto, HeunStratonovich, Integrator, SemiImplicitIto,
    DEFAULT_INTEGRATOR,
};
pub use wiener::{sample_wiener, WienerPath};

use serde::{Deserialize, Serialize};

use crate::control::{AtomEmbedding, ControlOperator, ControlPath, ControlSource, Mixture};
use crate::error::{Error, Result};
use crate::pointwise::{cross3, dot3};
use crate::spectral::{laplacian, to_physical, to_spectral, Basis, GridField, NormKind, SpectralField};

/// Switches for the individual drift/noise terms. All on by default; the
/// other settings exist for debugging and for the verification experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftTerms {
    pub laplacian: bool,
    pub gyromagnetic: bool,
    pub bloch: bool,
    pub ito_correction: bool,
    pub control: bool,
    pub noise: bool,
}

impl Default for DriftTerms {
    fn default() -> Self {
        Self {
            laplacian: true,
            gyromagnetic: true,
            bloch: true,
            ito_correction: true,
            control: true,
            noise: true,
        }
    }
}

impl DriftTerms {
    /// Pure heat flow `dm = Δm dt`.
    pub fn linear_only() -> Self {
        Self {
            laplacian: true,
            gyromagnetic: false,
            bloch: false,
            ito_correction: false,
            control: false,
            noise: false,
        }
    }

    /// Noise only: `dm = P_n(m×h+h) dW`.
    pub fn noise_only() -> Self {
        Self {
            laplacian: false,
            gyromagnetic: false,
            bloch: false,
            ito_correction: false,
            control: false,
            noise: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub basis: Basis,
    pub horizon: f64,
    pub steps: usize,
    pub integrator: String,
    pub m0: SpectralField,
    pub h: SpectralField,
    pub seed: u64,
    pub terms: DriftTerms,
    /// How control atoms are embedded; used when rebasing schedules.
    pub embedding: AtomEmbedding,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::range("T", self.horizon, "T > 0"));
        }
        if self.steps == 0 {
            return Err(Error::range("steps", 0, "steps ≥ 1"));
        }
        if self.m0.basis() != &self.basis || self.h.basis() != &self.basis {
            return Err(Error::Shape("m0 and h must live on the configured basis".into()));
        }
        if !self.m0.is_finite() {
            return Err(Error::Invalid("m0 has non-finite coefficients".into()));
        }
        if !crate::spectral::norm(&self.h, NormKind::H2).is_finite() {
            return Err(Error::Invalid("h must have finite H² norm".into()));
        }
        integrator(&self.integrator)?;
        self.embedding.validate(&self.basis)
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Same problem on a Galerkin space with `n` modes per axis.
    pub fn with_modes(&self, n: usize) -> Result<SimConfig> {
        let basis = Basis::new(self.basis.spec().with_modes(n))?;
        Ok(SimConfig {
            m0: self.m0.rebase(&basis)?,
            h: self.h.rebase(&basis)?,
            basis,
            ..self.clone()
        })
    }

    pub fn with_steps(&self, steps: usize) -> SimConfig {
        SimConfig {
            steps,
            ..self.clone()
        }
    }
}

/// Drift split into the Laplacian part and everything else, plus the noise
/// coefficient, all evaluated at one state.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub linear: SpectralField,
    pub nonlinear: SpectralField,
    pub diffusion: SpectralField,
}

impl Coefficients {
    pub fn drift(&self) -> SpectralField {
        let mut d = self.linear.clone();
        d.axpy(1.0, &self.nonlinear);
        d
    }
}

/// The finite-dimensional SDE in `H_n` for a fixed `h` and control operator.
pub struct GalerkinSystem<'a> {
    basis: Basis,
    h_grid: GridField,
    op: &'a dyn ControlOperator,
    terms: DriftTerms,
}

impl<'a> GalerkinSystem<'a> {
    pub fn new(h: &SpectralField, op: &'a dyn ControlOperator, terms: DriftTerms) -> Self {
        Self {
            basis: h.basis().clone(),
            h_grid: to_physical(h),
            op,
            terms,
        }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn terms(&self) -> DriftTerms {
        self.terms
    }

    /// Evaluates all coefficients at `m`. `ito_correction` selects whether the
    /// drift carries `½(m×h)×h` (Itô form) or not (Stratonovich form).
    pub fn evaluate(
        &self,
        m: &SpectralField,
        control: &dyn ControlSource,
        ito_correction: bool,
    ) -> Result<Coefficients> {
        if m.basis() != &self.basis {
            return Err(Error::Shape(format!(
                "state basis {:?} vs system basis {:?}",
                m.basis().spec(),
                self.basis.spec()
            )));
        }
        let t = self.terms;
        let lap = laplacian(m);
        let mg = to_physical(m);
        let lap_g = if t.gyromagnetic {
            Some(to_physical(&lap))
        } else {
            None
        };
        let correction = ito_correction && t.ito_correction;

        let mut acc = GridField::zeros(&self.basis);
        let mut noise = GridField::zeros(&self.basis);
        for j in 0..mg.nodes() {
            let mv = mg.at(j);
            let hv = self.h_grid.at(j);
            let mut a = [0.0; 3];
            if let Some(lg) = &lap_g {
                let g = cross3(mv, lg.at(j));
                a = [a[0] + g[0], a[1] + g[1], a[2] + g[2]];
            }
            if t.bloch {
                let s = 1.0 + dot3(mv, mv);
                a = [a[0] - s * mv[0], a[1] - s * mv[1], a[2] - s * mv[2]];
            }
            let mh = cross3(mv, hv);
            if correction {
                let c = cross3(mh, hv);
                a = [a[0] + 0.5 * c[0], a[1] + 0.5 * c[1], a[2] + 0.5 * c[2]];
            }
            acc.set(j, a);
            if t.noise {
                noise.set(j, [mh[0] + hv[0], mh[1] + hv[1], mh[2] + hv[2]]);
            }
        }
        if t.control {
            acc.axpy(1.0, &control.control_grid(self.op, &mg)?);
        }
        Ok(Coefficients {
            linear: if t.laplacian { lap } else { SpectralField::zeros(&self.basis) },
            nonlinear: to_spectral(&acc),
            diffusion: if t.noise {
                to_spectral(&noise)
            } else {
                SpectralField::zeros(&self.basis)
            },
        })
    }
}

/// Itô drift `P_n[Δm + m×Δm − (1+|m|²)m + ½(m×h)×h + ∫L(m,u)q(du)]`.
pub fn drift(
    m: &SpectralField,
    q: &Mixture,
    h: &SpectralField,
    op: &dyn ControlOperator,
) -> Result<SpectralField> {
    m.check_same_basis(h)?;
    q.validate()?;
    let sys = GalerkinSystem::new(h, op, DriftTerms::default());
    Ok(sys.evaluate(m, q, true)?.drift())
}

/// `g_n(m) = P_n(m×h + h)`.
pub fn diffusion(m: &SpectralField, h: &SpectralField) -> Result<SpectralField> {
    m.check_same_basis(h)?;
    let mg = to_physical(m);
    let hg = to_physical(h);
    let mut out = GridField::zeros(m.basis());
    for j in 0..mg.nodes() {
        let hv = hg.at(j);
        let c = cross3(mg.at(j), hv);
        out.set(j, [c[0] + hv[0], c[1] + hv[1], c[2] + hv[2]]);
    }
    Ok(to_spectral(&out))
}

/// One time step of the named scheme.
#[allow(clippy::too_many_arguments)]
pub fn step(
    m: &SpectralField,
    dt: f64,
    dw: f64,
    q: &dyn ControlSource,
    h: &SpectralField,
    op: &dyn ControlOperator,
    scheme: &str,
    terms: DriftTerms,
) -> Result<SpectralField> {
    let sys = GalerkinSystem::new(h, op, terms);
    integrator(scheme)?.step(&sys, m, dt, dw, q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
}

impl Trajectory {
    pub fn final_state(&self) -> &SpectralField {
        self.states.last().expect("trajectory has at least one state")
    }

    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Left-endpoint quadrature `Σ_{j<J} Δt_j f(t_j, m(t_j))`.
    pub fn integrate(&self, mut f: impl FnMut(f64, &SpectralField) -> f64) -> f64 {
        self.times
            .windows(2)
            .zip(&self.states)
            .map(|(t, m)| (t[1] - t[0]) * f(t[0], m))
            .sum()
    }

    pub fn sup(&self, mut f: impl FnMut(&SpectralField) -> f64) -> f64 {
        self.states.iter().map(|m| f(m)).fold(0.0, f64::max)
    }
}

pub(crate) fn check_horizon(what: &str, got: f64, want: f64) -> Result<()> {
    if (got - want).abs() > 1e-12 * want.abs().max(1.0) {
        return Err(Error::Horizon(format!("{what} horizon {got} vs T = {want}")));
    }
    Ok(())
}

/// Integrates the Galerkin SDE along one Wiener path. The control is
/// evaluated at the left endpoint of each step.
pub fn simulate(
    cfg: &SimConfig,
    w: &WienerPath,
    q: &dyn ControlPath,
    op: &dyn ControlOperator,
) -> Result<Trajectory> {
    cfg.validate()?;
    if w.steps() != cfg.steps {
        return Err(Error::Horizon(format!(
            "Wiener path has {} steps, config has {}",
            w.steps(),
            cfg.steps
        )));
    }
    check_horizon("Wiener path", w.horizon(), cfg.horizon)?;
    check_horizon("control", q.horizon(), cfg.horizon)?;
    let scheme = integrator(&cfg.integrator)?;
    let sys = GalerkinSystem::new(&cfg.h, op, cfg.terms);
    let dt = cfg.dt();
    let steps = cfg.steps;

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(cfg.m0.clone());
    for (j, &dw) in w.increments().iter().enumerate() {
        let t = times[j];
        let next = scheme.step(&sys, &states[j], dt, dw, q.source_at(t))?;
        if !next.is_finite() {
            return Err(Error::BlowUp { step: j + 1, path: None });
        }
        times.push(if j + 1 == steps {
            cfg.horizon
        } else {
            cfg.horizon * (j + 1) as f64 / steps as f64
        });
        states.push(next);
    }
    Ok(Trajectory { times, states })
}
