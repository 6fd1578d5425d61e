//! Time-stepping schemes, selectable by name.

use std::sync::Arc;

use super::GalerkinSystem;
use crate::control::ControlSource;
use crate::error::{Error, Result};
use crate::registry::{Named, Registry};
use crate::spectral::SpectralField;

pub const DEFAULT_INTEGRATOR: &str = "semi_implicit_ito";

pub trait Integrator: Named + Send + Sync {
    /// Advances `m` by one step of length `dt` driven by the increment `dw`.
    fn step(
        &self,
        sys: &GalerkinSystem<'_>,
        m: &SpectralField,
        dt: f64,
        dw: f64,
        control: &dyn ControlSource,
    ) -> Result<SpectralField>;
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::range("dt", dt, "dt > 0"));
    }
    Ok(())
}

/// `m' = m + Δt·b(m) + g(m)ΔW`, with the Itô drift `b`.
pub struct EulerMaruyamaIto;

/// Predictor-corrector on the Stratonovich form; the drift omits
/// `½(m×h)×h`, which the averaged noise coefficient reproduces.
pub struct HeunStratonovich;

/// Itô drift with the Laplacian treated implicitly mode by mode:
/// `m' = (1 + Δt λ_k)⁻¹ [m + Δt·(b(m) − Δm) + g(m)ΔW]`.
pub struct SemiImplicitIto;

impl Named for EulerMaruyamaIto {
    fn name(&self) -> &'static str {
        "euler_maruyama_ito"
    }
}
impl Named for HeunStratonovich {
    fn name(&self) -> &'static str {
        "heun_stratonovich"
    }
}
impl Named for SemiImplicitIto {
    fn name(&self) -> &'static str {
        "semi_implicit_ito"
    }
}

impl Integrator for EulerMaruyamaIto {
    fn step(
        &self,
        sys: &GalerkinSystem<'_>,
        m: &SpectralField,
        dt: f64,
        dw: f64,
        control: &dyn ControlSource,
    ) -> Result<SpectralField> {
        check_dt(dt)?;
        let c = sys.evaluate(m, control, true)?;
        let mut next = m.clone();
        next.axpy(dt, &c.linear);
        next.axpy(dt, &c.nonlinear);
        next.axpy(dw, &c.diffusion);
        Ok(next)
    }
}

impl Integrator for HeunStratonovich {
    fn step(
        &self,
        sys: &GalerkinSystem<'_>,
        m: &SpectralField,
        dt: f64,
        dw: f64,
        control: &dyn ControlSource,
    ) -> Result<SpectralField> {
        check_dt(dt)?;
        let c0 = sys.evaluate(m, control, false)?;
        let mut pred = m.clone();
        pred.axpy(dt, &c0.linear);
        pred.axpy(dt, &c0.nonlinear);
        pred.axpy(dw, &c0.diffusion);
        let c1 = sys.evaluate(&pred, control, false)?;
        let mut next = m.clone();
        for c in [&c0, &c1] {
            next.axpy(0.5 * dt, &c.linear);
            next.axpy(0.5 * dt, &c.nonlinear);
            next.axpy(0.5 * dw, &c.diffusion);
        }
        Ok(next)
    }
}

impl Integrator for SemiImplicitIto {
    fn step(
        &self,
        sys: &GalerkinSystem<'_>,
        m: &SpectralField,
        dt: f64,
        dw: f64,
        control: &dyn ControlSource,
    ) -> Result<SpectralField> {
        check_dt(dt)?;
        let c = sys.evaluate(m, control, true)?;
        let mut next = m.clone();
        next.axpy(dt, &c.nonlinear);
        next.axpy(dw, &c.diffusion);
        if sys.terms().laplacian {
            let eig = sys.basis().eigenvalues();
            let modes = eig.len();
            for (i, v) in next.coeffs_mut().iter_mut().enumerate() {
                *v /= 1.0 + dt * eig[i % modes];
            }
        }
        Ok(next)
    }
}

pub fn integrators() -> Registry<dyn Integrator> {
    let mut reg: Registry<dyn Integrator> = Registry::new("integrator");
    reg.register(Arc::new(EulerMaruyamaIto))
        .register(Arc::new(HeunStratonovich))
        .register(Arc::new(SemiImplicitIto));
    reg
}

pub fn integrator(name: &str) -> Result<Arc<dyn Integrator>> {
    integrators().get(name)
}
