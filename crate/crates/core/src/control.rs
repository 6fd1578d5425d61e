//! Relaxed controls as time-piecewise-constant finite mixtures of atoms.
//!
//! The control set is `ℝ^p`; an atom `θ` is embedded linearly into the first
//! `p` spectral coefficients of one chosen component. The inf-compact gauge
//! is `κ(u) = |u|_{H²}`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointwise::cross3;
use crate::registry::{Named, Registry};
use crate::spectral::{norm, to_physical, to_spectral, Basis, GridField, NormKind, SpectralField};

/// Tolerance on `|Σ w − 1|` when validating a mixture.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Default cap on the number of atoms in one mixture.
pub const DEFAULT_MAX_ATOMS: usize = 4;

/// Linear embedding `θ ∈ ℝ^p ↦` first `p` coefficients of `component`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomEmbedding {
    pub p: usize,
    pub component: usize,
}

impl Default for AtomEmbedding {
    fn default() -> Self {
        Self { p: 4, component: 0 }
    }
}

impl AtomEmbedding {
    pub fn validate(&self, basis: &Basis) -> Result<()> {
        if self.p == 0 || self.p > basis.spec().modes() {
            return Err(Error::range(
                "p",
                self.p,
                format!("1 ≤ p ≤ n^d = {}", basis.spec().modes()),
            ));
        }
        if self.component >= 3 {
            return Err(Error::range("component", self.component, "< 3"));
        }
        Ok(())
    }
}

/// A single control value `u ∈ 𝕌` together with its cached field data.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlAtom {
    theta: Vec<f64>,
    field: SpectralField,
    grid: GridField,
    kappa: f64,
}

impl ControlAtom {
    pub fn new(theta: Vec<f64>, embedding: AtomEmbedding, basis: &Basis) -> Result<Self> {
        embedding.validate(basis)?;
        if theta.len() != embedding.p {
            return Err(Error::Shape(format!(
                "theta has {} entries, embedding expects p = {}",
                theta.len(),
                embedding.p
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Invalid("theta contains non-finite entries".into()));
        }
        let mut field = SpectralField::zeros(basis);
        let offset = embedding.component * basis.spec().modes();
        field.coeffs_mut()[offset..offset + embedding.p].copy_from_slice(&theta);
        Ok(Self::from_field(theta, field))
    }

    pub fn zero(embedding: AtomEmbedding, basis: &Basis) -> Result<Self> {
        Self::new(vec![0.0; embedding.p], embedding, basis)
    }

    fn from_field(theta: Vec<f64>, field: SpectralField) -> Self {
        let grid = to_physical(&field);
        let kappa = norm(&field, NormKind::H2);
        Self {
            theta,
            field,
            grid,
            kappa,
        }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn field(&self) -> &SpectralField {
        &self.field
    }

    pub fn grid(&self) -> &GridField {
        &self.grid
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn rebase(&self, embedding: AtomEmbedding, basis: &Basis) -> Result<Self> {
        Self::new(self.theta.clone(), embedding, basis)
    }
}

/// `κ(u) = |u|_{H²}`.
pub fn kappa(u: &ControlAtom) -> f64 {
    u.kappa
}

/// The control operator `L(m, u)`, evaluated pointwise (the case `X = L²`).
pub trait ControlOperator: Named + Send + Sync {
    fn apply_point(&self, m: [f64; 3], u: [f64; 3]) -> [f64; 3];

    fn apply(&self, m: &GridField, u: &GridField) -> Result<GridField> {
        m.check_same_basis(u)?;
        let mut out = GridField::zeros(m.basis());
        for j in 0..m.nodes() {
            out.set(j, self.apply_point(m.at(j), u.at(j)));
        }
        Ok(out)
    }
}

/// `L(m, u) = m × u + u`: the control enters the effective field.
pub struct Additive;
/// `L(m, u) = u`.
pub struct PureAdditive;
/// `L(m, u) = m × u`.
pub struct Multiplicative;

impl Named for Additive {
    fn name(&self) -> &'static str {
        "additive"
    }
}
impl Named for PureAdditive {
    fn name(&self) -> &'static str {
        "pure_additive"
    }
}
impl Named for Multiplicative {
    fn name(&self) -> &'static str {
        "multiplicative"
    }
}

impl ControlOperator for Additive {
    fn apply_point(&self, m: [f64; 3], u: [f64; 3]) -> [f64; 3] {
        let c = cross3(m, u);
        [c[0] + u[0], c[1] + u[1], c[2] + u[2]]
    }
}
impl ControlOperator for PureAdditive {
    fn apply_point(&self, _m: [f64; 3], u: [f64; 3]) -> [f64; 3] {
        u
    }
}
impl ControlOperator for Multiplicative {
    fn apply_point(&self, m: [f64; 3], u: [f64; 3]) -> [f64; 3] {
        cross3(m, u)
    }
}

pub fn control_operators() -> Registry<dyn ControlOperator> {
    let mut reg: Registry<dyn ControlOperator> = Registry::new("control operator");
    reg.register(Arc::new(Additive))
        .register(Arc::new(PureAdditive))
        .register(Arc::new(Multiplicative));
    reg
}

pub fn control_operator(name: &str) -> Result<Arc<dyn ControlOperator>> {
    control_operators().get(name)
}

/// Anything that yields the control contribution at one instant: a classical
/// atom or a mixture `q_t`.
pub trait ControlSource: Sync {
    /// `∫ L(m, u) q(du)` on the grid.
    fn control_grid(&self, op: &dyn ControlOperator, m: &GridField) -> Result<GridField>;

    /// `∫ f(u) q(du)`.
    fn average(&self, f: &dyn Fn(&ControlAtom) -> f64) -> f64;
}

impl ControlSource for ControlAtom {
    fn control_grid(&self, op: &dyn ControlOperator, m: &GridField) -> Result<GridField> {
        op.apply(m, &self.grid)
    }

    fn average(&self, f: &dyn Fn(&ControlAtom) -> f64) -> f64 {
        f(self)
    }
}

/// Finite probability mixture `Σ w_i δ_{u_i}` on the control set.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    entries: Vec<(f64, ControlAtom)>,
}

impl Mixture {
    pub fn new(entries: Vec<(f64, ControlAtom)>) -> Result<Self> {
        let mix = Self { entries };
        mix.validate()?;
        Ok(mix)
    }

    pub fn dirac(atom: ControlAtom) -> Self {
        Self {
            entries: vec![(1.0, atom)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::Weights("mixture has no atoms".into()));
        }
        let mut total = 0.0;
        for (i, (w, _)) in self.entries.iter().enumerate() {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::Weights(format!("weight {i} = {w} is negative or not finite")));
            }
            total += w;
        }
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Weights(format!("weights sum to {total}, not 1")));
        }
        let basis = self.entries[0].1.field.basis();
        if self.entries.iter().any(|(_, a)| a.field.basis() != basis) {
            return Err(Error::Shape("mixture atoms live on different bases".into()));
        }
        Ok(())
    }

    pub fn entries(&self) -> &[(f64, ControlAtom)] {
        &self.entries
    }

    pub fn weights(&self) -> Vec<f64> {
        self.entries.iter().map(|(w, _)| *w).collect()
    }

    pub fn rebase(&self, embedding: AtomEmbedding, basis: &Basis) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|(w, a)| Ok((*w, a.rebase(embedding, basis)?)))
            .collect::<Result<_>>()?;
        Ok(Self { entries })
    }
}

impl ControlSource for Mixture {
    fn control_grid(&self, op: &dyn ControlOperator, m: &GridField) -> Result<GridField> {
        // Accumulation starts from the first weighted term so that a Dirac
        // mixture reproduces the classical evaluation bit for bit.
        let mut iter = self.entries.iter();
        let (w0, a0) = iter.next().expect("validated mixture is non-empty");
        let mut acc = op.apply(m, &a0.grid)?;
        if *w0 != 1.0 {
            acc.scale(*w0);
        }
        for (w, a) in iter {
            acc.axpy(*w, &op.apply(m, &a.grid)?);
        }
        Ok(acc)
    }

    fn average(&self, f: &dyn Fn(&ControlAtom) -> f64) -> f64 {
        let mut iter = self.entries.iter();
        let (w0, a0) = iter.next().expect("validated mixture is non-empty");
        let mut acc = w0 * f(a0);
        for (w, a) in iter {
            acc += w * f(a);
        }
        acc
    }
}

/// `P_n ∫ L(m, u) q(du)`.
pub fn evaluate_control_term(
    op: &dyn ControlOperator,
    m: &SpectralField,
    q: &Mixture,
) -> Result<SpectralField> {
    q.validate()?;
    m.check_same_basis(q.entries[0].1.field())?;
    Ok(to_spectral(&q.control_grid(op, &to_physical(m))?))
}

/// A control that can be queried at any time in `[0, T]`.
pub trait ControlPath: Sync {
    fn horizon(&self) -> f64;
    fn source_at(&self, t: f64) -> &dyn ControlSource;
    /// `∫ κ(u) q_t(du)` at time `t`.
    fn kappa_mean_at(&self, t: f64) -> f64 {
        self.source_at(t).average(&|a| a.kappa())
    }
}

fn validate_knots(knots: &[f64]) -> Result<()> {
    if knots.len() < 2 {
        return Err(Error::Invalid("need at least two knots".into()));
    }
    if knots[0] != 0.0 {
        return Err(Error::Invalid(format!("first knot is {}, not 0", knots[0])));
    }
    for (i, w) in knots.windows(2).enumerate() {
        if !(w[1] > w[0]) || !w[1].is_finite() {
            return Err(Error::Invalid(format!(
                "knots not strictly increasing at index {}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Index of the interval `[s_k, s_{k+1})` containing `t`; `t = T` maps to the
/// last interval.
fn interval_index(knots: &[f64], t: f64) -> usize {
    let last = knots.len() - 2;
    match knots[1..].iter().position(|&s| t < s) {
        Some(k) => k,
        None => last,
    }
}

/// Piecewise-constant mixture-valued control, `λ(du, dt) = q_t(du) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedControlSchedule {
    knots: Vec<f64>,
    mixtures: Vec<Mixture>,
}

impl RelaxedControlSchedule {
    pub fn new(knots: Vec<f64>, mixtures: Vec<Mixture>) -> Result<Self> {
        let s = Self { knots, mixtures };
        s.validate()?;
        Ok(s)
    }

    /// Dirac at the zero atom on `[0, T]`.
    pub fn zero(horizon: f64, embedding: AtomEmbedding, basis: &Basis) -> Result<Self> {
        Self::new(
            vec![0.0, horizon],
            vec![Mixture::dirac(ControlAtom::zero(embedding, basis)?)],
        )
    }

    pub fn validate(&self) -> Result<()> {
        validate_knots(&self.knots)?;
        if self.mixtures.len() != self.knots.len() - 1 {
            return Err(Error::Shape(format!(
                "{} knots need {} mixtures, got {}",
                self.knots.len(),
                self.knots.len() - 1,
                self.mixtures.len()
            )));
        }
        for (k, mix) in self.mixtures.iter().enumerate() {
            mix.validate().map_err(|e| match e {
                Error::Weights(msg) => Error::Weights(format!("interval {k}: {msg}")),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn mixtures(&self) -> &[Mixture] {
        &self.mixtures
    }

    pub fn mixture_at(&self, t: f64) -> &Mixture {
        &self.mixtures[interval_index(&self.knots, t)]
    }

    pub fn basis(&self) -> &Basis {
        self.mixtures[0].entries[0].1.field.basis()
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, &Mixture)> {
        self.knots
            .windows(2)
            .map(|w| w[1] - w[0])
            .zip(self.mixtures.iter())
    }

    pub fn rebase(&self, embedding: AtomEmbedding, basis: &Basis) -> Result<Self> {
        Ok(Self {
            knots: self.knots.clone(),
            mixtures: self
                .mixtures
                .iter()
                .map(|m| m.rebase(embedding, basis))
                .collect::<Result<_>>()?,
        })
    }

    pub fn to_doc(&self) -> ScheduleDoc {
        ScheduleDoc {
            knots: self.knots.clone(),
            mixtures: self
                .mixtures
                .iter()
                .map(|m| {
                    m.entries
                        .iter()
                        .map(|(w, a)| WeightedTheta {
                            w: *w,
                            theta: a.theta.clone(),
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &ScheduleDoc, embedding: AtomEmbedding, basis: &Basis) -> Result<Self> {
        let mixtures = doc
            .mixtures
            .iter()
            .enumerate()
            .map(|(k, entries)| {
                let entries = entries
                    .iter()
                    .map(|e| Ok((e.w, ControlAtom::new(e.theta.clone(), embedding, basis)?)))
                    .collect::<Result<Vec<_>>>()?;
                if entries.is_empty() {
                    return Err(Error::Weights(format!("interval {k}: mixture has no atoms")));
                }
                Ok(Mixture { entries })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(doc.knots.clone(), mixtures)
    }
}

impl ControlPath for RelaxedControlSchedule {
    fn horizon(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    fn source_at(&self, t: f64) -> &dyn ControlSource {
        self.mixture_at(t)
    }
}

/// Serialized schedule: `{knots: [t...], mixtures: [[{w, theta: [...]}...]...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDoc {
    pub knots: Vec<f64>,
    pub mixtures: Vec<Vec<WeightedTheta>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedTheta {
    pub w: f64,
    pub theta: Vec<f64>,
}

/// Classical piecewise-constant control `t ↦ u(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalControl {
    knots: Vec<f64>,
    atoms: Vec<ControlAtom>,
}

impl ClassicalControl {
    /// Builds the path from `(start, end, atom)` segments, which must tile
    /// `[0, T]` without gaps or overlaps.
    pub fn from_segments(segments: Vec<(f64, f64, ControlAtom)>, horizon: f64) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Invalid("control path has no segments".into()));
        }
        let mut knots = vec![segments[0].0];
        let mut atoms = Vec::with_capacity(segments.len());
        for (i, (start, end, atom)) in segments.into_iter().enumerate() {
            let prev = *knots.last().unwrap();
            if start != prev {
                return Err(Error::Invalid(format!(
                    "control path segment {i} starts at {start}, previous ends at {prev}"
                )));
            }
            knots.push(end);
            atoms.push(atom);
        }
        validate_knots(&knots)?;
        let end = *knots.last().unwrap();
        if end != horizon {
            return Err(Error::Invalid(format!(
                "control path ends at {end}, horizon is {horizon}"
            )));
        }
        Ok(Self { knots, atoms })
    }

    pub fn constant(atom: ControlAtom, horizon: f64) -> Result<Self> {
        Self::from_segments(vec![(0.0, horizon, atom)], horizon)
    }

    pub fn atom_at(&self, t: f64) -> &ControlAtom {
        &self.atoms[interval_index(&self.knots, t)]
    }
}

impl ControlPath for ClassicalControl {
    fn horizon(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    fn source_at(&self, t: f64) -> &dyn ControlSource {
        self.atom_at(t)
    }
}

/// Embeds a classical control as the schedule of Dirac measures `δ_{u(t)}`.
pub fn dirac(path: &ClassicalControl) -> RelaxedControlSchedule {
    RelaxedControlSchedule {
        knots: path.knots.clone(),
        mixtures: path.atoms.iter().cloned().map(Mixture::dirac).collect(),
    }
}

/// `∫₀ᵀ ∫ κ(u)^power λ(du, dt)`, exact for the piecewise-constant schedule.
pub fn kappa_moment(q: &RelaxedControlSchedule, power: i32) -> f64 {
    q.intervals()
        .map(|(ds, mix)| ds * mix.average(&|a| a.kappa().powi(power)))
        .sum()
}

/// Time-weighted λ-mass of atoms outside the level set `{κ ≤ R}`.
pub fn tightness_diagnostic(q: &RelaxedControlSchedule, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::range("R", r, "R > 0"));
    }
    let horizon = q.horizon();
    let mass: f64 = q
        .intervals()
        .map(|(ds, mix)| {
            ds * mix
                .entries
                .iter()
                .filter(|(_, a)| a.kappa() > r)
                .map(|(w, _)| w)
                .sum::<f64>()
        })
        .sum();
    Ok(mass / horizon)
}
