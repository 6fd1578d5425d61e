//! Neumann cosine eigenbasis on the unit box `[0,1]^d`, `d ∈ {1,2}`.
//!
//! Basis functions are `e_0 = 1` and `e_k(x) = √2 cos(kπx)` per axis,
//! tensorized in two dimensions. They are L²-orthonormal and satisfy
//! `−Δ e_k = λ_k e_k` with `λ_k = Σ_j (k_j π)²`.
//!
//! Physical values live on the endpoint grid `x_j = j/(M−1)`,
//! `j = 0..M`, with trapezoid weights. The trapezoid rule integrates
//! `cos(ℓπx)` exactly for `ℓ < 2(M−1)`, so with `M ≥ 2n` the projection of
//! any product of up to four fields of `H_n` is computed without aliasing.
//!
//! Coefficients and grid values are stored component-major: the three
//! Cartesian components follow each other, each a row-major array over the
//! mode multi-index (resp. the grid multi-index).

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimension, modes per axis and collocation points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSpec {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
}

impl BasisSpec {
    pub fn new(d: usize, n: usize, m: usize) -> Result<Self> {
        let spec = Self { d, n, m };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.d) {
            return Err(Error::range("d", self.d, "d ∈ {1, 2}"));
        }
        if self.n == 0 {
            return Err(Error::range("n", self.n, "n ≥ 1"));
        }
        if self.m < 2 * self.n || self.m < 2 {
            return Err(Error::range("M", self.m, format!("M ≥ 2n = {}", 2 * self.n)));
        }
        Ok(())
    }

    /// Number of modes per component, `n^d`.
    pub fn modes(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Number of grid nodes, `M^d`.
    pub fn nodes(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    /// Same spec with a different number of modes, keeping `M ≥ 2n` and the
    /// original points-per-mode ratio.
    pub fn with_modes(&self, n: usize) -> Self {
        let ratio = self.m.div_ceil(self.n).max(2);
        Self {
            d: self.d,
            n,
            m: (n * ratio).max(2 * n).max(2),
        }
    }

    /// Expands a flat mode index into its multi-index.
    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        match self.d {
            1 => vec![flat],
            _ => vec![flat / self.n, flat % self.n],
        }
    }

    pub fn flat_index(&self, k: &[usize]) -> Result<usize> {
        if k.len() != self.d {
            return Err(Error::Shape(format!(
                "mode index has {} components, basis has d = {}",
                k.len(),
                self.d
            )));
        }
        for &kj in k {
            if kj >= self.n {
                return Err(Error::range("mode index", kj, format!("< n = {}", self.n)));
            }
        }
        Ok(k.iter().fold(0, |acc, &kj| acc * self.n + kj))
    }
}

/// `λ_k = Σ_j (k_j π)²` for the Neumann Laplacian on `[0,1]^d`.
pub fn eigenvalue(k: &[usize], spec: &BasisSpec) -> Result<f64> {
    spec.flat_index(k)?;
    Ok(k.iter().map(|&kj| (kj as f64 * PI).powi(2)).sum())
}

struct Tables {
    spec: BasisSpec,
    nodes: Vec<f64>,
    /// `synth[j * n + k] = e_k(x_j)`
    synth: Vec<f64>,
    /// `analysis[k * M + j] = w_j e_k(x_j)`
    analysis: Vec<f64>,
    /// Eigenvalue per flat mode index.
    eigen: Vec<f64>,
    /// Tensorized trapezoid weights per flat grid index.
    grid_weights: Vec<f64>,
}

/// Precomputed transform tables for a [`BasisSpec`]. Cheap to clone.
#[derive(Clone)]
pub struct Basis(Arc<Tables>);

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.spec == other.0.spec
    }
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Basis({:?})", self.0.spec)
    }
}

impl Basis {
    pub fn new(spec: BasisSpec) -> Result<Self> {
        spec.validate()?;
        let BasisSpec { d, n, m } = spec;
        let h = 1.0 / (m - 1) as f64;
        let nodes: Vec<f64> = (0..m).map(|j| j as f64 * h).collect();
        let weights: Vec<f64> = (0..m)
            .map(|j| if j == 0 || j == m - 1 { 0.5 * h } else { h })
            .collect();
        let mut synth = vec![0.0; m * n];
        let mut analysis = vec![0.0; n * m];
        for j in 0..m {
            for k in 0..n {
                let e = basis_function(k, nodes[j]);
                synth[j * n + k] = e;
                analysis[k * m + j] = weights[j] * e;
            }
        }
        let eigen = (0..spec.modes())
            .map(|flat| {
                spec.multi_index(flat)
                    .iter()
                    .map(|&kj| (kj as f64 * PI).powi(2))
                    .sum()
            })
            .collect();
        let grid_weights = match d {
            1 => weights.clone(),
            _ => (0..m * m).map(|j| weights[j / m] * weights[j % m]).collect(),
        };
        Ok(Basis(Arc::new(Tables {
            spec,
            nodes,
            synth,
            analysis,
            eigen,
            grid_weights,
        })))
    }

    pub fn spec(&self) -> BasisSpec {
        self.0.spec
    }

    /// One-dimensional collocation nodes.
    pub fn nodes(&self) -> &[f64] {
        &self.0.nodes
    }

    pub fn grid_weights(&self) -> &[f64] {
        &self.0.grid_weights
    }

    /// Eigenvalues indexed by flat mode index.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.0.eigen
    }

    /// Physical coordinates of flat grid node `j`.
    pub fn node_coords(&self, j: usize) -> Vec<f64> {
        let m = self.0.spec.m;
        match self.0.spec.d {
            1 => vec![self.0.nodes[j]],
            _ => vec![self.0.nodes[j / m], self.0.nodes[j % m]],
        }
    }

    /// Synthesis for one component: coefficients → grid values.
    fn synthesize(&self, coeffs: &[f64], out: &mut [f64]) {
        let BasisSpec { d, n, m } = self.0.spec;
        let s = &self.0.synth;
        if d == 1 {
            for j in 0..m {
                let row = &s[j * n..(j + 1) * n];
                out[j] = row.iter().zip(coeffs).map(|(a, b)| a * b).sum();
            }
            return;
        }
        // tmp[k1][j2] = Σ_k2 c[k1][k2] e_k2(x_j2)
        let mut tmp = vec![0.0; n * m];
        for k1 in 0..n {
            let c = &coeffs[k1 * n..(k1 + 1) * n];
            for j2 in 0..m {
                let row = &s[j2 * n..(j2 + 1) * n];
                tmp[k1 * m + j2] = row.iter().zip(c).map(|(a, b)| a * b).sum();
            }
        }
        for j1 in 0..m {
            let row = &s[j1 * n..(j1 + 1) * n];
            let dst = &mut out[j1 * m..(j1 + 1) * m];
            dst.fill(0.0);
            for (k1, &e) in row.iter().enumerate() {
                let src = &tmp[k1 * m..(k1 + 1) * m];
                for (o, v) in dst.iter_mut().zip(src) {
                    *o += e * v;
                }
            }
        }
    }

    /// Analysis for one component: grid values → coefficients by quadrature.
    fn analyze(&self, values: &[f64], out: &mut [f64]) {
        let BasisSpec { d, n, m } = self.0.spec;
        let a = &self.0.analysis;
        if d == 1 {
            for k in 0..n {
                let row = &a[k * m..(k + 1) * m];
                out[k] = row.iter().zip(values).map(|(w, v)| w * v).sum();
            }
            return;
        }
        // tmp[j1][k2] = Σ_j2 g[j1][j2] w_j2 e_k2(x_j2)
        let mut tmp = vec![0.0; m * n];
        for j1 in 0..m {
            let g = &values[j1 * m..(j1 + 1) * m];
            for k2 in 0..n {
                let row = &a[k2 * m..(k2 + 1) * m];
                tmp[j1 * n + k2] = row.iter().zip(g).map(|(w, v)| w * v).sum();
            }
        }
        for k1 in 0..n {
            let row = &a[k1 * m..(k1 + 1) * m];
            let dst = &mut out[k1 * n..(k1 + 1) * n];
            dst.fill(0.0);
            for (j1, &w) in row.iter().enumerate() {
                let src = &tmp[j1 * n..(j1 + 1) * n];
                for (o, v) in dst.iter_mut().zip(src) {
                    *o += w * v;
                }
            }
        }
    }
}

fn basis_function(k: usize, x: f64) -> f64 {
    if k == 0 {
        1.0
    } else {
        SQRT_2 * (k as f64 * PI * x).cos()
    }
}

/// ℝ³-valued field stored as Neumann-cosine coefficients.
#[derive(Clone, PartialEq)]
pub struct SpectralField {
    basis: Basis,
    coeffs: Vec<f64>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("basis", &self.basis.spec())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl SpectralField {
    pub fn zeros(basis: &Basis) -> Self {
        Self {
            basis: basis.clone(),
            coeffs: vec![0.0; 3 * basis.spec().modes()],
        }
    }

    pub fn from_coeffs(basis: &Basis, coeffs: Vec<f64>) -> Result<Self> {
        let want = 3 * basis.spec().modes();
        if coeffs.len() != want {
            return Err(Error::Shape(format!(
                "expected {want} coefficients, got {}",
                coeffs.len()
            )));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Invalid(format!("coefficient {i} is not finite")));
        }
        Ok(Self {
            basis: basis.clone(),
            coeffs,
        })
    }

    /// Spatially constant field; `e_0 = 1` so the value is the mode-0 coefficient.
    pub fn constant(basis: &Basis, value: [f64; 3]) -> Self {
        let mut f = Self::zeros(basis);
        let modes = basis.spec().modes();
        for (c, v) in value.iter().enumerate() {
            f.coeffs[c * modes] = *v;
        }
        f
    }

    pub fn single_mode(basis: &Basis, k: &[usize], component: usize, amplitude: f64) -> Result<Self> {
        if component >= 3 {
            return Err(Error::range("component", component, "< 3"));
        }
        let flat = basis.spec().flat_index(k)?;
        let mut f = Self::zeros(basis);
        f.coeffs[component * basis.spec().modes() + flat] = amplitude;
        Ok(f)
    }

    /// Quadrature projection of a pointwise function onto the basis.
    pub fn from_fn(basis: &Basis, f: impl Fn(&[f64]) -> [f64; 3]) -> Self {
        to_spectral(&GridField::from_fn(basis, f))
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let modes = self.basis.spec().modes();
        &self.coeffs[c * modes..(c + 1) * modes]
    }

    pub fn coeff(&self, component: usize, flat: usize) -> f64 {
        self.coeffs[component * self.basis.spec().modes() + flat]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn check_same_basis(&self, other: &SpectralField) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::Shape(format!(
                "basis {:?} vs {:?}",
                self.basis.spec(),
                other.basis.spec()
            )));
        }
        Ok(())
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &SpectralField) {
        debug_assert!(self.basis == x.basis);
        for (s, v) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *s += a * v;
        }
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= a);
        out
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Copies the overlapping modes into another basis of the same dimension,
    /// truncating or zero-padding the rest.
    pub fn rebase(&self, basis: &Basis) -> Result<SpectralField> {
        let from = self.basis.spec();
        let to = basis.spec();
        if from.d != to.d {
            return Err(Error::Shape(format!("cannot rebase d = {} onto d = {}", from.d, to.d)));
        }
        let mut out = SpectralField::zeros(basis);
        let shared = from.n.min(to.n);
        for c in 0..3 {
            for flat in 0..from.modes() {
                let k = from.multi_index(flat);
                if k.iter().all(|&kj| kj < shared) {
                    let dst = to.flat_index(&k)?;
                    out.coeffs[c * to.modes() + dst] = self.coeffs[c * from.modes() + flat];
                }
            }
        }
        Ok(out)
    }
}

/// ℝ³-valued field sampled on the `M^d` collocation grid.
#[derive(Clone, PartialEq)]
pub struct GridField {
    basis: Basis,
    values: Vec<f64>,
}

impl fmt::Debug for GridField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridField")
            .field("basis", &self.basis.spec())
            .field("values", &self.values)
            .finish()
    }
}

impl GridField {
    pub fn zeros(basis: &Basis) -> Self {
        Self {
            basis: basis.clone(),
            values: vec![0.0; 3 * basis.spec().nodes()],
        }
    }

    pub fn from_values(basis: &Basis, values: Vec<f64>) -> Result<Self> {
        let want = 3 * basis.spec().nodes();
        if values.len() != want {
            return Err(Error::Shape(format!(
                "expected {want} grid values, got {}",
                values.len()
            )));
        }
        Ok(Self {
            basis: basis.clone(),
            values,
        })
    }

    pub fn from_fn(basis: &Basis, f: impl Fn(&[f64]) -> [f64; 3]) -> Self {
        let nodes = basis.spec().nodes();
        let mut g = Self::zeros(basis);
        for j in 0..nodes {
            let v = f(&basis.node_coords(j));
            g.set(j, v);
        }
        g
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nodes(&self) -> usize {
        self.values.len() / 3
    }

    #[inline]
    pub fn at(&self, j: usize) -> [f64; 3] {
        let nodes = self.nodes();
        [self.values[j], self.values[nodes + j], self.values[2 * nodes + j]]
    }

    #[inline]
    pub fn set(&mut self, j: usize, v: [f64; 3]) {
        let nodes = self.nodes();
        self.values[j] = v[0];
        self.values[nodes + j] = v[1];
        self.values[2 * nodes + j] = v[2];
    }

    pub fn check_same_basis(&self, other: &GridField) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::Shape(format!(
                "basis {:?} vs {:?}",
                self.basis.spec(),
                other.basis.spec()
            )));
        }
        Ok(())
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &GridField) {
        debug_assert!(self.basis == x.basis);
        for (s, v) in self.values.iter_mut().zip(&x.values) {
            *s += a * v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    /// Trapezoid quadrature of `f(m(x))` over the domain.
    pub fn integrate(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        self.basis
            .grid_weights()
            .iter()
            .enumerate()
            .map(|(j, w)| w * f(self.at(j)))
            .sum()
    }

    /// Max over grid nodes of `|m(x)|_{ℝ³}`.
    pub fn max_norm(&self) -> f64 {
        (0..self.nodes())
            .map(|j| {
                let v = self.at(j);
                (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

pub fn to_physical(f: &SpectralField) -> GridField {
    let basis = &f.basis;
    let modes = basis.spec().modes();
    let nodes = basis.spec().nodes();
    let mut g = GridField::zeros(basis);
    for c in 0..3 {
        basis.synthesize(
            &f.coeffs[c * modes..(c + 1) * modes],
            &mut g.values[c * nodes..(c + 1) * nodes],
        );
    }
    g
}

/// Quadrature projection `P_n` of grid values onto the spectral basis.
pub fn to_spectral(g: &GridField) -> SpectralField {
    let basis = &g.basis;
    let modes = basis.spec().modes();
    let nodes = basis.spec().nodes();
    let mut f = SpectralField::zeros(basis);
    for c in 0..3 {
        basis.analyze(
            &g.values[c * nodes..(c + 1) * nodes],
            &mut f.coeffs[c * modes..(c + 1) * modes],
        );
    }
    f
}

/// Zeroes every mode with some index component `≥ n_keep`.
pub fn project(f: &SpectralField, n_keep: usize) -> Result<SpectralField> {
    let spec = f.basis.spec();
    if n_keep > spec.n {
        return Err(Error::range("n'", n_keep, format!("≤ n = {}", spec.n)));
    }
    let mut out = f.clone();
    let modes = spec.modes();
    for flat in 0..modes {
        if spec.multi_index(flat).iter().any(|&kj| kj >= n_keep) {
            for c in 0..3 {
                out.coeffs[c * modes + flat] = 0.0;
            }
        }
    }
    Ok(out)
}

pub fn laplacian(f: &SpectralField) -> SpectralField {
    let eig = f.basis.eigenvalues();
    let modes = eig.len();
    let mut out = f.clone();
    for (i, c) in out.coeffs.iter_mut().enumerate() {
        *c *= -eig[i % modes];
    }
    out
}

/// L² inner product, by Parseval.
pub fn inner(f: &SpectralField, g: &SpectralField) -> f64 {
    f.coeffs.iter().zip(&g.coeffs).map(|(a, b)| a * b).sum()
}

/// `Σ λ_k^power |c_k|²`; `power = 1` gives `|∇f|²_{L²}`.
pub fn weighted_sq(f: &SpectralField, power: i32) -> f64 {
    let eig = f.basis.eigenvalues();
    let modes = eig.len();
    f.coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| eig[i % modes].powi(power) * c * c)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    L2,
    H1,
    H2,
    L4,
    Linf,
}

/// Squared norms without the final square root, for the energy functionals.
pub fn norm_sq(f: &SpectralField, kind: NormKind) -> f64 {
    match kind {
        NormKind::L2 => weighted_sq(f, 0),
        NormKind::H1 => weighted_sq(f, 0) + weighted_sq(f, 1),
        NormKind::H2 => weighted_sq(f, 0) + weighted_sq(f, 1) + weighted_sq(f, 2),
        NormKind::L4 => l4_4(&to_physical(f)).sqrt(),
        NormKind::Linf => to_physical(f).max_norm().powi(2),
    }
}

pub fn norm(f: &SpectralField, kind: NormKind) -> f64 {
    match kind {
        NormKind::L4 => l4_4(&to_physical(f)).powf(0.25),
        NormKind::Linf => to_physical(f).max_norm(),
        _ => norm_sq(f, kind).sqrt(),
    }
}

/// `∫ |m|⁴_{ℝ³}` by trapezoid quadrature on the grid.
pub fn l4_4(g: &GridField) -> f64 {
    g.integrate(|v| {
        let s = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        s * s
    })
}
