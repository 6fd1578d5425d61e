//! Pointwise ℝ³ algebra on grid fields.

use crate::error::Result;
use crate::spectral::GridField;

#[inline]
pub fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn zip_map(a: &GridField, b: &GridField, f: impl Fn([f64; 3], [f64; 3]) -> [f64; 3]) -> Result<GridField> {
    a.check_same_basis(b)?;
    let mut out = GridField::zeros(a.basis());
    for j in 0..a.nodes() {
        out.set(j, f(a.at(j), b.at(j)));
    }
    Ok(out)
}

pub fn cross(a: &GridField, b: &GridField) -> Result<GridField> {
    zip_map(a, b, cross3)
}

/// `(m × h) × h` at every node; the caller applies the factor ½.
pub fn double_cross_h(m: &GridField, h: &GridField) -> Result<GridField> {
    zip_map(m, h, |m, h| cross3(cross3(m, h), h))
}

/// `(1 + |m|²) m` at every node.
pub fn bloch_term(m: &GridField) -> GridField {
    let mut out = GridField::zeros(m.basis());
    for j in 0..m.nodes() {
        let v = m.at(j);
        let s = 1.0 + dot3(v, v);
        out.set(j, [s * v[0], s * v[1], s * v[2]]);
    }
    out
}
