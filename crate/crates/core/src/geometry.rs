//! Lorentz (hyperboloid) model primitives, the Poincaré-ball distance, and
//! the maps between the two models.
//!
//! Points on the hyperboloid are stored in ambient coordinates
//! `(x0, x1, .., xn)` with `x0` the time coordinate. The slice-level kernels
//! (`inner`, `distance`, `exp_map_in_place`, ...) skip validation and are what
//! the optimizer uses in its inner loop; the typed wrappers validate.

use crate::error::{Error, Result};

/// Tolerance for hyperboloid membership checks, relative to `x0^2`.
pub const CONSTRAINT_TOL: f64 = 1e-8;

/// Tangent vectors with Lorentzian norm below this leave `exp_map` a no-op.
pub const EXP_MAP_EPS: f64 = 1e-9;

/// Poincaré points must satisfy `norm < 1 - BOUNDARY_EPS` to be lifted.
pub const BOUNDARY_EPS: f64 = 1e-12;

/// A point on the upper sheet of the hyperboloid `<x,x>_L = -1`, `x0 > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzPoint {
    coords: Vec<f64>,
}

/// An ambient vector Lorentz-orthogonal to its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: LorentzPoint,
    vec: Vec<f64>,
}

/// A point inside the open unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct PoincarePoint {
    coords: Vec<f64>,
}

impl LorentzPoint {
    /// Validates ambient coordinates against the hyperboloid constraint.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_ambient(&coords)?;
        let residual = inner(&coords, &coords) + 1.0;
        // rounding in <x,x>_L grows with x0^2, so the check is relative
        let scale = coords[0].abs().max(1.0).powi(2);
        if coords[0] < 1.0 - CONSTRAINT_TOL || residual.abs() > CONSTRAINT_TOL * scale {
            return Err(Error::OffManifold { residual });
        }
        Ok(LorentzPoint { coords })
    }

    /// The basepoint `(1, 0, .., 0)` of `dim`-dimensional hyperbolic space.
    pub fn origin(dim: usize) -> Self {
        let mut coords = vec![0.0; dim + 1];
        coords[0] = 1.0;
        LorentzPoint { coords }
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        LorentzPoint { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn time(&self) -> f64 {
        self.coords[0]
    }

    pub fn spatial(&self) -> &[f64] {
        &self.coords[1..]
    }

    /// Dimension `n` of the hyperbolic space (ambient length minus one).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

impl TangentVector {
    pub fn new(base: LorentzPoint, vec: Vec<f64>) -> Result<Self> {
        if vec.len() != base.coords.len() {
            return Err(Error::DimensionMismatch {
                expected: base.coords.len(),
                actual: vec.len(),
            });
        }
        let scale = base.time() * vec.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let off = inner(base.coords(), &vec);
        if off.abs() > CONSTRAINT_TOL * scale {
            return Err(Error::Invalid(format!(
                "vector is not tangent at its base point (<x,v>_L = {off:e})"
            )));
        }
        Ok(TangentVector { base, vec })
    }

    pub fn zero(base: LorentzPoint) -> Self {
        let vec = vec![0.0; base.coords.len()];
        TangentVector { base, vec }
    }

    pub fn base(&self) -> &LorentzPoint {
        &self.base
    }

    pub fn vec(&self) -> &[f64] {
        &self.vec
    }

    pub fn scaled(&self, factor: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            vec: self.vec.iter().map(|v| v * factor).collect(),
        }
    }
}

impl PoincarePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("Poincaré coordinates".into()));
        }
        let norm = euclidean_norm(&coords);
        if norm >= 1.0 {
            return Err(Error::OutsideBall { norm });
        }
        Ok(PoincarePoint { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        euclidean_norm(&self.coords)
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

fn check_ambient(x: &[f64]) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::TooFewCoordinates(x.len()));
    }
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("ambient coordinates".into()));
    }
    Ok(())
}

fn check_same_len(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(())
}

pub(crate) fn euclidean_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Lorentzian scalar product `-x0*y0 + sum_i xi*yi`.
pub fn lorentz_inner(x: &[f64], y: &[f64]) -> Result<f64> {
    check_same_len(x, y)?;
    if x.len() < 2 {
        return Err(Error::TooFewCoordinates(x.len()));
    }
    Ok(inner(x, y))
}

#[inline]
pub(crate) fn inner(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let spatial: f64 = x[1..].iter().zip(&y[1..]).map(|(a, b)| a * b).sum();
    spatial - x[0] * y[0]
}

/// `arcosh(z)` with `z` clamped to `[1, inf)`.
#[inline]
pub fn arcosh_clamped(z: f64) -> f64 {
    z.max(1.0).acosh()
}

/// Geodesic distance `arcosh(-<x,y>_L)`.
///
/// Evaluated as `arcosh(1 + <x-y, x-y>_L / 2)`, which is the same quantity on
/// the hyperboloid but exact for `x == y` and free of cancellation for nearby
/// points.
pub fn lorentz_distance(x: &LorentzPoint, y: &LorentzPoint) -> Result<f64> {
    check_same_len(&x.coords, &y.coords)?;
    Ok(distance(&x.coords, &y.coords))
}

#[inline]
pub(crate) fn distance(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let dt = x[0] - y[0];
    let ds: f64 = x[1..].iter().zip(&y[1..]).map(|(a, b)| (a - b) * (a - b)).sum();
    let excess = (0.5 * (ds - dt * dt)).max(0.0);
    // arcosh(1 + e) = ln(1 + e + sqrt(e (e + 2)))
    (excess + (excess * (excess + 2.0)).sqrt()).ln_1p()
}

/// Time coordinate that puts `spatial` on the hyperboloid.
#[inline]
pub(crate) fn time_from_spatial(spatial: &[f64]) -> f64 {
    (1.0 + spatial.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Lifts spatial coordinates onto the hyperboloid: `x0 = sqrt(1 + |x'|^2)`.
pub fn lift(spatial: &[f64]) -> LorentzPoint {
    let mut coords = Vec::with_capacity(spatial.len() + 1);
    coords.push(time_from_spatial(spatial));
    coords.extend_from_slice(spatial);
    LorentzPoint { coords }
}

/// Discards the stored time coordinate and recomputes it from the spatial part.
pub fn renormalize(x: &[f64]) -> Result<LorentzPoint> {
    if x.len() < 2 {
        return Err(Error::TooFewCoordinates(x.len()));
    }
    if x[1..].iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("spatial coordinates".into()));
    }
    Ok(lift(&x[1..]))
}

#[inline]
pub(crate) fn renormalize_in_place(x: &mut [f64]) {
    x[0] = time_from_spatial(&x[1..]);
}

/// Lorentzian norm `sqrt(max(<v,v>_L, 0))` of an ambient vector.
#[inline]
pub fn lorentz_norm(v: &[f64]) -> f64 {
    inner(v, v).max(0.0).sqrt()
}

pub fn tangent_norm(v: &TangentVector) -> f64 {
    lorentz_norm(&v.vec)
}

/// Exponential map `cosh(|v|) x + sinh(|v|) v / |v|`.
pub fn exp_map(x: &LorentzPoint, v: &TangentVector) -> Result<LorentzPoint> {
    check_same_len(&x.coords, &v.vec)?;
    let mut out = x.coords.clone();
    exp_map_in_place(&mut out, &v.vec);
    Ok(LorentzPoint { coords: out })
}

/// Overwrites `x` with `exp_x(v)`. Returns the Lorentzian norm of `v`.
#[inline]
pub(crate) fn exp_map_in_place(x: &mut [f64], v: &[f64]) -> f64 {
    let norm = lorentz_norm(v);
    if norm < EXP_MAP_EPS {
        return norm;
    }
    let c = norm.cosh();
    let s = norm.sinh() / norm;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi = c * *xi + s * vi;
    }
    norm
}

/// Orthogonal projection onto the tangent space at `x`: `u + <x,u>_L x`.
pub fn project_to_tangent(x: &LorentzPoint, u: &[f64]) -> Result<TangentVector> {
    check_same_len(&x.coords, u)?;
    let mut vec = u.to_vec();
    project_in_place(&x.coords, &mut vec);
    Ok(TangentVector {
        base: x.clone(),
        vec,
    })
}

#[inline]
pub(crate) fn project_in_place(x: &[f64], u: &mut [f64]) {
    let c = inner(x, u);
    for (ui, xi) in u.iter_mut().zip(x) {
        *ui += c * xi;
    }
}

/// Maps a hyperboloid point into the Poincaré ball: `x' / (x0 + 1)`.
pub fn to_poincare(x: &LorentzPoint) -> PoincarePoint {
    PoincarePoint {
        coords: to_poincare_coords(&x.coords),
    }
}

pub(crate) fn to_poincare_coords(x: &[f64]) -> Vec<f64> {
    let denom = x[0] + 1.0;
    x[1..].iter().map(|v| v / denom).collect()
}

/// Inverse of [`to_poincare`]: `(1 + |u|^2, 2u) / (1 - |u|^2)`.
pub fn from_poincare(u: &PoincarePoint) -> Result<LorentzPoint> {
    let sq: f64 = u.coords.iter().map(|v| v * v).sum();
    if sq.sqrt() >= 1.0 - BOUNDARY_EPS {
        return Err(Error::OutsideBall { norm: sq.sqrt() });
    }
    let denom = 1.0 - sq;
    let mut coords = Vec::with_capacity(u.coords.len() + 1);
    coords.push((1.0 + sq) / denom);
    coords.extend(u.coords.iter().map(|v| 2.0 * v / denom));
    Ok(LorentzPoint { coords })
}

/// Poincaré-ball distance `arcosh(1 + 2|u-v|^2 / ((1-|u|^2)(1-|v|^2)))`.
pub fn poincare_distance(u: &PoincarePoint, v: &PoincarePoint) -> Result<f64> {
    check_same_len(&u.coords, &v.coords)?;
    let diff: f64 = u
        .coords
        .iter()
        .zip(&v.coords)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let nu: f64 = u.coords.iter().map(|a| a * a).sum();
    let nv: f64 = v.coords.iter().map(|a| a * a).sum();
    Ok(arcosh_clamped(1.0 + 2.0 * diff / ((1.0 - nu) * (1.0 - nv))))
}
