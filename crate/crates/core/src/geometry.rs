//! Closed-form operations of the Poincaré ball, the Lorentz hyperboloid and the
//! Euclidean parametrization through the exponential map at the origin.
//!
//! Curvature is fixed at −1 throughout.
//!
//! Lorentz points are stored by their spatial part `x_r`; the time coordinate
//! is recomputed as `sqrt(‖x_r‖² + 1)` whenever it is needed. Beyond
//! `x₀ ≈ 1e8` the hyperboloid constraint cannot be checked in binary64, but
//! the spatial coordinates remain meaningful, so they are the canonical state.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, norm_sq};

/// Relative tolerance on `[x, x] = −1` for points constructed from full coordinates.
pub const TAU_LORENTZ: f64 = 1e-9;
/// Relative tolerance for tangency `[x, v] = 0` and spacelike checks.
pub const TAU_TANGENT: f64 = 1e-9;
/// Norms at or below this are treated as zero where a map divides by them.
pub const NORM_EPS: f64 = 1e-15;
/// Largest time coordinate for which the hyperboloid constraint is checked.
pub const LORENTZ_CHECK_LIMIT: f64 = 1e8;

/// Coordinate system a point or vector is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    Poincare,
    Lorentz,
    Param,
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chart::Poincare => "poincare",
            Chart::Lorentz => "lorentz",
            Chart::Param => "param",
        })
    }
}

impl FromStr for Chart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "poincare" => Ok(Chart::Poincare),
            "lorentz" => Ok(Chart::Lorentz),
            "param" | "eparam" => Ok(Chart::Param),
            other => Err(Error::Parse(format!("unknown chart `{other}`"))),
        }
    }
}

/// A point of the open unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincarePoint {
    coords: Vec<f64>,
}

impl PoincarePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("empty Poincaré point".into()));
        }
        if !coords.iter().all(|c| c.is_finite()) {
            return Err(Error::Domain("non-finite Poincaré coordinate".into()));
        }
        let n2 = norm_sq(&coords);
        if n2 >= 1.0 {
            return Err(Error::Domain(format!(
                "Poincaré point has squared norm {n2} >= 1"
            )));
        }
        Ok(Self { coords })
    }

    /// Wraps coordinates without checking the unit-ball constraint.
    ///
    /// Used where binary64 rounding can legitimately push a mathematically
    /// interior point onto the boundary (see [`param_to_poincare`]).
    pub fn new_unchecked(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn origin(dim: usize) -> Self {
        Self {
            coords: vec![0.0; dim],
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    /// `λ_x = 2 / (1 − ‖x‖²)`
    pub fn conformal_factor(&self) -> f64 {
        2.0 / (1.0 - norm_sq(&self.coords))
    }

    /// True when the point rounded onto (or past) the unit sphere.
    pub fn is_saturated(&self) -> bool {
        norm_sq(&self.coords) >= 1.0
    }
}

/// A point of the upper hyperboloid sheet, stored by its spatial part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzPoint {
    spatial: Vec<f64>,
}

impl LorentzPoint {
    /// Builds the point whose spatial part is `spatial`; always on the
    /// hyperboloid by construction.
    pub fn from_spatial(spatial: Vec<f64>) -> Result<Self> {
        if spatial.is_empty() {
            return Err(Error::InvalidInput("empty Lorentz spatial part".into()));
        }
        if !spatial.iter().all(|c| c.is_finite()) {
            return Err(Error::Domain("non-finite Lorentz coordinate".into()));
        }
        Ok(Self { spatial })
    }

    /// Builds a point from full `(x₀, x₁, …, x_n)` coordinates.
    ///
    /// Requires `x₀ > 0`; when `x₀ ≤ 1e8` also requires
    /// `|[x, x] + 1| ≤ τ·max(1, x₀²)`. The stored time coordinate is then
    /// recomputed from the spatial part.
    pub fn from_coords(coords: &[f64]) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: coords.len(),
            });
        }
        let x0 = coords[0];
        if !(x0 > 0.0) {
            return Err(Error::Domain(format!("Lorentz time coordinate {x0} <= 0")));
        }
        if x0 <= LORENTZ_CHECK_LIMIT {
            let q = minkowski_unchecked(coords, coords);
            if (q + 1.0).abs() > TAU_LORENTZ * (x0 * x0).max(1.0) {
                return Err(Error::Domain(format!(
                    "[x, x] = {q} is not -1 within tolerance"
                )));
            }
        }
        Self::from_spatial(coords[1..].to_vec())
    }

    pub fn origin(dim: usize) -> Self {
        Self {
            spatial: vec![0.0; dim],
        }
    }

    pub fn time(&self) -> f64 {
        (norm_sq(&self.spatial) + 1.0).sqrt()
    }

    pub fn spatial(&self) -> &[f64] {
        &self.spatial
    }

    /// Full ambient coordinates `(x₀, x_r)`.
    pub fn coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.spatial.len() + 1);
        out.push(self.time());
        out.extend_from_slice(&self.spatial);
        out
    }

    /// Spatial dimension `n`.
    pub fn dim(&self) -> usize {
        self.spatial.len()
    }
}

/// Unconstrained Euclidean coordinates of a hyperbolic point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EuclideanParam {
    pub z: Vec<f64>,
}

impl EuclideanParam {
    pub fn new(z: Vec<f64>) -> Self {
        Self { z }
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.z)
    }
}

/// A tangent vector in ambient coordinates of a chart.
///
/// The base point is not stored; operations take it as a separate argument.
/// In the Lorentz chart the vector has `n + 1` components and must satisfy
/// `[x, v] = 0` at its base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub chart: Chart,
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn poincare(components: Vec<f64>) -> Self {
        Self {
            chart: Chart::Poincare,
            components,
        }
    }

    /// Lorentz-chart vector without a tangency check.
    pub fn lorentz(components: Vec<f64>) -> Self {
        Self {
            chart: Chart::Lorentz,
            components,
        }
    }

    /// Lorentz-chart vector checked for tangency at `base`.
    pub fn lorentz_at(base: &LorentzPoint, components: Vec<f64>) -> Result<Self> {
        check_len(&components, base.dim() + 1)?;
        check_tangent(&base.coords(), &components)?;
        Ok(Self::lorentz(components))
    }

    pub fn zero(chart: Chart, len: usize) -> Self {
        Self {
            chart,
            components: vec![0.0; len],
        }
    }

    pub fn euclidean_norm(&self) -> f64 {
        norm(&self.components)
    }
}

fn check_len(v: &[f64], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: v.len(),
        });
    }
    Ok(())
}

fn check_chart(v: &TangentVector, chart: Chart) -> Result<()> {
    if v.chart != chart {
        return Err(Error::InvalidInput(format!(
            "expected a {chart} tangent vector, got {}",
            v.chart
        )));
    }
    Ok(())
}

/// Sum of absolute values of the terms of `[u, v]`, used to scale tolerances.
fn minkowski_magnitude(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a * b).abs()).sum()
}

fn check_tangent(x: &[f64], v: &[f64]) -> Result<()> {
    let p = minkowski_unchecked(x, v);
    if p.abs() > TAU_TANGENT * minkowski_magnitude(x, v).max(1.0) {
        return Err(Error::NotTangent { product: p });
    }
    Ok(())
}

pub(crate) fn minkowski_unchecked(u: &[f64], v: &[f64]) -> f64 {
    let mut acc = -(u[0] * v[0]);
    for i in 1..u.len() {
        acc += u[i] * v[i];
    }
    acc
}

/// Minkowski product `[u, v] = −u₀v₀ + Σ_{i≥1} uᵢvᵢ`.
///
/// The time term is accumulated first, then the spatial terms left to right.
pub fn minkowski_product(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    if u.len() < 2 {
        return Err(Error::InvalidInput(
            "Minkowski vectors need at least two components".into(),
        ));
    }
    Ok(minkowski_unchecked(u, v))
}

/// Poincaré-ball distance from raw coordinates.
pub fn dist_poincare_raw(x: &[f64], y: &[f64]) -> f64 {
    let num = 2.0 * crate::linalg::dist_sq(x, y);
    let den = (1.0 - norm_sq(x)) * (1.0 - norm_sq(y));
    (1.0 + num / den).max(1.0).acosh()
}

/// `d(x, y) = arccosh(1 + 2‖x−y‖² / ((1−‖x‖²)(1−‖y‖²)))`, argument clamped to ≥ 1.
pub fn dist_poincare(x: &PoincarePoint, y: &PoincarePoint) -> Result<f64> {
    check_len(y.coords(), x.dim())?;
    Ok(dist_poincare_raw(x.coords(), y.coords()))
}

/// Lorentz distance from full ambient coordinates.
pub fn dist_lorentz_raw(x: &[f64], y: &[f64]) -> f64 {
    (-minkowski_unchecked(x, y)).max(1.0).acosh()
}

/// `d(x, y) = arccosh(−[x, y])`, argument clamped to ≥ 1.
pub fn dist_lorentz(x: &LorentzPoint, y: &LorentzPoint) -> Result<f64> {
    check_len(y.spatial(), x.dim())?;
    Ok(dist_lorentz_raw(&x.coords(), &y.coords()))
}

/// The isometry φ from the ball to the hyperboloid.
pub fn poincare_to_lorentz(x: &PoincarePoint) -> Result<LorentzPoint> {
    let n2 = norm_sq(x.coords());
    if !(n2 < 1.0) {
        return Err(Error::Domain(format!(
            "cannot map a point with squared norm {n2} to the hyperboloid"
        )));
    }
    let den = 1.0 - n2;
    LorentzPoint::from_spatial(x.coords().iter().map(|c| 2.0 * c / den).collect())
}

/// The isometry ψ from the hyperboloid to the ball, `xᵢ = yᵢ / (1 + y₀)`.
pub fn lorentz_to_poincare(y: &LorentzPoint) -> Result<PoincarePoint> {
    let den = 1.0 + y.time();
    PoincarePoint::new(y.spatial().iter().map(|c| c / den).collect())
}

/// Möbius addition `x ⊕ y` on raw coordinates.
pub fn mobius_add(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_len(y, x.len())?;
    let xy = dot(x, y);
    let x2 = norm_sq(x);
    let y2 = norm_sq(y);
    let den = 1.0 + 2.0 * xy + x2 * y2;
    if den < 1e-15 {
        return Err(Error::Degenerate(format!(
            "Möbius denominator {den:e} (antipodal configuration)"
        )));
    }
    let a = 1.0 + 2.0 * xy + y2;
    let b = 1.0 - x2;
    let out: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (a * xi + b * yi) / den)
        .collect();
    debug_assert!(
        !(x2 < 1.0 && y2 < 1.0) || norm_sq(&out) < 1.0 + 1e-12,
        "Möbius sum left the ball"
    );
    Ok(out)
}

/// `exp_x(s·v) = x ⊕ tanh(λ_x ‖s·v‖ / 2) (s·v)/‖s·v‖`.
///
/// Returns `x` unchanged when `‖s·v‖ ≤ 1e-15`. Fails with
/// [`Error::Domain`] when the result rounds onto the unit sphere.
pub fn exp_poincare(x: &PoincarePoint, v: &TangentVector, scale: f64) -> Result<PoincarePoint> {
    check_chart(v, Chart::Poincare)?;
    check_len(&v.components, x.dim())?;
    let sv: Vec<f64> = v.components.iter().map(|c| c * scale).collect();
    let nv = norm(&sv);
    if nv <= NORM_EPS {
        return Ok(x.clone());
    }
    let t = (0.5 * x.conformal_factor() * nv).tanh();
    let step: Vec<f64> = sv.iter().map(|c| t * c / nv).collect();
    let out = mobius_add(x.coords(), &step)?;
    PoincarePoint::new(out)
}

/// `sinh(t)/t`, continuous at 0.
fn sinhc(t: f64) -> f64 {
    if t < 1e-4 {
        let t2 = t * t;
        1.0 + t2 / 6.0 + t2 * t2 / 120.0
    } else {
        t.sinh() / t
    }
}

/// `exp_x(s·v) = cosh(‖s·v‖_L) x + sinh(‖s·v‖_L) (s·v)/‖s·v‖_L`.
///
/// `sinh(t)/t` is evaluated continuously, so a vector whose Minkowski norm
/// rounds to zero still moves the point by `s·v`. Returns `x` unchanged when
/// the Euclidean norm of `s·v` is at most 1e-15. The output time coordinate
/// is recomputed from the spatial part.
///
/// The norm is taken from the spatial part alone, with the time component
/// implied by tangency at `x`: splitting `v_r` into `a·x̂_r + v_⊥` gives
/// `‖v‖²_L = ‖v_⊥‖² + a²/x₀²`, which has no cancellation far from the origin.
pub fn exp_lorentz(x: &LorentzPoint, v: &TangentVector, scale: f64) -> Result<LorentzPoint> {
    check_chart(v, Chart::Lorentz)?;
    check_len(&v.components, x.dim() + 1)?;
    let sv: Vec<f64> = v.components.iter().map(|c| c * scale).collect();
    if norm(&sv) <= NORM_EPS {
        return Ok(x.clone());
    }
    let xc = x.coords();
    check_tangent(&xc, &sv)?;
    let vv = minkowski_unchecked(&sv, &sv);
    if vv < -TAU_TANGENT * norm_sq(&sv).max(1.0) {
        return Err(Error::NotSpacelike { product: vv });
    }
    let vr = &sv[1..];
    let xr = x.spatial();
    let rx = norm(xr);
    let n = if rx <= NORM_EPS {
        norm(vr)
    } else {
        let a = dot(xr, vr) / rx;
        let perp_sq: f64 = xr.iter().zip(vr).map(|(xi, vi)| (vi - a * xi / rx).powi(2)).sum();
        let along = a / x.time();
        (perp_sq + along * along).sqrt()
    };
    let c = n.cosh();
    let s = sinhc(n);
    let spatial = xr.iter().zip(vr).map(|(xi, vi)| c * xi + s * vi).collect();
    LorentzPoint::from_spatial(spatial)
}

/// `F_D(z) = exp_0(z/2) = tanh(‖z‖/2) z/‖z‖`.
///
/// For `‖z‖` beyond about 38 `tanh` rounds to 1 and the result lies on the
/// unit sphere in binary64; it is returned unchecked (finite, saturated).
pub fn param_to_poincare(z: &EuclideanParam) -> PoincarePoint {
    let r = z.norm();
    if r <= NORM_EPS {
        return PoincarePoint::origin(z.dim());
    }
    let t = (0.5 * r).tanh();
    PoincarePoint::new_unchecked(z.z.iter().map(|c| t * c / r).collect())
}

/// `F_L(z) = exp_0̄((0, z)) = (cosh‖z‖, sinh‖z‖ z/‖z‖)`.
pub fn param_to_lorentz(z: &EuclideanParam) -> Result<LorentzPoint> {
    let r = z.norm();
    if r <= NORM_EPS {
        return Ok(LorentzPoint::origin(z.dim()));
    }
    let s = r.sinh();
    LorentzPoint::from_spatial(z.z.iter().map(|c| s * c / r).collect())
}

/// `F_D⁻¹(x) = 2 artanh(‖x‖) x/‖x‖`.
pub fn param_from_poincare(x: &PoincarePoint) -> Result<EuclideanParam> {
    let r = x.norm();
    if !(r < 1.0) {
        return Err(Error::Domain("point on the unit sphere has no preimage".into()));
    }
    if r <= NORM_EPS {
        return Ok(EuclideanParam::new(vec![0.0; x.dim()]));
    }
    let s = 2.0 * r.atanh() / r;
    Ok(EuclideanParam::new(x.coords().iter().map(|c| s * c).collect()))
}

/// `F_L⁻¹(y) = arccosh(y₀) y_r/‖y_r‖`.
///
/// Evaluated as `arsinh(‖y_r‖)`, which equals `arccosh(y₀)` on the hyperboloid
/// and stays well conditioned near the origin.
pub fn param_from_lorentz(y: &LorentzPoint) -> EuclideanParam {
    let r = norm(y.spatial());
    if r <= NORM_EPS {
        return EuclideanParam::new(vec![0.0; y.dim()]);
    }
    let s = r.asinh() / r;
    EuclideanParam::new(y.spatial().iter().map(|c| s * c).collect())
}

/// `PT_{x↦y}(v) = v + [y, v] / (1 − [x, y]) (x + y)`.
pub fn parallel_transport_lorentz(
    x: &LorentzPoint,
    y: &LorentzPoint,
    v: &TangentVector,
) -> Result<TangentVector> {
    check_chart(v, Chart::Lorentz)?;
    check_len(&v.components, x.dim() + 1)?;
    check_len(y.spatial(), x.dim())?;
    let xc = x.coords();
    let yc = y.coords();
    let den = 1.0 - minkowski_unchecked(&xc, &yc);
    if den < 1e-15 {
        return Err(Error::Degenerate(format!(
            "parallel transport denominator {den:e}"
        )));
    }
    let coef = minkowski_unchecked(&yc, &v.components) / den;
    let out = v
        .components
        .iter()
        .zip(xc.iter().zip(&yc))
        .map(|(vi, (xi, yi))| vi + coef * (xi + yi))
        .collect();
    Ok(TangentVector::lorentz(out))
}

/// `‖v‖_L = sqrt([v, v])`, small negative products clamped to zero.
pub fn lorentz_tangent_norm(v: &TangentVector) -> Result<f64> {
    check_chart(v, Chart::Lorentz)?;
    let vv = minkowski_product(&v.components, &v.components)?;
    if vv < -TAU_TANGENT * norm_sq(&v.components).max(1.0) {
        return Err(Error::NotSpacelike { product: vv });
    }
    Ok(vv.max(0.0).sqrt())
}

/// `‖v‖_D = λ_x ‖v‖`.
pub fn poincare_tangent_norm(x: &PoincarePoint, v: &TangentVector) -> Result<f64> {
    check_chart(v, Chart::Poincare)?;
    check_len(&v.components, x.dim())?;
    Ok(x.conformal_factor() * norm(&v.components))
}
