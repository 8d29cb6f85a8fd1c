//! Binary64 capacity probes and one-step optimizer comparisons near the boundary.
//!
//! Expected values come from closed-form expansions evaluated in a
//! cancellation-free way, so a probe compares what binary64 does against what
//! the mathematics says.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    minkowski_unchecked, param_from_poincare, poincare_to_lorentz, EuclideanParam,
    LorentzPoint, PoincarePoint,
};
use crate::linalg::fit_slope;
use crate::optim::{
    euclid_step, grad_param, riem_grad_lorentz, riem_grad_poincare, rsgd_step_lorentz,
    rsgd_step_poincare, AmbientGradient, LinearObjective,
};
use crate::geometry::Chart;

/// One measured quantity of a probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeValue {
    pub name: String,
    pub measured: f64,
    pub expected: Option<f64>,
}

impl ProbeValue {
    fn new(name: &str, measured: f64, expected: Option<f64>) -> Self {
        Self {
            name: name.to_string(),
            measured,
            expected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub probe: String,
    pub k: Option<f64>,
    pub values: Vec<ProbeValue>,
    pub pass: bool,
    pub notes: String,
}

impl ProbeReport {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|v| v.name == name).map(|v| v.measured)
    }
}

/// Plain-text table, one row per value.
pub fn render_table(reports: &[ProbeReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<22} {:>8} {:<28} {:>24} {:>24} {:>6}",
        "probe", "k", "value", "measured", "expected", "pass"
    );
    for r in reports {
        let k = r.k.map(|k| format!("{k:.4}")).unwrap_or_else(|| "-".into());
        for v in &r.values {
            let e = v
                .expected
                .map(|e| format!("{e:.17e}"))
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<22} {:>8} {:<28} {:>24.17e} {:>24} {:>6}",
                r.probe, k, v.name, v.measured, e, r.pass
            );
        }
        if !r.notes.is_empty() {
            let _ = writeln!(out, "  note: {}", r.notes);
        }
    }
    out
}

fn pow10_neg(k: f64) -> f64 {
    10f64.powf(-k)
}

/// Radius of the largest origin-centred ball whose boundary is representable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusValues {
    pub exact: f64,
    pub approx: f64,
    /// `approx − exact`, evaluated without cancellation.
    pub gap: f64,
}

/// Distance from the origin to `(1 − 10⁻ᵏ, 0, …)` in the ball.
///
/// `exact = ln(2 − δ) − ln δ`, `approx = k ln 10 + ln 2`, `gap = −ln(1 − δ/2)`.
pub fn poincare_radius(k: f64) -> RadiusValues {
    let delta = pow10_neg(k);
    RadiusValues {
        exact: (2.0 - delta).ln() - delta.ln(),
        approx: k * std::f64::consts::LN_10 + std::f64::consts::LN_2,
        gap: -(-0.5 * delta).ln_1p(),
    }
}

/// Distance from the origin to a hyperboloid point with `x₀ = 10ᵏ`.
///
/// `exact = arccosh(10ᵏ)`. With `e = 10⁻²ᵏ`,
/// `gap = −ln(1 − (1 − sqrt(1 − e))/2)` and `1 − sqrt(1 − e) = e/(1 + sqrt(1 − e))`.
pub fn lorentz_radius(k: f64) -> RadiusValues {
    let x0 = 10f64.powf(k);
    let e = pow10_neg(2.0 * k);
    let root = (1.0 - e).max(0.0).sqrt();
    RadiusValues {
        exact: x0.acosh(),
        approx: k * std::f64::consts::LN_10 + std::f64::consts::LN_2,
        gap: -(-0.5 * e / (1.0 + root)).ln_1p(),
    }
}

/// Halving `δ` means raising `k` by this much.
pub const HALVING_STEP: f64 = std::f64::consts::LOG10_2;

fn within_factor(ratio: f64, target: f64, tol: f64) -> bool {
    (ratio / target - 1.0).abs() <= tol
}

/// Radius values at `k`, with the gap checked against its order bound.
pub fn radius_report(k: f64) -> ProbeReport {
    let p = poincare_radius(k);
    let l = lorentz_radius(k);
    let delta = pow10_neg(k);
    let pass = p.gap <= delta && (k < 2.0 || l.gap <= 10f64.powf(-2.0 * k + 1.0));
    ProbeReport {
        probe: "radius".into(),
        k: Some(k),
        values: vec![
            ProbeValue::new("poincare_exact", p.exact, None),
            ProbeValue::new("poincare_approx", p.approx, None),
            ProbeValue::new("poincare_gap", p.gap, Some(0.5 * delta)),
            ProbeValue::new("lorentz_exact", l.exact, None),
            ProbeValue::new("lorentz_approx", l.approx, None),
            ProbeValue::new("lorentz_gap", l.gap, Some(0.25 * delta * delta)),
        ],
        pass,
        notes: String::new(),
    }
}

/// Headline radii: ball at `k = 16` near 37, hyperboloid at `k = 8` near 18.
pub fn radius_headline_report() -> ProbeReport {
    let p = poincare_radius(16.0).exact;
    let l = lorentz_radius(8.0).exact;
    ProbeReport {
        probe: "radius_headline".into(),
        k: None,
        values: vec![
            ProbeValue::new("poincare_exact_k16", p, Some(37.0)),
            ProbeValue::new("lorentz_exact_k8", l, Some(18.0)),
        ],
        pass: (p - 37.0).abs() <= 0.6 && (l - 18.0).abs() <= 1.2,
        notes: "tolerances 0.6 and 1.2".into(),
    }
}

/// Ratios `gap(k) / gap(k + log₁₀ 2)`: ≈2 for the ball, ≈4 for the hyperboloid.
pub fn radius_order_report(ks: &[f64]) -> ProbeReport {
    let mut values = Vec::new();
    let mut pass = true;
    for &k in ks {
        let pr = poincare_radius(k).gap / poincare_radius(k + HALVING_STEP).gap;
        let lr = lorentz_radius(k).gap / lorentz_radius(k + HALVING_STEP).gap;
        pass &= within_factor(pr, 2.0, 0.3) && within_factor(lr, 4.0, 0.3);
        values.push(ProbeValue::new(&format!("poincare_ratio_k{k}"), pr, Some(2.0)));
        values.push(ProbeValue::new(&format!("lorentz_ratio_k{k}"), lr, Some(4.0)));
    }
    ProbeReport {
        probe: "radius_order".into(),
        k: None,
        values,
        pass,
        notes: "gap ratio when delta halves".into(),
    }
}

/// Largest integer `k` with `1 − 10⁻ᵏ ≠ 1` in binary64.
pub fn max_representable_k() -> i32 {
    (1..=40)
        .filter(|&k| 1.0 - 10f64.powi(-k) != 1.0)
        .max()
        .unwrap_or(0)
}

pub fn probe_poincare_boundary() -> ProbeReport {
    let k = max_representable_k();
    let spacing_below_one = f64::EPSILON / 2.0;
    ProbeReport {
        probe: "boundary".into(),
        k: None,
        values: vec![
            ProbeValue::new("max_k", k as f64, Some(16.0)),
            ProbeValue::new("spacing_below_one", spacing_below_one, Some(2f64.powi(-53))),
            ProbeValue::new("radius_at_max_k", poincare_radius(k as f64).exact, None),
        ],
        pass: k == 16,
        notes: "largest k with 1 - 10^-k distinct from 1".into(),
    }
}

/// `[x, x]` in binary64 for `x = (10ᵏ, sqrt(10²ᵏ − 1))`.
pub fn lorentz_constraint_value(k: f64) -> f64 {
    let x0 = 10f64.powf(k);
    let xr = (x0 * x0 - 1.0).sqrt();
    minkowski_unchecked(&[x0, xr], &[x0, xr])
}

/// The computed self-product, with the binary64 error bound `2ε·x₀²` it must respect.
pub fn probe_lorentz_constraint(k: f64) -> ProbeReport {
    let x0 = 10f64.powf(k);
    let value = lorentz_constraint_value(k);
    let bound = 2.0 * f64::EPSILON * x0 * x0;
    ProbeReport {
        probe: "constraint".into(),
        k: Some(k),
        values: vec![
            ProbeValue::new("self_product", value, Some(-1.0)),
            ProbeValue::new("error_bound", bound, None),
            ProbeValue::new("resolvable", f64::from(u8::from(bound < 1.0)), None),
        ],
        pass: (value + 1.0).abs() <= bound.max(0.0),
        notes: if bound < 1.0 {
            "constraint resolvable at this scale".into()
        } else {
            "constraint below binary64 resolution at this scale".into()
        },
    }
}

/// Outcome of one step from `(1 − 10⁻ᵏ, 0)` with `∇f = (−E, 0)` in each chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneStep {
    pub k: f64,
    pub eta: f64,
    pub e: f64,
    /// `1 − fl(1 − 10⁻ᵏ)`: the offset actually represented.
    pub delta: f64,
    pub poincare_displacement: f64,
    pub poincare_residual: f64,
    pub lorentz_displacement: f64,
    pub lorentz_residual: f64,
    pub param_displacement: f64,
    /// Against the leading term `ln(2/δ)`.
    pub param_residual: f64,
    /// Against `ln(2/δ) + (ηE − ½)δ`.
    pub param_residual_full: f64,
    /// Largest Euclidean gap between the three new points, in ball coordinates.
    pub consistency: f64,
}

/// Runs one binary64 step in each chart.
///
/// Predictions: the ball coordinate stays at `1 − δ` up to `O(ηEδ²)`; the
/// hyperboloid time coordinate becomes `1/δ − ½ + ηE + O(δ)`; the parameter
/// becomes `ln(2/δ) + (ηE − ½)δ + O(δ²)`.
pub fn one_step(k: f64, eta: f64, e: f64) -> Result<OneStep> {
    let x1 = 1.0 - pow10_neg(k);
    let delta = 1.0 - x1;
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("1 - 10^-{k} rounds to 1")));
    }
    let f = LinearObjective {
        coeffs: vec![-e, 0.0],
    };
    let x = PoincarePoint::new(vec![x1, 0.0])?;
    let xd = rsgd_step_poincare(&x, &f, eta)?;
    let poincare_displacement = xd.coords()[0] - x1;

    // φ(x) with 1 − ‖x‖² = δ(2 − δ) taken exactly rather than by cancellation
    let y = LorentzPoint::from_spatial(vec![2.0 * x1 / (delta * (2.0 - delta)), 0.0])?;
    let yl = rsgd_step_lorentz(&y, &f, eta)?;
    let lorentz_displacement = yl.time() - y.time();
    let lorentz_prediction = 1.0 / delta - 0.5 + eta * e;

    let z = param_from_poincare(&x)?;
    let zp = euclid_step(&z, &f, eta)?;
    let param_displacement = zp.z[0] - z.z[0];
    let leading = (2.0 / delta).ln();

    let from_lorentz = crate::geometry::lorentz_to_poincare(&yl)?;
    let from_param = crate::geometry::param_to_poincare(&zp);
    let pts = [xd.coords(), from_lorentz.coords(), from_param.coords()];
    let mut consistency = 0.0f64;
    for a in 0..3 {
        for b in a + 1..3 {
            consistency = consistency.max(crate::linalg::max_abs_diff(pts[a], pts[b]));
        }
    }

    Ok(OneStep {
        k,
        eta,
        e,
        delta,
        poincare_displacement,
        poincare_residual: poincare_displacement,
        lorentz_displacement,
        lorentz_residual: yl.time() - lorentz_prediction,
        param_displacement,
        param_residual: zp.z[0] - leading,
        param_residual_full: zp.z[0] - (leading + (eta * e - 0.5) * delta),
        consistency,
    })
}

pub fn one_step_report(k: f64, eta: f64, e: f64) -> Result<ProbeReport> {
    let s = one_step(k, eta, e)?;
    let d = s.delta;
    let ulp_one = f64::EPSILON;
    // residual bounds: the stated order with a generous constant plus rounding
    let ok_p = s.poincare_residual.abs() <= 4.0 * eta * e.abs() * d * d + ulp_one;
    let y0 = 1.0 / d;
    let ok_l = s.lorentz_residual.abs()
        <= 4.0 * (1.0 + eta * e.abs()).powi(2) * d + 16.0 * f64::EPSILON * y0;
    let ok_h = s.param_residual_full.abs()
        <= 4.0 * (1.0 + eta * e.abs()) * d * d + 16.0 * f64::EPSILON * (2.0 / d).ln();
    Ok(ProbeReport {
        probe: "one_step".into(),
        k: Some(k),
        values: vec![
            ProbeValue::new("delta", d, Some(pow10_neg(k))),
            ProbeValue::new("poincare_displacement", s.poincare_displacement, Some(eta * e * d * d)),
            ProbeValue::new("poincare_lost", f64::from(u8::from(s.poincare_displacement == 0.0)), None),
            ProbeValue::new("lorentz_displacement", s.lorentz_displacement, Some(eta * e)),
            ProbeValue::new("lorentz_residual", s.lorentz_residual, Some(0.0)),
            ProbeValue::new("param_displacement", s.param_displacement, Some(eta * e * d)),
            ProbeValue::new("param_residual", s.param_residual, Some((eta * e - 0.5) * d)),
            ProbeValue::new("param_residual_full", s.param_residual_full, Some(0.0)),
            ProbeValue::new("consistency", s.consistency, None),
        ],
        pass: ok_p && ok_l && ok_h,
        notes: format!("eta={eta} E={e}"),
    })
}

/// Residual ratios when `δ` halves, from base exponents `ks`.
/// Expected ≈4 for the ball and ≈2 for the hyperboloid and the parameter.
pub fn one_step_order_report(ks: &[f64], eta: f64, e: f64) -> Result<ProbeReport> {
    let mut values = Vec::new();
    let mut pass = true;
    for &k in ks {
        let a = one_step(k, eta, e)?;
        let b = one_step(k + HALVING_STEP, eta, e)?;
        let rp = a.poincare_residual / b.poincare_residual;
        let rl = a.lorentz_residual / b.lorentz_residual;
        let rh = a.param_residual / b.param_residual;
        pass &= within_factor(rp, 4.0, 0.3) && within_factor(rl, 2.0, 0.3) && within_factor(rh, 2.0, 0.3);
        values.push(ProbeValue::new(&format!("poincare_ratio_k{k}"), rp, Some(4.0)));
        values.push(ProbeValue::new(&format!("lorentz_ratio_k{k}"), rl, Some(2.0)));
        values.push(ProbeValue::new(&format!("param_ratio_k{k}"), rh, Some(2.0)));
    }
    Ok(ProbeReport {
        probe: "one_step_order".into(),
        k: None,
        values,
        pass,
        notes: format!("eta={eta} E={e}"),
    })
}

/// Gradient-norm ratios at `(1 − δ, 0)` for `∇f = (−E, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub delta: f64,
    pub poincare: f64,
    pub lorentz: f64,
    pub param: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSweep {
    pub rows: Vec<ScalingRow>,
    /// Log-log slopes against δ; absent when `E = 0`.
    pub slopes: Option<[f64; 3]>,
}

/// Tabulates `‖∇_D f‖/E`, `‖∇_L g‖/E` and `‖∇h‖/E` over `deltas`.
/// With `E = 0` the raw norms (all zero) are reported instead.
pub fn gradient_scaling_sweep(deltas: &[f64], e: f64) -> Result<ScalingSweep> {
    let f = LinearObjective {
        coeffs: vec![-e, 0.0],
    };
    let denom = if e == 0.0 { 1.0 } else { e.abs() };
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let x = PoincarePoint::new(vec![1.0 - delta, 0.0])?;
        let g = AmbientGradient::new(Chart::Poincare, f.coeffs.clone())?;
        let gd = riem_grad_poincare(&x, &g)?;
        let y = poincare_to_lorentz(&x)?;
        let gl = riem_grad_lorentz(&y, &f)?;
        let gh = grad_param(&param_from_poincare(&x)?, &f)?;
        rows.push(ScalingRow {
            delta,
            poincare: gd.euclidean_norm() / denom,
            lorentz: gl.euclidean_norm() / denom,
            param: crate::linalg::norm(&gh.components) / denom,
        });
    }
    let slopes = if e == 0.0 || rows.len() < 2 {
        None
    } else {
        let ld: Vec<f64> = rows.iter().map(|r| r.delta.ln()).collect();
        let fit = |sel: fn(&ScalingRow) -> f64| {
            let lr: Vec<f64> = rows.iter().map(|r| sel(r).ln()).collect();
            fit_slope(&ld, &lr)
        };
        Some([fit(|r| r.poincare), fit(|r| r.lorentz), fit(|r| r.param)])
    };
    Ok(ScalingSweep { rows, slopes })
}

pub const DEFAULT_DELTAS: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

pub fn scaling_report(deltas: &[f64], e: f64) -> Result<ProbeReport> {
    let sweep = gradient_scaling_sweep(deltas, e)?;
    let mut values = Vec::new();
    for r in &sweep.rows {
        values.push(ProbeValue::new(&format!("poincare_ratio_d{:e}", r.delta), r.poincare, None));
        values.push(ProbeValue::new(&format!("lorentz_ratio_d{:e}", r.delta), r.lorentz, None));
        values.push(ProbeValue::new(&format!("param_ratio_d{:e}", r.delta), r.param, None));
    }
    let pass = match sweep.slopes {
        Some([sp, sl, sh]) => {
            values.push(ProbeValue::new("slope_poincare", sp, Some(2.0)));
            values.push(ProbeValue::new("slope_lorentz", sl, Some(0.0)));
            values.push(ProbeValue::new("slope_param", sh, Some(1.0)));
            (sp - 2.0).abs() <= 0.1 && sl.abs() <= 0.1 && (sh - 1.0).abs() <= 0.1
        }
        None => sweep
            .rows
            .iter()
            .all(|r| r.poincare == 0.0 && r.lorentz == 0.0 && r.param == 0.0),
    };
    Ok(ProbeReport {
        probe: "scaling".into(),
        k: None,
        values,
        pass,
        notes: format!("E={e}"),
    })
}

/// Largest `t` on a grid of step 1/64 for which `tanh(t) < 1` in binary64,
/// and the matching radius `2t` that the ball exponential map still resolves.
pub fn tanh_saturation() -> (f64, f64) {
    let mut t = 0.0;
    while (t + 1.0 / 64.0f64).tanh() < 1.0 {
        t += 1.0 / 64.0;
    }
    (t, 2.0 * t)
}

pub fn tanh_report() -> ProbeReport {
    let (t, r) = tanh_saturation();
    let z = EuclideanParam::new(vec![r + 1.0, 0.0]);
    let saturated = crate::geometry::param_to_poincare(&z).is_saturated();
    ProbeReport {
        probe: "tanh_saturation".into(),
        k: None,
        values: vec![
            ProbeValue::new("last_t_below_one", t, None),
            ProbeValue::new("param_radius_limit", r, None),
            ProbeValue::new("saturated_beyond", f64::from(u8::from(saturated)), Some(1.0)),
        ],
        pass: saturated && t > 17.0 && t < 20.0,
        notes: "measured crossover of tanh to 1".into(),
    }
}

/// Probe families selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Radius,
    Boundary,
    Constraint,
    OneStep,
    Scaling,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "radius" => Suite::Radius,
            "boundary" => Suite::Boundary,
            "constraint" => Suite::Constraint,
            "one-step" => Suite::OneStep,
            "scaling" => Suite::Scaling,
            "all" => Suite::All,
            other => return Err(Error::Parse(format!("unknown suite `{other}`"))),
        })
    }
}

/// Runs a suite. `k` overrides the default exponents where a suite takes one.
pub fn run_suite(suite: Suite, k: Option<f64>, eta: f64) -> Result<Vec<ProbeReport>> {
    let mut out = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Radius {
        out.push(radius_headline_report());
        out.push(radius_order_report(&[2.0, 4.0, 6.0]));
        if let Some(k) = k {
            out.push(radius_report(k));
        }
    }
    if all || suite == Suite::Boundary {
        out.push(probe_poincare_boundary());
        out.push(tanh_report());
    }
    if all || suite == Suite::Constraint {
        match k {
            Some(k) => out.push(probe_lorentz_constraint(k)),
            None => {
                for k in [0.0, 2.0, 8.0] {
                    out.push(probe_lorentz_constraint(k));
                }
            }
        }
    }
    if all || suite == Suite::OneStep {
        out.push(one_step_report(k.unwrap_or(8.0), eta, 1.0)?);
        out.push(one_step_order_report(&[2.0, 4.0, 6.0], eta.max(f64::MIN_POSITIVE), 1.0)?);
    }
    if all || suite == Suite::Scaling {
        out.push(scaling_report(&DEFAULT_DELTAS, 1.0)?);
    }
    Ok(out)
}
