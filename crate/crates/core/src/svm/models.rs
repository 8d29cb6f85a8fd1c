//! Binary large-margin classifiers: Euclidean, Lorentz with projected descent,
//! and the reparametrized Lorentz model.
//!
//! Labels are ±1. The Lorentz decision value is `−[w, x]`, so a positive value
//! means the positive class.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{minkowski_unchecked, LorentzPoint};
use crate::linalg::{dot, norm, norm_sq};
use crate::rng::{stream, Purpose};

/// Unconstrained hyperplane parameters: normal direction `z`, signed offset `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneParam {
    pub z: Vec<f64>,
    pub a: f64,
}

/// Minkowski normal `w` of a hyperplane `{x : [w, x] = 0}`; feasible when `[w, w] > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzNormal {
    pub w: Vec<f64>,
}

impl LorentzNormal {
    pub fn self_product(&self) -> f64 {
        minkowski_unchecked(&self.w, &self.w)
    }
}

/// `w = (sinh(a)‖z‖, cosh(a) z)`, so `[w, w] = ‖z‖²`.
pub fn normal_from_param(h: &HyperplaneParam) -> LorentzNormal {
    let nz = norm(&h.z);
    let mut w = Vec::with_capacity(h.z.len() + 1);
    w.push(h.a.sinh() * nz);
    w.extend(h.z.iter().map(|c| h.a.cosh() * c));
    LorentzNormal { w }
}

/// `−[w, x]`
pub fn decision_lsvm(w: &LorentzNormal, x: &LorentzPoint) -> f64 {
    -minkowski_unchecked(&w.w, &x.coords())
}

/// `sinh(a)‖z‖x₀ − cosh(a)⟨z, x_r⟩`, equal to `−[w, x]` for `w = normal_from_param(h)`.
pub fn raw_decision_param(h: &HyperplaneParam, x: &LorentzPoint) -> f64 {
    h.a.sinh() * norm(&h.z) * x.time() - h.a.cosh() * dot(&h.z, x.spatial())
}

/// `‖w‖ arsinh(−[w, x]/‖w‖)` with `‖w‖ = sqrt([w, w])`; the arsinh term is the
/// signed distance from `x` to the hyperplane.
pub fn normed_distance(raw: f64, w_norm: f64) -> f64 {
    (raw / w_norm).asinh() * w_norm
}

/// Normed signed distance for the reparametrized model. Needs `‖z‖ > 1e-12`.
pub fn decision_lsvmpp(h: &HyperplaneParam, x: &LorentzPoint) -> Result<f64> {
    let nz = norm(&h.z);
    if !(nz > 1e-12) {
        return Err(Error::Degenerate(format!("hyperplane normal norm {nz}")));
    }
    Ok(normed_distance(raw_decision_param(h, x), nz))
}

/// `max(0, arsinh(1) − arsinh(m))`
pub fn hinge_lorentz(m: f64) -> f64 {
    (1f64.asinh() - m.asinh()).max(0.0)
}

/// Subgradient of [`hinge_lorentz`], taking 0 at the kink.
pub fn hinge_lorentz_slope(m: f64) -> f64 {
    if m < 1.0 {
        -1.0 / (1.0 + m * m).sqrt()
    } else {
        0.0
    }
}

/// `½[w, w] + C Σ l(yᵢ·(−[w, xᵢ]))`
pub fn lsvm_objective(w: &LorentzNormal, xs: &[LorentzPoint], ys: &[f64], c: f64) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| hinge_lorentz(y * decision_lsvm(w, x)))
        .sum();
    0.5 * w.self_product() + c * hinge
}

pub fn lsvm_gradient(w: &LorentzNormal, xs: &[LorentzPoint], ys: &[f64], c: f64) -> Vec<f64> {
    let mut g = w.w.clone();
    g[0] = -g[0];
    for (x, y) in xs.iter().zip(ys) {
        let s = hinge_lorentz_slope(y * decision_lsvm(w, x));
        if s != 0.0 {
            // ∂(−y[w, x])/∂w = y (x₀, −x_r)
            g[0] += c * s * y * x.time();
            for (gi, xi) in g[1..].iter_mut().zip(x.spatial()) {
                *gi -= c * s * y * xi;
            }
        }
    }
    g
}

/// `½‖z‖² + C Σ l(yᵢ(sinh(a)‖z‖x₀ − cosh(a)⟨z, x_r⟩))`
pub fn lsvmpp_objective(h: &HyperplaneParam, xs: &[LorentzPoint], ys: &[f64], c: f64) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| hinge_lorentz(y * raw_decision_param(h, x)))
        .sum();
    0.5 * norm_sq(&h.z) + c * hinge
}

/// Gradient in `(z, a)`; the last component is `∂/∂a`.
pub fn lsvmpp_gradient(h: &HyperplaneParam, xs: &[LorentzPoint], ys: &[f64], c: f64) -> Vec<f64> {
    let nz = norm(&h.z);
    let (sh, ch) = (h.a.sinh(), h.a.cosh());
    let mut g = h.z.clone();
    g.push(0.0);
    let n = h.z.len();
    for (x, y) in xs.iter().zip(ys) {
        let s = hinge_lorentz_slope(y * raw_decision_param(h, x));
        if s == 0.0 {
            continue;
        }
        let x0 = x.time();
        let xr = x.spatial();
        let k = c * s * y;
        for i in 0..n {
            let unit = if nz > 0.0 { h.z[i] / nz } else { 0.0 };
            g[i] += k * (sh * x0 * unit - ch * xr[i]);
        }
        g[n] += k * (ch * nz * x0 - sh * dot(&h.z, xr));
    }
    g
}

/// `½‖w‖² + C Σ max(0, 1 − yᵢ(⟨w, xᵢ⟩ + b))`
pub fn esvm_objective(w: &[f64], b: f64, xs: &[Vec<f64>], ys: &[f64], c: f64) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (1.0 - y * (dot(w, x) + b)).max(0.0))
        .sum();
    0.5 * norm_sq(w) + c * hinge
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub c: f64,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
}

fn check_inputs(n_x: usize, ys: &[f64], cfg: &TrainConfig) -> Result<()> {
    if n_x != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: n_x,
            got: ys.len(),
        });
    }
    if ys.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::InvalidInput("binary labels must be +1 or -1".into()));
    }
    if !(cfg.lr > 0.0) || !cfg.lr.is_finite() || !(cfg.c >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "need lr > 0 and C >= 0, got lr={} C={}",
            cfg.lr, cfg.c
        )));
    }
    Ok(())
}

fn small_normal(dim: usize, seed: u64, purpose: Purpose) -> Vec<f64> {
    let mut rng = stream(seed, purpose);
    let d = Normal::new(0.0, 0.1).expect("valid normal");
    (0..dim).map(|_| d.sample(&mut rng)).collect()
}

/// Feasibility margin for the Lorentz normal.
pub const FEASIBILITY_EPS: f64 = 1e-8;

/// Moves `w` back inside `[w, w] > ε` by changing only its time component.
pub fn project_feasible(w: &mut LorentzNormal) {
    if w.self_product() > FEASIBILITY_EPS {
        return;
    }
    let r2 = norm_sq(&w.w[1..]);
    w.w[0] = if r2 <= FEASIBILITY_EPS {
        0.0
    } else {
        w.w[0].signum() * (r2 - FEASIBILITY_EPS).sqrt()
    };
}

/// Projected subgradient descent on the Lorentz objective, full batch.
pub fn train_lsvm(xs: &[LorentzPoint], ys: &[f64], cfg: &TrainConfig) -> Result<LorentzNormal> {
    check_inputs(xs.len(), ys, cfg)?;
    let dim = xs.first().map(|x| x.dim()).unwrap_or(1);
    let mut w = LorentzNormal {
        w: std::iter::once(0.0)
            .chain(small_normal(dim, cfg.seed, Purpose::Init))
            .collect(),
    };
    project_feasible(&mut w);
    for epoch in 0..cfg.epochs {
        let g = lsvm_gradient(&w, xs, ys, cfg.c);
        for (wi, gi) in w.w.iter_mut().zip(&g) {
            *wi -= cfg.lr * gi;
        }
        project_feasible(&mut w);
        let obj = lsvm_objective(&w, xs, ys, cfg.c);
        if !obj.is_finite() {
            return Err(Error::NumericalAbort(format!(
                "Lorentz SVM objective is {obj} at epoch {epoch}"
            )));
        }
    }
    Ok(w)
}

/// Unconstrained subgradient descent on `(z, a)`, full batch.
pub fn train_lsvmpp(xs: &[LorentzPoint], ys: &[f64], cfg: &TrainConfig) -> Result<HyperplaneParam> {
    check_inputs(xs.len(), ys, cfg)?;
    let dim = xs.first().map(|x| x.dim()).unwrap_or(1);
    let mut h = HyperplaneParam {
        z: small_normal(dim, cfg.seed, Purpose::Init),
        a: 0.0,
    };
    let mut reseed = stream(cfg.seed, Purpose::Reseed);
    for epoch in 0..cfg.epochs {
        if norm(&h.z) < 1e-12 {
            h.z = (0..dim).map(|_| reseed.random_range(-0.1..0.1)).collect();
        }
        let g = lsvmpp_gradient(&h, xs, ys, cfg.c);
        for (zi, gi) in h.z.iter_mut().zip(&g) {
            *zi -= cfg.lr * gi;
        }
        h.a -= cfg.lr * g[dim];
        let obj = lsvmpp_objective(&h, xs, ys, cfg.c);
        if !obj.is_finite() {
            return Err(Error::NumericalAbort(format!(
                "reparametrized SVM objective is {obj} at epoch {epoch}"
            )));
        }
    }
    Ok(h)
}

/// Linear soft-margin SVM with intercept by subgradient descent; returns the
/// iterate with the lowest objective.
pub fn train_esvm(xs: &[Vec<f64>], ys: &[f64], cfg: &TrainConfig) -> Result<(Vec<f64>, f64)> {
    check_inputs(xs.len(), ys, cfg)?;
    let dim = xs.first().map(|x| x.len()).unwrap_or(1);
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut best = (w.clone(), b, esvm_objective(&w, b, xs, ys, cfg.c));
    for epoch in 0..cfg.epochs {
        let mut gw = w.clone();
        let mut gb = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            if y * (dot(&w, x) + b) < 1.0 {
                for (g, xi) in gw.iter_mut().zip(x) {
                    *g -= cfg.c * y * xi;
                }
                gb -= cfg.c * y;
            }
        }
        for (wi, gi) in w.iter_mut().zip(&gw) {
            *wi -= cfg.lr * gi;
        }
        b -= cfg.lr * gb;
        let obj = esvm_objective(&w, b, xs, ys, cfg.c);
        if !obj.is_finite() {
            return Err(Error::NumericalAbort(format!(
                "Euclidean SVM objective is {obj} at epoch {epoch}"
            )));
        }
        if obj < best.2 {
            best = (w.clone(), b, obj);
        }
    }
    Ok((best.0, best.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{param_to_lorentz, EuclideanParam};
    use crate::optim::finite_diff_grad;

    fn lp(z: &[f64]) -> LorentzPoint {
        param_to_lorentz(&EuclideanParam::new(z.to_vec())).unwrap()
    }

    /// Two clusters on either side of the `x₁ = 0` hyperplane.
    fn toy() -> (Vec<LorentzPoint>, Vec<f64>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..10 {
            let t = i as f64 * 0.05;
            xs.push(lp(&[0.6 + t, 0.3 - t]));
            ys.push(1.0);
            xs.push(lp(&[-0.6 - t, -0.3 + t]));
            ys.push(-1.0);
        }
        (xs, ys)
    }

    fn cfg(c: f64, lr: f64, epochs: usize) -> TrainConfig {
        TrainConfig { c, lr, epochs, seed: 3 }
    }

    #[test]
    fn normal_examples() {
        let w = normal_from_param(&HyperplaneParam { z: vec![1.0, 2.0], a: 0.0 });
        assert_eq!(w.w, vec![0.0, 1.0, 2.0]);
        let w = normal_from_param(&HyperplaneParam { z: vec![1.0, 0.0], a: 1.0 });
        assert!((w.w[0] - 1f64.sinh()).abs() < 1e-15 && (w.w[1] - 1f64.cosh()).abs() < 1e-15);
        assert!((w.self_product() - 1.0).abs() < 1e-9);
        let w = normal_from_param(&HyperplaneParam { z: vec![0.0, 0.0], a: 0.7 });
        assert!(w.w.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn decision_examples() {
        let h = HyperplaneParam { z: vec![1.0, 0.0], a: 0.0 };
        let w = normal_from_param(&h);
        let on = lp(&[0.0, 1.3]);
        assert!(decision_lsvm(&w, &on).abs() < 1e-15);
        assert!(decision_lsvmpp(&h, &on).unwrap().abs() < 1e-15);
        let x = lp(&[0.4, -0.2]);
        let neg = LorentzNormal { w: w.w.iter().map(|c| -c).collect() };
        assert_eq!(decision_lsvm(&neg, &x), -decision_lsvm(&w, &x));
        let h = HyperplaneParam { z: vec![0.3, -1.1], a: 0.4 };
        let w = normal_from_param(&h);
        let x = lp(&[1.2, 0.5]);
        let expected = h.a.sinh() * norm(&h.z) * x.time() - h.a.cosh() * dot(&h.z, x.spatial());
        assert!((decision_lsvm(&w, &x) - expected).abs() < 1e-12);
        assert!(decision_lsvmpp(&HyperplaneParam { z: vec![0.0, 0.0], a: 0.0 }, &x).is_err());
    }

    #[test]
    fn lsvmpp_decision_scales_with_z() {
        let h = HyperplaneParam { z: vec![0.3, -1.1], a: 0.4 };
        let x = lp(&[1.2, 0.5]);
        let base = decision_lsvmpp(&h, &x).unwrap();
        let scaled = HyperplaneParam { z: h.z.iter().map(|c| 3.0 * c).collect(), a: h.a };
        assert!((decision_lsvmpp(&scaled, &x).unwrap() - 3.0 * base).abs() < 1e-12);
        let flipped = HyperplaneParam { z: h.z.iter().map(|c| -c).collect(), a: -h.a };
        assert!((decision_lsvmpp(&flipped, &x).unwrap() + base).abs() < 1e-12);
    }

    #[test]
    fn hinge_examples() {
        assert_eq!(hinge_lorentz(1.0), 0.0);
        assert!((hinge_lorentz(0.0) - 0.881373587019543).abs() < 1e-15);
        assert_eq!(hinge_lorentz(1e300), 0.0);
        assert_eq!(hinge_lorentz_slope(1.0), 0.0);
    }

    #[test]
    fn separable_toy_is_learned() {
        let (xs, ys) = toy();
        let w = train_lsvm(&xs, &ys, &cfg(0.5, 0.01, 300)).unwrap();
        let acc = xs.iter().zip(&ys).filter(|(x, y)| decision_lsvm(&w, x) * **y > 0.0).count();
        assert_eq!(acc, xs.len());
        let h = train_lsvmpp(&xs, &ys, &cfg(0.5, 0.01, 300)).unwrap();
        let acc = xs.iter().zip(&ys).filter(|(x, y)| raw_decision_param(&h, x) * **y > 0.0).count();
        assert_eq!(acc, xs.len());
    }

    #[test]
    fn lsvm_feasible_and_shrinking_without_data_term() {
        let (xs, ys) = toy();
        let c = cfg(0.0, 0.05, 1);
        let mut w = train_lsvm(&xs, &ys, &c).unwrap();
        let mut prev = lsvm_objective(&w, &xs, &ys, 0.0);
        for _ in 0..200 {
            let g = lsvm_gradient(&w, &xs, &ys, 0.0);
            for (wi, gi) in w.w.iter_mut().zip(&g) {
                *wi -= c.lr * gi;
            }
            project_feasible(&mut w);
            let obj = lsvm_objective(&w, &xs, &ys, 0.0);
            assert!(w.self_product() > 0.0);
            assert!(obj <= prev + 1e-15);
            prev = obj;
        }
    }

    #[test]
    fn lsvmpp_without_data_shrinks_z() {
        let h = train_lsvmpp(&[], &[], &cfg(1.0, 0.1, 200)).unwrap();
        assert!(norm(&h.z) < 1e-8, "{:?}", h.z);
    }

    #[test]
    fn projection_examples() {
        let mut w = LorentzNormal { w: vec![2.0, 1.0, 0.0] };
        project_feasible(&mut w);
        assert!(w.self_product() > 0.0 && w.w[0] > 0.0);
        let mut w = LorentzNormal { w: vec![-2.0, 0.0, 0.0] };
        project_feasible(&mut w);
        assert_eq!(w.w[0], 0.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (xs, ys) = toy();
        let mut rng = stream(17, Purpose::Init);
        let mut checked = 0;
        while checked < 50 {
            let z = vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let a = rng.random_range(-1.0..1.0);
            let h = HyperplaneParam { z: z.clone(), a };
            let w = normal_from_param(&h);
            // skip configurations within a finite-difference step of a kink
            let near_kink = xs.iter().zip(&ys).any(|(x, y)| (y * decision_lsvm(&w, x) - 1.0).abs() < 1e-3);
            if near_kink {
                continue;
            }
            let analytic = lsvm_gradient(&w, &xs, &ys, 0.7);
            let fd = finite_diff_grad(|p| lsvm_objective(&LorentzNormal { w: p.to_vec() }, &xs, &ys, 0.7), &w.w, 1e-6);
            let scale = norm(&fd).max(1.0);
            assert!(crate::linalg::max_abs_diff(&analytic, &fd) <= 1e-4 * scale);

            let mut p = z.clone();
            p.push(a);
            let analytic = lsvmpp_gradient(&h, &xs, &ys, 0.7);
            let fd = finite_diff_grad(
                |p| lsvmpp_objective(&HyperplaneParam { z: p[..2].to_vec(), a: p[2] }, &xs, &ys, 0.7),
                &p,
                1e-6,
            );
            let scale = norm(&fd).max(1.0);
            assert!(crate::linalg::max_abs_diff(&analytic, &fd) <= 1e-4 * scale);
            checked += 1;
        }
    }

    #[test]
    fn objectives_agree_under_substitution() {
        let (xs, ys) = toy();
        let h = HyperplaneParam { z: vec![0.8, -0.4], a: 0.3 };
        let a = lsvmpp_objective(&h, &xs, &ys, 0.5);
        let b = lsvm_objective(&normal_from_param(&h), &xs, &ys, 0.5);
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn esvm_one_dimensional() {
        let xs: Vec<Vec<f64>> = [-2.0, -1.5, -1.0, 1.0, 1.5, 2.0].iter().map(|&v| vec![v]).collect();
        let ys = [-1.0, -1.0, -1.0, 1.0, 1.0, 1.0];
        let (w, b) = train_esvm(&xs, &ys, &cfg(5.0, 1e-2, 500)).unwrap();
        assert!(w[0] > 0.0);
        for (x, y) in xs.iter().zip(&ys) {
            assert!((w[0] * x[0] + b) * y > 0.0);
        }
    }

    #[test]
    fn esvm_xor_cannot_exceed_three_quarters() {
        let xs = vec![vec![1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0], vec![-1.0, 1.0]];
        let ys = [1.0, 1.0, -1.0, -1.0];
        let (w, b) = train_esvm(&xs, &ys, &cfg(5.0, 1e-2, 500)).unwrap();
        let correct = xs.iter().zip(&ys).filter(|(x, y)| (dot(&w, x) + b) * **y > 0.0).count();
        assert!(correct <= 3);
    }

    /// For fixed `w` the best intercept sits at a hinge breakpoint; a
    /// shrinking grid over `w` then brackets the convex minimum.
    fn grid_reference(xs: &[Vec<f64>], ys: &[f64], c: f64) -> f64 {
        let best_b = |w: &[f64]| {
            xs.iter()
                .zip(ys)
                .map(|(x, y)| y - dot(w, x))
                .map(|b| esvm_objective(w, b, xs, ys, c))
                .fold(f64::INFINITY, f64::min)
        };
        let (mut cx, mut cy, mut span) = (0.0, 0.0, 8.0);
        let mut best = f64::INFINITY;
        for _ in 0..30 {
            let mut arg = (cx, cy);
            for i in -10..=10 {
                for j in -10..=10 {
                    let w = [cx + span * i as f64 / 10.0, cy + span * j as f64 / 10.0];
                    let v = best_b(&w);
                    if v < best {
                        best = v;
                        arg = (w[0], w[1]);
                    }
                }
            }
            cx = arg.0;
            cy = arg.1;
            span *= 0.5;
        }
        best
    }

    #[test]
    fn esvm_matches_reference_solution() {
        let mut rng = stream(23, Purpose::Dataset);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..20 {
            let y = if i % 2 == 0 { 1.0 } else { -1.0 };
            xs.push(vec![rng.random_range(-1.0..1.0) + 0.4 * y, rng.random_range(-1.0..1.0) - 0.2 * y]);
            ys.push(y);
        }
        let reference = grid_reference(&xs, &ys, 5.0);
        let (w, b) = train_esvm(&xs, &ys, &cfg(5.0, 1e-3, 20000)).unwrap();
        let got = esvm_objective(&w, b, &xs, &ys, 5.0);
        assert!(got <= reference * 1.02, "{got} vs {reference}");
    }
}
