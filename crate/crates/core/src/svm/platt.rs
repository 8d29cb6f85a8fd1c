//! Sigmoid calibration of decision values, `P(y = 1 | f) = 1/(1 + exp(A f + B))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattCalibration {
    pub a: f64,
    pub b: f64,
}

impl PlattCalibration {
    pub fn probability(&self, f: f64) -> f64 {
        let t = self.a * f + self.b;
        if t >= 0.0 {
            let e = (-t).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + t.exp())
        }
    }
}

pub const PLATT_MAX_ITER: usize = 100;
pub const PLATT_GRAD_TOL: f64 = 1e-10;
const MIN_STEP: f64 = 1e-10;
const HESSIAN_RIDGE: f64 = 1e-12;

fn nll(decisions: &[f64], targets: &[f64], a: f64, b: f64) -> f64 {
    decisions
        .iter()
        .zip(targets)
        .map(|(&f, &t)| {
            let s = f * a + b;
            if s >= 0.0 {
                t * s + (-s).exp().ln_1p()
            } else {
                (t - 1.0) * s + s.exp().ln_1p()
            }
        })
        .sum()
}

/// Newton's method with backtracking on the regularized-target log-likelihood.
pub fn platt_fit(decisions: &[f64], labels: &[f64]) -> Result<PlattCalibration> {
    if decisions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: decisions.len(),
            got: labels.len(),
        });
    }
    if decisions.is_empty() {
        return Err(Error::InvalidInput("no decision values to calibrate".into()));
    }
    if decisions.iter().any(|f| !f.is_finite()) {
        return Err(Error::NumericalAbort("non-finite decision value".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y > 0.0).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = labels.iter().map(|&y| if y > 0.0 { hi } else { lo }).collect();

    let mut a = 0.0;
    let mut b = ((n_neg + 1.0) / (n_pos + 1.0)).ln();
    let mut fval = nll(decisions, &targets, a, b);
    for _ in 0..PLATT_MAX_ITER {
        let (mut h11, mut h22, mut h21) = (HESSIAN_RIDGE, HESSIAN_RIDGE, 0.0);
        let (mut g1, mut g2) = (0.0, 0.0);
        for (&f, &t) in decisions.iter().zip(&targets) {
            let s = f * a + b;
            let (p, q) = if s >= 0.0 {
                let e = (-s).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = s.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < PLATT_GRAD_TOL && g2.abs() < PLATT_GRAD_TOL {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = nll(decisions, &targets, na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < MIN_STEP {
            break;
        }
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NumericalAbort(format!("calibration diverged: A={a} B={b}")));
    }
    Ok(PlattCalibration { a, b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use rand::Rng;

    #[test]
    fn symmetric_data_gives_zero_offset() {
        let d = [1.0, 1.0, -1.0, -1.0, 0.5, -0.5];
        let y = [1.0, 1.0, -1.0, -1.0, 1.0, -1.0];
        let p = platt_fit(&d, &y).unwrap();
        assert!(p.b.abs() < 1e-9, "{p:?}");
        assert!(p.a < 0.0);
        assert!(p.a.is_finite());
    }

    #[test]
    fn all_positive_labels() {
        let d = [0.3, -1.2, 2.0, 0.0, 5.0];
        let y = [1.0; 5];
        let p = platt_fit(&d, &y).unwrap();
        let hi = 6.0 / 7.0;
        for f in d {
            assert!(p.probability(f) >= hi - 1e-6, "{}", p.probability(f));
        }
    }

    #[test]
    fn recovers_generator() {
        let (a, b) = (-1.7, 0.4);
        let truth = PlattCalibration { a, b };
        let mut rng = stream(5, Purpose::Dataset);
        let mut d = Vec::new();
        let mut y = Vec::new();
        for _ in 0..10_000 {
            let f: f64 = rng.random_range(-3.0..3.0);
            d.push(f);
            y.push(if rng.random::<f64>() < truth.probability(f) { 1.0 } else { -1.0 });
        }
        let p = platt_fit(&d, &y).unwrap();
        assert!((p.a - a).abs() <= 0.05 * a.abs(), "{p:?}");
        assert!((p.b - b).abs() <= 0.05 * b.abs().max(1.0), "{p:?}");
    }

    #[test]
    fn monotone_when_slope_negative() {
        let d = [-2.0, -0.3, 0.1, 0.4, 1.5, 3.0];
        let y = [-1.0, -1.0, 1.0, -1.0, 1.0, 1.0];
        let p = platt_fit(&d, &y).unwrap();
        assert!(p.a < 0.0);
        let probs: Vec<f64> = d.iter().map(|&f| p.probability(f)).collect();
        assert!(probs.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn separable_fit_stays_finite() {
        let d = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0];
        let y = [-1.0, -1.0, -1.0, 1.0, 1.0, 1.0];
        let p = platt_fit(&d, &y).unwrap();
        assert!(p.a.is_finite() && p.b.is_finite());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(platt_fit(&[], &[]).is_err());
        assert!(platt_fit(&[1.0], &[1.0, -1.0]).is_err());
        assert!(platt_fit(&[f64::NAN], &[1.0]).is_err());
    }
}
