//! One-vs-all training, calibrated prediction and scoring.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{stratified_split, LabeledDataset};
use super::models::{
    decision_lsvm, normed_distance, raw_decision_param, train_esvm, train_lsvm, train_lsvmpp,
    HyperplaneParam, LorentzNormal, TrainConfig,
};
use super::platt::{platt_fit, PlattCalibration};
use crate::error::{Error, Result};
use crate::geometry::{lorentz_to_poincare, LorentzPoint};
use crate::linalg::{dot, norm, norm_sq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Esvm,
    Lsvm,
    Lsvmpp,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Esvm => "esvm",
            Algorithm::Lsvm => "lsvm",
            Algorithm::Lsvmpp => "lsvmpp",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "esvm" => Ok(Algorithm::Esvm),
            "lsvm" => Ok(Algorithm::Lsvm),
            "lsvmpp" => Ok(Algorithm::Lsvmpp),
            _ => Err(Error::Parse(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// Which decision value feeds the calibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionMode {
    Raw,
    Arcsinh,
}

impl fmt::Display for DecisionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecisionMode::Raw => "raw",
            DecisionMode::Arcsinh => "arcsinh",
        })
    }
}

impl FromStr for DecisionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(DecisionMode::Raw),
            "arcsinh" => Ok(DecisionMode::Arcsinh),
            _ => Err(Error::Parse(format!("unknown decision mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "lowercase")]
pub enum BinaryModel {
    Esvm { w: Vec<f64>, b: f64 },
    Lsvm(LorentzNormal),
    Lsvmpp(HyperplaneParam),
}

impl BinaryModel {
    /// Positive values favour the class the model was trained to detect.
    /// The Euclidean model ignores `mode`.
    pub fn decision(&self, x: &LorentzPoint, mode: DecisionMode) -> Result<f64> {
        match self {
            BinaryModel::Esvm { w, b } => {
                let p = lorentz_to_poincare(x)?;
                Ok(dot(w, p.coords()) + b)
            }
            BinaryModel::Lsvm(w) => {
                let raw = decision_lsvm(w, x);
                match mode {
                    DecisionMode::Raw => Ok(raw),
                    DecisionMode::Arcsinh => {
                        let s = w.self_product();
                        if !(s > 0.0) {
                            return Err(Error::Degenerate(format!("[w, w] = {s}")));
                        }
                        Ok(normed_distance(raw, s.sqrt()))
                    }
                }
            }
            BinaryModel::Lsvmpp(h) => {
                let raw = raw_decision_param(h, x);
                match mode {
                    DecisionMode::Raw => Ok(raw),
                    DecisionMode::Arcsinh => {
                        let nz = norm(&h.z);
                        if !(nz > 1e-12) {
                            return Err(Error::Degenerate(format!("hyperplane normal norm {nz}")));
                        }
                        Ok(normed_distance(raw, nz))
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub algo: Algorithm,
    pub c: f64,
    /// `None` picks the scale-dependent default.
    pub lr: Option<f64>,
    pub epochs: usize,
    pub seed: u64,
    pub mode: DecisionMode,
}

impl SvmConfig {
    pub fn defaults(algo: Algorithm) -> Self {
        Self {
            algo,
            c: match algo {
                Algorithm::Esvm => 5.0,
                _ => 0.5,
            },
            lr: None,
            epochs: 500,
            seed: 0,
            mode: DecisionMode::Arcsinh,
        }
    }
}

pub const BASE_LR: f64 = 1e-3;

/// `1e-3` for the Euclidean model, `1e-3 / mean‖x‖²` over ambient Lorentz
/// coordinates for the others.
pub fn default_lr(algo: Algorithm, data: &LabeledDataset) -> f64 {
    match algo {
        Algorithm::Esvm => BASE_LR,
        _ if data.is_empty() => BASE_LR,
        _ => {
            let mean = data.points.iter().map(|p| norm_sq(&p.coords())).sum::<f64>()
                / data.len() as f64;
            BASE_LR / mean
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneVsAll {
    pub mode: DecisionMode,
    pub models: Vec<(BinaryModel, PlattCalibration)>,
}

fn binary_labels(labels: &[usize], class: usize) -> Vec<f64> {
    labels.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect()
}

fn train_binary(data: &LabeledDataset, ys: &[f64], algo: Algorithm, tc: &TrainConfig) -> Result<BinaryModel> {
    Ok(match algo {
        Algorithm::Esvm => {
            let (w, b) = train_esvm(&data.poincare_view()?, ys, tc)?;
            BinaryModel::Esvm { w, b }
        }
        Algorithm::Lsvm => BinaryModel::Lsvm(train_lsvm(&data.points, ys, tc)?),
        Algorithm::Lsvmpp => BinaryModel::Lsvmpp(train_lsvmpp(&data.points, ys, tc)?),
    })
}

/// One calibrated binary model per class, trained in parallel. Class `c`
/// uses seed `cfg.seed + c`.
pub fn train_one_vs_all(data: &LabeledDataset, cfg: &SvmConfig) -> Result<OneVsAll> {
    if data.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    let lr = cfg.lr.unwrap_or_else(|| default_lr(cfg.algo, data));
    let models = (0..data.n_classes)
        .into_par_iter()
        .map(|class| {
            let ys = binary_labels(&data.labels, class);
            let tc = TrainConfig {
                c: cfg.c,
                lr,
                epochs: cfg.epochs,
                seed: cfg.seed.wrapping_add(class as u64),
            };
            let model = train_binary(data, &ys, cfg.algo, &tc)?;
            let decisions = data
                .points
                .iter()
                .map(|x| model.decision(x, cfg.mode))
                .collect::<Result<Vec<_>>>()?;
            let cal = platt_fit(&decisions, &ys)?;
            Ok((model, cal))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OneVsAll { mode: cfg.mode, models })
}

/// Per-class calibrated probabilities and the winning class; ties go to the
/// lowest class id.
pub fn predict_multiclass(ova: &OneVsAll, x: &LorentzPoint) -> Result<(usize, Vec<f64>)> {
    let probs = ova
        .models
        .iter()
        .map(|(m, cal)| m.decision(x, ova.mode).map(|f| cal.probability(f)))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    Ok((best, probs))
}

/// Accuracy and macro F1 over `n_classes` classes.
pub fn evaluate(predictions: &[usize], labels: &[usize], n_classes: usize) -> Result<(f64, f64)> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: predictions.len(),
        });
    }
    if labels.is_empty() || n_classes == 0 {
        return Err(Error::InvalidInput("nothing to evaluate".into()));
    }
    let correct = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    let mut f1_sum = 0.0;
    for c in 0..n_classes {
        let tp = predictions.iter().zip(labels).filter(|&(&p, &l)| p == c && l == c).count();
        let pred_c = predictions.iter().filter(|&&p| p == c).count();
        let true_c = labels.iter().filter(|&&l| l == c).count();
        if tp > 0 {
            f1_sum += 2.0 * tp as f64 / (pred_c + true_c) as f64;
        }
    }
    Ok((correct as f64 / labels.len() as f64, f1_sum / n_classes as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmReport {
    pub algo: Algorithm,
    pub mode: DecisionMode,
    pub c: f64,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub train_accuracy: f64,
    pub accuracy: f64,
    pub macro_f1: f64,
}

pub const TEST_FRACTION: f64 = 0.2;

fn predict_all(ova: &OneVsAll, data: &LabeledDataset) -> Result<Vec<usize>> {
    data.points.iter().map(|x| predict_multiclass(ova, x).map(|r| r.0)).collect()
}

/// Stratified split by `cfg.seed`, one-vs-all training, test-set scores.
pub fn run_svm(data: &LabeledDataset, cfg: &SvmConfig) -> Result<SvmReport> {
    let (train_idx, test_idx) = stratified_split(&data.labels, data.n_classes, TEST_FRACTION, cfg.seed)?;
    let train = data.subset(&train_idx);
    let test = data.subset(&test_idx);
    let lr = cfg.lr.unwrap_or_else(|| default_lr(cfg.algo, &train));
    let cfg = SvmConfig { lr: Some(lr), ..*cfg };
    let ova = train_one_vs_all(&train, &cfg)?;
    let (train_accuracy, _) = evaluate(&predict_all(&ova, &train)?, &train.labels, data.n_classes)?;
    let (accuracy, macro_f1) = evaluate(&predict_all(&ova, &test)?, &test.labels, data.n_classes)?;
    Ok(SvmReport {
        algo: cfg.algo,
        mode: cfg.mode,
        c: cfg.c,
        lr,
        epochs: cfg.epochs,
        seed: cfg.seed,
        n_train: train.len(),
        n_test: test.len(),
        train_accuracy,
        accuracy,
        macro_f1,
    })
}
