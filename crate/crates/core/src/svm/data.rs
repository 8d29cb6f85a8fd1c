//! Labeled hyperbolic datasets, the Gaussian-mixture generator and splits.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    lorentz_to_poincare, param_from_lorentz, param_to_poincare, poincare_to_lorentz,
    EuclideanParam, LorentzPoint,
};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub points: Vec<LorentzPoint>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl LabeledDataset {
    pub fn new(points: Vec<LorentzPoint>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: labels.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InvalidInput(format!(
                "label {bad} outside [0, {n_classes})"
            )));
        }
        if let Some(p) = points.first() {
            if points.iter().any(|q| q.dim() != p.dim()) {
                return Err(Error::InvalidInput("points of mixed dimension".into()));
            }
        }
        Ok(Self {
            points,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn poincare_view(&self) -> Result<Vec<Vec<f64>>> {
        self.points
            .iter()
            .map(|p| lorentz_to_poincare(p).map(|x| x.into_coords()))
            .collect()
    }

    pub fn param_view(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| param_from_lorentz(p).z).collect()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            points: idx.iter().map(|&i| self.points[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }
}

/// Variance of each centroid coordinate.
pub const CENTROID_VARIANCE: f64 = 1.5;

/// `k` equal clusters in the plane: centroids drawn from `N(0, 1.5·I)`, points
/// from `N(centroid, I)`, then mapped to the ball by `F_D` and on to the
/// hyperboloid. Labels are assigned in blocks of `n/k`.
pub fn gen_gmm_poincare(k: usize, n: usize, seed: u64) -> Result<LabeledDataset> {
    if k == 0 || n % k != 0 {
        return Err(Error::InvalidInput(format!(
            "{n} points cannot be split into {k} equal classes"
        )));
    }
    let mut rng = stream(seed, Purpose::Dataset);
    let centroid = Normal::new(0.0, CENTROID_VARIANCE.sqrt())
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let noise = Normal::new(0.0, 1.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let centers: Vec<[f64; 2]> = (0..k)
        .map(|_| [centroid.sample(&mut rng), centroid.sample(&mut rng)])
        .collect();
    let per = n / k;
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (label, c) in centers.iter().enumerate() {
        for _ in 0..per {
            let z = EuclideanParam::new(vec![
                c[0] + noise.sample(&mut rng),
                c[1] + noise.sample(&mut rng),
            ]);
            points.push(poincare_to_lorentz(&param_to_poincare(&z))?);
            labels.push(label);
        }
    }
    LabeledDataset::new(points, labels, k)
}

/// Seeded stratified split: within each class, a shuffled `test_fraction`
/// (rounded) goes to the test side. Both index lists are sorted.
pub fn stratified_split(
    labels: &[usize],
    n_classes: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidInput(format!(
            "test fraction {test_fraction} outside [0, 1)"
        )));
    }
    let mut rng = stream(seed, Purpose::Split);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        let n_test = (members.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
