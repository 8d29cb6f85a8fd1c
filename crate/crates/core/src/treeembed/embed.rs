//! Distortion loss, its gradients in each chart, and full-batch training.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{normalize_layout, radial_layout, tree_metric, DistanceTable, TreeInstance};
use crate::error::{Error, Result};
use crate::geometry::{
    dist_lorentz_raw, dist_poincare_raw, exp_lorentz, exp_poincare, param_to_lorentz,
    param_to_poincare, Chart, EuclideanParam, LorentzPoint, PoincarePoint, TangentVector,
};
use crate::linalg::{all_finite, dist_sq, norm_sq};
use crate::optim::jacobian_fd_transpose_apply;

/// Lower clamp on the arccosh argument when differentiating.
pub const ACOSH_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionMetrics {
    pub delta: f64,
    pub delta_max: f64,
    pub diameter: f64,
}

/// `δ = mean(d_R/d_E)·mean(d_E/d_R)`, `δ_max` with maxima in place of means,
/// `diameter = max d_E`, over unordered distinct pairs.
pub fn distortion_metrics(d_e: &DistanceTable, d_r: &DistanceTable) -> Result<DistortionMetrics> {
    if d_e.len() != d_r.len() {
        return Err(Error::DimensionMismatch {
            expected: d_r.len(),
            got: d_e.len(),
        });
    }
    let mut contraction = 0.0;
    let mut expansion = 0.0;
    let mut max_c = 0.0f64;
    let mut max_e = 0.0f64;
    let mut count = 0usize;
    for (i, j) in d_r.pairs() {
        let e = d_e.get(i, j);
        let r = d_r.get(i, j);
        if !(e > 0.0) {
            return Err(Error::Degenerate(format!(
                "nodes {i} and {j} are embedded at distance {e}"
            )));
        }
        contraction += r / e;
        expansion += e / r;
        max_c = max_c.max(r / e);
        max_e = max_e.max(e / r);
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidInput("need at least two nodes".into()));
    }
    let m = count as f64;
    Ok(DistortionMetrics {
        delta: (contraction / m) * (expansion / m),
        delta_max: max_c * max_e,
        diameter: d_e.max(),
    })
}

/// Node coordinates in one chart: ball coordinates, full hyperboloid
/// coordinates `(x₀, x_r)`, or parameters `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartCoords {
    pub chart: Chart,
    pub points: Vec<Vec<f64>>,
}

impl ChartCoords {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Ball coordinates of every node, for plotting.
    pub fn to_poincare(&self) -> Vec<Vec<f64>> {
        match self.chart {
            Chart::Poincare => self.points.clone(),
            Chart::Lorentz => self
                .points
                .iter()
                .map(|y| y[1..].iter().map(|c| c / (1.0 + y[0])).collect())
                .collect(),
            Chart::Param => self
                .points
                .iter()
                .map(|z| param_to_poincare(&EuclideanParam::new(z.clone())).into_coords())
                .collect(),
        }
    }
}

/// Pairwise hyperbolic distances of the embedded nodes.
pub fn pairwise_distances(coords: &ChartCoords) -> DistanceTable {
    let pts = match coords.chart {
        Chart::Param => coords.to_poincare(),
        _ => coords.points.clone(),
    };
    match coords.chart {
        Chart::Lorentz => DistanceTable::from_fn(pts.len(), |i, j| dist_lorentz_raw(&pts[i], &pts[j])),
        _ => DistanceTable::from_fn(pts.len(), |i, j| dist_poincare_raw(&pts[i], &pts[j])),
    }
}

/// Value and gradient of the scale-normalized distortion loss
/// `mean over pairs of (d_E/z_E − d_R/z_R)²`, with `z_E`, `z_R` the mean distances.
///
/// Gradients are Euclidean with respect to the stored coordinates: ball
/// coordinates, full hyperboloid coordinates with `x₀` treated as free, or `z`.
pub fn embedding_loss(coords: &ChartCoords, d_r: &DistanceTable) -> Result<(f64, Vec<Vec<f64>>)> {
    let n = coords.len();
    if n < 2 || d_r.len() != n {
        return Err(Error::InvalidInput(format!(
            "loss needs at least two nodes and a matching table ({n} vs {})",
            d_r.len()
        )));
    }
    let ball = match coords.chart {
        Chart::Param => coords.to_poincare(),
        _ => coords.points.clone(),
    };
    let pairs: Vec<(usize, usize)> = d_r.pairs().collect();
    let p = pairs.len() as f64;

    // distance and ∂d/∂u-weighted pieces per pair
    let mut e = Vec::with_capacity(pairs.len());
    let mut slope = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        let (a, b) = (&ball[i], &ball[j]);
        let (d, um1) = match coords.chart {
            Chart::Lorentz => {
                let u = a[0] * b[0] - crate::linalg::dot(&a[1..], &b[1..]);
                (dist_lorentz_raw(a, b), u - 1.0)
            }
            _ => {
                let um1 = 2.0 * dist_sq(a, b) / ((1.0 - norm_sq(a)) * (1.0 - norm_sq(b)));
                (dist_poincare_raw(a, b), um1)
            }
        };
        let um1 = um1.max(ACOSH_GUARD);
        e.push(d);
        slope.push(1.0 / (um1 * (um1 + 2.0)).sqrt());
    }
    let z_e = e.iter().sum::<f64>() / p;
    let z_r = pairs.iter().map(|&(i, j)| d_r.get(i, j)).sum::<f64>() / p;
    if !(z_e > 0.0) || !z_e.is_finite() {
        return Err(Error::Degenerate(format!("mean embedded distance is {z_e}")));
    }
    let s: Vec<f64> = pairs
        .iter()
        .zip(&e)
        .map(|(&(i, j), ep)| ep / z_e - d_r.get(i, j) / z_r)
        .collect();
    let loss = s.iter().map(|v| v * v).sum::<f64>() / p;
    let mean_se = s.iter().zip(&e).map(|(sp, ep)| sp * ep / z_e).sum::<f64>() / p;

    let dim = ball[0].len();
    let mut grad = vec![vec![0.0; dim]; n];
    for (q, &(i, j)) in pairs.iter().enumerate() {
        let dl_de = 2.0 / (p * z_e) * (s[q] - mean_se);
        let w = dl_de * slope[q];
        let (a, b) = (&ball[i], &ball[j]);
        match coords.chart {
            Chart::Lorentz => {
                // ∂u/∂x = (y₀, −y_r)
                grad[i][0] += w * b[0];
                grad[j][0] += w * a[0];
                for k in 1..dim {
                    grad[i][k] -= w * b[k];
                    grad[j][k] -= w * a[k];
                }
            }
            _ => {
                let alpha = 1.0 - norm_sq(a);
                let beta = 1.0 - norm_sq(b);
                let diff2 = dist_sq(a, b);
                let c = 4.0 / (alpha * beta);
                for k in 0..dim {
                    let dk = a[k] - b[k];
                    grad[i][k] += w * c * (dk + diff2 * a[k] / alpha);
                    grad[j][k] += w * c * (-dk + diff2 * b[k] / beta);
                }
            }
        }
    }
    if coords.chart == Chart::Param {
        for (g, z) in grad.iter_mut().zip(&coords.points) {
            *g = jacobian_fd_transpose_apply(z, g);
        }
    }
    if !loss.is_finite() || !grad.iter().all(|g| all_finite(g)) {
        return Err(Error::NumericalAbort("non-finite loss or gradient".into()));
    }
    Ok((loss, grad))
}

/// Riemannian gradient on the hyperboloid from an ambient Euclidean gradient:
/// `h = diag(−1, 1, …) ∇`, then `h + [x, h] x`.
pub fn lorentz_riemannian_gradient(x: &[f64], ambient: &[f64]) -> Vec<f64> {
    let mut h = ambient.to_vec();
    h[0] = -h[0];
    let xh = -x[0] * h[0] + crate::linalg::dot(&x[1..], &h[1..]);
    h.iter().zip(x).map(|(hi, xi)| hi + xh * xi).collect()
}

/// Gradient with respect to the spatial part alone, `x₀ = sqrt(1 + ‖x_r‖²)`.
pub fn lorentz_spatial_gradient(x: &[f64], ambient: &[f64]) -> Vec<f64> {
    x[1..]
        .iter()
        .zip(&ambient[1..])
        .map(|(xi, gi)| gi + ambient[0] * xi / x[0])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbedConfig {
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub record_every: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            lr: 1.0,
            epochs: 3000,
            seed: 0,
            record_every: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub epoch: usize,
    pub loss: f64,
    pub metrics: DistortionMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRun {
    pub chart: Chart,
    pub coords: ChartCoords,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    /// Loss before each epoch, then after the last one.
    pub loss_history: Vec<f64>,
    pub metrics_history: Vec<MetricRecord>,
    pub final_metrics: DistortionMetrics,
}

/// Starting coordinates: the normalized layout read as parameters and mapped
/// into the chart.
pub fn initial_coords(t: &TreeInstance, chart: Chart) -> Result<ChartCoords> {
    let layout = match t.layout() {
        Some(l) => l.to_vec(),
        None => normalize_layout(&radial_layout(t, 0)),
    };
    let points = layout
        .iter()
        .map(|c| {
            let z = EuclideanParam::new(c.to_vec());
            Ok(match chart {
                Chart::Poincare => param_to_poincare(&z).into_coords(),
                Chart::Lorentz => param_to_lorentz(&z)?.coords(),
                Chart::Param => z.z,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChartCoords { chart, points })
}

fn step(coords: &mut ChartCoords, grad: &[Vec<f64>], lr: f64) -> Result<()> {
    match coords.chart {
        Chart::Poincare => {
            for (x, g) in coords.points.iter_mut().zip(grad) {
                let a = 1.0 - norm_sq(x);
                let v = TangentVector::poincare(g.iter().map(|c| a * a / 4.0 * c).collect());
                let p = PoincarePoint::new(std::mem::take(x))?;
                *x = exp_poincare(&p, &v, -lr)?.into_coords();
            }
        }
        Chart::Lorentz => {
            for (y, g) in coords.points.iter_mut().zip(grad) {
                let v = TangentVector::lorentz(lorentz_riemannian_gradient(y, g));
                let p = LorentzPoint::from_spatial(y[1..].to_vec())?;
                *y = exp_lorentz(&p, &v, -lr)?.coords();
            }
        }
        Chart::Param => {
            for (z, g) in coords.points.iter_mut().zip(grad) {
                for (zi, gi) in z.iter_mut().zip(g) {
                    *zi -= lr * gi;
                }
            }
        }
    }
    Ok(())
}

fn abort(epoch: usize, chart: Chart, e: Error) -> Error {
    Error::NumericalAbort(format!("{chart} embedding failed at epoch {epoch}: {e}"))
}

/// Full-batch descent on the distortion loss: Riemannian steps through the
/// exponential map in the ball and on the hyperboloid, plain steps on `z`.
pub fn train_embedding(t: &TreeInstance, chart: Chart, cfg: &EmbedConfig) -> Result<EmbeddingRun> {
    if !(cfg.lr >= 0.0) || !cfg.lr.is_finite() {
        return Err(Error::InvalidInput(format!("learning rate {} must be >= 0", cfg.lr)));
    }
    let d_r = tree_metric(t)?;
    let mut coords = initial_coords(t, chart)?;
    let every = cfg.record_every.max(1);
    let mut loss_history = Vec::with_capacity(cfg.epochs + 1);
    let mut metrics_history = Vec::new();
    for epoch in 0..=cfg.epochs {
        let (loss, grad) = embedding_loss(&coords, &d_r).map_err(|e| abort(epoch, chart, e))?;
        loss_history.push(loss);
        if epoch % every == 0 || epoch == cfg.epochs {
            let metrics = distortion_metrics(&pairwise_distances(&coords), &d_r)
                .map_err(|e| abort(epoch, chart, e))?;
            metrics_history.push(MetricRecord {
                epoch,
                loss,
                metrics,
            });
        }
        if epoch == cfg.epochs {
            break;
        }
        step(&mut coords, &grad, cfg.lr).map_err(|e| abort(epoch, chart, e))?;
    }
    let final_metrics = metrics_history
        .last()
        .map(|r| r.metrics)
        .ok_or_else(|| Error::InvalidInput("no metrics recorded".into()))?;
    Ok(EmbeddingRun {
        chart,
        coords,
        epochs: cfg.epochs,
        lr: cfg.lr,
        seed: cfg.seed,
        loss_history,
        metrics_history,
        final_metrics,
    })
}

/// Trains every `(tree, chart)` combination in parallel; results keep input order.
pub fn train_all(
    trees: &[TreeInstance],
    charts: &[Chart],
    cfg: &EmbedConfig,
) -> Vec<Vec<Result<EmbeddingRun>>> {
    trees
        .par_iter()
        .map(|t| charts.par_iter().map(|&c| train_embedding(t, c, cfg)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::finite_diff_grad;
    use crate::treeembed::tree::{generate_tree, TreeKind};

    fn table(n: usize, f: impl Fn(usize, usize) -> f64) -> DistanceTable {
        DistanceTable::from_fn(n, f)
    }

    #[test]
    fn metrics_examples() {
        let r = table(4, |i, j| (j - i) as f64);
        let m = distortion_metrics(&r, &r).unwrap();
        assert_eq!((m.delta, m.delta_max), (1.0, 1.0));
        let e = table(4, |i, j| 2.0 * (j - i) as f64);
        let m = distortion_metrics(&e, &r).unwrap();
        assert!((m.delta - 1.0).abs() < 1e-15 && (m.delta_max - 1.0).abs() < 1e-15);
        assert_eq!(m.diameter, 6.0);
        let zero = table(3, |i, _| if i == 0 { 0.0 } else { 1.0 });
        assert!(distortion_metrics(&zero, &table(3, |_, _| 1.0)).is_err());
    }

    #[test]
    fn metrics_scale_invariant_and_at_least_one() {
        let r = table(6, |i, j| ((i * 7 + j * 3) % 5 + 1) as f64);
        let e = table(6, |i, j| ((i + 2 * j) % 4 + 1) as f64 * 0.7);
        let base = distortion_metrics(&e, &r).unwrap();
        assert!(base.delta >= 1.0);
        for s in [0.5, 3.0] {
            let scaled = table(6, |i, j| s * e.get(i, j));
            let m = distortion_metrics(&scaled, &r).unwrap();
            assert!((m.delta - base.delta).abs() < 1e-12);
            assert!((m.delta_max - base.delta_max).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_zero_for_isometric_embedding() {
        // a 3-node path on a geodesic through the origin
        let t = generate_tree(TreeKind::Path { n: 3 }, 0).unwrap();
        let d_r = tree_metric(&t).unwrap();
        let z = [vec![-0.9, 0.0], vec![0.0, 0.0], vec![0.9, 0.0]];
        let coords = ChartCoords {
            chart: Chart::Param,
            points: z.to_vec(),
        };
        let (loss, _) = embedding_loss(&coords, &d_r).unwrap();
        assert!(loss < 1e-28, "{loss}");
    }

    #[test]
    fn loss_matches_direct_double_sum() {
        let t = generate_tree(TreeKind::Path { n: 3 }, 0).unwrap();
        let d_r = tree_metric(&t).unwrap();
        let z = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.5]];
        let x: Vec<Vec<f64>> = z
            .iter()
            .map(|c| param_to_poincare(&EuclideanParam::new(c.clone())).into_coords())
            .collect();
        let d = |i: usize, j: usize| dist_poincare_raw(&x[i], &x[j]);
        let es = [d(0, 1), d(0, 2), d(1, 2)];
        let rs = [1.0, 2.0, 1.0];
        let ze = es.iter().sum::<f64>() / 3.0;
        let zr = 4.0 / 3.0;
        let direct = es.iter().zip(&rs).map(|(e, r)| (e / ze - r / zr).powi(2)).sum::<f64>() / 3.0;
        let coords = ChartCoords {
            chart: Chart::Param,
            points: z,
        };
        let (loss, _) = embedding_loss(&coords, &d_r).unwrap();
        assert!((loss - direct).abs() < 1e-15);
    }

    fn check_fd(chart: Chart, seed: u64) {
        let t = generate_tree(TreeKind::Random { n: 6 }, seed).unwrap();
        let d_r = tree_metric(&t).unwrap();
        let mut coords = initial_coords(&t, chart).unwrap();
        // spread the nodes out so the check is not near the origin
        if chart != Chart::Lorentz {
            for p in &mut coords.points {
                for c in p.iter_mut() {
                    *c *= if chart == Chart::Param { 3.0 } else { 1.5 };
                }
            }
        }
        let (_, grad) = embedding_loss(&coords, &d_r).unwrap();
        for i in 0..coords.len() {
            let (point, analytic) = match chart {
                Chart::Lorentz => {
                    let y = coords.points[i].clone();
                    (y[1..].to_vec(), lorentz_spatial_gradient(&y, &grad[i]))
                }
                _ => (coords.points[i].clone(), grad[i].clone()),
            };
            let f = |p: &[f64]| {
                let mut c = coords.clone();
                c.points[i] = match chart {
                    Chart::Lorentz => LorentzPoint::from_spatial(p.to_vec()).unwrap().coords(),
                    _ => p.to_vec(),
                };
                embedding_loss(&c, &d_r).unwrap().0
            };
            let fd = finite_diff_grad(f, &point, 1e-6);
            let scale = crate::linalg::norm(&fd).max(1e-8);
            assert!(
                crate::linalg::max_abs_diff(&analytic, &fd) <= 1e-4 * scale,
                "{chart} node {i}: {analytic:?} vs {fd:?}"
            );
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..5 {
            for chart in [Chart::Poincare, Chart::Lorentz, Chart::Param] {
                check_fd(chart, seed);
            }
        }
    }

    #[test]
    fn riemannian_gradient_is_tangent() {
        let y = LorentzPoint::from_spatial(vec![3.0, -1.0]).unwrap().coords();
        let g = lorentz_riemannian_gradient(&y, &[0.3, 1.2, -0.4]);
        let t = -y[0] * g[0] + y[1] * g[1] + y[2] * g[2];
        assert!(t.abs() < 1e-14);
    }

    #[test]
    fn zero_epochs_reports_initial_map() {
        let t = generate_tree(TreeKind::Star { n: 6 }, 0).unwrap();
        let cfg = EmbedConfig {
            epochs: 0,
            ..Default::default()
        };
        let run = train_embedding(&t, Chart::Poincare, &cfg).unwrap();
        assert_eq!(run.loss_history.len(), 1);
        assert_eq!(run.metrics_history.len(), 1);
        assert_eq!(run.coords, initial_coords(&t, Chart::Poincare).unwrap());
    }

    #[test]
    fn loss_non_increasing_on_star() {
        let t = generate_tree(TreeKind::Star { n: 10 }, 0).unwrap();
        let cfg = EmbedConfig {
            lr: 0.1,
            epochs: 300,
            ..Default::default()
        };
        for chart in [Chart::Poincare, Chart::Lorentz, Chart::Param] {
            let run = train_embedding(&t, chart, &cfg).unwrap();
            for w in run.loss_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{chart}: {} -> {}", w[0], w[1]);
            }
        }
    }
}
