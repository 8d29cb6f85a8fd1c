//! Tree embeddings: synthetic trees, the scale-normalized distortion loss,
//! training in each chart, and distortion metrics.

mod embed;
mod tree;

pub use embed::{
    distortion_metrics, embedding_loss, initial_coords, lorentz_riemannian_gradient,
    lorentz_spatial_gradient, pairwise_distances, train_all, train_embedding, ChartCoords,
    DistortionMetrics, EmbedConfig, EmbeddingRun, MetricRecord, ACOSH_GUARD,
};
pub use tree::{
    generate_tree, normalize_layout, radial_layout, tree_metric, DistanceTable, TreeInstance,
    TreeKind,
};
