//! Union-of-affine-subspaces model of the set of plausible responses.

mod kmeans;
mod model;
mod pca;
mod union;

pub use kmeans::{kmeans_cluster, Clustering};
pub use model::{fit_local_model, AffineSubspaceModel};
pub use union::{learn_union, learn_union_from_samples, SubspaceUnion, UnionConfig};
