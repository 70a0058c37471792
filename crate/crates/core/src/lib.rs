//! Discrete sectional-curvature profiles of finite metric spaces.
//!
//! A metric space (graph, distance matrix or point cloud) is reduced to a
//! [`DistanceMatrix`]; [`build_profile`] then samples equilateral triples at
//! every scale and records how far their Gromov-product balls must be
//! expanded to meet. Profiles are compared with an exact 1-Wasserstein
//! distance ([`transport::wasserstein1`]), which also drives embedding
//! dimension estimation.

pub mod curvature;
pub mod embedding;
pub mod error;
pub mod generators;
pub mod graph_build;
pub mod io;
pub mod metric;
pub mod report;
pub mod transport;

pub use curvature::{
    build_profile, rho_ball_growth, rho_minmax, CurvatureProfile, EquilateralTriple, ProfileConfig,
    RhoValue, ScaleRecord,
};
pub use error::{Error, Result};
pub use graph_build::{adaptive_graph, epsilon_graph, knn_graph, NeighborhoodGraph, PointCloud};
pub use metric::{shortest_path_matrix, DistanceMatrix, Graph};
pub use transport::{
    estimate_dimension, to_distribution, wasserstein1, GridSpec, ProfileDistribution,
};
