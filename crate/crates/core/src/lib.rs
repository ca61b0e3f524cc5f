//! Lens depth over general metric spaces.
//!
//! The empirical lens depth of a point `x` with respect to a sample
//! `X_1..X_n` is the fraction of sample pairs whose lens
//! `B(X_i, d(X_i, X_j)) ∩ B(X_j, d(X_i, X_j))` contains `x`. Only distances are
//! needed, so everything here works for Euclidean data, directions on the
//! sphere, orthonormal frames and phylogenetic trees alike.
//!
//! - [`metrics`]: points, metric spaces and distance matrices.
//! - [`treespace`]: Newick trees and the BHV geodesic distance.
//! - [`depth`]: lens membership, empirical and population lens depth.
//! - [`levelsets`]: depth level sets, Hausdorff and measure distances,
//!   boundaries and the set functionals used for dispersion.
//! - [`dispersion`]: spread-out, strong, weak and distance orders and the
//!   gamma coefficient.
//! - [`analysis`]: depth-depth plots, outliers, per-group diameter curves.
//! - [`asymptotics`]: Monte Carlo convergence and limit-law experiments.

// `!(x > 0.0)` is how NaN gets rejected along with the rest
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod asymptotics;
pub mod depth;
pub mod dispersion;
pub mod error;
pub mod levelsets;
pub mod metrics;
pub mod sampling;
pub mod treespace;

pub use error::{Error, Result};
pub use metrics::{distance, pairwise_matrix, DistanceMatrix, Frame, MetricSpace, Point, StiefelMode};
pub use treespace::{parse_newick, Tree};
