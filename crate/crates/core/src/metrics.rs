//! Metric spaces and points.
//!
//! Every depth computation in this crate only ever asks for distances, so the
//! whole toolkit is generic over [`MetricSpace`]. Points are a tagged enum
//! rather than a trait object so that samples can be cloned, compared and
//! serialized without dynamic dispatch.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::treespace::{self, Tree};

/// Tolerance for unit norms and frame orthonormality.
pub const REPRESENTATION_TOL: f64 = 1e-9;

/// Two points closer than this are treated as the same point.
pub const IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("operand mismatch: {left} vs {right} in {space}")]
    Mismatch {
        left: String,
        right: String,
        space: String,
    },
    #[error("point does not belong to {space}: {reason}")]
    Invalid { space: String, reason: String },
    #[error("distance between points {i} and {j} failed: {source}")]
    AtPair {
        i: usize,
        j: usize,
        #[source]
        source: Box<MetricError>,
    },
    #[error(transparent)]
    Tree(#[from] treespace::TreeError),
}

/// An orthonormal k-frame in R^d, stored row-major as a d x k matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Frame {
    /// Builds a frame from row-major entries, checking that the columns are
    /// orthonormal.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MetricError> {
        if rows == 0 || cols == 0 || cols > rows || data.len() != rows * cols {
            return Err(MetricError::Invalid {
                space: "stiefel".into(),
                reason: format!(
                    "shape {rows}x{cols} with {} entries is not a frame shape",
                    data.len()
                ),
            });
        }
        let frame = Frame { rows, cols, data };
        if let Some(err) = frame.gram_error() {
            if err > REPRESENTATION_TOL {
                return Err(MetricError::Invalid {
                    space: "stiefel".into(),
                    reason: format!("columns not orthonormal (max Gram deviation {err:e})"),
                });
            }
        }
        Ok(frame)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    fn gram_error(&self) -> Option<f64> {
        let mut worst: f64 = 0.0;
        for a in 0..self.cols {
            for b in a..self.cols {
                let dot: f64 = (0..self.rows).map(|r| self.get(r, a) * self.get(r, b)).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        if worst.is_finite() {
            Some(worst)
        } else {
            Some(f64::INFINITY)
        }
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

/// An element of one of the supported metric spaces.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    RealVector(Vec<f64>),
    UnitVector(Vec<f64>),
    Frame(Frame),
    Tree(Arc<Tree>),
}

impl Point {
    pub fn real(coords: impl Into<Vec<f64>>) -> Self {
        Point::RealVector(coords.into())
    }

    /// Checked constructor for points on the unit sphere.
    pub fn unit(coords: impl Into<Vec<f64>>) -> Result<Self, MetricError> {
        let coords = coords.into();
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if coords.is_empty() || !((norm - 1.0).abs() <= REPRESENTATION_TOL) {
            return Err(MetricError::Invalid {
                space: "sphere".into(),
                reason: format!("norm {norm} is not 1"),
            });
        }
        Ok(Point::UnitVector(coords))
    }

    pub fn tree(tree: Tree) -> Self {
        Point::Tree(Arc::new(tree))
    }

    pub fn as_real(&self) -> Option<&[f64]> {
        match self {
            Point::RealVector(c) | Point::UnitVector(c) => Some(c),
            _ => None,
        }
    }

    fn describe(&self) -> String {
        match self {
            Point::RealVector(c) => format!("real vector of dimension {}", c.len()),
            Point::UnitVector(c) => format!("unit vector in R^{}", c.len()),
            Point::Frame(f) => format!("{}x{} frame", f.rows, f.cols),
            Point::Tree(t) => format!("tree on {} leaves", t.leaf_count()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StiefelMode {
    /// Frobenius norm of the difference.
    Chordal,
    /// Frobenius distance after the best orthogonal alignment of the columns.
    Procrustes,
}

/// The metric used to compare points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MetricSpace {
    Euclidean { dim: usize },
    /// Geodesic (great-circle) distance on the unit sphere of R^dim.
    Sphere { dim: usize },
    Stiefel {
        rows: usize,
        cols: usize,
        mode: StiefelMode,
    },
    /// Billera-Holmes-Vogtmann tree space on a fixed number of leaves.
    Bhv { leaves: usize },
}

impl fmt::Display for MetricSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpace::Euclidean { dim } => write!(f, "euclidean R^{dim}"),
            MetricSpace::Sphere { dim } => write!(f, "sphere in R^{dim}"),
            MetricSpace::Stiefel { rows, cols, mode } => {
                let m = match mode {
                    StiefelMode::Chordal => "chordal",
                    StiefelMode::Procrustes => "procrustes",
                };
                write!(f, "stiefel-{m} {rows}x{cols}")
            }
            MetricSpace::Bhv { leaves } => write!(f, "bhv tree space on {leaves} leaves"),
        }
    }
}

impl MetricSpace {
    /// Checks that `p` is a valid element of this space.
    pub fn validate(&self, p: &Point) -> Result<(), MetricError> {
        let invalid = |reason: String| MetricError::Invalid {
            space: self.to_string(),
            reason,
        };
        match (self, p) {
            (MetricSpace::Euclidean { dim }, Point::RealVector(c)) if c.len() == *dim => {
                if c.iter().all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    Err(invalid("non-finite coordinate".into()))
                }
            }
            (MetricSpace::Sphere { dim }, Point::UnitVector(c)) if c.len() == *dim => {
                let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                if (norm - 1.0).abs() <= REPRESENTATION_TOL {
                    Ok(())
                } else {
                    Err(invalid(format!("norm {norm} is not 1")))
                }
            }
            (MetricSpace::Stiefel { rows, cols, .. }, Point::Frame(f))
                if f.rows == *rows && f.cols == *cols =>
            {
                Ok(())
            }
            (MetricSpace::Bhv { leaves }, Point::Tree(t)) if t.leaf_count() == *leaves => Ok(()),
            _ => Err(invalid(p.describe())),
        }
    }

    /// Builds a point of this space from flat coordinates (frames row-major).
    /// Trees have no coordinate form.
    pub fn point_from_coords(&self, coords: Vec<f64>) -> Result<Point, MetricError> {
        let p = match self {
            MetricSpace::Euclidean { .. } => Point::RealVector(coords),
            MetricSpace::Sphere { .. } => Point::unit(coords)?,
            MetricSpace::Stiefel { rows, cols, .. } => {
                if coords.len() != rows * cols {
                    return Err(MetricError::Invalid {
                        space: self.to_string(),
                        reason: format!("{} coordinates for a {rows}x{cols} frame", coords.len()),
                    });
                }
                Point::Frame(Frame::new(*rows, *cols, coords)?)
            }
            MetricSpace::Bhv { .. } => {
                return Err(MetricError::Invalid {
                    space: self.to_string(),
                    reason: "trees are read from Newick, not coordinates".into(),
                })
            }
        };
        self.validate(&p)?;
        Ok(p)
    }

    pub fn name(&self) -> &'static str {
        match self {
            MetricSpace::Euclidean { .. } => "euclidean",
            MetricSpace::Sphere { .. } => "sphere",
            MetricSpace::Stiefel {
                mode: StiefelMode::Chordal,
                ..
            } => "stiefel-chordal",
            MetricSpace::Stiefel {
                mode: StiefelMode::Procrustes,
                ..
            } => "stiefel-procrustes",
            MetricSpace::Bhv { .. } => "bhv",
        }
    }
}

/// Distance between two points of `space`.
///
/// The result is bitwise symmetric: `distance(p, q) == distance(q, p)` for
/// every pair, which keeps cached matrices and on-the-fly evaluation in exact
/// agreement.
pub fn distance(p: &Point, q: &Point, space: &MetricSpace) -> Result<f64, MetricError> {
    let mismatch = || MetricError::Mismatch {
        left: p.describe(),
        right: q.describe(),
        space: space.to_string(),
    };
    match (space, p, q) {
        (MetricSpace::Euclidean { dim }, Point::RealVector(a), Point::RealVector(b))
            if a.len() == *dim && b.len() == *dim =>
        {
            Ok(euclidean(a, b))
        }
        (MetricSpace::Sphere { dim }, Point::UnitVector(a), Point::UnitVector(b))
            if a.len() == *dim && b.len() == *dim =>
        {
            Ok(sphere_geodesic(a, b))
        }
        (MetricSpace::Stiefel { rows, cols, mode }, Point::Frame(a), Point::Frame(b))
            if a.rows == *rows && a.cols == *cols && b.rows == *rows && b.cols == *cols =>
        {
            Ok(stiefel_distance(a, b, *mode)?)
        }
        (MetricSpace::Bhv { leaves }, Point::Tree(a), Point::Tree(b))
            if a.leaf_count() == *leaves && b.leaf_count() == *leaves =>
        {
            let (a, b) = canonical_order(a.as_ref(), b.as_ref(), |t| t.order_key());
            Ok(treespace::bhv_distance(a, b)?.distance)
        }
        _ => Err(mismatch()),
    }
}

fn canonical_order<'a, T, K: PartialOrd>(a: &'a T, b: &'a T, key: impl Fn(&T) -> K) -> (&'a T, &'a T) {
    match key(a).partial_cmp(&key(b)) {
        Some(Ordering::Greater) => (b, a),
        _ => (a, b),
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Great-circle distance, `arccos <a, b>` written as `2 atan2(|a - b|, |a + b|)`:
/// arccos loses half the digits near 0 and pi, so d(a, a) would come out
/// around 1e-8 for vectors normalised in floating point.
pub(crate) fn sphere_geodesic(a: &[f64], b: &[f64]) -> f64 {
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        diff += (x - y) * (x - y);
        sum += (x + y) * (x + y);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

/// Distance between two orthonormal frames of the same shape.
pub fn stiefel_distance(a: &Frame, b: &Frame, mode: StiefelMode) -> Result<f64, MetricError> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(MetricError::Mismatch {
            left: Point::Frame(a.clone()).describe(),
            right: Point::Frame(b.clone()).describe(),
            space: "stiefel".into(),
        });
    }
    for f in [a, b] {
        match f.gram_error() {
            Some(e) if e <= REPRESENTATION_TOL => {}
            other => {
                return Err(MetricError::Invalid {
                    space: "stiefel".into(),
                    reason: format!("columns not orthonormal (max Gram deviation {other:?})"),
                })
            }
        }
    }
    match mode {
        StiefelMode::Chordal => Ok(euclidean(&a.data, &b.data)),
        StiefelMode::Procrustes => {
            if a.data == b.data {
                return Ok(0.0);
            }
            let (a, b) = canonical_order(a, b, |f| f.data.clone());
            let (am, bm) = (a.to_matrix(), b.to_matrix());
            // best rotation R = U V^T from the SVD of b^T a
            let svd = (bm.transpose() * &am).svd(true, true);
            let (u, v_t) = match (svd.u, svd.v_t) {
                (Some(u), Some(v_t)) => (u, v_t),
                _ => unreachable!("svd computed with both factors"),
            };
            Ok((am - bm * (u * v_t)).norm())
        }
    }
}

/// Symmetric matrix of pairwise distances with an exactly zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }
}

/// All pairwise distances of `points`.
///
/// Each unordered pair is evaluated once and mirrored, so the result does not
/// depend on how many threads rayon uses.
pub fn pairwise_matrix(points: &[Point], space: &MetricSpace) -> Result<DistanceMatrix, MetricError> {
    let n = points.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| {
                    distance(&points[i], &points[j], space).map_err(|e| MetricError::AtPair {
                        i,
                        j,
                        source: Box::new(e),
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let mut data = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &d) in row.iter().enumerate() {
            let j = i + 1 + off;
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, data })
}
