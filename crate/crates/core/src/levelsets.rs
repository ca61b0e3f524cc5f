//! Depth level sets on a discrete evaluation geometry.
//!
//! A level set `{depth >= lambda}` is represented extensionally: the indices
//! of the evaluation points whose depth meets the threshold. The evaluation
//! geometry is either an axis-aligned lattice in R^d or an arbitrary point set
//! with a symmetric k-nearest-neighbour graph.

use std::str::FromStr;

use rayon::prelude::*;

use crate::depth::DepthField;
use crate::error::{Error, Result};
use crate::metrics::{distance, MetricSpace, Point};

/// `{i : values[i] >= lambda}` over a depth field.
#[derive(Debug, Clone)]
pub struct LevelSet<'a> {
    field: &'a DepthField,
    lambda: f64,
    members: Vec<usize>,
    mask: Vec<bool>,
}

impl<'a> LevelSet<'a> {
    pub fn field(&self) -> &'a DepthField {
        self.field
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Member indices in increasing order.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask.get(i).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&i| !self.mask[i]).collect()
    }

    pub fn member_points(&self) -> Vec<Point> {
        self.members.iter().map(|&i| self.field.points()[i].clone()).collect()
    }

    pub fn complement_points(&self) -> Vec<Point> {
        self.complement().into_iter().map(|i| self.field.points()[i].clone()).collect()
    }
}

/// Thresholds `field` at `lambda` (ties are members).
pub fn level_set(field: &DepthField, lambda: f64) -> LevelSet<'_> {
    let mask: Vec<bool> = field.values().iter().map(|&v| v >= lambda).collect();
    let members = (0..mask.len()).filter(|&i| mask[i]).collect();
    LevelSet {
        field,
        lambda,
        members,
        mask,
    }
}

/// One lattice axis `lo:hi:step`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Axis> {
        if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!("invalid axis {lo}:{hi}:{step}")));
        }
        Ok(Axis { lo, hi, step })
    }

    pub fn count(&self) -> usize {
        ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn value(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Axis> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Domain(format!("axis `{s}` is not lo:hi:step")));
        }
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Domain(format!("bad number `{t}` in axis `{s}`")))
        };
        Axis::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }
}

/// Parses comma-separated axes such as `"-4:4:0.05,-4:4:0.05"`.
pub fn parse_axes(spec: &str) -> Result<Vec<Axis>> {
    spec.split(',').map(str::parse).collect()
}

/// Evaluation points with a symmetric neighbour relation.
#[derive(Debug, Clone)]
pub struct EvaluationGrid {
    points: Vec<Point>,
    neighbors: Vec<Vec<usize>>,
    space: MetricSpace,
    lattice: Option<Lattice>,
}

#[derive(Debug, Clone)]
struct Lattice {
    axes: Vec<Axis>,
    counts: Vec<usize>,
    wrap: bool,
}

impl EvaluationGrid {
    /// Axis-aligned lattice; with `wrap` the lattice is a torus.
    pub fn lattice(axes: &[Axis], wrap: bool) -> Result<EvaluationGrid> {
        if axes.is_empty() {
            return Err(Error::Empty("axis list"));
        }
        let counts: Vec<usize> = axes.iter().map(Axis::count).collect();
        let total: usize = counts.iter().product();
        if total > 50_000_000 {
            return Err(Error::Domain(format!("lattice with {total} points is too large")));
        }
        let mut points = Vec::with_capacity(total);
        let mut neighbors = Vec::with_capacity(total);
        let strides: Vec<usize> = (0..axes.len())
            .map(|a| counts[a + 1..].iter().product())
            .collect();
        for flat in 0..total {
            let idx: Vec<usize> = (0..axes.len()).map(|a| flat / strides[a] % counts[a]).collect();
            points.push(Point::RealVector(
                idx.iter().zip(axes).map(|(&i, ax)| ax.value(i)).collect(),
            ));
            let mut nb = Vec::new();
            for a in 0..axes.len() {
                let c = counts[a];
                if c < 2 {
                    continue;
                }
                let i = idx[a];
                if i > 0 {
                    nb.push(flat - strides[a]);
                } else if wrap && c > 2 {
                    nb.push(flat + (c - 1) * strides[a]);
                }
                if i + 1 < c {
                    nb.push(flat + strides[a]);
                } else if wrap && c > 2 {
                    nb.push(flat - (c - 1) * strides[a]);
                }
            }
            nb.sort_unstable();
            nb.dedup();
            neighbors.push(nb);
        }
        Ok(EvaluationGrid {
            points,
            neighbors,
            space: MetricSpace::Euclidean { dim: axes.len() },
            lattice: Some(Lattice {
                axes: axes.to_vec(),
                counts,
                wrap,
            }),
        })
    }

    /// Symmetrized k-nearest-neighbour graph over arbitrary points.
    pub fn knn(points: Vec<Point>, space: MetricSpace, k: usize) -> Result<EvaluationGrid> {
        if points.is_empty() {
            return Err(Error::Empty("evaluation point set"));
        }
        let n = points.len();
        let lists: Vec<Vec<usize>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut d: Vec<(f64, usize)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| Ok((distance(&points[i], &points[j], &space)?, j)))
                    .collect::<Result<_>>()?;
                d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                Ok(d.into_iter().take(k).map(|(_, j)| j).collect())
            })
            .collect::<Result<_>>()?;
        let mut neighbors = vec![Vec::new(); n];
        for (i, list) in lists.iter().enumerate() {
            for &j in list {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
            nb.dedup();
        }
        Ok(EvaluationGrid {
            points,
            neighbors,
            space,
            lattice: None,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Smallest lattice step, if this is a lattice.
    pub fn spacing(&self) -> Option<f64> {
        self.lattice
            .as_ref()
            .map(|l| l.axes.iter().map(|a| a.step).fold(f64::INFINITY, f64::min))
    }

    /// Points one step outside a bounded lattice, standing in for the part of
    /// the complement that lies beyond the evaluation region. Empty for tori
    /// and non-lattice geometries.
    pub fn halo(&self) -> Vec<Point> {
        let Some(l) = &self.lattice else {
            return Vec::new();
        };
        if l.wrap {
            return Vec::new();
        }
        let mut out = Vec::new();
        for p in &self.points {
            let Point::RealVector(c) = p else { continue };
            for (a, ax) in l.axes.iter().enumerate() {
                let i = ((c[a] - ax.lo) / ax.step).round() as usize;
                if i == 0 {
                    let mut q = c.clone();
                    q[a] -= ax.step;
                    out.push(Point::RealVector(q));
                }
                if i + 1 == l.counts[a] {
                    let mut q = c.clone();
                    q[a] += ax.step;
                    out.push(Point::RealVector(q));
                }
            }
        }
        out
    }
}

fn directed(a: &[Point], b: &[Point], space: &MetricSpace) -> Result<f64> {
    a.par_iter()
        .map(|x| {
            b.iter().try_fold(f64::INFINITY, |m, y| Ok(m.min(distance(x, y, space)?)))
        })
        .try_reduce(|| 0.0, |u, v| Ok(u.max(v)))
}

/// Hausdorff distance between two nonempty finite point sets.
pub fn hausdorff(a: &[Point], b: &[Point], space: &MetricSpace) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("point set for the Hausdorff distance"));
    }
    Ok(directed(a, b, space)?.max(directed(b, a, space)?))
}

/// Index of the evaluation point nearest to `x` (lowest index on ties).
pub fn nearest_index(x: &Point, points: &[Point], space: &MetricSpace) -> Result<usize> {
    let mut best = (f64::INFINITY, usize::MAX);
    for (i, p) in points.iter().enumerate() {
        let d = distance(x, p, space)?;
        if d < best.0 {
            best = (d, i);
        }
    }
    if best.1 == usize::MAX {
        return Err(Error::Empty("evaluation point set"));
    }
    Ok(best.1)
}

/// Fraction of `reference` points that fall in exactly one of the two level
/// sets, each point being assigned to its nearest evaluation point.
pub fn measure_distance(a: &LevelSet<'_>, b: &LevelSet<'_>, reference: &[Point]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::Empty("reference sample"));
    }
    let (fa, fb) = (a.field(), b.field());
    if fa.len() != fb.len() {
        return Err(Error::GridMismatch(format!(
            "{} vs {} evaluation points",
            fa.len(),
            fb.len()
        )));
    }
    let space = fa.space();
    let differ = reference
        .par_iter()
        .map(|x| {
            let i = nearest_index(x, fa.points(), space)?;
            Ok(usize::from(a.contains(i) != b.contains(i)))
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(differ as f64 / reference.len() as f64)
}

/// Members with at least one non-member neighbour.
pub fn boundary_points(ls: &LevelSet<'_>, grid: &EvaluationGrid) -> Result<Vec<usize>> {
    if grid.len() != ls.field().len() {
        return Err(Error::GridMismatch(format!(
            "grid has {} points, field has {}",
            grid.len(),
            ls.field().len()
        )));
    }
    Ok(ls
        .members()
        .iter()
        .copied()
        .filter(|&i| grid.neighbors(i).iter().any(|&j| !ls.contains(j)))
        .collect())
}

/// Diameter of a finite set; zero for a singleton.
pub fn psi_diameter(c: &[Point], space: &MetricSpace) -> Result<f64> {
    if c.is_empty() {
        return Err(Error::Empty("set for the diameter"));
    }
    (0..c.len())
        .into_par_iter()
        .map(|i| {
            c[i + 1..]
                .iter()
                .try_fold(0.0f64, |m, q| Ok(m.max(distance(&c[i], q, space)?)))
        })
        .try_reduce(|| 0.0, |u, v| Ok(u.max(v)))
}

/// Largest distance from a member to the nearest complement point. An empty
/// member set gives 0.
pub fn psi_inradius(members: &[Point], complement: &[Point], space: &MetricSpace) -> Result<f64> {
    if members.is_empty() {
        return Ok(0.0);
    }
    if complement.is_empty() {
        return Err(Error::Empty("complement for the inradius"));
    }
    directed(members, complement, space)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// `reference_mass` times the fraction of reference points whose nearest
/// evaluation point is a member.
pub fn psi_volume(ls: &LevelSet<'_>, reference: &[Point], reference_mass: f64) -> Result<VolumeEstimate> {
    if reference.is_empty() {
        return Err(Error::Empty("reference sample"));
    }
    let field = ls.field();
    let inside = if ls.is_empty() {
        0
    } else {
        reference
            .par_iter()
            .map(|x| Ok(usize::from(ls.contains(nearest_index(x, field.points(), field.space())?))))
            .collect::<Result<Vec<usize>>>()?
            .into_iter()
            .sum::<usize>()
    };
    let m = reference.len() as f64;
    let frac = inside as f64 / m;
    Ok(VolumeEstimate {
        value: reference_mass * frac,
        std_error: reference_mass * (frac * (1.0 - frac) / m).sqrt(),
    })
}
