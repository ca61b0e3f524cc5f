//! Lens membership and lens depth.
//!
//! Lenses use closed balls: `x` belongs to the lens of `(y1, y2)` iff
//! `d(x, y1) <= d(y1, y2)` and `d(x, y2) <= d(y1, y2)`. Ties count as inside and
//! no tolerance is applied. For `y1 == y2` the lens is the single point `y1`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{distance, pairwise_matrix, DistanceMatrix, MetricSpace, Point, IDENTITY_TOL};
use crate::sampling::{substream, Sampler};

/// A sample of points from one metric space, with an optional cache of its
/// pairwise distances.
#[derive(Debug, Clone)]
pub struct Sample {
    points: Vec<Point>,
    space: MetricSpace,
    cache: Option<DistanceMatrix>,
}

impl Sample {
    /// Validates every point against `space`.
    pub fn new(points: Vec<Point>, space: MetricSpace) -> Result<Sample> {
        for p in &points {
            space.validate(p)?;
        }
        Ok(Sample {
            points,
            space,
            cache: None,
        })
    }

    /// Convenience constructor for real-line samples.
    pub fn from_reals(values: &[f64]) -> Sample {
        Sample {
            points: values.iter().map(|&v| Point::RealVector(vec![v])).collect(),
            space: MetricSpace::Euclidean { dim: 1 },
            cache: None,
        }
    }

    /// Computes and stores the pairwise distance matrix.
    pub fn with_cache(mut self) -> Result<Sample> {
        if self.cache.is_none() {
            self.cache = Some(pairwise_matrix(&self.points, &self.space)?);
        }
        Ok(self)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
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

    pub fn cache(&self) -> Option<&DistanceMatrix> {
        self.cache.as_ref()
    }

    /// The cached matrix, or a freshly computed one.
    pub fn distances(&self) -> Result<std::borrow::Cow<'_, DistanceMatrix>> {
        Ok(match &self.cache {
            Some(m) => std::borrow::Cow::Borrowed(m),
            None => std::borrow::Cow::Owned(pairwise_matrix(&self.points, &self.space)?),
        })
    }

    /// Index of the first sample point identical to `x`, if any.
    pub fn position_of(&self, x: &Point) -> Result<Option<usize>> {
        for (i, p) in self.points.iter().enumerate() {
            if distance(x, p, &self.space)? < IDENTITY_TOL {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }
}

/// Depth values over a list of evaluation points.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthField {
    points: Vec<Point>,
    values: Vec<f64>,
    sample_size: usize,
    space: MetricSpace,
}

impl DepthField {
    pub fn new(points: Vec<Point>, values: Vec<f64>, sample_size: usize, space: MetricSpace) -> Result<DepthField> {
        if points.len() != values.len() {
            return Err(Error::Domain(format!(
                "{} evaluation points but {} depth values",
                points.len(),
                values.len()
            )));
        }
        Ok(DepthField {
            points,
            values,
            sample_size,
            space,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest depth value (0 for an empty field).
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

#[inline]
pub fn lens_contains(d_x_y1: f64, d_x_y2: f64, d_y1_y2: f64) -> bool {
    d_x_y1 <= d_y1_y2 && d_x_y2 <= d_y1_y2
}

/// Whether `x` lies in the lens of `y1` and `y2`.
pub fn in_lens(x: &Point, y1: &Point, y2: &Point, space: &MetricSpace) -> Result<bool> {
    let d12 = distance(y1, y2, space)?;
    Ok(lens_contains(distance(x, y1, space)?, distance(x, y2, space)?, d12))
}

pub(crate) fn pairs(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// Empirical lens depth by the direct double loop over sample pairs.
pub fn empirical_lens_depth(x: &Point, sample: &Sample) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: n });
    }
    let pts = sample.points();
    let space = sample.space();
    let mut count = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            if in_lens(x, &pts[i], &pts[j], space)? {
                count += 1;
            }
        }
    }
    Ok(count as f64 / pairs(n) as f64)
}

/// Number of sample pairs (skipping pairs that involve `skip`) whose lens
/// contains the query with distances `dq` to the sample.
fn lens_count(dq: &[f64], dm: &DistanceMatrix, skip: Option<usize>) -> u64 {
    let n = dq.len();
    let mut count = 0u64;
    for i in 0..n {
        if Some(i) == skip {
            continue;
        }
        let di = dq[i];
        let row = dm.row(i);
        for j in (i + 1)..n {
            if Some(j) != skip && lens_contains(di, dq[j], row[j]) {
                count += 1;
            }
        }
    }
    count
}

fn query_distances(q: &Point, sample: &Sample) -> Result<Vec<f64>> {
    sample
        .points()
        .iter()
        .map(|p| distance(q, p, sample.space()).map_err(Error::from))
        .collect()
}

/// Lens depth of every query, evaluated in parallel against the sample's
/// cached distance matrix. Values equal [`empirical_lens_depth`] exactly.
pub fn batch_depth(queries: &[Point], sample: &Sample) -> Result<DepthField> {
    batch_depth_impl(queries, sample, |_| Ok(None))
}

/// Like [`batch_depth`], but a query identical to a sample point is scored
/// against the other `n - 1` points only.
pub fn batch_depth_leave_one_out(queries: &[Point], sample: &Sample) -> Result<DepthField> {
    if sample.len() < 3 {
        return Err(Error::SampleTooSmall {
            needed: 3,
            got: sample.len(),
        });
    }
    batch_depth_impl(queries, sample, |q| sample.position_of(q))
}

/// Leave-one-out depth of each sample point with respect to the rest.
pub fn self_depth(sample: &Sample) -> Result<DepthField> {
    let n = sample.len();
    if n < 3 {
        return Err(Error::SampleTooSmall { needed: 3, got: n });
    }
    let dm = sample.distances()?;
    let values = (0..n)
        .into_par_iter()
        .map(|i| lens_count(dm.row(i), &dm, Some(i)) as f64 / pairs(n - 1) as f64)
        .collect();
    DepthField::new(sample.points().to_vec(), values, n, *sample.space())
}

fn batch_depth_impl(
    queries: &[Point],
    sample: &Sample,
    skip_for: impl Fn(&Point) -> Result<Option<usize>> + Sync,
) -> Result<DepthField> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: n });
    }
    if queries.is_empty() {
        return Err(Error::Empty("query set"));
    }
    let dm = sample.distances()?;
    let values = queries
        .par_iter()
        .map(|q| {
            let dq = query_distances(q, sample)?;
            let skip = skip_for(q)?;
            let total = if skip.is_some() { pairs(n - 1) } else { pairs(n) };
            Ok(lens_count(&dq, &dm, skip) as f64 / total as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    DepthField::new(queries.to_vec(), values, n, *sample.space())
}

/// Sorted real-line sample for O(log n) lens depth queries.
///
/// On the line the lens of two points is the closed interval between them,
/// so the depth of `x` is one minus the fraction of pairs lying entirely on
/// one side of `x`. This agrees with the metric route except where floating
/// point subtraction makes two distinct gaps round to the same value.
#[derive(Debug, Clone)]
pub struct LineSample {
    sorted: Vec<f64>,
}

impl LineSample {
    pub fn new(values: &[f64]) -> Result<LineSample> {
        if values.len() < 2 {
            return Err(Error::SampleTooSmall {
                needed: 2,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite sample value".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(LineSample { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn depth(&self, x: f64) -> f64 {
        let n = self.sorted.len();
        let below = self.sorted.partition_point(|&v| v < x);
        let above = n - self.sorted.partition_point(|&v| v <= x);
        let outside = pairs(below) + pairs(above);
        (pairs(n) - outside) as f64 / pairs(n) as f64
    }

    pub fn depths(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.depth(x)).collect()
    }
}

/// Population lens depth on the real line, `2 F(x) (1 - F(x))`, for a
/// continuous distribution function `cdf`.
pub fn population_ld_1d(x: f64, cdf: impl Fn(f64) -> f64) -> f64 {
    let f = cdf(x).clamp(0.0, 1.0);
    2.0 * f * (1.0 - f)
}

const MC_CHUNK: usize = 1 << 14;

/// Monte Carlo estimate of P(x in lens(X1, X2)) from `pairs` independent
/// draws. Chunks of draws use their own substreams, so the estimate does not
/// depend on the thread count.
pub fn population_ld_mc(x: &Point, sampler: &Sampler, pairs: usize, seed: u64) -> Result<f64> {
    if pairs == 0 {
        return Err(Error::Domain("need at least one pair".into()));
    }
    let space = sampler.space();
    space.validate(x)?;
    let chunks = pairs.div_ceil(MC_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c as u64);
            let todo = MC_CHUNK.min(pairs - c * MC_CHUNK);
            let mut hits = 0u64;
            for _ in 0..todo {
                let y1 = sampler.draw(&mut rng);
                let y2 = sampler.draw(&mut rng);
                if in_lens(x, &y1, &y2, &space)? {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();
    Ok(hits as f64 / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{normal_cdf, SamplerSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn r(x: f64) -> Point {
        Point::real(vec![x])
    }

    #[test]
    fn lens_membership_examples() {
        let e1 = MetricSpace::Euclidean { dim: 1 };
        assert!(in_lens(&r(0.0), &r(0.0), &r(1.0), &e1).unwrap());
        assert!(!in_lens(&r(3.0), &r(0.0), &r(1.0), &e1).unwrap());
        let e2 = MetricSpace::Euclidean { dim: 2 };
        let mid = Point::real(vec![0.5, 0.5]);
        assert!(in_lens(&mid, &Point::real(vec![0.0, 0.0]), &Point::real(vec![1.0, 1.0]), &e2).unwrap());
        // degenerate pair: only the point itself
        assert!(in_lens(&r(2.0), &r(2.0), &r(2.0), &e1).unwrap());
        assert!(!in_lens(&r(2.1), &r(2.0), &r(2.0), &e1).unwrap());
        assert!(in_lens(&Point::real(vec![0.0, 0.0]), &r(0.0), &r(1.0), &e1).is_err());
    }

    #[test]
    fn three_point_sample() {
        let s = Sample::from_reals(&[0.0, 1.0, 2.0]);
        assert_eq!(empirical_lens_depth(&r(3.0), &s).unwrap(), 0.0);
        assert_eq!(empirical_lens_depth(&r(1.0), &s).unwrap(), 1.0);
        // the lens of (1, 2) is [1, 2], which misses 0
        let f = batch_depth(s.points(), &s).unwrap();
        assert_eq!(f.values(), &[2.0 / 3.0, 1.0, 2.0 / 3.0]);
    }

    #[test]
    fn two_point_sample() {
        let s = Sample::from_reals(&[0.0, 1.0]);
        assert_eq!(empirical_lens_depth(&r(0.0), &s).unwrap(), 1.0);
        let f = batch_depth(&[r(0.7), r(1.2)], &s).unwrap();
        assert_eq!(f.values(), &[1.0, 0.0]);
        assert!(matches!(
            empirical_lens_depth(&r(0.0), &Sample::from_reals(&[1.0])),
            Err(Error::SampleTooSmall { .. })
        ));
        assert!(matches!(batch_depth(&[], &s), Err(Error::Empty(_))));
    }

    #[test]
    fn values_lie_on_the_pair_lattice() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..13).map(|_| rng.sample(StandardNormal)).collect();
        let s = Sample::from_reals(&xs).with_cache().unwrap();
        let q: Vec<Point> = (0..40).map(|i| r(-2.0 + 0.1 * i as f64)).collect();
        let f = batch_depth(&q, &s).unwrap();
        for v in f.values() {
            let k = v * 78.0;
            assert!((k - k.round()).abs() < 1e-9 && (0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn batch_matches_loop_for_normal_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let xs: Vec<f64> = (0..500).map(|_| rng.sample(StandardNormal)).collect();
        let qs: Vec<Point> = (0..500).map(|_| r(rng.sample(StandardNormal))).collect();
        let s = Sample::from_reals(&xs);
        let batch = batch_depth(&qs, &s).unwrap();
        // the direct loop is O(n^2) per query; check a spread of queries
        for i in (0..500).step_by(25) {
            assert_eq!(batch.values()[i], empirical_lens_depth(&qs[i], &s).unwrap());
        }
        let line = LineSample::new(&xs).unwrap();
        let max_gap = qs
            .iter()
            .zip(batch.values())
            .map(|(q, v)| (line.depth(q.as_real().unwrap()[0]) - v).abs())
            .fold(0.0, f64::max);
        assert_eq!(max_gap, 0.0);
    }

    #[test]
    fn leave_one_out_excludes_own_pairs() {
        let s = Sample::from_reals(&[0.0, 1.0, 2.0, 10.0]);
        let f = self_depth(&s).unwrap();
        // point 10 vs pairs of {0,1,2}: none contain it
        assert_eq!(f.values()[3], 0.0);
        // point 1 vs pairs of {0,2,10}: (0,2), (0,10) contain it
        assert!((f.values()[1] - 2.0 / 3.0).abs() < 1e-15);
        let g = batch_depth_leave_one_out(s.points(), &s).unwrap();
        assert_eq!(f.values(), g.values());
    }

    #[test]
    fn line_sample_handles_ties() {
        let line = LineSample::new(&[1.0, 1.0, 2.0]).unwrap();
        let s = Sample::from_reals(&[1.0, 1.0, 2.0]);
        for x in [0.5, 1.0, 1.5, 2.0, 2.5] {
            assert_eq!(line.depth(x), empirical_lens_depth(&r(x), &s).unwrap(), "x={x}");
        }
    }

    #[test]
    fn population_closed_form() {
        assert_eq!(population_ld_1d(0.0, |_| 0.5), 0.5);
        assert_eq!(population_ld_1d(0.0, |_| 0.0), 0.0);
        assert_eq!(population_ld_1d(0.0, |_| 0.25), 0.375);
    }

    #[test]
    fn population_monte_carlo() {
        let normal = Sampler::new(SamplerSpec::Normal { mu: 0.0, sigma: 1.0 }).unwrap();
        let est = population_ld_mc(&r(0.0), &normal, 1_000_000, 9).unwrap();
        assert!((est - population_ld_1d(0.0, normal_cdf)).abs() < 0.002, "{est}");
        let atom = Sampler::new(SamplerSpec::Point { at: vec![1.5] }).unwrap();
        assert_eq!(population_ld_mc(&r(1.5), &atom, 100, 1).unwrap(), 1.0);
        let far = Sampler::new(SamplerSpec::Uniform { lo: 0.0, hi: 1.0 }).unwrap();
        assert_eq!(population_ld_mc(&r(5.0), &far, 1000, 1).unwrap(), 0.0);
    }

    #[test]
    fn monte_carlo_independent_of_threads() {
        let normal = Sampler::new(SamplerSpec::Normal { mu: 0.0, sigma: 1.0 }).unwrap();
        let run = |t| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .unwrap()
                .install(|| population_ld_mc(&r(0.3), &normal, 100_000, 4).unwrap())
        };
        assert_eq!(run(1), run(5));
    }
}
