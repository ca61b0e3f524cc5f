//! Monte Carlo experiments for the large-sample behaviour of lens depth:
//! uniform convergence, level-set convergence and the limit law.
//!
//! Replication `r` at the `k`-th sample size draws from the substream
//! `(seed, k * R + r)`, and oracle integrals use their own chunked substreams,
//! so every report depends on the configuration only.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics};

use crate::depth::{batch_depth, in_lens, DepthField, LineSample, Sample};
use crate::error::{Error, Result};
use crate::levelsets::{boundary_points, hausdorff, level_set, Axis, EvaluationGrid};
use crate::metrics::{MetricSpace, Point};
use crate::sampling::{substream, Law1d, Sampler, SamplerSpec};
use crate::treespace::parse_newick;

const MC_CHUNK: usize = 1 << 14;
// separates oracle streams from replication streams
const ORACLE_STREAM: u64 = 1 << 40;
const PROJECTION_STREAM: u64 = 1 << 41;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Supnorm,
    Levelset,
    Clt,
}

/// A query point: coordinates, or a Newick string for tree samplers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QuerySpec {
    Coords(Vec<f64>),
    Newick(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: ExperimentKind,
    pub sampler: SamplerSpec,
    /// Overrides the sampler's default metric (e.g. Procrustes frames).
    #[serde(default)]
    pub space: Option<MetricSpace>,
    pub n_schedule: Vec<usize>,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Evaluation grid K for one-dimensional laws.
    #[serde(default)]
    pub grid: Option<Axis>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub queries: Vec<QuerySpec>,
    /// Draws used by Monte Carlo oracles.
    #[serde(default = "default_oracle_pairs")]
    pub oracle_pairs: usize,
}

fn default_oracle_pairs() -> usize {
    1_000_000
}

impl ExperimentConfig {
    pub fn new(sampler: SamplerSpec, n_schedule: Vec<usize>, replications: usize, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            experiment: ExperimentKind::Supnorm,
            sampler,
            space: None,
            n_schedule,
            replications,
            seed,
            grid: None,
            lambda: None,
            queries: Vec::new(),
            oracle_pairs: default_oracle_pairs(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_schedule.is_empty() {
            return Err(Error::Empty("n schedule"));
        }
        if self.n_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("n schedule must be strictly increasing".into()));
        }
        if self.n_schedule[0] < 2 {
            return Err(Error::SampleTooSmall {
                needed: 2,
                got: self.n_schedule[0],
            });
        }
        if self.replications == 0 {
            return Err(Error::Domain("need at least one replication".into()));
        }
        if self.oracle_pairs == 0 {
            return Err(Error::Domain("oracle_pairs must be positive".into()));
        }
        Ok(())
    }

    fn sampler(&self) -> Result<(Sampler, MetricSpace)> {
        let sampler = Sampler::new(self.sampler.clone())?;
        let native = sampler.space();
        let space = match self.space {
            None => native,
            Some(s) => {
                let compatible = match (s, native) {
                    (MetricSpace::Stiefel { rows, cols, .. }, MetricSpace::Stiefel { rows: r, cols: c, .. }) => {
                        rows == r && cols == c
                    }
                    (a, b) => a == b,
                };
                if !compatible {
                    return Err(Error::Domain(format!("sampler draws from {native}, not {s}")));
                }
                s
            }
        };
        Ok((sampler, space))
    }

    fn grid_axis(&self) -> Result<Axis> {
        match self.grid {
            Some(a) => Axis::new(a.lo, a.hi, a.step),
            None => Axis::new(-3.0, 3.0, 0.01),
        }
    }

    /// Query points as elements of the experiment's space.
    pub fn query_points(&self) -> Result<Vec<Point>> {
        let (sampler, space) = self.sampler()?;
        self.queries
            .iter()
            .map(|q| match q {
                QuerySpec::Coords(c) => Ok(space.point_from_coords(c.clone())?),
                QuerySpec::Newick(text) => {
                    let universe = sampler
                        .base_tree()
                        .map(|t| t.labels().to_vec())
                        .ok_or_else(|| Error::Domain("Newick query for a non-tree sampler".into()))?;
                    Ok(Point::tree(parse_newick(text, Some(&universe))?))
                }
            })
            .collect()
    }
}

/// Distribution of an error statistic over the replications at one n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub n: usize,
    pub replications: usize,
    pub median: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
    pub mean: f64,
}

impl ErrorStats {
    fn new(n: usize, values: Vec<f64>) -> ErrorStats {
        let replications = values.len();
        let mean = values.iter().sum::<f64>() / replications as f64;
        let mut data = Data::new(values);
        ErrorStats {
            n,
            replications,
            median: data.quantile(0.5),
            lower_quartile: data.quantile(0.25),
            upper_quartile: data.quantile(0.75),
            mean,
        }
    }
}

/// Trend of the median along the n schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub nonincreasing: bool,
    pub strictly_decreasing: bool,
    /// `median(n_k) / median(n_{k+1})`.
    pub ratios: Vec<f64>,
    /// Fitted exponent `log(ratio) / log(n_{k+1} / n_k)`; about 1/2 under the
    /// usual U-statistic rate. This is a heuristic, not a theorem.
    pub exponents: Vec<f64>,
}

impl Trend {
    fn new(stats: &[ErrorStats]) -> Trend {
        let pairs: Vec<(&ErrorStats, &ErrorStats)> = stats.iter().zip(stats.iter().skip(1)).collect();
        let ratios: Vec<f64> = pairs.iter().map(|(a, b)| a.median / b.median).collect();
        Trend {
            nonincreasing: pairs.iter().all(|(a, b)| b.median <= a.median),
            strictly_decreasing: pairs.iter().all(|(a, b)| b.median < a.median),
            exponents: pairs
                .iter()
                .zip(&ratios)
                .map(|((a, b), r)| r.ln() / (b.n as f64 / a.n as f64).ln())
                .collect(),
            ratios,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub experiment: ExperimentKind,
    /// What the error statistic measures.
    pub statistic: String,
    pub per_n: Vec<ErrorStats>,
    pub trend: Trend,
    /// Hausdorff distance between estimated and true boundaries, when
    /// computed.
    pub boundary: Option<Vec<ErrorStats>>,
    pub boundary_trend: Option<Trend>,
}

fn replicate<T: Send>(cfg: &ExperimentConfig, k: usize, f: impl Fn(&mut rand_chacha::ChaCha8Rng) -> Result<T> + Sync) -> Result<Vec<T>> {
    let r = cfg.replications;
    (0..r)
        .into_par_iter()
        .map(|i| f(&mut substream(cfg.seed, (k * r + i) as u64)))
        .collect()
}

fn grid_values(axis: &Axis) -> Vec<f64> {
    (0..axis.count()).map(|i| axis.value(i)).collect()
}

/// Sup-norm error of the empirical depth over K, per sample size. For
/// one-dimensional laws K is the configured grid and the oracle is the
/// closed form; otherwise K is the query list and the oracle is a Monte
/// Carlo estimate with `oracle_pairs` draws.
pub fn supnorm_experiment(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let (sampler, space) = cfg.sampler()?;
    let per_n = if let Some(law) = sampler.law_1d() {
        let xs = grid_values(&cfg.grid_axis()?);
        let truth: Vec<f64> = xs.iter().map(|&x| law.lens_depth(x)).collect();
        cfg.n_schedule
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let errs = replicate(cfg, k, |rng| {
                    let draws: Vec<f64> = (0..n).map(|_| law.draw(rng)).collect();
                    let line = LineSample::new(&draws)?;
                    Ok(xs.iter().zip(&truth).map(|(&x, t)| (line.depth(x) - t).abs()).fold(0.0, f64::max))
                })?;
                Ok(ErrorStats::new(n, errs))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        let queries = cfg.query_points()?;
        if queries.is_empty() {
            return Err(Error::Domain(
                "no depth oracle: a multivariate law needs query points for the Monte Carlo oracle".into(),
            ));
        }
        let (truth, _) = p2_matrix(&queries, &sampler, &space, cfg.oracle_pairs, cfg.seed)?;
        cfg.n_schedule
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let errs = replicate(cfg, k, |rng| {
                    let sample = Sample::new(sampler.draw_many(n, rng), space)?;
                    let field = batch_depth(&queries, &sample)?;
                    Ok(field.values().iter().zip(&truth).map(|(d, t)| (d - t).abs()).fold(0.0, f64::max))
                })?;
                Ok(ErrorStats::new(n, errs))
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok(ConvergenceReport {
        experiment: ExperimentKind::Supnorm,
        statistic: "sup over K of |LD_n - LD|".into(),
        trend: Trend::new(&per_n),
        per_n,
        boundary: None,
        boundary_trend: None,
    })
}

/// End points of `{LD >= lambda}` for a one-dimensional law, or `None` for
/// an unbounded side.
pub fn true_level_interval(law: &Law1d, lambda: f64) -> Result<(Option<f64>, Option<f64>)> {
    let sup = if law.is_continuous() { 0.5 } else { 1.0 };
    if !(0.0..=sup).contains(&lambda) {
        return Err(Error::Domain(format!(
            "degenerate experiment: level {lambda} is outside [0, {sup}], the range of the population depth"
        )));
    }
    if lambda == 0.0 {
        return Ok((None, None));
    }
    if let Law1d::PointMass { at } = law {
        return Ok((Some(*at), Some(*at)));
    }
    let a = (1.0 - (1.0 - 2.0 * lambda).max(0.0).sqrt()) / 2.0;
    Ok((Some(law.quantile(a)), Some(law.quantile(1.0 - a))))
}

fn hausdorff_or_inf(a: &[Point], b: &[Point], space: &MetricSpace) -> Result<f64> {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => Ok(0.0),
        (false, false) => hausdorff(a, b, space),
        _ => Ok(f64::INFINITY),
    }
}

/// Hausdorff distance between the estimated and true level sets on the grid
/// K, and between their boundaries. One-dimensional laws only.
pub fn levelset_experiment(cfg: &ExperimentConfig, lambda: f64) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let (sampler, space) = cfg.sampler()?;
    let law = sampler
        .law_1d()
        .ok_or_else(|| Error::Domain("the level-set experiment needs a one-dimensional law".into()))?;
    let (lo, hi) = true_level_interval(&law, lambda)?;
    let axis = cfg.grid_axis()?;
    let grid = EvaluationGrid::lattice(&[axis], false)?;
    let xs = grid_values(&axis);
    let inside = |x: f64| lo.is_none_or(|l| x >= l) && hi.is_none_or(|h| x <= h);
    let true_set: Vec<Point> = xs.iter().filter(|&&x| inside(x)).map(|&x| Point::real(vec![x])).collect();
    if true_set.is_empty() {
        return Err(Error::Domain(format!("the true level set at {lambda} misses the grid")));
    }
    let true_boundary: Vec<Point> = [lo, hi]
        .into_iter()
        .flatten()
        .filter(|&e| e >= axis.lo && e <= axis.hi)
        .map(|e| Point::real(vec![e]))
        .collect();
    let mut per_n = Vec::new();
    let mut boundary = Vec::new();
    for (k, &n) in cfg.n_schedule.iter().enumerate() {
        let errs = replicate(cfg, k, |rng| {
            let draws: Vec<f64> = (0..n).map(|_| law.draw(rng)).collect();
            let line = LineSample::new(&draws)?;
            let field = DepthField::new(grid.points().to_vec(), line.depths(&xs), n, space)?;
            let ls = level_set(&field, lambda);
            let est = ls.member_points();
            let est_boundary: Vec<Point> = boundary_points(&ls, &grid)?
                .into_iter()
                .map(|i| grid.points()[i].clone())
                .collect();
            Ok((
                hausdorff_or_inf(&est, &true_set, &space)?,
                hausdorff_or_inf(&est_boundary, &true_boundary, &space)?,
            ))
        })?;
        per_n.push(ErrorStats::new(n, errs.iter().map(|e| e.0).collect()));
        boundary.push(ErrorStats::new(n, errs.iter().map(|e| e.1).collect()));
    }
    Ok(ConvergenceReport {
        experiment: ExperimentKind::Levelset,
        statistic: format!("Hausdorff distance of level sets at {lambda} on K"),
        trend: Trend::new(&per_n),
        per_n,
        boundary_trend: Some(Trend::new(&boundary)),
        boundary: Some(boundary),
    })
}

/// Joint estimates of `P2(f_x1)`, `P2(f_x2)` and `P2(f_x1 f_x2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P2Estimate {
    pub p1: f64,
    pub p2: f64,
    pub p12: f64,
}

/// Monte Carlo estimates of the lens kernel moments for two points from the
/// same pair draws.
pub fn p2_functional(x1: &Point, x2: &Point, sampler: &Sampler, pairs: usize, seed: u64) -> Result<P2Estimate> {
    let space = sampler.space();
    let (p, m) = p2_matrix(&[x1.clone(), x2.clone()], sampler, &space, pairs, seed)?;
    Ok(P2Estimate {
        p1: p[0],
        p2: p[1],
        p12: m[0][1],
    })
}

/// `P2(f_xi)` for every point and `P2(f_xi f_xj)` for every pair, all from
/// one stream of pair draws. The diagonal of the matrix equals the vector.
pub fn p2_matrix(points: &[Point], sampler: &Sampler, space: &MetricSpace, pairs: usize, seed: u64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if pairs == 0 {
        return Err(Error::Domain("need at least one pair".into()));
    }
    for p in points {
        space.validate(p)?;
    }
    let k = points.len();
    let chunks = pairs.div_ceil(MC_CHUNK);
    let counts: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, ORACLE_STREAM + c as u64);
            let mut counts = vec![0u64; k * k];
            let mut hit = vec![false; k];
            for _ in 0..MC_CHUNK.min(pairs - c * MC_CHUNK) {
                let y1 = sampler.draw(&mut rng);
                let y2 = sampler.draw(&mut rng);
                for (h, x) in hit.iter_mut().zip(points) {
                    *h = in_lens(x, &y1, &y2, space)?;
                }
                accumulate(&mut counts, &hit, &hit);
            }
            Ok(counts)
        })
        .collect::<Result<_>>()?;
    let m = reduce(counts, k, pairs);
    Ok(((0..k).map(|i| m[i][i]).collect(), m))
}

fn accumulate(counts: &mut [u64], a: &[bool], b: &[bool]) {
    let k = a.len();
    for i in 0..k {
        if a[i] {
            for j in 0..k {
                if b[j] {
                    counts[i * k + j] += 1;
                }
            }
        }
    }
}

fn reduce(chunks: Vec<Vec<u64>>, k: usize, total: usize) -> Vec<Vec<f64>> {
    let mut sum = vec![0u64; k * k];
    for c in chunks {
        for (s, v) in sum.iter_mut().zip(c) {
            *s += v;
        }
    }
    (0..k)
        .map(|i| (0..k).map(|j| sum[i * k + j] as f64 / total as f64).collect())
        .collect()
}

/// `E[h_xi(Y) h_xj(Y)]` where `h_x(y) = P(x in lens(y, Y'))`. For continuous
/// real laws `h_x` is a step function and the moment is exact; point masses
/// average the exact `h` over draws of `Y`; other spaces estimate it from
/// triples `(Y, Y1, Y2)` as `E[f_xi(Y, Y1) f_xj(Y, Y2)]`.
pub fn projection_moments(points: &[Point], sampler: &Sampler, space: &MetricSpace, draws: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if draws == 0 {
        return Err(Error::Domain("need at least one draw".into()));
    }
    for p in points {
        space.validate(p)?;
    }
    if let Some(law) = sampler.law_1d().filter(Law1d::is_continuous) {
        let xs: Vec<f64> = points.iter().map(|p| p.as_real().expect("validated")[0]).collect();
        return Ok(xs
            .iter()
            .map(|&a| xs.iter().map(|&b| step_moment(&law, a.min(b), a.max(b))).collect())
            .collect());
    }
    let k = points.len();
    let chunks = draws.div_ceil(MC_CHUNK);
    let law = sampler.law_1d();
    let coords: Vec<f64> = points.iter().filter_map(|p| p.as_real().map(|c| c[0])).collect();
    let sums: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, PROJECTION_STREAM + c as u64);
            let mut sums = vec![0.0; k * k];
            let (mut a, mut b) = (vec![false; k], vec![false; k]);
            let mut counts = vec![0u64; k * k];
            for _ in 0..MC_CHUNK.min(draws - c * MC_CHUNK) {
                if let Some(law) = law {
                    let y = law.draw(&mut rng);
                    let h: Vec<f64> = coords.iter().map(|&x| law.lens_projection(x, y)).collect();
                    for i in 0..k {
                        for j in 0..k {
                            sums[i * k + j] += h[i] * h[j];
                        }
                    }
                } else {
                    let y = sampler.draw(&mut rng);
                    let y1 = sampler.draw(&mut rng);
                    let y2 = sampler.draw(&mut rng);
                    for i in 0..k {
                        a[i] = in_lens(&points[i], &y, &y1, space)?;
                        b[i] = in_lens(&points[i], &y, &y2, space)?;
                    }
                    accumulate(&mut counts, &a, &b);
                }
            }
            for (s, c) in sums.iter_mut().zip(counts) {
                *s += c as f64;
            }
            Ok(sums)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![0.0; k * k];
    for s in sums {
        for (t, v) in total.iter_mut().zip(s) {
            *t += v;
        }
    }
    // symmetrize the triple estimate, whose two slots use different draws
    Ok((0..k)
        .map(|i| {
            (0..k)
                .map(|j| 0.5 * (total[i * k + j] + total[j * k + i]) / draws as f64)
                .collect()
        })
        .collect())
}

// E[h_a(Y) h_b(Y)] for a <= b: h_x is 1 - F(x) left of x and F(x) right of it
fn step_moment(law: &Law1d, a: f64, b: f64) -> f64 {
    let (fa, fb) = (law.cdf(a), law.cdf(b));
    fa * (1.0 - fa) * (1.0 - fb) + (fb - fa) * fa * (1.0 - fb) + (1.0 - fb) * fa * fb
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub n: usize,
    pub replications: usize,
    /// Population depth at each query point.
    pub depth: Vec<f64>,
    /// Empirical covariance of `sqrt(n) (LD_n(x_i) - LD(x_i))`.
    pub empirical: Vec<Vec<f64>>,
    /// Monte Carlo standard error of each empirical entry.
    pub std_errors: Vec<Vec<f64>>,
    /// `4 (P2(f_i f_j) - P2(f_i) P2(f_j))`.
    pub kernel_target: Vec<Vec<f64>>,
    /// `4 Cov(h_i(Y), h_j(Y))`, the limit of the U-statistic covariance.
    pub projection_target: Vec<Vec<f64>>,
    /// Exact covariance of `sqrt(n) LD_n` at this n:
    /// `(4 (n - 2) zeta1 + 2 zeta2) / (n - 1)`.
    pub finite_n_target: Vec<Vec<f64>>,
    pub p2: Vec<Vec<f64>>,
}

impl CltReport {
    /// Distance of an empirical entry from a target, in standard errors.
    pub fn z_score(&self, target: &[Vec<f64>], i: usize, j: usize) -> f64 {
        (self.empirical[i][j] - target[i][j]) / self.std_errors[i][j]
    }
}

/// Replicated check of the limit law at the query points, using the largest
/// sample size of the schedule.
pub fn clt_experiment(cfg: &ExperimentConfig, points: &[Point]) -> Result<CltReport> {
    cfg.validate()?;
    if cfg.replications < 500 {
        return Err(Error::Domain(format!(
            "the covariance check needs at least 500 replications, got {}",
            cfg.replications
        )));
    }
    if points.is_empty() {
        return Err(Error::Empty("query points"));
    }
    let (sampler, space) = cfg.sampler()?;
    let n = *cfg.n_schedule.last().expect("validated");
    let k = points.len();
    let (p, p2) = p2_matrix(points, &sampler, &space, cfg.oracle_pairs, cfg.seed)?;
    let law = sampler.law_1d();
    let xs: Vec<f64> = points.iter().filter_map(|q| q.as_real().map(|c| c[0])).collect();
    let depth: Vec<f64> = match law {
        Some(law) => xs.iter().map(|&x| law.lens_depth(x)).collect(),
        None => p.clone(),
    };
    let root_n = (n as f64).sqrt();
    let z: Vec<Vec<f64>> = replicate(cfg, cfg.n_schedule.len() - 1, |rng| {
        let values = match law {
            Some(law) => {
                let draws: Vec<f64> = (0..n).map(|_| law.draw(rng)).collect();
                LineSample::new(&draws)?.depths(&xs)
            }
            None => {
                let sample = Sample::new(sampler.draw_many(n, rng), space)?;
                batch_depth(points, &sample)?.values().to_vec()
            }
        };
        Ok(values.iter().zip(&depth).map(|(v, d)| root_n * (v - d)).collect())
    })?;
    let r = z.len() as f64;
    let means: Vec<f64> = (0..k).map(|i| z.iter().map(|row| row[i]).sum::<f64>() / r).collect();
    let mut empirical = vec![vec![0.0; k]; k];
    let mut std_errors = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            let w: Vec<f64> = z.iter().map(|row| (row[i] - means[i]) * (row[j] - means[j])).collect();
            let mean_w = w.iter().sum::<f64>() / r;
            empirical[i][j] = w.iter().sum::<f64>() / (r - 1.0);
            let var_w = w.iter().map(|x| (x - mean_w) * (x - mean_w)).sum::<f64>() / (r - 1.0);
            std_errors[i][j] = (var_w / r).sqrt();
        }
    }
    let h = projection_moments(points, &sampler, &space, cfg.oracle_pairs, cfg.seed)?;
    let nf = n as f64;
    let zeta2 = |i: usize, j: usize| p2[i][j] - p[i] * p[j];
    let zeta1 = |i: usize, j: usize| h[i][j] - depth[i] * depth[j];
    let table = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> { (0..k).map(|i| (0..k).map(|j| f(i, j)).collect()).collect() };
    Ok(CltReport {
        n,
        replications: cfg.replications,
        depth: depth.clone(),
        empirical,
        std_errors,
        kernel_target: table(&|i, j| 4.0 * zeta2(i, j)),
        projection_target: table(&|i, j| 4.0 * zeta1(i, j)),
        finite_n_target: table(&|i, j| (4.0 * (nf - 2.0) * zeta1(i, j) + 2.0 * zeta2(i, j)) / (nf - 1.0)),
        p2,
    })
}

/// Output of [`run`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentOutput {
    Convergence(ConvergenceReport),
    Clt(CltReport),
}

/// Runs the experiment named in the configuration.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    match cfg.experiment {
        ExperimentKind::Supnorm => supnorm_experiment(cfg).map(ExperimentOutput::Convergence),
        ExperimentKind::Levelset => {
            let lambda = cfg
                .lambda
                .ok_or_else(|| Error::Domain("the level-set experiment needs `lambda`".into()))?;
            levelset_experiment(cfg, lambda).map(ExperimentOutput::Convergence)
        }
        ExperimentKind::Clt => clt_experiment(cfg, &cfg.query_points()?).map(ExperimentOutput::Clt),
    }
}
