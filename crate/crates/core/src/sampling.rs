//! Seeded random generation of points and the one-dimensional population
//! laws used as oracles.
//!
//! Parallel work never shares a generator. Each task gets its own ChaCha
//! stream derived from `(seed, task index)`, so results do not depend on the
//! number of worker threads.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalLaw, StudentsT as StudentsTLaw};

use crate::error::Error;
use crate::metrics::{Frame, MetricSpace, Point};
use crate::treespace::{self, parse_newick, Tree};

/// Independent generator for task `index` of a run seeded with `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Uniformly random orthonormal frame (Gram-Schmidt on a Gaussian matrix).
pub fn random_frame<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Frame {
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(cols);
    while columns.len() < cols {
        let mut v: Vec<f64> = (0..rows).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for c in &columns {
                let dot: f64 = v.iter().zip(c).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            columns.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    let mut data = vec![0.0; rows * cols];
    for (c, col) in columns.iter().enumerate() {
        for r in 0..rows {
            data[r * cols + c] = col[r];
        }
    }
    Frame::new(rows, cols, data).expect("Gram-Schmidt output is orthonormal")
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    NormalLaw::standard().inverse_cdf(p)
}

pub fn normal_cdf(x: f64) -> f64 {
    NormalLaw::standard().cdf(x)
}

/// Student-t quantile with `v > 0` degrees of freedom. Closed forms for one
/// and two degrees of freedom, otherwise an incomplete-beta inversion polished
/// by Newton steps on the cdf.
pub fn student_t_quantile(v: f64, p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if v == 1.0 {
        return (PI * (p - 0.5)).tan();
    }
    if v == 2.0 {
        return (2.0 * p - 1.0) / (2.0 * p * (1.0 - p)).sqrt();
    }
    let law = StudentsTLaw::new(0.0, 1.0, v).expect("valid t law");
    let mut x = law.inverse_cdf(p);
    for _ in 0..2 {
        let f = statrs::distribution::Continuous::pdf(&law, x);
        if f <= 0.0 || !x.is_finite() {
            break;
        }
        x -= (law.cdf(x) - p) / f;
    }
    x
}

pub fn student_t_cdf(v: f64, x: f64) -> f64 {
    StudentsTLaw::new(0.0, 1.0, v).expect("valid t law").cdf(x)
}

/// A real-valued law with known distribution function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law1d {
    Normal { mu: f64, sigma: f64 },
    StudentT { v: f64, loc: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
    PointMass { at: f64 },
}

impl Law1d {
    /// P(X <= x).
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Law1d::Normal { mu, sigma } => normal_cdf((x - mu) / sigma),
            Law1d::StudentT { v, loc, scale } => student_t_cdf(v, (x - loc) / scale),
            Law1d::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Law1d::PointMass { at } => {
                if x >= at {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// P(X < x).
    pub fn cdf_left(&self, x: f64) -> f64 {
        match *self {
            Law1d::PointMass { at } => {
                if x > at {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.cdf(x),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            Law1d::Normal { mu, sigma } => mu + sigma * normal_quantile(p),
            Law1d::StudentT { v, loc, scale } => loc + scale * student_t_quantile(v, p),
            Law1d::Uniform { lo, hi } => lo + p.clamp(0.0, 1.0) * (hi - lo),
            Law1d::PointMass { at } => at,
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Law1d::PointMass { .. })
    }

    /// Population lens depth P(min(X1,X2) <= x <= max(X1,X2)). In one
    /// dimension the lens of two points is the closed interval between them.
    pub fn lens_depth(&self, x: f64) -> f64 {
        let below = self.cdf_left(x);
        let above = 1.0 - self.cdf(x);
        (1.0 - below * below - above * above).clamp(0.0, 1.0)
    }

    /// h(y) = P(x lies in the lens of y and an independent draw), the first
    /// Hoeffding projection of the lens kernel at `x`.
    pub fn lens_projection(&self, x: f64, y: f64) -> f64 {
        if y < x {
            1.0 - self.cdf_left(x)
        } else if y > x {
            self.cdf(x)
        } else {
            1.0
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Law1d::Normal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                mu + sigma * z
            }
            Law1d::StudentT { v, loc, scale } => {
                let t: f64 = StudentT::new(v).expect("valid t law").sample(rng);
                loc + scale * t
            }
            Law1d::Uniform { lo, hi } => rng.random_range(lo..hi),
            Law1d::PointMass { at } => at,
        }
    }
}

/// Serializable description of a sampling law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum SamplerSpec {
    Normal {
        #[serde(default)]
        mu: f64,
        #[serde(default = "one")]
        sigma: f64,
    },
    StudentT {
        v: f64,
        #[serde(default)]
        loc: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Degenerate law at `at` (any dimension).
    Point {
        at: Vec<f64>,
    },
    /// Isotropic Gaussian vector in R^d.
    GaussianVector {
        mean: Vec<f64>,
        #[serde(default = "one")]
        sigma: f64,
    },
    /// von Mises-Fisher law on the unit sphere of R^d.
    SphereVmf {
        mean: Vec<f64>,
        kappa: f64,
    },
    /// Uniform orthonormal frames.
    StiefelUniform {
        rows: usize,
        cols: usize,
    },
    /// Base tree with log-normal edge-length noise; with probability
    /// `topology_prob` the topology is replaced by a random binary one.
    BhvNoise {
        base_tree: String,
        sigma: f64,
        #[serde(default)]
        topology_prob: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// A ready-to-use sampler built from a [`SamplerSpec`].
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: SamplerSpec,
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Line(Law1d),
    Point(Vec<f64>),
    Gaussian(Vec<f64>, f64),
    Vmf(Vec<f64>, f64),
    Stiefel(usize, usize),
    Bhv(Arc<Tree>, f64, f64),
}

impl Sampler {
    pub fn new(spec: SamplerSpec) -> Result<Sampler, Error> {
        let bad = |m: &str| Err(Error::Domain(format!("invalid sampler {spec:?}: {m}")));
        let kind = match &spec {
            SamplerSpec::Normal { mu, sigma } => {
                if !(*sigma > 0.0) {
                    return bad("sigma must be positive");
                }
                SamplerKind::Line(Law1d::Normal { mu: *mu, sigma: *sigma })
            }
            SamplerSpec::StudentT { v, loc, scale } => {
                if !(*v > 0.0 && *scale > 0.0) {
                    return bad("v and scale must be positive");
                }
                SamplerKind::Line(Law1d::StudentT { v: *v, loc: *loc, scale: *scale })
            }
            SamplerSpec::Uniform { lo, hi } => {
                if !(lo < hi) {
                    return bad("lo must be below hi");
                }
                SamplerKind::Line(Law1d::Uniform { lo: *lo, hi: *hi })
            }
            SamplerSpec::Point { at } => {
                if at.is_empty() {
                    return bad("empty location");
                }
                SamplerKind::Point(at.clone())
            }
            SamplerSpec::GaussianVector { mean, sigma } => {
                if mean.is_empty() || !(*sigma > 0.0) {
                    return bad("need a mean and positive sigma");
                }
                SamplerKind::Gaussian(mean.clone(), *sigma)
            }
            SamplerSpec::SphereVmf { mean, kappa } => {
                let norm = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
                if mean.len() < 2 || !(norm > 0.0) || !(*kappa >= 0.0) {
                    return bad("need a nonzero mean of dimension >= 2 and kappa >= 0");
                }
                SamplerKind::Vmf(mean.iter().map(|x| x / norm).collect(), *kappa)
            }
            SamplerSpec::StiefelUniform { rows, cols } => {
                if *cols == 0 || cols > rows {
                    return bad("need 0 < cols <= rows");
                }
                SamplerKind::Stiefel(*rows, *cols)
            }
            SamplerSpec::BhvNoise {
                base_tree,
                sigma,
                topology_prob,
            } => {
                let tree = parse_newick(base_tree.trim(), None)?;
                if !(*sigma >= 0.0) || !(0.0..=1.0).contains(topology_prob) {
                    return bad("need sigma >= 0 and topology_prob in [0, 1]");
                }
                SamplerKind::Bhv(Arc::new(tree), *sigma, *topology_prob)
            }
        };
        Ok(Sampler { spec, kind })
    }

    pub fn spec(&self) -> &SamplerSpec {
        &self.spec
    }

    pub fn space(&self) -> MetricSpace {
        match &self.kind {
            SamplerKind::Line(_) => MetricSpace::Euclidean { dim: 1 },
            SamplerKind::Point(at) => MetricSpace::Euclidean { dim: at.len() },
            SamplerKind::Gaussian(m, _) => MetricSpace::Euclidean { dim: m.len() },
            SamplerKind::Vmf(m, _) => MetricSpace::Sphere { dim: m.len() },
            SamplerKind::Stiefel(rows, cols) => MetricSpace::Stiefel {
                rows: *rows,
                cols: *cols,
                mode: crate::metrics::StiefelMode::Chordal,
            },
            SamplerKind::Bhv(t, _, _) => MetricSpace::Bhv { leaves: t.leaf_count() },
        }
    }

    /// The one-dimensional law, when the sampler has one.
    pub fn law_1d(&self) -> Option<Law1d> {
        match &self.kind {
            SamplerKind::Line(law) => Some(*law),
            SamplerKind::Point(at) if at.len() == 1 => Some(Law1d::PointMass { at: at[0] }),
            _ => None,
        }
    }

    /// Base tree of a tree-space sampler.
    pub fn base_tree(&self) -> Option<&Tree> {
        match &self.kind {
            SamplerKind::Bhv(t, _, _) => Some(t),
            _ => None,
        }
    }

    /// Draws a real value; only valid for one-dimensional samplers.
    pub fn draw_real(&self, rng: &mut dyn RngCore) -> Option<f64> {
        self.law_1d().map(|law| law.draw(rng))
    }

    pub fn draw(&self, rng: &mut dyn RngCore) -> Point {
        match &self.kind {
            SamplerKind::Line(law) => Point::RealVector(vec![law.draw(rng)]),
            SamplerKind::Point(at) => Point::RealVector(at.clone()),
            SamplerKind::Gaussian(mean, sigma) => Point::RealVector(
                mean.iter()
                    .map(|m| {
                        let z: f64 = rng.sample(StandardNormal);
                        m + sigma * z
                    })
                    .collect(),
            ),
            SamplerKind::Vmf(mean, kappa) => Point::UnitVector(sample_vmf(mean, *kappa, rng)),
            SamplerKind::Stiefel(rows, cols) => Point::Frame(random_frame(*rows, *cols, rng)),
            SamplerKind::Bhv(base, sigma, topology_prob) => Point::tree(noisy_tree(base, *sigma, *topology_prob, rng)),
        }
    }

    pub fn draw_many(&self, n: usize, rng: &mut dyn RngCore) -> Vec<Point> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

/// Wood's rejection sampler for the von Mises-Fisher law.
fn sample_vmf(mean: &[f64], kappa: f64, rng: &mut dyn RngCore) -> Vec<f64> {
    let d = mean.len();
    if kappa == 0.0 {
        return random_unit_vector(d, rng);
    }
    let dm1 = (d - 1) as f64;
    let b = (-2.0 * kappa + (4.0 * kappa * kappa + dm1 * dm1).sqrt()) / dm1;
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + dm1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(dm1 / 2.0, dm1 / 2.0).expect("valid beta");
    let w = loop {
        let z: f64 = beta.sample(rng);
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = rng.random();
        if kappa * w + dm1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            break w;
        }
    };
    // uniform direction orthogonal to the mean
    let tangent = loop {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let dot: f64 = v.iter().zip(mean).map(|(x, m)| x * m).sum();
        v.iter_mut().zip(mean).for_each(|(x, m)| *x -= dot * m);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            break v.into_iter().map(|x| x / norm).collect::<Vec<_>>();
        }
    };
    let s = (1.0 - w * w).max(0.0).sqrt();
    let mut out: Vec<f64> = mean.iter().zip(&tangent).map(|(m, t)| w * m + s * t).collect();
    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    out.iter_mut().for_each(|x| *x /= norm);
    out
}

fn noisy_tree(base: &Tree, sigma: f64, topology_prob: f64, rng: &mut dyn RngCore) -> Tree {
    let mut noise = |l: f64| {
        let z: f64 = rng.sample(StandardNormal);
        l * (sigma * z).exp()
    };
    let pendants: Vec<f64> = base.pendants().iter().map(|&l| noise(l)).collect();
    let splits: Vec<_> = base.splits().iter().map(|&(s, l)| (s, noise(l))).collect();
    if topology_prob > 0.0 && rng.random::<f64>() < topology_prob {
        let random = treespace::random_binary_tree(base.labels(), rng);
        let mean_len = if splits.is_empty() {
            0.5
        } else {
            splits.iter().map(|(_, l)| l).sum::<f64>() / splits.len() as f64
        };
        let splits = random.splits().iter().map(|&(s, l)| (s, l * mean_len / 0.525));
        return Tree::new(base.labels().to_vec(), splits, pendants).expect("random topology is valid");
    }
    Tree::new(base.labels().to_vec(), splits, pendants).expect("noise keeps lengths positive")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let a: u64 = substream(5, 0).random();
        let b: u64 = substream(5, 0).random();
        let c: u64 = substream(5, 1).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn t_quantiles_match_cdf() {
        for v in [1.0, 2.0, 3.0, 4.5, 5.0, 30.0] {
            for p in [0.5001, 0.6, 0.75, 0.9, 0.99, 0.9999] {
                let q = student_t_quantile(v, p);
                // the cdf itself is only good to about 1e-12 near the median
                assert!((student_t_cdf(v, q) - p).abs() < 1e-11, "v={v} p={p}");
                assert!((student_t_quantile(v, 1.0 - p) + q).abs() < 1e-9 * q.abs().max(1.0));
            }
        }
        assert_eq!(student_t_quantile(3.0, 1.0), f64::INFINITY);
    }

    #[test]
    fn one_dimensional_lens_depth_closed_form() {
        let law = Law1d::Normal { mu: 0.0, sigma: 1.0 };
        assert!((law.lens_depth(0.0) - 0.5).abs() < 1e-15);
        let x = law.quantile(0.25);
        assert!((law.lens_depth(x) - 0.375).abs() < 1e-12);
        let atom = Law1d::PointMass { at: 2.0 };
        assert_eq!(atom.lens_depth(2.0), 1.0);
        assert_eq!(atom.lens_depth(2.5), 0.0);
    }

    #[test]
    fn vmf_concentrates_around_mean() {
        let s = Sampler::new(SamplerSpec::SphereVmf { mean: vec![0.0, 0.0, 2.0], kappa: 50.0 }).unwrap();
        let mut rng = substream(1, 0);
        let mean_z: f64 = (0..2000)
            .map(|_| match s.draw(&mut rng) {
                Point::UnitVector(v) => {
                    assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
                    v[2]
                }
                _ => unreachable!(),
            })
            .sum::<f64>()
            / 2000.0;
        // E[w] = coth(kappa) - 1/kappa in three dimensions
        assert!((mean_z - (1.0 / 50f64.tanh() - 1.0 / 50.0)).abs() < 0.005);
    }

    #[test]
    fn sampler_spec_json() {
        let spec: SamplerSpec = serde_json::from_str(r#"{"dist":"normal","mu":0,"sigma":1}"#).unwrap();
        assert_eq!(spec, SamplerSpec::Normal { mu: 0.0, sigma: 1.0 });
        let spec: SamplerSpec = serde_json::from_str(r#"{"dist":"student_t","v":2}"#).unwrap();
        assert_eq!(spec, SamplerSpec::StudentT { v: 2.0, loc: 0.0, scale: 1.0 });
        assert!(Sampler::new(SamplerSpec::Normal { mu: 0.0, sigma: -1.0 }).is_err());
    }

    #[test]
    fn bhv_noise_keeps_leaf_set() {
        let s = Sampler::new(SamplerSpec::BhvNoise {
            base_tree: "((A:1,B:1):0.5,(C:1,D:1):0.5,E:1);".into(),
            sigma: 0.3,
            topology_prob: 0.5,
        })
        .unwrap();
        let mut rng = substream(2, 0);
        for _ in 0..50 {
            match s.draw(&mut rng) {
                Point::Tree(t) => assert_eq!(t.leaf_count(), 5),
                _ => unreachable!(),
            }
        }
    }
}
