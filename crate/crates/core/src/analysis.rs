//! Depth-depth plots, outlier flags and per-group diameter curves.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::depth::{batch_depth, batch_depth_leave_one_out, self_depth, DepthField, Sample};
use crate::dispersion::{psi_curve, PsiContext, PsiCurve, PsiKind};
use crate::error::{Error, Result};
use crate::metrics::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthDepthRecord {
    pub index: usize,
    pub depth0: f64,
    pub depth1: f64,
    /// Group the point belongs to, when it is one of the sample points.
    pub group: Option<u8>,
}

fn group_depths(points: &[Point], sample: &Sample) -> Result<(Vec<f64>, Vec<bool>)> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: n });
    }
    let members = points
        .iter()
        .map(|p| sample.position_of(p).map(|i| i.is_some()))
        .collect::<Result<Vec<bool>>>()?;
    let field = if n >= 3 {
        batch_depth_leave_one_out(points, sample)?
    } else if members.iter().any(|&m| m) {
        // leaving one of two points out leaves no pair
        return Err(Error::SampleTooSmall { needed: 3, got: n });
    } else {
        batch_depth(points, sample)?
    };
    Ok((field.values().to_vec(), members))
}

/// Depth of every point with respect to both groups. A point that coincides
/// with a sample point of a group is scored against the rest of that group.
pub fn depth_depth(sample0: &Sample, sample1: &Sample, points: &[Point]) -> Result<Vec<DepthDepthRecord>> {
    if sample0.space() != sample1.space() {
        return Err(Error::Domain(format!(
            "groups live in different spaces ({} and {})",
            sample0.space(),
            sample1.space()
        )));
    }
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let (d0, m0) = group_depths(points, sample0)?;
    let (d1, m1) = group_depths(points, sample1)?;
    Ok((0..points.len())
        .map(|i| DepthDepthRecord {
            index: i,
            depth0: d0[i],
            depth1: d1[i],
            group: match (m0[i], m1[i]) {
                (true, _) => Some(0),
                (false, true) => Some(1),
                _ => None,
            },
        })
        .collect())
}

/// Depth-depth records for the pooled points of both groups, group 0 first.
pub fn depth_depth_pooled(sample0: &Sample, sample1: &Sample) -> Result<Vec<DepthDepthRecord>> {
    let pooled: Vec<Point> = sample0.points().iter().chain(sample1.points()).cloned().collect();
    let mut records = depth_depth(sample0, sample1, &pooled)?;
    for r in &mut records {
        r.group = Some(if r.index < sample0.len() { 0 } else { 1 });
    }
    Ok(records)
}

/// Indices whose depth is strictly below `lambda`.
pub fn outliers(field: &DepthField, lambda: f64) -> Vec<usize> {
    field
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &d)| !(d >= lambda))
        .map(|(i, _)| i)
        .collect()
}

/// Index of the largest depth; the lowest index wins ties.
pub fn deepest(field: &DepthField) -> Result<usize> {
    let values = field.values();
    if values.is_empty() {
        return Err(Error::Empty("depth field"));
    }
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    Ok(best)
}

/// The deepest observation of a sample under leave-one-out depth.
pub fn deepest_observation(sample: &Sample) -> Result<(usize, f64)> {
    let field = self_depth(sample)?;
    let i = deepest(&field)?;
    Ok((i, field.values()[i]))
}

/// Diameter curve of each group, with level sets taken over the group's own
/// points and their leave-one-out depths.
pub fn diameter_curve_by_group(groups: &BTreeMap<String, Sample>, lambdas: &[f64]) -> Result<BTreeMap<String, PsiCurve>> {
    groups
        .iter()
        .map(|(label, sample)| {
            let field = self_depth(sample)?;
            let mut curve = psi_curve(&field, PsiKind::Diameter, lambdas, PsiContext::default())?;
            curve.region = format!("sample points of group {label}");
            Ok((label.clone(), curve))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levelsets::level_set;
    use crate::metrics::MetricSpace;
    use crate::sampling::{substream, Sampler, SamplerSpec};
    use crate::treespace::parse_newick;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_cloud(n: usize, center: [f64; 2], seed: u64) -> Sample {
        let mut rng = substream(seed, 0);
        let pts = (0..n)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                Point::real(vec![center[0] + a, center[1] + b])
            })
            .collect();
        Sample::new(pts, MetricSpace::Euclidean { dim: 2 }).unwrap()
    }

    #[test]
    fn identical_groups_lie_on_the_diagonal() {
        let s = gaussian_cloud(40, [0.0, 0.0], 1);
        let queries: Vec<Point> = gaussian_cloud(25, [0.3, 0.0], 2).points().to_vec();
        for r in depth_depth(&s, &s, &queries).unwrap() {
            assert_eq!(r.depth0, r.depth1);
            assert_eq!(r.group, None);
        }
    }

    #[test]
    fn far_point_is_zero_in_both() {
        let s0 = gaussian_cloud(30, [0.0, 0.0], 3);
        let s1 = gaussian_cloud(30, [5.0, 0.0], 4);
        let r = depth_depth(&s0, &s1, &[Point::real(vec![0.0, 100.0])]).unwrap();
        assert_eq!((r[0].depth0, r[0].depth1), (0.0, 0.0));
    }

    #[test]
    fn separated_groups_classify() {
        let s0 = gaussian_cloud(200, [0.0, 0.0], 5);
        let s1 = gaussian_cloud(200, [6.0, 0.0], 6);
        let records = depth_depth_pooled(&s0, &s1).unwrap();
        let own = records
            .iter()
            .filter(|r| match r.group {
                Some(0) => r.depth0 > r.depth1,
                _ => r.depth1 > r.depth0,
            })
            .count();
        assert!(own as f64 >= 0.95 * records.len() as f64, "{own} of {}", records.len());
    }

    #[test]
    fn swapping_groups_swaps_coordinates() {
        let s0 = gaussian_cloud(20, [0.0, 0.0], 7);
        let s1 = gaussian_cloud(25, [1.0, 0.5], 8);
        let q: Vec<Point> = s0.points().iter().chain(s1.points()).cloned().collect();
        let a = depth_depth(&s0, &s1, &q).unwrap();
        let b = depth_depth(&s1, &s0, &q).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((x.depth0, x.depth1), (y.depth1, y.depth0));
        }
    }

    #[test]
    fn small_groups() {
        let s2 = Sample::from_reals(&[0.0, 1.0]);
        let s1 = Sample::from_reals(&[0.0]);
        let p = [Point::real(vec![0.5])];
        assert!(depth_depth(&s2, &s2, &p).is_ok());
        assert!(depth_depth(&s2, &s2, &[Point::real(vec![0.0])]).is_err());
        assert!(matches!(depth_depth(&s1, &s2, &p), Err(Error::SampleTooSmall { .. })));
    }

    #[test]
    fn outlier_extremes() {
        let s = Sample::from_reals(&[0.0, 1.0, 2.0, 3.0]);
        let f = self_depth(&s).unwrap();
        assert!(outliers(&f, 0.0).is_empty());
        assert_eq!(outliers(&f, 1.5), vec![0, 1, 2, 3]);
    }

    #[test]
    fn normal_outliers_follow_the_quantile_band() {
        let sampler = Sampler::new(SamplerSpec::Normal { mu: 0.0, sigma: 1.0 }).unwrap();
        let mut rng = substream(11, 0);
        let xs: Vec<f64> = (0..300).map(|_| sampler.draw_real(&mut rng).unwrap()).collect();
        let s = Sample::from_reals(&xs);
        let f = self_depth(&s).unwrap();
        let flagged = outliers(&f, 0.10);
        // leave-one-out depth of the point of rank r (1-based) among n
        let n = xs.len();
        let pairs = |k: usize| (k * k.saturating_sub(1) / 2) as f64;
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        for (i, x) in xs.iter().enumerate() {
            let r = sorted.partition_point(|v| v < x);
            let ld = 1.0 - (pairs(r) + pairs(n - 1 - r)) / pairs(n - 1);
            assert_eq!(flagged.contains(&i), ld < 0.10);
        }
        // population band: 2F(1 - F) >= 0.1 iff F in [(1 - sqrt 0.8) / 2, (1 + sqrt 0.8) / 2]
        let lo = (1.0 - 0.8f64.sqrt()) / 2.0;
        assert!((2.0 * lo * (1.0 - lo) - 0.1).abs() < 1e-15);
        // flags depend on ranks only: about n * 2 * lo of them
        let expected = n as f64 * 2.0 * lo;
        assert!((flagged.len() as f64 - expected).abs() <= 2.0, "{} vs {expected}", flagged.len());
    }

    #[test]
    fn deepest_ties_and_singletons() {
        let e1 = MetricSpace::Euclidean { dim: 1 };
        let pts: Vec<Point> = (0..5).map(|i| Point::real(vec![i as f64])).collect();
        let flat = DepthField::new(pts.clone(), vec![0.3; 5], 5, e1).unwrap();
        assert_eq!(deepest(&flat).unwrap(), 0);
        let one = DepthField::new(vec![pts[2].clone()], vec![0.1], 5, e1).unwrap();
        assert_eq!(deepest(&one).unwrap(), 0);
        let s = Sample::from_reals(&[5.0, -1.0, 0.0, 1.0, 9.0]);
        // 1.0 has two points on each side among the other four
        assert_eq!(deepest_observation(&s).unwrap(), (3, 4.0 / 6.0));
    }

    #[test]
    fn diameter_curves() {
        let lambdas = [0.0, 0.2, 0.4, 0.6];
        let mut groups = BTreeMap::new();
        groups.insert("flat".to_string(), Sample::from_reals(&[2.0; 6]));
        groups.insert("spread".to_string(), Sample::from_reals(&[0.0, 1.0, 4.0, 2.0, 3.0]));
        let curves = diameter_curve_by_group(&groups, &lambdas).unwrap();
        assert!(curves["flat"].values.iter().all(|&v| v == 0.0));
        assert_eq!(curves["spread"].values[0], 4.0);
        assert!(curves["spread"].is_nonincreasing());
    }

    #[test]
    fn noisier_trees_have_larger_diameters() {
        let base = "((A:0.5,B:0.5):0.4,(C:0.5,D:0.5):0.3,E:0.6);";
        let tree = parse_newick(base, None).unwrap();
        let year = |sigma: f64, seed: u64| {
            let sampler = Sampler::new(SamplerSpec::BhvNoise {
                base_tree: base.to_string(),
                sigma,
                topology_prob: 0.0,
            })
            .unwrap();
            let mut rng = substream(seed, 0);
            Sample::new(sampler.draw_many(120, &mut rng), MetricSpace::Bhv { leaves: tree.leaf_count() })
                .unwrap()
                .with_cache()
                .unwrap()
        };
        let mut groups = BTreeMap::new();
        groups.insert("calm".to_string(), year(0.15, 21));
        groups.insert("noisy".to_string(), year(0.30, 22));
        let lambdas: Vec<f64> = (0..20).map(|i| i as f64 * 0.025).collect();
        let curves = diameter_curve_by_group(&groups, &lambdas).unwrap();
        for (a, b) in curves["noisy"].values.iter().zip(&curves["calm"].values) {
            assert!(a >= b, "{a} < {b}");
        }
    }

    proptest! {
        #[test]
        fn outliers_complement_the_level_set(seed in any::<u64>(), lambda in 0.0f64..1.1) {
            let mut rng = substream(seed, 0);
            let xs: Vec<f64> = (0..30).map(|_| rng.random_range(-2.0..2.0)).collect();
            let f = self_depth(&Sample::from_reals(&xs)).unwrap();
            let out = outliers(&f, lambda);
            let ls = level_set(&f, lambda);
            prop_assert_eq!(out, ls.complement());
            if lambda < f.max() {
                prop_assert!(!outliers(&f, lambda).contains(&deepest(&f).unwrap()));
            }
        }
    }
}
