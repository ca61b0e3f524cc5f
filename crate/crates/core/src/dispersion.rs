//! Comparing the dispersion of two random elements through the size of
//! their lens-depth level sets.
//!
//! A [`PsiCurve`] records a set functional (diameter, inradius or volume) of
//! `{depth >= lambda}` along a grid of levels. The order relations and the
//! gamma coefficient are folds over two such curves sharing one grid. All
//! verdicts refer to the single evaluation region the curves were built on.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth::{DepthField, Sample};
use crate::error::{Error, Result};
use crate::levelsets::{level_set, psi_diameter, psi_inradius, psi_volume, EvaluationGrid};
use crate::metrics::Point;
use crate::sampling::{normal_quantile, student_t_quantile, Law1d};

/// Default number of levels on `[0, s]`.
pub const DEFAULT_LAMBDA_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsiKind {
    /// Diameter of the level set.
    Diameter,
    /// Largest distance from a member to the complement.
    Inradius,
    /// Reference-measure volume.
    Volume,
}

impl std::str::FromStr for PsiKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<PsiKind> {
        match s {
            "diam" | "diameter" => Ok(PsiKind::Diameter),
            "inradius" => Ok(PsiKind::Inradius),
            "volume" => Ok(PsiKind::Volume),
            _ => Err(Error::Domain(format!("unknown psi `{s}` (diam|inradius|volume)"))),
        }
    }
}

/// What a functional needs beyond the level set itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct PsiContext<'a> {
    /// Lattice whose halo stands for the complement outside the region.
    pub grid: Option<&'a EvaluationGrid>,
    /// Reference points and the mass of the region they were drawn over.
    pub reference: Option<(&'a [Point], f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiCurve {
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    /// Monte Carlo standard errors (volume only).
    pub std_errors: Option<Vec<f64>>,
    /// Levels whose level set was empty.
    pub empty: Vec<bool>,
    pub kind: PsiKind,
    /// Description of the evaluation region.
    pub region: String,
}

impl PsiCurve {
    /// A curve from raw values, for callers that compute the functional
    /// themselves.
    pub fn from_values(lambdas: Vec<f64>, values: Vec<f64>, kind: PsiKind, region: impl Into<String>) -> Result<PsiCurve> {
        if lambdas.len() != values.len() {
            return Err(Error::GridMismatch(format!("{} levels, {} values", lambdas.len(), values.len())));
        }
        check_grid(&lambdas)?;
        Ok(PsiCurve {
            empty: vec![false; values.len()],
            lambdas,
            values,
            std_errors: None,
            kind,
            region: region.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }
}

fn check_grid(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::Empty("lambda grid"));
    }
    if lambdas.iter().any(|l| !(*l >= 0.0)) || lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("lambda grid must be increasing and nonnegative".into()));
    }
    Ok(())
}

/// `points` equispaced levels covering `[0, s]`.
pub fn lambda_grid(s: f64, points: usize) -> Result<Vec<f64>> {
    if !(s > 0.0) || points < 2 {
        return Err(Error::Domain(format!("cannot build a {points}-point grid on [0, {s}]")));
    }
    let last = (points - 1) as f64;
    Ok((0..points).map(|i| if i + 1 == points { s } else { s * i as f64 / last }).collect())
}

/// Evaluates `kind` on `{field >= lambda}` for every level of the grid.
pub fn psi_curve(field: &DepthField, kind: PsiKind, lambdas: &[f64], ctx: PsiContext<'_>) -> Result<PsiCurve> {
    check_grid(lambdas)?;
    let space = field.space();
    let halo: Vec<Point> = ctx.grid.map(EvaluationGrid::halo).unwrap_or_default();
    if kind == PsiKind::Volume && ctx.reference.is_none() {
        return Err(Error::Domain("volume needs a reference sample".into()));
    }
    let evaluated: Vec<(f64, f64, bool)> = lambdas
        .par_iter()
        .map(|&lambda| {
            let ls = level_set(field, lambda);
            if ls.is_empty() {
                return Ok((0.0, 0.0, true));
            }
            match kind {
                PsiKind::Diameter => Ok((psi_diameter(&ls.member_points(), space)?, 0.0, false)),
                PsiKind::Inradius => {
                    let mut complement = ls.complement_points();
                    complement.extend(halo.iter().cloned());
                    if complement.is_empty() {
                        // whole region with no known exterior
                        return Ok((0.0, 0.0, true));
                    }
                    Ok((psi_inradius(&ls.member_points(), &complement, space)?, 0.0, false))
                }
                PsiKind::Volume => {
                    let (reference, mass) = ctx.reference.expect("checked above");
                    let v = psi_volume(&ls, reference, mass)?;
                    Ok((v.value, v.std_error, false))
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(PsiCurve {
        lambdas: lambdas.to_vec(),
        values: evaluated.iter().map(|e| e.0).collect(),
        std_errors: (kind == PsiKind::Volume).then(|| evaluated.iter().map(|e| e.1).collect()),
        empty: evaluated.iter().map(|e| e.2).collect(),
        kind,
        region: region_label(field, ctx),
    })
}

fn region_label(field: &DepthField, ctx: PsiContext<'_>) -> String {
    match ctx.grid {
        Some(g) => format!("lattice of {} points in {}", g.len(), field.space()),
        None => format!("{} evaluation points in {}", field.len(), field.space()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    SpreadOut,
    Strong,
    Weak,
    Giovagnoli,
}

/// Where a relation first fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// First violating level (or distance, for the distance order).
    pub at: f64,
    /// Second level of a violating pair, for the spread-out relation.
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderVerdict {
    pub relation: Relation,
    pub holds: bool,
    pub witness: Option<Witness>,
    /// Smallest slack of the defining inequality (negative when violated).
    pub margin: f64,
    pub tolerance: f64,
}

impl OrderVerdict {
    fn new(relation: Relation, margin: f64, witness: Option<Witness>, tolerance: f64) -> OrderVerdict {
        let holds = witness.is_none();
        OrderVerdict {
            relation,
            holds,
            witness,
            margin,
            tolerance,
        }
    }
}

fn check_pair(cx: &PsiCurve, cy: &PsiCurve) -> Result<()> {
    if cx.kind != cy.kind {
        return Err(Error::GridMismatch(format!("psi kinds {:?} and {:?}", cx.kind, cy.kind)));
    }
    if cx.lambdas != cy.lambdas || cx.values.len() != cx.lambdas.len() || cy.values.len() != cy.lambdas.len() {
        return Err(Error::GridMismatch("curves use different lambda grids".into()));
    }
    Ok(())
}

/// Tolerance for comparing Monte Carlo curves: twice the largest combined
/// standard error, or zero for exact functionals.
pub fn default_tolerance(cx: &PsiCurve, cy: &PsiCurve) -> f64 {
    match (&cx.std_errors, &cy.std_errors) {
        (Some(a), Some(b)) => 2.0 * a.iter().zip(b).map(|(x, y)| (x * x + y * y).sqrt()).fold(0.0, f64::max),
        _ => 0.0,
    }
}

/// X is more spread out than Y: for every pair of levels `p1 < p2`,
/// `psi_X(p1) - psi_X(p2) >= psi_Y(p1) - psi_Y(p2) - tol`.
pub fn spread_out_ge(cx: &PsiCurve, cy: &PsiCurve, tol: f64) -> Result<OrderVerdict> {
    check_pair(cx, cy)?;
    let n = cx.len();
    let mut margin = f64::INFINITY;
    let mut witness = None;
    for i in 0..n {
        for j in (i + 1)..n {
            let slack = (cx.values[i] - cx.values[j]) - (cy.values[i] - cy.values[j]);
            margin = margin.min(slack);
            if witness.is_none() && slack < -tol {
                witness = Some(Witness {
                    at: cx.lambdas[i],
                    upper: Some(cx.lambdas[j]),
                });
            }
        }
    }
    Ok(OrderVerdict::new(Relation::SpreadOut, if n < 2 { 0.0 } else { margin }, witness, tol))
}

/// Strong order: `psi_X(lambda) >= psi_Y(lambda)` at every level.
pub fn strong_order(cx: &PsiCurve, cy: &PsiCurve, tol: f64) -> Result<OrderVerdict> {
    check_pair(cx, cy)?;
    let mut margin = f64::INFINITY;
    let mut witness = None;
    for ((l, x), y) in cx.lambdas.iter().zip(&cx.values).zip(&cy.values) {
        let slack = x - y;
        margin = margin.min(slack);
        if witness.is_none() && slack < -tol {
            witness = Some(Witness { at: *l, upper: None });
        }
    }
    Ok(OrderVerdict::new(Relation::Strong, margin, witness, tol))
}

/// Weak order: the trapezoidal integral of `psi_X - psi_Y` over the grid is
/// nonnegative.
pub fn weak_order(cx: &PsiCurve, cy: &PsiCurve, tol: f64) -> Result<OrderVerdict> {
    check_pair(cx, cy)?;
    let g: Vec<f64> = cx.values.iter().zip(&cy.values).map(|(x, y)| x - y).collect();
    let integral: f64 = cx
        .lambdas
        .windows(2)
        .zip(g.windows(2))
        .map(|(l, d)| 0.5 * (d[0] + d[1]) * (l[1] - l[0]))
        .sum();
    let span = cx.lambdas[cx.len() - 1] - cx.lambdas[0];
    let witness = (integral < -tol * span).then(|| Witness {
        at: cx.lambdas[cx.len() - 1],
        upper: None,
    });
    Ok(OrderVerdict::new(Relation::Weak, integral, witness, tol))
}

/// Fraction of `[0, s]` on which `psi_X >= psi_Y`, with both curves linearly
/// interpolated between grid levels.
pub fn gamma(cx: &PsiCurve, cy: &PsiCurve, s: f64) -> Result<f64> {
    check_pair(cx, cy)?;
    if !(s > 0.0) {
        return Err(Error::Domain(format!("depth bound s = {s} must be positive")));
    }
    let g: Vec<f64> = cx.values.iter().zip(&cy.values).map(|(x, y)| x - y).collect();
    if g.len() == 1 {
        return Ok(if g[0] >= 0.0 { 1.0 } else { 0.0 });
    }
    let mut pass = 0.0;
    let mut fail = 0.0;
    for (l, d) in cx.lambdas.windows(2).zip(g.windows(2)) {
        let width = l[1] - l[0];
        match (d[0] >= 0.0, d[1] >= 0.0) {
            (true, true) => pass += width,
            (false, false) => fail += width,
            (start_ok, _) => {
                // crossing of the interpolant inside the segment
                let t = d[0] / (d[0] - d[1]);
                let (before, after) = (t * width, (1.0 - t) * width);
                if start_ok {
                    pass += before;
                    fail += after;
                } else {
                    fail += before;
                    pass += after;
                }
            }
        }
    }
    if fail == 0.0 {
        return Ok(1.0);
    }
    if pass == 0.0 {
        return Ok(0.0);
    }
    Ok((pass / s).clamp(0.0, 1.0))
}

/// Plug-in bound for the depth supremum: the largest observed depth.
pub fn depth_sup(fx: &DepthField, fy: &DepthField) -> f64 {
    fx.max().max(fy.max())
}

/// Builds both curves on `[0, s]` and computes gamma, inserting `refine`
/// extra levels inside every grid cell where the curves cross.
pub fn gamma_from_fields(
    fx: &DepthField,
    fy: &DepthField,
    kind: PsiKind,
    ctx_x: PsiContext<'_>,
    ctx_y: PsiContext<'_>,
    points: usize,
    refine: usize,
) -> Result<GammaReport> {
    let s = depth_sup(fx, fy);
    if !(s > 0.0) {
        return Err(Error::Domain("both depth fields are identically zero".into()));
    }
    let mut lambdas = lambda_grid(s, points)?;
    let mut cx = psi_curve(fx, kind, &lambdas, ctx_x)?;
    let mut cy = psi_curve(fy, kind, &lambdas, ctx_y)?;
    if refine > 0 {
        let mut extra = Vec::new();
        for k in 0..lambdas.len() - 1 {
            let (a, b) = (cx.values[k] - cy.values[k], cx.values[k + 1] - cy.values[k + 1]);
            if (a >= 0.0) != (b >= 0.0) {
                let (lo, hi) = (lambdas[k], lambdas[k + 1]);
                extra.extend((1..=refine).map(|r| lo + (hi - lo) * r as f64 / (refine + 1) as f64));
            }
        }
        if !extra.is_empty() {
            lambdas.extend(extra);
            lambdas.sort_by(f64::total_cmp);
            lambdas.dedup();
            cx = psi_curve(fx, kind, &lambdas, ctx_x)?;
            cy = psi_curve(fy, kind, &lambdas, ctx_y)?;
        }
    }
    let value = gamma(&cx, &cy, s)?;
    Ok(GammaReport {
        gamma: value,
        depth_sup: s,
        curve_x: cx,
        curve_y: cy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub gamma: f64,
    pub depth_sup: f64,
    pub curve_x: PsiCurve,
    pub curve_y: PsiCurve,
}

/// Gamma for two real laws when psi is Lebesgue measure. On the line
/// `{LD >= lambda}` is the central interval between the quantiles at
/// `(1 -+ sqrt(1 - 2 lambda)) / 2`, so gamma only needs quantile spreads on
/// levels `(0, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaClosedForm {
    pub gamma: f64,
    /// The value plotted against sigma: twice gamma.
    pub two_gamma: f64,
}

/// Level set width in the quantile-spread formula, as a function of
/// `u = sqrt(1 - 2 lambda)`.
fn spread(q: &impl Fn(f64) -> f64, u: f64) -> f64 {
    q((1.0 + u) / 2.0) - q((1.0 - u) / 2.0)
}

fn spread_excess(x: &Law1d, y: &Law1d, u: f64) -> f64 {
    spread(&|p| x.quantile(p), u) - spread(&|p| y.quantile(p), u)
}

/// Midpoint-rule gamma with `nodes` levels.
pub fn gamma_1d_quadrature(x: &Law1d, y: &Law1d, nodes: usize) -> Result<f64> {
    if nodes == 0 {
        return Err(Error::Domain("need at least one node".into()));
    }
    let hits = (0..nodes)
        .into_par_iter()
        .filter(|&k| {
            let lambda = 0.5 * (k as f64 + 0.5) / nodes as f64;
            spread_excess(x, y, (1.0 - 2.0 * lambda).sqrt()) >= 0.0
        })
        .count();
    Ok(hits as f64 / nodes as f64)
}

/// Gamma from the crossings of the spread difference, located by bisection
/// in `u = sqrt(1 - 2 lambda)`; an interval `[u1, u2]` of u has level
/// measure `(u2^2 - u1^2) / 2`.
pub fn gamma_1d_crossings(x: &Law1d, y: &Law1d, scan: usize) -> Result<f64> {
    if scan < 2 {
        return Err(Error::Domain("scan needs at least two cells".into()));
    }
    let f = |u: f64| spread_excess(x, y, u) >= 0.0;
    Ok(measure_by_crossings(f, scan))
}

/// Lebesgue measure in lambda of `{ok}` (normalized by 1/2), where `ok` is
/// expressed in u.
fn measure_by_crossings(ok: impl Fn(f64) -> bool, scan: usize) -> f64 {
    // u in (0, 1); keep off the endpoints where quantiles degenerate
    let lo = 1e-9;
    let hi = 1.0 - 1e-12;
    let us: Vec<f64> = (0..=scan).map(|i| lo + (hi - lo) * i as f64 / scan as f64).collect();
    let states: Vec<bool> = us.iter().map(|&u| ok(u)).collect();
    let mut edges = vec![(0.0, states[0])];
    for k in 0..scan {
        if states[k] != states[k + 1] {
            let (mut a, mut b) = (us[k], us[k + 1]);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if ok(m) == states[k] {
                    a = m;
                } else {
                    b = m;
                }
            }
            edges.push((0.5 * (a + b), states[k + 1]));
        }
    }
    // integrate d(u^2) over the u-intervals where `ok` holds
    let mut total = 0.0;
    for (i, &(start, state)) in edges.iter().enumerate() {
        let end = edges.get(i + 1).map_or(1.0, |e| e.0);
        if state {
            total += end * end - start * start;
        }
    }
    total.clamp(0.0, 1.0)
}

/// Gamma for X ~ t_v against Y ~ N(0, sigma^2) with the volume functional,
/// by crossing bisection.
pub fn gamma_t_vs_normal(v: f64, sigma: f64) -> Result<GammaClosedForm> {
    check_tn(v, sigma)?;
    let g = measure_by_crossings(|u| tn_excess(v, sigma, u) >= 0.0, 2000);
    Ok(GammaClosedForm {
        gamma: g,
        two_gamma: 2.0 * g,
    })
}

/// Same quantity by the midpoint rule over `nodes` levels.
pub fn gamma_t_vs_normal_quadrature(v: f64, sigma: f64, nodes: usize) -> Result<f64> {
    check_tn(v, sigma)?;
    if nodes == 0 {
        return Err(Error::Domain("need at least one node".into()));
    }
    let hits = (0..nodes)
        .into_par_iter()
        .filter(|&k| {
            let lambda = 0.5 * (k as f64 + 0.5) / nodes as f64;
            tn_excess(v, sigma, (1.0 - 2.0 * lambda).sqrt()) >= 0.0
        })
        .count();
    Ok(hits as f64 / nodes as f64)
}

fn check_tn(v: f64, sigma: f64) -> Result<()> {
    if !(v >= 1.0) || !(sigma > 0.0) || !v.is_finite() || !sigma.is_finite() {
        return Err(Error::Domain(format!("need v >= 1 and sigma > 0, got v={v}, sigma={sigma}")));
    }
    Ok(())
}

// both laws are symmetric, so each spread is twice the upper quantile
fn tn_excess(v: f64, sigma: f64, u: f64) -> f64 {
    let p = (1.0 + u) / 2.0;
    student_t_quantile(v, p) - sigma * normal_quantile(p)
}

/// Distance dispersive order: `d(X, X')` stochastically dominates
/// `d(Y, Y')`, checked on the empirical distribution functions of all
/// within-sample distances.
pub fn giovagnoli_order(sx: &Sample, sy: &Sample) -> Result<OrderVerdict> {
    for s in [sx, sy] {
        if s.len() < 2 {
            return Err(Error::SampleTooSmall { needed: 2, got: s.len() });
        }
    }
    let dx = within_distances(sx)?;
    let dy = within_distances(sy)?;
    // F_X(t) <= F_Y(t) at every pooled jump point
    let (nx, ny) = (dx.len() as f64, dy.len() as f64);
    let mut pooled: Vec<f64> = dx.iter().chain(&dy).copied().collect();
    pooled.sort_by(f64::total_cmp);
    pooled.dedup();
    let (mut ix, mut iy) = (0, 0);
    let mut worst = (f64::NEG_INFINITY, 0.0);
    for t in pooled {
        while ix < dx.len() && dx[ix] <= t {
            ix += 1;
        }
        while iy < dy.len() && dy[iy] <= t {
            iy += 1;
        }
        let excess = ix as f64 / nx - iy as f64 / ny;
        if excess > worst.0 {
            worst = (excess, t);
        }
    }
    let witness = (worst.0 > 0.0).then_some(Witness { at: worst.1, upper: None });
    Ok(OrderVerdict::new(Relation::Giovagnoli, -worst.0, witness, 0.0))
}

fn within_distances(s: &Sample) -> Result<Vec<f64>> {
    let m = s.distances()?;
    let mut d: Vec<f64> = (0..s.len())
        .flat_map(|i| ((i + 1)..s.len()).map(move |j| (i, j)))
        .map(|(i, j)| m.get(i, j))
        .collect();
    d.sort_by(f64::total_cmp);
    Ok(d)
}
