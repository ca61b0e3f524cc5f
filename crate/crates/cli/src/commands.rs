//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use lensdepth::analysis::{deepest_observation, depth_depth_pooled, diameter_curve_by_group, outliers};
use lensdepth::asymptotics::{self, ExperimentConfig, ExperimentOutput};
use lensdepth::depth::{batch_depth, batch_depth_leave_one_out, self_depth, DepthField, Sample};
use lensdepth::dispersion::{
    default_tolerance, gamma_from_fields, gamma_t_vs_normal, gamma_t_vs_normal_quadrature, giovagnoli_order, lambda_grid,
    psi_curve, spread_out_ge, strong_order, weak_order, OrderVerdict, PsiContext, PsiCurve, PsiKind,
};
use lensdepth::levelsets::{boundary_points, level_set, parse_axes, Axis, EvaluationGrid};
use lensdepth::sampling::substream;
use lensdepth::{pairwise_matrix, MetricSpace, Point};
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::input::{coords, InputError, Loader, PointFile};
use crate::output::{emit, Artifact, Cell, Format, Provenance, Table};
use crate::svg::{Figure, Series};
use crate::{Cli, Command, EvalArgs, PsiArgs, SpaceArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TnMethod {
    /// Piecewise-linear scan of the spread difference plus bisection.
    Crossings,
    /// Midpoint rule over the levels.
    Quadrature,
}

#[derive(Debug)]
pub enum CliError {
    /// Arguments that parse but make no sense together; exit status 2.
    Usage(String),
    Input(InputError),
    Core(lensdepth::Error),
    Io(PathBuf, std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Input(e) => write!(f, "{e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> CliError {
        CliError::Input(e)
    }
}

impl From<lensdepth::Error> for CliError {
    fn from(e: lensdepth::Error) -> CliError {
        CliError::Core(e)
    }
}

impl From<lensdepth::metrics::MetricError> for CliError {
    fn from(e: lensdepth::metrics::MetricError) -> CliError {
        CliError::Core(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Everything that determines the output bytes apart from the data files.
#[derive(Serialize)]
struct HashedConfig<'a> {
    command: &'a Command,
    seed: u64,
    format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    experiment: Option<&'a ExperimentConfig>,
}

struct Ctx<'a> {
    cli: &'a Cli,
    seed: u64,
    format: Format,
    /// Parsed experiment, hashed by content rather than by path.
    experiment: Option<ExperimentConfig>,
}

impl Ctx<'_> {
    fn provenance(&self) -> Provenance {
        let cfg = HashedConfig {
            command: &self.cli.command,
            seed: self.seed,
            format: self.format,
            experiment: self.experiment.as_ref(),
        };
        Provenance::new(&cfg, self.seed, !self.cli.no_timestamp)
    }

    fn render(&self, artifact: &Artifact) -> Vec<u8> {
        artifact.render(self.format, &self.provenance())
    }

    fn write(&self, path: Option<&Path>, bytes: &[u8]) -> Result<()> {
        emit(path, bytes).map_err(|e| CliError::Io(path.map(Path::to_path_buf).unwrap_or_else(|| "<stdout>".into()), e))
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        // a second initialisation only happens in tests; the old pool is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t as usize).build_global();
    }
    let default_format = match cli.command {
        Command::Gamma { .. } | Command::Simulate { .. } => Format::Json,
        _ => Format::Csv,
    };
    let mut ctx = Ctx {
        cli,
        seed: cli.seed.unwrap_or(0),
        format: cli.format.unwrap_or(default_format),
        experiment: None,
    };
    let out = cli.out.as_deref();
    // every result is rendered in full before anything is written
    let outputs: Vec<(Option<PathBuf>, Vec<u8>)> = match &cli.command {
        Command::Depth {
            space,
            sample,
            queries,
            leave_one_out,
        } => vec![(out.map(Path::to_path_buf), ctx.render(&depth_cmd(space, sample, queries.as_deref(), *leave_one_out)?))],
        Command::Levelset {
            space,
            sample,
            lambda,
            eval,
            boundary_out,
            psi,
            psi_args,
        } => levelset_cmd(&ctx, space, sample, *lambda, eval, boundary_out.as_deref(), *psi, psi_args)?,
        Command::Psi {
            space,
            sample,
            eval,
            psi,
            psi_args,
        } => vec![(out.map(Path::to_path_buf), ctx.render(&psi_cmd(&ctx, space, sample, eval, *psi, psi_args)?))],
        Command::Gamma {
            space,
            x,
            y,
            eval,
            psi,
            psi_args,
            refine,
        } => vec![(out.map(Path::to_path_buf), ctx.render(&gamma_cmd(&ctx, space, x, y, eval, *psi, psi_args, *refine)?))],
        Command::GammaTn { v, sigma, method, nodes } => {
            vec![(out.map(Path::to_path_buf), ctx.render(&gamma_tn_cmd(v, sigma, *method, *nodes)?))]
        }
        Command::Order {
            space,
            x,
            y,
            eval,
            psi,
            psi_args,
        } => vec![(out.map(Path::to_path_buf), ctx.render(&order_cmd(&ctx, space, x, y, eval, *psi, psi_args)?))],
        Command::Ddplot {
            space,
            group0,
            group1,
            svg,
        } => {
            let (artifact, figure) = ddplot_cmd(space, group0, group1)?;
            let mut v = vec![(out.map(Path::to_path_buf), ctx.render(&artifact))];
            if let Some(p) = svg {
                v.push((Some(p.clone()), figure.render().into_bytes()));
            }
            v
        }
        Command::Outliers { space, sample, lambda } => {
            vec![(out.map(Path::to_path_buf), ctx.render(&outliers_cmd(space, sample, *lambda)?))]
        }
        Command::DiamByGroup {
            space,
            groups,
            lambdas,
            svg,
        } => {
            let (artifact, figure) = diam_by_group_cmd(space, groups, *lambdas as usize)?;
            let mut v = vec![(out.map(Path::to_path_buf), ctx.render(&artifact))];
            if let Some(p) = svg {
                v.push((Some(p.clone()), figure.render().into_bytes()));
            }
            v
        }
        Command::Treedist { input } => vec![(out.map(Path::to_path_buf), ctx.render(&treedist_cmd(input)?))],
        Command::Simulate { config } => {
            let (cfg, artifact) = simulate_cmd(cli.seed, config)?;
            ctx.seed = cfg.seed;
            ctx.experiment = Some(cfg);
            vec![(out.map(Path::to_path_buf), ctx.render(&artifact))]
        }
    };
    for (path, bytes) in &outputs {
        ctx.write(path.as_deref(), bytes)?;
    }
    Ok(())
}

fn load_sample(loader: &mut Loader, path: &Path) -> Result<(PointFile, Sample)> {
    let file = loader.load(path)?;
    let space = loader.space().expect("set by a successful load");
    let sample = Sample::new(file.points.clone(), space)?;
    Ok((file, sample))
}

fn loader(space: &SpaceArgs) -> Loader {
    Loader::new(space.metric, space.shape)
}

fn depth_cmd(space: &SpaceArgs, sample: &Path, queries: Option<&Path>, leave_one_out: bool) -> Result<Artifact> {
    let mut loader = loader(space);
    let (_, sample) = load_sample(&mut loader, sample)?;
    let points = match queries {
        Some(q) => loader.load(q)?.points,
        None => sample.points().to_vec(),
    };
    let field = if leave_one_out {
        batch_depth_leave_one_out(&points, &sample)?
    } else {
        batch_depth(&points, &sample)?
    };
    let mut table = Table::new(["index", "depth"]);
    for (i, d) in field.values().iter().enumerate() {
        table.push(vec![i.into(), (*d).into()]);
    }
    Ok(table.into())
}

/// The evaluation region of a level-set command, its depth field and, for
/// lattices, the box volume.
struct Region {
    grid: EvaluationGrid,
    field: DepthField,
    box_volume: Option<(Vec<Axis>, f64)>,
}

fn region(eval: &EvalArgs, loader: &mut Loader, samples: &[&Sample], fallback: &[Point]) -> Result<Region> {
    let space = *samples[0].space();
    match (&eval.grid, &eval.queries) {
        (Some(_), Some(_)) => Err(usage("--grid and --queries are mutually exclusive")),
        (Some(spec), None) => {
            let axes = parse_axes(spec).map_err(|e| usage(e.to_string()))?;
            match space {
                MetricSpace::Euclidean { dim } if dim == axes.len() => {}
                _ => {
                    return Err(usage(format!(
                        "--grid with {} axes needs {}-dimensional Euclidean data, got {space}",
                        axes.len(),
                        axes.len()
                    )))
                }
            }
            let grid = EvaluationGrid::lattice(&axes, eval.wrap)?;
            let field = batch_depth(grid.points(), samples[0])?;
            let volume = axes.iter().map(|a| a.hi - a.lo).product();
            Ok(Region {
                grid,
                field,
                box_volume: Some((axes, volume)),
            })
        }
        (None, Some(q)) => {
            let points = loader.load(q)?.points;
            let grid = EvaluationGrid::knn(points, space, eval.knn as usize)?;
            let field = batch_depth(grid.points(), samples[0])?;
            Ok(Region {
                grid,
                field,
                box_volume: None,
            })
        }
        (None, None) => {
            let grid = EvaluationGrid::knn(fallback.to_vec(), space, eval.knn as usize)?;
            let field = batch_depth_leave_one_out(grid.points(), samples[0])?;
            Ok(Region {
                grid,
                field,
                box_volume: None,
            })
        }
    }
}

/// Depth of the same evaluation points under another sample.
fn refield(region: &Region, sample: &Sample, leave_one_out: bool) -> Result<DepthField> {
    Ok(if leave_one_out {
        batch_depth_leave_one_out(region.grid.points(), sample)?
    } else {
        batch_depth(region.grid.points(), sample)?
    })
}

/// Reference points for the volume functional: uniform over the lattice box,
/// or the evaluation points themselves with unit mass.
fn reference(ctx: &Ctx<'_>, region: &Region, psi_args: &PsiArgs) -> (Vec<Point>, f64) {
    match &region.box_volume {
        Some((axes, volume)) => {
            let mut rng = substream(ctx.seed, 0);
            let pts = (0..psi_args.reference)
                .map(|_| {
                    Point::real(
                        axes.iter()
                            .map(|a| if a.hi > a.lo { rng.random_range(a.lo..a.hi) } else { a.lo })
                            .collect::<Vec<f64>>(),
                    )
                })
                .collect();
            (pts, *volume)
        }
        None => (region.grid.points().to_vec(), 1.0),
    }
}

fn psi_table(curve: &PsiCurve) -> Table {
    match &curve.std_errors {
        Some(se) => {
            let mut t = Table::new(["lambda", "psi", "std_error"]);
            for ((l, v), e) in curve.lambdas.iter().zip(&curve.values).zip(se) {
                t.push(vec![(*l).into(), (*v).into(), (*e).into()]);
            }
            t
        }
        None => {
            let mut t = Table::new(["lambda", "psi"]);
            for (l, v) in curve.lambdas.iter().zip(&curve.values) {
                t.push(vec![(*l).into(), (*v).into()]);
            }
            t
        }
    }
}

fn sweep(ctx: &Ctx<'_>, region: &Region, psi: PsiKind, psi_args: &PsiArgs) -> Result<PsiCurve> {
    let s = region.field.max();
    if !(s > 0.0) {
        return Err(usage("the depth is zero everywhere on the evaluation region"));
    }
    let lambdas = lambda_grid(s, psi_args.lambdas as usize)?;
    let (refs, mass) = reference(ctx, region, psi_args);
    let pctx = PsiContext {
        grid: region.box_volume.as_ref().map(|_| &region.grid),
        reference: (psi == PsiKind::Volume).then_some((&refs[..], mass)),
    };
    Ok(psi_curve(&region.field, psi, &lambdas, pctx)?)
}

#[allow(clippy::too_many_arguments)]
fn levelset_cmd(
    ctx: &Ctx<'_>,
    space: &SpaceArgs,
    sample: &Path,
    lambda: Option<f64>,
    eval: &EvalArgs,
    boundary_out: Option<&Path>,
    psi: Option<PsiKind>,
    psi_args: &PsiArgs,
) -> Result<Vec<(Option<PathBuf>, Vec<u8>)>> {
    let out = ctx.cli.out.clone();
    let mut loader = loader(space);
    let (file, sample) = load_sample(&mut loader, sample)?;
    let region = region(eval, &mut loader, &[&sample], &file.points)?;
    if let Some(kind) = psi {
        if lambda.is_some() {
            return Err(usage("--lambda and --psi are mutually exclusive"));
        }
        let curve = sweep(ctx, &region, kind, psi_args)?;
        return Ok(vec![(out, ctx.render(&psi_table(&curve).into()))]);
    }
    let lambda = lambda.ok_or_else(|| usage("levelset needs --lambda or --psi"))?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(usage(format!("--lambda {lambda} is outside [0, 1]")));
    }
    let ls = level_set(&region.field, lambda);
    let boundary = boundary_points(&ls, &region.grid)?;
    let dim = region.grid.points().first().map_or(0, |p| coords(p).len());
    let axis_names: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();

    let mut members = Table::new(["index".to_string()].into_iter().chain(axis_names.clone()).chain(["depth".into(), "member".into(), "boundary".into()]));
    let mut is_boundary = vec![false; region.grid.len()];
    for &i in &boundary {
        is_boundary[i] = true;
    }
    for (i, p) in region.grid.points().iter().enumerate() {
        let mut row: Vec<Cell> = vec![i.into()];
        row.extend(coords(p).into_iter().map(Cell::from));
        row.extend([region.field.values()[i].into(), ls.contains(i).into(), is_boundary[i].into()]);
        members.push(row);
    }
    let mut bt = Table::new(["index".to_string()].into_iter().chain(axis_names));
    for &i in &boundary {
        let mut row: Vec<Cell> = vec![i.into()];
        row.extend(coords(&region.grid.points()[i]).into_iter().map(Cell::from));
        bt.push(row);
    }
    let boundary_path = boundary_out.map(Path::to_path_buf).or_else(|| {
        out.as_ref().map(|o| {
            let stem = o.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let ext = o.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
            o.with_file_name(format!("{stem}.boundary.{ext}"))
        })
    });
    let mut v = vec![(out, ctx.render(&members.into()))];
    // with no file to put it in the boundary follows the membership table
    v.push((boundary_path, ctx.render(&bt.into())));
    Ok(v)
}

fn psi_cmd(ctx: &Ctx<'_>, space: &SpaceArgs, sample: &Path, eval: &EvalArgs, psi: PsiKind, psi_args: &PsiArgs) -> Result<Artifact> {
    let mut loader = loader(space);
    let (file, sample) = load_sample(&mut loader, sample)?;
    let region = region(eval, &mut loader, &[&sample], &file.points)?;
    let curve = sweep(ctx, &region, psi, psi_args)?;
    Ok(psi_table(&curve).into())
}

/// Curves of X and Y on a shared evaluation region: the lattice or query
/// file if given, else the pooled sample points.
struct Pair {
    region: Region,
    fy: DepthField,
    sx: Sample,
    sy: Sample,
}

fn pair(space: &SpaceArgs, x: &Path, y: &Path, eval: &EvalArgs) -> Result<Pair> {
    let mut loader = loader(space);
    let (fx_file, sx) = load_sample(&mut loader, x)?;
    let (fy_file, sy) = load_sample(&mut loader, y)?;
    let pooled: Vec<Point> = fx_file.points.iter().chain(&fy_file.points).cloned().collect();
    let on_samples = eval.grid.is_none() && eval.queries.is_none();
    let region = region(eval, &mut loader, &[&sx], &pooled)?;
    let fy = refield(&region, &sy, on_samples)?;
    Ok(Pair { region, fy, sx, sy })
}

fn contexts<'a>(
    pair: &'a Pair,
    psi: PsiKind,
    refs: &'a (Vec<Point>, f64),
) -> PsiContext<'a> {
    PsiContext {
        grid: pair.region.box_volume.as_ref().map(|_| &pair.region.grid),
        reference: (psi == PsiKind::Volume).then_some((&refs.0[..], refs.1)),
    }
}

#[allow(clippy::too_many_arguments)]
fn gamma_cmd(
    ctx: &Ctx<'_>,
    space: &SpaceArgs,
    x: &Path,
    y: &Path,
    eval: &EvalArgs,
    psi: PsiKind,
    psi_args: &PsiArgs,
    refine: u32,
) -> Result<Artifact> {
    let pair = pair(space, x, y, eval)?;
    let refs = reference(ctx, &pair.region, psi_args);
    let pctx = contexts(&pair, psi, &refs);
    let report = gamma_from_fields(
        &pair.region.field,
        &pair.fy,
        psi,
        pctx,
        pctx,
        psi_args.lambdas as usize,
        refine as usize,
    )?;
    let tol = default_tolerance(&report.curve_x, &report.curve_y);
    let strong = strong_order(&report.curve_x, &report.curve_y, tol)?;
    let weak = weak_order(&report.curve_x, &report.curve_y, tol)?;
    let mut table = Table::new(["gamma", "depth_sup", "strong", "weak"]);
    table.push(vec![report.gamma.into(), report.depth_sup.into(), strong.holds.into(), weak.holds.into()]);
    let json = json!({
        "gamma": report.gamma,
        "depth_sup": report.depth_sup,
        "psi": psi,
        "strong": strong,
        "weak": weak,
        "curve_x": report.curve_x,
        "curve_y": report.curve_y,
    });
    Ok(Artifact {
        table,
        json: Some(json),
    })
}

fn parse_list(spec: &str, what: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| usage(format!("bad {what} `{t}`")))
        })
        .collect()
}

fn parse_dof(spec: &str) -> Result<Vec<f64>> {
    if let Some((a, b)) = spec.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| usage(format!("bad range `{spec}`")))?;
        let b: u32 = b.trim().parse().map_err(|_| usage(format!("bad range `{spec}`")))?;
        if a == 0 || b < a {
            return Err(usage(format!("empty or invalid range `{spec}`")));
        }
        return Ok((a..=b).map(f64::from).collect());
    }
    let v = parse_list(spec, "degrees of freedom")?;
    if v.iter().any(|&d| d <= 0.0) {
        return Err(usage("degrees of freedom must be positive"));
    }
    Ok(v)
}

fn parse_sigmas(spec: &str) -> Result<Vec<f64>> {
    if spec.contains(':') {
        let axis: Axis = spec.parse().map_err(|e: lensdepth::Error| usage(e.to_string()))?;
        return Ok((0..axis.count()).map(|i| axis.value(i)).collect());
    }
    parse_list(spec, "sigma")
}

fn gamma_tn_cmd(v: &str, sigma: &str, method: TnMethod, nodes: u32) -> Result<Artifact> {
    let dofs = parse_dof(v)?;
    let sigmas: Vec<f64> = parse_sigmas(sigma)?.into_iter().filter(|&s| s > 0.0).collect();
    if sigmas.is_empty() {
        return Err(usage("no positive sigma values"));
    }
    let mut table = Table::new(["v", "sigma", "two_gamma"]);
    for &dof in &dofs {
        for &s in &sigmas {
            let two_gamma = match method {
                TnMethod::Crossings => gamma_t_vs_normal(dof, s)?.two_gamma,
                TnMethod::Quadrature => 2.0 * gamma_t_vs_normal_quadrature(dof, s, nodes as usize)?,
            };
            table.push(vec![dof.into(), s.into(), two_gamma.into()]);
        }
    }
    Ok(table.into())
}

fn verdict_row(v: &OrderVerdict) -> Vec<Cell> {
    let rel = serde_json::to_value(v.relation)
        .ok()
        .and_then(|x| x.as_str().map(str::to_string))
        .unwrap_or_default();
    let (at, upper) = match v.witness {
        Some(w) => (Cell::Num(w.at), w.upper.map_or(Cell::Text(String::new()), Cell::Num)),
        None => (Cell::Text(String::new()), Cell::Text(String::new())),
    };
    vec![rel.into(), v.holds.into(), v.margin.into(), at, upper]
}

fn order_cmd(
    ctx: &Ctx<'_>,
    space: &SpaceArgs,
    x: &Path,
    y: &Path,
    eval: &EvalArgs,
    psi: PsiKind,
    psi_args: &PsiArgs,
) -> Result<Artifact> {
    let pair = pair(space, x, y, eval)?;
    let refs = reference(ctx, &pair.region, psi_args);
    let pctx = contexts(&pair, psi, &refs);
    let s = pair.region.field.max().max(pair.fy.max());
    if !(s > 0.0) {
        return Err(usage("the depth is zero everywhere on the evaluation region"));
    }
    let lambdas = lambda_grid(s, psi_args.lambdas as usize)?;
    let cx = psi_curve(&pair.region.field, psi, &lambdas, pctx)?;
    let cy = psi_curve(&pair.fy, psi, &lambdas, pctx)?;
    let tol = default_tolerance(&cx, &cy);
    let verdicts = [
        spread_out_ge(&cx, &cy, tol)?,
        strong_order(&cx, &cy, tol)?,
        weak_order(&cx, &cy, tol)?,
        giovagnoli_order(&pair.sx, &pair.sy)?,
    ];
    let mut table = Table::new(["relation", "holds", "margin", "witness", "witness_upper"]);
    for v in &verdicts {
        table.push(verdict_row(v));
    }
    Ok(Artifact {
        table,
        json: Some(json!({ "psi": psi, "tolerance": tol, "verdicts": verdicts })),
    })
}

fn ddplot_cmd(space: &SpaceArgs, g0: &Path, g1: &Path) -> Result<(Artifact, Figure)> {
    let mut loader = loader(space);
    let (_, s0) = load_sample(&mut loader, g0)?;
    let (_, s1) = load_sample(&mut loader, g1)?;
    let records = depth_depth_pooled(&s0, &s1)?;
    let mut table = Table::new(["index", "group", "depth0", "depth1"]);
    let mut series = vec![
        Series {
            label: "group 0".into(),
            points: Vec::new(),
        },
        Series {
            label: "group 1".into(),
            points: Vec::new(),
        },
    ];
    for r in &records {
        let g = r.group.unwrap_or(0);
        let local = if g == 0 { r.index } else { r.index - s0.len() };
        table.push(vec![local.into(), (g as usize).into(), r.depth0.into(), r.depth1.into()]);
        series[g as usize].points.push((r.depth0, r.depth1));
    }
    let figure = Figure {
        title: "Depth versus depth".into(),
        x_label: "depth in group 0".into(),
        y_label: "depth in group 1".into(),
        series,
        scatter: true,
        diagonal: true,
    };
    Ok((table.into(), figure))
}

fn outliers_cmd(space: &SpaceArgs, sample: &Path, lambda: f64) -> Result<Artifact> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(usage(format!("--lambda {lambda} is outside [0, 1]")));
    }
    let mut loader = loader(space);
    let (file, sample) = load_sample(&mut loader, sample)?;
    let field = self_depth(&sample)?;
    let flagged = outliers(&field, lambda);
    let (deep, deep_depth) = deepest_observation(&sample)?;
    let mut table = Table::new(["index", "line", "depth"]);
    for &i in &flagged {
        table.push(vec![i.into(), file.lines[i].into(), field.values()[i].into()]);
    }
    let json = json!({
        "lambda": lambda,
        "outliers": flagged
            .iter()
            .map(|&i| json!({ "index": i, "line": file.lines[i], "depth": field.values()[i] }))
            .collect::<Vec<_>>(),
        "deepest": { "index": deep, "line": file.lines[deep], "depth": deep_depth },
    });
    Ok(Artifact {
        table,
        json: Some(json),
    })
}

fn group_files(dir: &Path, metric: crate::input::Metric) -> Result<Vec<(String, PathBuf)>> {
    let wanted: &[&str] = match metric {
        crate::input::Metric::Bhv => &["nwk", "newick", "tre", "tree", "txt"],
        _ => &["csv"],
    };
    let entries = fs::read_dir(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::Io(dir.to_path_buf(), e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if path.is_file() && wanted.contains(&ext) {
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string();
            files.push((name, path));
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(usage(format!("{}: no group files", dir.display())));
    }
    Ok(files)
}

fn diam_by_group_cmd(space: &SpaceArgs, dir: &Path, points: usize) -> Result<(Artifact, Figure)> {
    let mut loader = loader(space);
    let mut groups = BTreeMap::new();
    for (name, path) in group_files(dir, space.metric)? {
        let (_, sample) = load_sample(&mut loader, &path)?;
        groups.insert(name, sample);
    }
    let s = groups
        .values()
        .map(|g| self_depth(g).map(|f| f.max()))
        .collect::<lensdepth::Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if !(s > 0.0) {
        return Err(usage("every group has zero depth everywhere"));
    }
    let lambdas = lambda_grid(s, points)?;
    let curves = diameter_curve_by_group(&groups, &lambdas)?;
    let mut table = Table::new(["group", "lambda", "diameter"]);
    let mut series = Vec::new();
    for (name, curve) in &curves {
        for k in 0..curve.len() {
            table.push(vec![name.as_str().into(), curve.lambdas[k].into(), curve.values[k].into()]);
        }
        series.push(Series {
            label: name.clone(),
            points: curve.lambdas.iter().copied().zip(curve.values.iter().copied()).collect(),
        });
    }
    let figure = Figure {
        title: "Level-set diameter by group".into(),
        x_label: "lambda".into(),
        y_label: "diameter".into(),
        series,
        scatter: false,
        diagonal: false,
    };
    Ok((table.into(), figure))
}

fn treedist_cmd(input: &Path) -> Result<Artifact> {
    let mut loader = Loader::new(crate::input::Metric::Bhv, "1x1".parse().expect("valid shape"));
    let file = loader.load(input)?;
    let space = loader.space().expect("set by a successful load");
    let m = pairwise_matrix(&file.points, &space)?;
    let mut table = Table::new(std::iter::once("line".to_string()).chain(file.lines.iter().map(u64::to_string)));
    for i in 0..m.len() {
        let mut row: Vec<Cell> = vec![file.lines[i].into()];
        row.extend(m.row(i).iter().map(|&d| Cell::from(d)));
        table.push(row);
    }
    Ok(table.into())
}

fn simulate_cmd(seed: Option<u64>, path: &Path) -> Result<(ExperimentConfig, Artifact)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| {
        CliError::Input(InputError {
            path: path.to_path_buf(),
            line: Some(e.line() as u64),
            message: e.to_string(),
        })
    })?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let output = asymptotics::run(&cfg)?;
    let table = match &output {
        ExperimentOutput::Convergence(r) => {
            let mut cols = vec!["n", "median", "lower_quartile", "upper_quartile", "mean"];
            if r.boundary.is_some() {
                cols.extend(["boundary_median", "boundary_lower_quartile", "boundary_upper_quartile", "boundary_mean"]);
            }
            let mut t = Table::new(cols);
            for (k, e) in r.per_n.iter().enumerate() {
                let mut row: Vec<Cell> = vec![e.n.into(), e.median.into(), e.lower_quartile.into(), e.upper_quartile.into(), e.mean.into()];
                if let Some(b) = &r.boundary {
                    let b = &b[k];
                    row.extend([b.median.into(), b.lower_quartile.into(), b.upper_quartile.into(), b.mean.into()]);
                }
                t.push(row);
            }
            t
        }
        ExperimentOutput::Clt(r) => {
            let mut t = Table::new([
                "i",
                "j",
                "empirical",
                "std_error",
                "kernel_target",
                "projection_target",
                "finite_n_target",
            ]);
            let k = r.depth.len();
            for i in 0..k {
                for j in 0..k {
                    t.push(vec![
                        i.into(),
                        j.into(),
                        r.empirical[i][j].into(),
                        r.std_errors[i][j].into(),
                        r.kernel_target[i][j].into(),
                        r.projection_target[i][j].into(),
                        r.finite_n_target[i][j].into(),
                    ]);
                }
            }
            t
        }
    };
    let json = serde_json::to_value(&output).expect("report serializes");
    Ok((cfg, Artifact { table, json: Some(json) }))
}
