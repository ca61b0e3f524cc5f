//! `lensdepth` command-line tool.

// `!(x > 0.0)` is how NaN gets rejected along with the rest
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod input;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lensdepth::dispersion::PsiKind;
use serde::Serialize;

use input::{Metric, Shape};
use output::Format;

#[derive(Debug, Parser)]
#[command(name = "lensdepth", version, about = "Lens depth over metric spaces: depth, level sets, dispersion orders")]
pub struct Cli {
    /// Seed for every random draw (reference points, simulations).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Leave the generation time out of the provenance header.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpaceArgs {
    #[arg(long, value_enum, default_value = "euclidean")]
    pub metric: Metric,
    /// Frame shape for the Stiefel metrics.
    #[arg(long, default_value = "3x2")]
    pub shape: Shape,
}

/// Where level sets are evaluated. Without `--grid` or `--queries` the
/// sample points themselves are used.
#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    /// Lattice `lo:hi:step` per axis, comma separated (Euclidean only).
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Treat the lattice as a torus.
    #[arg(long)]
    pub wrap: bool,
    /// Evaluation points file (neighbours from a k-nearest-neighbour graph).
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    pub knn: u32,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PsiArgs {
    /// Number of levels on [0, max depth].
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u32).range(2..))]
    pub lambdas: u32,
    /// Uniform reference points for the volume functional on a lattice.
    #[arg(long, default_value_t = 20_000, value_parser = clap::value_parser!(u32).range(1..))]
    pub reference: u32,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Empirical lens depth of query points (`index,depth`).
    Depth {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        sample: PathBuf,
        /// Defaults to the sample itself.
        #[arg(long)]
        queries: Option<PathBuf>,
        /// Score a query that equals a sample point against the other points.
        #[arg(long)]
        leave_one_out: bool,
    },
    /// Membership and inner boundary of {depth >= lambda}; with `--psi`, a
    /// sweep over levels (`lambda,psi`).
    Levelset {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        sample: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
        #[command(flatten)]
        eval: EvalArgs,
        /// Boundary CSV path (default: next to `--out`).
        #[arg(long)]
        boundary_out: Option<PathBuf>,
        #[arg(long)]
        psi: Option<PsiKind>,
        #[command(flatten)]
        psi_args: PsiArgs,
    },
    /// Level-set functional over a grid of levels (`lambda,psi`).
    Psi {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        sample: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long, default_value = "diam")]
        psi: PsiKind,
        #[command(flatten)]
        psi_args: PsiArgs,
    },
    /// Gamma coefficient of X against Y.
    Gamma {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long, default_value = "diam")]
        psi: PsiKind,
        #[command(flatten)]
        psi_args: PsiArgs,
        /// Extra levels inserted in each cell where the curves cross.
        #[arg(long, default_value_t = 4)]
        refine: u32,
    },
    /// Gamma of Student t_v against N(0, sigma^2) (`v,sigma,two_gamma`).
    GammaTn {
        /// Degrees of freedom: `3`, `1,2,5` or `1..5`.
        #[arg(long)]
        v: String,
        /// Scales: `1.0`, `0.5,1,2` or `lo:hi:step`; values <= 0 are skipped.
        #[arg(long)]
        sigma: String,
        #[arg(long, value_enum, default_value = "crossings")]
        method: commands::TnMethod,
        /// Midpoints for the quadrature method.
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u32).range(1..))]
        nodes: u32,
    },
    /// Dispersion orders between X and Y.
    Order {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long, default_value = "diam")]
        psi: PsiKind,
        #[command(flatten)]
        psi_args: PsiArgs,
    },
    /// Depth of every point with respect to two groups.
    Ddplot {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        group0: PathBuf,
        #[arg(long)]
        group1: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Sample points with leave-one-out depth below lambda.
    Outliers {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        sample: PathBuf,
        #[arg(long, default_value_t = 0.10)]
        lambda: f64,
    },
    /// Diameter of the level sets of each group in a directory.
    DiamByGroup {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        groups: PathBuf,
        #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u32).range(2..))]
        lambdas: u32,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// BHV distance matrix of the trees in a Newick file.
    Treedist {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Run a Monte Carlo experiment described by a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lensdepth: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
