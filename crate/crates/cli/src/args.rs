use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "cyldisc", version, about = "Exact experiments on cylinder intersections, discrepancy and regularity")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalArgs {
    /// Worker threads (0 = available parallelism). CYLDISC_THREADS overrides this.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Largest number of points a generated function or relation may have.
    #[arg(long, global = true, default_value_t = 1 << 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub point_budget: u64,
    /// Largest number of cylinder intersections an exhaustive sweep may visit.
    #[arg(long, global = true, default_value_t = 1 << 24, value_parser = clap::value_parser!(u64).range(1..))]
    pub ci_budget: u64,
    /// Largest number of cells a partition grid may have.
    #[arg(long, global = true, default_value_t = 1 << 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub grid_budget: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the discrepancy upper bound for GIP.
    Bound(BoundArgs),
    /// Exhaustive discrepancy of GIP over all cylinder intersections.
    GipDiscrepancy(GipArgs),
    /// Search for a large homogeneous cylinder intersection.
    SehSearch(SehArgs),
    /// Regularity defect of a grid partition, or a greedy refinement.
    RegularityDefect(DefectArgs),
    /// Extend a measure on a finite Boolean algebra by one set.
    MeasureExtend(ExtendArgs),
    /// Decide whether a measure is determined by a subalgebra.
    DeterminacyCheck(DeterminacyArgs),
    /// Materialise a relation as explicit JSON.
    GenRelation(GenArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Bound(_) => "bound",
            Command::GipDiscrepancy(_) => "gip-discrepancy",
            Command::SehSearch(_) => "seh-search",
            Command::RegularityDefect(_) => "regularity-defect",
            Command::MeasureExtend(_) => "measure-extend",
            Command::DeterminacyCheck(_) => "determinacy-check",
            Command::GenRelation(_) => "gen-relation",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundArgs {
    #[arg(long)]
    pub q: u64,
    #[arg(long)]
    pub s: u64,
    #[arg(long)]
    pub k: u32,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FieldArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    /// Monic irreducible modulus, constant term first (e.g. 1,1,1).
    /// Defaults to the first irreducible polynomial of degree m.
    #[arg(long, value_delimiter = ',')]
    pub poly: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GipMode {
    /// The maximum discrepancy and its witness.
    Exact,
    /// Only the upper bound.
    Bound,
    /// The maximum plus the all-values and homogeneity checks.
    Check,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GipArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub field: FieldArgs,
    #[arg(long)]
    pub s: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = GipMode::Check)]
    pub mode: GipMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SehMode {
    Exact,
    Greedy,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SehArgs {
    #[arg(long)]
    pub relation: PathBuf,
    /// Per-factor weights; uniform when omitted.
    #[arg(long)]
    pub measures: Option<PathBuf>,
    #[arg(long)]
    pub alpha: String,
    #[arg(long, value_enum, default_value_t = SehMode::Exact)]
    pub mode: SehMode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub restarts: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DefectArgs {
    #[arg(long)]
    pub relation: PathBuf,
    #[arg(long)]
    pub measures: Option<PathBuf>,
    /// Evaluate this partition.
    #[arg(long, conflicts_with = "epsilon", required_unless_present = "epsilon")]
    pub partition: Option<PathBuf>,
    /// Refine greedily from the trivial partition until the defect drops below this.
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Per-direction block cap for refinement.
    #[arg(long, default_value_t = 8)]
    pub max_blocks: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExtendArgs {
    /// {"n":..,"gens":[[points]..],"weights":[one per atom]}.
    #[arg(long)]
    pub algebra: PathBuf,
    /// Points of the new set, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub set: Vec<usize>,
    /// Target measure of the set; the midpoint of the admissible interval when omitted.
    #[arg(long)]
    pub alpha: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DeterminacyArgs {
    /// {"n":..,"gens":[[points]..],"weights":[one per point]}.
    #[arg(long)]
    pub algebra: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationKind {
    Halfgraph,
    Gip,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: RelationKind,
    /// Half-graph side length.
    #[arg(long, required_if_eq("kind", "halfgraph"))]
    pub n: Option<usize>,
    #[arg(long, required_if_eq("kind", "gip"))]
    pub p: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    #[arg(long, value_delimiter = ',')]
    pub poly: Option<Vec<u64>>,
    /// Inner length; defaults to 2^(k+1).
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long, required_if_eq("kind", "gip"))]
    pub k: Option<usize>,
}
