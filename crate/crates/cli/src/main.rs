//! `rumorlens`: staged pipeline identifying users prone to posting
//! unproven health-cure claims. Each subcommand runs one stage, writes its
//! artifacts under the configured output directory, and records a manifest
//! so downstream stages can verify their inputs.

mod config;
mod manifest;
mod model_io;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::PipelineConfig;
use stages::Ctx;

#[derive(Parser)]
#[command(name = "rumorlens", version, about)]
struct Cli {
    /// Flat key=value pipeline configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Proceed even when upstream artifacts look stale.
    #[arg(long, global = true)]
    force: bool,

    /// Override the config seed (sensitivity runs).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and summarize the post and profile archives.
    Ingest,
    /// Assign posts to rumor topics via the boolean query file.
    MatchQueries,
    /// Apply the organization, name, and tweeting-rate filters.
    FilterUsers,
    /// Aggregate crowd annotations by plurality vote.
    LabelAggregate,
    /// Train the post-relevance cascades on the aggregated labels.
    TrainRelevance,
    /// Classify every retained user's posts and derive user groups.
    DeriveGroups,
    /// Build per-user feature vectors over pre-cutoff windows.
    ExtractFeatures,
    /// Forward-AIC logistic model separating rumor from control users.
    TrainUserModel,
    /// Group comparison statistics, matching, and frequency tables.
    CompareGroups,
    /// Assemble the final human-readable report.
    Report,
}

impl Command {
    fn run(&self, ctx: &Ctx) -> anyhow::Result<()> {
        match self {
            Command::Ingest => stages::ingest(ctx),
            Command::MatchQueries => stages::match_queries(ctx),
            Command::FilterUsers => stages::filter_users(ctx),
            Command::LabelAggregate => stages::label_aggregate(ctx),
            Command::TrainRelevance => stages::train_relevance(ctx),
            Command::DeriveGroups => stages::derive_groups_stage(ctx),
            Command::ExtractFeatures => stages::extract_features(ctx),
            Command::TrainUserModel => stages::train_user_model(ctx),
            Command::CompareGroups => stages::compare_groups(ctx),
            Command::Report => stages::report(ctx),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config_path) = cli.config.as_deref() else {
        eprintln!("error: --config is required");
        return ExitCode::FAILURE;
    };
    let cfg = match PipelineConfig::load(config_path, cli.seed, cli.out.as_deref()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    let ctx = Ctx::new(cfg, cli.force);
    match cli.command.run(&ctx) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
