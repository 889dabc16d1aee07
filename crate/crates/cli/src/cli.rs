use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "dceeval", version, about = "Evaluate synthetic DCE-MRI slices against real acquisitions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pixel and structural metrics over slice pairs matched by file name.
    EvaluatePairs(EvaluatePairs),
    /// Fréchet distance between two feature sets.
    Frechet(Frechet),
    /// Scale a checkpoint cohort's metrics and pick the best checkpoint.
    SameSelect(SameSelect),
    /// Post-contrast minus pre-contrast, clipped at zero.
    Subtract(Subtract),
    /// Validate slice directories as volumes and rewrite them with sidecars.
    Stack(Stack),
    /// Lesion intensity statistics per contrast phase.
    Kinetics(Kinetics),
    /// Generate lesion phantoms with programmed enhancement.
    Phantom(Phantom),
    /// Baseline block-mean features of a slice directory.
    ExtractFeatures(ExtractFeatures),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Report directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,

    /// Worker threads; defaults to the number of available cores.
    #[arg(long, env = "DCEEVAL_WORKERS", value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: Option<u32>,
}

#[derive(Debug, Args)]
pub struct EvaluatePairs {
    /// Directory of reference slices.
    #[arg(long, required_unless_present = "pairs_manifest")]
    pub inputs_a: Option<PathBuf>,

    /// Directory of slices compared against the reference.
    #[arg(long, required_unless_present = "pairs_manifest")]
    pub inputs_b: Option<PathBuf>,

    /// Comma-separated subset of mse,mae,psnr,ssim,msssim.
    #[arg(long, default_value = "mse,mae,psnr,ssim,msssim")]
    pub metrics: String,

    /// CSV `pair_id,path_a,path_b` replacing file-name pairing. Relative
    /// paths resolve against the manifest's directory.
    #[arg(long, conflicts_with_all = ["inputs_a", "inputs_b"])]
    pub pairs_manifest: Option<PathBuf>,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Frechet {
    /// Feature file (binary, or CSV when it ends in `.csv`).
    #[arg(long)]
    pub features_a: PathBuf,

    #[arg(long)]
    pub features_b: PathBuf,

    /// Extractor id recorded for CSV feature files.
    #[arg(long, default_value = "csv")]
    pub csv_extractor_id: String,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SameSelect {
    /// Cohort CSV: `checkpoint_id` followed by one column per metric.
    #[arg(long, alias = "inputs-a")]
    pub input: PathBuf,

    /// JSON file `{"metric": "lower"|"higher"}` or inline `metric=lower,...`.
    /// Metrics not listed use the built-in registry.
    #[arg(long)]
    pub directions: Option<String>,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Subtract {
    /// Directory of pre-contrast slices.
    #[arg(long)]
    pub inputs_a: PathBuf,

    /// Directory of post-contrast slices.
    #[arg(long)]
    pub inputs_b: PathBuf,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Stack {
    /// Directory of slices.
    #[arg(long, alias = "inputs-a")]
    pub input: PathBuf,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Kinetics {
    /// Volume directory of real acquisitions.
    #[arg(long)]
    pub inputs_a: PathBuf,

    /// Volume directory of synthetic phases.
    #[arg(long)]
    pub inputs_b: Option<PathBuf>,

    /// Bounding-box CSV with one row per case.
    #[arg(long)]
    pub bboxes: PathBuf,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Phantom {
    /// JSON phantom description, or an array of them.
    #[arg(long)]
    pub spec: PathBuf,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ExtractFeatures {
    /// Directory of slices.
    #[arg(long, alias = "inputs-a")]
    pub input: PathBuf,

    #[command(flatten)]
    pub common: Common,
}
