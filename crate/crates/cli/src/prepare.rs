use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, ValueEnum};

use walklearn::data::{
    gen_synthetic_gaussian_with_test, load_idx, partition_by_similarity, save_partition,
    save_points, shuffle_split_pool, LabeledPoint, Partition,
};

/// Dataset root used to resolve relative IDX paths.
pub const DATA_DIR_ENV: &str = "WALKLEARN_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Synthetic,
    Idx,
}

#[derive(Args, Debug)]
pub struct PrepareArgs {
    /// Where the point pool comes from.
    #[arg(long, value_enum)]
    pub source: SourceArg,
    /// IDX image file (required with --source idx).
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// IDX label file (required with --source idx).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Number of nodes N.
    #[arg(long)]
    pub nodes: usize,
    /// Similarity level s in 0..=100 (idx source).
    #[arg(long, default_value_t = 0)]
    pub similarity: u8,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for partition.json and test.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Points per node for synthetic data.
    #[arg(long, default_value_t = 20)]
    pub local_n: usize,
    /// Gaussian standard deviation for synthetic data.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Half-width of the uniform box synthetic node means are drawn from.
    #[arg(long, default_value_t = 5.0)]
    pub mean_range: f64,
    /// Fraction of the pool held out for testing.
    #[arg(long, default_value_t = 0.2)]
    pub test_frac: f64,
}

/// Relative paths that do not exist locally are retried under the
/// `WALKLEARN_DATA_DIR` root.
fn resolve_data_path(path: &Path) -> PathBuf {
    if path.is_absolute() || path.exists() {
        return path.to_path_buf();
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(root) => PathBuf::from(root).join(path),
        None => path.to_path_buf(),
    }
}

pub fn execute(args: PrepareArgs) -> Result<()> {
    if args.source == SourceArg::Idx && (args.images.is_none() || args.labels.is_none()) {
        // Usage error: exit code 2 via clap.
        let mut cmd = crate::Cli::command();
        cmd.error(
            ErrorKind::MissingRequiredArgument,
            "--source idx requires both --images and --labels",
        )
        .exit();
    }
    if !(args.test_frac >= 0.0 && args.test_frac < 1.0) {
        anyhow::bail!("--test-frac must lie in [0, 1), got {}", args.test_frac);
    }

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;

    let (partition, test): (Partition<f64>, Vec<LabeledPoint<f64>>) = match args.source {
        SourceArg::Synthetic => {
            let test_per_node = if args.test_frac > 0.0 {
                ((args.local_n as f64 * args.test_frac / (1.0 - args.test_frac)).ceil() as usize)
                    .max(1)
            } else {
                0
            };
            gen_synthetic_gaussian_with_test(
                args.nodes,
                args.local_n,
                args.sigma,
                args.seed,
                args.mean_range,
                test_per_node,
            )?
        }
        SourceArg::Idx => {
            let images = resolve_data_path(args.images.as_ref().expect("checked above"));
            let labels = resolve_data_path(args.labels.as_ref().expect("checked above"));
            let pool: Vec<LabeledPoint<f64>> = load_idx(&images, &labels)?;
            let (train, test) = shuffle_split_pool(pool, args.test_frac, args.seed)?;
            let partition = partition_by_similarity(&train, args.nodes, args.similarity, args.seed)?;
            (partition, test)
        }
    };

    let partition_path = args.out.join("partition.json");
    let test_path = args.out.join("test.json");
    save_partition(&partition, &partition_path)?;
    save_points(&test, partition.meta.num_classes, &test_path)?;

    println!(
        "{}",
        serde_json::json!({
            "command": "prepare",
            "partition": partition_path,
            "test": test_path,
            "nodes": partition.meta.num_nodes,
            "points_per_node": partition.meta.n,
            "feature_dim": partition.meta.d,
            "num_classes": partition.meta.num_classes,
            "similarity_pct": partition.meta.similarity_pct,
            "test_points": test.len(),
        })
    );
    Ok(())
}
