use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};

use walklearn::engine::{
    profiles_csv, run, trace_csv, GraphSpec, RunConfig, RunOutcome, WalkerSpec,
};
use walklearn::model::LossKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WalkerArg {
    Exp3,
    Uniform,
    Weighted,
    Exploit,
}

impl WalkerArg {
    pub fn to_spec(self) -> WalkerSpec {
        match self {
            WalkerArg::Exp3 => WalkerSpec::Exp3 {
                exploration_const: None,
                paper_exploration: false,
                eta: None,
                cost_bound: None,
                neighbor_only_availability: false,
            },
            WalkerArg::Uniform => WalkerSpec::Uniform,
            WalkerArg::Weighted => WalkerSpec::Weighted,
            WalkerArg::Exploit => WalkerSpec::Exploit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Binary,
    Multiclass,
}

impl ModelArg {
    fn to_kind(self) -> LossKind {
        match self {
            ModelArg::Binary => LossKind::BinaryLogistic,
            ModelArg::Multiclass => LossKind::MulticlassLogistic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphArg {
    Margulis,
    ErdosRenyi,
    Complete,
    Cycle,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// JSON run configuration; inline flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub walker: Option<WalkerArg>,
    #[arg(long)]
    pub partition: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long, value_enum)]
    pub graph: Option<GraphArg>,
    /// Node count (or grid size for margulis graphs).
    #[arg(long)]
    pub graph_n: Option<usize>,
    /// Edge probability for erdos-renyi graphs.
    #[arg(long)]
    pub graph_p: Option<f64>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub step_scale: Option<f64>,
    #[arg(long)]
    pub step_exponent: Option<f64>,
    #[arg(long)]
    pub eval_every: Option<u64>,
    #[arg(long)]
    pub target_accuracy: Option<f64>,
    #[arg(long)]
    pub feasible_radius: Option<f64>,
    #[arg(long)]
    pub eval_subsample: Option<usize>,
    #[arg(long)]
    pub exact_cost_metrics: bool,
    /// Output directory for trace.csv and summary.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Additionally print a human-readable summary.
    #[arg(long)]
    pub pretty: bool,
    /// Additionally emit a gnuplot script for the trace.
    #[arg(long)]
    pub gnuplot_script: bool,
}

fn inline_graph(args: &RunArgs) -> Result<GraphSpec> {
    let kind = args
        .graph
        .context("--graph is required when no --config is given")?;
    let n = args
        .graph_n
        .context("--graph-n is required when no --config is given")?;
    Ok(match kind {
        GraphArg::Margulis => GraphSpec::Margulis { n },
        GraphArg::ErdosRenyi => GraphSpec::ErdosRenyi {
            n,
            p: args.graph_p.context("--graph-p is required for erdos-renyi")?,
            seed: args.seed.unwrap_or(0),
        },
        GraphArg::Complete => GraphSpec::Complete { n },
        GraphArg::Cycle => GraphSpec::Cycle { n },
    })
}

pub fn build_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg: RunConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => RunConfig {
            graph: inline_graph(args)?,
            partition_path: args
                .partition
                .clone()
                .context("--partition is required when no --config is given")?,
            test_path: args.test.clone(),
            model: args
                .model
                .context("--model is required when no --config is given")?
                .to_kind(),
            walker: args
                .walker
                .context("--walker is required when no --config is given")?
                .to_spec(),
            step_exponent: 0.75,
            step_scale: 0.1,
            horizon: args
                .horizon
                .context("--horizon is required when no --config is given")?,
            seed: args.seed.unwrap_or(0),
            eval_every: 10,
            exact_cost_metrics: false,
            target_accuracy: 0.45,
            feasible_radius: walklearn::model::DEFAULT_FEASIBLE_RADIUS,
            eval_subsample: None,
            log_iterates: false,
        },
    };

    if let Some(walker) = args.walker {
        cfg.walker = walker.to_spec();
    }
    if let Some(p) = &args.partition {
        cfg.partition_path = p.clone();
    }
    if let Some(t) = &args.test {
        cfg.test_path = Some(t.clone());
    }
    if let Some(m) = args.model {
        cfg.model = m.to_kind();
    }
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(v) = args.step_scale {
        cfg.step_scale = v;
    }
    if let Some(v) = args.step_exponent {
        cfg.step_exponent = v;
    }
    if let Some(v) = args.eval_every {
        cfg.eval_every = v;
    }
    if let Some(v) = args.target_accuracy {
        cfg.target_accuracy = v;
    }
    if let Some(v) = args.feasible_radius {
        cfg.feasible_radius = v;
    }
    if let Some(v) = args.eval_subsample {
        cfg.eval_subsample = Some(v);
    }
    if args.exact_cost_metrics {
        cfg.exact_cost_metrics = true;
    }
    Ok(cfg)
}

/// Runs a config and writes trace.csv, summary.json and (for exact-cost
/// runs) profiles.csv into `out`.
pub fn run_to_dir(cfg: &RunConfig, out: &Path) -> Result<RunOutcome<f64>> {
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    let outcome = run::<f64>(cfg)?;
    std::fs::write(out.join("trace.csv"), trace_csv(&outcome.trace))?;
    std::fs::write(
        out.join("summary.json"),
        serde_json::to_string_pretty(&outcome.summary)?,
    )?;
    if cfg.exact_cost_metrics {
        std::fs::write(
            out.join("profiles.csv"),
            profiles_csv(&outcome.visits, &outcome.profiles),
        )?;
    }
    Ok(outcome)
}

const TRACE_PLOT: &str = r#"set datafile separator ','
set key autotitle columnhead
set xlabel 'round'
set terminal pngcairo size 900,600
set output 'accuracy.png'
plot 'trace.csv' using 1:7 with lines title 'accuracy'
set output 'cost.png'
plot 'trace.csv' using 1:8 with lines title 'cumulative cost'
"#;

pub fn execute(args: RunArgs) -> Result<()> {
    let cfg = build_config(&args)?;
    let outcome = run_to_dir(&cfg, &args.out)?;
    if args.gnuplot_script {
        std::fs::write(args.out.join("plot.gp"), TRACE_PLOT)?;
    }

    let summary = &outcome.summary;
    println!(
        "{}",
        serde_json::json!({
            "command": "run",
            "walker": summary.walker,
            "rounds_to_target": summary.rounds_to_target,
            "final_accuracy": summary.final_accuracy,
            "final_loss": summary.final_loss,
            "cumulative_cost": summary.cumulative_cost,
            "content_hash": summary.content_hash,
            "out_dir": args.out,
        })
    );
    if args.pretty {
        eprintln!("walker             : {}", summary.walker);
        eprintln!("nodes              : {}", summary.num_nodes);
        eprintln!(
            "rounds to target   : {}",
            summary
                .rounds_to_target
                .map_or("not reached".to_string(), |k| k.to_string())
        );
        eprintln!(
            "final accuracy     : {}",
            summary
                .final_accuracy
                .map_or("n/a".to_string(), |a| format!("{a:.4}"))
        );
        eprintln!("projection rounds  : {}", summary.projection_rounds);
        eprintln!("runtime            : {:.2}s", summary.runtime_secs);
    }
    Ok(())
}
