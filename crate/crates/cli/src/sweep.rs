use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use walklearn::data::{
    gen_synthetic_gaussian_with_test, load_idx, partition_by_similarity, save_partition,
    save_points, shuffle_split_pool, LabeledPoint,
};
use walklearn::engine::{GraphSpec, RunConfig, WalkerSpec};
use walklearn::model::LossKind;

use crate::run_cmd::run_to_dir;

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Experiment specification (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Concurrent cells; defaults to the number of cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Additionally print an aggregate table.
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Synthetic {
        local_n: usize,
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(default = "default_mean_range")]
        mean_range: f64,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
    },
}

fn default_sigma() -> f64 {
    1.0
}
fn default_mean_range() -> f64 {
    5.0
}
fn default_test_frac() -> f64 {
    0.2
}

/// Cross-product experiment: walkers x similarities x connectivities x seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub data: DataSpec,
    pub nodes: usize,
    pub walkers: Vec<WalkerSpec>,
    pub similarities: Vec<u8>,
    /// Erdos-Renyi edge probabilities; empty means use `graph` instead.
    #[serde(default)]
    pub connectivities: Vec<f64>,
    #[serde(default)]
    pub graph: Option<GraphSpec>,
    pub seeds: Vec<u64>,
    pub model: LossKind,
    pub horizon: u64,
    #[serde(default = "walklearn_default_step_exponent")]
    pub step_exponent: f64,
    #[serde(default = "walklearn_default_step_scale")]
    pub step_scale: f64,
    #[serde(default = "walklearn_default_eval_every")]
    pub eval_every: u64,
    #[serde(default = "walklearn_default_target")]
    pub target_accuracy: f64,
    #[serde(default = "walklearn_default_radius")]
    pub feasible_radius: f64,
    #[serde(default)]
    pub eval_subsample: Option<usize>,
    /// Seed for data generation and splitting (partitions are shared across
    /// walkers and run seeds).
    #[serde(default)]
    pub data_seed: u64,
    #[serde(default = "default_test_frac")]
    pub test_frac: f64,
    pub out_dir: PathBuf,
}

fn walklearn_default_step_exponent() -> f64 {
    0.75
}
fn walklearn_default_step_scale() -> f64 {
    0.1
}
fn walklearn_default_eval_every() -> u64 {
    10
}
fn walklearn_default_target() -> f64 {
    0.45
}
fn walklearn_default_radius() -> f64 {
    walklearn::model::DEFAULT_FEASIBLE_RADIUS
}

impl ExperimentSpec {
    fn validate(&self) -> Result<()> {
        if self.walkers.is_empty() {
            anyhow::bail!("walkers: axis must not be empty");
        }
        if self.seeds.is_empty() {
            anyhow::bail!("seeds: axis must not be empty");
        }
        if self.similarities.is_empty() {
            anyhow::bail!("similarities: axis must not be empty (use [0] for a single level)");
        }
        if self.connectivities.is_empty() && self.graph.is_none() {
            anyhow::bail!("either connectivities or graph must be given");
        }
        if matches!(self.data, DataSpec::Synthetic { .. }) && self.similarities.len() > 1 {
            anyhow::bail!("synthetic data has no similarity axis; give exactly one entry");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub walker: String,
    pub similarity: u8,
    pub connectivity: Option<f64>,
    pub seed: u64,
    pub rounds_to_target: Option<u64>,
    pub final_accuracy: Option<f64>,
    pub status: String,
}

fn walker_label(spec: &WalkerSpec) -> String {
    spec.kind().to_string()
}

/// Prepares one partition per similarity level; returns
/// (similarity -> (partition path, test path)).
fn prepare_data(
    spec: &ExperimentSpec,
    data_dir: &Path,
) -> Result<Vec<(u8, (PathBuf, PathBuf))>> {
    let mut out = Vec::new();
    match &spec.data {
        DataSpec::Synthetic {
            local_n,
            sigma,
            mean_range,
        } => {
            let sim = spec.similarities[0];
            let dir = data_dir.join(format!("s{sim}"));
            std::fs::create_dir_all(&dir)?;
            let test_per_node = ((*local_n as f64 * spec.test_frac
                / (1.0 - spec.test_frac))
                .ceil() as usize)
                .max(1);
            let (partition, test) = gen_synthetic_gaussian_with_test::<f64>(
                spec.nodes,
                *local_n,
                *sigma,
                spec.data_seed,
                *mean_range,
                test_per_node,
            )?;
            let ppath = dir.join("partition.json");
            let tpath = dir.join("test.json");
            save_partition(&partition, &ppath)?;
            save_points(&test, partition.meta.num_classes, &tpath)?;
            out.push((sim, (ppath, tpath)));
        }
        DataSpec::Idx { images, labels } => {
            let pool: Vec<LabeledPoint<f64>> = load_idx(images, labels)?;
            let (train, test) = shuffle_split_pool(pool, spec.test_frac, spec.data_seed)?;
            for &sim in &spec.similarities {
                let dir = data_dir.join(format!("s{sim}"));
                std::fs::create_dir_all(&dir)?;
                let partition = partition_by_similarity(&train, spec.nodes, sim, spec.data_seed)?;
                let ppath = dir.join("partition.json");
                let tpath = dir.join("test.json");
                save_partition(&partition, &ppath)?;
                save_points(&test, partition.meta.num_classes, &tpath)?;
                out.push((sim, (ppath, tpath)));
            }
        }
    }
    Ok(out)
}

struct Cell {
    walker: WalkerSpec,
    similarity: u8,
    connectivity: Option<f64>,
    seed: u64,
    partition: PathBuf,
    test: PathBuf,
}

fn cell_config(spec: &ExperimentSpec, cell: &Cell) -> RunConfig {
    let graph = match cell.connectivity {
        Some(p) => GraphSpec::ErdosRenyi {
            n: spec.nodes,
            p,
            seed: cell.seed,
        },
        None => spec.graph.clone().expect("validated"),
    };
    RunConfig {
        graph,
        partition_path: cell.partition.clone(),
        test_path: Some(cell.test.clone()),
        model: spec.model,
        walker: cell.walker.clone(),
        step_exponent: spec.step_exponent,
        step_scale: spec.step_scale,
        horizon: spec.horizon,
        seed: cell.seed,
        eval_every: spec.eval_every,
        exact_cost_metrics: false,
        target_accuracy: spec.target_accuracy,
        feasible_radius: spec.feasible_radius,
        eval_subsample: spec.eval_subsample,
        log_iterates: false,
    }
}

fn cell_dir(out_dir: &Path, cell: &Cell) -> PathBuf {
    let conn = cell
        .connectivity
        .map_or_else(String::new, |p| format!("_p{p}"));
    out_dir.join("cells").join(format!(
        "{}_s{}{}_seed{}",
        walker_label(&cell.walker),
        cell.similarity,
        conn,
        cell.seed
    ))
}

fn median_u64(mut values: Vec<u64>) -> Option<u64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    Some(values[values.len() / 2])
}

pub fn execute(args: SweepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.spec)
        .with_context(|| format!("reading spec {}", args.spec.display()))?;
    let spec: ExperimentSpec = serde_json::from_str(&text)
        .with_context(|| format!("parsing spec {}", args.spec.display()))?;
    spec.validate()?;
    std::fs::create_dir_all(&spec.out_dir)?;

    let data = prepare_data(&spec, &spec.out_dir.join("data"))?;

    let connectivity_axis: Vec<Option<f64>> = if spec.connectivities.is_empty() {
        vec![None]
    } else {
        spec.connectivities.iter().copied().map(Some).collect()
    };

    let mut cells = Vec::new();
    for walker in &spec.walkers {
        for (sim, (ppath, tpath)) in &data {
            for &conn in &connectivity_axis {
                for &seed in &spec.seeds {
                    cells.push(Cell {
                        walker: walker.clone(),
                        similarity: *sim,
                        connectivity: conn,
                        seed,
                        partition: ppath.clone(),
                        test: tpath.clone(),
                    });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .context("building worker pool")?;
    let results: Vec<CellResult> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let cfg = cell_config(&spec, cell);
                let dir = cell_dir(&spec.out_dir, cell);
                match run_to_dir(&cfg, &dir) {
                    Ok(outcome) => CellResult {
                        walker: walker_label(&cell.walker),
                        similarity: cell.similarity,
                        connectivity: cell.connectivity,
                        seed: cell.seed,
                        rounds_to_target: outcome.summary.rounds_to_target,
                        final_accuracy: outcome.summary.final_accuracy,
                        status: "ok".into(),
                    },
                    Err(err) => CellResult {
                        walker: walker_label(&cell.walker),
                        similarity: cell.similarity,
                        connectivity: cell.connectivity,
                        seed: cell.seed,
                        rounds_to_target: None,
                        final_accuracy: None,
                        status: format!("error: {err:#}"),
                    },
                }
            })
            .collect()
    });

    // Per-cell rows.
    let mut results_csv = String::from(
        "walker,similarity,connectivity,seed,rounds_to_target,final_accuracy,status\n",
    );
    for r in &results {
        results_csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.walker,
            r.similarity,
            r.connectivity.map_or_else(String::new, |p| p.to_string()),
            r.seed,
            r.rounds_to_target.map_or_else(String::new, |k| k.to_string()),
            r.final_accuracy.map_or_else(String::new, |a| format!("{a:.6}")),
            r.status.replace(',', ";"),
        ));
        println!("{}", serde_json::to_string(r)?);
    }
    std::fs::write(spec.out_dir.join("results.csv"), &results_csv)?;

    // Aggregate: median rounds-to-target per (walker, similarity, connectivity).
    let mut groups: Vec<(String, u8, Option<f64>)> = results
        .iter()
        .map(|r| (r.walker.clone(), r.similarity, r.connectivity))
        .collect();
    groups.sort_by(|a, b| a.partial_cmp(b).expect("orderable group keys"));
    groups.dedup();

    let mut aggregate_csv =
        String::from("walker,similarity,connectivity,cells,failures,unreached,median_rounds_to_target\n");
    let mut aggregate_rows = Vec::new();
    for (walker, sim, conn) in groups {
        let members: Vec<&CellResult> = results
            .iter()
            .filter(|r| r.walker == walker && r.similarity == sim && r.connectivity == conn)
            .collect();
        let failures = members.iter().filter(|r| r.status != "ok").count();
        let reached: Vec<u64> = members.iter().filter_map(|r| r.rounds_to_target).collect();
        let unreached = members.len() - failures - reached.len();
        let median = median_u64(reached);
        aggregate_csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            walker,
            sim,
            conn.map_or_else(String::new, |p| p.to_string()),
            members.len(),
            failures,
            unreached,
            median.map_or_else(String::new, |m| m.to_string()),
        ));
        aggregate_rows.push(serde_json::json!({
            "command": "sweep_aggregate",
            "walker": walker,
            "similarity": sim,
            "connectivity": conn,
            "cells": members.len(),
            "failures": failures,
            "unreached": unreached,
            "median_rounds_to_target": median,
        }));
    }
    std::fs::write(spec.out_dir.join("aggregate.csv"), &aggregate_csv)?;
    for row in &aggregate_rows {
        println!("{row}");
    }

    if args.pretty {
        eprintln!("{aggregate_csv}");
    }

    let failures = results.iter().filter(|r| r.status != "ok").count();
    println!(
        "{}",
        serde_json::json!({
            "command": "sweep",
            "cells": results.len(),
            "failures": failures,
            "out_dir": spec.out_dir,
        })
    );
    if failures > 0 {
        anyhow::bail!("{failures} of {} cells failed", results.len());
    }
    Ok(())
}
