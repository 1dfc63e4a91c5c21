//! The walk-and-learn loop: node selection, local point sampling,
//! importance-weighted projected SGD, iterate averaging, and per-round
//! metrics, plus the run configuration and trace/summary formats.

use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{load_partition, load_points, LabeledPoint, NodeDataset, Partition};
use crate::graph::{
    build_complete, build_cycle, build_erdos_renyi, build_margulis, spectral_diagnostic, Graph,
    GraphError, SPECTRAL_MAX_NODES,
};
use crate::model::{
    evaluate, lipschitz_constant, node_grad, point_grad, project, LossKind, LossModel, ModelError,
    ParamVector,
};
use crate::oracle::{cost_profile, CostProfile, OracleError, RegretMode, RoundVisit};
use crate::scalar::{axpy, norm, norm_sq, Scalar};
use crate::walkers::{
    default_exploration_const, paper_exploration_const, AnyWalker, Exp3Params, Exp3Walker,
    ExploitWalker, StepFeedback, UniformMhWalker, WalkerError, WalkerKind, WeightedMhWalker,
};

/// Largest N*n for which exact per-node costs are computed each eval round.
pub const EXACT_COST_GUARD: usize = 100_000;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Walker(#[from] WalkerError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Graph construction recipe; the seed only matters for random graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Margulis { n: usize },
    ErdosRenyi { n: usize, p: f64, seed: u64 },
    Complete { n: usize },
    Cycle { n: usize },
    EdgeList { path: PathBuf },
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph, GraphError> {
        match self {
            GraphSpec::Margulis { n } => build_margulis(*n),
            GraphSpec::ErdosRenyi { n, p, seed } => build_erdos_renyi(*n, *p, *seed),
            GraphSpec::Complete { n } => build_complete(*n),
            GraphSpec::Cycle { n } => build_cycle(*n),
            GraphSpec::EdgeList { path } => Graph::load_edge_list(path),
        }
    }
}

/// Walker recipe with the tunables each strategy accepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WalkerSpec {
    Exp3 {
        /// Exploration constant A; defaults to 4N.
        #[serde(default)]
        exploration_const: Option<f64>,
        /// Use the 2^(N+2) exploration constant instead of 4N.
        #[serde(default)]
        paper_exploration: bool,
        /// Learning rate override; defaults to sqrt(ln N / (N T)).
        #[serde(default)]
        eta: Option<f64>,
        /// Fixed cost normalization bound instead of the running max.
        #[serde(default)]
        cost_bound: Option<f64>,
        /// Average availability only over rounds where a node was awake.
        #[serde(default)]
        neighbor_only_availability: bool,
    },
    Uniform,
    Weighted,
    Exploit,
}

impl WalkerSpec {
    pub fn kind(&self) -> WalkerKind {
        match self {
            WalkerSpec::Exp3 { .. } => WalkerKind::Exp3,
            WalkerSpec::Uniform => WalkerKind::Uniform,
            WalkerSpec::Weighted => WalkerKind::Weighted,
            WalkerSpec::Exploit => WalkerKind::Exploit,
        }
    }
}

fn default_step_exponent() -> f64 {
    0.75
}
fn default_step_scale() -> f64 {
    0.1
}
fn default_eval_every() -> u64 {
    10
}
fn default_target_accuracy() -> f64 {
    0.45
}
fn default_feasible_radius() -> f64 {
    crate::model::DEFAULT_FEASIBLE_RADIUS
}

/// Everything one run needs; JSON-serializable for the CLI and sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: GraphSpec,
    pub partition_path: PathBuf,
    #[serde(default)]
    pub test_path: Option<PathBuf>,
    pub model: LossKind,
    pub walker: WalkerSpec,
    /// Step-size exponent q in (1/2, 1): gamma_k = step_scale / k^q.
    #[serde(default = "default_step_exponent")]
    pub step_exponent: f64,
    #[serde(default = "default_step_scale")]
    pub step_scale: f64,
    /// Total rounds T.
    pub horizon: u64,
    pub seed: u64,
    #[serde(default = "default_eval_every")]
    pub eval_every: u64,
    /// Compute exact per-node costs each eval round (regret accounting).
    #[serde(default)]
    pub exact_cost_metrics: bool,
    #[serde(default = "default_target_accuracy")]
    pub target_accuracy: f64,
    #[serde(default = "default_feasible_radius")]
    pub feasible_radius: f64,
    /// Evaluate on only the first m test points (they are pre-shuffled).
    #[serde(default)]
    pub eval_subsample: Option<usize>,
    /// Keep every iterate in memory (heavy; consistency checks only).
    #[serde(default)]
    pub log_iterates: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.horizon < 2 {
            return Err(EngineError::Config(format!(
                "horizon: must be >= 2, got {}",
                self.horizon
            )));
        }
        if !(self.step_exponent > 0.5 && self.step_exponent < 1.0) {
            return Err(EngineError::Config(format!(
                "step_exponent: must lie in (0.5, 1), got {}",
                self.step_exponent
            )));
        }
        if !(self.step_scale > 0.0) {
            return Err(EngineError::Config(format!(
                "step_scale: must be > 0, got {}",
                self.step_scale
            )));
        }
        if self.eval_every == 0 {
            return Err(EngineError::Config("eval_every: must be >= 1".into()));
        }
        if !(self.feasible_radius > 0.0) {
            return Err(EngineError::Config(format!(
                "feasible_radius: must be > 0, got {}",
                self.feasible_radius
            )));
        }
        if !(self.target_accuracy >= 0.0 && self.target_accuracy <= 1.0) {
            return Err(EngineError::Config(format!(
                "target_accuracy: must lie in [0, 1], got {}",
                self.target_accuracy
            )));
        }
        if self.eval_subsample == Some(0) {
            return Err(EngineError::Config("eval_subsample: must be >= 1".into()));
        }
        Ok(())
    }
}

/// Step size gamma_k = scale / k^q.
pub fn step_size<S: Scalar>(k: u64, step_exponent: f64, step_scale: f64) -> S {
    debug_assert!(k >= 1);
    S::from_f64_c(step_scale / (k as f64).powf(step_exponent))
}

/// One trace row; rows are written on eval rounds plus the final round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: u64,
    pub node: usize,
    pub step_size: f64,
    pub cost_estimate: f64,
    pub cost_exact: Option<f64>,
    pub loss: Option<f64>,
    pub accuracy: Option<f64>,
    pub cumulative_cost: f64,
    pub cumulative_regret: Option<f64>,
    pub projected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub cumulative_regret_available_min: f64,
    pub cumulative_regret_best_fixed: f64,
    pub optimal_sampler_cumulative_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub walker: WalkerKind,
    pub num_nodes: usize,
    pub rounds_to_target: Option<u64>,
    pub final_accuracy: Option<f64>,
    pub final_loss: Option<f64>,
    pub averaged_accuracy: Option<f64>,
    pub cumulative_cost: f64,
    pub projection_rounds: u64,
    /// Second-largest eigenvalue modulus of the initial transition matrix.
    pub spectral_gap_initial: Option<f64>,
    pub oracle: Option<OracleSummary>,
    /// Hash over the deterministic outputs (trace plus headline metrics);
    /// identical for identical config and seed.
    pub content_hash: String,
    /// Wall-clock time; excluded from the content hash.
    pub runtime_secs: f64,
}

pub struct RunOutcome<S> {
    pub final_w: ParamVector<S>,
    pub averaged_w: ParamVector<S>,
    pub trace: Vec<RoundRecord>,
    pub visits: Vec<RoundVisit>,
    pub profiles: Vec<CostProfile<S>>,
    pub iterates: Vec<Vec<S>>,
    pub summary: RunSummary,
}

pub struct SgdStepResult<S> {
    pub w: ParamVector<S>,
    pub cost_estimate: S,
    pub point_index: usize,
    pub projected: bool,
}

/// One projected SGD update on a uniformly sampled local point:
/// w' = project(w - gamma * (1/p_sel) * point_grad), with the single-sample
/// cost estimate (1/n) ||point_grad||^2.
pub fn sgd_step<S: Scalar, R: Rng>(
    model: &LossModel,
    w: &ParamVector<S>,
    ds: &NodeDataset<S>,
    p_sel: S,
    gamma: S,
    rng: &mut R,
) -> Result<SgdStepResult<S>, EngineError> {
    if !(p_sel > S::zero()) {
        return Err(EngineError::Config(format!(
            "selection probability must be positive, got {p_sel}"
        )));
    }
    if ds.points.is_empty() {
        return Err(ModelError::EmptyDataset.into());
    }
    let point_index = rng.random_range(0..ds.points.len());
    let pt = &ds.points[point_index];
    let grad = point_grad(model, w, pt)?;

    // Bounded-gradient invariant: sigma' <= 1 for the binary loss and the
    // softmax residual has norm <= sqrt(2).
    let bound_factor = match model.kind {
        LossKind::BinaryLogistic => 1.0,
        LossKind::MulticlassLogistic => std::f64::consts::SQRT_2,
    };
    let grad_norm = norm(&grad).to_f64_c();
    let x_norm = norm(&pt.features).to_f64_c();
    assert!(
        grad_norm <= bound_factor * x_norm * (1.0 + 1e-9) + 1e-12,
        "gradient norm {grad_norm} exceeds bound {bound_factor} * {x_norm}"
    );

    let cost_estimate = norm_sq(&grad) / S::from_f64_c(ds.points.len() as f64);
    let mut values = w.values.clone();
    axpy(-(gamma / p_sel), &grad, &mut values);
    let candidate = ParamVector {
        values,
        feasible_radius: w.feasible_radius,
    };
    let projected = candidate.norm() > candidate.feasible_radius;
    Ok(SgdStepResult {
        w: project(&candidate),
        cost_estimate,
        point_index,
        projected,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeterogeneityProbe<S> {
    /// (1/N) sum_i ||grad F_i(w)||^2.
    pub mean_local_sq: S,
    /// ||grad F(w)||^2 of the global objective.
    pub global_sq: S,
}

/// Local-vs-global gradient second moments at one w; fitting these across
/// probe points quantifies how dissimilar the node objectives are.
pub fn heterogeneity_probe<S: Scalar>(
    model: &LossModel,
    partition: &Partition<S>,
    w: &ParamVector<S>,
) -> Result<HeterogeneityProbe<S>, EngineError> {
    let n = partition.node_datasets.len();
    let mut global = vec![S::zero(); model.param_len()];
    let mut mean_local_sq = S::zero();
    for ds in &partition.node_datasets {
        let g = node_grad(model, w, ds)?;
        mean_local_sq += norm_sq(&g);
        axpy(S::one(), &g, &mut global);
    }
    let inv_n = S::one() / S::from_f64_c(n as f64);
    global.iter_mut().for_each(|v| *v *= inv_n);
    Ok(HeterogeneityProbe {
        mean_local_sq: mean_local_sq * inv_n,
        global_sq: norm_sq(&global),
    })
}

fn build_walker<S: Scalar>(
    spec: &WalkerSpec,
    graph: &Graph,
    partition: &Partition<S>,
    model: &LossModel,
    horizon: u64,
) -> Result<AnyWalker<S>, EngineError> {
    let n = graph.num_nodes();
    Ok(match spec {
        WalkerSpec::Uniform => AnyWalker::Uniform(UniformMhWalker),
        WalkerSpec::Exploit => AnyWalker::Exploit(ExploitWalker::new(n)),
        WalkerSpec::Weighted => {
            let weights = partition
                .node_datasets
                .iter()
                .map(|ds| lipschitz_constant(model, ds))
                .collect::<Result<Vec<S>, _>>()?;
            AnyWalker::Weighted(WeightedMhWalker::new(weights)?)
        }
        WalkerSpec::Exp3 {
            exploration_const,
            paper_exploration,
            eta,
            cost_bound,
            neighbor_only_availability,
        } => {
            let a = match (exploration_const, paper_exploration) {
                (Some(a), _) => S::from_f64_c(*a),
                (None, true) => paper_exploration_const(n),
                (None, false) => default_exploration_const(n),
            };
            AnyWalker::Exp3(Exp3Walker::new(
                n,
                horizon,
                Exp3Params {
                    exploration_const: a,
                    eta: eta.map(S::from_f64_c),
                    cost_bound: cost_bound.map(S::from_f64_c),
                    neighbor_only_availability: *neighbor_only_availability,
                },
            )?)
        }
    })
}

/// Executes the configured walk for `horizon` rounds and returns the final
/// iterate, the step-size-weighted average iterate, and the trace.
pub fn run<S: Scalar>(cfg: &RunConfig) -> Result<RunOutcome<S>, EngineError> {
    let started = Instant::now();
    cfg.validate()?;

    let graph = cfg.graph.build()?;
    let partition: Partition<S> = load_partition(&cfg.partition_path)?;
    if partition.meta.num_nodes != graph.num_nodes() {
        return Err(EngineError::Config(format!(
            "partition_path: partition has {} nodes, graph has {}",
            partition.meta.num_nodes,
            graph.num_nodes()
        )));
    }
    if cfg.exact_cost_metrics {
        let work = partition.meta.num_nodes * partition.meta.n;
        if work > EXACT_COST_GUARD {
            return Err(EngineError::Config(format!(
                "exact_cost_metrics: N*n = {work} exceeds the {EXACT_COST_GUARD} guard"
            )));
        }
    }

    let test_points: Option<Vec<LabeledPoint<S>>> = match &cfg.test_path {
        Some(path) => Some(load_points(path)?.0),
        None => None,
    };
    let eval_slice: Option<&[LabeledPoint<S>]> = test_points.as_deref().map(|pts| {
        let m = cfg.eval_subsample.unwrap_or(pts.len()).min(pts.len());
        &pts[..m]
    });

    let model = LossModel::new(cfg.model, partition.meta.d, partition.meta.num_classes)?;
    let radius = S::from_f64_c(cfg.feasible_radius);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w: ParamVector<S> =
        ParamVector::sample_uniform_ball(model.param_len(), radius, &mut rng);
    let mut current = rng.random_range(0..graph.num_nodes());

    let mut walker = build_walker(&cfg.walker, &graph, &partition, &model, cfg.horizon)?;
    let spectral_gap_initial = if graph.num_nodes() <= SPECTRAL_MAX_NODES {
        Some(spectral_diagnostic(&graph, &walker.transition_matrix(&graph))?.to_f64_c())
    } else {
        None
    };

    let mut averaged = vec![S::zero(); model.param_len()];
    let mut gamma_sum = S::zero();
    let mut cumulative_cost = S::zero();
    let mut cumulative_regret = S::zero();
    let mut projection_rounds = 0u64;
    let mut rounds_to_target = None;
    let mut trace: Vec<RoundRecord> = Vec::new();
    let mut visits: Vec<RoundVisit> = Vec::new();
    let mut profiles: Vec<CostProfile<S>> = Vec::new();
    let mut iterates: Vec<Vec<S>> = Vec::new();

    for k in 1..=cfg.horizon {
        let is_eval = k % cfg.eval_every == 0 || k == cfg.horizon;
        let gamma: S = step_size(k, cfg.step_exponent, cfg.step_scale);

        let row = walker.transition_row(current, &graph);
        let prev = current;
        let next = walker.step(current, &graph, &mut rng);
        let idx = graph
            .neighbor_index(prev, next)
            .expect("walkers only move along edges");
        let p_sel = row[idx];

        // Exact costs refer to the pre-update model, the same w the round's
        // observed cost estimate is computed at.
        let profile = if cfg.exact_cost_metrics && is_eval {
            Some(cost_profile(&model, &w, &partition, k)?)
        } else {
            None
        };

        let step = sgd_step(&model, &w, &partition.node_datasets[next], p_sel, gamma, &mut rng)?;
        w = step.w;
        assert!(
            w.norm() <= radius * S::from_f64_c(1.0 + 1e-9),
            "iterate left the feasible ball at round {k}"
        );
        if step.projected {
            projection_rounds += 1;
        }

        axpy(gamma, &w.values, &mut averaged);
        gamma_sum += gamma;
        cumulative_cost += step.cost_estimate;
        if cfg.log_iterates {
            iterates.push(w.values.clone());
        }

        walker.update(
            &graph,
            &StepFeedback {
                from_node: prev,
                chosen_node: next,
                cost_estimate: step.cost_estimate,
                transition_row_used: row,
            },
        )?;
        current = next;

        let mut cost_exact = None;
        if let Some(profile) = profile {
            let best = graph
                .neighbors(prev)
                .iter()
                .map(|&j| profile.costs[j])
                .fold(S::infinity(), S::min);
            cumulative_regret += profile.costs[next] - best;
            cost_exact = Some(profile.costs[next].to_f64_c());
            visits.push(RoundVisit {
                round: k,
                prev,
                chosen: next,
            });
            profiles.push(profile);
        }

        if is_eval {
            let evaluation = match eval_slice {
                Some(pts) => Some(evaluate(&model, &w, pts)?),
                None => None,
            };
            if let Some(ev) = &evaluation {
                if rounds_to_target.is_none()
                    && ev.accuracy.to_f64_c() >= cfg.target_accuracy
                {
                    rounds_to_target = Some(k);
                }
            }
            trace.push(RoundRecord {
                round: k,
                node: next,
                step_size: gamma.to_f64_c(),
                cost_estimate: step.cost_estimate.to_f64_c(),
                cost_exact,
                loss: evaluation.as_ref().map(|e| e.loss.to_f64_c()),
                accuracy: evaluation.as_ref().map(|e| e.accuracy.to_f64_c()),
                cumulative_cost: cumulative_cost.to_f64_c(),
                cumulative_regret: cfg.exact_cost_metrics.then(|| cumulative_regret.to_f64_c()),
                projected: step.projected,
            });
        }
    }

    let averaged_w = ParamVector {
        values: averaged.iter().map(|&v| v / gamma_sum).collect(),
        feasible_radius: radius,
    };

    let final_eval = match eval_slice {
        Some(pts) => Some(evaluate(&model, &w, pts)?),
        None => None,
    };
    let averaged_accuracy = match eval_slice {
        Some(pts) => Some(evaluate(&model, &averaged_w, pts)?.accuracy.to_f64_c()),
        None => None,
    };

    let oracle = if cfg.exact_cost_metrics {
        let min_series = crate::oracle::sleeping_regret(
            &visits,
            &profiles,
            &graph,
            RegretMode::PerRoundAvailableMin,
        )?;
        let fixed_series =
            crate::oracle::sleeping_regret(&visits, &profiles, &graph, RegretMode::BestFixedNode)?;
        Some(OracleSummary {
            cumulative_regret_available_min: min_series.last().map_or(0.0, |r| r.to_f64_c()),
            cumulative_regret_best_fixed: fixed_series.last().map_or(0.0, |r| r.to_f64_c()),
            optimal_sampler_cumulative_cost: crate::oracle::oracle_cumulative_cost(&profiles)?
                .to_f64_c(),
        })
    } else {
        None
    };

    let csv = trace_csv(&trace);
    let final_accuracy = final_eval.as_ref().map(|e| e.accuracy.to_f64_c());
    let final_loss = final_eval.as_ref().map(|e| e.loss.to_f64_c());
    let hash_input = format!(
        "{csv}|{rounds_to_target:?}|{final_accuracy:?}|{final_loss:?}|{projection_rounds}"
    );
    let summary = RunSummary {
        config: cfg.clone(),
        walker: walker.kind(),
        num_nodes: graph.num_nodes(),
        rounds_to_target,
        final_accuracy,
        final_loss,
        averaged_accuracy,
        cumulative_cost: cumulative_cost.to_f64_c(),
        projection_rounds,
        spectral_gap_initial,
        oracle,
        content_hash: format!("{:016x}", fnv1a64(hash_input.as_bytes())),
        runtime_secs: started.elapsed().as_secs_f64(),
    };

    Ok(RunOutcome {
        final_w: w,
        averaged_w,
        trace,
        visits,
        profiles,
        iterates,
        summary,
    })
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Ten significant digits, scientific notation.
fn fmt_sig10(x: f64) -> String {
    format!("{x:.9e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_sig10).unwrap_or_default()
}

pub const TRACE_HEADER: &str =
    "k,node,gamma,cost_est,cost_exact,loss,accuracy,cum_cost,cum_regret,projected";

/// Renders the trace in its on-disk CSV form (one row per eval round).
pub fn trace_csv(trace: &[RoundRecord]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.round,
            r.node,
            fmt_sig10(r.step_size),
            fmt_sig10(r.cost_estimate),
            fmt_opt(r.cost_exact),
            fmt_opt(r.loss),
            fmt_opt(r.accuracy),
            fmt_sig10(r.cumulative_cost),
            fmt_opt(r.cumulative_regret),
            r.projected,
        ));
    }
    out
}

/// On-disk form of the exact-cost rounds: round-trippable floats so regret
/// can be recomputed bit-for-bit from the file.
pub fn profiles_csv<S: Scalar>(visits: &[RoundVisit], profiles: &[CostProfile<S>]) -> String {
    let n = profiles.first().map_or(0, |p| p.costs.len());
    let mut out = String::from("k,prev,chosen");
    for i in 0..n {
        out.push_str(&format!(",g_{i}"));
    }
    out.push('\n');
    for (visit, profile) in visits.iter().zip(profiles) {
        out.push_str(&format!("{},{},{}", visit.round, visit.prev, visit.chosen));
        for &g in &profile.costs {
            out.push_str(&format!(",{}", g.to_f64_c()));
        }
        out.push('\n');
    }
    out
}

/// Parses a profiles CSV back into visits and cost profiles.
pub fn parse_profiles_csv<S: Scalar>(
    text: &str,
) -> Result<(Vec<RoundVisit>, Vec<CostProfile<S>>), EngineError> {
    let mut visits = Vec::new();
    let mut profiles = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 4 {
            return Err(EngineError::Config(format!(
                "profiles csv line {}: expected k,prev,chosen,g_0,... got {line:?}",
                idx + 1
            )));
        }
        let parse_u = |s: &str, what: &str| -> Result<u64, EngineError> {
            s.parse().map_err(|_| {
                EngineError::Config(format!("profiles csv line {}: bad {what} {s:?}", idx + 1))
            })
        };
        let round = parse_u(fields[0], "round")?;
        let prev = parse_u(fields[1], "prev")? as usize;
        let chosen = parse_u(fields[2], "chosen")? as usize;
        let costs = fields[3..]
            .iter()
            .map(|s| {
                s.parse::<f64>().map(S::from_f64_c).map_err(|_| {
                    EngineError::Config(format!(
                        "profiles csv line {}: bad cost {s:?}",
                        idx + 1
                    ))
                })
            })
            .collect::<Result<Vec<S>, _>>()?;
        visits.push(RoundVisit {
            round,
            prev,
            chosen,
        });
        profiles.push(CostProfile { round, costs });
    }
    Ok((visits, profiles))
}
