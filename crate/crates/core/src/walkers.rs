//! Node-selection strategies for the walk.
//!
//! Four walkers share one interface: a transition row over the current
//! node's neighbors (self-loop included), a sampling step, and a feedback
//! hook. The uniform and weighted walkers are Metropolis-Hastings chains
//! with fixed targets; the exploitation walker follows running averages of
//! observed squared gradient norms; the exp3 walker runs availability-aware
//! multiplicative weights over the per-node cost estimates it observes.
//!
//! RNG draw order is part of the contract: MH walkers consume a proposal
//! draw then an acceptance draw each step (none when the node is isolated);
//! exp3 and exploitation consume exactly one categorical draw per step.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum WalkerError {
    #[error("horizon must be >= 2, got {0}")]
    InvalidHorizon(u64),
    #[error("negative cost estimate {0}")]
    NegativeCost(f64),
    #[error("node {node} has non-positive importance weight {weight}")]
    NonPositiveWeight { node: usize, weight: f64 },
    #[error("node {chosen} is not a neighbor of {from}")]
    NotNeighbor { from: usize, chosen: usize },
    #[error("feedback row has {got} entries, node {from} has {expected} neighbors")]
    RowLengthMismatch {
        from: usize,
        expected: usize,
        got: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkerKind {
    Exp3,
    Uniform,
    Weighted,
    Exploit,
}

impl std::fmt::Display for WalkerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            WalkerKind::Exp3 => "exp3",
            WalkerKind::Uniform => "uniform",
            WalkerKind::Weighted => "weighted",
            WalkerKind::Exploit => "exploit",
        };
        f.write_str(s)
    }
}

/// What one round reports back to an adaptive walker.
#[derive(Debug, Clone)]
pub struct StepFeedback<S> {
    /// Node the transition left from.
    pub from_node: usize,
    /// Node the walk moved to (may equal `from_node`).
    pub chosen_node: usize,
    /// Single-sample cost estimate (1/n) * ||point gradient||^2, >= 0.
    pub cost_estimate: S,
    /// The transition row actually used, aligned with
    /// `graph.neighbors(from_node)`.
    pub transition_row_used: Vec<S>,
}

/// Multiplicative-weights learning rate sqrt(ln N / (N T)).
pub fn learning_rate<S: Scalar>(num_nodes: usize, horizon: u64) -> Result<S, WalkerError> {
    if num_nodes < 2 {
        return Err(WalkerError::InvalidParameter(format!(
            "learning rate needs N >= 2, got {num_nodes}"
        )));
    }
    if horizon < 2 {
        return Err(WalkerError::InvalidHorizon(horizon));
    }
    let n = num_nodes as f64;
    Ok(S::from_f64_c((n.ln() / (n * horizon as f64)).sqrt()))
}

/// Decreasing exploration parameter
/// sqrt((A / k) * ln T) + (A / (3k)) * ln T.
pub fn exploration_param<S: Scalar>(exploration_const: S, k: u64, ln_horizon: S) -> S {
    debug_assert!(k >= 1);
    let kf = S::from_f64_c(k as f64);
    let al = exploration_const * ln_horizon;
    (al / kf).sqrt() + al / (S::from_f64_c(3.0) * kf)
}

/// Exploration constant reproducing the 2^(N+2) schedule.
pub fn paper_exploration_const<S: Scalar>(num_nodes: usize) -> S {
    S::from_f64_c(2.0f64.powi(num_nodes as i32 + 2))
}

/// Default exploration constant 4N; the 2^(N+2) schedule is astronomically
/// conservative beyond a few dozen nodes.
pub fn default_exploration_const<S: Scalar>(num_nodes: usize) -> S {
    S::from_f64_c(4.0 * num_nodes as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exp3Params<S> {
    /// Exploration constant A in the lambda schedule.
    pub exploration_const: S,
    /// Multiplicative-weights learning rate; `None` selects
    /// sqrt(ln N / (N T)).
    pub eta: Option<S>,
    /// Fixed cost normalization bound; `None` selects a running max.
    pub cost_bound: Option<S>,
    /// Average availability only over rounds where the node was a neighbor
    /// of the active node, instead of over all rounds.
    pub neighbor_only_availability: bool,
}

/// Sleeping-bandit multiplicative-weights walker.
///
/// Control weights are kept in log space; transition rows are softmax
/// normalizations of the neighbors' log weights with max subtraction, so
/// long cost histories cannot underflow the weights.
#[derive(Debug, Clone)]
pub struct Exp3Walker<S> {
    log_q: Vec<S>,
    pbar_sum: Vec<S>,
    avail_rounds: Vec<u64>,
    rounds: u64,
    eta: S,
    exploration_const: S,
    ln_horizon: S,
    horizon: u64,
    cost_scale: S,
    cost_bound: Option<S>,
    neighbor_only_availability: bool,
}

impl<S: Scalar> Exp3Walker<S> {
    pub fn new(num_nodes: usize, horizon: u64, params: Exp3Params<S>) -> Result<Self, WalkerError> {
        if horizon < 2 {
            return Err(WalkerError::InvalidHorizon(horizon));
        }
        if num_nodes < 1 {
            return Err(WalkerError::InvalidParameter("need at least one node".into()));
        }
        if params.exploration_const <= S::zero() {
            return Err(WalkerError::InvalidParameter(
                "exploration constant must be positive".into(),
            ));
        }
        let eta = match params.eta {
            Some(e) if e > S::zero() => e,
            Some(e) => {
                return Err(WalkerError::InvalidParameter(format!(
                    "eta must be positive, got {e}"
                )))
            }
            None => learning_rate(num_nodes.max(2), horizon)?,
        };
        Ok(Exp3Walker {
            log_q: vec![S::zero(); num_nodes],
            pbar_sum: vec![S::zero(); num_nodes],
            avail_rounds: vec![0; num_nodes],
            rounds: 0,
            eta,
            exploration_const: params.exploration_const,
            ln_horizon: S::from_f64_c((horizon as f64).ln()),
            horizon,
            cost_scale: S::zero(),
            cost_bound: params.cost_bound,
            neighbor_only_availability: params.neighbor_only_availability,
        })
    }

    pub fn rounds_completed(&self) -> u64 {
        self.rounds
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn eta(&self) -> S {
        self.eta
    }

    pub fn log_control_weights(&self) -> &[S] {
        &self.log_q
    }

    /// Exploration parameter at round k.
    pub fn exploration_param_at(&self, k: u64) -> S {
        exploration_param(self.exploration_const, k, self.ln_horizon)
    }

    /// Empirical availability estimate of `node` after the completed rounds.
    pub fn availability_estimate(&self, node: usize) -> S {
        if self.neighbor_only_availability {
            if self.avail_rounds[node] == 0 {
                return S::zero();
            }
            return self.pbar_sum[node] / S::from_f64_c(self.avail_rounds[node] as f64);
        }
        if self.rounds == 0 {
            return S::zero();
        }
        self.pbar_sum[node] / S::from_f64_c(self.rounds as f64)
    }

    /// Transition probabilities over `graph.neighbors(current)`,
    /// proportional to the control weights of the available nodes.
    pub fn transition_row(&self, current: usize, graph: &Graph) -> Vec<S> {
        let neighbors = graph.neighbors(current);
        let max = neighbors
            .iter()
            .map(|&j| self.log_q[j])
            .fold(S::neg_infinity(), S::max);
        let weights: Vec<S> = neighbors.iter().map(|&j| (self.log_q[j] - max).exp()).collect();
        let total: S = weights.iter().cloned().sum();
        weights.into_iter().map(|w| w / total).collect()
    }

    /// Applies one round of feedback: accumulates the availability sums for
    /// every node in the used row, advances the round counter, and decays
    /// the chosen node's control weight by
    /// eta * c_norm / (availability + lambda).
    pub fn update(&mut self, graph: &Graph, fb: &StepFeedback<S>) -> Result<(), WalkerError> {
        if fb.cost_estimate < S::zero() {
            return Err(WalkerError::NegativeCost(fb.cost_estimate.to_f64_c()));
        }
        let neighbors = graph.neighbors(fb.from_node);
        if fb.transition_row_used.len() != neighbors.len() {
            return Err(WalkerError::RowLengthMismatch {
                from: fb.from_node,
                expected: neighbors.len(),
                got: fb.transition_row_used.len(),
            });
        }
        if !graph.is_neighbor(fb.from_node, fb.chosen_node) {
            return Err(WalkerError::NotNeighbor {
                from: fb.from_node,
                chosen: fb.chosen_node,
            });
        }

        let scale = match self.cost_bound {
            Some(bound) => bound,
            None => {
                if fb.cost_estimate > self.cost_scale {
                    self.cost_scale = fb.cost_estimate;
                }
                self.cost_scale
            }
        };
        let cost_norm = if scale > S::zero() {
            (fb.cost_estimate / scale).min(S::one())
        } else {
            S::zero()
        };

        self.rounds += 1;
        for (&node, &p) in neighbors.iter().zip(&fb.transition_row_used) {
            self.pbar_sum[node] += p;
            self.avail_rounds[node] += 1;
        }

        let pbar = self.availability_estimate(fb.chosen_node);
        debug_assert!(pbar >= S::zero() && pbar <= S::one() + S::from_f64_c(1e-9));
        let lambda = self.exploration_param_at(self.rounds);
        self.log_q[fb.chosen_node] -= self.eta * cost_norm / (pbar + lambda);
        Ok(())
    }
}

/// Uniform-target Metropolis-Hastings walker: propose a non-self neighbor
/// uniformly, accept with min(1, deg(i)/deg(j)), stay put on rejection.
/// Degrees exclude self-loops.
#[derive(Debug, Clone, Default)]
pub struct UniformMhWalker;

/// Weighted-target MH walker with stationary distribution proportional to
/// the per-node weights (gradient-Lipschitz constants for the static
/// baseline): acceptance min(1, (L_j/L_i) * (deg(i)/deg(j))).
#[derive(Debug, Clone)]
pub struct WeightedMhWalker<S> {
    weights: Vec<S>,
}

impl<S: Scalar> WeightedMhWalker<S> {
    pub fn new(weights: Vec<S>) -> Result<Self, WalkerError> {
        for (node, &w) in weights.iter().enumerate() {
            if !(w > S::zero()) {
                return Err(WalkerError::NonPositiveWeight {
                    node,
                    weight: w.to_f64_c(),
                });
            }
        }
        Ok(WeightedMhWalker { weights })
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }
}

fn mh_acceptance<S: Scalar>(
    graph: &Graph,
    from: usize,
    to: usize,
    weights: Option<&[S]>,
) -> S {
    let ratio_deg =
        S::from_f64_c(graph.degree_nonself(from) as f64 / graph.degree_nonself(to) as f64);
    let ratio = match weights {
        Some(w) => (w[to] / w[from]) * ratio_deg,
        None => ratio_deg,
    };
    ratio.min(S::one())
}

fn mh_row<S: Scalar>(graph: &Graph, current: usize, weights: Option<&[S]>) -> Vec<S> {
    let neighbors = graph.neighbors(current);
    let d = graph.degree_nonself(current);
    if d == 0 {
        return vec![S::one()];
    }
    let proposal = S::one() / S::from_f64_c(d as f64);
    let mut row = vec![S::zero(); neighbors.len()];
    let mut self_mass = S::one();
    let mut self_idx = 0;
    for (idx, &j) in neighbors.iter().enumerate() {
        if j == current {
            self_idx = idx;
            continue;
        }
        let p = proposal * mh_acceptance(graph, current, j, weights);
        row[idx] = p;
        self_mass -= p;
    }
    // Rejection mass lands on the self-loop.
    row[self_idx] = self_mass.max(S::zero());
    row
}

fn mh_step<S: Scalar, R: Rng>(
    graph: &Graph,
    current: usize,
    weights: Option<&[S]>,
    rng: &mut R,
) -> usize {
    let d = graph.degree_nonself(current);
    if d == 0 {
        return current;
    }
    // Proposal draw, then acceptance draw.
    let mut pick = rng.random_range(0..d);
    let mut candidate = current;
    for &j in graph.neighbors(current) {
        if j == current {
            continue;
        }
        if pick == 0 {
            candidate = j;
            break;
        }
        pick -= 1;
    }
    let accept = mh_acceptance(graph, current, candidate, weights);
    let u: f64 = rng.random();
    if S::from_f64_c(u) < accept {
        candidate
    } else {
        current
    }
}

/// Pure-exploitation walker: transition probability proportional to each
/// neighbor's running average of observed cost estimates. Unobserved nodes
/// take the current global maximum average (1.0 before any observation).
#[derive(Debug, Clone)]
pub struct ExploitWalker<S> {
    cost_sum: Vec<S>,
    visit_count: Vec<u64>,
}

impl<S: Scalar> ExploitWalker<S> {
    pub fn new(num_nodes: usize) -> Self {
        ExploitWalker {
            cost_sum: vec![S::zero(); num_nodes],
            visit_count: vec![0; num_nodes],
        }
    }

    fn average(&self, node: usize) -> Option<S> {
        if self.visit_count[node] == 0 {
            return None;
        }
        Some(self.cost_sum[node] / S::from_f64_c(self.visit_count[node] as f64))
    }

    fn optimistic_default(&self) -> S {
        let mut max: Option<S> = None;
        for node in 0..self.cost_sum.len() {
            if let Some(avg) = self.average(node) {
                max = Some(max.map_or(avg, |m| m.max(avg)));
            }
        }
        max.unwrap_or_else(S::one)
    }

    pub fn transition_row(&self, current: usize, graph: &Graph) -> Vec<S> {
        let neighbors = graph.neighbors(current);
        let default = self.optimistic_default();
        let importance: Vec<S> = neighbors
            .iter()
            .map(|&j| self.average(j).unwrap_or(default))
            .collect();
        let total: S = importance.iter().cloned().sum();
        if total <= S::zero() {
            let u = S::one() / S::from_f64_c(neighbors.len() as f64);
            return vec![u; neighbors.len()];
        }
        importance.into_iter().map(|v| v / total).collect()
    }

    pub fn update(&mut self, fb: &StepFeedback<S>) -> Result<(), WalkerError> {
        if fb.cost_estimate < S::zero() {
            return Err(WalkerError::NegativeCost(fb.cost_estimate.to_f64_c()));
        }
        self.cost_sum[fb.chosen_node] += fb.cost_estimate;
        self.visit_count[fb.chosen_node] += 1;
        Ok(())
    }
}

/// One categorical draw by cumulative inversion of a probability row.
pub fn sample_categorical<S: Scalar, R: Rng>(row: &[S], rng: &mut R) -> usize {
    let u = S::from_f64_c(rng.random::<f64>());
    let mut acc = S::zero();
    for (idx, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return idx;
        }
    }
    row.len() - 1
}

/// Uniform step over the walk's node-selection strategies.
#[derive(Debug, Clone)]
pub enum AnyWalker<S> {
    Exp3(Exp3Walker<S>),
    Uniform(UniformMhWalker),
    Weighted(WeightedMhWalker<S>),
    Exploit(ExploitWalker<S>),
}

impl<S: Scalar> AnyWalker<S> {
    pub fn kind(&self) -> WalkerKind {
        match self {
            AnyWalker::Exp3(_) => WalkerKind::Exp3,
            AnyWalker::Uniform(_) => WalkerKind::Uniform,
            AnyWalker::Weighted(_) => WalkerKind::Weighted,
            AnyWalker::Exploit(_) => WalkerKind::Exploit,
        }
    }

    /// Exact one-step transition probabilities over
    /// `graph.neighbors(current)`, rejection mass included for MH walkers.
    pub fn transition_row(&self, current: usize, graph: &Graph) -> Vec<S> {
        match self {
            AnyWalker::Exp3(w) => w.transition_row(current, graph),
            AnyWalker::Uniform(_) => mh_row::<S>(graph, current, None),
            AnyWalker::Weighted(w) => mh_row(graph, current, Some(&w.weights)),
            AnyWalker::Exploit(w) => w.transition_row(current, graph),
        }
    }

    /// Probability the walker assigned to moving `from -> chosen` this round.
    pub fn selection_probability(
        &self,
        from: usize,
        chosen: usize,
        graph: &Graph,
    ) -> Result<S, WalkerError> {
        let idx = graph
            .neighbor_index(from, chosen)
            .ok_or(WalkerError::NotNeighbor { from, chosen })?;
        Ok(self.transition_row(from, graph)[idx])
    }

    /// Samples the next node, consuming this walker's documented RNG draws.
    pub fn step<R: Rng>(&self, current: usize, graph: &Graph, rng: &mut R) -> usize {
        match self {
            AnyWalker::Uniform(_) => mh_step::<S, R>(graph, current, None, rng),
            AnyWalker::Weighted(w) => mh_step(graph, current, Some(&w.weights), rng),
            AnyWalker::Exp3(w) => {
                let row = w.transition_row(current, graph);
                graph.neighbors(current)[sample_categorical(&row, rng)]
            }
            AnyWalker::Exploit(w) => {
                let row = w.transition_row(current, graph);
                graph.neighbors(current)[sample_categorical(&row, rng)]
            }
        }
    }

    /// Per-round feedback; a no-op for the non-adaptive MH walkers.
    pub fn update(&mut self, graph: &Graph, fb: &StepFeedback<S>) -> Result<(), WalkerError> {
        match self {
            AnyWalker::Exp3(w) => w.update(graph, fb),
            AnyWalker::Exploit(w) => w.update(fb),
            AnyWalker::Uniform(_) | AnyWalker::Weighted(_) => Ok(()),
        }
    }

    /// Dense one-step transition matrix (zeros off the neighborhoods).
    pub fn transition_matrix(&self, graph: &Graph) -> Vec<Vec<S>> {
        let n = graph.num_nodes();
        let mut matrix = vec![vec![S::zero(); n]; n];
        for (i, dense_row) in matrix.iter_mut().enumerate() {
            let row = self.transition_row(i, graph);
            for (&j, &p) in graph.neighbors(i).iter().zip(&row) {
                dense_row[j] = p;
            }
        }
        matrix
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_complete, build_cycle, build_erdos_renyi};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exp3_params() -> Exp3Params<f64> {
        Exp3Params {
            exploration_const: default_exploration_const(8),
            eta: None,
            cost_bound: None,
            neighbor_only_availability: false,
        }
    }

    #[test]
    fn learning_rate_matches_formula() {
        let eta: f64 = learning_rate(10, 1000).unwrap();
        let expect = (10.0f64.ln() / (10.0 * 1000.0)).sqrt();
        assert_abs_diff_eq!(eta, expect, epsilon = 1e-15);
        assert_abs_diff_eq!(eta, 0.0151742, epsilon = 1e-7);
    }

    #[test]
    fn learning_rate_decreases_in_horizon() {
        let a: f64 = learning_rate(10, 100).unwrap();
        let b: f64 = learning_rate(10, 200).unwrap();
        assert!(b < a);
    }

    #[test]
    fn exploration_param_plug_in() {
        // ln T = 1, A = 16: sqrt(16) + 16/3.
        let lambda: f64 = exploration_param(16.0, 1, 1.0);
        assert_abs_diff_eq!(lambda, 4.0 + 16.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn exploration_param_paper_constant() {
        let a: f64 = paper_exploration_const(10);
        assert_eq!(a, 4096.0);
        let ln_t = 1000.0f64.ln();
        let lambda: f64 = exploration_param(a, 1, ln_t);
        let expect = (4096.0 * ln_t).sqrt() + 4096.0 / 3.0 * ln_t;
        assert_abs_diff_eq!(lambda, expect, epsilon = 1e-9);
        assert_abs_diff_eq!((4096.0 * ln_t).sqrt(), 168.2, epsilon = 0.1);
    }

    #[test]
    fn exploration_param_strictly_decreasing() {
        for k in 1..200u64 {
            let a: f64 = exploration_param(32.0, k, 7.0);
            let b: f64 = exploration_param(32.0, 2 * k, 7.0);
            assert!(b < a, "lambda not decreasing at k={k}");
        }
    }

    #[test]
    fn exp3_rejects_short_horizon() {
        assert!(matches!(
            Exp3Walker::<f64>::new(4, 1, exp3_params()),
            Err(WalkerError::InvalidHorizon(1))
        ));
    }

    #[test]
    fn exp3_initial_row_is_uniform() {
        let g = build_cycle(5).unwrap();
        let w = Exp3Walker::<f64>::new(5, 100, exp3_params()).unwrap();
        let row = w.transition_row(0, &g);
        assert_eq!(row.len(), 3);
        for p in row {
            assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn exp3_row_normalizes_unequal_weights() {
        let g = build_complete(3).unwrap();
        let mut w = Exp3Walker::<f64>::new(3, 100, exp3_params()).unwrap();
        w.log_q = vec![2.0f64.ln(), 0.0, 0.0];
        let row = w.transition_row(0, &g);
        assert_abs_diff_eq!(row[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(row[1], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(row[2], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn exp3_assigns_zero_off_neighborhood() {
        let g = build_cycle(6).unwrap();
        let w = Exp3Walker::<f64>::new(6, 100, exp3_params()).unwrap();
        let matrix = AnyWalker::Exp3(w).transition_matrix(&g);
        assert_eq!(matrix[0][3], 0.0);
        assert!(matrix[0][1] > 0.0);
    }

    #[test]
    fn exp3_update_decays_only_the_chosen_weight() {
        let g = build_complete(4).unwrap();
        let mut w = Exp3Walker::<f64>::new(4, 50, exp3_params()).unwrap();
        let row = w.transition_row(1, &g);
        let fb = StepFeedback {
            from_node: 1,
            chosen_node: 2,
            cost_estimate: 3.0,
            transition_row_used: row.clone(),
        };
        w.update(&g, &fb).unwrap();

        // First observation sets the running scale, so c_norm = 1.
        let pbar = w.availability_estimate(2);
        assert_abs_diff_eq!(pbar, 0.25, epsilon = 1e-15);
        let lambda = w.exploration_param_at(1);
        let expect = -w.eta() * 1.0 / (pbar + lambda);
        assert_abs_diff_eq!(w.log_control_weights()[2], expect, epsilon = 1e-15);
        assert_eq!(w.log_control_weights()[0], 0.0);
        assert_eq!(w.log_control_weights()[1], 0.0);
        assert_eq!(w.log_control_weights()[3], 0.0);
    }

    #[test]
    fn exp3_zero_cost_leaves_weights_unchanged() {
        let g = build_complete(3).unwrap();
        let mut w = Exp3Walker::<f64>::new(3, 50, exp3_params()).unwrap();
        let row = w.transition_row(0, &g);
        let fb = StepFeedback {
            from_node: 0,
            chosen_node: 1,
            cost_estimate: 0.0,
            transition_row_used: row,
        };
        w.update(&g, &fb).unwrap();
        assert!(w.log_control_weights().iter().all(|&lq| lq == 0.0));
        assert_eq!(w.rounds_completed(), 1);
    }

    #[test]
    fn exp3_rejects_negative_cost() {
        let g = build_complete(3).unwrap();
        let mut w = Exp3Walker::<f64>::new(3, 50, exp3_params()).unwrap();
        let row = w.transition_row(0, &g);
        let fb = StepFeedback {
            from_node: 0,
            chosen_node: 1,
            cost_estimate: -1.0,
            transition_row_used: row,
        };
        assert!(matches!(w.update(&g, &fb), Err(WalkerError::NegativeCost(_))));
    }

    #[test]
    fn exp3_symmetric_histories_stay_symmetric() {
        // Two walkers fed mirrored histories (node 1 in one, node 2 in the
        // other, same rounds and costs) keep mirrored control weights.
        let g = build_complete(3).unwrap();
        let mut wa = Exp3Walker::<f64>::new(3, 100, exp3_params()).unwrap();
        let mut wb = wa.clone();
        for k in 0..20 {
            let cost = 0.3 + 0.1 * (k % 4) as f64;
            let row_a = wa.transition_row(0, &g);
            wa.update(
                &g,
                &StepFeedback {
                    from_node: 0,
                    chosen_node: 1,
                    cost_estimate: cost,
                    transition_row_used: row_a,
                },
            )
            .unwrap();
            let row_b = wb.transition_row(0, &g);
            wb.update(
                &g,
                &StepFeedback {
                    from_node: 0,
                    chosen_node: 2,
                    cost_estimate: cost,
                    transition_row_used: row_b,
                },
            )
            .unwrap();
        }
        assert_abs_diff_eq!(
            wa.log_control_weights()[1],
            wb.log_control_weights()[2],
            epsilon = 1e-15
        );
        assert_eq!(wa.log_control_weights()[2], 0.0);
        assert_eq!(wb.log_control_weights()[1], 0.0);
    }

    #[test]
    fn exp3_cost_scaling_preserves_weight_ordering() {
        let g = build_complete(4).unwrap();
        let costs = [0.9, 0.1, 0.5, 0.3, 0.9, 0.2, 0.6, 0.4];
        let chosen = [0usize, 1, 2, 3, 1, 2, 0, 3];
        let run = |scale: f64| {
            let mut w = Exp3Walker::<f64>::new(4, 100, exp3_params()).unwrap();
            for (&c, &node) in costs.iter().zip(&chosen) {
                let row = w.transition_row(0, &g);
                let fb = StepFeedback {
                    from_node: 0,
                    chosen_node: node,
                    cost_estimate: c * scale,
                    transition_row_used: row,
                };
                w.update(&g, &fb).unwrap();
            }
            w.log_control_weights().to_vec()
        };
        let base = run(1.0);
        let scaled = run(4.0);
        let order = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
            idx
        };
        assert_eq!(order(&base), order(&scaled));
    }

    #[test]
    fn exp3_availability_stays_in_unit_interval() {
        let g = build_cycle(6).unwrap();
        let mut w = Exp3Walker::<f64>::new(6, 200, exp3_params()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut current = 0;
        for _ in 0..100 {
            let row = w.transition_row(current, &g);
            let next = g.neighbors(current)[sample_categorical(&row, &mut rng)];
            let fb = StepFeedback {
                from_node: current,
                chosen_node: next,
                cost_estimate: rng.random::<f64>(),
                transition_row_used: row,
            };
            w.update(&g, &fb).unwrap();
            current = next;
        }
        let k = w.rounds_completed();
        for node in 0..6 {
            let pbar = w.availability_estimate(node);
            assert!((0.0..=1.0).contains(&pbar), "node {node} pbar {pbar} k {k}");
        }
    }

    #[test]
    fn mh_uniform_acceptance_ratio() {
        // Star-ish graph: node 0 has 4 non-self neighbors, node 1 has 8.
        // Build it directly: 0 connected to 1..=4, 1 connected to 0 and 2..=8.
        let mut edges = vec![(0, 1), (0, 2), (0, 3), (0, 4)];
        edges.extend((2..=8).map(|j| (1, j)));
        let g = Graph::from_edges(9, &edges, crate::graph::GeneratorTag::Custom, 0).unwrap();
        assert_eq!(g.degree_nonself(0), 4);
        assert_eq!(g.degree_nonself(1), 8);
        let a: f64 = mh_acceptance::<f64>(&g, 0, 1, None);
        assert_abs_diff_eq!(a, 0.5, epsilon = 1e-15);
        // Equal degrees always accept.
        let a2: f64 = mh_acceptance::<f64>(&g, 2, 3, None);
        assert_abs_diff_eq!(a2, 1.0, epsilon = 1e-15);
    }

    use crate::graph::Graph;

    #[test]
    fn mh_row_self_mass_is_rejection_mass() {
        let g = build_erdos_renyi(6, 0.6, 11).unwrap();
        let walker: AnyWalker<f64> = AnyWalker::Uniform(UniformMhWalker);
        for i in 0..6 {
            let row = walker.transition_row(i, &g);
            let sum: f64 = row.iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
            let self_idx = g.neighbor_index(i, i).unwrap();
            let d = g.degree_nonself(i) as f64;
            let expected_self: f64 = 1.0
                - g.neighbors(i)
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (1.0 / d) * mh_acceptance::<f64>(&g, i, j, None))
                    .sum::<f64>();
            assert_abs_diff_eq!(row[self_idx], expected_self, epsilon = 1e-12);
        }
    }

    #[test]
    fn weighted_mh_reduces_to_uniform_for_equal_weights() {
        let g = build_erdos_renyi(8, 0.5, 3).unwrap();
        let uniform: AnyWalker<f64> = AnyWalker::Uniform(UniformMhWalker);
        let weighted: AnyWalker<f64> =
            AnyWalker::Weighted(WeightedMhWalker::new(vec![2.5; 8]).unwrap());
        for i in 0..8 {
            let a = uniform.transition_row(i, &g);
            let b = weighted.transition_row(i, &g);
            for (x, y) in a.iter().zip(&b) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn weighted_mh_accepts_uphill_moves() {
        let g = build_complete(3).unwrap();
        let w = WeightedMhWalker::new(vec![1.0f64, 2.0, 1.0]).unwrap();
        // L_j = 2 L_i with equal degrees: always accept.
        let a = mh_acceptance(&g, 0, 1, Some(w.weights()));
        assert_abs_diff_eq!(a, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn weighted_mh_rejects_non_positive_weights() {
        assert!(matches!(
            WeightedMhWalker::<f64>::new(vec![1.0, 0.0]),
            Err(WalkerError::NonPositiveWeight { node: 1, .. })
        ));
    }

    #[test]
    fn mh_isolated_node_stays_put() {
        // Single node: only the self-loop.
        let g = Graph::from_edges(1, &[], crate::graph::GeneratorTag::Custom, 0).unwrap();
        let walker: AnyWalker<f64> = AnyWalker::Uniform(UniformMhWalker);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(walker.step(0, &g, &mut rng), 0);
        assert_eq!(walker.transition_row(0, &g), vec![1.0]);
    }

    /// Exact stationary distribution by power iteration on the dense chain.
    fn stationary(matrix: &[Vec<f64>]) -> Vec<f64> {
        let n = matrix.len();
        let mut pi = vec![1.0 / n as f64; n];
        for _ in 0..20_000 {
            let mut next = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    next[j] += pi[i] * matrix[i][j];
                }
            }
            pi = next;
        }
        pi
    }

    #[test]
    fn mh_uniform_stationary_is_uniform_on_er20() {
        let g = build_erdos_renyi(20, 0.3, 5).unwrap();
        let walker: AnyWalker<f64> = AnyWalker::Uniform(UniformMhWalker);
        let pi = stationary(&walker.transition_matrix(&g));
        for (i, p) in pi.iter().enumerate() {
            assert_abs_diff_eq!(*p, 0.05, epsilon = 1e-9);
            let _ = i;
        }
    }

    #[test]
    fn mh_weighted_stationary_proportional_to_weights() {
        let g = build_erdos_renyi(10, 0.5, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let weights: Vec<f64> = (0..10).map(|_| rng.random_range(0.5..2.0)).collect();
        let total: f64 = weights.iter().sum();
        let walker: AnyWalker<f64> =
            AnyWalker::Weighted(WeightedMhWalker::new(weights.clone()).unwrap());
        let pi = stationary(&walker.transition_matrix(&g));
        for (p, w) in pi.iter().zip(&weights) {
            assert_abs_diff_eq!(*p, w / total, epsilon = 1e-9);
        }
    }

    #[test]
    fn exploit_unvisited_neighbors_are_uniform() {
        let g = build_complete(4).unwrap();
        let w: ExploitWalker<f64> = ExploitWalker::new(4);
        let row = w.transition_row(0, &g);
        for p in row {
            assert_abs_diff_eq!(p, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn exploit_row_proportional_to_averages() {
        let g = build_complete(2).unwrap();
        let mut w: ExploitWalker<f64> = ExploitWalker::new(2);
        let feed = |w: &mut ExploitWalker<f64>, node: usize, cost: f64| {
            w.update(&StepFeedback {
                from_node: 0,
                chosen_node: node,
                cost_estimate: cost,
                transition_row_used: vec![0.5, 0.5],
            })
            .unwrap();
        };
        feed(&mut w, 0, 3.0);
        feed(&mut w, 1, 1.0);
        let row = w.transition_row(0, &g);
        assert_abs_diff_eq!(row[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(row[1], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn exploit_rows_renormalize_after_observations() {
        let g = build_erdos_renyi(7, 0.5, 8).unwrap();
        let mut w: ExploitWalker<f64> = ExploitWalker::new(7);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut current = 0usize;
        for _ in 0..50 {
            let row = w.transition_row(current, &g);
            let sum: f64 = row.iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
            let next = g.neighbors(current)[sample_categorical(&row, &mut rng)];
            w.update(&StepFeedback {
                from_node: current,
                chosen_node: next,
                cost_estimate: rng.random::<f64>() * 2.0,
                transition_row_used: row,
            })
            .unwrap();
            current = next;
        }
    }

    proptest! {
        /// Any walker's transition row is a probability vector supported on
        /// the neighborhood.
        #[test]
        fn transition_rows_are_probability_vectors(
            seed in 0u64..50,
            walker_pick in 0usize..4,
            current in 0usize..12,
        ) {
            let g = build_erdos_renyi(12, 0.3, seed).unwrap();
            let walker: AnyWalker<f64> = match walker_pick {
                0 => AnyWalker::Exp3(Exp3Walker::new(12, 100, Exp3Params {
                    exploration_const: default_exploration_const(12),
                    eta: None,
                    cost_bound: None,
                    neighbor_only_availability: false,
                }).unwrap()),
                1 => AnyWalker::Uniform(UniformMhWalker),
                2 => AnyWalker::Weighted(WeightedMhWalker::new(
                    (0..12).map(|i| 0.5 + i as f64 * 0.3).collect()).unwrap()),
                _ => AnyWalker::Exploit(ExploitWalker::new(12)),
            };
            let row = walker.transition_row(current, &g);
            prop_assert_eq!(row.len(), g.neighbors(current).len());
            let sum: f64 = row.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
            prop_assert!(row.iter().all(|&p| p >= 0.0));
            let matrix = walker.transition_matrix(&g);
            for (j, &p) in matrix[current].iter().enumerate() {
                if !g.is_neighbor(current, j) {
                    prop_assert_eq!(p, 0.0);
                }
            }
        }
    }
}
