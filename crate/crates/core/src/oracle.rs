//! Ground-truth computations: exact per-node costs, the optimal sampling
//! distribution, oracle cumulative costs, and sleeping regret.

use serde::{Deserialize, Serialize};

use crate::data::{NodeDataset, Partition};
use crate::graph::Graph;
use crate::model::{point_grad, LossModel, ModelError, ParamVector};
use crate::scalar::{norm_sq, Scalar};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("negative cost {cost} at node {node}")]
    NegativeCost { node: usize, cost: f64 },
    #[error("profile for round {round} is missing (have {available} profiles)")]
    MissingProfile { round: u64, available: usize },
    #[error("profile at round {round} has {got} nodes, expected {expected}")]
    ProfileSizeMismatch {
        round: u64,
        expected: usize,
        got: usize,
    },
    #[error("empty cost profile")]
    EmptyProfile,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Exact per-node costs at one model snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct CostProfile<S> {
    pub round: u64,
    pub costs: Vec<S>,
}

/// Which benchmark the regret is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretMode {
    /// Per-round minimum over the available (neighbor) set; an optimistic
    /// lower bound on any policy's cost.
    PerRoundAvailableMin,
    /// Single node minimizing its summed cost over the rounds where it was
    /// available; on rounds it is asleep the benchmark incurs the walker's
    /// own cost.
    BestFixedNode,
}

/// One round of the walk as the oracle sees it: the availability set is
/// `graph.neighbors(prev)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundVisit {
    pub round: u64,
    pub prev: usize,
    pub chosen: usize,
}

/// Exact node cost: sum over the n local points of (1/n^2) ||point grad||^2.
pub fn exact_node_cost<S: Scalar>(
    model: &LossModel,
    w: &ParamVector<S>,
    ds: &NodeDataset<S>,
) -> Result<S, OracleError> {
    let n = ds.points.len();
    if n == 0 {
        return Err(ModelError::EmptyDataset.into());
    }
    let inv_n_sq = S::one() / S::from_f64_c((n * n) as f64);
    let mut total = S::zero();
    for pt in &ds.points {
        total += inv_n_sq * norm_sq(&point_grad(model, w, pt)?);
    }
    Ok(total)
}

/// Exact costs for every node of a partition at one model snapshot.
pub fn cost_profile<S: Scalar>(
    model: &LossModel,
    w: &ParamVector<S>,
    partition: &Partition<S>,
    round: u64,
) -> Result<CostProfile<S>, OracleError> {
    let costs = partition
        .node_datasets
        .iter()
        .map(|ds| exact_node_cost(model, w, ds))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CostProfile { round, costs })
}

/// Sampling distribution minimizing sum_i g_i / p_i over the simplex:
/// p_i proportional to sqrt(g_i). Zero-cost nodes get probability zero
/// unless every cost is zero, in which case the distribution is uniform.
pub fn optimal_sampling<S: Scalar>(costs: &[S]) -> Result<Vec<S>, OracleError> {
    if costs.is_empty() {
        return Err(OracleError::EmptyProfile);
    }
    for (node, &g) in costs.iter().enumerate() {
        if g < S::zero() {
            return Err(OracleError::NegativeCost {
                node,
                cost: g.to_f64_c(),
            });
        }
    }
    let roots: Vec<S> = costs.iter().map(|&g| g.sqrt()).collect();
    let total: S = roots.iter().cloned().sum();
    if total <= S::zero() {
        let u = S::one() / S::from_f64_c(costs.len() as f64);
        return Ok(vec![u; costs.len()]);
    }
    Ok(roots.into_iter().map(|r| r / total).collect())
}

/// The variance objective sum_i g_i / p_i that the optimal sampler
/// minimizes; zero-probability entries only count when their cost is
/// positive (infinite objective).
pub fn sampling_objective<S: Scalar>(costs: &[S], probs: &[S]) -> S {
    debug_assert_eq!(costs.len(), probs.len());
    let mut total = S::zero();
    for (&g, &p) in costs.iter().zip(probs) {
        if g > S::zero() {
            if p <= S::zero() {
                return S::infinity();
            }
            total += g / p;
        }
    }
    total
}

/// Cumulative expected cost of re-deriving the optimal sampler each round:
/// sum_k sum_i p*_k(i) g_i^(k). This benchmark ignores the graph
/// constraint.
pub fn oracle_cumulative_cost<S: Scalar>(profiles: &[CostProfile<S>]) -> Result<S, OracleError> {
    let mut total = S::zero();
    for profile in profiles {
        let p_star = optimal_sampling(&profile.costs)?;
        total += p_star
            .iter()
            .zip(&profile.costs)
            .map(|(&p, &g)| p * g)
            .sum::<S>();
    }
    Ok(total)
}

/// Cumulative regret series R(k) over the rounds covered by `profiles`,
/// against the chosen benchmark. `visits` and `profiles` must align
/// one-to-one in round order.
pub fn sleeping_regret<S: Scalar>(
    visits: &[RoundVisit],
    profiles: &[CostProfile<S>],
    graph: &Graph,
    mode: RegretMode,
) -> Result<Vec<S>, OracleError> {
    let n = graph.num_nodes();
    for (visit, profile) in visits.iter().zip(profiles) {
        if profile.round != visit.round {
            return Err(OracleError::MissingProfile {
                round: visit.round,
                available: profiles.len(),
            });
        }
        if profile.costs.len() != n {
            return Err(OracleError::ProfileSizeMismatch {
                round: profile.round,
                expected: n,
                got: profile.costs.len(),
            });
        }
    }
    if visits.len() > profiles.len() {
        return Err(OracleError::MissingProfile {
            round: visits[profiles.len()].round,
            available: profiles.len(),
        });
    }

    match mode {
        RegretMode::PerRoundAvailableMin => {
            let mut series = Vec::with_capacity(visits.len());
            let mut cum = S::zero();
            for (visit, profile) in visits.iter().zip(profiles) {
                let best = graph
                    .neighbors(visit.prev)
                    .iter()
                    .map(|&j| profile.costs[j])
                    .fold(S::infinity(), S::min);
                cum += profile.costs[visit.chosen] - best;
                series.push(cum);
            }
            Ok(series)
        }
        RegretMode::BestFixedNode => {
            // Benchmark cost of a fixed node: its own cost when available,
            // the walker's realized cost otherwise.
            let mut totals = vec![S::zero(); n];
            for (visit, profile) in visits.iter().zip(profiles) {
                let own = profile.costs[visit.chosen];
                for (j, total) in totals.iter_mut().enumerate() {
                    *total += if graph.is_neighbor(visit.prev, j) {
                        profile.costs[j]
                    } else {
                        own
                    };
                }
            }
            let best_node = (0..n)
                .min_by(|&a, &b| totals[a].partial_cmp(&totals[b]).expect("finite costs"))
                .expect("at least one node");
            let mut series = Vec::with_capacity(visits.len());
            let mut cum = S::zero();
            for (visit, profile) in visits.iter().zip(profiles) {
                let own = profile.costs[visit.chosen];
                let bench = if graph.is_neighbor(visit.prev, best_node) {
                    profile.costs[best_node]
                } else {
                    own
                };
                cum += own - bench;
                series.push(cum);
            }
            Ok(series)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabeledPoint;
    use crate::graph::{build_complete, Graph};
    use crate::model::LossKind;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn binary_model(d: usize) -> LossModel {
        LossModel::new(LossKind::BinaryLogistic, d, 2).unwrap()
    }

    #[test]
    fn exact_cost_zero_gradients() {
        let m = binary_model(2);
        let w = ParamVector::zeros(2, 1.0);
        let ds = NodeDataset {
            node_id: 0,
            points: vec![LabeledPoint {
                features: vec![0.0, 0.0],
                label: 1,
            }],
        };
        assert_eq!(exact_node_cost(&m, &w, &ds).unwrap(), 0.0);
    }

    #[test]
    fn exact_cost_single_point() {
        // At w = 0 the binary gradient is -x/2, so ||x|| = 6 gives cost 9.
        let m = binary_model(2);
        let w = ParamVector::zeros(2, 1.0);
        let ds = NodeDataset {
            node_id: 0,
            points: vec![LabeledPoint {
                features: vec![6.0, 0.0],
                label: 1,
            }],
        };
        assert_abs_diff_eq!(exact_node_cost(&m, &w, &ds).unwrap(), 9.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_cost_is_mean_of_single_sample_estimates() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = binary_model(3);
        let w = ParamVector {
            values: vec![0.3, -0.2, 0.5],
            feasible_radius: 10.0,
        };
        let n = 10;
        let points: Vec<LabeledPoint<f64>> = (0..n)
            .map(|_| LabeledPoint {
                features: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                label: rng.random_range(0..2),
            })
            .collect();
        let ds = NodeDataset {
            node_id: 0,
            points: points.clone(),
        };
        let g = exact_node_cost(&m, &w, &ds).unwrap();
        // The single-sample estimator is (1/n) ||point grad||^2; its uniform
        // average over the n points must equal g exactly.
        let mean_estimate: f64 = points
            .iter()
            .map(|pt| norm_sq(&point_grad(&m, &w, pt).unwrap()) / n as f64)
            .sum::<f64>()
            / n as f64;
        assert_abs_diff_eq!(g, mean_estimate, epsilon = 1e-15);
    }

    #[test]
    fn optimal_sampling_sqrt_ratio() {
        let p = optimal_sampling(&[1.0f64, 4.0]).unwrap();
        assert_abs_diff_eq!(p[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn optimal_sampling_equal_costs_is_uniform() {
        let p = optimal_sampling(&[2.5f64; 5]).unwrap();
        for pi in p {
            assert_abs_diff_eq!(pi, 0.2, epsilon = 1e-15);
        }
    }

    #[test]
    fn optimal_sampling_all_zero_falls_back_to_uniform() {
        let p = optimal_sampling(&[0.0f64; 4]).unwrap();
        for pi in p {
            assert_abs_diff_eq!(pi, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn optimal_sampling_zero_cost_nodes_get_zero() {
        let p = optimal_sampling(&[0.0f64, 9.0]).unwrap();
        assert_eq!(p[0], 0.0);
        assert_abs_diff_eq!(p[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn optimal_sampling_rejects_negative() {
        assert!(matches!(
            optimal_sampling(&[1.0f64, -0.1]),
            Err(OracleError::NegativeCost { node: 1, .. })
        ));
    }

    #[test]
    fn optimal_sampling_sums_to_one_and_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let g: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..10.0)).collect();
            let p = optimal_sampling(&g).unwrap();
            let sum: f64 = p.iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
            let scaled: Vec<f64> = g.iter().map(|x| x * 3.7).collect();
            let q = optimal_sampling(&scaled).unwrap();
            for (a, b) in p.iter().zip(&q) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cumulative_cost_single_round_plug_in() {
        let profiles = vec![CostProfile {
            round: 1,
            costs: vec![1.0f64, 4.0],
        }];
        // p* = (1/3, 2/3): expected cost 1/3 + 8/3 = 3.
        assert_abs_diff_eq!(oracle_cumulative_cost(&profiles).unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn cumulative_cost_zero_costs() {
        let profiles = vec![
            CostProfile {
                round: 1,
                costs: vec![0.0f64; 3],
            };
            4
        ];
        assert_eq!(oracle_cumulative_cost(&profiles).unwrap(), 0.0);
    }

    #[test]
    fn optimal_sampler_beats_uniform_on_the_variance_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let costs: Vec<f64> = (0..7).map(|_| rng.random_range(0.01..5.0)).collect();
            let p_star = optimal_sampling(&costs).unwrap();
            let uniform = vec![1.0 / 7.0; 7];
            let star_obj = sampling_objective(&costs, &p_star);
            let unif_obj = sampling_objective(&costs, &uniform);
            assert!(
                star_obj <= unif_obj + 1e-9,
                "star {star_obj} uniform {unif_obj}"
            );
        }
    }

    fn visits_and_profiles(
        rounds: u64,
        chosen: impl Fn(u64) -> usize,
        costs: &[f64],
    ) -> (Vec<RoundVisit>, Vec<CostProfile<f64>>) {
        let visits: Vec<RoundVisit> = (1..=rounds)
            .map(|k| RoundVisit {
                round: k,
                prev: 0,
                chosen: chosen(k),
            })
            .collect();
        let profiles = (1..=rounds)
            .map(|k| CostProfile {
                round: k,
                costs: costs.to_vec(),
            })
            .collect();
        (visits, profiles)
    }

    #[test]
    fn regret_zero_when_walker_picks_the_min() {
        let g = build_complete(3).unwrap();
        let (visits, profiles) = visits_and_profiles(5, |_| 1, &[0.9, 0.1, 0.5]);
        let series =
            sleeping_regret(&visits, &profiles, &g, RegretMode::PerRoundAvailableMin).unwrap();
        assert!(series.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn regret_zero_on_single_node_graph() {
        let g = Graph::from_edges(1, &[], crate::graph::GeneratorTag::Custom, 0).unwrap();
        let (visits, profiles) = visits_and_profiles(4, |_| 0, &[0.7]);
        for mode in [RegretMode::PerRoundAvailableMin, RegretMode::BestFixedNode] {
            let series = sleeping_regret(&visits, &profiles, &g, mode).unwrap();
            assert!(series.iter().all(|&r| r == 0.0));
        }
    }

    #[test]
    fn regret_accumulates_gap_to_available_min() {
        let g = build_complete(3).unwrap();
        let (visits, profiles) = visits_and_profiles(3, |_| 0, &[0.9, 0.1, 0.5]);
        let series =
            sleeping_regret(&visits, &profiles, &g, RegretMode::PerRoundAvailableMin).unwrap();
        assert_abs_diff_eq!(series[0], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(series[2], 2.4, epsilon = 1e-12);
        // Nondecreasing by construction.
        assert!(series.windows(2).all(|w| w[0] <= w[1] + 1e-15));
    }

    #[test]
    fn regret_best_fixed_node_matches_hand_computation() {
        let g = build_complete(3).unwrap();
        let (visits, profiles) = visits_and_profiles(4, |k| if k % 2 == 0 { 1 } else { 2 }, &[0.2, 0.6, 0.4]);
        // Node 0 is always available with the minimal summed cost, so the
        // benchmark pays 0.2 each round.
        let series = sleeping_regret(&visits, &profiles, &g, RegretMode::BestFixedNode).unwrap();
        let expect = [0.2, 0.6, 0.8, 1.2];
        for (got, want) in series.iter().zip(expect) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn regret_rejects_missing_profiles() {
        let g = build_complete(2).unwrap();
        let (visits, mut profiles) = visits_and_profiles(3, |_| 0, &[0.5, 0.5]);
        profiles.pop();
        assert!(matches!(
            sleeping_regret(&visits, &profiles, &g, RegretMode::PerRoundAvailableMin),
            Err(OracleError::MissingProfile { round: 3, .. })
        ));
    }
}
