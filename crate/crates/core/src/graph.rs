//! Communication graphs the walk runs on.
//!
//! Every graph is undirected, connected, and carries a self-loop on each
//! node; those three invariants are checked at construction and can be
//! relied on everywhere else. Adjacency lists are sorted and deduplicated.

use std::collections::VecDeque;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// How many fresh seeds to try before giving up on a connected sample.
pub const ER_RETRY_LIMIT: u32 = 64;

/// Largest matrix the dense spectral diagnostic will accept.
pub const SPECTRAL_MAX_NODES: usize = 2000;

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no connected Erdos-Renyi sample for N={num_nodes}, p={p} after {attempts} attempts")]
    Disconnected {
        num_nodes: usize,
        p: f64,
        attempts: u32,
    },
    #[error("graph is not connected")]
    NotConnected,
    #[error("adjacency is not symmetric between {0} and {1}")]
    Asymmetric(usize, usize),
    #[error("row {row} is not stochastic (sum {sum})")]
    NonStochasticRow { row: usize, sum: f64 },
    #[error("transition entry ({from},{to}) is off the edge support")]
    OffSupport { from: usize, to: usize },
    #[error("matrix of size {n} exceeds the dense eigensolve guard ({max})")]
    TooLargeForDense { n: usize, max: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("edge list parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Which generator produced the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorTag {
    Margulis,
    ErdosRenyi,
    Complete,
    Cycle,
    Custom,
}

/// Undirected connected graph with mandatory self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    generator: GeneratorTag,
    seed: u64,
}

impl Graph {
    /// Builds from raw undirected edges (self-loops implied, duplicates
    /// collapsed) and validates all structural invariants.
    pub fn from_edges(
        num_nodes: usize,
        edges: &[(usize, usize)],
        generator: GeneratorTag,
        seed: u64,
    ) -> Result<Self, GraphError> {
        if num_nodes == 0 {
            return Err(GraphError::InvalidParameter("num_nodes must be >= 1".into()));
        }
        let mut adjacency = vec![Vec::new(); num_nodes];
        for &(a, b) in edges {
            if a >= num_nodes || b >= num_nodes {
                return Err(GraphError::InvalidParameter(format!(
                    "edge ({a},{b}) out of range for N={num_nodes}"
                )));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for (i, list) in adjacency.iter_mut().enumerate() {
            list.push(i);
            list.sort_unstable();
            list.dedup();
        }
        let g = Graph {
            adjacency,
            generator,
            seed,
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<(), GraphError> {
        for (i, list) in self.adjacency.iter().enumerate() {
            debug_assert!(list.windows(2).all(|w| w[0] < w[1]));
            if list.binary_search(&i).is_err() {
                return Err(GraphError::InvalidParameter(format!(
                    "node {i} lacks its self-loop"
                )));
            }
            for &j in list {
                if self.adjacency[j].binary_search(&i).is_err() {
                    return Err(GraphError::Asymmetric(i, j));
                }
            }
        }
        if !self.is_connected() {
            return Err(GraphError::NotConnected);
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn generator(&self) -> GeneratorTag {
        self.generator
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sorted neighbor list, self-loop included.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Degree counting the self-loop.
    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Degree excluding the self-loop, as used by the MH acceptance ratios.
    pub fn degree_nonself(&self, i: usize) -> usize {
        self.adjacency[i].len() - 1
    }

    pub fn is_neighbor(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    /// Position of `j` in `neighbors(i)`, if adjacent.
    pub fn neighbor_index(&self, i: usize, j: usize) -> Option<usize> {
        self.adjacency[i].binary_search(&j).ok()
    }

    fn is_connected(&self) -> bool {
        let n = self.num_nodes();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }

    /// Writes the edge list: first line `N`, then one `i j` per edge with
    /// i < j. Self-loops are implied and never written.
    pub fn save_edge_list(&self, path: &Path) -> Result<(), GraphError> {
        let mut out = String::new();
        out.push_str(&format!("{}\n", self.num_nodes()));
        for (i, list) in self.adjacency.iter().enumerate() {
            for &j in list {
                if j > i {
                    out.push_str(&format!("{i} {j}\n"));
                }
            }
        }
        let mut f = fs::File::create(path)?;
        f.write_all(out.as_bytes())?;
        Ok(())
    }

    /// Reads a file produced by [`Graph::save_edge_list`]; self-loops are
    /// re-added on load.
    pub fn load_edge_list(path: &Path) -> Result<Self, GraphError> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            msg: "empty file".into(),
        })?;
        let num_nodes: usize = header.trim().parse().map_err(|_| GraphError::Parse {
            line: 1,
            msg: format!("expected node count, got {header:?}"),
        })?;
        let mut edges = Vec::new();
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize, GraphError> {
                tok.ok_or(GraphError::Parse {
                    line: idx + 1,
                    msg: "expected two node ids".into(),
                })?
                .parse()
                .map_err(|_| GraphError::Parse {
                    line: idx + 1,
                    msg: format!("bad node id in {line:?}"),
                })
            };
            let a = parse(parts.next())?;
            let b = parse(parts.next())?;
            edges.push((a, b));
        }
        Graph::from_edges(num_nodes, &edges, GeneratorTag::Custom, 0)
    }
}

/// Torus expander on n^2 nodes: node (x, y) with id `x*n + y` connects to
/// (x±2y, y), (x±(2y+1), y), (x, y±2x), (x, y±(2x+1)), all mod n, with
/// parallel edges collapsed and self-loops added everywhere.
pub fn build_margulis(n: usize) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidParameter(format!(
            "margulis grid size must be >= 2, got {n}"
        )));
    }
    let id = |x: usize, y: usize| x * n + y;
    let add = |a: usize, b: usize| (a + b) % n;
    let sub = |a: usize, b: usize| (a + n - (b % n)) % n;
    let mut edges = Vec::with_capacity(4 * n * n);
    for x in 0..n {
        for y in 0..n {
            let offsets = [
                (add(x, 2 * y), y),
                (sub(x, 2 * y), y),
                (add(x, 2 * y + 1), y),
                (sub(x, 2 * y + 1), y),
                (x, add(y, 2 * x)),
                (x, sub(y, 2 * x)),
                (x, add(y, 2 * x + 1)),
                (x, sub(y, 2 * x + 1)),
            ];
            for (nx, ny) in offsets {
                edges.push((id(x, y), id(nx, ny)));
            }
        }
    }
    Graph::from_edges(n * n, &edges, GeneratorTag::Margulis, 0)
}

/// G(N, p) sample with self-loops. If the draw is disconnected the seed is
/// incremented and the sample redrawn, up to [`ER_RETRY_LIMIT`] attempts.
pub fn build_erdos_renyi(num_nodes: usize, p: f64, seed: u64) -> Result<Graph, GraphError> {
    if num_nodes < 2 {
        return Err(GraphError::InvalidParameter(format!(
            "erdos-renyi needs N >= 2, got {num_nodes}"
        )));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(GraphError::InvalidParameter(format!(
            "erdos-renyi needs 0 < p <= 1, got {p}"
        )));
    }
    for attempt in 0..ER_RETRY_LIMIT {
        let attempt_seed = seed.wrapping_add(u64::from(attempt));
        let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed);
        let mut edges = Vec::new();
        for i in 0..num_nodes {
            for j in (i + 1)..num_nodes {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        match Graph::from_edges(num_nodes, &edges, GeneratorTag::ErdosRenyi, attempt_seed) {
            Ok(g) => return Ok(g),
            Err(GraphError::NotConnected) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(GraphError::Disconnected {
        num_nodes,
        p,
        attempts: ER_RETRY_LIMIT,
    })
}

pub fn build_complete(num_nodes: usize) -> Result<Graph, GraphError> {
    if num_nodes < 1 {
        return Err(GraphError::InvalidParameter("complete graph needs N >= 1".into()));
    }
    let mut edges = Vec::new();
    for i in 0..num_nodes {
        for j in (i + 1)..num_nodes {
            edges.push((i, j));
        }
    }
    Graph::from_edges(num_nodes, &edges, GeneratorTag::Complete, 0)
}

pub fn build_cycle(num_nodes: usize) -> Result<Graph, GraphError> {
    if num_nodes < 2 {
        return Err(GraphError::InvalidParameter("cycle needs N >= 2".into()));
    }
    let edges: Vec<(usize, usize)> = (0..num_nodes).map(|i| (i, (i + 1) % num_nodes)).collect();
    Graph::from_edges(num_nodes, &edges, GeneratorTag::Cycle, 0)
}

/// Second-largest eigenvalue modulus of a row-stochastic transition matrix
/// supported on the edges of `g`. Diagnostic only; dense eigensolve, so the
/// size is guarded by [`SPECTRAL_MAX_NODES`].
pub fn spectral_diagnostic<S: Scalar>(g: &Graph, transition: &[Vec<S>]) -> Result<S, GraphError> {
    let n = g.num_nodes();
    if n > SPECTRAL_MAX_NODES {
        return Err(GraphError::TooLargeForDense {
            n,
            max: SPECTRAL_MAX_NODES,
        });
    }
    if transition.len() != n {
        return Err(GraphError::InvalidParameter(format!(
            "transition matrix has {} rows, graph has {n} nodes",
            transition.len()
        )));
    }
    let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
    for (i, row) in transition.iter().enumerate() {
        if row.len() != n {
            return Err(GraphError::InvalidParameter(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        let sum: f64 = row.iter().map(|&x| x.to_f64_c()).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(GraphError::NonStochasticRow { row: i, sum });
        }
        for (j, &pij) in row.iter().enumerate() {
            let pij = pij.to_f64_c();
            if pij < 0.0 {
                return Err(GraphError::NonStochasticRow { row: i, sum });
            }
            if pij > 0.0 && !g.is_neighbor(i, j) {
                return Err(GraphError::OffSupport { from: i, to: j });
            }
            dense[(i, j)] = pij;
        }
    }
    let mut moduli: Vec<f64> = dense
        .complex_eigenvalues()
        .iter()
        .map(|c| c.norm())
        .collect();
    moduli.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    // Leading modulus is 1 for a stochastic matrix; the gap to the second one
    // controls mixing.
    let slem = moduli.get(1).copied().unwrap_or(0.0).clamp(0.0, 1.0);
    Ok(S::from_f64_c(slem))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn margulis_rejects_tiny_n() {
        assert!(matches!(
            build_margulis(1),
            Err(GraphError::InvalidParameter(_))
        ));
    }

    #[test]
    fn margulis_n2_hand_enumerated() {
        // Offsets for n=2 collapse onto a 4-cycle with self-loops:
        // (0,0)-(0,1)-(1,1)-(1,0)-(0,0), with id = 2x + y.
        let g = build_margulis(2).unwrap();
        assert_eq!(g.num_nodes(), 4);
        assert_eq!(g.neighbors(0), &[0, 1, 2]);
        assert_eq!(g.neighbors(1), &[0, 1, 3]);
        assert_eq!(g.neighbors(2), &[0, 2, 3]);
        assert_eq!(g.neighbors(3), &[1, 2, 3]);
    }

    #[test]
    fn margulis_n10_is_the_hundred_node_expander() {
        let g = build_margulis(10).unwrap();
        assert_eq!(g.num_nodes(), 100);
        for i in 0..100 {
            let deg = g.degree(i);
            assert!((1..=9).contains(&deg), "node {i} degree {deg}");
        }
    }

    #[test]
    fn margulis_symmetric_and_connected_for_various_n() {
        for n in [2, 3, 4, 7, 10, 15] {
            // from_edges validates symmetry, self-loops and connectivity.
            build_margulis(n).unwrap();
        }
    }

    #[test]
    fn erdos_renyi_deterministic() {
        let a = build_erdos_renyi(20, 0.3, 7).unwrap();
        let b = build_erdos_renyi(20, 0.3, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn erdos_renyi_p1_is_complete() {
        let g = build_erdos_renyi(5, 1.0, 3).unwrap();
        for i in 0..5 {
            assert_eq!(g.degree(i), 5);
        }
    }

    #[test]
    fn erdos_renyi_rejects_bad_params() {
        assert!(build_erdos_renyi(1, 0.5, 0).is_err());
        assert!(build_erdos_renyi(10, 0.0, 0).is_err());
        assert!(build_erdos_renyi(10, 1.5, 0).is_err());
    }

    #[test]
    fn spectral_complete_uniform_is_zero() {
        let g = build_complete(4).unwrap();
        let row = vec![vec![0.25f64; 4]; 4];
        let slem = spectral_diagnostic(&g, &row).unwrap();
        assert_abs_diff_eq!(slem, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn spectral_two_cycle_lazy_is_zero() {
        let g = build_cycle(2).unwrap();
        let rows = vec![vec![0.5f64, 0.5], vec![0.5, 0.5]];
        let slem = spectral_diagnostic(&g, &rows).unwrap();
        assert_abs_diff_eq!(slem, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn spectral_cycle8_matches_circulant_closed_form() {
        // Lazy uniform walk on the 8-cycle is circulant; its eigenvalues are
        // (1 + 2cos(2 pi k / 8)) / 3, so the second-largest modulus is
        // (1 + sqrt(2)) / 3.
        let g = build_cycle(8).unwrap();
        let mut rows = vec![vec![0.0f64; 8]; 8];
        for i in 0..8 {
            rows[i][i] = 1.0 / 3.0;
            rows[i][(i + 1) % 8] = 1.0 / 3.0;
            rows[i][(i + 7) % 8] = 1.0 / 3.0;
        }
        let slem = spectral_diagnostic(&g, &rows).unwrap();
        let expected = (1.0 + 2.0_f64.sqrt()) / 3.0;
        assert_abs_diff_eq!(slem, expected, epsilon = 1e-9);
        assert!(slem > 0.0 && slem < 1.0);
    }

    #[test]
    fn spectral_rejects_non_stochastic_rows() {
        let g = build_complete(3).unwrap();
        let rows = vec![vec![0.5f64, 0.5, 0.5]; 3];
        assert!(matches!(
            spectral_diagnostic(&g, &rows),
            Err(GraphError::NonStochasticRow { .. })
        ));
    }

    #[test]
    fn spectral_rejects_off_support_mass() {
        let g = build_cycle(4).unwrap();
        // Entry (0, 2) is not an edge of the 4-cycle.
        let rows = vec![
            vec![0.5f64, 0.25, 0.25, 0.0],
            vec![0.25, 0.5, 0.25, 0.0],
            vec![0.0, 0.25, 0.5, 0.25],
            vec![0.25, 0.0, 0.25, 0.5],
        ];
        assert!(matches!(
            spectral_diagnostic(&g, &rows),
            Err(GraphError::OffSupport { from: 0, to: 2 })
        ));
    }

    #[test]
    fn edge_list_round_trip() {
        let g = build_margulis(3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.edges");
        g.save_edge_list(&path).unwrap();
        let loaded = Graph::load_edge_list(&path).unwrap();
        assert_eq!(loaded.num_nodes(), g.num_nodes());
        for i in 0..g.num_nodes() {
            assert_eq!(loaded.neighbors(i), g.neighbors(i));
        }
        assert_eq!(loaded.generator(), GeneratorTag::Custom);
    }

    #[test]
    fn edge_list_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.edges");
        std::fs::write(&path, "3\n0 1\n1 x\n").unwrap();
        assert!(matches!(
            Graph::load_edge_list(&path),
            Err(GraphError::Parse { line: 3, .. })
        ));
    }
}
