//! Similarity graphs over documents or document instances, and the prestige
//! (stationary) distribution of the random walk they define.
//!
//! The transition probability from `v1` to `v2` mixes a query-driven jump with
//! a walk along nearest-neighbor edges:
//!
//! ```text
//! w(v1 -> v2) = lambda * s(v2) / sum_v s(v)
//!             + (1 - lambda) * wt(v1 -> v2) / sum_v wt(v1 -> v)
//! ```
//!
//! where `s` is the node's query-similarity estimate and `wt(v1 -> v2)` is the
//! inter-document similarity when `v2` is one of `v1`'s `alpha` nearest
//! neighbors, and zero otherwise. Rows without any neighbor fall back to the
//! uniform distribution.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use thiserror::Error;

use crate::runio::NormalizedRunList;
use crate::similarity::{neighborhoods, NeighborhoodIndex, SimilarityMatrix};

/// Smallest interpolation weight used internally; keeps the chain ergodic when
/// callers ask for `lambda = 0`.
pub const LAMBDA_FLOOR: f64 = 1e-6;

/// Graphs up to this many nodes are solved directly when power iteration fails
/// to converge.
pub const DIRECT_SOLVE_LIMIT: usize = 4000;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("no result lists to fuse")]
    NoLists,
    #[error("lambda must lie in [0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("alpha must be at least 1")]
    InvalidAlpha,
    #[error("query similarity of node {node} is invalid ({value})")]
    InvalidQuerySim { node: usize, value: f64 },
    #[error("all query similarities are zero")]
    ZeroQuerySimilarity,
    #[error("query-similarity mode {mode:?} is not defined for {kind:?} graphs")]
    UnsupportedQuerySim { kind: NodeSetKind, mode: QuerySimMode },
    #[error("document {0:?} has no similarity data")]
    MissingDocumentText(String),
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeSetKind {
    /// One node per distinct document.
    Set,
    /// One node per document instance (list, rank).
    Bag,
    /// `n` copies of every instance of a document found in `n` lists.
    BagDup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuerySimMode {
    Uniform,
    CombSum,
    CombMnz,
    InstanceScore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeOrigin {
    Document,
    /// Zero-based list index and one-based rank.
    Instance { list: usize, rank: usize },
    Copy { list: usize, rank: usize, copy: usize },
}

impl fmt::Display for NodeOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeOrigin::Document => write!(f, "doc"),
            NodeOrigin::Instance { list, rank } => write!(f, "L{}:{}", list + 1, rank),
            NodeOrigin::Copy { list, rank, copy } => {
                write!(f, "L{}:{}#{}", list + 1, rank, copy + 1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphNode {
    pub node_id: usize,
    pub doc_id: String,
    pub origin: NodeOrigin,
    pub query_sim: f64,
}

/// Per-document CombSUM and list-membership count.
pub(crate) fn pooled_scores(lists: &[NormalizedRunList]) -> BTreeMap<String, (f64, usize)> {
    let mut pooled: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for list in lists {
        for e in &list.entries {
            let slot = pooled.entry(e.doc_id.clone()).or_insert((0.0, 0));
            slot.0 += e.score;
            slot.1 += 1;
        }
    }
    pooled
}

/// Build the node set of a graph.
pub fn build_nodes(
    lists: &[NormalizedRunList],
    kind: NodeSetKind,
    mode: QuerySimMode,
) -> Result<Vec<GraphNode>, GraphError> {
    if lists.is_empty() {
        return Err(GraphError::NoLists);
    }
    let unsupported = || GraphError::UnsupportedQuerySim { kind, mode };
    match kind {
        NodeSetKind::Set => {
            let pooled = pooled_scores(lists);
            let estimate = |&(sum, n): &(f64, usize)| match mode {
                QuerySimMode::Uniform => Ok(1.0),
                QuerySimMode::CombSum => Ok(sum),
                QuerySimMode::CombMnz => Ok(n as f64 * sum),
                QuerySimMode::InstanceScore => Err(unsupported()),
            };
            pooled
                .iter()
                .enumerate()
                .map(|(node_id, (doc, v))| {
                    Ok(GraphNode {
                        node_id,
                        doc_id: doc.clone(),
                        origin: NodeOrigin::Document,
                        query_sim: estimate(v)?,
                    })
                })
                .collect()
        }
        NodeSetKind::Bag | NodeSetKind::BagDup => {
            let uniform = match mode {
                QuerySimMode::Uniform => true,
                QuerySimMode::InstanceScore => false,
                _ => return Err(unsupported()),
            };
            let membership = pooled_scores(lists);
            let mut nodes = Vec::new();
            for (li, list) in lists.iter().enumerate() {
                for e in &list.entries {
                    let query_sim = if uniform { 1.0 } else { e.score };
                    let copies = match kind {
                        NodeSetKind::BagDup => membership[&e.doc_id].1,
                        _ => 1,
                    };
                    for copy in 0..copies {
                        let origin = match kind {
                            NodeSetKind::BagDup => NodeOrigin::Copy {
                                list: li,
                                rank: e.rank,
                                copy,
                            },
                            _ => NodeOrigin::Instance {
                                list: li,
                                rank: e.rank,
                            },
                        };
                        nodes.push(GraphNode {
                            node_id: nodes.len(),
                            doc_id: e.doc_id.clone(),
                            origin,
                            query_sim,
                        });
                    }
                }
            }
            Ok(nodes)
        }
    }
}

/// Set-graph nodes whose query similarity is an arbitrary per-document score
/// (for example the output of another fusion method). Documents are those
/// pooled from `lists`; missing scores count as zero.
pub fn build_set_nodes_with(
    lists: &[NormalizedRunList],
    scores: &BTreeMap<String, f64>,
) -> Result<Vec<GraphNode>, GraphError> {
    if lists.is_empty() {
        return Err(GraphError::NoLists);
    }
    Ok(pooled_scores(lists)
        .keys()
        .enumerate()
        .map(|(node_id, doc)| GraphNode {
            node_id,
            doc_id: doc.clone(),
            origin: NodeOrigin::Document,
            query_sim: scores.get(doc).copied().unwrap_or(0.0),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIterationConfig {
    /// Stop once the L1 change between iterates drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PowerIterationConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 1000,
        }
    }
}

/// A weighted nearest-neighbor graph with smoothed transition probabilities.
#[derive(Debug, Clone)]
pub struct FusionGraph {
    nodes: Vec<GraphNode>,
    node_docs: Vec<usize>,
    neighborhoods: NeighborhoodIndex,
    lambda: f64,
    alpha: usize,
    /// Normalized query similarity per node.
    teleport: Vec<f64>,
    /// Raw neighbor edge weights per node, in neighborhood order.
    base_rows: Vec<Vec<(usize, f64)>>,
    base_row_sums: Vec<f64>,
}

impl FusionGraph {
    pub fn new(
        nodes: Vec<GraphNode>,
        matrix: &SimilarityMatrix,
        lambda: f64,
        alpha: usize,
    ) -> Result<Self, GraphError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(GraphError::InvalidLambda(lambda));
        }
        if alpha == 0 {
            return Err(GraphError::InvalidAlpha);
        }
        for n in &nodes {
            if !n.query_sim.is_finite() || n.query_sim < 0.0 {
                return Err(GraphError::InvalidQuerySim {
                    node: n.node_id,
                    value: n.query_sim,
                });
            }
        }
        let total: f64 = nodes.iter().map(|n| n.query_sim).sum();
        if !(total > 0.0) {
            return Err(GraphError::ZeroQuerySimilarity);
        }
        let node_docs: Vec<usize> = nodes
            .iter()
            .map(|n| {
                matrix
                    .index_of(&n.doc_id)
                    .ok_or_else(|| GraphError::MissingDocumentText(n.doc_id.clone()))
            })
            .collect::<Result<_, _>>()?;
        let neighborhoods = neighborhoods(&node_docs, matrix, alpha);
        let base_rows: Vec<Vec<(usize, f64)>> = (0..nodes.len())
            .map(|v| {
                neighborhoods
                    .neighbors(v)
                    .iter()
                    .map(|&u| (u, matrix.get(node_docs[v], node_docs[u]).expect("off-diagonal")))
                    .collect()
            })
            .collect();
        let base_row_sums = base_rows
            .iter()
            .map(|row| row.iter().map(|&(_, w)| w).sum())
            .collect();
        let teleport = nodes.iter().map(|n| n.query_sim / total).collect();
        Ok(Self {
            nodes,
            node_docs,
            neighborhoods,
            lambda,
            alpha,
            teleport,
            base_rows,
            base_row_sums,
        })
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn effective_lambda(&self) -> f64 {
        self.lambda.max(LAMBDA_FLOOR)
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn neighborhoods(&self) -> &NeighborhoodIndex {
        &self.neighborhoods
    }

    /// Matrix index of the document node `v` represents.
    pub fn node_document(&self, v: usize) -> usize {
        self.node_docs[v]
    }

    fn is_dangling(&self, v: usize) -> bool {
        !(self.base_row_sums[v] > 0.0)
    }

    /// Unsmoothed edge weight: the similarity if `v2` neighbors `v1`, else zero.
    pub fn base_weight(&self, v1: usize, v2: usize) -> f64 {
        self.base_rows[v1]
            .iter()
            .find(|&&(u, _)| u == v2)
            .map_or(0.0, |&(_, w)| w)
    }

    /// Smoothed transition probability from `v1` to `v2`.
    pub fn smoothed_weight(&self, v1: usize, v2: usize) -> f64 {
        let lambda = self.effective_lambda();
        let walk = if self.is_dangling(v1) {
            1.0 / self.len() as f64
        } else {
            self.base_weight(v1, v2) / self.base_row_sums[v1]
        };
        lambda * self.teleport[v2] + (1.0 - lambda) * walk
    }

    /// Dense row-stochastic transition matrix.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|v1| (0..self.len()).map(|v2| self.smoothed_weight(v1, v2)).collect())
            .collect()
    }

    /// One step `x -> x W`, summing in node order.
    fn step(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        let lambda = self.effective_lambda();
        let mass: f64 = x.iter().sum();
        let mut dangling = 0.0;
        out.iter_mut().for_each(|o| *o = 0.0);
        for (v, &xv) in x.iter().enumerate() {
            if self.is_dangling(v) {
                dangling += xv;
                continue;
            }
            let norm = self.base_row_sums[v];
            for &(u, w) in &self.base_rows[v] {
                out[u] += xv * (w / norm);
            }
        }
        let spread = dangling / n as f64;
        for (u, o) in out.iter_mut().enumerate() {
            *o = lambda * self.teleport[u] * mass + (1.0 - lambda) * (*o + spread);
        }
    }

    /// `|| P - P W ||_1`.
    pub fn residual(&self, p: &[f64]) -> f64 {
        let mut next = vec![0.0; self.len()];
        self.step(p, &mut next);
        p.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Text dump: node table, then non-zero base edges.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# nodes: node_id\tdoc_id\torigin\tquery_sim")?;
        for n in &self.nodes {
            writeln!(w, "{}\t{}\t{}\t{:e}", n.node_id, n.doc_id, n.origin, n.query_sim)?;
        }
        writeln!(w, "# edges: from\tto\tweight")?;
        for (v, row) in self.base_rows.iter().enumerate() {
            for &(u, wt) in row {
                if wt != 0.0 {
                    writeln!(w, "{v}\t{u}\t{wt:e}")?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    PowerIteration,
    DirectSolve,
}

/// Stationary probability of every node, indexed by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct PrestigeVector {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub solver: Solver,
}

impl PrestigeVector {
    pub fn get(&self, node: usize) -> f64 {
        self.values[node]
    }
}

/// Power iteration from the uniform vector.
pub fn power_iteration(
    graph: &FusionGraph,
    config: PowerIterationConfig,
) -> Result<PrestigeVector, GraphError> {
    let n = graph.len();
    let mut x = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut change = f64::INFINITY;
    for it in 1..=config.max_iterations {
        graph.step(&x, &mut next);
        change = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if change < config.tolerance {
            let total: f64 = x.iter().sum();
            x.iter_mut().for_each(|v| *v /= total);
            return Ok(PrestigeVector {
                residual: graph.residual(&x),
                values: x,
                iterations: it,
                solver: Solver::PowerIteration,
            });
        }
    }
    Err(GraphError::NotConverged {
        iterations: config.max_iterations,
        residual: change,
    })
}

/// Solve `P (I - W) = 0`, `sum P = 1` by Gaussian elimination with partial pivoting.
pub fn direct_solve(graph: &FusionGraph) -> PrestigeVector {
    let n = graph.len();
    let w = graph.transition_matrix();
    // Rows of A = I - W^T; the last equation is replaced by the normalization.
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 1.0 } else { 0.0 } - w[j][i])
                .collect()
        })
        .collect();
    let mut b = vec![0.0; n];
    a[n - 1].iter_mut().for_each(|v| *v = 1.0);
    b[n - 1] = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))
            .expect("non-empty");
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / p;
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    PrestigeVector {
        residual: graph.residual(&x),
        values: x,
        iterations: 0,
        solver: Solver::DirectSolve,
    }
}

/// Power iteration, falling back to a direct solve on small graphs whose
/// chain mixes too slowly to converge within the iteration cap.
pub fn stationary_distribution_with(
    graph: &FusionGraph,
    config: PowerIterationConfig,
) -> Result<PrestigeVector, GraphError> {
    match power_iteration(graph, config) {
        Err(GraphError::NotConverged { .. }) if graph.len() <= DIRECT_SOLVE_LIMIT => {
            Ok(direct_solve(graph))
        }
        other => other,
    }
}

pub fn stationary_distribution(graph: &FusionGraph) -> Result<PrestigeVector, GraphError> {
    stationary_distribution_with(graph, PowerIterationConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runio::{normalize_scores, RunList};
    use approx::assert_abs_diff_eq;

    fn table2() -> Vec<NormalizedRunList> {
        let l1 = RunList::from_scored("q", "L1", [("d1", 5.0), ("d2", 3.0), ("d3", 2.0)]);
        let l2 = RunList::from_scored("q", "L2", [("d2", 5.0), ("d4", 3.0), ("d1", 2.0)]);
        vec![normalize_scores(&l1).unwrap(), normalize_scores(&l2).unwrap()]
    }

    fn count(nodes: &[GraphNode], doc: &str) -> usize {
        nodes.iter().filter(|n| n.doc_id == doc).count()
    }

    #[test]
    fn node_sets_for_two_list_example() {
        let lists = table2();
        let set = build_nodes(&lists, NodeSetKind::Set, QuerySimMode::Uniform).unwrap();
        let bag = build_nodes(&lists, NodeSetKind::Bag, QuerySimMode::Uniform).unwrap();
        let dup = build_nodes(&lists, NodeSetKind::BagDup, QuerySimMode::Uniform).unwrap();
        assert_eq!((set.len(), bag.len(), dup.len()), (4, 6, 10));
        assert_eq!((count(&set, "d1"), count(&bag, "d1"), count(&dup, "d1")), (1, 2, 4));
        assert_eq!(count(&dup, "d3"), 1);
        assert!(dup.iter().enumerate().all(|(i, n)| n.node_id == i));
    }

    #[test]
    fn query_sim_estimates() {
        let lists = table2();
        let set = build_nodes(&lists, NodeSetKind::Set, QuerySimMode::CombMnz).unwrap();
        let d2 = set.iter().find(|n| n.doc_id == "d2").unwrap();
        assert_abs_diff_eq!(d2.query_sim, 1.6, epsilon = 1e-12);
        let dup = build_nodes(&lists, NodeSetKind::BagDup, QuerySimMode::InstanceScore).unwrap();
        let d1_total: f64 = dup.iter().filter(|n| n.doc_id == "d1").map(|n| n.query_sim).sum();
        assert_abs_diff_eq!(d1_total, 2.0 * 0.7, epsilon = 1e-12);
        assert!(matches!(
            build_nodes(&lists, NodeSetKind::Set, QuerySimMode::InstanceScore),
            Err(GraphError::UnsupportedQuerySim { .. })
        ));
        assert!(matches!(
            build_nodes(&lists, NodeSetKind::Bag, QuerySimMode::CombSum),
            Err(GraphError::UnsupportedQuerySim { .. })
        ));
        assert!(matches!(
            build_nodes(&[], NodeSetKind::Bag, QuerySimMode::Uniform),
            Err(GraphError::NoLists)
        ));
    }

    fn three_node_graph(lambda: f64) -> FusionGraph {
        let sims = [[0.0, 0.6, 0.3], [0.5, 0.0, 0.2], [0.9, 0.4, 0.0]];
        let m = SimilarityMatrix::from_fn(vec!["a".into(), "b".into(), "c".into()], |i, j| {
            sims[i][j]
        });
        let nodes = ["a", "b", "c"]
            .iter()
            .zip([1.0, 2.0, 1.0])
            .enumerate()
            .map(|(i, (d, s))| GraphNode {
                node_id: i,
                doc_id: d.to_string(),
                origin: NodeOrigin::Document,
                query_sim: s,
            })
            .collect();
        FusionGraph::new(nodes, &m, lambda, 1).unwrap()
    }

    #[test]
    fn smoothed_weights_by_hand() {
        let g = three_node_graph(0.3);
        // alpha = 1: a -> b, b -> a, c -> a
        assert_eq!(g.base_weight(0, 1), 0.6);
        assert_eq!(g.base_weight(0, 2), 0.0);
        assert_eq!(g.base_weight(0, 0), 0.0);
        assert_abs_diff_eq!(g.smoothed_weight(0, 1), 0.3 * 0.5 + 0.7 * 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.smoothed_weight(0, 2), 0.3 * 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(g.smoothed_weight(2, 0), 0.3 * 0.25 + 0.7, epsilon = 1e-15);
        for row in g.transition_matrix() {
            assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn lambda_one_gives_normalized_query_sim() {
        let g = three_node_graph(1.0);
        let p = stationary_distribution(&g).unwrap();
        assert_abs_diff_eq!(p.get(0), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(p.get(1), 0.5, epsilon = 1e-12);
        assert_eq!(p.solver, Solver::PowerIteration);
    }

    #[test]
    fn lambda_zero_uses_floor_and_stays_stochastic() {
        let g = three_node_graph(0.0);
        assert_eq!(g.effective_lambda(), LAMBDA_FLOOR);
        let p = stationary_distribution(&g).unwrap();
        assert_abs_diff_eq!(p.values.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(p.residual < 1e-8);
    }

    #[test]
    fn direct_and_power_agree() {
        let g = three_node_graph(0.4);
        let a = power_iteration(&g, PowerIterationConfig::default()).unwrap();
        let b = direct_solve(&g);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn dangling_rows_are_uniform() {
        // Every node represents the same document: no eligible neighbors.
        let m = SimilarityMatrix::from_fn(vec!["a".into(), "b".into()], |_, _| 0.5);
        let nodes = (0..3)
            .map(|i| GraphNode {
                node_id: i,
                doc_id: "a".into(),
                origin: NodeOrigin::Instance { list: i, rank: 1 },
                query_sim: (i + 1) as f64,
            })
            .collect();
        let g = FusionGraph::new(nodes, &m, 0.5, 5).unwrap();
        assert_abs_diff_eq!(g.smoothed_weight(0, 2), 0.5 * 0.5 + 0.5 / 3.0, epsilon = 1e-15);
        let p = stationary_distribution(&g).unwrap();
        assert_abs_diff_eq!(p.values.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn validation_errors() {
        let m = SimilarityMatrix::from_fn(vec!["a".into(), "b".into()], |_, _| 0.5);
        let node = |d: &str, s: f64| GraphNode {
            node_id: 0,
            doc_id: d.into(),
            origin: NodeOrigin::Document,
            query_sim: s,
        };
        assert!(matches!(
            FusionGraph::new(vec![node("a", 1.0)], &m, 1.5, 1),
            Err(GraphError::InvalidLambda(_))
        ));
        assert!(matches!(
            FusionGraph::new(vec![node("a", 1.0)], &m, 0.5, 0),
            Err(GraphError::InvalidAlpha)
        ));
        assert!(matches!(
            FusionGraph::new(vec![node("a", 0.0)], &m, 0.5, 1),
            Err(GraphError::ZeroQuerySimilarity)
        ));
        assert!(matches!(
            FusionGraph::new(vec![node("a", -1.0)], &m, 0.5, 1),
            Err(GraphError::InvalidQuerySim { .. })
        ));
        assert!(matches!(
            FusionGraph::new(vec![node("zz", 1.0)], &m, 0.5, 1),
            Err(GraphError::MissingDocumentText(_))
        ));
    }

    #[test]
    fn dump_lists_nodes_and_edges() {
        let g = three_node_graph(0.5);
        let mut buf = Vec::new();
        g.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("0\ta\tdoc\t1e0"));
        assert!(text.contains("2\t0\t9e-1"));
    }
}
