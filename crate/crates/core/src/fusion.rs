//! Fusion methods: score- and rank-based baselines and the similarity-graph
//! methods built on [`crate::fusion_graph`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::fusion_graph::{
    build_nodes, build_set_nodes_with, pooled_scores, stationary_distribution_with, FusionGraph,
    GraphError, GraphNode, NodeSetKind, PowerIterationConfig, PrestigeVector, QuerySimMode,
};
use crate::runio::NormalizedRunList;
use crate::similarity::SimilarityMatrix;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("unknown fusion method {0:?}")]
    UnknownMethod(String),
    #[error("{0} needs inter-document similarities")]
    MissingSimilarity(FusionMethod),
    #[error("{0} is not a graph-based method")]
    NotGraphMethod(FusionMethod),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FusionMethod {
    CombSum,
    CombMnz,
    Borda,
    RoundRobin,
    SetUni,
    SetSum,
    SetMnz,
    BagUni,
    BagSum,
    BagDupUni,
    BagDupMnz,
}

impl FusionMethod {
    pub const ALL: [FusionMethod; 11] = [
        FusionMethod::CombSum,
        FusionMethod::CombMnz,
        FusionMethod::Borda,
        FusionMethod::RoundRobin,
        FusionMethod::SetUni,
        FusionMethod::SetSum,
        FusionMethod::SetMnz,
        FusionMethod::BagUni,
        FusionMethod::BagSum,
        FusionMethod::BagDupUni,
        FusionMethod::BagDupMnz,
    ];

    pub fn token(self) -> &'static str {
        match self {
            FusionMethod::CombSum => "combsum",
            FusionMethod::CombMnz => "combmnz",
            FusionMethod::Borda => "borda",
            FusionMethod::RoundRobin => "roundrobin",
            FusionMethod::SetUni => "setuni",
            FusionMethod::SetSum => "setsum",
            FusionMethod::SetMnz => "setmnz",
            FusionMethod::BagUni => "baguni",
            FusionMethod::BagSum => "bagsum",
            FusionMethod::BagDupUni => "bagdupuni",
            FusionMethod::BagDupMnz => "bagdupmnz",
        }
    }

    /// Node set and query-similarity estimate for graph methods.
    pub fn graph_spec(self) -> Option<(NodeSetKind, QuerySimMode)> {
        use NodeSetKind::*;
        use QuerySimMode::*;
        Some(match self {
            FusionMethod::SetUni => (Set, Uniform),
            FusionMethod::SetSum => (Set, CombSum),
            FusionMethod::SetMnz => (Set, CombMnz),
            FusionMethod::BagUni => (Bag, Uniform),
            FusionMethod::BagSum => (Bag, InstanceScore),
            FusionMethod::BagDupUni => (BagDup, Uniform),
            FusionMethod::BagDupMnz => (BagDup, InstanceScore),
            _ => return None,
        })
    }

    pub fn is_graph(self) -> bool {
        self.graph_spec().is_some()
    }
}

impl fmt::Display for FusionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for FusionMethod {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FusionMethod::ALL
            .into_iter()
            .find(|m| m.token() == s)
            .ok_or_else(|| FusionError::UnknownMethod(s.to_string()))
    }
}

/// Free parameters of the graph methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphParams {
    pub lambda: f64,
    pub alpha: usize,
    pub power: PowerIterationConfig,
}

impl GraphParams {
    pub fn new(lambda: f64, alpha: usize) -> Self {
        Self {
            lambda,
            alpha,
            power: PowerIterationConfig::default(),
        }
    }
}

/// A final deduplicated ranking: descending score, ties by ascending doc id.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedRanking {
    query_id: String,
    entries: Vec<(String, f64)>,
}

impl FusedRanking {
    pub fn from_scores<I, S>(query_id: impl Into<String>, scores: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut entries: Vec<(String, f64)> =
            scores.into_iter().map(|(d, s)| (d.into(), s)).collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self {
            query_id: query_id.into(),
            entries,
        }
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn doc_ids(&self) -> Vec<&str> {
        self.entries.iter().map(|(d, _)| d.as_str()).collect()
    }

    pub fn score_of(&self, doc_id: &str) -> Option<f64> {
        self.entries.iter().find(|(d, _)| d == doc_id).map(|&(_, s)| s)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Keep the top `k` documents.
    pub fn truncated(mut self, k: usize) -> Self {
        self.entries.truncate(k);
        self
    }
}

fn query_id_of(lists: &[NormalizedRunList]) -> String {
    lists.first().map(|l| l.query_id.clone()).unwrap_or_default()
}

pub fn comb_sum(lists: &[NormalizedRunList]) -> FusedRanking {
    FusedRanking::from_scores(
        query_id_of(lists),
        pooled_scores(lists).into_iter().map(|(d, (sum, _))| (d, sum)),
    )
}

pub fn comb_mnz(lists: &[NormalizedRunList]) -> FusedRanking {
    FusedRanking::from_scores(
        query_id_of(lists),
        pooled_scores(lists)
            .into_iter()
            .map(|(d, (sum, n))| (d, n as f64 * sum)),
    )
}

/// Each list awards a document the number of its documents scored no higher.
pub fn borda(lists: &[NormalizedRunList]) -> FusedRanking {
    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    for list in lists {
        for e in &list.entries {
            let not_higher = list.entries.iter().filter(|o| o.score <= e.score).count();
            *scores.entry(e.doc_id.clone()).or_insert(0.0) += not_higher as f64;
        }
    }
    FusedRanking::from_scores(query_id_of(lists), scores)
}

/// Interleave the lists rank by rank in the given order, skipping documents
/// already emitted. Scores are `1 / position`.
pub fn round_robin(lists: &[NormalizedRunList]) -> FusedRanking {
    let depth = lists.iter().map(NormalizedRunList::len).max().unwrap_or(0);
    let mut seen = std::collections::HashSet::new();
    let mut order = Vec::new();
    for j in 0..depth {
        for list in lists {
            if let Some(e) = list.entries.get(j) {
                if seen.insert(e.doc_id.as_str()) {
                    order.push(e.doc_id.clone());
                }
            }
        }
    }
    FusedRanking::from_scores(
        query_id_of(lists),
        order
            .into_iter()
            .enumerate()
            .map(|(i, d)| (d, 1.0 / (i + 1) as f64)),
    )
}

/// Result of a graph fusion, with the graph and prestige kept for inspection.
#[derive(Debug, Clone)]
pub struct GraphFusion {
    pub ranking: FusedRanking,
    pub graph: FusionGraph,
    pub prestige: PrestigeVector,
}

/// Run the random walk over the given nodes and sum prestige per document.
pub fn fuse_nodes(
    query_id: &str,
    nodes: Vec<GraphNode>,
    params: GraphParams,
    sims: &SimilarityMatrix,
) -> Result<GraphFusion, FusionError> {
    let graph = FusionGraph::new(nodes, sims, params.lambda, params.alpha)?;
    let prestige = stationary_distribution_with(&graph, params.power)?;
    let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
    for n in graph.nodes() {
        *scores.entry(n.doc_id.as_str()).or_insert(0.0) += prestige.get(n.node_id);
    }
    let ranking = FusedRanking::from_scores(query_id, scores);
    Ok(GraphFusion {
        ranking,
        graph,
        prestige,
    })
}

pub fn graph_fuse_detailed(
    lists: &[NormalizedRunList],
    method: FusionMethod,
    params: GraphParams,
    sims: &SimilarityMatrix,
) -> Result<GraphFusion, FusionError> {
    let (kind, mode) = method
        .graph_spec()
        .ok_or(FusionError::NotGraphMethod(method))?;
    let nodes = build_nodes(lists, kind, mode)?;
    fuse_nodes(&query_id_of(lists), nodes, params, sims)
}

pub fn graph_fuse(
    lists: &[NormalizedRunList],
    method: FusionMethod,
    params: GraphParams,
    sims: &SimilarityMatrix,
) -> Result<FusedRanking, FusionError> {
    Ok(graph_fuse_detailed(lists, method, params, sims)?.ranking)
}

/// Set-graph fusion with any per-document score as the query similarity. With
/// `lambda = 1` the output ranks documents exactly as `scores` does.
pub fn graph_fuse_with_scores(
    lists: &[NormalizedRunList],
    scores: &FusedRanking,
    params: GraphParams,
    sims: &SimilarityMatrix,
) -> Result<FusedRanking, FusionError> {
    let map: BTreeMap<String, f64> = scores.entries().iter().cloned().collect();
    let nodes = build_set_nodes_with(lists, &map)?;
    Ok(fuse_nodes(&query_id_of(lists), nodes, params, sims)?.ranking)
}

/// Dispatch any method. Graph methods need `sims`; baselines ignore it.
pub fn fuse(
    lists: &[NormalizedRunList],
    method: FusionMethod,
    params: GraphParams,
    sims: Option<&SimilarityMatrix>,
) -> Result<FusedRanking, FusionError> {
    Ok(match method {
        FusionMethod::CombSum => comb_sum(lists),
        FusionMethod::CombMnz => comb_mnz(lists),
        FusionMethod::Borda => borda(lists),
        FusionMethod::RoundRobin => round_robin(lists),
        _ => {
            let sims = sims.ok_or(FusionError::MissingSimilarity(method))?;
            graph_fuse(lists, method, params, sims)?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runio::NormalizedEntry;
    use approx::assert_abs_diff_eq;

    fn nlist(tag: &str, docs: &[(&str, f64)]) -> NormalizedRunList {
        NormalizedRunList {
            query_id: "q".into(),
            run_tag: tag.into(),
            entries: docs
                .iter()
                .enumerate()
                .map(|(i, &(d, s))| NormalizedEntry {
                    doc_id: d.into(),
                    rank: i + 1,
                    score: s,
                })
                .collect(),
        }
    }

    fn table2() -> Vec<NormalizedRunList> {
        vec![
            nlist("L1", &[("d1", 0.5), ("d2", 0.3), ("d3", 0.2)]),
            nlist("L2", &[("d2", 0.5), ("d4", 0.3), ("d1", 0.2)]),
        ]
    }

    fn assert_scores(r: &FusedRanking, expected: &[(&str, f64)]) {
        assert_eq!(r.doc_ids(), expected.iter().map(|e| e.0).collect::<Vec<_>>());
        for (d, s) in expected {
            assert_abs_diff_eq!(r.score_of(d).unwrap(), *s, epsilon = 1e-12);
        }
    }

    #[test]
    fn method_tokens_round_trip() {
        for m in FusionMethod::ALL {
            assert_eq!(m.token().parse::<FusionMethod>().unwrap(), m);
        }
        assert!("CombSUM".parse::<FusionMethod>().is_err());
        assert_eq!(FusionMethod::ALL.iter().filter(|m| m.is_graph()).count(), 7);
    }

    #[test]
    fn combsum_and_combmnz_on_example() {
        let lists = table2();
        assert_scores(&comb_sum(&lists), &[("d2", 0.8), ("d1", 0.7), ("d4", 0.3), ("d3", 0.2)]);
        assert_scores(&comb_mnz(&lists), &[("d2", 1.6), ("d1", 1.4), ("d4", 0.3), ("d3", 0.2)]);
    }

    #[test]
    fn single_list_identity() {
        let l = vec![nlist("L", &[("x", 0.5), ("y", 0.3), ("z", 0.2)])];
        for r in [comb_sum(&l), comb_mnz(&l), borda(&l), round_robin(&l)] {
            assert_eq!(r.doc_ids(), ["x", "y", "z"]);
        }
        assert_scores(&borda(&l), &[("x", 3.0), ("y", 2.0), ("z", 1.0)]);
    }

    #[test]
    fn repeated_lists_scale_combsum() {
        let l = nlist("L", &[("x", 0.6), ("y", 0.4)]);
        let r = comb_sum(&[l.clone(), l.clone(), l]);
        assert_scores(&r, &[("x", 1.8), ("y", 1.2)]);
    }

    #[test]
    fn mnz_rewards_overlap() {
        // a: in both lists summing to 0.4; b: in one list with 0.4
        let lists = vec![
            nlist("L1", &[("b", 0.4), ("a", 0.2), ("c", 0.4)]),
            nlist("L2", &[("a", 0.2), ("d", 0.8)]),
        ];
        let sum = comb_sum(&lists);
        assert_eq!(sum.score_of("a"), sum.score_of("b"));
        let mnz = comb_mnz(&lists);
        assert!(mnz.score_of("a").unwrap() > mnz.score_of("b").unwrap());
    }

    #[test]
    fn borda_on_example() {
        assert_scores(&borda(&table2()), &[("d2", 5.0), ("d1", 4.0), ("d4", 2.0), ("d3", 1.0)]);
    }

    #[test]
    fn round_robin_on_example() {
        assert_eq!(round_robin(&table2()).doc_ids(), ["d1", "d2", "d4", "d3"]);
        let disjoint = vec![
            nlist("A", &[("a1", 0.6), ("a2", 0.4)]),
            nlist("B", &[("b1", 0.6), ("b2", 0.4)]),
        ];
        let r = round_robin(&disjoint);
        assert_eq!(r.doc_ids(), ["a1", "b1", "a2", "b2"]);
        assert_abs_diff_eq!(r.score_of("a2").unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn ranking_ties_by_doc_id() {
        let r = FusedRanking::from_scores("q", [("b", 1.0), ("a", 1.0), ("c", 2.0)]);
        assert_eq!(r.doc_ids(), ["c", "a", "b"]);
    }

    fn sims() -> SimilarityMatrix {
        let ids: Vec<String> = ["d1", "d2", "d3", "d4"].iter().map(|s| s.to_string()).collect();
        SimilarityMatrix::from_fn(ids, |i, j| 1.0 / (1.0 + (i as f64 - j as f64).abs()) - 0.01 * j as f64)
    }

    #[test]
    fn lambda_one_reduces_to_baselines() {
        let lists = table2();
        let m = sims();
        let p = GraphParams::new(1.0, 2);
        let sum = comb_sum(&lists).doc_ids().join(",");
        let mnz = comb_mnz(&lists).doc_ids().join(",");
        for (method, expected) in [
            (FusionMethod::SetSum, &sum),
            (FusionMethod::BagSum, &sum),
            (FusionMethod::SetMnz, &mnz),
            (FusionMethod::BagDupMnz, &mnz),
        ] {
            let r = graph_fuse(&lists, method, p, &m).unwrap();
            assert_eq!(&r.doc_ids().join(","), expected, "{method}");
        }
    }

    #[test]
    fn graph_methods_score_every_pooled_doc_positively() {
        let lists = table2();
        let m = sims();
        for method in FusionMethod::ALL.into_iter().filter(|m| m.is_graph()) {
            let r = graph_fuse(&lists, method, GraphParams::new(0.3, 2), &m).unwrap();
            assert_eq!(r.len(), 4, "{method}");
            assert!(r.entries().iter().all(|&(_, s)| s > 0.0));
            let total: f64 = r.entries().iter().map(|e| e.1).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn generic_score_hook() {
        let lists = table2();
        let b = borda(&lists);
        let r = graph_fuse_with_scores(&lists, &b, GraphParams::new(1.0, 3), &sims()).unwrap();
        assert_eq!(r.doc_ids(), b.doc_ids());
    }

    #[test]
    fn dispatcher_requires_similarities_for_graph_methods() {
        let lists = table2();
        assert!(matches!(
            fuse(&lists, FusionMethod::BagSum, GraphParams::new(0.5, 5), None),
            Err(FusionError::MissingSimilarity(FusionMethod::BagSum))
        ));
        assert!(fuse(&lists, FusionMethod::Borda, GraphParams::new(0.5, 5), None).is_ok());
        assert!(matches!(
            graph_fuse(&lists, FusionMethod::CombSum, GraphParams::new(0.5, 5), &sims()),
            Err(FusionError::NotGraphMethod(_))
        ));
    }
}
