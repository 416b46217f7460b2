//! Rank fusion by prestige propagation over inter-document similarity graphs.
//!
//! Several ranked lists retrieved for the same query are merged by building a
//! graph whose nodes are the pooled documents (or their instances in the
//! lists), connecting every node to its nearest neighbors under a
//! language-model similarity, and scoring documents by the stationary
//! distribution of a random walk that mixes neighbor edges with jumps driven
//! by retrieval scores. With the jump weight set to 1 the methods reduce to
//! CombSUM and CombMNZ.
//!
//! ```
//! use simfuse::fusion::{comb_mnz, graph_fuse, FusionMethod, GraphParams};
//! use simfuse::runio::{normalize_scores, RunList};
//! use simfuse::similarity::SimilarityMatrix;
//!
//! let l1 = RunList::from_scored("q1", "a", [("d1", 3.0), ("d2", 2.0), ("d3", 1.0)]);
//! let l2 = RunList::from_scored("q1", "b", [("d2", 9.0), ("d4", 4.0), ("d1", 1.0)]);
//! let lists = vec![normalize_scores(&l1).unwrap(), normalize_scores(&l2).unwrap()];
//!
//! let ids = ["d1", "d2", "d3", "d4"].map(String::from).to_vec();
//! let sims = SimilarityMatrix::from_fn(ids, |i, j| 1.0 / (1 + i.abs_diff(j)) as f64);
//!
//! let fused = graph_fuse(&lists, FusionMethod::BagDupMnz, GraphParams::new(1.0, 5), &sims).unwrap();
//! assert_eq!(fused.doc_ids(), comb_mnz(&lists).doc_ids());
//! ```

pub mod corpus;
pub mod eval;
pub mod fusion;
pub mod fusion_graph;
pub mod harness;
pub mod runio;
pub mod similarity;
pub mod synthetic;

pub use fusion::{FusedRanking, FusionMethod, GraphParams};
