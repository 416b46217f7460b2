//! Language-model inter-document similarity and nearest-neighbor sets.
//!
//! `sim(d1, d2) = exp(-KL(p_d1 || p_d2^mu))`, where `p_d1` is the maximum
//! likelihood model of `d1` and `p_d2^mu` is the Dirichlet-smoothed model of
//! `d2`. The divergence is summed over the terms of `d1` only, so it is not
//! guaranteed to be non-negative; no clamping is applied.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::corpus::{CollectionStats, Corpus, TermVector};

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("smoothed probability of term {term:?} is zero (mu = 0 and the term is absent)")]
    ZeroSmoothedProbability { term: String },
    #[error("document {0:?} has no text in the corpus")]
    MissingDocumentText(String),
    #[error("document {0:?} has no terms after preprocessing")]
    EmptyDocument(String),
    #[error("invalid similarity cache: {0}")]
    InvalidCache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const DEFAULT_MU: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    pub mu: f64,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        Self { mu: DEFAULT_MU }
    }
}

/// Which documents the collection model is estimated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CollectionModel {
    /// The whole supplied corpus.
    #[default]
    Corpus,
    /// Only the documents pooled for the query being fused.
    Pool,
}

/// Dirichlet-smoothed probability `(tf + mu * p_C) / (|d| + mu)`.
pub fn smoothed_prob(
    term: &str,
    doc: &TermVector,
    stats: &CollectionStats,
    params: SmoothingParams,
) -> f64 {
    let tf = f64::from(doc.count(term));
    (tf + params.mu * stats.collection_prob(term)) / (doc.len() as f64 + params.mu)
}

pub fn kl_divergence(
    d1: &TermVector,
    d2: &TermVector,
    stats: &CollectionStats,
    params: SmoothingParams,
) -> Result<f64, SimilarityError> {
    let len = d1.len() as f64;
    let mut kl = 0.0;
    for (term, count) in d1.iter() {
        let p1 = f64::from(count) / len;
        let p2 = smoothed_prob(term, d2, stats, params);
        if p2 <= 0.0 {
            return Err(SimilarityError::ZeroSmoothedProbability {
                term: term.to_string(),
            });
        }
        kl += p1 * (p1 / p2).ln();
    }
    Ok(kl)
}

pub fn sim(
    d1: &TermVector,
    d2: &TermVector,
    stats: &CollectionStats,
    params: SmoothingParams,
) -> Result<f64, SimilarityError> {
    Ok((-kl_divergence(d1, d2, stats, params)?).exp())
}

/// Directed similarities between every ordered pair of distinct documents in a pool.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    doc_ids: Vec<String>,
    index: HashMap<String, usize>,
    /// Row-major `n x n`; the diagonal is unused and holds NaN.
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Build from an explicit function over document indices (`i != j`).
    pub fn from_fn<F>(doc_ids: Vec<String>, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> f64,
    {
        let n = doc_ids.len();
        let mut values = vec![f64::NAN; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    values[i * n + j] = f(i, j);
                }
            }
        }
        Self::from_parts(doc_ids, values)
    }

    fn from_parts(doc_ids: Vec<String>, values: Vec<f64>) -> Self {
        let index = doc_ids
            .iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), i))
            .collect();
        Self {
            doc_ids,
            index,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    /// Number of stored directed values, `n * (n - 1)`.
    pub fn pair_count(&self) -> usize {
        let n = self.len();
        n * n.saturating_sub(1)
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn index_of(&self, doc_id: &str) -> Option<usize> {
        self.index.get(doc_id).copied()
    }

    /// Similarity by index; `None` on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        (i != j).then(|| self.values[i * self.len() + j])
    }

    pub fn value(&self, from: &str, to: &str) -> Option<f64> {
        self.get(self.index_of(from)?, self.index_of(to)?)
    }

    /// Restrict to a subset of documents, keeping the given order.
    pub fn subset(&self, doc_ids: &[String]) -> Result<Self, SimilarityError> {
        let idx: Vec<usize> = doc_ids
            .iter()
            .map(|d| {
                self.index_of(d)
                    .ok_or_else(|| SimilarityError::MissingDocumentText(d.clone()))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self::from_fn(doc_ids.to_vec(), |i, j| {
            self.values[idx[i] * self.len() + idx[j]]
        }))
    }
}

/// Compute `sim` for all ordered pairs of the pool. Each document pair is computed once.
pub fn build_similarity_matrix(
    pool: &[String],
    corpus: &Corpus,
    model: CollectionModel,
    params: SmoothingParams,
) -> Result<SimilarityMatrix, SimilarityError> {
    let mut doc_ids = pool.to_vec();
    doc_ids.sort();
    doc_ids.dedup();
    let vectors: Vec<&TermVector> = doc_ids
        .iter()
        .map(|d| {
            let tv = corpus
                .vector(d)
                .ok_or_else(|| SimilarityError::MissingDocumentText(d.clone()))?;
            if tv.is_empty() {
                return Err(SimilarityError::EmptyDocument(d.clone()));
            }
            Ok(tv)
        })
        .collect::<Result<_, _>>()?;
    let pool_stats;
    let stats = match model {
        CollectionModel::Corpus => corpus.stats(),
        CollectionModel::Pool => {
            let mut s = CollectionStats::default();
            for tv in &vectors {
                s.add_document(tv);
            }
            pool_stats = s;
            &pool_stats
        }
    };
    let n = doc_ids.len();
    let rows = compute_rows(&vectors, stats, params)?;
    let mut values = Vec::with_capacity(n * n);
    for row in rows {
        values.extend(row);
    }
    Ok(SimilarityMatrix::from_parts(doc_ids, values))
}

fn compute_row(
    i: usize,
    vectors: &[&TermVector],
    stats: &CollectionStats,
    params: SmoothingParams,
) -> Result<Vec<f64>, SimilarityError> {
    (0..vectors.len())
        .map(|j| {
            if i == j {
                Ok(f64::NAN)
            } else {
                sim(vectors[i], vectors[j], stats, params)
            }
        })
        .collect()
}

#[cfg(feature = "parallel")]
fn compute_rows(
    vectors: &[&TermVector],
    stats: &CollectionStats,
    params: SmoothingParams,
) -> Result<Vec<Vec<f64>>, SimilarityError> {
    use rayon::prelude::*;
    (0..vectors.len())
        .into_par_iter()
        .map(|i| compute_row(i, vectors, stats, params))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn compute_rows(
    vectors: &[&TermVector],
    stats: &CollectionStats,
    params: SmoothingParams,
) -> Result<Vec<Vec<f64>>, SimilarityError> {
    (0..vectors.len())
        .map(|i| compute_row(i, vectors, stats, params))
        .collect()
}

const CACHE_HEADER: &str = "# simfuse similarity cache v1";

/// Write `doc_i<TAB>doc_j<TAB>sim` triples after a version header. Values are
/// printed with round-trip precision.
pub fn write_similarity_cache<W: Write>(
    mut writer: W,
    matrix: &SimilarityMatrix,
) -> Result<(), SimilarityError> {
    writeln!(writer, "{CACHE_HEADER}")?;
    let ids = matrix.doc_ids();
    for (i, a) in ids.iter().enumerate() {
        for (j, b) in ids.iter().enumerate() {
            if let Some(v) = matrix.get(i, j) {
                writeln!(writer, "{a}\t{b}\t{v:e}")?;
            }
        }
    }
    Ok(())
}

pub fn read_similarity_cache<R: BufRead>(reader: R) -> Result<SimilarityMatrix, SimilarityError> {
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == CACHE_HEADER => {}
        Some(Err(e)) => return Err(e.into()),
        _ => return Err(SimilarityError::InvalidCache("missing version header".into())),
    }
    let mut triples: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut ids = std::collections::BTreeSet::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        let bad = || SimilarityError::InvalidCache(format!("line {}: {line:?}", n + 2));
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: f64 = parts[2].parse().map_err(|_| bad())?;
        ids.insert(parts[0].to_string());
        ids.insert(parts[1].to_string());
        triples.insert((parts[0].to_string(), parts[1].to_string()), v);
    }
    let ids: Vec<String> = ids.into_iter().collect();
    let mut missing = None;
    let m = SimilarityMatrix::from_fn(ids.clone(), |i, j| {
        match triples.get(&(ids[i].clone(), ids[j].clone())) {
            Some(&v) => v,
            None => {
                missing.get_or_insert((i, j));
                f64::NAN
            }
        }
    });
    if let Some((i, j)) = missing {
        return Err(SimilarityError::InvalidCache(format!(
            "missing pair ({}, {})",
            ids[i], ids[j]
        )));
    }
    Ok(m)
}

/// Up to `alpha` nearest neighbors of every node, excluding nodes that
/// represent the same document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodIndex {
    lists: Vec<Vec<usize>>,
}

impl NeighborhoodIndex {
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.lists[node]
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }
}

/// `node_docs[v]` is the matrix index of the document node `v` represents.
/// Neighbors are ordered by descending similarity, ties by ascending node id.
pub fn neighborhoods(
    node_docs: &[usize],
    matrix: &SimilarityMatrix,
    alpha: usize,
) -> NeighborhoodIndex {
    assert!(alpha >= 1, "alpha must be positive");
    let lists = node_docs
        .iter()
        .map(|&doc| {
            let mut cands: Vec<(usize, f64)> = node_docs
                .iter()
                .enumerate()
                .filter(|&(_, &other)| other != doc)
                .map(|(u, &other)| (u, matrix.get(doc, other).expect("off-diagonal")))
                .collect();
            cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            cands.truncate(alpha);
            cands.into_iter().map(|(u, _)| u).collect()
        })
        .collect();
    NeighborhoodIndex { lists }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_collection_stats, Document, PipelineConfig};
    use approx::assert_abs_diff_eq;

    fn tv(tokens: &[&str]) -> TermVector {
        TermVector::from_tokens(tokens.iter().copied())
    }

    #[test]
    fn mle_when_mu_zero() {
        let d = tv(&["a", "a", "b"]);
        let stats = build_collection_stats([&d]).unwrap();
        let p = smoothed_prob("a", &d, &stats, SmoothingParams { mu: 0.0 });
        assert_abs_diff_eq!(p, 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn smoothing_hand_values() {
        let d1 = tv(&["a", "a", "b"]);
        let d2 = tv(&["a", "b", "b"]);
        let stats = build_collection_stats([&d1, &d2]).unwrap();
        let params = SmoothingParams { mu: 2.0 };
        assert_abs_diff_eq!(smoothed_prob("a", &d2, &stats, params), 0.4, epsilon = 1e-15);
        // absent term: mu * p_C / (|d| + mu)
        let d3 = tv(&["b"]);
        assert_abs_diff_eq!(
            smoothed_prob("a", &d3, &stats, params),
            2.0 * 0.5 / 3.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn identical_mle_has_zero_divergence() {
        let d = tv(&["a"]);
        let stats = build_collection_stats([&d]).unwrap();
        let kl = kl_divergence(&d, &d, &stats, SmoothingParams { mu: 0.0 }).unwrap();
        assert_eq!(kl, 0.0);
        assert_eq!(sim(&d, &d, &stats, SmoothingParams { mu: 0.0 }).unwrap(), 1.0);
    }

    #[test]
    fn zero_probability_is_an_error() {
        let d1 = tv(&["a", "c"]);
        let d2 = tv(&["a"]);
        let stats = build_collection_stats([&d1, &d2]).unwrap();
        assert!(matches!(
            kl_divergence(&d1, &d2, &stats, SmoothingParams { mu: 0.0 }),
            Err(SimilarityError::ZeroSmoothedProbability { term }) if term == "c"
        ));
    }

    fn small_corpus() -> Corpus {
        let docs = [
            Document::new("x", "apple banana apple"),
            Document::new("y", "banana cherry"),
            Document::new("z", "apple cherry cherry"),
        ];
        Corpus::build(&docs, &PipelineConfig::default()).unwrap()
    }

    #[test]
    fn matrix_counts_and_missing_docs() {
        let corpus = small_corpus();
        let pool = vec!["x".to_string(), "y".to_string()];
        let m = build_similarity_matrix(
            &pool,
            &corpus,
            CollectionModel::Corpus,
            SmoothingParams::default(),
        )
        .unwrap();
        assert_eq!(m.pair_count(), 2);
        assert!(m.value("x", "x").is_none());
        let all: Vec<String> = corpus.doc_ids().map(String::from).collect();
        let m = build_similarity_matrix(&all, &corpus, CollectionModel::Pool, SmoothingParams::default())
            .unwrap();
        assert_eq!(m.pair_count(), 6);
        for i in 0..3 {
            for j in 0..3 {
                if let Some(v) = m.get(i, j) {
                    assert!(v > 0.0 && v <= 1.0);
                }
            }
        }
        let bad = vec!["x".to_string(), "nope".to_string()];
        assert!(matches!(
            build_similarity_matrix(&bad, &corpus, CollectionModel::Corpus, SmoothingParams::default()),
            Err(SimilarityError::MissingDocumentText(d)) if d == "nope"
        ));
    }

    #[test]
    fn cache_round_trip() {
        let corpus = small_corpus();
        let all: Vec<String> = corpus.doc_ids().map(String::from).collect();
        let m = build_similarity_matrix(&all, &corpus, CollectionModel::Corpus, SmoothingParams::default())
            .unwrap();
        let mut buf = Vec::new();
        write_similarity_cache(&mut buf, &m).unwrap();
        let back = read_similarity_cache(buf.as_slice()).unwrap();
        assert_eq!(back.doc_ids(), m.doc_ids());
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(back.get(i, j).map(f64::to_bits), m.get(i, j).map(f64::to_bits));
            }
        }
        assert!(read_similarity_cache("x\ty\t0.5\n".as_bytes()).is_err());
    }

    fn matrix3() -> SimilarityMatrix {
        // d0 is closest to d2, then d1.
        let v = [[0.0, 0.5, 0.9], [0.4, 0.0, 0.3], [0.8, 0.6, 0.0]];
        SimilarityMatrix::from_fn(vec!["d0".into(), "d1".into(), "d2".into()], |i, j| v[i][j])
    }

    #[test]
    fn neighborhoods_saturate_and_sort() {
        let m = matrix3();
        let idx = neighborhoods(&[0, 1, 2], &m, 10);
        assert_eq!(idx.neighbors(0), &[2, 1]);
        assert_eq!(idx.neighbors(1), &[0, 2]);
        let idx = neighborhoods(&[0, 1, 2], &m, 1);
        assert_eq!(idx.neighbors(2), &[0]);
    }

    #[test]
    fn neighborhoods_bag_instances() {
        let m = matrix3();
        // nodes 0,1 -> d0 ; nodes 2,3 -> d2 ; node 4 -> d1
        let nodes = [0, 0, 2, 2, 1];
        let idx = neighborhoods(&nodes, &m, 2);
        // both instances of d2 are neighbors of each d0 node
        assert_eq!(idx.neighbors(0), &[2, 3]);
        assert_eq!(idx.neighbors(1), &[2, 3]);
        // same-document nodes never neighbor each other
        for v in 0..nodes.len() {
            for &u in idx.neighbors(v) {
                assert_ne!(nodes[u], nodes[v]);
            }
        }
        // ties broken by ascending node id
        let tied = SimilarityMatrix::from_fn(vec!["a".into(), "b".into()], |_, _| 0.5);
        let idx = neighborhoods(&[0, 1, 1, 1], &tied, 2);
        assert_eq!(idx.neighbors(0), &[1, 2]);
    }
}
