//! Retrieval metrics over binary relevance judgments.
//!
//! Unjudged documents are non-relevant. `p@n` always divides by `n`; `AP@k`
//! divides by the total number of judged-relevant documents for the query.

mod overlap;
mod report;
mod wilcoxon;

pub use overlap::{overlap_analysis, overlap_over_queries, singleton_relevant_curve, OverlapReport};
pub use report::{write_comparison_csv, write_summary, ComparisonTable, Metric, SystemResult};
pub use wilcoxon::{wilcoxon_signed_rank, SignificanceResult, DEFAULT_CORRECTION, EXACT_LIMIT};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::fusion::FusedRanking;
use crate::runio::{QrelSet, Run, RunList};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no paired observations")]
    Empty,
}

/// Number of relevant documents among the first `n`.
pub fn hits_at<S: AsRef<str>>(ranked: &[S], qrels: &QrelSet, query_id: &str, n: usize) -> usize {
    ranked
        .iter()
        .take(n)
        .filter(|d| qrels.is_relevant(query_id, d.as_ref()))
        .count()
}

pub fn precision_at<S: AsRef<str>>(ranked: &[S], qrels: &QrelSet, query_id: &str, n: usize) -> f64 {
    assert!(n >= 1, "cutoff must be positive");
    hits_at(ranked, qrels, query_id, n) as f64 / n as f64
}

/// Non-interpolated average precision over the first `k` ranks.
pub fn average_precision_at_k<S: AsRef<str>>(
    ranked: &[S],
    qrels: &QrelSet,
    query_id: &str,
    k: usize,
) -> f64 {
    assert!(k >= 1, "cutoff must be positive");
    let total_relevant = qrels.relevant_count(query_id);
    if total_relevant == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, d) in ranked.iter().take(k).enumerate() {
        if qrels.is_relevant(query_id, d.as_ref()) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / total_relevant as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryMetrics {
    pub hits5: usize,
    pub hits10: usize,
    pub p5: f64,
    pub p10: f64,
    pub ap: f64,
}

impl QueryMetrics {
    pub fn compute<S: AsRef<str>>(ranked: &[S], qrels: &QrelSet, query_id: &str, k: usize) -> Self {
        let hits5 = hits_at(ranked, qrels, query_id, 5);
        let hits10 = hits_at(ranked, qrels, query_id, 10);
        Self {
            hits5,
            hits10,
            p5: hits5 as f64 / 5.0,
            p10: hits10 as f64 / 10.0,
            ap: average_precision_at_k(ranked, qrels, query_id, k),
        }
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::P5 => self.p5,
            Metric::P10 => self.p10,
            Metric::Map => self.ap,
        }
    }
}

/// Per-query and mean p@5, p@10 and AP@k for one system.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub k: usize,
    pub per_query: BTreeMap<String, QueryMetrics>,
}

impl EvalReport {
    pub fn query_count(&self) -> usize {
        self.per_query.len()
    }

    pub fn mean(&self, metric: Metric) -> f64 {
        if self.per_query.is_empty() {
            return 0.0;
        }
        self.per_query.values().map(|m| m.get(metric)).sum::<f64>() / self.per_query.len() as f64
    }

    /// Summed hit counts; comparing these avoids floating-point ties.
    pub fn total_hits5(&self) -> usize {
        self.per_query.values().map(|m| m.hits5).sum()
    }

    pub fn total_hits10(&self) -> usize {
        self.per_query.values().map(|m| m.hits10).sum()
    }

    /// Per-query values in query-id order, over queries present in both reports.
    pub fn paired(&self, other: &EvalReport, metric: Metric) -> (Vec<f64>, Vec<f64>) {
        self.per_query
            .iter()
            .filter_map(|(q, m)| other.per_query.get(q).map(|o| (m.get(metric), o.get(metric))))
            .unzip()
    }
}

pub fn evaluate_rankings<'a, I>(rankings: I, qrels: &QrelSet, k: usize) -> EvalReport
where
    I: IntoIterator<Item = &'a FusedRanking>,
{
    let per_query = rankings
        .into_iter()
        .map(|r| {
            (
                r.query_id().to_string(),
                QueryMetrics::compute(&r.doc_ids(), qrels, r.query_id(), k),
            )
        })
        .collect();
    EvalReport { k, per_query }
}

pub fn evaluate_run(run: &Run, qrels: &QrelSet, k: usize) -> EvalReport {
    let per_query = run
        .iter()
        .map(|(q, list)| {
            let docs: Vec<&str> = list.doc_ids().collect();
            (q.clone(), QueryMetrics::compute(&docs, qrels, q, k))
        })
        .collect();
    EvalReport { k, per_query }
}

/// Mean AP@k of a run over its queries.
pub fn mean_average_precision(run: &Run, qrels: &QrelSet, k: usize) -> f64 {
    evaluate_run(run, qrels, k).mean(Metric::Map)
}

pub fn list_docs(list: &RunList) -> Vec<&str> {
    list.doc_ids().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn qrels(rel: &[&str]) -> QrelSet {
        let mut q = QrelSet::default();
        for d in rel {
            q.insert("q", *d, 1);
        }
        q.insert("q", "judged_nonrel", 0);
        q
    }

    #[test]
    fn precision_fixed_denominator() {
        let q = qrels(&["a", "b", "c"]);
        assert_abs_diff_eq!(precision_at(&["a", "x", "b", "y", "c", "z"], &q, "q", 5), 0.6);
        assert_abs_diff_eq!(precision_at(&["a", "b", "c"], &q, "q", 5), 0.6);
        assert_eq!(precision_at(&["a", "b"], &q, "other", 5), 0.0);
    }

    #[test]
    fn average_precision_hand_values() {
        assert_abs_diff_eq!(average_precision_at_k(&["a", "b"], &qrels(&["a", "b"]), "q", 5), 1.0);
        assert_abs_diff_eq!(average_precision_at_k(&["x", "a"], &qrels(&["a"]), "q", 2), 0.5);
        assert_abs_diff_eq!(
            average_precision_at_k(&["a", "x", "b", "y"], &qrels(&["a", "b", "c"]), "q", 5),
            (1.0 + 2.0 / 3.0) / 3.0,
            epsilon = 1e-15
        );
        // relevant doc beyond the cutoff does not count
        assert_abs_diff_eq!(average_precision_at_k(&["x", "a"], &qrels(&["a"]), "q", 1), 0.0);
        assert_eq!(average_precision_at_k(&["a"], &QrelSet::default(), "q", 5), 0.0);
    }

    #[test]
    fn report_means_and_pairing() {
        let q = qrels(&["a", "b"]);
        let r1 = FusedRanking::from_scores("q", [("a", 2.0), ("b", 1.0)]);
        let rep = evaluate_rankings([&r1], &q, 20);
        assert_eq!(rep.query_count(), 1);
        assert_abs_diff_eq!(rep.mean(Metric::P5), 0.4);
        assert_abs_diff_eq!(rep.mean(Metric::Map), 1.0);
        assert_eq!(rep.total_hits10(), 2);
        let (a, b) = rep.paired(&rep, Metric::P10);
        assert_eq!(a, b);
    }
}
