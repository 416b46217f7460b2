//! How many of the fused lists each pooled document appears in, split by relevance.

use std::collections::BTreeMap;

use crate::runio::{truncate, QrelSet, Run, RunList};

/// Counts of pooled documents by the number of lists containing them
/// (`counts[i]` is for `i + 1` lists).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapReport {
    pub relevant: Vec<usize>,
    pub nonrelevant: Vec<usize>,
}

fn percentages(counts: &[usize]) -> Vec<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    counts
        .iter()
        .map(|&c| 100.0 * c as f64 / total as f64)
        .collect()
}

impl OverlapReport {
    pub fn empty(lists: usize) -> Self {
        Self {
            relevant: vec![0; lists],
            nonrelevant: vec![0; lists],
        }
    }

    pub fn lists(&self) -> usize {
        self.relevant.len()
    }

    pub fn relevant_pct(&self) -> Vec<f64> {
        percentages(&self.relevant)
    }

    pub fn nonrelevant_pct(&self) -> Vec<f64> {
        percentages(&self.nonrelevant)
    }

    /// Percentage of pooled relevant documents found in exactly one list.
    pub fn singleton_relevant_pct(&self) -> f64 {
        self.relevant_pct().first().copied().unwrap_or(0.0)
    }

    pub fn merge(&mut self, other: &OverlapReport) {
        assert_eq!(self.lists(), other.lists(), "list counts differ");
        for (a, b) in self.relevant.iter_mut().zip(&other.relevant) {
            *a += b;
        }
        for (a, b) in self.nonrelevant.iter_mut().zip(&other.nonrelevant) {
            *a += b;
        }
    }
}

/// Overlap for one query; relevance is read for the first list's query id.
pub fn overlap_analysis(lists: &[RunList], qrels: &QrelSet) -> OverlapReport {
    let m = lists.len();
    let mut report = OverlapReport::empty(m);
    let Some(first) = lists.first() else {
        return report;
    };
    let mut membership: BTreeMap<&str, usize> = BTreeMap::new();
    for list in lists {
        for d in list.doc_ids() {
            *membership.entry(d).or_insert(0) += 1;
        }
    }
    for (doc, n) in membership {
        if qrels.is_relevant(&first.query_id, doc) {
            report.relevant[n - 1] += 1;
        } else {
            report.nonrelevant[n - 1] += 1;
        }
    }
    report
}

/// Pooled overlap over every query, with runs truncated to `k`. A query
/// missing from a run contributes an empty list for that run.
pub fn overlap_over_queries(runs: &[&Run], qrels: &QrelSet, k: usize) -> OverlapReport {
    let mut total = OverlapReport::empty(runs.len());
    let queries: std::collections::BTreeSet<&String> = runs.iter().flat_map(|r| r.keys()).collect();
    for q in queries {
        let lists: Vec<RunList> = runs
            .iter()
            .map(|run| match run.get(q) {
                Some(l) => truncate(l, k),
                None => RunList {
                    query_id: q.clone(),
                    run_tag: String::new(),
                    entries: Vec::new(),
                },
            })
            .collect();
        total.merge(&overlap_analysis(&lists, qrels));
    }
    total
}

/// Percentage of pooled relevant documents that appear in exactly one run,
/// as a function of the truncation depth.
pub fn singleton_relevant_curve(runs: &[&Run], qrels: &QrelSet, k_values: &[usize]) -> Vec<(usize, f64)> {
    k_values
        .iter()
        .map(|&k| (k, overlap_over_queries(runs, qrels, k).singleton_relevant_pct()))
        .collect()
}
