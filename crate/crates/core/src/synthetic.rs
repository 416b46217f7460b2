//! Seeded synthetic test collections in which relevant documents share a
//! topical vocabulary and several runs retrieve partially disjoint subsets of
//! them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Document;
use crate::runio::{QrelSet, Run, RunList};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub queries: usize,
    pub relevant_per_query: usize,
    pub nonrelevant_per_query: usize,
    pub runs: usize,
    /// Probability that a relevant document is also retrieved by a run other
    /// than its home run.
    pub relevant_share: f64,
    /// Probability that a run retrieves a given non-relevant document.
    pub nonrelevant_recall: f64,
    pub distractor_topics: usize,
    pub topic_vocabulary: usize,
    pub background_vocabulary: usize,
    pub doc_length: usize,
    /// Fraction of a document's tokens drawn from its topic.
    pub topicality: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            queries: 12,
            relevant_per_query: 12,
            nonrelevant_per_query: 48,
            runs: 3,
            relevant_share: 0.25,
            nonrelevant_recall: 0.45,
            distractor_topics: 6,
            topic_vocabulary: 25,
            background_vocabulary: 400,
            doc_length: 60,
            topicality: 0.35,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCollection {
    pub documents: Vec<Document>,
    /// `(run_tag, run)` pairs.
    pub runs: Vec<(String, Run)>,
    pub qrels: QrelSet,
}

impl SyntheticCollection {
    pub fn run_refs(&self) -> Vec<&Run> {
        self.runs.iter().map(|(_, r)| r).collect()
    }
}

fn text(rng: &mut ChaCha8Rng, topic: &str, cfg: &SyntheticConfig) -> String {
    (0..cfg.doc_length)
        .map(|_| {
            if rng.random::<f64>() < cfg.topicality {
                format!("{topic}w{}", rng.random_range(0..cfg.topic_vocabulary))
            } else {
                format!("bg{}", rng.random_range(0..cfg.background_vocabulary))
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Run-specific monotone score transforms, so runs differ in scale and sign.
fn raw_score(run: usize, s: f64) -> f64 {
    match run % 3 {
        0 => 10.0 * s,
        1 => s.ln() - 5.0,
        _ => s * s,
    }
}

pub fn generate(cfg: &SyntheticConfig) -> SyntheticCollection {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut documents = Vec::new();
    let mut qrels = QrelSet::default();
    let mut per_run: Vec<Run> = vec![Run::new(); cfg.runs];
    for q in 0..cfg.queries {
        let qid = format!("q{:02}", q + 1);
        let mut retrieved: Vec<Vec<(String, f64)>> = vec![Vec::new(); cfg.runs];
        for i in 0..cfg.relevant_per_query {
            let doc_id = format!("{qid}-r{i:02}");
            let body = text(&mut rng, &format!("t{q}"), cfg);
            documents.push(Document::new(doc_id.clone(), body));
            qrels.insert(qid.clone(), doc_id.clone(), 1);
            let home = i % cfg.runs;
            for (r, list) in retrieved.iter_mut().enumerate() {
                if r == home || rng.random::<f64>() < cfg.relevant_share {
                    let s = 1.0 + 0.8 * rng.random::<f64>();
                    list.push((doc_id.clone(), raw_score(r, s)));
                }
            }
        }
        for i in 0..cfg.nonrelevant_per_query {
            let doc_id = format!("{qid}-n{i:02}");
            let topic = format!("t{q}x{}", i % cfg.distractor_topics.max(1));
            let body = text(&mut rng, &topic, cfg);
            documents.push(Document::new(doc_id.clone(), body));
            qrels.insert(qid.clone(), doc_id.clone(), 0);
            for (r, list) in retrieved.iter_mut().enumerate() {
                if rng.random::<f64>() < cfg.nonrelevant_recall {
                    let s = 0.8 + 0.8 * rng.random::<f64>();
                    list.push((doc_id.clone(), raw_score(r, s)));
                }
            }
        }
        for (r, docs) in retrieved.into_iter().enumerate() {
            if !docs.is_empty() {
                let tag = format!("run{}", r + 1);
                per_run[r].insert(qid.clone(), RunList::from_scored(qid.clone(), tag, docs));
            }
        }
    }
    SyntheticCollection {
        documents,
        runs: per_run
            .into_iter()
            .enumerate()
            .map(|(r, run)| (format!("run{}", r + 1), run))
            .collect(),
        qrels,
    }
}
