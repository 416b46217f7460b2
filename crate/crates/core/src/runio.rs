//! TREC run and qrels files, top-k truncation and score normalization.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::fusion::FusedRanking;

#[derive(Debug, Error)]
pub enum RunIoError {
    #[error("line {line}: malformed line, expected {expected} whitespace-separated fields")]
    MalformedLine { line: usize, expected: usize },
    #[error("line {line}: non-numeric score {value:?}")]
    NonNumericScore { line: usize, value: String },
    #[error("line {line}: non-integer relevance grade {value:?}")]
    NonNumericGrade { line: usize, value: String },
    #[error("empty result list")]
    EmptyList,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub doc_id: String,
    pub rank: usize,
    pub score: f64,
}

/// One system's ranked list for one query. Ranks are `1..=n` in order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunList {
    pub query_id: String,
    pub run_tag: String,
    pub entries: Vec<RunEntry>,
}

impl RunList {
    /// Build a list from `(doc_id, score)` pairs, sorting by descending score
    /// (stable, so ties keep input order) and keeping the best-scoring
    /// occurrence of any duplicated document.
    pub fn from_scored<I, S>(query_id: impl Into<String>, run_tag: impl Into<String>, docs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut scored: Vec<(String, f64)> = docs.into_iter().map(|(d, s)| (d.into(), s)).collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut seen = std::collections::HashSet::new();
        let entries = scored
            .into_iter()
            .filter(|(d, _)| seen.insert(d.clone()))
            .enumerate()
            .map(|(i, (doc_id, score))| RunEntry {
                doc_id,
                rank: i + 1,
                score,
            })
            .collect();
        Self {
            query_id: query_id.into(),
            run_tag: run_tag.into(),
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.entries.iter().any(|e| e.doc_id == doc_id)
    }
}

/// A run keyed by query id.
pub type Run = BTreeMap<String, RunList>;

/// Parse a TREC run: `qid Q0 docno rank score tag` per line.
///
/// The rank column is ignored; entries are re-ranked by descending score with
/// ties kept in file order.
pub fn parse_run<R: BufRead>(reader: R) -> Result<Run, RunIoError> {
    let mut raw: BTreeMap<String, (String, Vec<(String, f64)>)> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(RunIoError::MalformedLine {
                line: line_no,
                expected: 6,
            });
        }
        let score: f64 = fields[4]
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| RunIoError::NonNumericScore {
                line: line_no,
                value: fields[4].to_string(),
            })?;
        raw.entry(fields[0].to_string())
            .or_insert_with(|| (fields[5].to_string(), Vec::new()))
            .1
            .push((fields[2].to_string(), score));
    }
    Ok(raw
        .into_iter()
        .map(|(qid, (tag, docs))| {
            let list = RunList::from_scored(qid.clone(), tag, docs);
            (qid, list)
        })
        .collect())
}

/// Keep the first `k` entries. `k` must be at least 1.
pub fn truncate(list: &RunList, k: usize) -> RunList {
    assert!(k >= 1, "truncation depth must be positive");
    RunList {
        query_id: list.query_id.clone(),
        run_tag: list.run_tag.clone(),
        entries: list.entries.iter().take(k).cloned().collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedEntry {
    pub doc_id: String,
    pub rank: usize,
    pub score: f64,
}

/// A run list whose scores are positive and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRunList {
    pub query_id: String,
    pub run_tag: String,
    pub entries: Vec<NormalizedEntry>,
}

impl NormalizedRunList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn score_of(&self, doc_id: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.doc_id == doc_id)
            .map(|e| e.score)
    }
}

/// Sum-normalize scores. If any score is non-positive every score is first
/// replaced by its exponent.
pub fn normalize_scores(list: &RunList) -> Result<NormalizedRunList, RunIoError> {
    if list.entries.is_empty() {
        return Err(RunIoError::EmptyList);
    }
    let raw: Vec<f64> = list.entries.iter().map(|e| e.score).collect();
    let positive: Vec<f64> = if raw.iter().any(|&s| s <= 0.0) {
        // exp(s - max) / sum equals exp(s) / sum but cannot overflow.
        let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        raw.iter()
            .map(|&s| (s - max).exp().max(f64::MIN_POSITIVE))
            .collect()
    } else {
        raw
    };
    let total: f64 = positive.iter().sum();
    let entries = list
        .entries
        .iter()
        .zip(&positive)
        .map(|(e, &s)| NormalizedEntry {
            doc_id: e.doc_id.clone(),
            rank: e.rank,
            score: s / total,
        })
        .collect();
    Ok(NormalizedRunList {
        query_id: list.query_id.clone(),
        run_tag: list.run_tag.clone(),
        entries,
    })
}

/// Binary relevance judgments, keyed by query then document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QrelSet {
    judgments: BTreeMap<String, BTreeMap<String, i32>>,
}

impl QrelSet {
    pub fn insert(&mut self, query_id: impl Into<String>, doc_id: impl Into<String>, grade: i32) {
        self.judgments
            .entry(query_id.into())
            .or_default()
            .insert(doc_id.into(), grade);
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<i32> {
        self.judgments.get(query_id)?.get(doc_id).copied()
    }

    /// Unjudged documents are non-relevant.
    pub fn is_relevant(&self, query_id: &str, doc_id: &str) -> bool {
        self.grade(query_id, doc_id).is_some_and(|g| g >= 1)
    }

    pub fn relevant_count(&self, query_id: &str) -> usize {
        self.judgments
            .get(query_id)
            .map_or(0, |m| m.values().filter(|&&g| g >= 1).count())
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn judgments(&self, query_id: &str) -> Option<&BTreeMap<String, i32>> {
        self.judgments.get(query_id)
    }

    pub fn len(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parse `qid iter docno rel` lines; later duplicates overwrite earlier ones.
pub fn parse_qrels<R: BufRead>(reader: R) -> Result<QrelSet, RunIoError> {
    let mut qrels = QrelSet::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(RunIoError::MalformedLine {
                line: line_no,
                expected: 4,
            });
        }
        let grade: i32 = fields[3].parse().map_err(|_| RunIoError::NonNumericGrade {
            line: line_no,
            value: fields[3].to_string(),
        })?;
        qrels.insert(fields[0], fields[2], grade);
    }
    Ok(qrels)
}

pub fn write_qrels<W: Write>(mut writer: W, qrels: &QrelSet) -> Result<(), RunIoError> {
    for (qid, docs) in &qrels.judgments {
        for (doc, grade) in docs {
            writeln!(writer, "{qid} 0 {doc} {grade}")?;
        }
    }
    Ok(())
}

/// Format like C's `%.6g`.
pub fn format_score(score: f64) -> String {
    const PRECISION: i32 = 6;
    if score == 0.0 {
        return "0".to_string();
    }
    if !score.is_finite() {
        return score.to_string();
    }
    // Exponent after rounding to PRECISION significant digits.
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, score);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= PRECISION {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PRECISION - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{score:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Write one fused ranking as run lines with ranks `1..=n`.
pub fn write_run<W: Write>(
    mut writer: W,
    ranking: &FusedRanking,
    run_tag: &str,
) -> Result<(), RunIoError> {
    if ranking.is_empty() {
        return Err(RunIoError::EmptyList);
    }
    for (i, (doc_id, score)) in ranking.entries().iter().enumerate() {
        writeln!(
            writer,
            "{} Q0 {} {} {} {}",
            ranking.query_id(),
            doc_id,
            i + 1,
            format_score(*score),
            run_tag
        )?;
    }
    Ok(())
}

/// Write several queries' rankings in query-id order.
pub fn write_runs<'a, W, I>(mut writer: W, rankings: I, run_tag: &str) -> Result<(), RunIoError>
where
    W: Write,
    I: IntoIterator<Item = &'a FusedRanking>,
{
    let mut sorted: Vec<&FusedRanking> = rankings.into_iter().collect();
    sorted.sort_by(|a, b| a.query_id().cmp(b.query_id()));
    for r in sorted {
        write_run(&mut writer, r, run_tag)?;
    }
    Ok(())
}
