//! Document ingestion: tokenization, term vectors and collection statistics.

pub mod porter;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus contains no documents")]
    EmptyCorpus,
    #[error("line {line}: duplicate document id {doc_id:?}")]
    DuplicateDocId { line: usize, doc_id: String },
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A document with a unique identifier and its raw text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    #[serde(rename = "id")]
    pub doc_id: String,
    pub text: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            text: text.into(),
        }
    }
}

/// Text preprocessing options. Stopwords are matched after lowercasing and
/// before stemming.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineConfig {
    pub lowercase: bool,
    pub stopwords: BTreeSet<String>,
    pub stem: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            stopwords: BTreeSet::new(),
            stem: true,
        }
    }
}

/// Split `text` into maximal alphanumeric runs and apply the pipeline.
pub fn tokenize(text: &str, config: &PipelineConfig) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter_map(|raw| {
            let token = if config.lowercase {
                raw.to_lowercase()
            } else {
                raw.to_string()
            };
            if config.stopwords.contains(&token) {
                return None;
            }
            Some(if config.stem {
                porter::stem(&token)
            } else {
                token
            })
        })
        .collect()
}

/// Bag-of-words counts for one document. Terms are kept in sorted order so
/// every summation over a vector runs in the same order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermVector {
    counts: BTreeMap<String, u32>,
    length: u64,
}

impl TermVector {
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut tv = TermVector::default();
        for t in tokens {
            *tv.counts.entry(t.into()).or_insert(0) += 1;
            tv.length += 1;
        }
        tv
    }

    pub fn count(&self, term: &str) -> u32 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    pub fn len(&self) -> u64 {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.counts.iter().map(|(t, &c)| (t.as_str(), c))
    }

    pub fn distinct_terms(&self) -> usize {
        self.counts.len()
    }
}

pub fn build_term_vector(tokens: &[String]) -> TermVector {
    TermVector::from_tokens(tokens.iter().cloned())
}

/// Corpus-wide term counts backing the collection language model.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CollectionStats {
    term_freq: BTreeMap<String, u64>,
    total_tokens: u64,
}

impl CollectionStats {
    pub fn term_freq(&self, term: &str) -> u64 {
        self.term_freq.get(term).copied().unwrap_or(0)
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn vocabulary_size(&self) -> usize {
        self.term_freq.len()
    }

    /// Maximum-likelihood collection probability of `term`.
    pub fn collection_prob(&self, term: &str) -> f64 {
        if self.total_tokens == 0 {
            return 0.0;
        }
        self.term_freq(term) as f64 / self.total_tokens as f64
    }

    pub fn add_document(&mut self, doc: &TermVector) {
        for (term, count) in doc.iter() {
            *self.term_freq.entry(term.to_string()).or_insert(0) += u64::from(count);
        }
        self.total_tokens += doc.len();
    }
}

impl AddAssign<&CollectionStats> for CollectionStats {
    fn add_assign(&mut self, rhs: &CollectionStats) {
        for (term, &count) in &rhs.term_freq {
            *self.term_freq.entry(term.clone()).or_insert(0) += count;
        }
        self.total_tokens += rhs.total_tokens;
    }
}

pub fn build_collection_stats<'a, I>(corpus: I) -> Result<CollectionStats, CorpusError>
where
    I: IntoIterator<Item = &'a TermVector>,
{
    let mut stats = CollectionStats::default();
    let mut docs = 0usize;
    for tv in corpus {
        stats.add_document(tv);
        docs += 1;
    }
    if docs == 0 {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(stats)
}

/// Read a JSON-lines corpus (`{"id": ..., "text": ...}` per line). Blank lines
/// are skipped; line numbers in errors are 1-based.
pub fn load_corpus<R: BufRead>(reader: R) -> Result<BTreeMap<String, Document>, CorpusError> {
    let mut docs = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document =
            serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
                line: line_no,
                reason: e.to_string(),
            })?;
        if doc.doc_id.is_empty() {
            return Err(CorpusError::MalformedRecord {
                line: line_no,
                reason: "empty document id".into(),
            });
        }
        if docs.contains_key(&doc.doc_id) {
            return Err(CorpusError::DuplicateDocId {
                line: line_no,
                doc_id: doc.doc_id,
            });
        }
        docs.insert(doc.doc_id.clone(), doc);
    }
    Ok(docs)
}

pub fn write_corpus<'a, W, I>(mut writer: W, docs: I) -> Result<(), CorpusError>
where
    W: Write,
    I: IntoIterator<Item = &'a Document>,
{
    for doc in docs {
        serde_json::to_writer(&mut writer, doc).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// One stopword per line; surrounding whitespace is trimmed and blank lines ignored.
pub fn load_stopwords<R: BufRead>(reader: R) -> Result<BTreeSet<String>, CorpusError> {
    let mut words = BTreeSet::new();
    for line in reader.lines() {
        let line = line?;
        let w = line.trim();
        if !w.is_empty() {
            words.insert(w.to_string());
        }
    }
    Ok(words)
}

/// A preprocessed corpus: term vectors for every document plus collection statistics.
#[derive(Debug, Clone)]
pub struct Corpus {
    vectors: BTreeMap<String, TermVector>,
    stats: CollectionStats,
}

impl Corpus {
    pub fn build<'a, I>(docs: I, config: &PipelineConfig) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = &'a Document>,
    {
        let vectors: BTreeMap<String, TermVector> = docs
            .into_iter()
            .map(|d| {
                (
                    d.doc_id.clone(),
                    TermVector::from_tokens(tokenize(&d.text, config)),
                )
            })
            .collect();
        let stats = build_collection_stats(vectors.values())?;
        Ok(Self { vectors, stats })
    }

    pub fn from_vectors(vectors: BTreeMap<String, TermVector>) -> Result<Self, CorpusError> {
        let stats = build_collection_stats(vectors.values())?;
        Ok(Self { vectors, stats })
    }

    pub fn vector(&self, doc_id: &str) -> Option<&TermVector> {
        self.vectors.get(doc_id)
    }

    pub fn stats(&self) -> &CollectionStats {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain() -> PipelineConfig {
        PipelineConfig {
            lowercase: true,
            stopwords: BTreeSet::new(),
            stem: false,
        }
    }

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("", &PipelineConfig::default()).is_empty());
    }

    #[test]
    fn tokenize_stopwords_after_lowercase() {
        let mut cfg = plain();
        cfg.stopwords.insert("the".into());
        assert_eq!(tokenize("The CAT the cat", &cfg), vec!["cat", "cat"]);
    }

    #[test]
    fn tokenize_splits_on_punctuation() {
        assert_eq!(
            tokenize("e-mail, x86_64;  ok!", &plain()),
            vec!["e", "mail", "x86", "64", "ok"]
        );
    }

    #[test]
    fn tokenize_stems_last() {
        let cfg = PipelineConfig {
            stopwords: ["running".to_string()].into(),
            ..PipelineConfig::default()
        };
        // "running" is removed as a surface form; "runs" is stemmed.
        assert_eq!(tokenize("running runs runner", &cfg), vec!["run", "runner"]);
    }

    #[test]
    fn term_vector_counts() {
        let tv = build_term_vector(&[]);
        assert_eq!(tv.len(), 0);
        assert_eq!(tv.distinct_terms(), 0);

        let tv = TermVector::from_tokens(["a", "a", "b"]);
        assert_eq!(tv.count("a"), 2);
        assert_eq!(tv.count("b"), 1);
        assert_eq!(tv.count("c"), 0);
        assert_eq!(tv.len(), 3);
        assert_eq!(tv, TermVector::from_tokens(["b", "a", "a"]));
    }

    #[test]
    fn collection_stats_additive() {
        let a = TermVector::from_tokens(["a", "a", "b"]);
        let b = TermVector::from_tokens(["a", "b", "b"]);
        let one = build_collection_stats([&a]).unwrap();
        assert_eq!(one.term_freq("a"), 2);
        assert_eq!(one.total_tokens(), 3);

        let both = build_collection_stats([&a, &b]).unwrap();
        assert_eq!(both.term_freq("a"), 3);
        assert_eq!(both.term_freq("b"), 3);
        assert_eq!(both.total_tokens(), 6);
        assert_eq!(both.vocabulary_size(), 2);

        let mut summed = one.clone();
        summed += &build_collection_stats([&b]).unwrap();
        assert_eq!(summed, both);
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(
            build_collection_stats(std::iter::empty()),
            Err(CorpusError::EmptyCorpus)
        ));
    }

    #[test]
    fn load_corpus_reports_duplicates_with_line() {
        let data = [
            r#"{"id":"d1","text":"a"}"#,
            r#"{"id":"d2","text":"b"}"#,
            r#"{"id":"d3","text":"c"}"#,
            r#"{"id":"d4","text":"d"}"#,
            r#"{"id":"d2","text":"again"}"#,
        ]
        .join("\n");
        match load_corpus(data.as_bytes()) {
            Err(CorpusError::DuplicateDocId { line, doc_id }) => {
                assert_eq!(line, 5);
                assert_eq!(doc_id, "d2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn load_corpus_malformed() {
        let data = "{\"id\":\"d1\",\"text\":\"a\"}\n{\"id\":\"d2\"}\n";
        assert!(matches!(
            load_corpus(data.as_bytes()),
            Err(CorpusError::MalformedRecord { line: 2, .. })
        ));
        assert!(matches!(
            load_corpus("not json".as_bytes()),
            Err(CorpusError::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn corpus_round_trip() {
        let docs = vec![
            Document::new("d1", "first \"quoted\" text"),
            Document::new("d2", "second\nline"),
        ];
        let mut buf = Vec::new();
        write_corpus(&mut buf, &docs).unwrap();
        let loaded = load_corpus(buf.as_slice()).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded["d1"], docs[0]);
        assert_eq!(loaded["d2"], docs[1]);
    }

    #[test]
    fn stopword_file() {
        let words = load_stopwords(" the\nof \n\nand\n".as_bytes()).unwrap();
        assert_eq!(words.len(), 3);
        assert!(words.contains("of"));
    }
}
