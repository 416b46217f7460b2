//! Porter stemmer output against a reference vocabulary (word, stem) produced
//! by an independent implementation configured to match the reference C code.

use simfuse::corpus::porter::stem;

#[test]
fn matches_reference_vocabulary() {
    let data = include_str!("data/porter_vocab.tsv");
    let mut mismatches = Vec::new();
    let mut total = 0;
    for line in data.lines() {
        let (word, expected) = line.split_once('\t').expect("tab-separated pair");
        total += 1;
        let got = stem(word);
        if got != expected {
            mismatches.push(format!("{word}: expected {expected}, got {got}"));
        }
    }
    assert!(total > 5000);
    assert!(
        mismatches.is_empty(),
        "{} of {total} words differ:\n{}",
        mismatches.len(),
        mismatches.iter().take(30).cloned().collect::<Vec<_>>().join("\n")
    );
}
