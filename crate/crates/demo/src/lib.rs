//! Browser bindings: fuse synthetic queries and trace parameter curves.
//!
//! Every export returns a JSON string. The Rust functions behind them are
//! plain and testable natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use simfuse::corpus::{Corpus, PipelineConfig};
use simfuse::eval::{overlap_over_queries, singleton_relevant_curve, Metric};
use simfuse::fusion::{FusionMethod, GraphParams};
use simfuse::harness::ExperimentData;
use simfuse::similarity::{CollectionModel, SmoothingParams};
use simfuse::synthetic::{generate, SyntheticCollection, SyntheticConfig};

const K: usize = 20;

#[derive(Serialize)]
pub struct RankedDoc {
    pub doc_id: String,
    pub score: f64,
    pub relevant: bool,
    /// Which input runs retrieved the document.
    pub runs: Vec<usize>,
}

#[derive(Serialize)]
pub struct FuseResult {
    pub query_id: String,
    pub method: String,
    pub p5: f64,
    pub p10: f64,
    pub ranking: Vec<RankedDoc>,
}

#[derive(Serialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub p5: f64,
    pub p10: f64,
}

#[derive(Serialize)]
pub struct LambdaCurve {
    pub method: String,
    pub alpha: usize,
    pub points: Vec<CurvePoint>,
    pub combmnz_p5: f64,
    pub combmnz_p10: f64,
}

#[derive(Serialize)]
pub struct OverlapSummary {
    pub relevant_pct: Vec<f64>,
    pub nonrelevant_pct: Vec<f64>,
    pub curve: Vec<(usize, f64)>,
}

fn collection(seed: u64, relevant_share: f64) -> SyntheticCollection {
    generate(&SyntheticConfig {
        queries: 8,
        seed,
        relevant_share,
        ..SyntheticConfig::default()
    })
}

fn experiment(c: &SyntheticCollection) -> Result<ExperimentData, String> {
    let corpus = Corpus::build(&c.documents, &PipelineConfig::default()).map_err(|e| e.to_string())?;
    ExperimentData::prepare(
        &c.run_refs(),
        Some(&corpus),
        &c.qrels,
        K,
        CollectionModel::Corpus,
        SmoothingParams::default(),
    )
    .map_err(|e| e.to_string())
}

/// Fuse one query of the synthetic collection.
pub fn fuse_query(
    method: &str,
    lambda: f64,
    alpha: usize,
    query: usize,
    seed: u64,
    relevant_share: f64,
) -> Result<FuseResult, String> {
    let method: FusionMethod = method.parse().map_err(|e: simfuse::fusion::FusionError| e.to_string())?;
    let c = collection(seed, relevant_share);
    let data = experiment(&c)?;
    let qid = data
        .queries
        .keys()
        .nth(query)
        .cloned()
        .ok_or_else(|| format!("no query {query}"))?;
    let fused = data
        .fuse_query(&qid, method, GraphParams::new(lambda, alpha))
        .map_err(|e| e.to_string())?;
    let lists = &data.queries[&qid].lists;
    let report = simfuse::eval::QueryMetrics::compute(&fused.doc_ids(), &c.qrels, &qid, K);
    let ranking = fused
        .entries()
        .iter()
        .map(|(d, s)| RankedDoc {
            doc_id: d.clone(),
            score: *s,
            relevant: c.qrels.is_relevant(&qid, d),
            runs: lists
                .iter()
                .enumerate()
                .filter(|(_, l)| l.score_of(d).is_some())
                .map(|(i, _)| i + 1)
                .collect(),
        })
        .collect();
    Ok(FuseResult {
        query_id: qid,
        method: method.token().into(),
        p5: report.p5,
        p10: report.p10,
        ranking,
    })
}

/// Mean p@5 and p@10 of a graph method over lambda in 0, 0.1, ..., 1.
pub fn lambda_curve(method: &str, alpha: usize, seed: u64, relevant_share: f64) -> Result<LambdaCurve, String> {
    let method: FusionMethod = method.parse().map_err(|e: simfuse::fusion::FusionError| e.to_string())?;
    let data = experiment(&collection(seed, relevant_share))?;
    let mut points = Vec::new();
    for step in 0..=10 {
        let lambda = step as f64 / 10.0;
        let r = data
            .evaluate(method, GraphParams::new(lambda, alpha))
            .map_err(|e| e.to_string())?;
        points.push(CurvePoint {
            lambda,
            p5: r.mean(Metric::P5),
            p10: r.mean(Metric::P10),
        });
    }
    let mnz = data
        .evaluate(FusionMethod::CombMnz, GraphParams::new(1.0, 1))
        .map_err(|e| e.to_string())?;
    Ok(LambdaCurve {
        method: method.token().into(),
        alpha,
        points,
        combmnz_p5: mnz.mean(Metric::P5),
        combmnz_p10: mnz.mean(Metric::P10),
    })
}

/// How relevant and non-relevant documents spread over the runs.
pub fn overlap(seed: u64, relevant_share: f64) -> OverlapSummary {
    let c = collection(seed, relevant_share);
    let runs = c.run_refs();
    let report = overlap_over_queries(&runs, &c.qrels, K);
    OverlapSummary {
        relevant_pct: report.relevant_pct(),
        nonrelevant_pct: report.nonrelevant_pct(),
        curve: singleton_relevant_curve(&runs, &c.qrels, &[5, 10, 20, 30, 40, 50]),
    }
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn fuse_json(
    method: &str,
    lambda: f64,
    alpha: usize,
    query: usize,
    seed: u32,
    relevant_share: f64,
) -> Result<String, JsValue> {
    to_json(fuse_query(method, lambda, alpha, query, u64::from(seed), relevant_share))
}

#[wasm_bindgen]
pub fn lambda_curve_json(method: &str, alpha: usize, seed: u32, relevant_share: f64) -> Result<String, JsValue> {
    to_json(lambda_curve(method, alpha, u64::from(seed), relevant_share))
}

#[wasm_bindgen]
pub fn overlap_json(seed: u32, relevant_share: f64) -> Result<String, JsValue> {
    to_json(Ok(overlap(u64::from(seed), relevant_share)))
}
