//! Experiment driver: parameter sweeps, leave-one-out cross-validation,
//! per-query oracle selection, run selection by MAP and random run triplets.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::Corpus;
use crate::eval::{evaluate_rankings, mean_average_precision, EvalReport, Metric, QueryMetrics};
use crate::fusion::{fuse, FusedRanking, FusionError, FusionMethod, GraphParams};
use crate::runio::{normalize_scores, truncate, NormalizedRunList, QrelSet, Run};
use crate::similarity::{
    build_similarity_matrix, CollectionModel, SimilarityError, SimilarityMatrix, SmoothingParams,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("cross-validation needs at least two queries, got {0}")]
    TooFewQueries(usize),
    #[error("need at least {needed} runs, got {available}")]
    TooFewRuns { needed: usize, available: usize },
    #[error("graph-based method {0} needs a corpus")]
    MissingCorpus(FusionMethod),
    #[error("no queries to evaluate")]
    NoQueries,
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

pub const DEFAULT_K: usize = 20;
pub const DEFAULT_SAMPLES: usize = 20;

/// Free-parameter grid searched for graph methods.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub lambdas: Vec<f64>,
    pub alphas: Vec<usize>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            lambdas: (1..=10).map(|i| f64::from(i) / 10.0).collect(),
            alphas: vec![5, 10, 20, 30, 40, 50],
        }
    }
}

impl SweepGrid {
    pub fn single(lambda: f64, alpha: usize) -> Self {
        Self {
            lambdas: vec![lambda],
            alphas: vec![alpha],
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.lambdas.is_empty() || self.alphas.is_empty() {
            return Err(HarnessError::InvalidGrid("grids must be non-empty".into()));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(HarnessError::InvalidGrid(format!("lambda {l} outside [0, 1]")));
        }
        if self.alphas.contains(&0) {
            return Err(HarnessError::InvalidGrid("alpha must be at least 1".into()));
        }
        Ok(())
    }

    /// Grid points in lexicographic `(lambda, alpha)` order.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut lambdas = self.lambdas.clone();
        lambdas.sort_by(f64::total_cmp);
        lambdas.dedup();
        let mut alphas = self.alphas.clone();
        alphas.sort_unstable();
        alphas.dedup();
        lambdas
            .iter()
            .flat_map(|&lambda| alphas.iter().map(move |&alpha| GridPoint { lambda, alpha }))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub lambda: f64,
    pub alpha: usize,
}

/// Objective maximized by parameter selection, with a tie-break minimized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub objective: Metric,
    pub tie_break: Metric,
}

impl Default for Selection {
    fn default() -> Self {
        Self {
            objective: Metric::P5,
            tie_break: Metric::P10,
        }
    }
}

/// A per-query value that sums exactly: hit counts for precision, AP otherwise.
fn exact_value(m: &QueryMetrics, metric: Metric) -> f64 {
    match metric {
        Metric::P5 => m.hits5 as f64,
        Metric::P10 => m.hits10 as f64,
        Metric::Map => m.ap,
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub method: FusionMethod,
    pub grid: SweepGrid,
    pub k: usize,
    pub selection: Selection,
    pub seed: u64,
    pub samples: usize,
    pub smoothing: SmoothingParams,
    pub collection_model: CollectionModel,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            method: FusionMethod::BagDupMnz,
            grid: SweepGrid::default(),
            k: DEFAULT_K,
            selection: Selection::default(),
            seed: 0,
            samples: DEFAULT_SAMPLES,
            smoothing: SmoothingParams::default(),
            collection_model: CollectionModel::Corpus,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QueryData {
    /// Truncated, normalized lists in run order; runs without the query are skipped.
    pub lists: Vec<NormalizedRunList>,
    pub sims: Option<SimilarityMatrix>,
}

/// Everything needed to fuse and evaluate a set of runs.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub queries: BTreeMap<String, QueryData>,
    pub qrels: QrelSet,
    pub k: usize,
}

impl ExperimentData {
    pub fn prepare(
        runs: &[&Run],
        corpus: Option<&Corpus>,
        qrels: &QrelSet,
        k: usize,
        model: CollectionModel,
        smoothing: SmoothingParams,
    ) -> Result<Self, HarnessError> {
        let query_ids: std::collections::BTreeSet<&String> =
            runs.iter().flat_map(|r| r.keys()).collect();
        let mut queries = BTreeMap::new();
        for q in query_ids {
            let lists: Vec<NormalizedRunList> = runs
                .iter()
                .filter_map(|run| run.get(q))
                .filter(|l| !l.is_empty())
                .map(|l| normalize_scores(&truncate(l, k)).expect("non-empty list"))
                .collect();
            if lists.is_empty() {
                continue;
            }
            let sims = match corpus {
                Some(c) => {
                    let pool: Vec<String> = lists
                        .iter()
                        .flat_map(|l| l.entries.iter().map(|e| e.doc_id.clone()))
                        .collect();
                    Some(build_similarity_matrix(&pool, c, model, smoothing)?)
                }
                None => None,
            };
            queries.insert(q.clone(), QueryData { lists, sims });
        }
        Ok(Self {
            queries,
            qrels: qrels.clone(),
            k,
        })
    }

    pub fn query_count(&self) -> usize {
        self.queries.len()
    }

    /// Keep only the given queries.
    pub fn restricted(&self, keep: &[&str]) -> Self {
        Self {
            queries: self
                .queries
                .iter()
                .filter(|(q, _)| keep.contains(&q.as_str()))
                .map(|(q, d)| (q.clone(), d.clone()))
                .collect(),
            qrels: self.qrels.clone(),
            k: self.k,
        }
    }

    pub fn fuse_query(
        &self,
        query_id: &str,
        method: FusionMethod,
        params: GraphParams,
    ) -> Result<FusedRanking, HarnessError> {
        let data = &self.queries[query_id];
        if method.is_graph() && data.sims.is_none() {
            return Err(HarnessError::MissingCorpus(method));
        }
        Ok(fuse(&data.lists, method, params, data.sims.as_ref())?)
    }

    pub fn fuse_all(
        &self,
        method: FusionMethod,
        params: GraphParams,
    ) -> Result<Vec<FusedRanking>, HarnessError> {
        self.queries
            .keys()
            .map(|q| self.fuse_query(q, method, params))
            .collect()
    }

    pub fn evaluate(&self, method: FusionMethod, params: GraphParams) -> Result<EvalReport, HarnessError> {
        let rankings = self.fuse_all(method, params)?;
        Ok(evaluate_rankings(&rankings, &self.qrels, self.k))
    }
}

/// Reports for every grid point, in grid order.
#[derive(Debug, Clone)]
pub struct GridEvaluation {
    pub method: FusionMethod,
    pub points: Vec<GridPoint>,
    pub reports: Vec<EvalReport>,
}

impl GridEvaluation {
    fn score(&self, idx: usize, metric: Metric, queries: &dyn Fn(&str) -> bool) -> f64 {
        self.reports[idx]
            .per_query
            .iter()
            .filter(|(q, _)| queries(q))
            .map(|(_, m)| exact_value(m, metric))
            .sum()
    }

    /// Best grid index over the selected queries: maximize the objective, then
    /// minimize the tie-break, then prefer the earliest (smallest) point.
    pub fn select(&self, selection: Selection, queries: &dyn Fn(&str) -> bool) -> usize {
        let mut best = 0;
        let mut best_key = (
            self.score(0, selection.objective, queries),
            self.score(0, selection.tie_break, queries),
        );
        for idx in 1..self.points.len() {
            let key = (
                self.score(idx, selection.objective, queries),
                self.score(idx, selection.tie_break, queries),
            );
            if key.0 > best_key.0 || (key.0 == best_key.0 && key.1 < best_key.1) {
                best = idx;
                best_key = key;
            }
        }
        best
    }
}

/// Evaluate a method on every grid point. Baselines have no free parameters
/// and are evaluated once, at the first grid point.
pub fn evaluate_grid(
    data: &ExperimentData,
    method: FusionMethod,
    grid: &SweepGrid,
) -> Result<GridEvaluation, HarnessError> {
    grid.validate()?;
    let mut points = grid.points();
    if !method.is_graph() {
        points.truncate(1);
    }
    let run = |p: &GridPoint| data.evaluate(method, GraphParams::new(p.lambda, p.alpha));
    #[cfg(feature = "parallel")]
    let reports: Result<Vec<EvalReport>, HarnessError> = {
        use rayon::prelude::*;
        points.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let reports: Result<Vec<EvalReport>, HarnessError> = points.iter().map(run).collect();
    Ok(GridEvaluation {
        method,
        points,
        reports: reports?,
    })
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub best: GridPoint,
    pub best_report: EvalReport,
    pub grid: GridEvaluation,
}

pub fn sweep(
    data: &ExperimentData,
    method: FusionMethod,
    grid: &SweepGrid,
    selection: Selection,
) -> Result<SweepResult, HarnessError> {
    if data.query_count() == 0 {
        return Err(HarnessError::NoQueries);
    }
    let grid = evaluate_grid(data, method, grid)?;
    let idx = grid.select(selection, &|_| true);
    Ok(SweepResult {
        best: grid.points[idx],
        best_report: grid.reports[idx].clone(),
        grid,
    })
}

/// Per-query parameter choices and the metrics obtained with them.
#[derive(Debug, Clone)]
pub struct PerQueryChoice {
    pub chosen: BTreeMap<String, GridPoint>,
    pub report: EvalReport,
}

fn assemble(grid: &GridEvaluation, picks: BTreeMap<String, usize>, k: usize) -> PerQueryChoice {
    let mut chosen = BTreeMap::new();
    let mut per_query = BTreeMap::new();
    for (q, idx) in picks {
        per_query.insert(q.clone(), grid.reports[idx].per_query[&q]);
        chosen.insert(q, grid.points[idx]);
    }
    PerQueryChoice {
        chosen,
        report: EvalReport { k, per_query },
    }
}

/// Leave-one-out: each query is fused with the parameters selected on all other queries.
pub fn loo_cross_validation(
    data: &ExperimentData,
    method: FusionMethod,
    grid: &SweepGrid,
    selection: Selection,
) -> Result<PerQueryChoice, HarnessError> {
    let n = data.query_count();
    if n < 2 {
        return Err(HarnessError::TooFewQueries(n));
    }
    let eval = evaluate_grid(data, method, grid)?;
    let picks = data
        .queries
        .keys()
        .map(|held_out| {
            let idx = eval.select(selection, &|q| q != held_out);
            (held_out.clone(), idx)
        })
        .collect();
    Ok(assemble(&eval, picks, data.k))
}

/// Upper bound: every query uses the grid point that is best for itself.
pub fn per_query_upper_bound(
    data: &ExperimentData,
    method: FusionMethod,
    grid: &SweepGrid,
    selection: Selection,
) -> Result<PerQueryChoice, HarnessError> {
    if data.query_count() == 0 {
        return Err(HarnessError::NoQueries);
    }
    let eval = evaluate_grid(data, method, grid)?;
    let picks = data
        .queries
        .keys()
        .map(|q| (q.clone(), eval.select(selection, &|o| o == q)))
        .collect();
    Ok(assemble(&eval, picks, data.k))
}

/// A named run with its MAP@k.
#[derive(Debug, Clone)]
pub struct RankedRun {
    pub name: String,
    pub map: f64,
    pub index: usize,
}

/// Order runs by MAP@k descending (ties by name) and return the top `m`.
pub fn select_runs_by_map(
    runs: &[(String, &Run)],
    qrels: &QrelSet,
    k: usize,
    m: usize,
) -> Result<Vec<RankedRun>, HarnessError> {
    if m > runs.len() {
        return Err(HarnessError::TooFewRuns {
            needed: m,
            available: runs.len(),
        });
    }
    let mut ranked = rank_runs(runs, qrels, k);
    ranked.truncate(m);
    Ok(ranked)
}

pub fn rank_runs(runs: &[(String, &Run)], qrels: &QrelSet, k: usize) -> Vec<RankedRun> {
    let mut ranked: Vec<RankedRun> = runs
        .iter()
        .enumerate()
        .map(|(index, (name, run))| RankedRun {
            name: name.clone(),
            map: mean_average_precision(run, qrels, k),
            index,
        })
        .collect();
    sort_by_map(&mut ranked);
    ranked
}

fn sort_by_map(runs: &mut [RankedRun]) {
    runs.sort_by(|a, b| b.map.total_cmp(&a.map).then_with(|| a.name.cmp(&b.name)));
}

/// `samples` triples of distinct runs drawn with a seeded generator. Within a
/// triple, runs are ordered by MAP@k descending (run1, run2, run3).
pub fn random_triplets(
    runs: &[RankedRun],
    seed: u64,
    samples: usize,
) -> Result<Vec<[RankedRun; 3]>, HarnessError> {
    if runs.len() < 3 {
        return Err(HarnessError::TooFewRuns {
            needed: 3,
            available: runs.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..samples)
        .map(|_| {
            let picked = rand::seq::index::sample(&mut rng, runs.len(), 3);
            let mut triple: Vec<RankedRun> = picked.iter().map(|i| runs[i].clone()).collect();
            sort_by_map(&mut triple);
            [triple[0].clone(), triple[1].clone(), triple[2].clone()]
        })
        .collect())
}
