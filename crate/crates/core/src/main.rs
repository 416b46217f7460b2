use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use simfuse::corpus::{load_corpus, load_stopwords, Corpus, PipelineConfig};
use simfuse::eval::{
    evaluate_run, overlap_over_queries, singleton_relevant_curve, write_comparison_csv,
    write_summary, ComparisonTable, EvalReport, Metric, SystemResult, DEFAULT_CORRECTION,
};
use simfuse::fusion::{graph_fuse_detailed, FusionMethod, GraphParams};
use simfuse::harness::{
    loo_cross_validation, per_query_upper_bound, random_triplets, rank_runs, select_runs_by_map,
    sweep, ExperimentData, PerQueryChoice, Selection, SweepGrid, DEFAULT_K, DEFAULT_SAMPLES,
};
use simfuse::runio::{parse_qrels, parse_run, write_runs, QrelSet, Run};
use simfuse::similarity::{CollectionModel, SmoothingParams, DEFAULT_MU};

#[derive(Parser)]
#[command(name = "simfuse", version, about = "Similarity-graph rank fusion and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuse runs with one method and write a TREC run file.
    Fuse(Opts),
    /// Evaluate runs against qrels (p@5, p@10, MAP@k, paired significance).
    Eval(Opts),
    /// Select (lambda, alpha) maximizing mean p@5 over all queries.
    Sweep(Opts),
    /// Leave-one-out cross-validation of the free parameters.
    Cv(Opts),
    /// Per-query best parameters (upper bound).
    Oracle(Opts),
    /// Fuse random run triplets with swept parameters.
    Sample(Opts),
    /// Overlap of relevant and non-relevant documents across runs.
    Overlap(Opts),
    /// Order runs by MAP@k and keep the top m.
    SelectRuns(Opts),
}

#[derive(Args, Debug, Default, Clone)]
struct Opts {
    /// Flat TOML file with the same keys as the flags (dashes as underscores).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    runs: Vec<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated lambda values.
    #[arg(long)]
    grid_lambda: Option<String>,
    /// Comma-separated alpha values.
    #[arg(long)]
    grid_alpha: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, overrides_with = "no_stem")]
    stem: bool,
    #[arg(long, overrides_with = "stem")]
    no_stem: bool,
    /// Number of runs kept by select-runs.
    #[arg(long)]
    m: Option<usize>,
    /// Comma-separated depths for the singleton-relevant curve.
    #[arg(long)]
    curve_k: Option<String>,
    /// Estimate the collection model from the pooled documents only.
    #[arg(long)]
    pool_stats: bool,
    /// Write the fusion graph of every query to this file (fuse only).
    #[arg(long)]
    dump_graph: Option<PathBuf>,
    /// Run tag for written run files.
    #[arg(long)]
    tag: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    runs: Option<Vec<PathBuf>>,
    corpus: Option<PathBuf>,
    qrels: Option<PathBuf>,
    method: Option<String>,
    lambda: Option<f64>,
    alpha: Option<usize>,
    k: Option<usize>,
    grid_lambda: Option<String>,
    grid_alpha: Option<String>,
    seed: Option<u64>,
    samples: Option<usize>,
    out: Option<PathBuf>,
    stopwords: Option<PathBuf>,
    mu: Option<f64>,
    stem: Option<bool>,
    m: Option<usize>,
    curve_k: Option<String>,
    pool_stats: Option<bool>,
    tag: Option<String>,
}

/// Options after merging the config file (flags win).
struct Settings {
    opts: Opts,
    stem: bool,
}

impl Settings {
    fn resolve(mut opts: Opts) -> Result<Self> {
        let file = match &opts.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                toml::from_str::<FileConfig>(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => FileConfig::default(),
        };
        macro_rules! fill {
            ($($field:ident),*) => {$(
                if opts.$field.is_none() {
                    opts.$field = file.$field;
                }
            )*};
        }
        fill!(corpus, qrels, method, lambda, alpha, k, grid_lambda, grid_alpha, seed, samples, out, stopwords, mu, m, curve_k, tag);
        if opts.runs.is_empty() {
            opts.runs = file.runs.unwrap_or_default();
        }
        opts.pool_stats |= file.pool_stats.unwrap_or(false);
        let stem = if opts.stem {
            true
        } else if opts.no_stem {
            false
        } else {
            file.stem.unwrap_or(true)
        };
        Ok(Self { opts, stem })
    }

    fn k(&self) -> Result<usize> {
        let k = self.opts.k.unwrap_or(DEFAULT_K);
        if k == 0 {
            bail!("--k must be at least 1");
        }
        Ok(k)
    }

    fn method(&self) -> Result<FusionMethod> {
        let token = self.opts.method.as_deref().unwrap_or("bagdupmnz");
        Ok(token.parse()?)
    }

    fn params(&self) -> GraphParams {
        GraphParams::new(self.opts.lambda.unwrap_or(0.5), self.opts.alpha.unwrap_or(10))
    }

    fn grid(&self) -> Result<SweepGrid> {
        let mut grid = SweepGrid::default();
        if let Some(s) = &self.opts.grid_lambda {
            grid.lambdas = parse_list(s).context("--grid-lambda")?;
        }
        if let Some(s) = &self.opts.grid_alpha {
            grid.alphas = parse_list(s).context("--grid-alpha")?;
        }
        grid.validate()?;
        Ok(grid)
    }

    fn smoothing(&self) -> SmoothingParams {
        SmoothingParams {
            mu: self.opts.mu.unwrap_or(DEFAULT_MU),
        }
    }

    fn collection_model(&self) -> CollectionModel {
        if self.opts.pool_stats {
            CollectionModel::Pool
        } else {
            CollectionModel::Corpus
        }
    }

    fn qrels(&self) -> Result<QrelSet> {
        let path = self.opts.qrels.as_ref().context("--qrels is required")?;
        parse_qrels(open(path)?).with_context(|| format!("parsing {}", path.display()))
    }

    fn runs(&self) -> Result<Vec<(String, Run)>> {
        if self.opts.runs.is_empty() {
            bail!("--runs is required");
        }
        let mut named: Vec<(String, Run)> = Vec::new();
        for path in &self.opts.runs {
            let run = parse_run(open(path)?).with_context(|| format!("parsing {}", path.display()))?;
            let mut name = run
                .values()
                .next()
                .map(|l| l.run_tag.clone())
                .filter(|t| !t.is_empty())
                .unwrap_or_else(|| file_stem(path));
            if named.iter().any(|(n, _)| *n == name) {
                name = format!("{name}.{}", named.len() + 1);
            }
            named.push((name, run));
        }
        Ok(named)
    }

    fn corpus(&self) -> Result<Option<Corpus>> {
        let Some(path) = &self.opts.corpus else {
            return Ok(None);
        };
        let docs = load_corpus(open(path)?).with_context(|| format!("parsing {}", path.display()))?;
        let mut pipeline = PipelineConfig {
            stem: self.stem,
            ..PipelineConfig::default()
        };
        if let Some(sw) = &self.opts.stopwords {
            pipeline.stopwords = load_stopwords(open(sw)?)?;
        }
        Ok(Some(Corpus::build(docs.values(), &pipeline)?))
    }

    fn data(&self, runs: &[&Run], corpus: Option<&Corpus>) -> Result<ExperimentData> {
        let qrels = match &self.opts.qrels {
            Some(_) => self.qrels()?,
            None => QrelSet::default(),
        };
        Ok(ExperimentData::prepare(
            runs,
            corpus,
            &qrels,
            self.k()?,
            self.collection_model(),
            self.smoothing(),
        )?)
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.opts.out {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().with_context(|| format!("bad value {t:?}")))
        .collect()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Fuse(o) => cmd_fuse(Settings::resolve(o)?),
        Command::Eval(o) => cmd_eval(Settings::resolve(o)?),
        Command::Sweep(o) => cmd_tune(Settings::resolve(o)?, Tuning::Sweep),
        Command::Cv(o) => cmd_tune(Settings::resolve(o)?, Tuning::CrossValidation),
        Command::Oracle(o) => cmd_tune(Settings::resolve(o)?, Tuning::Oracle),
        Command::Sample(o) => cmd_sample(Settings::resolve(o)?),
        Command::Overlap(o) => cmd_overlap(Settings::resolve(o)?),
        Command::SelectRuns(o) => cmd_select(Settings::resolve(o)?),
    }
}

fn cmd_fuse(s: Settings) -> Result<()> {
    let method = s.method()?;
    let runs = s.runs()?;
    let corpus = if method.is_graph() {
        Some(s.corpus()?.context("graph methods need --corpus")?)
    } else {
        None
    };
    let refs: Vec<&Run> = runs.iter().map(|(_, r)| r).collect();
    let data = s.data(&refs, corpus.as_ref())?;
    let params = s.params();
    let mut dump = match &s.opts.dump_graph {
        Some(p) if method.is_graph() => Some(BufWriter::new(File::create(p)?)),
        _ => None,
    };
    let mut rankings = Vec::new();
    for (q, qd) in &data.queries {
        if let Some(w) = dump.as_mut() {
            let sims = qd.sims.as_ref().expect("corpus loaded");
            let detail = graph_fuse_detailed(&qd.lists, method, params, sims)?;
            writeln!(w, "## query {q}")?;
            detail.graph.write_dump(&mut *w)?;
            rankings.push(detail.ranking);
        } else {
            rankings.push(data.fuse_query(q, method, params)?);
        }
    }
    let tag = s.opts.tag.clone().unwrap_or_else(|| method.token().to_string());
    let mut out = s.output()?;
    write_runs(&mut out, rankings.iter().filter(|r| !r.is_empty()), &tag)?;
    out.flush()?;
    Ok(())
}

fn cmd_eval(s: Settings) -> Result<()> {
    let runs = s.runs()?;
    let qrels = s.qrels()?;
    let k = s.k()?;
    let systems: Vec<SystemResult> = runs
        .iter()
        .map(|(name, run)| SystemResult {
            name: name.clone(),
            report: evaluate_run(run, &qrels, k),
        })
        .collect();
    let refs = reference_marks(runs.iter().map(|(n, _)| n.clone()));
    report(&s, &systems, &refs)
}

fn reference_marks(names: impl Iterator<Item = String>) -> Vec<(String, char)> {
    names.zip('a'..='z').collect()
}

fn report(s: &Settings, systems: &[SystemResult], refs: &[(String, char)]) -> Result<()> {
    let table = ComparisonTable::build(systems, refs, DEFAULT_CORRECTION);
    if let Some(p) = &s.opts.out {
        write_comparison_csv(BufWriter::new(File::create(p)?), &table)?;
    }
    write_summary(io::stdout().lock(), &table)?;
    Ok(())
}

enum Tuning {
    Sweep,
    CrossValidation,
    Oracle,
}

fn cmd_tune(s: Settings, mode: Tuning) -> Result<()> {
    let method = s.method()?;
    let runs = s.runs()?;
    let corpus = if method.is_graph() {
        Some(s.corpus()?.context("graph methods need --corpus")?)
    } else {
        None
    };
    s.qrels()?;
    let refs: Vec<&Run> = runs.iter().map(|(_, r)| r).collect();
    let data = s.data(&refs, corpus.as_ref())?;
    let grid = s.grid()?;
    let selection = Selection::default();

    let (label, fused) = match mode {
        Tuning::Sweep => {
            let res = sweep(&data, method, &grid, selection)?;
            let mut out = csv_out(&s)?;
            out.write_record(["lambda", "alpha", "p@5", "p@10", "map@k"])?;
            for (p, rep) in res.grid.points.iter().zip(&res.grid.reports) {
                let (l, a) = param_cells(method, p.lambda, p.alpha);
                out.write_record([
                    l,
                    a,
                    fmt6(rep.mean(Metric::P5)),
                    fmt6(rep.mean(Metric::P10)),
                    fmt6(rep.mean(Metric::Map)),
                ])?;
            }
            out.flush()?;
            let (l, a) = param_cells(method, res.best.lambda, res.best.alpha);
            println!("best {method}: lambda={l} alpha={a}");
            (method.token().to_string(), res.best_report)
        }
        Tuning::CrossValidation => {
            let res = loo_cross_validation(&data, method, &grid, selection)?;
            write_choices(&s, method, &res)?;
            (format!("{method}[cv]"), res.report)
        }
        Tuning::Oracle => {
            let res = per_query_upper_bound(&data, method, &grid, selection)?;
            write_choices(&s, method, &res)?;
            (format!("{method}[oracle]"), res.report)
        }
    };
    let mut systems = vec![SystemResult {
        name: label,
        report: fused,
    }];
    systems.extend(baseline_systems(&data, &runs, method)?);
    let mut refs = reference_marks(runs.iter().map(|(n, _)| n.clone()));
    refs.truncate(runs.len());
    refs.push(("combsum".into(), 's'));
    refs.push(("combmnz".into(), 'm'));
    let table = ComparisonTable::build(&systems, &refs, DEFAULT_CORRECTION);
    write_summary(io::stdout().lock(), &table)?;
    Ok(())
}

/// Input runs (truncated to k) and the CombSUM/CombMNZ baselines.
fn baseline_systems(
    data: &ExperimentData,
    runs: &[(String, Run)],
    method: FusionMethod,
) -> Result<Vec<SystemResult>> {
    let mut out = Vec::new();
    for base in [FusionMethod::CombSum, FusionMethod::CombMnz] {
        if base != method {
            out.push(SystemResult {
                name: base.token().into(),
                report: data.evaluate(base, GraphParams::new(1.0, 1))?,
            });
        }
    }
    for (name, run) in runs {
        out.push(SystemResult {
            name: name.clone(),
            report: restrict(evaluate_run(run, &data.qrels, data.k), data),
        });
    }
    Ok(out)
}

fn restrict(mut report: EvalReport, data: &ExperimentData) -> EvalReport {
    report.per_query.retain(|q, _| data.queries.contains_key(q));
    report
}

fn param_cells(method: FusionMethod, lambda: f64, alpha: usize) -> (String, String) {
    if method.is_graph() {
        (format!("{lambda}"), alpha.to_string())
    } else {
        ("-".into(), "-".into())
    }
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

fn csv_out(s: &Settings) -> Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match &s.opts.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::sink()),
    };
    Ok(csv::Writer::from_writer(sink))
}

fn write_choices(s: &Settings, method: FusionMethod, res: &PerQueryChoice) -> Result<()> {
    let mut out = csv_out(s)?;
    out.write_record(["query", "lambda", "alpha", "p@5", "p@10", "ap@k"])?;
    for (q, p) in &res.chosen {
        let m = res.report.per_query[q];
        let (l, a) = param_cells(method, p.lambda, p.alpha);
        out.write_record([q.clone(), l, a, fmt6(m.p5), fmt6(m.p10), fmt6(m.ap)])?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_sample(s: Settings) -> Result<()> {
    let method = s.method()?;
    let runs = s.runs()?;
    let qrels = s.qrels()?;
    let k = s.k()?;
    let corpus = if method.is_graph() {
        Some(s.corpus()?.context("graph methods need --corpus")?)
    } else {
        None
    };
    let grid = s.grid()?;
    let named: Vec<(String, &Run)> = runs.iter().map(|(n, r)| (n.clone(), r)).collect();
    let ranked = rank_runs(&named, &qrels, k);
    let samples = s.opts.samples.unwrap_or(DEFAULT_SAMPLES);
    let triplets = random_triplets(&ranked, s.opts.seed.unwrap_or(0), samples)?;

    let mut out = s.output()?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record([
        "sample", "run1", "run2", "run3", "lambda", "alpha", "method_p@5", "method_p@10",
        "combmnz_p@5", "combmnz_p@10", "run1_p@5", "run1_p@10",
    ])?;
    for (i, t) in triplets.iter().enumerate() {
        let refs: Vec<&Run> = t.iter().map(|r| &runs[r.index].1).collect();
        let data = ExperimentData::prepare(
            &refs,
            corpus.as_ref(),
            &qrels,
            k,
            s.collection_model(),
            s.smoothing(),
        )?;
        let best = sweep(&data, method, &grid, Selection::default())?;
        let mnz = data.evaluate(FusionMethod::CombMnz, GraphParams::new(1.0, 1))?;
        let run1 = restrict(evaluate_run(refs[0], &qrels, k), &data);
        let (l, a) = param_cells(method, best.best.lambda, best.best.alpha);
        w.write_record([
            (i + 1).to_string(),
            t[0].name.clone(),
            t[1].name.clone(),
            t[2].name.clone(),
            l,
            a,
            fmt6(best.best_report.mean(Metric::P5)),
            fmt6(best.best_report.mean(Metric::P10)),
            fmt6(mnz.mean(Metric::P5)),
            fmt6(mnz.mean(Metric::P10)),
            fmt6(run1.mean(Metric::P5)),
            fmt6(run1.mean(Metric::P10)),
        ])?;
    }
    w.flush()?;
    drop(w);
    out.flush()?;
    Ok(())
}

fn cmd_overlap(s: Settings) -> Result<()> {
    let runs = s.runs()?;
    let qrels = s.qrels()?;
    let k = s.k()?;
    let refs: Vec<&Run> = runs.iter().map(|(_, r)| r).collect();
    let report = overlap_over_queries(&refs, &qrels, k);
    let mut out = s.output()?;
    writeln!(out, "group,{}", (1..=refs.len()).map(|i| i.to_string()).collect::<Vec<_>>().join(","))?;
    for (group, pct) in [("relevant", report.relevant_pct()), ("nonrelevant", report.nonrelevant_pct())] {
        let cells: Vec<String> = pct.iter().map(|p| format!("{p:.2}")).collect();
        writeln!(out, "{group},{}", cells.join(","))?;
    }
    if let Some(ks) = &s.opts.curve_k {
        let ks: Vec<usize> = parse_list(ks).context("--curve-k")?;
        writeln!(out)?;
        writeln!(out, "k,relevant_in_one_run")?;
        for (k, pct) in singleton_relevant_curve(&refs, &qrels, &ks) {
            writeln!(out, "{k},{pct:.2}")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_select(s: Settings) -> Result<()> {
    let runs = s.runs()?;
    let qrels = s.qrels()?;
    let k = s.k()?;
    let named: Vec<(String, &Run)> = runs.iter().map(|(n, r)| (n.clone(), r)).collect();
    let m = s.opts.m.unwrap_or(3);
    let ranked = select_runs_by_map(&named, &qrels, k, m)?;
    let mut out = s.output()?;
    writeln!(out, "position,run,map@{k},path")?;
    for (i, r) in ranked.iter().enumerate() {
        writeln!(out, "{},{},{:.6},{}", i + 1, r.name, r.map, s.opts.runs[r.index].display())?;
    }
    out.flush()?;
    Ok(())
}
