use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::config::{DatasetSource, ExperimentConfig, Metric, Target};
use super::ledger::{LedgerEntry, RunLedger, Status};
use super::report::{render_markdown, summary_csv, AlphaSummary};
use crate::characteristics::{
    characteristics_csv, compute_vector, csv_row, degree_distribution_fit, parse_csv_row, pearson_matrix,
    CharacteristicVector, DegreeScope, CSV_HEADER,
};
use crate::error::{Error, Result};
use crate::evaluation::evaluate;
use crate::explain::{build_design, fit_ols_with, Observation, RegressionReport};
use crate::graph::{ingest, largest_connected_component, BipartiteGraph};
use crate::recommenders::{split_dataset, train_model, MetricsRow, METRICS_HEADER};
use crate::sampling::{
    manifest_csv, manifest_row, mix_counts, mix_for_alpha, SampleSpec, SampledDataset, SamplingPlan, Strategy,
    MANIFEST_HEADER,
};
use crate::seed::{combine_hashes, content_hash, derive_seed, rng_from_seed};
use crate::synthetic::{scale_free, TwoBlock};

pub const LEDGER_FILE: &str = "ledger.tsv";

const PLANTED_HEADER: &str = "sample_id,target,value";

/// How far a run goes. Each command runs its upstream stages too, reusing
/// finished cells when resuming.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Sample,
    Characterize,
    Train,
    /// Same cells as `Train`: a metric cell trains and evaluates together.
    Evaluate,
    Explain,
    Rq2,
    Report,
    RunAll,
}

impl Command {
    fn main_depth(self) -> u8 {
        match self {
            Command::Sample => 1,
            Command::Characterize => 2,
            Command::Train | Command::Evaluate => 3,
            Command::Explain | Command::Report | Command::RunAll => 4,
            Command::Rq2 => 0,
        }
    }

    fn sweep(self) -> bool {
        matches!(self, Command::Rq2 | Command::RunAll)
    }

    fn report(self) -> bool {
        matches!(self, Command::Report | Command::RunAll)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Reuse cells whose inputs and outputs are unchanged since the last run.
    pub resume: bool,
}

#[derive(Clone, Debug, Default)]
pub struct RunOutcome {
    pub ledger: RunLedger,
    /// Regressions over the main sample pool, one per target.
    pub explanations: Vec<(Target, RegressionReport)>,
    pub sweep: Vec<AlphaSummary>,
}

impl RunOutcome {
    pub fn explanation(&self, target: Target) -> Option<&RegressionReport> {
        self.explanations.iter().find(|(t, _)| *t == target).map(|(_, r)| r)
    }

    /// Cells that ran in this invocation, as opposed to being reused.
    pub fn executed(&self) -> usize {
        self.ledger.executed().count()
    }

    pub fn failed(&self) -> usize {
        self.ledger.failures().count()
    }
}

/// Main pool through the regressions and the report.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunOutcome> {
    run(cfg, Command::Report, opts)
}

/// Node- and edge-dropout pools and one regression set per mixing rate.
pub fn rq2_sweep(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunOutcome> {
    run(cfg, Command::Rq2, opts)
}

/// Runs `command` and its upstream stages. Cell failures are recorded in
/// the ledger and do not abort the run; the error return is reserved for
/// configuration and output-directory problems.
pub fn run(cfg: &ExperimentConfig, command: Command, opts: RunOptions) -> Result<RunOutcome> {
    cfg.validate()?;
    let out = cfg.output.clone();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let prior = if opts.resume {
        RunLedger::load(&out.join(LEDGER_FILE))?
    } else {
        RunLedger::default()
    };
    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut runner = Runner {
        cfg,
        out,
        resume: opts.resume,
        ledger: prior.clone(),
        prior,
        threads,
    };
    let mut outcome = RunOutcome::default();
    if let Some(lcc) = runner.dataset()? {
        let depth = command.main_depth();
        let mut main = None;
        let mut explanations = Vec::new();
        if depth > 0 {
            let plan = SamplingPlan {
                count: cfg.samples,
                mu_range: cfg.mu_range,
                strategies: cfg.strategies.clone(),
                master_seed: cfg.master_seed,
                label: "sample".into(),
                first_id: 0,
            };
            let pool = runner.pool(&lcc, plan, depth)?;
            if depth >= 4 {
                let jobs = cfg
                    .targets
                    .iter()
                    .map(|&t| {
                        let picks: Vec<usize> = (0..pool.ids.len()).collect();
                        pool.regression_job(t, &picks, t.slug(), format!("explain/{}", t.slug()))
                    })
                    .collect();
                explanations = cfg
                    .targets
                    .iter()
                    .zip(runner.regress("explain", jobs)?)
                    .filter_map(|(&t, n)| Some((t, n?)))
                    .collect();
            }
            main = Some(pool);
        }
        let sweep = if command.sweep() { runner.sweep(&lcc)? } else { Vec::new() };
        if command.report() {
            runner.report(&lcc, main.as_ref(), &explanations, &sweep)?;
        }
        outcome.explanations = explanations.into_iter().map(|(t, n)| (t, n.value)).collect();
        outcome.sweep = sweep.into_iter().map(|s| s.summary).collect();
    }
    outcome.ledger = runner.ledger;
    Ok(outcome)
}

/// A finished cell's parsed output.
struct Node<T> {
    value: T,
    hash: String,
    executed: bool,
}

struct MetricValue {
    value: f64,
    line: String,
}

/// One sample pool and the per-sample cells computed over it.
struct Pool {
    label: String,
    ids: Vec<u64>,
    samples: Vec<Option<Node<SampledDataset>>>,
    chars: Vec<Option<Node<CharacteristicVector>>>,
    metrics: BTreeMap<Target, Vec<Option<Node<MetricValue>>>>,
}

struct RegressionJob<'p> {
    target: Target,
    key: String,
    base: String,
    rows: Vec<(u64, &'p CharacteristicVector, f64)>,
    hash: String,
    upstream_executed: bool,
    missing: usize,
}

impl Pool {
    /// Regression over the samples at `picks` that finished both their
    /// characteristics and their metric.
    fn regression_job(&self, target: Target, picks: &[usize], key: String, base: String) -> RegressionJob<'_> {
        let metrics = self.metrics.get(&target);
        let mut rows = Vec::new();
        let mut parts = Vec::new();
        let mut upstream_executed = false;
        for &p in picks {
            let m = metrics.and_then(|m| m.get(p)).and_then(Option::as_ref);
            if let (Some(c), Some(m)) = (self.chars.get(p).and_then(Option::as_ref), m) {
                rows.push((self.ids[p], &c.value, m.value.value));
                parts.push(c.hash.clone());
                parts.push(m.hash.clone());
                upstream_executed |= c.executed || m.executed;
            }
        }
        RegressionJob {
            target,
            key,
            base,
            missing: picks.len() - rows.len(),
            hash: combine_hashes(parts.iter().map(String::as_str)),
            rows,
            upstream_executed,
        }
    }
}

struct Cell<T> {
    stage: &'static str,
    key: String,
    input_hash: String,
    upstream_executed: bool,
    /// `None` when an upstream cell did not complete.
    input: Option<T>,
}

struct Produced {
    files: Vec<(String, String)>,
    message: String,
}

impl Produced {
    fn new(files: Vec<(String, String)>) -> Self {
        Produced {
            files,
            message: String::new(),
        }
    }
}

struct Done {
    files: Vec<(String, String)>,
    hash: String,
    executed: bool,
}

fn files_hash(files: &[(String, String)]) -> String {
    combine_hashes(files.iter().flat_map(|(p, c)| [p.as_str(), c.as_str()]))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn second_line(text: &str) -> Result<&str> {
    text.lines()
        .nth(1)
        .ok_or_else(|| Error::InvalidArgument("missing data row".into()))
}

fn parse_spec(text: &str) -> Result<SampleSpec> {
    let line = second_line(text)?;
    let f: Vec<&str> = line.split(',').collect();
    let bad = || Error::InvalidArgument(format!("bad manifest row {line:?}"));
    if f.len() != 7 {
        return Err(bad());
    }
    Ok(SampleSpec {
        sample_id: f[0].parse().map_err(|_| bad())?,
        strategy: f[1].parse()?,
        mu: f[2].parse().map_err(|_| bad())?,
        seed: f[3].parse().map_err(|_| bad())?,
    })
}

fn metrics_header(k: usize) -> String {
    METRICS_HEADER.replace("@20", &format!("@{k}"))
}

fn metric_label(cfg: &ExperimentConfig) -> String {
    match cfg.metric {
        Metric::Recall => format!("Recall@{}", cfg.k),
        Metric::Ndcg => format!("nDCG@{}", cfg.k),
    }
}

fn load_dataset(cfg: &ExperimentConfig) -> Result<BipartiteGraph> {
    let mut rng = rng_from_seed(derive_seed(cfg.master_seed, "dataset", 0));
    Ok(match &cfg.dataset {
        DatasetSource::File(p) => ingest(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?,
        &DatasetSource::ScaleFree {
            users,
            items,
            interactions,
            exponent,
        } => scale_free(users, items, interactions, exponent, &mut rng),
        DatasetSource::TwoBlock => TwoBlock::default().generate(&mut rng),
    })
}

struct SweepPoint {
    summary: AlphaSummary,
    hash: String,
    executed: bool,
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    out: PathBuf,
    resume: bool,
    /// Ledger as loaded at the start of the run; reuse checks read only this.
    prior: RunLedger,
    ledger: RunLedger,
    threads: rayon::ThreadPool,
}

impl Runner<'_> {
    fn save(&self) -> Result<()> {
        write_file(&self.out.join(LEDGER_FILE), &self.ledger.to_tsv())
    }

    fn write_files(&self, files: &[(String, String)]) -> Result<()> {
        for (rel, content) in files {
            write_file(&self.out.join(rel), content)?;
        }
        Ok(())
    }

    /// A cell is reused iff resuming, it finished last time with the same
    /// input hash, nothing upstream ran in this invocation, and its outputs
    /// are still on disk unchanged.
    fn reuse<T>(&self, cell: &Cell<T>) -> Option<(Done, String)> {
        if !self.resume || cell.upstream_executed {
            return None;
        }
        let e = self.prior.get(cell.stage, &cell.key)?;
        if e.status != Status::Done || e.input_hash != cell.input_hash {
            return None;
        }
        let files = e
            .outputs
            .iter()
            .map(|p| fs::read_to_string(self.out.join(p)).ok().map(|c| (p.clone(), c)))
            .collect::<Option<Vec<_>>>()?;
        let hash = files_hash(&files);
        (hash == e.output_hash).then(|| {
            (
                Done {
                    files,
                    hash,
                    executed: false,
                },
                e.message.clone(),
            )
        })
    }

    /// Runs independent cells on the pool, then records them in order.
    fn run_cells<T: Sync>(
        &mut self,
        cells: Vec<Cell<T>>,
        compute: impl Fn(&T) -> Result<Produced> + Sync,
    ) -> Result<Vec<Option<Done>>> {
        let this = &*self;
        let results: Vec<std::result::Result<(Done, String), (Status, String)>> = self.threads.install(|| {
            cells
                .par_iter()
                .map(|cell| {
                    let Some(input) = &cell.input else {
                        return Err((Status::Skipped, "upstream cell did not complete".into()));
                    };
                    if let Some(hit) = this.reuse(cell) {
                        return Ok(hit);
                    }
                    let produced = compute(input).map_err(|e| (Status::Failed, e.to_string()))?;
                    this.write_files(&produced.files)
                        .map_err(|e| (Status::Failed, e.to_string()))?;
                    let hash = files_hash(&produced.files);
                    Ok((
                        Done {
                            files: produced.files,
                            hash,
                            executed: true,
                        },
                        produced.message,
                    ))
                })
                .collect()
        });
        let mut done = Vec::with_capacity(cells.len());
        for (cell, res) in cells.iter().zip(results) {
            let mut entry = LedgerEntry {
                stage: cell.stage.to_string(),
                key: cell.key.clone(),
                status: Status::Done,
                input_hash: cell.input_hash.clone(),
                output_hash: String::new(),
                outputs: Vec::new(),
                message: String::new(),
                executed: true,
            };
            match res {
                Ok((d, message)) => {
                    log::info!("{} {}: {}", cell.stage, cell.key, if d.executed { "done" } else { "reused" });
                    entry.output_hash = d.hash.clone();
                    entry.outputs = d.files.iter().map(|(p, _)| p.clone()).collect();
                    entry.message = message;
                    entry.executed = d.executed;
                    done.push(Some(d));
                }
                Err((status, message)) => {
                    log::warn!("{} {}: {}: {message}", cell.stage, cell.key, status.as_str());
                    entry.status = status;
                    entry.message = message;
                    done.push(None);
                }
            }
            self.ledger.record(entry);
        }
        self.save()?;
        Ok(done)
    }

    /// Parses finished cells; a cell whose files do not parse is dropped.
    fn parse_all<T: Send>(&self, done: Vec<Option<Done>>, parse: impl Fn(&Done) -> Result<T> + Sync) -> Vec<Option<Node<T>>> {
        self.threads.install(|| {
            done.into_par_iter()
                .map(|d| {
                    let d = d?;
                    match parse(&d) {
                        Ok(value) => Some(Node {
                            value,
                            hash: d.hash,
                            executed: d.executed,
                        }),
                        Err(e) => {
                            log::error!("unreadable cell output {}: {e}", d.files[0].0);
                            None
                        }
                    }
                })
                .collect()
        })
    }

    fn dataset(&mut self) -> Result<Option<Node<BipartiteGraph>>> {
        let cfg = self.cfg;
        let (source, seed) = match &cfg.dataset {
            DatasetSource::File(p) => match fs::read(p) {
                Ok(bytes) => (content_hash(&bytes), String::new()),
                Err(e) => (format!("unreadable: {e}"), String::new()),
            },
            _ => (String::new(), cfg.master_seed.to_string()),
        };
        let cell = Cell {
            stage: "dataset",
            key: "lcc".into(),
            input_hash: combine_hashes([cfg.dataset.to_string().as_str(), &source, &seed]),
            upstream_executed: false,
            input: Some(()),
        };
        let done = self.run_cells(vec![cell], |_| {
            let lcc = largest_connected_component(&load_dataset(cfg)?);
            Ok(Produced::new(vec![("dataset/lcc.tsv".into(), lcc.to_tsv())]))
        })?;
        Ok(self.parse_all(done, |d| ingest(&d.files[0].1)).pop().flatten())
    }

    fn pool(&mut self, lcc: &Node<BipartiteGraph>, plan: SamplingPlan, depth: u8) -> Result<Pool> {
        let cfg = self.cfg;
        let ids: Vec<u64> = plan.ids().collect();
        let mut pool = Pool {
            label: plan.label.clone(),
            samples: ids.iter().map(|_| None).collect(),
            chars: ids.iter().map(|_| None).collect(),
            metrics: BTreeMap::new(),
            ids: ids.clone(),
        };
        let label = pool.label.clone();

        let plan_text = format!("{:?}|{:?}|{}|{}", plan.mu_range, plan.strategies, plan.master_seed, plan.label);
        let cells = ids
            .iter()
            .map(|&id| Cell {
                stage: "sample",
                key: format!("{label}/{id}"),
                input_hash: combine_hashes([lcc.hash.as_str(), &plan_text, &id.to_string()]),
                upstream_executed: lcc.executed,
                input: Some(id),
            })
            .collect();
        let done = self.run_cells(cells, |&id| {
            let s = plan.sample_one(&lcc.value, id)?;
            let tsv = s.graph.to_tsv();
            // the manifest describes the graph as it will be read back
            let row = manifest_row(&SampledDataset {
                spec: s.spec,
                graph: ingest(&tsv)?,
            });
            let base = format!("samples/{label}/sample_{id}");
            Ok(Produced::new(vec![
                (format!("{base}.tsv"), tsv),
                (format!("{base}.csv"), format!("{MANIFEST_HEADER}\n{row}\n")),
            ]))
        })?;
        pool.samples = self.parse_all(done, |d| {
            Ok(SampledDataset {
                spec: parse_spec(&d.files[1].1)?,
                graph: ingest(&d.files[0].1)?,
            })
        });
        write_file(
            &self.out.join(format!("samples/{label}/manifest.csv")),
            &manifest_csv(pool.samples.iter().flatten().map(|n| &n.value)),
        )?;
        if depth < 2 {
            return Ok(pool);
        }

        let settings = format!("{:?}", cfg.characteristics);
        let cells = ids
            .iter()
            .zip(&pool.samples)
            .map(|(&id, s)| Cell {
                stage: "characterize",
                key: format!("{label}/{id}"),
                input_hash: combine_hashes([s.as_ref().map_or("", |s| s.hash.as_str()), &settings]),
                upstream_executed: s.as_ref().is_some_and(|s| s.executed),
                input: s.as_ref().map(|s| (id, &s.value)),
            })
            .collect();
        let done = self.run_cells(cells, |&(id, s)| {
            let v = compute_vector(&s.graph, &cfg.characteristics)?;
            Ok(Produced::new(vec![(
                format!("characteristics/{label}/sample_{id}.csv"),
                format!("{CSV_HEADER}\n{}\n", csv_row(id, &v)),
            )]))
        })?;
        pool.chars = self.parse_all(done, |d| {
            parse_csv_row(second_line(&d.files[0].1)?)
                .map(|(_, v)| v)
                .map_err(Error::InvalidArgument)
        });
        write_file(
            &self.out.join(format!("characteristics/{label}/characteristics.csv")),
            &characteristics_csv(pool.ids.iter().zip(&pool.chars).filter_map(|(&id, c)| Some((id, &c.as_ref()?.value)))),
        )?;
        if depth < 3 {
            return Ok(pool);
        }

        let mut cells = Vec::new();
        for &target in &cfg.targets {
            for (p, &id) in ids.iter().enumerate() {
                let sample = pool.samples[p].as_ref();
                let chars = pool.chars[p].as_ref();
                let (upstream, settings) = match target {
                    Target::Model(kind) => (sample, format!("{:?}|{}", cfg.model(kind), cfg.k)),
                    Target::Planted => (None, format!("{:?}", cfg.planted)),
                };
                let (hash, executed, ready) = match target {
                    Target::Model(_) => (upstream.map_or("", |s| s.hash.as_str()), upstream.is_some_and(|s| s.executed), sample.is_some()),
                    Target::Planted => (chars.map_or("", |c| c.hash.as_str()), chars.is_some_and(|c| c.executed), chars.is_some()),
                };
                cells.push(Cell {
                    stage: "train",
                    key: format!("{label}/{id}/{}", target.slug()),
                    input_hash: combine_hashes([hash, &settings, &cfg.master_seed.to_string()]),
                    upstream_executed: executed,
                    input: ready.then(|| (target, id, sample.map(|s| &s.value), chars.map(|c| &c.value))),
                });
            }
        }
        let done = self.run_cells(cells, |&(target, id, sample, chars)| {
            let seed = derive_seed(cfg.master_seed, &label, id);
            let base = format!("metrics/{label}/{}/sample_{id}", target.slug());
            match target {
                Target::Model(kind) => {
                    let s = sample.expect("model cells need a sample");
                    let split = split_dataset(&s.graph, &mut rng_from_seed(derive_seed(seed, "split", 0)))?;
                    let model = train_model(&split, &cfg.model(kind), &mut rng_from_seed(derive_seed(seed, kind.as_str(), 0)))?;
                    let eval = evaluate(&model, &split, cfg.k)?;
                    let row = MetricsRow {
                        sample_id: id,
                        model: kind,
                        recall: eval.recall,
                        ndcg: eval.ndcg,
                        epochs_trained: model.epochs_trained,
                        stopped_early: model.stopped_early,
                    };
                    let mut files = vec![(
                        format!("{base}.csv"),
                        format!("{}\n{}\n", metrics_header(cfg.k), row.to_csv_line()),
                    )];
                    if cfg.per_user_metrics {
                        files.push((format!("{base}_users.tsv"), eval.per_user_tsv(&split)));
                    }
                    if cfg.save_embeddings {
                        files.push((format!("{base}_user_embeddings.csv"), model.user_embeddings.to_csv()));
                        files.push((format!("{base}_item_embeddings.csv"), model.item_embeddings.to_csv()));
                    }
                    Ok(Produced {
                        files,
                        message: format!(
                            "{} epochs{}, {} users evaluated",
                            model.epochs_trained,
                            if model.stopped_early { " (early stop)" } else { "" },
                            eval.evaluated_users()
                        ),
                    })
                }
                Target::Planted => {
                    let v = chars.expect("planted cells need characteristics");
                    let mut y = 0.0;
                    for &(c, coef) in &cfg.planted.terms {
                        let x = v
                            .get(c)
                            .ok_or_else(|| Error::InvalidArgument(format!("{} is undefined", c.label())))?;
                        y += coef * x;
                    }
                    let noise = Normal::new(0.0, cfg.planted.noise_std)
                        .map_err(|e| Error::InvalidArgument(format!("planted noise: {e}")))?;
                    y += noise.sample(&mut rng_from_seed(derive_seed(seed, "planted", 0)));
                    Ok(Produced::new(vec![(format!("{base}.csv"), format!("{PLANTED_HEADER}\n{id},planted,{y}\n"))]))
                }
            }
        })?;
        let metric = cfg.metric;
        let mut done = done.into_iter();
        for &target in &cfg.targets {
            let chunk: Vec<Option<Done>> = done.by_ref().take(ids.len()).collect();
            let parsed = self.parse_all(chunk, |d| {
                let line = second_line(&d.files[0].1)?.to_string();
                let value = match target {
                    Target::Model(_) => {
                        let row = MetricsRow::parse(&line)?;
                        match metric {
                            Metric::Recall => row.recall,
                            Metric::Ndcg => row.ndcg,
                        }
                    }
                    Target::Planted => line
                        .rsplit(',')
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| Error::InvalidArgument(format!("bad planted row {line:?}")))?,
                };
                Ok(MetricValue { value, line })
            });
            let header = match target {
                Target::Model(_) => metrics_header(cfg.k),
                Target::Planted => PLANTED_HEADER.to_string(),
            };
            let mut csv = header + "\n";
            for m in parsed.iter().flatten() {
                csv.push_str(&m.value.line);
                csv.push('\n');
            }
            write_file(&self.out.join(format!("metrics/{label}/{}.csv", target.slug())), &csv)?;
            pool.metrics.insert(target, parsed);
        }
        Ok(pool)
    }

    /// One result per job, in job order.
    fn regress(&mut self, stage: &'static str, jobs: Vec<RegressionJob<'_>>) -> Result<Vec<Option<Node<RegressionReport>>>> {
        let cfg = self.cfg;
        let settings = format!("{}|{:?}|{:?}", cfg.standardize, cfg.rank_policy, cfg.metric);
        let cells = jobs
            .iter()
            .map(|j| Cell {
                stage,
                key: j.key.clone(),
                input_hash: combine_hashes([j.hash.as_str(), &settings, &j.missing.to_string()]),
                upstream_executed: j.upstream_executed,
                input: Some(j),
            })
            .collect();
        let done = self.run_cells(cells, |j| {
            let obs: Vec<Observation<'_>> = j
                .rows
                .iter()
                .map(|&(sample_id, vector, metric)| Observation {
                    sample_id,
                    vector,
                    metric,
                })
                .collect();
            let (x, y) = build_design(&obs, cfg.standardize)?;
            let report = fit_ols_with(&x, &y, cfg.rank_policy)?;
            Ok(Produced {
                files: vec![
                    (format!("{}.csv", j.base), report.to_csv()),
                    (format!("{}_fit.csv", j.base), report.fit_csv()),
                ],
                message: format!(
                    "{} rows used, attrition {} ({} incomplete cells, {} undefined rows)",
                    report.m,
                    j.missing + x.dropped().len(),
                    j.missing,
                    x.dropped().len()
                ),
            })
        })?;
        Ok(self.parse_all(done, |d| RegressionReport::from_csv(&d.files[0].1, &d.files[1].1)))
    }

    fn sweep(&mut self, lcc: &Node<BipartiteGraph>) -> Result<Vec<SweepPoint>> {
        let cfg = self.cfg;
        let total = cfg.rq2_samples;
        let plan = |label: &str, strategy: Strategy, first_id: u64| SamplingPlan {
            count: total,
            mu_range: cfg.mu_range,
            strategies: vec![strategy],
            master_seed: cfg.master_seed,
            label: label.into(),
            first_id,
        };
        let node = self.pool(lcc, plan("rq2-node", Strategy::NodeDropout, 0), 3)?;
        let edge = self.pool(lcc, plan("rq2-edge", Strategy::EdgeDropout, total as u64), 3)?;
        let finished = |p: &Pool| -> Vec<SampledDataset> { p.samples.iter().flatten().map(|n| n.value.clone()).collect() };
        let (node_ds, edge_ds) = (finished(&node), finished(&edge));
        let pool_hash = combine_hashes(
            node.samples
                .iter()
                .chain(&edge.samples)
                .map(|s| s.as_ref().map_or("missing", |s| s.hash.as_str())),
        );
        let pool_executed = node.samples.iter().chain(&edge.samples).flatten().any(|s| s.executed);

        let cells = cfg
            .alphas
            .iter()
            .map(|&a| Cell {
                stage: "rq2-mix",
                key: format!("alpha_{a}"),
                input_hash: combine_hashes([pool_hash.as_str(), &a.to_string(), &total.to_string()]),
                upstream_executed: pool_executed,
                input: Some(a),
            })
            .collect();
        let done = self.run_cells(cells, |&a| {
            let picked = mix_for_alpha(&node_ds, &edge_ds, a, total)?;
            let (node_samples, edge_samples) = mix_counts(a, total)?;
            let n = picked.len().max(1) as f64;
            let mean = |f: &dyn Fn(&BipartiteGraph) -> usize| picked.iter().map(|s| f(&s.graph) as f64).sum::<f64>() / n;
            let stats = AlphaSummary {
                alpha: a,
                node_samples,
                edge_samples,
                mean_users: mean(&|g| g.num_users()),
                mean_items: mean(&|g| g.num_items()),
                mean_interactions: mean(&|g| g.num_edges()),
                reports: Vec::new(),
            };
            let mut ids = String::from("sample_id\n");
            for s in &picked {
                ids.push_str(&format!("{}\n", s.spec.sample_id));
            }
            let dir = format!("rq2/alpha_{a}");
            Ok(Produced::new(vec![
                (format!("{dir}/stats.csv"), stats.stats_csv()),
                (format!("{dir}/samples.csv"), ids),
            ]))
        })?;
        let mixes = self.parse_all(done, |d| {
            let stats = AlphaSummary::parse_stats(&d.files[0].1)?;
            let ids = d.files[1]
                .1
                .lines()
                .skip(1)
                .map(|l| l.parse::<u64>().map_err(|_| Error::InvalidArgument(format!("bad sample id {l:?}"))))
                .collect::<Result<Vec<_>>>()?;
            Ok((stats, ids))
        });

        // which pool and position each sample id lives at
        let locate = |id: u64| -> Option<(&Pool, usize)> {
            [&node, &edge]
                .into_iter()
                .find_map(|p| p.ids.iter().position(|&x| x == id).map(|i| (p, i)))
        };
        let mut points = Vec::new();
        let mut jobs = Vec::new();
        for m in mixes.iter().flatten() {
            let (stats, ids) = &m.value;
            for &t in &cfg.targets {
                let mut job = RegressionJob {
                    target: t,
                    key: format!("alpha_{}/{}", stats.alpha, t.slug()),
                    base: format!("rq2/alpha_{}/{}", stats.alpha, t.slug()),
                    rows: Vec::new(),
                    hash: String::new(),
                    upstream_executed: m.executed,
                    missing: 0,
                };
                let mut parts = vec![m.hash.clone()];
                for &id in ids {
                    let Some((pool, i)) = locate(id) else {
                        job.missing += 1;
                        continue;
                    };
                    let sub = pool.regression_job(t, &[i], String::new(), String::new());
                    job.rows.extend(sub.rows);
                    job.missing += sub.missing;
                    job.upstream_executed |= sub.upstream_executed;
                    parts.push(sub.hash);
                }
                job.hash = combine_hashes(parts.iter().map(String::as_str));
                jobs.push(job);
            }
            points.push(SweepPoint {
                summary: stats.clone(),
                hash: m.hash.clone(),
                executed: m.executed,
            });
        }
        let slots: Vec<(usize, Target)> = jobs
            .iter()
            .map(|j| {
                let alpha = j.key.split('/').next().unwrap_or_default();
                (points.iter().position(|p| format!("alpha_{}", p.summary.alpha) == alpha).unwrap_or(0), j.target)
            })
            .collect();
        let reports = self.regress("rq2", jobs)?;
        for ((slot, t), n) in slots.into_iter().zip(reports) {
            let (Some(n), Some(p)) = (n, points.get_mut(slot)) else { continue };
            p.hash = combine_hashes([p.hash.as_str(), &n.hash]);
            p.executed |= n.executed;
            p.summary.reports.push((t, n.value));
        }
        Ok(points)
    }

    fn report(
        &mut self,
        lcc: &Node<BipartiteGraph>,
        main: Option<&Pool>,
        explanations: &[(Target, Node<RegressionReport>)],
        sweep: &[SweepPoint],
    ) -> Result<()> {
        let cfg = self.cfg;
        let vectors: Vec<CharacteristicVector> = main
            .map(|p| p.chars.iter().flatten().map(|c| c.value.clone()).collect())
            .unwrap_or_default();
        let mut parts = vec![lcc.hash.clone(), metric_label(cfg)];
        let mut upstream_executed = lcc.executed;
        for (t, n) in explanations {
            parts.push(format!("{t}:{}", n.hash));
            upstream_executed |= n.executed;
        }
        if let Some(p) = main {
            for c in p.chars.iter().flatten() {
                parts.push(c.hash.clone());
                upstream_executed |= c.executed;
            }
        }
        for s in sweep {
            parts.push(s.hash.clone());
            upstream_executed |= s.executed;
        }
        let main_reports: Vec<(Target, RegressionReport)> =
            explanations.iter().map(|(t, n)| (*t, n.value.clone())).collect();
        let summaries: Vec<AlphaSummary> = sweep.iter().map(|s| s.summary.clone()).collect();
        let cell = Cell {
            stage: "report",
            key: "summary".into(),
            input_hash: combine_hashes(parts.iter().map(String::as_str)),
            upstream_executed,
            input: Some(()),
        };
        self.run_cells(vec![cell], |_| {
            if main_reports.is_empty() && summaries.iter().all(|s| s.reports.is_empty()) {
                return Err(Error::InvalidArgument("no completed regression to report".into()));
            }
            let mut files = vec![(
                "report/report.md".to_string(),
                render_markdown(&metric_label(cfg), &main_reports, &summaries),
            )];
            let columns = |rs: &'_ [(Target, RegressionReport)]| -> String {
                let labelled: Vec<(String, &RegressionReport)> = rs.iter().map(|(t, r)| (t.name().to_string(), r)).collect();
                summary_csv(&labelled)
            };
            if !main_reports.is_empty() {
                files.push(("report/explanatory.csv".into(), columns(&main_reports)));
            }
            for s in summaries.iter().filter(|s| !s.reports.is_empty()) {
                files.push((format!("report/alpha_{}.csv", s.alpha), columns(&s.reports)));
            }
            if vectors.len() >= 2 {
                match pearson_matrix(&vectors) {
                    Ok(m) => files.push(("report/correlation.csv".into(), m.to_csv())),
                    Err(e) => log::warn!("correlation matrix omitted: {e}"),
                }
            }
            for scope in [DegreeScope::User, DegreeScope::Item, DegreeScope::All] {
                match degree_distribution_fit(&lcc.value, scope) {
                    Ok(fit) => files.push((format!("report/degree_{}.tsv", scope.as_str()), fit.to_tsv())),
                    Err(e) => log::warn!("{} degree distribution omitted: {e}", scope.as_str()),
                }
            }
            Ok(Produced::new(files))
        })?;
        Ok(())
    }
}
