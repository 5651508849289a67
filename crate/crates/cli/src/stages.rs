//! Pipeline stages. Each one reads the artifacts of the stages before it
//! and writes its own under the output directory.

use std::collections::BTreeSet;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context as _};
use kgexplain::embedding::{EmbeddingModel, LinkPredictor};
use kgexplain::eval::{split_context, weighted_fidelity, FidelityRecord};
use kgexplain::explain::{
    binarize, build_explanation, calibrate_threshold, surrogate_labels, ExplainConfig, Explanation,
};
use kgexplain::kg::{parse_tsv, Dataset, Fact, PredicateId};
use kgexplain::rules::{mine as mine_rules, AugmentedGraph, RuleMode};
use kgexplain::scope::{derive_seed, global_context, instance_context, select_k, Context, TEST_FRACTION};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{json_files, predicate_stem, read_json, require, write_json, write_text, Layout};
use crate::config::{Config, ConfigError, ScopeKind};

/// Salts separating the random streams of the stages.
const CONTEXT_SALT: u64 = 0x100;
const SPLIT_SALT: u64 = 0x200;
const LOCAL_SALT: u64 = 0x300;
const INSTANCE_SALT: u64 = 0x400;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredicateCount {
    pub predicate: String,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub entities: usize,
    pub predicates: usize,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
    pub per_predicate: Vec<PredicateCount>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub kind: String,
    pub dim: usize,
    pub norm: u8,
    pub seed: u64,
    pub epoch_losses: Vec<f64>,
}

/// The context built for one predicate by `mine`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredContext {
    pub predicate: String,
    pub predicate_id: PredicateId,
    pub full: Context,
    /// Absent when the context is too small to split.
    pub split: Option<(Context, Context)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextEntry {
    pub predicate: String,
    pub stem: String,
    pub facts: usize,
    pub rules: Option<usize>,
    pub note: Option<String>,
}

/// All explanations of one predicate in one scope and rule language.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredicateExplanations {
    pub predicate: String,
    pub scope: ScopeKind,
    pub mode: RuleMode,
    pub selected_k: Option<usize>,
    pub k_scores: Vec<(usize, Option<f64>)>,
    pub explanations: Vec<Explanation>,
    /// Why nothing was explained.
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredicateFidelity {
    pub predicate: String,
    pub fidelity: Option<FidelityRecord>,
    pub explanations: usize,
    pub covered_explanations: usize,
    pub rules: usize,
    pub attributing_rules: usize,
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub model: String,
    pub scope: ScopeKind,
    pub mode: RuleMode,
    /// Size-weighted over every explanation with a held-out record.
    pub overall: Option<FidelityRecord>,
    pub predicates: usize,
    pub covered_predicates: usize,
    pub rules: usize,
    pub attributing_rules: usize,
    pub per_predicate: Vec<PredicateFidelity>,
}

fn read_split(path: Option<&Path>) -> anyhow::Result<Vec<[String; 3]>> {
    let Some(path) = path else { return Ok(Vec::new()) };
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_tsv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn tsv(rows: &[[String; 3]]) -> String {
    rows.iter().map(|[s, p, o]| format!("{s}\t{p}\t{o}\n")).collect()
}

/// Copies the configured splits into the output directory and records
/// per-predicate counts.
pub fn ingest(cfg: &Config) -> anyhow::Result<DataSummary> {
    cfg.validate(true)?;
    let layout = Layout::new(&cfg.output.dir);
    let train = read_split(cfg.data.train.as_deref())?;
    let valid = read_split(cfg.data.valid.as_deref())?;
    let test = read_split(cfg.data.test.as_deref())?;
    let data = Dataset::from_labels(&train, &valid, &test)?;
    for (split, rows) in [("train", &train), ("valid", &valid), ("test", &test)] {
        write_text(&layout.data_file(split), &tsv(rows))?;
    }
    let v = data.vocab();
    let count = |facts: &[Fact], p: PredicateId| facts.iter().filter(|f| f.p == p).count();
    let summary = DataSummary {
        entities: v.entities.len(),
        predicates: v.predicates.len(),
        train: data.train.len(),
        valid: data.valid.len(),
        test: data.test.len(),
        per_predicate: data
            .known
            .predicates()
            .map(|p| PredicateCount {
                predicate: v.predicate_label(p).to_owned(),
                train: data.train.predicate_count(p),
                valid: count(&data.valid, p),
                test: count(&data.test, p),
            })
            .collect(),
    };
    write_json(&layout.data_summary(), &summary)?;
    log::info!("ingested {} entities, {} predicates", summary.entities, summary.predicates);
    Ok(summary)
}

/// Trains the black-box embedding model on the training split.
pub fn train(cfg: &Config) -> anyhow::Result<TrainLog> {
    cfg.validate(false)?;
    let layout = Layout::new(&cfg.output.dir);
    let data = layout.load_dataset()?;
    let m = &cfg.model;
    let seed = m.seed.unwrap_or_default();
    let mut model = EmbeddingModel::init_for(m.kind, m.dim, m.norm, &data.train, seed)?;
    let report = model.train(&data.train, &cfg.train_config())?;
    let path = layout.model();
    let mut buf = Vec::new();
    model.write_checkpoint(&mut buf)?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))?;
    let log = TrainLog { kind: m.kind.to_string(), dim: m.dim, norm: m.norm, seed, epoch_losses: report.epoch_losses };
    write_json(&layout.train_log(), &log)?;
    log::info!("trained {} for {} epochs", log.kind, log.epoch_losses.len());
    Ok(log)
}

fn load_model(layout: &Layout) -> anyhow::Result<EmbeddingModel> {
    let path = layout.model();
    require(&path, "train")?;
    let file = fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
    EmbeddingModel::read_checkpoint(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

/// Predicates with test facts, restricted to the configured labels.
fn target_predicates(cfg: &Config, data: &Dataset) -> anyhow::Result<Vec<PredicateId>> {
    let v = data.vocab();
    let with_tests: BTreeSet<PredicateId> = data.test.iter().map(|f| f.p).collect();
    if cfg.explain.predicates.is_empty() {
        return Ok(with_tests.into_iter().collect());
    }
    let mut problems = Vec::new();
    let mut out = BTreeSet::new();
    for label in &cfg.explain.predicates {
        match v.predicate(label) {
            Some(p) if with_tests.contains(&p) => {
                out.insert(p);
            }
            Some(_) => problems.push(format!("predicate {label} has no test facts")),
            None => problems.push(format!("unknown predicate {label}")),
        }
    }
    if !problems.is_empty() {
        return Err(ConfigError(problems).into());
    }
    Ok(out.into_iter().collect())
}

fn context_index_path(layout: &Layout) -> std::path::PathBuf {
    layout.contexts_dir().join("index.json")
}

/// Builds and splits the global context of every target predicate, then
/// mines surrogate rules on each training split for inspection.
pub fn mine(cfg: &Config) -> anyhow::Result<Vec<ContextEntry>> {
    cfg.validate(false)?;
    let layout = Layout::new(&cfg.output.dir);
    let data = layout.load_dataset()?;
    let model = load_model(&layout)?;
    let targets = target_predicates(cfg, &data)?;
    let seed = cfg.explain_seed();
    let miner = cfg.miner_config();
    let v = data.vocab();

    let results: Vec<anyhow::Result<(ContextEntry, StoredContext, Option<String>)>> = targets
        .par_iter()
        .map(|&p| {
            let label = v.predicate_label(p).to_owned();
            let stem = predicate_stem(p, &label);
            let truths: Vec<Fact> = data.test.iter().copied().filter(|f| f.p == p).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, CONTEXT_SALT + p.0 as u64));
            let full = global_context(&data.known, p, &truths, &mut rng)?;
            let split = split_context(&full, TEST_FRACTION, derive_seed(seed, SPLIT_SALT + p.0 as u64));
            let mut entry = ContextEntry { predicate: label.clone(), stem, facts: full.len(), rules: None, note: None };
            let mut rules_text = None;
            match &split {
                Ok((train, _)) => match surrogate_rule_lines(&model, &data, train, cfg.explain.threshold, &miner) {
                    Ok(lines) => {
                        entry.rules = Some(lines.len() - 1);
                        rules_text = Some(lines.join("\n") + "\n");
                    }
                    Err(e) => entry.note = Some(e.to_string()),
                },
                Err(e) => entry.note = Some(e.to_string()),
            }
            let stored = StoredContext { predicate: label, predicate_id: p, full, split: split.ok() };
            Ok((entry, stored, rules_text))
        })
        .collect();

    let mut index = Vec::new();
    for r in results {
        let (entry, stored, rules_text) = r?;
        write_json(&layout.context(&entry.stem), &stored)?;
        let mut csv = Vec::new();
        stored.full.write_csv(&data.known, &mut csv)?;
        write_text(&layout.context_csv(&entry.stem), &String::from_utf8(csv)?)?;
        if let Some(text) = rules_text {
            write_text(&layout.rules(miner.mode, &entry.stem), &text)?;
        }
        if let Some(note) = &entry.note {
            log::warn!("{}: {note}", entry.predicate);
        }
        index.push(entry);
    }
    write_json(&context_index_path(&layout), &index)?;
    Ok(index)
}

/// Calibrates, binarizes and mines one training split; the first line
/// records the threshold.
fn surrogate_rule_lines(
    f: &dyn LinkPredictor,
    data: &Dataset,
    train: &Context,
    threshold: Option<f64>,
    miner: &kgexplain::rules::MinerConfig,
) -> kgexplain::Result<Vec<String>> {
    let threshold = match threshold {
        Some(t) => t,
        None => calibrate_threshold(&scores(f, train), &labels(train))?,
    };
    let ann = binarize(f, train, threshold);
    let (pos, neg) = surrogate_labels(data.vocab().predicate_label(train.predicate));
    let mut g = AugmentedGraph::new(&data.train);
    g.add_head(pos, ann.pairs(true), ann.pairs(false))?;
    g.add_head(neg, ann.pairs(false), ann.pairs(true))?;
    let mined = mine_rules(&g, miner)?;
    let mut lines = vec![format!("# threshold={threshold}")];
    lines.extend(mined.iter().map(|m| m.line(&g)));
    Ok(lines)
}

fn scores(f: &dyn LinkPredictor, ctx: &Context) -> Vec<f64> {
    ctx.facts.iter().map(|lf| f.score(&lf.fact)).collect()
}

fn labels(ctx: &Context) -> Vec<bool> {
    ctx.facts.iter().map(|lf| lf.label).collect()
}

fn load_contexts(layout: &Layout) -> anyhow::Result<Vec<StoredContext>> {
    let index: Vec<ContextEntry> = read_json(&context_index_path(layout), "mine")?;
    index.iter().map(|e| read_json(&layout.context(&e.stem), "mine")).collect()
}

/// Explains every mined context in the configured scope.
pub fn explain(cfg: &Config) -> anyhow::Result<Vec<PredicateExplanations>> {
    cfg.validate(false)?;
    let layout = Layout::new(&cfg.output.dir);
    let data = layout.load_dataset()?;
    let model = load_model(&layout)?;
    let contexts = load_contexts(&layout)?;
    let wanted: BTreeSet<String> = cfg.explain.predicates.iter().cloned().collect();
    let contexts: Vec<StoredContext> =
        contexts.into_iter().filter(|c| wanted.is_empty() || wanted.contains(&c.predicate)).collect();
    let scope = cfg.explain.scope;
    let mode = cfg.mining.mode;
    let ecfg = cfg.explain_config();

    let results: Vec<(String, kgexplain::Result<PredicateExplanations>)> = contexts
        .par_iter()
        .map(|c| (c.predicate.clone(), explain_one(cfg, &data, &model, c, &ecfg)))
        .collect();

    let dir = layout.explanations_dir(scope, mode);
    if dir.exists() {
        fs::remove_dir_all(&dir).with_context(|| format!("clearing {}", dir.display()))?;
    }
    let failures = results.iter().filter(|(_, r)| r.is_err()).count();
    if failures > 0 && failures == results.len() {
        let (label, err) = results.into_iter().find_map(|(l, r)| r.err().map(|e| (l, e))).expect("a failure");
        return Err(anyhow::Error::new(err).context(format!("explaining {label}")));
    }
    let mut out = Vec::new();
    for ((label, r), c) in results.into_iter().zip(&contexts) {
        let pe = match r {
            Ok(pe) => pe,
            Err(e) if e.class() == kgexplain::ErrorClass::Usage => return Err(e.into()),
            Err(e) => {
                log::warn!("{label}: {e}");
                PredicateExplanations {
                    predicate: label,
                    scope,
                    mode,
                    selected_k: None,
                    k_scores: Vec::new(),
                    explanations: Vec::new(),
                    skipped: Some(e.to_string()),
                }
            }
        };
        write_json(&dir.join(format!("{}.json", predicate_stem(c.predicate_id, &c.predicate))), &pe)?;
        out.push(pe);
    }
    Ok(out)
}

fn explain_one(
    cfg: &Config,
    data: &Dataset,
    model: &EmbeddingModel,
    c: &StoredContext,
    ecfg: &ExplainConfig,
) -> kgexplain::Result<PredicateExplanations> {
    let seed = cfg.explain_seed();
    let p = c.predicate_id.0 as u64;
    let mut out = PredicateExplanations {
        predicate: c.predicate.clone(),
        scope: cfg.explain.scope,
        mode: cfg.mining.mode,
        selected_k: None,
        k_scores: Vec::new(),
        explanations: Vec::new(),
        skipped: None,
    };
    match cfg.explain.scope {
        ScopeKind::Global => match &c.split {
            Some((train, test)) => out.explanations.push(build_explanation(model, data, train, test, ecfg)?),
            None => out.skipped = Some("context too small to split".into()),
        },
        ScopeKind::Local => {
            let sel = select_k(data, &c.full, model, model, &cfg.local_config(), ecfg, derive_seed(seed, LOCAL_SALT + p))?;
            out.selected_k = Some(sel.k);
            out.k_scores = sel.scores;
            out.explanations = sel.explanations;
        }
        ScopeKind::Instance => {
            // Instance contexts are too small to calibrate on; they share the
            // threshold of the predicate's training split.
            let mut ecfg = ecfg.clone();
            if ecfg.threshold.is_none() {
                let base = c.split.as_ref().map_or(&c.full, |(train, _)| train);
                ecfg.threshold = Some(calibrate_threshold(&scores(model, base), &labels(base))?);
            }
            let targets: BTreeSet<Fact> = c.full.true_facts().into_iter().collect();
            for (i, target) in targets.iter().take(cfg.explain.max_instances).enumerate() {
                let ic = instance_context(&c.full, target)?;
                let salt = derive_seed(seed, INSTANCE_SALT + p);
                let (train, test) = split_context(&ic, TEST_FRACTION, derive_seed(salt, i as u64))
                    .unwrap_or_else(|_| (ic.clone(), ic.clone_empty()));
                out.explanations.push(build_explanation(model, data, &train, &test, &ecfg)?);
            }
        }
    }
    Ok(out)
}

/// Aggregates the explanation files of one scope and rule language.
pub fn evaluate(cfg: &Config) -> anyhow::Result<Evaluation> {
    let layout = Layout::new(&cfg.output.dir);
    let log: TrainLog = read_json(&layout.train_log(), "train")?;
    let (scope, mode) = (cfg.explain.scope, cfg.mining.mode);
    let files = json_files(&layout.explanations_dir(scope, mode), "explain")?;
    if files.is_empty() {
        bail!(crate::artifacts::MissingArtifact { path: layout.explanations_dir(scope, mode), command: "explain" });
    }
    let mut all_records = Vec::new();
    let mut per_predicate = Vec::new();
    for path in &files {
        let pe: PredicateExplanations = read_json(path, "explain")?;
        let records: Vec<FidelityRecord> = pe.explanations.iter().filter_map(|e| e.fidelity.clone()).collect();
        all_records.extend(records.iter().cloned());
        per_predicate.push(PredicateFidelity {
            predicate: pe.predicate.clone(),
            fidelity: if records.is_empty() { None } else { Some(weighted_fidelity(&records)?) },
            explanations: pe.explanations.len(),
            covered_explanations: pe.explanations.iter().filter(|e| e.covered).count(),
            rules: pe.explanations.iter().map(|e| e.rules.len()).sum(),
            attributing_rules: pe.explanations.iter().map(|e| e.attributing_rules()).sum(),
            skipped: pe.skipped.clone(),
        });
    }
    let eval = Evaluation {
        model: log.kind,
        scope,
        mode,
        overall: if all_records.is_empty() { None } else { Some(weighted_fidelity(&all_records)?) },
        predicates: per_predicate.len(),
        covered_predicates: per_predicate.iter().filter(|p| p.covered_explanations > 0).count(),
        rules: per_predicate.iter().map(|p| p.rules).sum(),
        attributing_rules: per_predicate.iter().map(|p| p.attributing_rules).sum(),
        per_predicate,
    };
    write_json(&layout.fidelity(scope, mode), &eval)?;
    Ok(eval)
}
