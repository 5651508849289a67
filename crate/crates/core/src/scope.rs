//! Explanation contexts: global, cluster-local and per-instance.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::Write;

use kodama::{linkage, Method};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingModel, LinkPredictor};
use crate::eval::{split_context, weighted_fidelity, FidelityRecord};
use crate::explain::{build_explanation, calibrate_threshold, ExplainConfig, Explanation};
use crate::kg::{Dataset, Fact, KnowledgeGraph, PredicateId, Side};
use crate::{Error, Result};

/// Held-out share used when splitting contexts.
pub const TEST_FRACTION: f64 = 0.3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Scope {
    Global,
    Local { cluster: usize, k: usize },
    Instance { target: Fact },
}

impl Scope {
    pub fn tag(&self) -> &'static str {
        match self {
            Scope::Global => "global",
            Scope::Local { .. } => "local",
            Scope::Instance { .. } => "instance",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Global => f.write_str("global"),
            Scope::Local { cluster, k } => write!(f, "local-{cluster}-of-{k}"),
            Scope::Instance { target } => write!(f, "instance-{}-{}-{}", target.s.0, target.p.0, target.o.0),
        }
    }
}

/// A context fact. `group` ties corruptions to the true fact they came
/// from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledFact {
    pub fact: Fact,
    pub label: bool,
    pub group: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub predicate: PredicateId,
    pub facts: Vec<LabeledFact>,
    pub scope: Scope,
}

impl Context {
    /// Same predicate and scope, no facts.
    pub fn clone_empty(&self) -> Context {
        Context { predicate: self.predicate, facts: Vec::new(), scope: self.scope.clone() }
    }

    pub fn true_facts(&self) -> Vec<Fact> {
        self.facts.iter().filter(|f| f.label).map(|f| f.fact).collect()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// `subject,predicate,object,label,scope` rows with a header.
    pub fn write_csv<W: Write>(&self, kg: &KnowledgeGraph, mut w: W) -> Result<()> {
        writeln!(w, "subject,predicate,object,label,scope")?;
        let v = kg.vocab();
        for lf in &self.facts {
            writeln!(
                w,
                "{},{},{},{},{}",
                csv_field(v.entity_label(lf.fact.s)),
                csv_field(v.predicate_label(lf.fact.p)),
                csv_field(v.entity_label(lf.fact.o)),
                if lf.label { 1 } else { -1 },
                self.scope
            )?;
        }
        Ok(())
    }
}

/// Quotes a CSV field when it holds a delimiter, quote or line break.
fn csv_field(s: &str) -> std::borrow::Cow<'_, str> {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\"")).into()
    } else {
        s.into()
    }
}

/// True facts plus one subject and one object corruption each, drawn from
/// the predicate domains of `kg` and avoiding its positives.
pub fn global_context<R: Rng + ?Sized>(
    kg: &KnowledgeGraph,
    p: PredicateId,
    true_facts: &[Fact],
    rng: &mut R,
) -> Result<Context> {
    corrupted_context(kg, p, true_facts, Scope::Global, rng)
}

fn corrupted_context<R: Rng + ?Sized>(
    kg: &KnowledgeGraph,
    p: PredicateId,
    true_facts: &[Fact],
    scope: Scope,
    rng: &mut R,
) -> Result<Context> {
    if let Some(f) = true_facts.iter().find(|f| f.p != p) {
        return Err(Error::InvalidArgument(format!(
            "{} is not a {} fact",
            kg.vocab().display_fact(f),
            kg.vocab().predicate_label(p)
        )));
    }
    let truths: BTreeSet<Fact> = true_facts.iter().copied().collect();
    let mut taken: HashSet<Fact> = truths.iter().copied().collect();
    let mut facts = Vec::with_capacity(3 * truths.len());
    for (group, &t) in truths.iter().enumerate() {
        facts.push(LabeledFact { fact: t, label: true, group });
        for side in [Side::Subject, Side::Object] {
            match kg.corrupt_side(&t, side, rng, &|c| taken.contains(c))? {
                Some(c) => {
                    taken.insert(c);
                    facts.push(LabeledFact { fact: c, label: false, group });
                }
                None => log::debug!("no {side:?} corruption for {}", kg.vocab().display_fact(&t)),
            }
        }
    }
    Ok(Context { predicate: p, facts, scope })
}

/// Agglomeration criterion for local contexts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Ward,
    Complete,
    Average,
}

impl Linkage {
    fn method(self) -> Method {
        match self {
            Linkage::Ward => Method::Ward,
            Linkage::Complete => Method::Complete,
            Linkage::Average => Method::Average,
        }
    }
}

/// Metric maximized when choosing the number of local clusters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMetric {
    #[default]
    RocAuc,
    /// Mean of subject and object MRR.
    Mrr,
}

/// Settings of the local scope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub linkage: Linkage,
    pub metric: SelectionMetric,
}

impl Default for LocalConfig {
    fn default() -> Self {
        LocalConfig { k_min: 2, k_max: 6, linkage: Linkage::Ward, metric: SelectionMetric::RocAuc }
    }
}

/// Ward clustering of `points` cut at `k` clusters.
pub fn ward_clusters(points: &[Vec<f64>], k: usize) -> Result<Vec<usize>> {
    cluster_points(points, k, Linkage::Ward)
}

/// Agglomerative clustering of `points` under Euclidean distance, cut at
/// `k` clusters. Labels are numbered by first appearance.
pub fn cluster_points(points: &[Vec<f64>], k: usize, linkage_kind: Linkage) -> Result<Vec<usize>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("cannot cut {n} points into {k} clusters")));
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    if n > 1 && k < n {
        let mut condensed = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n - 1 {
            for j in i + 1..n {
                let d: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum();
                condensed.push(d.sqrt());
            }
        }
        let dend = linkage(&mut condensed, n, linkage_kind.method());
        // dendrogram ids: leaves 0..n, then n + step index
        let mut rep: Vec<usize> = (0..n).collect();
        for step in dend.steps().iter().take(n - k) {
            let (a, b) = (find(&mut parent, rep[step.cluster1]), find(&mut parent, rep[step.cluster2]));
            let root = a.min(b);
            parent[a.max(b)] = root;
            rep.push(root);
        }
    }
    let mut ids = std::collections::HashMap::new();
    Ok((0..n)
        .map(|i| {
            let r = find(&mut parent, i);
            let next = ids.len();
            *ids.entry(r).or_insert(next)
        })
        .collect())
}

/// Partitions the true facts of `ctx` by clustering their pair vectors and
/// re-corrupts each cluster. Facts are sorted before linkage,
/// so the partition does not depend on input order.
pub fn local_contexts<R: Rng + ?Sized>(
    ctx: &Context,
    model: &EmbeddingModel,
    k: usize,
    linkage_kind: Linkage,
    kg: &KnowledgeGraph,
    rng: &mut R,
) -> Result<Vec<Context>> {
    let truths: Vec<Fact> = ctx.true_facts().into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    if k < 2 || k > truths.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 2..={} for this context",
            truths.len()
        )));
    }
    let points: Vec<Vec<f64>> = truths.iter().map(|f| model.pair_vector(f.s, f.o)).collect();
    let labels = cluster_points(&points, k, linkage_kind)?;
    (0..k)
        .map(|c| {
            let members: Vec<Fact> = truths.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(f, _)| *f).collect();
            corrupted_context(kg, ctx.predicate, &members, Scope::Local { cluster: c, k }, rng)
        })
        .collect()
}

/// Context facts sharing the subject or the object of `target`, which must
/// belong to the context.
pub fn instance_context(ctx: &Context, target: &Fact) -> Result<Context> {
    if !ctx.facts.iter().any(|lf| lf.fact == *target) {
        return Err(Error::InvalidArgument("target fact is not in the context".into()));
    }
    Ok(Context {
        predicate: ctx.predicate,
        facts: ctx
            .facts
            .iter()
            .filter(|lf| lf.fact.s == target.s || lf.fact.o == target.o)
            .cloned()
            .collect(),
        scope: Scope::Instance { target: *target },
    })
}

/// Outcome of a sweep over cluster counts.
#[derive(Clone, Debug)]
pub struct KSelection {
    pub k: usize,
    /// Weighted held-out selection metric per k, `None` when nothing was
    /// evaluable.
    pub scores: Vec<(usize, Option<f64>)>,
    pub explanations: Vec<Explanation>,
    pub fidelity: FidelityRecord,
}

/// Derives a stream seed from a base seed and a label.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Explains each cluster of a k-way split for every k in the configured
/// range and keeps the k with the best size-weighted held-out metric
/// (smallest k on ties). Under ROC-AUC, clusters with no rules but an
/// evaluable test split count as 0.5. Without a fixed threshold in `cfg`,
/// one is calibrated on the whole context and shared by all clusters.
pub fn select_k(
    data: &Dataset,
    ctx: &Context,
    model: &EmbeddingModel,
    f: &dyn LinkPredictor,
    local: &LocalConfig,
    cfg: &ExplainConfig,
    seed: u64,
) -> Result<KSelection> {
    let n_true = ctx.facts.iter().filter(|lf| lf.label).count();
    let lo = local.k_min.max(2);
    let hi = local.k_max.min(n_true);
    if lo > hi {
        return Err(Error::InsufficientData(format!("{n_true} true facts cannot form {lo} clusters")));
    }
    let mut cfg = cfg.clone();
    if cfg.threshold.is_none() {
        let scores: Vec<f64> = ctx.facts.iter().map(|lf| f.score(&lf.fact)).collect();
        let labels: Vec<bool> = ctx.facts.iter().map(|lf| lf.label).collect();
        cfg.threshold = Some(calibrate_threshold(&scores, &labels)?);
    }
    let mut best: Option<(f64, usize, Vec<Explanation>, FidelityRecord)> = None;
    let mut scores = Vec::new();
    for k in lo..=hi {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64));
        let clusters = local_contexts(ctx, model, k, local.linkage, &data.known, &mut rng)?;
        let mut records = Vec::new();
        let mut expls = Vec::new();
        for (c, cluster) in clusters.iter().enumerate() {
            let Ok((train, test)) = split_context(cluster, TEST_FRACTION, derive_seed(seed, (k * 100 + c) as u64)) else {
                log::debug!("k={k} cluster {c}: too small to split");
                continue;
            };
            let expl = build_explanation(f, data, &train, &test, &cfg)?;
            match &expl.fidelity {
                Some(rec) if rec.roc_auc.is_some() || (local.metric == SelectionMetric::Mrr && rec.s_mrr.is_some()) => {
                    records.push(rec.clone())
                }
                _ if !expl.covered => {
                    let verdicts: BTreeSet<bool> = test
                        .facts
                        .iter()
                        .map(|lf| f.score(&lf.fact) >= cfg.threshold.unwrap_or_default())
                        .collect();
                    if verdicts.len() == 2 {
                        records.push(FidelityRecord {
                            roc_auc: Some(0.5),
                            s_mrr: None,
                            o_mrr: None,
                            size: test.facts.len(),
                            scope: "local".into(),
                        });
                    }
                }
                _ => {}
            }
            expls.push(expl);
        }
        let combined = if records.is_empty() { None } else { Some(weighted_fidelity(&records)?) };
        let value = combined.as_ref().and_then(|r| match local.metric {
            SelectionMetric::RocAuc => r.roc_auc,
            SelectionMetric::Mrr => r.s_mrr.zip(r.o_mrr).map(|(s, o)| (s + o) / 2.0),
        });
        log::info!("k={k}: weighted {:?} {value:?}", local.metric);
        scores.push((k, value));
        if let (Some(a), Some(rec)) = (value, combined) {
            if best.as_ref().is_none_or(|(b, ..)| a > *b) {
                best = Some((a, k, expls, rec));
            }
        }
    }
    let (_, k, explanations, fidelity) =
        best.ok_or_else(|| Error::InsufficientData("no k produced an evaluable local explanation".into()))?;
    Ok(KSelection { k, scores, explanations, fidelity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{ingest_triples, EntityId};

    fn kg_with(n: usize) -> KnowledgeGraph {
        let mut tsv = String::new();
        for i in 0..n {
            tsv.push_str(&format!("s{i}\tp\to{i}\n"));
        }
        ingest_triples(tsv.as_bytes()).unwrap()
    }

    #[test]
    fn global_context_sizes() {
        let kg = kg_with(10);
        let p = kg.vocab().predicate("p").unwrap();
        let truths: Vec<Fact> = kg.positives().copied().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ctx = global_context(&kg, p, &truths, &mut rng).unwrap();
        assert_eq!(ctx.len(), 30);
        assert!(ctx.facts.iter().all(|lf| kg.in_potential_set(&lf.fact)));
        let again = global_context(&kg, p, &truths, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(ctx, again);
        let distinct: HashSet<Fact> = ctx.facts.iter().map(|lf| lf.fact).collect();
        assert_eq!(distinct.len(), 30);
    }

    #[test]
    fn single_subject_domain_with_saturated_objects() {
        let mut tsv = String::new();
        for i in 0..10 {
            tsv.push_str(&format!("s\tp\to{i}\n"));
        }
        let kg = ingest_triples(tsv.as_bytes()).unwrap();
        let p = kg.vocab().predicate("p").unwrap();
        let truths: Vec<Fact> = kg.pairs_of(p).iter().map(|&(s, o)| Fact::new(s, p, o)).collect();
        let ctx = global_context(&kg, p, &truths, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        // with one subject every pair of the potential set is already a positive
        assert_eq!(ctx.len(), 10);
    }

    #[test]
    fn instance_context_examples() {
        let p = PredicateId(0);
        let e = |i| EntityId(i);
        let lf = |s, o, g| LabeledFact { fact: Fact::new(e(s), p, e(o)), label: true, group: g };
        let ctx = Context { predicate: p, facts: vec![lf(0, 1, 0), lf(0, 2, 1), lf(3, 4, 2)], scope: Scope::Global };
        let a = Fact::new(e(0), p, e(1));
        let got = instance_context(&ctx, &a).unwrap();
        assert_eq!(got.facts.len(), 2);
        let lone = instance_context(&ctx, &Fact::new(e(3), p, e(4))).unwrap();
        assert_eq!(lone.facts.len(), 1);
        let mut ctx2 = ctx.clone();
        ctx2.facts.push(lf(3, 1, 3));
        assert_eq!(instance_context(&ctx2, &a).unwrap().facts.len(), 3);
        assert!(instance_context(&ctx, &Fact::new(e(9), p, e(9))).is_err());
    }

    #[test]
    fn ward_cut_and_singletons() {
        let pts = vec![vec![0.0], vec![0.1], vec![10.0], vec![10.2], vec![0.05]];
        assert_eq!(ward_clusters(&pts, 2).unwrap(), vec![0, 0, 1, 1, 0]);
        assert_eq!(ward_clusters(&pts, 5).unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(ward_clusters(&pts, 1).unwrap(), vec![0; 5]);
        assert!(ward_clusters(&pts, 6).is_err());
    }

    #[test]
    fn csv_fields_are_quoted_when_needed() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 2), derive_seed(1, 3));
        assert_eq!(derive_seed(5, 5), derive_seed(5, 5));
    }

    fn regimes(n: usize) -> (Dataset, EmbeddingModel, Context) {
        let (t, model) = crate::synth::two_regimes(3, n, 8, 0.5).unwrap();
        let data = t.dataset().unwrap();
        let p = data.vocab().predicate("target").unwrap();
        let truths: Vec<Fact> = data.test.iter().copied().filter(|f| f.p == p).collect();
        let ctx = global_context(&data.known, p, &truths, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        (data, model, ctx)
    }

    #[test]
    fn two_regimes_select_two_clusters() {
        let (data, model, ctx) = regimes(20);
        let f = |x: &Fact| model.score(x);
        let cfg = ExplainConfig::default();
        let a = select_k(&data, &ctx, &model, &f, &LocalConfig::default(), &cfg, 4).unwrap();
        assert_eq!(a.k, 2);
        assert_eq!(a.scores.len(), 5);
        let b = select_k(&data, &ctx, &model, &f, &LocalConfig::default(), &cfg, 4).unwrap();
        assert_eq!(a.scores, b.scores);
        assert_eq!(a.explanations, b.explanations);
    }

    #[test]
    fn k_range_truncates_to_available_truths() {
        let (data, model, mut ctx) = regimes(20);
        let keep: BTreeSet<usize> = ctx.facts.iter().filter(|lf| lf.label).map(|lf| lf.group).take(3).collect();
        ctx.facts.retain(|lf| keep.contains(&lf.group));
        let f = |x: &Fact| model.score(x);
        let cfg = ExplainConfig { miner: crate::rules::MinerConfig { min_correct: 1, ..Default::default() }, ..Default::default() };
        match select_k(&data, &ctx, &model, &f, &LocalConfig::default(), &cfg, 4) {
            Ok(sel) => assert!(sel.scores.iter().all(|(k, _)| (2..=3).contains(k))),
            Err(e) => assert!(matches!(e, Error::InsufficientData(_)), "{e}"),
        }
    }

    #[test]
    fn linkages_cut_separated_points_alike() {
        let pts = vec![vec![0.0], vec![0.1], vec![10.0], vec![10.2], vec![0.05]];
        for l in [Linkage::Ward, Linkage::Complete, Linkage::Average] {
            assert_eq!(cluster_points(&pts, 2, l).unwrap(), vec![0, 0, 1, 1, 0]);
        }
    }
}
