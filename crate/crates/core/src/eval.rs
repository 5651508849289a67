//! Fidelity metrics and context splitting.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kg::{Fact, KnowledgeGraph, Side};
use crate::scope::Context;
use crate::{Error, Result};

/// Agreement between a surrogate and the black box on a held-out split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityRecord {
    pub roc_auc: Option<f64>,
    pub s_mrr: Option<f64>,
    pub o_mrr: Option<f64>,
    /// Number of held-out context facts.
    pub size: usize,
    pub scope: String,
}

/// Probability that a random positive outranks a random negative, ties
/// counted as one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InsufficientData("ROC-AUC needs both classes".into()));
    }
    let ranks = average_ranks(scores);
    let pos_rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    let u = pos_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// 1-based ascending ranks, ties sharing their mean rank.
fn average_ranks(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean;
        }
        i = j + 1;
    }
    ranks
}

/// Rank of `truth` among `others` by descending score; ties take the
/// average position.
pub fn rank_of(truth: f64, others: impl IntoIterator<Item = f64>) -> f64 {
    let (mut above, mut tied) = (0usize, 0usize);
    for s in others {
        if s > truth {
            above += 1;
        } else if s == truth {
            tied += 1;
        }
    }
    1.0 + above as f64 + tied as f64 / 2.0
}

/// Filtered mean reciprocal rank. Candidates for a subject query are the
/// predicate's known subjects (objects for object queries); candidates that
/// form another known fact are removed.
pub fn mrr(queries: &[(Fact, Side)], known: &KnowledgeGraph, score: &dyn Fn(&Fact) -> f64) -> Result<f64> {
    if queries.is_empty() {
        return Err(Error::InsufficientData("no ranking queries".into()));
    }
    let mut total = 0.0;
    for &(truth, side) in queries {
        let (subjects, objects) = known.domains(truth.p)?;
        let pool = match side {
            Side::Subject => subjects,
            Side::Object => objects,
        };
        if pool.is_empty() {
            return Err(Error::InsufficientData(format!(
                "empty candidate pool for {}",
                known.vocab().display_fact(&truth)
            )));
        }
        let others = pool.iter().filter_map(|&e| {
            let cand = match side {
                Side::Subject => Fact { s: e, ..truth },
                Side::Object => Fact { o: e, ..truth },
            };
            (cand != truth && !known.contains(&cand)).then(|| score(&cand))
        });
        total += 1.0 / rank_of(score(&truth), others);
    }
    Ok(total / queries.len() as f64)
}

/// Size-weighted mean per metric; records lacking a metric do not
/// contribute to it.
pub fn weighted_fidelity(records: &[FidelityRecord]) -> Result<FidelityRecord> {
    let first = records
        .first()
        .ok_or_else(|| Error::InsufficientData("no fidelity records to combine".into()))?;
    let mean = |get: fn(&FidelityRecord) -> Option<f64>| {
        let (num, den) = records
            .iter()
            .filter_map(|r| get(r).map(|m| (m * r.size as f64, r.size as f64)))
            .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        (den > 0.0).then(|| num / den)
    };
    let scope = if records.iter().all(|r| r.scope == first.scope) {
        first.scope.clone()
    } else {
        "mixed".to_owned()
    };
    Ok(FidelityRecord {
        roc_auc: mean(|r| r.roc_auc),
        s_mrr: mean(|r| r.s_mrr),
        o_mrr: mean(|r| r.o_mrr),
        size: records.iter().map(|r| r.size).sum(),
        scope,
    })
}

/// Splits a context into train and test parts at the level of corruption
/// groups (a true fact travels with its corruptions), stratified by group
/// composition. Each side receives at least one group.
pub fn split_context(ctx: &Context, test_fraction: f64, seed: u64) -> Result<(Context, Context)> {
    if !(0.0..1.0).contains(&test_fraction) || test_fraction == 0.0 {
        return Err(Error::InvalidArgument(format!("test fraction {test_fraction} not in (0, 1)")));
    }
    if ctx.facts.len() < 4 {
        return Err(Error::InsufficientData(format!("context has {} facts, need 4", ctx.facts.len())));
    }
    let n_pos = ctx.facts.iter().filter(|f| f.label).count();
    if n_pos == 0 || n_pos == ctx.facts.len() {
        return Err(Error::InsufficientData("context has a single class".into()));
    }
    let mut groups: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for f in &ctx.facts {
        let e = groups.entry(f.group).or_default();
        if f.label {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    if groups.len() < 2 {
        return Err(Error::InsufficientData("context has a single group".into()));
    }
    let mut strata: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (&g, &comp) in &groups {
        strata.entry(comp).or_default().push(g);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test_groups = Vec::new();
    let mut train_groups = Vec::new();
    for members in strata.values_mut() {
        members.shuffle(&mut rng);
        let n_test = (test_fraction * members.len() as f64).round() as usize;
        test_groups.extend_from_slice(&members[..n_test]);
        train_groups.extend_from_slice(&members[n_test..]);
    }
    if test_groups.is_empty() {
        test_groups.push(train_groups.pop().expect("two groups"));
    } else if train_groups.is_empty() {
        train_groups.push(test_groups.pop().expect("two groups"));
    }
    let test_set: std::collections::HashSet<usize> = test_groups.into_iter().collect();
    let (test, train): (Vec<_>, Vec<_>) = ctx.facts.iter().cloned().partition(|f| test_set.contains(&f.group));
    Ok((
        Context { facts: train, ..ctx.clone_empty() },
        Context { facts: test, ..ctx.clone_empty() },
    ))
}
