//! Breadth-first Horn rule search with support-based pruning.
//!
//! Refinements add one atom at a time: a closing atom over two existing
//! variables, a dangling atom introducing a fresh variable, or (bounded
//! mode) an atom pairing an existing variable with a constant. Bounded mode
//! may also instantiate the head object. Support never increases along a
//! refinement, so candidates below `min_correct` are dropped with their
//! whole subtree.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ground, AugmentedGraph, Atom, Bindings, HornRule, RuleStats, Term, Var, MAX_VARS};
use crate::kg::{EntityId, PredicateId};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RuleMode {
    /// Variables only.
    #[default]
    Unbounded,
    /// Atoms may carry one constant.
    Bounded,
}

impl fmt::Display for RuleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleMode::Unbounded => "unbounded",
            RuleMode::Bounded => "bounded",
        })
    }
}

impl FromStr for RuleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unbounded" => Ok(RuleMode::Unbounded),
            "bounded" => Ok(RuleMode::Bounded),
            other => Err(Error::InvalidArgument(format!("unknown rule mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinerConfig {
    pub mode: RuleMode,
    /// Maximum atoms per rule, head included.
    pub max_atoms: usize,
    pub min_correct: usize,
    pub min_precision: f64,
    /// Keeps only the best-supported candidates per search level.
    pub beam_width: Option<usize>,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            mode: RuleMode::Unbounded,
            max_atoms: 3,
            min_correct: 2,
            min_precision: 0.1,
            beam_width: None,
        }
    }
}

impl MinerConfig {
    pub fn with_mode(mode: RuleMode) -> Self {
        MinerConfig { mode, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=4).contains(&self.max_atoms) {
            return Err(Error::InvalidArgument(format!(
                "max_atoms must be in 2..=4, got {}",
                self.max_atoms
            )));
        }
        if !(0.0..=1.0).contains(&self.min_precision) {
            return Err(Error::InvalidArgument(format!(
                "min_precision must be in [0, 1], got {}",
                self.min_precision
            )));
        }
        if self.min_correct == 0 {
            return Err(Error::InvalidArgument("min_correct must be positive".into()));
        }
        if self.beam_width == Some(0) {
            return Err(Error::InvalidArgument("beam_width must be positive".into()));
        }
        Ok(())
    }
}

/// A rule that passed the thresholds, in canonical form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinedRule {
    pub rule: HornRule,
    pub stats: RuleStats,
}

impl MinedRule {
    pub fn conf(&self) -> f64 {
        self.stats.conf()
    }

    /// `body => head  precision=<p> correct=<n>`
    pub fn line(&self, g: &AugmentedGraph<'_>) -> String {
        format!(
            "{}  precision={:.6} correct={}",
            self.rule.display(g),
            self.stats.conf(),
            self.stats.correct_predictions
        )
    }
}

/// One-step refinements of `rule` that can still be completed into a valid
/// rule within `cfg.max_atoms`. Instantiations only use constants seen in
/// at least one supported grounding. Rules already at the size cap have no
/// refinements.
pub fn refine(rule: &HornRule, g: &AugmentedGraph<'_>, cfg: &MinerConfig) -> Vec<HornRule> {
    expand(rule, g, cfg, 1).into_iter().map(|(r, _)| r).collect()
}

/// Mines rules for every head predicate registered in `g`, sorted by
/// precision (desc), correct predictions (desc), then rendered text.
pub fn mine(g: &AugmentedGraph<'_>, cfg: &MinerConfig) -> Result<Vec<MinedRule>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for head in g.head_predicates() {
        out.extend(mine_head(g, head, cfg));
    }
    let mut keyed: Vec<(String, MinedRule)> = out.into_iter().map(|m| (m.rule.display(g), m)).collect();
    keyed.sort_by(|(ta, a), (tb, b)| {
        b.stats
            .conf()
            .total_cmp(&a.stats.conf())
            .then(b.stats.correct_predictions.cmp(&a.stats.correct_predictions))
            .then_with(|| ta.cmp(tb))
    });
    Ok(keyed.into_iter().map(|(_, m)| m).collect())
}

fn mine_head(g: &AugmentedGraph<'_>, head: PredicateId, cfg: &MinerConfig) -> Vec<MinedRule> {
    let root = HornRule::new(vec![], Atom::new(head, Term::Var(Var::X), Term::Var(Var::Y)));
    let mut seen: HashSet<HornRule> = HashSet::from([root.canonical()]);
    let mut found = Vec::new();
    let mut level = vec![root];
    while !level.is_empty() {
        let mut next: Vec<(HornRule, usize)> = Vec::new();
        for rule in &level {
            for (cand, support) in expand(rule, g, cfg, cfg.min_correct) {
                let canon = cand.canonical();
                if !seen.insert(canon.clone()) {
                    continue;
                }
                if canon.is_valid(cfg.mode) {
                    let stats = g.rule_stats(&canon);
                    if stats.correct_predictions >= cfg.min_correct
                        && stats.precision.is_some_and(|p| p >= cfg.min_precision)
                    {
                        found.push(MinedRule { rule: canon.clone(), stats });
                    }
                }
                next.push((canon, support));
            }
        }
        if let Some(w) = cfg.beam_width {
            next.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            next.truncate(w);
        }
        log::debug!("head {:?}: {} candidates at next level", head, next.len());
        level = next.into_iter().map(|(r, _)| r).collect();
    }
    found
}

/// Whether some sequence of refinements can still close every variable.
fn completable(rule: &HornRule, cfg: &MinerConfig) -> bool {
    if rule.len() > cfg.max_atoms || rule.vars().len() > MAX_VARS {
        return false;
    }
    let remaining = cfg.max_atoms - rule.len();
    let open = rule.open_vars();
    if remaining == 0 {
        return open.is_empty();
    }
    // an open head object can be instantiated without spending an atom
    let head_obj_open =
        cfg.mode == RuleMode::Bounded && rule.head.object.var().is_some_and(|v| open.contains(&v));
    open.len() - head_obj_open as usize <= 2 * remaining
}

fn expand(rule: &HornRule, g: &AugmentedGraph<'_>, cfg: &MinerConfig, min_support: usize) -> Vec<(HornRule, usize)> {
    if rule.len() >= cfg.max_atoms {
        return Vec::new();
    }
    let Some(head_facts) = g.head_facts(rule.head.predicate) else {
        return Vec::new();
    };
    let vars: Vec<Var> = rule.vars().into_iter().collect();
    let fresh = Term::Var(Var(vars.iter().map(|v| v.0 + 1).max().unwrap_or(0)));
    let preds = g.body_predicates();
    let mut out = Vec::new();

    let push = |cand: HornRule, out: &mut Vec<(HornRule, usize)>| {
        if !completable(&cand, cfg) {
            return;
        }
        let support = g.support(&cand);
        if support >= min_support {
            out.push((cand, support));
        }
    };
    let with_atom = |a: Atom| {
        let mut r = rule.clone();
        r.body.push(a);
        r
    };

    for &p in &preds {
        for &u in &vars {
            for &v in &vars {
                if u != v {
                    let a = Atom::new(p, Term::Var(u), Term::Var(v));
                    if !rule.body.contains(&a) {
                        push(with_atom(a), &mut out);
                    }
                }
            }
            push(with_atom(Atom::new(p, Term::Var(u), fresh)), &mut out);
            push(with_atom(Atom::new(p, fresh, Term::Var(u))), &mut out);
        }
    }

    if cfg.mode == RuleMode::Bounded {
        let pairs: Vec<(EntityId, EntityId)> = g
            .candidate_pairs(&rule.head, &head_facts.positives)
            .collect();
        // head object instantiation
        if let Some(yv) = rule.head.object.var() {
            if rule.var_occurrences().get(&yv) == Some(&1) {
                let mut counts: BTreeMap<EntityId, usize> = BTreeMap::new();
                for &(s, o) in &pairs {
                    if g.fires_at(rule, s, o) {
                        *counts.entry(o).or_default() += 1;
                    }
                }
                for (c, n) in counts {
                    if n >= min_support {
                        let mut r = rule.clone();
                        r.head.object = Term::Const(c);
                        if completable(&r, cfg) {
                            out.push((r, n));
                        }
                    }
                }
            }
        }
        // atoms pairing an existing variable with a constant
        let mut counts: HashMap<Atom, usize> = HashMap::new();
        for &(s, o) in &pairs {
            let mut b = Bindings::default();
            if !b.unify(rule.head.subject, s) || !b.unify(rule.head.object, o) {
                continue;
            }
            let mut values: BTreeMap<Var, HashSet<EntityId>> = BTreeMap::new();
            ground(g.base(), &rule.body, &mut b, &mut |b| {
                for &v in &vars {
                    if let Some(e) = b.get(v) {
                        values.entry(v).or_default().insert(e);
                    }
                }
                false
            });
            let mut atoms_here: HashSet<Atom> = HashSet::new();
            for (&v, es) in &values {
                for &e in es {
                    for &p in &preds {
                        for &c in g.base().objects_of(p, e) {
                            atoms_here.insert(Atom::new(p, Term::Var(v), Term::Const(c)));
                        }
                        for &c in g.base().subjects_of(p, e) {
                            atoms_here.insert(Atom::new(p, Term::Const(c), Term::Var(v)));
                        }
                    }
                }
            }
            for a in atoms_here {
                *counts.entry(a).or_default() += 1;
            }
        }
        let mut atoms: Vec<(Atom, usize)> = counts.into_iter().filter(|&(_, n)| n >= min_support).collect();
        atoms.sort();
        for (a, n) in atoms {
            if rule.body.contains(&a) {
                continue;
            }
            let r = with_atom(a);
            if completable(&r, cfg) {
                out.push((r, n));
            }
        }
    }
    out
}
