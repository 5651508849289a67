//! Horn rules over a knowledge graph: terms, atoms, substitutions, grounding
//! and rule statistics against explicitly labeled head facts.

mod miner;

pub use miner::{mine, refine, MinedRule, MinerConfig, RuleMode};

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::kg::{EntityId, Fact, KnowledgeGraph, PredicateId};

/// Upper bound on distinct variables in one rule.
pub const MAX_VARS: usize = 8;

/// Rule variable. Variables live in their own namespace, disjoint from
/// entity ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Var(pub u8);

impl Var {
    pub const X: Var = Var(0);
    pub const Y: Var = Var(1);

    pub fn name(self) -> String {
        match self.0 {
            0 => "?x".into(),
            1 => "?y".into(),
            2 => "?z".into(),
            3 => "?w".into(),
            n => format!("?v{n}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Var(Var),
    Const(EntityId),
}

impl Term {
    pub fn var(self) -> Option<Var> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }

    pub fn is_var(self) -> bool {
        matches!(self, Term::Var(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: PredicateId,
    pub subject: Term,
    pub object: Term,
}

impl Atom {
    pub fn new(predicate: PredicateId, subject: Term, object: Term) -> Self {
        Atom { predicate, subject, object }
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> {
        [self.subject, self.object].into_iter().filter_map(Term::var)
    }

    /// Variables-only atom.
    pub fn is_unbounded(&self) -> bool {
        self.subject.is_var() && self.object.is_var()
    }

    /// Exactly one constant argument.
    pub fn is_bounded(&self) -> bool {
        self.subject.is_var() != self.object.is_var()
    }

    pub fn is_ground(&self) -> bool {
        !self.subject.is_var() && !self.object.is_var()
    }

    pub fn as_fact(&self) -> Option<Fact> {
        match (self.subject, self.object) {
            (Term::Const(s), Term::Const(o)) => Some(Fact::new(s, self.predicate, o)),
            _ => None,
        }
    }
}

/// `B ⇒ H`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HornRule {
    pub body: Vec<Atom>,
    pub head: Atom,
}

impl HornRule {
    pub fn new(body: Vec<Atom>, head: Atom) -> Self {
        HornRule { body, head }
    }

    pub fn len(&self) -> usize {
        self.body.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        std::iter::once(&self.head).chain(&self.body)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.atoms().flat_map(Atom::vars).collect()
    }

    /// Number of atoms each variable occurs in.
    pub fn var_occurrences(&self) -> BTreeMap<Var, usize> {
        let mut occ = BTreeMap::new();
        for a in self.atoms() {
            let vs: BTreeSet<Var> = a.vars().collect();
            for v in vs {
                *occ.entry(v).or_insert(0) += 1;
            }
        }
        occ
    }

    /// Variables occurring in exactly one atom.
    pub fn open_vars(&self) -> Vec<Var> {
        self.var_occurrences().into_iter().filter(|&(_, n)| n == 1).map(|(v, _)| v).collect()
    }

    /// Head variables occur in the body.
    pub fn is_safe(&self) -> bool {
        let body_vars: BTreeSet<Var> = self.body.iter().flat_map(Atom::vars).collect();
        self.head.vars().all(|v| body_vars.contains(&v))
    }

    /// Every variable occurs in at least two atoms.
    pub fn is_closed(&self) -> bool {
        self.var_occurrences().values().all(|&n| n >= 2)
    }

    /// All atoms are transitively linked through shared variables.
    pub fn is_connected(&self) -> bool {
        let atoms: Vec<&Atom> = self.atoms().collect();
        let mut reached = vec![false; atoms.len()];
        reached[0] = true;
        let mut frontier: BTreeSet<Var> = atoms[0].vars().collect();
        loop {
            let mut grew = false;
            for (i, a) in atoms.iter().enumerate() {
                if !reached[i] && a.vars().any(|v| frontier.contains(&v)) {
                    reached[i] = true;
                    frontier.extend(a.vars());
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        reached.into_iter().all(|r| r)
    }

    /// Every atom has at least one variable and at most one constant, and
    /// no atom repeats a variable.
    pub fn atoms_well_formed(&self) -> bool {
        self.atoms().all(|a| !a.is_ground() && !(a.is_unbounded() && a.subject == a.object))
    }

    pub fn has_constants(&self) -> bool {
        self.atoms().any(|a| !a.is_unbounded())
    }

    /// Whether this rule may be emitted under `mode`: a non-empty body,
    /// safe, closed, connected, well-formed, and constant-free in unbounded
    /// mode. Head subjects are always variables.
    pub fn is_valid(&self, mode: RuleMode) -> bool {
        !self.body.is_empty()
            && self.head.subject.is_var()
            && self.atoms_well_formed()
            && (mode == RuleMode::Bounded || !self.has_constants())
            && self.is_safe()
            && self.is_closed()
            && self.is_connected()
            && {
                let set: HashSet<&Atom> = self.body.iter().collect();
                set.len() == self.body.len()
            }
    }

    /// Representative of the rule's class under variable renaming and body
    /// reordering.
    pub fn canonical(&self) -> HornRule {
        let n = self.body.len();
        let mut best: Option<HornRule> = None;
        for perm in permutations(n) {
            let order: Vec<&Atom> = perm.iter().map(|&i| &self.body[i]).collect();
            let mut rename: BTreeMap<Var, Var> = BTreeMap::new();
            let mut next = 0u8;
            for a in std::iter::once(&self.head).chain(order.iter().copied()) {
                for v in [a.subject, a.object].into_iter().filter_map(Term::var) {
                    rename.entry(v).or_insert_with(|| {
                        next += 1;
                        Var(next - 1)
                    });
                }
            }
            let map = |t: Term| match t {
                Term::Var(v) => Term::Var(rename[&v]),
                c => c,
            };
            let map_atom = |a: &Atom| Atom::new(a.predicate, map(a.subject), map(a.object));
            let mut body: Vec<Atom> = order.iter().map(|a| map_atom(a)).collect();
            body.sort();
            let cand = HornRule { body, head: map_atom(&self.head) };
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
        best.expect("at least one permutation")
    }

    /// Renders `b1 & b2 => h` with `?x`-style variables and entity labels.
    pub fn display(&self, g: &AugmentedGraph<'_>) -> String {
        let mut out = String::new();
        for (i, a) in self.body.iter().enumerate() {
            if i > 0 {
                out.push_str(" & ");
            }
            out.push_str(&g.display_atom(a));
        }
        if !self.body.is_empty() {
            out.push(' ');
        }
        let _ = write!(out, "=> {}", g.display_atom(&self.head));
        out
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

/// Partial map from variables to constants.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution(pub BTreeMap<Var, EntityId>);

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, v: Var, e: EntityId) -> Self {
        self.0.insert(v, e);
        self
    }

    pub fn term(&self, t: Term) -> Term {
        match t {
            Term::Var(v) => self.0.get(&v).map_or(t, |&e| Term::Const(e)),
            c => c,
        }
    }

    pub fn atom(&self, a: &Atom) -> Atom {
        Atom::new(a.predicate, self.term(a.subject), self.term(a.object))
    }

    pub fn rule(&self, r: &HornRule) -> HornRule {
        HornRule {
            body: r.body.iter().map(|a| self.atom(a)).collect(),
            head: self.atom(&r.head),
        }
    }
}

/// Labeled facts of one head predicate.
#[derive(Clone, Debug, Default)]
pub struct HeadFacts {
    pub label: String,
    pub positives: BTreeSet<(EntityId, EntityId)>,
    pub negatives: BTreeSet<(EntityId, EntityId)>,
}

/// A base graph K plus head predicates with labeled positives and explicit
/// negatives (the surrogate facts K̂). Head predicates receive ids after the
/// base vocabulary; rule bodies range over base predicates only.
#[derive(Clone, Debug)]
pub struct AugmentedGraph<'a> {
    base: &'a KnowledgeGraph,
    heads: Vec<HeadFacts>,
}

impl<'a> AugmentedGraph<'a> {
    pub fn new(base: &'a KnowledgeGraph) -> Self {
        AugmentedGraph { base, heads: Vec::new() }
    }

    /// Registers a head predicate. Pairs labeled both ways are an error.
    pub fn add_head(
        &mut self,
        label: impl Into<String>,
        positives: impl IntoIterator<Item = (EntityId, EntityId)>,
        negatives: impl IntoIterator<Item = (EntityId, EntityId)>,
    ) -> crate::Result<PredicateId> {
        let label = label.into();
        let positives: BTreeSet<_> = positives.into_iter().collect();
        let negatives: BTreeSet<_> = negatives.into_iter().collect();
        if let Some(pair) = positives.intersection(&negatives).next() {
            return Err(crate::Error::InvalidArgument(format!(
                "pair {pair:?} labeled both positive and negative for {label}"
            )));
        }
        let id = PredicateId((self.base.num_predicates() + self.heads.len()) as u32);
        self.heads.push(HeadFacts { label, positives, negatives });
        Ok(id)
    }

    pub fn base(&self) -> &'a KnowledgeGraph {
        self.base
    }

    pub fn head_facts(&self, p: PredicateId) -> Option<&HeadFacts> {
        p.index().checked_sub(self.base.num_predicates()).and_then(|i| self.heads.get(i))
    }

    pub fn head_predicates(&self) -> Vec<PredicateId> {
        (0..self.heads.len()).map(|i| PredicateId((self.base.num_predicates() + i) as u32)).collect()
    }

    pub fn body_predicates(&self) -> Vec<PredicateId> {
        self.base.predicates().filter(|&p| self.base.predicate_count(p) > 0).collect()
    }

    pub fn predicate_label(&self, p: PredicateId) -> &str {
        match self.head_facts(p) {
            Some(h) => &h.label,
            None => self.base.vocab().predicate_label(p),
        }
    }

    pub fn display_term(&self, t: Term) -> String {
        match t {
            Term::Var(v) => v.name(),
            Term::Const(e) => self.base.vocab().entity_label(e).to_owned(),
        }
    }

    pub fn display_atom(&self, a: &Atom) -> String {
        format!(
            "{}({},{})",
            self.predicate_label(a.predicate),
            self.display_term(a.subject),
            self.display_term(a.object)
        )
    }

    /// Membership of a ground fact in the positive facts (base or head).
    pub fn holds(&self, f: &Fact) -> bool {
        match self.head_facts(f.p) {
            Some(h) => h.positives.contains(&(f.s, f.o)),
            None => self.base.contains(f),
        }
    }

    /// Whether some substitution grounds `rule`'s body in K and maps its head
    /// onto `(s, o)`.
    pub fn fires_at(&self, rule: &HornRule, s: EntityId, o: EntityId) -> bool {
        fires_at(self.base, rule, s, o)
    }

    /// All ground head facts the rule derives. Variables left unbound by
    /// the body make the rule unsafe; such heads are skipped.
    pub fn predictions(&self, rule: &HornRule) -> BTreeSet<Fact> {
        let mut out = BTreeSet::new();
        let mut b = Bindings::default();
        ground(self.base, &rule.body, &mut b, &mut |b| {
            if let (Some(s), Some(o)) = (b.resolve(rule.head.subject), b.resolve(rule.head.object)) {
                out.insert(Fact::new(s, rule.head.predicate, o));
            }
            false
        });
        out
    }

    /// Labeled head pairs the rule's head can match.
    fn candidate_pairs<'b>(
        &'b self,
        head: &'b Atom,
        pairs: &'b BTreeSet<(EntityId, EntityId)>,
    ) -> impl Iterator<Item = (EntityId, EntityId)> + 'b {
        pairs.iter().copied().filter(move |&(s, o)| {
            let ok = |t: Term, e: EntityId| match t {
                Term::Const(c) => c == e,
                Term::Var(_) => true,
            };
            ok(head.subject, s) && ok(head.object, o) && !(head.subject == head.object && s != o)
        })
    }

    /// Number of labeled positives of the head predicate for which the body
    /// is satisfiable. Equals |predictions ∩ positives| for safe rules and
    /// never grows under refinement.
    pub fn support(&self, rule: &HornRule) -> usize {
        let Some(h) = self.head_facts(rule.head.predicate) else {
            return self
                .predictions(rule)
                .iter()
                .filter(|f| self.base.contains(f))
                .count();
        };
        self.candidate_pairs(&rule.head, &h.positives)
            .filter(|&(s, o)| self.fires_at(rule, s, o))
            .count()
    }

    /// Precision against explicit counter-examples; predictions that hit
    /// unlabeled pairs do not count.
    pub fn rule_stats(&self, rule: &HornRule) -> RuleStats {
        let Some(h) = self.head_facts(rule.head.predicate) else {
            let preds = self.predictions(rule);
            let correct = preds.iter().filter(|f| self.base.contains(f)).count();
            let wrong = preds.iter().filter(|f| self.base.is_negative(f)).count();
            return RuleStats::new(correct, correct + wrong);
        };
        let correct = self
            .candidate_pairs(&rule.head, &h.positives)
            .filter(|&(s, o)| self.fires_at(rule, s, o))
            .count();
        let wrong = self
            .candidate_pairs(&rule.head, &h.negatives)
            .filter(|&(s, o)| self.fires_at(rule, s, o))
            .count();
        RuleStats::new(correct, correct + wrong)
    }
}

/// Whether some substitution grounds the body of `rule` in `kg` and maps
/// its head onto `(s, o)`. Bodies are evaluated against `kg` only.
pub fn fires_at(kg: &KnowledgeGraph, rule: &HornRule, s: EntityId, o: EntityId) -> bool {
    let mut b = Bindings::default();
    if !b.unify(rule.head.subject, s) || !b.unify(rule.head.object, o) {
        return false;
    }
    let mut found = false;
    ground(kg, &rule.body, &mut b, &mut |_| {
        found = true;
        true
    });
    found
}

/// Rule quality against labeled facts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleStats {
    pub correct_predictions: usize,
    /// Predictions that land on a labeled fact, positive or negative.
    pub total_predictions_labeled: usize,
    /// `None` when no prediction lands on a labeled fact.
    pub precision: Option<f64>,
}

impl RuleStats {
    pub fn new(correct: usize, labeled: usize) -> Self {
        debug_assert!(correct <= labeled);
        let precision = (labeled > 0).then(|| correct as f64 / labeled as f64);
        RuleStats { correct_predictions: correct, total_predictions_labeled: labeled, precision }
    }

    pub fn is_evaluable(&self) -> bool {
        self.precision.is_some()
    }

    /// Rule confidence, defined as the precision (0 when unevaluable).
    pub fn conf(&self) -> f64 {
        self.precision.unwrap_or(0.0)
    }
}

/// Variable assignment used while grounding.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Bindings([Option<EntityId>; MAX_VARS]);

impl Bindings {
    pub(crate) fn get(&self, v: Var) -> Option<EntityId> {
        self.0[v.0 as usize]
    }

    pub(crate) fn resolve(&self, t: Term) -> Option<EntityId> {
        match t {
            Term::Var(v) => self.get(v),
            Term::Const(c) => Some(c),
        }
    }

    /// Binds `t` to `e` if compatible.
    pub(crate) fn unify(&mut self, t: Term, e: EntityId) -> bool {
        match t {
            Term::Const(c) => c == e,
            Term::Var(v) => match self.0[v.0 as usize] {
                Some(x) => x == e,
                None => {
                    self.0[v.0 as usize] = Some(e);
                    true
                }
            },
        }
    }
}

/// Backtracking join of `atoms` against K+. Calls `on_match` for every
/// complete grounding; a `true` return stops the search. Returns whether it
/// was stopped.
pub(crate) fn ground(
    kg: &KnowledgeGraph,
    atoms: &[Atom],
    b: &mut Bindings,
    on_match: &mut dyn FnMut(&Bindings) -> bool,
) -> bool {
    let mut remaining: Vec<usize> = (0..atoms.len()).collect();
    ground_rec(kg, atoms, &mut remaining, b, on_match)
}

fn ground_rec(
    kg: &KnowledgeGraph,
    atoms: &[Atom],
    remaining: &mut Vec<usize>,
    b: &mut Bindings,
    on_match: &mut dyn FnMut(&Bindings) -> bool,
) -> bool {
    if remaining.is_empty() {
        return on_match(b);
    }
    // most-constrained atom first
    let (pos, _) = remaining
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let at = &atoms[a];
            let bound = b.resolve(at.subject).is_some() as usize + b.resolve(at.object).is_some() as usize;
            (i, bound)
        })
        .max_by_key(|&(i, bound)| (bound, std::cmp::Reverse(i)))
        .expect("non-empty");
    let idx = remaining.swap_remove(pos);
    let atom = atoms[idx];
    let p = atom.predicate;
    let stopped = match (b.resolve(atom.subject), b.resolve(atom.object)) {
        (Some(s), Some(o)) => {
            kg.contains(&Fact::new(s, p, o)) && ground_rec(kg, atoms, remaining, b, on_match)
        }
        (Some(s), None) => {
            let mut stopped = false;
            for &o in kg.objects_of(p, s) {
                let saved = *b;
                if b.unify(atom.object, o) && ground_rec(kg, atoms, remaining, b, on_match) {
                    stopped = true;
                }
                *b = saved;
                if stopped {
                    break;
                }
            }
            stopped
        }
        (None, Some(o)) => {
            let mut stopped = false;
            for &s in kg.subjects_of(p, o) {
                let saved = *b;
                if b.unify(atom.subject, s) && ground_rec(kg, atoms, remaining, b, on_match) {
                    stopped = true;
                }
                *b = saved;
                if stopped {
                    break;
                }
            }
            stopped
        }
        (None, None) => {
            let mut stopped = false;
            for &(s, o) in kg.pairs_of(p) {
                let saved = *b;
                if b.unify(atom.subject, s)
                    && b.unify(atom.object, o)
                    && ground_rec(kg, atoms, remaining, b, on_match)
                {
                    stopped = true;
                }
                *b = saved;
                if stopped {
                    break;
                }
            }
            stopped
        }
    };
    remaining.push(idx);
    let last = remaining.len() - 1;
    remaining.swap(pos, last);
    stopped
}
