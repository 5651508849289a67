//! Exhaustive reference implementations used by tests.
//!
//! Nothing here shares code with the search in [`crate::rules`]: rules are
//! enumerated over a fixed variable alphabet and evaluated by looping over
//! every assignment against a plain hash set of triples.

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::embedding::{EmbeddingModel, FactLoss, Gradient};
use crate::kg::{EntityId, Fact, KnowledgeGraph, PredicateId, Side};
use crate::rules::{Atom, HornRule, MinedRule, RuleMode, Term, Var};

const X: Term = Term::Var(Var(0));
const Y: Term = Term::Var(Var(1));
const Z: Term = Term::Var(Var(2));

/// A rule in normal form with its labeled-prediction counts.
pub type OracleRule = (HornRule, usize, usize);

/// Labeled head facts for one head predicate.
#[derive(Clone, Debug)]
pub struct LabeledHead {
    pub predicate: PredicateId,
    pub positives: Vec<(EntityId, EntityId)>,
    pub negatives: Vec<(EntityId, EntityId)>,
}

/// Renames the head subject to `?x`, a head object variable to `?y`, the
/// remaining variable to `?z`, and sorts the body.
pub fn normalize(rule: &HornRule) -> HornRule {
    let hs = rule.head.subject.var().expect("head subject is a variable");
    let ho = rule.head.object.var();
    let others: BTreeSet<Var> = rule
        .vars()
        .into_iter()
        .filter(|&v| v != hs && Some(v) != ho)
        .collect();
    assert!(others.len() <= 1, "normal form supports one extra variable");
    let map = |t: Term| match t {
        Term::Var(v) if v == hs => X,
        Term::Var(v) if Some(v) == ho => Y,
        Term::Var(_) => Z,
        c => c,
    };
    let m = |a: &Atom| Atom::new(a.predicate, map(a.subject), map(a.object));
    let mut body: Vec<Atom> = rule.body.iter().map(m).collect();
    body.sort();
    HornRule::new(body, m(&rule.head))
}

pub fn normalize_mined(rules: &[MinedRule]) -> BTreeSet<OracleRule> {
    rules
        .iter()
        .map(|m| (normalize(&m.rule), m.stats.correct_predictions, m.stats.total_predictions_labeled))
        .collect()
}

/// Every rule with at most two body atoms that is closed, safe and
/// connected and meets both thresholds.
pub fn brute_force_rules(
    kg: &KnowledgeGraph,
    heads: &[LabeledHead],
    mode: RuleMode,
    min_correct: usize,
    min_precision: f64,
) -> BTreeSet<OracleRule> {
    let triples: HashSet<(u32, u32, u32)> = kg.positives().map(|f| (f.s.0, f.p.0, f.o.0)).collect();
    let body_preds: BTreeSet<u32> = triples.iter().map(|t| t.1).collect();
    let n = kg.num_entities() as u32;
    let mut out = BTreeSet::new();

    for head in heads {
        let mut head_atoms = vec![Atom::new(head.predicate, X, Y)];
        if mode == RuleMode::Bounded {
            head_atoms.extend((0..n).map(|c| Atom::new(head.predicate, X, Term::Const(EntityId(c)))));
        }
        for head_atom in head_atoms {
            let mut vars = vec![X, Z];
            if head_atom.object == Y {
                vars.push(Y);
            }
            let mut pool = Vec::new();
            for &p in &body_preds {
                let p = PredicateId(p);
                for &a in &vars {
                    for &b in &vars {
                        if a != b {
                            pool.push(Atom::new(p, a, b));
                        }
                    }
                    if mode == RuleMode::Bounded {
                        for c in 0..n {
                            let c = Term::Const(EntityId(c));
                            pool.push(Atom::new(p, a, c));
                            pool.push(Atom::new(p, c, a));
                        }
                    }
                }
            }
            let mut bodies: Vec<Vec<Atom>> = pool.iter().map(|&a| vec![a]).collect();
            for i in 0..pool.len() {
                for j in i + 1..pool.len() {
                    bodies.push(vec![pool[i], pool[j]]);
                }
            }
            for body in bodies {
                let rule = HornRule::new(body, head_atom);
                if !admissible(&rule) {
                    continue;
                }
                let fires = |s: u32, o: u32| fires(&triples, n, &rule, s, o);
                let matches = |&&(s, o): &&(EntityId, EntityId)| match head_atom.object {
                    Term::Const(c) => c == o && fires(s.0, o.0),
                    _ => fires(s.0, o.0),
                };
                let correct = head.positives.iter().filter(matches).count();
                let wrong = head.negatives.iter().filter(matches).count();
                let labeled = correct + wrong;
                if correct >= min_correct && labeled > 0 && correct as f64 / labeled as f64 >= min_precision {
                    out.insert((normalize(&rule), correct, labeled));
                }
            }
        }
    }
    out
}

fn admissible(rule: &HornRule) -> bool {
    let atoms: Vec<&Atom> = std::iter::once(&rule.head).chain(&rule.body).collect();
    let all_vars: BTreeSet<Term> = atoms
        .iter()
        .flat_map(|a| [a.subject, a.object])
        .filter(|t| t.is_var())
        .collect();
    // closed
    for v in &all_vars {
        let n = atoms.iter().filter(|a| a.subject == *v || a.object == *v).count();
        if n < 2 {
            return false;
        }
    }
    // safe
    for v in [rule.head.subject, rule.head.object] {
        if v.is_var() && !rule.body.iter().any(|a| a.subject == v || a.object == v) {
            return false;
        }
    }
    // connected
    let shares = |a: &Atom, b: &Atom| {
        [a.subject, a.object].iter().any(|t| t.is_var() && (*t == b.subject || *t == b.object))
    };
    let mut reached = vec![0usize];
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..atoms.len() {
            if !reached.contains(&i) && reached.iter().any(|&j| shares(atoms[i], atoms[j])) {
                reached.push(i);
                changed = true;
            }
        }
    }
    reached.len() == atoms.len()
}

/// Whether the body of `rule` holds at `(s, o)` for some value of the
/// remaining variable, checked by trying every entity.
pub fn fires_by_enumeration(kg: &KnowledgeGraph, rule: &HornRule, s: EntityId, o: EntityId) -> bool {
    let rule = normalize(rule);
    if let Term::Const(c) = rule.head.object {
        if c != o {
            return false;
        }
    }
    let triples: HashSet<(u32, u32, u32)> = kg.positives().map(|f| (f.s.0, f.p.0, f.o.0)).collect();
    fires(&triples, kg.num_entities() as u32, &rule, s.0, o.0)
}

fn fires(triples: &HashSet<(u32, u32, u32)>, n: u32, rule: &HornRule, s: u32, o: u32) -> bool {
    let uses_z = rule.body.iter().any(|a| a.subject == Z || a.object == Z);
    let zs: Vec<u32> = if uses_z { (0..n).collect() } else { vec![0] };
    zs.into_iter().any(|z| {
        let val = |t: Term| match t {
            Term::Var(Var(0)) => s,
            Term::Var(Var(1)) => o,
            Term::Var(_) => z,
            Term::Const(c) => c.0,
        };
        rule.body
            .iter()
            .all(|a| triples.contains(&(val(a.subject), a.predicate.0, val(a.object))))
    })
}

/// Random base graph plus one labeled head predicate whose positives are
/// partly derived from a base predicate so that rules exist.
pub fn random_labeled_graph<R: Rng>(
    rng: &mut R,
    max_entities: usize,
    max_predicates: usize,
    max_facts: usize,
) -> (KnowledgeGraph, LabeledHead) {
    let n = rng.gen_range(4..=max_entities);
    let m = rng.gen_range(1..=max_predicates);
    let mut tsv = String::new();
    for e in 0..n {
        // every entity appears so the dictionary covers 0..n
        tsv.push_str(&format!("e{e}\tp0\te{}\n", (e + 1) % n));
    }
    let facts = rng.gen_range(n..=max_facts.max(n));
    for _ in 0..facts {
        let (s, p, o) = (rng.gen_range(0..n), rng.gen_range(0..m), rng.gen_range(0..n));
        tsv.push_str(&format!("e{s}\tp{p}\te{o}\n"));
    }
    let kg = crate::kg::ingest_triples(tsv.as_bytes()).expect("generated graph");
    let v = kg.vocab().clone();
    let head = PredicateId(kg.num_predicates() as u32);
    let source = v.predicate(&format!("p{}", rng.gen_range(0..m))).unwrap_or(PredicateId(0));
    let mut derived: Vec<(EntityId, EntityId)> = kg.pairs_of(source).to_vec();
    if rng.gen_bool(0.5) {
        derived = derived.into_iter().map(|(s, o)| (o, s)).collect();
    }
    derived.shuffle(rng);
    let mut positives: BTreeSet<(EntityId, EntityId)> = derived.iter().take(rng.gen_range(2..=8)).copied().collect();
    let mut negatives = BTreeSet::new();
    let random_pair = |rng: &mut R| (EntityId(rng.gen_range(0..n as u32)), EntityId(rng.gen_range(0..n as u32)));
    for _ in 0..rng.gen_range(0..6) {
        positives.insert(random_pair(rng));
    }
    for pair in derived.iter().skip(8).take(rng.gen_range(0..4)) {
        if !positives.contains(pair) {
            negatives.insert(*pair);
        }
    }
    for _ in 0..rng.gen_range(2..10) {
        let pair = random_pair(rng);
        if !positives.contains(&pair) {
            negatives.insert(pair);
        }
    }
    (
        kg,
        LabeledHead { predicate: head, positives: positives.into_iter().collect(), negatives: negatives.into_iter().collect() },
    )
}

/// Central finite differences of `model.fact_loss(fact, loss)` over every
/// entry of the rows `fact` touches.
pub fn numeric_gradient(model: &EmbeddingModel, fact: &Fact, loss: FactLoss, h: f64) -> Gradient {
    let w = model.row_width();
    let mut m = model.clone();
    let mut probe = |entity: bool, row: usize| -> Vec<f64> {
        (0..w)
            .map(|j| {
                let idx = row * w + j;
                let orig = *slot(&mut m, entity, idx);
                *slot(&mut m, entity, idx) = orig + h;
                let hi = m.fact_loss(fact, loss);
                *slot(&mut m, entity, idx) = orig - h;
                let lo = m.fact_loss(fact, loss);
                *slot(&mut m, entity, idx) = orig;
                (hi - lo) / (2.0 * h)
            })
            .collect()
    };
    let mut g = Gradient::default();
    for e in [fact.s, fact.o] {
        g.entities.entry(e).or_insert_with(|| probe(true, e.index()));
    }
    let row = probe(false, fact.p.index());
    g.predicates.insert(fact.p, row);
    g
}

fn slot(m: &mut EmbeddingModel, entity: bool, idx: usize) -> &mut f64 {
    if entity {
        &mut m.entities[idx]
    } else {
        &mut m.predicates[idx]
    }
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)` over the union of rows; zero when both vanish.
pub fn relative_error(model: &EmbeddingModel, a: &Gradient, b: &Gradient) -> f64 {
    let (ae, ap) = a.to_dense(model);
    let (be, bp) = b.to_dense(model);
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut ae.iter().chain(&ap).zip(be.iter().chain(&bp)).map(|(x, y)| x - y));
    let scale = norm(&mut ae.iter().chain(&ap).copied()).max(norm(&mut be.iter().chain(&bp).copied()));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Smallest absolute coordinate of the TransE residual `s + p − o`; the
/// l1 score has a kink wherever a coordinate crosses zero.
pub fn transe_kink_distance(model: &EmbeddingModel, fact: &Fact) -> f64 {
    let (s, p, o) = (model.entity(fact.s), model.predicate(fact.p), model.entity(fact.o));
    s.iter().zip(p).zip(o).map(|((s, p), o)| (s + p - o).abs()).fold(f64::INFINITY, f64::min)
}

/// Fraction of positive/negative pairs ordered correctly, ties counting one
/// half, by explicit enumeration.
pub fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut hits, mut pairs) = (0.0, 0usize);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                pairs += 1;
                hits += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    hits / pairs as f64
}

/// Filtered MRR computed by sorting every candidate list: the rank of the
/// truth is the mean of the first and last sorted positions sharing its
/// score. Candidate pools are rebuilt by scanning all known facts.
pub fn sorted_mrr(queries: &[(Fact, Side)], known: &KnowledgeGraph, score: &dyn Fn(&Fact) -> f64) -> f64 {
    let facts: HashSet<Fact> = known.positives().copied().collect();
    let mut total = 0.0;
    for &(truth, side) in queries {
        let pool: BTreeSet<EntityId> = facts
            .iter()
            .filter(|f| f.p == truth.p)
            .map(|f| if side == Side::Subject { f.s } else { f.o })
            .collect();
        let mut cands: Vec<f64> = pool
            .into_iter()
            .map(|e| if side == Side::Subject { Fact { s: e, ..truth } } else { Fact { o: e, ..truth } })
            .filter(|c| *c == truth || !facts.contains(c))
            .map(|c| score(&c))
            .collect();
        cands.sort_by(|a, b| b.total_cmp(a));
        let t = score(&truth);
        let first = cands.iter().position(|&c| c == t).expect("truth is a candidate");
        let last = cands.iter().rposition(|&c| c == t).expect("truth is a candidate");
        total += 1.0 / ((first + last) as f64 / 2.0 + 1.0);
    }
    total / queries.len() as f64
}

/// The partition of `points` into `k` non-empty groups with the least total
/// within-group sum of squares, by trying every assignment. Groups are
/// numbered by first appearance.
pub fn best_partition(points: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = points.len();
    let sse = |labels: &[usize]| -> f64 {
        (0..k)
            .map(|c| {
                let members: Vec<&Vec<f64>> = points.iter().zip(labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
                if members.is_empty() {
                    return 0.0;
                }
                let dim = members[0].len();
                let centroid: Vec<f64> =
                    (0..dim).map(|j| members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64).collect();
                members.iter().map(|p| p.iter().zip(&centroid).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sum()
            })
            .sum()
    };
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut labels = vec![0usize; n];
    // restricted growth strings enumerate each partition once
    fn walk(i: usize, used: usize, k: usize, labels: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if i == labels.len() {
            if used == k {
                visit(labels);
            }
            return;
        }
        for c in 0..(used + 1).min(k) {
            labels[i] = c;
            walk(i + 1, used.max(c + 1), k, labels, visit);
        }
    }
    walk(0, 0, k, &mut labels, &mut |l| {
        let cost = sse(l);
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, l.to_vec()));
        }
    });
    best.expect("k <= n").1
}
