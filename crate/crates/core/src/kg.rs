//! Interned triple store with per-predicate indexes.
//!
//! A [`KnowledgeGraph`] holds the positive facts K+, an optional set of
//! explicit negatives K−, and the per-predicate subject/object domains that
//! define the potential set of each predicate. Graphs are immutable once
//! built; several graphs can share one [`Vocabulary`] (e.g. a training graph
//! and the graph of all known facts).

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attempts per negative slot before the slot is given up.
pub const MAX_CORRUPTION_ATTEMPTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PredicateId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl PredicateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A ground triple `p(s, o)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fact {
    pub s: EntityId,
    pub p: PredicateId,
    pub o: EntityId,
}

impl Fact {
    pub fn new(s: EntityId, p: PredicateId, o: EntityId) -> Self {
        Fact { s, p, o }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    /// +1 for positive, −1 for negative.
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

/// Which argument of a fact gets replaced when corrupting it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Subject,
    Object,
}

/// Bijective label ↔ id map with ids contiguous from 0.
#[derive(Clone, Debug, Default)]
pub struct Dictionary {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), id);
        id
    }

    pub fn get(&self, label: &str) -> Option<u32> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: u32) -> Option<&str> {
        self.labels.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Writes `id TAB label` lines.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        for (id, label) in self.labels.iter().enumerate() {
            writeln!(w, "{id}\t{label}")?;
        }
        Ok(())
    }

    /// Reads a dump written by [`Dictionary::write_dump`]. Ids must be
    /// contiguous and in order.
    pub fn read_dump<R: BufRead>(r: R) -> Result<Self> {
        let mut dict = Dictionary::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let (id, label) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: n + 1,
                message: "expected `id TAB label`".into(),
            })?;
            let id: u32 = id.parse().map_err(|_| Error::Parse {
                line: n + 1,
                message: format!("bad id `{id}`"),
            })?;
            if id as usize != dict.len() || dict.get(label).is_some() {
                return Err(Error::Parse {
                    line: n + 1,
                    message: "ids must be contiguous and labels unique".into(),
                });
            }
            dict.intern(label);
        }
        Ok(dict)
    }
}

/// Entity and predicate dictionaries.
#[derive(Clone, Debug, Default)]
pub struct Vocabulary {
    pub entities: Dictionary,
    pub predicates: Dictionary,
}

impl Vocabulary {
    pub fn entity(&self, label: &str) -> Option<EntityId> {
        self.entities.get(label).map(EntityId)
    }

    pub fn predicate(&self, label: &str) -> Option<PredicateId> {
        self.predicates.get(label).map(PredicateId)
    }

    pub fn entity_label(&self, id: EntityId) -> &str {
        self.entities.label(id.0).unwrap_or("<?>")
    }

    pub fn predicate_label(&self, id: PredicateId) -> &str {
        self.predicates.label(id.0).unwrap_or("<?>")
    }

    pub fn intern_triple(&mut self, s: &str, p: &str, o: &str) -> Fact {
        Fact {
            s: EntityId(self.entities.intern(s)),
            p: PredicateId(self.predicates.intern(p)),
            o: EntityId(self.entities.intern(o)),
        }
    }

    pub fn display_fact(&self, f: &Fact) -> String {
        format!(
            "{}({}, {})",
            self.predicate_label(f.p),
            self.entity_label(f.s),
            self.entity_label(f.o)
        )
    }
}

/// Parses TSV triples into label triples. Accepts LF and CRLF line endings
/// and skips blank lines.
pub fn parse_tsv<R: BufRead>(source: R) -> Result<Vec<[String; 3]>> {
    let mut out = Vec::new();
    for (n, line) in source.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: n + 1,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        out.push([fields[0].to_owned(), fields[1].to_owned(), fields[2].to_owned()]);
    }
    Ok(out)
}

/// Reads a TSV triple stream into a fresh graph with its own vocabulary.
pub fn ingest_triples<R: BufRead>(source: R) -> Result<KnowledgeGraph> {
    let triples = parse_tsv(source)?;
    if triples.is_empty() {
        return Err(Error::EmptyInput("no triples".into()));
    }
    let mut vocab = Vocabulary::default();
    let facts: Vec<Fact> = triples
        .iter()
        .map(|[s, p, o]| vocab.intern_triple(s, p, o))
        .collect();
    Ok(KnowledgeGraph::from_facts(Arc::new(vocab), facts))
}

#[derive(Clone, Debug, Default)]
struct PredicateIndex {
    /// `(s, o)` pairs, sorted.
    pairs: Vec<(EntityId, EntityId)>,
    by_subject: HashMap<EntityId, Vec<EntityId>>,
    by_object: HashMap<EntityId, Vec<EntityId>>,
    subjects: Vec<EntityId>,
    objects: Vec<EntityId>,
}

impl PredicateIndex {
    fn build(mut pairs: Vec<(EntityId, EntityId)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        let mut by_subject: HashMap<EntityId, Vec<EntityId>> = HashMap::new();
        let mut by_object: HashMap<EntityId, Vec<EntityId>> = HashMap::new();
        for &(s, o) in &pairs {
            by_subject.entry(s).or_default().push(o);
            by_object.entry(o).or_default().push(s);
        }
        for v in by_object.values_mut() {
            v.sort_unstable();
        }
        let mut subjects: Vec<EntityId> = by_subject.keys().copied().collect();
        subjects.sort_unstable();
        let mut objects: Vec<EntityId> = by_object.keys().copied().collect();
        objects.sort_unstable();
        PredicateIndex { pairs, by_subject, by_object, subjects, objects }
    }

    fn contains(&self, s: EntityId, o: EntityId) -> bool {
        self.by_subject
            .get(&s)
            .is_some_and(|objs| objs.binary_search(&o).is_ok())
    }

    /// Probability of corrupting the subject: tph / (tph + hpt).
    fn subject_corruption_probability(&self) -> f64 {
        if self.pairs.is_empty() {
            return 0.5;
        }
        let n = self.pairs.len() as f64;
        let tph = n / self.subjects.len() as f64;
        let hpt = n / self.objects.len() as f64;
        tph / (tph + hpt)
    }
}

/// A pattern with optional wildcards; `None` matches anything.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Pattern {
    pub s: Option<EntityId>,
    pub p: Option<PredicateId>,
    pub o: Option<EntityId>,
}

impl Pattern {
    pub fn new(s: Option<EntityId>, p: PredicateId, o: Option<EntityId>) -> Self {
        Pattern { s, p: Some(p), o }
    }
}

/// Positive facts K+, explicit negatives K−, and the indexes over K+.
#[derive(Clone, Debug)]
pub struct KnowledgeGraph {
    vocab: Arc<Vocabulary>,
    positives: BTreeSet<Fact>,
    negatives: BTreeSet<Fact>,
    index: Vec<PredicateIndex>,
    by_pair: HashMap<(EntityId, EntityId), Vec<PredicateId>>,
}

impl KnowledgeGraph {
    /// Builds a graph over `vocab`. Duplicate facts collapse.
    pub fn from_facts(vocab: Arc<Vocabulary>, facts: impl IntoIterator<Item = Fact>) -> Self {
        let positives: BTreeSet<Fact> = facts.into_iter().collect();
        let mut per_pred: Vec<Vec<(EntityId, EntityId)>> = vec![Vec::new(); vocab.predicates.len()];
        let mut by_pair: HashMap<(EntityId, EntityId), Vec<PredicateId>> = HashMap::new();
        for f in &positives {
            per_pred[f.p.index()].push((f.s, f.o));
            by_pair.entry((f.s, f.o)).or_default().push(f.p);
        }
        KnowledgeGraph {
            vocab,
            positives,
            negatives: BTreeSet::new(),
            index: per_pred.into_iter().map(PredicateIndex::build).collect(),
            by_pair,
        }
    }

    /// Adds explicit negatives. Any negative that is also positive is
    /// rejected.
    pub fn with_negatives(mut self, negatives: impl IntoIterator<Item = Fact>) -> Result<Self> {
        for f in negatives {
            if self.positives.contains(&f) {
                return Err(Error::InvalidArgument(format!(
                    "negative {} is also a positive",
                    self.vocab.display_fact(&f)
                )));
            }
            self.negatives.insert(f);
        }
        Ok(self)
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn num_entities(&self) -> usize {
        self.vocab.entities.len()
    }

    pub fn num_predicates(&self) -> usize {
        self.vocab.predicates.len()
    }

    pub fn len(&self) -> usize {
        self.positives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty()
    }

    pub fn positives(&self) -> impl Iterator<Item = &Fact> {
        self.positives.iter()
    }

    pub fn negatives(&self) -> impl Iterator<Item = &Fact> {
        self.negatives.iter()
    }

    pub fn contains(&self, f: &Fact) -> bool {
        self.index
            .get(f.p.index())
            .is_some_and(|idx| idx.contains(f.s, f.o))
    }

    pub fn is_negative(&self, f: &Fact) -> bool {
        self.negatives.contains(f)
    }

    pub fn predicates(&self) -> impl Iterator<Item = PredicateId> {
        (0..self.num_predicates() as u32).map(PredicateId)
    }

    fn pred_index(&self, p: PredicateId) -> Result<&PredicateIndex> {
        self.index
            .get(p.index())
            .ok_or_else(|| Error::UnknownPredicate(format!("id {}", p.0)))
    }

    /// Known subjects D^p and known objects D̄^p, sorted.
    pub fn domains(&self, p: PredicateId) -> Result<(&[EntityId], &[EntityId])> {
        let idx = self.pred_index(p)?;
        Ok((&idx.subjects, &idx.objects))
    }

    /// |Ω^p| = |D^p|·|D̄^p|.
    pub fn potential_set_size(&self, p: PredicateId) -> Result<usize> {
        let (d, r) = self.domains(p)?;
        Ok(d.len() * r.len())
    }

    /// Whether `p(s, o)` lies in the potential set of `p`.
    pub fn in_potential_set(&self, f: &Fact) -> bool {
        self.index.get(f.p.index()).is_some_and(|idx| {
            idx.by_subject.contains_key(&f.s) && idx.by_object.contains_key(&f.o)
        })
    }

    /// Number of positive facts with predicate `p`.
    pub fn predicate_count(&self, p: PredicateId) -> usize {
        self.index.get(p.index()).map_or(0, |idx| idx.pairs.len())
    }

    /// Objects `o` with `p(s, o)` ∈ K+, sorted.
    pub fn objects_of(&self, p: PredicateId, s: EntityId) -> &[EntityId] {
        self.index
            .get(p.index())
            .and_then(|idx| idx.by_subject.get(&s))
            .map_or(&[], Vec::as_slice)
    }

    /// Subjects `s` with `p(s, o)` ∈ K+, sorted.
    pub fn subjects_of(&self, p: PredicateId, o: EntityId) -> &[EntityId] {
        self.index
            .get(p.index())
            .and_then(|idx| idx.by_object.get(&o))
            .map_or(&[], Vec::as_slice)
    }

    /// All `(s, o)` pairs of `p`, sorted.
    pub fn pairs_of(&self, p: PredicateId) -> &[(EntityId, EntityId)] {
        self.index.get(p.index()).map_or(&[], |idx| idx.pairs.as_slice())
    }

    /// Yields all positive facts matching `pattern`, sorted.
    pub fn match_pattern(&self, pattern: Pattern) -> Box<dyn Iterator<Item = Fact> + '_> {
        match pattern.p {
            Some(p) => {
                let Some(idx) = self.index.get(p.index()) else {
                    return Box::new(std::iter::empty());
                };
                match (pattern.s, pattern.o) {
                    (Some(s), Some(o)) => {
                        let hit = idx.contains(s, o).then_some(Fact { s, p, o });
                        Box::new(hit.into_iter())
                    }
                    (Some(s), None) => Box::new(
                        self.objects_of(p, s).iter().map(move |&o| Fact { s, p, o }),
                    ),
                    (None, Some(o)) => Box::new(
                        self.subjects_of(p, o).iter().map(move |&s| Fact { s, p, o }),
                    ),
                    (None, None) => {
                        Box::new(idx.pairs.iter().map(move |&(s, o)| Fact { s, p, o }))
                    }
                }
            }
            None => match (pattern.s, pattern.o) {
                (Some(s), Some(o)) => {
                    let mut preds = self.by_pair.get(&(s, o)).cloned().unwrap_or_default();
                    preds.sort_unstable();
                    Box::new(preds.into_iter().map(move |p| Fact { s, p, o }))
                }
                _ => {
                    let mut hits: Vec<Fact> = self
                        .predicates()
                        .flat_map(|p| {
                            self.match_pattern(Pattern { p: Some(p), ..pattern })
                                .collect::<Vec<_>>()
                        })
                        .collect();
                    hits.sort_unstable();
                    Box::new(hits.into_iter())
                }
            },
        }
    }

    /// Probability that a corruption of a `p` fact replaces the subject.
    pub fn subject_corruption_probability(&self, p: PredicateId) -> Result<f64> {
        Ok(self.pred_index(p)?.subject_corruption_probability())
    }

    /// Replaces one side of `fact` with an entity drawn uniformly from the
    /// predicate domain of that side. Candidates equal to the original
    /// entity, present in K+, or rejected by `exclude` are redrawn, up to
    /// [`MAX_CORRUPTION_ATTEMPTS`] times.
    pub fn corrupt_side<R: Rng + ?Sized>(
        &self,
        fact: &Fact,
        side: Side,
        rng: &mut R,
        exclude: &dyn Fn(&Fact) -> bool,
    ) -> Result<Option<Fact>> {
        let idx = self.pred_index(fact.p)?;
        let (pool, current) = match side {
            Side::Subject => (&idx.subjects, fact.s),
            Side::Object => (&idx.objects, fact.o),
        };
        if pool.is_empty() || (pool.len() == 1 && pool[0] == current) {
            return Ok(None);
        }
        for _ in 0..MAX_CORRUPTION_ATTEMPTS {
            let e = pool[rng.gen_range(0..pool.len())];
            if e == current {
                continue;
            }
            let candidate = match side {
                Side::Subject => Fact { s: e, ..*fact },
                Side::Object => Fact { o: e, ..*fact },
            };
            if idx.contains(candidate.s, candidate.o) || exclude(&candidate) {
                continue;
            }
            return Ok(Some(candidate));
        }
        Ok(None)
    }

    /// Draws up to `n` negatives for a positive fact. Each slot picks the
    /// subject side with probability tph/(tph+hpt) and replaces it from the
    /// predicate domain; slots whose rejection sampling fails are skipped.
    pub fn corrupt_fact<R: Rng + ?Sized>(
        &self,
        fact: &Fact,
        rng: &mut R,
        n: usize,
    ) -> Result<Vec<Fact>> {
        if !self.contains(fact) {
            return Err(Error::NotAPositive(self.vocab.display_fact(fact)));
        }
        self.corrupt_any(fact, rng, n)
    }

    /// Like [`KnowledgeGraph::corrupt_fact`] without requiring `fact` ∈ K+;
    /// used for training batches and for held-out facts.
    pub fn corrupt_any<R: Rng + ?Sized>(
        &self,
        fact: &Fact,
        rng: &mut R,
        n: usize,
    ) -> Result<Vec<Fact>> {
        let p_subject = self.subject_corruption_probability(fact.p)?;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let side = if rng.gen_bool(p_subject) { Side::Subject } else { Side::Object };
            if let Some(neg) = self.corrupt_side(fact, side, rng, &|_| false)? {
                out.push(neg);
            }
        }
        if n > 0 && out.is_empty() {
            log::warn!(
                "could not corrupt {}: predicate domains exhausted",
                self.vocab.display_fact(fact)
            );
        }
        Ok(out)
    }

    /// Writes K+ as label TSV.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for f in &self.positives {
            writeln!(
                w,
                "{}\t{}\t{}",
                self.vocab.entity_label(f.s),
                self.vocab.predicate_label(f.p),
                self.vocab.entity_label(f.o)
            )?;
        }
        Ok(())
    }

    pub fn display(&self, f: &Fact) -> FactDisplay<'_> {
        FactDisplay { vocab: &self.vocab, fact: *f }
    }
}

pub struct FactDisplay<'a> {
    vocab: &'a Vocabulary,
    fact: Fact,
}

impl fmt::Display for FactDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.vocab.display_fact(&self.fact))
    }
}

/// Train/valid/test splits over one shared vocabulary.
///
/// `train` is the graph embeddings are fit on and rules are mined against;
/// `known` holds every fact of every split and supplies predicate domains,
/// corruption filtering and filtered ranking.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub train: KnowledgeGraph,
    pub known: KnowledgeGraph,
    pub valid: Vec<Fact>,
    pub test: Vec<Fact>,
}

impl Dataset {
    /// Builds a dataset from label triples. `valid` may be empty.
    pub fn from_labels(
        train: &[[String; 3]],
        valid: &[[String; 3]],
        test: &[[String; 3]],
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyInput("training split has no triples".into()));
        }
        let mut vocab = Vocabulary::default();
        let mut intern = |rows: &[[String; 3]]| -> Vec<Fact> {
            rows.iter().map(|[s, p, o]| vocab.intern_triple(s, p, o)).collect()
        };
        let train_f = intern(train);
        let mut valid_f = intern(valid);
        let mut test_f = intern(test);
        valid_f.sort_unstable();
        valid_f.dedup();
        test_f.sort_unstable();
        test_f.dedup();
        let vocab = Arc::new(vocab);
        let known = KnowledgeGraph::from_facts(
            vocab.clone(),
            train_f.iter().chain(&valid_f).chain(&test_f).copied(),
        );
        let train = KnowledgeGraph::from_facts(vocab, train_f);
        Ok(Dataset { train, known, valid: valid_f, test: test_f })
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        self.train.vocab()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kg(tsv: &str) -> KnowledgeGraph {
        ingest_triples(tsv.as_bytes()).unwrap()
    }

    fn id(kg: &KnowledgeGraph, e: &str) -> EntityId {
        kg.vocab().entity(e).unwrap()
    }

    fn pid(kg: &KnowledgeGraph, p: &str) -> PredicateId {
        kg.vocab().predicate(p).unwrap()
    }

    #[test]
    fn single_line() {
        let g = kg("a\tp\tb\n");
        assert_eq!(g.num_entities(), 2);
        assert_eq!(g.num_predicates(), 1);
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn duplicates_collapse() {
        assert_eq!(kg("a\tp\tb\na\tp\tb\n").len(), 1);
    }

    #[test]
    fn crlf_and_blank_lines() {
        let g = kg("a\tp\tb\r\n\r\nc\tp\td\r\n");
        assert_eq!(g.len(), 2);
        assert!(g.vocab().entity("b").is_some());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match ingest_triples("a\tp\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        match ingest_triples("a\tp\tb\nx\ty\tz\tw\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(ingest_triples("".as_bytes()), Err(Error::EmptyInput(_))));
        assert!(matches!(ingest_triples("\n\n".as_bytes()), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn domains_of_predicate() {
        let g = kg("a\tp\tb\na\tp\tc\n");
        let (d, r) = g.domains(pid(&g, "p")).unwrap();
        assert_eq!(d, &[id(&g, "a")]);
        let mut expected = vec![id(&g, "b"), id(&g, "c")];
        expected.sort();
        assert_eq!(r, expected.as_slice());

        let g = kg("a\tp\tb\nc\tq\td\n");
        let (d, r) = g.domains(pid(&g, "p")).unwrap();
        assert_eq!(d, &[id(&g, "a")]);
        assert_eq!(r, &[id(&g, "b")]);
        assert!(matches!(g.domains(PredicateId(9)), Err(Error::UnknownPredicate(_))));
    }

    #[test]
    fn potential_set_size_matches_enumeration() {
        let g = kg("a\tp\tb\nc\tp\td\n");
        let p = pid(&g, "p");
        let (d, r) = g.domains(p).unwrap();
        let enumerated: BTreeSet<(EntityId, EntityId)> =
            d.iter().flat_map(|&s| r.iter().map(move |&o| (s, o))).collect();
        assert_eq!(enumerated.len(), 4);
        assert_eq!(g.potential_set_size(p).unwrap(), 4);
    }

    #[test]
    fn pattern_matching() {
        let g = kg("a\tp\tb\na\tp\tc\nd\tp\tb\n");
        let p = pid(&g, "p");
        let (a, b, c, d) = (id(&g, "a"), id(&g, "b"), id(&g, "c"), id(&g, "d"));
        let got: Vec<Fact> = g.match_pattern(Pattern::new(Some(a), p, None)).collect();
        assert_eq!(got, vec![Fact::new(a, p, b), Fact::new(a, p, c)]);
        let got: Vec<Fact> = g.match_pattern(Pattern::new(None, p, Some(b))).collect();
        assert_eq!(got, vec![Fact::new(a, p, b), Fact::new(d, p, b)]);
        let got: Vec<Fact> = g.match_pattern(Pattern::new(Some(a), p, Some(b))).collect();
        assert_eq!(got, vec![Fact::new(a, p, b)]);
        assert_eq!(g.match_pattern(Pattern::new(Some(d), p, Some(c))).count(), 0);
    }

    #[test]
    fn wildcard_predicate_pattern() {
        let g = kg("a\tp\tb\na\tq\tb\na\tq\tc\n");
        let (a, b) = (id(&g, "a"), id(&g, "b"));
        let got: Vec<Fact> = g
            .match_pattern(Pattern { s: Some(a), p: None, o: Some(b) })
            .collect();
        assert_eq!(got.len(), 2);
        assert_eq!(g.match_pattern(Pattern::default()).count(), 3);
    }

    #[test]
    fn subject_corruption_picks_only_candidate() {
        let g = kg("a\tp\tb\nc\tp\td\n");
        let f = Fact::new(id(&g, "a"), pid(&g, "p"), id(&g, "b"));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let neg = g.corrupt_side(&f, Side::Subject, &mut rng, &|_| false).unwrap();
        assert_eq!(neg, Some(Fact::new(id(&g, "c"), pid(&g, "p"), id(&g, "b"))));
    }

    #[test]
    fn corruption_edge_cases() {
        let g = kg("a\tp\tb\nc\tp\td\n");
        let p = pid(&g, "p");
        let f = Fact::new(id(&g, "a"), p, id(&g, "b"));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(g.corrupt_fact(&f, &mut rng, 0).unwrap().is_empty());

        let missing = Fact::new(id(&g, "a"), p, id(&g, "d"));
        assert!(matches!(
            g.corrupt_fact(&missing, &mut rng, 1),
            Err(Error::NotAPositive(_))
        ));

        // single subject: subject side can never be corrupted
        let g = kg("a\tp\tb\na\tp\tc\n");
        let f = Fact::new(id(&g, "a"), pid(&g, "p"), id(&g, "b"));
        assert_eq!(g.corrupt_side(&f, Side::Subject, &mut rng, &|_| false).unwrap(), None);
        // every object swap is already positive: domains exhausted
        assert_eq!(g.corrupt_side(&f, Side::Object, &mut rng, &|_| false).unwrap(), None);
        assert!(g.corrupt_fact(&f, &mut rng, 5).unwrap().is_empty());
    }

    #[test]
    fn corruption_is_deterministic() {
        let tsv: String = (0..20).map(|i| format!("e{i}\tp\te{}\n", (i * 7) % 20)).collect();
        let g = kg(&tsv);
        let f = *g.positives().next().unwrap();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            g.corrupt_fact(&f, &mut rng, 10).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn bernoulli_probability() {
        // one subject with three objects: tph = 3, hpt = 1
        let g = kg("a\tp\tb\na\tp\tc\na\tp\td\n");
        let prob = g.subject_corruption_probability(pid(&g, "p")).unwrap();
        assert!((prob - 0.75).abs() < 1e-12);
    }

    #[test]
    fn dictionary_dump_roundtrip() {
        let g = kg("a\tp\tb\nc\tq\td\n");
        let mut buf = Vec::new();
        g.vocab().entities.write_dump(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "0\ta\n1\tb\n2\tc\n3\td\n");
        let back = Dictionary::read_dump(buf.as_slice()).unwrap();
        assert_eq!(back.labels(), g.vocab().entities.labels());
    }

    #[test]
    fn negatives_must_not_be_positive() {
        let g = kg("a\tp\tb\n");
        let f = *g.positives().next().unwrap();
        assert!(g.clone().with_negatives([f]).is_err());
        let neg = Fact::new(f.o, f.p, f.s);
        let g = g.with_negatives([neg]).unwrap();
        assert!(g.is_negative(&neg));
        assert!(!g.contains(&neg));
    }

    #[test]
    fn dataset_shares_vocabulary() {
        let row = |s: &str, p: &str, o: &str| [s.to_owned(), p.to_owned(), o.to_owned()];
        let ds = Dataset::from_labels(
            &[row("a", "p", "b"), row("b", "q", "c")],
            &[],
            &[row("c", "p", "d")],
        )
        .unwrap();
        assert_eq!(ds.train.len(), 2);
        assert_eq!(ds.known.len(), 3);
        assert_eq!(ds.test.len(), 1);
        assert!(ds.known.contains(&ds.test[0]));
        assert!(!ds.train.contains(&ds.test[0]));
    }
}
