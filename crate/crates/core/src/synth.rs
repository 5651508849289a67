//! Small synthetic graphs with known generating rules.
//!
//! Each generator returns label triples; facts of the target predicate are
//! split between train and test, everything else goes to train.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::{EmbeddingModel, ModelKind};
use crate::kg::Dataset;
use crate::Result;

type Row = [String; 3];

fn row(s: impl Into<String>, p: &str, o: impl Into<String>) -> Row {
    [s.into(), p.to_owned(), o.into()]
}

/// Train/valid/test label triples.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Triples {
    pub train: Vec<Row>,
    pub valid: Vec<Row>,
    pub test: Vec<Row>,
}

impl Triples {
    /// Puts `test_fraction` of the `target` facts into test and the same
    /// number, capped by `valid_fraction`, into valid.
    fn split(rows: Vec<Row>, target: &str, test_fraction: f64, valid_fraction: f64, rng: &mut impl Rng) -> Self {
        let (mut targets, other): (Vec<Row>, Vec<Row>) = rows.into_iter().partition(|r| r[1] == target);
        targets.shuffle(rng);
        let n_test = (test_fraction * targets.len() as f64).round() as usize;
        let n_valid = (valid_fraction * targets.len() as f64).round() as usize;
        let test = targets.drain(..n_test).collect();
        let valid = targets.drain(..n_valid.min(targets.len())).collect();
        let mut train = other;
        train.extend(targets);
        Triples { train, valid, test }
    }

    pub fn dataset(&self) -> Result<Dataset> {
        Dataset::from_labels(&self.train, &self.valid, &self.test)
    }

    /// Writes `train.tsv`, `valid.tsv` and `test.tsv` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, rows) in [("train", &self.train), ("valid", &self.valid), ("test", &self.test)] {
            let body: String = rows.iter().map(|[s, p, o]| format!("{s}\t{p}\t{o}\n")).collect();
            fs::write(dir.join(format!("{name}.tsv")), body)?;
        }
        Ok(())
    }
}

/// `nationality(x, y)` holds exactly when `bornIn(x, z) ∧ cityIn(z, y)`.
/// Every person is born in one random city; city `j` lies in country
/// `j mod countries`.
pub fn composition(seed: u64, persons: usize, cities: usize, countries: usize, test_fraction: f64) -> Triples {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for j in 0..cities {
        rows.push(row(format!("city{j}"), "cityIn", format!("country{}", j % countries)));
    }
    for i in 0..persons {
        let city = rng.gen_range(0..cities);
        rows.push(row(format!("person{i}"), "bornIn", format!("city{city}")));
        rows.push(row(format!("person{i}"), "nationality", format!("country{}", city % countries)));
    }
    Triples::split(rows, "nationality", test_fraction, 0.0, &mut rng)
}

/// `supports(x, team_j)` holds exactly when `memberOf(x, club_j)`, a pattern
/// that needs constants to express. `knows` adds random edges between
/// persons.
pub fn bounded_groups(seed: u64, persons: usize, groups: usize, knows_per_person: usize, test_fraction: f64) -> Triples {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for i in 0..persons {
        let g = i % groups;
        rows.push(row(format!("person{i}"), "memberOf", format!("club{g}")));
        rows.push(row(format!("person{i}"), "supports", format!("team{g}")));
        for _ in 0..knows_per_person {
            let other = rng.gen_range(0..persons);
            if other != i {
                rows.push(row(format!("person{i}"), "knows", format!("person{other}")));
            }
        }
    }
    rows.sort();
    rows.dedup();
    Triples::split(rows, "supports", test_fraction, 0.0, &mut rng)
}

/// Two regimes of `n` subject/object pairs each. In regime `a`,
/// `target(x_i, y_i)` coincides with `left(x_i, y_i)` while `right` links
/// each subject to every other regime object; regime `b` swaps the roles.
/// No rule over the whole graph separates true from false targets, while
/// each regime alone is explained by a single rule.
///
/// The returned TransE model scores `target(x_i, y_i)` at zero and places
/// the regimes ±10 apart along the first axis.
pub fn two_regimes(seed: u64, n: usize, dim: usize, test_fraction: f64) -> Result<(Triples, EmbeddingModel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for (regime, (exact, dense)) in [("a", ("left", "right")), ("b", ("right", "left"))] {
        for i in 0..n {
            let (x, y) = (format!("{regime}_x{i}"), format!("{regime}_y{i}"));
            rows.push(row(&x, "target", &y));
            rows.push(row(&x, exact, &y));
            for j in (0..n).filter(|&j| j != i) {
                rows.push(row(&x, dense, format!("{regime}_y{j}")));
            }
        }
    }
    let triples = Triples::split(rows, "target", test_fraction, 0.0, &mut rng);
    let data = triples.dataset()?;
    let vocab = data.vocab();
    let mut model = EmbeddingModel::init(ModelKind::TransE, dim, 2, vocab.entities.len(), vocab.predicates.len(), seed)?;
    model.predicates.iter_mut().for_each(|v| *v = 0.0);
    for (regime, offset) in [("a", 10.0), ("b", -10.0)] {
        for i in 0..n {
            let mut point: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            point[0] += offset;
            for label in [format!("{regime}_x{i}"), format!("{regime}_y{i}")] {
                let e = vocab.entity(&label).expect("interned").index();
                model.entities[e * dim..(e + 1) * dim].copy_from_slice(&point);
            }
        }
    }
    Ok((triples, model))
}

/// The dataset bundled with the command-line tool.
pub fn toy(seed: u64) -> Triples {
    let mut t = composition(seed, 60, 10, 4, 0.3);
    let g = bounded_groups(seed ^ 1, 40, 3, 2, 0.3);
    t.train.extend(g.train);
    t.test.extend(g.test);
    t
}
