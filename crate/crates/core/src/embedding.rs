//! TransE, ComplEx and HolE link predictors.
//!
//! Entity and predicate vectors live in flat row-major tables. ComplEx rows
//! hold `2d` reals: the `d` real parts followed by the `d` imaginary parts.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, Fact, KnowledgeGraph, PredicateId};

/// Anything that scores facts; higher means more plausible.
pub trait LinkPredictor: Sync {
    fn score(&self, fact: &Fact) -> f64;
}

impl<F: Fn(&Fact) -> f64 + Sync> LinkPredictor for F {
    fn score(&self, fact: &Fact) -> f64 {
        self(fact)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    TransE,
    ComplEx,
    HolE,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::TransE, ModelKind::ComplEx, ModelKind::HolE];

    fn code(self) -> u8 {
        match self {
            ModelKind::TransE => 0,
            ModelKind::ComplEx => 1,
            ModelKind::HolE => 2,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(ModelKind::TransE),
            1 => Some(ModelKind::ComplEx),
            2 => Some(ModelKind::HolE),
            _ => None,
        }
    }

    /// Reals per row for dimension `d`.
    pub fn row_width(self, d: usize) -> usize {
        match self {
            ModelKind::ComplEx => 2 * d,
            _ => d,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::TransE => "transe",
            ModelKind::ComplEx => "complex",
            ModelKind::HolE => "hole",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "transe" => Ok(ModelKind::TransE),
            "complex" => Ok(ModelKind::ComplEx),
            "hole" => Ok(ModelKind::HolE),
            other => Err(Error::InvalidArgument(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Hyperparameters for [`EmbeddingModel::train`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Margin γ of the TransE ranking loss.
    pub margin: f64,
    pub negatives: usize,
    /// L2 penalty of the logistic loss (ComplEx, HolE).
    pub l2: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            problems.push("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            problems.push("batch_size must be positive");
        }
        if self.margin.is_nan() || self.margin <= 0.0 {
            problems.push("margin must be positive");
        }
        if self.negatives == 0 {
            problems.push("negatives must be positive");
        }
        if self.l2.is_nan() || self.l2 < 0.0 {
            problems.push("l2 must be non-negative");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 32,
            margin: 1.0,
            negatives: 1,
            l2: 1e-4,
            seed: 0,
        }
    }
}

/// Per-epoch training log.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
}

/// Loss attached to a single fact for gradient computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FactLoss {
    /// The raw score.
    Score,
    /// `log(1 + exp(−y·score)) + l2·(‖s‖² + ‖p‖² + ‖o‖²)`.
    Logistic { label: f64, l2: f64 },
}

/// Sparse gradient over the rows touched by a few facts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradient {
    pub entities: HashMap<EntityId, Vec<f64>>,
    pub predicates: HashMap<PredicateId, Vec<f64>>,
}

impl Gradient {
    fn entity_row(&mut self, e: EntityId, w: usize) -> &mut Vec<f64> {
        self.entities.entry(e).or_insert_with(|| vec![0.0; w])
    }

    fn predicate_row(&mut self, p: PredicateId, w: usize) -> &mut Vec<f64> {
        self.predicates.entry(p).or_insert_with(|| vec![0.0; w])
    }

    pub fn is_zero(&self) -> bool {
        self.entities.values().chain(self.predicates.values()).flatten().all(|&g| g == 0.0)
    }

    /// Scatters into dense gradient tables shaped like the model's.
    pub fn to_dense(&self, model: &EmbeddingModel) -> (Vec<f64>, Vec<f64>) {
        let w = model.row_width();
        let mut ent = vec![0.0; model.entities.len()];
        let mut pred = vec![0.0; model.predicates.len()];
        for (e, g) in &self.entities {
            ent[e.index() * w..(e.index() + 1) * w].copy_from_slice(g);
        }
        for (p, g) in &self.predicates {
            pred[p.index() * w..(p.index() + 1) * w].copy_from_slice(g);
        }
        (ent, pred)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    pub kind: ModelKind,
    pub dim: usize,
    /// Norm order of the TransE distance (1 or 2).
    pub norm: u8,
    pub num_entities: usize,
    pub num_predicates: usize,
    pub entities: Vec<f64>,
    pub predicates: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl EmbeddingModel {
    /// Draws every entry uniformly from `[−6/√d, 6/√d]`.
    pub fn init(
        kind: ModelKind,
        dim: usize,
        norm: u8,
        num_entities: usize,
        num_predicates: usize,
        seed: u64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be at least 1".into()));
        }
        if norm != 1 && norm != 2 {
            return Err(Error::InvalidArgument(format!("norm order must be 1 or 2, got {norm}")));
        }
        let bound = 6.0 / (dim as f64).sqrt();
        let w = kind.row_width(dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.gen_range(-bound..=bound)).collect()
        };
        let entities = draw(num_entities * w);
        let predicates = draw(num_predicates * w);
        Ok(EmbeddingModel { kind, dim, norm, num_entities, num_predicates, entities, predicates })
    }

    /// Sized to the vocabulary of `kg`.
    pub fn init_for(kind: ModelKind, dim: usize, norm: u8, kg: &KnowledgeGraph, seed: u64) -> Result<Self> {
        Self::init(kind, dim, norm, kg.num_entities(), kg.num_predicates(), seed)
    }

    pub fn row_width(&self) -> usize {
        self.kind.row_width(self.dim)
    }

    pub fn entity(&self, e: EntityId) -> &[f64] {
        let w = self.row_width();
        &self.entities[e.index() * w..(e.index() + 1) * w]
    }

    pub fn predicate(&self, p: PredicateId) -> &[f64] {
        let w = self.row_width();
        &self.predicates[p.index() * w..(p.index() + 1) * w]
    }

    fn entity_mut(&mut self, e: EntityId) -> &mut [f64] {
        let w = self.row_width();
        &mut self.entities[e.index() * w..(e.index() + 1) * w]
    }

    fn predicate_mut(&mut self, p: PredicateId) -> &mut [f64] {
        let w = self.row_width();
        &mut self.predicates[p.index() * w..(p.index() + 1) * w]
    }

    pub fn score(&self, f: &Fact) -> f64 {
        let (s, p, o) = (self.entity(f.s), self.predicate(f.p), self.entity(f.o));
        match self.kind {
            ModelKind::TransE => {
                let diffs = s.iter().zip(p).zip(o).map(|((s, p), o)| s + p - o);
                if self.norm == 1 {
                    -diffs.map(f64::abs).sum::<f64>()
                } else {
                    -diffs.map(|x| x * x).sum::<f64>().sqrt()
                }
            }
            ModelKind::ComplEx => {
                let d = self.dim;
                let (a, b) = s.split_at(d);
                let (c, dd) = p.split_at(d);
                let (e, ff) = o.split_at(d);
                (0..d)
                    .map(|j| (a[j] * c[j] - b[j] * dd[j]) * e[j] + (a[j] * dd[j] + b[j] * c[j]) * ff[j])
                    .sum()
            }
            ModelKind::HolE => {
                let corr = circular_correlation(s, o);
                p.iter().zip(&corr).map(|(p, c)| p * c).sum()
            }
        }
    }

    /// Partial derivatives of the score w.r.t. the subject, predicate and
    /// object rows, in that order.
    pub fn score_partials(&self, f: &Fact) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (s, p, o) = (self.entity(f.s), self.predicate(f.p), self.entity(f.o));
        match self.kind {
            ModelKind::TransE => {
                let r: Vec<f64> = s.iter().zip(p).zip(o).map(|((s, p), o)| s + p - o).collect();
                let dr: Vec<f64> = if self.norm == 1 {
                    r.iter().map(|&x| if x == 0.0 { 0.0 } else { -x.signum() }).collect()
                } else {
                    let n = r.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if n == 0.0 {
                        vec![0.0; r.len()]
                    } else {
                        r.iter().map(|x| -x / n).collect()
                    }
                };
                let neg: Vec<f64> = dr.iter().map(|x| -x).collect();
                (dr.clone(), dr, neg)
            }
            ModelKind::ComplEx => {
                let d = self.dim;
                let (a, b) = s.split_at(d);
                let (c, dd) = p.split_at(d);
                let (e, ff) = o.split_at(d);
                let mut gs = vec![0.0; 2 * d];
                let mut gp = vec![0.0; 2 * d];
                let mut go = vec![0.0; 2 * d];
                for j in 0..d {
                    gs[j] = c[j] * e[j] + dd[j] * ff[j];
                    gs[d + j] = -dd[j] * e[j] + c[j] * ff[j];
                    gp[j] = a[j] * e[j] + b[j] * ff[j];
                    gp[d + j] = -b[j] * e[j] + a[j] * ff[j];
                    go[j] = a[j] * c[j] - b[j] * dd[j];
                    go[d + j] = a[j] * dd[j] + b[j] * c[j];
                }
                (gs, gp, go)
            }
            ModelKind::HolE => {
                let d = self.dim;
                let gp = circular_correlation(s, o);
                let mut gs = vec![0.0; d];
                let mut go = vec![0.0; d];
                for (k, &pk) in p.iter().enumerate().take(d) {
                    for i in 0..d {
                        let j = (i + k) % d;
                        gs[i] += pk * o[j];
                        go[j] += pk * s[i];
                    }
                }
                (gs, gp, go)
            }
        }
    }

    /// Value of a per-fact loss.
    pub fn fact_loss(&self, f: &Fact, loss: FactLoss) -> f64 {
        match loss {
            FactLoss::Score => self.score(f),
            FactLoss::Logistic { label, l2 } => {
                let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
                softplus(-label * self.score(f))
                    + l2 * (sq(self.entity(f.s)) + sq(self.predicate(f.p)) + sq(self.entity(f.o)))
            }
        }
    }

    /// Analytic gradient of a per-fact loss, accumulated into `grad`.
    pub fn accumulate_gradient(&self, f: &Fact, loss: FactLoss, scale: f64, grad: &mut Gradient) {
        let w = self.row_width();
        let (gs, gp, go) = self.score_partials(f);
        let (coef, l2) = match loss {
            FactLoss::Score => (1.0, 0.0),
            FactLoss::Logistic { label, l2 } => (-label * sigmoid(-label * self.score(f)), l2),
        };
        let rows = [
            (Some(f.s), None, gs, self.entity(f.s)),
            (None, Some(f.p), gp, self.predicate(f.p)),
            (Some(f.o), None, go, self.entity(f.o)),
        ];
        for (e, p, g, theta) in rows {
            let target = match (e, p) {
                (Some(e), _) => grad.entity_row(e, w),
                (_, Some(p)) => grad.predicate_row(p, w),
                _ => unreachable!(),
            };
            for ((t, g), th) in target.iter_mut().zip(&g).zip(theta) {
                *t += scale * (coef * g + 2.0 * l2 * th);
            }
        }
    }

    /// Gradient of a per-fact loss w.r.t. the rows it touches.
    pub fn gradient(&self, f: &Fact, loss: FactLoss) -> Gradient {
        let mut g = Gradient::default();
        self.accumulate_gradient(f, loss, 1.0, &mut g);
        g
    }

    /// `max(0, γ − score(pos) + score(neg))`.
    pub fn margin_loss(&self, pos: &Fact, neg: &Fact, margin: f64) -> f64 {
        (margin - self.score(pos) + self.score(neg)).max(0.0)
    }

    pub fn accumulate_margin_gradient(&self, pos: &Fact, neg: &Fact, margin: f64, grad: &mut Gradient) {
        if margin - self.score(pos) + self.score(neg) > 0.0 {
            self.accumulate_gradient(pos, FactLoss::Score, -1.0, grad);
            self.accumulate_gradient(neg, FactLoss::Score, 1.0, grad);
        }
    }

    pub fn margin_gradient(&self, pos: &Fact, neg: &Fact, margin: f64) -> Gradient {
        let mut g = Gradient::default();
        self.accumulate_margin_gradient(pos, neg, margin, &mut g);
        g
    }

    fn apply(&mut self, grad: &Gradient, lr: f64) {
        for (e, g) in &grad.entities {
            for (t, g) in self.entity_mut(*e).iter_mut().zip(g) {
                *t -= lr * g;
            }
        }
        for (p, g) in &grad.predicates {
            for (t, g) in self.predicate_mut(*p).iter_mut().zip(g) {
                *t -= lr * g;
            }
        }
    }

    fn normalize_entities(&mut self) {
        let w = self.row_width();
        for row in self.entities.chunks_mut(w) {
            let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.0 {
                row.iter_mut().for_each(|x| *x /= n);
            }
        }
    }

    /// Mini-batch SGD. TransE uses the margin ranking loss and renormalizes
    /// entity rows after each epoch; ComplEx and HolE use the L2-regularized
    /// logistic loss. Negatives come from [`KnowledgeGraph::corrupt_any`].
    pub fn train(&mut self, kg: &KnowledgeGraph, cfg: &TrainConfig) -> Result<TrainReport> {
        cfg.validate()?;
        if kg.is_empty() {
            return Err(Error::EmptyInput("cannot train on an empty graph".into()));
        }
        if kg.num_entities() != self.num_entities || kg.num_predicates() != self.num_predicates {
            return Err(Error::InvalidArgument("model tables do not match the graph vocabulary".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut facts: Vec<Fact> = kg.positives().copied().collect();
        let mut report = TrainReport::default();
        for epoch in 0..cfg.epochs {
            facts.shuffle(&mut rng);
            let mut total = 0.0;
            let mut terms = 0usize;
            for batch in facts.chunks(cfg.batch_size) {
                let mut grad = Gradient::default();
                for pos in batch {
                    let negs = kg.corrupt_any(pos, &mut rng, cfg.negatives)?;
                    match self.kind {
                        ModelKind::TransE => {
                            for neg in &negs {
                                total += self.margin_loss(pos, neg, cfg.margin);
                                terms += 1;
                                self.accumulate_margin_gradient(pos, neg, cfg.margin, &mut grad);
                            }
                        }
                        _ => {
                            let mut add = |f: &Fact, label: f64| {
                                let loss = FactLoss::Logistic { label, l2: cfg.l2 };
                                total += self.fact_loss(f, loss);
                                terms += 1;
                                self.accumulate_gradient(f, loss, 1.0, &mut grad);
                            };
                            add(pos, 1.0);
                            for neg in &negs {
                                add(neg, -1.0);
                            }
                        }
                    }
                }
                self.apply(&grad, cfg.learning_rate);
            }
            if self.kind == ModelKind::TransE {
                self.normalize_entities();
            }
            let mean = if terms == 0 { 0.0 } else { total / terms as f64 };
            if !mean.is_finite() || self.entities.iter().chain(&self.predicates).any(|x| !x.is_finite()) {
                return Err(Error::Numeric(format!("training diverged at epoch {epoch} (mean loss {mean})")));
            }
            log::debug!("epoch {epoch}: mean loss {mean:.6}");
            report.epoch_losses.push(mean);
        }
        Ok(report)
    }

    /// `s ⊕ o`: the subject row followed by the object row.
    pub fn pair_vector(&self, s: EntityId, o: EntityId) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.row_width());
        v.extend_from_slice(self.entity(s));
        v.extend_from_slice(self.entity(o));
        v
    }

    const MAGIC: &'static [u8; 4] = b"KGEM";
    const VERSION: u32 = 1;

    /// Binary checkpoint: magic, version, kind, norm, dim, entity and
    /// predicate counts, then both tables as little-endian f64, row-major.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&Self::VERSION.to_le_bytes())?;
        w.write_all(&[self.kind.code(), self.norm])?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.num_entities as u64).to_le_bytes())?;
        w.write_all(&(self.num_predicates as u64).to_le_bytes())?;
        for x in self.entities.iter().chain(&self.predicates) {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(Error::ModelFormat("bad magic".into()));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf)?;
        if u32::from_le_bytes(u32buf) != Self::VERSION {
            return Err(Error::ModelFormat("unsupported version".into()));
        }
        let mut kn = [0u8; 2];
        r.read_exact(&mut kn)?;
        let kind = ModelKind::from_code(kn[0]).ok_or_else(|| Error::ModelFormat("bad model kind".into()))?;
        let norm = kn[1];
        r.read_exact(&mut u32buf)?;
        let dim = u32::from_le_bytes(u32buf) as usize;
        let mut u64buf = [0u8; 8];
        r.read_exact(&mut u64buf)?;
        let num_entities = u64::from_le_bytes(u64buf) as usize;
        r.read_exact(&mut u64buf)?;
        let num_predicates = u64::from_le_bytes(u64buf) as usize;
        if dim == 0 || (norm != 1 && norm != 2) {
            return Err(Error::ModelFormat("bad header".into()));
        }
        let w = kind.row_width(dim);
        let mut read_table = |n: usize| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                r.read_exact(&mut u64buf)?;
                out.push(f64::from_le_bytes(u64buf));
            }
            Ok(out)
        };
        let entities = read_table(num_entities * w)?;
        let predicates = read_table(num_predicates * w)?;
        if entities.iter().chain(&predicates).any(|x| !x.is_finite()) {
            return Err(Error::ModelFormat("non-finite values".into()));
        }
        Ok(EmbeddingModel { kind, dim, norm, num_entities, num_predicates, entities, predicates })
    }

    /// CSV export: a `# kind=.. dim=.. norm=..` header, then one
    /// `entity|predicate,id,v0,v1,...` line per row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# kind={} dim={} norm={}", self.kind, self.dim, self.norm)?;
        let width = self.row_width();
        for (table, data) in [("entity", &self.entities), ("predicate", &self.predicates)] {
            for (i, row) in data.chunks(width).enumerate() {
                write!(w, "{table},{i}")?;
                for x in row {
                    write!(w, ",{x:?}")?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }

    /// Reads the format written by [`EmbeddingModel::write_csv`], so that
    /// externally trained tables can be explained without retraining.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::ModelFormat("empty file".into()))?;
        let header = header?;
        let mut kind = None;
        let mut dim = None;
        let mut norm = None;
        for kv in header.trim_start_matches('#').split_whitespace() {
            match kv.split_once('=') {
                Some(("kind", v)) => kind = Some(v.parse::<ModelKind>()?),
                Some(("dim", v)) => dim = v.parse::<usize>().ok(),
                Some(("norm", v)) => norm = v.parse::<u8>().ok(),
                _ => {}
            }
        }
        let (Some(kind), Some(dim), Some(norm)) = (kind, dim, norm) else {
            return Err(Error::ModelFormat("header must carry kind, dim and norm".into()));
        };
        let width = kind.row_width(dim);
        let mut entities: Vec<(usize, Vec<f64>)> = Vec::new();
        let mut predicates: Vec<(usize, Vec<f64>)> = Vec::new();
        for (n, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |m: &str| Error::Parse { line: n + 1, message: m.to_owned() };
            let mut fields = line.split(',');
            let table = fields.next().ok_or_else(|| bad("missing table"))?;
            let id: usize = fields.next().and_then(|s| s.trim().parse().ok()).ok_or_else(|| bad("bad id"))?;
            let row: Vec<f64> = fields
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("bad number"))?;
            if row.len() != width {
                return Err(bad("row width does not match header"));
            }
            match table {
                "entity" => entities.push((id, row)),
                "predicate" => predicates.push((id, row)),
                _ => return Err(bad("table must be `entity` or `predicate`")),
            }
        }
        let flatten = |mut rows: Vec<(usize, Vec<f64>)>| -> Result<Vec<f64>> {
            rows.sort_by_key(|(i, _)| *i);
            if rows.iter().enumerate().any(|(k, (i, _))| k != *i) {
                return Err(Error::ModelFormat("row ids must be contiguous from 0".into()));
            }
            Ok(rows.into_iter().flat_map(|(_, r)| r).collect())
        };
        let num_entities = entities.len();
        let num_predicates = predicates.len();
        Ok(EmbeddingModel {
            kind,
            dim,
            norm,
            num_entities,
            num_predicates,
            entities: flatten(entities)?,
            predicates: flatten(predicates)?,
        })
    }
}

impl LinkPredictor for EmbeddingModel {
    fn score(&self, fact: &Fact) -> f64 {
        EmbeddingModel::score(self, fact)
    }
}

/// `(a ⋆ b)_k = Σ_i a_i · b_{(i+k) mod d}`.
pub fn circular_correlation(a: &[f64], b: &[f64]) -> Vec<f64> {
    let d = a.len();
    (0..d)
        .map(|k| (0..d).map(|i| a[i] * b[(i + k) % d]).sum())
        .collect()
}
