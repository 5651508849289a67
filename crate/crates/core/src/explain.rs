//! Rule-based surrogate explanations.
//!
//! A black-box scorer is thresholded into positive and negative verdicts on
//! a context, rules are mined with the verdicts as head facts, every fact
//! is encoded by the rules firing at its subject/object pair, and an
//! L2-regularized logistic regression over those features yields one
//! attribution weight per rule.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::embedding::LinkPredictor;
use crate::eval::{mrr, roc_auc, FidelityRecord};
use crate::kg::{Dataset, EntityId, Fact, KnowledgeGraph, PredicateId, Side};
use crate::rules::{fires_at, mine, AugmentedGraph, HornRule, MinedRule, MinerConfig};
use crate::scope::{Context, Scope};
use crate::{Error, Result};

/// Gradient-norm tolerance for the surrogate fit.
pub const FIT_TOLERANCE: f64 = 1e-8;
pub const FIT_MAX_ITERATIONS: usize = 10_000;
/// Above this many features the fit uses gradient descent instead of Newton.
const NEWTON_MAX_FEATURES: usize = 400;
/// Slope penalty keeping the calibration fit finite on separable scores.
const CALIBRATION_L2: f64 = 1e-6;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// A fitted `sigmoid(slope·score + intercept)` on the raw score scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub slope: f64,
    pub intercept: f64,
    /// Score at which the fitted probability is one half.
    pub threshold: f64,
}

impl Calibration {
    pub fn probability(&self, score: f64) -> f64 {
        sigmoid(self.slope * score + self.intercept)
    }
}

/// Threshold of [`calibrate`].
pub fn calibrate_threshold(scores: &[f64], labels: &[bool]) -> Result<f64> {
    Ok(calibrate(scores, labels)?.threshold)
}

/// Fits a one-dimensional logistic regression to (score, label) pairs on
/// standardized scores. The slope must come out positive.
pub fn calibrate(scores: &[f64], labels: &[bool]) -> Result<Calibration> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument("scores and labels differ in length".into()));
    }
    if scores.len() < 4 {
        return Err(Error::Calibration(format!("need at least 4 points, got {}", scores.len())));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("non-finite score in calibration data".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::Calibration("calibration data has a single class".into()));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let sd = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        return Err(Error::Calibration("all scores are equal".into()));
    }
    let xs: Vec<f64> = scores.iter().map(|s| (s - mean) / sd).collect();
    let ys: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();

    let loss = |a: f64, b: f64| {
        xs.iter().zip(&ys).map(|(x, y)| softplus(-y * (a * x + b))).sum::<f64>()
            + 0.5 * CALIBRATION_L2 * a * a
    };
    let (mut a, mut b) = (0.0f64, 0.0f64);
    for _ in 0..FIT_MAX_ITERATIONS {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (CALIBRATION_L2 * a, 0.0, CALIBRATION_L2, 0.0, 1e-12);
        for (x, y) in xs.iter().zip(&ys) {
            let p = sigmoid(a * x + b);
            let r = p - (y + 1.0) / 2.0;
            ga += r * x;
            gb += r;
            let w = p * (1.0 - p);
            haa += w * x * x;
            hab += w * x;
            hbb += w;
        }
        if (ga * ga + gb * gb).sqrt() <= FIT_TOLERANCE {
            break;
        }
        let det = haa * hbb - hab * hab;
        let (da, db) = (-(hbb * ga - hab * gb) / det, -(haa * gb - hab * ga) / det);
        let f0 = loss(a, b);
        let slope = ga * da + gb * db;
        let mut step = 1.0;
        while loss(a + step * da, b + step * db) > f0 + 1e-4 * step * slope && step > 1e-12 {
            step *= 0.5;
        }
        a += step * da;
        b += step * db;
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numeric("calibration diverged".into()));
    }
    if a <= 0.0 {
        return Err(Error::Calibration(
            "scores are not positively associated with the labels".into(),
        ));
    }
    // back to the raw score scale
    Ok(Calibration { slope: a / sd, intercept: b - a * mean / sd, threshold: mean - sd * b / a })
}

/// One context fact with the black box's score and verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedFact {
    pub fact: Fact,
    pub score: f64,
    /// `score ≥ θ`.
    pub verdict: bool,
    /// Ground truth from the context construction.
    pub label: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedContext {
    pub threshold: f64,
    pub facts: Vec<AnnotatedFact>,
}

impl AnnotatedContext {
    pub fn pairs(&self, verdict: bool) -> impl Iterator<Item = (EntityId, EntityId)> + '_ {
        self.facts.iter().filter(move |a| a.verdict == verdict).map(|a| (a.fact.s, a.fact.o))
    }
}

pub fn binarize(f: &dyn LinkPredictor, ctx: &Context, threshold: f64) -> AnnotatedContext {
    let facts = ctx
        .facts
        .iter()
        .map(|lf| {
            let score = f.score(&lf.fact);
            AnnotatedFact { fact: lf.fact, score, verdict: score >= threshold, label: lf.label }
        })
        .collect();
    AnnotatedContext { threshold, facts }
}

/// A mined rule as used by the surrogate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplainedRule {
    /// Rendered form, e.g. `q(?x,?z) & r(?z,?y) => p^f(?x,?y)`.
    pub text: String,
    pub rule: HornRule,
    /// +1 for rules concluding a positive verdict, -1 for negative.
    pub head_sign: f64,
    pub conf: f64,
    pub correct: usize,
    /// Attribution weight; zero until fitted.
    pub coefficient: f64,
}

impl ExplainedRule {
    pub fn feature_value(&self, kg: &KnowledgeGraph, s: EntityId, o: EntityId) -> f64 {
        if fires_at(kg, &self.rule, s, o) {
            self.head_sign * self.conf
        } else {
            0.0
        }
    }
}

/// Feature vector of the pair `(s, o)`: each rule contributes its signed
/// confidence when it fires there, zero otherwise. The value does not
/// depend on the polarity of the annotated fact: a rule agreeing with the
/// fact's verdict yields `sgn(A)·conf`, a rule concluding the opposite
/// verdict yields `-sgn(A)·conf`, and both equal `head_sign·conf`.
pub fn encode_features(rules: &[ExplainedRule], kg: &KnowledgeGraph, s: EntityId, o: EntityId) -> Vec<f64> {
    rules.iter().map(|r| r.feature_value(kg, s, o)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Fitted on a single class: coefficients are zero and the intercept
    /// is the smoothed log-odds.
    pub degenerate: bool,
    pub iterations: usize,
}

impl SurrogateModel {
    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.intercept + self.coefficients.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
    }
}

/// Minimizes `Σ log(1 + exp(-y·(w·x + b))) + λ/2·‖w‖²` from a zero start.
/// The intercept is not penalized.
pub fn fit_surrogate(x: &[Vec<f64>], y: &[bool], l2: f64) -> Result<SurrogateModel> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::InsufficientData(format!("{} rows for {} labels", x.len(), y.len())));
    }
    if !(l2.is_finite() && l2 >= 0.0) {
        return Err(Error::InvalidArgument(format!("l2 strength {l2} must be finite and non-negative")));
    }
    let p = x[0].len();
    if x.iter().any(|row| row.len() != p) {
        return Err(Error::InvalidArgument("ragged feature matrix".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite feature value".into()));
    }
    let n_pos = y.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == y.len() {
        log::warn!("surrogate fitted on a single class; using a constant model");
        let logit = ((n_pos as f64 + 0.5) / ((y.len() - n_pos) as f64 + 0.5)).ln();
        return Ok(SurrogateModel { coefficients: vec![0.0; p], intercept: logit, degenerate: true, iterations: 0 });
    }

    // design matrix with a trailing intercept column
    let n = x.len();
    let xm = DMatrix::from_fn(n, p + 1, |i, j| if j < p { x[i][j] } else { 1.0 });
    let ys = DVector::from_iterator(n, y.iter().map(|&l| if l { 1.0 } else { -1.0 }));
    let mut penalty = DVector::from_element(p + 1, l2);
    penalty[p] = 0.0;

    let loss = |beta: &DVector<f64>| {
        let z = &xm * beta;
        z.iter().zip(ys.iter()).map(|(z, y)| softplus(-y * z)).sum::<f64>()
            + 0.5 * beta.iter().zip(penalty.iter()).map(|(b, l)| l * b * b).sum::<f64>()
    };
    let gradient = |beta: &DVector<f64>| {
        let z = &xm * beta;
        let r = DVector::from_iterator(n, z.iter().zip(ys.iter()).map(|(z, y)| sigmoid(*z) - (y + 1.0) / 2.0));
        xm.tr_mul(&r) + penalty.component_mul(beta)
    };

    let mut beta = DVector::zeros(p + 1);
    let mut iterations = 0;
    let lipschitz = 0.25 * xm.iter().map(|v| v * v).sum::<f64>() + l2;
    while iterations < FIT_MAX_ITERATIONS {
        let g = gradient(&beta);
        if g.norm() <= FIT_TOLERANCE {
            break;
        }
        iterations += 1;
        let dir = if p < NEWTON_MAX_FEATURES {
            let z = &xm * &beta;
            let w = DVector::from_iterator(n, z.iter().map(|&z| {
                let s = sigmoid(z);
                s * (1.0 - s)
            }));
            let mut h = xm.tr_mul(&DMatrix::from_fn(n, p + 1, |i, j| w[i] * xm[(i, j)]));
            for j in 0..=p {
                h[(j, j)] += penalty[j] + 1e-12;
            }
            match h.cholesky() {
                Some(c) => -c.solve(&g),
                None => -&g / lipschitz,
            }
        } else {
            -&g / lipschitz
        };
        let f0 = loss(&beta);
        let slope = g.dot(&dir);
        let mut step = 1.0;
        loop {
            let cand = &beta + &dir * step;
            if loss(&cand) <= f0 + 1e-4 * step * slope || step < 1e-12 {
                beta = cand;
                break;
            }
            step *= 0.5;
        }
    }
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("surrogate fit diverged".into()));
    }
    Ok(SurrogateModel {
        coefficients: beta.iter().take(p).copied().collect(),
        intercept: beta[p],
        degenerate: false,
        iterations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainConfig {
    pub miner: MinerConfig,
    pub l2: f64,
    /// Verdict threshold. Calibrated on the training split when absent.
    pub threshold: Option<f64>,
    /// Compute subject/object MRR on the held-out true facts.
    pub ranking: bool,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig { miner: MinerConfig::default(), l2: 1.0, threshold: None, ranking: true }
    }
}

/// Rules plus attribution for one context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub scope: Scope,
    pub predicate: String,
    pub predicate_id: PredicateId,
    pub threshold: f64,
    pub intercept: f64,
    pub rules: Vec<ExplainedRule>,
    /// Absent when no rule was mined.
    pub fidelity: Option<FidelityRecord>,
    /// At least one rule was mined.
    pub covered: bool,
    /// The training verdicts were single-class.
    pub degenerate: bool,
    pub train_size: usize,
    pub test_size: usize,
}

impl Explanation {
    /// Rules ordered by descending |coefficient|, ties by text.
    pub fn ranked_rules(&self) -> Vec<&ExplainedRule> {
        let mut out: Vec<&ExplainedRule> = self.rules.iter().collect();
        out.sort_by(|a, b| {
            b.coefficient.abs().total_cmp(&a.coefficient.abs()).then_with(|| a.text.cmp(&b.text))
        });
        out
    }

    pub fn attributing_rules(&self) -> usize {
        self.rules.iter().filter(|r| r.coefficient != 0.0).count()
    }

    pub fn features(&self, kg: &KnowledgeGraph, s: EntityId, o: EntityId) -> Vec<f64> {
        encode_features(&self.rules, kg, s, o)
    }

    fn probability_unchecked(&self, kg: &KnowledgeGraph, f: &Fact) -> f64 {
        let z: f64 = self
            .rules
            .iter()
            .map(|r| if r.coefficient == 0.0 { 0.0 } else { r.coefficient * r.feature_value(kg, f.s, f.o) })
            .sum();
        sigmoid(self.intercept + z)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Surrogate probability that `fact` is judged true, evaluated against the
/// background graph the explanation was mined on.
pub fn surrogate_score(expl: &Explanation, kg: &KnowledgeGraph, fact: &Fact) -> Result<f64> {
    if fact.p != expl.predicate_id {
        return Err(Error::InvalidArgument(format!(
            "explanation covers {}, got {}",
            expl.predicate,
            kg.vocab().display_fact(fact)
        )));
    }
    Ok(expl.probability_unchecked(kg, fact))
}

/// Labels of the surrogate head predicates for `p`.
pub fn surrogate_labels(p: &str) -> (String, String) {
    (format!("{p}^f"), format!("~{p}^f"))
}

/// Calibrates (unless a threshold is given), binarizes, mines, encodes and
/// fits on `train`; fidelity is measured on `test`. Rules are mined over
/// `data.train`; ranking candidates and filtering use `data.known`.
pub fn build_explanation(
    f: &dyn LinkPredictor,
    data: &Dataset,
    train: &Context,
    test: &Context,
    cfg: &ExplainConfig,
) -> Result<Explanation> {
    let p = train.predicate;
    if test.predicate != p {
        return Err(Error::InvalidArgument("train and test contexts differ in predicate".into()));
    }
    if train.facts.is_empty() {
        return Err(Error::InsufficientData("empty training context".into()));
    }
    let kg = &data.train;
    let threshold = match cfg.threshold {
        Some(t) => t,
        None => {
            let scores: Vec<f64> = train.facts.iter().map(|lf| f.score(&lf.fact)).collect();
            let labels: Vec<bool> = train.facts.iter().map(|lf| lf.label).collect();
            calibrate_threshold(&scores, &labels)?
        }
    };
    let ann_train = binarize(f, train, threshold);
    let ann_test = binarize(f, test, threshold);

    let p_label = kg.vocab().predicate_label(p).to_owned();
    let (pos_label, neg_label) = surrogate_labels(&p_label);
    let mut g = AugmentedGraph::new(kg);
    let pos_head = g.add_head(pos_label, ann_train.pairs(true), ann_train.pairs(false))?;
    g.add_head(neg_label, ann_train.pairs(false), ann_train.pairs(true))?;
    let mined: Vec<MinedRule> = mine(&g, &cfg.miner)?;
    log::info!("{}: {} rules mined on {} facts", p_label, mined.len(), train.facts.len());

    let degenerate_verdicts = ann_train.facts.iter().all(|a| a.verdict) || ann_train.facts.iter().all(|a| !a.verdict);
    let mut expl = Explanation {
        scope: train.scope.clone(),
        predicate: p_label,
        predicate_id: p,
        threshold,
        intercept: 0.0,
        rules: mined
            .iter()
            .map(|m| ExplainedRule {
                text: m.rule.display(&g),
                rule: m.rule.clone(),
                head_sign: if m.rule.head.predicate == pos_head { 1.0 } else { -1.0 },
                conf: m.conf(),
                correct: m.stats.correct_predictions,
                coefficient: 0.0,
            })
            .collect(),
        fidelity: None,
        covered: !mined.is_empty(),
        degenerate: degenerate_verdicts,
        train_size: train.facts.len(),
        test_size: test.facts.len(),
    };
    if mined.is_empty() {
        return Ok(expl);
    }

    let x: Vec<Vec<f64>> = ann_train.facts.iter().map(|a| expl.features(kg, a.fact.s, a.fact.o)).collect();
    let y: Vec<bool> = ann_train.facts.iter().map(|a| a.verdict).collect();
    let model = fit_surrogate(&x, &y, cfg.l2)?;
    expl.intercept = model.intercept;
    expl.degenerate |= model.degenerate;
    for (r, w) in expl.rules.iter_mut().zip(&model.coefficients) {
        r.coefficient = *w;
    }

    if !test.facts.is_empty() {
        let probs: Vec<f64> = ann_test.facts.iter().map(|a| expl.probability_unchecked(kg, &a.fact)).collect();
        let verdicts: Vec<bool> = ann_test.facts.iter().map(|a| a.verdict).collect();
        let auc = roc_auc(&probs, &verdicts).ok();
        let (mut s_mrr, mut o_mrr) = (None, None);
        if cfg.ranking {
            let truths: Vec<Fact> = test.facts.iter().filter(|lf| lf.label).map(|lf| lf.fact).collect();
            if !truths.is_empty() {
                let score = |c: &Fact| expl.probability_unchecked(kg, c);
                let queries = |side: Side| truths.iter().map(|&t| (t, side)).collect::<Vec<_>>();
                s_mrr = Some(mrr(&queries(Side::Subject), &data.known, &score)?);
                o_mrr = Some(mrr(&queries(Side::Object), &data.known, &score)?);
            }
        }
        expl.fidelity = Some(FidelityRecord {
            roc_auc: auc,
            s_mrr,
            o_mrr,
            size: test.facts.len(),
            scope: test.scope.tag().to_owned(),
        });
    }
    Ok(expl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::ingest_triples;
    use crate::rules::{Atom, Term, Var};

    #[test]
    fn calibration_separated() {
        let theta = calibrate_threshold(&[-1.0, -1.0, 1.0, 1.0], &[false, false, true, true]).unwrap();
        assert!(theta > -1.0 && theta < 1.0);
        assert!(theta.abs() < 1e-9, "symmetric data gives zero, got {theta}");
    }

    #[test]
    fn calibration_asymmetric_lies_between_classes() {
        let scores = [-5.0, -4.0, -3.5, 2.0, 2.5, 7.0];
        let labels = [false, false, false, true, true, true];
        let cal = calibrate(&scores, &labels).unwrap();
        assert!(cal.threshold > -3.5 && cal.threshold < 2.0, "{cal:?}");
        assert!((cal.probability(cal.threshold) - 0.5).abs() < 1e-6);
        assert!(cal.slope > 0.0);
    }

    #[test]
    fn calibration_errors() {
        assert!(matches!(
            calibrate_threshold(&[-1.0, -1.0, 1.0, 1.0], &[true, true, false, false]),
            Err(Error::Calibration(_))
        ));
        assert!(calibrate_threshold(&[0.0, 1.0, 2.0, 3.0], &[true; 4]).is_err());
        assert!(calibrate_threshold(&[0.0, 1.0, 2.0], &[false, true, true]).is_err());
    }

    #[test]
    fn fit_single_predictive_feature() {
        let y = [true, false, true, false, true, false];
        let x: Vec<Vec<f64>> = y.iter().map(|&l| vec![if l { 0.9 } else { -0.9 }]).collect();
        let m = fit_surrogate(&x, &y, 1.0).unwrap();
        assert!(m.coefficients[0] > 0.0);
        for (row, &l) in x.iter().zip(&y) {
            assert_eq!(m.probability(row) >= 0.5, l);
        }
    }

    #[test]
    fn fit_zero_feature_and_redundant_pair() {
        let y = [true, false, true, false, true, true, false, false, true, false];
        let x: Vec<Vec<f64>> = y
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let v = if l { 0.5 } else { -0.5 } + 0.1 * (i % 3) as f64;
                vec![0.0, v, v]
            })
            .collect();
        let m = fit_surrogate(&x, &y, 1.0).unwrap();
        assert!(m.coefficients[0].abs() <= 1e-6);
        assert!((m.coefficients[1] - m.coefficients[2]).abs() < 1e-9);
    }

    #[test]
    fn fit_single_class_is_constant() {
        let m = fit_surrogate(&[vec![1.0], vec![0.0]], &[true, true], 1.0).unwrap();
        assert!(m.degenerate);
        assert_eq!(m.coefficients, vec![0.0]);
        assert!(m.intercept > 0.0);
    }

    #[test]
    fn fit_rejects_non_finite() {
        assert!(matches!(
            fit_surrogate(&[vec![f64::NAN], vec![0.0]], &[true, false], 1.0),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn binarize_threshold_inclusive() {
        let p = PredicateId(0);
        let ctx = Context {
            predicate: p,
            facts: vec![
                crate::scope::LabeledFact { fact: Fact::new(EntityId(0), p, EntityId(1)), label: true, group: 0 },
                crate::scope::LabeledFact { fact: Fact::new(EntityId(1), p, EntityId(0)), label: false, group: 0 },
            ],
            scope: Scope::Global,
        };
        let f = |fact: &Fact| fact.s.0 as f64;
        let ann = binarize(&f, &ctx, 1.0);
        assert_eq!(ann.facts.len(), 2);
        assert!(!ann.facts[0].verdict);
        assert!(ann.facts[1].verdict);
        let low = |_: &Fact| -5.0;
        assert!(binarize(&low, &ctx, 0.0).facts.iter().all(|a| !a.verdict));
    }

    #[test]
    fn surrogate_score_checks_predicate() {
        let kg = ingest_triples("a\tq\tb\na\tr\tb\n".as_bytes()).unwrap();
        let q = kg.vocab().predicate("q").unwrap();
        let r = kg.vocab().predicate("r").unwrap();
        let (a, b) = (kg.vocab().entity("a").unwrap(), kg.vocab().entity("b").unwrap());
        let head = PredicateId(2);
        let rule = HornRule::new(
            vec![Atom::new(q, Term::Var(Var::X), Term::Var(Var::Y))],
            Atom::new(head, Term::Var(Var::X), Term::Var(Var::Y)),
        );
        let expl = Explanation {
            scope: Scope::Global,
            predicate: "r".into(),
            predicate_id: r,
            threshold: 0.0,
            intercept: 0.0,
            rules: vec![ExplainedRule {
                text: String::new(),
                rule,
                head_sign: 1.0,
                conf: 0.5,
                correct: 2,
                coefficient: 2.0,
            }],
            fidelity: None,
            covered: true,
            degenerate: false,
            train_size: 0,
            test_size: 0,
        };
        assert!(surrogate_score(&expl, &kg, &Fact::new(a, q, b)).is_err());
        assert!((surrogate_score(&expl, &kg, &Fact::new(a, r, b)).unwrap() - sigmoid(1.0)).abs() < 1e-12);
        assert_eq!(surrogate_score(&expl, &kg, &Fact::new(b, r, a)).unwrap(), 0.5);
    }
}
