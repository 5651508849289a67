use std::collections::BTreeMap;

use kgexplain::explain::{binarize, calibrate, encode_features, fit_surrogate, ExplainedRule};
use kgexplain::kg::{EntityId, Fact, KnowledgeGraph, PredicateId};
use kgexplain::oracle::{fires_by_enumeration, random_labeled_graph, LabeledHead};
use kgexplain::rules::{mine, AugmentedGraph, MinerConfig, RuleMode};
use kgexplain::scope::{Context, LabeledFact, Scope};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mines both surrogate heads over a random labeled graph, the way the
/// explainer does, and returns the rules with signed confidences.
fn mined_rules(kg: &KnowledgeGraph, head: &LabeledHead, mode: RuleMode) -> Vec<ExplainedRule> {
    let mut g = AugmentedGraph::new(kg);
    let pos = g.add_head("p^f", head.positives.clone(), head.negatives.clone()).unwrap();
    g.add_head("~p^f", head.negatives.clone(), head.positives.clone()).unwrap();
    mine(&g, &MinerConfig::with_mode(mode))
        .unwrap()
        .into_iter()
        .map(|m| ExplainedRule {
            text: m.rule.display(&g),
            head_sign: if m.rule.head.predicate == pos { 1.0 } else { -1.0 },
            conf: m.conf(),
            correct: m.stats.correct_predictions,
            rule: m.rule,
            coefficient: 0.0,
        })
        .collect()
}

fn setup(seed: u64, mode: RuleMode) -> (KnowledgeGraph, LabeledHead, Vec<ExplainedRule>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (kg, head) = match mode {
        RuleMode::Unbounded => random_labeled_graph(&mut rng, 12, 3, 40),
        RuleMode::Bounded => random_labeled_graph(&mut rng, 7, 3, 20),
    };
    let rules = mined_rules(&kg, &head, mode);
    (kg, head, rules)
}

fn mode_strategy() -> impl Strategy<Value = RuleMode> {
    prop_oneof![Just(RuleMode::Unbounded), Just(RuleMode::Bounded)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn encoding_agrees_with_grounding_oracle(seed in any::<u64>(), mode in mode_strategy()) {
        let (kg, _, rules) = setup(seed, mode);
        let n = kg.num_entities() as u32;
        for s in (0..n).map(EntityId) {
            for o in (0..n).map(EntityId) {
                let x = encode_features(&rules, &kg, s, o);
                for (r, v) in rules.iter().zip(&x) {
                    let want = if fires_by_enumeration(&kg, &r.rule, s, o) { r.head_sign * r.conf } else { 0.0 };
                    prop_assert_eq!(*v, want, "{} at ({}, {})", r.text, s.0, o.0);
                }
            }
        }
    }

    #[test]
    fn agreeing_rules_get_positive_weight(seed in any::<u64>(), mode in mode_strategy()) {
        let (kg, head, rules) = setup(seed, mode);
        prop_assume!(!rules.is_empty());
        let mut rows: BTreeMap<(EntityId, EntityId), bool> = BTreeMap::new();
        rows.extend(head.negatives.iter().map(|&p| (p, false)));
        rows.extend(head.positives.iter().map(|&p| (p, true)));
        let x: Vec<Vec<f64>> = rows.keys().map(|&(s, o)| encode_features(&rules, &kg, s, o)).collect();
        let y: Vec<bool> = rows.values().copied().collect();
        let model = fit_surrogate(&x, &y, 1.0).unwrap();
        prop_assume!(!model.degenerate);
        for (i, r) in rules.iter().enumerate() {
            let firing: Vec<bool> = x.iter().zip(&y).filter(|(row, _)| row[i] != 0.0).map(|(_, &l)| l).collect();
            let agrees = !firing.is_empty() && firing.iter().all(|&l| l == (r.head_sign > 0.0));
            if agrees {
                prop_assert!(model.coefficients[i] > 0.0, "{} has weight {}", r.text, model.coefficients[i]);
            }
        }
    }

    #[test]
    fn binarization_follows_threshold(scores in prop::collection::vec(-3i8..3, 1..30), theta in -3i8..3) {
        let p = PredicateId(0);
        let facts: Vec<LabeledFact> = (0..scores.len())
            .map(|i| LabeledFact { fact: Fact::new(EntityId(i as u32), p, EntityId(0)), label: i % 2 == 0, group: i })
            .collect();
        let ctx = Context { predicate: p, facts, scope: Scope::Global };
        let score = |f: &Fact| scores[f.s.0 as usize] as f64;
        let ann = binarize(&score, &ctx, theta as f64);
        prop_assert_eq!(ann.facts.len(), ctx.facts.len());
        for a in &ann.facts {
            prop_assert_eq!(a.verdict, a.score >= theta as f64);
            prop_assert_eq!(a.label, a.fact.s.0 % 2 == 0);
        }
    }

    #[test]
    fn calibration_separates_classes(
        neg in prop::collection::vec(-10.0..0.0f64, 2..20),
        pos in prop::collection::vec(0.0..10.0f64, 2..20),
        gap in 0.01..5.0f64,
    ) {
        let scores: Vec<f64> = neg.iter().copied().chain(pos.iter().map(|p| p + gap)).collect();
        let labels: Vec<bool> = neg.iter().map(|_| false).chain(pos.iter().map(|_| true)).collect();
        let cal = calibrate(&scores, &labels).unwrap();
        let hi_neg = neg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo_pos = pos.iter().copied().fold(f64::INFINITY, f64::min) + gap;
        prop_assert!(cal.threshold > hi_neg && cal.threshold < lo_pos, "{cal:?} outside ({hi_neg}, {lo_pos})");
        prop_assert!((cal.probability(cal.threshold) - 0.5).abs() < 1e-6);
    }
}
