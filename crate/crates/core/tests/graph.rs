use std::collections::BTreeSet;

use kgexplain::embedding::{EmbeddingModel, ModelKind, TrainConfig};
use kgexplain::kg::{ingest_triples, KnowledgeGraph, Pattern};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn triples() -> impl Strategy<Value = Vec<(u8, u8, u8)>> {
    prop::collection::vec((0u8..10, 0u8..3, 0u8..10), 1..60)
}

fn graph(edges: &[(u8, u8, u8)]) -> KnowledgeGraph {
    let tsv: String = edges.iter().map(|(s, p, o)| format!("e{s}\tp{p}\te{o}\n")).collect();
    ingest_triples(tsv.as_bytes()).unwrap()
}

fn labels(kg: &KnowledgeGraph) -> BTreeSet<String> {
    kg.positives().map(|f| kg.vocab().display_fact(f)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn negatives_stay_in_domain_and_out_of_graph(edges in triples(), seed in any::<u64>()) {
        let kg = graph(&edges);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for f in kg.positives() {
            let (subjects, objects) = kg.domains(f.p).unwrap();
            for g in kg.corrupt_fact(f, &mut rng, 3).unwrap() {
                prop_assert!(!kg.contains(&g));
                prop_assert!(subjects.contains(&g.s) && objects.contains(&g.o));
                prop_assert!(g.p == f.p && (g.s == f.s) != (g.o == f.o));
            }
        }
    }

    #[test]
    fn serialization_roundtrips(edges in triples()) {
        let kg = graph(&edges);
        let mut buf = Vec::new();
        kg.write_tsv(&mut buf).unwrap();
        let again = ingest_triples(buf.as_slice()).unwrap();
        prop_assert_eq!(labels(&kg), labels(&again));
        prop_assert_eq!(kg.len(), again.len());
    }

    #[test]
    fn predicate_patterns_match_counts(edges in triples()) {
        let kg = graph(&edges);
        let mut total = 0;
        for p in kg.predicates() {
            let matched: Vec<_> = kg.match_pattern(Pattern::new(None, p, None)).collect();
            prop_assert_eq!(matched.len(), kg.predicate_count(p));
            prop_assert!(matched.iter().all(|f| f.p == p && kg.contains(f)));
            total += matched.len();
        }
        prop_assert_eq!(total, kg.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn training_is_deterministic(edges in triples(), seed in any::<u64>(), kind in prop_oneof![Just(ModelKind::TransE), Just(ModelKind::ComplEx), Just(ModelKind::HolE)]) {
        let kg = graph(&edges);
        let cfg = TrainConfig { epochs: 5, seed, ..TrainConfig::default() };
        let run = || {
            let mut m = EmbeddingModel::init_for(kind, 4, 2, &kg, seed).unwrap();
            m.train(&kg, &cfg).unwrap();
            m
        };
        prop_assert_eq!(run(), run());
    }
}
