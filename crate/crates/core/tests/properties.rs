use ccrm_core::corpus::{AttentionMatrix, AttentionSource, CorpusSnapshot, OwnershipMap};
use ccrm_core::measures::{
    cultural_similarity, cultural_understanding, self_focus, BiasMatrix, Perspective,
};
use ccrm_testkit::random_world;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn concept_relabeling_changes_nothing(seed in 0u64..10_000, shift in 1usize..50) {
        let w = random_world(seed, 5, 5);
        let mut relabeled = w.clone();
        for concepts in relabeled.articles.values_mut() {
            for c in concepts.iter_mut() {
                *c = format!("R{}", c[1..].parse::<usize>().unwrap() * 7 + shift);
            }
        }
        let a = CorpusSnapshot::from_parts(w.to_parts()).unwrap();
        let b = CorpusSnapshot::from_parts(relabeled.to_parts()).unwrap();
        for p in [Perspective::Global, Perspective::Native] {
            prop_assert_eq!(cultural_similarity(&a, p), cultural_similarity(&b, p));
        }
        prop_assert_eq!(cultural_understanding(&a), cultural_understanding(&b));
    }

    #[test]
    fn dominant_own_share_gives_positive_self_focus(
        n in 2usize..6,
        extra in 0usize..4,
        cells in proptest::collection::vec(0.01f64..1.0, 100),
    ) {
        // language i owns cuisine i and gives it a larger share than anyone else
        let m = n + extra;
        let mut rows: Vec<Vec<f64>> = (0..n).map(|l| (0..m).map(|o| cells[l * m + o]).collect()).collect();
        for (l, row) in rows.iter_mut().enumerate() {
            row[l] = 100.0 * m as f64;
        }
        let att = AttentionMatrix::from_rows(
            AttentionSource::Simulated,
            (0..n).map(|i| format!("l{i}")).collect(),
            (0..m).map(|i| format!("c{i}")).collect(),
            rows,
            None,
        )
        .unwrap();
        let bias = BiasMatrix::compute(&att);
        let mut own = OwnershipMap::new();
        for i in 0..n {
            own.insert(format!("l{i}"), format!("c{i}"));
        }
        for i in 0..n {
            let sfb = self_focus(&bias, &own, &format!("l{i}"), 1).unwrap();
            prop_assert!(sfb > 0.0 && sfb <= 2.0);
        }
    }

    #[test]
    fn measures_stay_in_range(seed in 0u64..10_000) {
        let w = random_world(seed, 5, 5);
        let s = CorpusSnapshot::from_parts(w.to_parts()).unwrap();
        for p in [Perspective::Global, Perspective::Native] {
            let sim = cultural_similarity(&s, p);
            for (a, b, v) in sim.pairs() {
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert_eq!(sim.score(b, a), Some(v));
            }
        }
        for source in [AttentionSource::Views, AttentionSource::Outlinks] {
            let bias = BiasMatrix::compute(&s.attention_matrix(source, None).unwrap());
            for l in s.languages() {
                if let Some(v) = self_focus(&bias, s.ownership(), &l.code, 1) {
                    prop_assert!((-2.0..=2.0).contains(&v));
                }
            }
        }
    }
}
