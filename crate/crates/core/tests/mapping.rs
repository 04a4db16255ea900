use std::time::Instant;

use weakmap::mapper::{build_joint_space, build_training_set, map_requirement, SpaceParams};
use weakmap::synthetic::{generate, SyntheticParams};
use weakmap::Stopwords;

fn params(k: usize, seed: u64) -> SpaceParams {
    SpaceParams {
        k,
        seed,
        ..SpaceParams::default()
    }
}

#[test]
fn synthetic_categories_are_recovered_at_rank_eight() {
    for seed in 0..5 {
        let corpus = generate(&SyntheticParams {
            seed,
            ..SyntheticParams::default()
        });
        let start = Instant::now();
        let ds = build_training_set::<f64>(
            &corpus.catalog,
            &corpus.requirements,
            &Stopwords::default(),
            &params(8, seed),
        )
        .unwrap();
        let elapsed = start.elapsed();
        let correct = ds
            .examples
            .iter()
            .zip(&corpus.truth)
            .filter(|(e, &t)| e.category_id == t)
            .count();
        let rate = correct as f64 / corpus.truth.len() as f64;
        assert!(
            rate >= 0.95,
            "seed {seed}: {correct}/{} correct",
            corpus.truth.len()
        );
        assert!(elapsed.as_secs_f64() <= 10.0);
    }
}

#[test]
fn f32_and_f64_agree_on_labels() {
    let corpus = generate(&SyntheticParams::default());
    let sw = Stopwords::default();
    let a = build_training_set::<f64>(&corpus.catalog, &corpus.requirements, &sw, &params(8, 1))
        .unwrap();
    let b = build_training_set::<f32>(&corpus.catalog, &corpus.requirements, &sw, &params(8, 1))
        .unwrap();
    let agree = a
        .examples
        .iter()
        .zip(&b.examples)
        .filter(|(x, y)| x.category_id == y.category_id)
        .count();
    assert!(agree as f64 >= 0.95 * a.examples.len() as f64);
}

#[test]
fn mapping_is_deterministic_for_a_seed() {
    let corpus = generate(&SyntheticParams::default());
    let sw = Stopwords::default();
    let a = build_training_set::<f64>(&corpus.catalog, &corpus.requirements, &sw, &params(8, 4))
        .unwrap();
    let b = build_training_set::<f64>(&corpus.catalog, &corpus.requirements, &sw, &params(8, 4))
        .unwrap();
    assert_eq!(a, b);
    assert_eq!(a.content_hash(), b.content_hash());
}

#[test]
fn best_match_dominates_every_other_weakness() {
    let corpus = generate(&SyntheticParams {
        seed: 11,
        ..SyntheticParams::default()
    });
    let space = build_joint_space::<f64>(
        &corpus.catalog,
        &corpus.requirements,
        &Stopwords::default(),
        &params(8, 11),
    )
    .unwrap();
    let ids: Vec<u32> = corpus.catalog.weaknesses().map(|w| w.id).collect();
    for req in &space.requirement_vectors {
        let m = map_requirement(req, &space.weakness_vectors, &corpus.catalog).unwrap();
        for (id, w) in ids.iter().zip(&space.weakness_vectors) {
            let s = weakmap::cosine(req, w).unwrap();
            assert!(s <= m.similarity || (s == m.similarity && *id >= m.cwe_id));
        }
    }
}
