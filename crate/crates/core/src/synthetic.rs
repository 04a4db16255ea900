//! Seeded synthetic corpora with a known category for every requirement.
//!
//! Each category owns a private vocabulary; descriptions and requirements
//! draw most of their words from their category's vocabulary and the rest
//! from a noise vocabulary shared by everyone. A mapper that works should
//! recover the planted category for nearly every requirement.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CweCatalog, CweWeakness, Membership, Requirement};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub categories: usize,
    pub weaknesses_per_category: usize,
    pub requirements_per_category: usize,
    pub private_vocabulary: usize,
    pub noise_vocabulary: usize,
    pub words_per_description: usize,
    pub words_per_requirement: usize,
    /// Share of each text's words drawn from the noise vocabulary.
    pub noise_share: f64,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            categories: 4,
            weaknesses_per_category: 5,
            requirements_per_category: 20,
            private_vocabulary: 12,
            noise_vocabulary: 30,
            words_per_description: 14,
            words_per_requirement: 10,
            noise_share: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub catalog: CweCatalog,
    pub requirements: Vec<Requirement>,
    /// Planted category for each requirement, aligned with `requirements`.
    pub truth: Vec<u32>,
}

/// First category id; categories are numbered consecutively from here.
pub const FIRST_CATEGORY_ID: u32 = 2001;

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ru", "te", "zan", "vor", "pel", "qui", "sob", "dre", "nix", "gul", "hap",
    "wen", "fyr",
];

fn pseudo_words(rng: &mut ChaCha8Rng, n: usize, taken: &mut BTreeSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let len = rng.gen_range(2..=3);
        let word: String = (0..len)
            .map(|_| *SYLLABLES.choose(rng).expect("nonempty"))
            .collect();
        if taken.insert(word.clone()) {
            out.push(word);
        }
    }
    out
}

fn sentence(
    rng: &mut ChaCha8Rng,
    private: &[String],
    noise: &[String],
    words: usize,
    noise_share: f64,
) -> String {
    let noisy = ((words as f64) * noise_share).round() as usize;
    let mut picked: Vec<&str> = (0..words)
        .map(|i| {
            if i < noisy {
                noise.choose(rng)
            } else {
                private.choose(rng)
            }
            .expect("nonempty")
            .as_str()
        })
        .collect();
    picked.shuffle(rng);
    picked.join(" ")
}

pub fn generate(params: &SyntheticParams) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut taken = BTreeSet::new();
    let noise = pseudo_words(&mut rng, params.noise_vocabulary, &mut taken);
    let private: Vec<Vec<String>> = (0..params.categories)
        .map(|_| pseudo_words(&mut rng, params.private_vocabulary, &mut taken))
        .collect();

    let mut weaknesses = Vec::new();
    let mut memberships = Vec::new();
    let mut requirements = Vec::new();
    let mut truth = Vec::new();
    for (c, words) in private.iter().enumerate() {
        let category_id = FIRST_CATEGORY_ID + c as u32;
        for w in 0..params.weaknesses_per_category {
            let id = (c * params.weaknesses_per_category + w + 1) as u32;
            weaknesses.push(CweWeakness {
                id,
                name: format!("Synthetic weakness {id}"),
                description: sentence(
                    &mut rng,
                    words,
                    &noise,
                    params.words_per_description,
                    params.noise_share,
                ),
                category_ids: BTreeSet::new(),
            });
            memberships.push(Membership {
                category_id,
                category_name: format!("Synthetic category {category_id}"),
                member_id: id,
            });
        }
        for _ in 0..params.requirements_per_category {
            requirements.push(sentence(
                &mut rng,
                words,
                &noise,
                params.words_per_requirement,
                params.noise_share,
            ));
            truth.push(category_id);
        }
    }
    // interleave so row order carries no category signal
    let mut order: Vec<usize> = (0..requirements.len()).collect();
    order.shuffle(&mut rng);
    let requirements = order
        .iter()
        .enumerate()
        .map(|(row, &i)| Requirement {
            row_index: row,
            project_id: "synthetic".to_string(),
            text: requirements[i].clone(),
            original_class: "SE".to_string(),
        })
        .collect();
    let truth = order.iter().map(|&i| truth[i]).collect();
    let catalog =
        CweCatalog::from_parts(weaknesses, memberships).expect("generated catalog is consistent");
    SyntheticCorpus {
        catalog,
        requirements,
        truth,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{tokenize, Stopwords};

    #[test]
    fn shape_and_determinism() {
        let p = SyntheticParams::default();
        let a = generate(&p);
        assert_eq!(a.catalog.len(), 20);
        assert_eq!(a.requirements.len(), 80);
        assert_eq!(
            a.truth.iter().filter(|&&t| t == FIRST_CATEGORY_ID).count(),
            20
        );
        let b = generate(&p);
        assert_eq!(a.requirements, b.requirements);
        assert_eq!(a.catalog.content_hash(), b.catalog.content_hash());
    }

    #[test]
    fn words_survive_tokenization() {
        let c = generate(&SyntheticParams::default());
        let sw = Stopwords::default();
        for r in &c.requirements {
            assert_eq!(tokenize(&r.text, &sw).len(), 10, "{}", r.text);
        }
    }
}
