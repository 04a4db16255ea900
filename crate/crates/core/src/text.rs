//! Tokenization and bag-of-words vectorization.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// The bundled English stopword list (127 words). "shall", "must" and
/// "should" are deliberately absent.
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

#[derive(Debug, Error)]
pub enum TextError {
    #[error("corpus has no documents")]
    EmptyCorpus,
    #[error("no term reaches min_df = {min_df}")]
    EmptyVocabulary { min_df: usize },
    #[error("min_df must be at least 1")]
    InvalidMinDf,
    #[error("vector has dimension {found}, vocabulary has {expected} terms")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("stopword file {path}: {source}")]
    Stopwords { path: String, source: io::Error },
    #[error("malformed vocabulary: {0}")]
    MalformedVocabulary(String),
}

/// A fixed set of words the tokenizer drops, plus the hash of the file it came from.
#[derive(Debug, Clone)]
pub struct Stopwords {
    words: BTreeSet<String>,
    hash: String,
}

impl Stopwords {
    /// Parses one lowercase word per line; blank lines are ignored.
    pub fn parse(content: &str) -> Self {
        let words = content
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_lowercase)
            .collect();
        Stopwords {
            words,
            hash: crate::sha256_hex(content.as_bytes()),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, TextError> {
        std::fs::read_to_string(path)
            .map(|s| Self::parse(&s))
            .map_err(|source| TextError::Stopwords {
                path: path.display().to_string(),
                source,
            })
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// SHA-256 of the source text, recorded in run provenance.
    pub fn content_hash(&self) -> &str {
        &self.hash
    }
}

impl Default for Stopwords {
    fn default() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }
}

/// Lowercases, splits on every non-letter, and drops tokens shorter than two
/// characters or present in `stopwords`.
pub fn tokenize(text: &str, stopwords: &Stopwords) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| t.chars().count() >= 2 && !stopwords.contains(t))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    RawCounts,
    Tfidf,
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::RawCounts => "raw_counts",
            Weighting::Tfidf => "tfidf",
        })
    }
}

impl FromStr for Weighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw_counts" | "counts" | "raw" => Ok(Weighting::RawCounts),
            "tfidf" | "tf-idf" => Ok(Weighting::Tfidf),
            other => Err(format!(
                "unknown weighting {other:?} (expected raw_counts or tfidf)"
            )),
        }
    }
}

/// Term index plus document frequencies for the corpus it was built from.
///
/// Indices follow ascending lexicographic term order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    total_docs: usize,
}

impl Vocabulary {
    pub fn build<S: AsRef<str>>(docs: &[Vec<S>], min_df: usize) -> Result<Self, TextError> {
        if min_df == 0 {
            return Err(TextError::InvalidMinDf);
        }
        if docs.is_empty() {
            return Err(TextError::EmptyCorpus);
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            let distinct: BTreeSet<&str> = doc.iter().map(AsRef::as_ref).collect();
            for t in distinct {
                *df.entry(t).or_default() += 1;
            }
        }
        let (terms, doc_freq): (Vec<String>, Vec<usize>) = df
            .into_iter()
            .filter(|&(_, n)| n >= min_df)
            .map(|(t, n)| (t.to_string(), n))
            .unzip();
        if terms.is_empty() {
            return Err(TextError::EmptyVocabulary { min_df });
        }
        Ok(Self::from_parts(terms, doc_freq, docs.len()))
    }

    fn from_parts(terms: Vec<String>, doc_freq: Vec<usize>, total_docs: usize) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            terms,
            index,
            doc_freq,
            total_docs,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self, index: usize) -> usize {
        self.doc_freq[index]
    }

    pub fn total_docs(&self) -> usize {
        self.total_docs
    }

    /// `ln(N / df)` for the term at `index`.
    pub fn idf<T: Scalar>(&self, index: usize) -> T {
        (T::of_usize(self.total_docs) / T::of_usize(self.doc_freq[index])).ln()
    }

    /// Text form: a `#total_docs=N` line, then `term<TAB>doc_freq` per line in index order.
    pub fn to_text(&self) -> String {
        let mut s = format!("#total_docs={}\n", self.total_docs);
        for (t, df) in self.terms.iter().zip(&self.doc_freq) {
            s.push_str(t);
            s.push('\t');
            s.push_str(&df.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(s: &str) -> Result<Self, TextError> {
        let bad = |m: String| TextError::MalformedVocabulary(m);
        let mut lines = s.lines();
        let total_docs = lines
            .next()
            .and_then(|l| l.strip_prefix("#total_docs="))
            .and_then(|n| n.parse::<usize>().ok())
            .ok_or_else(|| bad("missing #total_docs header".into()))?;
        let mut terms = Vec::new();
        let mut doc_freq = Vec::new();
        for (i, line) in lines.enumerate() {
            let (t, df) = line
                .split_once('\t')
                .ok_or_else(|| bad(format!("line {}", i + 2)))?;
            let df: usize = df
                .parse()
                .map_err(|_| bad(format!("line {}: bad doc_freq", i + 2)))?;
            if df == 0 || df > total_docs {
                return Err(bad(format!("line {}: doc_freq {df} out of range", i + 2)));
            }
            if terms.last().is_some_and(|prev: &String| prev.as_str() >= t) {
                return Err(bad(format!("line {}: terms not strictly ascending", i + 2)));
            }
            terms.push(t.to_string());
            doc_freq.push(df);
        }
        if terms.is_empty() {
            return Err(TextError::EmptyVocabulary { min_df: 1 });
        }
        Ok(Self::from_parts(terms, doc_freq, total_docs))
    }

    /// SHA-256 of the text form.
    pub fn content_hash(&self) -> String {
        crate::sha256_hex(self.to_text().as_bytes())
    }
}

/// Sparse vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector<T> {
    dimension: usize,
    entries: Vec<(usize, T)>,
}

impl<T: Scalar> SparseVector<T> {
    /// Sorts, merges duplicate indices by summing, and drops zeros.
    pub fn from_entries(dimension: usize, mut entries: Vec<(usize, T)>) -> Result<Self, TextError> {
        if let Some(&(i, _)) = entries.iter().find(|(i, _)| *i >= dimension) {
            return Err(TextError::DimensionMismatch {
                expected: dimension,
                found: i + 1,
            });
        }
        entries.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, T)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|&(_, v)| v != T::zero());
        Ok(SparseVector {
            dimension,
            entries: merged,
        })
    }

    pub fn zeros(dimension: usize) -> Self {
        SparseVector {
            dimension,
            entries: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn entries(&self) -> &[(usize, T)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> T {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|p| self.entries[p].1)
            .unwrap_or_else(|_| T::zero())
    }

    pub fn scaled(&self, factor: T) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|&(i, v)| (i, v * factor))
            .filter(|&(_, v)| v != T::zero())
            .collect();
        SparseVector {
            dimension: self.dimension,
            entries,
        }
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.dimension];
        for &(i, v) in &self.entries {
            d[i] = v;
        }
        d
    }
}

/// Bag-of-words counts of `doc` over `vocab`; out-of-vocabulary tokens are dropped.
pub fn vectorize<T: Scalar, S: AsRef<str>>(doc: &[S], vocab: &Vocabulary) -> SparseVector<T> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for tok in doc {
        if let Some(i) = vocab.index_of(tok.as_ref()) {
            *counts.entry(i).or_default() += 1;
        }
    }
    SparseVector {
        dimension: vocab.len(),
        entries: counts
            .into_iter()
            .map(|(i, c)| (i, T::of_usize(c)))
            .collect(),
    }
}

/// Document-by-term matrix stored as sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TermDocMatrix<T> {
    cols: usize,
    rows: Vec<SparseVector<T>>,
    weighting: Weighting,
}

impl<T: Scalar> TermDocMatrix<T> {
    pub fn from_rows(
        cols: usize,
        rows: Vec<SparseVector<T>>,
        weighting: Weighting,
    ) -> Result<Self, TextError> {
        if let Some(r) = rows.iter().find(|r| r.dimension != cols) {
            return Err(TextError::DimensionMismatch {
                expected: cols,
                found: r.dimension,
            });
        }
        Ok(TermDocMatrix {
            cols,
            rows,
            weighting,
        })
    }

    /// Dense row-major input; zeros are not stored.
    pub fn from_dense(rows: &[Vec<T>]) -> Result<Self, TextError> {
        let cols = rows.first().map_or(0, Vec::len);
        let sparse = rows
            .iter()
            .map(|r| {
                if r.len() != cols {
                    return Err(TextError::DimensionMismatch {
                        expected: cols,
                        found: r.len(),
                    });
                }
                SparseVector::from_entries(cols, r.iter().copied().enumerate().collect())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_rows(cols, sparse, Weighting::RawCounts)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> &[SparseVector<T>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &SparseVector<T> {
        &self.rows[i]
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(SparseVector::nnz).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        self.rows.iter().map(SparseVector::to_dense).collect()
    }
}

/// Stacks `vectorize` over `docs`, then applies the weighting.
///
/// Under TF-IDF each count `c` of term `t` becomes `c * ln(N / df(t))` with
/// `N` and `df` taken from `vocab`; terms present in every document vanish.
pub fn build_matrix<T: Scalar, S: AsRef<str>>(
    docs: &[Vec<S>],
    vocab: &Vocabulary,
    weighting: Weighting,
) -> Result<TermDocMatrix<T>, TextError> {
    if docs.is_empty() {
        return Err(TextError::EmptyCorpus);
    }
    let rows = docs
        .iter()
        .map(|d| weight(vectorize(d, vocab), vocab, weighting))
        .collect();
    Ok(TermDocMatrix {
        cols: vocab.len(),
        rows,
        weighting,
    })
}

/// Applies `weighting` to a raw count vector.
pub fn weight<T: Scalar>(
    v: SparseVector<T>,
    vocab: &Vocabulary,
    weighting: Weighting,
) -> SparseVector<T> {
    match weighting {
        Weighting::RawCounts => v,
        Weighting::Tfidf => {
            let entries = v
                .entries
                .into_iter()
                .map(|(i, c)| (i, c * vocab.idf::<T>(i)))
                .filter(|&(_, x)| x != T::zero())
                .collect();
            SparseVector {
                dimension: v.dimension,
                entries,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn bundled_list_has_127_words_and_keeps_modals() {
        let sw = Stopwords::default();
        assert_eq!(sw.len(), 127);
        assert_eq!(DEFAULT_STOPWORDS.lines().count(), 127);
        for kept in ["shall", "must", "should"] {
            assert!(!sw.contains(kept), "{kept} must not be a stopword");
        }
        assert!(sw.contains("the") && sw.contains("at"));
    }

    #[test]
    fn tokenize_examples() {
        let sw = Stopwords::default();
        assert_eq!(
            tokenize("The system SHALL encrypt user data.", &sw),
            toks(&["system", "shall", "encrypt", "user", "data"])
        );
        assert!(tokenize("", &sw).is_empty());
        assert_eq!(tokenize("A/B-testing at 99.9%", &sw), toks(&["testing"]));
    }

    #[test]
    fn vocabulary_examples() {
        let docs = vec![toks(&["cat", "dog"]), toks(&["dog"])];
        let v = Vocabulary::build(&docs, 1).unwrap();
        assert_eq!(v.index_of("cat"), Some(0));
        assert_eq!(v.index_of("dog"), Some(1));
        assert_eq!((v.doc_freq(0), v.doc_freq(1), v.total_docs()), (1, 2, 2));

        let v2 = Vocabulary::build(&docs, 2).unwrap();
        assert_eq!(v2.terms(), &["dog".to_string()]);

        assert!(matches!(
            Vocabulary::build(&[toks(&["rare"])], 2),
            Err(TextError::EmptyVocabulary { min_df: 2 })
        ));
        assert!(matches!(
            Vocabulary::build::<String>(&[], 1),
            Err(TextError::EmptyCorpus)
        ));
    }

    #[test]
    fn vectorize_examples() {
        let vocab = Vocabulary::build(&[toks(&["cat", "dog"])], 1).unwrap();
        let v: SparseVector<f64> = vectorize(&toks(&["dog", "dog", "cat"]), &vocab);
        assert_eq!(v.entries(), &[(0, 1.0), (1, 2.0)]);
        let oov: SparseVector<f64> = vectorize(&toks(&["zebra"]), &vocab);
        assert_eq!((oov.nnz(), oov.dimension()), (0, 2));
        let empty: SparseVector<f64> = vectorize::<f64, String>(&[], &vocab);
        assert_eq!(empty.nnz(), 0);
    }

    #[test]
    fn matrix_examples() {
        let docs = vec![toks(&["a", "a"]), toks(&["b"])];
        let vocab = Vocabulary::build(&docs, 1).unwrap();
        let raw: TermDocMatrix<f64> = build_matrix(&docs, &vocab, Weighting::RawCounts).unwrap();
        assert_eq!(raw.row(0), &vectorize::<f64, String>(&docs[0], &vocab));
        assert_eq!(raw.row(1), &vectorize::<f64, String>(&docs[1], &vocab));

        let tfidf: TermDocMatrix<f64> = build_matrix(&docs, &vocab, Weighting::Tfidf).unwrap();
        assert_eq!(tfidf.weighting(), Weighting::Tfidf);
        // 2 * ln 2, computed by hand
        assert!((tfidf.row(0).get(0) - 1.386_294_361_119_890_6).abs() < 1e-12);

        let everywhere = vec![toks(&["x", "y"]), toks(&["x"])];
        let vocab = Vocabulary::build(&everywhere, 1).unwrap();
        let m: TermDocMatrix<f64> = build_matrix(&everywhere, &vocab, Weighting::Tfidf).unwrap();
        assert!(m
            .rows()
            .iter()
            .all(|r| r.get(vocab.index_of("x").unwrap()) == 0.0));
        assert!(matches!(
            build_matrix::<f64, String>(&[], &vocab, Weighting::RawCounts),
            Err(TextError::EmptyCorpus)
        ));
    }

    #[test]
    fn vocabulary_text_round_trip() {
        let docs = vec![toks(&["alpha", "beta"]), toks(&["beta", "gamma"])];
        let v = Vocabulary::build(&docs, 1).unwrap();
        let back = Vocabulary::from_text(&v.to_text()).unwrap();
        assert_eq!(v, back);
        assert_eq!(v.content_hash(), back.content_hash());
        assert!(Vocabulary::from_text("#total_docs=1\nb\t1\na\t1\n").is_err());
    }

    #[test]
    fn sparse_vector_normalizes_entries() {
        let v =
            SparseVector::from_entries(5, vec![(3, 1.0), (1, 2.0), (3, -1.0), (4, 0.0)]).unwrap();
        assert_eq!(v.entries(), &[(1, 2.0)]);
        assert!(SparseVector::<f64>::from_entries(2, vec![(2, 1.0)]).is_err());
    }

    fn word() -> impl Strategy<Value = String> {
        prop::sample::select(vec!["alpha", "beta", "gamma", "delta", "eps", "zeta"])
            .prop_map(String::from)
    }

    proptest! {
        #[test]
        fn vectorize_ignores_token_order(mut doc in prop::collection::vec(word(), 0..30), seed in any::<u64>()) {
            let vocab = Vocabulary::build(&[toks(&["alpha", "beta", "gamma", "delta"])], 1).unwrap();
            let before: SparseVector<f64> = vectorize(&doc, &vocab);
            // deterministic pseudo-shuffle
            let n = doc.len();
            if n > 1 {
                let mut s = seed;
                for i in (1..n).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    doc.swap(i, (s >> 33) as usize % (i + 1));
                }
            }
            let after: SparseVector<f64> = vectorize(&doc, &vocab);
            prop_assert_eq!(&before, &after);
            let in_vocab = doc.iter().filter(|t| vocab.index_of(t).is_some()).count();
            let total: f64 = after.entries().iter().map(|e| e.1).sum();
            prop_assert_eq!(total, in_vocab as f64);
        }

        #[test]
        fn tfidf_decreases_with_doc_freq(count in 1u32..50, n in 2usize..40, df in 1usize..39) {
            prop_assume!(df < n);
            let vocab = Vocabulary::from_text(&format!("#total_docs={n}\na\t{df}\nb\t{}\n", df + 1)).unwrap();
            let raw = SparseVector::from_entries(2, vec![(0, count as f64), (1, count as f64)]).unwrap();
            let w = weight(raw, &vocab, Weighting::Tfidf);
            prop_assert!(w.get(1) < w.get(0));
        }
    }
}
