//! Term, semantic and code similarity between rules, and their combination.
//!
//! Term similarity is the cosine of TF-IDF vectors built over the joint corpus
//! of both catalogs. Semantic similarity is the cosine of averaged word
//! embeddings. Code similarity is the Jaccard index of code terms. The
//! description similarity is `(term + semantic) * (code + 1) / 2`, so a zero
//! code similarity halves the textual evidence instead of erasing it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::catalog::{RuleCatalog, RuleDescriptor, RuleRef};
use crate::text::{self, TextOptions};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimilarityError {
    #[error("vector dimension mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },
    #[error("embedding dimension must be positive")]
    ZeroDimension,
    #[error("embedding for {word:?} has {found} components, model dimension is {expected}")]
    VectorLength {
        word: String,
        expected: usize,
        found: usize,
    },
    #[error("rule {0} is not part of the similarity corpus")]
    UnknownRule(RuleRef),
}

/// How the inverse document frequency is computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdfMode {
    /// `N / df(t)`, no logarithm.
    #[default]
    Ratio,
    /// `1 + ln(N / df(t))`.
    LogRatio,
}

impl IdfMode {
    fn idf(self, total: usize, containing: usize) -> f64 {
        let ratio = total as f64 / containing as f64;
        match self {
            IdfMode::Ratio => ratio,
            IdfMode::LogRatio => 1.0 + libm::log(ratio),
        }
    }
}

/// Sparse TF-IDF weights. Zero weights are never stored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermVector {
    weights: BTreeMap<String, f64>,
}

impl TermVector {
    /// Builds a vector, dropping zero and non-finite entries.
    pub fn from_weights(weights: impl IntoIterator<Item = (String, f64)>) -> Self {
        Self {
            weights: weights
                .into_iter()
                .filter(|(_, w)| *w != 0.0 && w.is_finite())
                .collect(),
        }
    }

    pub fn get(&self, term: &str) -> Option<f64> {
        self.weights.get(term).copied()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(t, w)| (t.as_str(), *w))
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.weights.values().map(|w| w * w).sum())
    }

    /// Dot product by merge-join over the sorted terms; exact under argument swap.
    pub fn dot(&self, other: &TermVector) -> f64 {
        let mut sum = 0.0;
        let mut left = self.weights.iter().peekable();
        let mut right = other.weights.iter().peekable();
        while let (Some((ta, wa)), Some((tb, wb))) = (left.peek(), right.peek()) {
            match ta.cmp(tb) {
                core::cmp::Ordering::Less => {
                    left.next();
                }
                core::cmp::Ordering::Greater => {
                    right.next();
                }
                core::cmp::Ordering::Equal => {
                    sum += *wa * *wb;
                    left.next();
                    right.next();
                }
            }
        }
        sum
    }
}

/// TF-IDF vectors for every document of a corpus.
///
/// `TF(t, r)` is the raw count of `t` in `r`; `IDF(t)` divides the corpus size
/// by the number of documents containing `t` (see [`IdfMode`]).
pub fn build_tf_idf<K: Ord + Clone>(
    docs: &[(K, Vec<String>)],
    mode: IdfMode,
) -> BTreeMap<K, TermVector> {
    let total = docs.len();
    let mut counts: Vec<BTreeMap<&str, usize>> = Vec::with_capacity(total);
    let mut doc_freq: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, tokens) in docs {
        let mut tf: BTreeMap<&str, usize> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t.as_str()).or_default() += 1;
        }
        for t in tf.keys() {
            *doc_freq.entry(t).or_default() += 1;
        }
        counts.push(tf);
    }
    docs.iter()
        .zip(counts)
        .map(|((key, _), tf)| {
            let vector = TermVector::from_weights(
                tf.into_iter()
                    .map(|(t, n)| (String::from(t), n as f64 * mode.idf(total, doc_freq[t]))),
            );
            (key.clone(), vector)
        })
        .collect()
}

fn clamp_unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// Cosine of two sparse vectors, clamped into `[0, 1]`; zero norm gives 0.
pub fn cosine_sparse(a: &TermVector, b: &TermVector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    clamp_unit(a.dot(b) / (na * nb))
}

/// Cosine of two dense vectors, clamped into `[0, 1]`; zero norm gives 0.
pub fn cosine_dense(a: &[f64], b: &[f64]) -> Result<f64, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::Dimension {
            left: a.len(),
            right: b.len(),
        });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = libm::sqrt(a.iter().map(|x| x * x).sum());
    let nb = libm::sqrt(b.iter().map(|x| x * x).sum());
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(clamp_unit(dot / (na * nb)))
}

/// Pretrained word vectors, all of the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingModel {
    pub fn new(dim: usize) -> Result<Self, SimilarityError> {
        if dim == 0 {
            return Err(SimilarityError::ZeroDimension);
        }
        Ok(Self {
            dim,
            vectors: BTreeMap::new(),
        })
    }

    /// Adds or replaces a word vector.
    pub fn insert(
        &mut self,
        word: impl Into<String>,
        vector: Vec<f64>,
    ) -> Result<(), SimilarityError> {
        let word = word.into();
        if vector.len() != self.dim {
            return Err(SimilarityError::VectorLength {
                word,
                expected: self.dim,
                found: vector.len(),
            });
        }
        self.vectors.insert(word, vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn words(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(w, v)| (w.as_str(), v.as_slice()))
    }

    /// Mean of the vectors of in-vocabulary tokens; the zero vector when none are known.
    pub fn embed_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        let mut sum = vec![0.0; self.dim];
        let mut n = 0usize;
        for v in tokens.iter().filter_map(|t| self.get(t.as_ref())) {
            for (acc, x) in sum.iter_mut().zip(v) {
                *acc += x;
            }
            n += 1;
        }
        if n > 0 {
            for acc in &mut sum {
                *acc /= n as f64;
            }
        }
        sum
    }
}

/// Averaged embedding of a text after tokenization.
pub fn embed_rule(text: &str, model: &EmbeddingModel, options: TextOptions) -> Vec<f64> {
    model.embed_tokens(&text::tokenize_with(text, options))
}

/// Jaccard index of two term sets; 0 when both are empty.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let shared = a.intersection(b).count();
    let union = a.len() + b.len() - shared;
    if union == 0 {
        0.0
    } else {
        shared as f64 / union as f64
    }
}

pub fn code_similarity(a: &RuleDescriptor, b: &RuleDescriptor) -> f64 {
    jaccard(&a.code_terms, &b.code_terms)
}

/// The three component similarities and their combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScores {
    pub term_sim: f64,
    pub semt_sim: f64,
    pub code_sim: f64,
    pub description_sim: f64,
}

impl SimilarityScores {
    pub fn combine(term_sim: f64, semt_sim: f64, code_sim: f64) -> Self {
        Self {
            term_sim,
            semt_sim,
            code_sim,
            description_sim: (term_sim + semt_sim) * (code_sim + 1.0) / 2.0,
        }
    }

    pub const ZERO: Self = Self {
        term_sim: 0.0,
        semt_sim: 0.0,
        code_sim: 0.0,
        description_sim: 0.0,
    };
}

/// Scores two rules given a prebuilt TF-IDF map and the embedding model.
pub fn description_similarity(
    a: &RuleDescriptor,
    b: &RuleDescriptor,
    model: &EmbeddingModel,
    tfidf: &BTreeMap<RuleRef, TermVector>,
    options: TextOptions,
) -> Result<SimilarityScores, SimilarityError> {
    let lookup = |r: &RuleDescriptor| {
        let key = r.rule_ref();
        tfidf.get(&key).ok_or(SimilarityError::UnknownRule(key))
    };
    let (ta, tb) = (lookup(a)?, lookup(b)?);
    let ea = embed_rule(&a.text_content(), model, options);
    let eb = embed_rule(&b.text_content(), model, options);
    Ok(SimilarityScores::combine(
        cosine_sparse(ta, tb),
        cosine_dense(&ea, &eb)?,
        code_similarity(a, b),
    ))
}

/// Per-rule similarity features for two catalogs, computed once and shared
/// read-only by pairwise scoring.
#[derive(Debug, Clone)]
pub struct SimilarityIndex {
    tfidf: BTreeMap<RuleRef, TermVector>,
    embeddings: BTreeMap<RuleRef, Vec<f64>>,
    code_terms: BTreeMap<RuleRef, BTreeSet<String>>,
}

impl SimilarityIndex {
    /// Builds TF-IDF vectors over the union of both catalogs and embeds every rule.
    pub fn build(
        catalog_a: &RuleCatalog,
        catalog_b: &RuleCatalog,
        model: &EmbeddingModel,
        idf: IdfMode,
        options: TextOptions,
    ) -> Self {
        let rules: Vec<&RuleDescriptor> =
            catalog_a.rules().iter().chain(catalog_b.rules()).collect();
        let docs: Vec<(RuleRef, Vec<String>)> = rules
            .iter()
            .map(|r| {
                (
                    r.rule_ref(),
                    text::tokenize_with(&r.text_content(), options),
                )
            })
            .collect();
        let embeddings = docs
            .iter()
            .map(|(key, tokens)| (key.clone(), model.embed_tokens(tokens)))
            .collect();
        let code_terms = rules
            .iter()
            .map(|r| (r.rule_ref(), r.code_terms.clone()))
            .collect();
        Self {
            tfidf: build_tf_idf(&docs, idf),
            embeddings,
            code_terms,
        }
    }

    pub fn tfidf(&self) -> &BTreeMap<RuleRef, TermVector> {
        &self.tfidf
    }

    pub fn embedding(&self, rule: &RuleRef) -> Option<&[f64]> {
        self.embeddings.get(rule).map(Vec::as_slice)
    }

    pub fn score(&self, a: &RuleRef, b: &RuleRef) -> Result<SimilarityScores, SimilarityError> {
        let get = |r: &RuleRef| -> Result<_, SimilarityError> {
            match (
                self.tfidf.get(r),
                self.embeddings.get(r),
                self.code_terms.get(r),
            ) {
                (Some(t), Some(e), Some(c)) => Ok((t, e, c)),
                _ => Err(SimilarityError::UnknownRule(r.clone())),
            }
        };
        let (ta, ea, ca) = get(a)?;
        let (tb, eb, cb) = get(b)?;
        Ok(SimilarityScores::combine(
            cosine_sparse(ta, tb),
            cosine_dense(ea, eb)?,
            jaccard(ca, cb),
        ))
    }
}

/// Scores for the full cross product of two catalogs, row-major by catalog A.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    rows: Vec<RuleRef>,
    cols: Vec<RuleRef>,
    scores: Vec<SimilarityScores>,
}

impl ScoreMatrix {
    /// Assembles a matrix from precomputed scores. Panics if `scores.len()` is
    /// not `rows.len() * cols.len()`.
    pub fn from_parts(
        rows: Vec<RuleRef>,
        cols: Vec<RuleRef>,
        scores: Vec<SimilarityScores>,
    ) -> Self {
        assert_eq!(scores.len(), rows.len() * cols.len(), "score matrix shape");
        Self { rows, cols, scores }
    }

    /// Scores every pair sequentially.
    pub fn compute(
        index: &SimilarityIndex,
        catalog_a: &RuleCatalog,
        catalog_b: &RuleCatalog,
    ) -> Result<Self, SimilarityError> {
        let rows: Vec<RuleRef> = catalog_a.rule_refs().collect();
        let cols: Vec<RuleRef> = catalog_b.rule_refs().collect();
        let mut scores = Vec::with_capacity(rows.len() * cols.len());
        for a in &rows {
            for b in &cols {
                scores.push(index.score(a, b)?);
            }
        }
        Ok(Self { rows, cols, scores })
    }

    pub fn rows(&self) -> &[RuleRef] {
        &self.rows
    }

    pub fn cols(&self) -> &[RuleRef] {
        &self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> &SimilarityScores {
        &self.scores[row * self.cols.len() + col]
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{CodeExample, ExampleKind};
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(ToString::to_string).collect()
    }

    #[test]
    fn tf_idf_hand_example() {
        let docs = vec![("r1", toks("alpha beta")), ("r2", toks("alpha gamma"))];
        let v = build_tf_idf(&docs, IdfMode::Ratio);
        assert_eq!(v["r1"].get("alpha"), Some(1.0));
        assert_eq!(v["r1"].get("beta"), Some(2.0));
        assert_eq!(v["r1"].get("gamma"), None);
        assert_eq!(v["r1"].len(), 2);
    }

    #[test]
    fn tf_idf_single_doc() {
        let v = build_tf_idf(&[("x", toks("x x"))], IdfMode::Ratio);
        assert_eq!(v["x"].get("x"), Some(2.0));
    }

    #[test]
    fn log_idf_keeps_common_terms() {
        let docs = vec![("r1", toks("alpha beta")), ("r2", toks("alpha gamma"))];
        let v = build_tf_idf(&docs, IdfMode::LogRatio);
        assert_eq!(v["r1"].get("alpha"), Some(1.0));
        assert!((v["r1"].get("beta").unwrap() - (1.0 + libm::log(2.0))).abs() < 1e-12);
    }

    #[test]
    fn cosine_cases() {
        assert!(
            (cosine_dense(&[1.0, 0.0], &[1.0, 1.0]).unwrap() - core::f64::consts::FRAC_1_SQRT_2)
                .abs()
                < 1e-12
        );
        assert_eq!(cosine_dense(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine_dense(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(
            cosine_dense(&[1.0], &[1.0, 2.0]),
            Err(SimilarityError::Dimension { left: 1, right: 2 })
        ));
        let a = TermVector::from_weights([("x".to_string(), 1.0)]);
        let b = TermVector::from_weights([("y".to_string(), 1.0)]);
        assert_eq!(cosine_sparse(&a, &b), 0.0);
        assert!((cosine_sparse(&a, &a) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn embedding_average() {
        let mut m = EmbeddingModel::new(2).unwrap();
        m.insert("left", vec![1.0, 0.0]).unwrap();
        m.insert("up", vec![0.0, 1.0]).unwrap();
        m.insert("down", vec![0.0, -1.0]).unwrap();
        let opts = TextOptions::default();
        assert_eq!(embed_rule("left up", &m, opts), vec![0.5, 0.5]);
        assert_eq!(embed_rule("up", &m, opts), vec![0.0, 1.0]);
        assert_eq!(embed_rule("up down", &m, opts), vec![0.0, 0.0]);
        assert_eq!(embed_rule("unknown words", &m, opts), vec![0.0, 0.0]);
        assert!(m.insert("bad", vec![1.0]).is_err());
        assert!(EmbeddingModel::new(0).is_err());
    }

    #[test]
    fn combine_arithmetic() {
        assert_eq!(
            SimilarityScores::combine(0.0, 0.0, 0.7).description_sim,
            0.0
        );
        assert!((SimilarityScores::combine(0.4, 0.6, 1.0).description_sim - 1.0).abs() < 1e-12);
        assert!((SimilarityScores::combine(0.4, 0.6, 0.0).description_sim - 0.5).abs() < 1e-12);
    }

    #[test]
    fn code_similarity_jaccard() {
        let mk = |src: &str| {
            RuleDescriptor::new(
                "t",
                "r",
                "x",
                "y",
                vec![CodeExample::new(ExampleKind::Unspecified, src)],
            )
            .unwrap()
        };
        let a = mk("printStackTrace");
        let b = mk("AvoidPrintStackTrace");
        assert!((code_similarity(&a, &b) - 0.75).abs() < 1e-12);
        assert_eq!(code_similarity(&a, &a), 1.0);
        assert_eq!(code_similarity(&mk("foo"), &mk("bar")), 0.0);
        let empty = RuleDescriptor::new("t", "r", "x", "y", vec![]).unwrap();
        assert_eq!(code_similarity(&empty, &empty), 0.0);
    }

    #[test]
    fn description_similarity_requires_corpus_membership() {
        let a = RuleDescriptor::new("t", "a", "x", "y", vec![]).unwrap();
        let m = EmbeddingModel::new(2).unwrap();
        let err = description_similarity(&a, &a, &m, &BTreeMap::new(), TextOptions::default())
            .unwrap_err();
        assert!(matches!(err, SimilarityError::UnknownRule(_)));
    }

    proptest! {
        #[test]
        fn combined_score_is_monotone_and_bounded(
            t in 0.0f64..=1.0, s in 0.0f64..=1.0, c in 0.0f64..=1.0, bump in 0.0f64..=1.0,
        ) {
            let base = SimilarityScores::combine(t, s, c).description_sim;
            prop_assert!((0.0..=2.0).contains(&base));
            prop_assert!(SimilarityScores::combine((t + bump).min(1.0), s, c).description_sim >= base);
            prop_assert!(SimilarityScores::combine(t, (s + bump).min(1.0), c).description_sim >= base);
            prop_assert!(SimilarityScores::combine(t, s, (c + bump).min(1.0)).description_sim >= base);
            prop_assert_eq!(base == 0.0, t + s == 0.0);
        }

        #[test]
        fn sparse_cosine_is_symmetric(
            a in proptest::collection::btree_map("[a-e]", 0.1f64..10.0, 0..5),
            b in proptest::collection::btree_map("[a-e]", 0.1f64..10.0, 0..5),
        ) {
            let va = TermVector::from_weights(a);
            let vb = TermVector::from_weights(b);
            prop_assert_eq!(cosine_sparse(&va, &vb), cosine_sparse(&vb, &va));
        }
    }
}
