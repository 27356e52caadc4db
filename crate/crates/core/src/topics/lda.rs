//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.
//!
//! The sampler integrates out the per-document topic mixtures and the
//! per-topic word distributions and resamples each token's topic from
//!
//! ```text
//! p(z = t | rest) ∝ (n_dt + α) · (n_tw + β) / (n_t + V·β)
//! ```
//!
//! where the counts exclude the token being resampled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::corpus::{Corpus, Vocabulary};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct LdaConfig {
    pub k: usize,
    /// Document-topic prior; `None` means `50 / k`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Words in fewer documents than this are pruned.
    pub min_doc_freq: usize,
    /// Words in more than this fraction of documents are pruned.
    pub max_doc_fraction: f64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            k: 500,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            seed: 0,
            min_doc_freq: 5,
            max_doc_fraction: 0.5,
        }
    }
}

impl LdaConfig {
    pub fn with_k(k: usize) -> Self {
        LdaConfig {
            k,
            ..LdaConfig::default()
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }
}

/// Fitted model: topic-word counts plus the final per-document topic counts
/// of the training corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    k: usize,
    alpha: f64,
    beta: f64,
    vocabulary: Vocabulary,
    /// Word-major `V × k` counts.
    word_topic: Vec<u32>,
    topic_totals: Vec<u64>,
    doc_topic: Vec<Vec<u32>>,
    doc_len: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocTopics {
    pub probs: Vec<f64>,
    /// Set when no token was in the model vocabulary; `probs` is uniform.
    pub out_of_vocabulary: bool,
}

impl DocTopics {
    pub fn argmax(&self) -> (usize, f64) {
        argmax(&self.probs)
    }
}

pub(crate) fn argmax(probs: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &p) in probs.iter().enumerate() {
        if p > best.1 {
            best = (i, p);
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct InferOptions {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for InferOptions {
    fn default() -> Self {
        InferOptions {
            iterations: 60,
            burn_in: 20,
            seed: 0,
        }
    }
}

struct GibbsState {
    k: usize,
    alpha: f64,
    beta: f64,
    v: usize,
    docs: Vec<Vec<u32>>,
    z: Vec<Vec<u16>>,
    word_topic: Vec<u32>,
    topic_totals: Vec<u64>,
    doc_topic: Vec<Vec<u32>>,
    weights: Vec<f64>,
}

impl GibbsState {
    fn init(
        docs: Vec<Vec<u32>>,
        v: usize,
        k: usize,
        alpha: f64,
        beta: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut word_topic = vec![0u32; v * k];
        let mut topic_totals = vec![0u64; k];
        let mut doc_topic = vec![vec![0u32; k]; docs.len()];
        let z = docs
            .iter()
            .enumerate()
            .map(|(d, words)| {
                words
                    .iter()
                    .map(|&w| {
                        let t = rng.gen_range(0..k);
                        word_topic[w as usize * k + t] += 1;
                        topic_totals[t] += 1;
                        doc_topic[d][t] += 1;
                        t as u16
                    })
                    .collect()
            })
            .collect();
        GibbsState {
            k,
            alpha,
            beta,
            v,
            docs,
            z,
            word_topic,
            topic_totals,
            doc_topic,
            weights: vec![0.0; k],
        }
    }

    fn sweep(&mut self, rng: &mut ChaCha8Rng) {
        let k = self.k;
        let vbeta = self.v as f64 * self.beta;
        for d in 0..self.docs.len() {
            for n in 0..self.docs[d].len() {
                let w = self.docs[d][n] as usize;
                let old = self.z[d][n] as usize;
                self.word_topic[w * k + old] -= 1;
                self.topic_totals[old] -= 1;
                self.doc_topic[d][old] -= 1;

                let row = &self.word_topic[w * k..(w + 1) * k];
                let mut acc = 0.0;
                for t in 0..k {
                    acc += (self.doc_topic[d][t] as f64 + self.alpha) * (row[t] as f64 + self.beta)
                        / (self.topic_totals[t] as f64 + vbeta);
                    self.weights[t] = acc;
                }
                let new = sample_cumulative(&self.weights, rng);

                self.word_topic[w * k + new] += 1;
                self.topic_totals[new] += 1;
                self.doc_topic[d][new] += 1;
                self.z[d][n] = new as u16;
            }
        }
    }

    fn is_consistent(&self) -> bool {
        (0..self.k).all(|t| {
            let col: u64 = (0..self.v)
                .map(|w| self.word_topic[w * self.k + t] as u64)
                .sum();
            col == self.topic_totals[t]
        })
    }
}

fn sample_cumulative(cumulative: &[f64], rng: &mut impl Rng) -> usize {
    let total = cumulative[cumulative.len() - 1];
    let x = rng.gen::<f64>() * total;
    cumulative
        .partition_point(|&c| c <= x)
        .min(cumulative.len() - 1)
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    for p in &mut v {
        *p /= s;
    }
    v
}

/// Fits LDA on the corpus. Deterministic for a fixed config.
pub fn train_lda(corpus: &Corpus, cfg: &LdaConfig) -> Result<LdaModel> {
    if cfg.k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    if cfg.k > u16::MAX as usize {
        return Err(Error::param("k", "at most 65535 topics"));
    }
    if cfg.iterations == 0 {
        return Err(Error::param("iterations", "must be at least 1"));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    // Document frequencies over the corpus vocabulary.
    let n_docs = corpus.docs.len();
    let mut df = vec![0usize; corpus.vocabulary.len()];
    for d in &corpus.docs {
        let mut toks = d.tokens.clone();
        toks.sort_unstable();
        toks.dedup();
        for t in toks {
            df[t as usize] += 1;
        }
    }
    let max_df = cfg.max_doc_fraction * n_docs as f64;
    let mut vocabulary = Vocabulary::default();
    let remap: Vec<Option<u32>> = df
        .iter()
        .enumerate()
        .map(|(w, &f)| {
            (f >= cfg.min_doc_freq && f as f64 <= max_df)
                .then(|| vocabulary.intern(corpus.vocabulary.word(w as u32)))
        })
        .collect();
    if vocabulary.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let docs: Vec<Vec<u32>> = corpus
        .docs
        .iter()
        .map(|d| d.tokens.iter().filter_map(|&t| remap[t as usize]).collect())
        .collect();

    let alpha = cfg.alpha();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = GibbsState::init(docs, vocabulary.len(), cfg.k, alpha, cfg.beta, &mut rng);
    for _ in 0..cfg.iterations {
        state.sweep(&mut rng);
        debug_assert!(state.is_consistent());
    }

    Ok(LdaModel {
        k: cfg.k,
        alpha,
        beta: cfg.beta,
        vocabulary,
        word_topic: state.word_topic,
        topic_totals: state.topic_totals,
        doc_len: state.docs.iter().map(Vec::len).collect(),
        doc_topic: state.doc_topic,
    })
}

impl LdaModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn topic_word_count(&self, topic: usize, word: u32) -> u32 {
        self.word_topic[word as usize * self.k + topic]
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.topic_totals
    }

    /// Checks `topic_totals[t] == Σ_w count(t, w)` for every topic.
    pub fn counts_consistent(&self) -> bool {
        let v = self.vocabulary.len();
        (0..self.k).all(|t| {
            let col: u64 = (0..v).map(|w| self.word_topic[w * self.k + t] as u64).sum();
            col == self.topic_totals[t]
        })
    }

    /// Posterior mean topic mixture of training document `doc`.
    pub fn training_doc_topics(&self, doc: usize) -> DocTopics {
        let len = self.doc_len[doc] as f64;
        let denom = len + self.k as f64 * self.alpha;
        let probs = self.doc_topic[doc]
            .iter()
            .map(|&c| (c as f64 + self.alpha) / denom)
            .collect();
        DocTopics {
            probs: normalize(probs),
            out_of_vocabulary: self.doc_len[doc] == 0,
        }
    }

    /// Topic mixture of an unseen document, sampled with the model counts
    /// held fixed and averaged over the post-burn-in sweeps.
    pub fn infer<'a>(
        &self,
        words: impl IntoIterator<Item = &'a str>,
        opts: &InferOptions,
    ) -> DocTopics {
        let k = self.k;
        let tokens: Vec<usize> = words
            .into_iter()
            .filter_map(|w| self.vocabulary.id(w))
            .map(|i| i as usize)
            .collect();
        if tokens.is_empty() {
            return DocTopics {
                probs: vec![1.0 / k as f64; k],
                out_of_vocabulary: true,
            };
        }

        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let vbeta = self.vocabulary.len() as f64 * self.beta;
        let mut counts = vec![0u32; k];
        let mut z: Vec<usize> = tokens
            .iter()
            .map(|_| {
                let t = rng.gen_range(0..k);
                counts[t] += 1;
                t
            })
            .collect();
        let mut weights = vec![0.0; k];
        let mut acc_theta = vec![0.0; k];
        let sweeps = opts.iterations.max(opts.burn_in + 1);
        for it in 0..sweeps {
            for (n, &w) in tokens.iter().enumerate() {
                counts[z[n]] -= 1;
                let row = &self.word_topic[w * k..(w + 1) * k];
                let mut acc = 0.0;
                for t in 0..k {
                    acc += (counts[t] as f64 + self.alpha) * (row[t] as f64 + self.beta)
                        / (self.topic_totals[t] as f64 + vbeta);
                    weights[t] = acc;
                }
                z[n] = sample_cumulative(&weights, &mut rng);
                counts[z[n]] += 1;
            }
            if it >= opts.burn_in {
                for t in 0..k {
                    acc_theta[t] += counts[t] as f64 + self.alpha;
                }
            }
        }
        DocTopics {
            probs: normalize(acc_theta),
            out_of_vocabulary: false,
        }
    }

    /// The `n` highest-count words of each topic.
    pub fn top_words(&self, n: usize) -> Vec<Vec<(&str, u32)>> {
        (0..self.k)
            .map(|t| {
                let mut words: Vec<(u32, u32)> = (0..self.vocabulary.len() as u32)
                    .map(|w| (w, self.topic_word_count(t, w)))
                    .filter(|&(_, c)| c > 0)
                    .collect();
                words.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
                words
                    .into_iter()
                    .take(n)
                    .map(|(w, c)| (self.vocabulary.word(w), c))
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topics::corpus::Document;

    fn corpus_from(texts: &[Vec<&str>]) -> Corpus {
        let mut vocabulary = Vocabulary::default();
        let docs = texts
            .iter()
            .enumerate()
            .map(|(i, words)| Document {
                doc_id: i,
                tokens: words.iter().map(|w| vocabulary.intern(w)).collect(),
                source_query: format!("q{i}"),
                url: format!("u{i}"),
                click_count: 1,
            })
            .collect();
        Corpus {
            docs,
            vocabulary,
            stats: Default::default(),
        }
    }

    fn no_pruning(k: usize) -> LdaConfig {
        LdaConfig {
            k,
            alpha: Some(0.1),
            beta: 0.01,
            iterations: 200,
            seed: 7,
            min_doc_freq: 1,
            max_doc_fraction: 1.0,
        }
    }

    #[test]
    fn disjoint_documents_get_distinct_topics() {
        let a: Vec<&str> = ["rain", "storm", "cloud", "wind", "snow"].repeat(6);
        let b: Vec<&str> = ["exam", "school", "grade", "class", "pupil"].repeat(6);
        let c = corpus_from(&[a, b]);
        let m = train_lda(&c, &no_pruning(2)).unwrap();
        let (t0, p0) = m.training_doc_topics(0).argmax();
        let (t1, p1) = m.training_doc_topics(1).argmax();
        assert_ne!(t0, t1);
        assert!(p0 > 0.8 && p1 > 0.8, "{p0} {p1}");
    }

    #[test]
    fn single_topic_is_degenerate() {
        let c = corpus_from(&[vec!["x", "y", "z"], vec!["y", "w"]]);
        let m = train_lda(&c, &no_pruning(1)).unwrap();
        assert_eq!(m.topic_totals(), &[5]);
        for d in 0..2 {
            assert_eq!(m.training_doc_topics(d).probs, vec![1.0]);
        }
        assert_eq!(m.infer(["x"], &InferOptions::default()).probs, vec![1.0]);
    }

    #[test]
    fn deterministic_for_seed() {
        let c = corpus_from(&[
            vec!["a", "b", "c", "a"],
            vec!["c", "d", "e"],
            vec!["a", "e", "e"],
        ]);
        let cfg = no_pruning(3);
        assert_eq!(train_lda(&c, &cfg).unwrap(), train_lda(&c, &cfg).unwrap());
    }

    #[test]
    fn counts_consistent_after_every_sweep() {
        let c = corpus_from(&[
            vec!["a", "b", "c", "a"],
            vec!["c", "d", "e"],
            vec!["a", "e", "e", "f"],
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let docs = c.docs.iter().map(|d| d.tokens.clone()).collect();
        let mut s = GibbsState::init(docs, c.vocabulary.len(), 4, 0.5, 0.01, &mut rng);
        assert!(s.is_consistent());
        for _ in 0..25 {
            s.sweep(&mut rng);
            assert!(s.is_consistent());
            for dt in &s.doc_topic {
                assert!(dt.iter().all(|&c| c <= 4));
            }
        }
    }

    #[test]
    fn out_of_vocabulary_document_is_uniform() {
        let c = corpus_from(&[vec!["a", "b"], vec!["c", "d"]]);
        let m = train_lda(&c, &no_pruning(4)).unwrap();
        let r = m.infer(["zzz", "yyy"], &InferOptions::default());
        assert!(r.out_of_vocabulary);
        assert_eq!(r.probs, vec![0.25; 4]);
    }

    #[test]
    fn inferred_distribution_sums_to_one() {
        let c = corpus_from(&[
            vec!["a", "b", "c"],
            vec!["c", "d", "e"],
            vec!["f", "a", "e"],
        ]);
        let m = train_lda(&c, &no_pruning(5)).unwrap();
        let r = m.infer(["a", "c", "e", "nope"], &InferOptions::default());
        assert!(!r.out_of_vocabulary);
        assert!((r.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(r.probs.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn pruning_everything_errors() {
        let c = corpus_from(&[vec!["a"], vec!["b"]]);
        let cfg = LdaConfig {
            min_doc_freq: 5,
            ..no_pruning(2)
        };
        assert!(matches!(train_lda(&c, &cfg), Err(Error::EmptyVocabulary)));
    }

    #[test]
    fn invalid_parameters() {
        let c = corpus_from(&[vec!["a"]]);
        assert!(train_lda(&c, &no_pruning(0)).is_err());
        let cfg = LdaConfig {
            iterations: 0,
            ..no_pruning(2)
        };
        assert!(train_lda(&c, &cfg).is_err());
        assert!(matches!(
            train_lda(&corpus_from(&[]), &no_pruning(2)),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn default_alpha_is_fifty_over_k() {
        let cfg = LdaConfig::with_k(500);
        assert!((cfg.alpha() - 0.1).abs() < 1e-12);
        assert_eq!(cfg.iterations, 1000);
        assert_eq!(cfg.beta, 0.01);
    }
}
