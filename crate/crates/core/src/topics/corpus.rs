use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::querylog::{normalize_query, QueryStream};
use crate::{Error, Result};

/// English function words removed from document text.
pub const STOP_WORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "me",
    "more",
    "most",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "same",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

fn is_stop_word(w: &str) -> bool {
    STOP_WORDS.binary_search(&w).is_ok()
}

/// Query normalization followed by a whitespace split and stop-word removal.
/// No stemming.
pub fn tokenize(text: &str) -> Vec<String> {
    normalize_query(text)
        .split(' ')
        .filter(|w| !w.is_empty() && !is_stop_word(w))
        .map(str::to_string)
        .collect()
}

/// Bidirectional word ↔ index map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn intern(&mut self, word: &str) -> u32 {
        if let Some(&i) = self.index.get(word) {
            return i;
        }
        let i = self.words.len() as u32;
        self.words.push(word.to_string());
        self.index.insert(word.to_string(), i);
        i
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// A query-document pair: clicked-page tokens enriched with the query terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: usize,
    /// Indices into the corpus vocabulary.
    pub tokens: Vec<u32>,
    pub source_query: String,
    pub url: String,
    pub click_count: u32,
}

/// Where clicked-page text comes from.
pub trait DocumentSource {
    fn text(&self, url: &str) -> Option<Cow<'_, str>>;
}

impl DocumentSource for BTreeMap<String, String> {
    fn text(&self, url: &str) -> Option<Cow<'_, str>> {
        self.get(url).map(|s| Cow::Borrowed(s.as_str()))
    }
}

impl DocumentSource for HashMap<String, String> {
    fn text(&self, url: &str) -> Option<Cow<'_, str>> {
        self.get(url).map(|s| Cow::Borrowed(s.as_str()))
    }
}

/// Directory of `<sha256(url) hex>.txt` files.
#[derive(Debug, Clone)]
pub struct DocumentDir(pub PathBuf);

impl DocumentDir {
    pub fn file_name(url: &str) -> String {
        format!("{}.txt", hex::encode(Sha256::digest(url.as_bytes())))
    }
}

impl DocumentSource for DocumentDir {
    fn text(&self, url: &str) -> Option<Cow<'_, str>> {
        fs::read_to_string(self.0.join(Self::file_name(url)))
            .ok()
            .map(Cow::Owned)
    }
}

/// Reads a `url\ttext` file.
pub fn load_document_tsv(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once('\t'))
        .map(|(u, t)| (u.to_string(), t.to_string()))
        .collect())
}

#[derive(Debug, Clone)]
pub struct CorpusOptions {
    /// Page length bounds, in tokens after stop-word removal.
    pub min_len: usize,
    pub max_len: usize,
    /// Uniform seeded subsample of the documents when set.
    pub max_docs: Option<usize>,
    pub seed: u64,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            min_len: 5,
            max_len: 100_000,
            max_docs: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub events_without_click: usize,
    pub missing_text: usize,
    pub out_of_bounds: usize,
    pub subsampled_out: usize,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub docs: Vec<Document>,
    pub vocabulary: Vocabulary,
    pub stats: CorpusStats,
}

impl Corpus {
    pub fn words<'a>(&'a self, doc: &'a Document) -> impl Iterator<Item = &'a str> + 'a {
        doc.tokens.iter().map(move |&t| self.vocabulary.word(t))
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

/// One document per distinct (query, clicked url) pair whose page text is
/// available and within the length bounds. Repeated pairs raise the click
/// count instead of adding documents. Documents are ordered by first click.
pub fn build_corpus(
    training: &QueryStream,
    source: &impl DocumentSource,
    opts: &CorpusOptions,
) -> Corpus {
    let mut stats = CorpusStats::default();
    let mut vocabulary = Vocabulary::default();
    let mut docs: Vec<Document> = Vec::new();
    // None marks a pair already rejected.
    let mut seen: HashMap<(String, String), Option<usize>> = HashMap::new();

    for e in training.events() {
        let Some(url) = &e.click_url else {
            stats.events_without_click += 1;
            continue;
        };
        let key = (e.query.clone(), url.clone());
        if let Some(slot) = seen.get(&key) {
            if let Some(i) = *slot {
                docs[i].click_count += 1;
            }
            continue;
        }
        let Some(text) = source.text(url) else {
            stats.missing_text += 1;
            seen.insert(key, None);
            continue;
        };
        let page = tokenize(&text);
        if page.len() < opts.min_len || page.len() > opts.max_len {
            stats.out_of_bounds += 1;
            seen.insert(key, None);
            continue;
        }
        let tokens = page
            .iter()
            .chain(tokenize(&e.query).iter())
            .map(|w| vocabulary.intern(w))
            .collect();
        seen.insert(key, Some(docs.len()));
        docs.push(Document {
            doc_id: docs.len(),
            tokens,
            source_query: e.query.clone(),
            url: url.clone(),
            click_count: 1,
        });
    }

    if let Some(m) = opts.max_docs.filter(|&m| m < docs.len()) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut keep = rand::seq::index::sample(&mut rng, docs.len(), m).into_vec();
        keep.sort_unstable();
        stats.subsampled_out = docs.len() - m;
        let mut all: Vec<Option<Document>> = docs.into_iter().map(Some).collect();
        docs = keep
            .into_iter()
            .map(|i| all[i].take().expect("distinct indices"))
            .collect();
        for (i, d) in docs.iter_mut().enumerate() {
            d.doc_id = i;
        }
    }

    Corpus {
        docs,
        vocabulary,
        stats,
    }
}
