//! Query topics: click-enriched corpora, LDA, click voting and topic-cache
//! allocation.

mod allocation;
mod assign;
mod corpus;
mod lda;

pub use allocation::{allocate_topic_entries, equal_allocation, Allocation, TopicAllocation};
pub use assign::{assign_query_topics, dominant_topics, DocTopic, DEFAULT_CONFIDENCE_THRESHOLD};
pub use corpus::{
    build_corpus, load_document_tsv, tokenize, Corpus, CorpusOptions, CorpusStats, Document,
    DocumentDir, DocumentSource, Vocabulary, STOP_WORDS,
};
pub use lda::{train_lda, DocTopics, InferOptions, LdaConfig, LdaModel};

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::warn;

use crate::querylog::{normalize_query, QueryStream};
use crate::{Error, Result, TopicId};

/// Query → topic assignments with per-topic popularity.
///
/// Popularity of a topic is the number of distinct queries assigned to it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopicMap {
    assignments: BTreeMap<String, TopicId>,
    popularity: BTreeMap<TopicId, u64>,
    total_distinct_queries: u64,
}

impl TopicMap {
    pub fn from_assignments(assignments: BTreeMap<String, TopicId>) -> Self {
        let mut popularity = BTreeMap::new();
        for &t in assignments.values() {
            *popularity.entry(t).or_insert(0) += 1;
        }
        TopicMap {
            total_distinct_queries: assignments.len() as u64,
            assignments,
            popularity,
        }
    }

    /// Uses the topics planted on the stream's events (first label per query).
    pub fn from_planted(stream: &QueryStream) -> Self {
        let mut assignments = BTreeMap::new();
        let mut distinct = BTreeSet::new();
        for e in stream.events() {
            distinct.insert(e.query.as_str());
            if let Some(t) = e.topic {
                assignments.entry(e.query.clone()).or_insert(t);
            }
        }
        TopicMap::from_assignments(assignments).with_total_distinct(distinct.len() as u64)
    }

    /// Registers topics that may have no queries (they still get a
    /// popularity entry of zero).
    pub fn with_topics(mut self, topics: impl IntoIterator<Item = TopicId>) -> Self {
        for t in topics {
            self.popularity.entry(t).or_insert(0);
        }
        self
    }

    /// Sets the number of distinct queries seen, classified or not. Values
    /// below the number of classified queries are raised to it.
    pub fn with_total_distinct(mut self, total: u64) -> Self {
        self.total_distinct_queries = total.max(self.assignments.len() as u64);
        self
    }

    pub fn get(&self, query: &str) -> Option<TopicId> {
        self.assignments.get(query).copied()
    }

    pub fn assignments(&self) -> &BTreeMap<String, TopicId> {
        &self.assignments
    }

    pub fn popularity(&self) -> &BTreeMap<TopicId, u64> {
        &self.popularity
    }

    pub fn topics(&self) -> impl Iterator<Item = TopicId> + '_ {
        self.popularity.keys().copied()
    }

    pub fn total_distinct_queries(&self) -> u64 {
        self.total_distinct_queries
    }

    /// `q`: distinct queries that received a topic.
    pub fn classified_queries(&self) -> u64 {
        self.popularity.values().sum()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct LoadedTopicMap {
    pub map: TopicMap,
    /// Rows overridden by a later row for the same query.
    pub duplicates: usize,
}

/// Writes `query\ttopic_id` rows in query order.
pub fn save_topic_map(map: &TopicMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (q, t) in &map.assignments {
        writeln!(w, "{q}\t{t}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads `query\ttopic_id` rows. A repeated query keeps its last topic.
pub fn load_topic_map(path: impl AsRef<Path>) -> Result<LoadedTopicMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut assignments = BTreeMap::new();
    let mut duplicates = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |reason: &str| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason: reason.to_string(),
        };
        let (q, t) = line
            .rsplit_once('\t')
            .ok_or_else(|| parse_err("expected query<TAB>topic"))?;
        let topic = TopicId(t.trim().parse().map_err(|_| parse_err("bad topic id"))?);
        let query = normalize_query(q);
        if query.is_empty() {
            continue;
        }
        if assignments.insert(query, topic).is_some() {
            duplicates += 1;
        }
    }
    if duplicates > 0 {
        warn!(
            "{}: {duplicates} duplicate query rows, last one kept",
            path.display()
        );
    }
    Ok(LoadedTopicMap {
        map: TopicMap::from_assignments(assignments),
        duplicates,
    })
}

/// Writes `topic_id\tdistinct_queries` rows.
pub fn save_popularity(map: &TopicMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (t, q) in &map.popularity {
        writeln!(w, "{t}\t{q}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
