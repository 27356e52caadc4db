use std::collections::BTreeMap;

use super::corpus::Corpus;
use super::lda::LdaModel;
use super::TopicMap;
use crate::TopicId;

/// Most probable topic of a query-document pair and its probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DocTopic {
    pub topic: TopicId,
    pub probability: f64,
}

/// Argmax topic of every training document of `model`.
pub fn dominant_topics(model: &LdaModel, corpus: &Corpus) -> Vec<DocTopic> {
    (0..corpus.docs.len())
        .map(|d| {
            let (t, p) = model.training_doc_topics(d).argmax();
            DocTopic {
                topic: TopicId(t as u32),
                probability: p,
            }
        })
        .collect()
}

/// Probability below which a document casts no vote.
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.2;

/// Click voting: each query takes the topic of its most-clicked document.
///
/// Documents whose argmax probability is below `confidence_threshold` cast
/// no vote, and queries left without votes stay unclassified. Click ties go
/// to the document that appears first in the corpus.
pub fn assign_query_topics(
    corpus: &Corpus,
    per_doc: &[DocTopic],
    confidence_threshold: f64,
) -> TopicMap {
    assert_eq!(corpus.docs.len(), per_doc.len(), "one topic per document");
    // query -> (clicks, corpus position, topic)
    let mut best: BTreeMap<&str, (u32, usize, TopicId)> = BTreeMap::new();
    for (pos, (doc, vote)) in corpus.docs.iter().zip(per_doc).enumerate() {
        if vote.probability < confidence_threshold {
            continue;
        }
        let candidate = (doc.click_count, pos, vote.topic);
        best.entry(doc.source_query.as_str())
            .and_modify(|cur| {
                if candidate.0 > cur.0 || (candidate.0 == cur.0 && candidate.1 < cur.1) {
                    *cur = candidate;
                }
            })
            .or_insert(candidate);
    }
    let mut distinct: Vec<&str> = corpus
        .docs
        .iter()
        .map(|d| d.source_query.as_str())
        .collect();
    distinct.sort_unstable();
    distinct.dedup();
    TopicMap::from_assignments(
        best.into_iter()
            .map(|(q, (_, _, t))| (q.to_string(), t))
            .collect(),
    )
    .with_total_distinct(distinct.len() as u64)
}
