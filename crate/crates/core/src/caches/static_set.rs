use std::collections::{HashMap, HashSet};

use super::{Layer, LookupOutcome, QueryCache, Request};
use crate::querylog::QueryStream;
use crate::QueryId;

/// Query frequencies of a training stream, ranked most frequent first with
/// ties in ascending lexicographic order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    ranked: Vec<(String, u64)>,
}

impl FrequencyTable {
    pub fn from_stream(stream: &QueryStream) -> Self {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for q in stream.queries() {
            *counts.entry(q).or_default() += 1;
        }
        let mut ranked: Vec<(String, u64)> = counts
            .into_iter()
            .map(|(q, c)| (q.to_string(), c))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        FrequencyTable { ranked }
    }

    pub fn ranked(&self) -> &[(String, u64)] {
        &self.ranked
    }

    pub fn distinct(&self) -> usize {
        self.ranked.len()
    }
}

/// The `size` most frequent queries of the training stream, most frequent
/// first. Fewer are returned when the stream has fewer distinct queries.
pub fn populate_static(training: &QueryStream, size: usize) -> Vec<String> {
    FrequencyTable::from_stream(training)
        .ranked
        .into_iter()
        .take(size)
        .map(|(q, _)| q)
        .collect()
}

/// Read-only set of precomputed results.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StaticSet {
    members: HashSet<QueryId>,
    capacity: usize,
}

impl StaticSet {
    pub fn new(members: impl IntoIterator<Item = QueryId>, capacity: usize) -> Self {
        let members: HashSet<QueryId> = members.into_iter().collect();
        debug_assert!(members.len() <= capacity);
        StaticSet { members, capacity }
    }

    pub fn from_ranking(ranking: &[QueryId], size: usize) -> Self {
        StaticSet::new(ranking.iter().take(size).copied(), size)
    }

    pub fn contains(&self, q: QueryId) -> bool {
        self.members.contains(&q)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = QueryId> + '_ {
        self.members.iter().copied()
    }
}

impl QueryCache for StaticSet {
    fn process(&mut self, req: Request) -> LookupOutcome {
        if self.contains(req.query) {
            LookupOutcome::hit(Layer::Static)
        } else {
            LookupOutcome::miss(Layer::Static, false)
        }
    }

    fn capacity(&self) -> usize {
        self.capacity
    }

    fn resident(&self) -> usize {
        self.len()
    }
}
