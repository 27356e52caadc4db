use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap};

use super::{Layer, LookupOutcome, QueryCache, Request};
use crate::QueryId;

/// Next-use position of a query that is never requested again.
pub const NEVER: usize = usize::MAX;

/// For every stream position, the position of the next request for the same
/// query (0-indexed, [`NEVER`] if none).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FutureIndex {
    stream: Vec<QueryId>,
    next_use: Vec<usize>,
    first_use: HashMap<QueryId, usize>,
}

impl FutureIndex {
    pub fn next_use(&self) -> &[usize] {
        &self.next_use
    }

    pub fn len(&self) -> usize {
        self.stream.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stream.is_empty()
    }

    pub fn stream(&self) -> &[QueryId] {
        &self.stream
    }

    /// First position of `q` in the stream.
    pub fn first_use(&self, q: QueryId) -> usize {
        self.first_use.get(&q).copied().unwrap_or(NEVER)
    }
}

/// One backward pass over the stream.
pub fn build_future_index(stream: &[QueryId]) -> FutureIndex {
    let mut next_use = vec![NEVER; stream.len()];
    let mut seen: HashMap<QueryId, usize> = HashMap::new();
    for (i, &q) in stream.iter().enumerate().rev() {
        if let Some(j) = seen.insert(q, i) {
            next_use[i] = j;
        }
    }
    FutureIndex {
        stream: stream.to_vec(),
        next_use,
        first_use: seen,
    }
}

/// What a full clairvoyant cache does with a missed query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BeladyMode {
    /// Always insert, evicting the resident reused farthest in the future.
    Demand,
    /// Skip the insertion when the missed query is reused strictly later
    /// than every resident. Optimal among caches allowed to not store a
    /// missed result, which includes every cache with a static partition.
    Bypass,
}

/// Clairvoyant replacement over a fixed stream.
///
/// Requests must arrive in the order of the indexed stream. Among residents
/// never requested again, the least recently used one is evicted.
#[derive(Debug, Clone)]
pub struct BeladyCache<'a> {
    capacity: usize,
    mode: BeladyMode,
    index: &'a FutureIndex,
    cursor: usize,
    clock: u64,
    /// Resident -> (next use, last access).
    resident: HashMap<QueryId, (usize, u64)>,
    /// Eviction order; the last element is the victim.
    order: BTreeSet<(usize, Reverse<u64>, QueryId)>,
}

impl<'a> BeladyCache<'a> {
    pub fn new(capacity: usize, index: &'a FutureIndex, mode: BeladyMode) -> Self {
        BeladyCache {
            capacity,
            mode,
            index,
            cursor: 0,
            clock: 0,
            resident: HashMap::new(),
            order: BTreeSet::new(),
        }
    }

    /// Starts with `queries` resident (up to capacity, in order given).
    pub fn with_preload(mut self, queries: impl IntoIterator<Item = QueryId>) -> Self {
        for q in queries {
            if self.resident.len() == self.capacity {
                break;
            }
            if !self.resident.contains_key(&q) {
                self.clock += 1;
                self.put(q, self.index.first_use(q));
            }
        }
        self
    }

    pub fn len(&self) -> usize {
        self.resident.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resident.is_empty()
    }

    pub fn contains(&self, q: QueryId) -> bool {
        self.resident.contains_key(&q)
    }

    fn put(&mut self, q: QueryId, next: usize) {
        if let Some((old_next, old_at)) = self.resident.insert(q, (next, self.clock)) {
            self.order.remove(&(old_next, Reverse(old_at), q));
        }
        self.order.insert((next, Reverse(self.clock), q));
    }

    fn evict(&mut self) -> Option<QueryId> {
        let (_, _, victim) = self.order.pop_last()?;
        self.resident.remove(&victim);
        Some(victim)
    }
}

impl QueryCache for BeladyCache<'_> {
    fn process(&mut self, req: Request) -> LookupOutcome {
        let pos = self.cursor;
        assert!(pos < self.index.len(), "request beyond the indexed stream");
        debug_assert_eq!(
            self.index.stream[pos], req.query,
            "request out of stream order"
        );
        self.cursor += 1;
        self.clock += 1;
        let next = self.index.next_use[pos];

        if self.resident.contains_key(&req.query) {
            self.put(req.query, next);
            return LookupOutcome::hit(Layer::Dynamic);
        }
        if !req.admit || self.capacity == 0 {
            return LookupOutcome::miss(Layer::Dynamic, false);
        }
        if self.resident.len() == self.capacity {
            if self.mode == BeladyMode::Bypass {
                let farthest = self.order.last().map_or(NEVER, |e| e.0);
                if next > farthest {
                    return LookupOutcome::miss(Layer::Dynamic, false);
                }
            }
            self.evict();
        }
        self.put(req.query, next);
        LookupOutcome::miss(Layer::Dynamic, true)
    }

    fn capacity(&self) -> usize {
        self.capacity
    }

    fn resident(&self) -> usize {
        self.resident.len()
    }
}
