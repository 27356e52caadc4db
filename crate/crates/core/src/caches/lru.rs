use std::collections::HashMap;

use super::{Layer, LookupOutcome, QueryCache, Request};
use crate::QueryId;

const NIL: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node {
    key: QueryId,
    prev: usize,
    next: usize,
}

/// Fixed-capacity LRU over an index-linked list.
///
/// Slots are allocated once up to `capacity`; a full cache recycles the
/// least-recent slot in place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LruCache {
    capacity: usize,
    map: HashMap<QueryId, usize>,
    nodes: Vec<Node>,
    /// Most recent.
    head: usize,
    /// Least recent.
    tail: usize,
}

impl LruCache {
    pub fn new(capacity: usize) -> Self {
        LruCache {
            capacity,
            map: HashMap::with_capacity(capacity.min(1 << 20)),
            nodes: Vec::with_capacity(capacity.min(1 << 20)),
            head: NIL,
            tail: NIL,
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn contains(&self, q: QueryId) -> bool {
        self.map.contains_key(&q)
    }

    fn unlink(&mut self, i: usize) {
        let (prev, next) = (self.nodes[i].prev, self.nodes[i].next);
        if prev == NIL {
            self.head = next;
        } else {
            self.nodes[prev].next = next;
        }
        if next == NIL {
            self.tail = prev;
        } else {
            self.nodes[next].prev = prev;
        }
    }

    fn push_front(&mut self, i: usize) {
        self.nodes[i].prev = NIL;
        self.nodes[i].next = self.head;
        if self.head != NIL {
            self.nodes[self.head].prev = i;
        }
        self.head = i;
        if self.tail == NIL {
            self.tail = i;
        }
    }

    /// Marks `q` most recent. Returns false if it is not resident.
    pub fn touch(&mut self, q: QueryId) -> bool {
        let Some(&i) = self.map.get(&q) else {
            return false;
        };
        if self.head != i {
            self.unlink(i);
            self.push_front(i);
        }
        true
    }

    /// Inserts a non-resident `q` as most recent, returning the evicted
    /// query if the cache was full. A zero-capacity cache stores nothing.
    pub fn insert(&mut self, q: QueryId) -> Option<QueryId> {
        debug_assert!(!self.contains(q));
        if self.capacity == 0 {
            return None;
        }
        if self.nodes.len() < self.capacity {
            let i = self.nodes.len();
            self.nodes.push(Node {
                key: q,
                prev: NIL,
                next: NIL,
            });
            self.map.insert(q, i);
            self.push_front(i);
            return None;
        }
        let i = self.tail;
        let victim = self.nodes[i].key;
        self.map.remove(&victim);
        self.unlink(i);
        self.nodes[i].key = q;
        self.map.insert(q, i);
        self.push_front(i);
        Some(victim)
    }

    /// Residents from most to least recent.
    pub fn recency_order(&self) -> Vec<QueryId> {
        let mut out = Vec::with_capacity(self.len());
        let mut i = self.head;
        while i != NIL {
            out.push(self.nodes[i].key);
            i = self.nodes[i].next;
        }
        out
    }
}

impl QueryCache for LruCache {
    fn process(&mut self, req: Request) -> LookupOutcome {
        if self.touch(req.query) {
            return LookupOutcome::hit(Layer::Dynamic);
        }
        let admitted = req.admit && self.capacity > 0;
        if admitted {
            self.insert(req.query);
        }
        LookupOutcome::miss(Layer::Dynamic, admitted)
    }

    fn capacity(&self) -> usize {
        self.capacity
    }

    fn resident(&self) -> usize {
        self.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(s: &str) -> Vec<QueryId> {
        s.bytes().map(|b| QueryId(b as u32)).collect()
    }

    fn hits(cache: &mut LruCache, stream: &[QueryId]) -> usize {
        stream
            .iter()
            .filter(|&&q| cache.process(Request::new(q, None)).hit)
            .count()
    }

    /// Naive reference: a Vec scanned linearly, most recent at the front.
    fn reference_outcomes(capacity: usize, stream: &[u32]) -> Vec<bool> {
        let mut list: Vec<u32> = Vec::new();
        stream
            .iter()
            .map(|&q| {
                if let Some(pos) = list.iter().position(|&x| x == q) {
                    list.remove(pos);
                    list.insert(0, q);
                    true
                } else {
                    if capacity > 0 {
                        list.insert(0, q);
                        list.truncate(capacity);
                    }
                    false
                }
            })
            .collect()
    }

    #[test]
    fn toy_stream_gets_no_hits() {
        let mut c = LruCache::new(2);
        assert_eq!(hits(&mut c, &ids("abcadeafg")), 0);
    }

    #[test]
    fn repeated_query_hits() {
        let mut c = LruCache::new(1);
        assert_eq!(hits(&mut c, &ids("aaa")), 2);
    }

    #[test]
    fn zero_capacity_never_stores() {
        let mut c = LruCache::new(0);
        assert_eq!(hits(&mut c, &ids("aaaa")), 0);
        assert!(c.is_empty());
    }

    #[test]
    fn eviction_order() {
        let mut c = LruCache::new(2);
        c.insert(QueryId(1));
        c.insert(QueryId(2));
        c.touch(QueryId(1));
        assert_eq!(c.insert(QueryId(3)), Some(QueryId(2)));
        assert_eq!(c.recency_order(), vec![QueryId(3), QueryId(1)]);
    }

    #[test]
    fn rejected_miss_leaves_state() {
        let mut c = LruCache::new(2);
        c.insert(QueryId(1));
        let before = c.clone();
        let o = c.process(Request {
            query: QueryId(9),
            topic: None,
            admit: false,
        });
        assert!(!o.hit && !o.admitted);
        assert_eq!(c, before);
    }

    proptest! {
        #[test]
        fn matches_naive_reference(capacity in 0usize..10, stream in proptest::collection::vec(0u32..20, 0..200)) {
            let mut c = LruCache::new(capacity);
            let fast: Vec<bool> = stream.iter().map(|&q| c.process(Request::new(QueryId(q), None)).hit).collect();
            prop_assert_eq!(fast, reference_outcomes(capacity, &stream));
            prop_assert!(c.len() <= capacity);
        }
    }
}
