use super::{Layer, LookupOutcome, LruCache, QueryCache, Request, StaticSet};

/// Static-dynamic cache: a read-only set of frequent queries in front of an
/// LRU.
#[derive(Debug, Clone, PartialEq)]
pub struct SdcCache {
    static_set: StaticSet,
    lru: LruCache,
}

impl SdcCache {
    pub fn new(static_set: StaticSet, dynamic_capacity: usize) -> Self {
        SdcCache {
            static_set,
            lru: LruCache::new(dynamic_capacity),
        }
    }

    pub fn static_set(&self) -> &StaticSet {
        &self.static_set
    }

    pub fn lru(&self) -> &LruCache {
        &self.lru
    }
}

impl QueryCache for SdcCache {
    fn process(&mut self, req: Request) -> LookupOutcome {
        if self.static_set.contains(req.query) {
            return LookupOutcome::hit(Layer::Static);
        }
        self.lru.process(req)
    }

    fn capacity(&self) -> usize {
        self.static_set.capacity() + self.lru.capacity()
    }

    fn resident(&self) -> usize {
        self.static_set.len() + self.lru.len()
    }
}
