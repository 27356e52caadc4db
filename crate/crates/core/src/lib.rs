//! Trace-driven simulator for query-result caches with a topic partition.
//!
//! The crate models the static-topic-dynamic (STD) cache family: a static
//! section filled with the most frequent training queries, a topic section
//! split into per-topic sub-caches, and an LRU-managed dynamic section. The
//! classic SDC and LRU caches, a topic-only variant and a clairvoyant Bélády
//! bound are provided alongside, all behind one replay interface.
//!
//! Modules, bottom-up:
//!
//! * [`querylog`]: ingestion, normalization, splitting and synthetic logs.
//! * [`topics`]: click-enriched corpora, collapsed Gibbs LDA, topic voting and
//!   topic-cache allocation.
//! * [`caches`]: every replacement policy.
//! * [`admission`]: miss-time admission filters.
//! * [`simulator`]: replay, metrics, sweeps and CSV output.
//!
//! Grid sweeps run on rayon when the default `parallel` feature is enabled and
//! fall back to a sequential loop otherwise.

pub mod admission;
pub mod caches;
mod error;
pub mod par;
pub mod querylog;
pub mod simulator;
pub mod topics;

use std::fmt;

pub use error::{Error, Result};

/// Identifier of a latent topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TopicId(pub u32);

impl fmt::Display for TopicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense identifier of an interned normalized query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QueryId(pub u32);

impl QueryId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}
