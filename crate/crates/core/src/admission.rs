//! Admission filters consulted when a lookup misses.

use std::collections::{HashMap, HashSet};

use crate::caches::{LookupOutcome, QueryCache, Request};
use crate::{Error, QueryId, Result, TopicId};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum AdmissionPolicy {
    #[default]
    AlwaysAdmit,
    /// Admit if the query was seen at least `x` times in training and has
    /// fewer than `y` terms and fewer than `z` characters.
    FeatureThreshold { x: u64, y: usize, z: usize },
    /// Admit only queries that occur more than once in the replayed stream.
    SingletonOracle { admittable: HashSet<String> },
}

impl AdmissionPolicy {
    pub const DEFAULT_X: u64 = 3;
    pub const DEFAULT_Y: usize = 5;
    pub const DEFAULT_Z: usize = 20;

    pub fn features(x: u64, y: usize, z: usize) -> Result<Self> {
        if y == 0 {
            return Err(Error::param("y", "must be at least 1"));
        }
        if z == 0 {
            return Err(Error::param("z", "must be at least 1"));
        }
        Ok(AdmissionPolicy::FeatureThreshold { x, y, z })
    }

    /// Decision for a normalized query with the given training frequency.
    pub fn admits(&self, query: &str, train_freq: u64) -> bool {
        match self {
            AdmissionPolicy::AlwaysAdmit => true,
            &AdmissionPolicy::FeatureThreshold { x, y, z } => {
                admit_feature(x, y, z, query, train_freq)
            }
            AdmissionPolicy::SingletonOracle { admittable } => admittable.contains(query),
        }
    }
}

/// `train_freq ≥ x`, fewer than `y` whitespace-separated terms and fewer
/// than `z` characters (spaces included).
pub fn admit_feature(x: u64, y: usize, z: usize, query: &str, train_freq: u64) -> bool {
    train_freq >= x && query.split_whitespace().count() < y && query.chars().count() < z
}

/// Oracle over the queries of the stream to be replayed.
pub fn build_singleton_oracle<'a>(stream: impl IntoIterator<Item = &'a str>) -> AdmissionPolicy {
    let mut counts: HashMap<&str, u32> = HashMap::new();
    for q in stream {
        *counts.entry(q).or_default() += 1;
    }
    AdmissionPolicy::SingletonOracle {
        admittable: counts
            .into_iter()
            .filter(|&(_, c)| c >= 2)
            .map(|(q, _)| q.to_string())
            .collect(),
    }
}

/// Lookup with the policy deciding whether a miss may be stored.
pub fn guarded_process<C: QueryCache + ?Sized>(
    cache: &mut C,
    policy: &AdmissionPolicy,
    query: &str,
    id: QueryId,
    topic: Option<TopicId>,
    train_freq: u64,
) -> LookupOutcome {
    cache.process(Request {
        query: id,
        topic,
        admit: policy.admits(query, train_freq),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caches::LruCache;
    use proptest::prelude::*;

    fn xyz_policy() -> AdmissionPolicy {
        AdmissionPolicy::features(3, 5, 20).unwrap()
    }

    #[test]
    fn threshold_boundaries() {
        let p = xyz_policy();
        assert!(p.admits("weather", 10));
        assert!(!p.admits("a b c d e", 10));
        assert!(p.admits("a b c d", 10));
        assert!(!p.admits("rare query", 2));
        assert!(!p.admits(&"x".repeat(20), 10));
        assert!(p.admits(&"x".repeat(19), 10));
        assert!(p.admits("abcd efghi", 3));
    }

    #[test]
    fn zero_limits_rejected() {
        assert!(AdmissionPolicy::features(0, 0, 5).is_err());
        assert!(AdmissionPolicy::features(0, 1, 0).is_err());
    }

    #[test]
    fn oracle_keeps_repeated_queries() {
        let AdmissionPolicy::SingletonOracle { admittable } =
            build_singleton_oracle(["a", "b", "a", "c"])
        else {
            unreachable!()
        };
        assert_eq!(admittable, HashSet::from(["a".to_string()]));
        let AdmissionPolicy::SingletonOracle { admittable } = build_singleton_oracle(["a", "b"])
        else {
            unreachable!()
        };
        assert!(admittable.is_empty());
    }

    #[test]
    fn rejected_query_never_stored() {
        let mut c = LruCache::new(2);
        for _ in 0..3 {
            let o = guarded_process(&mut c, &xyz_policy(), "rare", QueryId(1), None, 0);
            assert!(!o.hit && !o.admitted);
        }
        assert!(c.is_empty());
    }

    #[test]
    fn oracle_replay_aba() {
        let stream = ["a", "b", "a"];
        let oracle = build_singleton_oracle(stream);
        let mut c = LruCache::new(1);
        let out: Vec<(bool, bool)> = stream
            .iter()
            .map(|&q| {
                let o =
                    guarded_process(&mut c, &oracle, q, QueryId(q.as_bytes()[0] as u32), None, 0);
                (o.hit, o.admitted)
            })
            .collect();
        assert_eq!(out, vec![(false, true), (false, false), (true, false)]);
    }

    #[test]
    fn resident_query_hits_even_if_rejected() {
        let mut c = LruCache::new(1);
        c.insert(QueryId(5));
        let o = guarded_process(&mut c, &xyz_policy(), "rare", QueryId(5), None, 0);
        assert!(o.hit);
    }

    proptest! {
        #[test]
        fn oracle_matches_histogram(stream in proptest::collection::vec(0u8..15, 0..80)) {
            let names: Vec<String> = stream.iter().map(|b| format!("q{b}")).collect();
            let AdmissionPolicy::SingletonOracle { admittable } =
                build_singleton_oracle(names.iter().map(String::as_str)) else { unreachable!() };
            let mut hist = [0usize; 15];
            for &b in &stream {
                hist[b as usize] += 1;
            }
            let expected: HashSet<String> = (0..15).filter(|&b| hist[b] >= 2).map(|b| format!("q{b}")).collect();
            prop_assert_eq!(admittable, expected);
        }

        #[test]
        fn always_admit_is_transparent(cap in 0usize..6, stream in proptest::collection::vec(0u32..10, 0..100)) {
            let mut guarded = LruCache::new(cap);
            let mut plain = LruCache::new(cap);
            for &q in &stream {
                let a = guarded_process(&mut guarded, &AdmissionPolicy::AlwaysAdmit, "", QueryId(q), None, 0);
                prop_assert_eq!(a, plain.process(Request::new(QueryId(q), None)));
            }
        }
    }
}
