use std::collections::{BTreeMap, HashSet};

use super::{
    round_nearest, Layer, Layout, LookupOutcome, LruCache, QueryCache, Request, SdcCache,
    SectionKey, StaticSet, TrainingProfile, Variant,
};
use crate::topics::TopicAllocation;
use crate::{QueryId, TopicId};

/// Static contents chosen from the training ranking.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StaticPlan {
    pub global: Vec<QueryId>,
    pub sections: BTreeMap<SectionKey, Vec<QueryId>>,
}

/// Fills the global static cache and the static share of every section.
///
/// * C1: the global cache takes only unclassified queries; each section takes
///   the top queries of its topic.
/// * C2: the global cache takes the top queries regardless of topic; each
///   section then takes the top queries of its topic not already global.
/// * Topic-only: no global cache; unclassified queries fill the `NoTopic`
///   section.
/// * Other variants: global cache only.
pub fn populate_std_statics(
    variant: Variant,
    profile: &TrainingProfile,
    static_size: usize,
    section_static: &BTreeMap<SectionKey, usize>,
) -> StaticPlan {
    let mut plan = StaticPlan::default();
    let global_filter = |q: QueryId| match variant {
        Variant::StdSdcVarC1 => profile.topic(q).is_none(),
        Variant::TSdcVar => false,
        _ => true,
    };
    for &q in &profile.ranking {
        if plan.global.len() == static_size {
            break;
        }
        if global_filter(q) {
            plan.global.push(q);
        }
    }

    if !variant.uses_topic_static() {
        return plan;
    }
    let in_global: HashSet<QueryId> = plan.global.iter().copied().collect();
    let mut remaining: BTreeMap<SectionKey, usize> = section_static
        .iter()
        .filter(|(_, &n)| n > 0)
        .map(|(&k, &n)| (k, n))
        .collect();
    for &q in &profile.ranking {
        if remaining.is_empty() {
            break;
        }
        let key = profile.section_of(q);
        if variant != Variant::TSdcVar && key == SectionKey::NoTopic {
            continue;
        }
        if variant == Variant::StdSdcVarC2 && in_global.contains(&q) {
            continue;
        }
        if let Some(left) = remaining.get_mut(&key) {
            plan.sections.entry(key).or_default().push(q);
            *left -= 1;
            if *left == 0 {
                remaining.remove(&key);
            }
        }
    }
    plan
}

/// Empty per-topic sections for an allocation: LRU sections for the LRU
/// variants, SDC sections with a static share `⌊f_ts·size⌉` otherwise.
/// Zero-size sections are omitted.
pub fn build_topic_sections(
    variant: Variant,
    allocation: &TopicAllocation,
    f_ts: f64,
) -> BTreeMap<TopicId, SdcCache> {
    allocation
        .entries()
        .iter()
        .filter(|(_, &n)| n > 0)
        .map(|(&t, &n)| {
            let s = if variant.uses_topic_static() {
                round_nearest(f_ts * n as f64).min(n)
            } else {
                0
            };
            (t, SdcCache::new(StaticSet::new([], s), n - s))
        })
        .collect()
}

/// Static-topic-dynamic cache.
#[derive(Debug, Clone, PartialEq)]
pub struct StdCache {
    static_set: StaticSet,
    sections: BTreeMap<TopicId, SdcCache>,
    dynamic: LruCache,
}

impl StdCache {
    pub fn new(layout: &Layout, mut plan: StaticPlan) -> Self {
        let sections = layout
            .sections
            .iter()
            .filter_map(|(&key, &n)| {
                let SectionKey::Topic(t) = key else {
                    return None;
                };
                let s = layout.section_static.get(&key).copied().unwrap_or(0);
                let members = plan.sections.remove(&key).unwrap_or_default();
                Some((t, SdcCache::new(StaticSet::new(members, s), n - s)))
            })
            .collect();
        StdCache {
            static_set: StaticSet::new(plan.global, layout.sizes.static_entries),
            sections,
            dynamic: LruCache::new(layout.sizes.dynamic_entries),
        }
    }

    pub fn from_parts(
        static_set: StaticSet,
        sections: BTreeMap<TopicId, SdcCache>,
        dynamic: LruCache,
    ) -> Self {
        StdCache {
            static_set,
            sections,
            dynamic,
        }
    }

    pub fn static_set(&self) -> &StaticSet {
        &self.static_set
    }

    pub fn sections(&self) -> &BTreeMap<TopicId, SdcCache> {
        &self.sections
    }

    pub fn dynamic(&self) -> &LruCache {
        &self.dynamic
    }
}

impl QueryCache for StdCache {
    fn process(&mut self, req: Request) -> LookupOutcome {
        if self.static_set.contains(req.query) {
            return LookupOutcome::hit(Layer::Static);
        }
        let mut rerouted = false;
        if let Some(t) = req.topic {
            match self.sections.get_mut(&t) {
                Some(section) => {
                    return section
                        .process(req)
                        .in_layer(Layer::Topic(SectionKey::Topic(t)));
                }
                None => rerouted = true,
            }
        }
        let mut out = self.dynamic.process(req);
        out.rerouted = rerouted;
        out
    }

    fn capacity(&self) -> usize {
        self.static_set.capacity()
            + self.sections.values().map(|s| s.capacity()).sum::<usize>()
            + self.dynamic.capacity()
    }

    fn resident(&self) -> usize {
        self.static_set.len()
            + self.sections.values().map(|s| s.resident()).sum::<usize>()
            + self.dynamic.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caches::{build_cache, layout, CacheConfig};
    use crate::topics::{allocate_topic_entries, equal_allocation};

    fn qid(c: char) -> QueryId {
        QueryId(c as u32 - 'a' as u32)
    }

    #[test]
    fn toy_stream_hits_twice_in_topic_section() {
        let sections = BTreeMap::from([(TopicId(0), SdcCache::new(StaticSet::default(), 1))]);
        let mut c = StdCache::from_parts(StaticSet::default(), sections, LruCache::new(1));
        let mut hits = 0;
        for ch in "abcadeafg".chars() {
            let topic = (ch == 'a').then_some(TopicId(0));
            let o = c.process(Request::new(qid(ch), topic));
            if o.hit {
                assert_eq!(o.served_by, Layer::Topic(SectionKey::Topic(TopicId(0))));
                hits += 1;
            }
        }
        assert_eq!(hits, 2);
    }

    #[test]
    fn static_wins_over_topic() {
        let sections = BTreeMap::from([(TopicId(0), SdcCache::new(StaticSet::default(), 2))]);
        let mut c = StdCache::from_parts(StaticSet::new([qid('a')], 1), sections, LruCache::new(1));
        let before = c.sections().clone();
        let o = c.process(Request::new(qid('a'), Some(TopicId(0))));
        assert_eq!(o.served_by, Layer::Static);
        assert_eq!(c.sections(), &before);
    }

    #[test]
    fn topic_without_section_goes_dynamic() {
        let mut c = StdCache::from_parts(StaticSet::default(), BTreeMap::new(), LruCache::new(1));
        let o = c.process(Request::new(qid('x'), Some(TopicId(3))));
        assert_eq!(o.served_by, Layer::Dynamic);
        assert!(o.rerouted);
        assert!(c.process(Request::new(qid('x'), Some(TopicId(3)))).hit);
    }

    #[test]
    fn fixed_sections_are_equal_lrus() {
        let ids: Vec<TopicId> = (0..5).map(TopicId).collect();
        let s = build_topic_sections(Variant::StdLruFixed, &equal_allocation(&ids, 10), 0.0);
        assert_eq!(s.len(), 5);
        assert!(s
            .values()
            .all(|c| c.static_set().capacity() == 0 && c.lru().capacity() == 2));
    }

    #[test]
    fn sdc_section_split() {
        let alloc = allocate_topic_entries(&BTreeMap::from([(TopicId(0), 1u64)]), 10);
        let s = build_topic_sections(Variant::StdSdcVarC2, &alloc, 0.6);
        assert_eq!(s[&TopicId(0)].static_set().capacity(), 6);
        assert_eq!(s[&TopicId(0)].lru().capacity(), 4);
    }

    #[test]
    fn weather_education_lru_caps() {
        let alloc =
            allocate_topic_entries(&BTreeMap::from([(TopicId(0), 6u64), (TopicId(1), 3)]), 5);
        let s = build_topic_sections(Variant::StdLruVar, &alloc, 0.0);
        assert_eq!(s[&TopicId(0)].lru().capacity(), 3);
        assert_eq!(s[&TopicId(1)].lru().capacity(), 2);
    }

    fn profile(ranking: &[char], topics: &[(char, u32)]) -> TrainingProfile {
        let mut topic_of = vec![None; 26];
        let mut popularity = BTreeMap::new();
        for &(c, t) in topics {
            topic_of[qid(c).index()] = Some(TopicId(t));
            *popularity.entry(TopicId(t)).or_insert(0) += 1;
        }
        let no_topic = ranking
            .iter()
            .filter(|&&c| topic_of[qid(c).index()].is_none())
            .count() as u64;
        TrainingProfile {
            ranking: ranking.iter().map(|&c| qid(c)).collect(),
            topic_of,
            popularity,
            no_topic_distinct: no_topic,
        }
    }

    #[test]
    fn c1_with_only_topical_queries_has_empty_global() {
        let p = profile(&['a', 'b', 'c'], &[('a', 0), ('b', 0), ('c', 1)]);
        let plan = populate_std_statics(Variant::StdSdcVarC1, &p, 2, &BTreeMap::new());
        assert!(plan.global.is_empty());
    }

    #[test]
    fn c2_does_not_duplicate_global_entries() {
        let p = profile(&['a', 'b', 'c', 'd'], &[('a', 0), ('c', 0)]);
        let sec = BTreeMap::from([(SectionKey::Topic(TopicId(0)), 1)]);
        let plan = populate_std_statics(Variant::StdSdcVarC2, &p, 1, &sec);
        assert_eq!(plan.global, vec![qid('a')]);
        assert_eq!(
            plan.sections[&SectionKey::Topic(TopicId(0))],
            vec![qid('c')]
        );
    }

    #[test]
    fn c2_toy_matches_enumeration() {
        // Ranking a > b > c > d; a, b, d on topic 0; c unclassified.
        let p = profile(&['a', 'b', 'c', 'd'], &[('a', 0), ('b', 0), ('d', 0)]);
        let sec = BTreeMap::from([(SectionKey::Topic(TopicId(0)), 1)]);
        let plan = populate_std_statics(Variant::StdSdcVarC2, &p, 2, &sec);
        // Enumerate: global = first two of the ranking; section = first
        // topic-0 query of the ranking outside the global set.
        let global: Vec<QueryId> = p.ranking.iter().take(2).copied().collect();
        let section: Vec<QueryId> = p
            .ranking
            .iter()
            .copied()
            .filter(|q| p.topic(*q) == Some(TopicId(0)) && !global.contains(q))
            .take(1)
            .collect();
        assert_eq!(plan.global, global);
        assert_eq!(plan.sections[&SectionKey::Topic(TopicId(0))], section);
        assert_eq!(section, vec![qid('d')]);

        // C1 on the same log: global only takes unclassified c.
        let plan = populate_std_statics(Variant::StdSdcVarC1, &p, 2, &sec);
        assert_eq!(plan.global, vec![qid('c')]);
        assert_eq!(
            plan.sections[&SectionKey::Topic(TopicId(0))],
            vec![qid('a')]
        );
    }

    #[test]
    fn built_cache_respects_layout() {
        let p = profile(&['a', 'b', 'c', 'd', 'e'], &[('a', 0), ('b', 1), ('d', 1)]);
        let cfg = CacheConfig::std(Variant::StdSdcVarC2, 10, 0.2, 0.6, 0.5);
        let lay = layout(&cfg, &p).unwrap();
        let c = build_cache(&cfg, &p).unwrap();
        assert_eq!(c.capacity(), 10);
        assert_eq!(lay.total(), 10);
    }
}
