use std::collections::BTreeMap;

use super::{
    Layer, Layout, LookupOutcome, QueryCache, Request, SdcCache, SectionKey, StaticPlan, StaticSet,
};

/// Topic-only cache: every query goes to the SDC section of its topic.
/// Unclassified queries, and classified queries whose topic got no section,
/// share the `NoTopic` section.
#[derive(Debug, Clone, PartialEq)]
pub struct TsdcCache {
    sections: BTreeMap<SectionKey, SdcCache>,
}

impl TsdcCache {
    pub fn new(layout: &Layout, mut plan: StaticPlan) -> Self {
        let sections = layout
            .sections
            .iter()
            .map(|(&key, &n)| {
                let s = layout.section_static.get(&key).copied().unwrap_or(0);
                let members = plan.sections.remove(&key).unwrap_or_default();
                (key, SdcCache::new(StaticSet::new(members, s), n - s))
            })
            .collect();
        TsdcCache { sections }
    }

    pub fn from_sections(sections: BTreeMap<SectionKey, SdcCache>) -> Self {
        TsdcCache { sections }
    }

    pub fn sections(&self) -> &BTreeMap<SectionKey, SdcCache> {
        &self.sections
    }

    /// Section that serves a request.
    pub fn route(&self, req: &Request) -> SectionKey {
        match req.topic {
            Some(t) if self.sections.contains_key(&SectionKey::Topic(t)) => SectionKey::Topic(t),
            _ => SectionKey::NoTopic,
        }
    }
}

impl QueryCache for TsdcCache {
    fn process(&mut self, req: Request) -> LookupOutcome {
        let key = self.route(&req);
        let rerouted = req.topic.is_some() && key == SectionKey::NoTopic;
        let mut out = match self.sections.get_mut(&key) {
            Some(section) => section.process(req).in_layer(Layer::Topic(key)),
            None => LookupOutcome::miss(Layer::Topic(key), false),
        };
        out.rerouted = rerouted;
        out
    }

    fn capacity(&self) -> usize {
        self.sections.values().map(|s| s.capacity()).sum()
    }

    fn resident(&self) -> usize {
        self.sections.values().map(|s| s.resident()).sum()
    }
}
