//! Cache policies behind one process-one-query interface.
//!
//! Every policy consumes [`Request`]s in stream order and answers with a
//! [`LookupOutcome`]. The admission decision travels with the request and is
//! only consulted on a miss.

mod belady;
mod lru;
mod sdc;
mod static_set;
mod std_cache;
mod tsdc;

pub use belady::{build_future_index, BeladyCache, BeladyMode, FutureIndex, NEVER};
pub use lru::LruCache;
pub use sdc::SdcCache;
pub use static_set::{populate_static, FrequencyTable, StaticSet};
pub use std_cache::{build_topic_sections, populate_std_statics, StaticPlan, StdCache};
pub use tsdc::TsdcCache;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::topics::{allocate_topic_entries, equal_allocation, Allocation};
use crate::{Error, QueryId, Result, TopicId};

/// Key of a topic-cache section. `NoTopic` is the extra section that the
/// topic-only cache uses for unclassified queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SectionKey {
    Topic(TopicId),
    NoTopic,
}

impl fmt::Display for SectionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SectionKey::Topic(t) => write!(f, "{t}"),
            SectionKey::NoTopic => f.write_str("none"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layer {
    Static,
    Topic(SectionKey),
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LookupOutcome {
    pub hit: bool,
    pub served_by: Layer,
    /// Whether a missed query entered the cache. Always false on hits.
    pub admitted: bool,
    /// A classified query whose topic had no section and fell through to the
    /// dynamic cache.
    pub rerouted: bool,
}

impl LookupOutcome {
    pub fn hit(layer: Layer) -> Self {
        LookupOutcome {
            hit: true,
            served_by: layer,
            admitted: false,
            rerouted: false,
        }
    }

    pub fn miss(layer: Layer, admitted: bool) -> Self {
        LookupOutcome {
            hit: false,
            served_by: layer,
            admitted,
            rerouted: false,
        }
    }

    fn in_layer(mut self, layer: Layer) -> Self {
        self.served_by = layer;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Request {
    pub query: QueryId,
    pub topic: Option<TopicId>,
    /// Admission decision, applied only if the lookup misses.
    pub admit: bool,
}

impl Request {
    pub fn new(query: QueryId, topic: Option<TopicId>) -> Self {
        Request {
            query,
            topic,
            admit: true,
        }
    }
}

pub trait QueryCache {
    fn process(&mut self, req: Request) -> LookupOutcome;

    /// Configured number of entries.
    fn capacity(&self) -> usize;

    /// Entries currently holding a result.
    fn resident(&self) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    Sdc,
    StdLruFixed,
    StdLruVar,
    StdSdcVarC1,
    StdSdcVarC2,
    TSdcVar,
    LruOnly,
    StaticOnly,
    Belady,
}

impl Variant {
    pub const ALL: [Variant; 9] = [
        Variant::Sdc,
        Variant::StdLruFixed,
        Variant::StdLruVar,
        Variant::StdSdcVarC1,
        Variant::StdSdcVarC2,
        Variant::TSdcVar,
        Variant::LruOnly,
        Variant::StaticOnly,
        Variant::Belady,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Sdc => "sdc",
            Variant::StdLruFixed => "std_lru_fixed",
            Variant::StdLruVar => "std_lru_var",
            Variant::StdSdcVarC1 => "std_sdc_var_c1",
            Variant::StdSdcVarC2 => "std_sdc_var_c2",
            Variant::TSdcVar => "t_sdc_var",
            Variant::LruOnly => "lru",
            Variant::StaticOnly => "static",
            Variant::Belady => "belady",
        }
    }

    /// Members of the topic-aware family compared against SDC.
    pub fn is_topical(self) -> bool {
        matches!(
            self,
            Variant::StdLruFixed
                | Variant::StdLruVar
                | Variant::StdSdcVarC1
                | Variant::StdSdcVarC2
                | Variant::TSdcVar
        )
    }

    /// Whether the topic sections carry a static share.
    pub fn uses_topic_static(self) -> bool {
        matches!(
            self,
            Variant::StdSdcVarC1 | Variant::StdSdcVarC2 | Variant::TSdcVar
        )
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::param("variant", format!("unknown variant `{s}`")))
    }
}

/// Nearest integer, exact halves to even. Values within 1e-9 of a half are
/// treated as halves so that e.g. `0.7 * 5` rounds like `3.5`.
pub fn round_nearest(x: f64) -> usize {
    let floor = x.floor();
    let frac = x - floor;
    let r = if (frac - 0.5).abs() < 1e-9 {
        if floor % 2.0 == 0.0 {
            floor
        } else {
            floor + 1.0
        }
    } else {
        x.round()
    };
    r.max(0.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheConfig {
    pub total_entries: usize,
    pub f_s: f64,
    pub f_t: f64,
    pub f_d: f64,
    /// Static share inside each topic section.
    pub f_ts: f64,
    pub variant: Variant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionSizes {
    pub static_entries: usize,
    pub topic_entries: usize,
    pub dynamic_entries: usize,
}

impl CacheConfig {
    pub fn lru(n: usize) -> Self {
        CacheConfig {
            total_entries: n,
            f_s: 0.0,
            f_t: 0.0,
            f_d: 1.0,
            f_ts: 0.0,
            variant: Variant::LruOnly,
        }
    }

    pub fn static_only(n: usize) -> Self {
        CacheConfig {
            f_s: 1.0,
            f_d: 0.0,
            variant: Variant::StaticOnly,
            ..CacheConfig::lru(n)
        }
    }

    pub fn sdc(n: usize, f_s: f64) -> Self {
        CacheConfig {
            f_s,
            f_d: 1.0 - f_s,
            variant: Variant::Sdc,
            ..CacheConfig::lru(n)
        }
    }

    /// STD-family configuration; `f_d` is whatever `f_s` and `f_t` leave.
    pub fn std(variant: Variant, n: usize, f_s: f64, f_t: f64, f_ts: f64) -> Self {
        CacheConfig {
            total_entries: n,
            f_s,
            f_t,
            f_d: 1.0 - f_s - f_t,
            f_ts,
            variant,
        }
    }

    pub fn tsdc(n: usize, f_ts: f64) -> Self {
        CacheConfig {
            total_entries: n,
            f_s: 0.0,
            f_t: 1.0,
            f_d: 0.0,
            f_ts,
            variant: Variant::TSdcVar,
        }
    }

    pub fn belady(n: usize) -> Self {
        CacheConfig {
            variant: Variant::Belady,
            ..CacheConfig::lru(n)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        for (name, f) in [
            ("f_s", self.f_s),
            ("f_t", self.f_t),
            ("f_d", self.f_d),
            ("f_ts", self.f_ts),
        ] {
            if !(-1e-9..=1.0 + 1e-9).contains(&f) {
                return bad(format!("{name} = {f} is outside [0, 1]"));
            }
        }
        if (self.f_s + self.f_t + self.f_d - 1.0).abs() > 1e-9 {
            return bad(format!(
                "f_s + f_t + f_d = {} (expected 1)",
                self.f_s + self.f_t + self.f_d
            ));
        }
        match self.variant {
            Variant::Sdc | Variant::LruOnly | Variant::StaticOnly | Variant::Belady
                if self.f_t > 1e-9 =>
            {
                bad(format!(
                    "{} has no topic cache but f_t = {}",
                    self.variant, self.f_t
                ))
            }
            Variant::LruOnly | Variant::Belady if self.f_s > 1e-9 => bad(format!(
                "{} has no static cache but f_s = {}",
                self.variant, self.f_s
            )),
            Variant::StaticOnly if self.f_d > 1e-9 => bad(format!(
                "static has no dynamic cache but f_d = {}",
                self.f_d
            )),
            Variant::TSdcVar if self.f_t < 1.0 - 1e-9 => {
                bad(format!("t_sdc_var uses f_t = 1, got {}", self.f_t))
            }
            _ => Ok(()),
        }
    }

    /// `|S| = ⌊f_s·N⌉`, `|T| = ⌊f_t·N⌉`, `|D| = N − |S| − |T|`.
    pub fn sizes(&self) -> Result<PartitionSizes> {
        self.validate()?;
        let n = self.total_entries;
        let s = round_nearest(self.f_s * n as f64);
        let t = round_nearest(self.f_t * n as f64);
        if s + t > n {
            return Err(Error::InvalidConfig(format!(
                "rounded static ({s}) and topic ({t}) sizes exceed N = {n}"
            )));
        }
        Ok(PartitionSizes {
            static_entries: s,
            topic_entries: t,
            dynamic_entries: n - s - t,
        })
    }
}

/// What a cache learns from the training period.
#[derive(Debug, Clone, Default)]
pub struct TrainingProfile {
    /// Training queries, most frequent first; frequency ties in ascending
    /// lexicographic order of the query string.
    pub ranking: Vec<QueryId>,
    /// Topic of every known query id.
    pub topic_of: Vec<Option<TopicId>>,
    /// Distinct classified queries per topic.
    pub popularity: BTreeMap<TopicId, u64>,
    /// Distinct training queries without a topic.
    pub no_topic_distinct: u64,
}

impl TrainingProfile {
    pub fn topic(&self, q: QueryId) -> Option<TopicId> {
        self.topic_of.get(q.index()).copied().flatten()
    }

    pub fn section_of(&self, q: QueryId) -> SectionKey {
        self.topic(q).map_or(SectionKey::NoTopic, SectionKey::Topic)
    }
}

/// Static and topic-section shapes of an STD-family cache.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub sizes: PartitionSizes,
    /// Entries per section (zero-size sections omitted).
    pub sections: BTreeMap<SectionKey, usize>,
    /// Static share of each section.
    pub section_static: BTreeMap<SectionKey, usize>,
}

impl Layout {
    pub fn total(&self) -> usize {
        self.sizes.static_entries
            + self.sections.values().sum::<usize>()
            + self.sizes.dynamic_entries
    }
}

/// Sizes every partition and section of `config`.
pub fn layout(config: &CacheConfig, profile: &TrainingProfile) -> Result<Layout> {
    let mut sizes = config.sizes()?;
    let allocation: Allocation<SectionKey> = match config.variant {
        Variant::StdLruFixed => {
            let keys: Vec<SectionKey> = profile
                .popularity
                .keys()
                .map(|&t| SectionKey::Topic(t))
                .collect();
            equal_allocation(&keys, sizes.topic_entries)
        }
        Variant::StdLruVar | Variant::StdSdcVarC1 | Variant::StdSdcVarC2 => {
            let pop = profile
                .popularity
                .iter()
                .map(|(&t, &q)| (SectionKey::Topic(t), q))
                .collect();
            allocate_topic_entries(&pop, sizes.topic_entries)
        }
        Variant::TSdcVar => {
            let mut pop: BTreeMap<SectionKey, u64> = profile
                .popularity
                .iter()
                .map(|(&t, &q)| (SectionKey::Topic(t), q))
                .collect();
            pop.insert(SectionKey::NoTopic, profile.no_topic_distinct);
            allocate_topic_entries(&pop, sizes.topic_entries)
        }
        _ => equal_allocation(&[], sizes.topic_entries),
    };

    let mut sections: BTreeMap<SectionKey, usize> = allocation
        .entries()
        .iter()
        .filter(|(_, &n)| n > 0)
        .map(|(&k, &n)| (k, n))
        .collect();
    let unallocated = allocation.unallocated();
    if unallocated > 0 {
        // Nothing to size sections by: the entries go to the unclassified path.
        if config.variant == Variant::TSdcVar {
            *sections.entry(SectionKey::NoTopic).or_insert(0) += unallocated;
        } else {
            sizes.dynamic_entries += unallocated;
            sizes.topic_entries -= unallocated;
        }
    }
    let section_static = sections
        .iter()
        .map(|(&k, &n)| {
            let s = if config.variant.uses_topic_static() {
                round_nearest(config.f_ts * n as f64).min(n)
            } else {
                0
            };
            (k, s)
        })
        .collect();
    Ok(Layout {
        sizes,
        sections,
        section_static,
    })
}

/// A constructed cache of any variant except Bélády, which needs the future
/// of the replayed stream (see [`BeladyCache`]).
#[derive(Debug, Clone, PartialEq)]
pub enum AnyCache {
    Lru(LruCache),
    Static(StaticSet),
    Sdc(SdcCache),
    Std(StdCache),
    Tsdc(TsdcCache),
}

impl QueryCache for AnyCache {
    fn process(&mut self, req: Request) -> LookupOutcome {
        match self {
            AnyCache::Lru(c) => c.process(req),
            AnyCache::Static(c) => c.process(req),
            AnyCache::Sdc(c) => c.process(req),
            AnyCache::Std(c) => c.process(req),
            AnyCache::Tsdc(c) => c.process(req),
        }
    }

    fn capacity(&self) -> usize {
        match self {
            AnyCache::Lru(c) => c.capacity(),
            AnyCache::Static(c) => c.capacity(),
            AnyCache::Sdc(c) => c.capacity(),
            AnyCache::Std(c) => c.capacity(),
            AnyCache::Tsdc(c) => c.capacity(),
        }
    }

    fn resident(&self) -> usize {
        match self {
            AnyCache::Lru(c) => c.resident(),
            AnyCache::Static(c) => c.resident(),
            AnyCache::Sdc(c) => c.resident(),
            AnyCache::Std(c) => c.resident(),
            AnyCache::Tsdc(c) => c.resident(),
        }
    }
}

/// Builds and statically populates the cache described by `config`.
pub fn build_cache(config: &CacheConfig, profile: &TrainingProfile) -> Result<AnyCache> {
    let lay = layout(config, profile)?;
    let sizes = lay.sizes;
    Ok(match config.variant {
        Variant::LruOnly => AnyCache::Lru(LruCache::new(sizes.dynamic_entries)),
        Variant::StaticOnly => AnyCache::Static(StaticSet::from_ranking(
            &profile.ranking,
            sizes.static_entries,
        )),
        Variant::Sdc => AnyCache::Sdc(SdcCache::new(
            StaticSet::from_ranking(&profile.ranking, sizes.static_entries),
            sizes.dynamic_entries,
        )),
        Variant::StdLruFixed | Variant::StdLruVar | Variant::StdSdcVarC1 | Variant::StdSdcVarC2 => {
            let plan = populate_std_statics(
                config.variant,
                profile,
                sizes.static_entries,
                &lay.section_static,
            );
            AnyCache::Std(StdCache::new(&lay, plan))
        }
        Variant::TSdcVar => {
            let plan = populate_std_statics(config.variant, profile, 0, &lay.section_static);
            AnyCache::Tsdc(TsdcCache::new(&lay, plan))
        }
        Variant::Belady => {
            return Err(Error::InvalidConfig(
                "belady needs the replayed stream; build it with BeladyCache".into(),
            ))
        }
    })
}
