//! Trace replay, metrics and parameter sweeps.

mod csv;
mod metrics;
mod sweep;

pub use csv::{
    gap_csv_header, gap_csv_row, miss_distance_csv_header, miss_distance_csv_rows,
    results_csv_header, results_csv_row, CsvOutputs,
};
pub use metrics::{avg_miss_distance, GapReport, MissDistanceAcc, MissDistances, TraceEntry};
pub use sweep::{run_sweep, SweepGap, SweepGrid, SweepPoint, SweepResult};

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::admission::AdmissionPolicy;
use crate::caches::{
    build_cache, build_future_index, BeladyCache, BeladyMode, CacheConfig, FutureIndex, Layer,
    LookupOutcome, QueryCache, Request, TrainingProfile, Variant, NEVER,
};
use crate::querylog::QueryStream;
use crate::topics::TopicMap;
use crate::{Error, QueryId, Result, TopicId};

/// Training and test streams interned to dense ids, with everything the
/// caches learn from training.
#[derive(Debug, Clone)]
pub struct Workload {
    names: Vec<String>,
    train: Vec<QueryId>,
    test: Vec<QueryId>,
    topic_of: Vec<Option<TopicId>>,
    train_freq: Vec<u64>,
    profile: TrainingProfile,
    future: FutureIndex,
}

impl Workload {
    /// Topics come from `topics`; topics stored on the events are ignored.
    /// Topic popularity is taken from the map, and the unclassified count
    /// from the distinct training queries the map does not cover.
    pub fn new(train: &QueryStream, test: &QueryStream, topics: &TopicMap) -> Self {
        let mut ids: HashMap<String, QueryId> = HashMap::new();
        let mut names: Vec<String> = Vec::new();
        let mut intern = |q: &str| -> QueryId {
            if let Some(&id) = ids.get(q) {
                return id;
            }
            let id = QueryId(names.len() as u32);
            names.push(q.to_string());
            ids.insert(q.to_string(), id);
            id
        };
        let train: Vec<QueryId> = train.queries().map(&mut intern).collect();
        let test: Vec<QueryId> = test.queries().map(&mut intern).collect();

        let topic_of: Vec<Option<TopicId>> = names.iter().map(|q| topics.get(q)).collect();
        let mut train_freq = vec![0u64; names.len()];
        for q in &train {
            train_freq[q.index()] += 1;
        }
        let mut ranking: Vec<QueryId> = (0..names.len() as u32)
            .map(QueryId)
            .filter(|q| train_freq[q.index()] > 0)
            .collect();
        ranking.sort_by(|a, b| {
            train_freq[b.index()]
                .cmp(&train_freq[a.index()])
                .then_with(|| names[a.index()].cmp(&names[b.index()]))
        });
        let no_topic_distinct = ranking
            .iter()
            .filter(|q| topic_of[q.index()].is_none())
            .count() as u64;
        let profile = TrainingProfile {
            ranking,
            topic_of: topic_of.clone(),
            popularity: topics.popularity().clone(),
            no_topic_distinct,
        };
        let future = build_future_index(&test);
        Workload {
            names,
            train,
            test,
            topic_of,
            train_freq,
            profile,
            future,
        }
    }

    pub fn name(&self, q: QueryId) -> &str {
        &self.names[q.index()]
    }

    pub fn train(&self) -> &[QueryId] {
        &self.train
    }

    pub fn test(&self) -> &[QueryId] {
        &self.test
    }

    pub fn topic(&self, q: QueryId) -> Option<TopicId> {
        self.topic_of[q.index()]
    }

    pub fn train_freq(&self, q: QueryId) -> u64 {
        self.train_freq[q.index()]
    }

    pub fn profile(&self) -> &TrainingProfile {
        &self.profile
    }

    pub fn distinct_queries(&self) -> usize {
        self.names.len()
    }

    /// Admission decision for every query id.
    pub fn admission_mask(&self, setting: &AdmissionSetting, warmup: bool) -> Vec<bool> {
        let policy = match *setting {
            AdmissionSetting::None => return vec![true; self.names.len()],
            AdmissionSetting::Features { x, y, z } => AdmissionPolicy::FeatureThreshold { x, y, z },
            AdmissionSetting::Singleton => {
                let mut count = vec![0u32; self.names.len()];
                let replayed = if warmup { &self.train[..] } else { &[][..] };
                for q in replayed.iter().chain(&self.test) {
                    count[q.index()] += 1;
                }
                return count.into_iter().map(|c| c >= 2).collect();
            }
        };
        (0..self.names.len())
            .map(|i| policy.admits(&self.names[i], self.train_freq[i]))
            .collect()
    }

    fn request(&self, q: QueryId, mask: &[bool]) -> Request {
        Request {
            query: q,
            topic: self.topic_of[q.index()],
            admit: mask[q.index()],
        }
    }
}

/// Admission policy selection, as named in configs and CSVs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AdmissionSetting {
    #[default]
    None,
    Features {
        x: u64,
        y: usize,
        z: usize,
    },
    /// Queries seen once in the replayed stream are never stored.
    Singleton,
}

impl AdmissionSetting {
    pub fn features_default() -> Self {
        AdmissionSetting::Features {
            x: AdmissionPolicy::DEFAULT_X,
            y: AdmissionPolicy::DEFAULT_Y,
            z: AdmissionPolicy::DEFAULT_Z,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let AdmissionSetting::Features { x, y, z } = *self {
            AdmissionPolicy::features(x, y, z)?;
        }
        Ok(())
    }
}

impl fmt::Display for AdmissionSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdmissionSetting::None => f.write_str("none"),
            AdmissionSetting::Features { x, y, z } => write!(f, "features:{x}:{y}:{z}"),
            AdmissionSetting::Singleton => f.write_str("singleton"),
        }
    }
}

impl FromStr for AdmissionSetting {
    type Err = Error;

    /// `none`, `singleton`, `features` or `features:X:Y:Z`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param("admission", format!("unknown admission setting `{s}`"));
        let mut parts = s.trim().split(':');
        let setting = match parts.next().unwrap_or("") {
            "none" => AdmissionSetting::None,
            "singleton" => AdmissionSetting::Singleton,
            "features" => {
                let rest: Vec<&str> = parts.by_ref().collect();
                match rest.as_slice() {
                    [] => AdmissionSetting::features_default(),
                    [x, y, z] => AdmissionSetting::Features {
                        x: x.parse().map_err(|_| bad())?,
                        y: y.parse().map_err(|_| bad())?,
                        z: z.parse().map_err(|_| bad())?,
                    },
                    _ => return Err(bad()),
                }
            }
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        setting.validate()?;
        Ok(setting)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    /// Replay training through the mutable sections before measuring.
    pub warmup: bool,
    /// Keep the per-event outcome sequence in the report.
    pub keep_outcomes: bool,
    /// Fill static sections only with queries the admission policy accepts.
    pub admit_static: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            warmup: true,
            keep_outcomes: false,
            admit_static: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub config: CacheConfig,
    pub admission: AdmissionSetting,
    pub warmup_events: usize,
    pub test_events: usize,
    pub hits: u64,
    pub misses: u64,
    pub hits_static: u64,
    pub hits_topic: u64,
    pub hits_dynamic: u64,
    pub no_topic_routed: u64,
    pub per_topic_miss_distance: BTreeMap<TopicId, f64>,
    /// Mean miss distance of misses served by the dynamic section.
    pub dynamic_miss_distance: Option<f64>,
    pub outcomes: Option<Vec<LookupOutcome>>,
}

impl SimulationReport {
    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn hit_rate(&self) -> f64 {
        if self.test_events == 0 {
            0.0
        } else {
            self.hits as f64 / self.test_events as f64
        }
    }
}

struct Recorder {
    report: SimulationReport,
    all: MissDistanceAcc,
    dynamic: MissDistanceAcc,
}

impl Recorder {
    fn new(
        config: CacheConfig,
        admission: AdmissionSetting,
        warmup_events: usize,
        opts: &SimOptions,
    ) -> Self {
        Recorder {
            report: SimulationReport {
                config,
                admission,
                warmup_events,
                test_events: 0,
                hits: 0,
                misses: 0,
                hits_static: 0,
                hits_topic: 0,
                hits_dynamic: 0,
                no_topic_routed: 0,
                per_topic_miss_distance: BTreeMap::new(),
                dynamic_miss_distance: None,
                outcomes: opts.keep_outcomes.then(Vec::new),
            },
            all: MissDistanceAcc::default(),
            dynamic: MissDistanceAcc::default(),
        }
    }

    fn record(&mut self, pos: usize, req: &Request, out: LookupOutcome) {
        let r = &mut self.report;
        r.test_events += 1;
        if out.rerouted {
            r.no_topic_routed += 1;
        }
        if out.hit {
            r.hits += 1;
            match out.served_by {
                Layer::Static => r.hits_static += 1,
                Layer::Topic(_) => r.hits_topic += 1,
                Layer::Dynamic => r.hits_dynamic += 1,
            }
        } else {
            r.misses += 1;
            self.all.record_miss(pos, req.query, req.topic);
            if out.served_by == Layer::Dynamic {
                self.dynamic.record_miss(pos, req.query, req.topic);
            }
        }
        if let Some(o) = r.outcomes.as_mut() {
            o.push(out);
        }
    }

    fn finish(self) -> SimulationReport {
        let mut report = self.report;
        report.dynamic_miss_distance = self.dynamic.overall();
        report.per_topic_miss_distance = self.all.finish().per_topic;
        report
    }
}

fn replay(
    cache: &mut impl QueryCache,
    workload: &Workload,
    mask: &[bool],
    config: CacheConfig,
    admission: AdmissionSetting,
    opts: &SimOptions,
) -> SimulationReport {
    let warmup_events = if opts.warmup {
        for &q in &workload.train {
            cache.process(workload.request(q, mask));
        }
        workload.train.len()
    } else {
        0
    };
    let mut rec = Recorder::new(config, admission, warmup_events, opts);
    for (pos, &q) in workload.test.iter().enumerate() {
        let req = workload.request(q, mask);
        let out = cache.process(req);
        rec.record(pos, &req, out);
    }
    rec.finish()
}

/// Builds the cache (static contents from training frequencies), warms it on
/// the training stream if enabled, and measures the test stream.
pub fn run_simulation(
    config: &CacheConfig,
    workload: &Workload,
    admission: AdmissionSetting,
    opts: &SimOptions,
) -> Result<SimulationReport> {
    let mask = workload.admission_mask(&admission, opts.warmup);
    simulate_with_mask(config, workload, admission, &mask, opts)
}

pub(crate) fn simulate_with_mask(
    config: &CacheConfig,
    workload: &Workload,
    admission: AdmissionSetting,
    mask: &[bool],
    opts: &SimOptions,
) -> Result<SimulationReport> {
    if workload.test.is_empty() {
        return Err(Error::EmptyStream);
    }
    if config.variant == Variant::Belady {
        return belady_with_mask(config.total_entries, workload, admission, mask, opts);
    }
    let mut cache = if opts.admit_static && admission != AdmissionSetting::None {
        let mut profile = workload.profile.clone();
        profile.ranking.retain(|q| mask[q.index()]);
        build_cache(config, &profile)?
    } else {
        build_cache(config, &workload.profile)?
    };
    Ok(replay(&mut cache, workload, mask, *config, admission, opts))
}

/// Clairvoyant bound over the test stream with `n` entries.
///
/// The cache may decline to store a miss that is reused later than every
/// resident. It starts holding the `n` training queries that are requested
/// first in the test stream, the best start any cache filled from training
/// can have; static sections are filled from training even without warm-up,
/// so the preload does not depend on it. Singleton admission still restricts
/// insertions, which never lowers the optimum. Feature admission is ignored:
/// statics keep non-admittable queries resident, so restricting the
/// clairvoyant cache would no longer bound the other policies.
pub fn run_belady(
    n: usize,
    workload: &Workload,
    admission: AdmissionSetting,
    opts: &SimOptions,
) -> Result<SimulationReport> {
    let mask = workload.admission_mask(&admission, opts.warmup);
    belady_with_mask(n, workload, admission, &mask, opts)
}

pub(crate) fn belady_with_mask(
    n: usize,
    workload: &Workload,
    admission: AdmissionSetting,
    mask: &[bool],
    opts: &SimOptions,
) -> Result<SimulationReport> {
    if workload.test.is_empty() {
        return Err(Error::EmptyStream);
    }
    let open;
    let mask = match admission {
        AdmissionSetting::Features { .. } => {
            open = vec![true; mask.len()];
            &open[..]
        }
        _ => mask,
    };
    let mut seen: Vec<(usize, QueryId)> = workload
        .profile
        .ranking
        .iter()
        .map(|&q| (workload.future.first_use(q), q))
        .filter(|&(first, _)| first != NEVER)
        .collect();
    seen.sort_unstable();
    let mut cache = BeladyCache::new(n, &workload.future, BeladyMode::Bypass)
        .with_preload(seen.into_iter().map(|(_, q)| q));
    let config = CacheConfig::belady(n);
    let mut rec = Recorder::new(
        config,
        admission,
        if opts.warmup { workload.train.len() } else { 0 },
        opts,
    );
    for (pos, &q) in workload.test.iter().enumerate() {
        let req = workload.request(q, mask);
        let out = cache.process(req);
        rec.record(pos, &req, out);
    }
    Ok(rec.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::querylog::StreamOrigin;

    fn stream(s: &str) -> QueryStream {
        let qs: Vec<String> = s.chars().map(|c| c.to_string()).collect();
        QueryStream::from_queries(qs.iter().map(String::as_str), StreamOrigin::Test)
    }

    fn toy() -> Workload {
        let map = TopicMap::from_assignments(BTreeMap::from([("a".to_string(), TopicId(0))]));
        Workload::new(&stream(""), &stream("abcadeafg"), &map)
    }

    #[test]
    fn toy_lru_and_std() {
        let w = toy();
        let opts = SimOptions::default();
        let lru = run_simulation(&CacheConfig::lru(2), &w, AdmissionSetting::None, &opts).unwrap();
        assert_eq!(lru.hits, 0);
        let std = run_simulation(
            &CacheConfig::std(Variant::StdLruVar, 2, 0.0, 0.5, 0.0),
            &w,
            AdmissionSetting::None,
            &opts,
        )
        .unwrap();
        assert_eq!((std.hits, std.test_events, std.hits_topic), (2, 9, 2));
        let b = run_belady(2, &w, AdmissionSetting::None, &opts).unwrap();
        assert_eq!(b.hits, 2);
    }

    #[test]
    fn empty_test_stream_is_an_error() {
        let w = Workload::new(&stream("ab"), &stream(""), &TopicMap::default());
        assert!(matches!(
            run_simulation(
                &CacheConfig::lru(2),
                &w,
                AdmissionSetting::None,
                &SimOptions::default()
            ),
            Err(Error::EmptyStream)
        ));
    }

    #[test]
    fn conservation() {
        let w = Workload::new(
            &stream("abcabcddab"),
            &stream("abxxcadbaa"),
            &TopicMap::default(),
        );
        let r = run_simulation(
            &CacheConfig::sdc(3, 0.34),
            &w,
            AdmissionSetting::None,
            &SimOptions::default(),
        )
        .unwrap();
        assert_eq!(r.hits + r.misses, r.test_events as u64);
        assert_eq!(r.hits_static + r.hits_topic + r.hits_dynamic, r.hits);
    }

    #[test]
    fn belady_compulsory_only() {
        let w = Workload::new(&stream(""), &stream("abcabcaab"), &TopicMap::default());
        let b = run_belady(3, &w, AdmissionSetting::None, &SimOptions::default()).unwrap();
        assert_eq!(b.misses, 3);
    }

    #[test]
    fn belady_with_oracle_on_distinct_stream() {
        let w = Workload::new(&stream(""), &stream("abcdef"), &TopicMap::default());
        let b = run_belady(
            2,
            &w,
            AdmissionSetting::Singleton,
            &SimOptions {
                keep_outcomes: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(b.hits, 0);
        assert!(b.outcomes.unwrap().iter().all(|o| !o.admitted));
    }

    #[test]
    fn admission_labels_round_trip() {
        for s in [
            AdmissionSetting::None,
            AdmissionSetting::Singleton,
            AdmissionSetting::features_default(),
        ] {
            assert_eq!(s.to_string().parse::<AdmissionSetting>().unwrap(), s);
        }
        assert_eq!(
            "features".parse::<AdmissionSetting>().unwrap(),
            AdmissionSetting::features_default()
        );
        assert!("features:1:0:3".parse::<AdmissionSetting>().is_err());
        assert!("lottery".parse::<AdmissionSetting>().is_err());
    }

    #[test]
    fn admit_static_filters_population() {
        let long = "a rather long query with six words";
        let train: Vec<&str> = [long; 5].into_iter().chain(["b"; 3]).collect();
        let t = QueryStream::from_queries(train, StreamOrigin::Training);
        let s = QueryStream::from_queries([long, "b"], StreamOrigin::Test);
        let w = Workload::new(&t, &s, &TopicMap::default());
        let cfg = CacheConfig::static_only(1);
        let adm = AdmissionSetting::features_default();
        let hits = |admit_static| {
            let opts = SimOptions {
                keep_outcomes: true,
                admit_static,
                ..SimOptions::default()
            };
            let r = run_simulation(&cfg, &w, adm, &opts).unwrap();
            r.outcomes
                .unwrap()
                .iter()
                .map(|o| o.hit)
                .collect::<Vec<_>>()
        };
        // The most frequent query has too many terms to be admitted.
        assert_eq!(hits(false), [true, false]);
        assert_eq!(hits(true), [false, true]);
    }

    #[test]
    fn singleton_mask_counts_warmup() {
        let w = Workload::new(&stream("a"), &stream("ab"), &TopicMap::default());
        let with = w.admission_mask(&AdmissionSetting::Singleton, true);
        let without = w.admission_mask(&AdmissionSetting::Singleton, false);
        let a = QueryId(0);
        assert!(with[a.index()] && !without[a.index()]);
    }
}
