use std::collections::BTreeMap;

use proptest::prelude::*;

use stdcache::caches::{build_cache, CacheConfig, QueryCache, Request, Variant};
use stdcache::querylog::{QueryStream, StreamOrigin};
use stdcache::simulator::{run_belady, run_simulation, AdmissionSetting, SimOptions, Workload};
use stdcache::topics::TopicMap;
use stdcache::TopicId;

fn stream(qs: &[u8], origin: StreamOrigin) -> QueryStream {
    let names: Vec<String> = qs.iter().map(|q| format!("q{q}")).collect();
    QueryStream::from_queries(names.iter().map(String::as_str), origin)
}

/// Queries `q0..q{n}`; those with a topic entry below 3 are classified.
fn workload(train: &[u8], test: &[u8], topics: &[u8]) -> Workload {
    let map: BTreeMap<String, TopicId> = topics
        .iter()
        .enumerate()
        .filter(|(_, &t)| t < 3)
        .map(|(q, &t)| (format!("q{q}"), TopicId(t as u32)))
        .collect();
    Workload::new(
        &stream(train, StreamOrigin::Training),
        &stream(test, StreamOrigin::Test),
        &TopicMap::from_assignments(map),
    )
}

fn config(variant: Variant, n: usize, f_s: f64, share: f64, f_ts: f64) -> CacheConfig {
    match variant {
        Variant::LruOnly => CacheConfig::lru(n),
        Variant::StaticOnly => CacheConfig::static_only(n),
        Variant::Belady => CacheConfig::belady(n),
        Variant::Sdc => CacheConfig::sdc(n, f_s),
        Variant::TSdcVar => CacheConfig::tsdc(n, f_ts),
        v => CacheConfig::std(v, n, f_s, share * (1.0 - f_s), f_ts),
    }
}

fn variant() -> impl Strategy<Value = Variant> {
    prop::sample::select(Variant::ALL.to_vec())
}

fn tenth() -> impl Strategy<Value = f64> {
    (0u32..=10).prop_map(|i| i as f64 / 10.0)
}

fn admission() -> impl Strategy<Value = AdmissionSetting> {
    prop::sample::select(vec![
        AdmissionSetting::None,
        AdmissionSetting::Singleton,
        AdmissionSetting::Features { x: 2, y: 5, z: 20 },
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn counts_are_conserved(
        train in prop::collection::vec(0u8..30, 0..120),
        test in prop::collection::vec(0u8..30, 1..120),
        topics in prop::collection::vec(0u8..5, 30),
        v in variant(), n in 0usize..24, f_s in tenth(), share in tenth(), f_ts in tenth(),
        adm in admission(), warmup in any::<bool>(),
    ) {
        let w = workload(&train, &test, &topics);
        let cfg = config(v, n, f_s, share, f_ts);
        prop_assume!(cfg.sizes().is_ok());
        let opts = SimOptions { warmup, keep_outcomes: true, ..SimOptions::default() };
        let r = run_simulation(&cfg, &w, adm, &opts).unwrap();
        prop_assert_eq!(r.hits + r.misses, r.test_events as u64);
        prop_assert_eq!(r.test_events, test.len());
        prop_assert_eq!(r.hits_static + r.hits_topic + r.hits_dynamic, r.hits);
        prop_assert!((r.hit_rate() - r.hits as f64 / test.len() as f64).abs() < 1e-12);
        // Identical inputs, identical outcome sequences.
        let again = run_simulation(&cfg, &w, adm, &opts).unwrap();
        prop_assert_eq!(r.outcomes, again.outcomes);
    }

    #[test]
    fn resident_never_exceeds_capacity(
        train in prop::collection::vec(0u8..30, 0..120),
        test in prop::collection::vec(0u8..30, 1..120),
        topics in prop::collection::vec(0u8..5, 30),
        v in variant(), n in 0usize..24, f_s in tenth(), share in tenth(), f_ts in tenth(),
    ) {
        prop_assume!(v != Variant::Belady);
        let w = workload(&train, &test, &topics);
        let cfg = config(v, n, f_s, share, f_ts);
        prop_assume!(cfg.sizes().is_ok());
        let mut cache = build_cache(&cfg, w.profile()).unwrap();
        prop_assert_eq!(cache.capacity(), n);
        for &q in w.train().iter().chain(w.test()) {
            cache.process(Request { query: q, topic: w.topic(q), admit: true });
            prop_assert!(cache.resident() <= cache.capacity());
        }
    }

    #[test]
    fn static_and_bound_monotone_in_size(
        train in prop::collection::vec(0u8..30, 0..120),
        test in prop::collection::vec(0u8..30, 1..120),
        n in 0usize..20,
    ) {
        let w = workload(&train, &test, &[]);
        let opts = SimOptions::default();
        let adm = AdmissionSetting::None;
        let s0 = run_simulation(&CacheConfig::static_only(n), &w, adm, &opts).unwrap();
        let s1 = run_simulation(&CacheConfig::static_only(n + 1), &w, adm, &opts).unwrap();
        prop_assert!(s0.hits <= s1.hits);
        let b0 = run_belady(n, &w, adm, &opts).unwrap();
        let b1 = run_belady(n + 1, &w, adm, &opts).unwrap();
        prop_assert!(b0.hits <= b1.hits);
    }

    #[test]
    fn bound_dominates_every_policy(
        train in prop::collection::vec(0u8..30, 0..120),
        test in prop::collection::vec(0u8..30, 1..120),
        topics in prop::collection::vec(0u8..5, 30),
        v in variant(), n in 0usize..24, f_s in tenth(), share in tenth(), f_ts in tenth(),
        adm in admission(), warmup in any::<bool>(),
    ) {
        let w = workload(&train, &test, &topics);
        let cfg = config(v, n, f_s, share, f_ts);
        prop_assume!(cfg.sizes().is_ok());
        let opts = SimOptions { warmup, ..SimOptions::default() };
        let point = run_simulation(&cfg, &w, adm, &opts).unwrap();
        let bound = run_belady(n, &w, adm, &opts).unwrap();
        prop_assert!(bound.hits >= point.hits, "{} vs {}", bound.hits, point.hits);
    }
}
