use std::collections::{BTreeMap, HashMap};

use crate::{QueryId, TopicId};

/// One replayed request, as far as miss distances are concerned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEntry {
    pub query: QueryId,
    pub topic: Option<TopicId>,
    pub miss: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MissDistances {
    /// Mean gap between consecutive misses, for queries with at least two.
    pub per_query: BTreeMap<QueryId, f64>,
    /// Mean of the per-query means of each topic's queries.
    pub per_topic: BTreeMap<TopicId, f64>,
}

/// Streaming form of [`avg_miss_distance`].
#[derive(Debug, Clone, Default)]
pub struct MissDistanceAcc {
    /// Query -> (last miss position, gap sum, gap count, topic).
    state: HashMap<QueryId, (usize, u64, u64, Option<TopicId>)>,
}

impl MissDistanceAcc {
    pub fn record_miss(&mut self, pos: usize, query: QueryId, topic: Option<TopicId>) {
        match self.state.get_mut(&query) {
            Some(s) => {
                s.1 += (pos - s.0 - 1) as u64;
                s.2 += 1;
                s.0 = pos;
            }
            None => {
                self.state.insert(query, (pos, 0, 0, topic));
            }
        }
    }

    pub fn finish(self) -> MissDistances {
        let mut out = MissDistances::default();
        let mut topic_sums: BTreeMap<TopicId, (f64, u64)> = BTreeMap::new();
        for (q, (_, sum, count, topic)) in self.state {
            if count == 0 {
                continue;
            }
            let mean = sum as f64 / count as f64;
            out.per_query.insert(q, mean);
            if let Some(t) = topic {
                let e = topic_sums.entry(t).or_default();
                e.0 += mean;
                e.1 += 1;
            }
        }
        out.per_topic = topic_sums
            .into_iter()
            .map(|(t, (s, n))| (t, s / n as f64))
            .collect();
        out
    }

    /// Mean over all queries with at least two recorded misses.
    pub fn overall(&self) -> Option<f64> {
        let means: Vec<f64> = self
            .state
            .values()
            .filter(|s| s.2 > 0)
            .map(|s| s.1 as f64 / s.2 as f64)
            .collect();
        (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64)
    }
}

/// Number of requests between consecutive misses of the same query,
/// averaged per query and then per topic.
pub fn avg_miss_distance(trace: &[TraceEntry]) -> MissDistances {
    let mut acc = MissDistanceAcc::default();
    for (pos, e) in trace.iter().enumerate() {
        if e.miss {
            acc.record_miss(pos, e.query, e.topic);
        }
    }
    acc.finish()
}

/// Distance of each policy from the clairvoyant bound.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub belady: f64,
    pub best_sdc: f64,
    pub best_std: f64,
    pub gap_sdc: f64,
    pub gap_std: f64,
    pub gap_std_vs_sdc: f64,
    /// `(gap_sdc − gap_std) / gap_sdc`; undefined unless `gap_sdc > 0`.
    pub gap_reduction: Option<f64>,
}

impl GapReport {
    pub fn new(belady: f64, best_sdc: f64, best_std: f64) -> Self {
        let gap_sdc = belady - best_sdc;
        let gap_std = belady - best_std;
        GapReport {
            belady,
            best_sdc,
            best_std,
            gap_sdc,
            gap_std,
            gap_std_vs_sdc: best_std - best_sdc,
            gap_reduction: (gap_sdc > 0.0).then(|| (gap_sdc - gap_std) / gap_sdc),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(s: &str, misses: &[usize]) -> Vec<TraceEntry> {
        s.bytes()
            .enumerate()
            .map(|(i, b)| TraceEntry {
                query: QueryId(b as u32),
                topic: Some(TopicId((b % 2) as u32)),
                miss: misses.contains(&i),
            })
            .collect()
    }

    #[test]
    fn single_gap() {
        let d = avg_miss_distance(&trace("abcad", &[0, 3]));
        assert_eq!(d.per_query[&QueryId(b'a' as u32)], 2.0);
    }

    #[test]
    fn single_miss_excluded() {
        let d = avg_miss_distance(&trace("ab", &[0, 1]));
        assert!(d.per_query.is_empty() && d.per_topic.is_empty());
    }

    #[test]
    fn topic_mean_of_query_means() {
        // a (topic 1): gaps 0 and 6 -> 3; c (topic 1): gap 1 -> 1.
        let t = trace("aacbcbbba", &[0, 1, 2, 4, 6, 8]);
        let d = avg_miss_distance(&t);
        assert_eq!(d.per_query[&QueryId(b'a' as u32)], 3.0);
        assert_eq!(d.per_query[&QueryId(b'c' as u32)], 1.0);
        // b (topic 0): misses at 6 only.
        assert_eq!(d.per_topic[&TopicId(1)], 2.0);
        assert!(!d.per_topic.contains_key(&TopicId(0)));
    }

    #[test]
    fn gap_arithmetic() {
        let g = GapReport::new(43.67, 33.70, 37.34);
        assert!((g.gap_sdc - 9.97).abs() < 1e-9);
        assert!((g.gap_std - 6.33).abs() < 1e-9);
        assert!((g.gap_std_vs_sdc - 3.64).abs() < 1e-9);
        assert!((g.gap_reduction.unwrap() * 100.0 - 36.51).abs() < 0.01);
        assert_eq!(GapReport::new(0.3, 0.3, 0.2).gap_reduction, None);
    }
}
