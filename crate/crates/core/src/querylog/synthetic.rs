//! Seeded synthetic query logs with Zipf popularity and planted topics.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{QueryEvent, QueryStream, StreamOrigin};
use crate::{Error, Result, TopicId};

/// Temporal shape of topic traffic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BurstProfile {
    /// Every event is an independent draw from the global Zipf law.
    Uniform,
    /// Time is cut into windows of `window` events; topics take turns being
    /// hot in round-robin order, and the hot topic's traffic weight is
    /// multiplied by `boost`.
    Bursty { window: usize, boost: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub n_queries: usize,
    pub vocab_size: usize,
    pub zipf_exponent: f64,
    pub n_topics: usize,
    pub burst: BurstProfile,
    /// Share of events that are one-off queries with no click and no topic.
    pub noise_fraction: f64,
    pub seed: u64,
}

impl SyntheticParams {
    fn validate(&self) -> Result<()> {
        if !(self.zipf_exponent > 0.0) {
            return Err(Error::param("zipf_exponent", "must be positive"));
        }
        if self.n_queries == 0 || self.vocab_size == 0 || self.n_topics == 0 {
            return Err(Error::param("synthetic", "counts must be positive"));
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return Err(Error::param("noise_fraction", "must be in [0, 1)"));
        }
        if let BurstProfile::Bursty { window, boost } = self.burst {
            if window == 0 || !(boost > 0.0) {
                return Err(Error::param("burst", "window and boost must be positive"));
            }
        }
        Ok(())
    }

    /// Planted topic of each popularity rank (index 0 is the most popular query).
    fn planted_topics(&self) -> Vec<u32> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x7091_c5a1_d3e2_f00d);
        (0..self.vocab_size)
            .map(|_| rng.gen_range(0..self.n_topics as u32))
            .collect()
    }
}

/// Query string of popularity rank `rank` (0-based).
pub fn synthetic_query(rank: usize) -> String {
    format!("q{rank}")
}

fn synthetic_url(rank: usize) -> String {
    format!("http://synthetic.example/{rank}")
}

fn sample_cdf(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total = *cdf.last().expect("non-empty cdf");
    let x = rng.gen::<f64>() * total;
    cdf.partition_point(|&c| c <= x).min(cdf.len() - 1)
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// Generates a time-ordered stream of `n_queries` events, one second apart.
///
/// Zipf events are clicked (the URL identifies the query) and carry their
/// planted topic in [`QueryEvent::topic`]. Noise events are distinct
/// queries `n{i}` without click or topic.
pub fn generate_synthetic_log(params: &SyntheticParams) -> Result<QueryStream> {
    params.validate()?;
    let planted = params.planted_topics();
    let weights: Vec<f64> = (0..params.vocab_size)
        .map(|r| ((r + 1) as f64).powf(-params.zipf_exponent))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x5eed_0000_0000_0015);
    let ranks: Vec<usize> = match params.burst {
        BurstProfile::Uniform => {
            let cdf = cumulative(weights.iter().copied());
            (0..params.n_queries)
                .map(|_| sample_cdf(&cdf, &mut rng))
                .collect()
        }
        BurstProfile::Bursty { window, boost } => {
            let k = params.n_topics;
            let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
            for (r, &t) in planted.iter().enumerate() {
                members[t as usize].push(r);
            }
            let member_cdfs: Vec<Vec<f64>> = members
                .iter()
                .map(|m| cumulative(m.iter().map(|&r| weights[r])))
                .collect();
            let mass: Vec<f64> = member_cdfs
                .iter()
                .map(|c| c.last().copied().unwrap_or(0.0))
                .collect();
            (0..params.n_queries)
                .map(|i| {
                    let hot = (i / window) % k;
                    let topic_cdf = cumulative(mass.iter().enumerate().map(|(t, &m)| {
                        if t == hot {
                            m * boost
                        } else {
                            m
                        }
                    }));
                    let t = sample_cdf(&topic_cdf, &mut rng);
                    members[t][sample_cdf(&member_cdfs[t], &mut rng)]
                })
                .collect()
        }
    };

    let events = ranks
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let timestamp = 1_000_000 + i as u64;
            if params.noise_fraction > 0.0 && noise_rng.gen::<f64>() < params.noise_fraction {
                return QueryEvent::new(format!("n{i}"), timestamp);
            }
            QueryEvent {
                query: synthetic_query(r),
                timestamp,
                click_url: Some(synthetic_url(r)),
                topic: Some(TopicId(planted[r])),
            }
        })
        .collect();
    Ok(QueryStream::new(events, StreamOrigin::Full))
}

/// Clicked-page text for every synthetic query: `doc_len` words, 80% drawn
/// from the planted topic's private word list and 20% from a shared list.
pub fn synthetic_documents(
    params: &SyntheticParams,
    doc_len: usize,
) -> Result<BTreeMap<String, String>> {
    params.validate()?;
    const TOPIC_WORDS: usize = 40;
    const SHARED_WORDS: usize = 20;
    let planted = params.planted_topics();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x00d0_c5ee_d000_0001);
    let mut docs = BTreeMap::new();
    for (r, &t) in planted.iter().enumerate() {
        let words: Vec<String> = (0..doc_len)
            .map(|_| {
                if rng.gen::<f64>() < 0.8 {
                    format!("topic{t}word{}", rng.gen_range(0..TOPIC_WORDS))
                } else {
                    format!("shared{}", rng.gen_range(0..SHARED_WORDS))
                }
            })
            .collect();
        docs.insert(synthetic_url(r), words.join(" "));
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn params(n: usize, vocab: usize, s: f64, k: usize, burst: BurstProfile) -> SyntheticParams {
        SyntheticParams {
            n_queries: n,
            vocab_size: vocab,
            zipf_exponent: s,
            n_topics: k,
            burst,
            noise_fraction: 0.0,
            seed: 42,
        }
    }

    #[test]
    fn noise_events_are_one_off_and_unlabelled() {
        let p = SyntheticParams {
            noise_fraction: 0.3,
            ..params(20_000, 500, 1.0, 4, BurstProfile::Uniform)
        };
        let s = generate_synthetic_log(&p).unwrap();
        let noise: Vec<&QueryEvent> = s
            .events()
            .iter()
            .filter(|e| e.query.starts_with('n'))
            .collect();
        let share = noise.len() as f64 / s.len() as f64;
        assert!((share - 0.3).abs() < 0.02, "{share}");
        assert!(noise
            .iter()
            .all(|e| e.topic.is_none() && e.click_url.is_none()));
        let distinct: std::collections::HashSet<&str> =
            noise.iter().map(|e| e.query.as_str()).collect();
        assert_eq!(distinct.len(), noise.len());
        let bad = SyntheticParams {
            noise_fraction: 1.0,
            ..p
        };
        assert!(generate_synthetic_log(&bad).is_err());
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let p = params(1000, 100, 1.0, 5, BurstProfile::Uniform);
        assert_eq!(
            generate_synthetic_log(&p).unwrap(),
            generate_synthetic_log(&p).unwrap()
        );
        let b = params(
            1000,
            100,
            1.0,
            5,
            BurstProfile::Bursty {
                window: 50,
                boost: 4.0,
            },
        );
        assert_eq!(
            generate_synthetic_log(&b).unwrap(),
            generate_synthetic_log(&b).unwrap()
        );
    }

    #[test]
    fn single_topic_plants_one_topic() {
        let p = params(
            500,
            50,
            1.0,
            1,
            BurstProfile::Bursty {
                window: 10,
                boost: 3.0,
            },
        );
        let s = generate_synthetic_log(&p).unwrap();
        assert!(s.events().iter().all(|e| e.topic == Some(TopicId(0))));
    }

    #[test]
    fn rejects_non_positive_exponent() {
        assert!(generate_synthetic_log(&params(10, 10, 0.0, 1, BurstProfile::Uniform)).is_err());
        assert!(generate_synthetic_log(&params(10, 10, -1.0, 1, BurstProfile::Uniform)).is_err());
    }

    /// Least-squares slope of log(frequency) against log(rank), over ranks
    /// whose count is large enough for the estimate to be stable.
    fn log_log_slope(stream: &QueryStream) -> f64 {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for q in stream.queries() {
            *counts.entry(q).or_default() += 1;
        }
        let mut freqs: Vec<usize> = counts.into_values().collect();
        freqs.sort_unstable_by(|a, b| b.cmp(a));
        let pts: Vec<(f64, f64)> = freqs
            .iter()
            .enumerate()
            .take_while(|(_, &f)| f >= 10)
            .map(|(i, &f)| (((i + 1) as f64).ln(), (f as f64).ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn zipf_slope_close_to_exponent() {
        let p = params(100_000, 10_000, 1.0, 5, BurstProfile::Uniform);
        let slope = log_log_slope(&generate_synthetic_log(&p).unwrap());
        assert!((slope + 1.0).abs() <= 0.15, "slope {slope}");
    }

    #[test]
    fn bursty_profile_keeps_power_law() {
        let p = params(
            100_000,
            10_000,
            1.0,
            5,
            BurstProfile::Bursty {
                window: 500,
                boost: 5.0,
            },
        );
        let slope = log_log_slope(&generate_synthetic_log(&p).unwrap());
        assert!((slope + 1.0).abs() <= 0.15, "slope {slope}");
    }

    #[test]
    fn documents_cover_every_query() {
        let p = params(100, 30, 1.0, 3, BurstProfile::Uniform);
        let docs = synthetic_documents(&p, 25).unwrap();
        assert_eq!(docs.len(), 30);
        let s = generate_synthetic_log(&p).unwrap();
        for e in s.events() {
            let text = &docs[e.click_url.as_ref().unwrap()];
            assert_eq!(text.split(' ').count(), 25);
            let t = e.topic.unwrap().0;
            assert!(text.contains(&format!("topic{t}word")));
        }
    }
}
