use std::collections::BTreeMap;

use crate::TopicId;

/// Number of topic-cache entries given to each section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation<K: Ord> {
    entries: BTreeMap<K, usize>,
    topic_cache_size: usize,
}

pub type TopicAllocation = Allocation<TopicId>;

impl<K: Ord + Copy> Allocation<K> {
    pub fn entries(&self) -> &BTreeMap<K, usize> {
        &self.entries
    }

    pub fn get(&self, key: K) -> usize {
        self.entries.get(&key).copied().unwrap_or(0)
    }

    pub fn topic_cache_size(&self) -> usize {
        self.topic_cache_size
    }

    pub fn allocated(&self) -> usize {
        self.entries.values().sum()
    }

    /// Entries left over when no section could be sized (no classified
    /// queries at all). Zero otherwise.
    pub fn unallocated(&self) -> usize {
        self.topic_cache_size - self.allocated()
    }
}

/// Allocates `size` entries proportionally to popularity, rounding each
/// share `size * q_t / q` to the nearest integer (exact halves to even), then
/// correcting so the entries sum to `size` exactly.
///
/// The correction adds one entry at a time to sections with the largest
/// rounding shortfall, or removes one from sections rounded up the most; ties
/// go to the smaller key. When `q` is zero every section gets zero entries.
pub fn allocate_topic_entries<K: Ord + Copy>(
    popularity: &BTreeMap<K, u64>,
    size: usize,
) -> Allocation<K> {
    let q: u128 = popularity.values().map(|&v| v as u128).sum();
    if q == 0 {
        return Allocation {
            entries: popularity.keys().map(|&k| (k, 0)).collect(),
            topic_cache_size: size,
        };
    }

    // Shares are the rationals num/q; all arithmetic stays exact.
    let mut rows: Vec<(K, u128, u128)> = popularity
        .iter()
        .map(|(&k, &qt)| {
            let num = size as u128 * qt as u128;
            (k, num, round_half_even(num, q))
        })
        .collect();

    let mut total: u128 = rows.iter().map(|r| r.2).sum();
    let target = size as u128;
    // Residual share - rounded, scaled by q.
    let residual = |r: &(K, u128, u128)| r.1 as i128 - (r.2 * q) as i128;
    if total < target {
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by(|&a, &b| residual(&rows[b]).cmp(&residual(&rows[a])));
        for &i in order.iter().cycle() {
            if total == target {
                break;
            }
            rows[i].2 += 1;
            total += 1;
        }
    } else if total > target {
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by(|&a, &b| residual(&rows[a]).cmp(&residual(&rows[b])));
        while total > target {
            for &i in &order {
                if total == target {
                    break;
                }
                if rows[i].2 > 0 {
                    rows[i].2 -= 1;
                    total -= 1;
                }
            }
        }
    }

    Allocation {
        entries: rows.into_iter().map(|(k, _, n)| (k, n as usize)).collect(),
        topic_cache_size: size,
    }
}

fn round_half_even(num: u128, den: u128) -> u128 {
    let floor = num / den;
    let rem = num % den;
    match (2 * rem).cmp(&den) {
        std::cmp::Ordering::Greater => floor + 1,
        std::cmp::Ordering::Less => floor,
        std::cmp::Ordering::Equal => floor + (floor % 2),
    }
}

/// Splits `size` entries equally; the remainder goes one each to the
/// smallest keys.
pub fn equal_allocation<K: Ord + Copy>(topics: &[K], size: usize) -> Allocation<K> {
    let mut keys = topics.to_vec();
    keys.sort();
    keys.dedup();
    if keys.is_empty() {
        return Allocation {
            entries: BTreeMap::new(),
            topic_cache_size: size,
        };
    }
    let base = size / keys.len();
    let extra = size % keys.len();
    Allocation {
        entries: keys
            .into_iter()
            .enumerate()
            .map(|(i, k)| (k, base + usize::from(i < extra)))
            .collect(),
        topic_cache_size: size,
    }
}
