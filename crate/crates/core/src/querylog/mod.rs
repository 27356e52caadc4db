//! Query-log ingestion: normalization, click-duplicate collapsing, time
//! ordering and training/test splits.

mod synthetic;
mod tsv;

pub use synthetic::{generate_synthetic_log, synthetic_documents, BurstProfile, SyntheticParams};
pub use tsv::{load_tsv, read_events, write_events, Column, FormatDescriptor, LoadedLog};

use crate::{Error, Result, TopicId};

/// Click information attached to a raw log record.
///
/// Rank and URL travel together, so a record either has both or neither.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Click {
    pub rank: u32,
    pub url: String,
}

/// One line of a raw query log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub user_id: String,
    pub query_text: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub click: Option<Click>,
}

/// A normalized query occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryEvent {
    pub query: String,
    pub timestamp: u64,
    pub click_url: Option<String>,
    pub topic: Option<TopicId>,
}

impl QueryEvent {
    pub fn new(query: impl Into<String>, timestamp: u64) -> Self {
        QueryEvent {
            query: query.into(),
            timestamp,
            click_url: None,
            topic: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamOrigin {
    Training,
    Test,
    Full,
}

/// Time-ordered sequence of query events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryStream {
    events: Vec<QueryEvent>,
    origin: StreamOrigin,
}

impl QueryStream {
    /// Builds a stream, sorting by timestamp. The sort is stable so events
    /// sharing a timestamp keep their input order.
    pub fn new(mut events: Vec<QueryEvent>, origin: StreamOrigin) -> Self {
        events.sort_by_key(|e| e.timestamp);
        QueryStream { events, origin }
    }

    /// Builds a stream from bare query strings, one second apart.
    pub fn from_queries<'a>(
        queries: impl IntoIterator<Item = &'a str>,
        origin: StreamOrigin,
    ) -> Self {
        let events = queries
            .into_iter()
            .enumerate()
            .map(|(i, q)| QueryEvent::new(q, i as u64))
            .collect();
        QueryStream { events, origin }
    }

    pub fn events(&self) -> &[QueryEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<QueryEvent> {
        self.events
    }

    pub fn origin(&self) -> StreamOrigin {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> + '_ {
        self.events.iter().map(|e| e.query.as_str())
    }
}

/// Lowercases ASCII letters, maps every other ASCII character to a space,
/// drops non-ASCII characters, then collapses and trims whitespace.
///
/// Returns an empty string when nothing alphanumeric survives.
pub fn normalize_query(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.chars() {
        if !c.is_ascii() {
            continue;
        }
        if c.is_ascii_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c.to_ascii_lowercase());
        } else {
            pending_space = true;
        }
    }
    out
}

/// Collapses consecutive records sharing `(user_id, query_text, timestamp)`,
/// keeping the first one. Several clicks on one submission become one event.
pub fn dedup_click_records(records: Vec<RawRecord>) -> Vec<RawRecord> {
    let mut out: Vec<RawRecord> = Vec::with_capacity(records.len());
    for rec in records {
        if let Some(last) = out.last() {
            if last.user_id == rec.user_id
                && last.query_text == rec.query_text
                && last.timestamp == rec.timestamp
            {
                continue;
            }
        }
        out.push(rec);
    }
    out
}

/// Normalizes raw records into a time-ordered stream. Records whose query
/// normalizes to the empty string are dropped.
pub fn records_to_stream(records: &[RawRecord], origin: StreamOrigin) -> QueryStream {
    let events = records
        .iter()
        .filter_map(|r| {
            let query = normalize_query(&r.query_text);
            if query.is_empty() {
                return None;
            }
            Some(QueryEvent {
                query,
                timestamp: r.timestamp,
                click_url: r.click.as_ref().map(|c| c.url.clone()),
                topic: None,
            })
        })
        .collect();
    QueryStream::new(events, origin)
}

/// Splits a time-sorted stream by event count: the first
/// `floor(train_fraction * len)` events train, the rest test.
pub fn split_stream(
    stream: &QueryStream,
    train_fraction: f64,
) -> Result<(QueryStream, QueryStream)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::param(
            "train_fraction",
            format!("{train_fraction} is outside (0, 1)"),
        ));
    }
    if stream.is_empty() {
        return Err(Error::EmptyStream);
    }
    let n = stream.len();
    // Absorb binary representation error, e.g. 0.29 * 100 = 28.999999999999996.
    let cut = ((train_fraction * n as f64) + 1e-9).floor() as usize;
    let cut = cut.min(n);
    let (train, test) = stream.events.split_at(cut);
    Ok((
        QueryStream {
            events: train.to_vec(),
            origin: StreamOrigin::Training,
        },
        QueryStream {
            events: test.to_vec(),
            origin: StreamOrigin::Test,
        },
    ))
}
