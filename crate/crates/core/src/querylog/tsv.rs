use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use log::warn;

use super::{Click, QueryEvent, QueryStream, RawRecord, StreamOrigin};
use crate::{Error, Result, TopicId};

/// Role of one TSV column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    UserId,
    Query,
    /// `YYYY-MM-DD HH:MM:SS` (fractional seconds allowed) or integer epoch seconds.
    Time,
    Rank,
    Url,
    /// Key used to join a click sidecar file.
    QueryKey,
    Ignore,
}

/// Column layout of a raw log file.
#[derive(Debug, Clone)]
pub struct FormatDescriptor {
    pub columns: Vec<Column>,
    /// First field of the header line, if the format has one.
    pub header_marker: Option<String>,
    /// Optional `QueryID\tURL[\tRank]` file joined on [`Column::QueryKey`].
    pub click_sidecar: Option<PathBuf>,
}

impl FormatDescriptor {
    /// `AnonID\tQuery\tQueryTime\tItemRank\tClickURL`
    pub fn aol() -> Self {
        FormatDescriptor {
            columns: vec![
                Column::UserId,
                Column::Query,
                Column::Time,
                Column::Rank,
                Column::Url,
            ],
            header_marker: Some("AnonID".into()),
            click_sidecar: None,
        }
    }

    /// `Time\tQuery\tQueryID\tSessionID\tResultCount`
    pub fn msn(click_sidecar: Option<PathBuf>) -> Self {
        FormatDescriptor {
            columns: vec![
                Column::Time,
                Column::Query,
                Column::QueryKey,
                Column::UserId,
                Column::Ignore,
            ],
            header_marker: Some("Time".into()),
            click_sidecar,
        }
    }

    fn position(&self, col: Column) -> Option<usize> {
        self.columns.iter().position(|&c| c == col)
    }

    fn validate(&self) -> Result<()> {
        for required in [Column::Query, Column::Time] {
            if self.position(required).is_none() {
                return Err(Error::param(
                    "format",
                    format!("descriptor has no {required:?} column"),
                ));
            }
        }
        if self.position(Column::Rank).is_some() != self.position(Column::Url).is_some() {
            return Err(Error::param(
                "format",
                "Rank and Url columns must appear together",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadedLog {
    pub records: Vec<RawRecord>,
    /// Rows that could not be parsed.
    pub skipped: usize,
}

/// Parses a raw query log, skipping (and counting) malformed rows.
pub fn load_tsv(path: impl AsRef<Path>, format: &FormatDescriptor) -> Result<LoadedLog> {
    let path = path.as_ref();
    format.validate()?;
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let sidecar = match &format.click_sidecar {
        Some(p) => load_click_sidecar(p)?,
        None => HashMap::new(),
    };

    let mut out = LoadedLog::default();
    let mut first = true;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if first {
            first = false;
            if let Some(marker) = &format.header_marker {
                let fields: Vec<&str> = line.split('\t').collect();
                if fields[0] == marker {
                    if fields.len() < format.columns.len() {
                        return Err(Error::MissingColumn {
                            needed: format.columns.len(),
                            available: fields.len(),
                        });
                    }
                    continue;
                }
            }
        }
        if line.is_empty() {
            continue;
        }
        match parse_row(line, format, &sidecar) {
            Some(rec) => out.records.push(rec),
            None => out.skipped += 1,
        }
    }
    if out.records.is_empty() && out.skipped == 0 {
        warn!("{} contains no records", path.display());
    }
    if out.skipped > 0 {
        warn!("{}: skipped {} malformed rows", path.display(), out.skipped);
    }
    Ok(out)
}

fn parse_row(
    line: &str,
    format: &FormatDescriptor,
    sidecar: &HashMap<String, Click>,
) -> Option<RawRecord> {
    let fields: Vec<&str> = line.split('\t').collect();
    let get = |col: Column| -> Option<&str> {
        format
            .position(col)
            .and_then(|i| fields.get(i).copied())
            .map(str::trim)
            .filter(|s| !s.is_empty())
    };

    let query_text = get(Column::Query)?.to_string();
    let timestamp = parse_time(get(Column::Time)?)?;
    let user_id = get(Column::UserId).unwrap_or_default().to_string();

    let click = match (get(Column::Rank), get(Column::Url)) {
        (Some(rank), Some(url)) => Some(Click {
            rank: rank.parse().ok().filter(|&r| r > 0)?,
            url: url.to_string(),
        }),
        (None, None) => get(Column::QueryKey).and_then(|k| sidecar.get(k).cloned()),
        _ => return None,
    };

    Some(RawRecord {
        user_id,
        query_text,
        timestamp,
        click,
    })
}

fn parse_time(s: &str) -> Option<u64> {
    if let Ok(secs) = s.parse::<u64>() {
        return Some(secs);
    }
    let dt = NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S%.f").ok()?;
    u64::try_from(dt.and_utc().timestamp()).ok()
}

fn load_click_sidecar(path: &Path) -> Result<HashMap<String, Click>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut clicks = HashMap::new();
    for line in text.lines() {
        let mut it = line.split('\t').map(str::trim);
        let (Some(key), Some(url)) = (it.next(), it.next()) else {
            continue;
        };
        if key.is_empty() || url.is_empty() {
            continue;
        }
        let rank = it.next().and_then(|r| r.parse().ok()).unwrap_or(1);
        // First click per query id wins.
        clicks.entry(key.to_string()).or_insert(Click {
            rank,
            url: url.to_string(),
        });
    }
    Ok(clicks)
}

const EVENTS_HEADER: &str = "timestamp\tquery\tclick_url\ttopic";

/// Writes a normalized event file: `timestamp\tquery\tclick_url\ttopic`.
pub fn write_events(path: impl AsRef<Path>, stream: &QueryStream) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{EVENTS_HEADER}").map_err(io)?;
    for e in stream.events() {
        let topic = e.topic.map(|t| t.0.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            e.timestamp,
            e.query,
            e.click_url.as_deref().unwrap_or(""),
            topic
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a file produced by [`write_events`]. Queries are re-normalized.
pub fn read_events(path: impl AsRef<Path>) -> Result<QueryStream> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if (i == 0 && line == EVENTS_HEADER) || line.is_empty() {
            continue;
        }
        let parse_err = |reason: &str| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 {
            return Err(parse_err("expected at least timestamp and query"));
        }
        let timestamp = fields[0].parse().map_err(|_| parse_err("bad timestamp"))?;
        let query = super::normalize_query(fields[1]);
        if query.is_empty() {
            continue;
        }
        let click_url = fields
            .get(2)
            .filter(|s| !s.is_empty())
            .map(|s| s.to_string());
        let topic = match fields.get(3).filter(|s| !s.is_empty()) {
            Some(t) => Some(TopicId(t.parse().map_err(|_| parse_err("bad topic id"))?)),
            None => None,
        };
        events.push(QueryEvent {
            query,
            timestamp,
            click_url,
            topic,
        });
    }
    Ok(QueryStream::new(events, StreamOrigin::Full))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn aol_well_formed() {
        let f = write_tmp(
            "AnonID\tQuery\tQueryTime\tItemRank\tClickURL\n\
             142\tbest buy\t2006-03-01 07:17:12\t1\thttp://www.bestbuy.com\n\
             142\tweather\t2006-03-01 07:18:00\t\t\n\
             217\tlottery\t2006-03-02 10:00:00\t2\thttp://lottery.com\n",
        );
        let log = load_tsv(f.path(), &FormatDescriptor::aol()).unwrap();
        assert_eq!(log.records.len(), 3);
        assert_eq!(log.skipped, 0);
        assert_eq!(log.records[0].timestamp, 1141197432);
        assert_eq!(
            log.records[0].click.as_ref().unwrap().url,
            "http://www.bestbuy.com"
        );
        assert!(log.records[1].click.is_none());
    }

    #[test]
    fn aol_skips_malformed_row() {
        let f = write_tmp(
            "1\ta\t2006-03-01 07:17:12\n\
             1\tb\tnot-a-time\n\
             2\tc\t2006-03-01 07:17:13\n\
             3\td\t2006-03-01 07:17:14\t1\thttp://x\n",
        );
        let log = load_tsv(f.path(), &FormatDescriptor::aol()).unwrap();
        assert_eq!(log.records.len(), 3);
        assert_eq!(log.skipped, 1);
    }

    #[test]
    fn rank_without_url_is_malformed() {
        let f = write_tmp("1\ta\t2006-03-01 07:17:12\t3\t\n");
        let log = load_tsv(f.path(), &FormatDescriptor::aol()).unwrap();
        assert_eq!(log.skipped, 1);
    }

    #[test]
    fn empty_file_is_empty_log() {
        let f = write_tmp("");
        let log = load_tsv(f.path(), &FormatDescriptor::aol()).unwrap();
        assert!(log.records.is_empty());
        assert_eq!(log.skipped, 0);
    }

    #[test]
    fn unreadable_file_errors() {
        assert!(matches!(
            load_tsv("/definitely/not/here.tsv", &FormatDescriptor::aol()),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn header_narrower_than_descriptor_errors() {
        let f = write_tmp("AnonID\tQuery\tQueryTime\n1\ta\t5\n");
        assert!(matches!(
            load_tsv(f.path(), &FormatDescriptor::aol()),
            Err(Error::MissingColumn {
                needed: 5,
                available: 3
            })
        ));
    }

    #[test]
    fn descriptor_without_query_column_errors() {
        let f = write_tmp("1\t2\n");
        let desc = FormatDescriptor {
            columns: vec![Column::UserId, Column::Time],
            header_marker: None,
            click_sidecar: None,
        };
        assert!(load_tsv(f.path(), &desc).is_err());
    }

    #[test]
    fn msn_with_sidecar() {
        let side = write_tmp("q1\thttp://a.com\t1\nq1\thttp://b.com\t2\n");
        let f = write_tmp(
            "Time\tQuery\tQueryID\tSessionID\tResultCount\n\
             2006-05-01 00:00:08.4320000\tMovie Times\tq1\ts1\t10\n\
             2006-05-01 00:00:09\tnews\tq2\ts2\t5\n",
        );
        let log = load_tsv(
            f.path(),
            &FormatDescriptor::msn(Some(side.path().to_path_buf())),
        )
        .unwrap();
        assert_eq!(log.records.len(), 2);
        assert_eq!(log.records[0].user_id, "s1");
        assert_eq!(log.records[0].click.as_ref().unwrap().url, "http://a.com");
        assert!(log.records[1].click.is_none());
    }

    #[test]
    fn events_round_trip() {
        let mut e1 = QueryEvent::new("best buy", 3);
        e1.click_url = Some("http://bb".into());
        e1.topic = Some(TopicId(4));
        let stream = QueryStream::new(vec![e1, QueryEvent::new("weather", 7)], StreamOrigin::Full);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ev.tsv");
        write_events(&p, &stream).unwrap();
        assert_eq!(read_events(&p).unwrap(), stream);
    }
}
