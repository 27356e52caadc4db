use std::fs::File;
use std::path::{Path, PathBuf};

use super::{SimulationReport, SweepGap};
use crate::{Error, Result};

pub fn results_csv_header() -> [&'static str; 16] {
    [
        "variant",
        "N",
        "f_s",
        "f_t",
        "f_d",
        "f_ts",
        "admission",
        "warmup_events",
        "test_events",
        "hits",
        "misses",
        "hit_rate",
        "hits_static",
        "hits_topic",
        "hits_dynamic",
        "no_topic_routed",
    ]
}

pub fn gap_csv_header() -> [&'static str; 9] {
    [
        "N",
        "admission",
        "belady",
        "best_sdc",
        "best_std",
        "gap_sdc",
        "gap_std",
        "gap_std_vs_sdc",
        "gap_reduction",
    ]
}

pub fn miss_distance_csv_header() -> [&'static str; 5] {
    ["variant", "N", "scope", "topic_id", "avg_miss_distance"]
}

/// Fraction with at most six decimals and no trailing zeros.
fn frac(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn rate(x: f64) -> String {
    format!("{x:.6}")
}

pub fn results_csv_row(r: &SimulationReport) -> Vec<String> {
    let c = &r.config;
    vec![
        c.variant.to_string(),
        c.total_entries.to_string(),
        frac(c.f_s),
        frac(c.f_t),
        frac(c.f_d),
        frac(c.f_ts),
        r.admission.to_string(),
        r.warmup_events.to_string(),
        r.test_events.to_string(),
        r.hits.to_string(),
        r.misses.to_string(),
        rate(r.hit_rate()),
        r.hits_static.to_string(),
        r.hits_topic.to_string(),
        r.hits_dynamic.to_string(),
        r.no_topic_routed.to_string(),
    ]
}

pub fn gap_csv_row(g: &SweepGap) -> Vec<String> {
    let opt = |x: Option<f64>| x.map(rate).unwrap_or_default();
    let report = g.report();
    vec![
        g.n.to_string(),
        g.admission.to_string(),
        rate(g.belady),
        opt(g.best_sdc.as_ref().map(|r| r.hit_rate())),
        opt(g.best_std.as_ref().map(|r| r.hit_rate())),
        opt(report.as_ref().map(|r| r.gap_sdc)),
        opt(report.as_ref().map(|r| r.gap_std)),
        opt(report.as_ref().map(|r| r.gap_std_vs_sdc)),
        opt(report.as_ref().and_then(|r| r.gap_reduction)),
    ]
}

/// Per-topic rows followed by the dynamic-section row, if any.
pub fn miss_distance_csv_rows(r: &SimulationReport) -> Vec<Vec<String>> {
    let (v, n) = (
        r.config.variant.to_string(),
        r.config.total_entries.to_string(),
    );
    let row = |scope: &str, topic: String, d: f64| {
        vec![
            v.clone(),
            n.clone(),
            scope.to_string(),
            topic,
            format!("{d:.6}"),
        ]
    };
    let mut rows: Vec<Vec<String>> = r
        .per_topic_miss_distance
        .iter()
        .map(|(t, &d)| row("topic", t.to_string(), d))
        .collect();
    if let Some(d) = r.dynamic_miss_distance {
        rows.push(row("dynamic", String::new(), d));
    }
    rows
}

/// The three CSV files of a run, written under one directory.
pub struct CsvOutputs {
    results: (PathBuf, csv::Writer<File>),
    gaps: Option<(PathBuf, csv::Writer<File>)>,
    miss_distance: (PathBuf, csv::Writer<File>),
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

fn create(dir: &Path, name: &str, header: &[&str]) -> Result<(PathBuf, csv::Writer<File>)> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
    w.write_record(header).map_err(|e| csv_err(&path, e))?;
    Ok((path, w))
}

fn line(out: &mut (PathBuf, csv::Writer<File>), row: &[String]) -> Result<()> {
    out.1.write_record(row).map_err(|e| csv_err(&out.0, e))
}

impl CsvOutputs {
    pub const RESULTS: &'static str = "results.csv";
    pub const GAPS: &'static str = "gaps.csv";
    pub const MISS_DISTANCE: &'static str = "miss_distance.csv";

    pub fn create(dir: impl AsRef<Path>) -> Result<Self> {
        Self::open(dir.as_ref(), true)
    }

    /// Results and miss distances only, for runs without a bound.
    pub fn create_without_gaps(dir: impl AsRef<Path>) -> Result<Self> {
        Self::open(dir.as_ref(), false)
    }

    fn open(dir: &Path, gaps: bool) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(CsvOutputs {
            results: create(dir, Self::RESULTS, &results_csv_header())?,
            gaps: if gaps {
                Some(create(dir, Self::GAPS, &gap_csv_header())?)
            } else {
                None
            },
            miss_distance: create(dir, Self::MISS_DISTANCE, &miss_distance_csv_header())?,
        })
    }

    pub fn result(&mut self, r: &SimulationReport) -> Result<()> {
        line(&mut self.results, &results_csv_row(r))
    }

    pub fn gap(&mut self, g: &SweepGap) -> Result<()> {
        match &mut self.gaps {
            Some(out) => line(out, &gap_csv_row(g)),
            None => Err(Error::InvalidConfig("gap output was not opened".into())),
        }
    }

    pub fn miss_distance(&mut self, r: &SimulationReport) -> Result<()> {
        for row in miss_distance_csv_rows(r) {
            line(&mut self.miss_distance, &row)?;
        }
        Ok(())
    }

    /// Flushes and returns the written paths.
    pub fn finish(self) -> Result<Vec<PathBuf>> {
        let mut paths = Vec::new();
        let files = [Some(self.results), self.gaps, Some(self.miss_distance)];
        for (path, mut w) in files.into_iter().flatten() {
            w.flush().map_err(|e| Error::io(&path, e))?;
            paths.push(path);
        }
        Ok(paths)
    }
}
