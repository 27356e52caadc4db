use std::collections::HashMap;

use super::{
    belady_with_mask, simulate_with_mask, AdmissionSetting, GapReport, SimOptions,
    SimulationReport, Workload,
};
use crate::caches::{CacheConfig, Variant};
use crate::par::{ordered_map, Execution};
use crate::{Error, Result};

/// Parameter grid. Each variant expands over the parameters it uses:
///
/// * `sdc`: every `f_s`.
/// * LRU-sectioned STD: every `f_s` × `topic_share`.
/// * SDC-sectioned STD: every `f_s` × `topic_share` × `f_ts`.
/// * `t_sdc_var`: every `f_ts`.
/// * `lru`, `static`, `belady`: one point.
///
/// `topic_share` is the topic part of what the static section leaves, so
/// `f_t = topic_share · (1 − f_s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub sizes: Vec<usize>,
    pub f_s: Vec<f64>,
    pub topic_share: Vec<f64>,
    pub f_ts: Vec<f64>,
    pub variants: Vec<Variant>,
    pub admissions: Vec<AdmissionSetting>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            sizes: vec![1024],
            f_s: (0..=10).map(|i| i as f64 / 10.0).collect(),
            topic_share: vec![0.8],
            f_ts: vec![0.4],
            variants: vec![Variant::Sdc, Variant::StdSdcVarC2],
            admissions: vec![AdmissionSetting::None],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub config: CacheConfig,
    pub admission: AdmissionSetting,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &'static str, v: &[f64]| -> Result<()> {
            match v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                Some(x) => Err(Error::param(name, format!("{x} is outside [0, 1]"))),
                None => Ok(()),
            }
        };
        unit("f_s", &self.f_s)?;
        unit("topic_share", &self.topic_share)?;
        unit("f_ts", &self.f_ts)?;
        for a in &self.admissions {
            a.validate()?;
        }
        Ok(())
    }

    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        self.validate()?;
        let mut out = Vec::new();
        for &n in &self.sizes {
            for &admission in &self.admissions {
                for &variant in &self.variants {
                    let mut push = |config: CacheConfig| out.push(SweepPoint { config, admission });
                    match variant {
                        Variant::LruOnly => push(CacheConfig::lru(n)),
                        Variant::StaticOnly => push(CacheConfig::static_only(n)),
                        Variant::Belady => push(CacheConfig::belady(n)),
                        Variant::Sdc => self.f_s.iter().for_each(|&f| push(CacheConfig::sdc(n, f))),
                        Variant::TSdcVar => self
                            .f_ts
                            .iter()
                            .for_each(|&f| push(CacheConfig::tsdc(n, f))),
                        Variant::StdLruFixed | Variant::StdLruVar => {
                            for &f_s in &self.f_s {
                                for &share in &self.topic_share {
                                    push(CacheConfig::std(
                                        variant,
                                        n,
                                        f_s,
                                        share * (1.0 - f_s),
                                        0.0,
                                    ));
                                }
                            }
                        }
                        Variant::StdSdcVarC1 | Variant::StdSdcVarC2 => {
                            for &f_s in &self.f_s {
                                for &share in &self.topic_share {
                                    for &f_ts in &self.f_ts {
                                        push(CacheConfig::std(
                                            variant,
                                            n,
                                            f_s,
                                            share * (1.0 - f_s),
                                            f_ts,
                                        ));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidConfig("sweep grid has no points".into()));
        }
        for p in &out {
            p.config.sizes()?;
        }
        Ok(out)
    }
}

/// Best rates of one (N, admission) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGap {
    pub n: usize,
    pub admission: AdmissionSetting,
    pub belady: f64,
    pub best_sdc: Option<SimulationReport>,
    pub best_std: Option<SimulationReport>,
}

impl SweepGap {
    /// Defined when the grid had both an SDC and an STD-family point.
    pub fn report(&self) -> Option<GapReport> {
        Some(GapReport::new(
            self.belady,
            self.best_sdc.as_ref()?.hit_rate(),
            self.best_std.as_ref()?.hit_rate(),
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// One report per grid point, in grid order.
    pub reports: Vec<SimulationReport>,
    pub gaps: Vec<SweepGap>,
}

enum Job {
    Point(SweepPoint),
    Bound(usize, AdmissionSetting),
}

/// Keeps the higher hit rate; ties go to the larger `f_s`.
fn better(candidate: &SimulationReport, best: &Option<SimulationReport>) -> bool {
    match best {
        None => true,
        Some(b) => {
            let (c, r) = (candidate.hit_rate(), b.hit_rate());
            c > r || (c == r && candidate.config.f_s > b.config.f_s)
        }
    }
}

/// Simulates every grid point independently plus one clairvoyant bound per
/// (N, admission). `on_report` sees each point's report in grid order as soon
/// as it and all earlier points are done.
pub fn run_sweep(
    grid: &SweepGrid,
    workload: &Workload,
    opts: &SimOptions,
    exec: Execution,
    mut on_report: impl FnMut(&SimulationReport) -> Result<()>,
) -> Result<SweepResult> {
    let points = grid.points()?;
    let mut masks: HashMap<AdmissionSetting, Vec<bool>> = HashMap::new();
    for a in &grid.admissions {
        masks
            .entry(*a)
            .or_insert_with(|| workload.admission_mask(a, opts.warmup));
    }
    let mut jobs: Vec<Job> = points.iter().map(|&p| Job::Point(p)).collect();
    let mut pairs = Vec::new();
    for &n in &grid.sizes {
        for &a in &grid.admissions {
            if !pairs.contains(&(n, a)) {
                pairs.push((n, a));
                jobs.push(Job::Bound(n, a));
            }
        }
    }

    let mut reports = Vec::with_capacity(points.len());
    let mut bounds: HashMap<(usize, AdmissionSetting), f64> = HashMap::new();
    ordered_map(
        exec,
        &jobs,
        |job| match *job {
            Job::Point(p) => {
                simulate_with_mask(&p.config, workload, p.admission, &masks[&p.admission], opts)
            }
            Job::Bound(n, a) => belady_with_mask(n, workload, a, &masks[&a], opts),
        },
        |i, report| {
            match jobs[i] {
                Job::Point(_) => {
                    on_report(&report)?;
                    reports.push(report);
                }
                Job::Bound(n, a) => {
                    bounds.insert((n, a), report.hit_rate());
                }
            }
            Ok(())
        },
    )?;

    let gaps = pairs
        .into_iter()
        .map(|(n, admission)| {
            let mut gap = SweepGap {
                n,
                admission,
                belady: bounds[&(n, admission)],
                best_sdc: None,
                best_std: None,
            };
            for r in reports
                .iter()
                .filter(|r| r.config.total_entries == n && r.admission == admission)
            {
                if r.variant() == Variant::Sdc && better(r, &gap.best_sdc) {
                    gap.best_sdc = Some(r.clone());
                } else if r.variant().is_topical() && better(r, &gap.best_std) {
                    gap.best_std = Some(r.clone());
                }
            }
            gap
        })
        .collect();
    Ok(SweepResult { reports, gaps })
}
