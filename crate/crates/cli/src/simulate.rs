use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use log::{info, warn};

use stdcache::admission::AdmissionPolicy;
use stdcache::caches::{CacheConfig, Variant};
use stdcache::par::{map_collect, Execution};
use stdcache::querylog::{split_stream, QueryStream};
use stdcache::simulator::{
    run_simulation, run_sweep, AdmissionSetting, CsvOutputs, SimOptions, SimulationReport,
    SweepGrid, Workload,
};
use stdcache::topics::{load_topic_map, TopicMap};

use crate::config::Config;
use crate::inputs::{
    lda_config, lda_topics, load_config, read_stream, seed, Documents, LdaOverrides,
};
use crate::manifest::ManifestBuilder;
use crate::{parse_split, AdmissionKind, GlobalArgs, TopicSource};

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Training events; warms the caches and fills the static sections.
    #[arg(long, value_name = "PATH")]
    pub train: Option<PathBuf>,
    /// Test events; every hit rate is measured on these.
    #[arg(long, value_name = "PATH")]
    pub test: Option<PathBuf>,
    /// One event file, split with `--split` instead of `--train`/`--test`.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["train", "test"])]
    pub events: Option<PathBuf>,
    /// Training share when splitting `--events`.
    #[arg(long, value_name = "F", value_parser = parse_split, requires = "events")]
    pub split: Option<f64>,
    /// Where query topics come from.
    #[arg(long, value_enum)]
    pub topics: Option<TopicSource>,
    /// `query<TAB>topic` file for `--topics map`.
    #[arg(long, value_name = "PATH")]
    pub map: Option<PathBuf>,
    /// Page text for `--topics lda`.
    #[arg(long, value_name = "PATH")]
    pub docs: Option<PathBuf>,
    /// Page files named `<sha256(url)>.txt`, instead of `--docs`.
    #[arg(long, value_name = "DIR")]
    pub doc_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub admission: Option<AdmissionKind>,
    /// Minimum training frequency for feature admission.
    #[arg(long)]
    pub x: Option<u64>,
    /// Feature admission rejects queries with this many terms or more.
    #[arg(long)]
    pub y: Option<usize>,
    /// Feature admission rejects queries with this many characters or more.
    #[arg(long)]
    pub z: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// One run per (admission, size, variant) at fixed fractions.
    Points,
    Grid,
}

pub fn run(global: &GlobalArgs, args: &SimArgs, mode: Mode) -> Result<()> {
    let cfg = load_config(global)?;
    let seed = seed(global, &cfg)?;
    let name = if mode == Mode::Grid {
        "sweep"
    } else {
        "simulate"
    };
    let mut manifest = ManifestBuilder::start(name, seed, cfg.path());
    let exec = Execution::from_jobs(match global.jobs {
        Some(j) => Some(j),
        None => cfg.get("jobs")?,
    });
    let opts = SimOptions {
        warmup: cfg.get("warmup")?.unwrap_or(true),
        admit_static: cfg.get("admit_static")?.unwrap_or(false),
        ..SimOptions::default()
    };
    let admissions = admissions(args, &cfg)?;
    let variants: Vec<Variant> = cfg
        .list("variants")?
        .unwrap_or_else(|| SweepGrid::default().variants);
    let sizes: Vec<usize> = cfg
        .list("sizes")?
        .unwrap_or_else(|| SweepGrid::default().sizes);

    let (train, test) = streams(args, &cfg, &mut manifest)?;
    let map = topic_map(args, &cfg, seed, &train, &mut manifest)?;
    let workload = Workload::new(&train, &test, &map);
    info!(
        "{} training and {} test events, {} topics",
        train.len(),
        test.len(),
        map.popularity().len()
    );

    let out = &global.out;
    let outputs = match mode {
        Mode::Points => {
            let points = fixed_points(&cfg, &variants, &sizes, &admissions)?;
            let reports = map_collect(exec, &points, |(config, admission)| {
                run_simulation(config, &workload, *admission, &opts)
            })?;
            let mut csv = CsvOutputs::create_without_gaps(out)?;
            for r in &reports {
                csv.result(r)?;
                csv.miss_distance(r)?;
                print_report(r);
            }
            csv.finish()?
        }
        Mode::Grid => {
            let grid = grid(&cfg, variants, sizes, admissions)?;
            let mut csv = CsvOutputs::create(out)?;
            let result = run_sweep(&grid, &workload, &opts, exec, |r| {
                csv.result(r)?;
                csv.miss_distance(r)
            })?;
            println!("points\t{}", result.reports.len());
            for g in &result.gaps {
                csv.gap(g)?;
                print_gap(g);
            }
            csv.finish()?
        }
    };
    manifest.write(out, &outputs)?;
    Ok(())
}

fn path_flag(flag: &Option<PathBuf>, cfg: &Config, key: &str) -> Result<Option<PathBuf>> {
    match flag {
        Some(p) => Ok(Some(p.clone())),
        None => cfg.get(key),
    }
}

fn streams(
    args: &SimArgs,
    cfg: &Config,
    manifest: &mut ManifestBuilder,
) -> Result<(QueryStream, QueryStream)> {
    if let Some(events) = &args.events {
        let all = read_stream(events, manifest)?;
        return Ok(split_stream(&all, args.split.unwrap_or(0.7))?);
    }
    let train = path_flag(&args.train, cfg, "train")?;
    let test = path_flag(&args.test, cfg, "test")?;
    match (train, test) {
        (Some(tr), Some(te)) => Ok((read_stream(&tr, manifest)?, read_stream(&te, manifest)?)),
        _ => bail!("pass --train and --test (or --events with --split)"),
    }
}

fn topic_map(
    args: &SimArgs,
    cfg: &Config,
    seed: u64,
    train: &QueryStream,
    manifest: &mut ManifestBuilder,
) -> Result<TopicMap> {
    let map_path = path_flag(&args.map, cfg, "map")?;
    let source = match args.topics {
        Some(s) => s,
        None => match cfg.raw("topics") {
            Some("lda") => TopicSource::Lda,
            Some("map") => TopicSource::Map,
            Some("none") => TopicSource::None,
            Some(other) => bail!("config key `topics`: unknown topic source `{other}`"),
            None if map_path.is_some() => TopicSource::Map,
            None => TopicSource::None,
        },
    };
    match source {
        TopicSource::None => Ok(TopicMap::default()),
        TopicSource::Map => {
            let Some(p) = map_path else {
                bail!("--topics map needs --map PATH");
            };
            manifest.input(&p);
            let loaded = load_topic_map(&p)
                .with_context(|| format!("cannot load topic map {}", p.display()))?;
            Ok(loaded.map)
        }
        TopicSource::Lda => {
            let docs = path_flag(&args.docs, cfg, "docs")?;
            let dir = path_flag(&args.doc_dir, cfg, "doc_dir")?;
            let docs = Documents::open(docs.as_deref(), dir.as_deref(), manifest)?;
            let lda = lda_config(cfg, &LdaOverrides::default(), seed)?;
            Ok(lda_topics(train, &docs, cfg, &lda)?.map)
        }
    }
}

fn admissions(args: &SimArgs, cfg: &Config) -> Result<Vec<AdmissionSetting>> {
    let x = cfg.pick(args.x, "x", AdmissionPolicy::DEFAULT_X)?;
    let y = cfg.pick(args.y, "y", AdmissionPolicy::DEFAULT_Y)?;
    let z = cfg.pick(args.z, "z", AdmissionPolicy::DEFAULT_Z)?;
    let features = AdmissionSetting::Features { x, y, z };
    let out = match args.admission {
        Some(AdmissionKind::None) => vec![AdmissionSetting::None],
        Some(AdmissionKind::Singleton) => vec![AdmissionSetting::Singleton],
        Some(AdmissionKind::Features) => vec![features],
        None => match cfg.raw("admission") {
            None => vec![AdmissionSetting::None],
            Some(v) => crate::config::parse_list::<String>("admission", v)?
                .iter()
                .map(|s| match s.as_str() {
                    "features" => Ok(features),
                    other => other
                        .parse::<AdmissionSetting>()
                        .map_err(|e| anyhow::anyhow!("config key `admission`: {e}")),
                })
                .collect::<Result<_>>()?,
        },
    };
    for a in &out {
        a.validate()?;
    }
    Ok(out)
}

fn fixed_points(
    cfg: &Config,
    variants: &[Variant],
    sizes: &[usize],
    admissions: &[AdmissionSetting],
) -> Result<Vec<(CacheConfig, AdmissionSetting)>> {
    let f_s: f64 = cfg.get("f_s")?.unwrap_or(0.5);
    let share: f64 = cfg.get("topic_share")?.unwrap_or(0.8);
    let f_t: f64 = cfg.get("f_t")?.unwrap_or(share * (1.0 - f_s));
    let f_ts: f64 = cfg.get("f_ts")?.unwrap_or(0.4);
    let mut points = Vec::new();
    for &admission in admissions {
        for &n in sizes {
            for &v in variants {
                let config = match v {
                    Variant::LruOnly => CacheConfig::lru(n),
                    Variant::StaticOnly => CacheConfig::static_only(n),
                    Variant::Belady => CacheConfig::belady(n),
                    Variant::Sdc => CacheConfig::sdc(n, f_s),
                    Variant::TSdcVar => CacheConfig::tsdc(n, f_ts),
                    Variant::StdLruFixed | Variant::StdLruVar => {
                        CacheConfig::std(v, n, f_s, f_t, 0.0)
                    }
                    Variant::StdSdcVarC1 | Variant::StdSdcVarC2 => {
                        CacheConfig::std(v, n, f_s, f_t, f_ts)
                    }
                };
                config
                    .sizes()
                    .with_context(|| format!("{v} with N = {n}"))?;
                points.push((config, admission));
            }
        }
    }
    Ok(points)
}

fn grid(
    cfg: &Config,
    variants: Vec<Variant>,
    sizes: Vec<usize>,
    admissions: Vec<AdmissionSetting>,
) -> Result<SweepGrid> {
    if cfg.raw("f_t").is_some() {
        warn!("`f_t` is ignored by sweep; it is derived from `topic_share`");
    }
    let d = SweepGrid::default();
    let grid = SweepGrid {
        sizes,
        f_s: cfg.list("f_s")?.unwrap_or(d.f_s),
        topic_share: cfg.list("topic_share")?.unwrap_or(d.topic_share),
        f_ts: cfg.list("f_ts")?.unwrap_or(d.f_ts),
        variants,
        admissions,
    };
    grid.validate()?;
    Ok(grid)
}

fn print_report(r: &SimulationReport) {
    let c = &r.config;
    println!(
        "{}\tN={}\tf_s={}\tf_t={}\tf_ts={}\t{}\thits={}/{}\thit_rate={:.6}",
        c.variant,
        c.total_entries,
        c.f_s,
        c.f_t,
        c.f_ts,
        r.admission,
        r.hits,
        r.test_events,
        r.hit_rate()
    );
}

fn print_gap(g: &stdcache::simulator::SweepGap) {
    let best = |r: &Option<SimulationReport>| match r {
        Some(r) => format!("{:.6} (f_s {})", r.hit_rate(), r.config.f_s),
        None => "-".into(),
    };
    let reduction = match g.report().and_then(|r| r.gap_reduction) {
        Some(x) => format!("{:.2}%", x * 100.0),
        None => "-".into(),
    };
    println!(
        "N={}\t{}\tbelady={:.6}\tsdc={}\tstd={}\treduction={reduction}",
        g.n,
        g.admission,
        g.belady,
        best(&g.best_sdc),
        best(&g.best_std)
    );
}
