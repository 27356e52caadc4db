use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

use stdcache::simulator::{gap_csv_header, results_csv_header, CsvOutputs, GapReport};

use crate::manifest::ManifestBuilder;
use crate::GlobalArgs;

pub const REPORT: &str = "report.md";

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding a sweep's CSVs.
    #[arg(value_name = "DIR")]
    pub input: PathBuf,
}

#[derive(Debug, Deserialize)]
struct ResultRow {
    variant: String,
    #[serde(rename = "N")]
    n: usize,
    f_s: f64,
    f_t: f64,
    f_ts: f64,
    admission: String,
    hit_rate: f64,
}

#[derive(Debug, Deserialize)]
struct GapRow {
    #[serde(rename = "N")]
    n: usize,
    admission: String,
    belady: f64,
    best_sdc: Option<f64>,
    best_std: Option<f64>,
}

fn reader(path: &Path, header: &[&str]) -> Result<csv::Reader<std::fs::File>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        bail!("{} does not have the expected header", path.display());
    }
    Ok(r)
}

pub fn run(global: &GlobalArgs, args: &ReportArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::start("report", global.seed.unwrap_or(0), None);
    let results_path = args.input.join(CsvOutputs::RESULTS);
    manifest.input(&results_path);
    let rows: Vec<ResultRow> = reader(&results_path, &results_csv_header())?
        .deserialize()
        .collect::<Result<_, _>>()
        .with_context(|| format!("malformed row in {}", results_path.display()))?;

    let mut text = String::new();
    writeln!(text, "# Best configuration per variant\n")?;
    writeln!(
        text,
        "| N | admission | variant | f_s | f_t | f_ts | hit rate |"
    )?;
    writeln!(text, "|---|---|---|---|---|---|---|")?;
    let mut best: BTreeMap<(usize, &str, &str), &ResultRow> = BTreeMap::new();
    for r in &rows {
        let e = best.entry((r.n, &r.admission, &r.variant)).or_insert(r);
        if r.hit_rate > e.hit_rate || (r.hit_rate == e.hit_rate && r.f_s > e.f_s) {
            *e = r;
        }
    }
    for ((n, admission, variant), r) in &best {
        writeln!(
            text,
            "| {n} | {admission} | {variant} | {} | {} | {} | {:.4} |",
            r.f_s, r.f_t, r.f_ts, r.hit_rate
        )?;
    }

    let gaps_path = args.input.join(CsvOutputs::GAPS);
    if gaps_path.exists() {
        manifest.input(&gaps_path);
        let gaps: Vec<GapRow> = reader(&gaps_path, &gap_csv_header())?
            .deserialize()
            .collect::<Result<_, _>>()
            .with_context(|| format!("malformed row in {}", gaps_path.display()))?;
        writeln!(text, "\n# Distance from the clairvoyant bound\n")?;
        writeln!(
            text,
            "| N | admission | Bélády | SDC | STD | gap SDC | gap STD | STD − SDC | reduction |"
        )?;
        writeln!(text, "|---|---|---|---|---|---|---|---|---|")?;
        for g in &gaps {
            let pct = |x: f64| format!("{:.2}", x * 100.0);
            match (g.best_sdc, g.best_std) {
                (Some(sdc), Some(std)) => {
                    let r = GapReport::new(g.belady, sdc, std);
                    writeln!(
                        text,
                        "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                        g.n,
                        g.admission,
                        pct(r.belady),
                        pct(r.best_sdc),
                        pct(r.best_std),
                        pct(r.gap_sdc),
                        pct(r.gap_std),
                        pct(r.gap_std_vs_sdc),
                        r.gap_reduction
                            .map(|x| format!("{}%", pct(x)))
                            .unwrap_or_else(|| "-".into()),
                    )?;
                }
                _ => writeln!(
                    text,
                    "| {} | {} | {} | - | - | - | - | - | - |",
                    g.n,
                    g.admission,
                    pct(g.belady)
                )?,
            }
        }
    }

    print!("{text}");
    let out = &global.out;
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let path = out.join(REPORT);
    std::fs::write(&path, &text).with_context(|| format!("cannot write {}", path.display()))?;
    manifest.write(out, &[path])?;
    Ok(())
}
