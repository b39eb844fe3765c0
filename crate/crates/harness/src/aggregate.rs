//! Per-round CSV I/O and the cross-seed summary.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use vits_core::sim::RoundRecord;

use crate::error::{csv_err, io_err, HarnessError, Result};

pub const ROUNDS_HEADER: [&str; 6] = [
    "t",
    "arm",
    "reward",
    "inst_regret",
    "cum_regret",
    "elapsed_ns",
];
pub const SUMMARY_HEADER: [&str; 5] = [
    "agent",
    "t",
    "mean_cum_regret",
    "stderr_cum_regret",
    "n_seeds",
];

/// Reals are written with 17 significant digits so they parse back exactly.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub agent: String,
    pub t: usize,
    pub mean_cum_regret: f64,
    pub stderr_cum_regret: f64,
    pub n_seeds: usize,
}

pub fn rounds_file_name(agent: &str, seed: u64) -> String {
    format!("rounds_{agent}_{seed}.csv")
}

/// Splits `rounds_<agent>_<seed>.csv` into its agent and seed. Agent names may
/// themselves contain underscores; the seed follows the last one.
pub fn parse_rounds_file_name(name: &str) -> Option<(String, u64)> {
    let stem = name.strip_prefix("rounds_")?.strip_suffix(".csv")?;
    let (agent, seed) = stem.rsplit_once('_')?;
    if agent.is_empty() {
        return None;
    }
    Some((agent.to_string(), seed.parse().ok()?))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(io_err(path))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file)))
}

pub fn write_rounds_csv(path: &Path, records: &[RoundRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(ROUNDS_HEADER).map_err(csv_err(path))?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            r.arm.to_string(),
            fmt_real(r.reward),
            fmt_real(r.inst_regret),
            fmt_real(r.cum_regret),
            r.elapsed_ns.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_rounds_csv(path: &Path) -> Result<Vec<RoundRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = rdr.headers().map_err(csv_err(path))?;
    if header.iter().ne(ROUNDS_HEADER) {
        return Err(HarnessError::Other(format!(
            "{}: unexpected header `{}`",
            path.display(),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for rec in rdr.deserialize::<RoundRecord>() {
        let rec = rec.map_err(csv_err(path))?;
        if rec.t != out.len() + 1 {
            return Err(HarnessError::Ragged(format!(
                "{}: round {} out of sequence",
                path.display(),
                rec.t
            )));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(SUMMARY_HEADER).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.agent.clone(),
            r.t.to_string(),
            fmt_real(r.mean_cum_regret),
            fmt_real(r.stderr_cum_regret),
            r.n_seeds.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = rdr.headers().map_err(csv_err(path))?;
    if header.iter().ne(SUMMARY_HEADER) {
        return Err(HarnessError::Other(format!(
            "{}: not a summary file",
            path.display()
        )));
    }
    rdr.deserialize()
        .map(|r| r.map_err(csv_err(path)))
        .collect()
}

/// Mean and standard error (sample std over `sqrt(n)`, zero for a single value).
/// Values are sorted first so the result does not depend on input order.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let mut sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    sq.sort_by(f64::total_cmp);
    let var = sq.iter().sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Summarises cumulative-regret series keyed by `(agent, seed)`.
///
/// Every series must have the same length and every agent the same seed set.
/// Rows are ordered by agent name, then round.
pub fn aggregate(series: &[(String, u64, Vec<f64>)]) -> Result<Vec<SummaryRow>> {
    let mut by_agent: BTreeMap<&str, BTreeMap<u64, &[f64]>> = BTreeMap::new();
    let mut horizon = None;
    for (agent, seed, s) in series {
        match horizon {
            None => horizon = Some(s.len()),
            Some(h) if h != s.len() => {
                return Err(HarnessError::Ragged(format!(
                    "{agent}/{seed} has {} rounds, expected {h}",
                    s.len()
                )))
            }
            _ => {}
        }
        if by_agent
            .entry(agent)
            .or_default()
            .insert(*seed, s)
            .is_some()
        {
            return Err(HarnessError::Ragged(format!(
                "duplicate series {agent}/{seed}"
            )));
        }
    }
    let mut seed_sets = by_agent.values().map(|m| m.keys().collect::<BTreeSet<_>>());
    if let Some(first) = seed_sets.next() {
        if seed_sets.any(|s| s != first) {
            return Err(HarnessError::Ragged(
                "agents were run on different seeds".into(),
            ));
        }
    }

    let horizon = horizon.unwrap_or(0);
    let mut rows = Vec::with_capacity(by_agent.len() * horizon);
    for (agent, seeds) in &by_agent {
        for t in 0..horizon {
            let vals: Vec<f64> = seeds.values().map(|s| s[t]).collect();
            let (mean, se) = mean_stderr(&vals);
            rows.push(SummaryRow {
                agent: agent.to_string(),
                t: t + 1,
                mean_cum_regret: mean,
                stderr_cum_regret: se,
                n_seeds: vals.len(),
            });
        }
    }
    Ok(rows)
}

/// Reads rounds CSVs (named as [`rounds_file_name`] produces) and aggregates them.
pub fn aggregate_files(paths: &[impl AsRef<Path>]) -> Result<Vec<SummaryRow>> {
    let mut series = Vec::with_capacity(paths.len());
    for p in paths {
        let p = p.as_ref();
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let (agent, seed) = parse_rounds_file_name(name)
            .ok_or_else(|| HarnessError::Other(format!("{}: not a rounds file", p.display())))?;
        let cum = read_rounds_csv(p)?
            .into_iter()
            .map(|r| r.cum_regret)
            .collect();
        series.push((agent, seed, cum));
    }
    aggregate(&series)
}

/// Final-round row of each agent.
pub fn final_rows(rows: &[SummaryRow]) -> BTreeMap<String, SummaryRow> {
    let mut out: BTreeMap<String, SummaryRow> = BTreeMap::new();
    for r in rows {
        match out.get(&r.agent) {
            Some(prev) if prev.t >= r.t => {}
            _ => {
                out.insert(r.agent.clone(), r.clone());
            }
        }
    }
    out
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}
