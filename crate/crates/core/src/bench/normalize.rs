use std::collections::HashMap;
use std::io::Write;
use std::str::FromStr;

use thiserror::Error;

use super::{BenchError, ResultRow, CSV_HEADER};
use crate::netmodel::NetModelKind;
use crate::simulator::Imode;

/// Axis along which makespans are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Netmodel,
    Imode,
    Msd,
}

/// The configuration that scores 1.0, e.g. `netmodel=maxmin` or `msd=0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Netmodel(NetModelKind),
    Imode(Imode),
    Msd(f64),
}

impl Reference {
    pub fn dimension(&self) -> Dimension {
        match self {
            Reference::Netmodel(_) => Dimension::Netmodel,
            Reference::Imode(_) => Dimension::Imode,
            Reference::Msd(_) => Dimension::Msd,
        }
    }

    fn matches(&self, row: &ResultRow) -> bool {
        match *self {
            Reference::Netmodel(n) => row.netmodel == n,
            Reference::Imode(i) => row.imode == i,
            Reference::Msd(m) => row.msd_s == m,
        }
    }
}

impl FromStr for Reference {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (dim, value) = s
            .split_once('=')
            .ok_or_else(|| format!("expected <dimension>=<value>, got `{s}`"))?;
        match dim.trim() {
            "netmodel" => value.trim().parse().map(Reference::Netmodel),
            "imode" => value.trim().parse().map(Reference::Imode),
            "msd" => value
                .trim()
                .parse()
                .map(Reference::Msd)
                .map_err(|e| format!("bad msd `{value}`: {e}")),
            other => Err(format!("unknown dimension `{other}` (expected netmodel, imode or msd)")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum NormalizeError {
    #[error("no reference result for {0}")]
    MissingReference(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRow {
    pub row: ResultRow,
    /// Makespan divided by the mean reference makespan of the same group.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct GroupKey {
    graph: String,
    cluster: String,
    bandwidth: u64,
    scheduler: String,
    netmodel: Option<NetModelKind>,
    imode: Option<Imode>,
    msd: Option<u64>,
}

fn group_key(row: &ResultRow, skip: Dimension) -> GroupKey {
    GroupKey {
        graph: row.graph.clone(),
        cluster: row.cluster.clone(),
        bandwidth: row.bandwidth_mibs.to_bits(),
        scheduler: row.scheduler.clone(),
        netmodel: (skip != Dimension::Netmodel).then_some(row.netmodel),
        imode: (skip != Dimension::Imode).then_some(row.imode),
        msd: (skip != Dimension::Msd).then_some(row.msd_s.to_bits()),
    }
}

/// Scores every row against the reference rows that agree with it on all
/// coordinates except the reference dimension and the repetition.
pub fn normalize(rows: &[ResultRow], reference: &Reference) -> Result<Vec<ScoredRow>, NormalizeError> {
    let dim = reference.dimension();
    let mut sums: HashMap<GroupKey, (f64, usize)> = HashMap::new();
    for r in rows.iter().filter(|r| reference.matches(r)) {
        if let Some(m) = r.makespan_s {
            let e = sums.entry(group_key(r, dim)).or_default();
            e.0 += m;
            e.1 += 1;
        }
    }
    rows.iter()
        .map(|r| {
            let (sum, n) = sums.get(&group_key(r, dim)).copied().ok_or_else(|| {
                NormalizeError::MissingReference(format!("{} {} {} {}", r.graph, r.cluster, r.bandwidth_mibs, r.scheduler))
            })?;
            Ok(ScoredRow {
                row: r.clone(),
                score: r.makespan_s.map(|m| m / (sum / n as f64)),
            })
        })
        .collect()
}

pub fn write_scored_csv<W: Write>(rows: &[ScoredRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(',').chain(["score"]))?;
    for r in rows {
        w.serialize((&r.row, r.score))?;
    }
    w.flush()?;
    Ok(())
}
