//! Configuration sweeps and result tables.

mod normalize;

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{Cluster, ClusterError, MIB};
use crate::graphgen::{self, GenError, GeneratorSpec};
use crate::netmodel::NetModelKind;
use crate::schedulers::{self, UnknownScheduler};
use crate::simulator::{self, Imode, SimConfig};
use crate::taskgraph::{GraphError, TaskGraph};

pub use crate::cluster::{parse_cluster, ClusterSpec};
pub use normalize::{normalize, write_scored_csv, Dimension, NormalizeError, Reference, ScoredRow};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    UnknownScheduler(#[from] UnknownScheduler),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Generator(#[from] GenError),
    #[error("cannot load graph {path}: {source}")]
    GraphFile { path: PathBuf, source: GraphError },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Csv(csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("i/o error")]
    Io(#[from] std::io::Error),
}

// Keep I/O failures as `Io` so callers can inspect them (e.g. a closed pipe).
impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        if !e.is_io_error() {
            return BenchError::Csv(e);
        }
        match e.into_kind() {
            csv::ErrorKind::Io(io) => BenchError::Io(io),
            _ => unreachable!("checked by is_io_error"),
        }
    }
}

/// A graph in a plan: either generated or read from a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    Generated(GeneratorSpec),
    File {
        file: PathBuf,
        #[serde(default)]
        name: Option<String>,
    },
}

impl GraphSource {
    pub fn generator(name: &str) -> Self {
        GraphSource::Generated(GeneratorSpec::new(name, 0))
    }

    /// Relative file paths are resolved against `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<TaskGraph, BenchError> {
        match self {
            GraphSource::Generated(spec) => Ok(graphgen::generate(spec)?),
            GraphSource::File { file, name } => {
                let path = match base {
                    Some(b) if file.is_relative() => b.join(file),
                    _ => file.clone(),
                };
                let mut g = graphgen::load(&path).map_err(|source| BenchError::GraphFile {
                    path: path.clone(),
                    source,
                })?;
                let mut meta = g.meta().clone();
                if let Some(n) = name {
                    meta.name = Some(n.clone());
                }
                if meta.name.is_none() {
                    meta.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
                }
                g.set_meta(meta);
                Ok(g)
            }
        }
    }
}

fn default_netmodels() -> Vec<NetModelKind> {
    vec![NetModelKind::MaxMin]
}

fn default_imodes() -> Vec<Imode> {
    vec![Imode::Exact]
}

fn default_msds() -> Vec<f64> {
    vec![0.1]
}

fn one() -> usize {
    1
}

/// Sweep description. Bandwidths are in MiB/s, MSDs in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPlan {
    pub graphs: Vec<GraphSource>,
    pub clusters: Vec<String>,
    pub bandwidths_mibs: Vec<f64>,
    pub schedulers: Vec<String>,
    #[serde(default = "default_netmodels")]
    pub netmodels: Vec<NetModelKind>,
    #[serde(default = "default_imodes")]
    pub imodes: Vec<Imode>,
    #[serde(default = "default_msds")]
    pub msds_s: Vec<f64>,
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    /// Decision latency override; by default 0.05 s when the MSD is non-zero.
    #[serde(default)]
    pub latency_s: Option<f64>,
    /// Measure wall-clock time per row; otherwise `wall_ms` is written as 0
    /// so that output is reproducible byte for byte.
    #[serde(default)]
    pub record_wall_time: bool,
}

pub const DEFAULT_CLUSTERS: [&str; 5] = ["8x4", "16x4", "32x4", "16x8", "32x16"];
pub const DEFAULT_BANDWIDTHS_MIBS: [f64; 4] = [32.0, 256.0, 2048.0, 8192.0];
pub const MSD_SWEEP_S: [f64; 5] = [0.0, 0.1, 0.4, 1.6, 6.4];

impl BenchPlan {
    /// The full sweep: every scheduler, cluster and bandwidth, 20 repetitions.
    pub fn full(graphs: Vec<GraphSource>) -> Self {
        BenchPlan {
            graphs,
            clusters: DEFAULT_CLUSTERS.iter().map(|s| s.to_string()).collect(),
            bandwidths_mibs: DEFAULT_BANDWIDTHS_MIBS.to_vec(),
            schedulers: schedulers::SCHEDULER_NAMES.iter().map(|s| s.to_string()).collect(),
            netmodels: default_netmodels(),
            imodes: default_imodes(),
            msds_s: default_msds(),
            repetitions: 20,
            seed: 0,
            latency_s: None,
            record_wall_time: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<Vec<ClusterSpec>, BenchError> {
        if self.repetitions == 0 {
            return Err(BenchError::InvalidPlan("repetitions must be at least 1".into()));
        }
        for s in &self.schedulers {
            schedulers::create(s)?;
        }
        if let Some(b) = self.bandwidths_mibs.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(BenchError::InvalidPlan(format!("bandwidth {b} MiB/s is not positive")));
        }
        if let Some(m) = self.msds_s.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(BenchError::InvalidPlan(format!("msd {m} s is negative")));
        }
        if self.latency_s.is_some_and(|l| !(l.is_finite() && l >= 0.0)) {
            return Err(BenchError::InvalidPlan("latency must be non-negative".into()));
        }
        Ok(self.clusters.iter().map(|c| parse_cluster(c)).collect::<Result<_, _>>()?)
    }
}

/// One simulation's coordinates and outcome. Outcome fields are empty when
/// the simulation failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub graph: String,
    pub dataset: String,
    pub cluster: String,
    pub bandwidth_mibs: f64,
    pub netmodel: NetModelKind,
    pub imode: Imode,
    pub msd_s: f64,
    pub scheduler: String,
    pub rep: usize,
    pub makespan_s: Option<f64>,
    pub transferred_mib: Option<f64>,
    pub wall_ms: Option<f64>,
}

pub const CSV_HEADER: &str =
    "graph,dataset,cluster,bandwidth_mibs,netmodel,imode,msd_s,scheduler,rep,makespan_s,transferred_mib,wall_ms";

/// Seed of one repetition, derived from the master seed and the coordinates
/// that the schedulers' random choices should depend on. Netmodel, imode and
/// MSD are left out so that comparisons along those axes share seeds.
pub fn child_seed(master: u64, graph: &str, cluster: &str, bandwidth_mibs: f64, scheduler: &str, rep: usize) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = FNV_OFFSET;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
        h ^= 0xff;
        h = h.wrapping_mul(FNV_PRIME);
    };
    feed(&master.to_le_bytes());
    feed(graph.as_bytes());
    feed(cluster.as_bytes());
    feed(&bandwidth_mibs.to_bits().to_le_bytes());
    feed(scheduler.as_bytes());
    feed(&(rep as u64).to_le_bytes());
    splitmix64(h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
struct Job {
    graph: usize,
    cluster: ClusterSpec,
    bandwidth_mibs: f64,
    netmodel: NetModelKind,
    imode: Imode,
    msd: f64,
    scheduler: String,
    rep: usize,
}

/// Runs every configuration of `plan`. Rows come out in plan order
/// regardless of how the work is spread over threads. `base` resolves
/// relative graph paths.
pub fn run_plan(plan: &BenchPlan, base: Option<&Path>) -> Result<Vec<ResultRow>, BenchError> {
    let clusters = plan.validate()?;
    let graphs: Vec<TaskGraph> = plan.graphs.iter().map(|g| g.load(base)).collect::<Result<_, _>>()?;

    let mut jobs = Vec::new();
    for (gi, _) in graphs.iter().enumerate() {
        for &cluster in &clusters {
            for &bandwidth_mibs in &plan.bandwidths_mibs {
                for &netmodel in &plan.netmodels {
                    for &imode in &plan.imodes {
                        for &msd in &plan.msds_s {
                            for scheduler in &plan.schedulers {
                                let reps = if schedulers::is_deterministic(scheduler) {
                                    1
                                } else {
                                    plan.repetitions
                                };
                                for rep in 0..reps {
                                    jobs.push(Job {
                                        graph: gi,
                                        cluster,
                                        bandwidth_mibs,
                                        netmodel,
                                        imode,
                                        msd,
                                        scheduler: scheduler.clone(),
                                        rep,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    log::info!("running {} simulations", jobs.len());

    Ok(jobs.par_iter().map(|job| run_job(plan, &graphs[job.graph], job)).collect())
}

fn run_job(plan: &BenchPlan, graph: &TaskGraph, job: &Job) -> ResultRow {
    let meta = graph.meta();
    let graph_name = meta.name.clone().unwrap_or_default();
    let cluster_name = job.cluster.to_string();
    let mut row = ResultRow {
        graph: graph_name.clone(),
        dataset: meta.dataset.clone().unwrap_or_default(),
        cluster: cluster_name.clone(),
        bandwidth_mibs: job.bandwidth_mibs,
        netmodel: job.netmodel,
        imode: job.imode,
        msd_s: job.msd,
        scheduler: job.scheduler.clone(),
        rep: job.rep,
        makespan_s: None,
        transferred_mib: None,
        wall_ms: None,
    };
    let config = SimConfig {
        netmodel: job.netmodel,
        imode: job.imode,
        msd: job.msd,
        decision_latency: plan.latency_s.unwrap_or_else(|| SimConfig::default_latency(job.msd)),
        seed: child_seed(plan.seed, &graph_name, &cluster_name, job.bandwidth_mibs, &job.scheduler, job.rep),
        ..SimConfig::default()
    };
    let cluster = Cluster::uniform(job.cluster, job.bandwidth_mibs * MIB);
    let mut scheduler = schedulers::create(&job.scheduler).expect("validated scheduler name");
    let started = Instant::now();
    match simulator::run(graph, &cluster, scheduler.as_mut(), &config) {
        Ok(r) => {
            row.makespan_s = Some(r.makespan);
            row.transferred_mib = Some(r.transferred_bytes as f64 / MIB);
            row.wall_ms = Some(if plan.record_wall_time {
                started.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            });
        }
        Err(e) => log::warn!(
            "{} {} {} {} rep {}: {e}",
            row.graph,
            row.cluster,
            row.bandwidth_mibs,
            row.scheduler,
            row.rep
        ),
    }
    row
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>, BenchError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}
