//! Bandwidth allocation for inter-worker transfers.
//!
//! Every worker has an upload cap and a download cap (full duplex, the two
//! are independent). The `maxmin` model shares those caps between concurrent
//! transfers with max-min fairness via progressive filling; the `simple`
//! model gives every transfer the full link bandwidth regardless of how many
//! others are running.
//!
//! Rates are piecewise constant between events. [`FlowState`] keeps the
//! remaining byte count of each transfer and recomputes all rates whenever a
//! transfer starts or finishes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cluster::WorkerId;

/// Remaining byte counts below this are treated as complete.
pub const BYTE_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetModelKind {
    MaxMin,
    Simple,
}

impl NetModelKind {
    pub fn name(self) -> &'static str {
        match self {
            NetModelKind::MaxMin => "maxmin",
            NetModelKind::Simple => "simple",
        }
    }
}

impl fmt::Display for NetModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NetModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "maxmin" | "max-min" => Ok(NetModelKind::MaxMin),
            "simple" => Ok(NetModelKind::Simple),
            other => Err(format!("unknown netmodel `{other}` (expected maxmin or simple)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TransferId(pub u64);

/// Endpoints of a flow, used by the allocation functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flow {
    pub source: usize,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transfer {
    pub id: TransferId,
    pub source: WorkerId,
    pub target: WorkerId,
    pub total: f64,
    pub remaining: f64,
    pub rate: f64,
}

/// Max-min fair rates for `flows` under per-worker upload and download caps.
///
/// Progressive filling: all unfrozen flows grow at the same speed; when a
/// cap saturates, every flow crossing it is frozen at its current rate.
pub fn allocate_maxmin(flows: &[Flow], upload: &[f64], download: &[f64]) -> Vec<f64> {
    let n = flows.len();
    let mut rates = vec![0.0; n];
    let mut frozen = vec![false; n];
    let workers = upload.len();
    // Resources 0..workers are uploads, workers..2*workers are downloads.
    let mut remaining: Vec<f64> = upload.iter().chain(download.iter()).copied().collect();
    let resources = |f: &Flow| [f.source, workers + f.target];

    let mut active = n;
    let mut count = vec![0usize; 2 * workers];
    while active > 0 {
        count.iter_mut().for_each(|c| *c = 0);
        for (i, f) in flows.iter().enumerate() {
            if !frozen[i] {
                for r in resources(f) {
                    count[r] += 1;
                }
            }
        }
        let delta = (0..2 * workers)
            .filter(|&r| count[r] > 0)
            .map(|r| remaining[r] / count[r] as f64)
            .fold(f64::INFINITY, f64::min)
            .max(0.0);
        let saturated: Vec<bool> = (0..2 * workers)
            .map(|r| count[r] > 0 && remaining[r] / count[r] as f64 <= delta * (1.0 + 1e-12))
            .collect();
        for (r, rem) in remaining.iter_mut().enumerate() {
            if saturated[r] {
                *rem = 0.0;
            } else {
                *rem -= delta * count[r] as f64;
            }
        }
        for (i, f) in flows.iter().enumerate() {
            if frozen[i] {
                continue;
            }
            rates[i] += delta;
            if resources(f).iter().any(|&r| saturated[r]) {
                frozen[i] = true;
                active -= 1;
            }
        }
    }
    rates
}

/// Contention-free rates: each flow runs at its link bandwidth.
pub fn allocate_simple(flows: &[Flow], upload: &[f64], download: &[f64]) -> Vec<f64> {
    flows
        .iter()
        .map(|f| upload[f.source].min(download[f.target]))
        .collect()
}

/// Active transfers plus the per-worker caps they share.
#[derive(Debug, Clone)]
pub struct FlowState {
    kind: NetModelKind,
    upload: Vec<f64>,
    download: Vec<f64>,
    transfers: BTreeMap<TransferId, Transfer>,
    now: f64,
}

impl FlowState {
    pub fn new(kind: NetModelKind, upload: Vec<f64>, download: Vec<f64>) -> Self {
        assert_eq!(upload.len(), download.len());
        assert!(upload.iter().chain(&download).all(|c| *c > 0.0), "caps must be positive");
        FlowState {
            kind,
            upload,
            download,
            transfers: BTreeMap::new(),
            now: 0.0,
        }
    }

    /// Every worker gets `bandwidth` bytes/s both up and down.
    pub fn uniform(kind: NetModelKind, workers: usize, bandwidth: f64) -> Self {
        Self::new(kind, vec![bandwidth; workers], vec![bandwidth; workers])
    }

    pub fn kind(&self) -> NetModelKind {
        self.kind
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn is_idle(&self) -> bool {
        self.transfers.is_empty()
    }

    pub fn len(&self) -> usize {
        self.transfers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transfers.is_empty()
    }

    pub fn transfers(&self) -> impl Iterator<Item = &Transfer> {
        self.transfers.values()
    }

    pub fn get(&self, id: TransferId) -> Option<&Transfer> {
        self.transfers.get(&id)
    }

    /// Moves the clock forward, draining bytes at the current rates.
    pub fn advance(&mut self, now: f64) {
        let dt = now - self.now;
        debug_assert!(dt >= 0.0, "time went backwards: {} -> {}", self.now, now);
        if dt > 0.0 {
            for t in self.transfers.values_mut() {
                t.remaining = (t.remaining - t.rate * dt).max(0.0);
            }
        }
        self.now = now;
    }

    /// Registers a new transfer at time `now` and reallocates bandwidth.
    pub fn start(&mut self, now: f64, id: TransferId, source: WorkerId, target: WorkerId, bytes: f64) {
        assert_ne!(source, target, "transfer to self");
        self.advance(now);
        self.transfers.insert(
            id,
            Transfer {
                id,
                source,
                target,
                total: bytes,
                remaining: bytes,
                rate: 0.0,
            },
        );
        self.recompute();
    }

    /// Removes a transfer at time `now` and reallocates bandwidth.
    pub fn finish(&mut self, now: f64, id: TransferId) -> Option<Transfer> {
        self.advance(now);
        let t = self.transfers.remove(&id);
        self.recompute();
        t
    }

    /// Removes every transfer whose remaining bytes are (numerically) zero.
    pub fn take_completed(&mut self) -> Vec<Transfer> {
        let done: Vec<TransferId> = self
            .transfers
            .values()
            .filter(|t| t.remaining <= BYTE_EPSILON)
            .map(|t| t.id)
            .collect();
        if done.is_empty() {
            return Vec::new();
        }
        let out = done.iter().filter_map(|id| self.transfers.remove(id)).collect();
        self.recompute();
        out
    }

    pub fn recompute(&mut self) {
        let flows: Vec<Flow> = self
            .transfers
            .values()
            .map(|t| Flow {
                source: t.source.idx(),
                target: t.target.idx(),
            })
            .collect();
        let rates = match self.kind {
            NetModelKind::MaxMin => allocate_maxmin(&flows, &self.upload, &self.download),
            NetModelKind::Simple => allocate_simple(&flows, &self.upload, &self.download),
        };
        for (t, r) in self.transfers.values_mut().zip(rates) {
            t.rate = r;
        }
    }

    /// Earliest finishing transfer at current rates and the time until it
    /// finishes. Ties go to the smaller id.
    pub fn next_completion(&self) -> Option<(TransferId, f64)> {
        let mut best: Option<(TransferId, f64)> = None;
        for t in self.transfers.values() {
            let dt = if t.remaining <= BYTE_EPSILON {
                0.0
            } else {
                t.remaining / t.rate
            };
            if best.is_none_or(|(_, b)| dt < b) {
                best = Some((t.id, dt));
            }
        }
        best
    }
}
