//! Cluster description: workers, their cores, and the network bandwidth.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WorkerId(pub u32);

impl WorkerId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for WorkerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{}", self.0)
    }
}

pub const MIB: f64 = 1024.0 * 1024.0;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClusterError {
    #[error("cluster `{0}` does not match the WxC pattern")]
    Format(String),
    #[error("cluster `{0}` has zero workers or zero cores")]
    ZeroValue(String),
}

/// `w` workers with `c` cores each, written `WxC`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub workers: u32,
    pub cores: u32,
}

impl fmt::Display for ClusterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.workers, self.cores)
    }
}

pub fn parse_cluster(text: &str) -> Result<ClusterSpec, ClusterError> {
    let (w, c) = text
        .trim()
        .split_once(['x', 'X'])
        .ok_or_else(|| ClusterError::Format(text.to_string()))?;
    let parse = |s: &str| -> Result<u32, ClusterError> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ClusterError::Format(text.to_string()));
        }
        s.parse().map_err(|_| ClusterError::Format(text.to_string()))
    };
    let spec = ClusterSpec {
        workers: parse(w)?,
        cores: parse(c)?,
    };
    if spec.workers == 0 || spec.cores == 0 {
        return Err(ClusterError::ZeroValue(text.to_string()));
    }
    Ok(spec)
}

impl FromStr for ClusterSpec {
    type Err = ClusterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_cluster(s)
    }
}

/// Concrete set of workers. Bandwidth is the per-worker upload and download
/// cap in bytes per second.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    cores: Vec<u32>,
    pub bandwidth: f64,
}

impl Cluster {
    pub fn new(cores: Vec<u32>, bandwidth: f64) -> Self {
        assert!(!cores.is_empty(), "cluster needs at least one worker");
        assert!(cores.iter().all(|&c| c > 0), "workers need at least one core");
        assert!(bandwidth > 0.0, "bandwidth must be positive");
        Cluster { cores, bandwidth }
    }

    pub fn uniform(spec: ClusterSpec, bandwidth: f64) -> Self {
        Self::new(vec![spec.cores; spec.workers as usize], bandwidth)
    }

    /// Concatenation of several uniform groups, e.g. `16x8` followed by `32x4`.
    pub fn mixed(specs: &[ClusterSpec], bandwidth: f64) -> Self {
        let cores = specs
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.cores, s.workers as usize))
            .collect();
        Self::new(cores, bandwidth)
    }

    pub fn worker_count(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self, w: WorkerId) -> u32 {
        self.cores[w.idx()]
    }

    pub fn worker_cores(&self) -> &[u32] {
        &self.cores
    }

    pub fn total_cores(&self) -> u64 {
        self.cores.iter().map(|&c| c as u64).sum()
    }

    pub fn max_cores(&self) -> u32 {
        self.cores.iter().copied().max().unwrap_or(0)
    }

    pub fn workers(&self) -> impl ExactSizeIterator<Item = WorkerId> {
        (0..self.cores.len() as u32).map(WorkerId)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        assert_eq!(parse_cluster("32x4"), Ok(ClusterSpec { workers: 32, cores: 4 }));
        assert_eq!(parse_cluster("16x8"), Ok(ClusterSpec { workers: 16, cores: 8 }));
        assert_eq!(parse_cluster("0x4"), Err(ClusterError::ZeroValue("0x4".into())));
        assert_eq!(parse_cluster("4x0"), Err(ClusterError::ZeroValue("4x0".into())));
        assert!(matches!(parse_cluster("32"), Err(ClusterError::Format(_))));
        assert!(matches!(parse_cluster("ax4"), Err(ClusterError::Format(_))));
        assert!(matches!(parse_cluster("-1x4"), Err(ClusterError::Format(_))));
    }

    #[test]
    fn display_round_trip() {
        let spec = parse_cluster("8x4").unwrap();
        assert_eq!(spec.to_string(), "8x4");
    }

    #[test]
    fn mixed_cluster() {
        let c = Cluster::mixed(&[parse_cluster("2x8").unwrap(), parse_cluster("3x4").unwrap()], MIB);
        assert_eq!(c.worker_cores(), &[8, 8, 4, 4, 4]);
        assert_eq!(c.total_cores(), 28);
        assert_eq!(c.max_cores(), 8);
    }
}
