//! Global schedulers.
//!
//! A scheduler sees the run only through [`SchedulerView`] and answers each
//! invocation with assignments. Static schedulers return the whole map on
//! the first call; dynamic ones react to the updates they are given.
//! Whenever a decision cannot be told apart otherwise, the seeded RNG picks.

mod dls;
mod estimator;
mod etf;
mod genetic;
mod gt;
mod list;
mod simple;
mod ws;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::cluster::WorkerId;
use crate::simulator::{RejectReason, SchedulerView};
use crate::taskgraph::TaskId;
use crate::SimRng;

pub use dls::DlsScheduler;
pub use estimator::Estimator;
pub use etf::EtfScheduler;
pub use genetic::{GeneticParams, GeneticScheduler};
pub use gt::GreedyTransferScheduler;
pub use list::{ListKey, ListScheduler};
pub use simple::{RandomScheduler, SingleScheduler};
pub use ws::WorkStealingScheduler;

/// Place `task` on `worker`, with w-scheduler hints `blocking <= priority`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub task: TaskId,
    pub worker: WorkerId,
    pub priority: i64,
    pub blocking: i64,
}

impl Assignment {
    pub fn new(task: TaskId, worker: WorkerId, priority: i64) -> Self {
        Assignment {
            task,
            worker,
            priority,
            blocking: priority,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rejection {
    pub task: TaskId,
    pub worker: WorkerId,
    pub reason: RejectReason,
}

/// What happened since the previous invocation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SchedulerUpdate {
    pub finished: Vec<(TaskId, WorkerId)>,
    pub started: Vec<(TaskId, WorkerId)>,
    pub rejected: Vec<Rejection>,
}

impl SchedulerUpdate {
    pub fn is_empty(&self) -> bool {
        self.finished.is_empty() && self.started.is_empty() && self.rejected.is_empty()
    }
}

pub trait Scheduler: Send {
    fn name(&self) -> &str;

    /// Called once, before the first [`Scheduler::schedule`].
    fn init(&mut self, _view: &SchedulerView<'_>, _rng: &mut SimRng) {}

    fn schedule(&mut self, view: &SchedulerView<'_>, update: &SchedulerUpdate, rng: &mut SimRng) -> Vec<Assignment>;
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown scheduler `{0}`")]
pub struct UnknownScheduler(pub String);

pub const SCHEDULER_NAMES: [&str; 12] = [
    "blevel",
    "blevel-gt",
    "tlevel",
    "tlevel-gt",
    "dls",
    "mcp",
    "mcp-gt",
    "etf",
    "genetic",
    "ws",
    "single",
    "random",
];

/// Schedulers that ignore the seed; the harness runs them once per configuration.
pub fn is_deterministic(name: &str) -> bool {
    name == "single"
}

pub fn create(name: &str) -> Result<Box<dyn Scheduler>, UnknownScheduler> {
    Ok(match name {
        "blevel" => Box::new(ListScheduler::new(ListKey::BLevel)),
        "tlevel" => Box::new(ListScheduler::new(ListKey::TLevel)),
        "mcp" => Box::new(ListScheduler::new(ListKey::Alap)),
        "blevel-gt" => Box::new(GreedyTransferScheduler::new(ListKey::BLevel)),
        "tlevel-gt" => Box::new(GreedyTransferScheduler::new(ListKey::TLevel)),
        "mcp-gt" => Box::new(GreedyTransferScheduler::new(ListKey::Alap)),
        "dls" => Box::new(DlsScheduler::default()),
        "etf" => Box::new(EtfScheduler::default()),
        "genetic" => Box::new(GeneticScheduler::new(GeneticParams::default())),
        "ws" => Box::new(WorkStealingScheduler::default()),
        "single" => Box::new(SingleScheduler::default()),
        "random" => Box::new(RandomScheduler::default()),
        other => return Err(UnknownScheduler(other.to_string())),
    })
}

/// Random tie-break rank for every task: a seeded permutation.
pub(crate) fn tie_ranks(n: usize, rng: &mut SimRng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut rank = vec![0; n];
    for (r, &t) in perm.iter().enumerate() {
        rank[t] = r;
    }
    rank
}

/// Uniform choice among the candidates sharing the minimal key.
pub(crate) fn choose_min_by<T: Copy, K: PartialOrd>(
    items: impl IntoIterator<Item = T>,
    rng: &mut SimRng,
    mut key: impl FnMut(T) -> K,
) -> Option<T> {
    let mut best: Vec<T> = Vec::new();
    let mut best_key: Option<K> = None;
    for item in items {
        let k = key(item);
        match best_key.as_ref().map(|b| k.partial_cmp(b)) {
            None => {
                best_key = Some(k);
                best.push(item);
            }
            Some(Some(std::cmp::Ordering::Less)) => {
                best_key = Some(k);
                best.clear();
                best.push(item);
            }
            Some(Some(std::cmp::Ordering::Equal)) => best.push(item),
            _ => {}
        }
    }
    match best.len() {
        0 => None,
        1 => Some(best[0]),
        n => Some(best[rng.random_range(0..n)]),
    }
}

/// Task order by `key` ascending, ties broken by a seeded permutation.
pub(crate) fn order_by_key(keys: &[f64], rng: &mut SimRng) -> Vec<TaskId> {
    let ranks = tie_ranks(keys.len(), rng);
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(ranks[a].cmp(&ranks[b])));
    order.into_iter().map(|t| TaskId(t as u32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn factory_knows_every_name() {
        for name in SCHEDULER_NAMES {
            assert_eq!(create(name).unwrap().name(), name);
        }
        assert!(create("heft").is_err());
    }

    #[test]
    fn choose_min_is_uniform_over_ties() {
        let mut rng = SimRng::seed_from_u64(3);
        let mut counts = [0usize; 3];
        for _ in 0..3000 {
            let w = choose_min_by([0usize, 1, 2, 3], &mut rng, |i| if i == 3 { 1 } else { 0 }).unwrap();
            counts[w] += 1;
        }
        assert!(counts.iter().all(|&c| (850..1150).contains(&c)), "{counts:?}");
    }

    #[test]
    fn order_by_key_sorts_ascending() {
        let mut rng = SimRng::seed_from_u64(1);
        let order = order_by_key(&[3.0, 1.0, 2.0], &mut rng);
        assert_eq!(order, vec![TaskId(1), TaskId(2), TaskId(0)]);
    }
}
