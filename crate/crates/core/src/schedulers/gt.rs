//! Greedy-transfer list scheduling (`blevel-gt`, `tlevel-gt`, `mcp-gt`).
//!
//! Ready tasks are taken in the static key order and only placed where
//! enough cores are free, on the worker needing the fewest transferred
//! bytes. When a task needing `c` cores does not fit anywhere, later tasks
//! may only use workers with fewer than `c` cores.

use super::{choose_min_by, Assignment, ListKey, Scheduler, SchedulerUpdate};
use crate::cluster::WorkerId;
use crate::simulator::SchedulerView;
use crate::taskgraph::TaskId;
use crate::SimRng;

#[derive(Debug, Clone)]
pub struct GreedyTransferScheduler {
    key: ListKey,
    name: String,
    /// Position of each task in the static order.
    position: Vec<usize>,
    order: Vec<TaskId>,
    placed: Vec<Option<WorkerId>>,
    /// Cores of each worker not claimed by this scheduler's unfinished tasks.
    free: Vec<u32>,
    restricted_placements: usize,
}

impl GreedyTransferScheduler {
    pub fn new(key: ListKey) -> Self {
        GreedyTransferScheduler {
            key,
            name: format!("{}-gt", key.name()),
            position: Vec::new(),
            order: Vec::new(),
            placed: Vec::new(),
            free: Vec::new(),
            restricted_placements: 0,
        }
    }

    /// Placements made while an earlier task was blocked.
    pub fn restricted_placements(&self) -> usize {
        self.restricted_placements
    }
}

impl Scheduler for GreedyTransferScheduler {
    fn name(&self) -> &str {
        &self.name
    }

    fn init(&mut self, view: &SchedulerView<'_>, rng: &mut SimRng) {
        self.order = self.key.order(view, rng);
        self.position = vec![0; self.order.len()];
        for (i, t) in self.order.iter().enumerate() {
            self.position[t.idx()] = i;
        }
        self.placed = vec![None; view.task_count()];
        self.free = view.workers().map(|w| view.worker_cores(w)).collect();
    }

    fn schedule(&mut self, view: &SchedulerView<'_>, update: &SchedulerUpdate, rng: &mut SimRng) -> Vec<Assignment> {
        for &(t, w) in &update.finished {
            if self.placed[t.idx()] == Some(w) {
                self.free[w.idx()] += view.cores(t);
            }
        }
        let n = self.order.len();
        let mut out = Vec::new();
        let mut limit: Option<u32> = None;
        for i in 0..n {
            let t = self.order[i];
            if self.placed[t.idx()].is_some() || !view.is_ready(t) {
                continue;
            }
            let cores = view.cores(t);
            let candidates = view
                .workers()
                .filter(|w| self.free[w.idx()] >= cores)
                .filter(|w| limit.is_none_or(|l| view.worker_cores(*w) < l));
            match choose_min_by(candidates, rng, |w| view.transfer_bytes(t, w)) {
                Some(w) => {
                    if limit.is_some() {
                        self.restricted_placements += 1;
                    }
                    self.free[w.idx()] -= cores;
                    self.placed[t.idx()] = Some(w);
                    out.push(Assignment::new(t, w, (n - 1 - self.position[t.idx()]) as i64));
                }
                None => {
                    limit = Some(limit.map_or(cores, |l| l.min(cores)));
                    if view.workers().all(|w| view.worker_cores(w) >= limit.unwrap_or(0)) {
                        break;
                    }
                }
            }
        }
        out
    }
}
