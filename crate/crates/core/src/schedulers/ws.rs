//! Work stealing.
//!
//! A task is assigned once it becomes ready, to the worker where the fewest
//! bytes must be transferred (then the least loaded one). A worker with an
//! idle core and nothing pending steals half of the pending tasks of the
//! worker with the most pending work.

use super::{choose_min_by, Assignment, RejectReason, Scheduler, SchedulerUpdate};
use crate::cluster::WorkerId;
use crate::simulator::{SchedulerView, TaskState};
use crate::taskgraph::TaskId;
use crate::SimRng;

#[derive(Debug, Clone, Default)]
pub struct WorkStealingScheduler {
    /// Where each task was last sent.
    placed: Vec<Option<WorkerId>>,
    /// Assigned but, as far as we know, not started. Oldest first.
    pending: Vec<Vec<TaskId>>,
    steals: usize,
}

impl WorkStealingScheduler {
    pub fn steals(&self) -> usize {
        self.steals
    }

    fn pending_work(&self, view: &SchedulerView<'_>, w: WorkerId) -> f64 {
        self.pending[w.idx()].iter().map(|t| view.duration(*t)).sum()
    }

    fn forget_pending(&mut self, t: TaskId) {
        if let Some(w) = self.placed[t.idx()] {
            self.pending[w.idx()].retain(|x| *x != t);
        }
    }
}

impl Scheduler for WorkStealingScheduler {
    fn name(&self) -> &str {
        "ws"
    }

    fn init(&mut self, view: &SchedulerView<'_>, _: &mut SimRng) {
        self.placed = vec![None; view.task_count()];
        self.pending = vec![Vec::new(); view.worker_count()];
    }

    fn schedule(&mut self, view: &SchedulerView<'_>, update: &SchedulerUpdate, rng: &mut SimRng) -> Vec<Assignment> {
        for &(t, _) in &update.started {
            self.forget_pending(t);
        }
        for r in &update.rejected {
            // A steal that came too late: the task already ran where it was.
            if matches!(r.reason, RejectReason::Running | RejectReason::Finished) {
                self.forget_pending(r.task);
                self.placed[r.task.idx()] = view.state(r.task).worker();
            }
        }
        for t in view.task_ids() {
            if let TaskState::Running(w) | TaskState::Finished(w) = view.state(t) {
                if self.placed[t.idx()] != Some(w) {
                    self.forget_pending(t);
                    self.placed[t.idx()] = Some(w);
                }
            }
        }

        let mut out = Vec::new();
        for t in view.task_ids() {
            if self.placed[t.idx()].is_some() || !view.is_ready(t) {
                continue;
            }
            let cores = view.cores(t);
            let candidates = view.workers().filter(|w| view.worker_cores(*w) >= cores);
            let w = choose_min_by(candidates, rng, |w| {
                (view.transfer_bytes(t, w), self.pending[w.idx()].len())
            })
            .expect("some worker has enough cores");
            self.placed[t.idx()] = Some(w);
            self.pending[w.idx()].push(t);
            out.push(Assignment::new(t, w, 0));
        }

        for thief in view.workers() {
            if view.free_cores(thief) == 0 || !self.pending[thief.idx()].is_empty() {
                continue;
            }
            let victim = choose_min_by(
                view.workers().filter(|v| *v != thief && self.pending[v.idx()].len() >= 2),
                rng,
                |v| -self.pending_work(view, v),
            );
            let Some(victim) = victim else { continue };
            let portion = self.pending[victim.idx()].len() / 2;
            let capacity = view.worker_cores(thief);
            let mut stolen = Vec::new();
            let queue = &mut self.pending[victim.idx()];
            let mut i = queue.len();
            while stolen.len() < portion && i > 0 {
                i -= 1;
                if view.cores(queue[i]) <= capacity {
                    stolen.push(queue.remove(i));
                }
            }
            for t in stolen.into_iter().rev() {
                self.placed[t.idx()] = Some(thief);
                self.pending[thief.idx()].push(t);
                self.steals += 1;
                out.push(Assignment::new(t, thief, 0));
            }
        }
        out
    }
}
