//! Static list scheduling: blevel, tlevel and mcp.

use std::collections::BTreeSet;

use super::{choose_min_by, order_by_key, Assignment, Estimator, Scheduler, SchedulerUpdate};
use crate::simulator::SchedulerView;
use crate::taskgraph::TaskId;
use crate::SimRng;

/// Task ordering key of a list scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ListKey {
    /// Decreasing b-level.
    BLevel,
    /// Increasing t-level.
    TLevel,
    /// Increasing ALAP time.
    Alap,
}

impl ListKey {
    pub fn name(self) -> &'static str {
        match self {
            ListKey::BLevel => "blevel",
            ListKey::TLevel => "tlevel",
            ListKey::Alap => "mcp",
        }
    }

    /// Per-task sort values; smaller comes first.
    pub fn values(self, view: &SchedulerView<'_>) -> Vec<f64> {
        match self {
            ListKey::BLevel => view.b_level().into_iter().map(|b| -b).collect(),
            ListKey::TLevel => view.t_level(),
            ListKey::Alap => view.alap(),
        }
    }

    /// Full task order by this key, seeded ties.
    pub fn order(self, view: &SchedulerView<'_>, rng: &mut SimRng) -> Vec<TaskId> {
        order_by_key(&self.values(view), rng)
    }
}

/// Tasks whose predecessors have all been placed, served in a fixed order.
#[derive(Debug, Clone)]
pub(crate) struct ReadyList {
    position: Vec<usize>,
    unplaced_preds: Vec<usize>,
    ready: BTreeSet<(usize, TaskId)>,
}

impl ReadyList {
    pub(crate) fn new(view: &SchedulerView<'_>, order: &[TaskId]) -> Self {
        let mut position = vec![0; order.len()];
        for (i, t) in order.iter().enumerate() {
            position[t.idx()] = i;
        }
        let unplaced_preds: Vec<usize> = view.task_ids().map(|t| view.predecessors(t).len()).collect();
        let ready = view
            .task_ids()
            .filter(|t| unplaced_preds[t.idx()] == 0)
            .map(|t| (position[t.idx()], t))
            .collect();
        ReadyList {
            position,
            unplaced_preds,
            ready,
        }
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.ready.is_empty()
    }

    pub(crate) fn tasks(&self) -> impl Iterator<Item = TaskId> + '_ {
        self.ready.iter().map(|(_, t)| *t)
    }

    pub(crate) fn pop_first(&mut self) -> Option<TaskId> {
        self.ready.pop_first().map(|(_, t)| t)
    }

    /// Removes `t` and releases its successors. Returns newly ready tasks.
    pub(crate) fn placed(&mut self, view: &SchedulerView<'_>, t: TaskId) -> Vec<TaskId> {
        self.ready.remove(&(self.position[t.idx()], t));
        let mut released = Vec::new();
        for &s in view.successors(t) {
            self.unplaced_preds[s.idx()] -= 1;
            if self.unplaced_preds[s.idx()] == 0 {
                self.ready.insert((self.position[s.idx()], s));
                released.push(s);
            }
        }
        released
    }
}

/// Walks `order` (respecting precedence) and puts each task on the worker
/// where it can start earliest. Priorities are reverse ranks.
pub(crate) fn list_schedule(view: &SchedulerView<'_>, order: &[TaskId], rng: &mut SimRng) -> Vec<Assignment> {
    let n = order.len();
    let mut ready = ReadyList::new(view, order);
    let mut est = Estimator::new(view);
    let mut out = Vec::with_capacity(n);
    while let Some(t) = ready.pop_first() {
        let cores = view.cores(t);
        let w = choose_min_by(view.workers().filter(|w| view.worker_cores(*w) >= cores), rng, |w| {
            est.est(view, t, w).expect("filtered by cores")
        })
        .expect("some worker has enough cores");
        est.place(view, t, w);
        out.push(Assignment::new(t, w, (n - 1 - out.len()) as i64));
        ready.placed(view, t);
    }
    out
}

#[derive(Debug, Clone)]
pub struct ListScheduler {
    key: ListKey,
    done: bool,
}

impl ListScheduler {
    pub fn new(key: ListKey) -> Self {
        ListScheduler { key, done: false }
    }
}

impl Scheduler for ListScheduler {
    fn name(&self) -> &str {
        self.key.name()
    }

    fn schedule(&mut self, view: &SchedulerView<'_>, _: &SchedulerUpdate, rng: &mut SimRng) -> Vec<Assignment> {
        if std::mem::replace(&mut self.done, true) {
            return Vec::new();
        }
        let order = self.key.order(view, rng);
        list_schedule(view, &order, rng)
    }
}
