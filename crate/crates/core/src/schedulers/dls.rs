//! Dynamic level scheduling, computed once as a static map.
//!
//! Each step places the (ready task, worker) pair with the highest
//! `b-level - EST`.

use super::list::ReadyList;
use super::{choose_min_by, Assignment, Estimator, Scheduler, SchedulerUpdate};
use crate::cluster::WorkerId;
use crate::simulator::SchedulerView;
use crate::taskgraph::TaskId;
use crate::SimRng;

#[derive(Debug, Clone, Default)]
pub struct DlsScheduler {
    done: bool,
}

/// Candidate (task, worker) pairs of the ready list with their EST.
/// Data-ready times are fixed once a task is ready, so they are cached.
pub(crate) struct PairTable {
    data_ready: Vec<Vec<f64>>,
}

impl PairTable {
    pub(crate) fn new(tasks: usize) -> Self {
        PairTable {
            data_ready: vec![Vec::new(); tasks],
        }
    }

    pub(crate) fn add(&mut self, view: &SchedulerView<'_>, est: &Estimator, t: TaskId) {
        self.data_ready[t.idx()] = view.workers().map(|w| est.data_ready(view, t, w)).collect();
    }

    pub(crate) fn pairs<'a>(
        &'a self,
        view: &'a SchedulerView<'_>,
        est: &'a Estimator,
        ready: &'a ReadyList,
    ) -> impl Iterator<Item = (TaskId, WorkerId, f64)> + 'a {
        ready.tasks().flat_map(move |t| {
            let cores = view.cores(t);
            view.workers().filter_map(move |w| {
                let free = est.cores_free_at(w, cores)?;
                Some((t, w, free.max(self.data_ready[t.idx()][w.idx()])))
            })
        })
    }
}

/// Shared driver of the pairwise greedy schedulers: repeatedly picks the
/// pair minimising `key(task, est)` and places it.
pub(crate) fn pairwise_schedule<K: PartialOrd>(
    view: &SchedulerView<'_>,
    rng: &mut SimRng,
    mut key: impl FnMut(TaskId, f64) -> K,
) -> Vec<Assignment> {
    let n = view.task_count();
    let order: Vec<TaskId> = view.task_ids().collect();
    let mut ready = ReadyList::new(view, &order);
    let mut est = Estimator::new(view);
    let mut table = PairTable::new(n);
    for t in ready.tasks().collect::<Vec<_>>() {
        table.add(view, &est, t);
    }
    let mut out = Vec::with_capacity(n);
    while !ready.is_empty() {
        let pairs: Vec<(TaskId, WorkerId, f64)> = table.pairs(view, &est, &ready).collect();
        let (t, w, start) =
            choose_min_by(pairs, rng, |(t, _, start)| key(t, start)).expect("ready tasks have a feasible worker");
        est.place_at(view, t, w, start);
        out.push(Assignment::new(t, w, (n - 1 - out.len()) as i64));
        for s in ready.placed(view, t) {
            table.add(view, &est, s);
        }
    }
    out
}

impl Scheduler for DlsScheduler {
    fn name(&self) -> &str {
        "dls"
    }

    fn schedule(&mut self, view: &SchedulerView<'_>, _: &SchedulerUpdate, rng: &mut SimRng) -> Vec<Assignment> {
        if std::mem::replace(&mut self.done, true) {
            return Vec::new();
        }
        let b = view.b_level();
        // Negated dynamic level.
        pairwise_schedule(view, rng, |t, start| start - b[t.idx()])
    }
}
