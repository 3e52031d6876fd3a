//! Earliest-start-time estimation shared by the static schedulers.
//!
//! Every worker keeps the time at which each of its cores becomes free. A task
//! needing `k` cores starts once its data is ready and `k` cores are free; it
//! then occupies the `k` earliest-free cores. Inputs produced elsewhere arrive
//! `size / bandwidth` after their producer finishes, all in parallel and with
//! no contention. Only values visible through the view are used.

use crate::cluster::WorkerId;
use crate::simulator::SchedulerView;
use crate::taskgraph::TaskId;

#[derive(Debug, Clone)]
pub struct Estimator {
    start_time: f64,
    /// Per worker, ascending free time of each core.
    core_free: Vec<Vec<f64>>,
    placement: Vec<Option<WorkerId>>,
    finish: Vec<f64>,
}

impl Estimator {
    pub fn new(view: &SchedulerView<'_>) -> Self {
        let now = view.now();
        Estimator {
            start_time: now,
            core_free: view
                .workers()
                .map(|w| vec![now; view.worker_cores(w) as usize])
                .collect(),
            placement: vec![None; view.task_count()],
            finish: vec![0.0; view.task_count()],
        }
    }

    /// Forgets all placements.
    pub fn reset(&mut self) {
        for cores in &mut self.core_free {
            cores.fill(self.start_time);
        }
        self.placement.fill(None);
        self.finish.fill(0.0);
    }

    pub fn placement(&self, t: TaskId) -> Option<WorkerId> {
        self.placement[t.idx()]
    }

    pub fn finish_time(&self, t: TaskId) -> f64 {
        self.finish[t.idx()]
    }

    /// Latest estimated finish over all placed tasks.
    pub fn makespan(&self) -> f64 {
        self.placement
            .iter()
            .zip(&self.finish)
            .filter(|(p, _)| p.is_some())
            .map(|(_, f)| *f)
            .fold(self.start_time, f64::max)
    }

    /// Time at which every input of `t` could be present on `w`.
    /// Inputs whose producer is not placed yet are ignored.
    pub fn data_ready(&self, view: &SchedulerView<'_>, t: TaskId, w: WorkerId) -> f64 {
        let bandwidth = view.bandwidth();
        let mut ready = self.start_time;
        for &o in view.inputs(t) {
            let p = view.producer(o);
            if let Some(pw) = self.placement[p.idx()] {
                let mut at = self.finish[p.idx()];
                if pw != w {
                    at += view.size(o) / bandwidth;
                }
                ready = ready.max(at);
            }
        }
        ready
    }

    /// When `cores` cores of `w` are free at the same time.
    /// `None` if the worker has fewer cores.
    pub fn cores_free_at(&self, w: WorkerId, cores: u32) -> Option<f64> {
        self.core_free[w.idx()].get(cores as usize - 1).copied()
    }

    pub fn est(&self, view: &SchedulerView<'_>, t: TaskId, w: WorkerId) -> Option<f64> {
        let cores = self.cores_free_at(w, view.cores(t))?;
        Some(cores.max(self.data_ready(view, t, w)))
    }

    /// Commits `t` to `w` starting at `start`; returns the estimated finish.
    pub fn place_at(&mut self, view: &SchedulerView<'_>, t: TaskId, w: WorkerId, start: f64) -> f64 {
        let finish = start + view.duration(t);
        let k = view.cores(t) as usize;
        let cores = &mut self.core_free[w.idx()];
        for c in cores.iter_mut().take(k) {
            *c = finish;
        }
        cores.sort_by(f64::total_cmp);
        self.placement[t.idx()] = Some(w);
        self.finish[t.idx()] = finish;
        finish
    }

    /// Places `t` on `w` at its earliest start; returns `(start, finish)`.
    pub fn place(&mut self, view: &SchedulerView<'_>, t: TaskId, w: WorkerId) -> (f64, f64) {
        let start = self
            .est(view, t, w)
            .expect("task placed on a worker with too few cores");
        (start, self.place_at(view, t, w, start))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{Cluster, MIB};
    use crate::simulator::{Estimates, Imode, InitialState};
    use crate::taskgraph::graph_from_spec;

    #[test]
    fn transfer_and_core_availability() {
        let g = graph_from_spec(&[
            ("a", 2.0, &[], &[("x", (3.0 * MIB) as u64)]),
            ("b", 1.0, &["x"], &[]),
            ("c", 5.0, &[], &[]),
        ])
        .unwrap();
        let cl = Cluster::new(vec![1, 1], MIB);
        let est = Estimates::new(&g, Imode::Exact);
        let init = InitialState::new(&g, &cl);
        let v = SchedulerView::initial(&g, &cl, Imode::Exact, &est, &init);
        let mut e = Estimator::new(&v);
        assert_eq!(e.place(&v, TaskId(0), WorkerId(0)), (0.0, 2.0));
        assert_eq!(e.est(&v, TaskId(1), WorkerId(0)), Some(2.0));
        assert_eq!(e.est(&v, TaskId(1), WorkerId(1)), Some(5.0));
        e.place(&v, TaskId(2), WorkerId(0));
        assert_eq!(e.est(&v, TaskId(1), WorkerId(0)), Some(7.0));
        assert_eq!(e.makespan(), 7.0);
        e.reset();
        assert_eq!(e.makespan(), 0.0);
    }

    #[test]
    fn multi_core_task_waits_for_enough_cores() {
        let mut b = crate::taskgraph::GraphBuilder::new();
        b.task_full(3.0, None, 1);
        b.task_full(1.0, None, 1);
        b.task_full(2.0, None, 2);
        let g = b.build().unwrap();
        let cl = Cluster::new(vec![2], MIB);
        let est = Estimates::new(&g, Imode::Exact);
        let init = InitialState::new(&g, &cl);
        let v = SchedulerView::initial(&g, &cl, Imode::Exact, &est, &init);
        let mut e = Estimator::new(&v);
        e.place(&v, TaskId(0), WorkerId(0));
        e.place(&v, TaskId(1), WorkerId(0));
        assert_eq!(e.est(&v, TaskId(2), WorkerId(0)), Some(3.0));
        assert_eq!(e.cores_free_at(WorkerId(0), 3), None);
    }
}
