//! Baselines: everything on one worker, or every task on a random worker.

use rand::Rng;

use super::{choose_min_by, Assignment, Scheduler, SchedulerUpdate};
use crate::cluster::WorkerId;
use crate::simulator::SchedulerView;
use crate::SimRng;

#[derive(Debug, Clone, Default)]
pub struct SingleScheduler {
    done: bool,
}

impl Scheduler for SingleScheduler {
    fn name(&self) -> &str {
        "single"
    }

    fn schedule(&mut self, view: &SchedulerView<'_>, _: &SchedulerUpdate, rng: &mut SimRng) -> Vec<Assignment> {
        if std::mem::replace(&mut self.done, true) {
            return Vec::new();
        }
        let w = choose_min_by(view.workers(), rng, |w| std::cmp::Reverse(view.worker_cores(w)))
            .expect("cluster has a worker");
        view.task_ids().map(|t| Assignment::new(t, w, 0)).collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct RandomScheduler {
    done: bool,
}

impl Scheduler for RandomScheduler {
    fn name(&self) -> &str {
        "random"
    }

    fn schedule(&mut self, view: &SchedulerView<'_>, _: &SchedulerUpdate, rng: &mut SimRng) -> Vec<Assignment> {
        if std::mem::replace(&mut self.done, true) {
            return Vec::new();
        }
        view.task_ids()
            .map(|t| {
                let fits: Vec<WorkerId> = view.workers().filter(|w| view.worker_cores(*w) >= view.cores(t)).collect();
                Assignment::new(t, fits[rng.random_range(0..fits.len())], 0)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{Cluster, MIB};
    use crate::simulator::{Estimates, Imode, InitialState};
    use crate::taskgraph::GraphBuilder;
    use rand::SeedableRng;

    fn independent(n: usize) -> crate::taskgraph::TaskGraph {
        let mut b = GraphBuilder::new();
        for _ in 0..n {
            b.task(1.0);
        }
        b.build().unwrap()
    }

    #[test]
    fn single_picks_the_widest_worker() {
        let g = independent(5);
        let cl = Cluster::new(vec![4, 8, 4], MIB);
        let est = Estimates::new(&g, Imode::Exact);
        let init = InitialState::new(&g, &cl);
        let v = SchedulerView::initial(&g, &cl, Imode::Exact, &est, &init);
        let a = SingleScheduler::default().schedule(&v, &SchedulerUpdate::default(), &mut SimRng::seed_from_u64(9));
        assert!(a.iter().all(|a| a.worker == WorkerId(1)));
    }

    #[test]
    fn random_is_reproducible_and_uniform() {
        let g = independent(10_000);
        let cl = Cluster::new(vec![1; 4], MIB);
        let est = Estimates::new(&g, Imode::Exact);
        let init = InitialState::new(&g, &cl);
        let v = SchedulerView::initial(&g, &cl, Imode::Exact, &est, &init);
        let run = |seed| RandomScheduler::default().schedule(&v, &SchedulerUpdate::default(), &mut SimRng::seed_from_u64(seed));
        let a = run(5);
        assert_eq!(a, run(5));
        let mut counts = [0f64; 4];
        for x in &a {
            counts[x.worker.idx()] += 1.0;
        }
        // Chi-square with 3 degrees of freedom; 16.27 is the 0.999 quantile.
        let expected = 2500.0;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        assert!(chi2 < 16.27, "{counts:?}");
    }
}
