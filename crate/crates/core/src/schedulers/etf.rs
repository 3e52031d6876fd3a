//! Earliest time first: the (ready task, worker) pair that can start
//! soonest, higher b-level on equal start times.

use super::dls::pairwise_schedule;
use super::{Assignment, Scheduler, SchedulerUpdate};
use crate::simulator::SchedulerView;
use crate::SimRng;

#[derive(Debug, Clone, Default)]
pub struct EtfScheduler {
    done: bool,
}

impl Scheduler for EtfScheduler {
    fn name(&self) -> &str {
        "etf"
    }

    fn schedule(&mut self, view: &SchedulerView<'_>, _: &SchedulerUpdate, rng: &mut SimRng) -> Vec<Assignment> {
        if std::mem::replace(&mut self.done, true) {
            return Vec::new();
        }
        let b = view.b_level();
        pairwise_schedule(view, rng, |t, start| (start, -b[t.idx()]))
    }
}
