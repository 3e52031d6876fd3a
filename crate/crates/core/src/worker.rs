//! Worker inner scheduler.
//!
//! Each worker decides on its own which inputs to download and which of its
//! assigned tasks to start. The global scheduler only influences it through
//! the `(priority, blocking)` pair attached to every assignment.
//!
//! Downloads: an input is requested as soon as a task needing it is assigned
//! here, and may start once some worker holds the object and a download slot
//! is free. Waiting downloads are ordered by the maximum priority of the
//! tasks needing them, with ready tasks boosted above all non-ready ones.
//! Started downloads are never preempted.
//!
//! Task start: with `f` free cores, `E` the enabled non-running tasks and
//! `X ⊆ E` those needing more than `f` cores, repeatedly start the
//! highest-priority `t ∈ E \ X` with `p_t ≤ b_t'` for every `t' ∈ X`.

use std::collections::{BTreeMap, BTreeSet};

use crate::cluster::WorkerId;
use crate::netmodel::NetModelKind;
use crate::taskgraph::{ObjectId, TaskGraph, TaskId};

/// Scheduler-provided ordering hints for one assigned task. `blocking <= priority`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Priority {
    pub priority: i64,
    pub blocking: i64,
}

impl Priority {
    pub fn new(priority: i64, blocking: i64) -> Self {
        debug_assert!(blocking <= priority, "blocking must not exceed priority");
        Priority { priority, blocking }
    }
}

/// Limits on simultaneous downloads into one worker. `None` means unlimited.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DownloadSlots {
    pub total: Option<usize>,
    pub per_source: Option<usize>,
}

impl DownloadSlots {
    pub const UNLIMITED: DownloadSlots = DownloadSlots {
        total: None,
        per_source: None,
    };

    /// Four at once, at most two from one source under max-min; unlimited
    /// under the simple model.
    pub fn for_model(kind: NetModelKind) -> Self {
        match kind {
            NetModelKind::MaxMin => DownloadSlots {
                total: Some(4),
                per_source: Some(2),
            },
            NetModelKind::Simple => Self::UNLIMITED,
        }
    }
}

/// How much a ready task's priority is raised when ordering downloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReadyBoost {
    /// `1 + 2 * max |p|` over the tasks currently assigned to the worker, so
    /// any ready task outranks every non-ready one.
    #[default]
    Auto,
    Fixed(i64),
}

/// Global facts a worker needs but does not own.
#[derive(Debug, Clone, Copy)]
pub struct World<'a> {
    /// `ready[t]`: every input of `t` has been computed somewhere.
    pub ready: &'a [bool],
    /// Workers currently holding each object (empty until produced).
    pub holders: &'a [Vec<WorkerId>],
}

#[derive(Debug, Clone)]
struct PendingTask {
    prio: Priority,
    missing: usize,
}

#[derive(Debug, Clone)]
pub struct WorkerState {
    id: WorkerId,
    cores: u32,
    free_cores: u32,
    slots: DownloadSlots,
    boost: ReadyBoost,
    running: BTreeSet<TaskId>,
    local: Vec<bool>,
    pending: BTreeMap<TaskId, PendingTask>,
    enabled: BTreeSet<TaskId>,
    /// Non-local inputs of pending tasks, with the tasks needing them.
    wanted: BTreeMap<ObjectId, BTreeSet<TaskId>>,
    /// Objects in flight to this worker and their source.
    downloading: BTreeMap<ObjectId, WorkerId>,
    per_source: Vec<usize>,
}

impl WorkerState {
    pub fn new(id: WorkerId, cores: u32, workers: usize, objects: usize, slots: DownloadSlots) -> Self {
        WorkerState {
            id,
            cores,
            free_cores: cores,
            slots,
            boost: ReadyBoost::Auto,
            running: BTreeSet::new(),
            local: vec![false; objects],
            pending: BTreeMap::new(),
            enabled: BTreeSet::new(),
            wanted: BTreeMap::new(),
            downloading: BTreeMap::new(),
            per_source: vec![0; workers],
        }
    }

    pub fn with_boost(mut self, boost: ReadyBoost) -> Self {
        self.boost = boost;
        self
    }

    pub fn id(&self) -> WorkerId {
        self.id
    }

    pub fn cores(&self) -> u32 {
        self.cores
    }

    pub fn free_cores(&self) -> u32 {
        self.free_cores
    }

    pub fn running(&self) -> &BTreeSet<TaskId> {
        &self.running
    }

    pub fn is_local(&self, o: ObjectId) -> bool {
        self.local[o.idx()]
    }

    pub fn is_assigned(&self, t: TaskId) -> bool {
        self.pending.contains_key(&t)
    }

    pub fn pending_tasks(&self) -> impl Iterator<Item = TaskId> + '_ {
        self.pending.keys().copied()
    }

    pub fn enabled_tasks(&self) -> &BTreeSet<TaskId> {
        &self.enabled
    }

    pub fn active_downloads(&self) -> usize {
        self.downloading.len()
    }

    pub fn downloads_from(&self, source: WorkerId) -> usize {
        self.per_source[source.idx()]
    }

    pub fn is_downloading(&self, o: ObjectId) -> bool {
        self.downloading.contains_key(&o)
    }

    /// True if some pending task here still needs `o`.
    pub fn wants(&self, o: ObjectId) -> bool {
        self.wanted.contains_key(&o)
    }

    /// Registers an assignment. Returns the inputs newly requested for download.
    /// Re-assigning a task already pending here only updates its priority.
    pub fn assign(&mut self, graph: &TaskGraph, task: TaskId, prio: Priority) -> Vec<ObjectId> {
        if let Some(p) = self.pending.get_mut(&task) {
            p.prio = prio;
            return Vec::new();
        }
        debug_assert!(!self.running.contains(&task));
        let mut requested = Vec::new();
        let mut missing = 0;
        for &o in &graph.task(task).inputs {
            if self.local[o.idx()] {
                continue;
            }
            missing += 1;
            let needers = self.wanted.entry(o).or_default();
            if needers.is_empty() && !self.downloading.contains_key(&o) {
                requested.push(o);
            }
            needers.insert(task);
        }
        self.pending.insert(task, PendingTask { prio, missing });
        if missing == 0 {
            self.enabled.insert(task);
        }
        requested
    }

    /// Withdraws a pending (not started) task. Requests that only this task
    /// motivated are dropped; downloads already in flight keep running.
    pub fn unassign(&mut self, graph: &TaskGraph, task: TaskId) -> bool {
        if self.pending.remove(&task).is_none() {
            return false;
        }
        self.enabled.remove(&task);
        for o in &graph.task(task).inputs {
            if let Some(needers) = self.wanted.get_mut(o) {
                needers.remove(&task);
                if needers.is_empty() {
                    self.wanted.remove(o);
                }
            }
        }
        true
    }

    fn boost_value(&self) -> i64 {
        match self.boost {
            ReadyBoost::Fixed(v) => v,
            ReadyBoost::Auto => {
                let max = self.pending.values().map(|p| p.prio.priority.abs()).max().unwrap_or(0);
                1 + 2 * max
            }
        }
    }

    /// Effective download priority of every object that could start now,
    /// sorted best first (ties: smaller object id).
    pub fn download_candidates(&self, world: &World<'_>) -> Vec<(ObjectId, i64)> {
        let boost = self.boost_value();
        let mut out: Vec<(ObjectId, i64)> = self
            .wanted
            .iter()
            .filter(|(o, _)| !self.downloading.contains_key(o) && !world.holders[o.idx()].is_empty())
            .map(|(o, needers)| {
                let prio = needers
                    .iter()
                    .map(|t| {
                        let p = self.pending[t].prio.priority;
                        if world.ready[t.idx()] {
                            p + boost
                        } else {
                            p
                        }
                    })
                    .max()
                    .expect("wanted entries are never empty");
                (*o, prio)
            })
            .collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }

    /// Fills free download slots by effective priority. Returns the started
    /// downloads as `(object, source)`; they are recorded as in flight.
    pub fn pick_downloads(&mut self, world: &World<'_>) -> Vec<(ObjectId, WorkerId)> {
        let mut started = Vec::new();
        if self.slots.total.is_some_and(|cap| self.downloading.len() >= cap) {
            return started;
        }
        for (o, _) in self.download_candidates(world) {
            if self.slots.total.is_some_and(|cap| self.downloading.len() >= cap) {
                break;
            }
            let source = world.holders[o.idx()]
                .iter()
                .copied()
                .filter(|&w| w != self.id)
                .filter(|&w| self.slots.per_source.is_none_or(|cap| self.per_source[w.idx()] < cap))
                .min_by_key(|&w| (self.per_source[w.idx()], w));
            if let Some(source) = source {
                self.downloading.insert(o, source);
                self.per_source[source.idx()] += 1;
                started.push((o, source));
            }
        }
        started
    }

    /// A download into this worker finished. Returns newly enabled tasks.
    pub fn download_finished(&mut self, o: ObjectId) -> Vec<TaskId> {
        if let Some(source) = self.downloading.remove(&o) {
            self.per_source[source.idx()] -= 1;
        }
        self.object_available(o)
    }

    /// `o` is now local (computed here or downloaded). Returns newly enabled tasks.
    pub fn object_available(&mut self, o: ObjectId) -> Vec<TaskId> {
        if self.local[o.idx()] {
            return Vec::new();
        }
        self.local[o.idx()] = true;
        let mut enabled = Vec::new();
        if let Some(needers) = self.wanted.remove(&o) {
            for t in needers {
                let p = self.pending.get_mut(&t).expect("needer is pending");
                p.missing -= 1;
                if p.missing == 0 {
                    self.enabled.insert(t);
                    enabled.push(t);
                }
            }
        }
        enabled
    }

    /// Starts enabled tasks while cores and the blocking rule allow.
    pub fn try_start_tasks(&mut self, graph: &TaskGraph) -> Vec<TaskId> {
        let mut started = Vec::new();
        loop {
            let free = self.free_cores;
            let bound = self
                .enabled
                .iter()
                .filter(|t| graph.task(**t).cores > free)
                .map(|t| self.pending[t].prio.blocking)
                .min();
            let mut choice: Option<(i64, TaskId)> = None;
            for &t in &self.enabled {
                let p = self.pending[&t].prio.priority;
                if graph.task(t).cores > free || bound.is_some_and(|b| p > b) {
                    continue;
                }
                if choice.is_none_or(|(cp, _)| p > cp) {
                    choice = Some((p, t));
                }
            }
            let choice = choice.map(|(_, t)| t);
            let Some(t) = choice else { break };
            self.enabled.remove(&t);
            self.pending.remove(&t);
            self.running.insert(t);
            self.free_cores -= graph.task(t).cores;
            started.push(t);
        }
        started
    }

    /// A task running here finished; its outputs become local.
    /// Returns newly enabled tasks.
    pub fn task_finished(&mut self, graph: &TaskGraph, t: TaskId) -> Vec<TaskId> {
        let removed = self.running.remove(&t);
        debug_assert!(removed, "finished task was not running here");
        self.free_cores += graph.task(t).cores;
        let mut enabled = Vec::new();
        for &o in &graph.task(t).outputs {
            enabled.extend(self.object_available(o));
        }
        enabled
    }
}
