//! What a scheduler is allowed to see.
//!
//! The view exposes the graph structure and the live execution state, but
//! durations and sizes only through the active information mode: unfinished
//! tasks (and objects whose producer has not finished) show the imode value,
//! finished ones always show the actual value.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cluster::{Cluster, WorkerId};
use crate::taskgraph::{self, ObjectId, TaskGraph, TaskId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Imode {
    /// Actual durations and sizes.
    Exact,
    /// User estimates (`expected_*` annotations); the actual value where no
    /// estimate is annotated.
    User,
    /// Global mean duration and mean output size.
    Mean,
}

impl Imode {
    pub fn name(self) -> &'static str {
        match self {
            Imode::Exact => "exact",
            Imode::User => "user",
            Imode::Mean => "mean",
        }
    }
}

impl fmt::Display for Imode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Imode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Imode::Exact),
            "user" => Ok(Imode::User),
            "mean" => Ok(Imode::Mean),
            other => Err(format!("unknown imode `{other}` (expected exact, user or mean)")),
        }
    }
}

/// Per-element values shown for unfinished work under an imode.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    pub durations: Vec<f64>,
    pub sizes: Vec<f64>,
}

impl Estimates {
    pub fn new(graph: &TaskGraph, imode: Imode) -> Self {
        match imode {
            Imode::Exact => Estimates {
                durations: graph.tasks().iter().map(|t| t.duration).collect(),
                sizes: graph.objects().iter().map(|o| o.size as f64).collect(),
            },
            Imode::User => Estimates {
                durations: graph
                    .tasks()
                    .iter()
                    .map(|t| t.expected_duration.unwrap_or(t.duration))
                    .collect(),
                sizes: graph
                    .objects()
                    .iter()
                    .map(|o| o.expected_size.unwrap_or(o.size) as f64)
                    .collect(),
            },
            Imode::Mean => {
                let (d, s) = taskgraph::means(graph).unwrap_or((0.0, 0.0));
                Estimates {
                    durations: vec![d; graph.task_count()],
                    sizes: vec![s; graph.object_count()],
                }
            }
        }
    }
}

/// Lifecycle of a task as tracked by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskState {
    Waiting,
    Assigned(WorkerId),
    Running(WorkerId),
    Finished(WorkerId),
}

impl TaskState {
    pub fn worker(self) -> Option<WorkerId> {
        match self {
            TaskState::Waiting => None,
            TaskState::Assigned(w) | TaskState::Running(w) | TaskState::Finished(w) => Some(w),
        }
    }
}

/// Read-only window onto the simulation handed to schedulers.
#[derive(Clone, Copy)]
pub struct SchedulerView<'a> {
    pub(crate) graph: &'a TaskGraph,
    pub(crate) cluster: &'a Cluster,
    pub(crate) now: f64,
    pub(crate) imode: Imode,
    pub(crate) estimates: &'a Estimates,
    pub(crate) states: &'a [TaskState],
    pub(crate) ready: &'a [bool],
    pub(crate) holders: &'a [Vec<WorkerId>],
    pub(crate) used_cores: &'a [u32],
}

impl<'a> SchedulerView<'a> {
    /// A view of a fresh simulation (nothing assigned, nothing finished).
    /// Used by schedulers' unit tests and by the simulator at start-up.
    pub fn initial(
        graph: &'a TaskGraph,
        cluster: &'a Cluster,
        imode: Imode,
        estimates: &'a Estimates,
        scratch: &'a InitialState,
    ) -> Self {
        SchedulerView {
            graph,
            cluster,
            now: 0.0,
            imode,
            estimates,
            states: &scratch.states,
            ready: &scratch.ready,
            holders: &scratch.holders,
            used_cores: &scratch.used_cores,
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn imode(&self) -> Imode {
        self.imode
    }

    pub fn task_count(&self) -> usize {
        self.graph.task_count()
    }

    pub fn object_count(&self) -> usize {
        self.graph.object_count()
    }

    pub fn task_ids(&self) -> impl ExactSizeIterator<Item = TaskId> + 'a {
        self.graph.task_ids()
    }

    pub fn inputs(&self, t: TaskId) -> &'a [ObjectId] {
        &self.graph.task(t).inputs
    }

    pub fn outputs(&self, t: TaskId) -> &'a [ObjectId] {
        &self.graph.task(t).outputs
    }

    pub fn cores(&self, t: TaskId) -> u32 {
        self.graph.task(t).cores
    }

    pub fn producer(&self, o: ObjectId) -> TaskId {
        self.graph.object(o).producer
    }

    pub fn consumers(&self, o: ObjectId) -> &'a [TaskId] {
        &self.graph.object(o).consumers
    }

    pub fn predecessors(&self, t: TaskId) -> &'a [TaskId] {
        self.graph.predecessors(t)
    }

    pub fn successors(&self, t: TaskId) -> &'a [TaskId] {
        self.graph.successors(t)
    }

    pub fn topo_order(&self) -> &'a [TaskId] {
        self.graph.topo_order()
    }

    pub fn task_name(&self, t: TaskId) -> &'a str {
        &self.graph.task(t).name
    }

    /// Duration as seen under the active imode.
    pub fn duration(&self, t: TaskId) -> f64 {
        match self.states[t.idx()] {
            TaskState::Finished(_) => self.graph.task(t).duration,
            _ => self.estimates.durations[t.idx()],
        }
    }

    /// Size in bytes as seen under the active imode.
    pub fn size(&self, o: ObjectId) -> f64 {
        let producer = self.graph.object(o).producer;
        match self.states[producer.idx()] {
            TaskState::Finished(_) => self.graph.object(o).size as f64,
            _ => self.estimates.sizes[o.idx()],
        }
    }

    pub fn durations(&self) -> Vec<f64> {
        self.graph.task_ids().map(|t| self.duration(t)).collect()
    }

    pub fn b_level(&self) -> Vec<f64> {
        taskgraph::b_level_with(self.graph, &self.durations())
    }

    pub fn t_level(&self) -> Vec<f64> {
        taskgraph::t_level_with(self.graph, &self.durations())
    }

    pub fn alap(&self) -> Vec<f64> {
        crate::taskgraph::alap_from_b_level(&self.b_level())
    }

    pub fn state(&self, t: TaskId) -> TaskState {
        self.states[t.idx()]
    }

    pub fn is_finished(&self, t: TaskId) -> bool {
        matches!(self.states[t.idx()], TaskState::Finished(_))
    }

    pub fn is_running(&self, t: TaskId) -> bool {
        matches!(self.states[t.idx()], TaskState::Running(_))
    }

    /// Every input has been computed somewhere.
    pub fn is_ready(&self, t: TaskId) -> bool {
        self.ready[t.idx()]
    }

    pub fn holders(&self, o: ObjectId) -> &'a [WorkerId] {
        &self.holders[o.idx()]
    }

    pub fn worker_count(&self) -> usize {
        self.cluster.worker_count()
    }

    pub fn workers(&self) -> impl ExactSizeIterator<Item = WorkerId> {
        self.cluster.workers()
    }

    pub fn worker_cores(&self, w: WorkerId) -> u32 {
        self.cluster.cores(w)
    }

    /// Cores not occupied by running tasks.
    pub fn free_cores(&self, w: WorkerId) -> u32 {
        self.cluster.cores(w) - self.used_cores[w.idx()]
    }

    pub fn bandwidth(&self) -> f64 {
        self.cluster.bandwidth
    }

    /// Bytes (as seen) that must move to `w` before `t` can run there,
    /// given current object placement.
    pub fn transfer_bytes(&self, t: TaskId, w: WorkerId) -> f64 {
        self.inputs(t)
            .iter()
            .filter(|o| !self.holders[o.idx()].contains(&w))
            .map(|o| self.size(*o))
            .sum()
    }
}

/// Backing storage for [`SchedulerView::initial`].
#[derive(Debug, Clone)]
pub struct InitialState {
    states: Vec<TaskState>,
    ready: Vec<bool>,
    holders: Vec<Vec<WorkerId>>,
    used_cores: Vec<u32>,
}

impl InitialState {
    pub fn new(graph: &TaskGraph, cluster: &Cluster) -> Self {
        InitialState {
            states: vec![TaskState::Waiting; graph.task_count()],
            ready: graph.tasks().iter().map(|t| t.inputs.is_empty()).collect(),
            holders: vec![Vec::new(); graph.object_count()],
            used_cores: vec![0; cluster.worker_count()],
        }
    }

    /// Marks `t` finished on `w`: its outputs are held there and consumers
    /// whose inputs all exist become ready.
    pub fn finish_on(&mut self, graph: &TaskGraph, t: TaskId, w: WorkerId) {
        self.states[t.idx()] = TaskState::Finished(w);
        for &o in &graph.task(t).outputs {
            if !self.holders[o.idx()].contains(&w) {
                self.holders[o.idx()].push(w);
            }
            for &c in &graph.object(o).consumers {
                self.ready[c.idx()] = graph.task(c).inputs.iter().all(|i| !self.holders[i.idx()].is_empty());
            }
        }
    }
}
