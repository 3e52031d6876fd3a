//! Discrete-event loop.
//!
//! Events sharing a timestamp form one batch, handled in the order task
//! completions, transfer completions, assignment deliveries, scheduler wake.
//! After the scheduler step, every worker touched by the batch first starts
//! downloads and then tasks.

mod trace;
mod view;

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{Cluster, WorkerId};
use crate::netmodel::{FlowState, NetModelKind, TransferId};
use crate::schedulers::{Assignment, Rejection, Scheduler, SchedulerUpdate};
use crate::taskgraph::{ObjectId, TaskGraph, TaskId};
use crate::worker::{DownloadSlots, Priority, ReadyBoost, WorkerState, World};
use crate::SimRng;

pub use trace::{to_jsonl, write_jsonl, RejectReason, TraceEvent, TraceKind};
pub use view::{Estimates, Imode, InitialState, SchedulerView, TaskState};

/// Decision latency used whenever the MSD is non-zero.
pub const DEFAULT_LATENCY: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub netmodel: NetModelKind,
    pub imode: Imode,
    /// Minimal scheduling delay in seconds.
    pub msd: f64,
    /// Delay between a scheduler invocation and the delivery of its decisions.
    pub decision_latency: f64,
    pub seed: u64,
    pub record_trace: bool,
    #[serde(skip)]
    pub ready_boost: ReadyBoost,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            netmodel: NetModelKind::MaxMin,
            imode: Imode::Exact,
            msd: 0.1,
            decision_latency: DEFAULT_LATENCY,
            seed: 0,
            record_trace: false,
            ready_boost: ReadyBoost::Auto,
        }
    }
}

impl SimConfig {
    pub fn default_latency(msd: f64) -> f64 {
        if msd > 0.0 {
            DEFAULT_LATENCY
        } else {
            0.0
        }
    }

    /// Sets the MSD together with its default decision latency.
    pub fn with_msd(mut self, msd: f64) -> Self {
        self.msd = msd;
        self.decision_latency = Self::default_latency(msd);
        self
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("simulation stalled at t={time}: {unfinished} tasks can never finish")]
    SchedulerStall { time: f64, unfinished: usize },
    #[error("scheduler `{scheduler}` produced an invalid assignment: {message}")]
    SchedulerFault { scheduler: String, message: String },
    #[error("task `{task}` needs {cores} cores but no worker has that many")]
    Unschedulable { task: String, cores: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub makespan: f64,
    pub transferred_bytes: u64,
    pub transfers: usize,
    pub invocations: usize,
    /// Core-seconds spent running tasks, per worker.
    pub busy_core_seconds: Vec<f64>,
    pub trace: Vec<TraceEvent>,
}

impl SimulationResult {
    /// Share of each worker's core-time used over the makespan.
    pub fn utilization(&self, cluster: &Cluster) -> Vec<f64> {
        cluster
            .workers()
            .map(|w| {
                let capacity = cluster.cores(w) as f64 * self.makespan;
                if capacity > 0.0 {
                    self.busy_core_seconds[w.idx()] / capacity
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    TaskFinished(TaskId),
    AssignmentsDelivered(usize),
    SchedulerWake,
}

impl EventKind {
    fn key(self) -> (u8, u64) {
        match self {
            EventKind::TaskFinished(t) => (0, t.0 as u64),
            EventKind::AssignmentsDelivered(i) => (2, i as u64),
            EventKind::SchedulerWake => (3, 0),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then_with(|| self.kind.key().cmp(&other.kind.key()))
    }
}

#[derive(Debug, Clone, Copy)]
struct ActiveTransfer {
    object: ObjectId,
    source: WorkerId,
    target: WorkerId,
    bytes: u64,
}

struct Sim<'a> {
    graph: &'a TaskGraph,
    cluster: &'a Cluster,
    config: &'a SimConfig,
    estimates: Estimates,
    now: f64,
    states: Vec<TaskState>,
    missing_inputs: Vec<usize>,
    ready: Vec<bool>,
    holders: Vec<Vec<WorkerId>>,
    used_cores: Vec<u32>,
    workers: Vec<WorkerState>,
    dirty: Vec<bool>,
    flows: FlowState,
    active: BTreeMap<TransferId, ActiveTransfer>,
    next_transfer: u64,
    events: BinaryHeap<Reverse<Event>>,
    deliveries: Vec<Vec<Assignment>>,
    update: SchedulerUpdate,
    news: bool,
    last_invocation: Option<f64>,
    wake_pending: bool,
    unfinished: usize,
    makespan: f64,
    transferred_bytes: u64,
    transfers: usize,
    invocations: usize,
    busy: Vec<f64>,
    trace: Vec<TraceEvent>,
}

/// Runs `graph` on `cluster` under `scheduler` until every task has finished.
pub fn run(
    graph: &TaskGraph,
    cluster: &Cluster,
    scheduler: &mut dyn Scheduler,
    config: &SimConfig,
) -> Result<SimulationResult, SimError> {
    if let Some(t) = graph.tasks().iter().find(|t| t.cores > cluster.max_cores()) {
        return Err(SimError::Unschedulable {
            task: t.name.clone(),
            cores: t.cores,
        });
    }
    let mut rng = SimRng::seed_from_u64(config.seed);
    let mut sim = Sim::new(graph, cluster, config);
    sim.invoke(scheduler, &mut rng, true)?;
    sim.process_workers();

    while sim.unfinished > 0 {
        let heap_next = sim.events.peek().map(|Reverse(e)| e.time);
        let net_next = sim.flows.next_completion().map(|(_, dt)| sim.flows.now() + dt);
        let next = match (heap_next, net_next) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => {
                return Err(SimError::SchedulerStall {
                    time: sim.now,
                    unfinished: sim.unfinished,
                })
            }
        };
        sim.step(next, net_next == Some(next), scheduler, &mut rng)?;
    }

    Ok(SimulationResult {
        makespan: sim.makespan,
        transferred_bytes: sim.transferred_bytes,
        transfers: sim.transfers,
        invocations: sim.invocations,
        busy_core_seconds: sim.busy,
        trace: sim.trace,
    })
}

impl<'a> Sim<'a> {
    fn new(graph: &'a TaskGraph, cluster: &'a Cluster, config: &'a SimConfig) -> Self {
        let slots = DownloadSlots::for_model(config.netmodel);
        let workers = cluster
            .workers()
            .map(|w| {
                WorkerState::new(w, cluster.cores(w), cluster.worker_count(), graph.object_count(), slots)
                    .with_boost(config.ready_boost)
            })
            .collect();
        let missing_inputs: Vec<usize> = graph.tasks().iter().map(|t| t.inputs.len()).collect();
        Sim {
            graph,
            cluster,
            config,
            estimates: Estimates::new(graph, config.imode),
            now: 0.0,
            states: vec![TaskState::Waiting; graph.task_count()],
            ready: missing_inputs.iter().map(|&m| m == 0).collect(),
            missing_inputs,
            holders: vec![Vec::new(); graph.object_count()],
            used_cores: vec![0; cluster.worker_count()],
            workers,
            dirty: vec![false; cluster.worker_count()],
            flows: FlowState::uniform(config.netmodel, cluster.worker_count(), cluster.bandwidth),
            active: BTreeMap::new(),
            next_transfer: 0,
            events: BinaryHeap::new(),
            deliveries: Vec::new(),
            update: SchedulerUpdate::default(),
            news: false,
            last_invocation: None,
            wake_pending: false,
            unfinished: graph.task_count(),
            makespan: 0.0,
            transferred_bytes: 0,
            transfers: 0,
            invocations: 0,
            busy: vec![0.0; cluster.worker_count()],
            trace: Vec::new(),
        }
    }

    fn record(&mut self, kind: TraceKind) {
        if self.config.record_trace {
            self.trace.push(TraceEvent { time: self.now, kind });
        }
    }

    fn push(&mut self, time: f64, kind: EventKind) {
        self.events.push(Reverse(Event { time, kind }));
    }

    fn pop_at(&mut self, rank: u8) -> Option<EventKind> {
        match self.events.peek() {
            Some(Reverse(e)) if e.time == self.now && e.kind.key().0 == rank => {
                let e = self.events.pop().expect("peeked");
                Some(e.0.kind)
            }
            _ => None,
        }
    }

    fn step(
        &mut self,
        time: f64,
        transfers_due: bool,
        scheduler: &mut dyn Scheduler,
        rng: &mut SimRng,
    ) -> Result<(), SimError> {
        self.now = time;
        self.flows.advance(time);

        while let Some(EventKind::TaskFinished(t)) = self.pop_at(0) {
            self.finish_task(t);
        }
        if transfers_due {
            self.finish_transfers();
        }
        while let Some(EventKind::AssignmentsDelivered(i)) = self.pop_at(2) {
            let batch = std::mem::take(&mut self.deliveries[i]);
            self.record(TraceKind::AssignmentsDelivered { count: batch.len() });
            for a in batch {
                self.apply(a);
            }
        }
        let mut woke = false;
        while let Some(EventKind::SchedulerWake) = self.pop_at(3) {
            self.wake_pending = false;
            woke = true;
        }

        if self.unfinished > 0 && self.news {
            let due = match self.last_invocation {
                None => true,
                Some(last) => self.config.msd <= 0.0 || woke || self.now >= last + self.config.msd,
            };
            if due {
                self.invoke(scheduler, rng, false)?;
            } else if !self.wake_pending {
                let at = self.last_invocation.expect("checked above") + self.config.msd;
                self.push(at, EventKind::SchedulerWake);
                self.wake_pending = true;
            }
        }
        self.process_workers();
        Ok(())
    }

    fn finish_task(&mut self, t: TaskId) {
        let TaskState::Running(w) = self.states[t.idx()] else {
            unreachable!("finished task {t} was not running");
        };
        let task = self.graph.task(t);
        self.states[t.idx()] = TaskState::Finished(w);
        self.used_cores[w.idx()] -= task.cores;
        self.unfinished -= 1;
        self.makespan = self.now;
        self.workers[w.idx()].task_finished(self.graph, t);
        self.dirty[w.idx()] = true;
        for &o in &task.outputs {
            self.holders[o.idx()].push(w);
            self.mark_wanting(o);
            for &c in &self.graph.object(o).consumers {
                self.missing_inputs[c.idx()] -= 1;
                if self.missing_inputs[c.idx()] == 0 {
                    self.ready[c.idx()] = true;
                }
            }
        }
        self.update.finished.push((t, w));
        self.news = true;
        self.record(TraceKind::TaskFinished { task: t, worker: w });
    }

    fn mark_wanting(&mut self, o: ObjectId) {
        for (w, state) in self.workers.iter().enumerate() {
            if state.wants(o) {
                self.dirty[w] = true;
            }
        }
    }

    fn finish_transfers(&mut self) {
        if let Some((id, _)) = self.flows.next_completion() {
            if let Some(t) = self.flows.finish(self.now, id) {
                self.complete_transfer(t.id);
            }
        }
        for t in self.flows.take_completed() {
            self.complete_transfer(t.id);
        }
    }

    fn complete_transfer(&mut self, id: TransferId) {
        let t = self.active.remove(&id).expect("known transfer");
        self.transferred_bytes += t.bytes;
        self.transfers += 1;
        self.workers[t.target.idx()].download_finished(t.object);
        self.dirty[t.target.idx()] = true;
        self.holders[t.object.idx()].push(t.target);
        self.mark_wanting(t.object);
        self.news = true;
        self.record(TraceKind::TransferFinished {
            transfer: id,
            object: t.object,
            source: t.source,
            target: t.target,
            bytes: t.bytes,
        });
    }

    fn invoke(&mut self, scheduler: &mut dyn Scheduler, rng: &mut SimRng, first: bool) -> Result<(), SimError> {
        let update = std::mem::take(&mut self.update);
        let assignments = {
            let view = SchedulerView {
                graph: self.graph,
                cluster: self.cluster,
                now: self.now,
                imode: self.config.imode,
                estimates: &self.estimates,
                states: &self.states,
                ready: &self.ready,
                holders: &self.holders,
                used_cores: &self.used_cores,
            };
            if first {
                scheduler.init(&view, rng);
            }
            scheduler.schedule(&view, &update, rng)
        };
        self.invocations += 1;
        self.news = false;
        self.last_invocation = Some(self.now);
        self.record(TraceKind::SchedulerInvoked {
            assignments: assignments.len(),
        });
        for a in &assignments {
            let fault = if a.task.idx() >= self.graph.task_count() {
                Some(format!("unknown task {}", a.task))
            } else if a.worker.idx() >= self.cluster.worker_count() {
                Some(format!("unknown worker {}", a.worker))
            } else if a.blocking > a.priority {
                Some(format!(
                    "task {} has blocking {} above priority {}",
                    self.graph.task(a.task).name,
                    a.blocking,
                    a.priority
                ))
            } else {
                None
            };
            if let Some(message) = fault {
                return Err(SimError::SchedulerFault {
                    scheduler: scheduler.name().to_string(),
                    message,
                });
            }
        }
        if assignments.is_empty() {
            return Ok(());
        }
        if self.config.decision_latency > 0.0 {
            let i = self.deliveries.len();
            self.deliveries.push(assignments);
            self.push(self.now + self.config.decision_latency, EventKind::AssignmentsDelivered(i));
        } else {
            for a in assignments {
                self.apply(a);
            }
        }
        Ok(())
    }

    fn reject(&mut self, a: Assignment, reason: RejectReason) {
        self.update.rejected.push(Rejection {
            task: a.task,
            worker: a.worker,
            reason,
        });
        self.record(TraceKind::AssignmentRejected {
            task: a.task,
            worker: a.worker,
            reason,
        });
    }

    fn apply(&mut self, a: Assignment) {
        match self.states[a.task.idx()] {
            TaskState::Finished(_) => return self.reject(a, RejectReason::Finished),
            TaskState::Running(_) => return self.reject(a, RejectReason::Running),
            _ if self.graph.task(a.task).cores > self.cluster.cores(a.worker) => {
                return self.reject(a, RejectReason::InsufficientCores)
            }
            TaskState::Assigned(old) if old != a.worker => {
                self.workers[old.idx()].unassign(self.graph, a.task);
                self.dirty[old.idx()] = true;
            }
            _ => {}
        }
        self.states[a.task.idx()] = TaskState::Assigned(a.worker);
        self.workers[a.worker.idx()].assign(self.graph, a.task, Priority::new(a.priority, a.blocking));
        self.dirty[a.worker.idx()] = true;
        self.record(TraceKind::TaskAssigned {
            task: a.task,
            worker: a.worker,
            priority: a.priority,
            blocking: a.blocking,
        });
    }

    fn process_workers(&mut self) {
        let dirty: Vec<usize> = (0..self.dirty.len()).filter(|&w| self.dirty[w]).collect();
        for &w in &dirty {
            let world = World {
                ready: &self.ready,
                holders: &self.holders,
            };
            let started = self.workers[w].pick_downloads(&world);
            for (o, source) in started {
                self.start_transfer(o, source, WorkerId(w as u32));
            }
        }
        for &w in &dirty {
            self.dirty[w] = false;
            let started = self.workers[w].try_start_tasks(self.graph);
            for t in started {
                self.start_task(t, WorkerId(w as u32));
            }
        }
    }

    fn start_transfer(&mut self, object: ObjectId, source: WorkerId, target: WorkerId) {
        let id = TransferId(self.next_transfer);
        self.next_transfer += 1;
        let bytes = self.graph.object(object).size;
        self.flows.start(self.now, id, source, target, bytes as f64);
        self.active.insert(
            id,
            ActiveTransfer {
                object,
                source,
                target,
                bytes,
            },
        );
        self.record(TraceKind::TransferStarted {
            transfer: id,
            object,
            source,
            target,
            bytes,
        });
    }

    fn start_task(&mut self, t: TaskId, w: WorkerId) {
        let task = self.graph.task(t);
        self.states[t.idx()] = TaskState::Running(w);
        self.used_cores[w.idx()] += task.cores;
        self.busy[w.idx()] += task.duration * task.cores as f64;
        self.push(self.now + task.duration, EventKind::TaskFinished(t));
        self.update.started.push((t, w));
        self.record(TraceKind::TaskStarted {
            task: t,
            worker: w,
            cores: task.cores,
        });
    }
}
