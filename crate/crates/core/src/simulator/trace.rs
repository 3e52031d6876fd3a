//! Event trace and its line-delimited JSON export.

use std::io::{self, Write};

use serde::Serialize;

use crate::cluster::WorkerId;
use crate::netmodel::TransferId;
use crate::taskgraph::{ObjectId, TaskGraph, TaskId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Finished,
    Running,
    InsufficientCores,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceKind {
    SchedulerInvoked { assignments: usize },
    AssignmentsDelivered { count: usize },
    TaskAssigned { task: TaskId, worker: WorkerId, priority: i64, blocking: i64 },
    AssignmentRejected { task: TaskId, worker: WorkerId, reason: RejectReason },
    TaskStarted { task: TaskId, worker: WorkerId, cores: u32 },
    TaskFinished { task: TaskId, worker: WorkerId },
    TransferStarted { transfer: TransferId, object: ObjectId, source: WorkerId, target: WorkerId, bytes: u64 },
    TransferFinished { transfer: TransferId, object: ObjectId, source: WorkerId, target: WorkerId, bytes: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: TraceKind,
}

#[derive(Serialize)]
struct Record<'a> {
    time: f64,
    event: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    task: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    object: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    worker: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    source: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transfer: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bytes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cores: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    priority: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    blocking: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<RejectReason>,
}

impl<'a> Record<'a> {
    fn new(time: f64, event: &'static str) -> Self {
        Record {
            time,
            event,
            task: None,
            object: None,
            worker: None,
            source: None,
            target: None,
            transfer: None,
            bytes: None,
            cores: None,
            priority: None,
            blocking: None,
            count: None,
            reason: None,
        }
    }
}

impl TraceEvent {
    pub fn event_name(&self) -> &'static str {
        match self.kind {
            TraceKind::SchedulerInvoked { .. } => "scheduler_invoked",
            TraceKind::AssignmentsDelivered { .. } => "assignments_delivered",
            TraceKind::TaskAssigned { .. } => "task_assigned",
            TraceKind::AssignmentRejected { .. } => "assignment_rejected",
            TraceKind::TaskStarted { .. } => "task_started",
            TraceKind::TaskFinished { .. } => "task_finished",
            TraceKind::TransferStarted { .. } => "transfer_started",
            TraceKind::TransferFinished { .. } => "transfer_finished",
        }
    }

    fn record<'a>(&self, graph: &'a TaskGraph) -> Record<'a> {
        let task = |t: TaskId| Some(graph.task(t).name.as_str());
        let object = |o: ObjectId| Some(graph.object(o).name.as_str());
        let mut r = Record::new(self.time, self.event_name());
        match self.kind {
            TraceKind::SchedulerInvoked { assignments } => r.count = Some(assignments),
            TraceKind::AssignmentsDelivered { count } => r.count = Some(count),
            TraceKind::TaskAssigned { task: t, worker, priority, blocking } => {
                r.task = task(t);
                r.worker = Some(worker.0);
                r.priority = Some(priority);
                r.blocking = Some(blocking);
            }
            TraceKind::AssignmentRejected { task: t, worker, reason } => {
                r.task = task(t);
                r.worker = Some(worker.0);
                r.reason = Some(reason);
            }
            TraceKind::TaskStarted { task: t, worker, cores } => {
                r.task = task(t);
                r.worker = Some(worker.0);
                r.cores = Some(cores);
            }
            TraceKind::TaskFinished { task: t, worker } => {
                r.task = task(t);
                r.worker = Some(worker.0);
            }
            TraceKind::TransferStarted { transfer, object: o, source, target, bytes }
            | TraceKind::TransferFinished { transfer, object: o, source, target, bytes } => {
                r.transfer = Some(transfer.0);
                r.object = object(o);
                r.source = Some(source.0);
                r.target = Some(target.0);
                r.bytes = Some(bytes);
            }
        }
        r
    }
}

/// One JSON object per line, with task and object names resolved.
pub fn write_jsonl(trace: &[TraceEvent], graph: &TaskGraph, mut out: impl Write) -> io::Result<()> {
    for ev in trace {
        serde_json::to_writer(&mut out, &ev.record(graph))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_jsonl(trace: &[TraceEvent], graph: &TaskGraph) -> String {
    let mut buf = Vec::new();
    write_jsonl(trace, graph, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}
