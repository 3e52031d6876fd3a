//! Task graph data model.
//!
//! A task graph is a bipartite DAG of tasks and the data objects they
//! produce. Every object has exactly one producer; a task may produce any
//! number of outputs and consume any number of inputs.
//!
//! Graphs are built from a [`GraphDocument`] (the on-disk JSON form) and are
//! immutable afterwards. Tasks and objects are stored sorted by their string
//! id, so every index-based iteration order is independent of the order in
//! which the document listed them.

mod analysis;

pub use analysis::{alap, b_level, b_level_with, critical_path, means, stats, t_level, t_level_with, GraphStats};
pub(crate) use analysis::alap_from_b_level;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjectId(pub u32);

impl TaskId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl ObjectId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "o{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("cycle detected through task `{0}`")]
    CycleDetected(String),
    #[error("task `{task}` references unknown object `{object}`")]
    DanglingReference { task: String, object: String },
    #[error("object `{0}` is produced by more than one task")]
    MultipleProducers(String),
    #[error("negative or non-finite {field} on `{id}`")]
    NegativeQuantity { id: String, field: &'static str },
    #[error("task `{0}` requires zero cores")]
    ZeroCores(String),
    #[error("duplicate task id `{0}`")]
    DuplicateTask(String),
    #[error("graph has no tasks")]
    EmptyGraph,
    #[error("cannot parse task graph: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GraphMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
}

/// Serialized form of an output object inside a [`TaskDocument`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectDocument {
    pub id: String,
    pub size: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_size: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDocument {
    pub id: String,
    pub duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_duration: Option<f64>,
    #[serde(default = "default_cores")]
    pub cores: u32,
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default)]
    pub outputs: Vec<ObjectDocument>,
}

fn default_cores() -> u32 {
    1
}

/// The JSON task-graph file format.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GraphDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<GraphMeta>,
    pub tasks: Vec<TaskDocument>,
}

impl GraphDocument {
    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        serde_json::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph document serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub name: String,
    pub duration: f64,
    pub expected_duration: Option<f64>,
    pub cores: u32,
    pub inputs: Vec<ObjectId>,
    pub outputs: Vec<ObjectId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataObject {
    pub name: String,
    pub size: u64,
    pub expected_size: Option<u64>,
    pub producer: TaskId,
    pub consumers: Vec<TaskId>,
}

/// Immutable validated task graph.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskGraph {
    meta: GraphMeta,
    tasks: Vec<Task>,
    objects: Vec<DataObject>,
    /// Task-level predecessor lists (producers of inputs), deduplicated and sorted.
    predecessors: Vec<Vec<TaskId>>,
    successors: Vec<Vec<TaskId>>,
    topo_order: Vec<TaskId>,
}

/// Checks every graph invariant without building the graph.
pub fn validate(doc: &GraphDocument) -> Result<(), GraphError> {
    TaskGraph::from_document(doc.clone()).map(|_| ())
}

impl TaskGraph {
    pub fn empty() -> Self {
        TaskGraph {
            meta: GraphMeta::default(),
            tasks: Vec::new(),
            objects: Vec::new(),
            predecessors: Vec::new(),
            successors: Vec::new(),
            topo_order: Vec::new(),
        }
    }

    pub fn from_document(doc: GraphDocument) -> Result<Self, GraphError> {
        let GraphDocument { meta, mut tasks } = doc;
        tasks.sort_by(|a, b| a.id.cmp(&b.id));

        let mut task_index: HashMap<&str, u32> = HashMap::with_capacity(tasks.len());
        for (i, t) in tasks.iter().enumerate() {
            if task_index.insert(t.id.as_str(), i as u32).is_some() {
                return Err(GraphError::DuplicateTask(t.id.clone()));
            }
            if !(t.duration.is_finite() && t.duration >= 0.0) {
                return Err(GraphError::NegativeQuantity {
                    id: t.id.clone(),
                    field: "duration",
                });
            }
            if let Some(d) = t.expected_duration {
                if !(d.is_finite() && d >= 0.0) {
                    return Err(GraphError::NegativeQuantity {
                        id: t.id.clone(),
                        field: "expected_duration",
                    });
                }
            }
            if t.cores == 0 {
                return Err(GraphError::ZeroCores(t.id.clone()));
            }
        }

        // Objects, sorted by id, each with its unique producer.
        let mut object_docs: Vec<(&ObjectDocument, u32)> = Vec::new();
        for (i, t) in tasks.iter().enumerate() {
            for o in &t.outputs {
                object_docs.push((o, i as u32));
            }
        }
        object_docs.sort_by(|a, b| a.0.id.cmp(&b.0.id));
        for pair in object_docs.windows(2) {
            if pair[0].0.id == pair[1].0.id {
                return Err(GraphError::MultipleProducers(pair[0].0.id.clone()));
            }
        }
        let mut object_index: HashMap<&str, u32> = HashMap::with_capacity(object_docs.len());
        for (i, (o, _)) in object_docs.iter().enumerate() {
            object_index.insert(o.id.as_str(), i as u32);
        }

        let mut objects: Vec<DataObject> = object_docs
            .iter()
            .map(|(o, producer)| DataObject {
                name: o.id.clone(),
                size: o.size,
                expected_size: o.expected_size,
                producer: TaskId(*producer),
                consumers: Vec::new(),
            })
            .collect();

        let mut built = Vec::with_capacity(tasks.len());
        for (i, t) in tasks.iter().enumerate() {
            let mut inputs = Vec::with_capacity(t.inputs.len());
            for name in &t.inputs {
                let oid = object_index.get(name.as_str()).ok_or_else(|| {
                    GraphError::DanglingReference {
                        task: t.id.clone(),
                        object: name.clone(),
                    }
                })?;
                inputs.push(ObjectId(*oid));
            }
            inputs.sort_unstable();
            inputs.dedup();
            for o in &inputs {
                objects[o.idx()].consumers.push(TaskId(i as u32));
            }
            let mut outputs: Vec<ObjectId> = t
                .outputs
                .iter()
                .map(|o| ObjectId(object_index[o.id.as_str()]))
                .collect();
            outputs.sort_unstable();
            built.push(Task {
                name: t.id.clone(),
                duration: t.duration,
                expected_duration: t.expected_duration,
                cores: t.cores,
                inputs,
                outputs,
            });
        }

        let n = built.len();
        let mut predecessors = vec![Vec::new(); n];
        let mut successors = vec![Vec::new(); n];
        for (i, t) in built.iter().enumerate() {
            let mut preds: Vec<TaskId> = t.inputs.iter().map(|o| objects[o.idx()].producer).collect();
            preds.sort_unstable();
            preds.dedup();
            for p in &preds {
                successors[p.idx()].push(TaskId(i as u32));
            }
            predecessors[i] = preds;
        }

        // Kahn's algorithm; a self-loop or longer cycle leaves tasks unvisited.
        let mut indegree: Vec<usize> = predecessors.iter().map(Vec::len).collect();
        let mut stack: Vec<TaskId> = (0..n)
            .rev()
            .filter(|&i| indegree[i] == 0)
            .map(|i| TaskId(i as u32))
            .collect();
        let mut topo_order = Vec::with_capacity(n);
        while let Some(t) = stack.pop() {
            topo_order.push(t);
            for s in successors[t.idx()].iter().rev() {
                indegree[s.idx()] -= 1;
                if indegree[s.idx()] == 0 {
                    stack.push(*s);
                }
            }
        }
        if topo_order.len() != n {
            let culprit = (0..n).find(|&i| indegree[i] > 0).unwrap();
            return Err(GraphError::CycleDetected(built[culprit].name.clone()));
        }

        Ok(TaskGraph {
            meta: meta.unwrap_or_default(),
            tasks: built,
            objects,
            predecessors,
            successors,
            topo_order,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        Self::from_document(GraphDocument::from_json(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| GraphError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn to_document(&self) -> GraphDocument {
        let tasks = self
            .tasks
            .iter()
            .map(|t| TaskDocument {
                id: t.name.clone(),
                duration: t.duration,
                expected_duration: t.expected_duration,
                cores: t.cores,
                inputs: t.inputs.iter().map(|o| self.objects[o.idx()].name.clone()).collect(),
                outputs: t
                    .outputs
                    .iter()
                    .map(|o| {
                        let obj = &self.objects[o.idx()];
                        ObjectDocument {
                            id: obj.name.clone(),
                            size: obj.size,
                            expected_size: obj.expected_size,
                        }
                    })
                    .collect(),
            })
            .collect();
        let meta = if self.meta == GraphMeta::default() {
            None
        } else {
            Some(self.meta.clone())
        };
        GraphDocument { meta, tasks }
    }

    pub fn to_json(&self) -> String {
        self.to_document().to_json()
    }

    pub fn meta(&self) -> &GraphMeta {
        &self.meta
    }

    pub fn set_meta(&mut self, meta: GraphMeta) {
        self.meta = meta;
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn objects(&self) -> &[DataObject] {
        &self.objects
    }

    pub fn task(&self, id: TaskId) -> &Task {
        &self.tasks[id.idx()]
    }

    pub fn object(&self, id: ObjectId) -> &DataObject {
        &self.objects[id.idx()]
    }

    pub fn task_ids(&self) -> impl ExactSizeIterator<Item = TaskId> + '_ {
        (0..self.tasks.len() as u32).map(TaskId)
    }

    pub fn object_ids(&self) -> impl ExactSizeIterator<Item = ObjectId> + '_ {
        (0..self.objects.len() as u32).map(ObjectId)
    }

    pub fn predecessors(&self, id: TaskId) -> &[TaskId] {
        &self.predecessors[id.idx()]
    }

    pub fn successors(&self, id: TaskId) -> &[TaskId] {
        &self.successors[id.idx()]
    }

    /// A topological order of tasks (producers before consumers).
    pub fn topo_order(&self) -> &[TaskId] {
        &self.topo_order
    }

    pub fn task_by_name(&self, name: &str) -> Option<TaskId> {
        self.tasks
            .binary_search_by(|t| t.name.as_str().cmp(name))
            .ok()
            .map(|i| TaskId(i as u32))
    }

    pub fn object_by_name(&self, name: &str) -> Option<ObjectId> {
        self.objects
            .binary_search_by(|o| o.name.as_str().cmp(name))
            .ok()
            .map(|i| ObjectId(i as u32))
    }

    pub fn max_cores(&self) -> u32 {
        self.tasks.iter().map(|t| t.cores).max().unwrap_or(0)
    }
}

/// Incremental construction helper used by the generators and tests.
///
/// Ids are assigned in creation order and zero-padded, so the canonical
/// (sorted) order of the built graph equals the creation order.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    meta: GraphMeta,
    tasks: Vec<TaskDocument>,
    object_owner: Vec<(usize, usize)>,
    label: String,
}

/// Handle to an object created by a [`GraphBuilder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObjHandle(usize);

/// Handle to a task created by a [`GraphBuilder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskHandle(usize);

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_meta(name: &str, dataset: &str) -> Self {
        GraphBuilder {
            meta: GraphMeta {
                name: Some(name.to_string()),
                dataset: Some(dataset.to_string()),
            },
            ..Self::default()
        }
    }

    /// Suffix for the ids of subsequently created tasks; cosmetic only.
    pub fn set_label(&mut self, label: &str) {
        self.label = label.to_string();
    }

    pub fn task(&mut self, duration: f64) -> TaskHandle {
        self.task_full(duration, None, 1)
    }

    pub fn task_full(&mut self, duration: f64, expected: Option<f64>, cores: u32) -> TaskHandle {
        let idx = self.tasks.len();
        let id = if self.label.is_empty() {
            format!("t{idx:06}")
        } else {
            format!("t{idx:06}-{}", self.label)
        };
        self.tasks.push(TaskDocument {
            id,
            duration,
            expected_duration: expected,
            cores,
            inputs: Vec::new(),
            outputs: Vec::new(),
        });
        TaskHandle(idx)
    }

    pub fn output(&mut self, task: TaskHandle, size: u64, expected: Option<u64>) -> ObjHandle {
        let idx = self.object_owner.len();
        let slot = self.tasks[task.0].outputs.len();
        self.tasks[task.0].outputs.push(ObjectDocument {
            id: format!("o{idx:07}"),
            size,
            expected_size: expected,
        });
        self.object_owner.push((task.0, slot));
        ObjHandle(idx)
    }

    pub fn input(&mut self, task: TaskHandle, obj: ObjHandle) {
        let (owner, slot) = self.object_owner[obj.0];
        let name = self.tasks[owner].outputs[slot].id.clone();
        self.tasks[task.0].inputs.push(name);
    }

    pub fn inputs(&mut self, task: TaskHandle, objs: impl IntoIterator<Item = ObjHandle>) {
        for o in objs {
            self.input(task, o);
        }
    }

    pub fn size_of(&self, obj: ObjHandle) -> u64 {
        let (owner, slot) = self.object_owner[obj.0];
        self.tasks[owner].outputs[slot].size
    }

    pub fn into_document(self) -> GraphDocument {
        let meta = if self.meta == GraphMeta::default() {
            None
        } else {
            Some(self.meta)
        };
        GraphDocument {
            meta,
            tasks: self.tasks,
        }
    }

    pub fn build(self) -> Result<TaskGraph, GraphError> {
        TaskGraph::from_document(self.into_document())
    }
}

/// `(name, duration, inputs, outputs)` with outputs as `(object name, size)`.
#[cfg(test)]
pub(crate) type TaskRow<'a> = (&'a str, f64, &'a [&'a str], &'a [(&'a str, u64)]);

/// Builds a small graph from rows; unit-test helper.
#[cfg(test)]
pub(crate) fn graph_from_spec(spec: &[TaskRow<'_>]) -> Result<TaskGraph, GraphError> {
    let tasks = spec
        .iter()
        .map(|(name, dur, ins, outs)| TaskDocument {
            id: name.to_string(),
            duration: *dur,
            expected_duration: None,
            cores: 1,
            inputs: ins.iter().map(|s| s.to_string()).collect(),
            outputs: outs
                .iter()
                .map(|(o, s)| ObjectDocument {
                    id: o.to_string(),
                    size: *s,
                    expected_size: None,
                })
                .collect(),
        })
        .collect();
    TaskGraph::from_document(GraphDocument { meta: None, tasks })
}
