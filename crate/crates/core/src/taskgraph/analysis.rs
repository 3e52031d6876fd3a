//! Static graph analyses: levels, ALAP times, and summary statistics.
//!
//! Levels are computed over the task-level DAG using task durations only;
//! object sizes never contribute to path lengths.

use super::{GraphError, TaskGraph};

/// Summary row in the shape of the dataset table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphStats {
    pub task_count: usize,
    pub object_count: usize,
    pub total_output_bytes: u64,
    /// Number of tasks on the longest oriented path.
    pub longest_path_tasks: usize,
}

impl GraphStats {
    pub fn total_output_gib(&self) -> f64 {
        self.total_output_bytes as f64 / (1u64 << 30) as f64
    }

    /// `#T,#O,TS[GiB],LP`, e.g. `380,0,0.00,1`.
    pub fn to_row(&self) -> String {
        format!(
            "{},{},{:.2},{}",
            self.task_count,
            self.object_count,
            self.total_output_gib(),
            self.longest_path_tasks
        )
    }
}

/// Longest duration sum from each task (inclusive) to any leaf.
pub fn b_level(graph: &TaskGraph) -> Vec<f64> {
    let durations: Vec<f64> = graph.tasks().iter().map(|t| t.duration).collect();
    b_level_with(graph, &durations)
}

/// [`b_level`] with caller-supplied durations (e.g. imode estimates).
pub fn b_level_with(graph: &TaskGraph, durations: &[f64]) -> Vec<f64> {
    let mut level = vec![0.0; graph.task_count()];
    for &t in graph.topo_order().iter().rev() {
        let tail = graph
            .successors(t)
            .iter()
            .map(|s| level[s.idx()])
            .fold(0.0, f64::max);
        level[t.idx()] = durations[t.idx()] + tail;
    }
    level
}

/// Longest duration sum from any source to each task, excluding the task itself.
pub fn t_level(graph: &TaskGraph) -> Vec<f64> {
    let durations: Vec<f64> = graph.tasks().iter().map(|t| t.duration).collect();
    t_level_with(graph, &durations)
}

pub fn t_level_with(graph: &TaskGraph, durations: &[f64]) -> Vec<f64> {
    let mut level = vec![0.0; graph.task_count()];
    for &t in graph.topo_order() {
        level[t.idx()] = graph
            .predecessors(t)
            .iter()
            .map(|p| level[p.idx()] + durations[p.idx()])
            .fold(0.0, f64::max);
    }
    level
}

/// As-late-as-possible start times: critical path length minus b-level.
pub fn alap(graph: &TaskGraph) -> Vec<f64> {
    let b = b_level(graph);
    alap_from_b_level(&b)
}

pub(crate) fn alap_from_b_level(b: &[f64]) -> Vec<f64> {
    let cp = b.iter().copied().fold(0.0, f64::max);
    b.iter().map(|x| cp - x).collect()
}

/// Length of the duration-only critical path.
pub fn critical_path(graph: &TaskGraph) -> f64 {
    b_level(graph).into_iter().fold(0.0, f64::max)
}

pub fn stats(graph: &TaskGraph) -> GraphStats {
    let mut depth = vec![0usize; graph.task_count()];
    for &t in graph.topo_order() {
        depth[t.idx()] = 1 + graph
            .predecessors(t)
            .iter()
            .map(|p| depth[p.idx()])
            .max()
            .unwrap_or(0);
    }
    GraphStats {
        task_count: graph.task_count(),
        object_count: graph.object_count(),
        total_output_bytes: graph.objects().iter().map(|o| o.size).sum(),
        longest_path_tasks: depth.into_iter().max().unwrap_or(0),
    }
}

/// Mean task duration and mean object size. The mean size of a graph
/// without objects is 0.
pub fn means(graph: &TaskGraph) -> Result<(f64, f64), GraphError> {
    if graph.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    let mean_duration = graph.tasks().iter().map(|t| t.duration).sum::<f64>() / graph.task_count() as f64;
    let mean_size = if graph.object_count() == 0 {
        0.0
    } else {
        graph.objects().iter().map(|o| o.size as f64).sum::<f64>() / graph.object_count() as f64
    };
    Ok((mean_duration, mean_size))
}
