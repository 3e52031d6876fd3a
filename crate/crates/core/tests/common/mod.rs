//! Brute-force oracles and trace checkers shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use rand::Rng;
use tgsim::cluster::{Cluster, WorkerId};
use tgsim::netmodel::{Flow, NetModelKind};
use tgsim::simulator::{TraceEvent, TraceKind};
use tgsim::taskgraph::{GraphBuilder, TaskGraph, TaskId};
use tgsim::SimRng;

/// `(name, #T, #O, TS GiB, LP)` for every dataset graph.
pub const DATASET_TABLE: &[(&str, usize, usize, f64, usize)] = &[
    ("plain1n", 380, 0, 0.00, 1),
    ("plain1e", 380, 0, 0.00, 1),
    ("plain1cpus", 380, 0, 0.00, 1),
    ("triplets", 330, 220, 17.19, 3),
    ("merge_neighbours", 214, 107, 10.36, 2),
    ("merge_triplets", 148, 111, 10.77, 2),
    ("merge_small_big", 240, 160, 7.74, 2),
    ("fork1", 300, 100, 9.77, 2),
    ("fork2", 300, 200, 19.53, 2),
    ("bigmerge", 321, 320, 31.25, 2),
    ("duration_stairs", 380, 0, 0.00, 1),
    ("size_stairs", 191, 190, 17.53, 2),
    ("splitters", 255, 255, 32.25, 8),
    ("conflux", 255, 255, 31.88, 8),
    ("grid", 361, 361, 45.12, 37),
    ("fern", 401, 401, 11.11, 201),
    ("gridcat", 401, 401, 115.71, 4),
    ("crossv", 94, 90, 8.52, 5),
    ("crossvx", 200, 200, 32.66, 5),
    ("fastcrossv", 94, 90, 8.52, 5),
    ("mapreduce", 321, 25760, 439.06, 3),
    ("nestedcrossv", 266, 270, 28.41, 8),
];

pub const MONTAGE_ROW: (&str, usize, usize, f64, usize) = ("montage", 77, 150, 0.21, 6);

pub fn montage_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/montage.json")
}

/// Random DAG with up to `max_tasks` tasks. Durations are multiples of 0.5
/// so that path sums are exact in any order.
pub fn random_dag(rng: &mut SimRng, max_tasks: usize) -> TaskGraph {
    let n = rng.random_range(1..=max_tasks);
    let mut b = GraphBuilder::new();
    let mut outs = Vec::new();
    for _ in 0..n {
        let t = b.task_full(rng.random_range(0..20) as f64 * 0.5, None, 1);
        for &o in &outs {
            if rng.random_bool(0.35) {
                b.input(t, o);
            }
        }
        outs.push(b.output(t, rng.random_range(0..1000), None));
    }
    b.build().expect("acyclic by construction")
}

/// Task-level edges rebuilt from object producers and consumers.
fn edges(graph: &TaskGraph) -> Vec<Vec<usize>> {
    let mut succ = vec![Vec::new(); graph.task_count()];
    for o in graph.objects() {
        for c in &o.consumers {
            succ[o.producer.idx()].push(c.idx());
        }
    }
    succ
}

fn all_paths(succ: &[Vec<usize>], from: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    path.push(from);
    out.push(path.clone());
    for &s in &succ[from] {
        all_paths(succ, s, path, out);
    }
    path.pop();
}

/// `(b-level, t-level, alap)` by enumerating every path of the DAG.
pub fn levels_by_enumeration(graph: &TaskGraph) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = graph.task_count();
    let succ = edges(graph);
    let dur: Vec<f64> = graph.tasks().iter().map(|t| t.duration).collect();
    let mut paths = Vec::new();
    for s in 0..n {
        all_paths(&succ, s, &mut Vec::new(), &mut paths);
    }
    let mut b = vec![0.0f64; n];
    let mut t = vec![0.0f64; n];
    for p in &paths {
        let len: f64 = p.iter().map(|&i| dur[i]).sum();
        let first = p[0];
        let last = *p.last().unwrap();
        b[first] = b[first].max(len);
        t[last] = t[last].max(len - dur[last]);
    }
    let cp = b.iter().copied().fold(0.0, f64::max);
    let alap = b.iter().map(|x| cp - x).collect();
    (b, t, alap)
}

/// Random flows over at most 8 workers and 12 transfers. Caps are drawn
/// from a small set so that ties between bottlenecks are common.
pub fn random_flows(rng: &mut SimRng) -> (Vec<Flow>, Vec<f64>, Vec<f64>) {
    let workers = rng.random_range(2..=8);
    let caps = [1.0, 2.0, 3.0, 10.0, 0.5];
    let cap = |rng: &mut SimRng| {
        if rng.random_bool(0.7) {
            caps[rng.random_range(0..caps.len())]
        } else {
            rng.random_range(0.1..20.0)
        }
    };
    let up: Vec<f64> = (0..workers).map(|_| cap(rng)).collect();
    let down: Vec<f64> = (0..workers).map(|_| cap(rng)).collect();
    let flows = (0..rng.random_range(1..=12))
        .map(|_| {
            let source = rng.random_range(0..workers);
            let mut target = rng.random_range(0..workers - 1);
            if target >= source {
                target += 1;
            }
            Flow { source, target }
        })
        .collect();
    (flows, up, down)
}

/// Water filling: at each round the resource with the smallest fair share
/// fixes the rate of all flows still crossing it.
pub fn maxmin_oracle(flows: &[Flow], up: &[f64], down: &[f64]) -> Vec<f64> {
    let w = up.len();
    let res = |f: &Flow| [f.source, w + f.target];
    let caps: Vec<f64> = up.iter().chain(down).copied().collect();
    let mut rate: Vec<Option<f64>> = vec![None; flows.len()];
    while rate.iter().any(Option::is_none) {
        let mut best = f64::INFINITY;
        let mut shares = vec![f64::INFINITY; 2 * w];
        for r in 0..2 * w {
            let mut fixed = 0.0;
            let mut open = 0;
            for (i, f) in flows.iter().enumerate() {
                if res(f).contains(&r) {
                    match rate[i] {
                        Some(x) => fixed += x,
                        None => open += 1,
                    }
                }
            }
            if open > 0 {
                shares[r] = ((caps[r] - fixed) / open as f64).max(0.0);
                best = best.min(shares[r]);
            }
        }
        for (i, f) in flows.iter().enumerate() {
            if rate[i].is_none() && res(f).iter().any(|&r| shares[r] <= best * (1.0 + 1e-12)) {
                rate[i] = Some(best);
            }
        }
    }
    rate.into_iter().map(Option::unwrap).collect()
}

/// Feasible, and every flow has a saturated resource on which no other flow
/// is faster. Equivalent to: no rate can grow without lowering an
/// equal-or-smaller one.
pub fn is_maxmin_fair(flows: &[Flow], up: &[f64], down: &[f64], rates: &[f64], tol: f64) -> Result<(), String> {
    let w = up.len();
    let caps: Vec<f64> = up.iter().chain(down).copied().collect();
    let res = |f: &Flow| [f.source, w + f.target];
    let mut load = vec![0.0; 2 * w];
    let mut fastest = vec![0.0f64; 2 * w];
    for (f, &x) in flows.iter().zip(rates) {
        if x < -tol {
            return Err(format!("negative rate {x}"));
        }
        for r in res(f) {
            load[r] += x;
            fastest[r] = fastest[r].max(x);
        }
    }
    for r in 0..2 * w {
        if load[r] > caps[r] * (1.0 + tol) + tol {
            return Err(format!("resource {r} over capacity: {} > {}", load[r], caps[r]));
        }
    }
    for (i, (f, &x)) in flows.iter().zip(rates).enumerate() {
        let bottleneck = res(f)
            .iter()
            .any(|&r| load[r] >= caps[r] * (1.0 - tol) - tol && x >= fastest[r] * (1.0 - tol) - tol);
        if !bottleneck {
            return Err(format!("flow {i} at rate {x} has no bottleneck"));
        }
    }
    Ok(())
}

/// Makespan lower bound: the critical path, and total work spread over every core.
pub fn lower_bound(graph: &TaskGraph, cluster: &Cluster) -> f64 {
    let cp = levels_fast_cp(graph);
    let work: f64 = graph.tasks().iter().map(|t| t.duration * t.cores as f64).sum();
    cp.max(work / cluster.total_cores() as f64)
}

fn levels_fast_cp(graph: &TaskGraph) -> f64 {
    let succ = edges(graph);
    let mut b = vec![0.0f64; graph.task_count()];
    for &t in graph.topo_order().iter().rev() {
        let i = t.idx();
        let tail = succ[i].iter().map(|&s| b[s]).fold(0.0, f64::max);
        b[i] = graph.task(t).duration + tail;
    }
    b.into_iter().fold(0.0, f64::max)
}

/// Replays a trace and checks the worker model: core capacity, download
/// slots, input locality, and one start/finish per task on one worker.
pub fn check_trace(graph: &TaskGraph, cluster: &Cluster, netmodel: NetModelKind, trace: &[TraceEvent]) -> Result<(), String> {
    let n = graph.task_count();
    let mut used = vec![0u32; cluster.worker_count()];
    let mut started: Vec<Option<(WorkerId, f64)>> = vec![None; n];
    let mut finished = vec![false; n];
    let mut downloads = vec![0usize; cluster.worker_count()];
    let mut per_pair: HashMap<(WorkerId, WorkerId), usize> = HashMap::new();
    let mut local: Vec<Vec<bool>> = vec![vec![false; graph.object_count()]; cluster.worker_count()];
    let limited = netmodel == NetModelKind::MaxMin;

    for ev in trace {
        match ev.kind {
            TraceKind::TaskStarted { task, worker, cores } => {
                let t = graph.task(task);
                if cores != t.cores {
                    return Err(format!("{} started with {cores} cores, needs {}", t.name, t.cores));
                }
                if started[task.idx()].is_some() {
                    return Err(format!("{} started twice", t.name));
                }
                used[worker.idx()] += cores;
                if used[worker.idx()] > cluster.cores(worker) {
                    return Err(format!("worker {worker} over capacity at t={}", ev.time));
                }
                if let Some(o) = t.inputs.iter().find(|o| !local[worker.idx()][o.idx()]) {
                    return Err(format!("{} started on {worker} without {}", t.name, graph.object(*o).name));
                }
                started[task.idx()] = Some((worker, ev.time));
            }
            TraceKind::TaskFinished { task, worker } => {
                let t = graph.task(task);
                let Some((w, at)) = started[task.idx()] else {
                    return Err(format!("{} finished before starting", t.name));
                };
                if w != worker || finished[task.idx()] {
                    return Err(format!("{} finished twice or elsewhere", t.name));
                }
                let expect = at + t.duration;
                if (ev.time - expect).abs() > 1e-9 * expect.max(1.0) {
                    return Err(format!("{} ran {} s, duration {}", t.name, ev.time - at, t.duration));
                }
                finished[task.idx()] = true;
                used[worker.idx()] -= t.cores;
                for o in &t.outputs {
                    local[worker.idx()][o.idx()] = true;
                }
            }
            TraceKind::TransferStarted { source, target, object, .. } => {
                if !local[source.idx()][object.idx()] {
                    return Err(format!("{} sent from {source} which lacks it", graph.object(object).name));
                }
                downloads[target.idx()] += 1;
                let pair = per_pair.entry((source, target)).or_default();
                *pair += 1;
                if limited && (downloads[target.idx()] > 4 || *pair > 2) {
                    return Err(format!("download slots exceeded on {target} at t={}", ev.time));
                }
            }
            TraceKind::TransferFinished { source, target, object, .. } => {
                downloads[target.idx()] -= 1;
                *per_pair.get_mut(&(source, target)).expect("started") -= 1;
                local[target.idx()][object.idx()] = true;
            }
            _ => {}
        }
    }
    if let Some(i) = (0..n).find(|&i| !finished[i]) {
        return Err(format!("{} never finished", graph.task(TaskId(i as u32)).name));
    }
    Ok(())
}

/// Bytes moved according to the trace.
pub fn traced_bytes(trace: &[TraceEvent]) -> u64 {
    trace
        .iter()
        .map(|e| match e.kind {
            TraceKind::TransferFinished { bytes, .. } => bytes,
            _ => 0,
        })
        .sum()
}

pub fn invocation_times(trace: &[TraceEvent]) -> Vec<f64> {
    trace
        .iter()
        .filter(|e| matches!(e.kind, TraceKind::SchedulerInvoked { .. }))
        .map(|e| e.time)
        .collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Count of trace events per event name.
pub fn event_counts(trace: &[TraceEvent]) -> BTreeMap<&'static str, usize> {
    let mut m = BTreeMap::new();
    for e in trace {
        *m.entry(e.event_name()).or_insert(0) += 1;
    }
    m
}
