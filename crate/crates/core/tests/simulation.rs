mod common;

use tgsim::cluster::{parse_cluster, Cluster, WorkerId, MIB};
use tgsim::graphgen::{self, GeneratorSpec};
use tgsim::schedulers::{
    self, Assignment, GreedyTransferScheduler, ListKey, Scheduler, SchedulerUpdate, WorkStealingScheduler,
};
use tgsim::simulator::{self, RejectReason, SchedulerView, SimConfig, SimError, TraceKind};
use tgsim::taskgraph::{GraphBuilder, TaskGraph, TaskId};
use tgsim::SimRng;

use common::*;

fn traced() -> SimConfig {
    SimConfig {
        record_trace: true,
        ..SimConfig::default()
    }
}

fn run(g: &TaskGraph, cluster: &Cluster, name: &str, config: &SimConfig) -> simulator::SimulationResult {
    let mut s = schedulers::create(name).unwrap();
    simulator::run(g, cluster, s.as_mut(), config).unwrap()
}

fn starts_per_worker(trace: &[simulator::TraceEvent], workers: usize) -> Vec<usize> {
    let mut n = vec![0; workers];
    for e in trace {
        if let TraceKind::TaskStarted { worker, .. } = e.kind {
            n[worker.idx()] += 1;
        }
    }
    n
}

#[test]
fn blevel_beats_random_on_plain1n() {
    let g = graphgen::generate(&GeneratorSpec::new("plain1n", 0)).unwrap();
    let cluster = Cluster::uniform(parse_cluster("32x4").unwrap(), 256.0 * MIB);
    let blevel = run(&g, &cluster, "blevel", &SimConfig::default()).makespan;
    let random: Vec<f64> = (0..20)
        .map(|seed| {
            run(&g, &cluster, "random", &SimConfig {
                seed,
                ..SimConfig::default()
            })
            .makespan
        })
        .collect();
    assert!(blevel <= mean(&random), "blevel {blevel} vs random {}", mean(&random));
}

#[test]
fn blevel_balances_equal_tasks() {
    let mut b = GraphBuilder::new();
    for _ in 0..9 {
        b.task(1.0);
    }
    let g = b.build().unwrap();
    let cluster = Cluster::new(vec![1, 1], MIB);
    let r = run(&g, &cluster, "blevel", &traced());
    let n = starts_per_worker(&r.trace, 2);
    assert!(n[0].abs_diff(n[1]) <= 1, "{n:?}");
}

#[test]
fn work_stealing_feeds_a_starving_worker() {
    // Every consumer reads the producer's output, so all of them first go
    // to the producer's worker.
    let mut b = GraphBuilder::new();
    let p = b.task(1.0);
    let o = b.output(p, 100 * MIB as u64, None);
    for _ in 0..10 {
        let t = b.task(5.0);
        b.input(t, o);
    }
    let g = b.build().unwrap();
    let cluster = Cluster::new(vec![1, 1], 1000.0 * MIB);
    let mut ws = WorkStealingScheduler::default();
    let r = simulator::run(&g, &cluster, &mut ws, &traced()).unwrap();
    let n = starts_per_worker(&r.trace, 2);
    assert!(ws.steals() > 0);
    assert!(n[0] > 0 && n[1] > 0, "{n:?}");
    assert!(r.makespan < 1.0 + 10.0 * 5.0);
}

#[test]
fn random_on_one_worker_equals_single() {
    let g = graphgen::generate(&GeneratorSpec::new("crossv", 1)).unwrap();
    let cluster = Cluster::new(vec![4], 32.0 * MIB);
    let single = run(&g, &cluster, "single", &SimConfig::default());
    for seed in 0..3 {
        let random = run(&g, &cluster, "random", &SimConfig {
            seed,
            ..SimConfig::default()
        });
        assert_eq!(random.makespan, single.makespan);
        assert_eq!(random.transferred_bytes, 0);
    }
}

#[test]
fn single_picks_a_widest_worker() {
    let g = graphgen::generate(&GeneratorSpec::new("triplets", 0)).unwrap();
    let specs = [parse_cluster("32x4").unwrap(), parse_cluster("16x8").unwrap()];
    let cluster = Cluster::mixed(&specs, 256.0 * MIB);
    let r = run(&g, &cluster, "single", &traced());
    assert_eq!(r.transferred_bytes, 0);
    let n = starts_per_worker(&r.trace, cluster.worker_count());
    let used: Vec<usize> = (0..n.len()).filter(|&w| n[w] > 0).collect();
    assert_eq!(used.len(), 1);
    assert_eq!(cluster.cores(WorkerId(used[0] as u32)), 8);
}

#[test]
fn static_schedulers_assign_everything_at_once() {
    let g = graphgen::generate(&GeneratorSpec::new("merge_triplets", 0)).unwrap();
    let cluster = Cluster::uniform(parse_cluster("8x4").unwrap(), 256.0 * MIB);
    for name in ["blevel", "tlevel", "mcp", "dls", "etf", "genetic", "random", "single"] {
        let r = run(&g, &cluster, name, &traced());
        let first = r.trace.iter().find_map(|e| match e.kind {
            TraceKind::SchedulerInvoked { assignments } => Some((e.time, assignments)),
            _ => None,
        });
        assert_eq!(first, Some((0.0, g.task_count())), "{name}");
        let later: usize = r
            .trace
            .iter()
            .filter_map(|e| match e.kind {
                TraceKind::SchedulerInvoked { assignments } if e.time > 0.0 => Some(assignments),
                _ => None,
            })
            .sum();
        assert_eq!(later, 0, "{name}");
    }
}

#[test]
fn gt_on_uniform_cluster_never_restricts() {
    let g = graphgen::generate(&GeneratorSpec::new("triplets", 0)).unwrap();
    let cluster = Cluster::uniform(parse_cluster("32x4").unwrap(), 256.0 * MIB);
    for key in [ListKey::BLevel, ListKey::TLevel, ListKey::Alap] {
        let mut s = GreedyTransferScheduler::new(key);
        simulator::run(&g, &cluster, &mut s, &SimConfig::default()).unwrap();
        assert_eq!(s.restricted_placements(), 0);
    }
}

#[test]
fn serial_chain_without_delays() {
    let mut b = GraphBuilder::new();
    let a = b.task(1.0);
    let x = b.output(a, 10, None);
    let c = b.task(2.0);
    b.input(c, x);
    let y = b.output(c, 10, None);
    let d = b.task(3.0);
    b.input(d, y);
    let g = b.build().unwrap();
    let cluster = Cluster::new(vec![1], MIB);
    for name in schedulers::SCHEDULER_NAMES {
        let r = run(&g, &cluster, name, &SimConfig::default().with_msd(0.0));
        assert_eq!(r.makespan, 6.0, "{name}");
    }
}

/// Places everything on worker 0, then tries to move a finished, a running
/// and a pending task to worker 1.
#[derive(Default)]
struct Mover {
    round: usize,
    rejected: Vec<(TaskId, RejectReason)>,
}

impl Scheduler for Mover {
    fn name(&self) -> &str {
        "mover"
    }

    fn schedule(&mut self, view: &SchedulerView<'_>, update: &SchedulerUpdate, _: &mut SimRng) -> Vec<Assignment> {
        self.rejected.extend(update.rejected.iter().map(|r| (r.task, r.reason)));
        self.round += 1;
        match self.round {
            1 => view.task_ids().map(|t| Assignment::new(t, WorkerId(0), 0)).collect(),
            2 => {
                let finished = update.finished[0].0;
                let running = view.task_ids().find(|t| view.is_running(*t)).unwrap();
                let pending = view.task_ids().filter(|t| !view.is_running(*t) && !view.is_finished(*t)).last().unwrap();
                vec![
                    Assignment::new(finished, WorkerId(1), 0),
                    Assignment::new(running, WorkerId(1), 0),
                    Assignment::new(pending, WorkerId(1), 0),
                ]
            }
            _ => Vec::new(),
        }
    }
}

#[test]
fn reassignment_rules() {
    let mut b = GraphBuilder::new();
    b.task(1.0);
    b.task(3.0);
    b.task(3.0);
    b.task(3.0);
    let g = b.build().unwrap();
    let cluster = Cluster::new(vec![2, 1], MIB);
    let mut s = Mover::default();
    let config = SimConfig {
        record_trace: true,
        ..SimConfig::default().with_msd(0.0)
    };
    let r = simulator::run(&g, &cluster, &mut s, &config).unwrap();
    let mut reasons: Vec<RejectReason> = s.rejected.iter().map(|r| r.1).collect();
    reasons.sort_by_key(|r| *r as u8);
    assert_eq!(reasons, vec![RejectReason::Finished, RejectReason::Running]);
    let on_w1 = starts_per_worker(&r.trace, 2)[1];
    assert_eq!(on_w1, 1);
    assert_eq!(check_trace(&g, &cluster, config.netmodel, &r.trace), Ok(()));
}

struct Idle;

impl Scheduler for Idle {
    fn name(&self) -> &str {
        "idle"
    }

    fn schedule(&mut self, _: &SchedulerView<'_>, _: &SchedulerUpdate, _: &mut SimRng) -> Vec<Assignment> {
        Vec::new()
    }
}

#[test]
fn silent_scheduler_stalls() {
    let g = graphgen::generate(&GeneratorSpec::new("fork1", 0)).unwrap();
    let cluster = Cluster::uniform(parse_cluster("4x4").unwrap(), MIB);
    let err = simulator::run(&g, &cluster, &mut Idle, &SimConfig::default()).unwrap_err();
    assert!(matches!(err, SimError::SchedulerStall { unfinished: 300, .. }));
}

#[test]
fn msd_batches_events() {
    let g = graphgen::generate(&GeneratorSpec::new("plain1n", 0)).unwrap();
    let cluster = Cluster::uniform(parse_cluster("8x4").unwrap(), MIB);
    let eager = run(&g, &cluster, "ws", &SimConfig::default().with_msd(0.0));
    let lazy = run(&g, &cluster, "ws", &SimConfig::default().with_msd(6.4));
    assert!(lazy.invocations < eager.invocations);
    assert!(lazy.makespan >= eager.makespan - 1e-9);
}

#[test]
fn montage_file_runs_under_every_scheduler() {
    let g = graphgen::load(montage_path()).unwrap();
    let cluster = Cluster::uniform(parse_cluster("8x4").unwrap(), 32.0 * MIB);
    for name in schedulers::SCHEDULER_NAMES {
        let r = run(&g, &cluster, name, &traced());
        assert!(r.makespan >= lower_bound(&g, &cluster));
        assert_eq!(check_trace(&g, &cluster, traced().netmodel, &r.trace), Ok(()), "{name}");
    }
}
