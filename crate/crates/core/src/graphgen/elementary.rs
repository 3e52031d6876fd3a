//! Small synthetic shapes, each repeated enough to fill a cluster.

use rand::Rng;

use super::{Ctx, Dataset, Dist, Generator};

const fn elementary(
    name: &'static str,
    description: &'static str,
    defaults: &'static [(&'static str, f64)],
    build: fn(&mut Ctx),
) -> Generator {
    Generator {
        name,
        dataset: Dataset::Elementary,
        description,
        defaults,
        build,
    }
}

const INDEPENDENT: usize = 380;

pub(super) const PLAIN1N: Generator = elementary(
    "plain1n",
    "independent tasks, normally distributed durations",
    &[("duration_mean", 10.0), ("duration_sd", 3.0)],
    |c| {
        let d = c.normal("duration");
        for _ in 0..INDEPENDENT {
            c.task(d, 1);
        }
    },
);

pub(super) const PLAIN1E: Generator = elementary(
    "plain1e",
    "independent tasks, exponentially distributed durations",
    &[("duration_mean", 10.0)],
    |c| {
        let d = Dist::Exp {
            mean: c.p("duration_mean"),
        };
        for _ in 0..INDEPENDENT {
            c.task(d, 1);
        }
    },
);

pub(super) const PLAIN1CPUS: Generator = elementary(
    "plain1cpus",
    "independent tasks needing 1 to 4 cores",
    &[("duration_mean", 10.0), ("duration_sd", 3.0)],
    |c| {
        let d = c.normal("duration");
        for _ in 0..INDEPENDENT {
            let cores = c.rng().random_range(1..=4);
            c.task(d, cores);
        }
    },
);

pub(super) const TRIPLETS: Generator = elementary(
    "triplets",
    "chains of three tasks, the middle one needs 4 cores",
    &[
        ("outer_mean", 10.0),
        ("outer_sd", 2.0),
        ("middle_mean", 20.0),
        ("middle_sd", 4.0),
        ("size_mean", 80.0),
        ("size_sd", 10.0),
    ],
    |c| {
        let (outer, middle, size) = (c.normal("outer"), c.normal("middle"), c.normal("size"));
        for _ in 0..110 {
            c.label("first");
            let a = c.task(outer, 1);
            let x = c.output(a, size);
            c.label("middle");
            let b = c.task(middle, 4);
            c.input(b, x);
            let y = c.output(b, size);
            c.label("last");
            let d = c.task(outer, 1);
            c.input(d, y);
        }
    },
);

const MERGE_DEFAULTS: [(&str, f64); 6] = [
    ("producer_mean", 10.0),
    ("producer_sd", 2.0),
    ("merger_mean", 5.0),
    ("merger_sd", 1.0),
    ("size_mean", 99.0),
    ("size_sd", 10.0),
];

/// 107 producers in a ring; merger `i` reads outputs `i` and `i + 1`.
pub(super) const MERGE_NEIGHBOURS: Generator = elementary(
    "merge_neighbours",
    "merges of adjacent producer pairs",
    &MERGE_DEFAULTS,
    |c| {
        let n = 107;
        let (producer, merger, size) = (c.normal("producer"), c.normal("merger"), c.normal("size"));
        c.label("producer");
        let outs: Vec<_> = (0..n)
            .map(|_| {
                let t = c.task(producer, 1);
                c.output(t, size)
            })
            .collect();
        c.label("merger");
        for i in 0..n {
            let m = c.task(merger, 1);
            c.inputs(m, [outs[i], outs[(i + 1) % n]]);
        }
    },
);

pub(super) const MERGE_TRIPLETS: Generator = elementary(
    "merge_triplets",
    "merges of producer triplets",
    &[
        ("producer_mean", 10.0),
        ("producer_sd", 2.0),
        ("merger_mean", 5.0),
        ("merger_sd", 1.0),
        ("size_mean", 99.4),
        ("size_sd", 10.0),
    ],
    |c| {
        let (producer, merger, size) = (c.normal("producer"), c.normal("merger"), c.normal("size"));
        for _ in 0..37 {
            c.label("producer");
            let outs: Vec<_> = (0..3)
                .map(|_| {
                    let t = c.task(producer, 1);
                    c.output(t, size)
                })
                .collect();
            c.label("merger");
            let m = c.task(merger, 1);
            c.inputs(m, outs);
        }
    },
);

pub(super) const MERGE_SMALL_BIG: Generator = elementary(
    "merge_small_big",
    "merges of a 0.5 MiB and a 100 MiB result",
    &[
        ("producer_mean", 10.0),
        ("producer_sd", 2.0),
        ("merger_mean", 5.0),
        ("merger_sd", 1.0),
        ("small_mib", 0.5),
        ("big_mib", 100.0),
    ],
    |c| {
        let (producer, merger) = (c.normal("producer"), c.normal("merger"));
        let (small, big) = (Dist::Const(c.p("small_mib")), Dist::Const(c.p("big_mib")));
        for _ in 0..80 {
            c.label("small");
            let a = c.task(producer, 1);
            let x = c.output(a, small);
            c.label("big");
            let b = c.task(producer, 1);
            let y = c.output(b, big);
            c.label("merger");
            let m = c.task(merger, 1);
            c.inputs(m, [x, y]);
        }
    },
);

const FORK_DEFAULTS: [(&str, f64); 6] = [
    ("producer_mean", 10.0),
    ("producer_sd", 2.0),
    ("consumer_mean", 10.0),
    ("consumer_sd", 2.0),
    ("size_mean", 100.0),
    ("size_sd", 10.0),
];

pub(super) const FORK1: Generator = elementary(
    "fork1",
    "producers with two consumers of the same output",
    &FORK_DEFAULTS,
    |c| {
        let (producer, consumer, size) = (c.normal("producer"), c.normal("consumer"), c.normal("size"));
        for _ in 0..100 {
            c.label("producer");
            let p = c.task(producer, 1);
            let o = c.output(p, size);
            c.label("consumer");
            for _ in 0..2 {
                let t = c.task(consumer, 1);
                c.input(t, o);
            }
        }
    },
);

pub(super) const FORK2: Generator = elementary(
    "fork2",
    "producers with two outputs, one consumer each",
    &FORK_DEFAULTS,
    |c| {
        let (producer, consumer, size) = (c.normal("producer"), c.normal("consumer"), c.normal("size"));
        for _ in 0..100 {
            c.label("producer");
            let p = c.task(producer, 1);
            let outs = [c.output(p, size), c.output(p, size)];
            c.label("consumer");
            for o in outs {
                let t = c.task(consumer, 1);
                c.input(t, o);
            }
        }
    },
);

pub(super) const BIGMERGE: Generator = elementary(
    "bigmerge",
    "one task merging 320 outputs",
    &[
        ("producer_mean", 10.0),
        ("producer_sd", 2.0),
        ("merger_mean", 30.0),
        ("merger_sd", 5.0),
        ("size_mean", 100.0),
        ("size_sd", 10.0),
    ],
    |c| {
        let (producer, merger, size) = (c.normal("producer"), c.normal("merger"), c.normal("size"));
        c.label("producer");
        let outs: Vec<_> = (0..320)
            .map(|_| {
                let t = c.task(producer, 1);
                c.output(t, size)
            })
            .collect();
        c.label("merger");
        let m = c.task(merger, 1);
        c.inputs(m, outs);
    },
);

pub(super) const DURATION_STAIRS: Generator = elementary(
    "duration_stairs",
    "independent tasks lasting 1 to 190 s, two of each",
    &[],
    |c| {
        for step in 1..=190 {
            for _ in 0..2 {
                c.task_exact(step as f64, 1);
            }
        }
    },
);

pub(super) const SIZE_STAIRS: Generator = elementary(
    "size_stairs",
    "one producer of 190 outputs sized 1 to 190 MiB, one consumer each",
    &[
        ("producer_mean", 10.0),
        ("producer_sd", 2.0),
        ("consumer_mean", 5.0),
        ("consumer_sd", 1.0),
    ],
    |c| {
        let (producer, consumer) = (c.normal("producer"), c.normal("consumer"));
        c.label("producer");
        let p = c.task(producer, 1);
        let outs: Vec<_> = (1..=190).map(|s| c.output(p, Dist::Const(s as f64))).collect();
        c.label("consumer");
        for o in outs {
            let t = c.task(consumer, 1);
            c.input(t, o);
        }
    },
);

const TREE_DEPTH: u32 = 8;

pub(super) const SPLITTERS: Generator = elementary(
    "splitters",
    "binary tree of splitting tasks",
    &[
        ("duration_mean", 10.0),
        ("duration_sd", 2.0),
        ("size_mean", 129.5),
        ("size_sd", 10.0),
    ],
    |c| {
        let (d, size) = (c.normal("duration"), c.normal("size"));
        let root = c.task(d, 1);
        let mut level = vec![c.output(root, size)];
        for _ in 1..TREE_DEPTH {
            let mut next = Vec::with_capacity(level.len() * 2);
            for &o in &level {
                for _ in 0..2 {
                    let t = c.task(d, 1);
                    c.input(t, o);
                    next.push(c.output(t, size));
                }
            }
            level = next;
        }
    },
);

pub(super) const CONFLUX: Generator = elementary(
    "conflux",
    "pairwise merges down to one task",
    &[
        ("duration_mean", 10.0),
        ("duration_sd", 2.0),
        ("size_mean", 128.0),
        ("size_sd", 10.0),
    ],
    |c| {
        let (d, size) = (c.normal("duration"), c.normal("size"));
        let mut level: Vec<_> = (0..1usize << (TREE_DEPTH - 1))
            .map(|_| {
                let t = c.task(d, 1);
                c.output(t, size)
            })
            .collect();
        while level.len() > 1 {
            level = level
                .chunks(2)
                .map(|pair| {
                    let t = c.task(d, 1);
                    c.inputs(t, pair.iter().copied());
                    c.output(t, size)
                })
                .collect();
        }
    },
);

pub(super) const GRID: Generator = elementary(
    "grid",
    "19x19 grid, each task reads its upper and left neighbour",
    &[
        ("duration_mean", 10.0),
        ("duration_sd", 2.0),
        ("size_mean", 128.0),
        ("size_sd", 10.0),
    ],
    |c| {
        let n = 19;
        let (d, size) = (c.normal("duration"), c.normal("size"));
        let mut outs = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let t = c.task(d, 1);
                if i > 0 {
                    c.input(t, outs[(i - 1) * n + j]);
                }
                if j > 0 {
                    c.input(t, outs[i * n + j - 1]);
                }
                outs.push(c.output(t, size));
            }
        }
    },
);

pub(super) const FERN: Generator = elementary(
    "fern",
    "a 201-task chain with a side task hanging off each link",
    &[
        ("duration_mean", 10.0),
        ("duration_sd", 2.0),
        ("size_mean", 28.4),
        ("size_sd", 5.0),
    ],
    |c| {
        let (d, size) = (c.normal("duration"), c.normal("size"));
        c.label("chain");
        let first = c.task(d, 1);
        let mut prev = c.output(first, size);
        for _ in 0..200 {
            c.label("side");
            let s = c.task(d, 1);
            c.input(s, prev);
            c.output(s, size);
            c.label("chain");
            let t = c.task(d, 1);
            c.input(t, prev);
            prev = c.output(t, size);
        }
    },
);
