//! Graphs shaped after real workflows: file concatenation, cross
//! validation, map-reduce.

use super::{Ctx, Dataset, Dist, Generator};
use crate::taskgraph::ObjHandle;

const fn irw(
    name: &'static str,
    description: &'static str,
    defaults: &'static [(&'static str, f64)],
    build: fn(&mut Ctx),
) -> Generator {
    Generator {
        name,
        dataset: Dataset::Irw,
        description,
        defaults,
        build,
    }
}

/// Size of summary outputs (scores, hashes), in MiB.
const TINY: Dist = Dist::Const(0.01);

/// Output whose size is the sum of `parts`, as when files are concatenated.
fn joined(c: &mut Ctx, task: crate::taskgraph::TaskHandle, parts: &[ObjHandle], fraction: f64) -> ObjHandle {
    let total: u64 = parts.iter().map(|o| c.size_of(*o)).sum();
    let size = (total as f64 * fraction).round() as u64;
    c.output_bytes(task, size, size)
}

pub(super) const GRIDCAT: Generator = irw(
    "gridcat",
    "pairwise concatenation of 300 MiB files, hashed and collected",
    &[
        ("open_mean", 5.0),
        ("open_sd", 1.0),
        ("cat_mean", 10.0),
        ("cat_sd", 2.0),
        ("hash_mean", 20.0),
        ("hash_sd", 3.0),
        ("final_mean", 5.0),
        ("final_sd", 1.0),
        ("file_mib", 300.0),
    ],
    |c| {
        let files = 20;
        let (open, cat, hash, fin) = (c.normal("open"), c.normal("cat"), c.normal("hash"), c.normal("final"));
        let file = Dist::Const(c.p("file_mib"));
        c.label("open");
        let opened: Vec<_> = (0..files)
            .map(|_| {
                let t = c.task(open, 1);
                c.output(t, file)
            })
            .collect();
        let mut hashes = Vec::new();
        for i in 0..files {
            for j in i + 1..files {
                c.label("cat");
                let t = c.task(cat, 1);
                c.inputs(t, [opened[i], opened[j]]);
                let joined = joined(c, t, &[opened[i], opened[j]], 1.0);
                c.label("hash");
                let h = c.task(hash, 1);
                c.input(h, joined);
                hashes.push(c.output(h, TINY));
            }
        }
        c.label("final");
        let f = c.task(fin, 1);
        c.inputs(f, hashes);
        c.output(f, TINY);
    },
);

const CROSSV_DEFAULTS: [(&str, f64); 14] = [
    ("chunk_mean", 5.0),
    ("chunk_sd", 1.0),
    ("merge_mean", 10.0),
    ("merge_sd", 2.0),
    ("train_mean", 60.0),
    ("train_sd", 10.0),
    ("eval_mean", 15.0),
    ("eval_sd", 3.0),
    ("score_mean", 1.0),
    ("score_sd", 0.2),
    ("chunk_mib_mean", 100.0),
    ("chunk_mib_sd", 5.0),
    ("model_mib_mean", 17.0),
    ("model_mib_sd", 2.0),
];

/// One k-fold cross validation over several configurations. Score tasks
/// get an output when `scored_outputs` is set.
fn cross_validation(c: &mut Ctx, folds: usize, configs: usize, scored_outputs: bool) {
    let chunk = c.normal("chunk");
    let merge = c.normal("merge");
    let train = c.normal("train");
    let eval = c.normal("eval");
    let score = c.normal("score");
    let (chunk_size, model_size) = (c.normal("chunk_mib"), c.normal("model_mib"));

    c.label("chunk");
    let chunks: Vec<_> = (0..folds)
        .map(|_| {
            let t = c.task(chunk, 1);
            c.output(t, chunk_size)
        })
        .collect();
    c.label("merge");
    let training_sets: Vec<_> = (0..folds)
        .map(|k| {
            let others: Vec<_> = (0..folds).filter(|&i| i != k).map(|i| chunks[i]).collect();
            let t = c.task(merge, 1);
            c.inputs(t, others.iter().copied());
            joined(c, t, &others, 1.0)
        })
        .collect();
    for _ in 0..configs {
        let mut results = Vec::with_capacity(folds);
        for k in 0..folds {
            c.label("train");
            let t = c.task(train, 1);
            c.input(t, training_sets[k]);
            let model = c.output(t, model_size);
            c.label("eval");
            let e = c.task(eval, 1);
            c.inputs(e, [model, chunks[k]]);
            results.push(c.output(e, TINY));
        }
        c.label("score");
        let s = c.task(score, 1);
        c.inputs(s, results);
        if scored_outputs {
            c.output(s, TINY);
        }
    }
}

pub(super) const CROSSV: Generator = irw(
    "crossv",
    "9-fold cross validation of 4 configurations",
    &CROSSV_DEFAULTS,
    |c| cross_validation(c, 9, 4, false),
);

pub(super) const FASTCROSSV: Generator = irw(
    "fastcrossv",
    "crossv with 50x shorter tasks",
    &CROSSV_DEFAULTS,
    |c| {
        c.set_duration_divisor(50.0);
        cross_validation(c, 9, 4, false);
    },
);

pub(super) const CROSSVX: Generator = irw(
    "crossvx",
    "4 independent 8-fold cross validations of 2 configurations",
    &[
        ("chunk_mean", 5.0),
        ("chunk_sd", 1.0),
        ("merge_mean", 10.0),
        ("merge_sd", 2.0),
        ("train_mean", 60.0),
        ("train_sd", 10.0),
        ("eval_mean", 15.0),
        ("eval_sd", 3.0),
        ("score_mean", 1.0),
        ("score_sd", 0.2),
        ("chunk_mib_mean", 128.0),
        ("chunk_mib_sd", 5.0),
        ("model_mib_mean", 17.0),
        ("model_mib_sd", 2.0),
    ],
    |c| {
        for _ in 0..4 {
            cross_validation(c, 8, 2, true);
        }
    },
);

pub(super) const MAPREDUCE: Generator = irw(
    "mapreduce",
    "160 maps over generated partitions, all-to-all shuffle into 160 reduces",
    &[
        ("generate_mean", 30.0),
        ("generate_sd", 5.0),
        ("map_mean", 40.0),
        ("map_sd", 8.0),
        ("reduce_mean", 20.0),
        ("reduce_sd", 4.0),
        ("partition_mib_mean", 1400.0),
        ("partition_mib_sd", 100.0),
        ("shuffle_mib_mean", 8.8),
        ("shuffle_mib_sd", 1.0),
    ],
    |c| {
        let n = 160;
        let (generate, map, reduce) = (c.normal("generate"), c.normal("map"), c.normal("reduce"));
        let (partition, shuffle) = (c.normal("partition_mib"), c.normal("shuffle_mib"));
        c.label("generate");
        let g = c.task(generate, 1);
        let parts: Vec<_> = (0..n).map(|_| c.output(g, partition)).collect();
        c.label("map");
        let mapped: Vec<Vec<ObjHandle>> = parts
            .into_iter()
            .map(|p| {
                let t = c.task(map, 1);
                c.input(t, p);
                (0..n).map(|_| c.output(t, shuffle)).collect()
            })
            .collect();
        c.label("reduce");
        for j in 0..n {
            let t = c.task(reduce, 1);
            c.inputs(t, mapped.iter().map(|m| m[j]));
        }
    },
);

pub(super) const NESTEDCROSSV: Generator = irw(
    "nestedcrossv",
    "5-fold outer cross validation, each with 2-fold model selection over 12 configurations",
    &[
        ("chunk_mean", 10.0),
        ("chunk_sd", 2.0),
        ("split_mean", 20.0),
        ("split_sd", 4.0),
        ("train_mean", 60.0),
        ("train_sd", 10.0),
        ("eval_mean", 15.0),
        ("eval_sd", 3.0),
        ("select_mean", 1.0),
        ("select_sd", 0.2),
        ("final_train_mean", 90.0),
        ("final_train_sd", 15.0),
        ("aggregate_mean", 1.0),
        ("aggregate_sd", 0.2),
        ("chunk_mib_mean", 1000.0),
        ("chunk_mib_sd", 50.0),
        ("model_mib_mean", 34.0),
        ("model_mib_sd", 4.0),
    ],
    |c| {
        let (outer, configs) = (5, 12);
        let chunk = c.normal("chunk");
        let split = c.normal("split");
        let train = c.normal("train");
        let eval = c.normal("eval");
        let select = c.normal("select");
        let final_train = c.normal("final_train");
        let aggregate = c.normal("aggregate");
        let (chunk_size, model_size) = (c.normal("chunk_mib"), c.normal("model_mib"));

        c.label("chunk");
        let chunks: Vec<_> = (0..outer)
            .map(|_| {
                let t = c.task(chunk, 1);
                c.output(t, chunk_size)
            })
            .collect();
        let mut finals = Vec::with_capacity(outer);
        for k in 0..outer {
            let others: Vec<_> = (0..outer).filter(|&i| i != k).map(|i| chunks[i]).collect();
            c.label("split");
            let s = c.task(split, 1);
            c.inputs(s, others.iter().copied());
            let inner = [joined(c, s, &others, 0.5), joined(c, s, &others, 0.5)];
            let mut scores = Vec::with_capacity(configs * 2);
            for _ in 0..configs {
                for fold in 0..2 {
                    c.label("train");
                    let t = c.task(train, 1);
                    c.input(t, inner[1 - fold]);
                    let model = c.output(t, model_size);
                    c.label("eval");
                    let e = c.task(eval, 1);
                    c.inputs(e, [model, inner[fold]]);
                    scores.push(c.output(e, TINY));
                }
            }
            c.label("select");
            let sel = c.task(select, 1);
            c.inputs(sel, scores);
            let choice = c.output(sel, TINY);
            c.label("final-train");
            let ft = c.task(final_train, 1);
            c.inputs(ft, [inner[0], inner[1], choice]);
            let model = c.output(ft, model_size);
            c.label("final-eval");
            let fe = c.task(eval, 1);
            c.inputs(fe, [model, chunks[k]]);
            finals.push(c.output(fe, TINY));
        }
        c.label("aggregate");
        let a = c.task(aggregate, 1);
        c.inputs(a, finals);
    },
);
