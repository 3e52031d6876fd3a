//! Benchmark graph generators and the external graph loader.
//!
//! Every generator is a pure function of its name, seed and parameter
//! overrides. Parameters only shape the duration and size distributions;
//! the graph structure is fixed. Defaults are listed in `DATASETS.md`.

mod elementary;
mod irw;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::SeedableRng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::MIB;
use crate::taskgraph::{GraphBuilder, GraphError, ObjHandle, TaskGraph, TaskHandle};
use crate::SimRng;

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("invalid parameter `{name}` for `{generator}`: {reason}")]
    InvalidParameter {
        generator: String,
        name: String,
        reason: String,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Elementary,
    Irw,
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dataset::Elementary => "elementary",
            Dataset::Irw => "irw",
        })
    }
}

/// Which graph to build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl GeneratorSpec {
    pub fn new(name: &str, seed: u64) -> Self {
        GeneratorSpec {
            name: name.to_string(),
            seed,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }
}

pub struct Generator {
    pub name: &'static str,
    pub dataset: Dataset,
    pub description: &'static str,
    pub defaults: &'static [(&'static str, f64)],
    build: fn(&mut Ctx),
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Generator")
            .field("name", &self.name)
            .field("dataset", &self.dataset)
            .finish()
    }
}

const GENERATORS: &[Generator] = &[
    elementary::PLAIN1N,
    elementary::PLAIN1E,
    elementary::PLAIN1CPUS,
    elementary::TRIPLETS,
    elementary::MERGE_NEIGHBOURS,
    elementary::MERGE_TRIPLETS,
    elementary::MERGE_SMALL_BIG,
    elementary::FORK1,
    elementary::FORK2,
    elementary::BIGMERGE,
    elementary::DURATION_STAIRS,
    elementary::SIZE_STAIRS,
    elementary::SPLITTERS,
    elementary::CONFLUX,
    elementary::GRID,
    elementary::FERN,
    irw::GRIDCAT,
    irw::CROSSV,
    irw::CROSSVX,
    irw::FASTCROSSV,
    irw::MAPREDUCE,
    irw::NESTEDCROSSV,
];

/// All generators, elementary first, in a stable order.
pub fn list_generators() -> &'static [Generator] {
    GENERATORS
}

pub fn find(name: &str) -> Option<&'static Generator> {
    let canonical = name.replace('-', "_");
    GENERATORS.iter().find(|g| g.name == canonical)
}

pub fn generate(spec: &GeneratorSpec) -> Result<TaskGraph, GenError> {
    let g = find(&spec.name).ok_or_else(|| GenError::UnknownGenerator(spec.name.clone()))?;
    let mut params: BTreeMap<&'static str, f64> = g.defaults.iter().copied().collect();
    for (key, &value) in &spec.params {
        let invalid = |reason: &str| GenError::InvalidParameter {
            generator: g.name.to_string(),
            name: key.clone(),
            reason: reason.to_string(),
        };
        let slot = params
            .iter_mut()
            .find(|(k, _)| **k == key.as_str())
            .map(|(_, v)| v)
            .ok_or_else(|| invalid("not a parameter of this generator"))?;
        if !value.is_finite() || value < 0.0 {
            return Err(invalid("must be a finite non-negative number"));
        }
        *slot = value;
    }
    let mut ctx = Ctx {
        b: GraphBuilder::with_meta(g.name, &g.dataset.to_string()),
        rng: SimRng::seed_from_u64(spec.seed),
        params,
        duration_divisor: 1.0,
    };
    (g.build)(&mut ctx);
    Ok(ctx.b.build()?)
}

/// Loads a graph file (the pegasus set is distributed this way).
pub fn load(path: impl AsRef<Path>) -> Result<TaskGraph, GraphError> {
    TaskGraph::load(path)
}

/// A duration or size distribution. Sizes are in MiB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Dist {
    Const(f64),
    Normal { mean: f64, sd: f64 },
    Exp { mean: f64 },
}

impl Dist {
    fn mean(self) -> f64 {
        match self {
            Dist::Const(v) => v,
            Dist::Normal { mean, .. } | Dist::Exp { mean } => mean,
        }
    }

    fn sd(self) -> f64 {
        match self {
            Dist::Const(_) => 0.0,
            Dist::Normal { sd, .. } => sd,
            Dist::Exp { mean } => mean,
        }
    }

    fn sample(self, rng: &mut SimRng) -> f64 {
        let v = match self {
            Dist::Const(v) => v,
            Dist::Normal { mean, sd } => Normal::new(mean, sd).expect("validated sd").sample(rng),
            Dist::Exp { mean } => {
                if mean > 0.0 {
                    Exp::new(1.0 / mean).expect("positive rate").sample(rng)
                } else {
                    0.0
                }
            }
        };
        v.max(0.0)
    }

    /// Category-level user estimate: a draw from a normal with the same
    /// mean and spread, independent of the actual value.
    fn estimate(self, rng: &mut SimRng) -> f64 {
        Dist::Normal {
            mean: self.mean(),
            sd: self.sd(),
        }
        .sample(rng)
    }
}

pub(crate) fn mib(v: f64) -> u64 {
    (v * MIB).round() as u64
}

/// Generation context: builder, RNG and resolved parameters.
pub(crate) struct Ctx {
    b: GraphBuilder,
    rng: SimRng,
    params: BTreeMap<&'static str, f64>,
    duration_divisor: f64,
}

impl Ctx {
    /// Every sampled duration (and estimate) is divided by `d`.
    pub(crate) fn set_duration_divisor(&mut self, d: f64) {
        self.duration_divisor = d;
    }

    pub(crate) fn p(&self, key: &str) -> f64 {
        *self
            .params
            .get(key)
            .unwrap_or_else(|| panic!("generator reads undeclared parameter `{key}`"))
    }

    /// `Normal(<prefix>_mean, <prefix>_sd)`.
    pub(crate) fn normal(&self, prefix: &str) -> Dist {
        Dist::Normal {
            mean: self.p(&format!("{prefix}_mean")),
            sd: self.p(&format!("{prefix}_sd")),
        }
    }

    pub(crate) fn label(&mut self, label: &str) {
        self.b.set_label(label);
    }

    pub(crate) fn task(&mut self, duration: Dist, cores: u32) -> TaskHandle {
        let d = duration.sample(&mut self.rng) / self.duration_divisor;
        let e = duration.estimate(&mut self.rng) / self.duration_divisor;
        self.b.task_full(d, Some(e), cores)
    }

    pub(crate) fn task_exact(&mut self, duration: f64, cores: u32) -> TaskHandle {
        self.b.task_full(duration, Some(duration), cores)
    }

    /// Output with a size drawn from `size` (MiB).
    pub(crate) fn output(&mut self, task: TaskHandle, size: Dist) -> ObjHandle {
        let s = mib(size.sample(&mut self.rng));
        let e = mib(size.estimate(&mut self.rng));
        self.b.output(task, s, Some(e))
    }

    pub(crate) fn output_bytes(&mut self, task: TaskHandle, size: u64, expected: u64) -> ObjHandle {
        self.b.output(task, size, Some(expected))
    }

    pub(crate) fn input(&mut self, task: TaskHandle, obj: ObjHandle) {
        self.b.input(task, obj);
    }

    pub(crate) fn inputs(&mut self, task: TaskHandle, objs: impl IntoIterator<Item = ObjHandle>) {
        self.b.inputs(task, objs);
    }

    pub(crate) fn size_of(&self, obj: ObjHandle) -> u64 {
        self.b.size_of(obj)
    }

    pub(crate) fn rng(&mut self) -> &mut SimRng {
        &mut self.rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_has_every_row() {
        let names: Vec<&str> = list_generators().iter().map(|g| g.name).collect();
        assert_eq!(names.len(), 22);
        assert!(names.contains(&"plain1n"));
        assert!(names.contains(&"nestedcrossv"));
        let elementary = list_generators().iter().filter(|g| g.dataset == Dataset::Elementary).count();
        assert_eq!(elementary, 16);
        assert!(find("merge-small-big").is_some());
    }

    #[test]
    fn unknown_generator_and_parameter() {
        assert_eq!(
            generate(&GeneratorSpec::new("nope", 0)).unwrap_err(),
            GenError::UnknownGenerator("nope".into())
        );
        let err = generate(&GeneratorSpec::new("plain1n", 0).with_param("bogus", 1.0)).unwrap_err();
        assert!(matches!(err, GenError::InvalidParameter { .. }));
        let err = generate(&GeneratorSpec::new("plain1n", 0).with_param("duration_sd", -1.0)).unwrap_err();
        assert!(matches!(err, GenError::InvalidParameter { .. }));
    }

    #[test]
    fn override_changes_distribution() {
        let g = generate(&GeneratorSpec::new("plain1n", 1).with_param("duration_sd", 0.0)).unwrap();
        assert!(g.tasks().iter().all(|t| t.duration == 10.0));
    }

    #[test]
    fn same_seed_same_bytes() {
        for g in list_generators() {
            if g.name == "mapreduce" {
                continue;
            }
            let a = generate(&GeneratorSpec::new(g.name, 5)).unwrap().to_json();
            let b = generate(&GeneratorSpec::new(g.name, 5)).unwrap().to_json();
            assert_eq!(a, b, "{}", g.name);
        }
    }
}
