//! Genetic search over task-to-worker maps.
//!
//! A chromosome holds one worker per task. It is decoded by placing tasks in
//! b-level order with the earliest-start estimator; the estimated makespan is
//! the fitness (lower is better). Chromosomes putting a task on a worker
//! with too few cores are never admitted.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::list::ReadyList;
use super::{Assignment, Estimator, ListKey, Scheduler, SchedulerUpdate};
use crate::cluster::WorkerId;
use crate::simulator::SchedulerView;
use crate::taskgraph::TaskId;
use crate::SimRng;

pub type Chromosome = Vec<WorkerId>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneticParams {
    pub population: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub elitism: usize,
    pub tournament: usize,
    /// Attempts at breeding a valid child before a fresh random one is used.
    pub breed_attempts: usize,
}

impl Default for GeneticParams {
    fn default() -> Self {
        GeneticParams {
            population: 50,
            generations: 100,
            mutation_rate: 0.05,
            elitism: 2,
            tournament: 3,
            breed_attempts: 10,
        }
    }
}

/// Precedence-respecting b-level order used to decode every chromosome.
#[derive(Debug, Clone)]
pub struct Decoder {
    order: Vec<TaskId>,
}

impl Decoder {
    pub fn new(view: &SchedulerView<'_>, rng: &mut SimRng) -> Self {
        let keyed = ListKey::BLevel.order(view, rng);
        let mut ready = ReadyList::new(view, &keyed);
        let mut order = Vec::with_capacity(keyed.len());
        while let Some(t) = ready.pop_first() {
            order.push(t);
            ready.placed(view, t);
        }
        Decoder { order }
    }

    pub fn order(&self) -> &[TaskId] {
        &self.order
    }

    pub fn is_valid(view: &SchedulerView<'_>, c: &[WorkerId]) -> bool {
        view.task_ids().all(|t| view.cores(t) <= view.worker_cores(c[t.idx()]))
    }

    /// Estimated makespan of `c`, or `None` if it violates core capacity.
    pub fn fitness(&self, view: &SchedulerView<'_>, est: &mut Estimator, c: &[WorkerId]) -> Option<f64> {
        if !Self::is_valid(view, c) {
            return None;
        }
        est.reset();
        for &t in &self.order {
            est.place(view, t, c[t.idx()]);
        }
        Some(est.makespan())
    }
}

#[derive(Debug, Clone)]
pub struct GeneticScheduler {
    params: GeneticParams,
    done: bool,
    best_fitness: Option<f64>,
    fell_back: bool,
}

impl GeneticScheduler {
    pub fn new(params: GeneticParams) -> Self {
        GeneticScheduler {
            params,
            done: false,
            best_fitness: None,
            fell_back: false,
        }
    }

    pub fn best_fitness(&self) -> Option<f64> {
        self.best_fitness
    }

    /// True if no valid chromosome survived and a random map was used.
    pub fn fell_back(&self) -> bool {
        self.fell_back
    }

    fn random_valid(view: &SchedulerView<'_>, rng: &mut SimRng) -> Chromosome {
        view.task_ids()
            .map(|t| {
                let fits: Vec<WorkerId> = view.workers().filter(|w| view.worker_cores(*w) >= view.cores(t)).collect();
                *fits.choose(rng).expect("some worker has enough cores")
            })
            .collect()
    }

    fn tournament<'p>(&self, scored: &'p [(Chromosome, f64)], rng: &mut SimRng) -> &'p Chromosome {
        let mut best: Option<&(Chromosome, f64)> = None;
        for _ in 0..self.params.tournament.max(1) {
            let c = &scored[rng.random_range(0..scored.len())];
            if best.is_none_or(|b| c.1 < b.1) {
                best = Some(c);
            }
        }
        &best.expect("tournament of at least one").0
    }

    fn breed(&self, a: &Chromosome, b: &Chromosome, workers: u32, rng: &mut SimRng) -> Chromosome {
        let n = a.len();
        let cut = if n > 1 { rng.random_range(1..n) } else { 0 };
        let mut child: Chromosome = a[..cut].iter().chain(&b[cut..]).copied().collect();
        for gene in child.iter_mut() {
            if rng.random_bool(self.params.mutation_rate) {
                *gene = WorkerId(rng.random_range(0..workers));
            }
        }
        child
    }

    /// Evolves from `initial` (topped up with random valid chromosomes).
    /// Returns the best valid chromosome and its fitness.
    pub fn evolve(
        &mut self,
        view: &SchedulerView<'_>,
        decoder: &Decoder,
        initial: Vec<Chromosome>,
        rng: &mut SimRng,
    ) -> Option<(Chromosome, f64)> {
        let mut est = Estimator::new(view);
        let size = self.params.population.max(1);
        let workers = view.worker_count() as u32;
        let mut scored: Vec<(Chromosome, f64)> = initial
            .into_iter()
            .filter_map(|c| decoder.fitness(view, &mut est, &c).map(|f| (c, f)))
            .collect();
        while scored.len() < size {
            let c = Self::random_valid(view, rng);
            let f = decoder.fitness(view, &mut est, &c).expect("random chromosomes are valid");
            scored.push((c, f));
        }
        for _ in 0..self.params.generations {
            scored.sort_by(|a, b| a.1.total_cmp(&b.1));
            let mut next: Vec<(Chromosome, f64)> = scored.iter().take(self.params.elitism).cloned().collect();
            while next.len() < size {
                let mut admitted = None;
                for _ in 0..self.params.breed_attempts.max(1) {
                    let a = self.tournament(&scored, rng);
                    let b = self.tournament(&scored, rng);
                    let child = self.breed(a, b, workers, rng);
                    if let Some(f) = decoder.fitness(view, &mut est, &child) {
                        admitted = Some((child, f));
                        break;
                    }
                }
                let entry = admitted.unwrap_or_else(|| {
                    let c = Self::random_valid(view, rng);
                    let f = decoder.fitness(view, &mut est, &c).expect("random chromosomes are valid");
                    (c, f)
                });
                next.push(entry);
            }
            scored = next;
        }
        scored.into_iter().min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

impl Scheduler for GeneticScheduler {
    fn name(&self) -> &str {
        "genetic"
    }

    fn schedule(&mut self, view: &SchedulerView<'_>, _: &SchedulerUpdate, rng: &mut SimRng) -> Vec<Assignment> {
        if std::mem::replace(&mut self.done, true) {
            return Vec::new();
        }
        let decoder = Decoder::new(view, rng);
        let best = match self.evolve(view, &decoder, Vec::new(), rng) {
            Some((c, f)) => {
                self.best_fitness = Some(f);
                c
            }
            None => {
                self.fell_back = true;
                Self::random_valid(view, rng)
            }
        };
        let n = decoder.order().len();
        decoder
            .order()
            .iter()
            .enumerate()
            .map(|(rank, &t)| Assignment::new(t, best[t.idx()], (n - 1 - rank) as i64))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{Cluster, MIB};
    use crate::simulator::{Estimates, Imode, InitialState};
    use crate::taskgraph::{graph_from_spec, TaskGraph};
    use rand::SeedableRng;

    fn small() -> TaskGraph {
        graph_from_spec(&[
            ("a", 3.0, &[], &[("x", (2.0 * MIB) as u64)]),
            ("b", 1.0, &[], &[("y", (8.0 * MIB) as u64)]),
            ("c", 2.0, &["x", "y"], &[]),
            ("d", 4.0, &["x"], &[]),
            ("e", 1.5, &[], &[]),
            ("f", 2.5, &["y"], &[]),
        ])
        .unwrap()
    }

    #[test]
    fn one_worker_has_constant_fitness() {
        let g = small();
        let cl = Cluster::new(vec![1], MIB);
        let est = Estimates::new(&g, Imode::Exact);
        let init = InitialState::new(&g, &cl);
        let v = SchedulerView::initial(&g, &cl, Imode::Exact, &est, &init);
        let mut rng = SimRng::seed_from_u64(1);
        let d = Decoder::new(&v, &mut rng);
        let mut e = Estimator::new(&v);
        let f = d.fitness(&v, &mut e, &[WorkerId(0); 6]).unwrap();
        assert_eq!(f, 14.0);
        let mut s = GeneticScheduler::new(GeneticParams::default());
        assert_eq!(s.evolve(&v, &d, Vec::new(), &mut rng).unwrap().1, 14.0);
    }

    #[test]
    fn no_variation_keeps_best() {
        let g = small();
        let cl = Cluster::new(vec![1, 1], MIB);
        let est = Estimates::new(&g, Imode::Exact);
        let init = InitialState::new(&g, &cl);
        let v = SchedulerView::initial(&g, &cl, Imode::Exact, &est, &init);
        let mut rng = SimRng::seed_from_u64(2);
        let d = Decoder::new(&v, &mut rng);
        let c: Chromosome = (0..6).map(|i| WorkerId(i % 2)).collect();
        let f = d.fitness(&v, &mut Estimator::new(&v), &c).unwrap();
        let params = GeneticParams {
            population: 10,
            generations: 20,
            mutation_rate: 0.0,
            ..Default::default()
        };
        let mut s = GeneticScheduler::new(params);
        let (best, bf) = s.evolve(&v, &d, vec![c.clone(); 10], &mut rng).unwrap();
        assert_eq!(best, c);
        assert_eq!(bf, f);
    }

    #[test]
    fn beats_random_search() {
        let g = small();
        let cl = Cluster::new(vec![1, 1], MIB);
        let est = Estimates::new(&g, Imode::Exact);
        let init = InitialState::new(&g, &cl);
        let v = SchedulerView::initial(&g, &cl, Imode::Exact, &est, &init);
        let mut rng = SimRng::seed_from_u64(11);
        let d = Decoder::new(&v, &mut rng);
        let mut e = Estimator::new(&v);
        let baseline = (0..1000)
            .map(|_| {
                let c = GeneticScheduler::random_valid(&v, &mut rng);
                d.fitness(&v, &mut e, &c).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        let mut s = GeneticScheduler::new(GeneticParams::default());
        let (_, best) = s.evolve(&v, &d, Vec::new(), &mut rng).unwrap();
        assert!(best <= baseline, "{best} > {baseline}");
    }

    #[test]
    fn wide_tasks_only_land_on_wide_workers() {
        let mut b = crate::taskgraph::GraphBuilder::new();
        for i in 0..8 {
            b.task_full(1.0, None, if i % 2 == 0 { 4 } else { 1 });
        }
        let g = b.build().unwrap();
        let cl = Cluster::new(vec![4, 1, 1], MIB);
        let est = Estimates::new(&g, Imode::Exact);
        let init = InitialState::new(&g, &cl);
        let v = SchedulerView::initial(&g, &cl, Imode::Exact, &est, &init);
        let mut s = GeneticScheduler::new(GeneticParams::default());
        let a = s.schedule(&v, &SchedulerUpdate::default(), &mut SimRng::seed_from_u64(4));
        assert_eq!(a.len(), 8);
        assert!(a.iter().filter(|a| a.task.0 % 2 == 0).all(|a| a.worker == WorkerId(0)));
        assert!(!s.fell_back());
    }
}
