use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::check::{genome_objectives, violations};
use super::{finish_front, total_violation, AllocError, AllocationProblem, Infeasible, ObjectiveVector, SolveOutcome};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Nsga2Params {
    /// Even, at least 4.
    pub population: usize,
    pub generations: usize,
    /// Per-gene probability of swapping parents' genes.
    pub crossover_p: f64,
    /// Per-gene reassignment probability; `None` means `1 / |instances|`.
    pub mutation_p: Option<f64>,
    pub seed: u64,
}

impl Default for Nsga2Params {
    fn default() -> Self {
        Self {
            population: 64,
            generations: 200,
            crossover_p: 0.5,
            mutation_p: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
struct Individual<T> {
    genome: Vec<usize>,
    objectives: ObjectiveVector<T>,
    violation: T,
    feasible: bool,
    rank: usize,
    crowding: T,
}

fn evaluate<T: Scalar>(problem: &AllocationProblem<T>, genomes: Vec<Vec<usize>>) -> Vec<Individual<T>> {
    genomes
        .into_par_iter()
        .map(|genome| {
            let vs = violations(problem, &genome, genome.len());
            Individual {
                objectives: genome_objectives(problem, &genome),
                violation: total_violation(&vs),
                feasible: vs.is_empty(),
                genome,
                rank: 0,
                crowding: T::zero(),
            }
        })
        .collect()
}

fn constrained_dominates<T: Scalar>(a: &Individual<T>, b: &Individual<T>) -> bool {
    match (a.feasible, b.feasible) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
        (true, true) => a.objectives.dominates(&b.objectives),
    }
}

/// Assigns ranks and crowding distances; returns the fronts as index lists.
fn sort_population<T: Scalar>(pop: &mut [Individual<T>]) -> Vec<Vec<usize>> {
    let n = pop.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominates: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && constrained_dominates(&pop[i], &pop[j]) {
                dominates[i].push(j);
                dominated_by[j] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    for (rank, front) in fronts.iter().enumerate() {
        for &i in front {
            pop[i].rank = rank;
            pop[i].crowding = T::zero();
        }
        for k in 0..3 {
            let mut order = front.clone();
            order.sort_by(|&a, &b| {
                pop[a].objectives.as_array()[k]
                    .partial_cmp(&pop[b].objectives.as_array()[k])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
            let values: Vec<T> = pop.iter().map(|ind| ind.objectives.as_array()[k]).collect();
            let value = |i: usize| values[i];
            let (lo, hi) = (value(order[0]), value(order[order.len() - 1]));
            pop[order[0]].crowding = T::infinity();
            pop[order[order.len() - 1]].crowding = T::infinity();
            if hi > lo {
                for w in 1..order.len().saturating_sub(1) {
                    let d = (value(order[w + 1]) - value(order[w - 1])) / (hi - lo);
                    let i = order[w];
                    pop[i].crowding = pop[i].crowding + d;
                }
            }
        }
    }
    fronts
}

fn tournament<T: Scalar>(pop: &[Individual<T>], rng: &mut ChaCha8Rng) -> usize {
    let a = rng.gen_range(0..pop.len());
    let b = rng.gen_range(0..pop.len());
    let (x, y) = (&pop[a], &pop[b]);
    let b_wins = match (x.feasible, y.feasible) {
        (true, false) => false,
        (false, true) => true,
        (false, false) => y.violation < x.violation,
        (true, true) => y.rank < x.rank || (y.rank == x.rank && y.crowding > x.crowding),
    };
    if b_wins {
        b
    } else {
        a
    }
}

fn random_genome<T: Scalar>(problem: &AllocationProblem<T>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    problem
        .pins
        .iter()
        .map(|pin| pin.unwrap_or_else(|| rng.gen_range(0..problem.nodes.len())))
        .collect()
}

/// Elitist NSGA-II with constraint domination.
///
/// Randomness is drawn only on the calling thread, and fitness results are
/// consumed in index order, so a seed fully determines the returned front.
pub fn solve_nsga2<T: Scalar>(problem: &AllocationProblem<T>, params: &Nsga2Params) -> Result<SolveOutcome<T>, AllocError> {
    let n = params.population;
    if n < 4 || n % 2 != 0 {
        return Err(AllocError::Params(format!("population must be even and at least 4, got {n}")));
    }
    let genes = problem.instances.len();
    let mutation_p = params.mutation_p.unwrap_or(if genes == 0 { 0.0 } else { 1.0 / genes as f64 });
    for (name, p) in [("crossover_p", params.crossover_p), ("mutation_p", mutation_p)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(AllocError::Params(format!("{name} must lie in [0, 1], got {p}")));
        }
    }
    if problem.nodes.is_empty() && genes > 0 {
        return Ok(SolveOutcome::Empty(Infeasible {
            best: None,
            violations: Vec::new(),
        }));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let initial: Vec<Vec<usize>> = (0..n).map(|_| random_genome(problem, &mut rng)).collect();
    let mut pop = evaluate(problem, initial);
    let mut best_infeasible: Option<(T, Vec<usize>)> = None;
    let mut track = |inds: &[Individual<T>]| {
        for ind in inds.iter().filter(|i| !i.feasible) {
            if best_infeasible.as_ref().is_none_or(|(v, _)| ind.violation < *v) {
                best_infeasible = Some((ind.violation, ind.genome.clone()));
            }
        }
    };
    track(&pop);
    sort_population(&mut pop);

    for _ in 0..params.generations {
        let mut children = Vec::with_capacity(n);
        while children.len() < n {
            let p1 = pop[tournament(&pop, &mut rng)].genome.clone();
            let p2 = pop[tournament(&pop, &mut rng)].genome.clone();
            let (mut c1, mut c2) = (p1, p2);
            for g in 0..genes {
                if rng.gen_bool(params.crossover_p) {
                    std::mem::swap(&mut c1[g], &mut c2[g]);
                }
            }
            for child in [&mut c1, &mut c2] {
                for g in 0..genes {
                    if problem.pins[g].is_none() && rng.gen_bool(mutation_p) {
                        child[g] = rng.gen_range(0..problem.nodes.len());
                    }
                }
            }
            children.push(c1);
            children.push(c2);
        }
        let offspring = evaluate(problem, children);
        track(&offspring);
        let mut merged = pop;
        merged.extend(offspring);
        let fronts = sort_population(&mut merged);
        let mut keep: Vec<usize> = Vec::with_capacity(n);
        for front in fronts {
            if keep.len() + front.len() <= n {
                keep.extend(front);
            } else {
                let mut last = front;
                last.sort_by(|&a, &b| {
                    merged[b]
                        .crowding
                        .partial_cmp(&merged[a].crowding)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                });
                keep.extend(last.into_iter().take(n - keep.len()));
                break;
            }
        }
        let mut slots: Vec<Option<Individual<T>>> = merged.into_iter().map(Some).collect();
        pop = keep.into_iter().map(|i| slots[i].take().unwrap()).collect();
        sort_population(&mut pop);
    }

    let feasible: Vec<(Vec<usize>, ObjectiveVector<T>)> = pop
        .iter()
        .filter(|i| i.feasible && i.rank == 0)
        .map(|i| (i.genome.clone(), i.objectives))
        .collect();
    if !feasible.is_empty() {
        return Ok(SolveOutcome::Front(finish_front(problem, feasible)));
    }
    let (_, g) = best_infeasible.expect("an infeasible population was tracked");
    Ok(SolveOutcome::Empty(Infeasible {
        violations: violations(problem, &g, g.len()),
        best: Some(problem.matrix(&g)),
    }))
}
