use super::check::{genome_objectives, violations};
use super::{finish_front, total_violation, AllocError, AllocationProblem, Infeasible, ObjectiveVector, SolveOutcome};
use crate::Scalar;

/// Largest `|nodes|^|instances|` the exact solver accepts by default.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// Exhaustive depth-first branch-and-bound over all total assignments.
///
/// Prefixes that already violate any rule are pruned. When nothing is
/// feasible a second search finds the assignment with the smallest summed
/// normalized violation.
pub fn solve_exact<T: Scalar>(problem: &AllocationProblem<T>, cap: u64) -> Result<SolveOutcome<T>, AllocError> {
    let size = problem.search_space();
    if size > cap as f64 {
        return Err(AllocError::Size { size, cap });
    }
    if problem.nodes.is_empty() && !problem.instances.is_empty() {
        return Ok(SolveOutcome::Empty(Infeasible {
            best: None,
            violations: Vec::new(),
        }));
    }
    let mut genome = vec![0; problem.instances.len()];
    let mut archive: Vec<(Vec<usize>, ObjectiveVector<T>)> = Vec::new();
    feasible_dfs(problem, &mut genome, 0, &mut archive);
    if !archive.is_empty() {
        return Ok(SolveOutcome::Front(finish_front(problem, archive)));
    }
    let mut best: Option<(T, Vec<usize>)> = None;
    least_violation_dfs(problem, &mut genome, 0, &mut best);
    let (_, g) = best.expect("at least one total assignment exists");
    Ok(SolveOutcome::Empty(Infeasible {
        violations: violations(problem, &g, g.len()),
        best: Some(problem.matrix(&g)),
    }))
}

fn feasible_dfs<T: Scalar>(
    problem: &AllocationProblem<T>,
    genome: &mut Vec<usize>,
    depth: usize,
    archive: &mut Vec<(Vec<usize>, ObjectiveVector<T>)>,
) {
    if depth == genome.len() {
        let obj = genome_objectives(problem, genome);
        // genomes arrive in lexicographic order, so the first of equal points wins
        if archive.iter().any(|(_, o)| o.dominates(&obj) || *o == obj) {
            return;
        }
        archive.retain(|(_, o)| !obj.dominates(o));
        archive.push((genome.clone(), obj));
        return;
    }
    for n in 0..problem.nodes.len() {
        genome[depth] = n;
        if violations(problem, genome, depth + 1).is_empty() {
            feasible_dfs(problem, genome, depth + 1, archive);
        }
    }
}

fn least_violation_dfs<T: Scalar>(
    problem: &AllocationProblem<T>,
    genome: &mut Vec<usize>,
    depth: usize,
    best: &mut Option<(T, Vec<usize>)>,
) {
    let total = total_violation(&violations(problem, genome, depth));
    if let Some((b, _)) = best {
        if total >= *b {
            return;
        }
    }
    if depth == genome.len() {
        *best = Some((total, genome.clone()));
        return;
    }
    for n in 0..problem.nodes.len() {
        genome[depth] = n;
        least_violation_dfs(problem, genome, depth + 1, best);
    }
}
