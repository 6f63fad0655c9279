use super::{AllocError, ParetoPoint, ParetoSet};
use crate::Scalar;

/// Weighted-sum choice over min-max normalized objectives.
///
/// Scores within a relative [`Scalar::tie_tolerance`] count as equal, and the
/// front's own (lexicographic) order breaks ties, which keeps the result
/// invariant under positive scaling of `weights`.
pub fn select_solution<'f, T: Scalar>(front: &'f ParetoSet<T>, weights: [T; 3]) -> Result<&'f ParetoPoint<T>, AllocError> {
    if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) || weights.iter().all(|w| w.is_zero()) {
        return Err(AllocError::Weights);
    }
    let first = front.points.first().ok_or(AllocError::EmptyFront)?;
    let mut lo = first.objectives.as_array();
    let mut hi = lo;
    for p in &front.points {
        for (k, v) in p.objectives.as_array().into_iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    let score = |p: &ParetoPoint<T>| {
        let v = p.objectives.as_array();
        (0..3).fold(T::zero(), |acc, k| {
            let span = hi[k] - lo[k];
            let norm = if span > T::zero() { (v[k] - lo[k]) / span } else { T::zero() };
            acc + weights[k] * norm
        })
    };
    let mut best = first;
    let mut best_score = score(first);
    for p in &front.points[1..] {
        let s = score(p);
        let scale = s.abs().max(best_score.abs());
        if s < best_score && best_score - s > T::tie_tolerance() * scale {
            best = p;
            best_score = s;
        }
    }
    Ok(best)
}
