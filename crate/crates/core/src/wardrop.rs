//! Wardrop flow computation for a parallel service market.
//!
//! With linear congestion, the flow absorbed by firm `j` at routing cost `K`
//! is `(K - b_j - p_j) * z_j / a_j` once `K` clears its entry cost, so total
//! absorbed flow is a continuous, piecewise-linear, nondecreasing function of
//! `K`. The solver sorts entry costs, walks the segments, and solves the
//! crossing with demand exactly on the segment where it happens — no
//! iterative tolerance enters the flow.

use serde::Serialize;

use crate::model::{Instance, Profile, WardropOutcome};
use crate::scalar::{two, Scalar};

/// One firm's contribution to the piecewise-linear absorption map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Breakpoint<T> {
    /// Index of the owning firm.
    pub firm: usize,
    /// Entry cost `b + p` at which the firm starts receiving flow.
    pub entry_cost: T,
    /// Marginal flow `z / a` absorbed per unit of routing cost.
    pub weight: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum WardropError {
    #[error("the Wardrop flow is undefined when every capacity is zero")]
    AllCapacitiesZero,
    #[error("flow vector puts mass on zero-capacity firm {firm}")]
    FlowOnZeroCapacity { firm: usize },
}

/// Breakpoints of all firms with positive capacity, sorted ascending by
/// entry cost (ties broken by firm index, so the scan is deterministic).
pub(crate) fn breakpoints<T: Scalar>(
    instance: &Instance<T>,
    profile: &Profile<T>,
) -> Vec<Breakpoint<T>> {
    let mut points: Vec<Breakpoint<T>> = profile
        .strategies
        .iter()
        .enumerate()
        .filter(|(_, s)| s.capacity > T::zero())
        .map(|(j, s)| Breakpoint {
            firm: j,
            entry_cost: s.entry_cost(instance.params(j)),
            weight: s.capacity / instance.params(j).a,
        })
        .collect();
    points.sort_by(|a, b| a.entry_cost.partial_cmp(&b.entry_cost).unwrap());
    points
}

/// Solve `sum_j max(0, K - entry_cost_j) * weight_j = target` for `K`.
///
/// The left side is 0 up to the smallest entry cost and strictly increasing
/// afterwards, so for `target > 0` the crossing exists and is unique. The
/// crossing segment's linear equation is solved in closed form.
pub(crate) fn solve_crossing<T: Scalar>(points: &[Breakpoint<T>], target: T) -> T {
    debug_assert!(!points.is_empty() && target > T::zero());
    let mut weight_sum = T::zero();
    let mut weighted_entry_sum = T::zero();
    for (k, point) in points.iter().enumerate() {
        weight_sum = weight_sum + point.weight;
        weighted_entry_sum = weighted_entry_sum + point.weight * point.entry_cost;
        if let Some(next) = points.get(k + 1) {
            // Absorption at the next entry cost with the current active set.
            let absorbed = weight_sum * next.entry_cost - weighted_entry_sum;
            if absorbed < target {
                continue;
            }
        }
        return (target + weighted_entry_sum) / weight_sum;
    }
    unreachable!("crossing scan covers the final unbounded segment")
}

/// Compute the unique Wardrop flow and routing cost induced by a profile
/// with at least one positive capacity.
pub fn wardrop_flow<T: Scalar>(
    instance: &Instance<T>,
    profile: &Profile<T>,
) -> Result<WardropOutcome<T>, WardropError> {
    let points = breakpoints(instance, profile);
    if points.is_empty() {
        return Err(WardropError::AllCapacitiesZero);
    }
    let routing_cost = solve_crossing(&points, instance.demand());
    let mut flows = vec![T::zero(); instance.len()];
    for point in &points {
        // Firms whose entry cost meets or exceeds K get exactly zero flow.
        if point.entry_cost < routing_cost {
            flows[point.firm] = (routing_cost - point.entry_cost) * point.weight;
        }
    }
    Ok(WardropOutcome {
        flows,
        routing_cost,
    })
}

/// The routing cost alone.
pub fn routing_cost<T: Scalar>(
    instance: &Instance<T>,
    profile: &Profile<T>,
) -> Result<T, WardropError> {
    wardrop_flow(instance, profile).map(|outcome| outcome.routing_cost)
}

/// Objective of the convex program whose unique minimizer is the Wardrop
/// flow: `sum_i a_i/(2 z_i) x_i^2 + (b_i + p_i) x_i` over served firms.
///
/// `flows` must be a feasible assignment: nonnegative, summing to the
/// instance demand, and zero wherever capacity is zero.
pub fn beckmann_potential<T: Scalar>(
    instance: &Instance<T>,
    profile: &Profile<T>,
    flows: &[T],
) -> Result<T, WardropError> {
    debug_assert_eq!(flows.len(), instance.len());
    let mut value = T::zero();
    for (i, (s, &x)) in profile.strategies.iter().zip(flows).enumerate() {
        if s.capacity > T::zero() {
            let params = instance.params(i);
            value = value + params.a / (two::<T>() * s.capacity) * x * x + (params.b + s.price) * x;
        } else if x != T::zero() {
            return Err(WardropError::FlowOnZeroCapacity { firm: i });
        }
    }
    Ok(value)
}
