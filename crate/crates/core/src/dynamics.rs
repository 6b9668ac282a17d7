//! Best-response iteration toward the equilibrium.
//!
//! Convergence of these dynamics is an empirical observation for this game
//! class, not a guarantee; the module is an experiment harness. Where a firm
//! has no best response (all opponents idle, the supremum is not attained),
//! the step plays a small fallback capacity at the price cap to keep the
//! iteration total.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::Serialize;

use crate::best_response::{best_response, BestResponseSet};
use crate::model::{profit, Instance, Profile, Strategy};
use crate::scalar::{from_f64, Scalar};
use crate::tol;

/// Which firm moves when.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UpdateOrder {
    RoundRobin,
    /// A fresh random permutation every round, from a seeded generator.
    Random {
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynamicsConfig<T> {
    pub order: UpdateOrder,
    pub max_rounds: usize,
    /// Converged when no strategy in a full round moves further than this.
    pub convergence_tol: T,
    /// Capacity played when no best response exists; `0` disables the
    /// fallback and stops the run instead.
    pub fallback_capacity: T,
}

impl<T: Scalar> Default for DynamicsConfig<T> {
    fn default() -> Self {
        Self {
            order: UpdateOrder::RoundRobin,
            max_rounds: 1000,
            convergence_tol: from_f64(tol::DYNAMICS_CONVERGENCE),
            fallback_capacity: from_f64(tol::DYNAMICS_FALLBACK_CAPACITY),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    Converged,
    MaxRounds,
    /// A firm without a best response could not move (fallback disabled).
    StuckEmptyBestResponse,
}

/// One move: the round it happened in, who moved, where to, and what it did
/// to the mover's profit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Step<T> {
    pub round: usize,
    pub firm: usize,
    pub strategy: Strategy<T>,
    pub profit_before: T,
    pub profit_after: T,
    /// Max-norm distance between the old and new strategy.
    pub change: T,
}

/// Full record of a dynamics run.
#[derive(Debug, Clone, Serialize)]
pub struct Trace<T> {
    pub initial: Profile<T>,
    pub steps: Vec<Step<T>>,
    pub termination: Termination,
    /// Completed rounds.
    pub rounds: usize,
    pub final_profile: Profile<T>,
}

impl<T: Scalar> Trace<T> {
    /// The visited profiles, skipping no-op moves, so consecutive entries
    /// differ in exactly one firm's strategy.
    pub fn profiles(&self) -> Vec<Profile<T>> {
        let mut out = vec![self.initial.clone()];
        let mut current = self.initial.clone();
        for step in &self.steps {
            if step.change > T::zero() {
                current.strategies[step.firm] = step.strategy;
                out.push(current.clone());
            }
        }
        out
    }
}

/// Replace `firm`'s strategy with its best response. A firm on the
/// zero-capacity segment plays `(0, price_cap)`; a firm with no best
/// response plays the near-supremum `(fallback_capacity, price_cap)`.
pub fn best_response_step<T: Scalar>(
    instance: &Instance<T>,
    profile: &Profile<T>,
    firm: usize,
    fallback_capacity: T,
) -> Profile<T> {
    let mut next = profile.clone();
    next.strategies[firm] = replacement(instance, profile, firm, fallback_capacity).0;
    next
}

fn replacement<T: Scalar>(
    instance: &Instance<T>,
    profile: &Profile<T>,
    firm: usize,
    fallback_capacity: T,
) -> (Strategy<T>, bool) {
    let cap = instance.params(firm).price_cap;
    match best_response(instance, profile, firm) {
        BestResponseSet::Unique { strategy, .. } => (strategy, false),
        BestResponseSet::ZeroCapacitySegment => (Strategy::new(T::zero(), cap), false),
        BestResponseSet::Empty => (Strategy::new(fallback_capacity, cap), true),
    }
}

/// Iterate best responses until a full round moves nobody, the round budget
/// is spent, or a firm gets stuck without a best response.
pub fn run_dynamics<T: Scalar>(
    instance: &Instance<T>,
    initial: &Profile<T>,
    config: &DynamicsConfig<T>,
) -> Trace<T> {
    let n = instance.len();
    let mut current = initial.clone();
    let mut steps = Vec::new();
    let mut rng = match config.order {
        UpdateOrder::Random { seed } => Some(StdRng::seed_from_u64(seed)),
        UpdateOrder::RoundRobin => None,
    };

    for round in 0..config.max_rounds {
        let mut order: Vec<usize> = (0..n).collect();
        if let Some(rng) = rng.as_mut() {
            order.shuffle(rng);
        }
        let mut max_change = T::zero();
        let mut empty_hit = false;
        for &firm in &order {
            let (strategy, was_empty) =
                replacement(instance, &current, firm, config.fallback_capacity);
            if was_empty && config.fallback_capacity == T::zero() {
                return Trace {
                    initial: initial.clone(),
                    steps,
                    termination: Termination::StuckEmptyBestResponse,
                    rounds: round,
                    final_profile: current,
                };
            }
            empty_hit = empty_hit || was_empty;
            let old = current.strategies[firm];
            let change = (old.capacity - strategy.capacity)
                .abs()
                .max((old.price - strategy.price).abs());
            let profit_before = profit(instance, &current)[firm];
            current.strategies[firm] = strategy;
            let profit_after = profit(instance, &current)[firm];
            steps.push(Step {
                round,
                firm,
                strategy,
                profit_before,
                profit_after,
                change,
            });
            max_change = max_change.max(change);
        }
        if max_change < config.convergence_tol {
            let termination = if empty_hit {
                Termination::StuckEmptyBestResponse
            } else {
                Termination::Converged
            };
            return Trace {
                initial: initial.clone(),
                steps,
                termination,
                rounds: round + 1,
                final_profile: current,
            };
        }
    }
    Trace {
        initial: initial.clone(),
        steps,
        termination: Termination::MaxRounds,
        rounds: config.max_rounds,
        final_profile: current,
    }
}
