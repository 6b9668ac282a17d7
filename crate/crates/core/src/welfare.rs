//! Social cost, social optimum, and Price of Anarchy.
//!
//! Prices are transfers between customers and firms, so welfare is the
//! congestion actually experienced plus the capacity actually installed.
//! For fixed flow the optimal capacity of a served firm balances the two
//! terms, leaving a marginal service cost of `2*sqrt(a*gamma) + b` per unit
//! of flow; the social optimum therefore concentrates all demand on the firm
//! with the smallest such cost.

use serde::Serialize;

use crate::equilibrium::{solve_equilibrium, Equilibrium, SolveError};
use crate::model::{Firm, FirmParams, Instance, Profile, Strategy};
use crate::scalar::{two, Scalar};
use crate::wardrop::wardrop_flow;

/// Equilibrium welfare relative to the social optimum.
#[derive(Debug, Clone, Serialize)]
pub struct WelfareReport<T> {
    pub equilibrium: Equilibrium<T>,
    pub equilibrium_cost: T,
    pub optimum_value: T,
    pub optimum_profile: Profile<T>,
    /// `equilibrium_cost / optimum_value`.
    pub price_of_anarchy: T,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WelfareError {
    #[error("family parameter M = {m} must be at least 1")]
    MOutOfRange { m: String },
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Total congestion plus installation cost of a profile under its Wardrop
/// flow; infinite when nobody installs capacity.
pub fn social_cost<T: Scalar>(instance: &Instance<T>, profile: &Profile<T>) -> T {
    if profile.all_capacities_zero() {
        return T::infinity();
    }
    let outcome = wardrop_flow(instance, profile).expect("positive capacity exists");
    let mut cost = T::zero();
    for (i, s) in profile.strategies.iter().enumerate() {
        if s.capacity > T::zero() {
            let params = instance.params(i);
            let x = outcome.flows[i];
            cost = cost + params.a * x * x / s.capacity + params.b * x + params.gamma * s.capacity;
        }
    }
    cost
}

/// Minimum social cost over all profiles, with a witness profile.
///
/// With capacity optimized per firm the cost is linear in each firm's flow,
/// so a single-firm corner is optimal: all demand on the firm minimizing
/// `2*sqrt(a*gamma) + b`, at capacity `demand * sqrt(a/gamma)` and price 0.
pub fn social_optimum<T: Scalar>(instance: &Instance<T>) -> (T, Profile<T>) {
    let marginal = |params: &FirmParams<T>| two::<T>() * params.sqrt_a_gamma() + params.b;
    let best = (0..instance.len())
        .min_by(|&i, &j| {
            marginal(instance.params(i))
                .partial_cmp(&marginal(instance.params(j)))
                .unwrap()
        })
        .expect("instance has firms");
    let demand = instance.demand();
    let strategies = (0..instance.len())
        .map(|i| {
            if i == best {
                let params = instance.params(i);
                Strategy::new(demand * (params.a / params.gamma).sqrt(), T::zero())
            } else {
                Strategy::new(T::zero(), T::zero())
            }
        })
        .collect();
    (
        demand * marginal(instance.params(best)),
        Profile::new(strategies),
    )
}

/// Solve the equilibrium and relate its social cost to the optimum.
pub fn poa<T: Scalar>(instance: &Instance<T>) -> Result<WelfareReport<T>, WelfareError> {
    let equilibrium = solve_equilibrium(instance)?;
    let equilibrium_cost = social_cost(instance, &equilibrium.profile);
    let (optimum_value, optimum_profile) = social_optimum(instance);
    Ok(WelfareReport {
        price_of_anarchy: equilibrium_cost / optimum_value,
        equilibrium,
        equilibrium_cost,
        optimum_value,
        optimum_profile,
    })
}

/// The two-firm family with parameters `(1, 0, 1, 1)` and `(M, 0, M, M)`:
/// its equilibrium social cost grows linearly in `M` while the optimum stays
/// at 2, so the Price of Anarchy is unbounded.
pub fn gm_instance<T: Scalar>(m: T) -> Result<Instance<T>, WelfareError> {
    if m >= T::one() {
        let one = T::one();
        let instance = Instance::new(
            vec![
                Firm {
                    id: "1".into(),
                    params: FirmParams::new(one, T::zero(), one, one),
                },
                Firm {
                    id: "2".into(),
                    params: FirmParams::new(m, T::zero(), m, m),
                },
            ],
            None,
        )
        .expect("family parameters are valid");
        Ok(instance)
    } else {
        // Also rejects NaN.
        Err(WelfareError::MOutOfRange { m: format!("{m}") })
    }
}
