//! Independent brute-force verifiers: grid best-response search, Wardrop
//! condition checking, and equilibrium-candidate enumeration.
//!
//! These deliberately avoid the analytic solution paths they certify. The
//! grid search evaluates raw profits through the flow solver; the candidate
//! enumeration tries every active set and price-branch split and keeps
//! whatever satisfies the equilibrium conditions.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::best_response::EmptyOpposition;
use crate::equilibrium::{thresholds, Equilibrium};
use crate::model::{effective_cost, Firm, FirmParams, Instance, Profile, Strategy};
use crate::scalar::{comparison_scale, from_f64, two, Scalar};
use crate::wardrop::wardrop_flow;

/// Hard cap on the enumeration size: subsets times splits is `3^n`.
pub const MAX_ENUMERATION_FIRMS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    EmptyOpposition(#[from] EmptyOpposition),
    #[error("candidate enumeration supports at most {max} firms, got {n}")]
    TooManyFirms { n: usize, max: usize },
}

/// Exhaustively evaluate one firm's profit over a `resolution x resolution`
/// grid of `[0, C/gamma] x [0, C]` strategies and return the best grid point.
///
/// Evaluation goes through the Wardrop solver, so this is an independent
/// check of the analytic best response. Rows of the capacity axis are
/// evaluated in parallel; ties resolve to the lexicographically first grid
/// point, so the result is deterministic.
pub fn grid_best_response<T: Scalar>(
    instance: &Instance<T>,
    profile: &Profile<T>,
    firm: usize,
    resolution: usize,
) -> Result<(Strategy<T>, T), OracleError> {
    assert!(
        resolution >= 2,
        "grid needs at least the 4 corner strategies"
    );
    let opponents_active = profile
        .strategies
        .iter()
        .enumerate()
        .any(|(j, s)| j != firm && s.capacity > T::zero());
    if !opponents_active {
        return Err(EmptyOpposition.into());
    }
    let params = *instance.params(firm);
    let steps = from_f64::<T>((resolution - 1) as f64);
    let axis = |hi: T| -> Vec<T> {
        (0..resolution)
            .map(|k| hi * from_f64::<T>(k as f64) / steps)
            .collect()
    };
    let capacities = axis(params.price_cap / params.gamma);
    let prices = axis(params.price_cap);

    let best = capacities
        .par_iter()
        .enumerate()
        .map(|(zi, &z)| {
            let mut local = profile.clone();
            let mut row_best = (T::neg_infinity(), zi, usize::MAX);
            for (pi, &p) in prices.iter().enumerate() {
                let value = if z == T::zero() {
                    T::zero()
                } else {
                    local.strategies[firm] = Strategy::new(z, p);
                    let outcome = wardrop_flow(instance, &local)
                        .expect("some opponent has positive capacity");
                    p * outcome.flows[firm] - params.gamma * z
                };
                if value > row_best.0 {
                    row_best = (value, zi, pi);
                }
            }
            row_best
        })
        .reduce(
            || (T::neg_infinity(), usize::MAX, usize::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
                    b
                } else {
                    a
                }
            },
        );
    let strategy = Strategy::new(capacities[best.1], prices[best.2]);
    Ok((strategy, best.0))
}

/// Residuals of the Wardrop equilibrium conditions for a claimed `(x, K)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WardropCheck<T> {
    pub passed: bool,
    /// Largest violation across all conditions.
    pub max_residual: T,
    /// `|sum x - demand|`.
    pub conservation: T,
    /// Largest `|cost - K|` over firms carrying flow.
    pub support_gap: T,
    /// Largest `K - cost` over firms (unused firms may not undercut `K`).
    pub undercut: T,
    /// Largest negative flow component.
    pub negativity: T,
    /// Largest flow sitting on a zero-capacity firm.
    pub stranded_flow: T,
}

/// Check the Wardrop conditions: conservation, nonnegativity, equal cost on
/// supported firms, and no firm strictly cheaper than `K`, all within `tol`.
pub fn check_wardrop<T: Scalar>(
    instance: &Instance<T>,
    profile: &Profile<T>,
    flows: &[T],
    routing_cost: T,
    tol: T,
) -> WardropCheck<T> {
    let total = flows.iter().fold(T::zero(), |acc, &x| acc + x);
    let conservation = (total - instance.demand()).abs();
    let mut support_gap = T::zero();
    let mut undercut = T::zero();
    let mut negativity = T::zero();
    let mut stranded_flow = T::zero();
    for (i, &x) in flows.iter().enumerate() {
        negativity = negativity.max(-x);
        if profile.capacity(i) == T::zero() {
            stranded_flow = stranded_flow.max(x.abs());
            continue;
        }
        let cost = effective_cost(instance.params(i), &profile.strategies[i], x);
        undercut = undercut.max(routing_cost - cost);
        if x > tol {
            support_gap = support_gap.max((cost - routing_cost).abs());
        }
    }
    let max_residual = conservation
        .max(support_gap)
        .max(undercut)
        .max(negativity)
        .max(stranded_flow);
    WardropCheck {
        passed: max_residual <= tol,
        max_residual,
        conservation,
        support_gap,
        undercut,
        negativity,
        stranded_flow,
    }
}

/// Consistency conditions a candidate equilibrium must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CandidateFlags {
    /// Every interior-price firm has `K` inside its price window.
    pub interior_range: bool,
    /// Every capped firm has `K` beyond the branch boundary and profitable.
    pub capped_range: bool,
    /// Every inactive firm has `K` at or below its activation threshold.
    pub inactive_threshold: bool,
    /// Every active firm receives strictly positive flow.
    pub positive_flows: bool,
}

impl CandidateFlags {
    pub fn consistent(&self) -> bool {
        self.interior_range && self.capped_range && self.inactive_threshold && self.positive_flows
    }
}

/// One candidate produced by the enumeration: an active set, a price-branch
/// split, the routing cost solving the Gamma-sum equation for that split,
/// and the profile it reconstructs.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateSolution<T> {
    pub active: Vec<usize>,
    pub interior_price: Vec<usize>,
    pub capped_price: Vec<usize>,
    pub routing_cost: T,
    pub profile: Profile<T>,
    pub flows: Vec<T>,
    pub flags: CandidateFlags,
}

impl<T: Scalar> CandidateSolution<T> {
    pub fn consistent(&self) -> bool {
        self.flags.consistent()
    }

    /// Largest scaled deviation from a solved equilibrium over the routing
    /// cost and all positive-capacity coordinates.
    pub fn deviation_from(&self, equilibrium: &Equilibrium<T>) -> T {
        let mut worst = (self.routing_cost - equilibrium.routing_cost).abs()
            / comparison_scale(self.routing_cost, equilibrium.routing_cost);
        for i in 0..self.flows.len() {
            if self.profile.capacity(i) > T::zero() || equilibrium.profile.capacity(i) > T::zero() {
                for (a, b) in [
                    (self.profile.capacity(i), equilibrium.profile.capacity(i)),
                    (self.profile.price(i), equilibrium.profile.price(i)),
                    (self.flows[i], equilibrium.flows[i]),
                ] {
                    worst = worst.max((a - b).abs() / comparison_scale(a, b));
                }
            }
        }
        worst
    }
}

/// Enumerate every active set of size at least 2 and every interior/capped
/// split, solve the Gamma-sum equation for each, and report all candidates
/// with their consistency flags. Exactly one candidate is consistent for a
/// valid instance.
pub fn enumerate_candidates<T: Scalar>(
    instance: &Instance<T>,
) -> Result<Vec<CandidateSolution<T>>, OracleError> {
    let n = instance.len();
    if n > MAX_ENUMERATION_FIRMS {
        return Err(OracleError::TooManyFirms {
            n,
            max: MAX_ENUMERATION_FIRMS,
        });
    }
    let subsets: Vec<u32> = (0u32..1 << n).filter(|s| s.count_ones() >= 2).collect();
    let mut candidates: Vec<CandidateSolution<T>> = subsets
        .par_iter()
        .flat_map_iter(|&subset| {
            let members: Vec<usize> = (0..n).filter(|i| subset & (1 << i) != 0).collect();
            // Enumerate splits by a submask over the members: bit set means
            // the member prices at its cap.
            (0u32..1 << members.len()).map(move |split| (members.clone(), split))
        })
        .map(|(members, split)| {
            let interior: Vec<usize> = members
                .iter()
                .enumerate()
                .filter(|(k, _)| split & (1 << k) == 0)
                .map(|(_, &i)| i)
                .collect();
            let capped: Vec<usize> = members
                .iter()
                .enumerate()
                .filter(|(k, _)| split & (1 << k) != 0)
                .map(|(_, &i)| i)
                .collect();
            candidate_for_split(instance, &members, &interior, &capped)
        })
        .collect();
    // Parallel order is already deterministic (indexed), but sort anyway so
    // the report is stable: active set, then split.
    candidates.sort_by(|a, b| (&a.active, &a.capped_price).cmp(&(&b.active, &b.capped_price)));
    Ok(candidates)
}

fn candidate_for_split<T: Scalar>(
    instance: &Instance<T>,
    members: &[usize],
    interior: &[usize],
    capped: &[usize],
) -> CandidateSolution<T> {
    let gamma_sum = |k: T| -> T {
        let mut sum = T::zero();
        for &i in interior {
            sum = sum + unchecked_gamma_interior(instance.params(i), k);
        }
        for &i in capped {
            sum = sum + unchecked_gamma_capped(instance.params(i), k);
        }
        sum
    };
    // The sum diverges at the largest pole and decreases strictly to zero,
    // so it crosses the target exactly once to the right of every pole.
    let mut pole = T::neg_infinity();
    for &i in interior {
        let params = instance.params(i);
        pole = pole.max(params.sqrt_a_gamma() + params.b);
    }
    for &i in capped {
        let params = instance.params(i);
        pole = pole.max(params.b + params.price_cap);
    }
    let target = from_f64::<T>(members.len() as f64 - 1.0);
    let mut lo = pole + from_f64(1e-12);
    let mut hi = lo.max(T::one());
    let mut span = hi;
    for _ in 0..200 {
        hi = hi + span;
        span = span + span;
        if gamma_sum(hi) < target {
            break;
        }
    }
    for _ in 0..200 {
        if hi - lo <= from_f64::<T>(1e-13) * hi {
            break;
        }
        let mid = (lo + hi) / two::<T>();
        if mid <= lo || mid >= hi {
            break;
        }
        if gamma_sum(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = (lo + hi) / two::<T>();

    // Reconstruct flows and strategies for this split.
    let n = instance.len();
    let mut ratios = vec![T::zero(); n];
    for &i in interior {
        let params = instance.params(i);
        ratios[i] = (T::one() - unchecked_gamma_interior(params, k)) * params.sqrt_a_gamma();
    }
    for &i in capped {
        let params = instance.params(i);
        ratios[i] =
            (T::one() - unchecked_gamma_capped(params, k)) * (k - params.b - params.price_cap);
    }
    let ratio_sum = members.iter().fold(T::zero(), |acc, &i| acc + ratios[i]);
    let positive_flows = members.iter().all(|&i| ratios[i] > T::zero());

    let mut flows = vec![T::zero(); n];
    let mut strategies = vec![Strategy::new(T::zero(), T::zero()); n];
    if ratio_sum > T::zero() {
        for &i in members {
            let params = instance.params(i);
            let x = instance.demand() * ratios[i] / ratio_sum;
            flows[i] = x;
            strategies[i] = if interior.contains(&i) {
                Strategy::new(
                    (params.a / params.gamma).sqrt() * x,
                    k - params.sqrt_a_gamma() - params.b,
                )
            } else {
                Strategy::new(
                    params.a * x / (k - params.b - params.price_cap),
                    params.price_cap,
                )
            };
        }
    }
    for (i, slot) in strategies.iter_mut().enumerate() {
        if !members.contains(&i) {
            *slot = Strategy::new(T::zero(), instance.params(i).price_cap);
        }
    }

    let interior_range = interior.iter().all(|&i| {
        let params = instance.params(i);
        let bounds = thresholds(params);
        two::<T>() * params.sqrt_a_gamma() + params.b <= k && k <= bounds.branch_boundary
    });
    let capped_range = capped.iter().all(|&i| {
        let params = instance.params(i);
        let bounds = thresholds(params);
        k > bounds.branch_boundary
            && k >= params.a * params.gamma / params.price_cap + params.b + params.price_cap
    });
    let inactive_threshold = (0..n)
        .filter(|i| !members.contains(i))
        .all(|i| k <= thresholds(instance.params(i)).activation);

    CandidateSolution {
        active: members.to_vec(),
        interior_price: interior.to_vec(),
        capped_price: capped.to_vec(),
        routing_cost: k,
        profile: Profile::new(strategies),
        flows,
        flags: CandidateFlags {
            interior_range,
            capped_range,
            inactive_threshold,
            positive_flows,
        },
    }
}

fn unchecked_gamma_interior<T: Scalar>(params: &FirmParams<T>, k: T) -> T {
    params.sqrt_a_gamma() / (k - params.sqrt_a_gamma() - params.b)
}

fn unchecked_gamma_capped<T: Scalar>(params: &FirmParams<T>, k: T) -> T {
    params.a * params.gamma / params.price_cap / (k - params.b - params.price_cap)
}

/// Random instance with unit demand and parameters drawn log-uniformly from
/// `[0.1, 10]`, wide enough to exercise both activation-threshold branches.
/// The congestion offset `b` is zero a quarter of the time.
pub fn random_instance<T: Scalar>(rng: &mut impl Rng, n: usize) -> Instance<T> {
    fn log_uniform(rng: &mut impl Rng) -> f64 {
        10f64.powf(rng.gen_range(-1.0..1.0))
    }
    let firms = (0..n)
        .map(|i| Firm {
            id: format!("f{i}"),
            params: FirmParams::new(
                from_f64(log_uniform(rng)),
                if rng.gen_bool(0.25) {
                    T::zero()
                } else {
                    from_f64(log_uniform(rng))
                },
                from_f64(log_uniform(rng)),
                from_f64(log_uniform(rng)),
            ),
        })
        .collect();
    Instance::new(firms, None).expect("generated parameters are valid")
}

/// Random profile over the bounded strategy space `[0, C/gamma] x [0, C]`.
pub fn random_profile<T: Scalar>(rng: &mut impl Rng, instance: &Instance<T>) -> Profile<T> {
    let strategies = (0..instance.len())
        .map(|i| {
            let params = instance.params(i);
            let z_max = (params.price_cap / params.gamma).to_f64().unwrap();
            Strategy::new(
                from_f64(rng.gen_range(0.0..z_max)),
                from_f64(rng.gen_range(0.0..params.price_cap.to_f64().unwrap())),
            )
        })
        .collect();
    Profile::new(strategies)
}
