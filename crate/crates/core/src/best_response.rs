//! Exact per-firm best responses.
//!
//! Against fixed opponent strategies, a firm's two-dimensional profit
//! maximization collapses onto the routing cost `K` it induces. Two
//! one-dimensional problems cover the possible shapes of the optimum: an
//! interior-price problem whose objective is piecewise concave-quadratic in
//! `K`, and a capped-price problem (price pinned at the cap) whose objective
//! is piecewise strictly concave. The best response is reconstructed from
//! whichever problem attains the better value; the capped-price optimum
//! dominates whenever it exists.

use serde::Serialize;

use crate::model::{normalize_demand, FirmParams, Instance, Profile, Strategy};
use crate::scalar::{from_f64, two, Scalar};
use crate::tol;
use crate::wardrop::{breakpoints, solve_crossing, Breakpoint};

/// A firm's view of its opposition: every opponent with positive capacity,
/// reduced to entry cost and absorption weight, plus the firm's own
/// parameters. All quantities are in the unit-demand normalization, so
/// residual demand is a share in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct OpponentView<T> {
    /// Opponent breakpoints sorted ascending by entry cost.
    opponents: Vec<Breakpoint<T>>,
    /// The viewing firm's parameters (demand-normalized).
    own: FirmParams<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("firm has no opponent with positive capacity")]
pub struct EmptyOpposition;

/// Why the interior-price problem has no feasible point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum P1Infeasible {
    #[error("interior-price window is empty: sqrt(a*gamma) exceeds the price cap")]
    EmptyInterval,
    #[error("residual demand is exhausted before the interior-price window opens")]
    XbarNonpositive,
}

/// Why the capped-price problem has no optimal solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum P2NoOptimum {
    #[error("capped-price window is empty")]
    Infeasible,
    #[error("capped-price objective is strictly decreasing; supremum not attained")]
    SupNotAttained,
}

/// Which auxiliary problem a solution belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AuxProblem {
    /// Optimal price strictly inside `[0, price_cap]` (P1).
    InteriorPrice,
    /// Optimal price pinned at the cap (P2).
    CappedPrice,
}

/// Optimizer of one auxiliary problem: the routing cost it induces and the
/// unit-demand profit it certifies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuxSolution<T> {
    pub routing_cost: T,
    pub value: T,
    pub problem: AuxProblem,
}

/// The best-response correspondence of one firm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BestResponseSet<T> {
    /// No best response exists: every opponent is out of the market and the
    /// supremum profit (the price cap) is approached but never attained.
    Empty,
    /// Every zero-capacity strategy `{0} x [0, price_cap]` is optimal; the
    /// firm cannot profitably enter.
    ZeroCapacitySegment,
    /// A unique profitable best response.
    Unique {
        strategy: Strategy<T>,
        profit: T,
        aux: AuxSolution<T>,
    },
}

impl<T: Scalar> OpponentView<T> {
    /// View of `firm` against the other firms' strategies in `profile`.
    ///
    /// The instance is demand-normalized internally; profits derived from
    /// this view are unit-demand values.
    pub fn new(
        instance: &Instance<T>,
        profile: &Profile<T>,
        firm: usize,
    ) -> Result<Self, EmptyOpposition> {
        let (unit, _) = normalize_demand(instance);
        let mut opponents = breakpoints(&unit, profile);
        opponents.retain(|bp| bp.firm != firm);
        if opponents.is_empty() {
            return Err(EmptyOpposition);
        }
        Ok(Self {
            opponents,
            own: *unit.params(firm),
        })
    }

    /// Build a view directly from opponent breakpoints (assumed unit-demand).
    pub fn from_parts(
        own: FirmParams<T>,
        mut opponents: Vec<Breakpoint<T>>,
    ) -> Result<Self, EmptyOpposition> {
        if opponents.is_empty() {
            return Err(EmptyOpposition);
        }
        opponents.sort_by(|a, b| a.entry_cost.partial_cmp(&b.entry_cost).unwrap());
        Ok(Self { opponents, own })
    }

    pub fn own_params(&self) -> &FirmParams<T> {
        &self.own
    }

    pub fn opponents(&self) -> &[Breakpoint<T>] {
        &self.opponents
    }

    /// Share of demand left for the firm when the market clears at routing
    /// cost `k`: `1 - sum_{entry < k} (k - entry) * weight`. May be negative.
    pub fn residual_demand(&self, k: T) -> T {
        let mut absorbed = T::zero();
        for bp in &self.opponents {
            if bp.entry_cost < k {
                absorbed = absorbed + (k - bp.entry_cost) * bp.weight;
            }
        }
        T::one() - absorbed
    }

    /// The unique routing cost at which the opponents absorb all demand,
    /// solved exactly on the piecewise-linear structure.
    pub fn max_viable_cost(&self) -> T {
        solve_crossing(&self.opponents, T::one())
    }

    /// Combined opponent absorption weight active strictly above `k`.
    fn weight_through(&self, k: T) -> T {
        let mut sum = T::zero();
        for bp in &self.opponents {
            if bp.entry_cost <= k {
                sum = sum + bp.weight;
            }
        }
        sum
    }

    /// Segment endpoints of `[lo, hi]` split at opponent entry costs.
    fn cut_points(&self, lo: T, hi: T) -> Vec<T> {
        let mut cuts = vec![lo];
        for bp in &self.opponents {
            if bp.entry_cost > lo && bp.entry_cost < hi && *cuts.last().unwrap() != bp.entry_cost {
                cuts.push(bp.entry_cost);
            }
        }
        cuts.push(hi);
        cuts
    }

    /// Maximize the interior-price objective
    /// `residual_demand(K) * (K - b - 2*sqrt(a*gamma))` over its window.
    pub fn solve_interior_price(&self) -> Result<AuxSolution<T>, P1Infeasible> {
        let own = &self.own;
        let sag = own.sqrt_a_gamma();
        let lower = two::<T>() * sag + own.b;
        let price_bound = sag + own.b + own.price_cap;
        if lower > price_bound {
            return Err(P1Infeasible::EmptyInterval);
        }
        let max_cost = self.max_viable_cost();
        if lower >= max_cost {
            return Err(P1Infeasible::XbarNonpositive);
        }
        let upper = price_bound.min(max_cost);

        let mut best: Option<(T, T)> = None;
        let cuts = self.cut_points(lower, upper);
        for pair in cuts.windows(2) {
            let (start, end) = (pair[0], pair[1]);
            let slope = self.weight_through(start);
            let share = self.residual_demand(start);
            // Concave quadratic share*(K-lower) with share affine of slope
            // -`slope`; vertex in closed form, clamped into the segment.
            let candidate = if slope == T::zero() {
                end
            } else {
                let vertex = (lower + start) / two::<T>() + share / (two::<T>() * slope);
                vertex.max(start).min(end)
            };
            let value = self.residual_demand(candidate) * (candidate - lower);
            if best.is_none_or(|(v, _)| value > v) {
                best = Some((value, candidate));
            }
        }
        let (value, routing_cost) = best.expect("window is nonempty");
        Ok(AuxSolution {
            routing_cost,
            value,
            problem: AuxProblem::InteriorPrice,
        })
    }

    /// Capped-price objective `residual_demand(K) * (C - a*gamma/(K - b - C))`.
    fn capped_value(&self, k: T) -> T {
        let own = &self.own;
        let margin = own.price_cap - own.a * own.gamma / (k - own.b - own.price_cap);
        self.residual_demand(k) * margin
    }

    /// One-sided derivative of the capped-price objective at `k`, with the
    /// opponents active for costs just above `k`.
    fn capped_derivative(&self, k: T) -> T {
        let own = &self.own;
        let u = k - own.b - own.price_cap;
        let margin = own.price_cap - own.a * own.gamma / u;
        -self.weight_through(k) * margin + self.residual_demand(k) * own.a * own.gamma / (u * u)
    }

    /// Maximize the capped-price objective over its window, or report why no
    /// maximum exists.
    pub fn solve_capped_price(&self) -> Result<AuxSolution<T>, P2NoOptimum> {
        let own = &self.own;
        let sag = own.sqrt_a_gamma();
        let branch_boundary = sag + own.b + own.price_cap;
        let max_cost = self.max_viable_cost();
        // Left end of the window: closed at a*gamma/C + b + C when the cap is
        // below sqrt(a*gamma), open at the branch boundary otherwise.
        let lower = if own.price_cap < sag {
            own.a * own.gamma / own.price_cap + own.b + own.price_cap
        } else {
            branch_boundary
        };
        if lower >= max_cost {
            return Err(P2NoOptimum::Infeasible);
        }
        if own.price_cap > sag
            && self.capped_derivative(lower) <= from_f64(tol::AUX_EXISTENCE_DERIVATIVE)
        {
            // Strictly decreasing from the open left end onwards.
            return Err(P2NoOptimum::SupNotAttained);
        }

        let mut best: Option<(T, T)> = None;
        let cuts = self.cut_points(lower, max_cost);
        for pair in cuts.windows(2) {
            let (start, end) = (pair[0], pair[1]);
            let d_start = self.capped_derivative(start);
            let candidate = if d_start <= T::zero() {
                start
            } else if self.capped_derivative_left(end, start) >= T::zero() {
                end
            } else {
                self.bisect_capped_stationary(start, end)
            };
            let value = self.capped_value(candidate);
            if best.is_none_or(|(v, _)| value > v) {
                best = Some((value, candidate));
            }
        }
        let (value, routing_cost) = best.expect("window is nonempty");
        Ok(AuxSolution {
            routing_cost,
            value,
            problem: AuxProblem::CappedPrice,
        })
    }

    /// Left derivative at `k` on the segment starting at `segment_start`.
    fn capped_derivative_left(&self, k: T, segment_start: T) -> T {
        let own = &self.own;
        let u = k - own.b - own.price_cap;
        let margin = own.price_cap - own.a * own.gamma / u;
        -self.weight_through(segment_start) * margin
            + self.residual_demand(k) * own.a * own.gamma / (u * u)
    }

    /// The derivative is strictly decreasing on a segment; bisect its sign
    /// change down to the configured absolute K width.
    fn bisect_capped_stationary(&self, mut lo: T, mut hi: T) -> T {
        let tol = from_f64::<T>(tol::AUX_BISECTION_ABS);
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = (lo + hi) / two::<T>();
            if mid <= lo || mid >= hi {
                break;
            }
            if self.capped_derivative(mid) > T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) / two::<T>()
    }
}

/// Best response of `firm` to the opponents' strategies in `profile`,
/// characterized exactly via the two auxiliary problems.
///
/// The returned profit is at the instance's demand scale.
pub fn best_response<T: Scalar>(
    instance: &Instance<T>,
    profile: &Profile<T>,
    firm: usize,
) -> BestResponseSet<T> {
    let view = match OpponentView::new(instance, profile, firm) {
        Ok(view) => view,
        Err(EmptyOpposition) => return BestResponseSet::Empty,
    };
    let demand = instance.demand();
    if let Ok(aux) = view.solve_capped_price() {
        let own = view.own_params();
        let share = view.residual_demand(aux.routing_cost);
        let capacity = own.a * share / (aux.routing_cost - own.b - own.price_cap);
        return BestResponseSet::Unique {
            strategy: Strategy::new(capacity, own.price_cap),
            profit: aux.value * demand,
            aux,
        };
    }
    match view.solve_interior_price() {
        Ok(aux) => {
            let own = view.own_params();
            let share = view.residual_demand(aux.routing_cost);
            let capacity = (own.a / own.gamma).sqrt() * share;
            // Trim float residue only; never clamps a genuinely interior price.
            let price = (aux.routing_cost - own.sqrt_a_gamma() - own.b).min(own.price_cap);
            BestResponseSet::Unique {
                strategy: Strategy::new(capacity, price),
                profit: aux.value * demand,
                aux,
            }
        }
        Err(_) => BestResponseSet::ZeroCapacitySegment,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{profit, Firm};
    use crate::wardrop::wardrop_flow;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn steep_two_firm() -> Instance<f64> {
        Instance::new(
            vec![
                Firm {
                    id: "1".into(),
                    params: FirmParams::new(1.0, 1.0, 10.0, 0.25),
                },
                Firm {
                    id: "2".into(),
                    params: FirmParams::new(2.0, 1.0, 10.0, 0.25),
                },
            ],
            None,
        )
        .unwrap()
    }

    fn single_opponent(own: FirmParams<f64>, entry: f64, weight: f64) -> OpponentView<f64> {
        OpponentView::from_parts(
            own,
            vec![Breakpoint {
                firm: 1,
                entry_cost: entry,
                weight,
            }],
        )
        .unwrap()
    }

    #[test]
    fn residual_demand_matches_hand_values() {
        let instance = steep_two_firm();
        let profile = Profile::from_pairs(&[(1.0, 1.0), (0.0, 0.0)]);
        let view = OpponentView::new(&instance, &profile, 1).unwrap();
        assert_relative_eq!(view.residual_demand(2.5), 0.5);
        assert_relative_eq!(view.residual_demand(2.0), 1.0);
        assert_relative_eq!(view.residual_demand(3.0), 0.0);
    }

    #[test]
    fn residual_demand_cross_checks_against_full_wardrop() {
        let instance = steep_two_firm();
        let profile = Profile::from_pairs(&[(1.0, 1.0), (2.0, 1.0)]);
        let outcome = wardrop_flow(&instance, &profile).unwrap();
        let view = OpponentView::new(&instance, &profile, 1).unwrap();
        assert_relative_eq!(view.residual_demand(outcome.routing_cost), outcome.flows[1]);
    }

    #[test]
    fn max_viable_cost_roots() {
        let own = FirmParams::new(1.0, 0.0, 1.0, 1.0);
        assert_relative_eq!(single_opponent(own, 2.0, 1.0).max_viable_cost(), 3.0);
        assert_relative_eq!(single_opponent(own, 1.0, 0.25).max_viable_cost(), 5.0);
        assert_relative_eq!(single_opponent(own, 2.0, 0.1).max_viable_cost(), 12.0);
    }

    #[test]
    fn empty_opposition_is_rejected_at_view_construction() {
        let instance = steep_two_firm();
        let profile = Profile::from_pairs(&[(1.0, 1.0), (0.0, 0.0)]);
        assert!(OpponentView::new(&instance, &profile, 0).is_err());
        assert!(OpponentView::new(&instance, &profile, 1).is_ok());
    }

    #[test]
    fn interior_price_vertex_solution() {
        // Steep firm against an opponent at entry cost 2 with unit weight:
        // concave quadratic (3 - K)(K - 1 - 2*sqrt(0.5)) on [1 + 2*sqrt(0.5), 3).
        let own = FirmParams::new(2.0, 1.0, 10.0, 0.25);
        let aux = single_opponent(own, 2.0, 1.0)
            .solve_interior_price()
            .unwrap();
        assert_relative_eq!(aux.routing_cost, 2.0 + 0.5f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(aux.value, (1.0 - 0.5f64.sqrt()).powi(2), epsilon = 1e-12);
    }

    #[test]
    fn interior_price_flat_share_segment() {
        // Opponent entry at the window's left end: f = (1.2 - 0.1*K)(K - 2),
        // vertex at K = 7.
        let own = FirmParams::new(1.0, 0.0, 10.0, 1.0);
        let aux = single_opponent(own, 2.0, 0.1)
            .solve_interior_price()
            .unwrap();
        assert_relative_eq!(aux.routing_cost, 7.0, epsilon = 1e-12);
        assert_relative_eq!(aux.value, 2.5, epsilon = 1e-12);
    }

    #[test]
    fn interior_price_infeasible_when_market_closes_early() {
        let own = FirmParams::new(1.0, 0.0, 1.0, 1.0);
        // Opponent absorbs everything by K = 1.5 < 2 = window start.
        let view = single_opponent(own, 1.0, 2.0);
        assert_relative_eq!(view.max_viable_cost(), 1.5);
        assert_eq!(
            view.solve_interior_price().unwrap_err(),
            P1Infeasible::XbarNonpositive
        );
    }

    #[test]
    fn interior_price_empty_interval() {
        // sqrt(a*gamma) = 2 > 1 = price cap.
        let own = FirmParams::new(4.0, 0.0, 1.0, 1.0);
        let view = single_opponent(own, 5.0, 0.01);
        assert_eq!(
            view.solve_interior_price().unwrap_err(),
            P1Infeasible::EmptyInterval
        );
    }

    #[test]
    fn capped_price_stationary_point() {
        let own = FirmParams::new(1.0, 0.0, 1.0, 1.0);
        let aux = single_opponent(own, 1.0, 0.25)
            .solve_capped_price()
            .unwrap();
        assert_relative_eq!(aux.routing_cost, 3.0, epsilon = 1e-10);
        assert_relative_eq!(aux.value, 0.25, epsilon = 1e-10);
    }

    #[test]
    fn capped_price_infeasible_window() {
        let own = FirmParams::new(2.0, 1.0, 10.0, 0.25);
        let view = single_opponent(own, 2.0, 1.0);
        assert_eq!(
            view.solve_capped_price().unwrap_err(),
            P2NoOptimum::Infeasible
        );
    }

    #[test]
    fn capped_price_supremum_not_attained() {
        let own = FirmParams::new(1.0, 0.0, 10.0, 1.0);
        let view = single_opponent(own, 2.0, 0.1);
        // Right derivative just inside the open end at K = 11 is -0.8.
        assert_relative_eq!(view.capped_derivative(11.0), -0.8, epsilon = 1e-12);
        assert_eq!(
            view.solve_capped_price().unwrap_err(),
            P2NoOptimum::SupNotAttained
        );
    }

    #[test]
    fn best_response_symmetric_fixed_point() {
        let instance = Instance::new(
            vec![
                Firm {
                    id: "1".into(),
                    params: FirmParams::new(1.0, 0.0, 1.0, 1.0),
                },
                Firm {
                    id: "2".into(),
                    params: FirmParams::new(1.0, 0.0, 1.0, 1.0),
                },
            ],
            None,
        )
        .unwrap();
        let profile = Profile::from_pairs(&[(1.0, 1.0), (0.25, 1.0)]);
        match best_response(&instance, &profile, 0) {
            BestResponseSet::Unique {
                strategy,
                profit,
                aux,
            } => {
                assert_eq!(aux.problem, AuxProblem::CappedPrice);
                assert_relative_eq!(strategy.capacity, 0.25, epsilon = 1e-9);
                assert_relative_eq!(strategy.price, 1.0);
                assert_relative_eq!(profit, 0.25, epsilon = 1e-9);
            }
            other => panic!("expected unique best response, got {other:?}"),
        }
    }

    #[test]
    fn best_response_falls_back_to_interior_price() {
        let instance = Instance::new(
            vec![
                Firm {
                    id: "i".into(),
                    params: FirmParams::new(1.0, 0.0, 10.0, 1.0),
                },
                Firm {
                    id: "j".into(),
                    params: FirmParams::new(1.0, 0.0, 10.0, 1.0),
                },
            ],
            None,
        )
        .unwrap();
        let profile = Profile::from_pairs(&[(0.0, 0.0), (0.1, 2.0)]);
        match best_response(&instance, &profile, 0) {
            BestResponseSet::Unique {
                strategy,
                profit,
                aux,
            } => {
                assert_eq!(aux.problem, AuxProblem::InteriorPrice);
                assert_relative_eq!(strategy.capacity, 0.5, epsilon = 1e-12);
                assert_relative_eq!(strategy.price, 6.0, epsilon = 1e-12);
                assert_relative_eq!(profit, 2.5, epsilon = 1e-12);
            }
            other => panic!("expected unique best response, got {other:?}"),
        }
    }

    #[test]
    fn best_response_empty_when_opponents_idle() {
        let instance = steep_two_firm();
        let profile = Profile::from_pairs(&[(1.0, 1.0), (0.0, 5.0)]);
        assert_eq!(
            best_response(&instance, &profile, 0),
            BestResponseSet::Empty
        );
    }

    #[test]
    fn profit_is_not_quasiconcave() {
        // Regression: zero profit at (0, 10) and (2, 1), but the midpoint
        // strategy (1, 5.5) loses money.
        let instance = steep_two_firm();
        let s1 = (1.0, 1.0);
        let at = |z, p| profit(&instance, &Profile::from_pairs(&[s1, (z, p)]))[1];
        assert_relative_eq!(at(0.0, 10.0), 0.0);
        assert_relative_eq!(at(2.0, 1.0), 0.0, epsilon = 1e-12);
        assert_relative_eq!(at(1.0, 5.5), -0.25, epsilon = 1e-12);
    }

    fn random_unit_instance(rng: &mut StdRng, n: usize) -> Instance<f64> {
        let firms = (0..n)
            .map(|i| Firm {
                id: format!("f{i}"),
                params: FirmParams::new(
                    10f64.powf(rng.gen_range(-1.0..1.0)),
                    rng.gen_range(0.0..2.0),
                    10f64.powf(rng.gen_range(-1.0..1.0)),
                    10f64.powf(rng.gen_range(-1.0..1.0)),
                ),
            })
            .collect();
        Instance::new(firms, None).unwrap()
    }

    fn random_profile(
        rng: &mut StdRng,
        instance: &Instance<f64>,
        active_firm: usize,
    ) -> Profile<f64> {
        let strategies = (0..instance.len())
            .map(|i| {
                let params = instance.params(i);
                let z_max = (params.price_cap / params.gamma).min(5.0);
                let z = if i == active_firm {
                    rng.gen_range(0.05..z_max.max(0.1))
                } else {
                    rng.gen_range(0.0..z_max)
                };
                (z, rng.gen_range(0.0..params.price_cap))
            })
            .collect::<Vec<_>>();
        Profile::from_pairs(&strategies)
    }

    #[test]
    fn unique_responses_are_positive_bounded_and_wardrop_consistent() {
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..300 {
            let n = rng.gen_range(2..=4);
            let instance = random_unit_instance(&mut rng, n);
            let firm = rng.gen_range(0..n);
            let opponent = (firm + 1) % n;
            let profile = random_profile(&mut rng, &instance, opponent);
            match best_response(&instance, &profile, firm) {
                BestResponseSet::Unique {
                    strategy,
                    profit: analytic,
                    aux,
                } => {
                    let params = instance.params(firm);
                    assert!(strategy.capacity > 0.0);
                    assert!(analytic > 0.0);
                    assert!(strategy.capacity <= params.price_cap / params.gamma + 1e-12);
                    // Playing the response reproduces the predicted flow and cost.
                    let mut played = profile.clone();
                    played.strategies[firm] = strategy;
                    let outcome = wardrop_flow(&instance, &played).unwrap();
                    let view = OpponentView::new(&instance, &profile, firm).unwrap();
                    assert_relative_eq!(
                        outcome.routing_cost,
                        aux.routing_cost,
                        max_relative = 1e-9
                    );
                    assert_relative_eq!(
                        outcome.flows[firm],
                        view.residual_demand(aux.routing_cost),
                        max_relative = 1e-9,
                        epsilon = 1e-9
                    );
                    let realized = profit(&instance, &played)[firm];
                    assert_relative_eq!(realized, analytic, max_relative = 1e-9, epsilon = 1e-12);
                }
                BestResponseSet::ZeroCapacitySegment => {}
                BestResponseSet::Empty => panic!("opponent had positive capacity"),
            }
        }
    }

    #[test]
    fn capped_price_value_dominates_interior_when_both_exist() {
        let mut rng = StdRng::seed_from_u64(123);
        let mut both = 0;
        for _ in 0..400 {
            let n = rng.gen_range(2..=4);
            let instance = random_unit_instance(&mut rng, n);
            let profile = random_profile(&mut rng, &instance, 1);
            let view = match OpponentView::new(&instance, &profile, 0) {
                Ok(v) => v,
                Err(_) => continue,
            };
            if let (Ok(interior), Ok(capped)) =
                (view.solve_interior_price(), view.solve_capped_price())
            {
                both += 1;
                assert!(interior.value >= 0.0);
                assert!(capped.value > 0.0);
                assert!(
                    interior.value < capped.value,
                    "interior {} should stay below capped {}",
                    interior.value,
                    capped.value
                );
            }
        }
        assert!(both > 20, "draws produced only {both} dual-optimum cases");
    }

    #[test]
    fn analytic_response_dominates_a_coarse_grid() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..40 {
            let instance = random_unit_instance(&mut rng, 2);
            let profile = random_profile(&mut rng, &instance, 1);
            let analytic = match best_response(&instance, &profile, 0) {
                BestResponseSet::Unique { profit, .. } => profit,
                BestResponseSet::ZeroCapacitySegment => 0.0,
                BestResponseSet::Empty => unreachable!(),
            };
            let params = instance.params(0);
            let (grid_strategy, grid_profit) =
                crate::oracle::grid_best_response(&instance, &profile, 0, 60).unwrap();
            let spacing = (params.price_cap / params.gamma / 59.0).max(params.price_cap / 59.0);
            assert!(
                analytic >= grid_profit - 2.0 * spacing * (params.gamma + 1.0),
                "analytic {analytic} lost to grid {grid_profit} at {grid_strategy:?}"
            );
        }
    }
}
