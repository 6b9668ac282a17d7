//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (visible with `cargo test -p capcomp --test acceptance --
//! --nocapture`). Criteria combine exact-value regressions on the worked
//! examples with randomized property suites certified by the brute-force
//! oracles.

use capcomp::best_response::{best_response, BestResponseSet, OpponentView};
use capcomp::dynamics::{run_dynamics, DynamicsConfig, Termination};
use capcomp::equilibrium::{activation_threshold, solve_equilibrium, verify_equilibrium};
use capcomp::model::{normalize_demand, profit, Firm, FirmParams, Instance, Profile};
use capcomp::oracle::{enumerate_candidates, grid_best_response, random_instance};
use capcomp::wardrop::wardrop_flow;
use capcomp::welfare::{gm_instance, poa, social_cost, social_optimum};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::time::Instant;

fn report(criterion: &str, passed: bool) {
    println!(
        "criterion {criterion}: {}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {criterion} failed");
}

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

/// Profit slack a grid of the given resolution is allowed versus the exact
/// optimum: twice the grid spacing times `gamma + 1`.
fn grid_slack(params: &FirmParams<f64>, resolution: usize) -> f64 {
    let steps = (resolution - 1) as f64;
    let spacing = (params.price_cap / params.gamma / steps).max(params.price_cap / steps);
    2.0 * spacing * (params.gamma + 1.0)
}

fn random_profile_with_opposition(
    rng: &mut StdRng,
    instance: &Instance<f64>,
    firm: usize,
) -> Profile<f64> {
    let mut profile = capcomp::oracle::random_profile(rng, instance);
    let opponent = (firm + 1) % instance.len();
    if profile
        .strategies
        .iter()
        .enumerate()
        .all(|(j, s)| j == firm || s.capacity == 0.0)
    {
        profile.strategies[opponent].capacity =
            0.5 * instance.params(opponent).price_cap / instance.params(opponent).gamma;
    }
    profile
}

#[test]
fn criterion_1_worked_example_regression() {
    let instance = steep_two_firm();

    let split = wardrop_flow(&instance, &Profile::from_pairs(&[(1.0, 1.0), (2.0, 1.0)])).unwrap();
    let mut ok = (split.flows[0] - 0.5).abs() <= 1e-12 && (split.flows[1] - 0.5).abs() <= 1e-12;

    let shutout = wardrop_flow(&instance, &Profile::from_pairs(&[(1.0, 1.0), (1.0, 5.5)])).unwrap();
    ok &= shutout.flows == vec![1.0, 0.0];

    let pi_split = profit(&instance, &Profile::from_pairs(&[(1.0, 1.0), (2.0, 1.0)]))[1];
    let pi_shutout = profit(&instance, &Profile::from_pairs(&[(1.0, 1.0), (1.0, 5.5)]))[1];
    ok &= pi_split.abs() <= 1e-12 && (pi_shutout + 0.25).abs() <= 1e-12;

    // Quasiconcavity violation: endpoints worth 0, midpoint strictly worse.
    let triple = [
        profit(&instance, &Profile::from_pairs(&[(1.0, 1.0), (0.0, 10.0)]))[1],
        profit(&instance, &Profile::from_pairs(&[(1.0, 1.0), (2.0, 1.0)]))[1],
        pi_shutout,
    ];
    ok &= triple[0].abs() <= 1e-12 && triple[1].abs() <= 1e-12 && (triple[2] + 0.25).abs() <= 1e-12;

    report("1 (worked-example regression)", ok);
}

#[test]
fn criterion_2_family_suite() {
    let start = Instant::now();
    let mut ok = true;
    for m in [1.0f64, 2.0, 5.0, 10.0, 100.0] {
        let instance = gm_instance(m).unwrap();
        let eq = solve_equilibrium(&instance).unwrap();
        let closed_form = m + 1.0 + (m * m - m + 1.0).sqrt();
        ok &= ((eq.routing_cost - closed_form) / closed_form).abs() <= 1e-9;
        let cost = social_cost(&instance, &eq.profile);
        ok &= cost > m;
        let (opt, _) = social_optimum(&instance);
        ok &= (opt - 2.0).abs() <= 1e-12;
        ok &= cost / opt > m / 2.0;
    }
    let elapsed = start.elapsed();
    ok &= elapsed.as_secs_f64() < 1.0;
    report(
        &format!("2 (family suite, {:.0} ms)", elapsed.as_secs_f64() * 1e3),
        ok,
    );
}

#[test]
fn criterion_3_symmetric_game_exact_values() {
    let instance: Instance<f64> = gm_instance(1.0).unwrap();
    let eq = solve_equilibrium(&instance).unwrap();
    let mut ok = (eq.routing_cost - 3.0).abs() <= 1e-9;
    for i in 0..2 {
        ok &= (eq.profile.capacity(i) - 0.25).abs() <= 1e-9;
        ok &= (eq.profile.price(i) - 1.0).abs() <= 1e-9;
        ok &= (eq.flows[i] - 0.5).abs() <= 1e-9;
        ok &= (eq.profits[i] - 0.25).abs() <= 1e-9;
    }
    ok &= (social_cost(&instance, &eq.profile) - 2.5).abs() <= 1e-9;
    let report_poa = poa(&instance).unwrap();
    ok &= (report_poa.price_of_anarchy - 1.25).abs() <= 1e-9;

    // Grid-oracle certification at resolution 400: no grid strategy beats
    // the equilibrium profit beyond grid slack.
    for firm in 0..2 {
        let (_, grid_profit) = grid_best_response(&instance, &eq.profile, firm, 400).unwrap();
        let slack = grid_slack(instance.params(firm), 400);
        ok &= eq.profits[firm] >= grid_profit - slack;
    }
    report("3 (symmetric game exact values)", ok);
}

#[test]
fn criterion_4_best_response_grid_soundness() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0004);
    let mut violations = 0usize;
    for _ in 0..200 {
        let n = rng.gen_range(2..=4);
        let instance = random_instance::<f64>(&mut rng, n);
        let firm = rng.gen_range(0..n);
        let profile = random_profile_with_opposition(&mut rng, &instance, firm);
        let analytic = match best_response(&instance, &profile, firm) {
            BestResponseSet::Unique { profit, .. } => profit,
            BestResponseSet::ZeroCapacitySegment => 0.0,
            BestResponseSet::Empty => unreachable!("opposition enforced"),
        };
        let (_, grid) = grid_best_response(&instance, &profile, firm, 200).unwrap();
        if analytic < grid - grid_slack(instance.params(firm), 200) {
            violations += 1;
        }
    }
    report(
        &format!("4 (grid soundness, {violations} violations)"),
        violations == 0,
    );
}

#[test]
fn criterion_5_auxiliary_problem_properties() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0005);
    let mut ok = true;
    let mut both_exist = 0usize;
    for _ in 0..500 {
        let n = rng.gen_range(2..=4);
        let instance = random_instance::<f64>(&mut rng, n);
        let firm = rng.gen_range(0..n);
        let profile = random_profile_with_opposition(&mut rng, &instance, firm);
        let view = OpponentView::new(&instance, &profile, firm).unwrap();

        if let (Ok(interior), Ok(capped)) = (view.solve_interior_price(), view.solve_capped_price())
        {
            both_exist += 1;
            ok &= interior.value < capped.value;
        }

        if let BestResponseSet::Unique {
            strategy,
            profit: value,
            aux,
        } = best_response(&instance, &profile, firm)
        {
            let params = instance.params(firm);
            ok &= strategy.capacity > 0.0;
            ok &= value > 0.0;
            ok &= strategy.capacity <= params.price_cap / params.gamma + 1e-12;

            let mut played = profile.clone();
            played.strategies[firm] = strategy;
            let outcome = wardrop_flow(&instance, &played).unwrap();
            let k = aux.routing_cost;
            ok &= ((outcome.routing_cost - k) / k.max(1.0)).abs() <= 1e-9;
            let predicted = view.residual_demand(k);
            ok &= (outcome.flows[firm] - predicted).abs() <= 1e-9 * predicted.max(1.0);
        }
    }
    report(
        &format!("5 (auxiliary-problem properties, {both_exist} dual-optimum views)"),
        ok && both_exist > 0,
    );
}

#[test]
fn criterion_6_essential_uniqueness() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0006);
    let mut ok = true;
    for _ in 0..500 {
        let n = rng.gen_range(2..=4);
        let instance = random_instance::<f64>(&mut rng, n);
        let eq = solve_equilibrium(&instance).unwrap();
        let candidates = enumerate_candidates(&instance).unwrap();
        let consistent: Vec<_> = candidates.iter().filter(|c| c.consistent()).collect();
        if consistent.len() != 1 {
            ok = false;
            eprintln!(
                "{} consistent candidates on {:?}",
                consistent.len(),
                instance
            );
            continue;
        }
        let deviation = consistent[0].deviation_from(&eq);
        if deviation > 1e-7 {
            ok = false;
            eprintln!("candidate deviates by {deviation} on {instance:?}");
        }
    }
    report("6 (essential uniqueness)", ok);
}

#[test]
fn criterion_7_certification_of_solver_output() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0007);
    let mut instances: Vec<Instance<f64>> = vec![steep_two_firm()];
    for m in [1.0, 2.0, 5.0, 10.0, 100.0] {
        instances.push(gm_instance(m).unwrap());
    }
    for _ in 0..300 {
        let n = rng.gen_range(2..=6);
        instances.push(random_instance(&mut rng, n));
    }
    let mut ok = true;
    for instance in &instances {
        let eq = solve_equilibrium(instance).unwrap();
        let report = verify_equilibrium(instance, &eq.profile);
        if !report.passed() {
            ok = false;
            let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).collect();
            eprintln!("certification failed on {instance:?}: {failed:?}");
        }
        // Activation consistency is exact on solver output.
        for i in 0..instance.len() {
            let active = eq.profile.capacity(i) > 0.0;
            let above = eq.routing_cost > activation_threshold(instance.params(i));
            if active != above {
                ok = false;
                eprintln!("activation inconsistency for firm {i} on {instance:?}");
            }
        }
    }
    report("7 (solver output certification)", ok);
}

#[test]
fn criterion_8_demand_scaling() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0008);
    let mut ok = true;
    for trial in 0..100 {
        let demand = [0.5, 2.0, 7.0][trial % 3];
        let n = rng.gen_range(2..=4);
        let unit = random_instance::<f64>(&mut rng, n);
        let instance = Instance::new(unit.firms().to_vec(), Some(demand)).unwrap();

        // Route A: solve the normalized game and rescale.
        let (normalized, scale) = normalize_demand(&instance);
        let eq = solve_equilibrium(&normalized).unwrap();
        let rescaled_profits: Vec<f64> = eq.profits.iter().map(|p| p * scale.factor).collect();
        let rescaled_cost = scale.factor * social_cost(&normalized, &eq.profile);

        // Route B: simulate the same profile directly at demand d.
        let direct_profits = profit(&instance, &eq.profile);
        let direct_cost = social_cost(&instance, &eq.profile);

        for (a, b) in rescaled_profits.iter().zip(&direct_profits) {
            if ((a - b) / a.abs().max(b.abs()).max(1.0)).abs() > 1e-9 {
                ok = false;
                eprintln!("profit mismatch {a} vs {b} at demand {demand}");
            }
        }
        if ((rescaled_cost - direct_cost) / rescaled_cost).abs() > 1e-9 {
            ok = false;
            eprintln!("social cost mismatch {rescaled_cost} vs {direct_cost}");
        }

        // The direct solver agrees with the normalize-then-rescale route.
        let direct_eq = solve_equilibrium(&instance).unwrap();
        ok &= ((direct_eq.routing_cost - eq.routing_cost) / eq.routing_cost).abs() <= 1e-9;
        for i in 0..instance.len() {
            ok &= (direct_eq.profile.capacity(i) - eq.profile.capacity(i)).abs()
                <= 1e-9 * eq.profile.capacity(i).max(1.0);
            ok &= (direct_eq.flows[i] - scale.factor * eq.flows[i]).abs()
                <= 1e-9 * (scale.factor * eq.flows[i]).max(1.0);
        }
    }
    report("8 (demand scaling)", ok);
}

#[test]
fn criterion_9_dynamics_smoke() {
    let instance: Instance<f64> = gm_instance(1.0).unwrap();
    let mut rng = StdRng::seed_from_u64(0x5eed_0009);
    let mut converged = 0usize;
    for run in 0..20 {
        let start = Profile::from_pairs(&[
            (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)),
            (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)),
        ]);
        let config = DynamicsConfig {
            max_rounds: 200,
            ..DynamicsConfig::default()
        };
        let trace = run_dynamics(&instance, &start, &config);
        let certified = trace.termination == Termination::Converged
            && verify_equilibrium(&instance, &trace.final_profile).passed();
        if certified {
            converged += 1;
        } else {
            eprintln!(
                "run {run} from {start:?} ended with {:?}",
                trace.termination
            );
        }
    }
    report(
        &format!("9 (dynamics smoke, {converged}/20 converged)"),
        converged >= 19,
    );
}
