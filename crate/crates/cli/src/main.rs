//! `capcomp`: capacity-and-price competition games from the command line.
//!
//! Subcommands expose the solver pipeline over JSON instance/profile files:
//! Wardrop flows, per-firm best responses, the certified equilibrium,
//! welfare metrics, the family sweep, and best-response dynamics.

mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use capcomp::best_response::AuxProblem;
use capcomp::dynamics::{run_dynamics, DynamicsConfig, Termination, UpdateOrder};
use capcomp::equilibrium::{solve_equilibrium_with_tol, verify_equilibrium};
use capcomp::model::{self, parse_instance_json, parse_profile_json, profile_to_raw, RawProfile};
use capcomp::oracle::grid_best_response;
use capcomp::wardrop::wardrop_flow;
use capcomp::welfare::{gm_instance, poa, social_cost, social_optimum};
use capcomp::{BestResponseSet, Certification, Equilibrium, Instance, Profile};

use output::{
    cell, digest, header, print_envelope, Tolerances, EXIT_CERTIFICATION_FAILED,
    EXIT_INVALID_INPUT, EXIT_OK, EXIT_USAGE,
};

#[derive(Parser)]
#[command(
    name = "capcomp",
    version,
    about = "Capacity-and-price competition under congestion: Wardrop flows, exact best \
             responses, certified equilibria, and welfare analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the Wardrop flow and routing cost induced by a profile
    Wardrop {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Exact best response of one firm to the others' strategies
    BestResponse {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        firm: String,
        #[arg(long)]
        json: bool,
    },
    /// Solve for the pure Nash equilibrium and certify it
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        #[arg(long)]
        csv: bool,
        /// Relative tolerance of the routing-cost bisection
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Certify a profile as an equilibrium, optionally against a profit grid
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        /// Additionally compare each firm's profit against a grid search of
        /// this resolution
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Equilibrium social cost versus the social optimum
    Poa {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Sweep the two-firm worst-case family over M and report PoA per value
    SweepGm {
        #[arg(long = "m-values", value_delimiter = ',', required = true)]
        m_values: Vec<f64>,
        /// Output CSV path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Best-response dynamics from a configurable start
    Dynamics {
        #[arg(long)]
        instance: PathBuf,
        /// 'zero', 'random:<seed>', or a profile JSON path
        #[arg(long)]
        init: String,
        /// 'rr' (round robin) or 'random:<seed>'
        #[arg(long, default_value = "rr")]
        order: String,
        /// Maximum number of full rounds
        #[arg(long = "max-iters", default_value_t = 1000)]
        max_iters: usize,
        /// Per-round convergence threshold on strategy movement
        #[arg(long, default_value_t = capcomp::tol::DYNAMICS_CONVERGENCE)]
        tol: f64,
        /// Capacity played when no best response exists
        #[arg(long, default_value_t = capcomp::tol::DYNAMICS_FALLBACK_CAPACITY)]
        delta: f64,
        /// Write the per-step trace to this CSV file
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Input {
        path: PathBuf,
        source: model::InputError,
    },
    #[error("unknown firm id {0:?}")]
    UnknownFirm(String),
    #[error("{0}")]
    BadArgument(String),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => match err.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                print!("{err}");
                std::process::exit(EXIT_OK);
            }
            _ => {
                eprint!("{err}");
                std::process::exit(EXIT_USAGE);
            }
        },
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(EXIT_INVALID_INPUT);
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Wardrop {
            instance,
            profile,
            json,
        } => cmd_wardrop(&instance, &profile, json),
        Command::BestResponse {
            instance,
            profile,
            firm,
            json,
        } => cmd_best_response(&instance, &profile, &firm, json),
        Command::Solve {
            instance,
            json,
            csv,
            tol,
        } => cmd_solve(&instance, json, csv, tol),
        Command::Verify {
            instance,
            profile,
            grid,
            json,
        } => cmd_verify(&instance, &profile, grid, json),
        Command::Poa { instance, json } => cmd_poa(&instance, json),
        Command::SweepGm { m_values, out } => cmd_sweep_gm(&m_values, out.as_deref()),
        Command::Dynamics {
            instance,
            init,
            order,
            max_iters,
            tol,
            delta,
            trace,
        } => cmd_dynamics(
            &instance,
            &init,
            &order,
            max_iters,
            tol,
            delta,
            trace.as_deref(),
        ),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })
}

fn load_instance(path: &Path) -> Result<(Instance, String), CliError> {
    let text = read_file(path)?;
    let instance = parse_instance_json(&text).map_err(|source| CliError::Input {
        path: path.into(),
        source,
    })?;
    Ok((instance, digest(text.as_bytes())))
}

fn load_profile(path: &Path, instance: &Instance) -> Result<Profile, CliError> {
    let text = read_file(path)?;
    parse_profile_json(&text, instance).map_err(|source| CliError::Input {
        path: path.into(),
        source,
    })
}

// ---------------------------------------------------------------------------
// wardrop
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct WardropResult {
    routing_cost: f64,
    flows: Vec<FlowRow>,
}

#[derive(Serialize)]
struct FlowRow {
    id: String,
    z: f64,
    p: f64,
    x: f64,
}

fn cmd_wardrop(instance_path: &Path, profile_path: &Path, json: bool) -> Result<i32, CliError> {
    let started = Instant::now();
    let (instance, instance_digest) = load_instance(instance_path)?;
    let profile = load_profile(profile_path, &instance)?;
    let outcome =
        wardrop_flow(&instance, &profile).map_err(|e| CliError::BadArgument(e.to_string()))?;
    let result = WardropResult {
        routing_cost: outcome.routing_cost,
        flows: (0..instance.len())
            .map(|i| FlowRow {
                id: instance.id(i).to_string(),
                z: profile.capacity(i),
                p: profile.price(i),
                x: outcome.flows[i],
            })
            .collect(),
    };
    if json {
        print_envelope(
            "wardrop",
            instance_digest,
            Tolerances::default(),
            started,
            result,
        );
    } else {
        println!("{}", header(&["firm", "z", "p", "x"]));
        for row in &result.flows {
            println!(
                "{:>14} {} {} {}",
                row.id,
                cell(row.z),
                cell(row.p),
                cell(row.x)
            );
        }
        println!("routing cost K = {:.6}", result.routing_cost);
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// best-response
// ---------------------------------------------------------------------------

#[derive(Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
enum BestResponseResult {
    /// No best response exists (all opponents idle).
    Empty,
    /// Any capacity-zero strategy is optimal.
    ZeroCapacitySegment,
    Unique {
        routing_cost: f64,
        problem: String,
        z: f64,
        p: f64,
        profit: f64,
    },
}

fn cmd_best_response(
    instance_path: &Path,
    profile_path: &Path,
    firm: &str,
    json: bool,
) -> Result<i32, CliError> {
    let started = Instant::now();
    let (instance, instance_digest) = load_instance(instance_path)?;
    let profile = load_profile(profile_path, &instance)?;
    let index = instance
        .firm_index(firm)
        .ok_or_else(|| CliError::UnknownFirm(firm.to_string()))?;
    let result = match capcomp::best_response::best_response(&instance, &profile, index) {
        BestResponseSet::Empty => BestResponseResult::Empty,
        BestResponseSet::ZeroCapacitySegment => BestResponseResult::ZeroCapacitySegment,
        BestResponseSet::Unique {
            strategy,
            profit,
            aux,
        } => BestResponseResult::Unique {
            routing_cost: aux.routing_cost,
            problem: match aux.problem {
                AuxProblem::InteriorPrice => "interior_price".to_string(),
                AuxProblem::CappedPrice => "capped_price".to_string(),
            },
            z: strategy.capacity,
            p: strategy.price,
            profit,
        },
    };
    if json {
        print_envelope(
            "best-response",
            instance_digest,
            Tolerances::default(),
            started,
            result,
        );
    } else {
        match result {
            BestResponseResult::Empty => {
                println!(
                    "firm {firm}: no best response (all opponents idle); the profit \
                          supremum equals the price cap but is not attained"
                )
            }
            BestResponseResult::ZeroCapacitySegment => {
                println!(
                    "firm {firm}: every zero-capacity strategy (0, p) with 0 <= p <= cap \
                          is a best response; entering the market cannot be profitable"
                )
            }
            BestResponseResult::Unique {
                routing_cost,
                problem,
                z,
                p,
                profit,
            } => {
                println!("firm {firm}: unique best response via {problem}");
                println!("  K* = {routing_cost:.6}");
                println!("  z = {z:.6}, p = {p:.6}, profit = {profit:.6}");
            }
        }
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SolveResult {
    routing_cost: f64,
    capacity_mass: f64,
    active: Vec<String>,
    interior_price: Vec<String>,
    capped_price: Vec<String>,
    firms: Vec<EquilibriumRow>,
    profile: RawProfile,
    certification: Certification,
}

#[derive(Serialize)]
struct EquilibriumRow {
    id: String,
    z: f64,
    p: f64,
    x: f64,
    profit: f64,
    branch: &'static str,
}

fn equilibrium_rows(instance: &Instance, eq: &Equilibrium) -> Vec<EquilibriumRow> {
    (0..instance.len())
        .map(|i| EquilibriumRow {
            id: instance.id(i).to_string(),
            z: eq.profile.capacity(i),
            p: eq.profile.price(i),
            x: eq.flows[i],
            profit: eq.profits[i],
            branch: if eq.interior_price.contains(&i) {
                "interior"
            } else if eq.capped_price.contains(&i) {
                "capped"
            } else {
                "inactive"
            },
        })
        .collect()
}

fn ids(instance: &Instance, indices: &[usize]) -> Vec<String> {
    indices
        .iter()
        .map(|&i| instance.id(i).to_string())
        .collect()
}

fn cmd_solve(
    instance_path: &Path,
    json: bool,
    csv: bool,
    tol: Option<f64>,
) -> Result<i32, CliError> {
    let started = Instant::now();
    let (instance, instance_digest) = load_instance(instance_path)?;
    let rel_tol = tol.unwrap_or(capcomp::tol::EQUILIBRIUM_BISECTION_REL);
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(CliError::BadArgument(format!(
            "--tol must be a relative tolerance in (0, 1), got {rel_tol}"
        )));
    }
    let eq = solve_equilibrium_with_tol(&instance, rel_tol)
        .map_err(|e| CliError::BadArgument(e.to_string()))?;
    let certification = verify_equilibrium(&instance, &eq.profile);
    let certified = certification.passed();
    let result = SolveResult {
        routing_cost: eq.routing_cost,
        capacity_mass: eq.capacity_mass,
        active: ids(&instance, &eq.active),
        interior_price: ids(&instance, &eq.interior_price),
        capped_price: ids(&instance, &eq.capped_price),
        firms: equilibrium_rows(&instance, &eq),
        profile: profile_to_raw(&instance, &eq.profile),
        certification,
    };

    if json {
        print_envelope(
            "solve",
            instance_digest,
            Tolerances::with_solver_tol(rel_tol),
            started,
            result,
        );
    } else if csv {
        println!("id,z,p,x,profit,branch,K");
        for row in &result.firms {
            println!(
                "{},{},{},{},{},{},{}",
                row.id, row.z, row.p, row.x, row.profit, row.branch, result.routing_cost
            );
        }
    } else {
        println!("routing cost K = {:.6}", result.routing_cost);
        println!(
            "active: [{}]  interior-price: [{}]  capped-price: [{}]",
            result.active.join(", "),
            result.interior_price.join(", "),
            result.capped_price.join(", ")
        );
        println!("{}", header(&["firm", "z", "p", "x", "profit"]));
        for row in &result.firms {
            println!(
                "{:>14} {} {} {} {}  {}",
                row.id,
                cell(row.z),
                cell(row.p),
                cell(row.x),
                cell(row.profit),
                row.branch
            );
        }
        print_certification(&result.certification);
    }
    Ok(if certified {
        EXIT_OK
    } else {
        EXIT_CERTIFICATION_FAILED
    })
}

fn print_certification(certification: &Certification) {
    let failed: Vec<_> = certification.checks.iter().filter(|c| !c.passed).collect();
    if failed.is_empty() {
        let worst = certification
            .checks
            .iter()
            .map(|c| c.residual)
            .fold(0.0f64, f64::max);
        println!(
            "certification: PASS ({} checks, worst residual {worst:.3e})",
            certification.checks.len()
        );
    } else {
        println!(
            "certification: FAIL ({}/{} checks failed)",
            failed.len(),
            certification.checks.len()
        );
        for check in failed {
            println!("  FAIL {} residual {:.3e}", check.label, check.residual);
        }
    }
    for note in &certification.notes {
        println!("  note: {note}");
    }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct VerifyResult {
    certification: Certification,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<Vec<GridRow>>,
}

#[derive(Serialize)]
struct GridRow {
    id: String,
    profile_profit: f64,
    grid_profit: f64,
    slack: f64,
    passed: bool,
}

fn cmd_verify(
    instance_path: &Path,
    profile_path: &Path,
    grid: Option<usize>,
    json: bool,
) -> Result<i32, CliError> {
    let started = Instant::now();
    let (instance, instance_digest) = load_instance(instance_path)?;
    let profile = load_profile(profile_path, &instance)?;
    let certification = verify_equilibrium(&instance, &profile);

    let grid_rows = match grid {
        Some(resolution) => {
            if resolution < 2 {
                return Err(CliError::BadArgument(
                    "--grid resolution must be at least 2".into(),
                ));
            }
            let profits = capcomp::model::profit(&instance, &profile);
            let rows = (0..instance.len())
                .filter_map(|i| {
                    let (_, grid_profit) =
                        grid_best_response(&instance, &profile, i, resolution).ok()?;
                    let params = instance.params(i);
                    let steps = (resolution - 1) as f64;
                    let spacing =
                        (params.price_cap / params.gamma / steps).max(params.price_cap / steps);
                    let slack = 2.0 * spacing * (params.gamma + 1.0);
                    Some(GridRow {
                        id: instance.id(i).to_string(),
                        profile_profit: profits[i],
                        grid_profit,
                        slack,
                        passed: profits[i] >= grid_profit - slack,
                    })
                })
                .collect::<Vec<_>>();
            Some(rows)
        }
        None => None,
    };

    let passed = certification.passed()
        && grid_rows
            .as_ref()
            .is_none_or(|rows| rows.iter().all(|r| r.passed));
    let result = VerifyResult {
        certification,
        grid: grid_rows,
    };

    if json {
        print_envelope(
            "verify",
            instance_digest,
            Tolerances::default(),
            started,
            result,
        );
    } else {
        print_certification(&result.certification);
        if let Some(rows) = &result.grid {
            println!("{}", header(&["firm", "profit", "grid best", "slack"]));
            for row in rows {
                println!(
                    "{:>14} {} {} {}  {}",
                    row.id,
                    cell(row.profile_profit),
                    cell(row.grid_profit),
                    cell(row.slack),
                    if row.passed { "ok" } else { "IMPROVABLE" }
                );
            }
        }
    }
    Ok(if passed {
        EXIT_OK
    } else {
        EXIT_CERTIFICATION_FAILED
    })
}

// ---------------------------------------------------------------------------
// poa
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PoaResult {
    routing_cost: f64,
    equilibrium_cost: f64,
    optimum_value: f64,
    price_of_anarchy: f64,
    equilibrium_profile: RawProfile,
    optimum_profile: RawProfile,
}

fn cmd_poa(instance_path: &Path, json: bool) -> Result<i32, CliError> {
    let started = Instant::now();
    let (instance, instance_digest) = load_instance(instance_path)?;
    let report = poa(&instance).map_err(|e| CliError::BadArgument(e.to_string()))?;
    let result = PoaResult {
        routing_cost: report.equilibrium.routing_cost,
        equilibrium_cost: report.equilibrium_cost,
        optimum_value: report.optimum_value,
        price_of_anarchy: report.price_of_anarchy,
        equilibrium_profile: profile_to_raw(&instance, &report.equilibrium.profile),
        optimum_profile: profile_to_raw(&instance, &report.optimum_profile),
    };
    if json {
        print_envelope(
            "poa",
            instance_digest,
            Tolerances::default(),
            started,
            result,
        );
    } else {
        println!("equilibrium social cost = {:.6}", result.equilibrium_cost);
        println!("social optimum         = {:.6}", result.optimum_value);
        println!("price of anarchy       = {:.6}", result.price_of_anarchy);
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// sweep-gm
// ---------------------------------------------------------------------------

fn cmd_sweep_gm(m_values: &[f64], out: Option<&Path>) -> Result<i32, CliError> {
    let rows: Result<Vec<String>, CliError> = m_values
        .par_iter()
        .map(|&m| {
            let instance = gm_instance(m).map_err(|e| CliError::BadArgument(e.to_string()))?;
            let eq = capcomp::equilibrium::solve_equilibrium(&instance)
                .map_err(|e| CliError::BadArgument(e.to_string()))?;
            let cost = social_cost(&instance, &eq.profile);
            let (opt, _) = social_optimum(&instance);
            Ok(format!(
                "{},{},{},{},{}",
                m,
                eq.routing_cost,
                cost,
                opt,
                cost / opt
            ))
        })
        .collect();
    let mut csv = String::from("M,K,social_cost_pne,opt,poa\n");
    for row in rows? {
        csv.push_str(&row);
        csv.push('\n');
    }
    match out {
        Some(path) => std::fs::write(path, csv).map_err(|source| CliError::Io {
            path: path.into(),
            source,
        })?,
        None => print!("{csv}"),
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// dynamics
// ---------------------------------------------------------------------------

fn cmd_dynamics(
    instance_path: &Path,
    init: &str,
    order: &str,
    max_iters: usize,
    tol: f64,
    delta: f64,
    trace_path: Option<&Path>,
) -> Result<i32, CliError> {
    let (instance, _) = load_instance(instance_path)?;

    let initial = if init == "zero" {
        Profile::from_pairs(&vec![(0.0, 0.0); instance.len()])
    } else if let Some(seed) = init.strip_prefix("random:") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| CliError::BadArgument(format!("bad --init seed {seed:?}")))?;
        use rand::SeedableRng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        capcomp::oracle::random_profile(&mut rng, &instance)
    } else {
        load_profile(Path::new(init), &instance)?
    };

    let order = if order == "rr" {
        UpdateOrder::RoundRobin
    } else if let Some(seed) = order.strip_prefix("random:") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| CliError::BadArgument(format!("bad --order seed {seed:?}")))?;
        UpdateOrder::Random { seed }
    } else {
        return Err(CliError::BadArgument(format!(
            "--order must be 'rr' or 'random:<seed>', got {order:?}"
        )));
    };

    let config = DynamicsConfig {
        order,
        max_rounds: max_iters,
        convergence_tol: tol,
        fallback_capacity: delta,
    };
    let trace = run_dynamics(&instance, &initial, &config);

    if let Some(path) = trace_path {
        let mut csv = String::from("iter,firm,z,p,profit,max_change\n");
        for (iter, step) in trace.steps.iter().enumerate() {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                iter + 1,
                instance.id(step.firm),
                step.strategy.capacity,
                step.strategy.price,
                step.profit_after,
                step.change
            ));
        }
        std::fs::write(path, csv).map_err(|source| CliError::Io {
            path: path.into(),
            source,
        })?;
    }

    let reason = match trace.termination {
        Termination::Converged => "converged",
        Termination::MaxRounds => "round budget exhausted",
        Termination::StuckEmptyBestResponse => "stuck: a firm had no best response",
    };
    println!(
        "dynamics: {reason} after {} round(s), {} step(s)",
        trace.rounds,
        trace.steps.len()
    );
    println!("{}", header(&["firm", "z", "p"]));
    for i in 0..instance.len() {
        println!(
            "{:>14} {} {}",
            instance.id(i),
            cell(trace.final_profile.capacity(i)),
            cell(trace.final_profile.price(i))
        );
    }
    if trace.termination == Termination::Converged {
        let certified = verify_equilibrium(&instance, &trace.final_profile).passed();
        println!(
            "terminal profile certification: {}",
            if certified { "PASS" } else { "FAIL" }
        );
    }
    Ok(EXIT_OK)
}
