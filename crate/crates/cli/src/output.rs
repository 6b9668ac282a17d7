//! Output envelope and formatting helpers.

use serde::Serialize;

/// Exit codes of the binary.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_INPUT: i32 = 1;
pub const EXIT_CERTIFICATION_FAILED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Stable JSON envelope around every `--json` result. `duration_ms` is the
/// only field that varies between identical runs.
#[derive(Serialize)]
pub struct Envelope<R: Serialize> {
    pub schema_version: u32,
    pub command: String,
    pub instance_digest: String,
    pub tolerances: Tolerances,
    pub duration_ms: f64,
    pub result: R,
}

/// Tolerances in effect for the run.
#[derive(Serialize)]
pub struct Tolerances {
    pub equilibrium_bisection_rel: f64,
    pub wardrop_residual: f64,
    pub cert_profit: f64,
    pub cert_strategy: f64,
    pub cert_identity: f64,
    pub cert_gamma_sum: f64,
}

impl Tolerances {
    pub fn with_solver_tol(equilibrium_bisection_rel: f64) -> Self {
        Self {
            equilibrium_bisection_rel,
            wardrop_residual: capcomp::tol::WARDROP_RESIDUAL,
            cert_profit: capcomp::tol::CERT_PROFIT,
            cert_strategy: capcomp::tol::CERT_STRATEGY,
            cert_identity: capcomp::tol::CERT_IDENTITY,
            cert_gamma_sum: capcomp::tol::CERT_GAMMA_SUM,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::with_solver_tol(capcomp::tol::EQUILIBRIUM_BISECTION_REL)
    }
}

/// `sha256:<hex>` digest of the raw instance file bytes.
pub fn digest(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

pub fn print_envelope<R: Serialize>(
    command: &str,
    instance_digest: String,
    tolerances: Tolerances,
    started: std::time::Instant,
    result: R,
) {
    let envelope = Envelope {
        schema_version: 1,
        command: command.to_string(),
        instance_digest,
        tolerances,
        duration_ms: started.elapsed().as_secs_f64() * 1e3,
        result,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&envelope).expect("result serializes")
    );
}

/// Fixed-width cell with the table precision (6 digits).
pub fn cell(v: f64) -> String {
    format!("{v:>14.6}")
}

pub fn header(columns: &[&str]) -> String {
    columns
        .iter()
        .map(|c| format!("{c:>14}"))
        .collect::<Vec<_>>()
        .join(" ")
}
