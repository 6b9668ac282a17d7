//! Oligopolistic capacity-and-price competition under congestion.
//!
//! Firms simultaneously set a service capacity and a capped price;
//! infinitesimal customers then split a fixed demand across firms so that
//! every used firm has the same effective cost (congestion plus price).
//! This crate computes the induced Wardrop flows, exact per-firm best
//! responses, the essentially unique pure Nash equilibrium, and welfare
//! metrics (social cost, social optimum, Price of Anarchy), and ships
//! independent brute-force oracles that certify every analytic result.
//!
//! All numerics are generic over the floating-point scalar via
//! [`scalar::Scalar`]; the crate root re-exports `f64` aliases for the
//! common case.

pub mod best_response;
pub mod dynamics;
pub mod equilibrium;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod tol;
pub mod wardrop;
pub mod welfare;

pub use scalar::Scalar;

/// `f64` instantiations of the core types.
pub type FirmParams = model::FirmParams<f64>;
pub type Firm = model::Firm<f64>;
pub type Instance = model::Instance<f64>;
pub type Strategy = model::Strategy<f64>;
pub type Profile = model::Profile<f64>;
pub type WardropOutcome = model::WardropOutcome<f64>;
pub type BestResponseSet = best_response::BestResponseSet<f64>;
pub type Equilibrium = equilibrium::Equilibrium<f64>;
pub type Certification = equilibrium::Certification<f64>;
pub type WelfareReport = welfare::WelfareReport<f64>;
pub type Trace = dynamics::Trace<f64>;
