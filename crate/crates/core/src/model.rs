//! Core domain types, instance validation, and the demand-normalization
//! transform shared by all solver modules.

use serde::{Deserialize, Serialize};

use crate::scalar::{from_f64, Scalar};
use crate::wardrop;

/// One firm's technology and regulation constants.
///
/// Congestion experienced by its customers is `a * x / z + b` for flow `x`
/// and installed capacity `z > 0` (infinite congestion at `z = 0`), the
/// price is capped at `price_cap`, and capacity costs `gamma` per unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirmParams<T> {
    pub a: T,
    pub b: T,
    pub price_cap: T,
    pub gamma: T,
}

impl<T: Scalar> FirmParams<T> {
    pub fn new(a: T, b: T, price_cap: T, gamma: T) -> Self {
        Self {
            a,
            b,
            price_cap,
            gamma,
        }
    }

    /// `sqrt(a * gamma)`: the per-unit service cost when capacity is balanced
    /// against flow. Invariant under demand normalization.
    pub fn sqrt_a_gamma(&self) -> T {
        (self.a * self.gamma).sqrt()
    }
}

/// A firm: stable string identifier plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Firm<T> {
    pub id: String,
    pub params: FirmParams<T>,
}

/// A validated game instance: at least two firms and a positive total demand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance<T> {
    firms: Vec<Firm<T>>,
    demand: T,
}

impl<T: Scalar> Instance<T> {
    /// Build and validate an instance. `demand` defaults to 1 when `None`.
    pub fn new(firms: Vec<Firm<T>>, demand: Option<T>) -> Result<Self, ValidationError> {
        let demand = demand.unwrap_or_else(T::one);
        let mut violations = Vec::new();

        if firms.len() < 2 {
            violations.push(Violation::TooFewFirms { count: firms.len() });
        }
        for (k, firm) in firms.iter().enumerate() {
            if firms[..k].iter().any(|other| other.id == firm.id) {
                violations.push(Violation::DuplicateId {
                    id: firm.id.clone(),
                });
            }
            let p = &firm.params;
            check_positive(&mut violations, &firm.id, "a", p.a);
            check_nonnegative(&mut violations, &firm.id, "b", p.b);
            check_positive(&mut violations, &firm.id, "price_cap", p.price_cap);
            check_positive(&mut violations, &firm.id, "gamma", p.gamma);
        }
        check_positive(&mut violations, "<instance>", "demand", demand);

        if violations.is_empty() {
            Ok(Self { firms, demand })
        } else {
            Err(ValidationError { violations })
        }
    }

    pub fn firms(&self) -> &[Firm<T>] {
        &self.firms
    }

    pub fn len(&self) -> usize {
        self.firms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.firms.is_empty()
    }

    pub fn params(&self, firm: usize) -> &FirmParams<T> {
        &self.firms[firm].params
    }

    pub fn id(&self, firm: usize) -> &str {
        &self.firms[firm].id
    }

    pub fn demand(&self) -> T {
        self.demand
    }

    pub fn firm_index(&self, id: &str) -> Option<usize> {
        self.firms.iter().position(|f| f.id == id)
    }
}

/// One firm's strategy: installed capacity and charged price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Strategy<T> {
    pub capacity: T,
    pub price: T,
}

impl<T: Scalar> Strategy<T> {
    pub fn new(capacity: T, price: T) -> Self {
        Self { capacity, price }
    }

    /// Entry cost `b + p`: the routing-cost level at which the firm starts
    /// receiving flow.
    pub fn entry_cost(&self, params: &FirmParams<T>) -> T {
        params.b + self.price
    }
}

/// A full strategy profile, aligned with the instance's firm ordering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile<T> {
    pub strategies: Vec<Strategy<T>>,
}

impl<T: Scalar> Profile<T> {
    pub fn new(strategies: Vec<Strategy<T>>) -> Self {
        Self { strategies }
    }

    /// Convenience constructor from `(capacity, price)` pairs.
    pub fn from_pairs(pairs: &[(T, T)]) -> Self {
        Self {
            strategies: pairs.iter().map(|&(z, p)| Strategy::new(z, p)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    pub fn capacity(&self, firm: usize) -> T {
        self.strategies[firm].capacity
    }

    pub fn price(&self, firm: usize) -> T {
        self.strategies[firm].price
    }

    /// True when no firm offers the service (`z = 0` everywhere).
    pub fn all_capacities_zero(&self) -> bool {
        self.strategies.iter().all(|s| s.capacity == T::zero())
    }

    /// Validate the profile against its instance: lengths match, capacities
    /// nonnegative, prices within `[0, price_cap]`, everything finite.
    pub fn validate(&self, instance: &Instance<T>) -> Result<(), ValidationError> {
        let mut violations = Vec::new();
        if self.strategies.len() != instance.len() {
            violations.push(Violation::ProfileLengthMismatch {
                expected: instance.len(),
                got: self.strategies.len(),
            });
        }
        for (i, s) in self.strategies.iter().enumerate().take(instance.len()) {
            let id = instance.id(i);
            if !s.capacity.is_finite() || !s.price.is_finite() {
                violations.push(Violation::NonFiniteParameter {
                    owner: id.to_string(),
                    field: "strategy",
                });
                continue;
            }
            if s.capacity < T::zero() {
                violations.push(Violation::NegativeCapacity {
                    firm: id.to_string(),
                    value: format!("{}", s.capacity),
                });
            }
            if s.price < T::zero() {
                violations.push(Violation::NegativePrice {
                    firm: id.to_string(),
                    value: format!("{}", s.price),
                });
            }
            if s.price > instance.params(i).price_cap {
                violations.push(Violation::PriceAboveCap {
                    firm: id.to_string(),
                    price: format!("{}", s.price),
                    cap: format!("{}", instance.params(i).price_cap),
                });
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ValidationError { violations })
        }
    }
}

/// The flow split and common routing cost induced by a strategy profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WardropOutcome<T> {
    /// Flow received by each firm; zero wherever capacity is zero.
    pub flows: Vec<T>,
    /// Effective cost (congestion plus price) of every served firm.
    pub routing_cost: T,
}

/// Effective cost `a*x/z + b + p` a customer pays at firm `i`; infinite when
/// the firm installs no capacity.
pub fn effective_cost<T: Scalar>(params: &FirmParams<T>, strategy: &Strategy<T>, flow: T) -> T {
    if strategy.capacity > T::zero() {
        params.a * flow / strategy.capacity + params.b + strategy.price
    } else {
        T::infinity()
    }
}

fn check_positive<T: Scalar>(out: &mut Vec<Violation>, owner: &str, field: &'static str, v: T) {
    if !v.is_finite() {
        out.push(Violation::NonFiniteParameter {
            owner: owner.to_string(),
            field,
        });
    } else if v <= T::zero() {
        out.push(Violation::NonPositiveParameter {
            firm: owner.to_string(),
            field,
            value: format!("{}", v),
        });
    }
}

fn check_nonnegative<T: Scalar>(out: &mut Vec<Violation>, owner: &str, field: &'static str, v: T) {
    if !v.is_finite() {
        out.push(Violation::NonFiniteParameter {
            owner: owner.to_string(),
            field,
        });
    } else if v < T::zero() {
        out.push(Violation::NonPositiveParameter {
            firm: owner.to_string(),
            field,
            value: format!("{}", v),
        });
    }
}

/// A single violated field constraint.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("firm {firm}: parameter {field} = {value} must be positive")]
    NonPositiveParameter {
        firm: String,
        field: &'static str,
        value: String,
    },
    #[error("{owner}: parameter {field} must be finite")]
    NonFiniteParameter { owner: String, field: &'static str },
    #[error("instance needs at least 2 firms, got {count}")]
    TooFewFirms { count: usize },
    #[error("duplicate firm id {id:?}")]
    DuplicateId { id: String },
    #[error("firm {firm}: price {price} exceeds cap {cap}")]
    PriceAboveCap {
        firm: String,
        price: String,
        cap: String,
    },
    #[error("firm {firm}: capacity {value} is negative")]
    NegativeCapacity { firm: String, value: String },
    #[error("firm {firm}: price {value} is negative")]
    NegativePrice { firm: String, value: String },
    #[error("profile has {got} strategies but the instance has {expected} firms")]
    ProfileLengthMismatch { expected: usize, got: usize },
    #[error("profile references unknown firm id {id:?}")]
    UnknownFirm { id: String },
    #[error("profile is missing a strategy for firm {id:?}")]
    MissingFirm { id: String },
}

/// Every constraint violated by the input, collected rather than
/// short-circuited.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "invalid input ({} violation(s)):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// JSON wire format
// ---------------------------------------------------------------------------

/// Instance JSON schema. Field names are part of the wire contract.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawInstance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<f64>,
    pub firms: Vec<RawFirm>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawFirm {
    pub id: String,
    pub a: f64,
    pub b: f64,
    pub price_cap: f64,
    pub gamma: f64,
}

/// Profile JSON schema: strategies keyed by firm id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawProfile {
    pub strategies: Vec<RawStrategy>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawStrategy {
    pub id: String,
    pub z: f64,
    pub p: f64,
}

/// Validate parsed instance data into a typed `Instance`.
pub fn validate_instance<T: Scalar>(raw: &RawInstance) -> Result<Instance<T>, ValidationError> {
    let firms = raw
        .firms
        .iter()
        .map(|f| Firm {
            id: f.id.clone(),
            params: FirmParams {
                a: from_f64(f.a),
                b: from_f64(f.b),
                price_cap: from_f64(f.price_cap),
                gamma: from_f64(f.gamma),
            },
        })
        .collect();
    Instance::new(firms, raw.demand.map(from_f64))
}

/// Validate parsed profile data against an instance, reordering strategies
/// into the instance's firm order.
pub fn validate_profile<T: Scalar>(
    raw: &RawProfile,
    instance: &Instance<T>,
) -> Result<Profile<T>, ValidationError> {
    let mut violations = Vec::new();
    let mut slots: Vec<Option<Strategy<T>>> = vec![None; instance.len()];
    for s in &raw.strategies {
        match instance.firm_index(&s.id) {
            Some(i) => {
                if slots[i].is_some() {
                    violations.push(Violation::DuplicateId { id: s.id.clone() });
                } else {
                    slots[i] = Some(Strategy::new(from_f64(s.z), from_f64(s.p)));
                }
            }
            None => violations.push(Violation::UnknownFirm { id: s.id.clone() }),
        }
    }
    for (i, slot) in slots.iter().enumerate() {
        if slot.is_none() {
            violations.push(Violation::MissingFirm {
                id: instance.id(i).to_string(),
            });
        }
    }
    if !violations.is_empty() {
        return Err(ValidationError { violations });
    }
    let profile = Profile::new(slots.into_iter().map(|s| s.unwrap()).collect());
    profile.validate(instance)?;
    Ok(profile)
}

/// Parse and validate an instance from its JSON encoding.
pub fn parse_instance_json<T: Scalar>(text: &str) -> Result<Instance<T>, InputError> {
    let raw: RawInstance = serde_json::from_str(text)?;
    Ok(validate_instance(&raw)?)
}

/// Parse and validate a profile from its JSON encoding.
pub fn parse_profile_json<T: Scalar>(
    text: &str,
    instance: &Instance<T>,
) -> Result<Profile<T>, InputError> {
    let raw: RawProfile = serde_json::from_str(text)?;
    Ok(validate_profile(&raw, instance)?)
}

/// Re-encode a profile with the instance's firm ids.
pub fn profile_to_raw<T: Scalar>(instance: &Instance<T>, profile: &Profile<T>) -> RawProfile {
    RawProfile {
        strategies: profile
            .strategies
            .iter()
            .enumerate()
            .map(|(i, s)| RawStrategy {
                id: instance.id(i).to_string(),
                z: s.capacity.to_f64().unwrap(),
                p: s.price.to_f64().unwrap(),
            })
            .collect(),
    }
}

/// Malformed or invalid input file.
#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(#[from] ValidationError),
}

// ---------------------------------------------------------------------------
// Demand normalization
// ---------------------------------------------------------------------------

/// Records how unit-game quantities map back to the original demand level:
/// flows, profits, and social cost scale by `factor`; capacities, prices and
/// the routing cost are unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DemandScale<T> {
    pub factor: T,
}

/// Rescale the instance to unit demand: `a -> a*d`, `gamma -> gamma/d`.
///
/// The product `a * gamma` — and with it every activation threshold and
/// Gamma-function — is invariant under this transform, so equilibrium
/// capacities, prices and the routing cost agree between the two games.
pub fn normalize_demand<T: Scalar>(instance: &Instance<T>) -> (Instance<T>, DemandScale<T>) {
    let d = instance.demand();
    if d == T::one() {
        return (instance.clone(), DemandScale { factor: T::one() });
    }
    let firms = instance
        .firms()
        .iter()
        .map(|f| Firm {
            id: f.id.clone(),
            params: FirmParams {
                a: f.params.a * d,
                b: f.params.b,
                price_cap: f.params.price_cap,
                gamma: f.params.gamma / d,
            },
        })
        .collect();
    let unit = Instance {
        firms,
        demand: T::one(),
    };
    (unit, DemandScale { factor: d })
}

/// Per-firm profits `p_i * x_i - gamma_i * z_i` under the Wardrop flow; all
/// zero when no firm installs capacity.
pub fn profit<T: Scalar>(instance: &Instance<T>, profile: &Profile<T>) -> Vec<T> {
    if profile.all_capacities_zero() {
        return vec![T::zero(); instance.len()];
    }
    let outcome = wardrop::wardrop_flow(instance, profile)
        .expect("some capacity is positive, so the Wardrop flow exists");
    profile
        .strategies
        .iter()
        .zip(&outcome.flows)
        .enumerate()
        .map(|(i, (s, &x))| s.price * x - instance.params(i).gamma * s.capacity)
        .collect()
}
