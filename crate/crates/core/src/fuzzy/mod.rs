//! Mamdani fuzzy inference and the transmit gate built on it.
//!
//! A [`FisDefinition`] holds the input and output [`LinguisticVariable`]s
//! and an AND-only rule base. [`FisDefinition::infer`] fires every rule with
//! `min`, clips each consequent at its rule's activation, aggregates with
//! `max` and takes the centroid of the aggregate by midpoint-rule
//! integration. [`FisDefinition::gate_decision`] turns the crisp score into a
//! transmit/defer verdict against an acceptance term.

use alloc::string::String;
use thiserror::Error;

mod fis;
mod membership;
mod variable;

pub use fis::{Defuzzifier, FisDefinition, GateDecision, Inference, Rule, VehicleStatus, DEFAULT_CENTROID_RESOLUTION};
pub use membership::MembershipFunction;
pub use variable::{LinguisticVariable, Role, Term};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("malformed thresholds: {0}")]
    MalformedThresholds(&'static str),
    #[error("unknown membership shape")]
    UnknownShape,
    #[error("variable {variable}: universe must be a finite interval with lo < hi")]
    BadUniverse { variable: String },
    #[error("variable {variable} declares no terms")]
    NoTerms { variable: String },
    #[error("variable {variable}: duplicate term {term}")]
    DuplicateTerm { variable: String, term: String },
    #[error("variable {variable}: support of term {term} leaves the universe")]
    SupportOutsideUniverse { variable: String, term: String },
    #[error("input {variable} has no term covering {at}")]
    CoverageGap { variable: String, at: f64 },
    #[error("variable {0} has the wrong role")]
    WrongRole(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("variable {variable} has no term {term}")]
    UnknownTerm { variable: String, term: String },
    #[error("rule {index}: {reason}")]
    BadRule { index: usize, reason: String },
    #[error("rule syntax: {0}")]
    RuleSyntax(String),
    #[error("definition needs at least one input and one rule")]
    Empty,
    #[error("centroid resolution must be positive")]
    ZeroResolution,
    #[error("expected {expected} inputs, got {got}")]
    InputArity { expected: usize, got: usize },
    #[error("input {0} is not finite")]
    NonFiniteInput(usize),
    #[error("no rule fired")]
    NoRuleFired,
}
