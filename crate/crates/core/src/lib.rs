//! Fair multi-period allocation of customers to oligopoly firms under
//! closed contracts.
//!
//! The crate builds mixed-integer models of a contract-driven industrial
//! gas market (assignment and contract scheduling, demand satisfaction via
//! in-house production, inter-firm swaps and tiered spot purchases, plant
//! and energy surrogates, cost and profit accounting) and solves them under
//! two fairness schemes: maximizing the summed profit of all firms, and a
//! Nash-bargaining objective linearized over SOS2 grids. Reports decode the
//! solutions into market shares, cost breakdowns, contract timelines and
//! demand-source profiles.

pub mod builder;
pub mod game;
pub mod generate;
pub mod instance;
pub mod oracle;
pub mod outcome;
pub mod pricing;
pub mod report;
pub mod schema;
pub mod testkit;
pub mod verify;

pub use instance::{validate_instance, Instance, Violation, ViolationCode};
pub use schema::{parse_instance, serialize_instance, ParseError};
