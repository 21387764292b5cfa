//! Grading standards, school design and incentives in a signalling model of
//! education.

// Negated comparisons are used so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod distribution;
pub mod error;
pub mod exec;
pub mod incentives;
pub mod model;
pub mod multivalue;
pub mod report;
pub mod simulate;
pub mod solve;

pub use design::{
    brute_force_design, optimal_two_tier, structure_classify, system_welfare, theta_dagger,
    ExtremeRuleSelector, SchoolSystem, StructureClass, Student,
};
pub use distribution::TypeDistribution;
pub use error::{Error, Result};
pub use exec::Exec;
pub use incentives::{constrained_optimal, fees_for_regular, is_regular, RegularSystem};
pub use model::{equilibrium_effort, marginal_benefit, CostFunction, GradingRule, ModelParams};
pub use multivalue::{
    equilibrium_effort3, theta_dagger3, GradingMatrix, Instance3, OutcomeDistributions, ValueTriple,
};
pub use simulate::{simulate_market, SimConfig, SimReport};
