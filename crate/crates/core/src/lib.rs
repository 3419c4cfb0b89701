//! Threshold public-goods games under risk and ambiguity.
//!
//! * [`game`]: scenarios and the α-maxmin success curve `p(C)`.
//! * [`preferences`]: utilities, the player objective and symbolic
//!   equilibrium conditions.
//! * [`solver`]: pure-strategy equilibrium enumeration and equilibrium tables.
//! * [`simulator`]: synthetic experiment data.
//! * [`econometrics`]: OLS with HC1 errors, balance tests, power analysis.

pub mod econometrics;
pub mod error;
pub mod game;
pub mod money;
pub mod preferences;
pub mod simulator;
pub mod solver;

pub use error::{Error, Result};
pub use game::{
    build_success_curve, eval_curve, make_scenario, Alpha, AmbiguityScenario, GameSpec, ProbInterval, SuccessCurve,
    ThresholdMode, ThresholdSpec, Treatment,
};
pub use money::{Money, Prob};
pub use preferences::{
    check_condition, condition_for, derive_condition, eval_objective, power_threshold, ConditionOutcome, EqCondition,
    UtilityFn,
};
pub use solver::{
    canonical_scenarios, hypothesis_report, paper_table, robust_table, Deviation, EquilibriumKind, EquilibriumRecord,
    EquilibriumTable, FilterMode, HypothesisReport, Profile, Solver,
};
