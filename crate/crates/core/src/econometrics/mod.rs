//! Regression, balance and power analysis for experiment data.
//!
//! Standard errors are HC1 and p-values use the normal reference. Rows with
//! a missing value in any used column are dropped (listwise deletion).

mod data;
mod models;
mod ols;
mod power;

pub use data::{DesignMatrix, Factor, Table, Term};
pub use models::{
    ate_report, balance_table, belief_model, contribution_models, fit, interaction_model, pivotal_model, polarization,
    regressions_csv, render_regressions, risk_model, welch_p_value, ArmDispersion, AteReport, BalanceRow, BalanceTable,
    PolarizationReport, BALANCE_COVARIATES, BELIEF, CONTRIBUTION, DEMOGRAPHICS,
};
pub use ols::{normal_p_value, ols_hc1, residuals, stars, RegressionResult, RANK_TOLERANCE};
pub use power::{mc_rejection_rate, mde, PowerReport};
