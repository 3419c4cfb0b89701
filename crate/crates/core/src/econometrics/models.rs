//! Model specifications for the contribution and belief regressions, balance
//! checks and dispersion comparisons.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::data::{DesignMatrix, Table, Term};
use super::ols::{ols_hc1, stars, RegressionResult};
use crate::error::{Error, Result};
use crate::game::Treatment;
use crate::simulator::rng::{substream, Stream};

pub const CONTRIBUTION: &str = "contribution";
pub const BELIEF: &str = "belief";

/// Controls added in the second contribution column.
pub const DEMOGRAPHICS: [&str; 11] = [
    "age",
    "female",
    "education",
    "altruism",
    "envy",
    "ideology",
    "gravity",
    "number_actions",
    "social_transfer",
    "crt",
    "unemployed",
];

/// Covariates compared across arms in the balance table.
pub const BALANCE_COVARIATES: [&str; 15] = [
    "age",
    "female",
    "education",
    "patience",
    "crt",
    "math_ability",
    "altruism",
    "envy",
    "ideology",
    "gravity",
    "number_actions",
    "unemployed",
    "social_transfer",
    "risk_aversion",
    "ambiguity_aversion",
];

/// Non-baseline arms present in the data, in [`Treatment::ALL`] order.
fn present_arms(table: &Table, baseline: Treatment) -> Result<Vec<Treatment>> {
    let arms = table.treatments()?;
    if !arms.contains(&Some(baseline)) {
        return Err(Error::invalid(format!("baseline arm {baseline} has no observations")));
    }
    let others: Vec<Treatment> =
        Treatment::ALL.iter().copied().filter(|t| *t != baseline && arms.contains(&Some(*t))).collect();
    if others.is_empty() {
        return Err(Error::invalid("data contain a single arm; no treatment contrasts"));
    }
    Ok(others)
}

fn arm_terms(table: &Table) -> Result<Vec<Term>> {
    Ok(present_arms(table, Treatment::RR)?.into_iter().map(Term::arm).collect())
}

pub fn fit(table: &Table, response: &str, terms: &[Term]) -> Result<RegressionResult> {
    ols_hc1(&DesignMatrix::build(table, response, terms)?)
}

/// Arm effects relative to RR.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AteReport {
    pub effects: Vec<(Treatment, f64, f64, f64)>,
    pub regression: RegressionResult,
}

impl AteReport {
    pub fn effect(&self, t: Treatment) -> Option<(f64, f64)> {
        self.effects.iter().find(|e| e.0 == t).map(|e| (e.1, e.2))
    }
}

/// Contribution on arm dummies only.
pub fn ate_report(table: &Table) -> Result<AteReport> {
    let terms = arm_terms(table)?;
    let regression = fit(table, CONTRIBUTION, &terms)?;
    let effects = terms
        .iter()
        .map(|t| {
            let arm: Treatment = t.name.parse().expect("arm term");
            let (b, s, p) = (
                regression.coef(&t.name).unwrap(),
                regression.se(&t.name).unwrap(),
                regression.p_value(&t.name).unwrap(),
            );
            (arm, b, s, p)
        })
        .collect();
    Ok(AteReport { effects, regression })
}

/// Nested contribution regressions: arms; + demographics; + risk aversion;
/// + ambiguity aversion; + beliefs.
pub fn contribution_models(table: &Table) -> Result<Vec<RegressionResult>> {
    let mut terms = arm_terms(table)?;
    let mut out = vec![fit(table, CONTRIBUTION, &terms)?];
    terms.extend(DEMOGRAPHICS.iter().map(|c| Term::col(c)));
    out.push(fit(table, CONTRIBUTION, &terms)?);
    for extra in ["risk_aversion", "ambiguity_aversion", BELIEF] {
        terms.push(Term::col(extra));
        out.push(fit(table, CONTRIBUTION, &terms)?);
    }
    Ok(out)
}

/// Contribution on arms, controls and risk aversion without beliefs; the
/// total effect of risk aversion.
pub fn risk_model(table: &Table) -> Result<RegressionResult> {
    let mut terms = arm_terms(table)?;
    terms.extend(DEMOGRAPHICS.iter().map(|c| Term::col(c)));
    terms.push(Term::col("risk_aversion"));
    terms.push(Term::col("ambiguity_aversion"));
    fit(table, CONTRIBUTION, &terms)
}

/// Arms, moderator, arm x moderator, with age, CRT and beliefs as controls.
pub fn interaction_model(table: &Table, moderator: &str) -> Result<RegressionResult> {
    let arms = arm_terms(table)?;
    let m = Term::col(moderator);
    let mut terms = arms.clone();
    terms.extend([Term::col("age"), Term::col("crt"), Term::col(BELIEF), m.clone()]);
    terms.extend(arms.iter().map(|a| a.times(&m)));
    fit(table, CONTRIBUTION, &terms)
}

/// Arms, age, female, education, altruism, CRT, pivotal, perception accuracy
/// and pivotal x perception accuracy.
pub fn pivotal_model(table: &Table) -> Result<RegressionResult> {
    let mut terms = arm_terms(table)?;
    terms.extend(["age", "female", "education", "altruism", "crt"].iter().map(|c| Term::col(c)));
    let (p, a) = (Term::col("pivotal"), Term::col("perception_accuracy"));
    terms.push(p.clone());
    terms.push(a.clone());
    terms.push(p.times(&a));
    fit(table, CONTRIBUTION, &terms)
}

/// Beliefs on arms and the belief-equation covariates.
pub fn belief_model(table: &Table) -> Result<RegressionResult> {
    let mut terms = arm_terms(table)?;
    terms.extend(
        ["education", "altruism", "gravity", "number_actions", "crt", "risk_aversion", "ambiguity_aversion"]
            .iter()
            .map(|c| Term::col(c)),
    );
    fit(table, BELIEF, &terms)
}

/// Welch two-sample t-test p-value.
pub fn welch_p_value(a: &[f64], b: &[f64]) -> f64 {
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (n, m, var)
    };
    let ((na, ma, va), (nb, mb, vb)) = (stats(a), stats(b));
    let diff = ma - mb;
    let se2 = va / na + vb / nb;
    if se2 <= 0.0 || !se2.is_finite() {
        return if diff == 0.0 { 1.0 } else { 0.0 };
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceRow {
    pub covariate: String,
    pub baseline_mean: f64,
    pub arm_means: Vec<f64>,
    pub p_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceTable {
    pub baseline: Treatment,
    pub arms: Vec<Treatment>,
    pub rows: Vec<BalanceRow>,
}

/// Baseline means and Welch p-values of each arm against the baseline.
pub fn balance_table(table: &Table, covariates: &[&str], baseline: Treatment) -> Result<BalanceTable> {
    let labels = table.treatments()?;
    let arms = present_arms(table, baseline)?;
    let pick = |col: &[f64], t: Treatment| -> Vec<f64> {
        col.iter().zip(&labels).filter(|(v, l)| **l == Some(t) && v.is_finite()).map(|(v, _)| *v).collect()
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut rows = Vec::with_capacity(covariates.len());
    for name in covariates {
        let col = table.numeric(name)?;
        let base = pick(col, baseline);
        if base.len() < 2 {
            return Err(Error::invalid(format!("baseline arm has fewer than 2 values of `{name}`")));
        }
        let mut arm_means = Vec::new();
        let mut p_values = Vec::new();
        for &t in &arms {
            let v = pick(col, t);
            if v.len() < 2 {
                return Err(Error::invalid(format!("arm {t} has fewer than 2 values of `{name}`")));
            }
            arm_means.push(mean(&v));
            p_values.push(welch_p_value(&v, &base));
        }
        rows.push(BalanceRow { covariate: name.to_string(), baseline_mean: mean(&base), arm_means, p_values });
    }
    Ok(BalanceTable { baseline, arms, rows })
}

impl BalanceTable {
    pub fn render_text(&self) -> String {
        let mut out = format!("{:<20}{:>10}", "", format!("{} mean", self.baseline));
        for a in &self.arms {
            out.push_str(&format!("{:>14}", format!("p({a}-{})", self.baseline)));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{:<20}{:>10.3}", r.covariate, r.baseline_mean));
            for p in &r.p_values {
                out.push_str(&format!("{:>14}", format!("{p:.3}{}", stars(*p))));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("covariate,{}_mean", self.baseline);
        for a in &self.arms {
            out.push_str(&format!(",{a}_mean,p_{a}"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{:.6}", r.covariate, r.baseline_mean));
            for (m, p) in r.arm_means.iter().zip(&r.p_values) {
                out.push_str(&format!(",{m:.6},{p:.6}"));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmDispersion {
    pub arm: Treatment,
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub share_zero: f64,
    pub share_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarizationReport {
    pub first: ArmDispersion,
    pub second: ArmDispersion,
    /// Variance of `first` over variance of `second`.
    pub variance_ratio: f64,
    pub permutations: usize,
    pub p_value: f64,
}

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

fn log_ratio(a: &[f64], b: &[f64]) -> f64 {
    let (va, vb) = (variance(a), variance(b));
    if va == vb {
        0.0
    } else {
        (va / vb).ln()
    }
}

/// Variance and mass at 0 and at `max_contribution` in two arms, with a
/// two-sided permutation p-value for the variance ratio.
pub fn polarization(
    table: &Table,
    first: Treatment,
    second: Treatment,
    max_contribution: f64,
    permutations: usize,
    seed: u64,
) -> Result<PolarizationReport> {
    let labels = table.treatments()?;
    let y = table.numeric(CONTRIBUTION)?;
    let pick = |t: Treatment| -> Vec<f64> {
        y.iter().zip(&labels).filter(|(v, l)| **l == Some(t) && v.is_finite()).map(|(v, _)| *v).collect()
    };
    let (a, b) = (pick(first), pick(second));
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid("both arms need at least two observations"));
    }
    let describe = |arm: Treatment, v: &[f64]| ArmDispersion {
        arm,
        n: v.len(),
        mean: v.iter().sum::<f64>() / v.len() as f64,
        variance: variance(v),
        share_zero: v.iter().filter(|x| **x == 0.0).count() as f64 / v.len() as f64,
        share_max: v.iter().filter(|x| **x >= max_contribution).count() as f64 / v.len() as f64,
    };
    // center each arm so the test targets dispersion, not location
    let center = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| x - m).collect::<Vec<f64>>()
    };
    let pooled: Vec<f64> = center(&a).into_iter().chain(center(&b)).collect();
    let observed = log_ratio(&a, &b).abs();
    let na = a.len();
    let exceed: usize = (0..permutations)
        .into_par_iter()
        .map(|i| {
            let mut v = pooled.clone();
            v.shuffle(&mut substream(seed, Stream::Permutation, i as u64 + 1));
            usize::from(log_ratio(&v[..na], &v[na..]).abs() >= observed - 1e-12)
        })
        .sum();
    let p_value = (exceed + 1) as f64 / (permutations + 1) as f64;
    Ok(PolarizationReport {
        first: describe(first, &a),
        second: describe(second, &b),
        variance_ratio: variance(&a) / variance(&b),
        permutations,
        p_value,
    })
}

/// Side-by-side coefficient table with robust SEs in parentheses.
pub fn render_regressions(models: &[RegressionResult], titles: &[String]) -> String {
    let mut names: Vec<String> = Vec::new();
    for m in models {
        for n in m.names.iter().skip(1) {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
    }
    names.push("constant".to_string());
    let width = names.iter().map(|n| n.len()).max().unwrap_or(8).max(12) + 2;
    let mut out = format!("{:<width$}", "");
    for t in titles {
        out.push_str(&format!("{t:>14}"));
    }
    out.push('\n');
    for name in &names {
        let mut coef_line = format!("{name:<width$}");
        let mut se_line = format!("{:<width$}", "");
        for m in models {
            match m.names.iter().position(|n| n == name) {
                Some(i) => {
                    coef_line.push_str(&format!("{:>14}", format!("{:.3}{}", m.coefficients[i], stars(m.p_values[i]))));
                    se_line.push_str(&format!("{:>14}", format!("({:.3})", m.robust_se[i])));
                }
                None => {
                    coef_line.push_str(&format!("{:>14}", ""));
                    se_line.push_str(&format!("{:>14}", ""));
                }
            }
        }
        out.push_str(coef_line.trim_end());
        out.push('\n');
        out.push_str(se_line.trim_end());
        out.push('\n');
    }
    let mut obs = format!("{:<width$}", "Observations");
    let mut r2 = format!("{:<width$}", "R-squared");
    for m in models {
        obs.push_str(&format!("{:>14}", m.n_obs));
        r2.push_str(&format!("{:>14.3}", m.r_squared));
    }
    out.push_str(&obs);
    out.push('\n');
    out.push_str(&r2);
    out.push('\n');
    out.push_str("Robust (HC1) standard errors in parentheses; *** p<0.01, ** p<0.05, * p<0.1 (normal reference).\n");
    out
}

/// Long-format CSV: model, term, estimate, robust SE, p-value.
pub fn regressions_csv(models: &[RegressionResult], titles: &[String]) -> String {
    let mut out = String::from("model,term,estimate,robust_se,classical_se,p_value,n_obs,r_squared\n");
    for (m, t) in models.iter().zip(titles) {
        for i in 0..m.names.len() {
            out.push_str(&format!(
                "{t},{},{:.6},{:.6},{:.6},{:.6},{},{:.6}\n",
                m.names[i], m.coefficients[i], m.robust_se[i], m.classical_se[i], m.p_values[i], m.n_obs, m.r_squared
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(arms: &[&str], y: &[f64]) -> Table {
        let mut t = Table::new(y.len());
        t.push_numeric(CONTRIBUTION, y.to_vec()).unwrap();
        t.push_labels("treatment", arms.iter().map(|s| s.to_string()).collect()).unwrap();
        t
    }

    #[test]
    fn single_arm_is_rejected() {
        let t = tiny(&["RR", "RR", "RR"], &[1.0, 2.0, 3.0]);
        assert!(ate_report(&t).is_err());
    }

    #[test]
    fn ate_equals_mean_difference() {
        let t = tiny(&["RR", "RR", "AA", "AA", "AA"], &[1.0, 3.0, 4.0, 5.0, 6.0]);
        let r = ate_report(&t).unwrap();
        let (b, _) = r.effect(Treatment::AA).unwrap();
        assert!((b - 3.0).abs() < 1e-12);
    }

    #[test]
    fn welch_identical_and_shifted() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(welch_p_value(&a, &a), 1.0);
        let b: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
        assert!(welch_p_value(&a, &b) < 1e-4);
    }

    #[test]
    fn polarization_flags_bimodal_arm() {
        let n = 200;
        let mut arms = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            arms.push("RA");
            y.push(if i % 2 == 0 { 0.0 } else { 5.0 });
            arms.push("RR");
            y.push([2.0, 3.0][i % 2]);
        }
        let t = tiny(&arms, &y);
        let r = polarization(&t, Treatment::RA, Treatment::RR, 5.0, 500, 1).unwrap();
        assert!(r.variance_ratio > 1.0 && r.p_value < 0.01);
        assert!((r.first.mean - r.second.mean).abs() < 1e-12);
        assert!((r.first.share_zero - 0.5).abs() < 1e-12);
    }
}
