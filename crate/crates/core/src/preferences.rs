//! Utility functions with `u(0) = 0`, the player objective
//! `u(endowment - c_i) * p(C)` and the symbolic conditions under which a
//! symmetric profile is a strict equilibrium.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{build_success_curve, Alpha, AmbiguityScenario, GameSpec, SuccessCurve, Treatment};
use crate::money::{format_rational, prob_to_f64, Money, Prob};

/// Monotone utility over money (euros), normalised so that `u(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum UtilityFn {
    /// `u(x) = x^rho`; `rho < 1` risk averse, `rho = 1` neutral, `rho > 1` risk loving.
    Power { rho: f64 },
    /// Piecewise-linear interpolation through `(amount, value)` points.
    Table { points: Vec<(Money, f64)> },
}

impl UtilityFn {
    pub fn power(rho: f64) -> Result<Self> {
        let u = UtilityFn::Power { rho };
        u.validate()?;
        Ok(u)
    }

    pub fn risk_neutral() -> Self {
        UtilityFn::Power { rho: 1.0 }
    }

    pub fn table(points: Vec<(Money, f64)>) -> Result<Self> {
        let u = UtilityFn::Table { points };
        u.validate()?;
        Ok(u)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            UtilityFn::Power { rho } => {
                if !(rho.is_finite() && *rho > 0.0) {
                    return Err(Error::invalid(format!("power utility needs rho > 0, got {rho}")));
                }
            }
            UtilityFn::Table { points } => {
                match points.first() {
                    Some((m, v)) if *m == Money::ZERO && *v == 0.0 => {}
                    _ => return Err(Error::invalid("utility table must start at (0, 0)")),
                }
                if points.iter().any(|(_, v)| !v.is_finite()) {
                    return Err(Error::invalid("utility table values must be finite"));
                }
                if points.windows(2).any(|w| w[0].0 >= w[1].0 || w[0].1 >= w[1].1) {
                    return Err(Error::invalid("utility table must be strictly increasing"));
                }
            }
        }
        Ok(())
    }

    /// True when the utility is defined on `[0, upper]`.
    pub fn covers(&self, upper: Money) -> bool {
        match self {
            UtilityFn::Power { .. } => true,
            UtilityFn::Table { points } => points.last().map(|p| p.0 >= upper).unwrap_or(false),
        }
    }

    pub fn value(&self, x: Money) -> f64 {
        match self {
            UtilityFn::Power { rho } => {
                if x == Money::ZERO {
                    0.0
                } else {
                    x.as_euros().powf(*rho)
                }
            }
            UtilityFn::Table { points } => {
                let idx = points.partition_point(|(m, _)| *m <= x);
                if idx == 0 {
                    return 0.0;
                }
                let (m0, v0) = points[idx - 1];
                if m0 == x {
                    return v0;
                }
                // past the last point: extend the final segment
                let (a, b) = if idx < points.len() {
                    (points[idx - 1], points[idx])
                } else if points.len() >= 2 {
                    (points[idx - 2], points[idx - 1])
                } else {
                    return v0;
                };
                let t = (x.as_euros() - a.0.as_euros()) / (b.0.as_euros() - a.0.as_euros());
                a.1 + t * (b.1 - a.1)
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            UtilityFn::Power { rho } => format!("x^{rho}"),
            UtilityFn::Table { points } => format!("table({} points)", points.len()),
        }
    }
}

/// `u(endowment - c_i) * p(c_i + others_total)`.
pub fn eval_objective(
    u: &UtilityFn,
    c_i: Money,
    others_total: Money,
    curve: &SuccessCurve,
    endowment: Money,
) -> Result<f64> {
    let kept = endowment
        .checked_sub(c_i)
        .ok_or_else(|| Error::invalid(format!("contribution {c_i} exceeds endowment {endowment}")))?;
    if !u.covers(endowment) {
        return Err(Error::invalid(format!("utility is not defined up to {endowment}")));
    }
    let p = curve.eval(c_i + others_total)?;
    Ok(u.value(kept) * prob_to_f64(&p))
}

/// The inequality `u(lhs_point) < factor * u(rhs_point)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EqCondition {
    pub lhs_point: Money,
    #[serde(serialize_with = "ser_rational")]
    pub factor: Prob,
    pub rhs_point: Money,
}

fn ser_rational<S: serde::Serializer>(r: &Prob, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

fn short(m: Money) -> String {
    if m.cents().is_multiple_of(100) {
        (m.cents() / 100).to_string()
    } else {
        m.to_string()
    }
}

impl fmt::Display for EqCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u({}) < {}*u({})", short(self.lhs_point), format_rational(&self.factor), short(self.rhs_point))
    }
}

/// What a symmetric profile at a given total needs in order to be a strict
/// equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "condition", rename_all = "snake_case")]
pub enum ConditionOutcome {
    /// Strict equilibrium for every increasing `u` with `u(0) = 0`.
    AnyUtility,
    /// Strict equilibrium exactly when the inequality holds.
    Requires(EqCondition),
    /// Every player gets zero and every deviation also yields zero: a weak,
    /// zero-payoff equilibrium for every `u`.
    ZeroPayoffOnly,
    /// Never an equilibrium.
    Never,
}

impl ConditionOutcome {
    /// Strict-equilibrium verdict for a concrete utility.
    pub fn holds_for(&self, u: &UtilityFn) -> bool {
        match self {
            ConditionOutcome::AnyUtility => true,
            ConditionOutcome::Requires(c) => check_condition(c, u),
            ConditionOutcome::ZeroPayoffOnly | ConditionOutcome::Never => false,
        }
    }

    pub fn condition(&self) -> Option<&EqCondition> {
        match self {
            ConditionOutcome::Requires(c) => Some(c),
            _ => None,
        }
    }

    /// Critical power exponent, where one exists.
    pub fn rho_threshold(&self) -> Option<f64> {
        self.condition().and_then(|c| power_threshold(c).ok())
    }
}

impl fmt::Display for ConditionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionOutcome::AnyUtility => f.write_str("holds for any u"),
            ConditionOutcome::Requires(c) => write!(f, "{c}"),
            ConditionOutcome::ZeroPayoffOnly => f.write_str("zero payoff (weak only)"),
            ConditionOutcome::Never => f.write_str("never"),
        }
    }
}

/// Derives the strict-equilibrium condition for the symmetric profile whose
/// contributions add up to `total`, by comparing the stay payoff against
/// every grid deviation symbolically.
pub fn derive_condition(curve: &SuccessCurve, game: &GameSpec, total: Money) -> Result<ConditionOutcome> {
    let n = game.n_players() as u64;
    if !total.cents().is_multiple_of(n) {
        return Err(Error::invalid(format!("total {total} cannot be split evenly among {n} players")));
    }
    let c = Money::from_cents(total.cents() / n);
    if !game.is_on_grid(c) {
        return Err(Error::invalid(format!("symmetric contribution {c} is off the grid")));
    }
    let endowment = game.endowment();
    let others = total - c;
    let stay_p = curve.eval(total)?;
    let stay_positive = !stay_p.is_zero() && c < endowment;

    let mut binding: Option<(Prob, Money)> = None;
    let mut any_positive_deviation = false;
    for d in game.contributions().filter(|d| *d != c) {
        let dev_p = curve.eval(others + d)?;
        let dev_positive = !dev_p.is_zero() && d < endowment;
        if !dev_positive {
            continue;
        }
        any_positive_deviation = true;
        if !stay_positive {
            return Ok(ConditionOutcome::Never);
        }
        if d > c {
            // keeps less money; only a higher success probability could help
            if dev_p > stay_p {
                return Err(Error::invalid(format!(
                    "deviation to {d} at total {total} raises the success probability; \
                     no single-inequality condition exists"
                )));
            }
            continue;
        }
        let k = stay_p / dev_p;
        if k <= Prob::one() {
            return Ok(ConditionOutcome::Never);
        }
        match binding {
            None => binding = Some((dev_p, d)),
            Some((p0, _)) if p0 == dev_p => {
                // same probability, more money kept at the smaller deviation
                if d < binding.unwrap().1 {
                    binding = Some((dev_p, d));
                }
            }
            Some(_) => {
                return Err(Error::invalid(format!(
                    "downward deviations at total {total} face different success probabilities; \
                     no single-inequality condition exists"
                )))
            }
        }
    }
    if !stay_positive {
        return Ok(if any_positive_deviation { ConditionOutcome::Never } else { ConditionOutcome::ZeroPayoffOnly });
    }
    Ok(match binding {
        None => ConditionOutcome::AnyUtility,
        Some((dev_p, d)) => ConditionOutcome::Requires(EqCondition {
            lhs_point: endowment - d,
            factor: stay_p / dev_p,
            rhs_point: endowment - c,
        }),
    })
}

/// Condition for the canonical scenario of `label` under `alpha` at a
/// candidate total (0, 5 or 10 in the experiment).
pub fn condition_for(label: Treatment, alpha: Alpha, target_total: Money) -> Result<ConditionOutcome> {
    let scenario = AmbiguityScenario::canonical(label);
    if !scenario.canonical_totals().contains(&target_total) {
        return Err(Error::invalid(format!(
            "{target_total} is not a candidate total (expected one of {})",
            scenario.canonical_totals().iter().map(|t| short(*t)).collect::<Vec<_>>().join(", ")
        )));
    }
    let game = GameSpec::experiment();
    let curve = build_success_curve(&scenario, alpha, &game);
    derive_condition(&curve, &game, target_total)
}

/// `u(lhs) < k * u(m)`, strictly.
pub fn check_condition(cond: &EqCondition, u: &UtilityFn) -> bool {
    u.value(cond.lhs_point) < prob_to_f64(&cond.factor) * u.value(cond.rhs_point)
}

/// Critical exponent `ln(k) / ln(lhs / m)`: the condition holds for
/// `u(x) = x^rho` exactly when `rho` is below it.
pub fn power_threshold(cond: &EqCondition) -> Result<f64> {
    if cond.rhs_point == Money::ZERO || cond.rhs_point >= cond.lhs_point {
        return Err(Error::invalid(format!("degenerate condition {cond}: need 0 < m < {}", short(cond.lhs_point))));
    }
    let k = prob_to_f64(&cond.factor);
    Ok(k.ln() / (cond.lhs_point.as_euros() / cond.rhs_point.as_euros()).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eur(e: u64) -> Money {
        Money::from_euros(e)
    }

    fn cond(k: Prob, m: u64) -> EqCondition {
        EqCondition { lhs_point: eur(5), factor: k, rhs_point: eur(m) }
    }

    fn curve(label: &str, alpha: Alpha) -> SuccessCurve {
        build_success_curve(&crate::game::make_scenario(label).unwrap(), alpha, &GameSpec::experiment())
    }

    #[test]
    fn objective_examples() {
        let u = UtilityFn::risk_neutral();
        let rr = curve("RR", Alpha::MAXMIN);
        let v = eval_objective(&u, eur(1), eur(4), &rr, eur(5)).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let ar = curve("AR", Alpha::MAXMIN);
        let v = eval_objective(&u, eur(2), eur(8), &ar, eur(5)).unwrap();
        assert!((v - 2.4).abs() < 1e-12);
        for rho in [0.3, 1.0, 8.0] {
            let u = UtilityFn::power(rho).unwrap();
            assert_eq!(eval_objective(&u, eur(5), eur(20), &rr, eur(5)).unwrap(), 0.0);
        }
        assert!(eval_objective(&u, eur(6), eur(0), &rr, eur(5)).is_err());
    }

    #[test]
    fn objective_falls_with_contribution_on_flat_steps() {
        let u = UtilityFn::power(0.7).unwrap();
        let rr = curve("RR", Alpha::MAXMIN);
        // others give 0: totals 0..4 share the 0.1 step
        let vals: Vec<f64> = (0..5).map(|c| eval_objective(&u, eur(c), Money::ZERO, &rr, eur(5)).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn conditions_match_the_derivations() {
        let nine_fifths = ConditionOutcome::Requires(cond(Prob::new(9, 5), 3));
        assert_eq!(condition_for(Treatment::RR, Alpha::MAXMIN, eur(10)).unwrap(), nine_fifths);
        assert_eq!(
            condition_for(Treatment::RR, Alpha::MAXMIN, eur(5)).unwrap(),
            ConditionOutcome::Requires(cond(Prob::new(5, 1), 4))
        );
        assert_eq!(condition_for(Treatment::RR, Alpha::MAXMIN, eur(0)).unwrap(), ConditionOutcome::AnyUtility);
        assert_eq!(condition_for(Treatment::AR, Alpha::MAXMIN, eur(5)).unwrap(), ConditionOutcome::AnyUtility);
        assert_eq!(
            condition_for(Treatment::AR, Alpha::MAXMIN, eur(10)).unwrap(),
            ConditionOutcome::Requires(cond(Prob::new(2, 1), 3))
        );
        assert_eq!(condition_for(Treatment::AR, Alpha::MAXMIN, eur(0)).unwrap(), ConditionOutcome::ZeroPayoffOnly);
        assert_eq!(condition_for(Treatment::AA, Alpha::MAXMIN, eur(10)).unwrap(), ConditionOutcome::AnyUtility);
        assert_eq!(condition_for(Treatment::AA, Alpha::MAXMIN, eur(5)).unwrap(), ConditionOutcome::ZeroPayoffOnly);
        assert_eq!(
            condition_for(Treatment::RA, Alpha::MAXMIN, eur(10)).unwrap(),
            ConditionOutcome::Requires(cond(Prob::new(9, 1), 3))
        );
        assert_eq!(condition_for(Treatment::RA, Alpha::MAXMIN, eur(5)).unwrap(), ConditionOutcome::Never);
        assert!(condition_for(Treatment::RR, Alpha::MAXMIN, eur(7)).is_err());
    }

    #[test]
    fn maxmax_conditions() {
        // AR at C = 10: 1*u(3) vs 0.6*u(5) -> u(5) < (5/3) u(3), a tie when risk neutral
        let c = condition_for(Treatment::AR, Alpha::MAXMAX, eur(10)).unwrap();
        assert_eq!(c, ConditionOutcome::Requires(cond(Prob::new(5, 3), 3)));
        assert!(!c.holds_for(&UtilityFn::risk_neutral()));
        assert_eq!(condition_for(Treatment::AA, Alpha::MAXMAX, eur(10)).unwrap(), ConditionOutcome::Never);
        assert_eq!(condition_for(Treatment::RA, Alpha::MAXMAX, eur(10)).unwrap(), ConditionOutcome::Never);
        assert_eq!(
            condition_for(Treatment::AA, Alpha::MAXMAX, eur(5)).unwrap(),
            ConditionOutcome::Requires(cond(Prob::new(5, 1), 4))
        );
    }

    #[test]
    fn check_condition_examples() {
        let c54 = cond(Prob::new(5, 1), 4);
        let c953 = cond(Prob::new(9, 5), 3);
        assert!(check_condition(&c54, &UtilityFn::risk_neutral()));
        assert!(!check_condition(&c953, &UtilityFn::power(8.0).unwrap()));
        assert!(check_condition(&c953, &UtilityFn::risk_neutral()));
    }

    #[test]
    fn power_threshold_closed_forms() {
        let r = power_threshold(&cond(Prob::new(9, 5), 3)).unwrap();
        assert!((r - 1.8f64.ln() / (5.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((r - 1.1507).abs() < 1e-4);
        let r = power_threshold(&cond(Prob::new(5, 1), 4)).unwrap();
        assert!((r - 5f64.ln() / 1.25f64.ln()).abs() < 1e-12);
        assert!((r - 7.2126).abs() < 1e-4);
        let r = power_threshold(&cond(Prob::new(9, 1), 3)).unwrap();
        assert!((r - 4.3013).abs() < 1e-4);
        assert!(power_threshold(&cond(Prob::new(2, 1), 5)).is_err());
    }

    #[test]
    fn observations_as_threshold_orderings() {
        let t = |l, total| condition_for(l, Alpha::MAXMIN, eur(total)).unwrap().rho_threshold().unwrap();
        assert!(t(Treatment::RA, 10) > t(Treatment::RR, 10));
        assert!(t(Treatment::AR, 10) > t(Treatment::RR, 10));
        assert_eq!(condition_for(Treatment::AR, Alpha::MAXMIN, eur(5)).unwrap(), ConditionOutcome::AnyUtility);
        assert!(t(Treatment::RR, 5).is_finite());
    }

    #[test]
    fn table_utility_interpolates() {
        let u = UtilityFn::table(vec![(Money::ZERO, 0.0), (eur(2), 4.0), (eur(5), 7.0)]).unwrap();
        assert_eq!(u.value(Money::ZERO), 0.0);
        assert_eq!(u.value(eur(1)), 2.0);
        assert_eq!(u.value(eur(2)), 4.0);
        assert_eq!(u.value(eur(4)), 6.0);
        assert!(u.covers(eur(5)));
        assert!(!u.covers(eur(6)));
        assert!(UtilityFn::table(vec![(eur(1), 0.0)]).is_err());
        assert!(UtilityFn::table(vec![(Money::ZERO, 0.0), (eur(1), 1.0), (eur(2), 1.0)]).is_err());
        assert!(UtilityFn::power(0.0).is_err());
    }

    #[test]
    fn utility_json_forms() {
        let u: UtilityFn = serde_json::from_str(r#"{"family":"power","rho":1.0}"#).unwrap();
        assert_eq!(u, UtilityFn::risk_neutral());
        let t: UtilityFn = serde_json::from_str(r#"{"family":"table","points":[[0,0],[5,10.0]]}"#).unwrap();
        assert_eq!(t.value(eur(3)), 6.0);
    }
}
