//! Drawing the threshold and the loss event for each group.

use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::game::{AmbiguityScenario, ProbInterval, ThresholdMode};
use crate::money::{prob_to_f64, Money};

/// How the experimenter resolves an ambiguous set when paying subjects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResolutionPolicy {
    /// Uniform over the stated thresholds / probability interval.
    #[default]
    Uniform,
    /// Highest threshold, lowest success probability.
    Pessimistic,
    /// Lowest threshold, highest success probability.
    Optimistic,
}

impl std::str::FromStr for ResolutionPolicy {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(ResolutionPolicy::Uniform),
            "pessimistic" => Ok(ResolutionPolicy::Pessimistic),
            "optimistic" => Ok(ResolutionPolicy::Optimistic),
            other => Err(crate::Error::invalid(format!(
                "unknown resolution policy `{other}` (uniform, pessimistic, optimistic)"
            ))),
        }
    }
}

/// Threshold for one group given a uniform draw `u`.
pub fn draw_threshold(scenario: &AmbiguityScenario, policy: ResolutionPolicy, u: f64) -> Money {
    let support = scenario.threshold().support();
    match scenario.threshold().mode() {
        ThresholdMode::Known(probs) => {
            let mut acc = 0.0;
            for (t, p) in support.iter().zip(probs) {
                acc += p.to_f64().unwrap_or(0.0);
                if u < acc {
                    return *t;
                }
            }
            *support.last().expect("non-empty support")
        }
        ThresholdMode::Ambiguous => match policy {
            ResolutionPolicy::Uniform => {
                let i = ((u * support.len() as f64) as usize).min(support.len() - 1);
                support[i]
            }
            ResolutionPolicy::Pessimistic => *support.last().expect("non-empty support"),
            ResolutionPolicy::Optimistic => support[0],
        },
    }
}

/// Success probability inside an interval given a uniform draw `u`.
pub fn resolve_probability(interval: ProbInterval, policy: ResolutionPolicy, u: f64) -> f64 {
    let (lo, hi) = (prob_to_f64(&interval.lo()), prob_to_f64(&interval.hi()));
    if interval.is_point() {
        return lo;
    }
    match policy {
        ResolutionPolicy::Uniform => lo + u * (hi - lo),
        ResolutionPolicy::Pessimistic => lo,
        ResolutionPolicy::Optimistic => hi,
    }
}

/// Probability that the loss is prevented, for a drawn threshold.
pub fn success_probability(
    scenario: &AmbiguityScenario,
    total: Money,
    threshold: Money,
    policy: ResolutionPolicy,
    u: f64,
) -> f64 {
    let interval = if total >= threshold { scenario.p_success_if_met() } else { scenario.p_success_if_unmet() };
    resolve_probability(interval, policy, u)
}

/// Realized outcome for one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupOutcome {
    pub threshold: Money,
    pub success_probability: f64,
    pub success: bool,
}

pub fn draw_outcome<R: Rng + ?Sized>(
    scenario: &AmbiguityScenario,
    total: Money,
    policy: ResolutionPolicy,
    rng: &mut R,
) -> GroupOutcome {
    let threshold = draw_threshold(scenario, policy, rng.random());
    let p = success_probability(scenario, total, threshold, policy, rng.random());
    let success = rng.random::<f64>() < p;
    GroupOutcome { threshold, success_probability: p, success }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Treatment;

    fn sc(t: Treatment) -> AmbiguityScenario {
        AmbiguityScenario::canonical(t)
    }

    #[test]
    fn risk_arm_probabilities() {
        let rr = sc(Treatment::RR);
        for u in [0.1, 0.9] {
            let th = draw_threshold(&rr, ResolutionPolicy::Uniform, u);
            let p = success_probability(&rr, Money::from_euros(10), th, ResolutionPolicy::Uniform, 0.3);
            assert!((p - 0.9).abs() < 1e-12);
            let p = success_probability(&rr, Money::ZERO, th, ResolutionPolicy::Uniform, 0.3);
            assert!((p - 0.1).abs() < 1e-12);
        }
        assert_eq!(draw_threshold(&rr, ResolutionPolicy::Pessimistic, 0.2), Money::from_euros(5));
        assert_eq!(draw_threshold(&rr, ResolutionPolicy::Pessimistic, 0.7), Money::from_euros(10));
    }

    #[test]
    fn ambiguous_arm_policies() {
        let aa = sc(Treatment::AA);
        let pess = ResolutionPolicy::Pessimistic;
        let th = draw_threshold(&aa, pess, 0.0);
        assert_eq!(th, Money::from_euros(10));
        assert_eq!(success_probability(&aa, Money::from_euros(9), th, pess, 0.5), 0.0);
        let opt = ResolutionPolicy::Optimistic;
        let th = draw_threshold(&aa, opt, 0.99);
        assert_eq!(th, Money::from_euros(5));
        assert_eq!(success_probability(&aa, Money::from_euros(9), th, opt, 0.5), 1.0);
        let p = success_probability(&aa, Money::from_euros(10), th, ResolutionPolicy::Uniform, 0.5);
        assert!((p - 0.9).abs() < 1e-12);
    }
}
