//! The threshold public-goods game, its four uncertainty scenarios and the
//! success-probability step curve each scenario induces.
//!
//! # Effective success curve
//!
//! A player's payoff is `u(endowment - c_i) * P(success | C)`. The prior
//! (threshold distribution plus loss probabilities) only enters through the
//! non-negative multiplier `P(success | C)`, and `u(endowment - c_i)` does
//! not depend on the prior. Hence for every fixed `C`
//!
//! ```text
//! min_prior u(.) * P(C) = u(.) * min_prior P(C)
//! max_prior u(.) * P(C) = u(.) * max_prior P(C)
//! ```
//!
//! and the α-maxmin evaluation `α·min + (1-α)·max` of the payoff equals the
//! payoff evaluated on `p(C) = α·p_min(C) + (1-α)·p_max(C)`. The extremes are
//! taken independently at every `C`: an ambiguous threshold picks the worst
//! (best) support point, an ambiguous loss probability picks the interval
//! endpoint. With `α = 1` this is maxmin expected utility, with `α = 0`
//! maxmax; intermediate values are an extension and are flagged as such.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::{format_rational, is_unit_interval, parse_prob, prob_to_f64, Money, Prob};

/// Players, endowment and contribution grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSpec {
    n_players: usize,
    endowment: Money,
    grid_step: Money,
}

impl GameSpec {
    pub fn new(n_players: usize, endowment: Money, grid_step: Money) -> Result<Self> {
        if n_players == 0 {
            return Err(Error::invalid("a game needs at least one player"));
        }
        if grid_step == Money::ZERO {
            return Err(Error::invalid("grid step must be positive"));
        }
        if !endowment.is_multiple_of(grid_step) {
            return Err(Error::invalid(format!("endowment {endowment} is not a multiple of grid step {grid_step}")));
        }
        Ok(GameSpec { n_players, endowment, grid_step })
    }

    /// Five players, endowment 5, one-euro grid.
    pub fn experiment() -> Self {
        GameSpec { n_players: 5, endowment: Money::from_euros(5), grid_step: Money::from_euros(1) }
    }

    pub fn with_grid_step(self, grid_step: Money) -> Result<Self> {
        GameSpec::new(self.n_players, self.endowment, grid_step)
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn endowment(&self) -> Money {
        self.endowment
    }

    pub fn grid_step(&self) -> Money {
        self.grid_step
    }

    pub fn max_total(&self) -> Money {
        self.endowment * self.n_players as u64
    }

    /// Number of admissible individual contributions (0 and endowment included).
    pub fn grid_len(&self) -> usize {
        self.endowment.steps_of(self.grid_step) + 1
    }

    pub fn contribution(&self, index: usize) -> Money {
        self.grid_step * index as u64
    }

    pub fn contributions(&self) -> impl Iterator<Item = Money> + '_ {
        (0..self.grid_len()).map(move |k| self.contribution(k))
    }

    pub fn is_on_grid(&self, c: Money) -> bool {
        c <= self.endowment && c.is_multiple_of(self.grid_step)
    }
}

impl Default for GameSpec {
    fn default() -> Self {
        GameSpec::experiment()
    }
}

/// Closed probability interval; a point when `lo == hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbInterval {
    lo: Prob,
    hi: Prob,
}

impl ProbInterval {
    pub fn new(lo: Prob, hi: Prob) -> Result<Self> {
        if !is_unit_interval(&lo) || !is_unit_interval(&hi) || lo > hi {
            return Err(Error::invalid(format!(
                "[{}, {}] is not a probability interval",
                format_rational(&lo),
                format_rational(&hi)
            )));
        }
        Ok(ProbInterval { lo, hi })
    }

    pub fn point(p: Prob) -> Result<Self> {
        ProbInterval::new(p, p)
    }

    pub fn lo(&self) -> Prob {
        self.lo
    }

    pub fn hi(&self) -> Prob {
        self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }
}

/// How the threshold probabilities are known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThresholdMode {
    /// One probability per support point, summing to one.
    Known(Vec<Prob>),
    /// Every distribution over the support is admissible.
    Ambiguous,
}

/// Support and mode of the provision-point threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdSpec {
    support: Vec<Money>,
    mode: ThresholdMode,
}

impl ThresholdSpec {
    pub fn known(points: Vec<(Money, Prob)>) -> Result<Self> {
        let (support, probs): (Vec<_>, Vec<_>) = points.into_iter().unzip();
        check_support(&support)?;
        if probs.iter().any(|p| !is_unit_interval(p)) {
            return Err(Error::invalid("threshold probabilities must lie in [0, 1]"));
        }
        let total: Prob = probs.iter().copied().sum();
        if total != Prob::one() {
            return Err(Error::invalid(format!("threshold probabilities sum to {}, not 1", format_rational(&total))));
        }
        Ok(ThresholdSpec { support, mode: ThresholdMode::Known(probs) })
    }

    pub fn ambiguous(support: Vec<Money>) -> Result<Self> {
        check_support(&support)?;
        Ok(ThresholdSpec { support, mode: ThresholdMode::Ambiguous })
    }

    pub fn support(&self) -> &[Money] {
        &self.support
    }

    pub fn mode(&self) -> &ThresholdMode {
        &self.mode
    }

    pub fn is_ambiguous(&self) -> bool {
        matches!(self.mode, ThresholdMode::Ambiguous)
    }
}

fn check_support(support: &[Money]) -> Result<()> {
    if support.is_empty() {
        return Err(Error::invalid("threshold support is empty"));
    }
    if support.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("threshold support must be strictly increasing"));
    }
    Ok(())
}

/// Treatment arm. The first letter is the loss-probability dimension, the
/// second the mitigation-cost (threshold) dimension; R = risk, A = ambiguity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Treatment {
    RR,
    AR,
    RA,
    AA,
}

impl Treatment {
    /// Arms in assignment / regression order, RR first as the baseline.
    pub const ALL: [Treatment; 4] = [Treatment::RR, Treatment::AR, Treatment::RA, Treatment::AA];
    /// Column order of the published equilibrium tables.
    pub const TABLE_ORDER: [Treatment; 4] = [Treatment::RR, Treatment::RA, Treatment::AR, Treatment::AA];

    pub fn ambiguous_loss(self) -> bool {
        matches!(self, Treatment::AR | Treatment::AA)
    }

    pub fn ambiguous_threshold(self) -> bool {
        matches!(self, Treatment::RA | Treatment::AA)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Treatment::RR => "RR",
            Treatment::AR => "AR",
            Treatment::RA => "RA",
            Treatment::AA => "AA",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Treatment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Treatment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RR" => Ok(Treatment::RR),
            "AR" => Ok(Treatment::AR),
            "RA" => Ok(Treatment::RA),
            "AA" => Ok(Treatment::AA),
            _ => Err(Error::UnknownTreatment(s.to_string())),
        }
    }
}

/// One treatment arm: threshold uncertainty plus success probabilities when
/// the threshold is met and when it is not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmbiguityScenario {
    label: Treatment,
    threshold: ThresholdSpec,
    p_success_if_met: ProbInterval,
    p_success_if_unmet: ProbInterval,
}

impl AmbiguityScenario {
    pub fn new(
        label: Treatment,
        threshold: ThresholdSpec,
        p_success_if_met: ProbInterval,
        p_success_if_unmet: ProbInterval,
    ) -> Result<Self> {
        if threshold.is_ambiguous() != label.ambiguous_threshold() {
            return Err(Error::invalid(format!(
                "{label}: threshold must be {}",
                if label.ambiguous_threshold() { "ambiguous" } else { "known" }
            )));
        }
        let points = p_success_if_met.is_point() && p_success_if_unmet.is_point();
        if points == label.ambiguous_loss() {
            return Err(Error::invalid(format!(
                "{label}: success probabilities must be {}",
                if label.ambiguous_loss() { "intervals" } else { "points" }
            )));
        }
        if p_success_if_met.lo < p_success_if_unmet.lo || p_success_if_met.hi < p_success_if_unmet.hi {
            return Err(Error::invalid(format!(
                "{label}: meeting the threshold must not lower the success probability"
            )));
        }
        Ok(AmbiguityScenario { label, threshold, p_success_if_met, p_success_if_unmet })
    }

    /// The experiment's parameterisation of an arm: thresholds 5 or 10 (even
    /// odds under risk); success 0.9 / 0.1 under risk, [0.8, 1] / [0, 0.2]
    /// under ambiguity.
    pub fn canonical(label: Treatment) -> Self {
        let five = Money::from_euros(5);
        let ten = Money::from_euros(10);
        let half = Prob::new(1, 2);
        let threshold = if label.ambiguous_threshold() {
            ThresholdSpec::ambiguous(vec![five, ten])
        } else {
            ThresholdSpec::known(vec![(five, half), (ten, half)])
        }
        .expect("canonical threshold");
        let (met, unmet) = if label.ambiguous_loss() {
            (ProbInterval::new(Prob::new(4, 5), Prob::one()), ProbInterval::new(Prob::zero(), Prob::new(1, 5)))
        } else {
            (ProbInterval::point(Prob::new(9, 10)), ProbInterval::point(Prob::new(1, 10)))
        };
        AmbiguityScenario::new(label, threshold, met.unwrap(), unmet.unwrap()).expect("canonical scenario")
    }

    pub fn label(&self) -> Treatment {
        self.label
    }

    pub fn threshold(&self) -> &ThresholdSpec {
        &self.threshold
    }

    pub fn p_success_if_met(&self) -> ProbInterval {
        self.p_success_if_met
    }

    pub fn p_success_if_unmet(&self) -> ProbInterval {
        self.p_success_if_unmet
    }

    /// Totals the solver treats as candidate equilibrium totals: zero plus
    /// every threshold support point.
    pub fn canonical_totals(&self) -> Vec<Money> {
        let mut totals = vec![Money::ZERO];
        totals.extend(self.threshold.support.iter().copied().filter(|t| *t > Money::ZERO));
        totals
    }

    fn success_given(&self, total: Money, threshold: Money, met_p: Prob, unmet_p: Prob) -> Prob {
        if total >= threshold {
            met_p
        } else {
            unmet_p
        }
    }

    /// Worst and best admissible success probability at a total.
    pub fn success_bounds(&self, total: Money) -> (Prob, Prob) {
        let met = self.p_success_if_met;
        let unmet = self.p_success_if_unmet;
        match &self.threshold.mode {
            ThresholdMode::Known(probs) => {
                let mix = |m: Prob, u: Prob| -> Prob {
                    self.threshold
                        .support
                        .iter()
                        .zip(probs)
                        .map(|(t, w)| *w * self.success_given(total, *t, m, u))
                        .sum()
                };
                (mix(met.lo, unmet.lo), mix(met.hi, unmet.hi))
            }
            ThresholdMode::Ambiguous => {
                let lo = self
                    .threshold
                    .support
                    .iter()
                    .map(|t| self.success_given(total, *t, met.lo, unmet.lo))
                    .min()
                    .expect("non-empty support");
                let hi = self
                    .threshold
                    .support
                    .iter()
                    .map(|t| self.success_given(total, *t, met.hi, unmet.hi))
                    .max()
                    .expect("non-empty support");
                (lo, hi)
            }
        }
    }
}

/// Make the canonical scenario for a treatment label such as `"AR"`.
pub fn make_scenario(label: &str) -> Result<AmbiguityScenario> {
    Ok(AmbiguityScenario::canonical(label.parse()?))
}

/// Weight on the worst case in the α-maxmin criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Alpha(Prob);

impl Alpha {
    pub const MAXMIN: Alpha = Alpha(Prob::new_raw(1, 1));
    pub const MAXMAX: Alpha = Alpha(Prob::new_raw(0, 1));

    pub fn new(weight: Prob) -> Result<Self> {
        if !is_unit_interval(&weight) {
            return Err(Error::invalid(format!("alpha {} outside [0, 1]", format_rational(&weight))));
        }
        Ok(Alpha(weight))
    }

    pub fn weight(&self) -> Prob {
        self.0
    }

    pub fn as_f64(&self) -> f64 {
        prob_to_f64(&self.0)
    }

    /// Maxmin (α = 1) or maxmax (α = 0); anything else is an extension.
    pub fn is_paper_model(&self) -> bool {
        self.0.is_zero() || self.0.is_one()
    }

    fn model_name_short(&self) -> String {
        if self.0.is_one() {
            "maxmin".to_string()
        } else if self.0.is_zero() {
            "maxmax".to_string()
        } else {
            format_rational(&self.0)
        }
    }

    pub fn model_name(&self) -> String {
        if self.0.is_one() {
            "maxmin".to_string()
        } else if self.0.is_zero() {
            "maxmax".to_string()
        } else {
            format!("alpha-maxmin({}) [extension]", format_rational(&self.0))
        }
    }
}

impl FromStr for Alpha {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "maxmin" => Ok(Alpha::MAXMIN),
            "maxmax" => Ok(Alpha::MAXMAX),
            other => Alpha::new(parse_prob(other)?),
        }
    }
}

impl Serialize for Alpha {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.model_name_short())
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Alpha, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

/// Right-continuous step function `C -> p(C)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuccessCurve {
    breakpoints: Vec<(Money, Prob)>,
    domain_bound: Money,
    alpha: Alpha,
}

impl SuccessCurve {
    /// Builds a curve from explicit steps; adjacent equal steps are merged.
    pub fn from_steps(steps: Vec<(Money, Prob)>, domain_bound: Money, alpha: Alpha) -> Result<Self> {
        if steps.first().map(|s| s.0) != Some(Money::ZERO) {
            return Err(Error::invalid("first breakpoint must be at C = 0"));
        }
        if steps.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        if steps.iter().any(|(_, p)| !is_unit_interval(p)) {
            return Err(Error::invalid("curve probabilities must lie in [0, 1]"));
        }
        if steps.windows(2).any(|w| w[0].1 > w[1].1) {
            return Err(Error::invalid("curve must be non-decreasing in C"));
        }
        if steps.last().map(|s| s.0 > domain_bound).unwrap_or(false) {
            return Err(Error::invalid("breakpoint beyond the domain bound"));
        }
        let mut breakpoints: Vec<(Money, Prob)> = Vec::with_capacity(steps.len());
        for (t, p) in steps {
            if breakpoints.last().map(|b| b.1) != Some(p) {
                breakpoints.push((t, p));
            }
        }
        Ok(SuccessCurve { breakpoints, domain_bound, alpha })
    }

    pub fn breakpoints(&self) -> &[(Money, Prob)] {
        &self.breakpoints
    }

    pub fn domain_bound(&self) -> Money {
        self.domain_bound
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    /// Value at `total`; a breakpoint belongs to the step that starts there.
    pub fn eval(&self, total: Money) -> Result<Prob> {
        if total > self.domain_bound {
            return Err(Error::OutOfDomain { value: total.to_string(), bound: self.domain_bound.to_string() });
        }
        Ok(self.value_at(total))
    }

    fn value_at(&self, total: Money) -> Prob {
        let idx = self.breakpoints.partition_point(|(t, _)| *t <= total);
        self.breakpoints[idx - 1].1
    }

    pub fn eval_f64(&self, total: Money) -> Result<f64> {
        self.eval(total).map(|p| prob_to_f64(&p))
    }
}

impl fmt::Display for SuccessCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p(C) [{}]", self.alpha.model_name())?;
        for (i, (t, p)) in self.breakpoints.iter().enumerate() {
            let upper = self.breakpoints.get(i + 1).map(|b| b.0).unwrap_or(self.domain_bound);
            let last = i + 1 == self.breakpoints.len();
            let op = if last { "<=" } else { "<" };
            writeln!(f, "  {} if {t} <= C {op} {upper}", format_rational(p))?;
        }
        Ok(())
    }
}

/// The α-maxmin success curve of a scenario on a game's total-contribution
/// domain.
pub fn build_success_curve(scenario: &AmbiguityScenario, alpha: Alpha, game: &GameSpec) -> SuccessCurve {
    let bound = game.max_total();
    let mut candidates = vec![Money::ZERO];
    candidates.extend(scenario.threshold.support.iter().copied().filter(|t| *t > Money::ZERO && *t <= bound));
    let w = alpha.weight();
    let steps = candidates
        .into_iter()
        .map(|c| {
            let (lo, hi) = scenario.success_bounds(c);
            (c, w * lo + (Prob::one() - w) * hi)
        })
        .collect();
    SuccessCurve::from_steps(steps, bound, alpha).expect("scenario validation guarantees a monotone curve")
}

/// Evaluate a curve at a total contribution.
pub fn eval_curve(curve: &SuccessCurve, total: Money) -> Result<Prob> {
    curve.eval(total)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct ThresholdPointDoc {
    value: Money,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prob: Option<String>,
}

/// JSON form of a scenario; probabilities are decimal strings.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScenarioDoc {
    label: String,
    thresholds: Vec<ThresholdPointDoc>,
    ambiguous_threshold: bool,
    p_met: [String; 2],
    p_unmet: [String; 2],
}

impl From<&AmbiguityScenario> for ScenarioDoc {
    fn from(s: &AmbiguityScenario) -> Self {
        let thresholds = match &s.threshold.mode {
            ThresholdMode::Known(probs) => s
                .threshold
                .support
                .iter()
                .zip(probs)
                .map(|(v, p)| ThresholdPointDoc { value: *v, prob: Some(format_rational(p)) })
                .collect(),
            ThresholdMode::Ambiguous => {
                s.threshold.support.iter().map(|v| ThresholdPointDoc { value: *v, prob: None }).collect()
            }
        };
        let iv = |i: ProbInterval| [format_rational(&i.lo), format_rational(&i.hi)];
        ScenarioDoc {
            label: s.label.to_string(),
            thresholds,
            ambiguous_threshold: s.threshold.is_ambiguous(),
            p_met: iv(s.p_success_if_met),
            p_unmet: iv(s.p_success_if_unmet),
        }
    }
}

impl TryFrom<ScenarioDoc> for AmbiguityScenario {
    type Error = Error;

    fn try_from(doc: ScenarioDoc) -> Result<Self> {
        let label: Treatment = doc.label.parse()?;
        let threshold = if doc.ambiguous_threshold {
            if doc.thresholds.iter().any(|t| t.prob.is_some()) {
                return Err(Error::invalid("ambiguous thresholds must not carry probabilities"));
            }
            ThresholdSpec::ambiguous(doc.thresholds.iter().map(|t| t.value).collect())?
        } else {
            let points = doc
                .thresholds
                .iter()
                .map(|t| {
                    let p = t
                        .prob
                        .as_deref()
                        .ok_or_else(|| Error::invalid(format!("threshold {} lacks a probability", t.value)))?;
                    Ok((t.value, parse_prob(p)?))
                })
                .collect::<Result<Vec<_>>>()?;
            ThresholdSpec::known(points)?
        };
        let iv = |a: &[String; 2]| ProbInterval::new(parse_prob(&a[0])?, parse_prob(&a[1])?);
        AmbiguityScenario::new(label, threshold, iv(&doc.p_met)?, iv(&doc.p_unmet)?)
    }
}

impl AmbiguityScenario {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScenarioDoc::from(self)).expect("scenario serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScenarioDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: i64, d: i64) -> Prob {
        Prob::new(n, d)
    }

    fn eur(e: u64) -> Money {
        Money::from_euros(e)
    }

    fn steps(curve: &SuccessCurve) -> Vec<(u64, Prob)> {
        curve.breakpoints().iter().map(|(t, q)| (t.cents() / 100, *q)).collect()
    }

    #[test]
    fn canonical_scenarios_match_the_design() {
        let rr = make_scenario("RR").unwrap();
        assert_eq!(rr.threshold().mode(), &ThresholdMode::Known(vec![p(1, 2), p(1, 2)]));
        assert_eq!(rr.threshold().support(), &[eur(5), eur(10)]);
        assert_eq!(rr.p_success_if_met(), ProbInterval::point(p(9, 10)).unwrap());
        assert_eq!(rr.p_success_if_unmet(), ProbInterval::point(p(1, 10)).unwrap());

        let aa = make_scenario("aa").unwrap();
        assert!(aa.threshold().is_ambiguous());
        assert_eq!((aa.p_success_if_met().lo(), aa.p_success_if_met().hi()), (p(4, 5), p(1, 1)));
        assert_eq!((aa.p_success_if_unmet().lo(), aa.p_success_if_unmet().hi()), (p(0, 1), p(1, 5)));

        let ar = make_scenario("AR").unwrap();
        assert!(!ar.threshold().is_ambiguous());
        assert!(!ar.p_success_if_met().is_point());

        assert!(matches!(make_scenario("XX"), Err(Error::UnknownTreatment(_))));
    }

    #[test]
    fn curve_examples() {
        let g = GameSpec::experiment();
        let rr = build_success_curve(&make_scenario("RR").unwrap(), Alpha::MAXMIN, &g);
        assert_eq!(steps(&rr), vec![(0, p(1, 10)), (5, p(1, 2)), (10, p(9, 10))]);

        let aa = build_success_curve(&make_scenario("AA").unwrap(), Alpha::MAXMIN, &g);
        assert_eq!(steps(&aa), vec![(0, p(0, 1)), (10, p(4, 5))]);

        let ar0 = build_success_curve(&make_scenario("AR").unwrap(), Alpha::MAXMAX, &g);
        assert_eq!(steps(&ar0), vec![(0, p(1, 5)), (5, p(3, 5)), (10, p(1, 1))]);

        let half: Alpha = "0.5".parse().unwrap();
        let aa_half = build_success_curve(&make_scenario("AA").unwrap(), half, &g);
        assert_eq!(aa_half.eval(eur(12)).unwrap(), p(9, 10));
        assert!(!half.is_paper_model());
        assert!(aa_half.to_string().contains("extension"));
    }

    #[test]
    fn evaluation_boundaries() {
        let g = GameSpec::experiment();
        let rr = build_success_curve(&make_scenario("RR").unwrap(), Alpha::MAXMIN, &g);
        assert_eq!(eval_curve(&rr, eur(5)).unwrap(), p(1, 2));
        assert_eq!(eval_curve(&rr, Money::ZERO).unwrap(), p(1, 10));
        assert_eq!(eval_curve(&rr, eur(25)).unwrap(), p(9, 10));
        assert!(matches!(eval_curve(&rr, Money::from_cents(2501)), Err(Error::OutOfDomain { .. })));

        let fine = g.with_grid_step(Money::from_cents(1)).unwrap();
        let ra = build_success_curve(&make_scenario("RA").unwrap(), Alpha::MAXMIN, &fine);
        assert_eq!(eval_curve(&ra, Money::from_cents(999)).unwrap(), p(1, 10));
        assert_eq!(eval_curve(&ra, Money::from_cents(1000)).unwrap(), p(9, 10));
    }

    #[test]
    fn rejects_malformed_inputs() {
        assert!(GameSpec::new(5, Money::from_euros(5), Money::from_cents(30)).is_err());
        assert!(GameSpec::new(0, Money::from_euros(5), Money::from_euros(1)).is_err());
        assert!(ProbInterval::new(p(1, 2), p(1, 4)).is_err());
        assert!(ThresholdSpec::known(vec![(eur(5), p(1, 2)), (eur(10), p(1, 3))]).is_err());
        assert!(ThresholdSpec::ambiguous(vec![eur(10), eur(5)]).is_err());
        assert!(ThresholdSpec::ambiguous(vec![]).is_err());
        assert!("1.5".parse::<Alpha>().is_err());
        // RR demands point probabilities and a known threshold.
        let amb = ThresholdSpec::ambiguous(vec![eur(5)]).unwrap();
        let pt = ProbInterval::point(p(1, 2)).unwrap();
        assert!(AmbiguityScenario::new(Treatment::RR, amb, pt, pt).is_err());
        assert!(SuccessCurve::from_steps(vec![(eur(1), p(1, 2))], eur(25), Alpha::MAXMIN).is_err());
        assert!(
            SuccessCurve::from_steps(vec![(Money::ZERO, p(1, 2)), (eur(5), p(1, 4))], eur(25), Alpha::MAXMIN).is_err()
        );
    }

    #[test]
    fn scenario_json_round_trip() {
        for t in Treatment::ALL {
            let s = AmbiguityScenario::canonical(t);
            let text = s.to_json();
            assert_eq!(AmbiguityScenario::from_json(&text).unwrap(), s);
        }
        let text = r#"{"label":"AR","thresholds":[{"value":"5","prob":"0.5"},{"value":"10","prob":"0.5"}],
                       "ambiguous_threshold":false,"p_met":["0.8","1"],"p_unmet":["0","0.2"]}"#;
        assert_eq!(AmbiguityScenario::from_json(text).unwrap(), AmbiguityScenario::canonical(Treatment::AR));
        let bad = r#"{"label":"AR","thresholds":[{"value":"5"}],"ambiguous_threshold":false,
                      "p_met":["0.8","1"],"p_unmet":["0","0.2"]}"#;
        assert!(AmbiguityScenario::from_json(bad).is_err());
    }
}
