//! Belief formation and contribution rules.

use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::covariates::CovariateProfile;
use crate::error::{Error, Result};
use crate::game::{build_success_curve, Alpha, AmbiguityScenario, GameSpec, SuccessCurve, Treatment};
use crate::money::{prob_to_f64, Money};
use crate::preferences::UtilityFn;
use crate::solver::strictly_greater;

/// Upper bound on the belief about the other four members' total.
pub const MAX_BELIEF: f64 = 20.0;

/// An additive effect per ambiguity arm, relative to RR.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmShift {
    #[serde(rename = "AR")]
    pub ar: f64,
    #[serde(rename = "RA")]
    pub ra: f64,
    #[serde(rename = "AA")]
    pub aa: f64,
}

impl ArmShift {
    pub fn get(&self, t: Treatment) -> f64 {
        match t {
            Treatment::RR => 0.0,
            Treatment::AR => self.ar,
            Treatment::RA => self.ra,
            Treatment::AA => self.aa,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.ar == 0.0 && self.ra == 0.0 && self.aa == 0.0
    }
}

/// Linear belief equation with a clamped Gaussian error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeliefModel {
    pub constant: f64,
    pub education: f64,
    pub altruism: f64,
    pub gravity: f64,
    pub number_actions: f64,
    pub crt: f64,
    pub risk_aversion: f64,
    pub ambiguity_aversion: f64,
    pub treatment_shift: ArmShift,
    pub noise_sd: f64,
}

impl Default for BeliefModel {
    fn default() -> Self {
        BeliefModel {
            constant: 9.614,
            education: -0.286,
            altruism: 0.423,
            gravity: 0.203,
            number_actions: -0.184,
            crt: -0.636,
            risk_aversion: -1.220,
            ambiguity_aversion: -0.323,
            treatment_shift: ArmShift::default(),
            noise_sd: 5.0,
        }
    }
}

impl BeliefModel {
    pub fn index(&self, cov: &CovariateProfile, treatment: Treatment) -> f64 {
        self.constant
            + self.education * cov.education as f64
            + self.altruism * cov.altruism as f64
            + self.gravity * cov.gravity as f64
            + self.number_actions * cov.number_actions as f64
            + self.crt * cov.crt as f64
            + self.risk_aversion * cov.risk_aversion
            + self.ambiguity_aversion * cov.ambiguity_aversion
            + self.treatment_shift.get(treatment)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::invalid("belief noise_sd must be a non-negative number"));
        }
        Ok(())
    }
}

/// Belief about the others' total contribution, clamped to `[0, 20]`.
pub fn gen_belief<R: Rng + ?Sized>(
    cov: &CovariateProfile,
    treatment: Treatment,
    model: &BeliefModel,
    rng: &mut R,
) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    (model.index(cov, treatment) + model.noise_sd * z).clamp(0.0, MAX_BELIEF)
}

/// A subject counts as pivotal when their belief lies in `[5, 9)`.
pub fn is_pivotal(belief: f64) -> bool {
    (5.0..9.0).contains(&belief)
}

/// How the linear index becomes an on-grid contribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContributionNoise {
    /// With probability `focal_share` play `focal`; otherwise a
    /// beta-binomial number of grid steps whose mean keeps the overall
    /// expectation equal to the index.
    FocalBetaBinomial { focal_share: f64, focal: Money, concentration: f64 },
    /// Index plus normal noise, rounded to the grid and clamped.
    Gaussian { sd: f64 },
}

impl Default for ContributionNoise {
    fn default() -> Self {
        ContributionNoise::FocalBetaBinomial { focal_share: 0.28, focal: Money::from_euros(2), concentration: 10.0 }
    }
}

/// Linear contribution equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearRule {
    pub constant: f64,
    pub belief: f64,
    pub risk_aversion: f64,
    pub ambiguity_aversion: f64,
    pub crt: f64,
    pub age: f64,
    pub female: f64,
    pub education: f64,
    pub altruism: f64,
    pub envy: f64,
    pub ideology: f64,
    pub gravity: f64,
    pub number_actions: f64,
    pub social_transfer: f64,
    pub unemployed: f64,
    pub treatment_effects: ArmShift,
    /// Arm-specific additions to the risk-aversion slope.
    pub risk_interactions: ArmShift,
    pub pivotal: f64,
    pub perception_accuracy: f64,
    pub pivotal_x_accuracy: f64,
    pub noise: ContributionNoise,
}

impl Default for LinearRule {
    fn default() -> Self {
        LinearRule {
            constant: 1.450,
            belief: 0.170,
            risk_aversion: -0.337,
            ambiguity_aversion: -0.125,
            crt: -0.142,
            age: -0.005,
            female: 0.002,
            education: -0.010,
            altruism: 0.030,
            envy: 0.019,
            ideology: -0.001,
            gravity: 0.005,
            number_actions: 0.014,
            social_transfer: 0.057,
            unemployed: 0.029,
            treatment_effects: ArmShift::default(),
            risk_interactions: ArmShift::default(),
            pivotal: 0.0,
            perception_accuracy: 0.0,
            pivotal_x_accuracy: 0.0,
            noise: ContributionNoise::default(),
        }
    }
}

impl LinearRule {
    /// Risk-aversion slope that differs by arm: -0.700 in RR, shifted by
    /// +0.359 (AR), +0.679 (RA) and +0.814 (AA).
    pub fn with_risk_interactions(mut self) -> Self {
        self.risk_aversion = -0.700;
        self.risk_interactions = ArmShift { ar: 0.359, ra: 0.679, aa: 0.814 };
        self
    }

    /// Pivotal subjects give less, more so the more they trust their belief.
    pub fn with_pivotal_effects(mut self) -> Self {
        self.pivotal = -0.315;
        self.perception_accuracy = 0.003;
        self.pivotal_x_accuracy = -0.005;
        self
    }

    pub fn index(&self, s: &SubjectInputs) -> f64 {
        let c = &s.cov;
        let pivotal = if is_pivotal(s.belief) { 1.0 } else { 0.0 };
        self.constant
            + self.belief * s.belief
            + (self.risk_aversion + self.risk_interactions.get(s.treatment)) * c.risk_aversion
            + self.ambiguity_aversion * c.ambiguity_aversion
            + self.crt * c.crt as f64
            + self.age * c.age as f64
            + self.female * c.female as f64
            + self.education * c.education as f64
            + self.altruism * c.altruism as f64
            + self.envy * c.envy as f64
            + self.ideology * c.ideology as f64
            + self.gravity * c.gravity as f64
            + self.number_actions * c.number_actions as f64
            + self.social_transfer * c.social_transfer as f64
            + self.unemployed * c.unemployed as f64
            + self.treatment_effects.get(s.treatment)
            + self.pivotal * pivotal
            + self.perception_accuracy * s.perception_accuracy
            + self.pivotal_x_accuracy * pivotal * s.perception_accuracy
    }

    fn validate(&self) -> Result<()> {
        match self.noise {
            ContributionNoise::FocalBetaBinomial { focal_share, concentration, .. } => {
                if !(0.0..1.0).contains(&focal_share) {
                    return Err(Error::invalid("focal_share must be in [0, 1)"));
                }
                if !(concentration.is_finite() && concentration > 0.0) {
                    return Err(Error::invalid("concentration must be positive"));
                }
            }
            ContributionNoise::Gaussian { sd } => {
                if !(sd.is_finite() && sd >= 0.0) {
                    return Err(Error::invalid("gaussian sd must be non-negative"));
                }
            }
        }
        Ok(())
    }

    fn draw<R: Rng + ?Sized>(&self, s: &SubjectInputs, game: &GameSpec, rng: &mut R) -> Money {
        let index = self.index(s);
        let step = game.grid_step();
        let endowment = game.endowment();
        match self.noise {
            ContributionNoise::FocalBetaBinomial { focal_share, focal, concentration } => {
                let focal = Money::round_to_grid(focal.as_euros(), step).min(endowment);
                if rng.random::<f64>() < focal_share {
                    return focal;
                }
                let rest = (index - focal_share * focal.as_euros()) / (1.0 - focal_share);
                let q = (rest / endowment.as_euros()).clamp(1e-3, 1.0 - 1e-3);
                let q_subject = Beta::new(q * concentration, (1.0 - q) * concentration)
                    .expect("beta parameters are positive")
                    .sample(rng);
                let steps = endowment.steps_of(step) as u64;
                let k = Binomial::new(steps, q_subject.clamp(0.0, 1.0))
                    .expect("binomial probability in [0, 1]")
                    .sample(rng);
                step * k
            }
            ContributionNoise::Gaussian { sd } => {
                let z: f64 = rng.sample(StandardNormal);
                Money::round_to_grid(index + sd * z, step).min(endowment)
            }
        }
    }
}

/// How a simulated subject chooses a contribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BehavioralRule {
    PaperCalibratedLinear(LinearRule),
    /// Best response to the stated belief under `u(x) = x^rho` with
    /// `rho = max(1 - risk_aversion, rho_floor)`.
    BeliefBestResponder {
        alpha: Alpha,
        rho_floor: f64,
    },
    /// Everyone plays the symmetric share of `total`.
    EquilibriumSelector {
        total: Money,
    },
    AltruistFixed {
        contribution: Money,
    },
}

impl Default for BehavioralRule {
    fn default() -> Self {
        BehavioralRule::PaperCalibratedLinear(LinearRule::default())
    }
}

impl BehavioralRule {
    pub fn validate(&self, game: &GameSpec) -> Result<()> {
        match self {
            BehavioralRule::PaperCalibratedLinear(rule) => rule.validate(),
            BehavioralRule::BeliefBestResponder { rho_floor, .. } => {
                if !(rho_floor.is_finite() && *rho_floor > 0.0) {
                    return Err(Error::invalid("rho_floor must be positive"));
                }
                Ok(())
            }
            BehavioralRule::EquilibriumSelector { total } => {
                if *total > game.max_total() {
                    return Err(Error::invalid(format!("selected total {total} exceeds {}", game.max_total())));
                }
                Ok(())
            }
            BehavioralRule::AltruistFixed { contribution } => {
                if !game.is_on_grid(*contribution) {
                    return Err(Error::invalid(format!("fixed contribution {contribution} is not on the grid")));
                }
                Ok(())
            }
        }
    }
}

/// What a rule sees about one subject.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubjectInputs {
    pub cov: CovariateProfile,
    pub treatment: Treatment,
    pub belief: f64,
    pub perception_accuracy: f64,
}

/// A rule bound to a game, with success curves built once per arm.
#[derive(Debug, Clone)]
pub struct RuleContext {
    rule: BehavioralRule,
    game: GameSpec,
    curves: Vec<SuccessCurve>,
}

impl RuleContext {
    pub fn new(rule: BehavioralRule, game: GameSpec) -> Result<Self> {
        rule.validate(&game)?;
        let curves = match &rule {
            BehavioralRule::BeliefBestResponder { alpha, .. } => Treatment::ALL
                .iter()
                .map(|t| build_success_curve(&AmbiguityScenario::canonical(*t), *alpha, &game))
                .collect(),
            _ => Vec::new(),
        };
        Ok(RuleContext { rule, game, curves })
    }

    pub fn game(&self) -> &GameSpec {
        &self.game
    }

    pub fn rule(&self) -> &BehavioralRule {
        &self.rule
    }
}

/// Contribution on the grid in `[0, endowment]`.
pub fn gen_contribution<R: Rng + ?Sized>(ctx: &RuleContext, s: &SubjectInputs, rng: &mut R) -> Money {
    let game = &ctx.game;
    match &ctx.rule {
        BehavioralRule::PaperCalibratedLinear(rule) => rule.draw(s, game, rng),
        BehavioralRule::BeliefBestResponder { rho_floor, .. } => {
            let rho = (1.0 - s.cov.risk_aversion).max(*rho_floor);
            best_response(&UtilityFn::Power { rho }, &ctx.curves[s.treatment.index()], game, s.belief)
        }
        BehavioralRule::EquilibriumSelector { total } => {
            let share = total.as_euros() / game.n_players() as f64;
            Money::round_to_grid(share, game.grid_step()).min(game.endowment())
        }
        BehavioralRule::AltruistFixed { contribution } => *contribution,
    }
}

/// Grid contribution maximising `u(endowment - c) * p(c + belief)`; ties
/// go to the smaller contribution.
pub fn best_response(u: &UtilityFn, curve: &SuccessCurve, game: &GameSpec, belief: f64) -> Money {
    let others = Money::from_cents((belief.clamp(0.0, MAX_BELIEF) * 100.0).round() as u64);
    let mut best = (Money::ZERO, f64::NEG_INFINITY);
    for c in game.contributions() {
        let total = (c + others).min(curve.domain_bound());
        let p = curve.eval(total).map(|p| prob_to_f64(&p)).unwrap_or(0.0);
        let v = u.value(game.endowment() - c) * p;
        if best.1 == f64::NEG_INFINITY || strictly_greater(v, best.1) {
            best = (c, v);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::rng::{substream, Stream};

    fn mean_profile() -> CovariateProfile {
        CovariateProfile { risk_aversion: 0.0, ..CovariateProfile::zeros() }
    }

    #[test]
    fn belief_index_matches_coefficients() {
        let m = BeliefModel::default();
        let zero = CovariateProfile::zeros();
        assert!((m.index(&zero, Treatment::AA) - 9.614).abs() < 1e-12);
        let risky = CovariateProfile { risk_aversion: 1.0, ..zero };
        assert!((m.index(&zero, Treatment::RR) - m.index(&risky, Treatment::RR) - 1.220).abs() < 1e-12);
        let silent = BeliefModel { noise_sd: 0.0, constant: 30.0, ..BeliefModel::default() };
        let mut rng = substream(1, Stream::Belief, 1);
        assert_eq!(gen_belief(&zero, Treatment::RR, &silent, &mut rng), MAX_BELIEF);
    }

    #[test]
    fn linear_index_at_sample_means() {
        let rule = LinearRule::default();
        let cov =
            CovariateProfile { age: 0, risk_aversion: 0.04, ambiguity_aversion: 0.02, ..CovariateProfile::zeros() };
        let inputs = SubjectInputs { cov, treatment: Treatment::RR, belief: 9.19, perception_accuracy: 0.0 };
        // fractional means for the discrete covariates
        let extra = -0.142 * 1.59 - 0.005 * 43.84 + 0.002 * 0.52 - 0.010 * 2.95 + 0.030 * 1.64 + 0.019 * 2.16
            - 0.001 * 4.92
            + 0.005 * 7.69
            + 0.014 * 4.59
            + 0.057 * 0.19
            + 0.029 * 0.12;
        let index = rule.index(&inputs) + extra;
        assert!((index - 2.72).abs() < 0.01, "{index}");
        let listed_only: f64 = 1.450 + 0.170 * 9.19 - 0.337 * 0.04 - 0.125 * 0.02 - 0.142 * 1.59 - 0.005 * 43.84;
        assert!((listed_only - 2.5514).abs() < 1e-3);
    }

    #[test]
    fn best_responder_completes_the_low_threshold() {
        let game = GameSpec::experiment();
        let curve = build_success_curve(&AmbiguityScenario::canonical(Treatment::RR), Alpha::MAXMIN, &game);
        let c = best_response(&UtilityFn::risk_neutral(), &curve, &game, 4.0);
        assert_eq!(c, Money::from_euros(1));
        let ctx = RuleContext::new(BehavioralRule::BeliefBestResponder { alpha: Alpha::MAXMIN, rho_floor: 0.05 }, game)
            .unwrap();
        let s = SubjectInputs { cov: mean_profile(), treatment: Treatment::RR, belief: 4.0, perception_accuracy: 50.0 };
        let mut rng = substream(1, Stream::Contribution, 1);
        assert_eq!(gen_contribution(&ctx, &s, &mut rng), Money::from_euros(1));
    }

    #[test]
    fn fixed_and_selector_rules() {
        let game = GameSpec::experiment();
        let s = SubjectInputs { cov: mean_profile(), treatment: Treatment::AA, belief: 12.0, perception_accuracy: 1.0 };
        let mut rng = substream(1, Stream::Contribution, 1);
        let fixed =
            RuleContext::new(BehavioralRule::AltruistFixed { contribution: Money::from_euros(2) }, game).unwrap();
        assert_eq!(gen_contribution(&fixed, &s, &mut rng), Money::from_euros(2));
        let sel = RuleContext::new(BehavioralRule::EquilibriumSelector { total: Money::from_euros(10) }, game).unwrap();
        assert_eq!(gen_contribution(&sel, &s, &mut rng), Money::from_euros(2));
    }

    #[test]
    fn gaussian_noise_rounds_ties_down() {
        let game = GameSpec::experiment();
        let rule =
            LinearRule { constant: 2.5, noise: ContributionNoise::Gaussian { sd: 0.0 }, ..LinearRule::default() };
        let s = SubjectInputs {
            cov: CovariateProfile::zeros(),
            treatment: Treatment::RR,
            belief: 0.0,
            perception_accuracy: 0.0,
        };
        let ctx = RuleContext::new(BehavioralRule::PaperCalibratedLinear(rule), game).unwrap();
        let mut rng = substream(1, Stream::Contribution, 1);
        assert_eq!(gen_contribution(&ctx, &s, &mut rng), Money::from_euros(2));
    }

    #[test]
    fn rule_json_round_trip() {
        let rules = [
            BehavioralRule::default(),
            BehavioralRule::BeliefBestResponder { alpha: Alpha::MAXMAX, rho_floor: 0.05 },
            BehavioralRule::AltruistFixed { contribution: Money::from_euros(3) },
        ];
        for r in rules {
            let text = serde_json::to_string(&r).unwrap();
            assert_eq!(serde_json::from_str::<BehavioralRule>(&text).unwrap(), r, "{text}");
        }
    }
}
