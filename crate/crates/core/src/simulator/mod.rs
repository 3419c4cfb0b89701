//! Synthetic experiment data: assignment, covariates, beliefs,
//! contributions and realized payoffs.
//!
//! Every subject and group draws from its own seeded substream, so output is
//! identical for a given seed regardless of thread count.

mod assign;
mod covariates;
mod payoffs;
pub mod rng;
mod rules;

use std::collections::BTreeMap;
use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use assign::{randomize, Assignment, RemainderPolicy};
pub use covariates::{
    synth_covariates, CensoredNormal, CovariateModel, CovariateProfile, DiscreteScore, Moments, COVARIATE_NAMES,
    RISK_AMBIGUITY_CORRELATION, SUMMARY,
};
pub use payoffs::{
    draw_outcome, draw_threshold, resolve_probability, success_probability, GroupOutcome, ResolutionPolicy,
};
pub use rules::{
    best_response, gen_belief, gen_contribution, is_pivotal, ArmShift, BehavioralRule, BeliefModel, ContributionNoise,
    LinearRule, RuleContext, SubjectInputs, MAX_BELIEF,
};

use crate::error::{Error, Result};
use crate::game::{AmbiguityScenario, GameSpec, Treatment};
use crate::money::Money;
use rand::Rng;
use rng::{substream, Stream};

/// One simulated (or loaded) participant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubjectRecord {
    pub subject_id: u32,
    pub treatment: Treatment,
    pub group_id: u32,
    pub covariates: CovariateProfile,
    pub belief: f64,
    pub perception_accuracy: f64,
    pub pivotal: bool,
    pub contribution: Money,
    pub group_total: Money,
    pub threshold_drawn: Money,
    pub success: bool,
    pub earnings: Money,
}

/// Simulation settings; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_subjects: usize,
    pub arms: Vec<Treatment>,
    pub group_size: usize,
    pub endowment: Money,
    pub grid_step: Money,
    pub remainder: RemainderPolicy,
    pub belief: BeliefModel,
    pub rule: BehavioralRule,
    pub resolution: ResolutionPolicy,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_subjects: 1500,
            arms: Treatment::ALL.to_vec(),
            group_size: 5,
            endowment: Money::from_euros(5),
            grid_step: Money::from_euros(1),
            remainder: RemainderPolicy::Reject,
            belief: BeliefModel::default(),
            rule: BehavioralRule::default(),
            resolution: ResolutionPolicy::Uniform,
        }
    }
}

impl SimConfig {
    pub fn game(&self) -> Result<GameSpec> {
        GameSpec::new(self.group_size, self.endowment, self.grid_step)
    }

    pub fn validate(&self) -> Result<()> {
        let game = self.game()?;
        self.belief.validate()?;
        self.rule.validate(&game)?;
        if self.n_subjects == 0 {
            return Err(Error::invalid("n_subjects must be at least 1"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Draws threshold and loss event per group and fills the group columns.
pub fn realize_payoffs(records: &mut [SubjectRecord], game: &GameSpec, policy: ResolutionPolicy, seed: u64) {
    let mut groups: BTreeMap<u32, (Treatment, Money)> = BTreeMap::new();
    for r in records.iter() {
        let e = groups.entry(r.group_id).or_insert((r.treatment, Money::ZERO));
        e.1 = e.1 + r.contribution;
    }
    let outcomes: BTreeMap<u32, GroupOutcome> = groups
        .iter()
        .map(|(&g, &(t, total))| {
            let mut rng = substream(seed, Stream::Payoff, g as u64);
            (g, draw_outcome(&AmbiguityScenario::canonical(t), total, policy, &mut rng))
        })
        .collect();
    for r in records.iter_mut() {
        let o = outcomes[&r.group_id];
        r.group_total = groups[&r.group_id].1;
        r.threshold_drawn = o.threshold;
        r.success = o.success;
        r.earnings = if o.success { game.endowment() - r.contribution } else { Money::ZERO };
    }
}

/// Full pipeline for one seed.
pub fn run_experiment(config: &SimConfig, seed: u64) -> Result<Dataset> {
    config.validate()?;
    let game = config.game()?;
    let assignment = randomize(config.n_subjects, &config.arms, config.group_size, seed, config.remainder)?;
    let covs = synth_covariates(config.n_subjects, seed);
    let ctx = RuleContext::new(config.rule.clone(), game)?;
    let mut records: Vec<SubjectRecord> = assignment
        .par_iter()
        .zip(covs.par_iter())
        .map(|(a, cov)| {
            let id = a.subject_id as u64;
            let mut brng = substream(seed, Stream::Belief, id);
            let belief = gen_belief(cov, a.treatment, &config.belief, &mut brng);
            let perception_accuracy = 100.0 * brng.random::<f64>();
            let inputs = SubjectInputs { cov: *cov, treatment: a.treatment, belief, perception_accuracy };
            let contribution = gen_contribution(&ctx, &inputs, &mut substream(seed, Stream::Contribution, id));
            SubjectRecord {
                subject_id: a.subject_id,
                treatment: a.treatment,
                group_id: a.group_id,
                covariates: *cov,
                belief,
                perception_accuracy,
                pivotal: is_pivotal(belief),
                contribution,
                group_total: Money::ZERO,
                threshold_drawn: Money::ZERO,
                success: false,
                earnings: Money::ZERO,
            }
        })
        .collect();
    realize_payoffs(&mut records, &game, config.resolution, seed);
    Ok(Dataset { records })
}

/// CSV column names, in order.
pub fn csv_columns() -> Vec<&'static str> {
    let mut cols = vec!["subject_id", "treatment", "group_id"];
    cols.extend(COVARIATE_NAMES);
    cols.extend([
        "belief",
        "perception_accuracy",
        "pivotal",
        "contribution",
        "group_total",
        "threshold_drawn",
        "success",
        "earnings",
    ]);
    cols
}

/// Contribution moments used for calibration checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContributionSummary {
    pub n: usize,
    pub mean_contribution: f64,
    pub sd_contribution: f64,
    pub share_below_2: f64,
    pub share_at_2: f64,
    pub share_above_2: f64,
    pub mean_belief: f64,
    pub success_rate: f64,
}

/// A table of subject records.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub records: Vec<SubjectRecord>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn summary(&self) -> ContributionSummary {
        let n = self.records.len().max(1) as f64;
        let two = Money::from_euros(2);
        let c: Vec<f64> = self.records.iter().map(|r| r.contribution.as_euros()).collect();
        let mean = c.iter().sum::<f64>() / n;
        let var = c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let share = |f: &dyn Fn(Money) -> bool| self.records.iter().filter(|r| f(r.contribution)).count() as f64 / n;
        ContributionSummary {
            n: self.records.len(),
            mean_contribution: mean,
            sd_contribution: var.sqrt(),
            share_below_2: share(&|m| m < two),
            share_at_2: share(&|m| m == two),
            share_above_2: share(&|m| m > two),
            mean_belief: self.records.iter().map(|r| r.belief).sum::<f64>() / n,
            success_rate: self.records.iter().filter(|r| r.success).count() as f64 / n,
        }
    }

    /// CSV text; `header_lines` are written first, each prefixed by `# `.
    pub fn to_csv(&self, header_lines: &[String]) -> String {
        let mut out = String::new();
        for line in header_lines {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&csv_columns().join(","));
        out.push('\n');
        for r in &self.records {
            let c = &r.covariates;
            let fields = [
                r.subject_id.to_string(),
                r.treatment.to_string(),
                r.group_id.to_string(),
                c.age.to_string(),
                c.female.to_string(),
                c.education.to_string(),
                c.patience.to_string(),
                c.crt.to_string(),
                c.math_ability.to_string(),
                c.altruism.to_string(),
                c.envy.to_string(),
                c.ideology.to_string(),
                c.gravity.to_string(),
                c.number_actions.to_string(),
                c.unemployed.to_string(),
                c.social_transfer.to_string(),
                format!("{:.6}", c.risk_aversion),
                format!("{:.6}", c.ambiguity_aversion),
                format!("{:.6}", r.belief),
                format!("{:.6}", r.perception_accuracy),
                u8::from(r.pivotal).to_string(),
                r.contribution.to_string(),
                r.group_total.to_string(),
                r.threshold_drawn.to_string(),
                u8::from(r.success).to_string(),
                r.earnings.to_string(),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    /// Reads the CSV schema written by [`Dataset::to_csv`]; `#` lines are
    /// skipped and columns are matched by name.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let cols = csv_columns();
        let mut pos = Vec::with_capacity(cols.len());
        for name in &cols {
            let i = headers.iter().position(|h| h == *name).ok_or_else(|| Error::MissingColumn(name.to_string()))?;
            pos.push(i);
        }
        let mut records = Vec::new();
        for (line, row) in rdr.records().enumerate() {
            let row = row?;
            let get = |k: usize| row.get(pos[k]).unwrap_or("");
            let ctx = |k: usize| format!("row {}: column `{}` = `{}`", line + 1, cols[k], get(k));
            let int = |k: usize| -> Result<u32> { get(k).parse().map_err(|_| Error::invalid(ctx(k))) };
            let small = |k: usize| -> Result<u8> { get(k).parse().map_err(|_| Error::invalid(ctx(k))) };
            let real = |k: usize| -> Result<f64> { get(k).parse().map_err(|_| Error::invalid(ctx(k))) };
            let money = |k: usize| -> Result<Money> { get(k).parse().map_err(|_| Error::invalid(ctx(k))) };
            let flag = |k: usize| -> Result<bool> {
                match get(k) {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    _ => Err(Error::invalid(ctx(k))),
                }
            };
            let covariates = CovariateProfile {
                age: int(3)?,
                female: small(4)?,
                education: small(5)?,
                patience: small(6)?,
                crt: small(7)?,
                math_ability: small(8)?,
                altruism: small(9)?,
                envy: small(10)?,
                ideology: small(11)?,
                gravity: small(12)?,
                number_actions: small(13)?,
                unemployed: small(14)?,
                social_transfer: small(15)?,
                risk_aversion: real(16)?,
                ambiguity_aversion: real(17)?,
            };
            records.push(SubjectRecord {
                subject_id: int(0)?,
                treatment: get(1).parse()?,
                group_id: int(2)?,
                covariates,
                belief: real(18)?,
                perception_accuracy: real(19)?,
                pivotal: flag(20)?,
                contribution: money(21)?,
                group_total: money(22)?,
                threshold_drawn: money(23)?,
                success: flag(24)?,
                earnings: money(25)?,
            });
        }
        Ok(Dataset { records })
    }
}
