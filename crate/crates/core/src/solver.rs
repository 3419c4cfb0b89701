//! Pure-strategy equilibrium enumeration on the contribution grid.
//!
//! Payoffs are compared with a relative tie tolerance of `1e-12`: products
//! of exact rationals with `f64` utilities pick up rounding in the last bit,
//! and a relative band keeps verdicts invariant to rescaling `u`.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{build_success_curve, Alpha, AmbiguityScenario, GameSpec, SuccessCurve, Treatment};
use crate::money::Money;
use crate::preferences::{derive_condition, power_threshold, ConditionOutcome, UtilityFn};

pub const TIE_TOLERANCE: f64 = 1e-12;

/// Default cap on exhaustive enumeration: 6^5 profiles.
pub const DEFAULT_PROFILE_CAP: u128 = 7776;

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

pub(crate) fn strictly_greater(a: f64, b: f64) -> bool {
    a > b && !ties(a, b)
}

/// One contribution per player.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Profile(Vec<Money>);

impl Profile {
    pub fn new(contributions: Vec<Money>, game: &GameSpec) -> Result<Self> {
        if contributions.len() != game.n_players() {
            return Err(Error::invalid(format!(
                "profile has {} entries, game has {} players",
                contributions.len(),
                game.n_players()
            )));
        }
        if let Some(c) = contributions.iter().find(|c| !game.is_on_grid(**c)) {
            return Err(Error::invalid(format!("contribution {c} is off the grid")));
        }
        Ok(Profile(contributions))
    }

    pub fn symmetric(c: Money, game: &GameSpec) -> Result<Self> {
        Profile::new(vec![c; game.n_players()], game)
    }

    pub fn contributions(&self) -> &[Money] {
        &self.0
    }

    pub fn total(&self) -> Money {
        self.0.iter().copied().sum()
    }

    pub fn is_symmetric(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EquilibriumKind {
    /// Every unilateral deviation is strictly worse.
    Strict,
    /// Some player has a different best reply that ties.
    Weak,
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EquilibriumKind::Strict => "strict",
            EquilibriumKind::Weak => "weak",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumRecord {
    pub profile: Profile,
    pub total: Money,
    pub kind: EquilibriumKind,
    pub zero_payoff: bool,
    /// Some player's strategy is weakly dominated over all opponent totals.
    pub weakly_dominated_strategy: bool,
    /// Fails the selection used for the published tables (candidate total,
    /// strict, non-zero payoff).
    pub paper_filter_excluded: bool,
    pub supporting_condition: Option<ConditionOutcome>,
}

/// Best unilateral deviation for one player.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub contribution: Money,
    /// Payoff gain over the current strategy; `<= 0` means none is profitable.
    pub gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    /// Every symmetric grid equilibrium.
    Raw,
    /// Candidate totals only, strict, zero-payoff equilibria removed.
    Paper,
}

impl std::str::FromStr for FilterMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(FilterMode::Raw),
            "paper" => Ok(FilterMode::Paper),
            _ => Err(Error::invalid(format!("unknown mode `{s}` (raw or paper)"))),
        }
    }
}

/// Precomputed payoff tables for one (curve, utility, game).
#[derive(Debug, Clone)]
pub struct Solver {
    game: GameSpec,
    curve: SuccessCurve,
    utility: UtilityFn,
    candidate_totals: Vec<Money>,
    /// `u(endowment - k * step)` by grid index `k`.
    kept_utility: Vec<f64>,
    /// `p(t * step)` by total index `t`.
    success: Vec<f64>,
    dominated: Vec<bool>,
}

impl Solver {
    pub fn for_scenario(
        scenario: &AmbiguityScenario,
        alpha: Alpha,
        utility: UtilityFn,
        game: GameSpec,
    ) -> Result<Self> {
        let curve = build_success_curve(scenario, alpha, &game);
        let candidates = scenario.canonical_totals().into_iter().filter(|t| *t <= game.max_total()).collect();
        Solver::from_curve(curve, utility, game, candidates)
    }

    pub fn from_curve(
        curve: SuccessCurve,
        utility: UtilityFn,
        game: GameSpec,
        candidate_totals: Vec<Money>,
    ) -> Result<Self> {
        utility.validate()?;
        if !utility.covers(game.endowment()) {
            return Err(Error::invalid(format!("utility is not defined up to {}", game.endowment())));
        }
        if curve.domain_bound() < game.max_total() {
            return Err(Error::invalid("curve domain is shorter than the game's total range"));
        }
        let g = game.grid_len();
        let step = game.grid_step();
        let kept_utility = (0..g).map(|k| utility.value(game.endowment() - step * k as u64)).collect();
        let n_totals = game.n_players() * (g - 1) + 1;
        let success = (0..n_totals).map(|t| curve.eval_f64(step * t as u64)).collect::<Result<Vec<_>>>()?;
        let mut solver =
            Solver { game, curve, utility, candidate_totals, kept_utility, success, dominated: Vec::new() };
        solver.dominated = (0..g).map(|s| solver.textbook_dominated(s)).collect();
        Ok(solver)
    }

    pub fn game(&self) -> &GameSpec {
        &self.game
    }

    pub fn curve(&self) -> &SuccessCurve {
        &self.curve
    }

    pub fn utility(&self) -> &UtilityFn {
        &self.utility
    }

    pub fn candidate_totals(&self) -> &[Money] {
        &self.candidate_totals
    }

    fn payoff_idx(&self, own: usize, others: usize) -> f64 {
        self.kept_utility[own] * self.success[own + others]
    }

    fn indices(&self, profile: &Profile) -> Vec<usize> {
        let step = self.game.grid_step();
        profile.contributions().iter().map(|c| c.steps_of(step)).collect()
    }

    /// Payoff of a player contributing `own` while the others give `others_total`.
    pub fn payoff(&self, own: Money, others_total: Money) -> f64 {
        let step = self.game.grid_step();
        self.payoff_idx(own.steps_of(step), others_total.steps_of(step))
    }

    /// Strategy `s` is weakly dominated by some `s'` over every reachable
    /// opponent total, strictly for at least one.
    fn textbook_dominated(&self, s: usize) -> bool {
        let g = self.game.grid_len();
        let max_others = (self.game.n_players() - 1) * (g - 1);
        (0..g).filter(|&alt| alt != s).any(|alt| {
            let mut strict = false;
            for o in 0..=max_others {
                let (a, b) = (self.payoff_idx(alt, o), self.payoff_idx(s, o));
                if strictly_greater(b, a) {
                    return false;
                }
                strict |= strictly_greater(a, b);
            }
            strict
        })
    }

    pub fn is_weakly_dominated(&self, c: Money) -> bool {
        self.dominated[c.steps_of(self.game.grid_step())]
    }

    /// Best reply of `player` against the rest of `profile`. When no grid
    /// point beats the current contribution the current one is returned with
    /// gain zero.
    pub fn best_deviation(&self, profile: &Profile, player: usize) -> Result<Deviation> {
        let idx = self.indices(profile);
        if player >= idx.len() {
            return Err(Error::invalid(format!("player {player} out of range")));
        }
        let (c, g) = self.best_deviation_idx(&idx, player);
        Ok(Deviation { contribution: self.game.contribution(c), gain: g })
    }

    fn best_deviation_idx(&self, idx: &[usize], player: usize) -> (usize, f64) {
        let own = idx[player];
        let others: usize = idx.iter().sum::<usize>() - own;
        let current = self.payoff_idx(own, others);
        let mut best = (own, current);
        for alt in 0..self.game.grid_len() {
            let v = self.payoff_idx(alt, others);
            if strictly_greater(v, best.1) {
                best = (alt, v);
            }
        }
        if best.0 == own {
            (own, 0.0)
        } else {
            (best.0, best.1 - current)
        }
    }

    /// `None` when some player has a profitable deviation.
    pub fn classify_profile(&self, profile: &Profile) -> Option<EquilibriumRecord> {
        let idx = self.indices(profile);
        self.classify_idx(&idx, profile.clone())
    }

    fn classify_idx(&self, idx: &[usize], profile: Profile) -> Option<EquilibriumRecord> {
        let sum: usize = idx.iter().sum();
        let mut weak = false;
        let mut zero_payoff = true;
        for &own in idx {
            let others = sum - own;
            let current = self.payoff_idx(own, others);
            if current != 0.0 {
                zero_payoff = false;
            }
            for alt in (0..self.game.grid_len()).filter(|&a| a != own) {
                let v = self.payoff_idx(alt, others);
                if strictly_greater(v, current) {
                    return None;
                }
                weak |= ties(v, current);
            }
        }
        let total = profile.total();
        let kind = if weak { EquilibriumKind::Weak } else { EquilibriumKind::Strict };
        let candidate = self.candidate_totals.contains(&total);
        let supporting_condition = if candidate && profile.is_symmetric() {
            derive_condition(&self.curve, &self.game, total).ok()
        } else {
            None
        };
        Some(EquilibriumRecord {
            weakly_dominated_strategy: idx.iter().any(|&s| self.dominated[s]),
            paper_filter_excluded: !(candidate && kind == EquilibriumKind::Strict && !zero_payoff),
            profile,
            total,
            kind,
            zero_payoff,
            supporting_condition,
        })
    }

    /// Symmetric equilibria sorted by total.
    pub fn enumerate_symmetric(&self, mode: FilterMode) -> Vec<EquilibriumRecord> {
        let n = self.game.n_players();
        self.game
            .contributions()
            .enumerate()
            .filter_map(|(k, c)| self.classify_idx(&vec![k; n], Profile(vec![c; n])))
            .filter(|r| mode == FilterMode::Raw || !r.paper_filter_excluded)
            .collect()
    }

    /// Every pure-strategy equilibrium on the grid, sorted by total then
    /// profile. Fails when the profile space exceeds `cap`.
    pub fn enumerate_all_profiles(&self, cap: u128) -> Result<Vec<EquilibriumRecord>> {
        let g = self.game.grid_len() as u128;
        let n = self.game.n_players() as u32;
        let required = g.checked_pow(n).ok_or(Error::CapExceeded { required: u128::MAX, cap })?;
        if required > cap {
            return Err(Error::CapExceeded { required, cap });
        }
        let g = g as usize;
        let mut records: Vec<EquilibriumRecord> = (0..required as usize)
            .into_par_iter()
            .filter_map(|code| {
                let mut rest = code;
                let idx: Vec<usize> = (0..n)
                    .map(|_| {
                        let d = rest % g;
                        rest /= g;
                        d
                    })
                    .collect();
                let profile = Profile(idx.iter().map(|&k| self.game.contribution(k)).collect());
                self.classify_idx(&idx, profile)
            })
            .collect();
        records.sort_by(|a, b| a.total.cmp(&b.total).then_with(|| a.profile.cmp(&b.profile)));
        Ok(records)
    }

    /// Totals of the paper-mode symmetric equilibria.
    pub fn paper_totals(&self) -> BTreeSet<Money> {
        self.enumerate_symmetric(FilterMode::Paper).into_iter().map(|r| r.total).collect()
    }
}

/// Rows are candidate totals, columns treatments, cells "Y" or blank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquilibriumTable {
    pub rows: Vec<Money>,
    pub columns: Vec<Treatment>,
    pub cells: Vec<Vec<bool>>,
}

impl EquilibriumTable {
    pub fn from_sets(rows: Vec<Money>, sets: Vec<(Treatment, BTreeSet<Money>)>) -> Self {
        let columns = sets.iter().map(|(t, _)| *t).collect();
        let cells = rows.iter().map(|r| sets.iter().map(|(_, s)| s.contains(r)).collect()).collect();
        EquilibriumTable { rows, columns, cells }
    }

    pub fn totals_for(&self, t: Treatment) -> BTreeSet<Money> {
        let Some(j) = self.columns.iter().position(|c| *c == t) else {
            return BTreeSet::new();
        };
        self.rows.iter().zip(&self.cells).filter(|(_, row)| row[j]).map(|(r, _)| *r).collect()
    }

    pub fn render_text(&self) -> String {
        let head = "Equilibrium/Treatment";
        let width = head.len();
        let mut out = format!("{head:<width$}");
        for c in &self.columns {
            out.push_str(&format!("  {c:<2}"));
        }
        out.push('\n');
        for (r, row) in self.rows.iter().zip(&self.cells) {
            let mut line = format!("{:<width$}", format!("C={}", r.cents() / 100));
            for y in row {
                line.push_str(if *y { "  Y " } else { "    " });
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("total");
        for c in &self.columns {
            out.push(',');
            out.push_str(c.as_str());
        }
        out.push('\n');
        for (r, row) in self.rows.iter().zip(&self.cells) {
            out.push_str(&r.to_string());
            for y in row {
                out.push(',');
                out.push_str(if *y { "Y" } else { "" });
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for EquilibriumTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_text())
    }
}

fn union_rows(scenarios: &[AmbiguityScenario], game: &GameSpec) -> Vec<Money> {
    let rows: BTreeSet<Money> =
        scenarios.iter().flat_map(|s| s.canonical_totals()).filter(|t| *t <= game.max_total()).collect();
    rows.into_iter().collect()
}

/// Paper-mode table for one utility.
pub fn paper_table(
    scenarios: &[AmbiguityScenario],
    alpha: Alpha,
    utility: &UtilityFn,
    game: &GameSpec,
) -> Result<EquilibriumTable> {
    let sets = scenarios
        .iter()
        .map(|s| Ok((s.label(), Solver::for_scenario(s, alpha, utility.clone(), *game)?.paper_totals())))
        .collect::<Result<Vec<_>>>()?;
    Ok(EquilibriumTable::from_sets(union_rows(scenarios, game), sets))
}

/// `samples` log-spaced exponents over `[lo, hi]`, endpoints included.
pub fn log_spaced(lo: f64, hi: f64, samples: usize) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(Error::invalid("rho sweep needs at least one sample"));
    }
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::invalid(format!("invalid rho range [{lo}, {hi}]")));
    }
    if samples == 1 || lo == hi {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..samples)
        .map(|i| if i + 1 == samples { hi } else { (a + (b - a) * i as f64 / (samples - 1) as f64).exp() })
        .collect())
}

/// Default power-utility sweep: 100 log-spaced exponents on `[0.2, 10]`.
pub const DEFAULT_RHO_RANGE: (f64, f64) = (0.2, 10.0);
pub const DEFAULT_RHO_SAMPLES: usize = 100;

/// A cell is "Y" when the total is a paper-mode equilibrium for every
/// sampled power utility.
pub fn robust_table(
    scenarios: &[AmbiguityScenario],
    alpha: Alpha,
    rho_range: (f64, f64),
    samples: usize,
    game: &GameSpec,
) -> Result<EquilibriumTable> {
    let rhos = log_spaced(rho_range.0, rho_range.1, samples)?;
    let sets = scenarios
        .iter()
        .map(|s| {
            let per_rho = rhos
                .par_iter()
                .map(|&rho| Ok(Solver::for_scenario(s, alpha, UtilityFn::power(rho)?, *game)?.paper_totals()))
                .collect::<Result<Vec<_>>>()?;
            let common = per_rho.into_iter().reduce(|a, b| a.intersection(&b).copied().collect()).unwrap_or_default();
            Ok((s.label(), common))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EquilibriumTable::from_sets(union_rows(scenarios, game), sets))
}

pub fn canonical_scenarios() -> Vec<AmbiguityScenario> {
    Treatment::TABLE_ORDER.iter().map(|t| AmbiguityScenario::canonical(*t)).collect()
}

/// CSV rows `treatment,total,kind,zero_payoff,dominated_textbook,condition,rho_threshold`.
pub fn records_csv(rows: &[(Treatment, EquilibriumRecord)]) -> String {
    let mut out = String::from("treatment,total,kind,zero_payoff,dominated_textbook,condition,rho_threshold\n");
    for (t, r) in rows {
        let condition = r.supporting_condition.map(|c| c.to_string()).unwrap_or_default();
        let rho = r.supporting_condition.and_then(|c| c.rho_threshold()).map(|x| format!("{x:.6}")).unwrap_or_default();
        out.push_str(&format!(
            "{t},{},{},{},{},\"{}\",{}\n",
            r.total, r.kind, r.zero_payoff, r.weakly_dominated_strategy, condition, rho
        ));
    }
    out
}

/// Per-treatment summary used by [`hypothesis_report`].
#[derive(Debug, Clone, Serialize)]
pub struct TreatmentSummary {
    pub treatment: Treatment,
    pub risk_neutral_totals: Vec<Money>,
    pub robust_totals: Vec<Money>,
    pub conditions: Vec<(Money, ConditionOutcome, Option<f64>)>,
}

/// Equilibrium-level reading of the three hypotheses for one α.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub alpha: String,
    pub model: String,
    pub summaries: Vec<TreatmentSummary>,
    /// Every robust AA total exceeds every robust total of the other arms.
    pub h1_aa_highest: bool,
    /// Every robust AR total exceeds every robust RR and RA total.
    pub h2_ar_above_rr_ra: bool,
    /// RA's risk-neutral set keeps both extremes and drops the interior
    /// total that RR supports.
    pub h3_ra_polarized: bool,
    /// Some ambiguity arm has a higher maximum robust total than RR.
    pub ambiguity_raises_contributions: bool,
}

fn all_above(high: &[Money], low: &[Money]) -> bool {
    match (high.iter().min(), low.iter().max()) {
        (Some(h), Some(l)) => h > l,
        (Some(_), None) => true,
        _ => false,
    }
}

pub fn hypothesis_report(alpha: Alpha) -> Result<HypothesisReport> {
    let game = GameSpec::experiment();
    let scenarios = canonical_scenarios();
    let neutral = paper_table(&scenarios, alpha, &UtilityFn::risk_neutral(), &game)?;
    let robust = robust_table(&scenarios, alpha, DEFAULT_RHO_RANGE, DEFAULT_RHO_SAMPLES, &game)?;
    let summaries = scenarios
        .iter()
        .map(|s| {
            let curve = build_success_curve(s, alpha, &game);
            let conditions = s
                .canonical_totals()
                .into_iter()
                .map(|t| {
                    let c = derive_condition(&curve, &game, t)?;
                    let rho = c.condition().map(power_threshold).transpose()?;
                    Ok((t, c, rho))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TreatmentSummary {
                treatment: s.label(),
                risk_neutral_totals: neutral.totals_for(s.label()).into_iter().collect(),
                robust_totals: robust.totals_for(s.label()).into_iter().collect(),
                conditions,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let robust_of = |t: Treatment| -> Vec<Money> {
        summaries.iter().find(|s| s.treatment == t).map(|s| s.robust_totals.clone()).unwrap_or_default()
    };
    let neutral_of = |t: Treatment| -> BTreeSet<Money> { neutral.totals_for(t) };
    let aa = robust_of(Treatment::AA);
    let h1 = [Treatment::RR, Treatment::AR, Treatment::RA].iter().all(|t| all_above(&aa, &robust_of(*t)));
    let ar = robust_of(Treatment::AR);
    let h2 = all_above(&ar, &robust_of(Treatment::RR)) && all_above(&ar, &robust_of(Treatment::RA));
    let ra = neutral_of(Treatment::RA);
    let rr = neutral_of(Treatment::RR);
    let (lowest, highest) = (Money::ZERO, Money::from_euros(10));
    let h3 = ra.contains(&lowest)
        && ra.contains(&highest)
        && rr.iter().any(|t| *t > lowest && *t < highest && !ra.contains(t));
    let rr_max = robust_of(Treatment::RR).into_iter().max();
    let raises = [Treatment::AR, Treatment::RA, Treatment::AA].iter().any(|t| robust_of(*t).into_iter().max() > rr_max);
    Ok(HypothesisReport {
        alpha: alpha.to_string(),
        model: alpha.model_name(),
        summaries,
        h1_aa_highest: h1,
        h2_ar_above_rr_ra: h2,
        h3_ra_polarized: h3,
        ambiguity_raises_contributions: raises,
    })
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[Money]| -> String {
            let s: Vec<String> = v.iter().map(|m| (m.cents() / 100).to_string()).collect();
            format!("{{{}}}", s.join(","))
        };
        writeln!(f, "model: {} (alpha = {})", self.model, self.alpha)?;
        for s in &self.summaries {
            writeln!(
                f,
                "{}: risk-neutral {}  robust {}",
                s.treatment,
                list(&s.risk_neutral_totals),
                list(&s.robust_totals)
            )?;
            for (t, c, rho) in &s.conditions {
                let rho = rho.map(|r| format!("  rho* = {r:.4}")).unwrap_or_default();
                writeln!(f, "    C={}: {c}{rho}", t.cents() / 100)?;
            }
        }
        let yn = |b: bool| if b { "supported" } else { "not supported" };
        writeln!(f, "H1 (AA above all others): {}", yn(self.h1_aa_highest))?;
        writeln!(f, "H2 (AR above RR and RA): {}", yn(self.h2_ar_above_rr_ra))?;
        writeln!(f, "H3 (RA more polarized than RR): {}", yn(self.h3_ra_polarized))?;
        writeln!(f, "ambiguity raises equilibrium contributions: {}", yn(self.ambiguity_raises_contributions))
    }
}
