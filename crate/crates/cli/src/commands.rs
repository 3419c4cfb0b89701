//! One function per subcommand. Each returns console text plus named
//! artifacts; nothing here touches the filesystem except reading inputs.

use std::collections::BTreeMap;

use ambigame::econometrics::{
    ate_report, balance_table, belief_model, contribution_models, interaction_model, mde, pivotal_model, polarization,
    regressions_csv, render_regressions, Table, BALANCE_COVARIATES,
};
use ambigame::money::format_rational;
use ambigame::simulator::run_experiment;
use ambigame::solver::{log_spaced, paper_table, records_csv, robust_table, EquilibriumRecord, FilterMode};
use ambigame::{build_success_curve, hypothesis_report, AmbiguityScenario, GameSpec, Solver, Treatment, UtilityFn};

use crate::config::{sha256_hex, with_header, Mode, RunConfig};
use crate::error::CliError;

/// Console text and `(file name, contents)` artifacts.
#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub files: Vec<(String, String)>,
}

fn game(cfg: &RunConfig) -> Result<GameSpec, CliError> {
    Ok(GameSpec::experiment().with_grid_step(cfg.grid_step)?)
}

fn scenarios(cfg: &RunConfig) -> Vec<AmbiguityScenario> {
    cfg.scenarios.iter().map(|t| AmbiguityScenario::canonical(*t)).collect()
}

pub fn curve(cfg: &RunConfig) -> Result<Output, CliError> {
    let game = game(cfg)?;
    let header = cfg.header("curve", &[]);
    let mut text = String::new();
    let mut csv = String::from("treatment,alpha,from_total,p_exact,p\n");
    for s in scenarios(cfg) {
        let c = build_success_curve(&s, cfg.alpha, &game);
        text.push_str(&format!("{} [{}]: {c}\n", s.label(), cfg.alpha.model_name()));
        for (start, p) in c.breakpoints() {
            csv.push_str(&format!(
                "{},{},{start},{},{:.6}\n",
                s.label(),
                cfg.alpha,
                format_rational(p),
                ambigame::money::prob_to_f64(p)
            ));
        }
    }
    Ok(Output {
        files: vec![
            ("curve.csv".into(), with_header(&header, &csv)),
            ("curve.txt".into(), with_header(&header, &text)),
        ],
        stdout: text,
    })
}

pub fn solve(cfg: &RunConfig) -> Result<Output, CliError> {
    let game = game(cfg)?;
    let header = cfg.header("solve", &[]);
    let mut rows: Vec<(Treatment, EquilibriumRecord)> = Vec::new();
    for s in scenarios(cfg) {
        let solver = Solver::for_scenario(&s, cfg.alpha, cfg.utility.clone(), game)?;
        let records = if cfg.all_profiles {
            solver
                .enumerate_all_profiles(cfg.profile_cap as u128)?
                .into_iter()
                .filter(|r| cfg.mode == Mode::Raw || !r.paper_filter_excluded)
                .collect()
        } else {
            let mode = match cfg.mode {
                Mode::Raw => FilterMode::Raw,
                Mode::Paper => FilterMode::Paper,
            };
            solver.enumerate_symmetric(mode)
        };
        rows.extend(records.into_iter().map(|r| (s.label(), r)));
    }
    let table = paper_table(&scenarios(cfg), cfg.alpha, &cfg.utility, &game)?;
    let mut text = format!(
        "model: {}  utility: {}  grid step: {}\n",
        cfg.alpha.model_name(),
        cfg.utility.describe(),
        cfg.grid_step
    );
    text.push_str("Undominated symmetric equilibrium totals:\n");
    text.push_str(&table.render_text());
    text.push_str(&format!(
        "\nEquilibria ({} mode, {}):\n",
        match cfg.mode {
            Mode::Raw => "raw",
            Mode::Paper => "paper",
        },
        if cfg.all_profiles { "all profiles" } else { "symmetric" }
    ));
    for (t, r) in &rows {
        let cond = r.supporting_condition.map(|c| format!("  [{c}]")).unwrap_or_default();
        text.push_str(&format!("  {t} {} C={} {}{cond}\n", r.profile, r.total, r.kind));
    }
    Ok(Output {
        files: vec![
            ("equilibria.csv".into(), with_header(&header, &records_csv(&rows))),
            ("table.csv".into(), with_header(&header, &table.to_csv())),
            ("solve.txt".into(), with_header(&header, &text)),
        ],
        stdout: text,
    })
}

pub fn sweep(cfg: &RunConfig) -> Result<Output, CliError> {
    let game = game(cfg)?;
    let header = cfg.header("sweep", &[]);
    let sw = &cfg.sweep;
    let sc = scenarios(cfg);
    let table = robust_table(&sc, cfg.alpha, (sw.rho_min, sw.rho_max), sw.samples, &game)?;
    let mut detail = String::from("rho,treatment,totals\n");
    for rho in log_spaced(sw.rho_min, sw.rho_max, sw.samples)? {
        let t = paper_table(&sc, cfg.alpha, &UtilityFn::power(rho)?, &game)?;
        for s in &sc {
            let totals: Vec<String> = t.totals_for(s.label()).iter().map(|m| m.to_string()).collect();
            detail.push_str(&format!("{rho:.6},{},{}\n", s.label(), totals.join(";")));
        }
    }
    let text = format!(
        "model: {}  rho in [{}, {}], {} log-spaced samples\nEquilibrium totals common to every rho:\n{}",
        cfg.alpha.model_name(),
        sw.rho_min,
        sw.rho_max,
        sw.samples,
        table.render_text()
    );
    Ok(Output {
        files: vec![
            ("robust_table.csv".into(), with_header(&header, &table.to_csv())),
            ("sweep_detail.csv".into(), with_header(&header, &detail)),
            ("sweep.txt".into(), with_header(&header, &text)),
        ],
        stdout: text,
    })
}

pub fn hypotheses(cfg: &RunConfig) -> Result<Output, CliError> {
    let header = cfg.header("hypotheses", &[]);
    let text = hypothesis_report(cfg.alpha)?.to_string();
    Ok(Output { files: vec![("hypotheses.txt".into(), with_header(&header, &text))], stdout: text })
}

fn histogram_csv(table: &Table) -> Result<String, CliError> {
    let arms = table.treatments()?;
    let y = table.numeric("contribution")?;
    let mut counts: BTreeMap<(Treatment, i64), usize> = BTreeMap::new();
    let mut totals: BTreeMap<Treatment, usize> = BTreeMap::new();
    for (v, a) in y.iter().zip(&arms) {
        if let (Some(a), true) = (a, v.is_finite()) {
            *counts.entry((*a, (v * 100.0).round() as i64)).or_default() += 1;
            *totals.entry(*a).or_default() += 1;
        }
    }
    let mut out = String::from("treatment,contribution,count,share\n");
    for ((a, cents), n) in counts {
        out.push_str(&format!("{a},{}.{:02},{n},{:.6}\n", cents / 100, cents % 100, n as f64 / totals[&a] as f64));
    }
    Ok(out)
}

pub fn simulate(cfg: &RunConfig) -> Result<Output, CliError> {
    let seed =
        cfg.seed.ok_or_else(|| CliError::Config("simulate needs a seed (--seed or \"seed\" in the config)".into()))?;
    let data = run_experiment(&cfg.simulation, seed)?;
    let header = cfg.header("simulate", &[]);
    let s = data.summary();
    let earnings = data.records.iter().map(|r| r.earnings.as_euros()).sum::<f64>() / data.len().max(1) as f64;
    let text = format!(
        "subjects {}  seed {seed}\nmean contribution {:.3} (sd {:.3})\nshare < 2: {:.3}  = 2: {:.3}  > 2: {:.3}\nmean belief {:.3}\ngroup success rate {:.3}\nmean game earnings {:.3} (game only; side tasks not modelled)\n",
        s.n,
        s.mean_contribution,
        s.sd_contribution,
        s.share_below_2,
        s.share_at_2,
        s.share_above_2,
        s.mean_belief,
        s.success_rate,
        earnings
    );
    let table = Table::from_dataset(&data);
    Ok(Output {
        files: vec![
            ("simulated.csv".into(), data.to_csv(&header)),
            ("contribution_histogram.csv".into(), with_header(&header, &histogram_csv(&table)?)),
            ("simulate.txt".into(), with_header(&header, &text)),
        ],
        stdout: text,
    })
}

fn section<T>(title: &str, result: ambigame::Result<T>, render: impl FnOnce(&T) -> String) -> String {
    match result {
        Ok(v) => format!("== {title} ==\n{}\n", render(&v)),
        Err(e) => format!("== {title} ==\nnot estimated: {e}\n\n"),
    }
}

pub fn analyze(cfg: &RunConfig) -> Result<Output, CliError> {
    let path = cfg
        .analysis
        .input
        .as_ref()
        .ok_or_else(|| CliError::Config("analyze needs --input or analysis.input in the config".into()))?;
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("cannot read {path}: {e}")))?;
    let table = Table::from_csv(bytes.as_slice(), &cfg.analysis.rename)?;
    let header = cfg.header("analyze", &[("input_sha256".to_string(), sha256_hex(&bytes))]);
    let seed = cfg.seed.unwrap_or(0);
    let mut files = Vec::new();
    let mut text = format!("observations: {}\n\n", table.n_rows());

    let covs: Vec<&str> = BALANCE_COVARIATES.iter().copied().filter(|c| table.has_column(c)).collect();
    let balance = balance_table(&table, &covs, Treatment::RR);
    if let Ok(b) = &balance {
        files.push(("balance.csv".to_string(), with_header(&header, &b.to_csv())));
    }
    text.push_str(&section("Balance across treatments (Welch p-values vs RR)", balance, |b| b.render_text()));

    let ate = ate_report(&table)?;
    text.push_str("== Treatment effects on contributions (vs RR) ==\n");
    for (t, b, s, p) in &ate.effects {
        text.push_str(&format!("{t}: {b:.3}{} ({s:.3})  p = {p:.3}\n", ambigame::econometrics::stars(*p)));
    }
    text.push('\n');

    let models = contribution_models(&table);
    if let Ok(m) = &models {
        let titles: Vec<String> = (1..=m.len()).map(|i| format!("({i})")).collect();
        files.push(("contribution_models.csv".to_string(), with_header(&header, &regressions_csv(m, &titles))));
    }
    text.push_str(&section("Contribution regressions", models, |m| {
        let titles: Vec<String> = (1..=m.len()).map(|i| format!("({i})")).collect();
        render_regressions(m, &titles)
    }));

    let inter: ambigame::Result<Vec<_>> =
        ["risk_aversion", "ambiguity_aversion"].iter().map(|m| interaction_model(&table, m)).collect();
    if let Ok(m) = &inter {
        let titles = vec!["risk".to_string(), "ambiguity".to_string()];
        files.push(("interaction_models.csv".to_string(), with_header(&header, &regressions_csv(m, &titles))));
    }
    text.push_str(&section("Interaction models", inter, |m| {
        render_regressions(m, &["risk".to_string(), "ambiguity".to_string()])
    }));

    let beliefs = belief_model(&table);
    if let Ok(m) = &beliefs {
        files.push((
            "belief_model.csv".to_string(),
            with_header(&header, &regressions_csv(std::slice::from_ref(m), &["beliefs".to_string()])),
        ));
    }
    text.push_str(&section("Belief regression", beliefs, |m| {
        render_regressions(std::slice::from_ref(m), &["beliefs".to_string()])
    }));

    let pivotal = pivotal_model(&table);
    if let Ok(m) = &pivotal {
        files.push((
            "pivotal_model.csv".to_string(),
            with_header(&header, &regressions_csv(std::slice::from_ref(m), &["pivotal".to_string()])),
        ));
    }
    text.push_str(&section("Strategic uncertainty (pivotal) model", pivotal, |m| {
        render_regressions(std::slice::from_ref(m), &["pivotal".to_string()])
    }));

    let mut pol_csv =
        String::from("arm,baseline,var_arm,var_baseline,variance_ratio,share_zero_arm,share_max_arm,p_value\n");
    let mut pol_text = String::new();
    for arm in [Treatment::AR, Treatment::RA, Treatment::AA] {
        match polarization(&table, arm, Treatment::RR, cfg.analysis.max_contribution, cfg.analysis.permutations, seed) {
            Ok(r) => {
                pol_text.push_str(&format!(
                    "{arm} vs RR: variance {:.3} vs {:.3} (ratio {:.3}), at 0: {:.3}, at max: {:.3}, permutation p = {:.4}\n",
                    r.first.variance, r.second.variance, r.variance_ratio, r.first.share_zero, r.first.share_max, r.p_value
                ));
                pol_csv.push_str(&format!(
                    "{arm},RR,{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                    r.first.variance,
                    r.second.variance,
                    r.variance_ratio,
                    r.first.share_zero,
                    r.first.share_max,
                    r.p_value
                ));
            }
            Err(e) => pol_text.push_str(&format!("{arm} vs RR: not computed: {e}\n")),
        }
    }
    text.push_str(&format!("== Dispersion (polarization) ==\n{pol_text}\n"));
    files.push(("polarization.csv".to_string(), with_header(&header, &pol_csv)));
    files.push(("contribution_histogram.csv".to_string(), with_header(&header, &histogram_csv(&table)?)));
    files.push(("analysis.txt".to_string(), with_header(&header, &text)));
    Ok(Output { stdout: text, files })
}

pub fn power(cfg: &RunConfig) -> Result<Output, CliError> {
    let p = &cfg.power;
    let mut report = mde(p.arms, p.per_arm(), p.sd, p.level, p.power)?;
    if p.mc_replications > 0 {
        report = report.with_monte_carlo(p.mc_replications, cfg.seed.unwrap_or(0));
    }
    let header = cfg.header("power", &[]);
    let text = report.render_text();
    let csv = format!(
        "arms,n_per_arm,sd,level,power,mde,mc_rejection_rate,mc_replications\n{},{},{},{},{},{:.6},{},{}\n",
        report.arms,
        report.n_per_arm,
        report.outcome_sd,
        report.alpha_level,
        report.power_target,
        report.mde,
        report.mc_rejection_rate.map(|r| format!("{r:.6}")).unwrap_or_default(),
        report.mc_replications.map(|r| r.to_string()).unwrap_or_default()
    );
    Ok(Output {
        files: vec![
            ("power.csv".into(), with_header(&header, &csv)),
            ("power.txt".into(), with_header(&header, &text)),
        ],
        stdout: text,
    })
}
