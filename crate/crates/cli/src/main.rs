mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use ambigame::simulator::ResolutionPolicy;
use ambigame::{Alpha, Money, Treatment, UtilityFn};
use clap::{Parser, Subcommand, ValueEnum};

use config::{Mode, RunConfig};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "ambigame", version, about = "Threshold public-goods games under risk and ambiguity")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON config file, or an artifact written by this tool (its embedded config is reused).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Weight on the worst case: maxmin, maxmax, or a number in [0, 1].
    #[arg(long, global = true, value_parser = parse_alpha)]
    alpha: Option<Alpha>,

    /// Power utility exponent, u(x) = x^rho.
    #[arg(long, global = true)]
    rho: Option<f64>,

    /// Contribution grid step in euros.
    #[arg(long, global = true, value_parser = parse_money)]
    grid_step: Option<Money>,

    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,

    /// How ambiguity is resolved when paying simulated groups.
    #[arg(long, global = true, value_enum)]
    resolution: Option<Resolution>,

    /// Directory for artifacts; without it results go to stdout only.
    #[arg(long, global = true, env = "AMBIGAME_OUT_DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Success-probability step function per treatment.
    Curve {
        #[arg(long = "scenario", value_parser = parse_treatment)]
        scenarios: Vec<Treatment>,
    },
    /// Equilibrium enumeration and the equilibrium table.
    Solve {
        #[arg(long = "scenario", value_parser = parse_treatment)]
        scenarios: Vec<Treatment>,
        /// Enumerate every profile, not only symmetric ones.
        #[arg(long)]
        all_profiles: bool,
        /// Largest profile space allowed for --all-profiles.
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Equilibrium totals that survive every rho in a range.
    Sweep {
        #[arg(long = "scenario", value_parser = parse_treatment)]
        scenarios: Vec<Treatment>,
        #[arg(long)]
        rho_min: Option<f64>,
        #[arg(long)]
        rho_max: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Theoretical predictions for the hypotheses.
    Hypotheses,
    /// Synthetic experiment dataset.
    Simulate {
        /// Number of subjects.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Balance, treatment-effect, interaction and dispersion analysis of a CSV.
    Analyze {
        #[arg(long)]
        input: Option<String>,
        /// Column rename, `source=target`; repeatable.
        #[arg(long = "rename")]
        rename: Vec<String>,
        #[arg(long)]
        permutations: Option<usize>,
    },
    /// Minimum detectable effect, optionally checked by Monte Carlo.
    Power {
        #[arg(long)]
        arms: Option<usize>,
        /// Total subjects, split evenly over arms.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        n_per_arm: Option<usize>,
        #[arg(long)]
        sd: Option<f64>,
        /// Significance level.
        #[arg(long)]
        level: Option<f64>,
        /// Target power.
        #[arg(long)]
        power: Option<f64>,
        #[arg(long)]
        mc_reps: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Resolution {
    Uniform,
    Pessimistic,
    Optimistic,
}

fn parse_alpha(s: &str) -> Result<Alpha, String> {
    s.parse().map_err(|e: ambigame::Error| e.to_string())
}

fn parse_money(s: &str) -> Result<Money, String> {
    s.parse().map_err(|e: ambigame::Error| e.to_string())
}

fn parse_treatment(s: &str) -> Result<Treatment, String> {
    s.parse().map_err(|e: ambigame::Error| e.to_string())
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(alpha) = cli.alpha {
        cfg.alpha = alpha;
    }
    if let Some(rho) = cli.rho {
        cfg.utility = UtilityFn::power(rho).map_err(|e| CliError::Config(e.to_string()))?;
    }
    if let Some(step) = cli.grid_step {
        cfg.grid_step = step;
        cfg.simulation.grid_step = step;
    }
    if let Some(mode) = cli.mode {
        cfg.mode = mode;
    }
    if let Some(r) = cli.resolution {
        cfg.simulation.resolution = match r {
            Resolution::Uniform => ResolutionPolicy::Uniform,
            Resolution::Pessimistic => ResolutionPolicy::Pessimistic,
            Resolution::Optimistic => ResolutionPolicy::Optimistic,
        };
    }
    let set_scenarios = |cfg: &mut RunConfig, s: &[Treatment]| {
        if !s.is_empty() {
            cfg.scenarios = s.to_vec();
        }
    };
    match &cli.command {
        Command::Curve { scenarios } => set_scenarios(&mut cfg, scenarios),
        Command::Solve { scenarios, all_profiles, cap } => {
            set_scenarios(&mut cfg, scenarios);
            cfg.all_profiles |= *all_profiles;
            if let Some(cap) = cap {
                cfg.profile_cap = *cap;
            }
        }
        Command::Sweep { scenarios, rho_min, rho_max, samples } => {
            set_scenarios(&mut cfg, scenarios);
            if let Some(v) = rho_min {
                cfg.sweep.rho_min = *v;
            }
            if let Some(v) = rho_max {
                cfg.sweep.rho_max = *v;
            }
            if let Some(v) = samples {
                cfg.sweep.samples = *v;
            }
        }
        Command::Hypotheses => {}
        Command::Simulate { n } => {
            if let Some(n) = n {
                cfg.simulation.n_subjects = *n;
            }
        }
        Command::Analyze { input, rename, permutations } => {
            if let Some(i) = input {
                cfg.analysis.input = Some(i.clone());
            }
            for r in rename {
                let (from, to) = r
                    .split_once('=')
                    .ok_or_else(|| CliError::Config(format!("--rename expects source=target, got `{r}`")))?;
                cfg.analysis.rename.push((from.to_string(), to.to_string()));
            }
            if let Some(p) = permutations {
                cfg.analysis.permutations = *p;
            }
        }
        Command::Power { arms, n, n_per_arm, sd, level, power, mc_reps } => {
            let p = &mut cfg.power;
            if let Some(v) = arms {
                p.arms = *v;
            }
            if let Some(v) = n {
                p.n_subjects = *v;
            }
            if n_per_arm.is_some() {
                p.n_per_arm = *n_per_arm;
            }
            if let Some(v) = sd {
                p.sd = *v;
            }
            if let Some(v) = level {
                p.level = *v;
            }
            if let Some(v) = power {
                p.power = *v;
            }
            if let Some(v) = mc_reps {
                p.mc_replications = *v;
            }
        }
    }
    cfg.simulation.validate().map_err(|e| CliError::Config(format!("simulation: {e}")))?;
    cfg.utility.validate().map_err(|e| CliError::Config(format!("utility: {e}")))?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = build_config(cli)?;
    let output = match cli.command {
        Command::Curve { .. } => commands::curve(&cfg),
        Command::Solve { .. } => commands::solve(&cfg),
        Command::Sweep { .. } => commands::sweep(&cfg),
        Command::Hypotheses => commands::hypotheses(&cfg),
        Command::Simulate { .. } => commands::simulate(&cfg),
        Command::Analyze { .. } => commands::analyze(&cfg),
        Command::Power { .. } => commands::power(&cfg),
    }?;
    print!("{}", output.stdout);
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir)?;
        for (name, body) in &output.files {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
