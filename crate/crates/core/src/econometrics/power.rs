//! Minimum detectable effects and Monte-Carlo power.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::simulator::rng::{substream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub arms: usize,
    pub n_per_arm: usize,
    pub outcome_sd: f64,
    pub alpha_level: f64,
    pub power_target: f64,
    pub mde: f64,
    pub mc_rejection_rate: Option<f64>,
    pub mc_replications: Option<usize>,
}

impl PowerReport {
    pub fn render_text(&self) -> String {
        let mut out = format!(
            "arms               {}\nn per arm          {}\noutcome sd         {}\nalpha              {}\npower target       {}\nMDE (two-sample)   {:.4}\n",
            self.arms, self.n_per_arm, self.outcome_sd, self.alpha_level, self.power_target, self.mde
        );
        if let (Some(rate), Some(reps)) = (self.mc_rejection_rate, self.mc_replications) {
            out.push_str(&format!("MC rejection rate  {rate:.4} ({reps} replications at effect = MDE)\n"));
        }
        out
    }
}

/// `(z_{1-alpha/2} + z_power) * sd * sqrt(2 / n_per_arm)`.
pub fn mde(arms: usize, n_per_arm: usize, sd: f64, alpha_level: f64, power_target: f64) -> Result<PowerReport> {
    if arms < 2 || n_per_arm < 2 {
        return Err(Error::invalid("need at least 2 arms and 2 subjects per arm"));
    }
    if !(sd.is_finite() && sd > 0.0) {
        return Err(Error::invalid("outcome sd must be positive"));
    }
    if !(alpha_level > 0.0 && alpha_level < 1.0 && power_target > 0.0 && power_target < 1.0) {
        return Err(Error::invalid("alpha and power must lie in (0, 1)"));
    }
    let n = Normal::standard();
    let z = n.inverse_cdf(1.0 - alpha_level / 2.0) + n.inverse_cdf(power_target);
    Ok(PowerReport {
        arms,
        n_per_arm,
        outcome_sd: sd,
        alpha_level,
        power_target,
        mde: z * sd * (2.0 / n_per_arm as f64).sqrt(),
        mc_rejection_rate: None,
        mc_replications: None,
    })
}

/// Share of replications in which a two-sample test with normal critical
/// values rejects, for normal outcomes with the given mean shift.
pub fn mc_rejection_rate(
    effect: f64,
    n_per_arm: usize,
    sd: f64,
    alpha_level: f64,
    replications: usize,
    seed: u64,
) -> f64 {
    let crit = Normal::standard().inverse_cdf(1.0 - alpha_level / 2.0);
    let rejections: usize = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, Stream::MonteCarlo, r as u64);
            let mut draw = |shift: f64| -> (f64, f64) {
                let v: Vec<f64> = (0..n_per_arm).map(|_| shift + sd * rng.sample::<f64, _>(StandardNormal)).collect();
                let m = v.iter().sum::<f64>() / n_per_arm as f64;
                let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n_per_arm as f64 - 1.0);
                (m, var)
            };
            let (m0, v0) = draw(0.0);
            let (m1, v1) = draw(effect);
            let se = ((v0 + v1) / n_per_arm as f64).sqrt();
            usize::from(((m1 - m0) / se).abs() > crit)
        })
        .sum();
    rejections as f64 / replications as f64
}

impl PowerReport {
    /// Adds a Monte-Carlo rejection rate at `effect = mde`.
    pub fn with_monte_carlo(mut self, replications: usize, seed: u64) -> Self {
        self.mc_rejection_rate =
            Some(mc_rejection_rate(self.mde, self.n_per_arm, self.outcome_sd, self.alpha_level, replications, seed));
        self.mc_replications = Some(replications);
        self
    }
}
