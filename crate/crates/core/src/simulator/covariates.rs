//! Synthetic covariates matched to the published sample moments.
//!
//! Ordinal scores are rounded-and-clipped normals whose latent mean and
//! scale are solved so that the *discrete* distribution reproduces the
//! target mean and standard deviation. Risk and ambiguity aversion are
//! censored normals joined by a Gaussian copula; the latent correlation is
//! chosen so the correlation of the censored variables hits the target.

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::rng::{substream, Stream};

/// One participant's background measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovariateProfile {
    pub age: u32,
    pub female: u8,
    pub education: u8,
    pub patience: u8,
    pub crt: u8,
    pub math_ability: u8,
    pub altruism: u8,
    pub envy: u8,
    pub ideology: u8,
    pub gravity: u8,
    pub number_actions: u8,
    pub unemployed: u8,
    pub social_transfer: u8,
    pub risk_aversion: f64,
    pub ambiguity_aversion: f64,
}

/// Column names in CSV order.
pub const COVARIATE_NAMES: [&str; 15] = [
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

impl CovariateProfile {
    /// Values in [`COVARIATE_NAMES`] order.
    pub fn values(&self) -> [f64; 15] {
        [
            self.age as f64,
            self.female as f64,
            self.education as f64,
            self.patience as f64,
            self.crt as f64,
            self.math_ability as f64,
            self.altruism as f64,
            self.envy as f64,
            self.ideology as f64,
            self.gravity as f64,
            self.number_actions as f64,
            self.unemployed as f64,
            self.social_transfer as f64,
            self.risk_aversion,
            self.ambiguity_aversion,
        ]
    }

    pub fn zeros() -> Self {
        CovariateProfile {
            age: 0,
            female: 0,
            education: 0,
            patience: 0,
            crt: 0,
            math_ability: 0,
            altruism: 0,
            envy: 0,
            ideology: 0,
            gravity: 0,
            number_actions: 0,
            unemployed: 0,
            social_transfer: 0,
            risk_aversion: 0.0,
            ambiguity_aversion: 0.0,
        }
    }

    /// Checks every field against its admissible range.
    pub fn in_range(&self) -> bool {
        let ranges = SUMMARY;
        self.values().iter().zip(ranges.iter()).all(|(v, t)| *v >= t.min && *v <= t.max)
    }
}

/// Published mean, SD and range of one covariate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub name: &'static str,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

const fn m(name: &'static str, mean: f64, sd: f64, min: f64, max: f64) -> Moments {
    Moments { name, mean, sd, min, max }
}

/// Summary statistics of the experimental sample, in [`COVARIATE_NAMES`] order.
pub const SUMMARY: [Moments; 15] = [
    m("age", 43.84, 14.06, 18.0, 74.0),
    m("female", 0.52, 0.50, 0.0, 1.0),
    m("education", 2.95, 1.34, 1.0, 5.0),
    m("patience", 3.37, 2.17, 0.0, 6.0),
    m("crt", 1.59, 0.97, 0.0, 3.0),
    m("math_ability", 2.11, 0.87, 0.0, 3.0),
    m("altruism", 1.64, 0.77, 0.0, 3.0),
    m("envy", 2.16, 1.30, 0.0, 4.0),
    m("ideology", 4.92, 2.31, 1.0, 10.0),
    m("gravity", 7.69, 1.78, 1.0, 10.0),
    m("number_actions", 4.59, 2.21, 1.0, 11.0),
    m("unemployed", 0.12, 0.33, 0.0, 1.0),
    m("social_transfer", 0.19, 0.39, 0.0, 1.0),
    m("risk_aversion", 0.04, 0.29, -0.1, 1.0),
    m("ambiguity_aversion", 0.02, 0.47, -2.0, 2.0),
];

/// Sample correlation between risk and ambiguity aversion.
pub const RISK_AMBIGUITY_CORRELATION: f64 = -0.41;

fn std_normal() -> Normal {
    Normal::standard()
}

/// Integer-valued variable on `lo..=hi` with explicit probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteScore {
    pub lo: i64,
    pub probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl DiscreteScore {
    fn from_latent(lo: i64, hi: i64, mu: f64, sigma: f64) -> Self {
        let n = std_normal();
        let probs: Vec<f64> = (lo..=hi)
            .map(|k| {
                let upper = if k == hi { 1.0 } else { n.cdf((k as f64 + 0.5 - mu) / sigma) };
                let lower = if k == lo { 0.0 } else { n.cdf((k as f64 - 0.5 - mu) / sigma) };
                (upper - lower).max(0.0)
            })
            .collect();
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        DiscreteScore { lo, probs, cdf }
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(i, p)| (self.lo + i as i64) as f64 * p).sum()
    }

    pub fn sd(&self) -> f64 {
        let mu = self.mean();
        self.probs.iter().enumerate().map(|(i, p)| p * ((self.lo + i as i64) as f64 - mu).powi(2)).sum::<f64>().sqrt()
    }

    pub fn sample(&self, u: f64) -> i64 {
        let total = *self.cdf.last().unwrap();
        let idx = self.cdf.partition_point(|c| *c < u * total);
        self.lo + idx.min(self.probs.len() - 1) as i64
    }

    /// Latent normal whose rounded-and-clipped version has the target moments.
    pub fn calibrate(target: &Moments) -> Self {
        let (lo, hi) = (target.min as i64, target.max as i64);
        let fit_mean = |sigma: f64| -> DiscreteScore {
            let (mut a, mut b) = (target.min - 10.0 * sigma - 10.0, target.max + 10.0 * sigma + 10.0);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if DiscreteScore::from_latent(lo, hi, mid, sigma).mean() < target.mean {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            DiscreteScore::from_latent(lo, hi, 0.5 * (a + b), sigma)
        };
        let (mut a, mut b) = (1e-3_f64, 100.0_f64);
        for _ in 0..100 {
            let mid = (a * b).sqrt();
            if fit_mean(mid).sd() < target.sd {
                a = mid;
            } else {
                b = mid;
            }
        }
        fit_mean((a * b).sqrt())
    }
}

/// Normal latent censored to `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensoredNormal {
    pub mu: f64,
    pub sigma: f64,
    pub lo: f64,
    pub hi: f64,
}

impl CensoredNormal {
    pub fn moments(&self) -> (f64, f64) {
        let n = std_normal();
        let a = (self.lo - self.mu) / self.sigma;
        let b = (self.hi - self.mu) / self.sigma;
        let (pa, pb) = (n.cdf(a), 1.0 - n.cdf(b));
        let mass = n.cdf(b) - n.cdf(a);
        let ez = n.pdf(a) - n.pdf(b);
        let ez2 = mass + a * n.pdf(a) - b * n.pdf(b);
        let inner1 = self.mu * mass + self.sigma * ez;
        let inner2 = self.mu * self.mu * mass + 2.0 * self.mu * self.sigma * ez + self.sigma * self.sigma * ez2;
        let mean = self.lo * pa + self.hi * pb + inner1;
        let ex2 = self.lo * self.lo * pa + self.hi * self.hi * pb + inner2;
        (mean, (ex2 - mean * mean).max(0.0).sqrt())
    }

    /// Probability that the latent value lies strictly inside the bounds.
    pub fn uncensored_mass(&self) -> f64 {
        let n = std_normal();
        n.cdf((self.hi - self.mu) / self.sigma) - n.cdf((self.lo - self.mu) / self.sigma)
    }

    pub fn apply(&self, z: f64) -> f64 {
        (self.mu + self.sigma * z).clamp(self.lo, self.hi)
    }

    pub fn calibrate(target: &Moments) -> Self {
        let with = |mu: f64, sigma: f64| CensoredNormal { mu, sigma, lo: target.min, hi: target.max };
        let fit_mean = |sigma: f64| -> CensoredNormal {
            let (mut a, mut b) = (target.min - 20.0 * sigma - 10.0, target.max + 20.0 * sigma + 10.0);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if with(mid, sigma).moments().0 < target.mean {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            with(0.5 * (a + b), sigma)
        };
        let (mut a, mut b) = (1e-3_f64, 50.0_f64);
        for _ in 0..100 {
            let mid = (a * b).sqrt();
            if fit_mean(mid).moments().1 < target.sd {
                a = mid;
            } else {
                b = mid;
            }
        }
        fit_mean((a * b).sqrt())
    }
}

/// Calibrated marginals plus the copula parameter.
#[derive(Debug, Clone)]
pub struct CovariateModel {
    pub age: DiscreteScore,
    pub scores: Vec<DiscreteScore>,
    pub risk: CensoredNormal,
    pub ambiguity: CensoredNormal,
    pub latent_correlation: f64,
}

impl CovariateModel {
    fn build() -> Self {
        let score = |i: usize| DiscreteScore::calibrate(&SUMMARY[i]);
        let risk = CensoredNormal::calibrate(&SUMMARY[13]);
        let ambiguity = CensoredNormal::calibrate(&SUMMARY[14]);
        // For censoring maps g1, g2 of a bivariate normal, the covariance is
        // rho * sigma1 * sigma2 * P(inside1) * P(inside2) up to higher Hermite
        // terms, which vanish when one map is (almost) linear.
        let slope1 = risk.sigma * risk.uncensored_mass();
        let slope2 = ambiguity.sigma * ambiguity.uncensored_mass();
        let latent = (RISK_AMBIGUITY_CORRELATION * risk.moments().1 * ambiguity.moments().1 / (slope1 * slope2))
            .clamp(-0.99, 0.99);
        CovariateModel {
            age: score(0),
            // education, patience, crt, math, altruism, envy, ideology, gravity, actions
            scores: [2, 3, 4, 5, 6, 7, 8, 9, 10].iter().map(|&i| score(i)).collect(),
            risk,
            ambiguity,
            latent_correlation: latent,
        }
    }

    pub fn get() -> &'static CovariateModel {
        static MODEL: OnceLock<CovariateModel> = OnceLock::new();
        MODEL.get_or_init(CovariateModel::build)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> CovariateProfile {
        let score = |d: &DiscreteScore, rng: &mut R| d.sample(rng.random::<f64>());
        let age = score(&self.age, rng) as u32;
        let female = u8::from(rng.random::<f64>() < SUMMARY[1].mean);
        let s: Vec<u8> = self.scores.iter().map(|d| score(d, rng) as u8).collect();
        let unemployed = u8::from(rng.random::<f64>() < SUMMARY[11].mean);
        let social_transfer = u8::from(rng.random::<f64>() < SUMMARY[12].mean);
        let z1: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(StandardNormal);
        let r = self.latent_correlation;
        let z2 = r * z1 + (1.0 - r * r).sqrt() * e;
        CovariateProfile {
            age,
            female,
            education: s[0],
            patience: s[1],
            crt: s[2],
            math_ability: s[3],
            altruism: s[4],
            envy: s[5],
            ideology: s[6],
            gravity: s[7],
            number_actions: s[8],
            unemployed,
            social_transfer,
            risk_aversion: self.risk.apply(z1),
            ambiguity_aversion: self.ambiguity.apply(z2),
        }
    }
}

/// Covariates for subjects `0..n`, each from its own substream.
pub fn synth_covariates(n: usize, seed: u64) -> Vec<CovariateProfile> {
    let model = CovariateModel::get();
    (0..n).into_par_iter().map(|i| model.draw(&mut substream(seed, Stream::Covariates, i as u64))).collect()
}
