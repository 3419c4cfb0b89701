#![allow(clippy::needless_range_loop)]

use ambigame::econometrics::{
    balance_table, fit, interaction_model, mc_rejection_rate, mde, ols_hc1, pivotal_model, residuals, welch_p_value,
    DesignMatrix, Table, Term, BALANCE_COVARIATES, CONTRIBUTION,
};
use ambigame::simulator::rng::{substream, Stream};
use ambigame::simulator::{run_experiment, ArmShift, BehavioralRule, ContributionNoise, LinearRule, SimConfig};
use ambigame::{Error, Money, Treatment};
use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn design(x: DMatrix<f64>, y: DVector<f64>) -> DesignMatrix {
    let names = (0..x.ncols()).map(|j| format!("x{j}")).collect();
    DesignMatrix::from_parts("y", names, x, y).unwrap()
}

#[test]
fn hc1_matches_exact_six_observation_oracle() {
    let x = DMatrix::from_row_slice(6, 3, &[1., 1., 0., 1., 2., 1., 1., 3., 0., 1., 4., 1., 1., 5., 1., 1., 6., 0.]);
    let y = DVector::from_vec(vec![2.0, 3.5, 2.5, 6.0, 7.5, 5.0]);
    let r = ols_hc1(&design(x, y)).unwrap();

    // Exact rational solution: beta = (37/78, 21/26, 29/13).
    let beta = [37.0 / 78.0, 21.0 / 26.0, 29.0 / 13.0];
    let cov: [[f64; 3]; 3] = [
        [0.9006120104208406, -0.18069414780839452, -0.19219195561935662],
        [-0.18069414780839452, 0.042884090192920415, 0.009690029916475069],
        [-0.19219195561935662, 0.009690029916475069, 0.4389175312878089],
    ];
    let classical_var: [f64; 3] = [0.6579005040543502, 0.03895463510848126, 0.4544707429322814];
    for j in 0..3 {
        assert_abs_diff_eq!(r.coefficients[j], beta[j], epsilon = 1e-10);
        assert_abs_diff_eq!(r.robust_se[j], cov[j][j].sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(r.classical_se[j], classical_var[j].sqrt(), epsilon = 1e-10);
        for k in 0..3 {
            assert_abs_diff_eq!(r.covariance[(j, k)], cov[j][k], epsilon = 1e-10);
        }
    }
    assert_eq!(r.covariance_type, "HC1");
    assert_eq!(r.n_obs, 6);
}

fn random_design(n: usize, k: usize, seed: u64, hetero: bool) -> DesignMatrix {
    let mut rng = substream(seed, Stream::MonteCarlo, 0);
    let mut x = DMatrix::from_element(n, k, 1.0);
    for i in 0..n {
        for j in 1..k {
            x[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let y = DVector::from_fn(n, |i, _| {
        let signal: f64 = (0..k).map(|j| x[(i, j)] * (j as f64 + 1.0) * 0.5).sum();
        let scale = if hetero { 0.5 + x[(i, 1)].abs() } else { 1.0 };
        signal + scale * rng.sample::<f64, _>(StandardNormal)
    });
    design(x, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn residuals_are_orthogonal_and_covariance_is_psd(n in 20usize..120, k in 2usize..6, seed in any::<u64>()) {
        let d = random_design(n, k, seed, true);
        let r = ols_hc1(&d).unwrap();
        let e = residuals(&d, &r);
        let xe = d.x.transpose() * &e;
        let scale = d.y.norm() * d.x.norm();
        prop_assert!(xe.amax() <= 1e-9 * scale.max(1.0));

        let cov = &r.covariance;
        prop_assert!((cov - cov.transpose()).amax() <= 1e-12 * cov.amax().max(1e-300));
        let eig = cov.clone().symmetric_eigen().eigenvalues;
        prop_assert!(eig.min() >= -1e-10 * eig.max().abs());
    }
}

#[test]
fn robust_and_classical_agree_under_homoskedasticity() {
    let d = random_design(50_000, 4, 11, false);
    let r = ols_hc1(&d).unwrap();
    for j in 0..4 {
        let ratio = r.robust_se[j] / r.classical_se[j];
        assert!((ratio - 1.0).abs() < 0.03, "column {j}: ratio {ratio}");
    }
    let h = ols_hc1(&random_design(50_000, 4, 11, true)).unwrap();
    assert!(h.robust_se[1] / h.classical_se[1] > 1.1);
}

#[test]
fn standard_errors_shrink_like_root_n() {
    let truth = [0.5, 1.0, 1.5];
    let mut se = Vec::new();
    for n in [1_000, 4_000, 16_000] {
        let r = ols_hc1(&random_design(n, 3, 5, true)).unwrap();
        for j in 0..3 {
            assert!((r.coefficients[j] - truth[j]).abs() < 4.0 * r.robust_se[j], "n={n} j={j}");
        }
        se.push(r.robust_se[1]);
    }
    for w in se.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 2.0).abs() < 0.25, "ratio {ratio}");
    }
}

#[test]
fn collinear_columns_are_named() {
    let x = DMatrix::from_fn(10, 3, |i, j| match j {
        0 => 1.0,
        1 => i as f64,
        _ => 2.0 * i as f64,
    });
    let y = DVector::from_fn(10, |i, _| i as f64);
    match ols_hc1(&design(x, y)) {
        Err(Error::RankDeficient { columns }) => assert!(columns.contains(&"x2".to_string())),
        other => panic!("expected rank deficiency, got {other:?}"),
    }
}

#[test]
fn welch_identical_samples_give_p_one() {
    let a = [1.0, 2.0, 4.0, 7.0, 3.0];
    assert_abs_diff_eq!(welch_p_value(&a, &a), 1.0, epsilon = 1e-12);
}

fn default_table(seed: u64) -> Table {
    Table::from_dataset(&run_experiment(&SimConfig::default(), seed).unwrap())
}

#[test]
fn balance_tests_have_nominal_size() {
    let mut rejections = 0;
    let mut total = 0;
    for seed in 0..40 {
        let t = default_table(1000 + seed);
        let b = balance_table(&t, &BALANCE_COVARIATES, Treatment::RR).unwrap();
        for row in &b.rows {
            for p in &row.p_values {
                total += 1;
                rejections += usize::from(*p < 0.05);
            }
        }
    }
    let rate = rejections as f64 / total as f64;
    assert!((0.035..=0.065).contains(&rate), "size {rate} over {total} tests");
}

#[test]
fn balance_test_detects_an_age_shift() {
    let mut t = default_table(3);
    let arms = t.treatments().unwrap();
    let age: Vec<f64> = t
        .numeric("age")
        .unwrap()
        .iter()
        .zip(&arms)
        .map(|(a, arm)| if *arm == Some(Treatment::AA) { a + 5.0 } else { *a })
        .collect();
    t.push_numeric("age", age).unwrap();
    let b = balance_table(&t, &["age"], Treatment::RR).unwrap();
    let aa = b.arms.iter().position(|a| *a == Treatment::AA).unwrap();
    let p = b.rows[0].p_values[aa];
    assert!(p < 0.01, "p = {p}");
}

/// A cent grid, a large endowment and a raised intercept keep the rounding
/// and the [0, endowment] clamp from biasing the slopes.
fn gaussian_rule(rule: LinearRule) -> SimConfig {
    SimConfig {
        n_subjects: 20_000,
        endowment: Money::from_euros(20),
        grid_step: Money::from_cents(1),
        rule: BehavioralRule::PaperCalibratedLinear(LinearRule {
            constant: rule.constant + 3.0,
            noise: ContributionNoise::Gaussian { sd: 0.5 },
            ..rule
        }),
        ..SimConfig::default()
    }
}

const FULL_SPEC: [&str; 15] = [
    "belief",
    "risk_aversion",
    "ambiguity_aversion",
    "crt",
    "age",
    "female",
    "education",
    "altruism",
    "envy",
    "ideology",
    "gravity",
    "number_actions",
    "social_transfer",
    "unemployed",
    "perception_accuracy",
];

fn within(r: &ambigame::econometrics::RegressionResult, name: &str, truth: f64, ses: f64) {
    let (b, s) = (r.coef(name).unwrap(), r.se(name).unwrap());
    assert!((b - truth).abs() <= ses * s, "{name}: {b:.4} ({s:.4}) vs {truth}");
}

fn wald(r: &ambigame::econometrics::RegressionResult, truth: &[(&str, f64)]) -> f64 {
    let idx: Vec<usize> = truth.iter().map(|(n, _)| r.names.iter().position(|m| m == n).unwrap()).collect();
    let d = DVector::from_iterator(idx.len(), idx.iter().zip(truth).map(|(&i, (_, t))| r.coefficients[i] - t));
    let v = DMatrix::from_fn(idx.len(), idx.len(), |a, b| r.covariance[(idx[a], idx[b])]);
    (d.transpose() * v.try_inverse().unwrap() * &d)[(0, 0)]
}

#[test]
fn recovers_a_known_treatment_effect() {
    let rule = LinearRule { treatment_effects: ArmShift { ar: 0.0, ra: 0.0, aa: 0.5 }, ..LinearRule::default() };
    let t = Table::from_dataset(&run_experiment(&gaussian_rule(rule), 21).unwrap());
    let mut terms: Vec<Term> = [Treatment::AR, Treatment::RA, Treatment::AA].map(Term::arm).to_vec();
    terms.extend(FULL_SPEC.iter().map(|c| Term::col(c)));
    let r = fit(&t, CONTRIBUTION, &terms).unwrap();
    within(&r, "AA", 0.5, 2.0);
    within(&r, "AR", 0.0, 2.0);
    within(&r, "risk_aversion", -0.337, 2.0);
    within(&r, "belief", 0.170, 2.0);
}

#[test]
fn recovers_risk_interactions() {
    let rule = LinearRule::default().with_risk_interactions();
    let t = Table::from_dataset(&run_experiment(&gaussian_rule(rule), 22).unwrap());
    let arms = [Treatment::AR, Treatment::RA, Treatment::AA].map(Term::arm);
    let risk = Term::col("risk_aversion");
    let mut terms = arms.to_vec();
    terms.extend(FULL_SPEC.iter().map(|c| Term::col(c)));
    terms.extend(arms.iter().map(|a| a.times(&risk)));
    let r = fit(&t, CONTRIBUTION, &terms).unwrap();
    within(&r, "risk_aversion", -0.700, 2.0);
    within(&r, "AR x risk_aversion", 0.359, 2.0);
    within(&r, "RA x risk_aversion", 0.679, 2.0);
    within(&r, "AA x risk_aversion", 0.814, 2.0);

    // The reporting model omits some controls but keeps the interaction
    // contrasts, which only need the omitted terms to act alike across arms.
    let m = interaction_model(&t, "risk_aversion").unwrap();
    within(&m, "AA x risk_aversion", 0.814, 3.0);
}

#[test]
fn recovers_pivotal_effects() {
    let rule = LinearRule::default().with_pivotal_effects();
    let t = Table::from_dataset(&run_experiment(&gaussian_rule(rule), 23).unwrap());
    let (p, a) = (Term::col("pivotal"), Term::col("perception_accuracy"));
    let mut terms: Vec<Term> = [Treatment::AR, Treatment::RA, Treatment::AA].map(Term::arm).to_vec();
    terms.extend(FULL_SPEC.iter().map(|c| Term::col(c)));
    terms.push(p.clone());
    terms.push(p.times(&a));
    let r = fit(&t, CONTRIBUTION, &terms).unwrap();
    within(&r, "pivotal", -0.315, 2.0);
    // The two accuracy slopes are strongly correlated, so they are checked
    // jointly (chi-square, 2 df, 0.1% level).
    let w = wald(&r, &[("perception_accuracy", 0.003), ("pivotal x perception_accuracy", -0.005)]);
    assert!(w < 13.82, "wald {w}");
}

#[test]
fn degenerate_moderators_are_rejected() {
    let mut t = default_table(4);
    t.push_numeric("risk_aversion", vec![0.2; t.n_rows()]).unwrap();
    assert!(matches!(interaction_model(&t, "risk_aversion"), Err(Error::RankDeficient { .. })));

    let mut t = default_table(4);
    t.push_numeric("pivotal", vec![0.0; t.n_rows()]).unwrap();
    match pivotal_model(&t) {
        Err(Error::RankDeficient { columns }) => assert!(columns.iter().any(|c| c.contains("pivotal"))),
        other => panic!("expected rank deficiency, got {other:?}"),
    }
}

#[test]
fn mde_matches_closed_form_and_simulation() {
    let r = mde(4, 375, 1.39, 0.05, 0.80).unwrap();
    let z = 1.959963984540054 + 0.8416212335729143;
    assert_abs_diff_eq!(r.mde, z * 1.39 * (2.0f64 / 375.0).sqrt(), epsilon = 1e-9);
    let rate = mc_rejection_rate(r.mde, 375, 1.39, 0.05, 4_000, 9);
    assert!((rate - 0.80).abs() < 0.03, "rejection rate {rate}");
    assert!(mde(4, 1, 1.0, 0.05, 0.8).is_err());
}
