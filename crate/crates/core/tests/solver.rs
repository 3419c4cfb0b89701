use std::collections::BTreeSet;

use ambigame::solver::{FilterMode, Solver, DEFAULT_PROFILE_CAP};
use ambigame::{
    build_success_curve, condition_for, eval_objective, Alpha, AmbiguityScenario, GameSpec, Money, Prob, SuccessCurve,
    Treatment, UtilityFn,
};
use proptest::prelude::*;

fn alphas() -> Vec<Alpha> {
    vec![Alpha::MAXMAX, "0.5".parse().unwrap(), Alpha::MAXMIN]
}

fn gains_over(a: f64, b: f64) -> bool {
    a - b > 1e-12 * a.abs().max(b.abs())
}

/// Brute-force Nash check straight from the objective.
fn is_nash(profile: &[Money], u: &UtilityFn, curve: &SuccessCurve, game: &GameSpec) -> bool {
    let total: Money = profile.iter().fold(Money::ZERO, |a, &c| a + c);
    profile.iter().all(|&c| {
        let others = total - c;
        let stay = eval_objective(u, c, others, curve, game.endowment()).unwrap();
        game.contributions().all(|d| !gains_over(eval_objective(u, d, others, curve, game.endowment()).unwrap(), stay))
    })
}

#[test]
fn exhaustive_and_symmetric_enumeration_agree() {
    let game = GameSpec::experiment();
    for t in Treatment::ALL {
        let scenario = AmbiguityScenario::canonical(t);
        for alpha in alphas() {
            for rho in [0.5, 1.0, 2.0, 8.0] {
                let u = UtilityFn::power(rho).unwrap();
                let solver = Solver::for_scenario(&scenario, alpha, u.clone(), game).unwrap();
                let all = solver.enumerate_all_profiles(DEFAULT_PROFILE_CAP).unwrap();
                let from_all: BTreeSet<Money> =
                    all.iter().filter(|r| r.profile.is_symmetric()).map(|r| r.total).collect();
                let sym: BTreeSet<Money> =
                    solver.enumerate_symmetric(FilterMode::Raw).iter().map(|r| r.total).collect();
                assert_eq!(from_all, sym, "{t} alpha={alpha} rho={rho}");

                let oracle: BTreeSet<Money> = game
                    .contributions()
                    .filter(|&c| is_nash(&[c; 5], &u, solver.curve(), &game))
                    .map(|c| c * 5)
                    .collect();
                assert_eq!(sym, oracle, "{t} alpha={alpha} rho={rho}");
            }
        }
    }
}

#[test]
fn every_enumerated_profile_is_a_nash_equilibrium() {
    let game = GameSpec::experiment();
    let u = UtilityFn::risk_neutral();
    for t in Treatment::ALL {
        let solver = Solver::for_scenario(&AmbiguityScenario::canonical(t), Alpha::MAXMIN, u.clone(), game).unwrap();
        let found: BTreeSet<Vec<Money>> = solver
            .enumerate_all_profiles(DEFAULT_PROFILE_CAP)
            .unwrap()
            .into_iter()
            .map(|r| r.profile.contributions().to_vec())
            .collect();
        let grid: Vec<Money> = game.contributions().collect();
        let mut expected = BTreeSet::new();
        for code in 0..grid.len().pow(5) {
            let mut rest = code;
            let p: Vec<Money> = (0..5)
                .map(|_| {
                    let c = grid[rest % grid.len()];
                    rest /= grid.len();
                    c
                })
                .collect();
            if is_nash(&p, &u, solver.curve(), &game) {
                expected.insert(p);
            }
        }
        assert_eq!(found, expected, "{t}");
    }
}

#[test]
fn profile_cap_is_enforced() {
    let game = GameSpec::experiment();
    let solver = Solver::for_scenario(
        &AmbiguityScenario::canonical(Treatment::RR),
        Alpha::MAXMIN,
        UtilityFn::risk_neutral(),
        game,
    )
    .unwrap();
    let err = solver.enumerate_all_profiles(100).unwrap_err();
    assert!(matches!(err, ambigame::Error::CapExceeded { required: 7776, cap: 100 }));
}

fn table_utility(rho: f64, scale: f64) -> UtilityFn {
    let points = (0..=5).map(|e| (Money::from_euros(e), scale * (e as f64).powf(rho))).collect();
    UtilityFn::table(points).unwrap()
}

fn raw_totals(t: Treatment, alpha: Alpha, u: UtilityFn) -> Vec<(Money, bool)> {
    Solver::for_scenario(&AmbiguityScenario::canonical(t), alpha, u, GameSpec::experiment())
        .unwrap()
        .enumerate_symmetric(FilterMode::Raw)
        .into_iter()
        .map(|r| (r.total, r.paper_filter_excluded))
        .collect()
}

fn any_treatment() -> impl Strategy<Value = Treatment> {
    prop::sample::select(Treatment::ALL.to_vec())
}

fn any_alpha() -> impl Strategy<Value = Alpha> {
    (0i64..=20).prop_map(|k| Alpha::new(Prob::new(k, 20)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn equilibria_are_invariant_to_utility_scale(
        t in any_treatment(),
        alpha in any_alpha(),
        rho in 0.2f64..10.0,
        scale in 1e-3f64..1e3,
    ) {
        let base = raw_totals(t, alpha, table_utility(rho, 1.0));
        let scaled = raw_totals(t, alpha, table_utility(rho, scale));
        prop_assert_eq!(base, scaled);
    }

    #[test]
    fn curves_are_monotone_in_total_and_weight(t in any_treatment(), a in 0i64..=20, b in 0i64..=20) {
        let game = GameSpec::experiment();
        let s = AmbiguityScenario::canonical(t);
        let (lo, hi) = (a.min(b), a.max(b));
        let optimistic = build_success_curve(&s, Alpha::new(Prob::new(lo, 20)).unwrap(), &game);
        let pessimistic = build_success_curve(&s, Alpha::new(Prob::new(hi, 20)).unwrap(), &game);
        let totals: Vec<Money> = (0..=25).map(Money::from_euros).collect();
        for w in totals.windows(2) {
            prop_assert!(optimistic.eval(w[0]).unwrap() <= optimistic.eval(w[1]).unwrap());
        }
        for c in totals {
            prop_assert!(pessimistic.eval(c).unwrap() <= optimistic.eval(c).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn symbolic_conditions_match_enumeration(rho in 0.2f64..10.0) {
        let u = UtilityFn::power(rho).unwrap();
        for t in Treatment::ALL {
            for alpha in [Alpha::MAXMIN, Alpha::MAXMAX] {
                let scenario = AmbiguityScenario::canonical(t);
                let found = Solver::for_scenario(&scenario, alpha, u.clone(), GameSpec::experiment())
                    .unwrap()
                    .paper_totals();
                for total in scenario.canonical_totals() {
                    let predicted = condition_for(t, alpha, total).unwrap().holds_for(&u);
                    prop_assert_eq!(predicted, found.contains(&total), "{} {} C={} rho={}", t, alpha, total, rho);
                }
            }
        }
    }
}
