mod common;

use common::strategies::{params, params_and_rule, type_in};
use common::{oracle_effort, rng};
use proptest::prelude::*;
use tiergrade::design::ExtremeRuleSelector;
use tiergrade::distribution::TypeDistribution;
use tiergrade::incentives::{
    constrained_optimal, fees_for_regular, indirect_utility, is_regular, random_regular_system,
    welfare_two_tier, zeta, RegularSystem, FEE_TOL,
};
use tiergrade::model::{CostFunction, ModelParams};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn indirect_utility_is_affine((p, rule) in params_and_rule(), u in 0.0f64..1.0) {
        let theta_bar = type_in(&p, u);
        let z = zeta(theta_bar, &rule, &p).unwrap();
        let worst = (0..=200)
            .map(|i| p.alpha() * i as f64 / 200.0)
            .map(|t| (indirect_utility(t, theta_bar, &rule, z.effort, &p) - z.utility(t)).abs())
            .fold(0.0, f64::max);
        prop_assert!(worst <= 1e-10, "{worst}");
        prop_assert!((z.slope - p.cost().marginal(oracle_effort(theta_bar, &rule, &p))).abs() <= 1e-8);
    }

    #[test]
    fn preferences_between_two_schools_cross_once(
        p in params(),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
        tough_a in any::<bool>(),
        tough_b in any::<bool>(),
    ) {
        let pick = |t: bool| if t { p.tough() } else { p.lenient() };
        let (ra, rb) = (pick(tough_a), pick(tough_b));
        let (ma, mb) = (type_in(&p, a), type_in(&p, b));
        let (za, zb) = (zeta(ma, &ra, &p).unwrap(), zeta(mb, &rb, &p).unwrap());
        let d = |t: f64| {
            indirect_utility(t, mb, &rb, zb.effort, &p) - indirect_utility(t, ma, &ra, za.effort, &p)
        };
        let grid: Vec<f64> = (0..=400).map(|i| p.alpha() * i as f64 / 400.0).collect();
        let signs: Vec<f64> = grid.iter().map(|&t| d(t)).filter(|v| v.abs() > 1e-12).map(f64::signum).collect();
        prop_assert!(signs.windows(2).filter(|w| w[0] != w[1]).count() <= 1);
        let slope = (d(p.alpha()) - d(0.0)) / p.alpha();
        prop_assert!((slope - (zb.slope - za.slope)).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn fees_make_random_regular_systems_compatible(p in params(), seed in any::<u64>()) {
        let f = TypeDistribution::uniform(p.alpha()).unwrap();
        let sel = ExtremeRuleSelector::new(&p).unwrap();
        let sys = random_regular_system(&f, &p, &sel, 3, 10_000, &mut rng(seed)).unwrap();
        prop_assert_eq!(is_regular(&sys, &f, &p), Ok(()));
        let fees = fees_for_regular(&sys, &f, &p).unwrap();
        prop_assert_eq!(fees.fees[0], 0.0);
        prop_assert!(fees.max_residual() <= 1e-9);
        prop_assert!(fees.max_switch_gain <= FEE_TOL);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn binding_constraint_raises_the_cutoff(p in params()) {
        let f = TypeDistribution::uniform(p.alpha()).unwrap();
        let d = constrained_optimal(&f, &p).unwrap();
        prop_assert_eq!(is_regular(&d.system, &f, &p), Ok(()));
        prop_assert!(d.welfare >= d.single_tier_welfare - 1e-15);
        if let Some(c) = d.constrained {
            prop_assert!(c.is_monotone());
        }
        if d.constraint_binding {
            let u = d.unconstrained.unwrap().cutoff;
            prop_assert!(d.reported_cutoff(&p) > u);
        } else if let Some(u) = d.unconstrained {
            prop_assert!(u.is_monotone());
        }
    }
}

#[test]
fn two_tier_welfare_matches_uniform_closed_form() {
    let p = ModelParams::default();
    let f = TypeDistribution::uniform(0.5).unwrap();
    for c in [0.05, 0.2, 0.3, 0.45] {
        let e = welfare_two_tier(&f, c, &p).unwrap();
        let (eb, et) = (
            oracle_effort(c / 2.0, &p.tough(), &p),
            oracle_effort((c + 0.5) / 2.0, &p.lenient(), &p),
        );
        let cost = |x: f64| 2.0 * x * x;
        let w = 0.25 + (c / 0.5) * (eb - cost(eb)) + (1.0 - c / 0.5) * (et - cost(et));
        assert!((e.welfare - w).abs() <= 1e-9, "cutoff {c}");
    }
}

#[test]
fn histogram_and_uniform_agree_on_two_tier_welfare() {
    let p = ModelParams::new(0.7, 0.5, CostFunction::quadratic(3.5)).unwrap();
    let u = TypeDistribution::uniform(0.7).unwrap();
    let h = TypeDistribution::from_masses(0.7, &vec![1.0; 2000]).unwrap();
    for c in [0.1, 0.35, 0.6] {
        let (a, b) = (
            welfare_two_tier(&u, c, &p).unwrap(),
            welfare_two_tier(&h, c, &p).unwrap(),
        );
        assert!((a.welfare - b.welfare).abs() <= 1e-9);
    }
}

#[test]
fn constrained_optimum_handles_skewed_populations() {
    let p = ModelParams::new(0.7, 0.5, CostFunction::quadratic(3.5)).unwrap();
    let f = TypeDistribution::from_density(0.7, 1400, |t| 1.0 + 4.0 * t).unwrap();
    let d = constrained_optimal(&f, &p).unwrap();
    assert_eq!(is_regular(&d.system, &f, &p), Ok(()));
    let fees = fees_for_regular(&d.system, &f, &p).unwrap();
    assert!(fees.max_residual() <= 1e-9);
    let single = RegularSystem::single_tier(&f, &p.tough(), &p)
        .unwrap()
        .welfare(&p);
    assert!(d.welfare >= single - 1e-15);
}
