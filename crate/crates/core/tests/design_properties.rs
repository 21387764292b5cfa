mod common;

use common::strategies::{params, params_and_rule, type_in};
use proptest::prelude::*;
use tiergrade::design::{
    brute_force_design, default_rule_grid, optimal_two_tier, sigma_dagger, spread_gain,
    students_from_types, system_welfare, CutoffPosition, SchoolSystem, StructureClass,
};
use tiergrade::model::ModelParams;

fn welfare(
    types: &[f64],
    assignment: Vec<usize>,
    rules: Vec<tiergrade::model::GradingRule>,
    p: &ModelParams,
) -> f64 {
    let s = SchoolSystem::new(students_from_types(types), assignment, rules, p).unwrap();
    system_welfare(&s, p).unwrap().total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn merging_schools_with_one_rule_raises_welfare(
        (p, rule) in params_and_rule(),
        a in proptest::collection::vec(0.0f64..1.0, 1..4),
        b in proptest::collection::vec(0.0f64..1.0, 1..4),
    ) {
        let ta: Vec<f64> = a.iter().map(|&u| type_in(&p, u)).collect();
        let tb: Vec<f64> = b.iter().map(|&u| type_in(&p, u)).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        prop_assume!((mean(&ta) - mean(&tb)).abs() > 1e-3);
        let all: Vec<f64> = ta.iter().chain(&tb).copied().collect();
        let split: Vec<usize> = (0..all.len()).map(|j| usize::from(j >= ta.len())).collect();
        let separated = welfare(&all, split, vec![rule, rule], &p);
        let merged = welfare(&all, vec![0; all.len()], vec![rule], &p);
        prop_assert!(merged > separated, "{merged} <= {separated}");
    }

    #[test]
    fn optimal_two_tier_is_never_other(p in params(), u in proptest::collection::vec(0.0f64..1.0, 1..12)) {
        let types: Vec<f64> = u.iter().map(|&x| type_in(&p, x)).collect();
        let d = optimal_two_tier(&students_from_types(&types), &p).unwrap();
        prop_assert!(!matches!(d.structure, StructureClass::Other));
        let direct = system_welfare(&d.system, &p).unwrap().total;
        prop_assert!((direct - d.welfare.total).abs() <= 1e-12);
    }

    #[test]
    fn welfare_is_linear_in_replication((p, rule) in params_and_rule(), u in proptest::collection::vec(0.0f64..1.0, 2..6), k in 2usize..4) {
        let types: Vec<f64> = u.iter().map(|&x| type_in(&p, x)).collect();
        let once = welfare(&types, vec![0; types.len()], vec![rule], &p);
        let many: Vec<f64> = (0..k).flat_map(|_| types.iter().copied()).collect();
        let rep = welfare(&many, vec![0; many.len()], vec![rule], &p);
        prop_assert!((rep - k as f64 * once).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn swapping_misordered_students_raises_both_efforts(
        p in params(),
        bottom in proptest::collection::vec(0.0f64..1.0, 2..4),
        top in proptest::collection::vec(0.0f64..1.0, 2..4),
    ) {
        let mut tb: Vec<f64> = bottom.iter().map(|&u| type_in(&p, u)).collect();
        let mut tt: Vec<f64> = top.iter().map(|&u| type_in(&p, u)).collect();
        // force a bottom student above a top student
        tb.sort_by(f64::total_cmp);
        tt.sort_by(f64::total_cmp);
        let (i, j) = (tb.len() - 1, 0);
        prop_assume!(tb[i] > tt[j] + 1e-6);
        let efforts = |b: &[f64], t: &[f64]| {
            let all: Vec<f64> = b.iter().chain(t).copied().collect();
            let assignment = (0..all.len()).map(|k| usize::from(k >= b.len())).collect();
            let s = SchoolSystem::new(students_from_types(&all), assignment, vec![p.tough(), p.lenient()], &p).unwrap();
            let e = s.efforts(&p).unwrap();
            (e[0].effort, e[1].effort)
        };
        let before = efforts(&tb, &tt);
        std::mem::swap(&mut tb[i], &mut tt[j]);
        let after = efforts(&tb, &tt);
        prop_assert!(after.0 >= before.0 && after.1 >= before.1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(25))]

    #[test]
    fn nothing_beats_the_brute_force_optimum(p in params(), u in proptest::collection::vec(0.0f64..1.0, 1..=5)) {
        let types: Vec<f64> = u.iter().map(|&x| type_in(&p, x)).collect();
        let students = students_from_types(&types);
        let grid = default_rule_grid(&p);
        let best = brute_force_design(&students, &grid, types.len(), &p).unwrap();
        // every two-school split with every pair of grid rules
        let m = types.len();
        for mask in 1..(1u32 << m) - 1 {
            let assignment: Vec<usize> = (0..m).map(|j| ((mask >> j) & 1) as usize).collect();
            for r0 in &grid {
                for r1 in &grid {
                    let w = welfare(&types, assignment.clone(), vec![*r0, *r1], &p);
                    prop_assert!(w <= best.welfare.total + 1e-8);
                }
            }
        }
        let two = optimal_two_tier(&students, &p).unwrap();
        prop_assert!((two.welfare.total - best.welfare.total).abs() <= 1e-8);
    }
}

#[test]
fn sigma_dagger_matches_a_dense_scan() {
    let p = ModelParams::default();
    for mu in [0.25, 0.3] {
        let cut = sigma_dagger(mu, &p).unwrap();
        assert_eq!(cut.position, CutoffPosition::Interior);
        let hi = mu.min(p.alpha() - mu);
        let n = 20_000;
        let first_positive = (1..n)
            .map(|i| hi * i as f64 / n as f64)
            .find(|&s| spread_gain(mu, s, &p).unwrap() > 0.0)
            .unwrap();
        assert!(
            (cut.value - first_positive).abs() <= hi / n as f64 + 1e-12,
            "mu {mu}"
        );
    }
    assert_eq!(
        sigma_dagger(0.1, &p).unwrap().position,
        CutoffPosition::AboveRange
    );
}
