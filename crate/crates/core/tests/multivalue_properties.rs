mod common;

use proptest::prelude::*;
use tiergrade::design::CutoffPosition;
use tiergrade::model::ModelParams;
use tiergrade::multivalue::{
    equilibrium_effort3, grade_posteriors, grade_probabilities, mix, theta_dagger3, GradingMatrix,
    Instance3, OutcomeDistributions, ValueTriple,
};

fn simplex() -> impl Strategy<Value = [f64; 3]> {
    (0.0f64..1.0, 0.0f64..1.0).prop_map(|(u, v)| {
        let (lo, hi) = (u.min(v), u.max(v));
        [lo, hi - lo, 1.0 - hi]
    })
}

fn dists() -> impl Strategy<Value = OutcomeDistributions> {
    (simplex(), simplex())
        .prop_filter_map("dominance", |(a, b)| OutcomeDistributions::new(a, b).ok())
}

fn values() -> impl Strategy<Value = ValueTriple> {
    (0.05f64..0.95).prop_map(|v2| ValueTriple::new(0.0, v2, 1.0).unwrap())
}

fn matrix() -> impl Strategy<Value = GradingMatrix> {
    (
        0usize..5,
        0.05f64..0.95,
        proptest::array::uniform3(simplex()),
    )
        .prop_map(|(k, b, rows)| match k {
            0 => GradingMatrix::tough3(b).unwrap(),
            1 => GradingMatrix::lenient3(b).unwrap(),
            2 => GradingMatrix::tilde_lenient(b).unwrap(),
            3 => GradingMatrix::tilde_tough(b).unwrap(),
            _ => GradingMatrix::custom(rows).unwrap(),
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn posteriors_lie_between_extreme_values(m in matrix(), v in values(), d in dists(), x in 0.001f64..0.999) {
        let [v1, _, v3] = v.as_array();
        for q in grade_posteriors(x, &m, &v, &d).unwrap().into_iter().flatten() {
            prop_assert!(q >= v1 - 1e-12 && q <= v3 + 1e-12);
        }
    }

    #[test]
    fn posteriors_average_to_the_prior_mean(m in matrix(), v in values(), d in dists(), x in 0.001f64..0.999) {
        let q = grade_posteriors(x, &m, &v, &d).unwrap();
        let pr = grade_probabilities(x, &m, &d).unwrap();
        let lhs: f64 = (0..3).filter_map(|g| q[g].map(|qg| pr[g] * qg)).sum();
        let pi = mix(x, &d).unwrap();
        let rhs: f64 = (0..3).map(|i| pi[i] * v.as_array()[i]).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn dominance_violations_are_rejected(a in simplex(), b in simplex()) {
        let dominated = b[0] <= a[0] && b[0] + b[1] <= a[0] + a[1] && (b[0] < a[0] || b[0] + b[1] < a[0] + a[1]);
        prop_assert_eq!(OutcomeDistributions::new(a, b).is_ok(), dominated);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn canonical_rules_have_one_equilibrium(
        v in values(),
        d in dists(),
        b in 0.05f64..0.95,
        u in 0.01f64..0.99,
        tough in any::<bool>(),
    ) {
        let params = ModelParams::new(0.5, b, tiergrade::model::CostFunction::quadratic(2.0)).unwrap();
        let inst = Instance3 { values: v, dists: d, params };
        let m = if tough { GradingMatrix::tough3(b).unwrap() } else { GradingMatrix::lenient3(b).unwrap() };
        let theta = 0.5 * u;
        // the same matrix without its canonical tag goes through the grid scan
        let scanned = equilibrium_effort3(theta, &GradingMatrix::custom(m.rows()).unwrap(), &inst).unwrap().roots();
        prop_assert_eq!(scanned.len(), 1);
        let unique = equilibrium_effort3(theta, &m, &inst).unwrap().single().unwrap();
        prop_assert!((unique - scanned[0]).abs() <= 1e-10);
    }
}

#[test]
fn symmetric_crossing_matches_dense_grid() {
    let inst = Instance3 {
        values: ValueTriple::new(0.0, 0.5, 1.0).unwrap(),
        dists: OutcomeDistributions::new([0.6, 0.3, 0.1], [0.1, 0.3, 0.6]).unwrap(),
        params: ModelParams::default(),
    };
    let cut = theta_dagger3(&inst).unwrap();
    assert_eq!(cut.position, CutoffPosition::Interior);
    let (t, l) = (
        GradingMatrix::tough3(0.5).unwrap(),
        GradingMatrix::lenient3(0.5).unwrap(),
    );
    let e = |theta: f64, m: &GradingMatrix| {
        equilibrium_effort3(theta, m, &inst)
            .unwrap()
            .single()
            .unwrap()
    };
    let n = 5000;
    let argmin = (1..n)
        .map(|i| 0.5 * i as f64 / n as f64)
        .min_by(|a, b| {
            (e(*a, &l) - e(*a, &t))
                .abs()
                .total_cmp(&(e(*b, &l) - e(*b, &t)).abs())
        })
        .unwrap();
    assert!((cut.value - argmin).abs() <= 0.5 / n as f64);
    assert!((e(cut.value, &l) - e(cut.value, &t)).abs() <= 1e-8);
    assert!(e(cut.value - 0.05, &t) > e(cut.value - 0.05, &l));
    assert!(e(cut.value + 0.05, &l) > e(cut.value + 0.05, &t));
}
