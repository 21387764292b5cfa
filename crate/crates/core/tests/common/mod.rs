#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tiergrade::model::{CostFunction, GradingRule, ModelParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random admissible parameters: quadratic or power cost with
/// `c'(1 - alpha)` comfortably above one.
pub fn random_params<R: Rng>(rng: &mut R) -> ModelParams {
    loop {
        let alpha = rng.random_range(0.2..0.8);
        let b = rng.random_range(0.2..0.9);
        let cap: f64 = 1.0 - alpha;
        let lift = rng.random_range(1.2..4.0);
        let cost = if rng.random_bool(0.5) {
            CostFunction::quadratic(lift / (2.0 * cap))
        } else {
            let p = rng.random_range(2.0..4.0);
            CostFunction::power(lift / cap.powf(p - 1.0), p)
        };
        if let Ok(p) = ModelParams::new(alpha, b, cost) {
            return p;
        }
    }
}

/// Uniform valid rule with spread at most `b`.
pub fn random_rule<R: Rng>(rng: &mut R, b: f64) -> GradingRule {
    loop {
        let spread = rng.random_range(0.01..=b);
        let g0 = rng.random_range(0.0..=(1.0 - spread));
        if let Ok(r) = GradingRule::new(g0, (g0 + spread).min(1.0)) {
            return r;
        }
    }
}

/// Marginal benefit from Bayes' rule, written out independently of the
/// library: wage gap between passing and failing times the pass-rate slope.
pub fn oracle_benefit(g0: f64, g1: f64, x: f64) -> f64 {
    let p_pass = x * g1 + (1.0 - x) * g0;
    let p_fail = 1.0 - p_pass;
    let w_pass = x * g1 / p_pass;
    let w_fail = if p_fail > 0.0 {
        x * (1.0 - g1) / p_fail
    } else {
        0.0
    };
    (g1 - g0) * (w_pass - w_fail)
}

/// Equilibrium effort by Illinois regula falsi on `B(x + e) - c'(e)`.
pub fn oracle_effort(theta_bar: f64, rule: &GradingRule, params: &ModelParams) -> f64 {
    let cost = *params.cost();
    let f = |e: f64| oracle_benefit(rule.g0(), rule.g1(), theta_bar + e) - cost.marginal(e);
    let (mut a, mut b) = (0.0, params.effort_cap());
    let (mut fa, mut fb) = (f(a), f(b));
    assert!(fa > 0.0 && fb < 0.0, "oracle bracket");
    for _ in 0..500 {
        let c = b - fb * (b - a) / (fb - fa);
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
        } else {
            fa /= 2.0;
        }
        b = c;
        fb = fc;
        if (b - a).abs() < 1e-15 {
            break;
        }
    }
    b
}

/// `n` interior points of `(0, hi)`.
pub fn interior_grid(hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| hi * (i as f64 + 0.5) / n as f64).collect()
}

pub mod strategies {
    use proptest::prelude::*;
    use tiergrade::model::{CostFunction, GradingRule, ModelParams};

    /// Admissible parameters: `c'(1 - alpha)` between 1.2 and 4.
    pub fn params() -> impl Strategy<Value = ModelParams> {
        (
            0.2f64..0.8,
            0.2f64..0.9,
            1.2f64..4.0,
            any::<bool>(),
            2.0f64..4.0,
        )
            .prop_map(|(alpha, b, lift, quadratic, p)| {
                let cap: f64 = 1.0 - alpha;
                let cost = if quadratic {
                    CostFunction::quadratic(lift / (2.0 * cap))
                } else {
                    CostFunction::power(lift / cap.powf(p - 1.0), p)
                };
                ModelParams::new(alpha, b, cost).expect("admissible by construction")
            })
    }

    /// Parameters with a valid rule (spread in `[0.01, b]`).
    pub fn params_and_rule() -> impl Strategy<Value = (ModelParams, GradingRule)> {
        params().prop_flat_map(|p| {
            let b = p.b();
            (Just(p), 0.01f64..=1.0, 0.0f64..=1.0).prop_map(move |(p, s, u)| {
                let spread = 0.01 + s * (b - 0.01);
                let g0 = u * (1.0 - spread);
                (p, GradingRule::new(g0, g0 + spread).expect("valid rule"))
            })
        })
    }

    /// Fraction in `(0, 1)` mapped onto the open type range of `p`.
    pub fn type_in(p: &ModelParams, u: f64) -> f64 {
        let margin = 0.005 * p.alpha();
        margin + u * (p.alpha() - 2.0 * margin)
    }
}
