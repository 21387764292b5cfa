//! Model primitives: cost functions, grading rules, employer posteriors,
//! student payoffs and the equilibrium effort solver.
//!
//! A student of type `theta` who exerts effort `e` has productive value 1
//! with probability `theta + e`. A grading rule `(g0, g1)` passes value-0
//! students with probability `g0` and value-1 students with probability `g1`.
//! Employers pay the posterior probability of value 1 given school and grade.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::solve::bisect;

/// Distance from {0, 1} below which a prior is rejected.
pub const PRIOR_GUARD: f64 = 1e-12;
/// Smallest admissible informativeness `g1 - g0`.
pub const MIN_SPREAD: f64 = 1e-9;
/// Slack allowed when comparing `g1 - g0` against the cap `b`.
pub const SPREAD_SLACK: f64 = 1e-12;
/// Tolerance on the equilibrium effort and on the first-order-condition residual.
pub const EFFORT_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 200;

/// Effort cost `c(e)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostFunction {
    /// `c(e) = kappa * e^2`
    Quadratic { kappa: f64 },
    /// `c(e) = kappa * e^p / p`, `p >= 2`
    Power { kappa: f64, p: f64 },
}

impl CostFunction {
    pub fn quadratic(kappa: f64) -> Self {
        CostFunction::Quadratic { kappa }
    }

    pub fn power(kappa: f64, p: f64) -> Self {
        CostFunction::Power { kappa, p }
    }

    pub fn value(&self, e: f64) -> f64 {
        match *self {
            CostFunction::Quadratic { kappa } => kappa * e * e,
            CostFunction::Power { kappa, p } => kappa * e.powf(p) / p,
        }
    }

    /// `c'(e)`
    pub fn marginal(&self, e: f64) -> f64 {
        match *self {
            CostFunction::Quadratic { kappa } => 2.0 * kappa * e,
            CostFunction::Power { kappa, p } => kappa * e.powf(p - 1.0),
        }
    }

    /// The effort at which marginal cost equals one. Every equilibrium effort
    /// lies below it, and `e - c(e)` is increasing up to it.
    pub fn inverse_marginal_one(&self) -> f64 {
        match *self {
            CostFunction::Quadratic { kappa } => 1.0 / (2.0 * kappa),
            CostFunction::Power { kappa, p } => kappa.powf(-1.0 / (p - 1.0)),
        }
    }

    fn validate(&self, alpha: f64) -> Result<()> {
        let (kappa, p) = match *self {
            CostFunction::Quadratic { kappa } => (kappa, 2.0),
            CostFunction::Power { kappa, p } => (kappa, p),
        };
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::param(
                "kappa",
                format!("must be positive, got {kappa}"),
            ));
        }
        if !(p.is_finite() && p >= 2.0) {
            return Err(Error::param("p", format!("exponent must be >= 2, got {p}")));
        }
        let cap = 1.0 - alpha;
        if self.marginal(0.0) != 0.0 {
            return Err(Error::param("cost", "c'(0) must be 0"));
        }
        if self.marginal(cap) <= 1.0 {
            return Err(Error::param(
                "kappa",
                format!(
                    "c'(1 - alpha) = {} must exceed 1 (alpha = {alpha})",
                    self.marginal(cap)
                ),
            ));
        }
        // c' strictly increasing and convex on [0, 1 - alpha].
        let n = 200;
        let grid: Vec<f64> = (0..=n).map(|i| cap * i as f64 / n as f64).collect();
        let slopes: Vec<f64> = grid.iter().map(|&e| self.marginal(e)).collect();
        if slopes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("cost", "c' must be strictly increasing"));
        }
        let curvature: Vec<f64> = slopes.windows(2).map(|w| w[1] - w[0]).collect();
        if curvature
            .windows(2)
            .any(|w| w[1] < w[0] - 1e-12 * w[0].abs().max(1.0))
        {
            return Err(Error::param("cost", "c'' must be non-decreasing"));
        }
        Ok(())
    }
}

/// Global model primitives: type-support bound `alpha`, informativeness cap
/// `b` and the effort cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    alpha: f64,
    b: f64,
    cost: CostFunction,
}

impl ModelParams {
    pub fn new(alpha: f64, b: f64, cost: CostFunction) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param(
                "alpha",
                format!("must lie in (0, 1), got {alpha}"),
            ));
        }
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::param("b", format!("must lie in (0, 1), got {b}")));
        }
        cost.validate(alpha)?;
        Ok(ModelParams { alpha, b, cost })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn cost(&self) -> &CostFunction {
        &self.cost
    }

    /// Largest feasible effort, `1 - alpha`.
    pub fn effort_cap(&self) -> f64 {
        1.0 - self.alpha
    }

    /// `(0, b)`: never passes a value-0 student.
    pub fn tough(&self) -> GradingRule {
        GradingRule::tough(self.b)
    }

    /// `(1 - b, 1)`: always passes a value-1 student.
    pub fn lenient(&self) -> GradingRule {
        GradingRule::lenient(self.b)
    }

    pub fn check_rule(&self, rule: &GradingRule) -> Result<()> {
        if rule.spread() > self.b + SPREAD_SLACK {
            return Err(Error::param(
                "rule",
                format!(
                    "g1 - g0 = {} exceeds the informativeness cap b = {}",
                    rule.spread(),
                    self.b
                ),
            ));
        }
        Ok(())
    }

    pub fn check_type(&self, theta: f64, what: &'static str) -> Result<()> {
        if theta > 0.0 && theta < self.alpha {
            Ok(())
        } else {
            Err(Error::Domain {
                what,
                value: theta,
                domain: "(0, alpha)",
            })
        }
    }

    fn check_effort(&self, e: f64, what: &'static str) -> Result<()> {
        if (0.0..=self.effort_cap()).contains(&e) {
            Ok(())
        } else {
            Err(Error::Domain {
                what,
                value: e,
                domain: "[0, 1 - alpha]",
            })
        }
    }
}

impl Default for ModelParams {
    /// `alpha = 0.5`, `b = 0.5`, `c(e) = 2 e^2`.
    fn default() -> Self {
        ModelParams {
            alpha: 0.5,
            b: 0.5,
            cost: CostFunction::Quadratic { kappa: 2.0 },
        }
    }
}

/// Pass probabilities `(g0, g1)` conditional on productive value 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradingRule {
    g0: f64,
    g1: f64,
}

impl GradingRule {
    pub fn new(g0: f64, g1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&g0) || !(0.0..=1.0).contains(&g1) {
            return Err(Error::param(
                "rule",
                format!("({g0}, {g1}) must lie in [0, 1]^2"),
            ));
        }
        if g1 - g0 < MIN_SPREAD {
            return Err(Error::param(
                "rule",
                format!("g1 - g0 = {} must be at least {MIN_SPREAD}", g1 - g0),
            ));
        }
        Ok(GradingRule { g0, g1 })
    }

    pub fn tough(b: f64) -> Self {
        GradingRule { g0: 0.0, g1: b }
    }

    pub fn lenient(b: f64) -> Self {
        GradingRule {
            g0: 1.0 - b,
            g1: 1.0,
        }
    }

    pub fn g0(&self) -> f64 {
        self.g0
    }

    pub fn g1(&self) -> f64 {
        self.g1
    }

    pub fn spread(&self) -> f64 {
        self.g1 - self.g0
    }

    /// Probability of a pass for a student whose success probability is `x`.
    pub fn pass_probability(&self, x: f64) -> f64 {
        x * self.g1 + (1.0 - x) * self.g0
    }
}

/// Equilibrium effort with solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumResult {
    pub effort: f64,
    /// `|B(G, theta_bar + effort) - c'(effort)|`
    pub residual: f64,
    pub iterations: usize,
}

fn check_prior(x: f64) -> Result<()> {
    if (PRIOR_GUARD..=1.0 - PRIOR_GUARD).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "prior",
            value: x,
            domain: "(0, 1)",
        })
    }
}

pub(crate) fn q_pass(x: f64, rule: &GradingRule) -> f64 {
    let num = x * rule.g1;
    num / (num + (1.0 - x) * rule.g0)
}

pub(crate) fn q_fail(x: f64, rule: &GradingRule) -> f64 {
    let num = x * (1.0 - rule.g1);
    let den = num + (1.0 - x) * (1.0 - rule.g0);
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub(crate) fn mb(rule: &GradingRule, x: f64) -> f64 {
    let (g0, g1) = (rule.g0, rule.g1);
    let d = g1 - g0;
    let pass = x * g1 / (g0 + x * d);
    let fail_den = 1.0 - g0 - x * d;
    let fail = if fail_den == 0.0 {
        0.0
    } else {
        x * (1.0 - g1) / fail_den
    };
    d * (pass - fail)
}

/// Posterior that a passing student has value 1, given prior success
/// probability `x = theta_bar + e_hat`.
pub fn posterior_pass_at(x: f64, rule: &GradingRule) -> Result<f64> {
    check_prior(x)?;
    Ok(q_pass(x, rule))
}

/// Posterior that a failing student has value 1 at prior `x`.
pub fn posterior_fail_at(x: f64, rule: &GradingRule) -> Result<f64> {
    check_prior(x)?;
    Ok(q_fail(x, rule))
}

pub fn posterior_pass(theta_bar: f64, e_hat: f64, rule: &GradingRule) -> Result<f64> {
    posterior_pass_at(theta_bar + e_hat, rule)
}

pub fn posterior_fail(theta_bar: f64, e_hat: f64, rule: &GradingRule) -> Result<f64> {
    posterior_fail_at(theta_bar + e_hat, rule)
}

/// Marginal benefit of effort `B(G, x)`:
/// `(g1 - g0) * [x g1 / (g0 + x (g1 - g0)) - x (1 - g1) / (1 - g0 - x (g1 - g0))]`.
pub fn marginal_benefit(rule: &GradingRule, x: f64) -> Result<f64> {
    check_prior(x)?;
    Ok(mb(rule, x))
}

/// Expected payoff of a type-`theta` student exerting `effort` in a school
/// with mean type `theta_bar` whose employers conjecture effort `conjecture`.
pub fn expected_payoff(
    theta: f64,
    effort: f64,
    conjecture: f64,
    theta_bar: f64,
    rule: &GradingRule,
    params: &ModelParams,
) -> Result<f64> {
    if !(0.0..=params.alpha).contains(&theta) {
        return Err(Error::Domain {
            what: "theta",
            value: theta,
            domain: "[0, alpha]",
        });
    }
    params.check_effort(effort, "effort")?;
    params.check_effort(conjecture, "conjecture")?;
    let prior = theta_bar + conjecture;
    check_prior(prior)?;
    Ok(payoff_unchecked(theta, effort, prior, rule, params.cost()))
}

pub(crate) fn payoff_unchecked(
    theta: f64,
    effort: f64,
    prior: f64,
    rule: &GradingRule,
    cost: &CostFunction,
) -> f64 {
    let pass = rule.pass_probability(theta + effort);
    pass * q_pass(prior, rule) + (1.0 - pass) * q_fail(prior, rule) - cost.value(effort)
}

/// The unique solution of `c'(e) = B(G, theta_bar + e)` on `(0, 1 - alpha)`.
///
/// `h(e) = B(G, theta_bar + e) - c'(e)` is strictly concave with `h(0) > 0`
/// and `h(1 - alpha) < 0`; both signs are checked before bisecting, so a
/// bracket error means the inputs are outside the model, not a solver fault.
pub fn equilibrium_effort(
    theta_bar: f64,
    rule: &GradingRule,
    params: &ModelParams,
) -> Result<EquilibriumResult> {
    params.check_type(theta_bar, "theta_bar")?;
    params.check_rule(rule)?;
    solve_effort(theta_bar, rule, params)
}

pub(crate) fn solve_effort(
    theta_bar: f64,
    rule: &GradingRule,
    params: &ModelParams,
) -> Result<EquilibriumResult> {
    let cost = params.cost();
    let h = |e: f64| mb(rule, theta_bar + e) - cost.marginal(e);
    let cap = params.effort_cap();
    let (h0, h_cap) = (h(0.0), h(cap));
    if !(h0 > 0.0 && h_cap < 0.0) {
        return Err(Error::Bracket {
            lo: 0.0,
            hi: cap,
            f_lo: h0,
            f_hi: h_cap,
        });
    }
    // Run to machine precision; EFFORT_TOL is the guaranteed bound.
    let run = bisect(h, 0.0, cap, 0.0, MAX_ITERATIONS)?;
    let (effort, residual) = run.root();
    let residual = residual.abs();
    if run.hi - run.lo > EFFORT_TOL || residual > EFFORT_TOL {
        return Err(Error::NoConvergence {
            iterations: run.iterations,
            width: run.hi - run.lo,
        });
    }
    Ok(EquilibriumResult {
        effort,
        residual,
        iterations: run.iterations,
    })
}

/// Equilibrium efforts for many mean types under one rule.
pub fn effort_sweep(
    thetas: &[f64],
    rule: &GradingRule,
    params: &ModelParams,
    exec: Exec,
) -> Vec<Result<EquilibriumResult>> {
    exec.map(thetas, |&t| equilibrium_effort(t, rule, params))
}

/// Grid step used by [`verify_equilibrium`].
pub const BEST_RESPONSE_STEP: f64 = 1e-3;

/// Whether `effort` is a best response for the mean-type student when
/// employers conjecture `effort`: no deviation on a 1e-3 grid over
/// `[0, 1 - alpha]` gains more than 1e-9.
pub fn verify_equilibrium(
    theta_bar: f64,
    rule: &GradingRule,
    effort: f64,
    params: &ModelParams,
) -> bool {
    let Ok(own) = expected_payoff(theta_bar, effort, effort, theta_bar, rule, params) else {
        return false;
    };
    let prior = theta_bar + effort;
    let cap = params.effort_cap();
    let steps = (cap / BEST_RESPONSE_STEP).floor() as usize;
    (0..=steps)
        .map(|i| (i as f64 * BEST_RESPONSE_STEP).min(cap))
        .chain(std::iter::once(cap))
        .all(|dev| payoff_unchecked(theta_bar, dev, prior, rule, params.cost()) <= own + 1e-9)
}
