//! Incentive compatibility when students choose their school.
//!
//! At equilibrium a school's indirect utility is affine in the student's
//! type, `U*_s(theta) = zeta_s + theta * c'(e*_s)`. Without transfers that
//! forces all schools to look alike; with fees, exactly the regular systems
//! (type cutoffs with non-decreasing tier efforts) can be implemented.

use std::fmt;

use rand::Rng;

use crate::design::{ExtremeRuleSelector, SchoolSystem};
use crate::distribution::TypeDistribution;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{
    payoff_unchecked, q_fail, solve_effort, GradingRule, ModelParams, MAX_ITERATIONS,
};
use crate::solve::{bisect, golden_max};

/// Utility slack for incentive checks without transfers.
pub const IC_TOL: f64 = 1e-10;
/// Utility slack for the fee grid check.
pub const FEE_TOL: f64 = 1e-9;
/// Tolerance on tier self-consistency (effort, mass, mean).
pub const CONSISTENCY_TOL: f64 = 1e-9;
/// Slack on the tier-effort ordering and on contraction inequalities.
pub const ORDER_TOL: f64 = 1e-9;
/// Interior cutoffs scanned by [`constrained_optimal`].
pub const CUTOFF_GRID: usize = 2000;
/// Types checked by the fee incentive check.
pub const FEE_GRID: usize = 1000;

/// Affine indirect utility of one school.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaEntry {
    pub intercept: f64,
    /// `c'(e*_s)`
    pub slope: f64,
    pub effort: f64,
}

impl ZetaEntry {
    pub fn utility(&self, theta: f64) -> f64 {
        self.intercept + theta * self.slope
    }
}

/// `zeta_s = q-(e*) + [g0 + e* (g1 - g0)] c'(e*) / (g1 - g0) - c(e*)`.
pub fn zeta(theta_bar: f64, rule: &GradingRule, params: &ModelParams) -> Result<ZetaEntry> {
    params.check_type(theta_bar, "theta_bar")?;
    params.check_rule(rule)?;
    let effort = solve_effort(theta_bar, rule, params)?.effort;
    Ok(zeta_at(theta_bar, rule, effort, params))
}

fn zeta_at(theta_bar: f64, rule: &GradingRule, effort: f64, params: &ModelParams) -> ZetaEntry {
    let cost = params.cost();
    let slope = cost.marginal(effort);
    let intercept = q_fail(theta_bar + effort, rule)
        + (rule.g0() + effort * rule.spread()) * slope / rule.spread()
        - cost.value(effort);
    ZetaEntry {
        intercept,
        slope,
        effort,
    }
}

/// `U*_s(theta)` evaluated directly from the payoff function.
pub fn indirect_utility(
    theta: f64,
    theta_bar: f64,
    rule: &GradingRule,
    effort: f64,
    params: &ModelParams,
) -> f64 {
    payoff_unchecked(theta, effort, theta_bar + effort, rule, params.cost())
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcWitness {
    pub student: usize,
    pub current_school: usize,
    pub better_school: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IcVerdict {
    Compatible,
    Violated(IcWitness),
}

impl IcVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, IcVerdict::Compatible)
    }
}

/// Whether every student weakly prefers their own school (within 1e-10).
/// On failure, the witness is the student with the largest utility gain
/// from switching (first in student order on ties).
pub fn ic_without_transfers(system: &SchoolSystem, params: &ModelParams) -> Result<IcVerdict> {
    let efforts = system.efforts(params)?;
    let schools: Vec<(f64, GradingRule, f64)> = (0..system.num_schools())
        .map(|s| (system.means()[s], system.rules()[s], efforts[s].effort))
        .collect();
    let mut worst: Option<IcWitness> = None;
    for (j, student) in system.students().iter().enumerate() {
        let own = system.assignment()[j];
        let utility = |s: usize| {
            let (m, r, e) = schools[s];
            indirect_utility(student.theta, m, &r, e, params)
        };
        let own_u = utility(own);
        let (best_s, best_u) = (0..schools.len())
            .map(|s| (s, utility(s)))
            .fold((own, own_u), |a, b| if b.1 > a.1 { b } else { a });
        let gap = best_u - own_u;
        if gap > IC_TOL && worst.as_ref().is_none_or(|w| gap > w.gap) {
            worst = Some(IcWitness {
                student: j,
                current_school: own,
                better_school: best_s,
                gap,
            });
        }
    }
    Ok(match worst {
        None => IcVerdict::Compatible,
        Some(w) => IcVerdict::Violated(w),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tier {
    pub rule: GradingRule,
    pub mass: f64,
    pub mean_type: f64,
    pub effort: f64,
}

/// Tiered system over a continuous type distribution: cutoffs
/// `0 = c_0 < c_1 < ... < c_r = alpha` and one school per tier. Fields are
/// public so that candidates can be checked with [`is_regular`].
#[derive(Debug, Clone, PartialEq)]
pub struct RegularSystem {
    pub cutoffs: Vec<f64>,
    pub tiers: Vec<Tier>,
}

impl RegularSystem {
    /// Builds tiers from interior cutoffs and one rule per tier, solving
    /// each tier's equilibrium effort.
    pub fn from_cutoffs(
        dist: &TypeDistribution,
        interior: &[f64],
        rules: &[GradingRule],
        params: &ModelParams,
    ) -> Result<Self> {
        if rules.len() != interior.len() + 1 {
            return Err(Error::InvalidSystem(format!(
                "{} interior cutoffs need {} rules, got {}",
                interior.len(),
                interior.len() + 1,
                rules.len()
            )));
        }
        let mut cutoffs = Vec::with_capacity(interior.len() + 2);
        cutoffs.push(0.0);
        cutoffs.extend_from_slice(interior);
        cutoffs.push(dist.alpha());
        let mut tiers = Vec::with_capacity(rules.len());
        for (k, rule) in rules.iter().enumerate() {
            let (a, b) = (cutoffs[k], cutoffs[k + 1]);
            if b <= a {
                return Err(Error::InvalidSystem(format!(
                    "cutoffs not increasing at tier {k}"
                )));
            }
            let mass = dist.mass_between(a, b);
            let cdf_b = dist.cdf(b);
            let mean_type = dist
                .conditional_mean(a, b)
                .filter(|_| mass > CONSISTENCY_TOL)
                .ok_or(Error::DegenerateTier {
                    cutoff: b,
                    cdf: cdf_b,
                })?;
            params.check_rule(rule)?;
            let effort = solve_effort(mean_type, rule, params)?.effort;
            tiers.push(Tier {
                rule: *rule,
                mass,
                mean_type,
                effort,
            });
        }
        Ok(RegularSystem { cutoffs, tiers })
    }

    pub fn single_tier(
        dist: &TypeDistribution,
        rule: &GradingRule,
        params: &ModelParams,
    ) -> Result<Self> {
        Self::from_cutoffs(dist, &[], &[*rule], params)
    }

    pub fn num_tiers(&self) -> usize {
        self.tiers.len()
    }

    /// `sum_k M_k [mean_k + e_k - c(e_k)]`
    pub fn welfare(&self, params: &ModelParams) -> f64 {
        self.tiers
            .iter()
            .map(|t| t.mass * (t.mean_type + t.effort - params.cost().value(t.effort)))
            .sum()
    }

    /// Tier attended by type `theta`; types exactly at a cutoff go to the
    /// lower tier.
    pub fn tier_of(&self, theta: f64) -> usize {
        let r = self.tiers.len();
        self.cutoffs[1..r]
            .iter()
            .position(|&c| theta <= c)
            .unwrap_or(r - 1)
    }
}

/// First violated regularity condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Irregularity {
    NoTiers,
    CutoffCount {
        cutoffs: usize,
        tiers: usize,
    },
    Endpoints,
    CutoffOrder {
        tier: usize,
    },
    EmptyTier {
        tier: usize,
    },
    MassMismatch {
        tier: usize,
        expected: f64,
        actual: f64,
    },
    MeanMismatch {
        tier: usize,
        expected: f64,
        actual: f64,
    },
    InvalidRule {
        tier: usize,
    },
    EffortMismatch {
        tier: usize,
        expected: f64,
        actual: f64,
    },
    EffortMonotonicity {
        tier: usize,
        lower: f64,
        upper: f64,
    },
}

impl fmt::Display for Irregularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Irregularity::NoTiers => write!(f, "no tiers"),
            Irregularity::CutoffCount { cutoffs, tiers } => {
                write!(f, "{cutoffs} cutoffs for {tiers} tiers")
            }
            Irregularity::Endpoints => write!(f, "cutoffs must start at 0 and end at alpha"),
            Irregularity::CutoffOrder { tier } => {
                write!(f, "cutoffs not increasing at tier {tier}")
            }
            Irregularity::EmptyTier { tier } => write!(f, "tier {tier} has no mass"),
            Irregularity::MassMismatch {
                tier,
                expected,
                actual,
            } => write!(
                f,
                "tier {tier} mass {actual} but distribution gives {expected}"
            ),
            Irregularity::MeanMismatch {
                tier,
                expected,
                actual,
            } => write!(
                f,
                "tier {tier} mean {actual} but distribution gives {expected}"
            ),
            Irregularity::InvalidRule { tier } => write!(f, "tier {tier} rule exceeds the cap b"),
            Irregularity::EffortMismatch {
                tier,
                expected,
                actual,
            } => write!(
                f,
                "tier {tier} effort {actual} is not the equilibrium {expected}"
            ),
            Irregularity::EffortMonotonicity { tier, lower, upper } => write!(
                f,
                "effort-monotonicity: tier {tier} effort {lower} exceeds tier {} effort {upper}",
                tier + 1
            ),
        }
    }
}

/// Checks every [`RegularSystem`] invariant against `dist`, in order:
/// shape, cutoffs, masses, means, efforts, then effort monotonicity.
pub fn is_regular(
    candidate: &RegularSystem,
    dist: &TypeDistribution,
    params: &ModelParams,
) -> std::result::Result<(), Irregularity> {
    let r = candidate.tiers.len();
    if r == 0 {
        return Err(Irregularity::NoTiers);
    }
    let c = &candidate.cutoffs;
    if c.len() != r + 1 {
        return Err(Irregularity::CutoffCount {
            cutoffs: c.len(),
            tiers: r,
        });
    }
    if c[0] != 0.0 || (c[r] - dist.alpha()).abs() > 1e-12 {
        return Err(Irregularity::Endpoints);
    }
    for (k, tier) in candidate.tiers.iter().enumerate() {
        if c[k + 1] <= c[k] {
            return Err(Irregularity::CutoffOrder { tier: k });
        }
        let mass = dist.mass_between(c[k], c[k + 1]);
        if mass <= 0.0 || tier.mass <= 0.0 {
            return Err(Irregularity::EmptyTier { tier: k });
        }
        if (mass - tier.mass).abs() > CONSISTENCY_TOL {
            return Err(Irregularity::MassMismatch {
                tier: k,
                expected: mass,
                actual: tier.mass,
            });
        }
        let mean = dist.conditional_mean(c[k], c[k + 1]).unwrap_or(f64::NAN);
        if !((mean - tier.mean_type).abs() <= CONSISTENCY_TOL) {
            return Err(Irregularity::MeanMismatch {
                tier: k,
                expected: mean,
                actual: tier.mean_type,
            });
        }
        if params.check_rule(&tier.rule).is_err() {
            return Err(Irregularity::InvalidRule { tier: k });
        }
        let expected = solve_effort(mean, &tier.rule, params)
            .map(|e| e.effort)
            .unwrap_or(f64::NAN);
        if !((expected - tier.effort).abs() <= CONSISTENCY_TOL) {
            return Err(Irregularity::EffortMismatch {
                tier: k,
                expected,
                actual: tier.effort,
            });
        }
    }
    for (k, w) in candidate.tiers.windows(2).enumerate() {
        if w[1].effort < w[0].effort - 1e-12 {
            return Err(Irregularity::EffortMonotonicity {
                tier: k,
                lower: w[0].effort,
                upper: w[1].effort,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeeSchedule {
    /// Fee per tier, `fees[0] = 0`.
    pub fees: Vec<f64>,
    /// `|(U*_{k+1} - t_{k+1}) - (U*_k - t_k)|` at each interior cutoff.
    pub indifference_residuals: Vec<f64>,
    /// Largest gain from switching tiers over the type grid (never positive
    /// beyond the tolerance).
    pub max_switch_gain: f64,
}

impl FeeSchedule {
    pub fn max_residual(&self) -> f64 {
        self.indifference_residuals
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }
}

/// Fees that make a regular system incentive compatible: `t_1 = 0` and each
/// cutoff type indifferent between adjacent tiers,
/// `t_{k+1} = t_k + (zeta_{k+1} - zeta_k) + c_k (c'(e_{k+1}) - c'(e_k))`.
/// The schedule is then checked on a 1000-point type grid.
pub fn fees_for_regular(
    system: &RegularSystem,
    dist: &TypeDistribution,
    params: &ModelParams,
) -> Result<FeeSchedule> {
    is_regular(system, dist, params).map_err(Error::NotRegular)?;
    let zetas: Vec<ZetaEntry> = system
        .tiers
        .iter()
        .map(|t| zeta_at(t.mean_type, &t.rule, t.effort, params))
        .collect();
    let mut fees = vec![0.0; zetas.len()];
    for k in 1..zetas.len() {
        let cut = system.cutoffs[k];
        fees[k] = fees[k - 1]
            + (zetas[k].intercept - zetas[k - 1].intercept)
            + cut * (zetas[k].slope - zetas[k - 1].slope);
    }
    let net = |k: usize, theta: f64| {
        let t = &system.tiers[k];
        indirect_utility(theta, t.mean_type, &t.rule, t.effort, params) - fees[k]
    };
    let indifference_residuals = (1..zetas.len())
        .map(|k| {
            let cut = system.cutoffs[k];
            (net(k, cut) - net(k - 1, cut)).abs()
        })
        .collect();

    let alpha = dist.alpha();
    let mut max_switch_gain = f64::NEG_INFINITY;
    for i in 0..FEE_GRID {
        let theta = alpha * (i as f64 + 0.5) / FEE_GRID as f64;
        let own = system.tier_of(theta);
        let own_net = net(own, theta);
        for k in 0..zetas.len() {
            let gain = net(k, theta) - own_net;
            if k != own && gain > FEE_TOL {
                return Err(Error::FeeCheck {
                    theta,
                    tier: own,
                    better: k,
                    gain,
                });
            }
            max_switch_gain = max_switch_gain.max(gain);
        }
    }
    Ok(FeeSchedule {
        fees,
        indifference_residuals,
        max_switch_gain,
    })
}

/// Tough bottom tier below `cutoff`, lenient top tier above it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoTierEval {
    pub cutoff: f64,
    pub bottom_mass: f64,
    pub bottom_mean: f64,
    pub top_mean: f64,
    pub bottom_effort: f64,
    pub top_effort: f64,
    pub welfare: f64,
}

impl TwoTierEval {
    /// `e_top >= e_bottom`, the regularity requirement for two tiers.
    pub fn is_monotone(&self) -> bool {
        self.top_effort >= self.bottom_effort
    }
}

/// `W = mean(F) + F(c) (e_b - c(e_b)) + (1 - F(c)) (e_t - c(e_t))` with
/// `e_b = xi(E[theta | theta <= c], tough)`, `e_t = xi(E[theta | theta > c], lenient)`.
pub fn welfare_two_tier(
    dist: &TypeDistribution,
    cutoff: f64,
    params: &ModelParams,
) -> Result<TwoTierEval> {
    if !(cutoff > 0.0 && cutoff < dist.alpha()) {
        return Err(Error::Domain {
            what: "cutoff",
            value: cutoff,
            domain: "(0, alpha)",
        });
    }
    let mass = dist.cdf(cutoff);
    if mass <= CONSISTENCY_TOL || mass >= 1.0 - CONSISTENCY_TOL {
        return Err(Error::DegenerateTier { cutoff, cdf: mass });
    }
    let degenerate = Error::DegenerateTier { cutoff, cdf: mass };
    let bottom_mean = dist
        .conditional_mean(0.0, cutoff)
        .ok_or(degenerate.clone())?;
    let top_mean = dist
        .conditional_mean(cutoff, dist.alpha())
        .ok_or(degenerate)?;
    let bottom_effort = solve_effort(bottom_mean, &params.tough(), params)?.effort;
    let top_effort = solve_effort(top_mean, &params.lenient(), params)?.effort;
    let cost = params.cost();
    let welfare = dist.mean()
        + mass * (bottom_effort - cost.value(bottom_effort))
        + (1.0 - mass) * (top_effort - cost.value(top_effort));
    Ok(TwoTierEval {
        cutoff,
        bottom_mass: mass,
        bottom_mean,
        top_mean,
        bottom_effort,
        top_effort,
        welfare,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedDesign {
    pub system: RegularSystem,
    pub fees: FeeSchedule,
    pub welfare: f64,
    pub single_tier_welfare: f64,
    /// Two-tier welfare maximiser ignoring effort monotonicity.
    pub unconstrained: Option<TwoTierEval>,
    /// Best two-tier split with `e_top >= e_bottom`.
    pub constrained: Option<TwoTierEval>,
    /// Cutoff at which the two tier efforts coincide, if inside the support.
    pub equalization_cutoff: Option<f64>,
    /// The unconstrained two-tier maximiser violates effort monotonicity.
    pub constraint_binding: bool,
}

impl ConstrainedDesign {
    /// Type separating the tough bottom tier from the lenient top tier. A
    /// single tough school is the cutoff raised to `alpha`; a single
    /// lenient school is the cutoff lowered to 0.
    pub fn reported_cutoff(&self, params: &ModelParams) -> f64 {
        match self.system.tiers.as_slice() {
            [only] if only.rule == params.tough() => *self.system.cutoffs.last().unwrap(),
            [_] => 0.0,
            _ => self.system.cutoffs[1],
        }
    }
}

/// Welfare-maximising system among those implementable with fees: the
/// better of the single-tier system with its best extreme rule and the best
/// monotone two-tier split.
///
/// Cutoffs are scanned on a 2000-point grid and refined by golden-section
/// search. When the unconstrained optimum has `e_top < e_bottom`, the
/// feasible cutoffs form the interval above the unique equalization point
/// (`e_top - e_bottom` increases with the cutoff), so the cutoff is raised.
pub fn constrained_optimal(
    dist: &TypeDistribution,
    params: &ModelParams,
) -> Result<ConstrainedDesign> {
    constrained_optimal_with(dist, params, Exec::default())
}

pub fn constrained_optimal_with(
    dist: &TypeDistribution,
    params: &ModelParams,
    exec: Exec,
) -> Result<ConstrainedDesign> {
    if (dist.alpha() - params.alpha()).abs() > 1e-12 {
        return Err(Error::param(
            "alpha",
            "distribution support must be [0, alpha]",
        ));
    }
    let alpha = dist.alpha();
    let selector = ExtremeRuleSelector::new(params)?;
    let single_rule = selector.select(dist.mean());
    let single = RegularSystem::single_tier(dist, &single_rule, params)?;
    let single_tier_welfare = single.welfare(params);

    let grid: Vec<f64> = (1..=CUTOFF_GRID)
        .map(|i| alpha * i as f64 / (CUTOFF_GRID + 1) as f64)
        .collect();
    let evals: Vec<Option<TwoTierEval>> =
        exec.map(&grid, |&c| welfare_two_tier(dist, c, params).ok());
    let score = |c: f64| welfare_two_tier(dist, c, params).map_or(f64::NEG_INFINITY, |e| e.welfare);

    let argmax = |feasible: &dyn Fn(&TwoTierEval) -> bool| {
        evals
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.filter(|e| feasible(e)).map(|e| (i, e)))
            .fold(None::<(usize, TwoTierEval)>, |best, (i, e)| match best {
                Some((_, b)) if b.welfare >= e.welfare => best,
                _ => Some((i, e)),
            })
    };
    let refine = |i: usize, lo_limit: f64| -> Option<TwoTierEval> {
        let lo = if i == 0 { grid[0] } else { grid[i - 1] }.max(lo_limit);
        let hi = grid[(i + 1).min(grid.len() - 1)];
        let (c, _) = golden_max(score, lo, hi, 1e-12, 200);
        welfare_two_tier(dist, c, params).ok()
    };

    let unconstrained = argmax(&|_| true).and_then(|(i, e)| {
        refine(i, 0.0)
            .filter(|r| r.welfare >= e.welfare)
            .or(Some(e))
    });

    // e_top - e_bottom is increasing in the cutoff; locate its zero.
    let gap = |c: f64| {
        welfare_two_tier(dist, c, params).map_or(f64::NAN, |e| e.top_effort - e.bottom_effort)
    };
    let valid: Vec<(usize, TwoTierEval)> = evals
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.map(|e| (i, e)))
        .collect();
    let mut equalization_cutoff = None;
    if let (Some(first), Some(_)) = (valid.first(), valid.last()) {
        if !first.1.is_monotone() {
            if let Some(w) = valid
                .windows(2)
                .find(|w| !w[0].1.is_monotone() && w[1].1.is_monotone())
            {
                let run = bisect(gap, grid[w[0].0], grid[w[1].0], 0.0, MAX_ITERATIONS)?;
                // keep the feasible side of the final bracket
                let c = if run.f_hi >= 0.0 { run.hi } else { run.lo };
                equalization_cutoff = Some(c);
            }
        }
    }

    let constrained = argmax(&|e| e.is_monotone()).map(|(i, e)| {
        let mut best = e;
        if let Some(r) = refine(i, equalization_cutoff.unwrap_or(0.0)) {
            if r.is_monotone() && r.welfare > best.welfare {
                best = r;
            }
        }
        if let Some(eq) = equalization_cutoff.and_then(|c| welfare_two_tier(dist, c, params).ok()) {
            if eq.is_monotone() && eq.welfare > best.welfare {
                best = eq;
            }
        }
        best
    });
    let constraint_binding = unconstrained.is_some_and(|u| !u.is_monotone());

    let (system, welfare) = match constrained {
        Some(t) if t.welfare > single_tier_welfare + 1e-12 => {
            let sys = RegularSystem::from_cutoffs(
                dist,
                &[t.cutoff],
                &[params.tough(), params.lenient()],
                params,
            )?;
            let w = sys.welfare(params);
            (sys, w)
        }
        _ => (single, single_tier_welfare),
    };
    let fees = fees_for_regular(&system, dist, params)?;
    Ok(ConstrainedDesign {
        system,
        fees,
        welfare,
        single_tier_welfare,
        unconstrained,
        constrained,
        equalization_cutoff,
        constraint_binding,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contraction {
    None,
    NonDecreasing,
    Increasing,
}

/// Whether `coarse` is a contraction of `fine`: its cutoffs are a subset of
/// `fine`'s and each of its tier efforts is at least the mass-weighted mean
/// of the `fine` tier efforts it covers. `Increasing` if one inequality is
/// strict by more than 1e-9.
pub fn is_contraction(fine: &RegularSystem, coarse: &RegularSystem) -> Contraction {
    let find = |c: f64| fine.cutoffs.iter().position(|&x| (x - c).abs() <= 1e-12);
    let mut strict = false;
    for k in 0..coarse.tiers.len() {
        let (Some(lo), Some(hi)) = (find(coarse.cutoffs[k]), find(coarse.cutoffs[k + 1])) else {
            return Contraction::None;
        };
        if hi <= lo {
            return Contraction::None;
        }
        let covered = &fine.tiers[lo..hi];
        let mass: f64 = covered.iter().map(|t| t.mass).sum();
        let avg = covered.iter().map(|t| t.mass * t.effort).sum::<f64>() / mass;
        let e = coarse.tiers[k].effort;
        if e < avg - ORDER_TOL {
            return Contraction::None;
        }
        if e > avg + ORDER_TOL {
            strict = true;
        }
    }
    if strict {
        Contraction::Increasing
    } else {
        Contraction::NonDecreasing
    }
}

/// Draws a random regular system: `r` uniform in `1..=max_tiers`, sorted
/// uniform cutoffs, the better extreme rule per tier mean. Draws that fail
/// regularity are discarded; gives up after `max_draws`.
pub fn random_regular_system<R: Rng>(
    dist: &TypeDistribution,
    params: &ModelParams,
    selector: &ExtremeRuleSelector,
    max_tiers: usize,
    max_draws: usize,
    rng: &mut R,
) -> Option<RegularSystem> {
    for _ in 0..max_draws {
        let r = rng.random_range(1..=max_tiers.max(1));
        let mut interior: Vec<f64> = (1..r)
            .map(|_| rng.random_range(0.0..dist.alpha()))
            .collect();
        interior.sort_by(f64::total_cmp);
        let mut bounds = vec![0.0];
        bounds.extend_from_slice(&interior);
        bounds.push(dist.alpha());
        let rules: Option<Vec<GradingRule>> = bounds
            .windows(2)
            .map(|w| {
                dist.conditional_mean(w[0], w[1])
                    .map(|m| selector.select(m))
            })
            .collect();
        let Some(rules) = rules else { continue };
        let Ok(sys) = RegularSystem::from_cutoffs(dist, &interior, &rules, params) else {
            continue;
        };
        if is_regular(&sys, dist, params).is_ok() {
            return Some(sys);
        }
    }
    None
}
