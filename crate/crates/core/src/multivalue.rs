//! Three productive values `v1 < v2 < v3` and three grades `A > B > C`.
//!
//! A student's value is drawn from `(1 - x) pi_low + x pi_high` with
//! `x = theta + e`; a grading matrix maps each value to a distribution over
//! grades and employers pay the posterior expected value of the grade.

use rand::Rng;

use crate::design::{increasing_crossing, Cutoff, CUTOFF_MARGIN};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{EquilibriumResult, ModelParams, EFFORT_TOL, MAX_ITERATIONS};
use crate::solve::bisect;

/// Probability sums must be within this of one.
pub const SUM_TOL: f64 = 1e-12;
/// Grades with total probability at or below this are unreachable.
pub const REACH_TOL: f64 = 1e-14;
/// Effort grid step for the root scan on general matrices.
pub const ROOT_SCAN_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueTriple([f64; 3]);

impl ValueTriple {
    pub fn new(v1: f64, v2: f64, v3: f64) -> Result<Self> {
        if !(v1.is_finite() && v3.is_finite() && v1 < v2 && v2 < v3) {
            return Err(Error::param(
                "values",
                format!("need v1 < v2 < v3, got ({v1}, {v2}, {v3})"),
            ));
        }
        Ok(ValueTriple([v1, v2, v3]))
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }
}

/// Low- and high-effort outcome distributions over `(v1, v2, v3)`, with
/// `pi_high` first-order stochastically dominating `pi_low`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeDistributions {
    pi_low: [f64; 3],
    pi_high: [f64; 3],
}

/// Whether the sufficient conditions for monotone canonical-rule efforts
/// hold at a given `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SideConditions {
    pub tough: bool,
    pub lenient: bool,
}

impl OutcomeDistributions {
    pub fn new(pi_low: [f64; 3], pi_high: [f64; 3]) -> Result<Self> {
        for (name, p) in [("pi_low", &pi_low), ("pi_high", &pi_high)] {
            if p.iter().any(|v| !v.is_finite() || *v < 0.0)
                || (p.iter().sum::<f64>() - 1.0).abs() > SUM_TOL
            {
                return Err(Error::param(
                    name,
                    format!("{p:?} is not a probability vector"),
                ));
            }
        }
        let (l1, l2) = (pi_low[0], pi_low[0] + pi_low[1]);
        let (h1, h2) = (pi_high[0], pi_high[0] + pi_high[1]);
        if h1 > l1 || h2 > l2 || (h1 == l1 && h2 == l2) {
            return Err(Error::param(
                "pi_high",
                "must first-order stochastically dominate pi_low (strictly somewhere)",
            ));
        }
        Ok(OutcomeDistributions { pi_low, pi_high })
    }

    pub fn pi_low(&self) -> [f64; 3] {
        self.pi_low
    }

    pub fn pi_high(&self) -> [f64; 3] {
        self.pi_high
    }

    fn delta(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.pi_high[i] - self.pi_low[i])
    }

    /// Besides the sign conditions on `pi_high - pi_low`, the tough rule
    /// needs `pi_2 / pi_1` and the lenient rule `pi_3 / pi_2` to be
    /// non-decreasing along the mix, which is what makes the pooled grade's
    /// posterior rise with effort. Dominance alone does not ensure it.
    pub fn side_conditions(&self, b: f64) -> SideConditions {
        let d = self.delta();
        let (lo, hi) = (self.pi_low, self.pi_high);
        let ratio_up = |i: usize, j: usize| hi[j] * lo[i] >= lo[j] * hi[i];
        SideConditions {
            tough: d[0] < 0.0
                && (d[1] < 0.0 || (1.0 - b) * d[1].abs() < d[0].abs())
                && ratio_up(0, 1),
            lenient: d[2] > 0.0
                && (d[1] > 0.0 || (1.0 - b) * d[1].abs() < d[2].abs())
                && ratio_up(1, 2),
        }
    }
}

/// `(1 - x) pi_low + x pi_high`
pub fn mix(x: f64, dists: &OutcomeDistributions) -> Result<[f64; 3]> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            what: "x",
            value: x,
            domain: "[0, 1]",
        });
    }
    Ok(mix_unchecked(x, dists))
}

fn mix_unchecked(x: f64, d: &OutcomeDistributions) -> [f64; 3] {
    std::array::from_fn(|i| (1.0 - x) * d.pi_low[i] + x * d.pi_high[i])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grade {
    A,
    B,
    C,
}

impl Grade {
    pub const ALL: [Grade; 3] = [Grade::A, Grade::B, Grade::C];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Tough3,
    Lenient3,
    TildeLenient,
    TildeTough,
    Custom,
}

impl MatrixKind {
    pub fn name(self) -> &'static str {
        match self {
            MatrixKind::Tough3 => "tough3",
            MatrixKind::Lenient3 => "lenient3",
            MatrixKind::TildeLenient => "tilde_lenient",
            MatrixKind::TildeTough => "tilde_tough",
            MatrixKind::Custom => "custom",
        }
    }

    pub fn is_canonical(self) -> bool {
        matches!(self, MatrixKind::Tough3 | MatrixKind::Lenient3)
    }
}

/// Row `i` is the grade distribution `(A, B, C)` for value `v_{i+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradingMatrix {
    rows: [[f64; 3]; 3],
    kind: MatrixKind,
}

fn check_b(b: f64) -> Result<()> {
    if b > 0.0 && b < 1.0 {
        Ok(())
    } else {
        Err(Error::param("b", format!("must lie in (0, 1), got {b}")))
    }
}

impl GradingMatrix {
    /// `v2` is deflated to `C` with probability `1 - b`.
    pub fn tough3(b: f64) -> Result<Self> {
        check_b(b)?;
        Ok(Self::named(
            [[0.0, 0.0, 1.0], [0.0, b, 1.0 - b], [1.0, 0.0, 0.0]],
            MatrixKind::Tough3,
        ))
    }

    /// `v2` is inflated to `A` with probability `1 - b`.
    pub fn lenient3(b: f64) -> Result<Self> {
        check_b(b)?;
        Ok(Self::named(
            [[0.0, 0.0, 1.0], [1.0 - b, b, 0.0], [1.0, 0.0, 0.0]],
            MatrixKind::Lenient3,
        ))
    }

    /// `v1` is inflated to `B` with probability `1 - b`.
    pub fn tilde_lenient(b: f64) -> Result<Self> {
        check_b(b)?;
        Ok(Self::named(
            [[0.0, 1.0 - b, b], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]],
            MatrixKind::TildeLenient,
        ))
    }

    /// `v3` is deflated to `B` with probability `1 - b`.
    pub fn tilde_tough(b: f64) -> Result<Self> {
        check_b(b)?;
        Ok(Self::named(
            [[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [b, 1.0 - b, 0.0]],
            MatrixKind::TildeTough,
        ))
    }

    pub fn custom(rows: [[f64; 3]; 3]) -> Result<Self> {
        for row in &rows {
            if row.iter().any(|v| !(0.0..=1.0).contains(v))
                || (row.iter().sum::<f64>() - 1.0).abs() > SUM_TOL
            {
                return Err(Error::param(
                    "matrix",
                    format!("row {row:?} is not a probability vector"),
                ));
            }
        }
        Ok(Self::named(rows, MatrixKind::Custom))
    }

    /// Canonical and tilde rules by name.
    pub fn by_name(name: &str, b: f64) -> Result<Self> {
        match name {
            "tough3" => Self::tough3(b),
            "lenient3" => Self::lenient3(b),
            "tilde_lenient" => Self::tilde_lenient(b),
            "tilde_tough" => Self::tilde_tough(b),
            other => Err(Error::param(
                "rule",
                format!("unknown three-value rule `{other}`"),
            )),
        }
    }

    fn named(rows: [[f64; 3]; 3], kind: MatrixKind) -> Self {
        GradingMatrix { rows, kind }
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        self.rows
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }
}

/// Posterior expected value per grade `(A, B, C)`; `None` for grades with
/// probability at most 1e-14 at `x`.
pub fn grade_posteriors(
    x: f64,
    m: &GradingMatrix,
    values: &ValueTriple,
    dists: &OutcomeDistributions,
) -> Result<[Option<f64>; 3]> {
    check_open(x)?;
    Ok(posteriors_unchecked(x, m, values, dists))
}

fn check_open(x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "x",
            value: x,
            domain: "(0, 1)",
        })
    }
}

fn posteriors_unchecked(
    x: f64,
    m: &GradingMatrix,
    values: &ValueTriple,
    dists: &OutcomeDistributions,
) -> [Option<f64>; 3] {
    let pi = mix_unchecked(x, dists);
    let v = values.0;
    std::array::from_fn(|g| {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..3 {
            let w = pi[i] * m.rows[i][g];
            num += v[i] * w;
            den += w;
        }
        (den > REACH_TOL).then(|| num / den)
    })
}

/// Probability of each grade at `x`.
pub fn grade_probabilities(
    x: f64,
    m: &GradingMatrix,
    dists: &OutcomeDistributions,
) -> Result<[f64; 3]> {
    let pi = mix(x, dists)?;
    Ok(std::array::from_fn(|g| {
        (0..3).map(|i| pi[i] * m.rows[i][g]).sum()
    }))
}

/// `sum_i (pi_high_i - pi_low_i) sum_g M[i][g] q^g(x)`. Unreachable grades
/// carry zero weight.
pub fn marginal_benefit3(
    m: &GradingMatrix,
    x: f64,
    values: &ValueTriple,
    dists: &OutcomeDistributions,
) -> Result<f64> {
    check_open(x)?;
    Ok(mb3(m, x, values, dists))
}

fn mb3(m: &GradingMatrix, x: f64, values: &ValueTriple, dists: &OutcomeDistributions) -> f64 {
    let q = posteriors_unchecked(x, m, values, dists);
    let d = dists.delta();
    (0..3)
        .map(|i| {
            d[i] * (0..3)
                .filter_map(|g| q[g].map(|qg| m.rows[i][g] * qg))
                .sum::<f64>()
        })
        .sum()
}

/// A three-value instance: values, outcome distributions and the model
/// parameters supplying `alpha` and the cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instance3 {
    pub values: ValueTriple,
    pub dists: OutcomeDistributions,
    pub params: ModelParams,
}

impl Instance3 {
    fn foc_gap(&self, theta_bar: f64, m: &GradingMatrix, e: f64) -> f64 {
        mb3(m, theta_bar + e, &self.values, &self.dists) - self.params.cost().marginal(e)
    }

    /// Expected payoff of a type-`theta` student choosing `effort` when
    /// employers price grades at prior `prior`.
    pub fn payoff(&self, theta: f64, effort: f64, prior: f64, m: &GradingMatrix) -> f64 {
        let q = posteriors_unchecked(prior, m, &self.values, &self.dists);
        let pi = mix_unchecked(theta + effort, &self.dists);
        let wage: f64 = (0..3)
            .map(|i| {
                pi[i]
                    * (0..3)
                        .filter_map(|g| q[g].map(|qg| m.rows[i][g] * qg))
                        .sum::<f64>()
            })
            .sum();
        wage - self.params.cost().value(effort)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Effort3 {
    /// Canonical rule: the single root.
    Unique(EquilibriumResult),
    /// General matrix: every sign change found on the scan grid, refined.
    Roots(Vec<f64>),
}

impl Effort3 {
    pub fn roots(&self) -> Vec<f64> {
        match self {
            Effort3::Unique(r) => vec![r.effort],
            Effort3::Roots(r) => r.clone(),
        }
    }

    /// The effort when exactly one equilibrium was found.
    pub fn single(&self) -> Option<f64> {
        match self {
            Effort3::Unique(r) => Some(r.effort),
            Effort3::Roots(r) if r.len() == 1 => Some(r[0]),
            Effort3::Roots(_) => None,
        }
    }
}

/// Equilibrium effort(s) at mean type `theta_bar`.
///
/// Canonical rules are solved by bisection on `MB3(theta_bar + e) - c'(e)`;
/// any other matrix is scanned on a 1e-4 effort grid and every sign change
/// is refined, so several equilibria may be returned.
pub fn equilibrium_effort3(theta_bar: f64, m: &GradingMatrix, inst: &Instance3) -> Result<Effort3> {
    inst.params.check_type(theta_bar, "theta_bar")?;
    let cap = inst.params.effort_cap();
    let h = |e: f64| inst.foc_gap(theta_bar, m, e);
    if m.kind.is_canonical() {
        let (h0, h_cap) = (h(0.0), h(cap));
        if !(h0 > 0.0 && h_cap < 0.0) {
            return Err(Error::Bracket {
                lo: 0.0,
                hi: cap,
                f_lo: h0,
                f_hi: h_cap,
            });
        }
        let run = bisect(h, 0.0, cap, 0.0, MAX_ITERATIONS)?;
        let (effort, residual) = run.root();
        if run.hi - run.lo > EFFORT_TOL {
            return Err(Error::NoConvergence {
                iterations: run.iterations,
                width: run.hi - run.lo,
            });
        }
        return Ok(Effort3::Unique(EquilibriumResult {
            effort,
            residual: residual.abs(),
            iterations: run.iterations,
        }));
    }
    Ok(Effort3::Roots(scan_roots(h, cap)))
}

fn scan_roots<F: Fn(f64) -> f64>(h: F, cap: f64) -> Vec<f64> {
    let n = (cap / ROOT_SCAN_STEP).ceil() as usize;
    let grid: Vec<f64> = (0..=n)
        .map(|i| (i as f64 * ROOT_SCAN_STEP).min(cap))
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&e| h(e)).collect();
    let mut roots = Vec::new();
    for i in 0..n {
        let (a, b) = (vals[i], vals[i + 1]);
        if a == 0.0 {
            roots.push(grid[i]);
        } else if a * b < 0.0 {
            if let Ok(run) = bisect(&h, grid[i], grid[i + 1], 0.0, MAX_ITERATIONS) {
                roots.push(run.root().0);
            }
        }
    }
    if vals[n] == 0.0 {
        roots.push(grid[n]);
    }
    roots
}

/// Whether `effort` is a best response on a 1e-3 deviation grid.
pub fn verify_equilibrium3(
    theta_bar: f64,
    m: &GradingMatrix,
    effort: f64,
    inst: &Instance3,
) -> bool {
    let prior = theta_bar + effort;
    let own = inst.payoff(theta_bar, effort, prior, m);
    let cap = inst.params.effort_cap();
    let steps = (cap / 1e-3).floor() as usize;
    (0..=steps)
        .map(|i| (i as f64 * 1e-3).min(cap))
        .chain(std::iter::once(cap))
        .all(|dev| inst.payoff(theta_bar, dev, prior, m) <= own + 1e-9)
}

fn xi3(theta_bar: f64, m: &GradingMatrix, inst: &Instance3) -> f64 {
    equilibrium_effort3(theta_bar, m, inst)
        .ok()
        .and_then(|e| e.single())
        .unwrap_or(f64::NAN)
}

/// Mean type at which the tough and lenient three-value rules induce equal
/// effort, using `b` from `inst.params`.
pub fn theta_dagger3(inst: &Instance3) -> Result<Cutoff> {
    let b = inst.params.b();
    let (tough, lenient) = (GradingMatrix::tough3(b)?, GradingMatrix::lenient3(b)?);
    let gap = |t: f64| xi3(t, &lenient, inst) - xi3(t, &tough, inst);
    increasing_crossing(gap, CUTOFF_MARGIN, inst.params.alpha() - CUTOFF_MARGIN)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub theta_bar: f64,
    pub roots: Vec<f64>,
}

/// Equilibrium roots along a grid of mean types. Points where the solver
/// fails carry no roots.
pub fn effort_curve(
    m: &GradingMatrix,
    thetas: &[f64],
    inst: &Instance3,
    exec: Exec,
) -> Vec<CurvePoint> {
    exec.map(thetas, |&t| CurvePoint {
        theta_bar: t,
        roots: equilibrium_effort3(t, m, inst)
            .map(|e| e.roots())
            .unwrap_or_default(),
    })
}

/// Instance where `xi(., tilde lenient) - xi(., tilde tough)` changes sign
/// along the mean-type grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeWitness {
    pub trial: usize,
    pub instance: Instance3,
    /// `(theta_bar, difference)` on the grid.
    pub differences: Vec<(f64, f64)>,
    pub sign_changes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TildeSearch {
    pub trials: usize,
    /// Trials where both tilde rules had a unique root at every grid point.
    pub usable: usize,
    pub witnesses: Vec<TildeWitness>,
}

fn random_simplex<R: Rng>(rng: &mut R) -> [f64; 3] {
    let (u, v) = (rng.random::<f64>(), rng.random::<f64>());
    let (lo, hi) = if u < v { (u, v) } else { (v, u) };
    [lo, hi - lo, 1.0 - hi]
}

/// Random search for instances where the tilde-rule effort comparison is
/// not monotone in the mean type. Values are drawn in `[0, 1]` with
/// `v1 = 0`, `v3 = 1`; `b` is redrawn per trial and the cost and `alpha`
/// come from `base`.
pub fn tilde_search<R: Rng>(
    base: &ModelParams,
    trials: usize,
    grid_points: usize,
    rng: &mut R,
) -> TildeSearch {
    let mut out = TildeSearch {
        trials,
        usable: 0,
        witnesses: Vec::new(),
    };
    let alpha = base.alpha();
    let thetas: Vec<f64> = (1..=grid_points)
        .map(|i| alpha * i as f64 / (grid_points + 1) as f64)
        .collect();
    for trial in 0..trials {
        let v2 = rng.random_range(0.05..0.95);
        let b = rng.random_range(0.05..0.95);
        let (p, q) = (random_simplex(rng), random_simplex(rng));
        let Ok(values) = ValueTriple::new(0.0, v2, 1.0) else {
            continue;
        };
        let Ok(dists) = OutcomeDistributions::new(p, q) else {
            continue;
        };
        let Ok(params) = ModelParams::new(alpha, b, *base.cost()) else {
            continue;
        };
        let inst = Instance3 {
            values,
            dists,
            params,
        };
        let (Ok(lo), Ok(hi)) = (
            GradingMatrix::tilde_lenient(b),
            GradingMatrix::tilde_tough(b),
        ) else {
            continue;
        };
        let diffs: Option<Vec<(f64, f64)>> = thetas
            .iter()
            .map(|&t| {
                let a = equilibrium_effort3(t, &lo, &inst).ok()?.single()?;
                let c = equilibrium_effort3(t, &hi, &inst).ok()?.single()?;
                Some((t, a - c))
            })
            .collect();
        let Some(differences) = diffs else { continue };
        out.usable += 1;
        let signs: Vec<f64> = differences
            .iter()
            .map(|d| d.1)
            .filter(|d| d.abs() > 1e-9)
            .map(f64::signum)
            .collect();
        let sign_changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        if sign_changes > 0 {
            out.witnesses.push(TildeWitness {
                trial,
                instance: inst,
                differences,
                sign_changes,
            });
        }
    }
    out
}
