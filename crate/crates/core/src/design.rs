//! Welfare accounting and socially optimal school systems.
//!
//! An optimal system is either single-tier, or two-tier with the tough rule
//! in the bottom tier and the lenient rule in the top tier. The prefix-cutoff
//! search in [`optimal_two_tier`] exploits that; [`brute_force_design`]
//! checks it by enumerating every partition and rule assignment.

use std::collections::BTreeMap;
use std::io::Read;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{solve_effort, EquilibriumResult, GradingRule, ModelParams};
use crate::solve::bisect;

/// Means closer than this are treated as equal.
pub const MEAN_TOL: f64 = 1e-9;
/// Welfare differences below this are ties, broken toward fewer schools.
pub const WELFARE_TIE: f64 = 1e-9;
/// Population-size guard for [`brute_force_design`].
pub const BRUTE_FORCE_LIMIT: usize = 6;
/// Distance from the ends of `(0, alpha)` searched by [`theta_dagger`].
pub const CUTOFF_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Student {
    pub id: String,
    pub theta: f64,
}

impl Student {
    pub fn new(id: impl Into<String>, theta: f64) -> Self {
        Student {
            id: id.into(),
            theta,
        }
    }
}

/// Students indexed `0..m` with types `thetas`.
pub fn students_from_types(thetas: &[f64]) -> Vec<Student> {
    thetas
        .iter()
        .enumerate()
        .map(|(i, &t)| Student::new(format!("s{i}"), t))
        .collect()
}

/// Reads a population from comma-delimited text with header `id,theta`.
pub fn read_population<R: Read>(reader: R) -> Result<Vec<Student>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Population(e.to_string()))?
        .clone();
    if headers.len() != 2 || &headers[0] != "id" || &headers[1] != "theta" {
        return Err(Error::Population(format!(
            "expected header `id,theta`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut students = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Population(e.to_string()))?;
        let theta: f64 = record[1].parse().map_err(|_| {
            Error::Population(format!("row {}: bad theta `{}`", line + 1, &record[1]))
        })?;
        students.push(Student::new(&record[0], theta));
    }
    if students.is_empty() {
        return Err(Error::Population("no students".into()));
    }
    Ok(students)
}

/// An assignment of students to schools together with each school's rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SchoolSystem {
    students: Vec<Student>,
    assignment: Vec<usize>,
    rules: Vec<GradingRule>,
    masses: Vec<f64>,
    means: Vec<f64>,
}

impl SchoolSystem {
    /// `assignment[j]` is the school of `students[j]`; every school in
    /// `0..rules.len()` must receive at least one student.
    pub fn new(
        students: Vec<Student>,
        assignment: Vec<usize>,
        rules: Vec<GradingRule>,
        params: &ModelParams,
    ) -> Result<Self> {
        if students.is_empty() {
            return Err(Error::InvalidSystem("no students".into()));
        }
        if assignment.len() != students.len() {
            return Err(Error::InvalidSystem(format!(
                "{} students but {} assignments",
                students.len(),
                assignment.len()
            )));
        }
        for s in &students {
            if !(s.theta > 0.0 && s.theta < params.alpha()) {
                return Err(Error::InvalidSystem(format!(
                    "student {} has type {} outside (0, alpha)",
                    s.id, s.theta
                )));
            }
        }
        let n = rules.len();
        let mut masses = vec![0.0; n];
        let mut sums = vec![0.0; n];
        for (s, &school) in students.iter().zip(&assignment) {
            if school >= n {
                return Err(Error::InvalidSystem(format!(
                    "student {} assigned to school {school}, only {n} schools",
                    s.id
                )));
            }
            masses[school] += 1.0;
            sums[school] += s.theta;
        }
        if let Some(empty) = masses.iter().position(|&m| m == 0.0) {
            return Err(Error::InvalidSystem(format!(
                "school {empty} has no students"
            )));
        }
        for rule in &rules {
            params.check_rule(rule)?;
        }
        let means = sums.iter().zip(&masses).map(|(s, m)| s / m).collect();
        Ok(SchoolSystem {
            students,
            assignment,
            rules,
            masses,
            means,
        })
    }

    pub fn num_schools(&self) -> usize {
        self.rules.len()
    }

    pub fn students(&self) -> &[Student] {
        &self.students
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn rules(&self) -> &[GradingRule] {
        &self.rules
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Indices of the students attending `school`.
    pub fn members(&self, school: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, &s)| s == school)
            .map(|(j, _)| j)
    }

    /// `e*_s` for every school.
    pub fn efforts(&self, params: &ModelParams) -> Result<Vec<EquilibriumResult>> {
        self.means
            .iter()
            .zip(&self.rules)
            .map(|(&m, r)| solve_effort(m, r, params))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchoolWelfare {
    pub mass: f64,
    pub mean_type: f64,
    pub rule: GradingRule,
    pub effort: f64,
    /// `m_s (theta_bar_s + e*_s - c(e*_s))`
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WelfareReport {
    pub total: f64,
    pub schools: Vec<SchoolWelfare>,
}

/// Social welfare `sum_s m_s [theta_bar_s + e*_s - c(e*_s)]`.
pub fn system_welfare(system: &SchoolSystem, params: &ModelParams) -> Result<WelfareReport> {
    let efforts = system.efforts(params)?;
    let schools: Vec<SchoolWelfare> = (0..system.num_schools())
        .map(|s| {
            let e = efforts[s].effort;
            let (mass, mean) = (system.masses[s], system.means[s]);
            SchoolWelfare {
                mass,
                mean_type: mean,
                rule: system.rules[s],
                effort: e,
                contribution: mass * (mean + e - params.cost().value(e)),
            }
        })
        .collect();
    Ok(WelfareReport {
        total: schools.iter().map(|s| s.contribution).sum(),
        schools,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum StructureClass {
    SingleTier,
    TwoTier {
        bottom: Vec<usize>,
        top: Vec<usize>,
        /// Highest type in the bottom tier; no top-tier student is below it.
        bottom_max_type: f64,
        top_min_type: f64,
    },
    Other,
}

impl StructureClass {
    pub fn name(&self) -> &'static str {
        match self {
            StructureClass::SingleTier => "single-tier",
            StructureClass::TwoTier { .. } => "two-tier",
            StructureClass::Other => "other",
        }
    }
}

pub fn structure_classify(system: &SchoolSystem) -> StructureClass {
    let means = system.means();
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]).then(a.cmp(&b)));
    let (lo, hi) = (means[order[0]], means[order[order.len() - 1]]);
    if hi - lo <= MEAN_TOL {
        return StructureClass::SingleTier;
    }
    let mut groups: Vec<Vec<usize>> = vec![vec![order[0]]];
    for &s in &order[1..] {
        let anchor = means[groups.last().unwrap()[0]];
        if means[s] - anchor <= MEAN_TOL {
            groups.last_mut().unwrap().push(s);
        } else {
            groups.push(vec![s]);
        }
    }
    if groups.len() != 2 {
        return StructureClass::Other;
    }
    let (mut bottom, mut top) = (groups[0].clone(), groups[1].clone());
    bottom.sort_unstable();
    top.sort_unstable();
    let tier_types = |tier: &[usize]| {
        tier.iter()
            .flat_map(|&s| system.members(s))
            .map(|j| system.students[j].theta)
            .collect::<Vec<_>>()
    };
    let bottom_max_type = tier_types(&bottom)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let top_min_type = tier_types(&top).into_iter().fold(f64::INFINITY, f64::min);
    if bottom_max_type <= top_min_type {
        StructureClass::TwoTier {
            bottom,
            top,
            bottom_max_type,
            top_min_type,
        }
    } else {
        StructureClass::Other
    }
}

/// Where a cutoff search ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffPosition {
    Interior,
    /// No sign change; the crossing lies at or below the lower search bound.
    BelowRange,
    /// No sign change; the crossing lies at or above the upper search bound.
    AboveRange,
}

impl CutoffPosition {
    pub fn name(&self) -> &'static str {
        match self {
            CutoffPosition::Interior => "interior",
            CutoffPosition::BelowRange => "below-range",
            CutoffPosition::AboveRange => "above-range",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub value: f64,
    pub position: CutoffPosition,
}

/// Bisection of an increasing function on `[lo, hi]`, reporting which side
/// the crossing falls on when there is none inside.
pub(crate) fn increasing_crossing<F>(f: F, lo: f64, hi: f64) -> Result<Cutoff>
where
    F: Fn(f64) -> f64,
{
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo >= 0.0 {
        return Ok(Cutoff {
            value: lo,
            position: CutoffPosition::BelowRange,
        });
    }
    if f_hi <= 0.0 {
        return Ok(Cutoff {
            value: hi,
            position: CutoffPosition::AboveRange,
        });
    }
    let run = bisect(f, lo, hi, 0.0, crate::model::MAX_ITERATIONS)?;
    Ok(Cutoff {
        value: run.root().0,
        position: CutoffPosition::Interior,
    })
}

fn xi(theta_bar: f64, rule: &GradingRule, params: &ModelParams) -> f64 {
    solve_effort(theta_bar, rule, params)
        .map(|r| r.effort)
        .unwrap_or(f64::NAN)
}

/// Mean type at which tough and lenient grading induce the same effort.
///
/// `theta -> xi(theta, lenient) - xi(theta, tough)` is strictly increasing,
/// so tough grading wins below the cutoff and lenient grading above it.
pub fn theta_dagger(params: &ModelParams) -> Result<Cutoff> {
    let (tough, lenient) = (params.tough(), params.lenient());
    let gap = |t: f64| xi(t, &lenient, params) - xi(t, &tough, params);
    increasing_crossing(gap, CUTOFF_MARGIN, params.alpha() - CUTOFF_MARGIN)
}

/// Picks between tough and lenient grading by comparing a mean type with a
/// precomputed cutoff.
#[derive(Debug, Clone, Copy)]
pub struct ExtremeRuleSelector {
    pub cutoff: Cutoff,
    pub tough: GradingRule,
    pub lenient: GradingRule,
}

impl ExtremeRuleSelector {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Ok(ExtremeRuleSelector {
            cutoff: theta_dagger(params)?,
            tough: params.tough(),
            lenient: params.lenient(),
        })
    }

    /// Tough strictly below the cutoff, lenient above; the knife-edge case
    /// (within 1e-9) goes to lenient.
    pub fn select(&self, theta_bar: f64) -> GradingRule {
        match self.cutoff.position {
            CutoffPosition::BelowRange => self.lenient,
            CutoffPosition::AboveRange => self.tough,
            CutoffPosition::Interior => {
                if theta_bar < self.cutoff.value - MEAN_TOL {
                    self.tough
                } else {
                    self.lenient
                }
            }
        }
    }

    pub fn is_knife_edge(&self, theta_bar: f64) -> bool {
        self.cutoff.position == CutoffPosition::Interior
            && (theta_bar - self.cutoff.value).abs() <= MEAN_TOL
    }
}

pub fn best_extreme_rule(theta_bar: f64, params: &ModelParams) -> Result<GradingRule> {
    params.check_type(theta_bar, "theta_bar")?;
    Ok(ExtremeRuleSelector::new(params)?.select(theta_bar))
}

/// An optimised system with its welfare and structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub system: SchoolSystem,
    pub welfare: WelfareReport,
    pub structure: StructureClass,
}

fn group_value(mass: f64, mean: f64, rule: &GradingRule, params: &ModelParams) -> Result<f64> {
    let e = solve_effort(mean, rule, params)?.effort;
    Ok(mass * (mean + e - params.cost().value(e)))
}

fn finish_design(system: SchoolSystem, params: &ModelParams) -> Result<Design> {
    let welfare = system_welfare(&system, params)?;
    let structure = structure_classify(&system);
    Ok(Design {
        system,
        welfare,
        structure,
    })
}

/// Best of the single-school system and every sorted prefix split with a
/// tough bottom tier and a lenient top tier.
pub fn optimal_two_tier(students: &[Student], params: &ModelParams) -> Result<Design> {
    optimal_two_tier_with(students, params, Exec::default())
}

pub fn optimal_two_tier_with(
    students: &[Student],
    params: &ModelParams,
    exec: Exec,
) -> Result<Design> {
    if students.is_empty() {
        return Err(Error::InvalidSystem("no students".into()));
    }
    for s in students {
        params.check_type(s.theta, "theta")?;
    }
    let m = students.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        students[a]
            .theta
            .total_cmp(&students[b].theta)
            .then(a.cmp(&b))
    });
    let mut prefix = vec![0.0; m + 1];
    for (k, &j) in order.iter().enumerate() {
        prefix[k + 1] = prefix[k] + students[j].theta;
    }
    let total = prefix[m];
    let mean = total / m as f64;
    let single_rule = ExtremeRuleSelector::new(params)?.select(mean);
    let single = group_value(m as f64, mean, &single_rule, params)?;

    let (tough, lenient) = (params.tough(), params.lenient());
    let splits: Vec<Result<f64>> = exec.map_range(m.saturating_sub(1), |i| {
        let k = i + 1;
        let bottom = group_value(k as f64, prefix[k] / k as f64, &tough, params)?;
        let top_mass = (m - k) as f64;
        let top = group_value(top_mass, (total - prefix[k]) / top_mass, &lenient, params)?;
        Ok(bottom + top)
    });
    let mut best_k = 0;
    let mut best = single;
    for (i, w) in splits.into_iter().enumerate() {
        let w = w?;
        if w > best + WELFARE_TIE {
            best = w;
            best_k = i + 1;
        }
    }

    let system = if best_k == 0 {
        SchoolSystem::new(students.to_vec(), vec![0; m], vec![single_rule], params)?
    } else {
        let mut assignment = vec![1; m];
        for &j in &order[..best_k] {
            assignment[j] = 0;
        }
        SchoolSystem::new(students.to_vec(), assignment, vec![tough, lenient], params)?
    };
    finish_design(system, params)
}

/// All `(g0, g1)` with `g0, g1` in `{0, 0.1, ..., 1}`, `g0 < g1`,
/// `g1 - g0 <= b`, plus the exact tough and lenient rules.
pub fn default_rule_grid(params: &ModelParams) -> Vec<GradingRule> {
    let mut grid = vec![params.tough(), params.lenient()];
    for i in 0..=10u32 {
        for j in (i + 1)..=10 {
            let (g0, g1) = (f64::from(i) / 10.0, f64::from(j) / 10.0);
            if f64::from(j - i) / 10.0 > params.b() + 1e-12 {
                continue;
            }
            let rule = GradingRule::new(g0, g1).expect("grid rule is valid");
            let duplicate = grid
                .iter()
                .any(|r| (r.g0() - g0).abs() < 1e-12 && (r.g1() - g1).abs() < 1e-12);
            if !duplicate && params.check_rule(&rule).is_ok() {
                grid.push(rule);
            }
        }
    }
    grid
}

/// Restricted-growth strings of length `m` with at most `max_blocks` blocks,
/// in lexicographic order. Each string is one set partition.
pub fn set_partitions(m: usize, max_blocks: usize) -> Vec<Vec<usize>> {
    fn extend(
        current: &mut Vec<usize>,
        blocks: usize,
        m: usize,
        max_blocks: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        if current.len() == m {
            out.push(current.clone());
            return;
        }
        let limit = (blocks + 1).min(max_blocks);
        for b in 0..limit {
            current.push(b);
            extend(current, blocks.max(b + 1), m, max_blocks, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    if m == 0 || max_blocks == 0 {
        return out;
    }
    extend(&mut Vec::with_capacity(m), 0, m, max_blocks, &mut out);
    out
}

/// Exhaustive search over set partitions into at most `max_schools` blocks
/// and every assignment of rules from `rule_grid` to the blocks.
///
/// Welfare is additive across schools, so the best assignment for a
/// partition picks the best rule for each block independently; block
/// values are computed once per subset.
pub fn brute_force_design(
    students: &[Student],
    rule_grid: &[GradingRule],
    max_schools: usize,
    params: &ModelParams,
) -> Result<Design> {
    brute_force_design_with(students, rule_grid, max_schools, params, Exec::default())
}

pub fn brute_force_design_with(
    students: &[Student],
    rule_grid: &[GradingRule],
    max_schools: usize,
    params: &ModelParams,
    exec: Exec,
) -> Result<Design> {
    let m = students.len();
    if m > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            students: m,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if m == 0 {
        return Err(Error::InvalidSystem("no students".into()));
    }
    if max_schools == 0 {
        return Err(Error::param("max_schools", "must be at least 1"));
    }
    for s in students {
        params.check_type(s.theta, "theta")?;
    }
    for rule in rule_grid {
        params.check_rule(rule)?;
    }
    for (name, extreme) in [("tough", params.tough()), ("lenient", params.lenient())] {
        if !rule_grid.contains(&extreme) {
            return Err(Error::param(
                "rule_grid",
                format!("must contain the {name} rule"),
            ));
        }
    }

    // Best (value, rule index) for every non-empty subset, keyed by bitmask.
    let blocks: Vec<Result<(f64, usize)>> = exec.map_range((1usize << m) - 1, |i| {
        let mask = i + 1;
        let members: Vec<f64> = (0..m)
            .filter(|j| mask & (1 << j) != 0)
            .map(|j| students[j].theta)
            .collect();
        let mass = members.len() as f64;
        let mean = members.iter().sum::<f64>() / mass;
        let mut best = (f64::NEG_INFINITY, 0);
        for (r, rule) in rule_grid.iter().enumerate() {
            let v = group_value(mass, mean, rule, params)?;
            if v > best.0 {
                best = (v, r);
            }
        }
        Ok(best)
    });
    let blocks: Vec<(f64, usize)> = blocks.into_iter().collect::<Result<_>>()?;

    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    for rgs in set_partitions(m, max_schools) {
        let n_blocks = rgs.iter().max().map_or(0, |b| b + 1);
        let mut masks = vec![0usize; n_blocks];
        for (j, &b) in rgs.iter().enumerate() {
            masks[b] |= 1 << j;
        }
        let w: f64 = masks.iter().map(|&mask| blocks[mask - 1].0).sum();
        let better = match &best {
            None => true,
            Some((bw, bn, _)) => w > bw + WELFARE_TIE || (w >= bw - WELFARE_TIE && n_blocks < *bn),
        };
        if better {
            best = Some((w, n_blocks, rgs));
        }
    }
    let (_, n_blocks, rgs) = best.expect("at least one partition");
    let mut rules = vec![params.tough(); n_blocks];
    let mut masks = vec![0usize; n_blocks];
    for (j, &b) in rgs.iter().enumerate() {
        masks[b] |= 1 << j;
    }
    for (b, &mask) in masks.iter().enumerate() {
        rules[b] = rule_grid[blocks[mask - 1].1];
    }
    let system = SchoolSystem::new(students.to_vec(), rgs, rules, params)?;
    finish_design(system, params)
}

fn extreme_value(theta: f64, params: &ModelParams) -> Result<f64> {
    let t = group_value(1.0, theta, &params.tough(), params)?;
    let l = group_value(1.0, theta, &params.lenient(), params)?;
    Ok(t.max(l))
}

/// Per-student welfare gain of splitting the two-type population
/// `{mu - sigma, mu + sigma}` (equal masses) into two tiers, each with its
/// best extreme rule, over pooling it in one school.
pub fn spread_gain(mu: f64, sigma: f64, params: &ModelParams) -> Result<f64> {
    params.check_type(mu - sigma, "mu - sigma")?;
    params.check_type(mu + sigma, "mu + sigma")?;
    let split = extreme_value(mu - sigma, params)? + extreme_value(mu + sigma, params)?;
    let pooled = 2.0 * extreme_value(mu, params)?;
    Ok((split - pooled) / 2.0)
}

/// Points scanned for the first sign change of [`spread_gain`].
pub const SPREAD_SCAN: usize = 200;

/// Spread above which the two-type population is better split into tiers.
pub fn sigma_dagger(mu: f64, params: &ModelParams) -> Result<Cutoff> {
    params.check_type(mu, "mu")?;
    let lo = CUTOFF_MARGIN;
    let hi = mu.min(params.alpha() - mu) - CUTOFF_MARGIN;
    if hi <= lo {
        return Err(Error::Domain {
            what: "mu",
            value: mu,
            domain: "a point with room for a positive spread",
        });
    }
    let gain = |s: f64| spread_gain(mu, s, params).unwrap_or(f64::NAN);
    let grid: Vec<f64> = (0..=SPREAD_SCAN)
        .map(|i| lo + (hi - lo) * i as f64 / SPREAD_SCAN as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&s| gain(s)).collect();
    if values[0] > 0.0 {
        return Ok(Cutoff {
            value: lo,
            position: CutoffPosition::BelowRange,
        });
    }
    match values.windows(2).position(|w| w[0] <= 0.0 && w[1] > 0.0) {
        Some(i) => {
            let run = bisect(
                gain,
                grid[i],
                grid[i + 1],
                0.0,
                crate::model::MAX_ITERATIONS,
            )?;
            Ok(Cutoff {
                value: run.root().0,
                position: CutoffPosition::Interior,
            })
        }
        None => Ok(Cutoff {
            value: hi,
            position: CutoffPosition::AboveRange,
        }),
    }
}

/// Welfare of each of the two extreme rules for a single school, used to
/// report the knife-edge case at the cutoff.
pub fn extreme_rule_welfare(
    mass: f64,
    theta_bar: f64,
    params: &ModelParams,
) -> Result<BTreeMap<&'static str, f64>> {
    params.check_type(theta_bar, "theta_bar")?;
    let mut out = BTreeMap::new();
    out.insert(
        "tough",
        group_value(mass, theta_bar, &params.tough(), params)?,
    );
    out.insert(
        "lenient",
        group_value(mass, theta_bar, &params.lenient(), params)?,
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> ModelParams {
        ModelParams::default()
    }

    fn system(types: &[&[f64]], rules: &[GradingRule]) -> SchoolSystem {
        let mut students = Vec::new();
        let mut assignment = Vec::new();
        for (s, group) in types.iter().enumerate() {
            for &t in group.iter() {
                students.push(Student::new(format!("j{}", students.len()), t));
                assignment.push(s);
            }
        }
        SchoolSystem::new(students, assignment, rules.to_vec(), &defaults()).unwrap()
    }

    #[test]
    fn system_validation() {
        let p = defaults();
        let st = students_from_types(&[0.1, 0.2]);
        assert!(
            SchoolSystem::new(st.clone(), vec![0, 0], vec![p.tough(), p.lenient()], &p).is_err()
        );
        assert!(
            SchoolSystem::new(st.clone(), vec![0, 2], vec![p.tough(), p.lenient()], &p).is_err()
        );
        assert!(SchoolSystem::new(st.clone(), vec![0], vec![p.tough()], &p).is_err());
        let bad = students_from_types(&[0.1, 0.6]);
        assert!(SchoolSystem::new(bad, vec![0, 0], vec![p.tough()], &p).is_err());
        let s = SchoolSystem::new(st, vec![1, 0], vec![p.tough(), p.lenient()], &p).unwrap();
        assert_eq!(s.means(), &[0.2, 0.1]);
        assert_eq!(s.members(0).collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn welfare_single_school_closed_form() {
        let p = defaults();
        let s = system(&[&[0.25, 0.25, 0.25]], &[p.tough()]);
        let w = system_welfare(&s, &p).unwrap();
        let e = (4.0 - 13f64.sqrt()) / 4.0;
        let per = 0.25 + e - 2.0 * e * e;
        assert!((w.total / 3.0 - per).abs() < 1e-12);
        assert!((per - 0.329_163_456_6).abs() < 1e-9);
    }

    #[test]
    fn welfare_is_linear_in_mass() {
        let p = defaults();
        let a = system(&[&[0.1, 0.2], &[0.4]], &[p.tough(), p.lenient()]);
        let b = system(
            &[&[0.1, 0.2, 0.1, 0.2], &[0.4, 0.4]],
            &[p.tough(), p.lenient()],
        );
        let (wa, wb) = (
            system_welfare(&a, &p).unwrap(),
            system_welfare(&b, &p).unwrap(),
        );
        assert!((2.0 * wa.total - wb.total).abs() < 1e-12);
        let sum: f64 = wa.schools.iter().map(|s| s.contribution).sum();
        assert_eq!(sum, wa.total);
    }

    #[test]
    fn identical_schools_contribute_identically() {
        let p = defaults();
        let s = system(&[&[0.1, 0.3], &[0.2, 0.2]], &[p.tough(), p.tough()]);
        let w = system_welfare(&s, &p).unwrap();
        assert!((w.schools[0].contribution - w.schools[1].contribution).abs() < 1e-12);
    }

    #[test]
    fn structure_examples() {
        let p = defaults();
        assert_eq!(
            structure_classify(&system(&[&[0.1, 0.4]], &[p.tough()])),
            StructureClass::SingleTier
        );
        let two = structure_classify(&system(&[&[0.1], &[0.4]], &[p.tough(), p.lenient()]));
        assert!(matches!(two, StructureClass::TwoTier { .. }));
        let other = structure_classify(&system(
            &[&[0.1, 0.4], &[0.2, 0.3]],
            &[p.tough(), p.lenient()],
        ));
        // means 0.25 and 0.25 -> single tier
        assert_eq!(other, StructureClass::SingleTier);
        let interleaved = structure_classify(&system(
            &[&[0.1, 0.35], &[0.2, 0.3, 0.3]],
            &[p.tough(), p.lenient()],
        ));
        assert_eq!(interleaved, StructureClass::Other);
        let three = structure_classify(&system(&[&[0.1], &[0.2], &[0.3]], &[p.tough(); 3]));
        assert_eq!(three, StructureClass::Other);
        let tiers = structure_classify(&system(
            &[&[0.1, 0.2], &[0.15, 0.15], &[0.3, 0.4]],
            &[p.tough(), p.tough(), p.lenient()],
        ));
        assert_eq!(
            tiers,
            StructureClass::TwoTier {
                bottom: vec![0, 1],
                top: vec![2],
                bottom_max_type: 0.2,
                top_min_type: 0.3
            }
        );
    }

    #[test]
    fn theta_dagger_defaults() {
        let p = defaults();
        let c = theta_dagger(&p).unwrap();
        assert_eq!(c.position, CutoffPosition::Interior);
        assert!((c.value - 5.0 / 12.0).abs() < 1e-9);
        let d = |t: f64| xi(t, &p.lenient(), &p) - xi(t, &p.tough(), &p);
        assert!(d(c.value - 0.05) < 0.0 && d(c.value + 0.05) > 0.0);
        assert!((xi(c.value, &p.tough(), &p) - 1.0 / 12.0).abs() < 1e-9);
        assert!((xi(c.value, &p.lenient(), &p) - 1.0 / 12.0).abs() < 1e-9);
    }

    #[test]
    fn theta_dagger_flags_narrow_support() {
        let p = ModelParams::new(0.05, 0.5, crate::model::CostFunction::quadratic(2.0)).unwrap();
        let c = theta_dagger(&p).unwrap();
        assert_eq!(c.position, CutoffPosition::AboveRange);
    }

    #[test]
    fn best_extreme_rule_examples() {
        let p = defaults();
        assert_eq!(best_extreme_rule(0.1, &p).unwrap(), p.tough());
        assert_eq!(best_extreme_rule(0.45, &p).unwrap(), p.lenient());
        assert_eq!(best_extreme_rule(5.0 / 12.0, &p).unwrap(), p.lenient());
        for t in [0.05, 0.2, 0.3, 0.4, 0.43, 0.49] {
            let r = best_extreme_rule(t, &p).unwrap();
            let other = if r == p.tough() {
                p.lenient()
            } else {
                p.tough()
            };
            assert!(xi(t, &r, &p) >= xi(t, &other, &p));
        }
    }

    #[test]
    fn optimal_two_tier_examples() {
        let p = defaults();
        let same = optimal_two_tier(&students_from_types(&[0.25; 4]), &p).unwrap();
        assert_eq!(same.structure, StructureClass::SingleTier);
        assert_eq!(same.system.rules(), &[p.tough()]);

        let split = optimal_two_tier(&students_from_types(&[0.45, 0.05, 0.05, 0.45]), &p).unwrap();
        assert!(matches!(split.structure, StructureClass::TwoTier { .. }));
        assert_eq!(split.system.assignment(), &[1, 0, 0, 1]);
        assert_eq!(split.system.rules(), &[p.tough(), p.lenient()]);
    }

    #[test]
    fn set_partitions_counts() {
        // Bell numbers and Stirling-bounded counts
        assert_eq!(set_partitions(1, 6).len(), 1);
        assert_eq!(set_partitions(4, 4).len(), 15);
        assert_eq!(set_partitions(5, 5).len(), 52);
        assert_eq!(set_partitions(6, 6).len(), 203);
        assert_eq!(set_partitions(4, 2).len(), 8);
        assert_eq!(set_partitions(5, 1).len(), 1);
    }

    #[test]
    fn default_grid_shape() {
        let p = defaults();
        let grid = default_rule_grid(&p);
        assert_eq!(grid.len(), 40);
        assert!(grid.contains(&p.tough()) && grid.contains(&p.lenient()));
        assert!(grid.iter().all(|r| r.spread() <= 0.5 + 1e-12));
    }

    #[test]
    fn brute_force_guards() {
        let p = defaults();
        let grid = default_rule_grid(&p);
        let big = students_from_types(&[0.1; 7]);
        assert!(matches!(
            brute_force_design(&big, &grid, 7, &p),
            Err(Error::TooLarge { students: 7, .. })
        ));
        let no_extremes = vec![GradingRule::new(0.1, 0.5).unwrap()];
        assert!(brute_force_design(&students_from_types(&[0.1]), &no_extremes, 1, &p).is_err());
    }

    #[test]
    fn brute_force_single_student() {
        let p = defaults();
        let grid = default_rule_grid(&p);
        for t in [0.1, 0.45] {
            let d = brute_force_design(&students_from_types(&[t]), &grid, 3, &p).unwrap();
            assert_eq!(d.system.num_schools(), 1);
            assert_eq!(d.system.rules()[0], best_extreme_rule(t, &p).unwrap());
        }
    }

    #[test]
    fn brute_force_two_types_agrees_with_prefix_search() {
        let p = defaults();
        let st = students_from_types(&[0.05, 0.45, 0.05, 0.45]);
        let brute = brute_force_design(&st, &default_rule_grid(&p), 4, &p).unwrap();
        let fast = optimal_two_tier(&st, &p).unwrap();
        assert!((brute.welfare.total - fast.welfare.total).abs() < 1e-8);
        assert!(matches!(brute.structure, StructureClass::TwoTier { .. }));
    }

    #[test]
    fn sigma_dagger_separates_regimes() {
        let p = defaults();
        let c = sigma_dagger(0.3, &p).unwrap();
        assert_eq!(c.position, CutoffPosition::Interior);
        assert!(spread_gain(0.3, c.value + 1e-3, &p).unwrap() > 0.0);
        assert!(spread_gain(0.3, c.value - 1e-3, &p).unwrap() < 0.0);
        // tiny spreads are always pooled
        assert!(spread_gain(0.3, 1e-4, &p).unwrap() < 0.0);
        let at_cutoff = sigma_dagger(5.0 / 12.0, &p).unwrap();
        assert_eq!(at_cutoff.position, CutoffPosition::BelowRange);
    }

    #[test]
    fn population_file_parsing() {
        let data = "id,theta\na,0.1\n b , 0.35\n";
        let st = read_population(data.as_bytes()).unwrap();
        assert_eq!(st, vec![Student::new("a", 0.1), Student::new("b", 0.35)]);
        assert!(read_population("name,theta\na,0.1\n".as_bytes()).is_err());
        assert!(read_population("id,theta\na,zero\n".as_bytes()).is_err());
        assert!(read_population("id,theta\n".as_bytes()).is_err());
    }
}
