use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use tiergrade::design::{
    brute_force_design, default_rule_grid, extreme_rule_welfare, optimal_two_tier, sigma_dagger,
    system_welfare, Cutoff, CutoffPosition, ExtremeRuleSelector, SchoolSystem, StructureClass,
    BRUTE_FORCE_LIMIT,
};
use tiergrade::exec::Exec;
use tiergrade::incentives::{
    constrained_optimal, fees_for_regular, ic_without_transfers, indirect_utility, is_regular,
    welfare_two_tier, IcVerdict, RegularSystem, TwoTierEval,
};
use tiergrade::model::{effort_sweep, posterior_fail, posterior_pass, GradingRule, ModelParams};
use tiergrade::multivalue::{
    effort_curve, equilibrium_effort3, theta_dagger3, tilde_search, MatrixKind,
};
use tiergrade::report::num;
use tiergrade::simulate::simulate_market;

use crate::fail::{Failure, Outcome};
use crate::output::{Sink, Table};
use crate::Run;

/// Oracle agreement bound on welfare.
const ORACLE_TOL: f64 = 1e-8;

fn rule_cells(r: &GradingRule) -> [String; 2] {
    [num(r.g0()), num(r.g1())]
}

fn cutoff_text(c: &Cutoff) -> String {
    match c.position {
        CutoffPosition::Interior => num(c.value),
        _ => format!("{} ({})", num(c.value), c.position.name()),
    }
}

fn interior_grid(hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| hi * i as f64 / (n + 1) as f64).collect()
}

fn strictly(xs: &[f64], increasing: bool) -> bool {
    xs.windows(2)
        .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

pub fn effort(run: &Run, sink: &mut Sink) -> Outcome<()> {
    let params = run.cfg.params()?;
    let thetas = run.cfg.effort_thetas(&params);
    if thetas.is_empty() {
        return Err(Failure::config("effort needs at least one mean type"));
    }
    for &t in &thetas {
        params.check_type(t, "theta_bar")?;
    }
    if run.cfg.effort.rules.is_empty() {
        return Err(Failure::config("effort.rules is empty"));
    }
    for spec in &run.cfg.effort.rules {
        let rule = spec.resolve(&params)?;
        let results = effort_sweep(&thetas, &rule, &params, Exec::default());
        let mut table = Table::new(
            format!("effort_{}", spec.label()),
            &[
                "theta_bar",
                "effort",
                "residual",
                "iterations",
                "q_pass",
                "q_fail",
                "pass_prob",
                "expected_wage",
                "cost",
                "net_payoff",
            ],
        );
        for (&t, r) in thetas.iter().zip(results) {
            let r = r?;
            let e = r.effort;
            let (qp, qf) = (posterior_pass(t, e, &rule)?, posterior_fail(t, e, &rule)?);
            let pass = rule.pass_probability(t + e);
            let wage = pass * qp + (1.0 - pass) * qf;
            let cost = params.cost().value(e);
            table.nums(&[
                t,
                e,
                r.residual,
                r.iterations as f64,
                qp,
                qf,
                pass,
                wage,
                cost,
                wage - cost,
            ]);
            if thetas.len() <= 10 {
                sink.line(
                    &format!("{} theta_bar={}", spec.label(), num(t)),
                    format!(
                        "effort {} residual {:.3e} q_pass {} q_fail {} wage {} cost {} net {}",
                        num(e),
                        r.residual,
                        num(qp),
                        num(qf),
                        num(wage),
                        num(cost),
                        num(wage - cost)
                    ),
                )?;
            }
        }
        sink.table(&table)?;
    }
    Ok(())
}

pub fn theta_dagger(run: &Run, sink: &mut Sink) -> Outcome<()> {
    let params = run.cfg.params()?;
    let cut = tiergrade::design::theta_dagger(&params)?;
    sink.line("theta_dagger", cutoff_text(&cut))?;
    let grid = interior_grid(params.alpha(), run.cfg.effort.points.max(2));
    let sweep = |rule: GradingRule| -> Outcome<Vec<f64>> {
        effort_sweep(&grid, &rule, &params, Exec::default())
            .into_iter()
            .map(|r| Ok(r?.effort))
            .collect()
    };
    let (tough, lenient) = (sweep(params.tough())?, sweep(params.lenient())?);
    let delta: Vec<f64> = lenient.iter().zip(&tough).map(|(l, t)| l - t).collect();
    let mut table = Table::new(
        "theta_dagger_curve",
        &["theta_bar", "effort_tough", "effort_lenient", "delta"],
    );
    for i in 0..grid.len() {
        table.nums(&[grid[i], tough[i], lenient[i], delta[i]]);
    }
    sink.line("delta_increasing", strictly(&delta, true))?;
    sink.table(&table)?;

    if !run.cfg.cutoffs.mus.is_empty() {
        let mut t = Table::new("sigma_dagger", &["mu", "sigma_dagger", "position"]);
        for &mu in &run.cfg.cutoffs.mus {
            let s = sigma_dagger(mu, &params)?;
            t.row(vec![num(mu), num(s.value), s.position.name().into()]);
            sink.line(&format!("sigma_dagger mu={}", num(mu)), cutoff_text(&s))?;
        }
        sink.table(&t)?;
    }
    Ok(())
}

fn structure_text(s: &StructureClass) -> String {
    match s {
        StructureClass::TwoTier { bottom, top, .. } => {
            format!("{} (bottom {bottom:?}, top {top:?})", s.name())
        }
        _ => s.name().to_string(),
    }
}

fn school_table(name: &str, system: &SchoolSystem, params: &ModelParams) -> Outcome<Table> {
    let report = system_welfare(system, params)?;
    let mut t = Table::new(
        name,
        &[
            "school",
            "students",
            "mass",
            "mean_type",
            "g0",
            "g1",
            "effort",
            "contribution",
        ],
    );
    for (s, w) in report.schools.iter().enumerate() {
        let [g0, g1] = rule_cells(&w.rule);
        t.row(vec![
            s.to_string(),
            system.members(s).count().to_string(),
            num(w.mass),
            num(w.mean_type),
            g0,
            g1,
            num(w.effort),
            num(w.contribution),
        ]);
    }
    Ok(t)
}

fn assignment_table(name: &str, system: &SchoolSystem) -> Table {
    let mut t = Table::new(name, &["id", "theta", "school"]);
    for (st, s) in system.students().iter().zip(system.assignment()) {
        t.row(vec![st.id.clone(), num(st.theta), s.to_string()]);
    }
    t
}

pub fn design(run: &Run, sink: &mut Sink) -> Outcome<()> {
    let params = run.cfg.params()?;
    let students = run.cfg.students()?;
    let d = optimal_two_tier(&students, &params)?;
    sink.line("students", students.len())?;
    sink.line("structure", structure_text(&d.structure))?;
    sink.line("welfare", num(d.welfare.total))?;

    let selector = ExtremeRuleSelector::new(&params)?;
    for (s, w) in d.welfare.schools.iter().enumerate() {
        if selector.is_knife_edge(w.mean_type) {
            let both = extreme_rule_welfare(w.mass, w.mean_type, &params)?;
            sink.line(
                &format!("knife_edge school {s}"),
                format!(
                    "tough {} lenient {}",
                    num(both["tough"]),
                    num(both["lenient"])
                ),
            )?;
        }
    }
    sink.table(&school_table("design_schools", &d.system, &params)?)?;
    sink.table(&assignment_table("design_assignment", &d.system))?;

    if run.oracle {
        if students.len() > BRUTE_FORCE_LIMIT {
            sink.line(
                "oracle",
                format!(
                    "skipped, {} students exceed {BRUTE_FORCE_LIMIT}",
                    students.len()
                ),
            )?;
        } else {
            let grid = default_rule_grid(&params);
            let brute = brute_force_design(&students, &grid, students.len(), &params)?;
            let gap = (brute.welfare.total - d.welfare.total).abs();
            if gap > ORACLE_TOL {
                return Err(Failure::oracle(format!(
                    "brute force welfare {} differs from {} by {gap:e}",
                    num(brute.welfare.total),
                    num(d.welfare.total)
                )));
            }
            sink.line(
                "oracle",
                format!(
                    "agree, brute force welfare {} over {} rules, gap {gap:.1e}",
                    num(brute.welfare.total),
                    grid.len()
                ),
            )?;
        }
    }
    Ok(())
}

fn tier_table(
    name: &str,
    sys: &RegularSystem,
    fees: Option<&[f64]>,
    residuals: Option<&[f64]>,
) -> Table {
    let mut t = Table::new(
        name,
        &[
            "tier",
            "lower",
            "upper",
            "g0",
            "g1",
            "mass",
            "mean_type",
            "effort",
            "fee",
            "indifference_residual",
        ],
    );
    for (k, tier) in sys.tiers.iter().enumerate() {
        let [g0, g1] = rule_cells(&tier.rule);
        let fee = fees.map(|f| num(f[k])).unwrap_or_default();
        let res = match residuals {
            Some(r) if k > 0 => num(r[k - 1]),
            _ => String::new(),
        };
        t.row(vec![
            k.to_string(),
            num(sys.cutoffs[k]),
            num(sys.cutoffs[k + 1]),
            g0,
            g1,
            num(tier.mass),
            num(tier.mean_type),
            num(tier.effort),
            fee,
            res,
        ]);
    }
    t
}

pub fn design_constrained(run: &Run, sink: &mut Sink) -> Outcome<()> {
    let params = run.cfg.params()?;
    let dist = run.cfg.distribution(&params)?;
    let d = constrained_optimal(&dist, &params)?;
    let regular = is_regular(&d.system, &dist, &params);
    sink.line("tiers", d.system.num_tiers())?;
    sink.line("cutoff", num(d.reported_cutoff(&params)))?;
    sink.line("welfare", num(d.welfare))?;
    sink.line("single_tier_welfare", num(d.single_tier_welfare))?;
    let opt_cut = |e: Option<TwoTierEval>| e.map_or("none".into(), |e| num(e.cutoff));
    sink.line("unconstrained_cutoff", opt_cut(d.unconstrained))?;
    sink.line("constrained_cutoff", opt_cut(d.constrained))?;
    sink.line(
        "equalization_cutoff",
        d.equalization_cutoff.map_or("none".into(), num),
    )?;
    sink.line("constraint_binding", d.constraint_binding)?;
    sink.line("is_regular", regular.is_ok())?;
    sink.line(
        "max_indifference_residual",
        format!("{:.3e}", d.fees.max_residual()),
    )?;
    sink.table(&tier_table(
        "constrained_tiers",
        &d.system,
        Some(&d.fees.fees),
        Some(&d.fees.indifference_residuals),
    ))?;

    let mut curve = Table::new(
        "constrained_welfare_curve",
        &[
            "cutoff",
            "welfare",
            "bottom_effort",
            "top_effort",
            "monotone",
        ],
    );
    for c in interior_grid(params.alpha(), 199) {
        // Cutoffs leaving an empty tier are skipped.
        if let Ok(e) = welfare_two_tier(&dist, c, &params) {
            curve.nums(&[
                c,
                e.welfare,
                e.bottom_effort,
                e.top_effort,
                e.is_monotone() as u8 as f64,
            ]);
        }
    }
    sink.table(&curve)?;
    regular.map_err(|e| Failure::regularity(format!("constrained optimum is not regular: {e}")))
}

fn finite_system(run: &Run, params: &ModelParams) -> Outcome<SchoolSystem> {
    let students = run.cfg.students()?;
    let sys = &run.cfg.system;
    let assignment = if sys.assignment.is_empty() {
        vec![0; students.len()]
    } else {
        sys.assignment.clone()
    };
    if sys.rules.is_empty() {
        return Err(Failure::config(
            "system.rules must give one rule per school",
        ));
    }
    let rules = sys
        .rules
        .iter()
        .map(|r| r.resolve(params))
        .collect::<Outcome<Vec<_>>>()?;
    Ok(SchoolSystem::new(students, assignment, rules, params)?)
}

pub fn ic_check(run: &Run, sink: &mut Sink) -> Outcome<()> {
    let params = run.cfg.params()?;
    let system = finite_system(run, &params)?;
    let efforts: Vec<f64> = system.efforts(&params)?.iter().map(|e| e.effort).collect();
    let verdict = ic_without_transfers(&system, &params)?;
    match &verdict {
        IcVerdict::Compatible => sink.line("ic", true)?,
        IcVerdict::Violated(w) => {
            sink.line("ic", false)?;
            let st = &system.students()[w.student];
            sink.line(
                "witness",
                format!(
                    "student {} (theta {}) gains {:.6e} moving from school {} to school {}",
                    st.id,
                    num(st.theta),
                    w.gap,
                    w.current_school,
                    w.better_school
                ),
            )?;
        }
    }
    sink.table(&school_table("ic_schools", &system, &params)?)?;
    let mut t = Table::new(
        "ic_utilities",
        &[
            "id",
            "theta",
            "school",
            "utility",
            "best_school",
            "best_utility",
        ],
    );
    for (j, st) in system.students().iter().enumerate() {
        let u: Vec<f64> = (0..system.num_schools())
            .map(|s| {
                indirect_utility(
                    st.theta,
                    system.means()[s],
                    &system.rules()[s],
                    efforts[s],
                    &params,
                )
            })
            .collect();
        let own = system.assignment()[j];
        let best = (0..u.len()).fold(own, |b, s| if u[s] > u[b] { s } else { b });
        t.row(vec![
            st.id.clone(),
            num(st.theta),
            own.to_string(),
            num(u[own]),
            best.to_string(),
            num(u[best]),
        ]);
    }
    sink.table(&t)
}

pub fn fees(run: &Run, sink: &mut Sink) -> Outcome<()> {
    let params = run.cfg.params()?;
    let dist = run.cfg.distribution(&params)?;
    let sys = &run.cfg.system;
    let rules = if sys.tier_rules.is_empty() {
        let selector = ExtremeRuleSelector::new(&params)?;
        let mut bounds = vec![0.0];
        bounds.extend_from_slice(&sys.cutoffs);
        bounds.push(params.alpha());
        bounds
            .windows(2)
            .map(|w| {
                dist.conditional_mean(w[0], w[1])
                    .map(|m| selector.select(m))
                    .ok_or_else(|| {
                        Failure::config(format!("empty tier between {} and {}", w[0], w[1]))
                    })
            })
            .collect::<Outcome<Vec<_>>>()?
    } else {
        sys.tier_rules
            .iter()
            .map(|r| r.resolve(&params))
            .collect::<Outcome<Vec<_>>>()?
    };
    let system = RegularSystem::from_cutoffs(&dist, &sys.cutoffs, &rules, &params)?;
    if let Err(why) = is_regular(&system, &dist, &params) {
        sink.table(&tier_table("fee_tiers", &system, None, None))?;
        return Err(Failure::regularity(format!("system is not regular: {why}")));
    }
    let schedule = fees_for_regular(&system, &dist, &params)?;
    sink.line("tiers", system.num_tiers())?;
    sink.line("welfare", num(system.welfare(&params)))?;
    sink.line(
        "max_indifference_residual",
        format!("{:.3e}", schedule.max_residual()),
    )?;
    sink.line(
        "max_switch_gain",
        format!("{:.3e}", schedule.max_switch_gain),
    )?;
    sink.table(&tier_table(
        "fee_tiers",
        &system,
        Some(&schedule.fees),
        Some(&schedule.indifference_residuals),
    ))
}

pub fn simulate(run: &Run, sink: &mut Sink) -> Outcome<()> {
    let params = run.cfg.params()?;
    let system = finite_system(run, &params)?;
    let cfg = run.cfg.sim_config(run.seed);
    let report = simulate_market(&system, &params, &cfg)?;
    let mut bytes = Vec::new();
    report.write_csv(&mut bytes)?;
    let max_z = report
        .schools
        .iter()
        .map(|s| {
            if s.pass_rate_se > 0.0 {
                s.pass_rate_gap / s.pass_rate_se
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    sink.line("rng", report.rng)?;
    sink.line("seed", report.seed)?;
    sink.line("students_per_school", report.students_per_school)?;
    sink.line("max_pass_rate_z", format!("{max_z:.3}"))?;
    sink.line(
        "max_posterior_gap",
        format!("{:.3e}", report.max_posterior_gap()),
    )?;
    sink.line(
        "best_response_gap",
        format!("{:.3e}", report.best_response_gap),
    )?;
    sink.line("sha256", hex::encode(Sha256::digest(&bytes)))?;
    sink.raw("simulation", &bytes)
}

pub fn multivalue(run: &Run, sink: &mut Sink) -> Outcome<()> {
    let params = run.cfg.params()?;
    let inst = run.cfg.instance3(&params)?;
    let side = inst.dists.side_conditions(params.b());
    sink.line(
        "side_conditions",
        format!("tough {} lenient {}", side.tough, side.lenient),
    )?;
    match theta_dagger3(&inst) {
        Ok(c) => sink.line("theta_dagger3", cutoff_text(&c))?,
        Err(e) => sink.line("theta_dagger3", format!("unavailable: {e}"))?,
    }
    let thetas = interior_grid(params.alpha(), run.cfg.multivalue.points.max(2));
    for (name, m) in run.cfg.matrices3(&params)? {
        let curve = effort_curve(&m, &thetas, &inst, Exec::default());
        if m.kind().is_canonical() {
            // A canonical rule always has one root; surface the solver error.
            if let Some(p) = curve.iter().find(|p| p.roots.is_empty()) {
                equilibrium_effort3(p.theta_bar, &m, &inst)?;
            }
        }
        let mut t = Table::new(
            format!("multivalue_{name}"),
            &["theta_bar", "effort", "roots", "all_roots"],
        );
        for p in &curve {
            let single = if p.roots.len() == 1 {
                num(p.roots[0])
            } else {
                String::new()
            };
            let all: Vec<String> = p.roots.iter().map(|&r| num(r)).collect();
            t.row(vec![
                num(p.theta_bar),
                single,
                p.roots.len().to_string(),
                all.join(";"),
            ]);
        }
        let singles: Option<Vec<f64>> = curve
            .iter()
            .map(|p| (p.roots.len() == 1).then(|| p.roots[0]))
            .collect();
        let shape = match singles {
            None => "multiple or missing equilibria".to_string(),
            Some(e) if strictly(&e, false) => "decreasing".to_string(),
            Some(e) if strictly(&e, true) => "increasing".to_string(),
            Some(_) => "not monotone".to_string(),
        };
        let label = match m.kind() {
            MatrixKind::Custom => name.clone(),
            k => k.name().to_string(),
        };
        sink.line(&format!("{label} curve"), shape)?;
        sink.table(&t)?;
    }

    let mv = &run.cfg.multivalue;
    if mv.search_trials > 0 {
        let seed = run.seed.unwrap_or(mv.search_seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let found = tilde_search(&params, mv.search_trials, mv.search_points.max(2), &mut rng);
        sink.line(
            "tilde_search",
            format!(
                "seed {seed}, {} trials, {} usable, {} witnesses",
                found.trials,
                found.usable,
                found.witnesses.len()
            ),
        )?;
        let mut t = Table::new(
            "tilde_witnesses",
            &[
                "trial",
                "v1",
                "v2",
                "v3",
                "b",
                "pi_low_1",
                "pi_low_2",
                "pi_low_3",
                "pi_high_1",
                "pi_high_2",
                "pi_high_3",
                "sign_changes",
            ],
        );
        for w in &found.witnesses {
            let mut row = vec![w.trial as f64];
            row.extend(w.instance.values.as_array());
            row.push(w.instance.params.b());
            row.extend(w.instance.dists.pi_low());
            row.extend(w.instance.dists.pi_high());
            row.push(w.sign_changes as f64);
            t.nums(&row);
        }
        sink.table(&t)?;
    }
    Ok(())
}
