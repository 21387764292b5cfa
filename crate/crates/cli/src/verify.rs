//! Quick invariant suite on the configured parameters. Each check prints one
//! PASS/FAIL line; any failure exits with the oracle code.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tiergrade::design::{
    brute_force_design, default_rule_grid, optimal_two_tier, students_from_types, theta_dagger,
    CutoffPosition, ExtremeRuleSelector, SchoolSystem,
};
use tiergrade::distribution::TypeDistribution;
use tiergrade::incentives::{
    constrained_optimal, fees_for_regular, ic_without_transfers, is_regular, random_regular_system,
};
use tiergrade::model::{
    equilibrium_effort, expected_payoff, verify_equilibrium, GradingRule, ModelParams,
};
use tiergrade::multivalue::{
    effort_curve, GradingMatrix, Instance3, OutcomeDistributions, ValueTriple,
};
use tiergrade::Exec;

use crate::fail::{Failure, Outcome};
use crate::output::Sink;
use crate::Run;

type Check = Result<String, String>;
type Named<'a> = (&'static str, Box<dyn FnOnce(&mut ChaCha8Rng) -> Check + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn grid(alpha: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| alpha * i as f64 / (n + 1) as f64).collect()
}

fn xi(t: f64, r: &GradingRule, p: &ModelParams) -> Result<f64, String> {
    equilibrium_effort(t, r, p)
        .map(|r| r.effort)
        .map_err(|e| e.to_string())
}

fn random_rule<R: Rng>(rng: &mut R, b: f64) -> GradingRule {
    let spread = rng.random_range(0.05..=b);
    let g0 = rng.random_range(0.0..=1.0 - spread);
    GradingRule::new(g0, g0 + spread).expect("spread within (0, 1]")
}

/// The first-order condition, checked by differentiating the payoff
/// numerically with the employers' conjecture held fixed.
fn first_order(p: &ModelParams, rng: &mut ChaCha8Rng) -> Check {
    let h = 1e-6;
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let rule = random_rule(rng, p.b());
        let t = rng.random_range(0.01..p.alpha() - 0.01);
        let e = xi(t, &rule, p)?;
        let u = |x: f64| expected_payoff(t, x, e, t, &rule, p).map_err(|err| err.to_string());
        let lo = (e - h).max(0.0);
        let hi = (e + h).min(p.effort_cap());
        let slope = (u(hi)? - u(lo)?) / (hi - lo);
        worst = worst.max(slope.abs());
        ensure(slope.abs() <= 1e-6, || {
            format!("payoff slope {slope:e} at theta_bar {t}, {rule:?}")
        })?;
        ensure(verify_equilibrium(t, &rule, e, p), || {
            format!("profitable deviation at {t}, {rule:?}")
        })?;
    }
    Ok(format!("200 draws, max payoff slope {worst:.1e}"))
}

fn extreme_rules(p: &ModelParams) -> Check {
    let types = grid(p.alpha(), 15);
    let mut rules = Vec::new();
    for i in 0..=20 {
        for j in i..=20 {
            let (g0, g1) = (i as f64 / 20.0, j as f64 / 20.0);
            if let Ok(r) = GradingRule::new(g0, g1) {
                if r.spread() <= p.b() && r != p.tough() && r != p.lenient() {
                    rules.push(r);
                }
            }
        }
    }
    let mut tough = Vec::new();
    let mut lenient = Vec::new();
    for &t in &types {
        let (et, el) = (xi(t, &p.tough(), p)?, xi(t, &p.lenient(), p)?);
        for r in &rules {
            let e = xi(t, r, p)?;
            ensure(e < et.max(el), || {
                format!("{r:?} beats both extreme rules at {t}")
            })?;
        }
        tough.push(et);
        lenient.push(el);
    }
    ensure(tough.windows(2).all(|w| w[1] < w[0]), || {
        "tough effort not decreasing".into()
    })?;
    ensure(lenient.windows(2).all(|w| w[1] > w[0]), || {
        "lenient effort not increasing".into()
    })?;
    Ok(format!(
        "{} rules x {} types dominated; extreme efforts monotone",
        rules.len(),
        types.len()
    ))
}

fn concavity(p: &ModelParams, rng: &mut ChaCha8Rng) -> Check {
    let mut min_slack = f64::INFINITY;
    for _ in 0..100 {
        let rule = random_rule(rng, p.b());
        let a = rng.random_range(0.01..p.alpha() / 2.0 - 0.01);
        let b = rng.random_range(p.alpha() / 2.0 + 0.01..p.alpha() - 0.01);
        let l = rng.random_range(0.1..0.9);
        let slack = xi((1.0 - l) * a + l * b, &rule, p)?
            - ((1.0 - l) * xi(a, &rule, p)? + l * xi(b, &rule, p)?);
        ensure(slack > 0.0, || {
            format!("slack {slack:e} for {rule:?} on [{a}, {b}]")
        })?;
        min_slack = min_slack.min(slack);
    }
    Ok(format!("100 chords, min slack {min_slack:.2e}"))
}

fn cutoff(p: &ModelParams) -> Check {
    let c = theta_dagger(p).map_err(|e| e.to_string())?;
    let types = grid(p.alpha(), 50);
    for &t in &types {
        let d = xi(t, &p.lenient(), p)? - xi(t, &p.tough(), p)?;
        let expect_tough = match c.position {
            CutoffPosition::Interior => t < c.value,
            CutoffPosition::AboveRange => true,
            CutoffPosition::BelowRange => false,
        };
        ensure(
            (d < 0.0) == expect_tough || (t - c.value).abs() < 1e-9,
            || {
                format!(
                    "sign of lenient minus tough at {t} disagrees with cutoff {}",
                    c.value
                )
            },
        )?;
    }
    Ok(format!(
        "cutoff {:.9} ({}) separates 50 types",
        c.value,
        c.position.name()
    ))
}

fn design_oracle(p: &ModelParams, rng: &mut ChaCha8Rng) -> Check {
    let rule_grid = default_rule_grid(p);
    let mut worst = 0.0_f64;
    for k in 0..20 {
        let m = rng.random_range(2..=5);
        let types: Vec<f64> = (0..m)
            .map(|_| rng.random_range(0.01..p.alpha() - 0.01))
            .collect();
        let students = students_from_types(&types);
        let fast = optimal_two_tier(&students, p).map_err(|e| e.to_string())?;
        let brute = brute_force_design(&students, &rule_grid, m, p).map_err(|e| e.to_string())?;
        let gap = (fast.welfare.total - brute.welfare.total).abs();
        worst = worst.max(gap);
        ensure(gap <= 1e-8, || {
            format!("instance {k}: gap {gap:e}, types {types:?}")
        })?;
    }
    Ok(format!("20 populations, max welfare gap {worst:.1e}"))
}

fn ic(p: &ModelParams, rng: &mut ChaCha8Rng) -> Check {
    let mut violated = 0;
    for k in 0..50 {
        let types: Vec<f64> = (0..4)
            .map(|_| rng.random_range(0.01..p.alpha() - 0.01))
            .collect();
        let rules = vec![random_rule(rng, p.b()), random_rule(rng, p.b())];
        let sys = SchoolSystem::new(students_from_types(&types), vec![0, 0, 1, 1], rules, p)
            .map_err(|e| e.to_string())?;
        let efforts: Vec<f64> = sys
            .efforts(p)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|e| e.effort)
            .collect();
        let holds = ic_without_transfers(&sys, p)
            .map_err(|e| e.to_string())?
            .holds();
        if (efforts[0] - efforts[1]).abs() > 1e-6 || (sys.means()[0] - sys.means()[1]).abs() > 1e-6
        {
            ensure(!holds, || {
                format!("system {k} with distinct schools is compatible: {types:?}")
            })?;
            violated += 1;
        }
    }
    let single = SchoolSystem::new(
        students_from_types(&[0.1, 0.2, 0.3]),
        vec![0; 3],
        vec![p.tough()],
        p,
    )
    .map_err(|e| e.to_string())?;
    ensure(
        ic_without_transfers(&single, p)
            .map_err(|e| e.to_string())?
            .holds(),
        || "single school violates compatibility".into(),
    )?;
    Ok(format!(
        "{violated} two-school systems violate, single school holds"
    ))
}

fn constrained(p: &ModelParams, rng: &mut ChaCha8Rng) -> Check {
    let f = TypeDistribution::uniform(p.alpha()).map_err(|e| e.to_string())?;
    let d = constrained_optimal(&f, p).map_err(|e| e.to_string())?;
    is_regular(&d.system, &f, p).map_err(|e| format!("optimum not regular: {e}"))?;
    let fees = fees_for_regular(&d.system, &f, p).map_err(|e| e.to_string())?;
    ensure(fees.max_residual() <= 1e-9, || {
        format!("fee residual {:e}", fees.max_residual())
    })?;
    let selector = ExtremeRuleSelector::new(p).map_err(|e| e.to_string())?;
    for _ in 0..200 {
        let Some(sys) = random_regular_system(&f, p, &selector, 3, 1000, rng) else {
            continue;
        };
        let w = sys.welfare(p);
        ensure(w <= d.welfare + 1e-12, || {
            format!("random regular system reaches {w} > {}", d.welfare)
        })?;
    }
    Ok(format!(
        "{} tier(s), W {:.9}, beats 200 random regular systems",
        d.system.num_tiers(),
        d.welfare
    ))
}

fn multivalue(p: &ModelParams) -> Check {
    let inst = Instance3 {
        values: ValueTriple::new(0.0, 0.5, 1.0).map_err(|e| e.to_string())?,
        dists: OutcomeDistributions::new([0.6, 0.3, 0.1], [0.1, 0.3, 0.6])
            .map_err(|e| e.to_string())?,
        params: *p,
    };
    let side = inst.dists.side_conditions(p.b());
    let types = grid(p.alpha(), 30);
    let mut checked = 0;
    for (ok, m, decreasing) in [
        (side.tough, GradingMatrix::tough3(p.b()), true),
        (side.lenient, GradingMatrix::lenient3(p.b()), false),
    ] {
        if !ok {
            continue;
        }
        let m = m.map_err(|e| e.to_string())?;
        let e: Option<Vec<f64>> = effort_curve(&m, &types, &inst, Exec::default())
            .iter()
            .map(|c| (c.roots.len() == 1).then(|| c.roots[0]))
            .collect();
        let e = e.ok_or_else(|| format!("{} lacks a unique equilibrium", m.kind().name()))?;
        let mono = e
            .windows(2)
            .all(|w| if decreasing { w[1] < w[0] } else { w[1] > w[0] });
        ensure(mono, || format!("{} curve not monotone", m.kind().name()))?;
        checked += 1;
    }
    Ok(format!("{checked} canonical curve(s) monotone on 30 types"))
}

pub fn run(run: &Run, sink: &mut Sink) -> Outcome<()> {
    let p = run.cfg.params()?;
    let seed = run.seed.unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks: Vec<Named> = vec![
        ("first-order condition", Box::new(|r| first_order(&p, r))),
        ("extreme rules", Box::new(|_| extreme_rules(&p))),
        ("effort concavity", Box::new(|r| concavity(&p, r))),
        ("tough/lenient cutoff", Box::new(|_| cutoff(&p))),
        ("design vs brute force", Box::new(|r| design_oracle(&p, r))),
        ("compatibility without fees", Box::new(|r| ic(&p, r))),
        ("constrained optimum", Box::new(|r| constrained(&p, r))),
        ("three-value curves", Box::new(|_| multivalue(&p))),
    ];
    let total = checks.len();
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let result = check(&mut rng);
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => sink.line(&format!("PASS [{secs:.2}s] {name}"), detail)?,
            Err(detail) => {
                failed += 1;
                sink.line(&format!("FAIL [{secs:.2}s] {name}"), detail)?;
            }
        }
    }
    if failed > 0 {
        return Err(Failure::oracle(format!(
            "{failed} of {total} checks failed"
        )));
    }
    sink.line("verify", format!("all {total} checks passed (seed {seed})"))
}
