//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use tiergrade::design::{read_population, students_from_types, Student};
use tiergrade::distribution::TypeDistribution;
use tiergrade::model::{CostFunction, GradingRule, ModelParams};
use tiergrade::multivalue::{GradingMatrix, Instance3, OutcomeDistributions, ValueTriple};
use tiergrade::simulate::SimConfig;

use crate::fail::{Failure, Outcome};

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub effort: EffortConfig,
    pub population: PopulationConfig,
    pub distribution: DistributionConfig,
    pub system: SystemConfig,
    pub simulation: SimulationConfig,
    pub multivalue: MultivalueConfig,
    pub cutoffs: CutoffConfig,
    #[serde(skip)]
    base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    Quadratic,
    Power,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub alpha: f64,
    pub b: f64,
    pub cost: CostKind,
    pub kappa: f64,
    /// Exponent of the power cost.
    pub p: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            alpha: 0.5,
            b: 0.5,
            cost: CostKind::Quadratic,
            kappa: 2.0,
            p: 2.0,
        }
    }
}

/// A rule by name (`tough`, `lenient`) or as explicit pass probabilities.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RuleSpec {
    Name(String),
    Pair { g0: f64, g1: f64 },
}

impl RuleSpec {
    pub fn resolve(&self, params: &ModelParams) -> Outcome<GradingRule> {
        match self {
            RuleSpec::Name(n) if n == "tough" => Ok(params.tough()),
            RuleSpec::Name(n) if n == "lenient" => Ok(params.lenient()),
            RuleSpec::Name(n) => Err(Failure::config(format!(
                "unknown rule `{n}` (use tough, lenient or {{g0, g1}})"
            ))),
            RuleSpec::Pair { g0, g1 } => {
                let rule = GradingRule::new(*g0, *g1)?;
                params.check_rule(&rule)?;
                Ok(rule)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            RuleSpec::Name(n) => n.clone(),
            RuleSpec::Pair { g0, g1 } => format!("g0_{g0}_g1_{g1}"),
        }
    }
}

fn default_rules() -> Vec<RuleSpec> {
    vec![
        RuleSpec::Name("tough".into()),
        RuleSpec::Name("lenient".into()),
    ]
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffortConfig {
    /// Explicit mean types; when empty, `points` evenly spaced interior types.
    pub thetas: Vec<f64>,
    pub points: usize,
    pub rules: Vec<RuleSpec>,
}

impl Default for EffortConfig {
    fn default() -> Self {
        EffortConfig {
            thetas: Vec::new(),
            points: 49,
            rules: default_rules(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoType {
    pub mu: f64,
    pub sigma: f64,
    /// Students of each type.
    #[serde(default = "one")]
    pub count: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    /// `id,theta` file, relative to the config file.
    pub file: Option<PathBuf>,
    pub types: Vec<f64>,
    pub two_type: Option<TwoType>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum DistributionKind {
    Uniform,
    Spike,
    Histogram,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistributionConfig {
    pub kind: DistributionKind,
    pub center: f64,
    pub width: f64,
    pub bins: usize,
    /// Bin masses for `histogram`.
    pub masses: Vec<f64>,
}

impl Default for DistributionConfig {
    fn default() -> Self {
        DistributionConfig {
            kind: DistributionKind::Uniform,
            center: 0.25,
            width: 0.05,
            bins: 2000,
            masses: Vec::new(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// School of each population member, in population order.
    pub assignment: Vec<usize>,
    pub rules: Vec<RuleSpec>,
    /// Interior cutoffs of a tiered system over the distribution.
    pub cutoffs: Vec<f64>,
    pub tier_rules: Vec<RuleSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub students_per_school: usize,
    pub seed: u64,
    pub deviation_grid_step: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        let d = SimConfig::default();
        SimulationConfig {
            students_per_school: d.students_per_school,
            seed: d.seed,
            deviation_grid_step: d.deviation_grid_step,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultivalueConfig {
    pub values: [f64; 3],
    pub pi_low: [f64; 3],
    pub pi_high: [f64; 3],
    /// `tough3`, `lenient3`, `tilde_lenient`, `tilde_tough`.
    pub rules: Vec<String>,
    /// Extra matrices, rows indexed by value, columns by grade A, B, C.
    pub matrices: Vec<[[f64; 3]; 3]>,
    pub points: usize,
    pub search_trials: usize,
    pub search_points: usize,
    pub search_seed: u64,
}

impl Default for MultivalueConfig {
    fn default() -> Self {
        MultivalueConfig {
            values: [0.0, 0.5, 1.0],
            pi_low: [0.6, 0.3, 0.1],
            pi_high: [0.1, 0.3, 0.6],
            rules: vec![
                "tough3".into(),
                "lenient3".into(),
                "tilde_lenient".into(),
                "tilde_tough".into(),
            ],
            matrices: Vec::new(),
            points: 49,
            search_trials: 0,
            search_points: 19,
            search_seed: 1,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoffConfig {
    /// Centres for the two-type spread cutoff.
    pub mus: Vec<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Outcome<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn params(&self) -> Outcome<ModelParams> {
        let m = &self.model;
        let cost = match m.cost {
            CostKind::Quadratic => CostFunction::quadratic(m.kappa),
            CostKind::Power => CostFunction::power(m.kappa, m.p),
        };
        Ok(ModelParams::new(m.alpha, m.b, cost)?)
    }

    pub fn effort_thetas(&self, params: &ModelParams) -> Vec<f64> {
        if self.effort.thetas.is_empty() {
            let n = self.effort.points;
            (1..=n)
                .map(|i| params.alpha() * i as f64 / (n + 1) as f64)
                .collect()
        } else {
            self.effort.thetas.clone()
        }
    }

    pub fn students(&self) -> Outcome<Vec<Student>> {
        let p = &self.population;
        let sources = p.file.is_some() as usize
            + !p.types.is_empty() as usize
            + p.two_type.is_some() as usize;
        if sources != 1 {
            return Err(Failure::config(
                "population needs exactly one of `file`, `types` or `two_type`",
            ));
        }
        if let Some(file) = &p.file {
            let path = self.base_dir.join(file);
            let reader = std::fs::File::open(&path)
                .map_err(|e| Failure::config(format!("cannot open {}: {e}", path.display())))?;
            return Ok(read_population(reader)?);
        }
        if let Some(t) = p.two_type {
            let types: Vec<f64> = std::iter::repeat_n(t.mu - t.sigma, t.count)
                .chain(std::iter::repeat_n(t.mu + t.sigma, t.count))
                .collect();
            return Ok(students_from_types(&types));
        }
        Ok(students_from_types(&p.types))
    }

    pub fn distribution(&self, params: &ModelParams) -> Outcome<TypeDistribution> {
        let d = &self.distribution;
        let alpha = params.alpha();
        Ok(match d.kind {
            DistributionKind::Uniform => TypeDistribution::uniform(alpha)?,
            DistributionKind::Spike => TypeDistribution::spike(alpha, d.center, d.width, d.bins)?,
            DistributionKind::Histogram => TypeDistribution::from_masses(alpha, &d.masses)?,
        })
    }

    pub fn sim_config(&self, seed_override: Option<u64>) -> SimConfig {
        let s = &self.simulation;
        SimConfig {
            students_per_school: s.students_per_school,
            seed: seed_override.unwrap_or(s.seed),
            deviation_grid_step: s.deviation_grid_step,
        }
    }

    pub fn instance3(&self, params: &ModelParams) -> Outcome<Instance3> {
        let m = &self.multivalue;
        let [v1, v2, v3] = m.values;
        Ok(Instance3 {
            values: ValueTriple::new(v1, v2, v3)?,
            dists: OutcomeDistributions::new(m.pi_low, m.pi_high)?,
            params: *params,
        })
    }

    pub fn matrices3(&self, params: &ModelParams) -> Outcome<Vec<(String, GradingMatrix)>> {
        let m = &self.multivalue;
        let mut out = Vec::new();
        for name in &m.rules {
            out.push((name.clone(), GradingMatrix::by_name(name, params.b())?));
        }
        for (i, rows) in m.matrices.iter().enumerate() {
            out.push((format!("matrix{i}"), GradingMatrix::custom(*rows)?));
        }
        Ok(out)
    }
}
