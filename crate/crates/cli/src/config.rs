//! Configuration file model.
//!
//! A config is a TOML document with optional tables `[params]`,
//! `[distribution]`, `[solver]`, `[sweep]` and `[mc]`. Every key has a
//! default, so an empty file is valid. The README documents the grammar.

use std::fmt;
use std::path::Path;

use anyhow::{bail, Context};
use idsgame::mc::SimConfig;
use idsgame::{DegreeDistribution, ModelParams, ParamSpec, Tolerances};
use serde::Deserialize;

use crate::run::Output;

/// Environment variable holding a config path, used when `--config` is absent.
pub const CONFIG_ENV: &str = "IDSGAME_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub params: ParamsSection,
    pub distribution: DistributionSection,
    pub solver: SolverSection,
    pub sweep: SweepSection,
    pub mc: McSection,
}

impl Config {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                Self::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))
            }
            None => Ok(Config::default()),
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        let defaults = Tolerances::default();
        Tolerances {
            mass: self.solver.mass_tol.unwrap_or(defaults.mass),
            cost: self.solver.cost_tol.unwrap_or(defaults.cost),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    TableOne,
    TableTwo,
}

impl Preset {
    pub fn spec(self) -> ParamSpec {
        match self {
            Preset::TableOne => ParamSpec::table_one(),
            Preset::TableTwo => ParamSpec::table_two(),
        }
    }
}

/// Model parameters: a preset with per-field overrides.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub preset: Preset,
    /// Enforce the standing cost assumptions. Defaults to true, except for
    /// the `table_two` preset whose values violate them.
    pub check_assumptions: Option<bool>,
    pub tau_da: Option<f64>,
    pub p_protected: Option<f64>,
    pub p_unprotected: Option<f64>,
    pub loss_protected: Option<f64>,
    pub loss_unprotected: Option<f64>,
    pub protection_cost: Option<f64>,
    pub premium: Option<f64>,
    pub deductible: Option<f64>,
    pub coverage: Option<f64>,
    pub max_payout: Option<f64>,
    pub beta_ia: Option<f64>,
    pub hops: Option<u32>,
}

impl ParamsSection {
    pub fn spec(&self) -> ParamSpec {
        let base = self.preset.spec();
        ParamSpec {
            tau_da: self.tau_da.unwrap_or(base.tau_da),
            p_protected: self.p_protected.unwrap_or(base.p_protected),
            p_unprotected: self.p_unprotected.unwrap_or(base.p_unprotected),
            loss_protected: self.loss_protected.unwrap_or(base.loss_protected),
            loss_unprotected: self.loss_unprotected.unwrap_or(base.loss_unprotected),
            protection_cost: self.protection_cost.unwrap_or(base.protection_cost),
            premium: self.premium.unwrap_or(base.premium),
            deductible: self.deductible.unwrap_or(base.deductible),
            coverage: self.coverage.unwrap_or(base.coverage),
            max_payout: self.max_payout.unwrap_or(base.max_payout),
            beta_ia: self.beta_ia.unwrap_or(base.beta_ia),
            hops: self.hops.unwrap_or(base.hops),
        }
    }

    pub fn check_assumptions(&self) -> bool {
        self.check_assumptions.unwrap_or(self.preset != Preset::TableTwo)
    }

    pub fn build(&self) -> anyhow::Result<ModelParams> {
        build_params(self.spec(), self.check_assumptions())
    }
}

pub fn build_params(spec: ParamSpec, check_assumptions: bool) -> anyhow::Result<ModelParams> {
    let built = if check_assumptions {
        ModelParams::new(spec)
    } else {
        ModelParams::without_assumption_check(spec)
    };
    built.map_err(|e| {
        if check_assumptions && ModelParams::without_assumption_check(spec).is_ok() {
            anyhow::anyhow!("{e} (set params.check_assumptions = false to run anyway)")
        } else {
            e.into()
        }
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Family {
    #[default]
    PowerLaw,
    Poisson,
    Explicit,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::PowerLaw => "power_law",
            Family::Poisson => "poisson",
            Family::Explicit => "explicit",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistributionSection {
    pub family: Family,
    /// Power-law exponent.
    pub alpha: f64,
    /// Poisson rate.
    pub rate: f64,
    /// Explicit masses for degrees `1..=len`, normalized on load.
    pub masses: Option<Vec<f64>>,
    pub d_max: usize,
}

impl Default for DistributionSection {
    fn default() -> Self {
        DistributionSection { family: Family::PowerLaw, alpha: 1.0, rate: 3.0, masses: None, d_max: 20 }
    }
}

impl DistributionSection {
    /// The configured law and its family parameter (`alpha`, `rate`, or 0
    /// for explicit masses).
    pub fn build(&self) -> anyhow::Result<(f64, DegreeDistribution)> {
        match self.family {
            Family::PowerLaw => Ok((self.alpha, DegreeDistribution::power_law(self.alpha, self.d_max)?)),
            Family::Poisson => Ok((self.rate, DegreeDistribution::poisson(self.rate, self.d_max)?)),
            Family::Explicit => {
                let Some(masses) = &self.masses else {
                    bail!("distribution.family = \"explicit\" needs distribution.masses");
                };
                Ok((0.0, DegreeDistribution::from_masses(masses.clone())?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub mass_tol: Option<f64>,
    pub cost_tol: Option<f64>,
}

/// Grid axes; each absent axis takes its default.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Defaults to `distribution.family`.
    pub family: Option<Family>,
    /// Exponents or rates.
    pub values: Option<Vec<f64>>,
    /// Mass vectors for the explicit family.
    pub masses: Option<Vec<Vec<f64>>>,
    pub k: Option<Vec<u32>>,
    pub beta: Option<Vec<f64>>,
    pub outputs: Option<Vec<Output>>,
}

/// Default exponent grid, `0, 0.25, ..., 3`.
pub fn default_alphas() -> Vec<f64> {
    (0..=12).map(|i| i as f64 / 4.0).collect()
}

/// Default rate grid, `1.1, 1.6, ..., 10.6`.
pub fn default_rates() -> Vec<f64> {
    (0..=19).map(|i| (11 + 5 * i) as f64 / 10.0).collect()
}

/// Default hop grid, `1..=10`.
pub fn default_hops() -> Vec<u32> {
    (1..=10).collect()
}

/// Default attack-probability grid, `0.05, 0.1, ..., 1`.
pub fn default_betas() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 20.0).collect()
}

pub fn default_outputs() -> Vec<Output> {
    vec![Output::DNe, Output::ProtectedMass, Output::CascadeProb]
}

/// Which social state a cascade or simulation runs on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum StateChoice {
    #[default]
    Ne,
    Optimum,
    Unprotected,
}

impl fmt::Display for StateChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StateChoice::Ne => "ne",
            StateChoice::Optimum => "optimum",
            StateChoice::Unprotected => "unprotected",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub n: usize,
    pub trials: usize,
    pub cascade_fraction: f64,
    pub seed: u64,
    pub simple_graph: bool,
    pub state: StateChoice,
}

impl Default for McSection {
    fn default() -> Self {
        let sim = SimConfig::default();
        McSection {
            n: sim.n,
            trials: sim.trials,
            cascade_fraction: sim.cascade_fraction,
            seed: sim.seed,
            simple_graph: sim.simple_graph,
            state: StateChoice::Ne,
        }
    }
}

impl McSection {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            n: self.n,
            trials: self.trials,
            cascade_fraction: self.cascade_fraction,
            seed: self.seed,
            simple_graph: self.simple_graph,
        }
    }
}

/// Flags shared by the single-point subcommands; each overrides the file.
#[derive(Debug, Clone, Default, PartialEq, clap::Args)]
pub struct PointOverrides {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub d_max: Option<usize>,
    /// Hop limit K.
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub beta: Option<f64>,
}

impl PointOverrides {
    pub fn apply(&self, config: &mut Config) {
        if let Some(v) = self.preset {
            config.params.preset = v;
        }
        if let Some(v) = self.family {
            config.distribution.family = v;
        }
        if let Some(v) = self.alpha {
            config.distribution.alpha = v;
        }
        if let Some(v) = self.rate {
            config.distribution.rate = v;
        }
        if let Some(v) = self.d_max {
            config.distribution.d_max = v;
        }
        if let Some(v) = self.k {
            config.params.hops = Some(v);
        }
        if let Some(v) = self.beta {
            config.params.beta_ia = Some(v);
        }
    }
}

/// Simulation flags.
#[derive(Debug, Clone, Default, PartialEq, clap::Args)]
pub struct McOverrides {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Nodes per sampled graph.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub cascade_fraction: Option<f64>,
    /// Drop self-loops and repeated edges.
    #[arg(long)]
    pub simple_graph: bool,
}

impl McOverrides {
    pub fn apply(&self, config: &mut Config) {
        if let Some(v) = self.seed {
            config.mc.seed = v;
        }
        if let Some(v) = self.n {
            config.mc.n = v;
        }
        if let Some(v) = self.trials {
            config.mc.trials = v;
        }
        if let Some(v) = self.cascade_fraction {
            config.mc.cascade_fraction = v;
        }
        if self.simple_graph {
            config.mc.simple_graph = true;
        }
    }
}

/// Sweep flags; list values are comma separated.
#[derive(Debug, Clone, Default, PartialEq, clap::Args)]
pub struct SweepOverrides {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Exponents or rates.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    pub beta: Option<Vec<f64>>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub outputs: Option<Vec<Output>>,
    #[arg(long)]
    pub d_max: Option<usize>,
}

impl SweepOverrides {
    pub fn apply(&self, config: &mut Config) {
        if let Some(v) = self.preset {
            config.params.preset = v;
        }
        if let Some(v) = self.family {
            config.sweep.family = Some(v);
        }
        if let Some(v) = &self.values {
            config.sweep.values = Some(v.clone());
        }
        if let Some(v) = &self.k {
            config.sweep.k = Some(v.clone());
        }
        if let Some(v) = &self.beta {
            config.sweep.beta = Some(v.clone());
        }
        if let Some(v) = &self.outputs {
            config.sweep.outputs = Some(v.clone());
        }
        if let Some(v) = self.d_max {
            config.distribution.d_max = v;
        }
    }
}
