//! Point evaluations, sweeps and simulations, written as CSV.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, Context};
use idsgame::cascade;
use idsgame::exposure::{degree_costs, SocialState};
use idsgame::mc::{empirical_cascade_probability, SimConfig};
use idsgame::optimum::{state_social_cost, OptimumResult};
use idsgame::poa::{poa_bound, report_from};
use idsgame::{solve_ne, solve_opt, DegreeDistribution, ModelParams, ParamSpec, Tolerances};
use rayon::prelude::*;
use serde::Deserialize;

use crate::config::{self, build_params, Config, Family, StateChoice};
use crate::format::fmt_float;

/// A quantity that can be requested per grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Output {
    /// Lowest protecting degree at the equilibrium, `d_max + 1` if none.
    DNe,
    ProtectedMass,
    InsuredMass,
    Exposure,
    Gamma,
    CascadeProb,
    MeanOffspring,
    SStar,
    ScNe,
    ScOpt,
    Poa,
    PoaBound,
    BoundApplicable,
    /// Lowest protecting degree at the optimum, `d_max + 1` if none.
    DDagger,
    OptProtectedMass,
}

impl Output {
    pub const ALL: [Output; 15] = [
        Output::DNe,
        Output::ProtectedMass,
        Output::InsuredMass,
        Output::Exposure,
        Output::Gamma,
        Output::CascadeProb,
        Output::MeanOffspring,
        Output::SStar,
        Output::ScNe,
        Output::ScOpt,
        Output::Poa,
        Output::PoaBound,
        Output::BoundApplicable,
        Output::DDagger,
        Output::OptProtectedMass,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Output::DNe => "d_ne",
            Output::ProtectedMass => "protected_mass",
            Output::InsuredMass => "insured_mass",
            Output::Exposure => "exposure",
            Output::Gamma => "gamma",
            Output::CascadeProb => "cascade_prob",
            Output::MeanOffspring => "mean_offspring",
            Output::SStar => "s_star",
            Output::ScNe => "sc_ne",
            Output::ScOpt => "sc_opt",
            Output::Poa => "poa",
            Output::PoaBound => "poa_bound",
            Output::BoundApplicable => "bound_applicable",
            Output::DDagger => "d_dagger",
            Output::OptProtectedMass => "opt_protected_mass",
        }
    }

    fn needs_optimum(self) -> bool {
        matches!(self, Output::ScOpt | Output::Poa | Output::DDagger | Output::OptProtectedMass)
    }

    fn needs_cascade(self) -> bool {
        matches!(self, Output::CascadeProb | Output::MeanOffspring | Output::SStar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Int(usize),
    Float(f64),
    Bool(bool),
}

impl Value {
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Int(v) => v as f64,
            Value::Float(v) => v,
            Value::Bool(v) => v as u8 as f64,
        }
    }

    pub fn render(self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Float(v) => fmt_float(v),
            Value::Bool(v) => v.to_string(),
        }
    }
}

/// Computes `outputs` at one parameter point, solving only what they need.
pub fn evaluate(
    params: &ModelParams,
    dist: &DegreeDistribution,
    tol: Tolerances,
    outputs: &[Output],
) -> anyhow::Result<Vec<Value>> {
    let ne = solve_ne(params, dist, tol)?;
    let opt = if outputs.iter().any(|o| o.needs_optimum()) {
        Some(solve_opt(params, dist, tol)?)
    } else {
        None
    };
    let spread = if outputs.iter().any(|o| o.needs_cascade()) {
        Some(cascade::analyze(&ne.state, params))
    } else {
        None
    };
    let optimum = |o: Output| -> &OptimumResult { opt.as_ref().unwrap_or_else(|| unreachable!("{o:?} needs the optimum")) };
    outputs
        .iter()
        .map(|&o| {
            Ok(match o {
                Output::DNe => Value::Int(ne.d_ne),
                Output::ProtectedMass => Value::Float(ne.protected_mass),
                Output::InsuredMass => Value::Float(ne.insured_mass),
                Output::Exposure => Value::Float(ne.exposure),
                Output::Gamma => Value::Float(idsgame::exposure::gamma(&ne.state, params)),
                Output::CascadeProb => Value::Float(spread.as_ref().expect("cascade computed").cascade_prob),
                Output::MeanOffspring => Value::Float(spread.as_ref().expect("cascade computed").mean_offspring),
                Output::SStar => Value::Float(spread.as_ref().expect("cascade computed").s_star),
                Output::ScNe => Value::Float(state_social_cost(&ne.state, params)),
                Output::ScOpt => Value::Float(optimum(o).social_cost),
                Output::Poa => Value::Float(report_from(params, dist, &ne, optimum(o))?.ratio),
                Output::PoaBound => Value::Float(poa_bound(params, dist)),
                Output::BoundApplicable => {
                    Value::Bool(params.protection_cost() >= params.delta_loss() * params.tau_da())
                }
                Output::DDagger => Value::Int(optimum(o).d_dagger),
                Output::OptProtectedMass => Value::Float(optimum(o).protected_mass()),
            })
        })
        .collect()
}

/// One CSV row: grid coordinates, requested outputs, and an error message
/// in place of the outputs when the point failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub family_param: f64,
    pub k: u32,
    pub beta_ia: f64,
    pub d_avg: f64,
    pub outputs: Vec<Output>,
    pub values: Vec<Value>,
    pub error: Option<String>,
}

impl Record {
    pub fn header(outputs: &[Output]) -> Vec<String> {
        let mut cols: Vec<String> = ["family_param", "k", "beta_ia", "d_avg"].map(String::from).into();
        cols.extend(outputs.iter().map(|o| o.name().to_string()));
        cols.push("error".into());
        cols
    }

    pub fn fields(&self) -> Vec<String> {
        let mut row = vec![fmt_float(self.family_param), self.k.to_string(), fmt_float(self.beta_ia), fmt_float(self.d_avg)];
        if self.error.is_some() {
            row.extend(self.outputs.iter().map(|_| String::new()));
        } else {
            row.extend(self.values.iter().map(|v| v.render()));
        }
        row.push(self.error.clone().unwrap_or_default());
        row
    }

    pub fn get(&self, output: Output) -> Option<Value> {
        let i = self.outputs.iter().position(|&o| o == output)?;
        self.values.get(i).copied()
    }

    fn coordinates(&self) -> String {
        format!("family_param = {}, k = {}, beta_ia = {}", self.family_param, self.k, self.beta_ia)
    }
}

fn evaluate_record(
    family_param: f64,
    params: &ModelParams,
    dist: &DegreeDistribution,
    tol: Tolerances,
    outputs: &[Output],
) -> Record {
    let result = evaluate(params, dist, tol, outputs);
    let (values, error) = match result {
        Ok(values) => (values, None),
        Err(e) => (Vec::new(), Some(format!("{e:#}"))),
    };
    Record {
        family_param,
        k: params.hops(),
        beta_ia: params.beta_ia(),
        d_avg: dist.average_degree(),
        outputs: outputs.to_vec(),
        values,
        error,
    }
}

/// Every output at the configured point. Solver failures are errors that
/// name the point.
pub fn run_point(config: &Config) -> anyhow::Result<Record> {
    run_point_with(config, &Output::ALL)
}

pub fn run_point_with(config: &Config, outputs: &[Output]) -> anyhow::Result<Record> {
    let params = config.params.build()?;
    let (family_param, dist) = config.distribution.build()?;
    let record = evaluate_record(family_param, &params, &dist, config.tolerances(), outputs);
    if let Some(e) = &record.error {
        bail!("solver failed at {}: {e}", record.coordinates());
    }
    Ok(record)
}

/// Fully resolved sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub family: Family,
    /// Family parameter (exponent, rate, or index of an explicit mass
    /// vector) with its law.
    pub points: Vec<(f64, DegreeDistribution)>,
    pub k_grid: Vec<u32>,
    pub beta_grid: Vec<f64>,
    pub base: ParamSpec,
    pub check_assumptions: bool,
    pub outputs: Vec<Output>,
    pub tol: Tolerances,
}

impl SweepSpec {
    pub fn from_config(config: &Config) -> anyhow::Result<Self> {
        let s = &config.sweep;
        let family = s.family.unwrap_or(config.distribution.family);
        let d_max = config.distribution.d_max;
        let points = match family {
            Family::PowerLaw | Family::Poisson => {
                let values = s.values.clone().unwrap_or_else(|| match family {
                    Family::PowerLaw => config::default_alphas(),
                    _ => config::default_rates(),
                });
                values
                    .into_iter()
                    .map(|v| {
                        let dist = match family {
                            Family::PowerLaw => DegreeDistribution::power_law(v, d_max),
                            _ => DegreeDistribution::poisson(v, d_max),
                        };
                        Ok((v, dist.with_context(|| format!("{family} parameter {v}"))?))
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?
            }
            Family::Explicit => {
                let vectors = match (&s.masses, &config.distribution.masses) {
                    (Some(list), _) => list.clone(),
                    (None, Some(one)) => vec![one.clone()],
                    (None, None) => bail!("explicit sweep needs sweep.masses or distribution.masses"),
                };
                vectors
                    .into_iter()
                    .enumerate()
                    .map(|(i, m)| {
                        let dist = DegreeDistribution::from_masses(m).with_context(|| format!("mass vector {i}"))?;
                        Ok((i as f64, dist))
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?
            }
        };
        let spec = SweepSpec {
            family,
            points,
            k_grid: s.k.clone().unwrap_or_else(config::default_hops),
            beta_grid: s.beta.clone().unwrap_or_else(config::default_betas),
            base: config.params.spec(),
            check_assumptions: config.params.check_assumptions(),
            outputs: s.outputs.clone().unwrap_or_else(config::default_outputs),
            tol: config.tolerances(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.points.is_empty() || self.k_grid.is_empty() || self.beta_grid.is_empty() || self.outputs.is_empty() {
            bail!("sweep grids and outputs must be nonempty");
        }
        for &k in &self.k_grid {
            for &beta_ia in &self.beta_grid {
                build_params(ParamSpec { hops: k, beta_ia, ..self.base }, self.check_assumptions)
                    .with_context(|| format!("sweep point k = {k}, beta_ia = {beta_ia}"))?;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len() * self.k_grid.len() * self.beta_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Evaluates the grid in lexicographic (family parameter, K, beta) order.
    pub fn records(&self) -> Vec<Record> {
        let (nk, nb) = (self.k_grid.len(), self.beta_grid.len());
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let (family_param, dist) = &self.points[i / (nk * nb)];
                let k = self.k_grid[i / nb % nk];
                let beta_ia = self.beta_grid[i % nb];
                let params = build_params(ParamSpec { hops: k, beta_ia, ..self.base }, self.check_assumptions)
                    .expect("grid validated");
                evaluate_record(*family_param, &params, dist, self.tol, &self.outputs)
            })
            .collect()
    }
}

/// Opens `path`, or stdout when absent.
pub fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_records<W: Write>(out: W, outputs: &[Output], records: &[Record]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(Record::header(outputs))?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one row per grid point; returns the row count.
pub fn run_sweep<W: Write>(spec: &SweepSpec, out: W) -> anyhow::Result<usize> {
    let records = spec.records();
    write_records(out, &spec.outputs, &records)?;
    Ok(records.len())
}

pub fn run_sweep_to(spec: &SweepSpec, path: &Path) -> anyhow::Result<usize> {
    run_sweep(spec, sink(Some(path))?)
}

/// The state a cascade or simulation runs on.
pub fn state_for(
    choice: StateChoice,
    params: &ModelParams,
    dist: &DegreeDistribution,
    tol: Tolerances,
) -> anyhow::Result<SocialState> {
    Ok(match choice {
        StateChoice::Ne => solve_ne(params, dist, tol)?.state,
        StateChoice::Optimum => solve_opt(params, dist, tol)?.action.to_state(dist),
        StateChoice::Unprotected => SocialState::unprotected(dist),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeRecord {
    pub family_param: f64,
    pub k: u32,
    pub beta_ia: f64,
    pub d_avg: f64,
    pub state: StateChoice,
    pub report: cascade::CascadeReport,
}

impl CascadeRecord {
    pub const HEADER: [&'static str; 9] =
        ["family_param", "k", "beta_ia", "d_avg", "state", "gamma", "mean_offspring", "s_star", "cascade_prob"];

    pub fn fields(&self) -> Vec<String> {
        vec![
            fmt_float(self.family_param),
            self.k.to_string(),
            fmt_float(self.beta_ia),
            fmt_float(self.d_avg),
            self.state.to_string(),
            fmt_float(self.report.gamma),
            fmt_float(self.report.mean_offspring),
            fmt_float(self.report.s_star),
            fmt_float(self.report.cascade_prob),
        ]
    }
}

pub fn run_cascade(config: &Config) -> anyhow::Result<CascadeRecord> {
    let params = config.params.build()?;
    let (family_param, dist) = config.distribution.build()?;
    let state = state_for(config.mc.state, &params, &dist, config.tolerances())?;
    Ok(CascadeRecord {
        family_param,
        k: params.hops(),
        beta_ia: params.beta_ia(),
        d_avg: dist.average_degree(),
        state: config.mc.state,
        report: cascade::analyze(&state, &params),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct McRecord {
    pub family_param: f64,
    pub k: u32,
    pub beta_ia: f64,
    pub d_avg: f64,
    pub state: StateChoice,
    pub cascade_prob: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub cascades: usize,
    pub sim: SimConfig,
}

impl McRecord {
    pub const HEADER: [&'static str; 14] = [
        "family_param",
        "k",
        "beta_ia",
        "d_avg",
        "state",
        "cascade_prob",
        "empirical",
        "std_error",
        "cascades",
        "n",
        "trials",
        "seed",
        "cascade_fraction",
        "simple_graph",
    ];

    pub fn fields(&self) -> Vec<String> {
        vec![
            fmt_float(self.family_param),
            self.k.to_string(),
            fmt_float(self.beta_ia),
            fmt_float(self.d_avg),
            self.state.to_string(),
            fmt_float(self.cascade_prob),
            fmt_float(self.empirical),
            fmt_float(self.std_error),
            self.cascades.to_string(),
            self.sim.n.to_string(),
            self.sim.trials.to_string(),
            self.sim.seed.to_string(),
            fmt_float(self.sim.cascade_fraction),
            self.sim.simple_graph.to_string(),
        ]
    }
}

/// Analytic cascade probability next to its simulated estimate.
pub fn run_mc(config: &Config) -> anyhow::Result<McRecord> {
    let params = config.params.build()?;
    let (family_param, dist) = config.distribution.build()?;
    let state = state_for(config.mc.state, &params, &dist, config.tolerances())?;
    let sim = config.mc.sim_config();
    let est = empirical_cascade_probability(&params, &state, &sim)?;
    Ok(McRecord {
        family_param,
        k: params.hops(),
        beta_ia: params.beta_ia(),
        d_avg: dist.average_degree(),
        state: config.mc.state,
        cascade_prob: cascade::cascade_probability(&state, &params),
        empirical: est.estimate,
        std_error: est.std_error,
        cascades: est.cascades,
        sim,
    })
}

pub fn write_rows<W: Write, S: AsRef<[u8]>>(out: W, header: &[&str], rows: &[Vec<S>]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-degree masses and costs at the configured state.
pub fn profile_rows(config: &Config, choice: StateChoice) -> anyhow::Result<Vec<Vec<String>>> {
    let params = config.params.build()?;
    let (_, dist) = config.distribution.build()?;
    let state = state_for(choice, &params, &dist, config.tolerances())?;
    dist.degrees()
        .map(|d| {
            let x = state.at(d);
            let c = degree_costs(&state, &params, d)?;
            Ok(vec![
                d.to_string(),
                fmt_float(dist.mass(d)),
                fmt_float(x.protect),
                fmt_float(x.no_action),
                fmt_float(x.insure),
                fmt_float(c.protect),
                fmt_float(c.no_action),
                fmt_float(c.insure),
            ])
        })
        .collect()
}

pub const PROFILE_HEADER: [&str; 8] =
    ["degree", "mass", "protect", "no_action", "insure", "cost_protect", "cost_no_action", "cost_insure"];

/// Equilibrium summary used by the `ne` subcommand.
pub const NE_OUTPUTS: [Output; 5] =
    [Output::DNe, Output::ProtectedMass, Output::InsuredMass, Output::Exposure, Output::ScNe];
pub const OPT_OUTPUTS: [Output; 3] = [Output::DDagger, Output::OptProtectedMass, Output::ScOpt];
pub const POA_OUTPUTS: [Output; 5] =
    [Output::ScNe, Output::ScOpt, Output::Poa, Output::PoaBound, Output::BoundApplicable];
