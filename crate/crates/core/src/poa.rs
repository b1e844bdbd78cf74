//! Price of anarchy and its closed-form upper bound.
//!
//! All equilibria share one social cost, so the price of anarchy and the
//! price of stability coincide.

use serde::Serialize;

use crate::equilibrium::{solve_ne, EquilibriumResult, Tolerances};
use crate::error::{Error, Result};
use crate::model::{DegreeDistribution, ModelParams};
use crate::optimum::{solve_opt, state_social_cost, OptimumResult};

/// Exposure when nobody protects, the largest any state can produce.
pub fn e_max(params: &ModelParams, dist: &DegreeDistribution) -> f64 {
    let base = params.beta_ia() * params.p_unprotected();
    let growth = base * dist.second_factorial_moment() / dist.average_degree();
    let mut sum = 0.0;
    let mut term = 1.0;
    for _ in 0..params.hops() {
        sum += term;
        term *= growth;
    }
    base * sum
}

/// `1 + d_avg * e_max`.
pub fn poa_bound(params: &ModelParams, dist: &DegreeDistribution) -> f64 {
    1.0 + dist.average_degree() * e_max(params, dist)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoaReport {
    pub sc_ne: f64,
    pub sc_opt: f64,
    pub ratio: f64,
    pub bound: f64,
    /// `c_P >= Delta L * tau_DA`, the condition under which `bound` is
    /// guaranteed.
    pub bound_applicable: bool,
}

/// Equilibrium, optimum and the resulting price of anarchy in one pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoaAnalysis {
    pub equilibrium: EquilibriumResult,
    pub optimum: OptimumResult,
    pub report: PoaReport,
}

pub fn poa(params: &ModelParams, dist: &DegreeDistribution) -> Result<PoaReport> {
    Ok(analyze(params, dist, Tolerances::default())?.report)
}

pub fn analyze(params: &ModelParams, dist: &DegreeDistribution, tol: Tolerances) -> Result<PoaAnalysis> {
    let equilibrium = solve_ne(params, dist, tol)?;
    let optimum = solve_opt(params, dist, tol)?;
    let report = report_from(params, dist, &equilibrium, &optimum)?;
    Ok(PoaAnalysis { equilibrium, optimum, report })
}

pub fn report_from(
    params: &ModelParams,
    dist: &DegreeDistribution,
    equilibrium: &EquilibriumResult,
    optimum: &OptimumResult,
) -> Result<PoaReport> {
    let sc_ne = state_social_cost(&equilibrium.state, params);
    let sc_opt = optimum.social_cost;
    if sc_opt < 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "optimal social cost {sc_opt} is too small for a ratio"
        )));
    }
    Ok(PoaReport {
        sc_ne,
        sc_opt,
        ratio: sc_ne / sc_opt,
        bound: poa_bound(params, dist),
        bound_applicable: params.protection_cost() >= params.delta_loss() * params.tau_da(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exposure::{exposure, SocialState};
    use crate::model::ParamSpec;
    use approx::assert_relative_eq;

    #[test]
    fn single_hop_e_max() {
        let p = ModelParams::new(ParamSpec::table_one()).unwrap();
        let dist = DegreeDistribution::power_law(0.5, 20).unwrap();
        assert_eq!(e_max(&p, &dist), 0.85);
    }

    #[test]
    fn degree_one_e_max() {
        let p = ModelParams::new(ParamSpec { hops: 9, ..ParamSpec::table_one() }).unwrap();
        let dist = DegreeDistribution::single_degree(1).unwrap();
        assert_eq!(e_max(&p, &dist), 0.85);
    }

    #[test]
    fn e_max_matches_unprotected_exposure() {
        for k in 1..=10 {
            let p = ModelParams::new(ParamSpec { hops: k, ..ParamSpec::table_one() }).unwrap();
            let dist = DegreeDistribution::poisson(3.0, 20).unwrap();
            assert_relative_eq!(
                e_max(&p, &dist),
                exposure(&SocialState::unprotected(&dist), &p),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn ratio_one_at_corners() {
        let never = ModelParams::new(ParamSpec { protection_cost: 1e6, ..ParamSpec::table_one() }).unwrap();
        let dist = DegreeDistribution::power_law(1.0, 20).unwrap();
        let r = poa(&never, &dist).unwrap();
        assert_relative_eq!(r.ratio, 1.0, epsilon = 1e-12);

        let always = ModelParams::new(ParamSpec {
            loss_unprotected: 1010.0,
            ..ParamSpec::table_one()
        })
        .unwrap();
        let r = poa(&always, &dist).unwrap();
        assert_relative_eq!(r.ratio, 1.0, epsilon = 1e-12);
        assert!(!r.bound_applicable);
    }

    #[test]
    fn table_two_bound_applies() {
        let p = ModelParams::without_assumption_check(ParamSpec::table_two()).unwrap();
        let dist = DegreeDistribution::power_law(1.0, 20).unwrap();
        let r = poa(&p, &dist).unwrap();
        assert!(r.bound_applicable);
        assert!(r.ratio >= 1.0 - 1e-9);
        assert!(r.ratio <= r.bound + 1e-9);
    }
}
