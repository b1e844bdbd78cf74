//! Nash equilibria of the population game.
//!
//! At every equilibrium the protected populations form an upper set of
//! degrees: everyone above a threshold degree protects, nobody below it does,
//! and only the threshold population may be split. The protected masses are
//! the same at every equilibrium; only the split of the unprotected mass
//! between `N` and `I` can differ. [`solve_ne`] therefore searches the
//! one-parameter threshold family directly and certifies the result with
//! [`verify_ne`].

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::exposure::{degree_costs, Action, ActionMasses, DegreeCosts, SocialState, Spread};
use crate::model::{DegreeDistribution, ModelParams};

/// Solver tolerances shared by the equilibrium and optimum searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Mass tolerance.
    pub mass: f64,
    /// Tolerance on cost gaps when certifying an equilibrium.
    pub cost: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { mass: 1e-10, cost: 1e-8 }
    }
}

/// Protected masses of the threshold form: degrees above `threshold` fully
/// protect, `threshold` protects `boundary_mass`, lower degrees do not.
/// `threshold = d_max + 1` means nobody protects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdProfile {
    pub threshold: usize,
    pub boundary_mass: f64,
}

impl ThresholdProfile {
    pub fn nobody(dist: &DegreeDistribution) -> Self {
        ThresholdProfile { threshold: dist.d_max() + 1, boundary_mass: 0.0 }
    }

    pub fn everybody(dist: &DegreeDistribution) -> Self {
        ThresholdProfile { threshold: 1, boundary_mass: dist.mass(1) }
    }

    pub fn validate(&self, dist: &DegreeDistribution) -> Result<()> {
        if self.threshold == 0 || self.threshold > dist.d_max() + 1 {
            return Err(invalid(format!(
                "threshold {} outside 1..={}",
                self.threshold,
                dist.d_max() + 1
            )));
        }
        if self.threshold <= dist.d_max() {
            let m = dist.mass(self.threshold);
            if !(self.boundary_mass >= 0.0 && self.boundary_mass <= m) {
                return Err(invalid(format!(
                    "boundary mass {} outside [0, {m}] at degree {}",
                    self.boundary_mass, self.threshold
                )));
            }
        }
        Ok(())
    }

    /// `x_{d,P}` for every degree.
    pub fn protected(&self, dist: &DegreeDistribution) -> Vec<f64> {
        dist.degrees()
            .map(|d| match d.cmp(&self.threshold) {
                std::cmp::Ordering::Less => 0.0,
                std::cmp::Ordering::Equal => self.boundary_mass,
                std::cmp::Ordering::Greater => dist.mass(d),
            })
            .collect()
    }

    /// Total protected mass.
    pub fn protected_mass(&self, dist: &DegreeDistribution) -> f64 {
        self.protected(dist).iter().sum()
    }
}

/// How unprotected mass is divided between `N` and `I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum InsuredRule {
    /// Insure when `c_I - Ins` is below `-tie_tol`; ties go to `N`.
    CostMinimizing { tie_tol: f64 },
    /// All unprotected mass plays `N`.
    NeverInsure,
}

impl Default for InsuredRule {
    fn default() -> Self {
        InsuredRule::CostMinimizing { tie_tol: 1e-9 }
    }
}

/// Realizes a threshold profile as a social state.
pub fn state_from_profile(
    profile: &ThresholdProfile,
    dist: &DegreeDistribution,
    params: &ModelParams,
    rule: InsuredRule,
) -> Result<SocialState> {
    profile.validate(dist)?;
    let protected = profile.protected(dist);
    Ok(split_unprotected(dist, &protected, params, rule))
}

pub(crate) fn split_unprotected(
    dist: &DegreeDistribution,
    protected: &[f64],
    params: &ModelParams,
    rule: InsuredRule,
) -> SocialState {
    let e = Spread::new(dist, protected, params).exposure(params.hops());
    let x = protected
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let d = i + 1;
            let rest = (dist.mass(d) - y).max(0.0);
            let insure = match rule {
                InsuredRule::NeverInsure => false,
                InsuredRule::CostMinimizing { tie_tol } => {
                    let c = DegreeCosts::at_exposure(params, d, e);
                    c.insure - c.no_action < -tie_tol
                }
            };
            if insure {
                ActionMasses { protect: y, no_action: 0.0, insure: rest }
            } else {
                ActionMasses { protect: y, no_action: rest, insure: 0.0 }
            }
        })
        .collect();
    SocialState::from_parts_unchecked(dist, x)
}

/// `min(C_{d,N}, C_{d,I}) - C_{d,P}`: positive when protecting is the strict
/// best response of degree `d`.
pub fn best_response_gap(state: &SocialState, params: &ModelParams, degree: usize) -> Result<f64> {
    Ok(degree_costs(state, params, degree)?.protection_gain())
}

/// One positive-mass action that costs more than the cheapest action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub degree: usize,
    pub action: Action,
    pub mass: f64,
    /// `C_{d,a} - min_a' C_{d,a'}`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeReport {
    pub violations: Vec<Violation>,
}

impl NeReport {
    pub fn is_ne(&self) -> bool {
        self.violations.is_empty()
    }

    /// Largest excess over all violations, 0 when there are none.
    pub fn worst_excess(&self) -> f64 {
        self.violations.iter().map(|v| v.excess).fold(0.0, f64::max)
    }
}

/// Checks that every action with positive mass at every positive-mass degree
/// costs within `tol` of that degree's cheapest action.
pub fn verify_ne(state: &SocialState, params: &ModelParams, tol: f64) -> NeReport {
    let dist = state.dist();
    let e = Spread::new(dist, &state.protected(), params).exposure(params.hops());
    let mut violations = Vec::new();
    for d in dist.degrees() {
        if dist.mass(d) <= 0.0 {
            continue;
        }
        let costs = DegreeCosts::at_exposure(params, d, e);
        let best = costs.min();
        for action in Action::ALL {
            let mass = state.at(d).get(action);
            let excess = costs.get(action) - best;
            if mass > 0.0 && excess > tol {
                violations.push(Violation { degree: d, action, mass, excess });
            }
        }
    }
    NeReport { violations }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub state: SocialState,
    pub profile: ThresholdProfile,
    /// Lowest degree with positive protected mass, `d_max + 1` if none.
    pub d_ne: usize,
    pub protected_mass: f64,
    pub exposure: f64,
    pub insured_mass: f64,
}

/// Lowest degree with positive protected mass, `d_max + 1` if none.
pub fn degree_threshold(dist: &DegreeDistribution, protected: &[f64]) -> usize {
    protected
        .iter()
        .position(|&y| y > 0.0)
        .map_or(dist.d_max() + 1, |i| i + 1)
}

/// Computes a Nash equilibrium.
pub fn solve_ne(params: &ModelParams, dist: &DegreeDistribution, tol: Tolerances) -> Result<EquilibriumResult> {
    solve_ne_with_rule(params, dist, tol, InsuredRule::default())
}

pub fn solve_ne_with_rule(
    params: &ModelParams,
    dist: &DegreeDistribution,
    tol: Tolerances,
    rule: InsuredRule,
) -> Result<EquilibriumResult> {
    let search = ThresholdSearch { params, dist };
    let mut tried = Vec::new();
    for profile in search.candidates() {
        let state = state_from_profile(&profile, dist, params, rule)?;
        let report = verify_ne(&state, params, tol.cost);
        if report.is_ne() {
            return Ok(finish(state, profile, params));
        }
        tried.push((profile, report.worst_excess()));
    }
    Err(Error::Internal(format!(
        "no threshold profile passed equilibrium verification; candidates and worst cost excess: {tried:?}"
    )))
}

fn finish(state: SocialState, profile: ThresholdProfile, params: &ModelParams) -> EquilibriumResult {
    let protected = state.protected();
    let dist = state.dist();
    let exposure = Spread::new(dist, &protected, params).exposure(params.hops());
    EquilibriumResult {
        d_ne: degree_threshold(dist, &protected),
        protected_mass: state.protected_mass(),
        insured_mass: state.insured_mass(),
        exposure,
        profile,
        state,
    }
}

struct ThresholdSearch<'a> {
    params: &'a ModelParams,
    dist: &'a DegreeDistribution,
}

impl ThresholdSearch<'_> {
    /// Protection gain of `degree` when the protected masses follow `profile`.
    fn gain(&self, degree: usize, profile: ThresholdProfile) -> f64 {
        let e = Spread::new(self.dist, &profile.protected(self.dist), self.params).exposure(self.params.hops());
        DegreeCosts::at_exposure(self.params, degree, e).protection_gain()
    }

    fn populated(&self) -> impl DoubleEndedIterator<Item = usize> + '_ {
        self.dist.degrees().filter(|&d| self.dist.mass(d) > 0.0)
    }

    /// Candidate equilibria in the order they should be tried: the two
    /// corners, then one candidate per threshold degree scanning downward.
    fn candidates(&self) -> Vec<ThresholdProfile> {
        let mut out = Vec::new();

        let nobody = ThresholdProfile::nobody(self.dist);
        if self.populated().all(|d| self.gain(d, nobody) <= 0.0) {
            out.push(nobody);
        }
        let lowest = self.populated().next().expect("distribution has positive mass");
        let everybody = ThresholdProfile { threshold: lowest, boundary_mass: self.dist.mass(lowest) };
        if self.populated().all(|d| self.gain(d, everybody) >= 0.0) {
            out.push(everybody);
        }

        for d in self.populated().rev() {
            let m = self.dist.mass(d);
            let full = ThresholdProfile { threshold: d, boundary_mass: m };
            if self.gain(d, full) >= 0.0 {
                // degree d protects even when all of it does
                continue;
            }
            let empty = ThresholdProfile { threshold: d, boundary_mass: 0.0 };
            if self.gain(d, empty) <= 0.0 {
                out.push(empty);
            } else {
                out.push(ThresholdProfile { threshold: d, boundary_mass: self.indifference_mass(d) });
            }
        }
        out
    }

    /// Bisects for the protected mass at which `degree` is indifferent. The
    /// gain is positive at 0 and negative at `m_d`, and the set of masses
    /// with positive gain is an interval starting at 0, so the sign alone
    /// drives the search; it runs until the bracket stops shrinking.
    fn indifference_mass(&self, degree: usize) -> f64 {
        let at = |t: f64| self.gain(degree, ThresholdProfile { threshold: degree, boundary_mass: t });
        let (mut lo, mut hi) = (0.0, self.dist.mass(degree));
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if at(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if at(lo).abs() <= at(hi).abs() {
            lo
        } else {
            hi
        }
    }
}
