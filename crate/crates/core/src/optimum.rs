//! Social optimum: the protected masses that minimize total social cost.
//!
//! The planner only chooses between `P` and `N`; insurance moves risk to the
//! insurer without changing the total. Like the equilibria, the minimizer has
//! the threshold form, so the search runs over threshold slices and the
//! winner is certified by one-sided derivative conditions on the whole box.

use serde::Serialize;

use crate::equilibrium::{degree_threshold, ThresholdProfile, Tolerances};
use crate::error::{invalid, Error, Result};
use crate::exposure::{Action, DegreeCosts, SocialState, Spread};
use crate::model::{DegreeDistribution, ModelParams};

/// Absolute tolerance on the first-order conditions at the optimum.
pub const DERIVATIVE_TOL: f64 = 1e-6;

/// Relative cost difference treated as round-off when comparing candidates.
const COST_ROUNDOFF: f64 = 1e-12;

/// Grid points per threshold slice before golden-section refinement.
const SLICE_GRID: usize = 64;

/// Protected mass per degree chosen by the social planner; the remainder of
/// each population plays `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpAction {
    y: Vec<f64>,
}

impl SpAction {
    pub fn new(y: Vec<f64>, dist: &DegreeDistribution) -> Result<Self> {
        if y.len() != dist.d_max() {
            return Err(invalid("planner action length differs from d_max"));
        }
        for (i, &v) in y.iter().enumerate() {
            let m = dist.mass(i + 1);
            if !(v.is_finite() && v >= 0.0 && v <= m) {
                return Err(invalid(format!("y_{} = {v} outside [0, {m}]", i + 1)));
            }
        }
        Ok(SpAction { y })
    }

    pub fn from_profile(profile: &ThresholdProfile, dist: &DegreeDistribution) -> Result<Self> {
        profile.validate(dist)?;
        Ok(SpAction { y: profile.protected(dist) })
    }

    pub fn protected(&self) -> &[f64] {
        &self.y
    }

    pub fn protected_mass(&self) -> f64 {
        self.y.iter().sum()
    }

    /// The social state `X(y)`: `y_d` plays `P`, `m_d - y_d` plays `N`.
    pub fn to_state(&self, dist: &DegreeDistribution) -> SocialState {
        SocialState::from_protected_unchecked(dist, &self.y)
    }
}

fn planner_cost(dist: &DegreeDistribution, y: &[f64], params: &ModelParams) -> f64 {
    let e = Spread::new(dist, y, params).exposure(params.hops());
    y.iter()
        .enumerate()
        .map(|(i, &yd)| {
            let d = i + 1;
            let c = DegreeCosts::at_exposure(params, d, e);
            yd * c.protect + (dist.mass(d) - yd) * c.no_action
        })
        .sum()
}

/// Social cost of a planner action, `sum_d y_d C_{d,P} + (m_d - y_d) C_{d,N}`.
pub fn social_cost(action: &SpAction, params: &ModelParams, dist: &DegreeDistribution) -> f64 {
    planner_cost(dist, &action.y, params)
}

/// Social cost of an arbitrary social state, counting every player's cost
/// plus the insurer's net cost `x_{d,I} (Ins - c_I)`.
pub fn state_social_cost(state: &SocialState, params: &ModelParams) -> f64 {
    let dist = state.dist();
    let e = Spread::new(dist, &state.protected(), params).exposure(params.hops());
    dist.degrees()
        .map(|d| {
            let c = DegreeCosts::at_exposure(params, d, e);
            let xd = state.at(d);
            let players: f64 = Action::ALL.iter().map(|&a| xd.get(a) * c.get(a)).sum();
            players + xd.insure * (c.payout - params.premium())
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Up,
    Down,
}

/// `d e / d y_d`, smooth in `y`.
fn exposure_slope(spread: &Spread, dist: &DegreeDistribution, params: &ModelParams, degree: usize) -> f64 {
    let k_max = params.hops() as i32;
    let geometric: f64 = (0..k_max).map(|k| spread.lambda.powi(k)).sum();
    let weighted: f64 = (1..k_max).map(|k| k as f64 * spread.lambda.powi(k - 1)).sum();
    let d = degree as f64;
    -(params.beta_ia() * params.delta_p() * d / (dist.average_degree() * dist.total_mass()))
        * (geometric + spread.gamma * (d - 1.0) * weighted)
}

fn cost_slope(dist: &DegreeDistribution, y: &[f64], params: &ModelParams, degree: usize) -> f64 {
    let spread = Spread::new(dist, y, params);
    let e = spread.exposure(params.hops());
    let tau = params.tau_da();
    let loaded: f64 = y
        .iter()
        .enumerate()
        .map(|(i, &yd)| {
            tau * (i + 1) as f64 * (yd * params.loss_protected() + (dist.mass(i + 1) - yd) * params.loss_unprotected())
        })
        .sum();
    params.protection_cost() - tau * (1.0 + degree as f64 * e) * params.delta_loss()
        + loaded * exposure_slope(&spread, dist, params, degree)
}

/// One-sided partial derivative of the social cost in `y_d`.
///
/// The social cost is smooth in `y`, so both directions give the same
/// value; the direction only fixes which boundary is admissible.
pub fn social_cost_derivative(
    action: &SpAction,
    params: &ModelParams,
    dist: &DegreeDistribution,
    degree: usize,
    direction: Direction,
) -> Result<f64> {
    if degree == 0 || degree > dist.d_max() {
        return Err(invalid(format!("degree {degree} outside 1..={}", dist.d_max())));
    }
    let yd = action.y[degree - 1];
    match direction {
        Direction::Up if yd >= dist.mass(degree) => {
            return Err(invalid(format!("y_{degree} is at its upper bound")))
        }
        Direction::Down if yd <= 0.0 => return Err(invalid(format!("y_{degree} is at its lower bound"))),
        _ => {}
    }
    Ok(cost_slope(dist, &action.y, params, degree))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimumResult {
    pub action: SpAction,
    pub profile: ThresholdProfile,
    pub social_cost: f64,
    /// Lowest degree with positive protected mass, `d_max + 1` if none.
    pub d_dagger: usize,
}

impl OptimumResult {
    pub fn protected_mass(&self) -> f64 {
        self.action.protected_mass()
    }
}

/// Solves the planner's problem over the threshold family and certifies the
/// minimizer with derivative sign checks at every degree.
pub fn solve_opt(params: &ModelParams, dist: &DegreeDistribution, tol: Tolerances) -> Result<OptimumResult> {
    let mut best = {
        let profile = ThresholdProfile::nobody(dist);
        (profile, planner_cost(dist, &profile.protected(dist), params))
    };
    for d in dist.degrees().rev().filter(|&d| dist.mass(d) > 0.0) {
        let (t, cost) = minimize_slice(params, dist, d, tol.mass);
        if cost < best.1 {
            best = (ThresholdProfile { threshold: d, boundary_mass: t }, cost);
        }
    }
    let (profile, cost) = best;
    let action = SpAction { y: profile.protected(dist) };
    certify(&action, params, dist)?;
    Ok(OptimumResult {
        d_dagger: degree_threshold(dist, &action.y),
        action,
        profile,
        social_cost: cost,
    })
}

fn slice_cost(params: &ModelParams, dist: &DegreeDistribution, threshold: usize, t: f64) -> f64 {
    let profile = ThresholdProfile { threshold, boundary_mass: t };
    planner_cost(dist, &profile.protected(dist), params)
}

fn slice_slope(params: &ModelParams, dist: &DegreeDistribution, threshold: usize, t: f64) -> f64 {
    let profile = ThresholdProfile { threshold, boundary_mass: t };
    cost_slope(dist, &profile.protected(dist), params, threshold)
}

/// Minimizes the social cost over the boundary mass of one threshold slice.
fn minimize_slice(params: &ModelParams, dist: &DegreeDistribution, threshold: usize, mass_tol: f64) -> (f64, f64) {
    let m = dist.mass(threshold);
    let f = |t: f64| slice_cost(params, dist, threshold, t);

    let grid: Vec<(f64, f64)> = (0..=SLICE_GRID)
        .map(|i| {
            let t = if i == SLICE_GRID { m } else { m * i as f64 / SLICE_GRID as f64 };
            (t, f(t))
        })
        .collect();
    let i_best = (0..grid.len())
        .min_by(|&a, &b| grid[a].1.total_cmp(&grid[b].1))
        .expect("grid is nonempty");
    let mut best = grid[i_best];

    let cell_lo = grid[i_best.saturating_sub(1)].0;
    let cell_hi = grid[(i_best + 1).min(SLICE_GRID)].0;
    let (mut a, mut b) = (cell_lo, cell_hi);

    // golden section on the bracketing cells
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > mass_tol * m.max(f64::MIN_POSITIVE) && b - a > 4.0 * f64::EPSILON * m {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    for cand in [(c, fc), (d, fd)] {
        if cand.1 < best.1 {
            best = cand;
        }
    }

    // Cost values near a flat minimum differ only by round-off, so the
    // stationary point found by bisecting the slope sign over the same cells
    // wins unless it is clearly worse.
    let g = |t: f64| slice_slope(params, dist, threshold, t);
    let (mut lo, mut hi) = (cell_lo, cell_hi);
    if lo < hi && g(lo) < 0.0 && g(hi) > 0.0 {
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = if g(lo).abs() <= g(hi).abs() { lo } else { hi };
        let v = f(t);
        if v <= best.1 + COST_ROUNDOFF * best.1.abs().max(1.0) {
            best = (t, v);
        }
    }

    // likewise a slice end whose slope points outward
    for (t, outward) in [(0.0, g(0.0) >= 0.0), (m, g(m) <= 0.0)] {
        if outward && t != best.0 {
            let v = f(t);
            if v <= best.1 + COST_ROUNDOFF * best.1.abs().max(1.0) {
                best = (t, v);
            }
        }
    }
    best
}

fn certify(action: &SpAction, params: &ModelParams, dist: &DegreeDistribution) -> Result<()> {
    let mut failures = Vec::new();
    for d in dist.degrees().filter(|&d| dist.mass(d) > 0.0) {
        let yd = action.y[d - 1];
        let m = dist.mass(d);
        let slope = cost_slope(dist, &action.y, params, d);
        let ok = if yd <= 0.0 {
            slope >= -DERIVATIVE_TOL
        } else if yd >= m {
            slope <= DERIVATIVE_TOL
        } else {
            slope.abs() <= DERIVATIVE_TOL
        };
        if !ok {
            failures.push((d, yd, slope));
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Error::Internal(format!(
            "social optimum failed first-order checks (degree, y_d, slope): {failures:?}"
        )))
    }
}
