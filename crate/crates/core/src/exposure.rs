//! Risk exposure and per-degree costs at a social state.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::model::{compensated_sum, DegreeDistribution, ModelParams};

/// Relative tolerance on `sum_a x_{d,a} = m_d`.
pub const STATE_SUM_TOL: f64 = 1e-10;

/// `|lambda - 1|` below which the exposure series is summed as `K * gamma`.
pub const UNIT_LAMBDA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Action {
    Protect,
    NoAction,
    Insure,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Protect, Action::NoAction, Action::Insure];
}

/// Masses of one population split over the three actions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ActionMasses {
    pub protect: f64,
    pub no_action: f64,
    pub insure: f64,
}

impl ActionMasses {
    pub fn get(&self, action: Action) -> f64 {
        match action {
            Action::Protect => self.protect,
            Action::NoAction => self.no_action,
            Action::Insure => self.insure,
        }
    }

    pub fn total(&self) -> f64 {
        self.protect + self.no_action + self.insure
    }

    pub fn unprotected(&self) -> f64 {
        self.no_action + self.insure
    }

    fn scaled(&self, factor: f64) -> Self {
        ActionMasses {
            protect: self.protect * factor,
            no_action: self.no_action * factor,
            insure: self.insure * factor,
        }
    }
}

/// Masses `x_{d,a}` for every degree and action.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SocialState {
    dist: DegreeDistribution,
    x: Vec<ActionMasses>,
}

impl SocialState {
    pub fn new(dist: DegreeDistribution, x: Vec<ActionMasses>) -> Result<Self> {
        if x.len() != dist.d_max() {
            return Err(invalid(format!(
                "state has {} populations, distribution has {}",
                x.len(),
                dist.d_max()
            )));
        }
        for (i, xd) in x.iter().enumerate() {
            let d = i + 1;
            let vals = [xd.protect, xd.no_action, xd.insure];
            if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(invalid(format!("negative or non-finite mass at degree {d}")));
            }
            let m = dist.mass(d);
            if (xd.total() - m).abs() > STATE_SUM_TOL * m.max(dist.total_mass()) {
                return Err(invalid(format!(
                    "masses at degree {d} sum to {} instead of m_d = {m}",
                    xd.total()
                )));
            }
        }
        Ok(SocialState { dist, x })
    }

    /// Nobody protects or insures.
    pub fn unprotected(dist: &DegreeDistribution) -> Self {
        Self::from_protected_unchecked(dist, &vec![0.0; dist.d_max()])
    }

    /// Every population protects.
    pub fn fully_protected(dist: &DegreeDistribution) -> Self {
        Self::from_protected_unchecked(dist, dist.masses())
    }

    /// `protected[d - 1]` of each population protects, the rest plays N.
    pub fn from_protected(dist: &DegreeDistribution, protected: &[f64]) -> Result<Self> {
        if protected.len() != dist.d_max() {
            return Err(invalid("protected vector length differs from d_max"));
        }
        for (i, &y) in protected.iter().enumerate() {
            let m = dist.mass(i + 1);
            if !(y.is_finite() && y >= 0.0 && y <= m) {
                return Err(invalid(format!(
                    "protected mass {y} at degree {} outside [0, {m}]",
                    i + 1
                )));
            }
        }
        Ok(Self::from_protected_unchecked(dist, protected))
    }

    pub(crate) fn from_protected_unchecked(dist: &DegreeDistribution, protected: &[f64]) -> Self {
        let x = protected
            .iter()
            .enumerate()
            .map(|(i, &y)| ActionMasses {
                protect: y,
                no_action: (dist.mass(i + 1) - y).max(0.0),
                insure: 0.0,
            })
            .collect();
        SocialState { dist: dist.clone(), x }
    }

    pub(crate) fn from_parts_unchecked(dist: &DegreeDistribution, x: Vec<ActionMasses>) -> Self {
        SocialState { dist: dist.clone(), x }
    }

    pub fn dist(&self) -> &DegreeDistribution {
        &self.dist
    }

    pub fn masses(&self) -> &[ActionMasses] {
        &self.x
    }

    /// `x_d`; panics outside `1..=d_max`.
    pub fn at(&self, degree: usize) -> &ActionMasses {
        &self.x[degree - 1]
    }

    /// `x_{d,P}` for all degrees.
    pub fn protected(&self) -> Vec<f64> {
        self.x.iter().map(|xd| xd.protect).collect()
    }

    /// Share `g_{d,a}`, defined as 0 when `m_d = 0`.
    pub fn share(&self, degree: usize, action: Action) -> f64 {
        let m = self.dist.mass(degree);
        if m > 0.0 {
            self.at(degree).get(action) / m
        } else {
            0.0
        }
    }

    pub fn protected_mass(&self) -> f64 {
        self.x.iter().map(|xd| xd.protect).sum()
    }

    pub fn insured_mass(&self) -> f64 {
        self.x.iter().map(|xd| xd.insure).sum()
    }

    /// The same state for the population `factor * m`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let dist = self.dist.scaled(factor)?;
        Ok(SocialState {
            dist,
            x: self.x.iter().map(|xd| xd.scaled(factor)).collect(),
        })
    }
}

/// `gamma` and `lambda` computed from the protected masses alone; the N/I
/// split never enters the exposure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Spread {
    pub gamma: f64,
    pub lambda: f64,
}

impl Spread {
    pub fn new(dist: &DegreeDistribution, protected: &[f64], params: &ModelParams) -> Self {
        let beta = params.beta_ia();
        let p_u = params.p_unprotected();
        let dp = params.delta_p();
        let w = dist.neighbor_weights();

        // d_avg * sum(m) is the stub mass sum_d d m_d
        let weighted_protected =
            compensated_sum(protected.iter().enumerate().map(|(i, &y)| (i + 1) as f64 * y));
        let gamma = beta * (p_u - dp * weighted_protected / dist.stub_mass());

        let lambda = beta
            * protected
                .iter()
                .enumerate()
                .map(|(i, &y)| {
                    let d = i + 1;
                    let m = dist.mass(d);
                    let g = if m > 0.0 { y / m } else { 0.0 };
                    w[i] * (d - 1) as f64 * (p_u - g * dp)
                })
                .sum::<f64>();

        // Rounding can push gamma a hair below zero under full protection
        // with p_P = 0.
        Spread {
            gamma: gamma.max(0.0),
            lambda: lambda.max(0.0),
        }
    }

    pub fn exposure(&self, hops: u32) -> f64 {
        if (self.lambda - 1.0).abs() <= UNIT_LAMBDA_TOL {
            return hops as f64 * self.gamma;
        }
        self.terms(hops).iter().sum()
    }

    /// `gamma * lambda^(k-1)` for `k = 1..=K`.
    pub fn terms(&self, hops: u32) -> Vec<f64> {
        let mut out = Vec::with_capacity(hops as usize);
        let mut term = self.gamma;
        for _ in 0..hops {
            out.push(term);
            term *= self.lambda;
        }
        out
    }
}

/// Probability that a node sees an indirect attack from an attacked neighbor.
pub fn gamma(state: &SocialState, params: &ModelParams) -> f64 {
    Spread::new(&state.dist, &state.protected(), params).gamma
}

/// Per-hop growth factor of the expected number of indirect attacks.
pub fn lambda(state: &SocialState, params: &ModelParams) -> f64 {
    Spread::new(&state.dist, &state.protected(), params).lambda
}

/// Risk exposure `e = gamma * sum_{k=1..K} lambda^(k-1)`.
pub fn exposure(state: &SocialState, params: &ModelParams) -> f64 {
    Spread::new(&state.dist, &state.protected(), params).exposure(params.hops())
}

/// The `K` summands of the exposure; the k-th equals `Gamma_k / tau_DA`.
pub fn exposure_terms(state: &SocialState, params: &ModelParams) -> Vec<f64> {
    Spread::new(&state.dist, &state.protected(), params).terms(params.hops())
}

/// Costs of the three actions for a degree-`d` node at a given exposure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeCosts {
    pub protect: f64,
    pub no_action: f64,
    pub insure: f64,
    pub payout: f64,
}

impl DegreeCosts {
    pub fn at_exposure(params: &ModelParams, degree: usize, exposure: f64) -> Self {
        let attacks = params.tau_da() * (1.0 + degree as f64 * exposure);
        let no_action = attacks * params.loss_unprotected();
        let payout = params
            .max_payout()
            .min(params.coverage() * (no_action - params.deductible()).max(0.0));
        DegreeCosts {
            protect: attacks * params.loss_protected() + params.protection_cost(),
            no_action,
            insure: no_action + params.premium() - payout,
            payout,
        }
    }

    pub fn get(&self, action: Action) -> f64 {
        match action {
            Action::Protect => self.protect,
            Action::NoAction => self.no_action,
            Action::Insure => self.insure,
        }
    }

    pub fn min(&self) -> f64 {
        self.protect.min(self.no_action).min(self.insure)
    }

    /// Cheapest unprotected option minus the cost of protecting.
    pub fn protection_gain(&self) -> f64 {
        self.no_action.min(self.insure) - self.protect
    }
}

fn check_degree(state: &SocialState, degree: usize) -> Result<()> {
    if degree == 0 || degree > state.dist.d_max() {
        return Err(invalid(format!(
            "degree {degree} outside 1..={}",
            state.dist.d_max()
        )));
    }
    Ok(())
}

/// Costs of all three actions for degree `d`.
pub fn degree_costs(state: &SocialState, params: &ModelParams, degree: usize) -> Result<DegreeCosts> {
    check_degree(state, degree)?;
    Ok(DegreeCosts::at_exposure(params, degree, exposure(state, params)))
}

/// `C_{d,a}(x)`.
pub fn cost(state: &SocialState, params: &ModelParams, degree: usize, action: Action) -> Result<f64> {
    Ok(degree_costs(state, params, degree)?.get(action))
}

/// `Ins(x, d) = min(Cov_max, xi (C_{d,N} - ded)^+)`.
pub fn insurance_payout(state: &SocialState, params: &ModelParams, degree: usize) -> Result<f64> {
    Ok(degree_costs(state, params, degree)?.payout)
}
