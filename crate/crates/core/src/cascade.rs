//! Cascade analysis at a social state.
//!
//! An infection seeded at one node spreads without a hop limit. Along the
//! infected cluster each newly infected node passes the infection to each of
//! its other `d - 1` neighbors with probability `gamma`, so cluster growth is
//! a Galton-Watson process with offspring law `q_N`. A cascade occurs when
//! that process survives.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exposure::{Action, SocialState, Spread};
use crate::model::ModelParams;

/// Stop the fixed-point iteration once successive iterates differ by less.
pub const EXTINCTION_TOL: f64 = 1e-12;
pub const EXTINCTION_MAX_ITERS: usize = 100_000;
/// `|E[N] - 1|` within which the process is treated as critical.
pub const CRITICAL_BAND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeReport {
    pub gamma: f64,
    /// Degree law of a neighbor given that it gets infected when attacked;
    /// all zeros when `gamma = 0`.
    pub w_in: Vec<f64>,
    /// Offspring law on `0..d_max`; a point mass at 0 when `gamma = 0`.
    pub q_n: Vec<f64>,
    pub s_star: f64,
    pub mean_offspring: f64,
    pub cascade_prob: f64,
}

fn vulnerable_weights(state: &SocialState, params: &ModelParams) -> Vec<f64> {
    let w = state.dist().neighbor_weights();
    state
        .dist()
        .degrees()
        .map(|d| {
            let g_p = state.share(d, Action::Protect);
            let g_u = state.share(d, Action::NoAction) + state.share(d, Action::Insure);
            w[d - 1] * (g_p * params.p_protected() + g_u * params.p_unprotected())
        })
        .collect()
}

fn spread(state: &SocialState, params: &ModelParams) -> Spread {
    Spread::new(state.dist(), &state.protected(), params)
}

/// `w_d^in`, proportional to `w_d (g_{d,P} p_P + g_{d,U} p_U)`.
pub fn infected_neighbor_weights(state: &SocialState, params: &ModelParams) -> Result<Vec<f64>> {
    let raw = vulnerable_weights(state, params);
    let total: f64 = raw.iter().sum();
    if spread(state, params).gamma <= 0.0 || total <= 0.0 {
        return Err(Error::DegenerateState(
            "no neighbor is vulnerable (gamma = 0), infected-neighbor law is undefined".into(),
        ));
    }
    Ok(raw.into_iter().map(|v| v / total).collect())
}

fn binomial_pmf(trials: usize, k: usize, p: f64) -> f64 {
    // C(trials, k) built incrementally; trials is a node degree
    let k_small = k.min(trials - k);
    let mut coeff = 1.0;
    for i in 0..k_small {
        coeff *= (trials - i) as f64 / (i + 1) as f64;
    }
    coeff * p.powi(k as i32) * (1.0 - p).powi((trials - k) as i32)
}

fn offspring_from(w_in: &[f64], gamma: f64) -> Vec<f64> {
    let d_max = w_in.len();
    (0..d_max)
        .map(|n| {
            (n + 1..=d_max)
                .map(|d| w_in[d - 1] * binomial_pmf(d - 1, n, gamma))
                .sum()
        })
        .collect()
}

/// Offspring law `q_N(n)` for `n = 0..d_max`.
pub fn offspring_pmf(state: &SocialState, params: &ModelParams) -> Result<Vec<f64>> {
    let w_in = infected_neighbor_weights(state, params)?;
    Ok(offspring_from(&w_in, spread(state, params).gamma))
}

fn pgf(q: &[f64], s: f64) -> f64 {
    // Horner
    q.iter().rev().fold(0.0, |acc, &c| acc * s + c)
}

fn pmf_mean(q: &[f64]) -> f64 {
    q.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
}

/// Smallest nonnegative root of `Q_N(s) = s`.
///
/// Subcritical and critical laws (other than exactly one child) go extinct
/// surely and return 1 without iterating. Otherwise `s <- Q_N(s)` from 0
/// rises monotonically to the root; a few Newton steps from the last
/// iterate, which is below the root, finish off slow convergence near
/// criticality.
pub fn extinction_root(q: &[f64]) -> f64 {
    let mean = pmf_mean(q);
    let single_child = q.get(1).is_some_and(|&p| p == 1.0);
    if mean < 1.0 + CRITICAL_BAND && !single_child {
        return 1.0;
    }
    if single_child {
        // every node has exactly one child: the line never dies
        return 0.0;
    }

    let mut s = 0.0;
    let mut converged = false;
    for _ in 0..EXTINCTION_MAX_ITERS {
        let next = pgf(q, s);
        debug_assert!(next >= s - 1e-15 && next <= 1.0 + 1e-15, "iterate left [s, 1]: {s} -> {next}");
        let step = next - s;
        s = next.min(1.0);
        if step.abs() < EXTINCTION_TOL {
            converged = true;
            break;
        }
    }
    if !converged || s > 0.0 {
        let dq: Vec<f64> = q.iter().enumerate().skip(1).map(|(n, p)| n as f64 * p).collect();
        for _ in 0..50 {
            let h = pgf(q, s) - s;
            let dh = pgf(&dq, s) - 1.0;
            if dh >= 0.0 {
                break;
            }
            let next = s - h / dh;
            if !(next.is_finite() && (0.0..1.0).contains(&next)) || (next - s).abs() < 1e-16 {
                break;
            }
            s = next;
        }
    }
    s.clamp(0.0, 1.0)
}

/// `E[N] = sum_d w_d^in (d - 1) gamma`; 0 when `gamma = 0`.
pub fn mean_offspring(state: &SocialState, params: &ModelParams) -> f64 {
    let gamma = spread(state, params).gamma;
    match infected_neighbor_weights(state, params) {
        Ok(w_in) => w_in
            .iter()
            .enumerate()
            .map(|(i, w)| w * i as f64 * gamma)
            .sum(),
        Err(_) => 0.0,
    }
}

/// `1 - sum_d f_d (1 - gamma (1 - s*))^d`; 0 when `gamma = 0`.
pub fn cascade_probability(state: &SocialState, params: &ModelParams) -> f64 {
    analyze(state, params).cascade_prob
}

/// All cascade quantities at once.
pub fn analyze(state: &SocialState, params: &ModelParams) -> CascadeReport {
    let d_max = state.dist().d_max();
    let gamma = spread(state, params).gamma;
    let w_in = match infected_neighbor_weights(state, params) {
        Ok(w) => w,
        Err(_) => {
            let mut q_n = vec![0.0; d_max];
            q_n[0] = 1.0;
            return CascadeReport {
                gamma,
                w_in: vec![0.0; d_max],
                q_n,
                s_star: 1.0,
                mean_offspring: 0.0,
                cascade_prob: 0.0,
            };
        }
    };
    let q_n = offspring_from(&w_in, gamma);
    let mean_offspring: f64 = w_in.iter().enumerate().map(|(i, w)| w * i as f64 * gamma).sum();
    debug_assert!((mean_offspring - pmf_mean(&q_n)).abs() <= 1e-10 * mean_offspring.max(1.0));

    let s_star = if (mean_offspring - 1.0).abs() < CRITICAL_BAND {
        1.0
    } else {
        extinction_root(&q_n)
    };
    let cascade_prob = if s_star >= 1.0 {
        0.0
    } else {
        let dist = state.dist();
        let survive = 1.0 - gamma * (1.0 - s_star);
        let stays_finite: f64 = dist
            .degrees()
            .map(|d| dist.fraction(d) * survive.powi(d as i32))
            .sum();
        (1.0 - stays_finite).clamp(0.0, 1.0)
    };
    CascadeReport {
        gamma,
        w_in,
        q_n,
        s_star,
        mean_offspring,
        cascade_prob,
    }
}
