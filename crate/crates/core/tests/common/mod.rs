//! Shared instance generators and independent reference computations.
//!
//! The reference functions work on raw mass vectors and a `ParamSpec`, with
//! direct sums and no shared code paths with the library.

#![allow(dead_code)]

use idsgame::{DegreeDistribution, ModelParams, ParamSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SUITE_SIZE: usize = 200;
pub const SUITE_SEED: u64 = 20_240_611;

#[derive(Debug, Clone)]
pub struct Instance {
    pub label: String,
    pub spec: ParamSpec,
    pub params: ModelParams,
    pub dist: DegreeDistribution,
}

/// Random parameters satisfying the standing assumptions, alternating
/// power-law and Poisson degree laws.
pub fn random_instance(rng: &mut impl Rng, index: usize) -> Instance {
    let loss_unprotected = rng.random_range(50.0..200.0);
    let coverage = rng.random_range(0.3..0.95);
    let loss_protected = rng.random_range(0.0..0.95) * (1.0 - coverage) * loss_unprotected;
    let p_unprotected = rng.random_range(0.5..=1.0);
    let p_protected = rng.random_range(0.0..0.5) * p_unprotected;
    let premium = rng.random_range(0.0..60.0);
    let deductible = rng.random_range(0.0..30.0);
    let spec = ParamSpec {
        tau_da: rng.random_range(0.5..=1.0),
        p_protected,
        p_unprotected,
        loss_protected,
        loss_unprotected,
        protection_cost: premium + deductible + rng.random_range(1.0..600.0),
        premium,
        deductible,
        coverage,
        max_payout: rng.random_range(50.0..1000.0),
        beta_ia: rng.random_range(0.05..=1.0),
        hops: rng.random_range(1..=10),
    };
    let params = ModelParams::new(spec).expect("generated parameters satisfy the assumptions");
    let d_max = rng.random_range(5..=20);
    let (dist, family) = if index.is_multiple_of(2) {
        let alpha = rng.random_range(0.0..=3.0);
        (DegreeDistribution::power_law(alpha, d_max).unwrap(), format!("power_law({alpha:.3}, {d_max})"))
    } else {
        let rate = rng.random_range(1.1..=10.6);
        (DegreeDistribution::poisson(rate, d_max).unwrap(), format!("poisson({rate:.3}, {d_max})"))
    };
    Instance {
        label: format!("#{index} {family} K={} beta={:.3}", spec.hops, spec.beta_ia),
        spec,
        params,
        dist,
    }
}

pub fn suite() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    (0..SUITE_SIZE).map(|i| random_instance(&mut rng, i)).collect()
}

pub fn table_one(alpha: f64, hops: u32) -> (ModelParams, DegreeDistribution) {
    let params = ModelParams::new(ParamSpec { hops, ..ParamSpec::table_one() }).unwrap();
    (params, DegreeDistribution::power_law(alpha, 20).unwrap())
}

/// `(gamma, lambda, e)` from raw masses `m` and protected masses `y`.
pub fn ref_exposure(m: &[f64], y: &[f64], s: &ParamSpec) -> (f64, f64, f64) {
    let total: f64 = m.iter().sum();
    let mut first = 0.0;
    for (i, &md) in m.iter().enumerate() {
        first += (i + 1) as f64 * md;
    }
    let d_avg = first / total;
    let dp = s.p_unprotected - s.p_protected;
    let mut protected_stubs = 0.0;
    let mut lambda_sum = 0.0;
    for i in 0..m.len() {
        let d = (i + 1) as f64;
        protected_stubs += d * y[i];
        let w = d * m[i] / first;
        let g = if m[i] > 0.0 { y[i] / m[i] } else { 0.0 };
        lambda_sum += w * (d - 1.0) * (s.p_unprotected - g * dp);
    }
    let gamma = (s.beta_ia * (s.p_unprotected - dp * protected_stubs / (d_avg * total))).max(0.0);
    let lambda = (s.beta_ia * lambda_sum).max(0.0);
    let e = (1..=s.hops).map(|k| gamma * lambda.powi(k as i32 - 1)).sum();
    (gamma, lambda, e)
}

/// `(C_P, C_N, C_I)` of degree `d` at exposure `e`.
pub fn ref_costs(s: &ParamSpec, d: usize, e: f64) -> (f64, f64, f64) {
    let load = s.tau_da * (1.0 + d as f64 * e);
    let c_p = load * s.loss_protected + s.protection_cost;
    let c_n = load * s.loss_unprotected;
    let payout = (s.coverage * (c_n - s.deductible).max(0.0)).min(s.max_payout);
    (c_p, c_n, c_n + s.premium - payout)
}

/// Largest cost excess over the per-degree minimum among actions with mass,
/// unprotected mass taking the cheaper of `N` and `I`.
pub fn ref_violation(m: &[f64], y: &[f64], s: &ParamSpec) -> f64 {
    let (_, _, e) = ref_exposure(m, y, s);
    let mut worst: f64 = 0.0;
    for i in 0..m.len() {
        let (c_p, c_n, c_i) = ref_costs(s, i + 1, e);
        let c_u = c_n.min(c_i);
        let best = c_p.min(c_u);
        if y[i] > 0.0 {
            worst = worst.max(c_p - best);
        }
        if m[i] - y[i] > 0.0 {
            worst = worst.max(c_u - best);
        }
    }
    worst
}

/// Threshold-family profile: degrees above `d_star` protect fully, `d_star`
/// protects `t`.
pub fn threshold_profile(m: &[f64], d_star: usize, t: f64) -> Vec<f64> {
    (1..=m.len())
        .map(|d| {
            if d > d_star {
                m[d - 1]
            } else if d == d_star {
                t
            } else {
                0.0
            }
        })
        .collect()
}

/// Grid search over the threshold family with `points` values of `t` per
/// threshold degree; returns the profile with the smallest violation.
pub fn brute_force_ne(m: &[f64], s: &ParamSpec, points: usize) -> (Vec<f64>, f64) {
    let mut best = (vec![0.0; m.len()], ref_violation(m, &vec![0.0; m.len()], s));
    for d_star in 1..=m.len() {
        for j in 0..points {
            let t = m[d_star - 1] * j as f64 / (points - 1) as f64;
            let y = threshold_profile(m, d_star, t);
            let v = ref_violation(m, &y, s);
            if v < best.1 {
                best = (y, v);
            }
        }
    }
    best
}

/// Planner cost `sum y C_P + (m - y) C_N`.
pub fn ref_social_cost(m: &[f64], y: &[f64], s: &ParamSpec) -> f64 {
    let (_, _, e) = ref_exposure(m, y, s);
    (0..m.len())
        .map(|i| {
            let (c_p, c_n, _) = ref_costs(s, i + 1, e);
            y[i] * c_p + (m[i] - y[i]) * c_n
        })
        .sum()
}

/// Number of degrees whose protected share is strictly between 0 and 1.
pub fn mixed_degrees(m: &[f64], y: &[f64], tol: f64) -> usize {
    m.iter().zip(y).filter(|&(&md, &yd)| yd > tol && md - yd > tol).count()
}

/// Threshold form: protected shares are nondecreasing in degree and at
/// most one degree is mixed.
pub fn is_threshold_form(m: &[f64], y: &[f64], tol: f64) -> bool {
    if mixed_degrees(m, y, tol) > 1 {
        return false;
    }
    let mut seen_protection = false;
    for (&md, &yd) in m.iter().zip(y) {
        if md <= 0.0 {
            continue;
        }
        if seen_protection && md - yd > tol {
            return false;
        }
        if yd > tol {
            seen_protection = true;
        }
    }
    true
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
