//! Browser bindings. Each export returns a JSON document that the page in
//! `www/` plots; the `*_json` functions behind them are plain Rust so they
//! can be tested natively.

use idsgame::cascade::cascade_probability;
use idsgame::exposure::Action;
use idsgame::poa;
use idsgame::{solve_ne, solve_opt, DegreeDistribution, ModelParams, ParamSpec, Tolerances};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const MAX_HOPS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopCurve {
    pub alpha: f64,
    pub beta_ia: f64,
    pub d_avg: f64,
    pub k: Vec<u32>,
    pub d_ne: Vec<usize>,
    pub protected_mass: Vec<f64>,
    pub cascade_prob: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoaCurve {
    pub k: u32,
    pub alpha: Vec<f64>,
    pub d_avg: Vec<f64>,
    pub ratio: Vec<f64>,
    pub bound: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeProfile {
    pub degree: Vec<usize>,
    pub mass: Vec<f64>,
    /// Protected share of each degree at the equilibrium.
    pub ne_share: Vec<f64>,
    /// Insured share of each degree at the equilibrium.
    pub insured_share: Vec<f64>,
    /// Protected share of each degree at the optimum.
    pub opt_share: Vec<f64>,
    pub d_ne: usize,
    pub d_dagger: usize,
}

fn table_one(hops: u32, beta_ia: f64) -> Result<ModelParams, String> {
    ModelParams::new(ParamSpec { hops, beta_ia, ..ParamSpec::table_one() }).map_err(|e| e.to_string())
}

fn law(alpha: f64, d_max: usize) -> Result<DegreeDistribution, String> {
    DegreeDistribution::power_law(alpha, d_max).map_err(|e| e.to_string())
}

/// Equilibrium threshold, protected mass and cascade probability for
/// `K = 1..=10` under the first parameter table.
pub fn hop_curve(alpha: f64, beta_ia: f64, d_max: usize) -> Result<HopCurve, String> {
    let dist = law(alpha, d_max)?;
    let mut curve = HopCurve {
        alpha,
        beta_ia,
        d_avg: dist.average_degree(),
        k: Vec::new(),
        d_ne: Vec::new(),
        protected_mass: Vec::new(),
        cascade_prob: Vec::new(),
    };
    for k in 1..=MAX_HOPS {
        let params = table_one(k, beta_ia)?;
        let ne = solve_ne(&params, &dist, Tolerances::default()).map_err(|e| e.to_string())?;
        curve.k.push(k);
        curve.d_ne.push(ne.d_ne);
        curve.protected_mass.push(ne.protected_mass);
        curve.cascade_prob.push(cascade_probability(&ne.state, &params));
    }
    Ok(curve)
}

/// Price of anarchy and its bound against average degree under the second
/// parameter table, over exponents `3, 2.75, ..., 0`.
pub fn poa_curve(hops: u32) -> Result<PoaCurve, String> {
    let params = ModelParams::without_assumption_check(ParamSpec { hops, ..ParamSpec::table_two() })
        .map_err(|e| e.to_string())?;
    let mut curve = PoaCurve { k: hops, alpha: Vec::new(), d_avg: Vec::new(), ratio: Vec::new(), bound: Vec::new() };
    for i in (0..=12).rev() {
        let alpha = i as f64 / 4.0;
        let dist = law(alpha, 20)?;
        let report = poa::poa(&params, &dist).map_err(|e| e.to_string())?;
        curve.alpha.push(alpha);
        curve.d_avg.push(dist.average_degree());
        curve.ratio.push(report.ratio);
        curve.bound.push(report.bound);
    }
    Ok(curve)
}

/// Per-degree protection at the equilibrium and at the optimum.
pub fn degree_profile(alpha: f64, hops: u32, beta_ia: f64) -> Result<DegreeProfile, String> {
    let params = table_one(hops, beta_ia)?;
    let dist = law(alpha, 20)?;
    let ne = solve_ne(&params, &dist, Tolerances::default()).map_err(|e| e.to_string())?;
    let opt = solve_opt(&params, &dist, Tolerances::default()).map_err(|e| e.to_string())?;
    let degrees: Vec<usize> = dist.degrees().collect();
    Ok(DegreeProfile {
        mass: degrees.iter().map(|&d| dist.mass(d)).collect(),
        ne_share: degrees.iter().map(|&d| ne.state.share(d, Action::Protect)).collect(),
        insured_share: degrees.iter().map(|&d| ne.state.share(d, Action::Insure)).collect(),
        opt_share: degrees.iter().map(|&d| opt.action.protected()[d - 1] / dist.mass(d)).collect(),
        degree: degrees,
        d_ne: ne.d_ne,
        d_dagger: opt.d_dagger,
    })
}

fn to_json<T: Serialize>(value: Result<T, String>) -> Result<String, String> {
    serde_json::to_string(&value?).map_err(|e| e.to_string())
}

pub fn hop_curve_json(alpha: f64, beta_ia: f64, d_max: usize) -> Result<String, String> {
    to_json(hop_curve(alpha, beta_ia, d_max))
}

pub fn poa_curve_json(hops: u32) -> Result<String, String> {
    to_json(poa_curve(hops))
}

pub fn degree_profile_json(alpha: f64, hops: u32, beta_ia: f64) -> Result<String, String> {
    to_json(degree_profile(alpha, hops, beta_ia))
}

#[wasm_bindgen(js_name = hopCurve)]
pub fn hop_curve_js(alpha: f64, beta_ia: f64, d_max: usize) -> Result<String, JsError> {
    hop_curve_json(alpha, beta_ia, d_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = poaCurve)]
pub fn poa_curve_js(hops: u32) -> Result<String, JsError> {
    poa_curve_json(hops).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = degreeProfile)]
pub fn degree_profile_js(alpha: f64, hops: u32, beta_ia: f64) -> Result<String, JsError> {
    degree_profile_json(alpha, hops, beta_ia).map_err(|e| JsError::new(&e))
}
