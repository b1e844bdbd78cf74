//! Game parameters and degree distributions.
//!
//! A [`DegreeDistribution`] is the population size vector `m = (m_1, .., m_D)`
//! over degrees `1..=d_max`. Constructors normalize it to total mass one, in
//! which case it doubles as the degree distribution `f`. [`DegreeDistribution::scaled`]
//! produces an unnormalized population of arbitrary total size; every
//! quantity in this crate is computed through `f = m / sum(m)` so results are
//! invariant under that scaling.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tolerance on the total mass of a normalized distribution.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Raw, unvalidated parameter set. Deserializes from config files; turn it
/// into [`ModelParams`] before use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    /// Probability that a node is attacked directly.
    pub tau_da: f64,
    /// Infection probability of a protected node when attacked.
    pub p_protected: f64,
    /// Infection probability of an unprotected node when attacked.
    pub p_unprotected: f64,
    /// Expected loss per attack when protected.
    pub loss_protected: f64,
    /// Expected loss per attack when unprotected.
    pub loss_unprotected: f64,
    pub protection_cost: f64,
    pub premium: f64,
    pub deductible: f64,
    /// Fraction of the loss above the deductible covered by insurance.
    pub coverage: f64,
    pub max_payout: f64,
    /// Probability that an infected node attacks each neighbor.
    pub beta_ia: f64,
    /// Maximum hop distance of an infection in the cost model.
    pub hops: u32,
}

impl ParamSpec {
    /// Parameters of the first numerical study (`K = 1`).
    pub fn table_one() -> Self {
        ParamSpec {
            tau_da: 0.95,
            p_protected: 0.0,
            p_unprotected: 1.0,
            loss_protected: 10.0,
            loss_unprotected: 100.0,
            protection_cost: 300.0,
            premium: 40.0,
            deductible: 20.0,
            coverage: 0.8,
            max_payout: 500.0,
            beta_ia: 0.85,
            hops: 1,
        }
    }

    /// Parameters of the price-of-anarchy study (`K = 5`).
    ///
    /// Note that these values do not satisfy `L_P < (1 - xi) L_U`
    /// (5 vs 4.75), so they only build through
    /// [`ModelParams::without_assumption_check`].
    pub fn table_two() -> Self {
        ParamSpec {
            tau_da: 0.9,
            p_protected: 0.0,
            p_unprotected: 1.0,
            loss_protected: 5.0,
            loss_unprotected: 95.0,
            protection_cost: 88.0,
            premium: 80.0,
            deductible: 5.0,
            coverage: 0.95,
            max_payout: 500.0,
            beta_ia: 0.1,
            hops: 5,
        }
    }
}

impl Default for ParamSpec {
    fn default() -> Self {
        Self::table_one()
    }
}

/// Validated game parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    spec: ParamSpec,
}

impl ModelParams {
    /// Validates `spec`, including the standing assumptions
    /// `L_P < (1 - xi) L_U` and `c_P > c_I + ded`.
    pub fn new(spec: ParamSpec) -> Result<Self> {
        let params = Self::without_assumption_check(spec)?;
        if let Some(violation) = params.assumption_violation() {
            return Err(invalid(violation));
        }
        Ok(params)
    }

    /// Validates ranges and orderings but not the two standing cost
    /// assumptions. Solvers still run; the theorems they rely on may not hold.
    pub fn without_assumption_check(spec: ParamSpec) -> Result<Self> {
        let s = &spec;
        let finite = [
            s.tau_da,
            s.p_protected,
            s.p_unprotected,
            s.loss_protected,
            s.loss_unprotected,
            s.protection_cost,
            s.premium,
            s.deductible,
            s.coverage,
            s.max_payout,
            s.beta_ia,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(invalid("parameters must be finite"));
        }
        if !(0.0..=1.0).contains(&s.tau_da) {
            return Err(invalid(format!("tau_da = {} not in [0, 1]", s.tau_da)));
        }
        if !(0.0 <= s.p_protected && s.p_protected < s.p_unprotected && s.p_unprotected <= 1.0) {
            return Err(invalid(format!(
                "need 0 <= p_protected < p_unprotected <= 1, got {} and {}",
                s.p_protected, s.p_unprotected
            )));
        }
        if s.loss_protected < 0.0 || s.loss_unprotected <= s.loss_protected {
            return Err(invalid(format!(
                "need 0 <= loss_protected < loss_unprotected, got {} and {}",
                s.loss_protected, s.loss_unprotected
            )));
        }
        for (name, v) in [
            ("protection_cost", s.protection_cost),
            ("premium", s.premium),
            ("deductible", s.deductible),
            ("max_payout", s.max_payout),
        ] {
            if v < 0.0 {
                return Err(invalid(format!("{name} = {v} is negative")));
            }
        }
        if !(s.coverage > 0.0 && s.coverage <= 1.0) {
            return Err(invalid(format!("coverage = {} not in (0, 1]", s.coverage)));
        }
        if !(s.beta_ia > 0.0 && s.beta_ia <= 1.0) {
            return Err(invalid(format!("beta_ia = {} not in (0, 1]", s.beta_ia)));
        }
        if s.hops == 0 {
            return Err(invalid("hops (K) must be at least 1"));
        }
        Ok(ModelParams { spec })
    }

    /// Describes the first violated standing assumption, if any.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn assumption_violation(&self) -> Option<String> {
        let s = &self.spec;
        if !(s.loss_protected < (1.0 - s.coverage) * s.loss_unprotected) {
            return Some(format!(
                "loss_protected = {} must be below (1 - coverage) * loss_unprotected = {}",
                s.loss_protected,
                (1.0 - s.coverage) * s.loss_unprotected
            ));
        }
        if !(s.protection_cost > s.premium + s.deductible) {
            return Some(format!(
                "protection_cost = {} must exceed premium + deductible = {}",
                s.protection_cost,
                s.premium + s.deductible
            ));
        }
        None
    }

    pub fn satisfies_assumptions(&self) -> bool {
        self.assumption_violation().is_none()
    }

    pub fn spec(&self) -> &ParamSpec {
        &self.spec
    }

    /// Same parameters with a different hop limit `K`.
    pub fn with_hops(&self, hops: u32) -> Result<Self> {
        self.rebuild(ParamSpec { hops, ..self.spec })
    }

    /// Same parameters with a different indirect-attack probability.
    pub fn with_beta_ia(&self, beta_ia: f64) -> Result<Self> {
        self.rebuild(ParamSpec { beta_ia, ..self.spec })
    }

    fn rebuild(&self, spec: ParamSpec) -> Result<Self> {
        // The swept fields do not enter the standing assumptions.
        Self::without_assumption_check(spec)
    }

    pub fn tau_da(&self) -> f64 {
        self.spec.tau_da
    }
    pub fn p_protected(&self) -> f64 {
        self.spec.p_protected
    }
    pub fn p_unprotected(&self) -> f64 {
        self.spec.p_unprotected
    }
    /// `p_U - p_P`, strictly positive.
    pub fn delta_p(&self) -> f64 {
        self.spec.p_unprotected - self.spec.p_protected
    }
    pub fn loss_protected(&self) -> f64 {
        self.spec.loss_protected
    }
    pub fn loss_unprotected(&self) -> f64 {
        self.spec.loss_unprotected
    }
    /// `L_U - L_P`, strictly positive.
    pub fn delta_loss(&self) -> f64 {
        self.spec.loss_unprotected - self.spec.loss_protected
    }
    pub fn protection_cost(&self) -> f64 {
        self.spec.protection_cost
    }
    pub fn premium(&self) -> f64 {
        self.spec.premium
    }
    pub fn deductible(&self) -> f64 {
        self.spec.deductible
    }
    pub fn coverage(&self) -> f64 {
        self.spec.coverage
    }
    pub fn max_payout(&self) -> f64 {
        self.spec.max_payout
    }
    pub fn beta_ia(&self) -> f64 {
        self.spec.beta_ia
    }
    pub fn hops(&self) -> u32 {
        self.spec.hops
    }
}

impl TryFrom<ParamSpec> for ModelParams {
    type Error = crate::Error;

    fn try_from(spec: ParamSpec) -> Result<Self> {
        ModelParams::new(spec)
    }
}

/// Neumaier summation, so moments of exactly representable laws come out
/// exact.
pub(crate) fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Population sizes per degree `1..=d_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeDistribution {
    masses: Vec<f64>,
    total: f64,
}

impl DegreeDistribution {
    /// Normalizes arbitrary nonnegative masses, `masses[0]` being degree 1.
    pub fn from_masses(masses: Vec<f64>) -> Result<Self> {
        let dist = Self::population(masses)?;
        let total = dist.total;
        Ok(Self::normalized(dist.masses.into_iter().map(|m| m / total).collect()))
    }

    /// Keeps the masses as given: a population size vector whose total need
    /// not be one.
    pub fn population(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(invalid("degree distribution needs d_max >= 1"));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(invalid("masses must be finite and nonnegative"));
        }
        let total = compensated_sum(masses.iter().copied());
        if total <= 0.0 {
            return Err(invalid("at least one mass must be positive"));
        }
        Ok(DegreeDistribution { masses, total })
    }

    fn normalized(masses: Vec<f64>) -> Self {
        let total = compensated_sum(masses.iter().copied());
        DegreeDistribution { masses, total }
    }

    /// Truncated power law `m_d ∝ d^-alpha`.
    pub fn power_law(alpha: f64, d_max: usize) -> Result<Self> {
        if d_max == 0 {
            return Err(invalid("d_max must be at least 1"));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(invalid(format!("power-law exponent {alpha} must be >= 0")));
        }
        let raw = (1..=d_max).map(|d| (d as f64).powf(-alpha)).collect();
        Self::from_masses(raw)
    }

    /// Poisson law truncated to `1..=d_max`, `m_d ∝ rate^d / d!`.
    pub fn poisson(rate: f64, d_max: usize) -> Result<Self> {
        if d_max == 0 {
            return Err(invalid("d_max must be at least 1"));
        }
        if !(rate.is_finite() && rate > 0.0) {
            return Err(invalid(format!("Poisson rate {rate} must be positive")));
        }
        let mut term = 1.0;
        let raw = (1..=d_max)
            .map(|d| {
                term *= rate / d as f64;
                term
            })
            .collect();
        Self::from_masses(raw)
    }

    /// Point mass at a single degree.
    pub fn single_degree(degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(invalid("degree must be at least 1"));
        }
        let mut masses = vec![0.0; degree];
        masses[degree - 1] = 1.0;
        Self::from_masses(masses)
    }

    /// The same degree distribution with total population `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(invalid(format!("scale factor {factor} must be positive")));
        }
        Self::population(self.masses.iter().map(|m| m * factor).collect())
    }

    pub fn d_max(&self) -> usize {
        self.masses.len()
    }

    /// Degrees `1..=d_max`.
    pub fn degrees(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.d_max()
    }

    /// `m_d`; zero outside `1..=d_max`.
    pub fn mass(&self, degree: usize) -> f64 {
        if degree == 0 {
            return 0.0;
        }
        self.masses.get(degree - 1).copied().unwrap_or(0.0)
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    /// `f_d = m_d / sum(m)`.
    pub fn fraction(&self, degree: usize) -> f64 {
        self.mass(degree) / self.total
    }

    /// `sum_d d f_d`.
    pub fn average_degree(&self) -> f64 {
        self.stub_mass() / self.total
    }

    /// `sum_d d m_d`.
    pub(crate) fn stub_mass(&self) -> f64 {
        compensated_sum(self.degrees().map(|d| d as f64 * self.mass(d)))
    }

    /// `sum_d d (d - 1) f_d`.
    pub fn second_factorial_moment(&self) -> f64 {
        compensated_sum(self.degrees().map(|d| (d * (d - 1)) as f64 * self.mass(d))) / self.total
    }

    /// Degree distribution of a randomly chosen neighbor,
    /// `w_d = d m_d / sum_d' d' m_d'`.
    pub fn neighbor_weights(&self) -> Vec<f64> {
        let denom = self.stub_mass();
        self.degrees()
            .map(|d| d as f64 * self.mass(d) / denom)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_power_law() {
        let dist = DegreeDistribution::power_law(0.0, 20).unwrap();
        for d in dist.degrees() {
            assert_relative_eq!(dist.mass(d), 0.05, epsilon = 1e-15);
        }
        assert_relative_eq!(dist.average_degree(), 10.5, epsilon = 1e-12);
        let w = dist.neighbor_weights();
        for d in dist.degrees() {
            assert_relative_eq!(w[d - 1], d as f64 / 210.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn steep_power_law_average() {
        let dist = DegreeDistribution::power_law(3.0, 20).unwrap();
        assert!((dist.average_degree() - 1.33).abs() <= 0.01);
    }

    #[test]
    fn single_degree_normalization() {
        for alpha in [0.0, 1.5, 7.0] {
            let dist = DegreeDistribution::power_law(alpha, 1).unwrap();
            assert_eq!(dist.masses(), &[1.0]);
            assert_eq!(dist.neighbor_weights(), vec![1.0]);
            assert_eq!(dist.average_degree(), 1.0);
        }
        assert_eq!(DegreeDistribution::poisson(3.3, 1).unwrap().masses(), &[1.0]);
    }

    #[test]
    fn poisson_two_terms() {
        let dist = DegreeDistribution::poisson(2.0, 2).unwrap();
        assert_relative_eq!(dist.mass(1), 0.5, epsilon = 1e-15);
        assert_relative_eq!(dist.mass(2), 0.5, epsilon = 1e-15);
        let w = DegreeDistribution::from_masses(vec![0.5, 0.5])
            .unwrap()
            .neighbor_weights();
        assert_relative_eq!(w[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(w[1], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn poisson_low_rate_average() {
        // direct summation of the truncated series, independent of the
        // constructor's running product
        let rate: f64 = 1.1;
        let fact = |d: u32| (1..=d).map(f64::from).product::<f64>();
        let terms: Vec<f64> = (1..=20).map(|d| rate.powi(d as i32) / fact(d)).collect();
        let z: f64 = terms.iter().sum();
        let expected: f64 = terms.iter().enumerate().map(|(i, t)| (i + 1) as f64 * t / z).sum();
        let dist = DegreeDistribution::poisson(rate, 20).unwrap();
        assert_relative_eq!(dist.average_degree(), expected, epsilon = 1e-12);
        assert!(expected > 1.0 && expected < 2.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(DegreeDistribution::power_law(1.0, 0).is_err());
        assert!(DegreeDistribution::power_law(-0.5, 5).is_err());
        assert!(DegreeDistribution::poisson(0.0, 5).is_err());
        assert!(DegreeDistribution::poisson(-1.0, 5).is_err());
        assert!(DegreeDistribution::from_masses(vec![]).is_err());
        assert!(DegreeDistribution::from_masses(vec![0.0, 0.0]).is_err());
        assert!(DegreeDistribution::from_masses(vec![0.5, -0.1]).is_err());
    }

    #[test]
    fn average_degree_decreases_with_alpha() {
        let avgs: Vec<f64> = (0..=6)
            .map(|i| {
                DegreeDistribution::power_law(0.5 * i as f64, 20)
                    .unwrap()
                    .average_degree()
            })
            .collect();
        assert!(avgs.windows(2).all(|w| w[1] < w[0]), "{avgs:?}");
    }

    #[test]
    fn zero_masses_allowed() {
        let dist = DegreeDistribution::from_masses(vec![0.0, 0.0, 2.0]).unwrap();
        assert_eq!(dist.masses(), &[0.0, 0.0, 1.0]);
        assert_eq!(dist.neighbor_weights(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn scaling_keeps_fractions() {
        let dist = DegreeDistribution::poisson(4.0, 12).unwrap();
        let big = dist.scaled(3.0).unwrap();
        assert_relative_eq!(big.total_mass(), 3.0, epsilon = 1e-12);
        assert_relative_eq!(big.average_degree(), dist.average_degree(), epsilon = 1e-12);
        for (a, b) in big.neighbor_weights().iter().zip(dist.neighbor_weights()) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(ModelParams::new(ParamSpec::table_one()).is_ok());
        let table_two = ParamSpec::table_two();
        assert!(ModelParams::new(table_two).is_err());
        assert!(ModelParams::without_assumption_check(table_two).is_ok());

        let bad = [
            ParamSpec { p_protected: 1.0, ..ParamSpec::table_one() },
            ParamSpec { loss_unprotected: 5.0, ..ParamSpec::table_one() },
            ParamSpec { beta_ia: 0.0, ..ParamSpec::table_one() },
            ParamSpec { hops: 0, ..ParamSpec::table_one() },
            ParamSpec { coverage: 0.0, ..ParamSpec::table_one() },
            // assumption a: 10 < 0.5 * 100 holds, 60 < 0.5 * 100 does not
            ParamSpec { loss_protected: 60.0, coverage: 0.5, ..ParamSpec::table_one() },
            // assumption b
            ParamSpec { protection_cost: 60.0, ..ParamSpec::table_one() },
            ParamSpec { tau_da: f64::NAN, ..ParamSpec::table_one() },
        ];
        for spec in bad {
            assert!(ModelParams::new(spec).is_err(), "{spec:?}");
        }
    }
}
