//! Scalar exponents and normalizations.
//!
//! Every other module takes its exponents from an [`ExponentSet`] so the
//! algebraic relations between `q`, its Hölder conjugate `p`, the asymptotic
//! exponent `ϑ` and the rigidity parameters `θ`, `β` live in one place.
//!
//! The nonlinearity exponent entering `θ`, the corrected Hessian and the flow
//! exponent `β` is `q` itself, the exponent of the elliptic equation
//! `-Δv + λ/(q-2) (v - v^{q-1}) = 0`; the Hölder conjugate `p = q/(q-2)` only
//! appears in the spectral estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SmlError};

/// Which side of the quadratic exponent `q` sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `q ∈ (2, 2^*)`: interpolation constant `μ(α)`, bound on `|λ₁(-Δ-V)|`.
    SubcriticalAbove2,
    /// `q ∈ (1, 2)`: constant `ν(β)`, lower bound on `λ₁(-Δ+W)`.
    Below2,
}

/// Exponent of the nonlinear flow; undefined when its denominator is not positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", content = "value", rename_all = "snake_case")]
pub enum FlowBeta {
    Available(f64),
    Unavailable,
}

impl FlowBeta {
    pub fn value(self) -> Option<f64> {
        match self {
            FlowBeta::Available(b) => Some(b),
            FlowBeta::Unavailable => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub d: usize,
    pub q: f64,
    pub regime: Regime,
    /// `2d/(d-2)` for `d ≥ 3`, `+∞` otherwise (`null` in JSON).
    #[serde(with = "infinite_as_null")]
    pub two_star: f64,
    /// Hölder conjugate of `q/2`: `q/(q-2)` above 2, `q/(2-q)` below 2.
    pub p_holder: f64,
    pub vartheta: f64,
    pub theta_rigidity: f64,
    pub flow_beta: FlowBeta,
    /// `p - d/2` above 2 and `-(p + d/2)` below 2.
    pub gamma: f64,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Critical Sobolev exponent.
pub fn critical_exponent(d: usize) -> f64 {
    if d >= 3 {
        2.0 * d as f64 / (d as f64 - 2.0)
    } else {
        f64::INFINITY
    }
}

/// `θ = (d-1)²(q-1) / (d(d+2) + q - 1)`.
pub fn theta_rigidity(d: usize, q: f64) -> f64 {
    let d = d as f64;
    (d - 1.0).powi(2) * (q - 1.0) / (d * (d + 2.0) + q - 1.0)
}

/// `β = (d+2)(d+3-q)θ / ((d-1)²(q-1)² - (d+2)²(q-2)θ)`.
///
/// In dimension one `θ = 0` and the numerator vanishes identically; the flow
/// is degenerate there and `β = 0` is returned.
pub fn flow_beta(d: usize, q: f64) -> FlowBeta {
    if d == 1 {
        return FlowBeta::Available(0.0);
    }
    let theta = theta_rigidity(d, q);
    let df = d as f64;
    let num = (df + 2.0) * (df + 3.0 - q) * theta;
    let den = (df - 1.0).powi(2) * (q - 1.0).powi(2) - (df + 2.0).powi(2) * (q - 2.0) * theta;
    if den > 0.0 && num.is_finite() {
        FlowBeta::Available(num / den)
    } else {
        FlowBeta::Unavailable
    }
}

/// Build and validate all exponents for dimension `d` and exponent `q`.
pub fn build_exponents(d: usize, q: f64) -> Result<ExponentSet> {
    if d == 0 {
        return Err(SmlError::InvalidParameter("dimension must be at least 1".into()));
    }
    if !q.is_finite() || q <= 1.0 {
        return Err(SmlError::InvalidParameter(format!("q = {q} must satisfy q > 1")));
    }
    if q == 2.0 {
        return Err(SmlError::QuadraticExponent);
    }
    let two_star = critical_exponent(d);
    if q >= two_star {
        return Err(SmlError::Supercritical { d, q, critical: two_star });
    }
    let df = d as f64;
    let (regime, p_holder, gamma) = if q > 2.0 {
        let p = q / (q - 2.0);
        (Regime::SubcriticalAbove2, p, p - df / 2.0)
    } else {
        let p = q / (2.0 - q);
        (Regime::Below2, p, -(p + df / 2.0))
    };
    Ok(ExponentSet {
        d,
        q,
        regime,
        two_star,
        p_holder,
        vartheta: df * (q - 2.0) / (2.0 * q),
        theta_rigidity: theta_rigidity(d, q),
        flow_beta: flow_beta(d, q),
        gamma,
    })
}

impl ExponentSet {
    /// `1 - 2/q`, the power of the volume in `κ`.
    pub fn kappa_power(&self) -> f64 {
        1.0 - 2.0 / self.q
    }

    pub fn kappa(&self, volume: f64) -> f64 {
        volume.powf(self.kappa_power())
    }

    pub fn require_above_2(&self) -> Result<()> {
        match self.regime {
            Regime::SubcriticalAbove2 => Ok(()),
            Regime::Below2 => Err(SmlError::WrongRegime("requires q > 2")),
        }
    }

    pub fn require_below_2(&self) -> Result<()> {
        match self.regime {
            Regime::Below2 => Ok(()),
            Regime::SubcriticalAbove2 => Err(SmlError::WrongRegime("requires 1 < q < 2")),
        }
    }

    /// Coefficient `(d-1)(q-1) / (θ(d+3-q))` of the gradient correction in the
    /// corrected Hessian. Zero in dimension one, where the term is absent.
    pub fn q_tensor_coefficient(&self) -> f64 {
        if self.d == 1 || self.theta_rigidity == 0.0 {
            return 0.0;
        }
        let df = self.d as f64;
        (df - 1.0) * (self.q - 1.0) / (self.theta_rigidity * (df + 3.0 - self.q))
    }

    /// Threshold `μ` below which `α(μ) = μ/κ`, given the rigidity constant `Λ`.
    pub fn linear_mu_threshold(&self, kappa: f64, lambda: f64) -> f64 {
        kappa * lambda / (self.q - 2.0)
    }

    /// Threshold `β` below which `ν(β) = β/κ` (for `p > 1`).
    pub fn linear_nu_threshold(&self, kappa: f64, lambda: f64) -> f64 {
        (self.p_holder + 1.0) / 2.0 * kappa * lambda
    }
}

/// Volume normalization of a manifold for a given exponent set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationSet {
    pub kappa: f64,
    pub volume: f64,
    pub lambda_one: f64,
}

impl NormalizationSet {
    pub fn new(e: &ExponentSet, volume: f64, lambda_one: f64) -> Result<Self> {
        if !(volume > 0.0) || !(lambda_one > 0.0) {
            return Err(SmlError::InvalidParameter(format!(
                "volume {volume} and lambda_one {lambda_one} must be positive"
            )));
        }
        Ok(NormalizationSet { kappa: e.kappa(volume), volume, lambda_one })
    }
}

/// One-bound-state constant `L¹_{γ,d} = K_{q,d}^{-(γ + d/2)}`; in the `q > 2`
/// regime `γ + d/2 = p`.
pub fn asymptotic_constant(e: &ExponentSet, kqd: f64) -> Result<f64> {
    e.require_above_2()?;
    if !(kqd > 0.0) {
        return Err(SmlError::InvalidParameter(format!("K_(q,d) = {kqd} must be positive")));
    }
    Ok(kqd.powf(-(e.gamma + e.d as f64 / 2.0)))
}

/// Area of the unit sphere `S^k ⊂ ℝ^{k+1}`.
pub fn unit_sphere_area(k: usize) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * unit_sphere_area(k - 2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn d2_q4() {
        let e = build_exponents(2, 4.0).unwrap();
        assert_eq!(e.p_holder, 2.0);
        assert_eq!(e.vartheta, 0.5);
        assert!(e.two_star.is_infinite());
        assert_eq!(e.regime, Regime::SubcriticalAbove2);
    }

    #[test]
    fn d3_q3() {
        let e = build_exponents(3, 3.0).unwrap();
        assert_eq!(e.two_star, 6.0);
        assert_eq!(e.p_holder, 3.0);
        assert_eq!(e.vartheta, 0.5);
    }

    #[test]
    fn d1_q4_degenerate() {
        let e = build_exponents(1, 4.0).unwrap();
        assert_eq!(e.theta_rigidity, 0.0);
        assert_eq!(e.flow_beta, FlowBeta::Available(0.0));
        assert_eq!(e.vartheta, 0.25);
    }

    #[test]
    fn sphere_flow_exponents() {
        // q = 3: θ = 1/5, β = 2; q = 4: θ = 3/11, β = 4.
        let e = build_exponents(2, 3.0).unwrap();
        assert!((e.theta_rigidity - 0.2).abs() < 1e-15);
        assert!((e.flow_beta.value().unwrap() - 2.0).abs() < 1e-12);
        let e = build_exponents(2, 4.0).unwrap();
        assert!((e.theta_rigidity - 3.0 / 11.0).abs() < 1e-15);
        assert!((e.flow_beta.value().unwrap() - 4.0).abs() < 1e-12);
        // denominator vanishes at d = 2, q = 5
        assert_eq!(build_exponents(2, 5.0).unwrap().flow_beta, FlowBeta::Unavailable);
    }

    #[test]
    fn rejects_bad_exponents() {
        assert_eq!(build_exponents(2, 2.0), Err(SmlError::QuadraticExponent));
        assert!(matches!(build_exponents(3, 8.0), Err(SmlError::Supercritical { .. })));
        assert!(matches!(build_exponents(3, 6.0), Err(SmlError::Supercritical { .. })));
        assert!(build_exponents(0, 3.0).is_err());
        assert!(build_exponents(2, 1.0).is_err());
        assert!(build_exponents(2, f64::NAN).is_err());
    }

    #[test]
    fn below_two() {
        let e = build_exponents(2, 1.5).unwrap();
        assert_eq!(e.regime, Regime::Below2);
        assert_eq!(e.p_holder, 3.0);
        assert_eq!(e.gamma, -4.0);
        // κ < 1 for volume > 1 when q < 2
        assert!(e.kappa(4.0 * std::f64::consts::PI) < 1.0);
        assert!(asymptotic_constant(&e, 1.0).is_err());
    }

    #[test]
    fn asymptotic_constant_examples() {
        let e = build_exponents(2, 4.0).unwrap();
        assert_eq!(asymptotic_constant(&e, 1.0).unwrap(), 1.0);
        let e = build_exponents(1, 4.0).unwrap();
        let k = 4.0 / 3f64.sqrt();
        assert!((asymptotic_constant(&e, k).unwrap() - 3.0 / 16.0).abs() < 1e-15);
        let e = build_exponents(3, 3.0).unwrap();
        assert!((asymptotic_constant(&e, 2.0).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert!((unit_sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((unit_sphere_area(4) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn normalization_kappa_exact() {
        let e = build_exponents(2, 3.0).unwrap();
        let n = NormalizationSet::new(&e, 7.0, 2.0).unwrap();
        assert_eq!(n.kappa, 7f64.powf(1.0 - 2.0 / 3.0));
        assert!(NormalizationSet::new(&e, 0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn holder_conjugacy(q in 2.0001f64..50.0) {
            let e = build_exponents(1, q).unwrap();
            prop_assert!((1.0 / e.p_holder + 2.0 / q - 1.0).abs() < 1e-14);
            prop_assert!((e.gamma + 0.5 - e.p_holder).abs() < 1e-12);
            prop_assert!(e.vartheta > 0.0 && e.vartheta < 1.0);
        }

        #[test]
        fn vartheta_increasing(d in 1usize..8, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let top = critical_exponent(d).min(40.0);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-6);
            let q1 = 2.0 + 1e-3 + lo * (top - 2.0 - 2e-3);
            let q2 = 2.0 + 1e-3 + hi * (top - 2.0 - 2e-3);
            let e1 = build_exponents(d, q1).unwrap();
            let e2 = build_exponents(d, q2).unwrap();
            prop_assert!(e1.vartheta < e2.vartheta);
            prop_assert!(e2.vartheta < 1.0);
        }

        #[test]
        fn theta_range(d in 1usize..10, t in 0.001f64..0.999) {
            let top = critical_exponent(d).min(40.0);
            let q = 2.0 + t * (top - 2.0);
            let e = build_exponents(d, q).unwrap();
            prop_assert!(e.theta_rigidity >= 0.0 && e.theta_rigidity < 1.0);
            prop_assert_eq!(e.theta_rigidity == 0.0, d == 1);
        }
    }

    #[test]
    fn vartheta_tends_to_one_at_critical() {
        for d in 3..8 {
            let e = build_exponents(d, critical_exponent(d) - 1e-9).unwrap();
            assert!((e.vartheta - 1.0).abs() < 1e-8);
        }
    }
}
