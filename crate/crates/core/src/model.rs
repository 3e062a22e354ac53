//! Problem data, the level-n truncation and the exponent calculus that decides
//! which regularity claims apply to a given `(N, p, gamma, m)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry;

/// Absolute tolerance used to decide `gamma == p + 1`.
pub const CASE2_TOL: f64 = 1e-12;

/// Clamp `s` to `[-n, n]`.
#[inline]
pub fn truncate(s: f64, n: u32) -> f64 {
    let n = f64::from(n);
    if s <= -n {
        -n
    } else if s >= n {
        n
    } else {
        s
    }
}

/// Shape of the diffusion coefficient `a(r)` between its bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffProfile {
    /// `a(r) = alpha`.
    Constant,
    /// `a(r) = alpha + (beta - alpha) r`.
    Linear,
    /// `a(r) = alpha + (beta - alpha) (1 + cos(pi r)) / 2`, largest at the origin.
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub profile: CoeffProfile,
    pub alpha: f64,
    pub beta: f64,
}

impl CoefficientSpec {
    pub fn constant(alpha: f64) -> Self {
        Self { profile: CoeffProfile::Constant, alpha, beta: alpha }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let span = self.beta - self.alpha;
        match self.profile {
            CoeffProfile::Constant => self.alpha,
            CoeffProfile::Linear => self.alpha + span * r,
            CoeffProfile::Cosine => {
                self.alpha + span * 0.5 * (1.0 + (std::f64::consts::PI * r).cos())
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "coefficient bounds must be finite with alpha > 0 (alpha={}, beta={})",
                self.alpha, self.beta
            )));
        }
        if self.beta < self.alpha {
            return Err(Error::InvalidSpec(format!(
                "coefficient bounds require alpha <= beta (alpha={}, beta={})",
                self.alpha, self.beta
            )));
        }
        // sampled check of alpha <= a(r) <= beta
        const SAMPLES: usize = 1000;
        for k in 0..=SAMPLES {
            let r = k as f64 / SAMPLES as f64;
            let a = self.eval(r);
            if a < self.alpha * (1.0 - 1e-14) || a > self.beta * (1.0 + 1e-14) {
                return Err(Error::InvalidSpec(format!(
                    "coefficient a({r}) = {a} leaves [{}, {}]",
                    self.alpha, self.beta
                )));
            }
        }
        Ok(())
    }
}

/// Non-negative radial source term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Constant { value: f64 },
    /// `amplitude * r^(-a_exp)`.
    RadialPower { amplitude: f64, a_exp: f64 },
    /// Source that makes `1 - r^2` the exact solution at level `n` with `a = 1`.
    Manufactured { p: f64, gamma: f64, n: u32 },
}

impl SourceSpec {
    /// Pointwise value; `RadialPower` is `+inf` at the origin when `a_exp > 0`.
    pub fn eval(&self, dim: u32, r: f64) -> f64 {
        match *self {
            SourceSpec::Constant { value } => value,
            SourceSpec::RadialPower { amplitude, a_exp } => {
                if amplitude == 0.0 {
                    0.0
                } else if a_exp == 0.0 {
                    amplitude
                } else {
                    amplitude * r.powf(-a_exp)
                }
            }
            SourceSpec::Manufactured { p, gamma, n } => {
                let u = 1.0 - r * r;
                (u + 1.0 / f64::from(n)).powf(gamma) * manufactured_operator(dim, p, r)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            SourceSpec::Constant { value } => value == 0.0,
            SourceSpec::RadialPower { amplitude, .. } => amplitude == 0.0,
            SourceSpec::Manufactured { .. } => false,
        }
    }

    /// `true` when the source is essentially bounded on the unit ball.
    pub fn is_bounded(&self) -> bool {
        match *self {
            SourceSpec::Constant { .. } | SourceSpec::Manufactured { .. } => true,
            SourceSpec::RadialPower { amplitude, a_exp } => amplitude == 0.0 || a_exp == 0.0,
        }
    }

    /// Exact `int_{B_1} f`.
    pub fn total_integral(&self, dim: u32) -> f64 {
        let sphere = geometry::sphere_area(dim);
        match *self {
            SourceSpec::Constant { value } => value * geometry::ball_volume(dim),
            SourceSpec::RadialPower { amplitude, a_exp } => {
                amplitude * sphere / (f64::from(dim) - a_exp)
            }
            SourceSpec::Manufactured { .. } => {
                sphere * geometry::gauss_legendre(0.0, 1.0, 64, |r| {
                    self.eval(dim, r) * r.powi(dim as i32 - 1)
                })
            }
        }
    }

    fn validate(&self, dim: u32, m: f64) -> Result<()> {
        match *self {
            SourceSpec::Constant { value } => {
                if !(value >= 0.0) || !value.is_finite() {
                    return Err(Error::InvalidSpec(format!(
                        "constant source must be finite and non-negative, got {value}"
                    )));
                }
            }
            SourceSpec::RadialPower { amplitude, a_exp } => {
                if !(amplitude >= 0.0) || !amplitude.is_finite() {
                    return Err(Error::InvalidSpec(format!(
                        "power source amplitude must be finite and non-negative, got {amplitude}"
                    )));
                }
                if !(a_exp >= 0.0) || !a_exp.is_finite() {
                    return Err(Error::InvalidSpec(format!(
                        "power source exponent must be finite and non-negative, got {a_exp}"
                    )));
                }
                if a_exp >= f64::from(dim) {
                    return Err(Error::NotIntegrable { a_exp, dim });
                }
                if amplitude > 0.0 && a_exp > 0.0 && !(a_exp * m < f64::from(dim)) {
                    return Err(Error::InvalidSpec(format!(
                        "r^-{a_exp} is not in L^{m} of the unit ball in dimension {dim} \
                         (needs a_exp * m < N)"
                    )));
                }
            }
            SourceSpec::Manufactured { gamma, n, .. } => {
                if n == 0 || !(gamma > 0.0) {
                    return Err(Error::InvalidSpec(
                        "manufactured source needs n >= 1 and gamma > 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// `-(1/r^{N-1}) (r^{N-1} u' / (1+u)^p)'` evaluated at `u = 1 - r^2`.
pub fn manufactured_operator(dim: u32, p: f64, r: f64) -> f64 {
    let s = 2.0 - r * r;
    2.0 * s.powf(-p) * (f64::from(dim) + 2.0 * p * r * r / s)
}

/// The continuous problem on the unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub dimension: u32,
    pub p: f64,
    pub gamma: f64,
    pub coeff: CoefficientSpec,
    pub source: SourceSpec,
    /// Claimed summability of the source; `f64::INFINITY` for bounded data.
    #[serde(with = "summability")]
    pub m: f64,
}

impl ProblemSpec {
    pub fn new(
        dimension: u32,
        p: f64,
        gamma: f64,
        coeff: CoefficientSpec,
        source: SourceSpec,
        m: f64,
    ) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidSpec(format!("p must be positive and finite, got {p}")));
        }
        Self::build(dimension, p, gamma, coeff, source, m)
    }

    /// Manufactured-solution problem with `a = 1`; `p = 0` is admitted here as the
    /// classical (non-degenerate) limit.
    pub fn manufactured(dimension: u32, p: f64, gamma: f64, n: u32) -> Result<Self> {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::InvalidSpec(format!("p must be non-negative, got {p}")));
        }
        Self::build(
            dimension,
            p,
            gamma,
            CoefficientSpec::constant(1.0),
            SourceSpec::Manufactured { p, gamma, n },
            f64::INFINITY,
        )
    }

    fn build(
        dimension: u32,
        p: f64,
        gamma: f64,
        coeff: CoefficientSpec,
        source: SourceSpec,
        m: f64,
    ) -> Result<Self> {
        if dimension < 3 {
            return Err(Error::DimensionTooSmall(dimension));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "gamma must be positive and finite, got {gamma}"
            )));
        }
        if !(m >= 1.0) {
            return Err(Error::InvalidSpec(format!("summability m must be >= 1, got {m}")));
        }
        coeff.validate()?;
        source.validate(dimension, m)?;
        Ok(Self { dimension, p, gamma, coeff, source, m })
    }

    pub fn exponents(&self) -> ExponentTable {
        ExponentTable::compute(self.dimension, self.p, self.gamma, self.m)
            .expect("dimension validated at construction")
    }

    /// `(gamma + 1 - p) / 2`, the power whose H^1 norm is controlled when `gamma > p + 1`.
    pub fn power_exponent(&self) -> f64 {
        0.5 * (self.gamma + 1.0 - self.p)
    }
}

/// `m` is serialized as a number, or the string `"inf"` for bounded data.
pub mod summability {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &f64, s: S) -> Result<S::Ok, S::Error> {
        if m.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*m)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "Infinity") => {
                Ok(f64::INFINITY)
            }
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "summability must be a number or \"inf\", got {t:?}"
            ))),
        }
    }
}

/// Derived exponents and thresholds. Fields whose defining formula has a zero or
/// negative denominator (or an infinite `m`) are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    pub two_star: f64,
    pub one_star: f64,
    pub m_double_star: Option<f64>,
    pub sigma: Option<f64>,
    pub m_hi: f64,
    pub m_lo: f64,
    pub delta: Option<f64>,
    pub theta: Option<f64>,
}

fn positive_ratio(num: f64, den: f64) -> Option<f64> {
    if den > 0.0 && num.is_finite() && den.is_finite() {
        Some(num / den)
    } else {
        None
    }
}

impl ExponentTable {
    pub fn compute(dim: u32, p: f64, gamma: f64, m: f64) -> Result<Self> {
        if dim < 3 {
            return Err(Error::DimensionTooSmall(dim));
        }
        let n = f64::from(dim);
        let two_star = 2.0 * n / (n - 2.0);
        let one_star = n / (n - 1.0);
        let m_hi = two_star / (two_star - p - 1.0 + gamma);
        let lo_den = 2.0 * one_star - p - 1.0 + gamma;
        let m_lo = if lo_den > 0.0 { (one_star / lo_den).max(1.0) } else { f64::INFINITY };

        let m_double_star = positive_ratio(n * m, n - 2.0 * m);
        let sigma = positive_ratio(n * m * (gamma + 1.0 - p), n - m * (p + 1.0 - gamma));
        let delta = positive_ratio(
            (1.0 - p) * n * (m - 1.0) + gamma * m * (n - 2.0),
            n - 2.0 * m,
        );
        // same denominator as delta up to sign; defined on the same range m < N/2
        let theta = positive_ratio(
            -((p - 1.0) * n * (m - 1.0) - gamma * m * (n - 2.0)),
            -(2.0 * m - n),
        );
        Ok(Self { two_star, one_star, m_double_star, sigma, m_hi, m_lo, delta, theta })
    }

    /// `m**(gamma+1-p)`, the Lebesgue exponent of the Case 1a summability claim.
    pub fn lebesgue_claim_exponent(&self, p: f64, gamma: f64) -> Option<f64> {
        self.m_double_star.map(|mss| mss * (gamma + 1.0 - p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseId {
    Case1a,
    Case1b,
    Case2,
    Case3,
    OutOfTheorem,
}

impl std::fmt::Display for CaseId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CaseId::Case1a => "Case1a",
            CaseId::Case1b => "Case1b",
            CaseId::Case2 => "Case2",
            CaseId::Case3 => "Case3",
            CaseId::OutOfTheorem => "OutOfTheorem",
        };
        f.write_str(s)
    }
}

/// A regularity statement about the limit solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "claim", content = "exponent")]
pub enum Claim {
    GlobalH1,
    /// `u in L^{m**(gamma+1-p)}`.
    LmDoubleStarPower(f64),
    /// `u in W^{1,sigma}_0`.
    W1Sigma(f64),
    /// `u in H^1_loc` and `u^e in H^1_0` with `e = (gamma+1-p)/2`.
    LocalH1PlusPowerH1(f64),
    LInfinity,
}

impl Claim {
    pub fn label(&self) -> &'static str {
        match self {
            Claim::GlobalH1 => "GlobalH1",
            Claim::LmDoubleStarPower(_) => "LmDoubleStarPower",
            Claim::W1Sigma(_) => "W1Sigma",
            Claim::LocalH1PlusPowerH1(_) => "LocalH1PlusPowerH1",
            Claim::LInfinity => "LInfinity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimePrediction {
    pub case_id: CaseId,
    pub bounded: bool,
    pub claims: Vec<Claim>,
}

impl RegimePrediction {
    pub fn has(&self, label: &str) -> bool {
        self.claims.iter().any(|c| c.label() == label)
    }
}

pub fn classify_regime(spec: &ProblemSpec) -> RegimePrediction {
    let (p, gamma, m) = (spec.p, spec.gamma, spec.m);
    let half_n = 0.5 * f64::from(spec.dimension);
    let bounded = m > half_n;
    let table = spec.exponents();

    let out = RegimePrediction { case_id: CaseId::OutOfTheorem, bounded, claims: Vec::new() };
    let gap = gamma - (p + 1.0);

    let (case_id, mut claims) = if gamma < p - 1.0 {
        return out;
    } else if gap.abs() <= CASE2_TOL {
        (CaseId::Case2, vec![Claim::GlobalH1])
    } else if gap > 0.0 {
        (CaseId::Case3, vec![Claim::LocalH1PlusPowerH1(spec.power_exponent())])
    } else if m >= table.m_hi {
        let mut claims = vec![Claim::GlobalH1];
        if m < half_n {
            if let Some(s) = table.lebesgue_claim_exponent(p, gamma) {
                claims.push(Claim::LmDoubleStarPower(s));
            }
        }
        (CaseId::Case1a, claims)
    } else if m > table.m_lo {
        match table.sigma {
            Some(sigma) => (CaseId::Case1b, vec![Claim::W1Sigma(sigma)]),
            None => return out,
        }
    } else {
        return out;
    };
    if bounded {
        claims.push(Claim::LInfinity);
    }
    RegimePrediction { case_id, bounded, claims }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(dim: u32, p: f64, gamma: f64, m: f64) -> ProblemSpec {
        ProblemSpec::new(
            dim,
            p,
            gamma,
            CoefficientSpec::constant(1.0),
            SourceSpec::Constant { value: 1.0 },
            m,
        )
        .unwrap()
    }

    #[test]
    fn truncate_examples() {
        assert_eq!(truncate(5.0, 2), 2.0);
        assert_eq!(truncate(-5.0, 2), -2.0);
        assert_eq!(truncate(1.5, 2), 1.5);
        assert_eq!(truncate(2.0, 2), 2.0);
    }

    #[test]
    fn exponent_table_examples() {
        let t = ExponentTable::compute(3, 1.0, 1.0, 1.1).unwrap();
        assert_eq!(t.two_star, 6.0);
        assert_relative_eq!(t.m_hi, 1.2, max_relative = 1e-15);
        assert_eq!(t.m_lo, 1.0);
        assert_relative_eq!(t.sigma.unwrap(), 3.3 / 1.9, max_relative = 1e-14);
        assert_relative_eq!(t.sigma.unwrap(), 1.736842, max_relative = 1e-6);

        let t = ExponentTable::compute(3, 1.0, 1.0, 1.3).unwrap();
        assert_relative_eq!(t.m_double_star.unwrap(), 9.75, max_relative = 1e-13);
        assert_relative_eq!(t.lebesgue_claim_exponent(1.0, 1.0).unwrap(), 9.75, max_relative = 1e-13);

        for (p, g, m) in [(0.3, 0.7, 1.0), (2.0, 1.5, 1.4), (1.0, 2.5, 7.0)] {
            let t = ExponentTable::compute(3, p, g, m).unwrap();
            assert_eq!(t.one_star, 1.5);
            assert_eq!(t.two_star, 6.0);
        }
    }

    #[test]
    fn exponent_table_rejects_low_dimension() {
        assert!(matches!(
            ExponentTable::compute(2, 1.0, 1.0, 1.0),
            Err(Error::DimensionTooSmall(2))
        ));
    }

    #[test]
    fn undefined_fields_at_or_above_half_dimension() {
        let t = ExponentTable::compute(3, 1.0, 1.0, 1.5).unwrap();
        assert!(t.m_double_star.is_none());
        assert!(t.delta.is_none());
        assert!(t.theta.is_none());
        let t = ExponentTable::compute(3, 1.0, 1.0, f64::INFINITY).unwrap();
        assert!(t.m_double_star.is_none() && t.sigma.is_none() && t.theta.is_none());
    }

    #[test]
    fn classify_examples() {
        let r = classify_regime(&spec(3, 1.0, 2.0, 1.0));
        assert_eq!(r.case_id, CaseId::Case2);
        assert_eq!(r.claims, vec![Claim::GlobalH1]);
        assert!(!r.bounded);

        let r = classify_regime(&spec(3, 1.0, 3.0, 1.0));
        assert_eq!(r.case_id, CaseId::Case3);
        assert_eq!(r.claims, vec![Claim::LocalH1PlusPowerH1(1.5)]);

        let r = classify_regime(&spec(3, 0.5, 0.5, 2.0));
        assert_eq!(r.case_id, CaseId::Case1a);
        assert_eq!(r.claims, vec![Claim::GlobalH1, Claim::LInfinity]);
        assert!(r.bounded);
    }

    #[test]
    fn classify_boundaries() {
        // gamma < p - 1
        let r = classify_regime(&spec(3, 3.0, 1.0, 1.0));
        assert_eq!(r.case_id, CaseId::OutOfTheorem);
        assert!(r.claims.is_empty());
        // m exactly at m_hi belongs to Case1a and carries the L^{m**} claim
        let m_hi = ExponentTable::compute(3, 1.0, 0.5, 1.0).unwrap().m_hi;
        let r = classify_regime(&spec(3, 1.0, 0.5, m_hi));
        assert_eq!(r.case_id, CaseId::Case1a);
        assert!(r.has("LmDoubleStarPower"));
        // m = N/2: no L^{m**} claim, not bounded
        let r = classify_regime(&spec(3, 1.0, 0.5, 1.5));
        assert_eq!(r.claims, vec![Claim::GlobalH1]);
        assert!(!r.bounded);
        // just below m_hi
        let r = classify_regime(&spec(3, 1.0, 0.5, 1.2));
        assert_eq!(r.case_id, CaseId::Case1b);
        // m <= m_lo in case 1 is outside the theorem
        let r = classify_regime(&spec(4, 1.0, 0.5, 1.1));
        assert_eq!(r.case_id, CaseId::OutOfTheorem);
        // near-equality snaps to Case2
        let r = classify_regime(&spec(3, 1.0, 2.0 + 1e-13, 1.0));
        assert_eq!(r.case_id, CaseId::Case2);
    }

    #[test]
    fn spec_validation() {
        let c = CoefficientSpec::constant(1.0);
        assert!(matches!(
            ProblemSpec::new(3, 1.0, 1.0, c, SourceSpec::RadialPower { amplitude: 1.0, a_exp: 3.0 }, 1.0),
            Err(Error::NotIntegrable { .. })
        ));
        // r^-2 is in L^1 but not L^1.5 in N = 3
        assert!(ProblemSpec::new(3, 1.0, 1.0, c, SourceSpec::RadialPower { amplitude: 1.0, a_exp: 2.0 }, 1.5).is_err());
        assert!(ProblemSpec::new(3, 1.0, 1.0, c, SourceSpec::RadialPower { amplitude: 1.0, a_exp: 2.0 }, 1.4).is_ok());
        assert!(ProblemSpec::new(3, 1.0, 1.0, c, SourceSpec::Constant { value: -1.0 }, 1.0).is_err());
        assert!(ProblemSpec::new(3, 1.0, 1.0, c, SourceSpec::RadialPower { amplitude: -1.0, a_exp: 1.0 }, 1.0).is_err());
        assert!(ProblemSpec::new(3, 0.0, 1.0, c, SourceSpec::Constant { value: 1.0 }, 1.0).is_err());
        assert!(ProblemSpec::new(2, 1.0, 1.0, c, SourceSpec::Constant { value: 1.0 }, 1.0).is_err());
        let bad = CoefficientSpec { profile: CoeffProfile::Linear, alpha: 2.0, beta: 1.0 };
        assert!(ProblemSpec::new(3, 1.0, 1.0, bad, SourceSpec::Constant { value: 1.0 }, 1.0).is_err());
        let ok = CoefficientSpec { profile: CoeffProfile::Cosine, alpha: 1.0, beta: 2.0 };
        assert!(ProblemSpec::new(3, 1.0, 1.0, ok, SourceSpec::Constant { value: 1.0 }, 1.0).is_ok());
        assert!(ProblemSpec::manufactured(3, 0.0, 1.0, 1000).is_ok());
    }

    #[test]
    fn manufactured_operator_values() {
        assert_relative_eq!(manufactured_operator(3, 1.0, 0.0), 3.0, max_relative = 1e-15);
        assert_relative_eq!(manufactured_operator(3, 1.0, 1.0), 10.0, max_relative = 1e-15);
        for r in [0.0, 0.3, 0.9] {
            assert_relative_eq!(manufactured_operator(5, 0.0, r), 10.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn summability_serde() {
        let s = spec(3, 0.5, 0.5, f64::INFINITY);
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"m\":\"inf\""));
        let back: ProblemSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let finite = spec(3, 1.0, 2.0, 1.25);
        let back: ProblemSpec = serde_json::from_str(&serde_json::to_string(&finite).unwrap()).unwrap();
        assert_eq!(back.m, 1.25);
    }
}
