//! Eigenvalue spectra of the diagonal operator `A e_n = λ_n e_n`.
//!
//! A spectrum is one of a small set of families whose tails have closed-form
//! upper bounds, so every series `Σ λ_n^{2q}` can be evaluated as a partial
//! sum plus a certified remainder.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// Exponents beyond this magnitude are evaluated in the log domain.
pub(crate) const LOG_DOMAIN_THRESHOLD: f64 = 300.0;

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum SpectrumError {
    #[error("eigenvalue at index {0} is not positive")]
    NonPositiveEigenvalue(usize),
    #[error("eigenvalue at index {0} exceeds one")]
    EigenvalueExceedsOne(usize),
    #[error("declared family has a divergent square-sum tail")]
    DivergentTail,
    #[error("explicit spectrum has no declared tail family")]
    UnsupportedFamily,
    #[error("inclusion indices must satisfy m > n (got m = {m}, n = {n})")]
    InvalidIndices { m: i64, n: i64 },
    #[error("invalid truncation policy: {0}")]
    InvalidPolicy(String),
    #[error("malformed spectrum: {0}")]
    Malformed(String),
}

/// Closed-form infinite family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `λ_n = c·rⁿ`
    Geometric { c: f64, r: f64 },
    /// `λ_n = c·(n+1)^{−s}`
    Power { c: f64, s: f64 },
}

/// How an explicit list continues past its last entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailFamily {
    /// The space is finite dimensional: `λ_n = 0` beyond the list.
    Finite,
    /// The family formula (at absolute index `n`) takes over.
    Continue(Family),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Spectrum {
    Family(Family),
    Explicit {
        values: Vec<f64>,
        tail: Option<TailFamily>,
    },
}

impl Family {
    fn eigenvalue(&self, n: usize) -> f64 {
        match *self {
            Family::Geometric { c, r } => match i32::try_from(n) {
                Ok(k) => {
                    let v = c * r.powi(k);
                    if v.is_normal() {
                        v
                    } else {
                        self.ln_eigenvalue(n).exp()
                    }
                }
                Err(_) => self.ln_eigenvalue(n).exp(),
            },
            Family::Power { c, s } => c * ((n + 1) as f64).powf(-s),
        }
    }

    fn ln_eigenvalue(&self, n: usize) -> f64 {
        match *self {
            Family::Geometric { c, r } => c.ln() + n as f64 * r.ln(),
            Family::Power { c, s } => c.ln() - s * ((n + 1) as f64).ln(),
        }
    }

    fn check(&self, offset: usize) -> Result<(), SpectrumError> {
        match *self {
            Family::Geometric { c, r } => {
                if c <= 0.0 {
                    return Err(SpectrumError::NonPositiveEigenvalue(offset));
                }
                if r <= 0.0 {
                    return Err(SpectrumError::NonPositiveEigenvalue(offset + 1));
                }
                if r >= 1.0 {
                    return Err(SpectrumError::DivergentTail);
                }
            }
            Family::Power { c, s } => {
                if c <= 0.0 {
                    return Err(SpectrumError::NonPositiveEigenvalue(offset));
                }
                if s <= 0.5 {
                    return Err(SpectrumError::DivergentTail);
                }
            }
        }
        // Both families are decreasing once the tail checks pass.
        if self.eigenvalue(offset) > 1.0 {
            return Err(SpectrumError::EigenvalueExceedsOne(offset));
        }
        Ok(())
    }

    /// Upper bound on `Σ_{n≥start} λ_n^{2q}`.
    fn tail(&self, start: usize, q: u32) -> f64 {
        let two_q = 2.0 * f64::from(q);
        match *self {
            Family::Geometric { r, .. } => {
                // c^{2q} r^{2q·start} / (1 − r^{2q})
                let ln_head = two_q * self.ln_eigenvalue(start);
                let ratio = r.powf(two_q);
                ln_head.exp() / (1.0 - ratio)
            }
            Family::Power { c, s } => {
                // Σ_{m≥start+1} m^{−a} ≤ (start+1)^{−a} + (start+1)^{1−a}/(a−1)
                let a = two_q * s;
                let first = (start + 1) as f64;
                let scale = c.powf(two_q);
                scale * (first.powf(-a) + first.powf(1.0 - a) / (a - 1.0))
            }
        }
    }

    fn to_json(self) -> Value {
        match self {
            Family::Geometric { c, r } => json!({"family": "geometric", "params": {"c": c, "r": r}}),
            Family::Power { c, s } => json!({"family": "power", "params": {"c": c, "s": s}}),
        }
    }
}

impl Spectrum {
    pub fn geometric(c: f64, r: f64) -> Self {
        Spectrum::Family(Family::Geometric { c, r })
    }

    pub fn power(c: f64, s: f64) -> Self {
        Spectrum::Family(Family::Power { c, s })
    }

    pub fn explicit(values: Vec<f64>, tail: Option<TailFamily>) -> Self {
        Spectrum::Explicit { values, tail }
    }

    /// `λ_n`; zero past the end of a finite (or tail-less) explicit list.
    pub fn eigenvalue(&self, n: usize) -> f64 {
        match self {
            Spectrum::Family(f) => f.eigenvalue(n),
            Spectrum::Explicit { values, tail } => match values.get(n) {
                Some(&v) => v,
                None => match tail {
                    Some(TailFamily::Continue(f)) => f.eigenvalue(n),
                    _ => 0.0,
                },
            },
        }
    }

    /// `ln λ_n`, exact even where `λ_n` underflows.
    pub fn ln_eigenvalue(&self, n: usize) -> f64 {
        match self {
            Spectrum::Family(f) => f.ln_eigenvalue(n),
            Spectrum::Explicit { values, tail } => match values.get(n) {
                Some(&v) => v.ln(),
                None => match tail {
                    Some(TailFamily::Continue(f)) => f.ln_eigenvalue(n),
                    _ => f64::NEG_INFINITY,
                },
            },
        }
    }

    /// `λ_n^{q}` for any integer `q`, switching to the log domain for large exponents.
    pub fn eigenvalue_pow(&self, n: usize, q: i64) -> f64 {
        if q == 0 {
            return 1.0;
        }
        let ln = self.ln_eigenvalue(n);
        if ln == f64::NEG_INFINITY {
            return if q > 0 { 0.0 } else { f64::INFINITY };
        }
        let exponent = q as f64 * ln;
        match i32::try_from(q) {
            Ok(qi) if exponent.abs() <= LOG_DOMAIN_THRESHOLD => self.eigenvalue(n).powi(qi),
            _ => exponent.exp(),
        }
    }

    /// Weight `λ_n^{−2p}` of coordinate `n` in the `p`-norm.
    pub fn weight(&self, n: usize, p: i64) -> f64 {
        self.eigenvalue_pow(n, -2 * p)
    }

    fn check(&self) -> Result<(), SpectrumError> {
        let (values, tail) = match self {
            Spectrum::Family(f) => return f.check(0),
            Spectrum::Explicit { values, tail } => (values, tail),
        };
        for (n, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(SpectrumError::Malformed(format!("eigenvalue {n} is not finite")));
            }
            if v <= 0.0 {
                return Err(SpectrumError::NonPositiveEigenvalue(n));
            }
        }
        if let Some(TailFamily::Continue(f)) = tail {
            f.check(values.len())?;
        }
        if let Some(n) = values.iter().position(|&v| v > 1.0) {
            return Err(SpectrumError::EigenvalueExceedsOne(n));
        }
        if tail.is_none() {
            return Err(SpectrumError::UnsupportedFamily);
        }
        Ok(())
    }

    /// Certified upper bound on `Σ_{n≥start} λ_n^{2q}`.
    pub fn tail_bound(&self, start: usize, q: u32) -> Result<f64, SpectrumError> {
        if q == 0 {
            return Err(SpectrumError::Malformed("tail exponent q must be positive".into()));
        }
        match self {
            Spectrum::Family(f) => Ok(f.tail(start, q)),
            Spectrum::Explicit { values, tail } => {
                let listed: f64 = (start..values.len())
                    .map(|n| self.eigenvalue_pow(n, 2 * i64::from(q)))
                    .sum();
                match tail {
                    None => Err(SpectrumError::UnsupportedFamily),
                    Some(TailFamily::Finite) => Ok(listed),
                    Some(TailFamily::Continue(f)) => Ok(listed + f.tail(start.max(values.len()), q)),
                }
            }
        }
    }

    /// `Σ_{n<end} λ_n^{2q}` summed from the small end.
    pub fn partial_sum(&self, end: usize, q: u32) -> f64 {
        let exp = 2 * i64::from(q);
        (0..end).rev().map(|n| self.eigenvalue_pow(n, exp)).sum()
    }

    /// `Σ_n λ_n^{2q}` as partial sum to `policy.n` plus certified tail.
    pub fn certified_sum(&self, q: u32, policy: &TruncationPolicy) -> Result<CertifiedSum, SpectrumError> {
        let tail = self.tail_bound(policy.n, q)?;
        Ok(CertifiedSum {
            partial: self.partial_sum(policy.n, q),
            tail,
        })
    }

    pub fn to_json(&self) -> Value {
        match self {
            Spectrum::Family(f) => f.to_json(),
            Spectrum::Explicit { values, tail } => {
                let tail = match tail {
                    None => Value::Null,
                    Some(TailFamily::Finite) => json!("finite"),
                    Some(TailFamily::Continue(f)) => f.to_json(),
                };
                json!({"family": "explicit", "params": {"values": values}, "tail_family": tail})
            }
        }
    }

    pub fn from_json(value: &Value) -> Result<Self, SpectrumError> {
        let obj = value
            .as_object()
            .ok_or_else(|| SpectrumError::Malformed("spectrum must be a JSON object".into()))?;
        let family = obj
            .get("family")
            .and_then(Value::as_str)
            .ok_or_else(|| SpectrumError::Malformed("missing string field `family`".into()))?;
        let params = obj.get("params").cloned().unwrap_or(Value::Null);
        if family == "explicit" {
            let values = params
                .get("values")
                .and_then(Value::as_array)
                .ok_or_else(|| SpectrumError::Malformed("explicit spectrum needs `params.values`".into()))?
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| SpectrumError::Malformed("non-numeric eigenvalue".into())))
                .collect::<Result<Vec<_>, _>>()?;
            let tail = match obj.get("tail_family") {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) if s == "finite" => Some(TailFamily::Finite),
                Some(v @ Value::Object(_)) => match Spectrum::from_json(v)? {
                    Spectrum::Family(f) => Some(TailFamily::Continue(f)),
                    Spectrum::Explicit { .. } => {
                        return Err(SpectrumError::Malformed("tail family cannot be explicit".into()))
                    }
                },
                Some(other) => return Err(SpectrumError::Malformed(format!("bad tail_family {other}"))),
            };
            return Ok(Spectrum::Explicit { values, tail });
        }
        let param = |name: &str| {
            params
                .get(name)
                .and_then(Value::as_f64)
                .filter(|v| v.is_finite())
                .ok_or_else(|| SpectrumError::Malformed(format!("missing numeric parameter `{name}`")))
        };
        match family {
            "geometric" => Ok(Spectrum::geometric(param("c")?, param("r")?)),
            "power" => Ok(Spectrum::power(param("c")?, param("s")?)),
            other => Err(SpectrumError::Malformed(format!("unknown family `{other}`"))),
        }
    }
}

/// Finite surrogate for the infinite objects: coordinates, series tolerance, scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub n: usize,
    pub eps: f64,
    pub p_max: u32,
}

impl TruncationPolicy {
    pub fn new(n: usize, eps: f64, p_max: u32) -> Result<Self, SpectrumError> {
        if n < 1 {
            return Err(SpectrumError::InvalidPolicy("N must be at least 1".into()));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(SpectrumError::InvalidPolicy("eps must be positive".into()));
        }
        if p_max < 1 {
            return Err(SpectrumError::InvalidPolicy("p_max must be at least 1".into()));
        }
        Ok(TruncationPolicy { n, eps, p_max })
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            n: 40,
            eps: 1e-12,
            p_max: 6,
        }
    }
}

/// A nonnegative series split as partial sum plus certified remainder bound.
/// The true value lies in `[partial, partial + tail]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifiedSum {
    pub partial: f64,
    pub tail: f64,
}

impl CertifiedSum {
    pub fn upper(&self) -> f64 {
        self.partial + self.tail
    }
}

/// Value with an absolute error bound: the true quantity lies in `[value − error, value]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certified {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub positive: bool,
    pub bounded_by_one: bool,
    /// `Σ_{n<N} λ_n²`
    pub partial_sum: f64,
    /// Upper bound on `Σ_{n≥N} λ_n²`.
    pub tail_bound: f64,
}

/// Checks positivity, `λ ≤ 1`, and that the square-sum tail is certified finite.
pub fn validate_spectrum(s: &Spectrum, policy: &TruncationPolicy) -> Result<ValidationReport, SpectrumError> {
    s.check()?;
    let sum = s.certified_sum(1, policy)?;
    if !sum.tail.is_finite() {
        return Err(SpectrumError::DivergentTail);
    }
    Ok(ValidationReport {
        positive: true,
        bounded_by_one: true,
        partial_sum: sum.partial,
        tail_bound: sum.tail,
    })
}

/// Hilbert–Schmidt norm of the inclusion `F_m → F_n`.
///
/// The basis `λ_k^m e_k` is orthonormal in `F_m` and has `n`-norm `λ_k^{m−n}`,
/// so the squared norm is `Σ_k λ_k^{2(m−n)}`.
pub fn hs_inclusion_norm(s: &Spectrum, m: i64, n: i64, policy: &TruncationPolicy) -> Result<Certified, SpectrumError> {
    if m <= n {
        return Err(SpectrumError::InvalidIndices { m, n });
    }
    let q = u32::try_from(m - n).map_err(|_| SpectrumError::InvalidIndices { m, n })?;
    let sum = s.certified_sum(q, policy)?;
    let value = sum.upper().sqrt();
    Ok(Certified {
        value,
        error: value - sum.partial.sqrt(),
    })
}
