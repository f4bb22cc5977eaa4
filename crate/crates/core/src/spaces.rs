//! Finitely supported coefficient vectors and the Hilbert scale `F_p`, `p ∈ ℤ`.
//!
//! Positive `p` is the test-function side, negative `p` the dual side; in both
//! cases the weight of coordinate `n` is `λ_n^{−2p}`.

use std::collections::BTreeMap;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::spectrum::{Spectrum, LOG_DOMAIN_THRESHOLD};

/// Finite-support real sequence. Absent coordinates are zero and exact zeros
/// are never stored, so equality is support-wise.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawVector")]
pub struct CoeffVector {
    entries: BTreeMap<usize, f64>,
}

#[derive(Deserialize)]
struct RawVector {
    entries: BTreeMap<usize, f64>,
}

impl From<RawVector> for CoeffVector {
    fn from(raw: RawVector) -> Self {
        raw.entries.into_iter().collect()
    }
}

impl FromIterator<(usize, f64)> for CoeffVector {
    /// Repeated indices accumulate.
    fn from_iter<I: IntoIterator<Item = (usize, f64)>>(iter: I) -> Self {
        let mut entries = BTreeMap::new();
        for (n, v) in iter {
            *entries.entry(n).or_insert(0.0) += v;
        }
        entries.retain(|_, v| *v != 0.0);
        CoeffVector { entries }
    }
}

impl CoeffVector {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Unit coordinate vector `δ_n`.
    pub fn delta(n: usize) -> Self {
        Self::scaled_delta(n, 1.0)
    }

    pub fn scaled_delta(n: usize, value: f64) -> Self {
        std::iter::once((n, value)).collect()
    }

    /// Dense prefix `(x_0, …, x_{len−1})`.
    pub fn from_dense(values: &[f64]) -> Self {
        values.iter().copied().enumerate().collect()
    }

    pub fn get(&self, n: usize) -> f64 {
        self.entries.get(&n).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|(&n, &v)| (n, v))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// One past the largest stored index (0 for the zero vector).
    pub fn support_end(&self) -> usize {
        self.entries.keys().next_back().map_or(0, |&n| n + 1)
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.iter().map(|(n, v)| (n, v * factor)).collect()
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        self.iter().chain(other.iter().map(|(n, v)| (n, sign * v))).collect()
    }
}

impl Add for &CoeffVector {
    type Output = CoeffVector;
    fn add(self, rhs: &CoeffVector) -> CoeffVector {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &CoeffVector {
    type Output = CoeffVector;
    fn sub(self, rhs: &CoeffVector) -> CoeffVector {
        self.combine(rhs, -1.0)
    }
}

impl Neg for &CoeffVector {
    type Output = CoeffVector;
    fn neg(self) -> CoeffVector {
        self.scale(-1.0)
    }
}

/// `‖x‖_p = (Σ λ_n^{−2p} x_n²)^{1/2}`, exact over the support.
pub fn p_norm(x: &CoeffVector, p: i64, s: &Spectrum) -> f64 {
    if p == 0 {
        return x.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
    }
    let needs_log = x
        .iter()
        .any(|(n, _)| (2.0 * p as f64 * s.ln_eigenvalue(n)).abs() > LOG_DOMAIN_THRESHOLD);
    if !needs_log {
        return x.iter().map(|(n, v)| s.weight(n, p) * v * v).sum::<f64>().sqrt();
    }
    // log-sum-exp over ln(λ_n^{−2p} x_n²)
    let logs: Vec<f64> = x
        .iter()
        .map(|(n, v)| -2.0 * p as f64 * s.ln_eigenvalue(n) + 2.0 * v.abs().ln())
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return if max > 0.0 { f64::INFINITY } else { 0.0 };
    }
    let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    (0.5 * (max + sum.ln())).exp()
}

/// `⟨a, b⟩_p = Σ λ_n^{−2p} a_n b_n` over the common support.
pub fn inner_product(a: &CoeffVector, b: &CoeffVector, p: i64, s: &Spectrum) -> f64 {
    a.iter()
        .filter_map(|(n, x)| b.entries.get(&n).map(|y| s.weight(n, p) * x * y))
        .sum()
}

/// Dual pairing `⟨y, x⟩ = Σ x_n y_n`.
pub fn pairing(y: &CoeffVector, x: &CoeffVector) -> f64 {
    let (small, large) = if y.support_len() <= x.support_len() { (y, x) } else { (x, y) };
    small
        .iter()
        .filter_map(|(n, a)| large.entries.get(&n).map(|b| a * b))
        .sum()
}

/// `A^q x`: coordinate-wise multiplication by `λ_n^q`.
pub fn apply_a_power(x: &CoeffVector, q: i64, s: &Spectrum) -> CoeffVector {
    if q == 0 {
        return x.clone();
    }
    x.iter().map(|(n, v)| (n, v * s.eigenvalue_pow(n, q))).collect()
}
