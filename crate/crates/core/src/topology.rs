//! Computable surrogates for the topological structure of the scale and its dual:
//! the Fréchet metric, weak and strong neighborhoods, bounded families, and a
//! classifier for sequential convergence in the inductive-limit dual.
//!
//! Boundedness and convergence of infinite sequences cannot be decided from
//! finitely many terms. The trajectory tests below report evidence and are
//! heuristics by construction.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spaces::{p_norm, pairing, CoeffVector};
use crate::spectrum::{Spectrum, TruncationPolicy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("family is empty")]
    EmptyFamily,
    #[error("horizon {got} is shorter than the required {min}")]
    HorizonTooShort { got: usize, min: usize },
    #[error("tolerance must be positive")]
    InvalidTolerance,
}

/// Truncated value of `ρ(u, v) = Σ_{p≥1} 2^{−p} t_p/(1+t_p)`, `t_p = ‖u−v‖_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricValue {
    pub value: f64,
    /// Upper bound on the omitted terms, `2^{−P}`.
    pub remainder: f64,
    pub terms: u32,
}

fn saturate(t: f64) -> f64 {
    if t.is_infinite() {
        1.0
    } else {
        t / (1.0 + t)
    }
}

/// Number of metric terms `P` needed so that `2^{−P} < eps`.
pub fn metric_terms(eps: f64) -> u32 {
    let mut terms = 1;
    while 0.5f64.powi(terms as i32) >= eps && terms < 1074 {
        terms += 1;
    }
    terms
}

pub fn rho_metric(u: &CoeffVector, v: &CoeffVector, s: &Spectrum, eps: f64) -> MetricValue {
    let diff = u - v;
    let terms = metric_terms(eps);
    let value = if diff.is_zero() {
        0.0
    } else {
        (1..=terms)
            .map(|p| 0.5f64.powi(p as i32) * saturate(p_norm(&diff, i64::from(p), s)))
            .sum()
    };
    MetricValue {
        value,
        remainder: 0.5f64.powi(terms as i32),
        terms,
    }
}

/// Membership in the weak neighborhood `N(v_1,…,v_k; ε)` of the origin.
pub fn weak_nbhd_contains(y: &CoeffVector, tests: &[CoeffVector], eps: f64) -> bool {
    tests.iter().all(|v| pairing(y, v).abs() < eps)
}

/// Membership in the strong neighborhood `{y : sup_{v∈D} |⟨y, v⟩| < ε}` for a finite `D`.
pub fn strong_nbhd_contains(y: &CoeffVector, family: &[CoeffVector], eps: f64) -> bool {
    family.iter().map(|v| pairing(y, v).abs()).fold(0.0, f64::max) < eps
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessReport {
    /// `sups[i] = sup_{v∈D} ‖v‖_{i+1}`
    pub sups: Vec<f64>,
}

pub fn bounded_report(family: &[CoeffVector], s: &Spectrum, p_max: u32) -> Result<BoundednessReport, TopologyError> {
    if family.is_empty() {
        return Err(TopologyError::EmptyFamily);
    }
    let sups = (1..=i64::from(p_max))
        .map(|p| family.iter().map(|v| p_norm(v, p, s)).fold(0.0, f64::max))
        .collect();
    Ok(BoundednessReport { sups })
}

/// Scalar multiplier of a parametric delta family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// `2^k`
    Pow2,
    /// `1/k`
    InvK,
    /// `k`
    Linear,
    /// `1`
    Const,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexRule {
    /// `δ_k`
    K,
    /// `δ_0`
    Const0,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceRule {
    /// `k ↦ scale(k)·δ_{index(k)}`
    ScaledDelta { scale: Scale, index: IndexRule },
    /// Term `k` is `terms[k−1]`.
    Explicit { terms: Vec<CoeffVector> },
}

/// Deterministic dual sequence `k ↦ v_k`, `k = 1, 2, …`, examined up to `horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSequence {
    pub rule: SequenceRule,
    pub horizon: usize,
}

impl DualSequence {
    pub fn scaled_delta(scale: Scale, index: IndexRule, horizon: usize) -> Self {
        DualSequence {
            rule: SequenceRule::ScaledDelta { scale, index },
            horizon,
        }
    }

    /// The horizon of an explicit list is its length.
    pub fn explicit(terms: Vec<CoeffVector>) -> Self {
        let horizon = terms.len();
        DualSequence {
            rule: SequenceRule::Explicit { terms },
            horizon,
        }
    }

    /// Term `k ≥ 1`.
    pub fn term(&self, k: usize) -> CoeffVector {
        match &self.rule {
            SequenceRule::ScaledDelta { scale, index } => {
                let kf = k as f64;
                let value = match scale {
                    Scale::Pow2 => 2f64.powf(kf),
                    Scale::InvK => 1.0 / kf,
                    Scale::Linear => kf,
                    Scale::Const => 1.0,
                };
                let n = match index {
                    IndexRule::K => k,
                    IndexRule::Const0 => 0,
                };
                CoeffVector::scaled_delta(n, value)
            }
            SequenceRule::Explicit { terms } => terms.get(k - 1).cloned().unwrap_or_default(),
        }
    }

    pub fn terms(&self) -> Vec<CoeffVector> {
        (1..=self.horizon).map(|k| self.term(k)).collect()
    }
}

/// Relative slack that keeps exactly linear growth (ratio 2) on the unbounded side.
const GROWTH_SLACK: f64 = 1e-9;

/// Boundedness heuristic: the max over the second half of the trajectory stays
/// strictly below twice the max over the first half.
pub fn trajectory_bounded(traj: &[f64]) -> bool {
    if traj.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let (first, last) = traj.split_at(traj.len() / 2);
    let max_first = first.iter().copied().fold(0.0, f64::max);
    let max_last = last.iter().copied().fold(0.0, f64::max);
    max_last == 0.0 || max_last < 2.0 * max_first * (1.0 - GROWTH_SLACK)
}

/// Aitken Δ² extrapolation of the limit from terms `k`, `2k`, `4k`. Exact for
/// `L + C·k^{−a}`; `None` unless the three terms decrease convexly.
fn extrapolated_limit(traj: &[f64]) -> Option<f64> {
    let k = traj.len() / 4;
    if k == 0 {
        return None;
    }
    let (x1, x2, x3) = (traj[k - 1], traj[2 * k - 1], traj[4 * k - 1]);
    let denom = x1 + x3 - 2.0 * x2;
    if !(x3 < x2 && x2 < x1 && denom > 0.0) {
        return None;
    }
    Some(x3 - (x3 - x2) * (x3 - x2) / denom)
}

/// Decides whether a nonnegative trajectory tends below `tol`.
///
/// Requires the final half to be non-increasing, and then either the last
/// quarter to lie below `tol` or the extrapolated limit to be below `tol`.
pub fn tends_below(traj: &[f64], tol: f64) -> bool {
    if traj.is_empty() || traj.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let half = &traj[traj.len() / 2..];
    if half.windows(2).any(|w| w[1] > w[0]) {
        return false;
    }
    let quarter = &traj[traj.len() - traj.len().div_ceil(4)..];
    if quarter.iter().all(|&v| v < tol) {
        return true;
    }
    extrapolated_limit(traj).is_some_and(|limit| limit.abs() < tol)
}

pub const MIN_BOUNDED_HORIZON: usize = 8;
pub const MIN_CLASSIFY_HORIZON: usize = 16;

/// Trajectory `‖B(j)‖_{−k}` for `j = 1..=horizon`.
pub fn dual_norm_trajectory(terms: &[CoeffVector], k: u32, s: &Spectrum) -> Vec<f64> {
    terms.iter().map(|v| p_norm(v, -i64::from(k), s)).collect()
}

/// Smallest `k ≤ p_max` at which the family looks bounded in `‖·‖_{−k}`;
/// `Ok(None)` when no scale passes.
pub fn strongly_bounded_index(
    seq: &DualSequence,
    s: &Spectrum,
    policy: &TruncationPolicy,
) -> Result<Option<u32>, TopologyError> {
    if seq.horizon < MIN_BOUNDED_HORIZON {
        return Err(TopologyError::HorizonTooShort {
            got: seq.horizon,
            min: MIN_BOUNDED_HORIZON,
        });
    }
    let terms = seq.terms();
    Ok((0..=policy.p_max).find(|&k| trajectory_bounded(&dual_norm_trajectory(&terms, k, s))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "n_min")]
pub enum VerdictKind {
    ConvergesInDual(u32),
    WeakOnly,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceEvidence {
    /// `norms[p][k−1] = ‖v_k − v‖_{−p}`
    pub norms: Vec<Vec<f64>>,
    /// Whether each `p` passed the decrease test.
    pub norm_passes: Vec<bool>,
    /// `|⟨v_k − v, δ_n⟩|` for every coordinate `n < N` touched by the differences.
    pub pairings: BTreeMap<usize, Vec<f64>>,
    pub weak_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceVerdict {
    pub kind: VerdictKind,
    pub evidence: ConvergenceEvidence,
}

/// Classifies `v_k → limit` in the dual: convergence in some fixed `F_{−n}`
/// (minimal `n` reported), weak-only, divergent, or inconclusive.
pub fn classify_dual_convergence(
    seq: &DualSequence,
    limit: &CoeffVector,
    s: &Spectrum,
    policy: &TruncationPolicy,
    tol: f64,
) -> Result<ConvergenceVerdict, TopologyError> {
    if seq.horizon < MIN_CLASSIFY_HORIZON {
        return Err(TopologyError::HorizonTooShort {
            got: seq.horizon,
            min: MIN_CLASSIFY_HORIZON,
        });
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(TopologyError::InvalidTolerance);
    }
    let diffs: Vec<CoeffVector> = seq.terms().iter().map(|v| v - limit).collect();

    let norms: Vec<Vec<f64>> = (0..=policy.p_max)
        .into_par_iter()
        .map(|p| dual_norm_trajectory(&diffs, p, s))
        .collect();
    let norm_passes: Vec<bool> = norms.iter().map(|t| tends_below(t, tol)).collect();

    let touched: std::collections::BTreeSet<usize> = diffs
        .iter()
        .flat_map(|d| d.iter().map(|(n, _)| n))
        .filter(|&n| n < policy.n)
        .collect();
    let pairings: BTreeMap<usize, Vec<f64>> = touched
        .into_iter()
        .map(|n| (n, diffs.iter().map(|d| d.get(n).abs()).collect()))
        .collect();
    let weak_pass = pairings.values().all(|t| tends_below(t, tol));

    let kind = if let Some(p) = norm_passes.iter().position(|&ok| ok) {
        VerdictKind::ConvergesInDual(p as u32)
    } else if weak_pass {
        VerdictKind::WeakOnly
    } else if pairings.values().any(|t| !trajectory_bounded(t)) {
        VerdictKind::Divergent
    } else {
        VerdictKind::Inconclusive
    };
    Ok(ConvergenceVerdict {
        kind,
        evidence: ConvergenceEvidence {
            norms,
            norm_passes,
            pairings,
            weak_pass,
        },
    })
}
