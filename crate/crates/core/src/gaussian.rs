//! Truncated white-noise measure: iid standard normal coordinates `x_0, …, x_{N−1}`
//! and Monte Carlo estimators for its characteristic functional and moments.
//!
//! Row `m` of a batch is drawn from its own ChaCha8 stream (`stream = m`) keyed by
//! the batch seed, so the data is a pure function of `(seed, M, N)` and does not
//! depend on how rows are distributed over worker threads. Because each row is
//! generated coordinate by coordinate, a batch with fewer columns is a prefix of
//! one with more.

use std::io::{self, Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::spaces::{p_norm, pairing, CoeffVector};
use crate::spectrum::{Spectrum, SpectrumError};

/// Identifies the normal-generation scheme. Changing the scheme changes every
/// batch and must bump this id.
pub const GENERATOR_ID: &str = "chacha8-row-stream/ziggurat-normal/v1";

const MAGIC: &[u8; 8] = b"WNBATCH\0";
const FORMAT_VERSION: u32 = 1;

/// Estimates more than this many standard errors from their reference fail.
pub const TOLERANCE_STD_ERRORS: f64 = 4.0;

#[derive(Debug, Error)]
pub enum GaussianError {
    #[error("vector support reaches index {support_end} but the batch has {n} coordinates")]
    SupportExceedsTruncation { support_end: usize, n: usize },
    #[error("invalid batch shape: {0}")]
    InvalidShape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported generator `{0}`")]
    UnknownGenerator(String),
    #[error("malformed batch file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    m: usize,
    n: usize,
    seed: u64,
    generator_id: String,
    /// Row-major `M × N`.
    data: Vec<f64>,
}

fn fill_row(row: &mut [f64], seed: u64, index: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    for x in row.iter_mut() {
        *x = StandardNormal.sample(&mut rng);
    }
}

impl SampleBatch {
    /// Draws `M` rows of `N` iid standard normals.
    pub fn generate(n: usize, m: usize, seed: u64) -> Result<Self, GaussianError> {
        if n == 0 || m == 0 {
            return Err(GaussianError::InvalidShape(format!("need N ≥ 1 and M ≥ 1, got N = {n}, M = {m}")));
        }
        let mut data = vec![0.0; n * m];
        data.par_chunks_mut(n)
            .enumerate()
            .for_each(|(index, row)| fill_row(row, seed, index));
        Ok(SampleBatch {
            m,
            n,
            seed,
            generator_id: GENERATOR_ID.to_string(),
            data,
        })
    }

    /// Wraps externally supplied rows (e.g. a zeroed diagnostic batch).
    pub fn from_rows(n: usize, data: Vec<f64>, seed: u64, generator_id: &str) -> Result<Self, GaussianError> {
        if n == 0 || data.is_empty() || !data.len().is_multiple_of(n) {
            return Err(GaussianError::InvalidShape(format!(
                "{} values do not form rows of length {n}",
                data.len()
            )));
        }
        Ok(SampleBatch {
            m: data.len() / n,
            n,
            seed,
            generator_id: generator_id.to_string(),
            data,
        })
    }

    pub fn samples(&self) -> usize {
        self.m
    }

    pub fn coordinates(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn generator_id(&self) -> &str {
        &self.generator_id
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.data[index * self.n..(index + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Regenerates the batch from its metadata and compares bit-for-bit.
    pub fn verify_reproducible(&self) -> Result<bool, GaussianError> {
        if self.generator_id != GENERATOR_ID {
            return Err(GaussianError::UnknownGenerator(self.generator_id.clone()));
        }
        let fresh = SampleBatch::generate(self.n, self.m, self.seed)?;
        Ok(fresh.data.iter().map(|v| v.to_bits()).eq(self.data.iter().map(|v| v.to_bits())))
    }

    /// Per-column sample means and (unbiased) variances.
    pub fn column_moments(&self) -> Vec<MCEstimate> {
        (0..self.n)
            .map(|j| {
                let column: Vec<f64> = self.rows().map(|r| r[j]).collect();
                MCEstimate::from_samples(&column)
            })
            .collect()
    }

    /// Header (magic, version, M, N, seed, generator id) then row-major little-endian `f64`s.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), GaussianError> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.m as u64).to_le_bytes())?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        let id = self.generator_id.as_bytes();
        let id_len = u32::try_from(id.len()).map_err(|_| GaussianError::Format("generator id too long".into()))?;
        w.write_all(&id_len.to_le_bytes())?;
        w.write_all(id)?;
        let mut buf = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        w.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(40 + self.generator_id.len() + self.data.len() * 8);
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, GaussianError> {
        fn array<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K], GaussianError> {
            let mut buf = [0u8; K];
            r.read_exact(&mut buf)
                .map_err(|e| GaussianError::Format(format!("truncated header: {e}")))?;
            Ok(buf)
        }
        if &array::<8, _>(&mut r)? != MAGIC {
            return Err(GaussianError::Format("bad magic".into()));
        }
        let version = u32::from_le_bytes(array(&mut r)?);
        if version != FORMAT_VERSION {
            return Err(GaussianError::Format(format!("unsupported version {version}")));
        }
        let m = u64::from_le_bytes(array(&mut r)?) as usize;
        let n = u64::from_le_bytes(array(&mut r)?) as usize;
        let seed = u64::from_le_bytes(array(&mut r)?);
        let id_len = u32::from_le_bytes(array(&mut r)?) as usize;
        let mut id = vec![0u8; id_len];
        r.read_exact(&mut id)
            .map_err(|e| GaussianError::Format(format!("truncated generator id: {e}")))?;
        let generator_id = String::from_utf8(id).map_err(|_| GaussianError::Format("generator id is not UTF-8".into()))?;
        let len = m
            .checked_mul(n)
            .filter(|&len| len > 0)
            .ok_or_else(|| GaussianError::Format(format!("invalid shape {m} × {n}")))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != len * 8 {
            return Err(GaussianError::Format(format!(
                "expected {} data bytes, found {}",
                len * 8,
                bytes.len()
            )));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(SampleBatch {
            m,
            n,
            seed,
            generator_id,
            data,
        })
    }
}

/// Sample mean with its standard error `sd/√M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl MCEstimate {
    /// Sequential summation keeps the result independent of thread count.
    pub fn from_samples(values: &[f64]) -> Self {
        let m = values.len();
        let mean = values.iter().sum::<f64>() / m as f64;
        let std_error = if m > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (m - 1) as f64).sqrt() / (m as f64).sqrt()
        } else {
            0.0
        };
        MCEstimate {
            value: mean,
            std_error,
            samples: m,
        }
    }

    /// `|value − reference| ≤ 4·std_error`
    pub fn within(&self, reference: f64) -> bool {
        (self.value - reference).abs() <= TOLERANCE_STD_ERRORS * self.std_error
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CfEstimate {
    pub re: MCEstimate,
    pub im: MCEstimate,
}

impl CfEstimate {
    pub fn modulus(&self) -> f64 {
        self.re.value.hypot(self.im.value)
    }
}

/// Exact value `exp(−t²‖ξ‖₀²/2)` of the characteristic functional.
pub fn cf_reference(xi: &CoeffVector, t: f64) -> f64 {
    // ‖ξ‖₀ is spectrum independent.
    let norm = p_norm(xi, 0, &Spectrum::geometric(1.0, 0.5));
    (-0.5 * t * t * norm * norm).exp()
}

fn check_support(batch: &SampleBatch, xi: &CoeffVector) -> Result<(), GaussianError> {
    if xi.support_end() > batch.n {
        return Err(GaussianError::SupportExceedsTruncation {
            support_end: xi.support_end() - 1,
            n: batch.n,
        });
    }
    Ok(())
}

/// `(1/M) Σ_m exp(i t ⟨x^{(m)}, ξ⟩)` with componentwise standard errors.
pub fn empirical_char_functional(batch: &SampleBatch, xi: &CoeffVector, t: f64) -> Result<CfEstimate, GaussianError> {
    check_support(batch, xi)?;
    let phases: Vec<(f64, f64)> = batch
        .data
        .par_chunks_exact(batch.n)
        .map(|row| {
            let inner: f64 = xi.iter().map(|(j, v)| row[j] * v).sum();
            let (sin, cos) = (t * inner).sin_cos();
            (cos, sin)
        })
        .collect();
    let cos: Vec<f64> = phases.iter().map(|p| p.0).collect();
    let sin: Vec<f64> = phases.iter().map(|p| p.1).collect();
    Ok(CfEstimate {
        re: MCEstimate::from_samples(&cos),
        im: MCEstimate::from_samples(&sin),
    })
}

fn weighted_square_sums(batch: &SampleBatch, p: u32, s: &Spectrum) -> (Vec<f64>, Vec<f64>) {
    let weights: Vec<f64> = (0..batch.n).map(|j| s.eigenvalue_pow(j, 2 * i64::from(p))).collect();
    let sums = batch
        .data
        .par_chunks_exact(batch.n)
        .map(|row| row.iter().zip(&weights).map(|(x, w)| w * x * x).sum())
        .collect();
    (weights, sums)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub estimate: MCEstimate,
    /// `Σ_{j<N} λ_j^{2p}`
    pub reference: f64,
    /// Bound on the omitted `Σ_{j≥N} λ_j^{2p}`.
    pub tail_bound: f64,
}

impl MomentEstimate {
    pub fn pass(&self) -> bool {
        self.estimate.within(self.reference)
    }
}

/// Estimates `E[Σ_{j<N} λ_j^{2p} x_j²]`, whose exact value is `Σ_{j<N} λ_j^{2p}`.
pub fn moment_estimate(batch: &SampleBatch, p: u32, s: &Spectrum) -> Result<MomentEstimate, GaussianError> {
    if p == 0 {
        return Err(GaussianError::InvalidParameter("moment index p must be positive".into()));
    }
    let (weights, sums) = weighted_square_sums(batch, p, s);
    Ok(MomentEstimate {
        estimate: MCEstimate::from_samples(&sums),
        reference: weights.iter().rev().sum(),
        tail_bound: s.tail_bound(batch.n, p)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailProbability {
    pub estimate: MCEstimate,
    /// Markov bound `E[Z]/c` for `Z = Σ_{j<N} λ_j^{2p} x_j²`.
    pub markov_bound: f64,
    pub pass: bool,
}

/// Estimates `P(Σ_{j<N} λ_j^{2p} x_j² > c)` and checks it against the Markov bound.
pub fn dual_norm_tail_probability(
    batch: &SampleBatch,
    p: u32,
    c: f64,
    s: &Spectrum,
) -> Result<TailProbability, GaussianError> {
    if p == 0 {
        return Err(GaussianError::InvalidParameter("p must be at least 1".into()));
    }
    if c.is_nan() || c <= 0.0 {
        return Err(GaussianError::InvalidParameter("threshold c must be positive".into()));
    }
    let (weights, sums) = weighted_square_sums(batch, p, s);
    let indicators: Vec<f64> = sums.iter().map(|&z| if z > c { 1.0 } else { 0.0 }).collect();
    let estimate = MCEstimate::from_samples(&indicators);
    let markov_bound = weights.iter().rev().sum::<f64>() / c;
    Ok(TailProbability {
        estimate,
        markov_bound,
        pass: estimate.value <= markov_bound + TOLERANCE_STD_ERRORS * estimate.std_error,
    })
}

/// Row `m` as the finite-support vector `Σ_j x_j^{(m)} δ_j`.
pub fn sample_as_dual_vectors(batch: &SampleBatch) -> Vec<CoeffVector> {
    batch.rows().map(CoeffVector::from_dense).collect()
}

/// `⟨x^{(m)}, ξ⟩` through the `spaces` representation.
pub fn row_pairing(batch: &SampleBatch, m: usize, xi: &CoeffVector) -> f64 {
    pairing(&CoeffVector::from_dense(batch.row(m)), xi)
}
