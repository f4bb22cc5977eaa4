//! Numerical model of a nuclear space built from a diagonal Hilbert–Schmidt
//! operator: the Hilbert scale `F_p` of weighted sequence spaces, its dual,
//! their topologies, and the white-noise Gaussian measure on the dual.
//!
//! - [`spectrum`]: eigenvalue families with certified series tails
//! - [`spaces`]: finite-support vectors, scale norms, pairing, powers of `A`
//! - [`topology`]: metric, neighborhoods, boundedness, dual convergence
//! - [`gaussian`]: seeded sampling and Monte Carlo estimators
//! - [`cli`]: JSON command-line front end

pub mod cli;
pub mod gaussian;
pub mod spaces;
pub mod spectrum;
pub mod topology;

pub use gaussian::{MCEstimate, SampleBatch};
pub use spaces::{apply_a_power, inner_product, p_norm, pairing, CoeffVector};
pub use spectrum::{hs_inclusion_norm, validate_spectrum, Spectrum, TruncationPolicy};
pub use topology::{classify_dual_convergence, rho_metric, DualSequence, VerdictKind};
