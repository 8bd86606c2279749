//! Estimation and minimization of nested composite risk functionals from
//! sampled data.
//!
//! The objective is a nesting E[f1(u, E[f2(u, ..., X)], X)] whose expectations
//! can each be estimated by a plain sample average, by a kernel-smoothed
//! average, or by integration against a shape-preserving wavelet density. The
//! smoothed variants never fall below the plug-in value on convex inner
//! stages, which is what makes them useful against the downward bias of
//! sample-based minimization.
//!
//! The crate is `no_std` (with `alloc`): pure deterministic numerics, no IO.

#![no_std]
#![deny(unsafe_code)]
// Parameter guards use `!(x > 0.0)`-style comparisons to reject NaN along
// with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod chain;
pub mod error;
pub mod optimize;
pub mod quad;
pub mod risk;
pub mod seed;
pub mod smoothing;
pub mod sum;
pub mod wavelet;

pub use chain::{
    empirical_expectation, eval_composite, eval_composite_prepared, make_chain, prepare,
    CompositeChain, ExpectationBackend, LevelBackend, PreparedBackend, PreparedLevel, Sample,
    Stage, TruncatedPower, WaveletSpec,
};
pub use error::{Error, Result};
pub use optimize::{
    minimize_scalar, minimize_simplex, ScalarDomain, ScalarMinimum, SimplexDomain, SimplexMinimum,
};
pub use risk::{
    higher_order_risk_objective, inverse_portfolio_chain, mean_semideviation_chain,
    minimize_higher_order, minimize_mean_semideviation, Orientation, PortfolioEstimate,
    RiskEstimate, RiskFamily, RiskSpec,
};
pub use smoothing::{
    bandwidth_rule, bandwidth_rule_per_coordinate, kernel_density, kernel_moment,
    kernel_moment_dim, smoothed_expectation, Bandwidth, Kernel, KernelFamily, SmoothingPlan,
};
pub use wavelet::{
    generalized_kernel, phi_eval, resolution_rule, wavelet_density, wavelet_expectation,
    Resolution, ScalingFamily, ScalingFunction, WaveletBasis, WaveletDensity,
};
