//! One-dimensional adaptive quadrature on a 5-point Gauss-Legendre rule.
//!
//! The base rule is exact for polynomials up to degree 9, which covers every
//! piecewise-polynomial integrand this crate produces (truncated powers against
//! uniform/Epanechnikov kernels and spline scaling functions have degree at
//! most four per piece). Smooth non-polynomial integrands are handled by
//! bisecting panels until the fine/coarse difference meets tolerance.

use crate::error::{Error, Result};
use alloc::vec::Vec;

// Nodes and weights of the 5-point Gauss-Legendre rule on [-1, 1].
// Closed forms: x = 0, ±sqrt(5 ∓ 2·sqrt(10/7))/3; w = 128/225, (322 ± 13·sqrt(70))/900.
fn gl5() -> [(f64, f64); 5] {
    let s70 = libm::sqrt(70.0);
    let a = libm::sqrt(5.0 - 2.0 * libm::sqrt(10.0 / 7.0)) / 3.0;
    let b = libm::sqrt(5.0 + 2.0 * libm::sqrt(10.0 / 7.0)) / 3.0;
    let wa = (322.0 + 13.0 * s70) / 900.0;
    let wb = (322.0 - 13.0 * s70) / 900.0;
    [(0.0, 128.0 / 225.0), (-a, wa), (a, wa), (-b, wb), (b, wb)]
}

/// Integrate `f` over `[a, b]` with the base rule, no refinement.
///
/// Exact for polynomials of degree <= 9.
pub fn fixed_gl5<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in gl5() {
        acc += w * f(mid + half * x);
    }
    acc * half
}

// Nodes and weights of the 7-point Gauss-Lobatto rule on [-1, 1], exact for
// polynomials up to degree 11. The endpoints are nodes, so an integrand that
// is nonzero only in a sliver against a panel edge is still seen; repeated
// bisection drives interior kinks toward panel edges.
fn lobatto7() -> [(f64, f64); 7] {
    let s15 = libm::sqrt(15.0);
    let inner = libm::sqrt(5.0 / 11.0 - 2.0 / 11.0 * libm::sqrt(5.0 / 3.0));
    let outer = libm::sqrt(5.0 / 11.0 + 2.0 / 11.0 * libm::sqrt(5.0 / 3.0));
    let w_inner = (124.0 + 7.0 * s15) / 350.0;
    let w_outer = (124.0 - 7.0 * s15) / 350.0;
    [
        (0.0, 256.0 / 525.0),
        (-inner, w_inner),
        (inner, w_inner),
        (-outer, w_outer),
        (outer, w_outer),
        (-1.0, 1.0 / 21.0),
        (1.0, 1.0 / 21.0),
    ]
}

fn fixed_lobatto7<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in lobatto7() {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Tolerances and budget for adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of integrand evaluations before giving up.
    pub budget: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            budget: 1_000_000,
        }
    }
}

/// Adaptive integration of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::BadParameters("quadrature bounds must be finite"));
    }
    if a >= b {
        return Ok(0.0);
    }
    let span = b - a;
    let whole = fixed_lobatto7(&mut f, a, b);
    let mut evals = 7usize;
    let mut total = 0.0;
    // Panel acceptance depends only on the panel itself and this fixed scale,
    // so mirrored panels of a symmetric integrand refine identically and odd
    // parts cancel exactly.
    let scale = if whole.is_finite() {
        libm::fabs(whole)
    } else {
        0.0
    };
    // (lo, hi, coarse estimate, depth)
    let mut stack: Vec<(f64, f64, f64, u32)> = alloc::vec![(a, b, whole, 0)];

    while let Some((lo, hi, coarse, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = fixed_lobatto7(&mut f, lo, mid);
        let right = fixed_lobatto7(&mut f, mid, hi);
        evals += 14;
        if evals > cfg.budget {
            return Err(Error::QuadratureFailure);
        }
        let fine = left + right;
        if !fine.is_finite() {
            return Err(Error::NonFiniteValue);
        }
        let err = libm::fabs(fine - coarse);
        let tol = (cfg.abs_tol + cfg.rel_tol * scale) * ((hi - lo) / span).max(1e-3);
        // a couple of forced levels guard against structure hiding between
        // the nodes of the very first panels
        if (err <= tol && depth >= 2) || hi - lo < span * 1e-13 {
            total += fine;
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    Ok(total)
}
