//! Shape-preserving wavelet density estimation and the induced expectation.
//!
//! The estimator expands the density in nonnegative compactly supported
//! scaling-function translates phi(2^j x - l). Partition of unity and the
//! zero-first-moment identity make the estimate a bona fide density whose mean
//! equals the sample mean, so expectations of affine integrands reproduce the
//! plain sample average exactly while convex integrands are never
//! underestimated.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::chain::{Sample, Stage};
use crate::error::{Error, Result};
use crate::quad::{self, QuadConfig};
use crate::sum::ExactSum;

/// Scaling-function family: first-order splines satisfying the partition of
/// unity and the zero-first-moment identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingFamily {
    LocallyLinear,
    LocallyQuadratic,
}

/// A polynomial piece of the scaling function: coefficients of
/// c0 + c1 t + c2 t^2 on [lo, hi].
#[derive(Debug, Clone, Copy)]
pub struct PhiPiece {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: [f64; 3],
}

const LINEAR_PIECES: [PhiPiece; 2] = [
    PhiPiece {
        lo: -1.0,
        hi: 0.0,
        coeffs: [1.0, 1.0, 0.0],
    },
    PhiPiece {
        lo: 0.0,
        hi: 1.0,
        coeffs: [1.0, -1.0, 0.0],
    },
];

const QUADRATIC_PIECES: [PhiPiece; 3] = [
    PhiPiece {
        lo: -1.5,
        hi: -0.5,
        coeffs: [1.125, 1.5, 0.5],
    },
    PhiPiece {
        lo: -0.5,
        hi: 0.5,
        coeffs: [0.75, 0.0, -1.0],
    },
    PhiPiece {
        lo: 0.5,
        hi: 1.5,
        coeffs: [1.125, -1.5, 0.5],
    },
];

/// Nonnegative compactly supported scaling function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalingFunction {
    pub family: ScalingFamily,
}

impl ScalingFunction {
    pub fn new(family: ScalingFamily) -> Self {
        Self { family }
    }

    pub fn linear() -> Self {
        Self::new(ScalingFamily::LocallyLinear)
    }

    pub fn quadratic() -> Self {
        Self::new(ScalingFamily::LocallyQuadratic)
    }

    /// Support radius a: the support is [-a, a].
    pub fn support_radius(&self) -> f64 {
        match self.family {
            ScalingFamily::LocallyLinear => 1.0,
            ScalingFamily::LocallyQuadratic => 1.5,
        }
    }

    /// Piecewise value, branch for branch as printed.
    pub fn eval(&self, x: f64) -> f64 {
        match self.family {
            ScalingFamily::LocallyLinear => {
                if (-1.0..0.0).contains(&x) {
                    1.0 + x
                } else if (0.0..=1.0).contains(&x) {
                    1.0 - x
                } else {
                    0.0
                }
            }
            ScalingFamily::LocallyQuadratic => {
                let a = libm::fabs(x);
                if a >= 1.5 {
                    0.0
                } else if x <= -0.5 {
                    0.5 * (1.5 + x) * (1.5 + x)
                } else if x < 0.5 {
                    1.0 + x - (x + 0.5) * (x + 0.5)
                } else {
                    0.5 * (1.5 - x) * (1.5 - x)
                }
            }
        }
    }

    /// Polynomial pieces of the function.
    pub fn pieces(&self) -> &'static [PhiPiece] {
        match self.family {
            ScalingFamily::LocallyLinear => &LINEAR_PIECES,
            ScalingFamily::LocallyQuadratic => &QUADRATIC_PIECES,
        }
    }
}

/// Scaling-function value (operation-style entry point).
pub fn phi_eval(phi: &ScalingFunction, x: f64) -> f64 {
    phi.eval(x)
}

/// Universal resolution level: log2(N)/5 rounded to the nearest integer
/// (ties up), floored at zero.
pub fn resolution_rule(n_obs: usize) -> Result<u32> {
    if n_obs < 2 {
        return Err(Error::BadParameters("resolution rule requires N >= 2"));
    }
    let j = libm::floor(libm::log2(n_obs as f64) / 5.0 + 0.5);
    Ok(if j < 0.0 { 0 } else { j as u32 })
}

/// Resolution choice for a wavelet backend.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    /// The universal rule, applied per dimension.
    Universal,
    /// One level for every dimension.
    Fixed(u32),
    /// Explicit per-dimension levels.
    PerDim(Vec<u32>),
}

impl Resolution {
    pub fn resolve(&self, sample: &Sample) -> Result<Vec<u32>> {
        let dim = sample.dim();
        match self {
            Resolution::Universal => {
                let j = resolution_rule(sample.n_obs())?;
                Ok(alloc::vec![j; dim])
            }
            Resolution::Fixed(j) => Ok(alloc::vec![*j; dim]),
            Resolution::PerDim(js) => {
                if js.len() != dim {
                    return Err(Error::BadParameters(
                        "per-dimension resolutions must match the sample dimension",
                    ));
                }
                Ok(js.clone())
            }
        }
    }
}

/// Basis descriptor: scaling function plus per-dimension resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis {
    pub phi: ScalingFunction,
    pub resolution: Vec<u32>,
}

impl WaveletBasis {
    pub fn dims(&self) -> usize {
        self.resolution.len()
    }

    /// 2^{j_d} for dimension d.
    pub fn scale(&self, d: usize) -> f64 {
        (1u64 << self.resolution[d]) as f64
    }
}

#[derive(Debug, Clone)]
enum Weights {
    /// Contiguous window for scalar data.
    Dense1d { lmin: i64, w: Vec<f64> },
    /// Sparse tensor-product weights for multivariate data.
    Sparse(BTreeMap<Vec<i64>, f64>),
}

/// Estimated density: mixture weights over translated bumps
/// 2^j phi(2^j x - l). Weights are nonnegative and sum to one by the
/// partition of unity.
#[derive(Debug, Clone)]
pub struct WaveletDensity {
    basis: WaveletBasis,
    weights: Weights,
}

impl WaveletDensity {
    pub fn basis(&self) -> &WaveletBasis {
        &self.basis
    }

    pub fn dims(&self) -> usize {
        self.basis.dims()
    }

    /// Translate weight b_l = (1/N) sum_i prod_d phi(2^{j_d} X_{i,d} - l_d);
    /// the expansion coefficient of the normalized bump at l.
    pub fn weight(&self, l: &[i64]) -> f64 {
        match &self.weights {
            Weights::Dense1d { lmin, w } => {
                let idx = l[0] - lmin;
                if idx < 0 || idx as usize >= w.len() {
                    0.0
                } else {
                    w[idx as usize]
                }
            }
            Weights::Sparse(map) => map.get(l).copied().unwrap_or(0.0),
        }
    }

    /// Active index window for dimension d (inclusive).
    pub fn window(&self, d: usize) -> (i64, i64) {
        match &self.weights {
            Weights::Dense1d { lmin, w } => (*lmin, lmin + w.len() as i64 - 1),
            Weights::Sparse(map) => {
                let mut lo = i64::MAX;
                let mut hi = i64::MIN;
                for l in map.keys() {
                    lo = lo.min(l[d]);
                    hi = hi.max(l[d]);
                }
                (lo, hi)
            }
        }
    }

    /// Density value at x.
    pub fn density_at(&self, x: &[f64]) -> f64 {
        let phi = &self.basis.phi;
        let a = phi.support_radius();
        match &self.weights {
            Weights::Dense1d { lmin, w } => {
                let s = self.basis.scale(0);
                let y = s * x[0];
                let lo = libm::ceil(y - a) as i64;
                let hi = libm::floor(y + a) as i64;
                let mut acc = 0.0;
                for l in lo..=hi {
                    let idx = l - lmin;
                    if idx >= 0 && (idx as usize) < w.len() {
                        acc += w[idx as usize] * s * phi.eval(y - l as f64);
                    }
                }
                acc
            }
            Weights::Sparse(map) => {
                let mut acc = 0.0;
                for (l, &b) in map {
                    let mut v = b;
                    for d in 0..self.dims() {
                        let s = self.basis.scale(d);
                        v *= s * phi.eval(s * x[d] - l[d] as f64);
                        if v == 0.0 {
                            break;
                        }
                    }
                    acc += v;
                }
                acc
            }
        }
    }

    /// Sum of all translate weights; one up to rounding.
    pub fn total_weight(&self) -> f64 {
        match &self.weights {
            Weights::Dense1d { w, .. } => crate::sum::exact_sum(w),
            Weights::Sparse(map) => {
                let mut s = ExactSum::new();
                for &b in map.values() {
                    s.add(b);
                }
                s.value()
            }
        }
    }

    /// Mean of the density along dimension d: equals the sample mean by the
    /// zero-first-moment identity.
    pub fn mean(&self, d: usize) -> f64 {
        let inv_s = 1.0 / self.basis.scale(d);
        match &self.weights {
            Weights::Dense1d { lmin, w } => {
                let mut s = ExactSum::new();
                for (i, &b) in w.iter().enumerate() {
                    s.add(b * (lmin + i as i64) as f64);
                }
                s.value() * inv_s
            }
            Weights::Sparse(map) => {
                let mut s = ExactSum::new();
                for (l, &b) in map {
                    s.add(b * l[d] as f64);
                }
                s.value() * inv_s
            }
        }
    }
}

fn check_resolutions(js: &[u32]) -> Result<()> {
    if js.iter().any(|&j| j > 40) {
        return Err(Error::BadParameters("resolution level too large"));
    }
    Ok(())
}

/// Build the density estimate at per-dimension resolutions `js`.
pub fn wavelet_density(
    sample: &Sample,
    phi: &ScalingFunction,
    js: &[u32],
) -> Result<WaveletDensity> {
    if js.len() != sample.dim() {
        return Err(Error::BadParameters(
            "one resolution level per sample dimension required",
        ));
    }
    check_resolutions(js)?;
    let basis = WaveletBasis {
        phi: *phi,
        resolution: js.to_vec(),
    };
    let a = phi.support_radius();
    let n = sample.n_obs() as f64;

    if sample.dim() == 1 {
        let s = basis.scale(0);
        let pad = libm::ceil(a) as i64;
        let lmin = libm::floor(s * sample.coord_min(0)) as i64 - pad;
        let lmax = libm::ceil(s * sample.coord_max(0)) as i64 + pad;
        let len = (lmax - lmin + 1) as usize;
        let mut acc: Vec<ExactSum> = (0..len).map(|_| ExactSum::new()).collect();
        for obs in sample.iter_obs() {
            let y = s * obs[0];
            let lo = libm::ceil(y - a) as i64;
            let hi = libm::floor(y + a) as i64;
            for l in lo..=hi {
                let v = phi.eval(y - l as f64);
                if v != 0.0 {
                    acc[(l - lmin) as usize].add(v);
                }
            }
        }
        let w: Vec<f64> = acc.iter().map(|s| s.value() / n).collect();
        return Ok(WaveletDensity {
            basis,
            weights: Weights::Dense1d { lmin, w },
        });
    }

    // Tensor product: enumerate contributing index tuples per observation.
    let dim = sample.dim();
    let mut acc: BTreeMap<Vec<i64>, ExactSum> = BTreeMap::new();
    let mut idx = alloc::vec![0i64; dim];
    for obs in sample.iter_obs() {
        fn visit(
            basis: &WaveletBasis,
            a: f64,
            obs: &[f64],
            d: usize,
            weight: f64,
            idx: &mut Vec<i64>,
            acc: &mut BTreeMap<Vec<i64>, ExactSum>,
        ) {
            if weight == 0.0 {
                return;
            }
            if d == obs.len() {
                acc.entry(idx.clone()).or_default().add(weight);
                return;
            }
            let s = basis.scale(d);
            let y = s * obs[d];
            let lo = libm::ceil(y - a) as i64;
            let hi = libm::floor(y + a) as i64;
            for l in lo..=hi {
                idx[d] = l;
                let v = basis.phi.eval(y - l as f64);
                visit(basis, a, obs, d + 1, weight * v, idx, acc);
            }
        }
        visit(&basis, a, obs, 0, 1.0, &mut idx, &mut acc);
    }
    let map: BTreeMap<Vec<i64>, f64> = acc.into_iter().map(|(l, s)| (l, s.value() / n)).collect();
    Ok(WaveletDensity {
        basis,
        weights: Weights::Sparse(map),
    })
}

/// Generalized kernel K(y, x) = sum_l phi(y - l) phi(x - l).
pub fn generalized_kernel(phi: &ScalingFunction, y: f64, x: f64) -> f64 {
    let a = phi.support_radius();
    let lo = libm::ceil(y - a) as i64;
    let hi = libm::floor(y + a) as i64;
    let mut acc = 0.0;
    for l in lo..=hi {
        acc += phi.eval(y - l as f64) * phi.eval(x - l as f64);
    }
    acc
}

/// Exact ∫ max(0, c t + d)^p q(t) dt over [lo, hi] for a polynomial piece q of
/// degree <= 2 (integrand degree <= 4, inside the Gauss rule's exactness).
fn trunc_power_piece(c: f64, d: f64, p: u32, piece: &PhiPiece) -> f64 {
    let eval_piece = |t: f64| piece.coeffs[0] + piece.coeffs[1] * t + piece.coeffs[2] * t * t;
    let (mut lo, mut hi) = (piece.lo, piece.hi);
    if c == 0.0 {
        let base = d.max(0.0);
        if base == 0.0 {
            return 0.0;
        }
        let scale = if p == 1 { base } else { base * base };
        return scale * quad::fixed_gl5(eval_piece, lo, hi);
    }
    let kink = -d / c;
    if c > 0.0 {
        lo = lo.max(kink);
    } else {
        hi = hi.min(kink);
    }
    if lo >= hi {
        return 0.0;
    }
    quad::fixed_gl5(
        |t| {
            let v = c * t + d;
            let vp = if p == 1 { v } else { v * v };
            vp * eval_piece(t)
        },
        lo,
        hi,
    )
}

/// Expectation of a stage under the wavelet density:
/// sum_l b_l ∫ stage(u, eta, x) Bump_l(x) dx.
pub fn wavelet_expectation(
    stage: &Stage,
    density: &WaveletDensity,
    u: &[f64],
    eta: &[f64],
) -> Result<Vec<f64>> {
    let phi = &density.basis.phi;
    let a = phi.support_radius();
    let cfg = QuadConfig::default();

    // Exact path: scalar data, registered truncated-power integrand.
    if density.dims() == 1 && stage.out_dim() == 1 {
        if let Some(tp) = stage.analytic_form(u, eta) {
            if tp.power == 1 || tp.power == 2 {
                if let Weights::Dense1d { lmin, w } = &density.weights {
                    let s = density.basis.scale(0);
                    let inv_s = 1.0 / s;
                    let mut acc = ExactSum::new();
                    for (i, &b) in w.iter().enumerate() {
                        if b == 0.0 {
                            continue;
                        }
                        let l = (lmin + i as i64) as f64;
                        // x = (t + l)/2^j inside the bump
                        let c = tp.coef * inv_s;
                        let d = tp.coef * l * inv_s + tp.offset;
                        let mut integral = 0.0;
                        for piece in phi.pieces() {
                            integral += trunc_power_piece(c, d, tp.power, piece);
                        }
                        let v = b * integral;
                        if !v.is_finite() {
                            return Err(Error::NonFiniteValue);
                        }
                        acc.add(v);
                    }
                    return Ok(alloc::vec![acc.value()]);
                }
            }
        }
    }

    let m = stage.out_dim();
    let mut totals: Vec<ExactSum> = (0..m).map(|_| ExactSum::new()).collect();
    match &density.weights {
        Weights::Dense1d { lmin, w } => {
            let s = density.basis.scale(0);
            let mut out = alloc::vec![0.0; m];
            for (i, &b) in w.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let l = (lmin + i as i64) as f64;
                #[allow(clippy::needless_range_loop)]
                for comp in 0..m {
                    let mut failed = None;
                    let mut integral = 0.0;
                    for piece in phi.pieces() {
                        // t = 2^j x - l restricted to this piece
                        integral += quad::integrate(
                            |x| {
                                stage.eval_into(u, eta, &[x], &mut out);
                                let v = out[comp];
                                if !v.is_finite() {
                                    failed.get_or_insert(Error::NonFiniteValue);
                                    return 0.0;
                                }
                                v * s * phi.eval(s * x - l)
                            },
                            (piece.lo + l) / s,
                            (piece.hi + l) / s,
                            &cfg,
                        )?;
                    }
                    if let Some(e) = failed {
                        return Err(e);
                    }
                    totals[comp].add(b * integral);
                }
            }
        }
        Weights::Sparse(map) => {
            let dims = density.dims();
            let mut point = alloc::vec![0.0; dims];
            let mut out = alloc::vec![0.0; m];
            for (l, &b) in map {
                if b == 0.0 {
                    continue;
                }
                #[allow(clippy::needless_range_loop)]
                for comp in 0..m {
                    let v = integrate_bump(
                        stage, comp, density, u, eta, l, 0, &mut point, &mut out, a, &cfg,
                    )?;
                    totals[comp].add(b * v);
                }
            }
        }
    }
    Ok(totals.iter().map(|t| t.value()).collect())
}

#[allow(clippy::too_many_arguments)]
fn integrate_bump(
    stage: &Stage,
    comp: usize,
    density: &WaveletDensity,
    u: &[f64],
    eta: &[f64],
    l: &[i64],
    d: usize,
    point: &mut Vec<f64>,
    out: &mut Vec<f64>,
    a: f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    if d == density.dims() {
        stage.eval_into(u, eta, point, out);
        let v = out[comp];
        if !v.is_finite() {
            return Err(Error::NonFiniteValue);
        }
        return Ok(v);
    }
    let s = density.basis.scale(d);
    let phi = &density.basis.phi;
    let lo = (l[d] as f64 - a) / s;
    let hi = (l[d] as f64 + a) / s;
    let mut failed = None;
    let v = quad::integrate(
        |x| {
            point[d] = x;
            match integrate_bump(stage, comp, density, u, eta, l, d + 1, point, out, a, cfg) {
                Ok(inner) => inner * s * phi.eval(s * x - l[d] as f64),
                Err(e) => {
                    failed.get_or_insert(e);
                    0.0
                }
            }
        },
        lo,
        hi,
        cfg,
    )?;
    match failed {
        Some(e) => Err(e),
        None => Ok(v),
    }
}
