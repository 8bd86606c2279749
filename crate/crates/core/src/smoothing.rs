//! Kernel descriptors, the convolution-smoothed expectation, and the
//! normal-reference bandwidth rule.
//!
//! Smoothing replaces a sample average (1/N) sum_i g(X_i) with
//! (1/N) sum_i ∫ g(X_i + h z) K(z) dz. Truncated-power integrands against the
//! bounded kernels reduce to polynomial panels that the fixed Gauss rule
//! integrates exactly; the Gaussian kernel uses its error-function closed
//! forms. Everything else goes through adaptive quadrature.

use alloc::vec::Vec;

use crate::chain::{Sample, Stage, TruncatedPower};
use crate::error::{Error, Result};
use crate::quad::{self, QuadConfig};
use crate::sum::ExactSum;

/// Quadrature truncation for the unbounded Gaussian kernel, in standardized
/// units. Contributes below 1e-14 relative error for the integrands in scope.
pub const GAUSSIAN_TRUNCATION: f64 = 8.0;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * libm::exp(-0.5 * z * z)
}

/// Standard normal distribution function via erfc.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * core::f64::consts::FRAC_1_SQRT_2)
}

/// The three built-in smoothing kernels, all of order 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// Density 1/2 on [-1, 1].
    Uniform,
    /// Density (3/4)(1 - z^2) on [-1, 1].
    Epanechnikov,
    /// Standard normal density.
    Gaussian,
}

/// Smoothing kernel; multivariate use takes the product across coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Kernel {
    pub family: KernelFamily,
}

impl Kernel {
    pub fn new(family: KernelFamily) -> Self {
        Self { family }
    }

    /// Kernel order s: all built-in kernels are symmetric densities with
    /// finite second moment, hence order 2.
    pub fn order(&self) -> f64 {
        2.0
    }

    /// Support radius of the standardized kernel, `None` when unbounded.
    pub fn support_radius(&self) -> Option<f64> {
        match self.family {
            KernelFamily::Uniform | KernelFamily::Epanechnikov => Some(1.0),
            KernelFamily::Gaussian => None,
        }
    }

    /// Radius used when the kernel must be truncated for quadrature.
    pub fn quadrature_radius(&self) -> f64 {
        self.support_radius().unwrap_or(GAUSSIAN_TRUNCATION)
    }

    /// Standardized one-dimensional density.
    pub fn density_1d(&self, z: f64) -> f64 {
        match self.family {
            KernelFamily::Uniform => {
                if libm::fabs(z) <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
            KernelFamily::Epanechnikov => {
                if libm::fabs(z) <= 1.0 {
                    0.75 * (1.0 - z * z)
                } else {
                    0.0
                }
            }
            KernelFamily::Gaussian => normal_pdf(z),
        }
    }

    /// Product density on R^m.
    pub fn density(&self, z: &[f64]) -> f64 {
        z.iter().map(|&zi| self.density_1d(zi)).product()
    }
}

/// m_alpha(K) = ∫ |y|^alpha K(y) dy for the one-dimensional kernel, in closed
/// form.
pub fn kernel_moment(kernel: &Kernel, alpha: f64) -> Result<f64> {
    if alpha <= 0.0 {
        return Err(Error::BadParameters("moment order must be positive"));
    }
    if alpha > kernel.order() {
        return Err(Error::OrderExceeded {
            alpha,
            order: kernel.order(),
        });
    }
    Ok(match kernel.family {
        KernelFamily::Uniform => 1.0 / (alpha + 1.0),
        KernelFamily::Epanechnikov => 3.0 / ((alpha + 1.0) * (alpha + 3.0)),
        KernelFamily::Gaussian => {
            // E|Z|^alpha = 2^{alpha/2} Gamma((alpha+1)/2) / sqrt(pi)
            libm::pow(2.0, 0.5 * alpha) * libm::tgamma(0.5 * (alpha + 1.0))
                / libm::sqrt(core::f64::consts::PI)
        }
    })
}

/// m_alpha(K) = ∫ ||y||^alpha K(y) dy for the m-dimensional product kernel;
/// closed form at m = 1, nested quadrature otherwise.
pub fn kernel_moment_dim(kernel: &Kernel, alpha: f64, dim: usize) -> Result<f64> {
    if dim == 0 {
        return Err(Error::BadParameters("kernel dimension must be positive"));
    }
    if dim == 1 {
        return kernel_moment(kernel, alpha);
    }
    if alpha > kernel.order() {
        return Err(Error::OrderExceeded {
            alpha,
            order: kernel.order(),
        });
    }
    let cfg = QuadConfig::default();
    let r = kernel.quadrature_radius();
    fn rec(
        kernel: &Kernel,
        alpha: f64,
        r: f64,
        cfg: &QuadConfig,
        z: &mut Vec<f64>,
        dims_left: usize,
    ) -> Result<f64> {
        if dims_left == 0 {
            let norm2: f64 = z.iter().map(|v| v * v).sum();
            return Ok(libm::pow(norm2, 0.5 * alpha));
        }
        let mut failed = None;
        let v = quad::integrate(
            |zi| {
                z.push(zi);
                let inner = rec(kernel, alpha, r, cfg, z, dims_left - 1);
                z.pop();
                match inner {
                    Ok(x) => x * kernel.density_1d(zi),
                    Err(e) => {
                        failed.get_or_insert(e);
                        0.0
                    }
                }
            },
            -r,
            r,
            cfg,
        )?;
        match failed {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }
    rec(kernel, alpha, r, &cfg, &mut Vec::new(), dim)
}

/// Normal-reference bandwidth 1.06 * sigma_hat * N^{-1/5} for one-dimensional
/// samples, sigma_hat the sample standard deviation (denominator N - 1).
pub fn bandwidth_rule(sample: &Sample) -> Result<f64> {
    if sample.dim() != 1 {
        return Err(Error::BadParameters(
            "the bandwidth rule is defined for one-dimensional samples; use bandwidth_rule_per_coordinate",
        ));
    }
    if sample.n_obs() < 2 {
        return Err(Error::BadParameters("bandwidth rule requires N >= 2"));
    }
    let sd = sample.coord_std(0)?;
    if sd == 0.0 {
        return Err(Error::DegenerateSample);
    }
    Ok(1.06 * sd * libm::pow(sample.n_obs() as f64, -0.2))
}

/// Per-coordinate application of the rule for multivariate samples (product
/// kernels); the rule itself is stated only for m = 1.
pub fn bandwidth_rule_per_coordinate(sample: &Sample) -> Result<Vec<f64>> {
    if sample.n_obs() < 2 {
        return Err(Error::BadParameters("bandwidth rule requires N >= 2"));
    }
    let n_factor = libm::pow(sample.n_obs() as f64, -0.2);
    (0..sample.dim())
        .map(|d| {
            let sd = sample.coord_std(d)?;
            if sd == 0.0 {
                Err(Error::DegenerateSample)
            } else {
                Ok(1.06 * sd * n_factor)
            }
        })
        .collect()
}

/// Bandwidth selection: explicit, per-coordinate explicit, or the rule.
#[derive(Debug, Clone, PartialEq)]
pub enum Bandwidth {
    /// Same explicit bandwidth for every coordinate.
    Fixed(f64),
    /// Per-coordinate explicit bandwidths.
    PerDim(Vec<f64>),
    /// 1.06 * sigma_hat * N^{-1/5}, evaluated per coordinate at prepare time.
    Rule,
}

/// Kernel plus bandwidth plus quadrature policy.
#[derive(Debug, Clone)]
pub struct SmoothingPlan {
    pub kernel: Kernel,
    pub bandwidth: Bandwidth,
    pub quad: QuadConfig,
}

impl SmoothingPlan {
    pub fn new(kernel: Kernel, bandwidth: Bandwidth) -> Result<Self> {
        if let Bandwidth::Fixed(h) = bandwidth {
            if !(h > 0.0) {
                return Err(Error::BadParameters("bandwidth must be positive"));
            }
        }
        if let Bandwidth::PerDim(ref hs) = bandwidth {
            if hs.is_empty() || hs.iter().any(|h| !(*h > 0.0)) {
                return Err(Error::BadParameters("bandwidths must be positive"));
            }
        }
        Ok(Self {
            kernel,
            bandwidth,
            // Tight enough that the quadrature fallback keeps affine stages
            // equal to the sample mean to 1e-12 under the Gaussian kernel.
            quad: QuadConfig {
                abs_tol: 1e-14,
                rel_tol: 1e-12,
                budget: 1_000_000,
            },
        })
    }

    /// Resolve a rule bandwidth against the sample; explicit bandwidths pass
    /// through.
    pub fn resolved(&self, sample: &Sample) -> Result<SmoothingPlan> {
        let bandwidth = match &self.bandwidth {
            Bandwidth::Rule => {
                if sample.dim() == 1 {
                    Bandwidth::Fixed(bandwidth_rule(sample)?)
                } else {
                    Bandwidth::PerDim(bandwidth_rule_per_coordinate(sample)?)
                }
            }
            other => other.clone(),
        };
        Ok(SmoothingPlan {
            kernel: self.kernel,
            bandwidth,
            quad: self.quad,
        })
    }

    fn bandwidth_for(&self, d: usize) -> Result<f64> {
        match &self.bandwidth {
            Bandwidth::Fixed(h) => Ok(*h),
            Bandwidth::PerDim(hs) => hs
                .get(d)
                .copied()
                .ok_or(Error::BadParameters("bandwidth dimension mismatch")),
            Bandwidth::Rule => Err(Error::BadParameters(
                "rule bandwidth must be resolved against a sample first",
            )),
        }
    }
}

/// ∫ max(0, w + z)^p K(z) dz for the standardized kernel.
///
/// Bounded kernels: a single Gauss panel on [max(-1, -w), 1] is exact since
/// the integrand is a polynomial of degree at most p + 2 there. Gaussian:
/// error-function closed form.
pub fn conv_truncated_power(kernel: &Kernel, w: f64, p: u32) -> f64 {
    debug_assert!(p == 1 || p == 2);
    match kernel.family {
        KernelFamily::Uniform | KernelFamily::Epanechnikov => {
            if w <= -1.0 {
                return 0.0;
            }
            let lo = if w < 1.0 { -w } else { -1.0 };
            quad::fixed_gl5(
                |z| {
                    let t = w + z;
                    let tp = if p == 1 { t } else { t * t };
                    tp * kernel.density_1d(z)
                },
                lo,
                1.0,
            )
        }
        KernelFamily::Gaussian => {
            let cdf = normal_cdf(w);
            let pdf = normal_pdf(w);
            if p == 1 {
                w * cdf + pdf
            } else {
                (1.0 + w * w) * cdf + w * pdf
            }
        }
    }
}

/// Exact smoothed value of a registered truncated-power integrand at one
/// observation: ∫ max(0, c (x + h z) + d)^p K(z) dz.
fn smoothed_trunc_power(kernel: &Kernel, tp: &TruncatedPower, x: f64, h: f64) -> f64 {
    let t = tp.coef * x + tp.offset;
    let s = libm::fabs(tp.coef) * h;
    if s == 0.0 {
        let m = t.max(0.0);
        return if tp.power == 1 { m } else { m * m };
    }
    let scale = if tp.power == 1 { s } else { s * s };
    scale * conv_truncated_power(kernel, t / s, tp.power)
}

fn smoothed_component_quadrature(
    stage: &Stage,
    comp: usize,
    plan: &SmoothingPlan,
    u: &[f64],
    eta: &[f64],
    x: &[f64],
    hs: &[f64],
) -> Result<f64> {
    let r = plan.kernel.quadrature_radius();
    let dim = x.len();
    let mut shifted = alloc::vec![0.0; dim];
    shifted.copy_from_slice(x);
    let mut out = alloc::vec![0.0; stage.out_dim()];

    #[allow(clippy::too_many_arguments)]
    fn rec(
        stage: &Stage,
        comp: usize,
        plan: &SmoothingPlan,
        u: &[f64],
        eta: &[f64],
        x: &[f64],
        hs: &[f64],
        r: f64,
        d: usize,
        shifted: &mut [f64],
        out: &mut [f64],
    ) -> Result<f64> {
        if d == x.len() {
            stage.eval_into(u, eta, shifted, out);
            let v = out[comp];
            if !v.is_finite() {
                return Err(Error::NonFiniteValue);
            }
            return Ok(v);
        }
        let mut failed = None;
        let v = quad::integrate(
            |z| {
                shifted[d] = x[d] + hs[d] * z;
                match rec(stage, comp, plan, u, eta, x, hs, r, d + 1, shifted, out) {
                    Ok(inner) => inner * plan.kernel.density_1d(z),
                    Err(e) => {
                        failed.get_or_insert(e);
                        0.0
                    }
                }
            },
            -r,
            r,
            &plan.quad,
        )?;
        shifted[d] = x[d];
        match failed {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }
    rec(
        stage,
        comp,
        plan,
        u,
        eta,
        x,
        hs,
        r,
        0,
        &mut shifted,
        &mut out,
    )
}

/// Convolution-smoothed expectation
/// (1/N) sum_i ∫ stage(u, eta, X_i + h z) K(z) dz, componentwise.
pub fn smoothed_expectation(
    stage: &Stage,
    sample: &Sample,
    plan: &SmoothingPlan,
    u: &[f64],
    eta: &[f64],
) -> Result<Vec<f64>> {
    let plan = match plan.bandwidth {
        Bandwidth::Rule => plan.resolved(sample)?,
        _ => plan.clone(),
    };
    let dim = sample.dim();
    let hs: Vec<f64> = (0..dim)
        .map(|d| plan.bandwidth_for(d))
        .collect::<Result<Vec<_>>>()?;

    // Exact path: scalar data, registered truncated-power integrand.
    if dim == 1 && stage.out_dim() == 1 {
        if let Some(tp) = stage.analytic_form(u, eta) {
            if tp.power == 1 || tp.power == 2 {
                let mut acc = ExactSum::new();
                for x in sample.iter_obs() {
                    let v = smoothed_trunc_power(&plan.kernel, &tp, x[0], hs[0]);
                    if !v.is_finite() {
                        return Err(Error::NonFiniteValue);
                    }
                    acc.add(v);
                }
                return Ok(alloc::vec![acc.value() / sample.n_obs() as f64]);
            }
        }
    }

    let mut accs: Vec<ExactSum> = (0..stage.out_dim()).map(|_| ExactSum::new()).collect();
    for x in sample.iter_obs() {
        for (comp, acc) in accs.iter_mut().enumerate() {
            let v = smoothed_component_quadrature(stage, comp, &plan, u, eta, x, &hs)?;
            acc.add(v);
        }
    }
    let n = sample.n_obs() as f64;
    Ok(accs.iter().map(|a| a.value() / n).collect())
}

/// Kernel density estimate (P_N * mu_N) at a point:
/// (1/N) sum_i h^{-m} K((x - X_i)/h) with the product kernel.
pub fn kernel_density(sample: &Sample, plan: &SmoothingPlan, x: &[f64]) -> Result<f64> {
    let plan = match plan.bandwidth {
        Bandwidth::Rule => plan.resolved(sample)?,
        _ => plan.clone(),
    };
    let dim = sample.dim();
    if x.len() != dim {
        return Err(Error::BadParameters("evaluation point dimension mismatch"));
    }
    let hs: Vec<f64> = (0..dim)
        .map(|d| plan.bandwidth_for(d))
        .collect::<Result<Vec<_>>>()?;
    let inv_h: f64 = hs.iter().map(|h| 1.0 / h).product();
    let mut acc = ExactSum::new();
    for obs in sample.iter_obs() {
        let mut k = 1.0;
        for d in 0..dim {
            k *= plan.kernel.density_1d((x[d] - obs[d]) / hs[d]);
        }
        acc.add(k * inv_h);
    }
    Ok(acc.value() / sample.n_obs() as f64)
}
