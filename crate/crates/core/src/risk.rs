//! Concrete risk-measure chains: mean-semideviation of order p and the
//! higher-order inverse measure, with their stage decompositions and
//! convexity/monotonicity flags, plus minimization helpers at estimator level.
//!
//! The internal convention is losses-positive: portfolio data are interpreted
//! through the orientation flag, and the measured quantity is always the loss
//! Y with risk penalizing its upper deviations.

use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use crate::chain::{
    eval_composite_prepared, prepare, CompositeChain, ExpectationBackend, Sample, Stage,
    TruncatedPower,
};
use crate::error::{Error, Result};
use crate::optimize::{minimize_scalar, minimize_simplex, ScalarDomain, SimplexDomain};

/// How observation vectors relate to losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// Observations are returns; the loss of allocation u is -<u, x>.
    #[default]
    ReturnsAsData,
    /// Observations are losses; the loss of allocation u is <u, x>.
    LossesAsData,
}

/// Risk-measure families from the portfolio examples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiskFamily {
    /// E[Y] + kappa (E[(max(0, Y - E[Y]))^p])^{1/p}, p >= 1, kappa in [0, 1].
    MeanSemiDeviation { p: f64, kappa: f64 },
    /// min_u { u + (1/alpha)(E[max(0, Y - u)^q])^{1/q} }, q >= 1,
    /// alpha in (0, 1]; kappa in (0, 1] weights the risk term in the
    /// portfolio variant.
    HigherOrderInverse { q: f64, alpha: f64, kappa: f64 },
}

/// Risk measure selection plus data orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskSpec {
    pub family: RiskFamily,
    pub orientation: Orientation,
}

impl RiskSpec {
    pub fn mean_semideviation(p: f64, kappa: f64) -> Self {
        Self {
            family: RiskFamily::MeanSemiDeviation { p, kappa },
            orientation: Orientation::default(),
        }
    }

    pub fn higher_order(q: f64, alpha: f64) -> Self {
        Self {
            family: RiskFamily::HigherOrderInverse {
                q,
                alpha,
                kappa: 1.0,
            },
            orientation: Orientation::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            RiskFamily::MeanSemiDeviation { p, kappa } => {
                if !(p >= 1.0) {
                    return Err(Error::BadParameters("semideviation order p must be >= 1"));
                }
                if !(0.0..=1.0).contains(&kappa) {
                    return Err(Error::BadParameters("kappa must lie in [0, 1]"));
                }
            }
            RiskFamily::HigherOrderInverse { q, alpha, kappa } => {
                if !(q >= 1.0) {
                    return Err(Error::BadParameters("risk order q must be >= 1"));
                }
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(Error::BadParameters("alpha must lie in (0, 1]"));
                }
                if !(kappa > 0.0 && kappa <= 1.0) {
                    return Err(Error::BadParameters("kappa must lie in (0, 1]"));
                }
            }
        }
        Ok(())
    }
}

static NEGATIVE_ETA_CLIPS: AtomicU64 = AtomicU64::new(0);

/// Number of times an inner value was clipped at zero before a fractional
/// root. Negative inner values can only arise from floating-point noise since
/// the inner stages are nonnegative.
pub fn negative_eta_clips() -> u64 {
    NEGATIVE_ETA_CLIPS.load(Ordering::Relaxed)
}

#[inline]
fn clip_nonneg(eta: f64) -> f64 {
    if eta < 0.0 {
        NEGATIVE_ETA_CLIPS.fetch_add(1, Ordering::Relaxed);
        0.0
    } else {
        eta
    }
}

#[derive(Debug, Clone, Copy)]
enum Power {
    One,
    Two,
    General(f64),
}

impl Power {
    fn of(q: f64) -> Self {
        if q == 1.0 {
            Power::One
        } else if q == 2.0 {
            Power::Two
        } else {
            Power::General(q)
        }
    }

    #[inline]
    fn apply(&self, t: f64) -> f64 {
        match self {
            Power::One => t,
            Power::Two => t * t,
            Power::General(q) => libm::pow(t, *q),
        }
    }

    #[inline]
    fn root(&self, t: f64) -> f64 {
        match self {
            Power::One => t,
            Power::Two => libm::sqrt(t),
            Power::General(q) => libm::pow(t, 1.0 / *q),
        }
    }

    fn analytic(&self) -> Option<u32> {
        match self {
            Power::One => Some(1),
            Power::Two => Some(2),
            Power::General(_) => None,
        }
    }
}

#[inline]
fn signed_return(orientation: Orientation, u: &[f64], x: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    match orientation {
        Orientation::ReturnsAsData => dot,
        Orientation::LossesAsData => -dot,
    }
}

/// The k = 2 mean-semideviation chain for an n-asset portfolio:
/// f3 = <u, x> (return), f2 = (max(0, eta2 - <u, x>))^p,
/// f1 = -<u, x> + kappa eta1^{1/p}.
pub fn mean_semideviation_chain(spec: &RiskSpec, n_assets: usize) -> Result<CompositeChain> {
    spec.validate()?;
    let (p, kappa) = match spec.family {
        RiskFamily::MeanSemiDeviation { p, kappa } => (p, kappa),
        _ => return Err(Error::BadParameters("expected a MeanSemiDeviation spec")),
    };
    if n_assets == 0 {
        return Err(Error::BadParameters("portfolio needs at least one asset"));
    }
    let orientation = spec.orientation;
    let power = Power::of(p);

    let f1 = Stage::scalar(1, move |u, eta, x| {
        -signed_return(orientation, u, x) + kappa * power.root(clip_nonneg(eta[0]))
    })
    .monotone_in_eta(true)
    .convex_in_x(true);

    let f2 = Stage::scalar(1, move |u, eta, x| {
        power.apply((eta[0] - signed_return(orientation, u, x)).max(0.0))
    })
    .convex_in_x(true)
    .monotone_in_eta(true);

    // f3 is affine in x, so symmetric smoothing reproduces its sample mean
    // exactly through the quadrature path; no closed-form hook is needed.
    let f3 = Stage::scalar(0, move |u, _, x| signed_return(orientation, u, x));

    CompositeChain::new(alloc::vec![f1, f2, f3], n_assets, n_assets)
}

/// The k = 1 higher-order-risk chain in a scalar cutoff decision u:
/// f1 = u + (1/alpha) eta^{1/q}, f2 = max(0, x - u)^q.
pub fn higher_order_risk_objective(spec: &RiskSpec) -> Result<CompositeChain> {
    spec.validate()?;
    let (q, alpha) = match spec.family {
        RiskFamily::HigherOrderInverse { q, alpha, .. } => (q, alpha),
        _ => return Err(Error::BadParameters("expected a HigherOrderInverse spec")),
    };
    let power = Power::of(q);
    let inv_alpha = 1.0 / alpha;

    let f1 = Stage::scalar(1, move |u, eta, _| {
        u[0] + inv_alpha * power.root(clip_nonneg(eta[0]))
    })
    .monotone_in_eta(true);

    let mut f2 =
        Stage::scalar(0, move |u, _, x| power.apply((x[0] - u[0]).max(0.0))).convex_in_x(true);
    if let Some(p_int) = power.analytic() {
        f2 = f2.with_analytic(move |u, _| {
            Some(TruncatedPower {
                coef: 1.0,
                offset: -u[0],
                power: p_int,
            })
        });
    }

    CompositeChain::new(alloc::vec![f1, f2], 1, 1)
}

/// The inverse-measure portfolio wrapper with extended decision (u0, u):
/// f2 = (-<x, u>, max(0, -<x, u> - u0)^q), f1 = (1 - kappa) eta1 +
/// kappa (u0 + (1/alpha) eta2^{1/q}). Decision slot 0 is the cutoff u0.
pub fn inverse_portfolio_chain(spec: &RiskSpec, n_assets: usize) -> Result<CompositeChain> {
    spec.validate()?;
    let (q, alpha, kappa) = match spec.family {
        RiskFamily::HigherOrderInverse { q, alpha, kappa } => (q, alpha, kappa),
        _ => return Err(Error::BadParameters("expected a HigherOrderInverse spec")),
    };
    if n_assets == 0 {
        return Err(Error::BadParameters("portfolio needs at least one asset"));
    }
    let orientation = spec.orientation;
    let power = Power::of(q);
    let inv_alpha = 1.0 / alpha;

    let f1 = Stage::scalar(2, move |u, eta, _| {
        (1.0 - kappa) * eta[0] + kappa * (u[0] + inv_alpha * power.root(clip_nonneg(eta[1])))
    })
    .monotone_in_eta(true);

    let f2 = Stage::new(0, 2, move |u, _, x, out| {
        let loss = -signed_return(orientation, &u[1..], x);
        out[0] = loss;
        out[1] = power.apply((loss - u[0]).max(0.0));
    })
    .convex_in_x(true);

    CompositeChain::new(alloc::vec![f1, f2], n_assets + 1, n_assets)
}

/// Minimizer and minimized value of a risk objective at estimator level.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskEstimate {
    pub u_star: f64,
    pub value: f64,
}

/// Default scalar search bracket for the higher-order objective: the
/// minimizer lies in the sample's convex hull; the right extension keeps it
/// strictly interior for non-degenerate samples.
pub fn hor_bracket(sample: &Sample, alpha: f64) -> (f64, f64) {
    let lo = sample.coord_min(0);
    let hi = sample.coord_max(0);
    (lo - 1.0, hi + (hi - lo) / alpha)
}

/// Minimize the higher-order-risk objective over the scalar cutoff under the
/// given backend. A constant sample has risk equal to the constant
/// (translation property) and is returned analytically.
pub fn minimize_higher_order(
    spec: &RiskSpec,
    backend: &ExpectationBackend,
    sample: &Sample,
    tol: f64,
) -> Result<RiskEstimate> {
    let alpha = match spec.family {
        RiskFamily::HigherOrderInverse { alpha, .. } => alpha,
        _ => return Err(Error::BadParameters("expected a HigherOrderInverse spec")),
    };
    if sample.dim() != 1 {
        return Err(Error::BadParameters(
            "the higher-order objective is one-dimensional",
        ));
    }
    let chain = higher_order_risk_objective(spec)?;
    let lo = sample.coord_min(0);
    let hi = sample.coord_max(0);
    if lo == hi {
        return Ok(RiskEstimate {
            u_star: lo,
            value: lo,
        });
    }
    let prepared = prepare(backend, sample)?;
    let (blo, bhi) = hor_bracket(sample, alpha);
    let m = minimize_scalar(
        |u| eval_composite_prepared(&chain, &prepared, sample, &[u]),
        &ScalarDomain {
            lo: blo,
            hi: bhi,
            tol,
        },
    )?;
    Ok(RiskEstimate {
        u_star: m.u_star,
        value: m.value,
    })
}

/// Portfolio estimate: optimal weights and minimized objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioEstimate {
    pub weights: Vec<f64>,
    pub value: f64,
}

/// Minimize the mean-semideviation portfolio objective over the budget
/// simplex under the given backend.
pub fn minimize_mean_semideviation(
    spec: &RiskSpec,
    backend: &ExpectationBackend,
    sample: &Sample,
    domain: &SimplexDomain,
    restarts: usize,
    seed: u64,
) -> Result<PortfolioEstimate> {
    let chain = mean_semideviation_chain(spec, sample.dim())?;
    let prepared = prepare(backend, sample)?;
    let m = minimize_simplex(
        |u| eval_composite_prepared(&chain, &prepared, sample, u),
        domain,
        restarts,
        seed,
    )?;
    Ok(PortfolioEstimate {
        weights: m.u_star,
        value: m.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{eval_composite, ExpectationBackend};
    use alloc::vec;

    fn hor_spec() -> RiskSpec {
        RiskSpec::higher_order(2.0, 0.05)
    }

    #[test]
    fn parameter_validation() {
        assert!(RiskSpec::higher_order(0.5, 0.05).validate().is_err());
        assert!(RiskSpec::higher_order(2.0, 0.0).validate().is_err());
        assert!(RiskSpec::mean_semideviation(2.0, 1.5).validate().is_err());
        assert!(RiskSpec::mean_semideviation(0.9, 0.5).validate().is_err());
        assert!(hor_spec().validate().is_ok());
    }

    #[test]
    fn hor_value_on_single_point() {
        let chain = higher_order_risk_objective(&hor_spec()).unwrap();
        let sample = Sample::from_1d(vec![12.0]).unwrap();
        let backend = ExpectationBackend::all_empirical(2);
        let v = eval_composite(&chain, &backend, &sample, &[10.0]).unwrap();
        assert!((v - 50.0).abs() < 1e-12);
    }

    #[test]
    fn hor_degenerate_sample_returns_the_constant() {
        let sample = Sample::from_1d(vec![7.0; 25]).unwrap();
        let backend = ExpectationBackend::all_empirical(2);
        let est = minimize_higher_order(&hor_spec(), &backend, &sample, 1e-8).unwrap();
        assert_eq!(est.u_star, 7.0);
        assert_eq!(est.value, 7.0);
    }

    #[test]
    fn hor_minimizer_sits_at_sample_max_for_small_n() {
        // For alpha = 0.05, q = 2 and N < 1/alpha^2 the empirical objective
        // decreases all the way to the largest observation, so the minimizer
        // is the sample maximum and the minimized value equals it.
        let data = vec![9.5, 10.1, 8.7, 11.9, 10.6, 9.9, 12.3, 10.0, 9.2, 11.1];
        let sample = Sample::from_1d(data.clone()).unwrap();
        let backend = ExpectationBackend::all_empirical(2);
        let est = minimize_higher_order(&hor_spec(), &backend, &sample, 1e-9).unwrap();
        assert!((est.u_star - 12.3).abs() < 1e-6, "u* = {}", est.u_star);
        assert!((est.value - 12.3).abs() < 1e-7, "value = {}", est.value);
    }

    #[test]
    fn hor_alpha_one_q_one_reduces_to_the_mean() {
        // u + E[max(0, X - u)] is flat at E[X] for u below the sample minimum
        // and increases afterwards; its minimum is the sample mean. The
        // objective evaluated at the sample maximum equals that maximum.
        let spec = RiskSpec::higher_order(1.0, 1.0);
        let data = vec![1.0, 2.0, 6.0, 3.0];
        let sample = Sample::from_1d(data).unwrap();
        let backend = ExpectationBackend::all_empirical(2);
        let est = minimize_higher_order(&spec, &backend, &sample, 1e-9).unwrap();
        assert!((est.value - 3.0).abs() < 1e-7, "value = {}", est.value);
        let chain = higher_order_risk_objective(&spec).unwrap();
        let at_max = eval_composite(&chain, &backend, &sample, &[6.0]).unwrap();
        assert!((at_max - 6.0).abs() < 1e-12);
    }

    #[test]
    fn msd_kappa_zero_is_negative_mean_return() {
        let spec = RiskSpec::mean_semideviation(2.0, 0.0);
        let chain = mean_semideviation_chain(&spec, 2).unwrap();
        let sample = Sample::new(vec![1.0, 2.0, 3.0, 5.0, 2.0, 2.0], 2).unwrap();
        let backend = ExpectationBackend::all_empirical(3);
        let u = [0.4, 0.6];
        let v = eval_composite(&chain, &backend, &sample, &u).unwrap();
        let mean_ret: f64 = 0.4 * 2.0 + 0.6 * 3.0;
        assert!((v + mean_ret).abs() < 1e-12);
    }

    #[test]
    fn msd_p1_matches_direct_formula() {
        let kappa = 0.7;
        let spec = RiskSpec::mean_semideviation(1.0, kappa);
        let chain = mean_semideviation_chain(&spec, 1).unwrap();
        let data = vec![0.5, -1.0, 2.0, 0.25, -0.75];
        let sample = Sample::from_1d(data.clone()).unwrap();
        let backend = ExpectationBackend::all_empirical(3);
        let u = [1.5];
        let v = eval_composite(&chain, &backend, &sample, &u).unwrap();
        // direct transcription with Y = -<u, X>
        let losses: Vec<f64> = data.iter().map(|x| -u[0] * x).collect();
        let mean_y: f64 = losses.iter().sum::<f64>() / losses.len() as f64;
        let semidev: f64 =
            losses.iter().map(|y| (mean_y - y).max(0.0)).sum::<f64>() / losses.len() as f64;
        assert!((v - (mean_y + kappa * semidev)).abs() < 1e-12);
    }

    #[test]
    fn msd_p2_matches_direct_formula() {
        let kappa = 0.4;
        let spec = RiskSpec::mean_semideviation(2.0, kappa);
        let chain = mean_semideviation_chain(&spec, 1).unwrap();
        let data = vec![0.5, -1.0, 2.0, 0.25, -0.75, 1.4];
        let sample = Sample::from_1d(data.clone()).unwrap();
        let backend = ExpectationBackend::all_empirical(3);
        let u = [2.0];
        let v = eval_composite(&chain, &backend, &sample, &u).unwrap();
        // upper semideviation of losses Y = -u x
        let losses: Vec<f64> = data.iter().map(|x| -u[0] * x).collect();
        let mean_y: f64 = losses.iter().sum::<f64>() / losses.len() as f64;
        let sd2: f64 = losses
            .iter()
            .map(|y| {
                let d = (y - mean_y).max(0.0);
                d * d
            })
            .sum::<f64>()
            / losses.len() as f64;
        assert!((v - (mean_y + kappa * libm::sqrt(sd2))).abs() < 1e-12);
    }

    #[test]
    fn msd_constant_returns_have_zero_deviation() {
        let spec = RiskSpec::mean_semideviation(2.0, 0.9);
        let chain = mean_semideviation_chain(&spec, 2).unwrap();
        let sample = Sample::new(vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0], 2).unwrap();
        let backend = ExpectationBackend::all_empirical(3);
        let u = [0.25, 0.75];
        let v = eval_composite(&chain, &backend, &sample, &u).unwrap();
        assert!((v + (0.25 + 0.75 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn inverse_portfolio_chain_shape() {
        let spec = RiskSpec {
            family: RiskFamily::HigherOrderInverse {
                q: 2.0,
                alpha: 0.05,
                kappa: 0.6,
            },
            orientation: Orientation::ReturnsAsData,
        };
        let chain = inverse_portfolio_chain(&spec, 3).unwrap();
        assert_eq!(chain.k(), 1);
        assert_eq!(chain.decision_dim(), 4);
        assert_eq!(chain.data_dim(), 3);
        // kappa = 1 with weights (1, 0, 0) on scalar-like data reduces to the
        // scalar objective shifted by the loss sign.
        let pure = RiskSpec {
            family: RiskFamily::HigherOrderInverse {
                q: 2.0,
                alpha: 0.05,
                kappa: 1.0,
            },
            orientation: Orientation::LossesAsData,
        };
        let chain1 = inverse_portfolio_chain(&pure, 1).unwrap();
        let sample = Sample::from_1d(vec![12.0]).unwrap();
        let backend = ExpectationBackend::all_empirical(2);
        // u0 = 10, weight 1: loss = x, so value matches the Eq.-18 hand value
        let v = eval_composite(&chain1, &backend, &sample, &[10.0, 1.0]).unwrap();
        assert!((v - 50.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_monotonicity_in_the_sample() {
        let data = vec![9.5, 10.1, 8.7, 11.9, 10.6];
        let bumped: Vec<f64> = data.iter().map(|x| x + 0.35).collect();
        let backend = ExpectationBackend::all_empirical(2);
        let a = minimize_higher_order(&hor_spec(), &backend, &Sample::from_1d(data).unwrap(), 1e-9)
            .unwrap();
        let b = minimize_higher_order(
            &hor_spec(),
            &backend,
            &Sample::from_1d(bumped).unwrap(),
            1e-9,
        )
        .unwrap();
        assert!(b.value >= a.value - 1e-9);
    }

    #[test]
    fn chain_flags_support_the_ordering_theorems() {
        let chain = higher_order_risk_objective(&hor_spec()).unwrap();
        assert_eq!(chain.k(), 1);
        assert!(chain.stages()[0].is_monotone_in_eta());
        assert!(chain.stages()[1].is_convex_in_x());
        let msd = mean_semideviation_chain(&RiskSpec::mean_semideviation(2.0, 0.5), 2).unwrap();
        assert_eq!(msd.k(), 2);
        assert!(msd.stages()[0].is_monotone_in_eta());
        assert!(msd.stages()[1].is_convex_in_x());
    }

    #[test]
    fn mismatched_family_rejected() {
        assert!(higher_order_risk_objective(&RiskSpec::mean_semideviation(2.0, 0.5)).is_err());
        assert!(mean_semideviation_chain(&hor_spec(), 2).is_err());
    }

    #[test]
    fn identical_assets_make_every_allocation_optimal() {
        // expectation-only objective (kappa = 0) on two identical return
        // streams: the objective is flat and equals -(mean return) * budget
        let spec = RiskSpec::mean_semideviation(2.0, 0.0);
        let data: Vec<f64> = [1.2, 0.7, 1.9, 0.4, 1.3]
            .iter()
            .flat_map(|&r| [r, r])
            .collect();
        let sample = Sample::new(data, 2).unwrap();
        let backend = ExpectationBackend::all_empirical(3);
        let domain = crate::optimize::SimplexDomain::unit(2);
        let est =
            minimize_mean_semideviation(&spec, &backend, &sample, &domain, 3, 11).unwrap();
        let mean_ret = (1.2 + 0.7 + 1.9 + 0.4 + 1.3) / 5.0;
        assert!(
            (est.value + mean_ret).abs() < 1e-8,
            "value {} vs {}",
            est.value,
            -mean_ret
        );
    }

    #[test]
    fn kernel_backend_converges_to_empirical_as_h_vanishes() {
        use crate::chain::LevelBackend;
        use crate::smoothing::{Bandwidth, Kernel, KernelFamily, SmoothingPlan};
        let chain = higher_order_risk_objective(&hor_spec()).unwrap();
        let sample = Sample::from_1d(vec![9.1, 10.2, 11.9, 13.4, 8.8]).unwrap();
        let u = [11.0];
        let empirical = eval_composite(
            &chain,
            &ExpectationBackend::all_empirical(2),
            &sample,
            &u,
        )
        .unwrap();
        let mut last = f64::INFINITY;
        for h in [1e-1, 1e-3, 1e-6] {
            let backend = ExpectationBackend::smooth_innermost(
                2,
                LevelBackend::Kernel(
                    SmoothingPlan::new(
                        Kernel::new(KernelFamily::Epanechnikov),
                        Bandwidth::Fixed(h),
                    )
                    .unwrap(),
                ),
            );
            let v = eval_composite(&chain, &backend, &sample, &u).unwrap();
            let gap = (v - empirical).abs();
            assert!(gap < last, "h={h}: gap {gap} did not shrink");
            last = gap;
        }
        assert!(last < 1e-10, "residual gap {last}");
    }
}
