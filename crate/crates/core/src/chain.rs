//! Composite-functional data model: samples, stages, chains, and evaluation
//! under a pluggable per-level expectation backend.
//!
//! A chain is the ordered nesting f1, ..., f_{k+1}; evaluating it replaces
//! every expectation with the configured estimator (plain sample average,
//! kernel-smoothed average, or wavelet-density integral), using the full
//! sample at every level.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::smoothing::{self, SmoothingPlan};
use crate::sum::ExactSum;
use crate::wavelet::{self, Resolution, ScalingFunction, WaveletDensity};

/// A set of N observation vectors of common dimension m.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    data: Vec<f64>,
    n_obs: usize,
    dim: usize,
}

impl Sample {
    /// Build a sample from row-major data (`data.len() == n_obs * dim`).
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::BadParameters("sample dimension must be positive"));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::BadParameters(
                "sample length must be a positive multiple of the dimension",
            ));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteValue);
        }
        let n_obs = data.len() / dim;
        Ok(Self { data, n_obs, dim })
    }

    /// One-dimensional convenience constructor.
    pub fn from_1d(data: Vec<f64>) -> Result<Self> {
        Self::new(data, 1)
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn obs(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_obs(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Per-coordinate minimum.
    pub fn coord_min(&self, d: usize) -> f64 {
        self.iter_obs().map(|o| o[d]).fold(f64::INFINITY, f64::min)
    }

    /// Per-coordinate maximum.
    pub fn coord_max(&self, d: usize) -> f64 {
        self.iter_obs()
            .map(|o| o[d])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Per-coordinate mean (order independent).
    pub fn coord_mean(&self, d: usize) -> f64 {
        let mut s = ExactSum::new();
        for o in self.iter_obs() {
            s.add(o[d]);
        }
        s.value() / self.n_obs as f64
    }

    /// Per-coordinate sample standard deviation (denominator N - 1).
    pub fn coord_std(&self, d: usize) -> Result<f64> {
        if self.n_obs < 2 {
            return Err(Error::BadParameters(
                "standard deviation requires at least two observations",
            ));
        }
        let m = self.coord_mean(d);
        let mut s = ExactSum::new();
        for o in self.iter_obs() {
            let c = o[d] - m;
            s.add(c * c);
        }
        Ok(libm::sqrt(s.value() / (self.n_obs - 1) as f64))
    }

    /// Shift every observation by `c` componentwise.
    pub fn shifted(&self, c: &[f64]) -> Sample {
        let mut data = self.data.clone();
        for (i, x) in data.iter_mut().enumerate() {
            *x += c[i % self.dim];
        }
        Sample {
            data,
            n_obs: self.n_obs,
            dim: self.dim,
        }
    }

    /// Scale every observation by `t`.
    pub fn scaled(&self, t: f64) -> Sample {
        Sample {
            data: self.data.iter().map(|x| x * t).collect(),
            n_obs: self.n_obs,
            dim: self.dim,
        }
    }
}

/// `x -> max(0, coef * x + offset)^power`, the family of inner integrands with
/// exact piecewise-polynomial convolutions (power 1 or 2, scalar data only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedPower {
    pub coef: f64,
    pub offset: f64,
    pub power: u32,
}

type StageFn = Arc<dyn Fn(&[f64], &[f64], &[f64], &mut [f64]) + Send + Sync>;
type AnalyticFn = Arc<dyn Fn(&[f64], &[f64]) -> Option<TruncatedPower> + Send + Sync>;

/// One level f_j of the composition: a black-box evaluation
/// (u, eta, x) -> R^{out_dim} plus caller-declared structure flags.
///
/// The innermost stage has `in_dim == 0` and ignores eta.
#[derive(Clone)]
pub struct Stage {
    eval: StageFn,
    in_dim: usize,
    out_dim: usize,
    convex_in_x: bool,
    monotone_in_eta: bool,
    analytic: Option<AnalyticFn>,
}

impl core::fmt::Debug for Stage {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Stage")
            .field("in_dim", &self.in_dim)
            .field("out_dim", &self.out_dim)
            .field("convex_in_x", &self.convex_in_x)
            .field("monotone_in_eta", &self.monotone_in_eta)
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl Stage {
    pub fn new<F>(in_dim: usize, out_dim: usize, eval: F) -> Self
    where
        F: Fn(&[f64], &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(eval),
            in_dim,
            out_dim,
            convex_in_x: false,
            monotone_in_eta: false,
            analytic: None,
        }
    }

    /// Scalar-valued stage.
    pub fn scalar<F>(in_dim: usize, eval: F) -> Self
    where
        F: Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(in_dim, 1, move |u, eta, x, out| out[0] = eval(u, eta, x))
    }

    /// Declare convexity with respect to the observation argument.
    pub fn convex_in_x(mut self, yes: bool) -> Self {
        self.convex_in_x = yes;
        self
    }

    /// Declare monotone non-decrease with respect to the inner value.
    pub fn monotone_in_eta(mut self, yes: bool) -> Self {
        self.monotone_in_eta = yes;
        self
    }

    /// Register a closed-form description of x -> stage(u, eta, x) for scalar
    /// data, enabling exact convolutions instead of adaptive quadrature.
    pub fn with_analytic<F>(mut self, hook: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> Option<TruncatedPower> + Send + Sync + 'static,
    {
        self.analytic = Some(Arc::new(hook));
        self
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn is_convex_in_x(&self) -> bool {
        self.convex_in_x
    }

    pub fn is_monotone_in_eta(&self) -> bool {
        self.monotone_in_eta
    }

    pub(crate) fn analytic_form(&self, u: &[f64], eta: &[f64]) -> Option<TruncatedPower> {
        match (&self.analytic, self.out_dim) {
            (Some(hook), 1) => hook(u, eta),
            _ => None,
        }
    }

    /// Evaluate into `out` (length `out_dim`).
    pub fn eval_into(&self, u: &[f64], eta: &[f64], x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.out_dim);
        (self.eval)(u, eta, x, out);
    }

    /// Evaluate a scalar stage.
    pub fn eval_scalar(&self, u: &[f64], eta: &[f64], x: &[f64]) -> f64 {
        let mut out = [0.0];
        (self.eval)(u, eta, x, &mut out);
        out[0]
    }
}

/// The ordered stages f1, ..., f_{k+1} with their dimension signature.
#[derive(Debug, Clone)]
pub struct CompositeChain {
    stages: Vec<Stage>,
    decision_dim: usize,
    data_dim: usize,
}

impl CompositeChain {
    /// Validate and assemble a chain. `stages[0]` is the outermost map f1
    /// (scalar-valued), the last entry is the innermost f_{k+1} with
    /// `in_dim == 0`.
    pub fn new(stages: Vec<Stage>, decision_dim: usize, data_dim: usize) -> Result<Self> {
        if stages.len() < 2 {
            return Err(Error::EmptyChain);
        }
        if stages[0].out_dim != 1 {
            return Err(Error::DimensionMismatch {
                outer_in: 1,
                inner_out: stages[0].out_dim,
            });
        }
        let innermost = stages.last().unwrap();
        if innermost.in_dim != 0 {
            return Err(Error::DimensionMismatch {
                outer_in: innermost.in_dim,
                inner_out: 0,
            });
        }
        for pair in stages.windows(2) {
            if pair[0].in_dim != pair[1].out_dim {
                return Err(Error::DimensionMismatch {
                    outer_in: pair[0].in_dim,
                    inner_out: pair[1].out_dim,
                });
            }
        }
        Ok(Self {
            stages,
            decision_dim,
            data_dim,
        })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Number of nested expectations k (stage count minus one).
    pub fn k(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn decision_dim(&self) -> usize {
        self.decision_dim
    }

    pub fn data_dim(&self) -> usize {
        self.data_dim
    }
}

/// Validated chain constructor.
pub fn make_chain(
    stages: Vec<Stage>,
    decision_dim: usize,
    data_dim: usize,
) -> Result<CompositeChain> {
    CompositeChain::new(stages, decision_dim, data_dim)
}

/// Wavelet backend request: scaling family plus resolution choice.
#[derive(Debug, Clone)]
pub struct WaveletSpec {
    pub phi: ScalingFunction,
    pub resolution: Resolution,
}

/// Estimator choice for a single nesting level.
#[derive(Debug, Clone)]
pub enum LevelBackend {
    Empirical,
    Kernel(SmoothingPlan),
    Wavelet(WaveletSpec),
}

/// Per-level estimator selection; the smoothed index set J is the set of
/// non-empirical levels.
#[derive(Debug, Clone)]
pub struct ExpectationBackend {
    levels: Vec<LevelBackend>,
}

impl ExpectationBackend {
    pub fn new(levels: Vec<LevelBackend>) -> Self {
        Self { levels }
    }

    /// Plain sample averages at every level.
    pub fn all_empirical(n_levels: usize) -> Self {
        Self {
            levels: (0..n_levels).map(|_| LevelBackend::Empirical).collect(),
        }
    }

    /// Empirical everywhere except the innermost level.
    pub fn smooth_innermost(n_levels: usize, inner: LevelBackend) -> Self {
        let mut levels: Vec<LevelBackend> =
            (0..n_levels - 1).map(|_| LevelBackend::Empirical).collect();
        levels.push(inner);
        Self { levels }
    }

    pub fn levels(&self) -> &[LevelBackend] {
        &self.levels
    }

    /// Indices (1-based, outermost first) where smoothing is applied.
    pub fn smoothed_set(&self) -> Vec<usize> {
        self.levels
            .iter()
            .enumerate()
            .filter(|(_, l)| !matches!(l, LevelBackend::Empirical))
            .map(|(i, _)| i + 1)
            .collect()
    }
}

/// Backend with sample-dependent pieces resolved: rule bandwidths evaluated
/// and wavelet densities built. Reusable across many evaluations on the same
/// sample (for example inside a minimization loop).
#[derive(Debug, Clone)]
pub enum PreparedLevel {
    Empirical,
    Kernel(SmoothingPlan),
    Wavelet(WaveletDensity),
}

#[derive(Debug, Clone)]
pub struct PreparedBackend {
    levels: Vec<PreparedLevel>,
}

impl PreparedBackend {
    pub fn levels(&self) -> &[PreparedLevel] {
        &self.levels
    }
}

/// Resolve a backend against a sample.
pub fn prepare(backend: &ExpectationBackend, sample: &Sample) -> Result<PreparedBackend> {
    let levels = backend
        .levels
        .iter()
        .map(|level| match level {
            LevelBackend::Empirical => Ok(PreparedLevel::Empirical),
            LevelBackend::Kernel(plan) => Ok(PreparedLevel::Kernel(plan.resolved(sample)?)),
            LevelBackend::Wavelet(spec) => {
                let js = spec.resolution.resolve(sample)?;
                Ok(PreparedLevel::Wavelet(wavelet::wavelet_density(
                    sample, &spec.phi, &js,
                )?))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedBackend { levels })
}

/// Sample average of a stage at fixed decision and inner value:
/// (1/N) sum_i stage(u, eta, X_i), componentwise.
pub fn empirical_expectation(
    stage: &Stage,
    sample: &Sample,
    u: &[f64],
    eta: &[f64],
) -> Result<Vec<f64>> {
    let m = stage.out_dim;
    let mut acc: Vec<ExactSum> = (0..m).map(|_| ExactSum::new()).collect();
    let mut buf = alloc::vec![0.0; m];
    for x in sample.iter_obs() {
        stage.eval_into(u, eta, x, &mut buf);
        for (a, &v) in acc.iter_mut().zip(buf.iter()) {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue);
            }
            a.add(v);
        }
    }
    let n = sample.n_obs as f64;
    Ok(acc.iter().map(|a| a.value() / n).collect())
}

/// Evaluate the full nesting from the innermost stage outward under a
/// prepared backend.
pub fn eval_composite_prepared(
    chain: &CompositeChain,
    prepared: &PreparedBackend,
    sample: &Sample,
    u: &[f64],
) -> Result<f64> {
    if prepared.levels.len() != chain.stages.len() {
        return Err(Error::BadParameters("backend length must match the chain"));
    }
    if u.len() != chain.decision_dim {
        return Err(Error::BadParameters("decision vector has wrong dimension"));
    }
    if sample.dim() != chain.data_dim {
        return Err(Error::BadParameters(
            "sample dimension does not match the chain",
        ));
    }
    let mut eta: Vec<f64> = Vec::new();
    for (stage, level) in chain.stages.iter().zip(prepared.levels.iter()).rev() {
        eta = match level {
            PreparedLevel::Empirical => empirical_expectation(stage, sample, u, &eta)?,
            PreparedLevel::Kernel(plan) => {
                smoothing::smoothed_expectation(stage, sample, plan, u, &eta)?
            }
            PreparedLevel::Wavelet(density) => {
                wavelet::wavelet_expectation(stage, density, u, &eta)?
            }
        };
    }
    debug_assert_eq!(eta.len(), 1);
    let value = eta[0];
    if !value.is_finite() {
        return Err(Error::NonFiniteValue);
    }
    Ok(value)
}

/// Evaluate the composite functional: resolves the backend against the sample
/// and folds the nesting to the scalar outer value.
pub fn eval_composite(
    chain: &CompositeChain,
    backend: &ExpectationBackend,
    sample: &Sample,
    u: &[f64],
) -> Result<f64> {
    let prepared = prepare(backend, sample)?;
    eval_composite_prepared(chain, &prepared, sample, u)
}
