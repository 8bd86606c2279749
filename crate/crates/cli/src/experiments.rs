//! Seeded sample generation, the numerical-integration oracle for the true
//! optimal value, and the Monte Carlo bias/variance study protocol.

use std::sync::OnceLock;

use composite_risk_core::quad::{self, QuadConfig};
use composite_risk_core::seed;
use composite_risk_core::{
    bandwidth_rule, minimize_higher_order, minimize_scalar, resolution_rule, Bandwidth,
    ExpectationBackend, Kernel, KernelFamily, LevelBackend, Resolution, RiskSpec, Sample,
    ScalarDomain, ScalingFamily, ScalingFunction, SmoothingPlan, WaveletSpec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution as RandDistribution;
use serde::{Deserialize, Serialize};

/// Data-generating distributions of the simulation studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    /// Normal with mean and standard deviation `sd`; `sd == 0` is the point
    /// mass used by the oracle's degenerate special case.
    Normal { mean: f64, sd: f64 },
    /// Student t with `df` degrees of freedom shifted to `mean` (the t mean
    /// is zero for df > 1, so the shift is exact).
    ShiftedT { df: f64, mean: f64 },
}

impl Distribution {
    pub fn validate(&self) -> anyhow::Result<()> {
        match *self {
            Distribution::Normal { mean, sd } => {
                anyhow::ensure!(
                    mean.is_finite() && sd.is_finite() && sd >= 0.0,
                    "bad normal parameters"
                );
            }
            Distribution::ShiftedT { df, mean } => {
                anyhow::ensure!(
                    mean.is_finite() && df > 2.0,
                    "t distribution needs df > 2 for finite variance"
                );
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Normal { mean, .. } => mean,
            Distribution::ShiftedT { mean, .. } => mean,
        }
    }

    /// Standard deviation (used for bracket scaling).
    pub fn sd(&self) -> f64 {
        match *self {
            Distribution::Normal { sd, .. } => sd,
            Distribution::ShiftedT { df, .. } => (df / (df - 2.0)).sqrt(),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Distribution::Normal { mean, sd } => {
                if sd == 0.0 {
                    return 0.0;
                }
                let z = (x - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
            }
            Distribution::ShiftedT { df, mean } => {
                let t = x - mean;
                let log_norm = libm::lgamma(0.5 * (df + 1.0))
                    - libm::lgamma(0.5 * df)
                    - 0.5 * (df * std::f64::consts::PI).ln();
                (log_norm - 0.5 * (df + 1.0) * (1.0 + t * t / df).ln()).exp()
            }
        }
    }

    /// Deterministic sample of size n.
    pub fn sample(&self, n: usize, seed_value: u64) -> anyhow::Result<Sample> {
        self.validate()?;
        anyhow::ensure!(n >= 1, "sample size must be at least one");
        let mut rng = ChaCha8Rng::seed_from_u64(seed_value);
        let data: Vec<f64> = match *self {
            Distribution::Normal { mean, sd } => {
                let d = rand_distr::Normal::new(mean, sd)?;
                (0..n).map(|_| d.sample(&mut rng)).collect()
            }
            Distribution::ShiftedT { df, mean } => {
                let d = rand_distr::StudentT::new(df)?;
                (0..n).map(|_| d.sample(&mut rng) + mean).collect()
            }
        };
        Ok(Sample::from_1d(data)?)
    }
}

/// True optimal value and minimizer of the higher-order risk under the
/// population distribution, by adaptive quadrature inside a scalar search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub theta0: f64,
    pub u_star: f64,
}

/// E[(X - u)_+^q] by quadrature on [u, oo).
///
/// The half-line is cut into panels anchored at the distribution mean and
/// widening geometrically, so the density peak is always straddled by short
/// panels no matter how far u sits below it; each panel is integrated
/// adaptively. The far cutoff at 2^17 standardized units leaves a tail below
/// 1e-15 even for the heaviest t distribution in scope (df > 2).
pub fn expected_excess_power(dist: &Distribution, u: f64, q: f64) -> anyhow::Result<f64> {
    let cfg = QuadConfig {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        budget: 1_000_000,
    };
    let mean = dist.mean();
    let sd = dist.sd();
    let mut offsets: Vec<f64> = vec![0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0];
    let mut g = 8.0;
    while g <= 131_072.0 {
        offsets.push(g);
        g *= 2.0;
    }
    let mut knots: Vec<f64> = offsets
        .iter()
        .flat_map(|&o| [mean - sd * o, mean + sd * o])
        .filter(|&x| x > u)
        .collect();
    knots.push(u);
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    knots.dedup();

    let mut total = 0.0;
    for pair in knots.windows(2) {
        total += quad::integrate(|x| (x - u).powf(q) * dist.pdf(x), pair[0], pair[1], &cfg)?;
    }
    Ok(total)
}

/// theta0 = min_u { u + (1/alpha) E[(X - u)_+^q]^{1/q} } and its minimizer.
pub fn true_value_oracle(dist: &Distribution, risk: &RiskSpec) -> anyhow::Result<OracleResult> {
    risk.validate()?;
    dist.validate()?;
    let (q, alpha) = match risk.family {
        composite_risk_core::RiskFamily::HigherOrderInverse { q, alpha, .. } => (q, alpha),
        _ => anyhow::bail!("the oracle is defined for the higher-order inverse measure"),
    };
    if let Distribution::Normal { mean, sd: 0.0 } = *dist {
        // point mass: the risk of a constant is the constant
        return Ok(OracleResult {
            theta0: mean,
            u_star: mean,
        });
    }
    let mean = dist.mean();
    let sd = dist.sd();
    let domain = ScalarDomain {
        lo: mean - (2.0 / alpha) * sd - 1.0,
        hi: mean + (2.0 / alpha + 10.0) * sd + 1.0,
        tol: 1e-8,
    };
    let mut quad_error = None;
    let m = minimize_scalar(
        |u| match expected_excess_power(dist, u, q) {
            Ok(inner) => Ok(u + inner.max(0.0).powf(1.0 / q) / alpha),
            Err(e) => {
                quad_error.get_or_insert(e);
                Err(composite_risk_core::Error::QuadratureFailure)
            }
        },
        &domain,
    );
    match m {
        Ok(m) => Ok(OracleResult {
            theta0: m.value,
            u_star: m.u_star,
        }),
        Err(e) => match quad_error {
            Some(qe) => Err(qe),
            None => Err(e.into()),
        },
    }
}

/// Reading of the printed "N(10, 3)" parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleConvention {
    /// scale parameter is the standard deviation: sd = 3
    SigmaEqualsThree,
    /// scale parameter is the variance: sd = sqrt(3)
    VarianceEqualsThree,
}

/// Outcome of running the oracle under both readings of N(10, 3) and
/// adopting whichever reproduces the printed optimal pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConventionReport {
    pub selected: ScaleConvention,
    pub sigma_reading: OracleResult,
    pub variance_reading: OracleResult,
}

/// Published reference pair for the disambiguation.
pub const REFERENCE_THETA0: f64 = 15.5163;
pub const REFERENCE_U_STAR: f64 = 14.5048;

/// N(10, 3) is ambiguous between sd = 3 and variance = 3; evaluate the oracle
/// under both and adopt the reading matching the published optimal pair.
pub fn normal_scale_convention() -> anyhow::Result<&'static ConventionReport> {
    static REPORT: OnceLock<ConventionReport> = OnceLock::new();
    if let Some(r) = REPORT.get() {
        return Ok(r);
    }
    let risk = RiskSpec::higher_order(2.0, 0.05);
    let sigma_reading = true_value_oracle(
        &Distribution::Normal {
            mean: 10.0,
            sd: 3.0,
        },
        &risk,
    )?;
    let variance_reading = true_value_oracle(
        &Distribution::Normal {
            mean: 10.0,
            sd: 3.0_f64.sqrt(),
        },
        &risk,
    )?;
    let miss = |r: &OracleResult| {
        (r.theta0 - REFERENCE_THETA0).abs() + (r.u_star - REFERENCE_U_STAR).abs()
    };
    let selected = if miss(&sigma_reading) <= miss(&variance_reading) {
        ScaleConvention::SigmaEqualsThree
    } else {
        ScaleConvention::VarianceEqualsThree
    };
    Ok(REPORT.get_or_init(|| ConventionReport {
        selected,
        sigma_reading,
        variance_reading,
    }))
}

/// Estimator selection token: `plugin`, a kernel family with optional pinned
/// bandwidth (`uniform:h=0.5`), or a wavelet family with optional pinned
/// resolution (`wavelet:linear:j=2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorSpec {
    Plugin,
    Kernel {
        family: KernelFamily,
        bandwidth: Option<f64>,
    },
    Wavelet {
        family: ScalingFamily,
        resolution: Option<u32>,
    },
}

impl EstimatorSpec {
    pub fn parse(token: &str) -> anyhow::Result<Self> {
        let parts: Vec<&str> = token.split(':').collect();
        let parse_h = |s: &str| -> anyhow::Result<f64> {
            let v: f64 = s
                .strip_prefix("h=")
                .ok_or_else(|| anyhow::anyhow!("expected h=<float> in `{token}`"))?
                .parse()?;
            anyhow::ensure!(v > 0.0, "bandwidth must be positive");
            Ok(v)
        };
        let parse_j = |s: &str| -> anyhow::Result<u32> {
            Ok(s.strip_prefix("j=")
                .ok_or_else(|| anyhow::anyhow!("expected j=<int> in `{token}`"))?
                .parse()?)
        };
        match parts.as_slice() {
            ["plugin"] => Ok(Self::Plugin),
            ["uniform"] => Ok(Self::Kernel {
                family: KernelFamily::Uniform,
                bandwidth: None,
            }),
            ["epanechnikov"] => Ok(Self::Kernel {
                family: KernelFamily::Epanechnikov,
                bandwidth: None,
            }),
            ["gaussian"] => Ok(Self::Kernel {
                family: KernelFamily::Gaussian,
                bandwidth: None,
            }),
            ["uniform", h] => Ok(Self::Kernel {
                family: KernelFamily::Uniform,
                bandwidth: Some(parse_h(h)?),
            }),
            ["epanechnikov", h] => Ok(Self::Kernel {
                family: KernelFamily::Epanechnikov,
                bandwidth: Some(parse_h(h)?),
            }),
            ["gaussian", h] => Ok(Self::Kernel {
                family: KernelFamily::Gaussian,
                bandwidth: Some(parse_h(h)?),
            }),
            ["wavelet", fam] => Ok(Self::Wavelet {
                family: scaling_family(fam)?,
                resolution: None,
            }),
            ["wavelet", fam, j] => Ok(Self::Wavelet {
                family: scaling_family(fam)?,
                resolution: Some(parse_j(j)?),
            }),
            _ => anyhow::bail!("unknown estimator token `{token}`"),
        }
    }

    pub fn token(&self) -> String {
        match self {
            Self::Plugin => "plugin".into(),
            Self::Kernel { family, bandwidth } => {
                let base = kernel_name(*family);
                match bandwidth {
                    Some(h) => format!("{base}:h={h}"),
                    None => base.into(),
                }
            }
            Self::Wavelet { family, resolution } => {
                let base = match family {
                    ScalingFamily::LocallyLinear => "wavelet:linear",
                    ScalingFamily::LocallyQuadratic => "wavelet:quadratic",
                };
                match resolution {
                    Some(j) => format!("{base}:j={j}"),
                    None => base.into(),
                }
            }
        }
    }

    /// Backend smoothing the innermost level of a chain with `n_levels`
    /// stages; the plug-in variant is empirical everywhere.
    pub fn backend(&self, n_levels: usize) -> anyhow::Result<ExpectationBackend> {
        Ok(match self {
            Self::Plugin => ExpectationBackend::all_empirical(n_levels),
            Self::Kernel { family, bandwidth } => {
                let bw = match bandwidth {
                    Some(h) => Bandwidth::Fixed(*h),
                    None => Bandwidth::Rule,
                };
                ExpectationBackend::smooth_innermost(
                    n_levels,
                    LevelBackend::Kernel(SmoothingPlan::new(Kernel::new(*family), bw)?),
                )
            }
            Self::Wavelet { family, resolution } => {
                let resolution = match resolution {
                    Some(j) => Resolution::Fixed(*j),
                    None => Resolution::Universal,
                };
                ExpectationBackend::smooth_innermost(
                    n_levels,
                    LevelBackend::Wavelet(WaveletSpec {
                        phi: ScalingFunction::new(*family),
                        resolution,
                    }),
                )
            }
        })
    }

    pub fn kernel_name(&self) -> Option<&'static str> {
        match self {
            Self::Kernel { family, .. } => Some(kernel_name(*family)),
            _ => None,
        }
    }
}

fn scaling_family(s: &str) -> anyhow::Result<ScalingFamily> {
    match s {
        "linear" => Ok(ScalingFamily::LocallyLinear),
        "quadratic" => Ok(ScalingFamily::LocallyQuadratic),
        other => anyhow::bail!("unknown scaling family `{other}`"),
    }
}

fn kernel_name(f: KernelFamily) -> &'static str {
    match f {
        KernelFamily::Uniform => "uniform",
        KernelFamily::Epanechnikov => "epanechnikov",
        KernelFamily::Gaussian => "gaussian",
    }
}

/// Serializable distribution description (mirrors the CLI flags).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum DistributionConfig {
    /// `scale` is the standard deviation.
    Normal {
        mean: f64,
        scale: f64,
    },
    T {
        df: f64,
        mean: f64,
    },
}

impl DistributionConfig {
    pub fn to_distribution(self) -> Distribution {
        match self {
            DistributionConfig::Normal { mean, scale } => Distribution::Normal { mean, sd: scale },
            DistributionConfig::T { df, mean } => Distribution::ShiftedT { df, mean },
        }
    }

    pub fn family_label(&self) -> &'static str {
        match self {
            DistributionConfig::Normal { .. } => "normal",
            DistributionConfig::T { .. } => "t",
        }
    }

    pub fn df(&self) -> Option<f64> {
        match self {
            DistributionConfig::T { df, .. } => Some(*df),
            _ => None,
        }
    }
}

/// Higher-order risk parameters of a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskConfig {
    pub q: f64,
    pub alpha: f64,
}

impl RiskConfig {
    pub fn to_spec(self) -> RiskSpec {
        RiskSpec::higher_order(self.q, self.alpha)
    }
}

fn default_replications() -> usize {
    500
}

/// Full description of a Monte Carlo bias study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dist: DistributionConfig,
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// Estimator tokens, e.g. ["plugin", "uniform", "wavelet:quadratic:j=1"].
    pub estimators: Vec<String>,
    pub risk: RiskConfig,
    pub master_seed: u64,
    /// Distinguishes replication streams of different studies under one
    /// master seed.
    #[serde(default)]
    pub study_tag: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> anyhow::Result<Vec<EstimatorSpec>> {
        anyhow::ensure!(self.replications >= 2, "at least two replications required");
        anyhow::ensure!(
            self.sample_sizes.iter().all(|&n| n >= 2),
            "sample sizes must be at least two"
        );
        anyhow::ensure!(!self.sample_sizes.is_empty(), "no sample sizes given");
        anyhow::ensure!(!self.estimators.is_empty(), "no estimators given");
        self.dist.to_distribution().validate()?;
        self.risk.to_spec().validate()?;
        self.estimators
            .iter()
            .map(|t| EstimatorSpec::parse(t))
            .collect()
    }
}

/// One (N, estimator) result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub n: usize,
    pub estimator: String,
    pub kernel: Option<String>,
    /// Mean bandwidth across replications for kernel estimators under the
    /// rule, or the pinned value.
    pub bandwidth: Option<f64>,
    pub resolution: Option<u32>,
    pub bias: f64,
    pub variance: f64,
    /// Mean estimate across replications (bias + theta0).
    pub mean_estimate: f64,
}

/// Paired ordering bookkeeping: smoothed estimate minus plug-in estimate on
/// the same sample, tracked across every replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct OrderingStats {
    pub pairs: usize,
    /// Count of pairs with smoothed < plug-in - 1e-6.
    pub violations: usize,
    /// Most negative gap observed (0 if none negative).
    pub min_gap: f64,
}

impl OrderingStats {
    pub fn absorb(&mut self, other: &OrderingStats) {
        self.pairs += other.pairs;
        self.violations += other.violations;
        self.min_gap = self.min_gap.min(other.min_gap);
    }
}

/// Complete study output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasStudy {
    pub config: ExperimentConfig,
    pub theta0: f64,
    pub u_star: f64,
    pub scale_note: Option<String>,
    /// All estimators see the same sample within a replication; the a.s.
    /// ordering theorems are checked pair by pair, not on averages.
    pub pairing_note: String,
    pub rows: Vec<BiasRow>,
    pub ordering: OrderingStats,
}

struct RepOutcome {
    theta_hats: Vec<f64>,
    bandwidths: Vec<Option<f64>>,
    plugin_value: f64,
}

fn thread_pool() -> anyhow::Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("COMPOSITE_RISK_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow::anyhow!("COMPOSITE_RISK_THREADS must be a positive integer"))?;
        builder = builder.num_threads(n.max(1));
    }
    Ok(builder.build()?)
}

/// Run the Monte Carlo protocol: for every sample size and replication draw
/// one sample, evaluate every estimator on it, and aggregate bias and
/// variance against the quadrature oracle. Any replication failure aborts the
/// study; dropped replications would bias the bias estimate.
pub fn run_bias_study(config: &ExperimentConfig) -> anyhow::Result<BiasStudy> {
    let specs = config.validate()?;
    let dist = config.dist.to_distribution();
    let risk = config.risk.to_spec();
    let oracle = true_value_oracle(&dist, &risk)?;

    let scale_note = match config.dist {
        DistributionConfig::Normal { .. } => {
            let conv = normal_scale_convention()?;
            Some(format!(
                "N(10,3) read with {}: sigma reading gives theta0={:.4}, variance reading gives theta0={:.4}",
                match conv.selected {
                    ScaleConvention::SigmaEqualsThree => "scale = sigma = 3",
                    ScaleConvention::VarianceEqualsThree => "variance = 3 (sigma = sqrt(3))",
                },
                conv.sigma_reading.theta0,
                conv.variance_reading.theta0
            ))
        }
        DistributionConfig::T { .. } => None,
    };

    let pool = thread_pool()?;
    let mut rows = Vec::new();
    let mut ordering = OrderingStats::default();

    for &n in &config.sample_sizes {
        let outcomes: Vec<RepOutcome> = pool.install(|| {
            use rayon::prelude::*;
            (0..config.replications)
                .into_par_iter()
                .map(|r| -> anyhow::Result<RepOutcome> {
                    let rep_seed =
                        seed::derive(config.master_seed, &[config.study_tag, n as u64, r as u64]);
                    let sample = dist.sample(n, rep_seed)?;
                    let plugin_backend = ExpectationBackend::all_empirical(2);
                    let plugin = minimize_higher_order(&risk, &plugin_backend, &sample, 1e-8)?;
                    let mut theta_hats = Vec::with_capacity(specs.len());
                    let mut bandwidths = Vec::with_capacity(specs.len());
                    for spec in &specs {
                        let (value, h) = match spec {
                            EstimatorSpec::Plugin => (plugin.value, None),
                            _ => {
                                let backend = spec.backend(2)?;
                                let est = minimize_higher_order(&risk, &backend, &sample, 1e-8)?;
                                let h = match spec {
                                    EstimatorSpec::Kernel { bandwidth, .. } => match bandwidth {
                                        Some(h) => Some(*h),
                                        None => Some(bandwidth_rule(&sample)?),
                                    },
                                    _ => None,
                                };
                                (est.value, h)
                            }
                        };
                        theta_hats.push(value);
                        bandwidths.push(h);
                    }
                    Ok(RepOutcome {
                        theta_hats,
                        bandwidths,
                        plugin_value: plugin.value,
                    })
                })
                .collect::<anyhow::Result<Vec<_>>>()
        })?;

        // Aggregate in replication order so worker count cannot change results.
        for (e_idx, spec) in specs.iter().enumerate() {
            let mut sum = composite_risk_core::sum::ExactSum::new();
            for o in &outcomes {
                sum.add(o.theta_hats[e_idx]);
            }
            let mean = sum.value() / outcomes.len() as f64;
            let mut sq = composite_risk_core::sum::ExactSum::new();
            for o in &outcomes {
                let d = o.theta_hats[e_idx] - mean;
                sq.add(d * d);
            }
            let variance = sq.value() / (outcomes.len() - 1) as f64;

            let bandwidth = if matches!(spec, EstimatorSpec::Kernel { .. }) {
                let mut hsum = composite_risk_core::sum::ExactSum::new();
                for o in &outcomes {
                    hsum.add(o.bandwidths[e_idx].unwrap_or(0.0));
                }
                Some(hsum.value() / outcomes.len() as f64)
            } else {
                None
            };
            let resolution = match spec {
                EstimatorSpec::Wavelet { resolution, .. } => {
                    Some(resolution.unwrap_or(resolution_rule(n)?))
                }
                _ => None,
            };

            if !matches!(spec, EstimatorSpec::Plugin) {
                let mut stats = OrderingStats::default();
                for o in &outcomes {
                    let gap = o.theta_hats[e_idx] - o.plugin_value;
                    stats.pairs += 1;
                    stats.min_gap = stats.min_gap.min(gap);
                    if gap < -1e-6 {
                        stats.violations += 1;
                    }
                }
                ordering.absorb(&stats);
            }

            rows.push(BiasRow {
                n,
                estimator: spec.token(),
                kernel: spec.kernel_name().map(str::to_owned),
                bandwidth,
                resolution,
                bias: mean - oracle.theta0,
                variance,
                mean_estimate: mean,
            });
        }
    }

    Ok(BiasStudy {
        config: config.clone(),
        theta0: oracle.theta0,
        u_star: oracle.u_star,
        scale_note,
        pairing_note:
            "all estimators are evaluated on the same sample within a replication (paired \
             comparison; required by the almost-sure ordering checks)"
                .into(),
        rows,
        ordering,
    })
}
