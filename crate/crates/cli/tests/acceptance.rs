//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//!
//! Criteria 2, 3, and 10 compare against published reference tables cell by
//! cell. Three groups of published cells are not reproducible by a faithful
//! implementation and are expected to fail honestly:
//!   - the printed Gaussian kernel rows of the normal table are bit-identical
//!     to the printed Uniform rows; a standard Gaussian kernel at the stated
//!     bandwidth rule smooths three times harder and lands near zero bias;
//!   - the printed t-table kernel biases at N in {100, 200} correspond to a
//!     smaller bandwidth than the stated rule (the same rule reproduces the
//!     normal table exactly);
//!   - a handful of published variance cells scatter more than 25% around
//!     their own exact order-statistic values (the published duplicate runs
//!     differ from each other by up to 29% on the same configuration).

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use composite_risk_cli::experiments::{
    normal_scale_convention, true_value_oracle, Distribution, ScaleConvention,
};
use composite_risk_cli::fixtures::{self, ReproOutcome};
use composite_risk_core::quad;
use composite_risk_core::seed;
use composite_risk_core::{
    bandwidth_rule, empirical_expectation, eval_composite, kernel_moment, make_chain,
    minimize_higher_order, resolution_rule, smoothed_expectation, wavelet_density,
    wavelet_expectation, Bandwidth, ExpectationBackend, Kernel, KernelFamily, LevelBackend,
    Resolution, RiskSpec, Sample, ScalingFunction, SmoothingPlan, Stage, TruncatedPower,
    WaveletSpec,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const REPS: usize = 500;

fn normal_repro() -> &'static (ReproOutcome, Duration) {
    static OUT: OnceLock<(ReproOutcome, Duration)> = OnceLock::new();
    OUT.get_or_init(|| {
        let start = Instant::now();
        let out = fixtures::repro_normal(REPS, fixtures::DEFAULT_SEED).expect("normal repro");
        (out, start.elapsed())
    })
}

fn t_repro() -> &'static (ReproOutcome, Duration) {
    static OUT: OnceLock<(ReproOutcome, Duration)> = OnceLock::new();
    OUT.get_or_init(|| {
        let start = Instant::now();
        let out = fixtures::repro_t(REPS, fixtures::DEFAULT_SEED).expect("t repro");
        (out, start.elapsed())
    })
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion} failed: {detail}");
}

fn failing_cells(out: &ReproOutcome, tables: &[&str]) -> Vec<String> {
    out.cells
        .iter()
        .filter(|c| tables.contains(&c.table.as_str()) && !c.pass)
        .map(|c| {
            format!(
                "{} N={} df={:?} {}: paper {:.4} computed {:.4} tol {:.4}",
                c.table, c.n, c.df, c.column, c.paper, c.computed, c.tol
            )
        })
        .collect()
}

#[test]
fn criterion_01_oracle_reproduction() {
    let conv = normal_scale_convention().expect("convention");
    let selected = match conv.selected {
        ScaleConvention::SigmaEqualsThree => conv.sigma_reading,
        ScaleConvention::VarianceEqualsThree => conv.variance_reading,
    };
    // time a fresh oracle run, separate from the cached disambiguation
    let start = Instant::now();
    let fresh = true_value_oracle(
        &Distribution::Normal {
            mean: 10.0,
            sd: 3.0_f64.sqrt(),
        },
        &RiskSpec::higher_order(2.0, 0.05),
    )
    .expect("oracle");
    let elapsed = start.elapsed();
    let ok = (selected.theta0 - 15.5163).abs() < 1e-3
        && (selected.u_star - 14.5048).abs() < 1e-3
        && (fresh.theta0 - selected.theta0).abs() < 1e-9
        && elapsed < Duration::from_secs(1);
    report(
        "C1 oracle-reproduction",
        ok,
        &format!(
            "theta0={:.6} u_star={:.6} convention={:?} runtime={elapsed:?}",
            selected.theta0, selected.u_star, conv.selected
        ),
    );
}

#[test]
fn criterion_02_normal_table_reproduction() {
    let (out, elapsed) = normal_repro();
    assert!(
        *elapsed < Duration::from_secs(600),
        "normal repro took {elapsed:?}"
    );
    let fails = failing_cells(out, &["normal-kernel", "normal-wavelet"]);
    let detail = format!(
        "{}/{} cells within tolerance, runtime {elapsed:?}{}",
        out.cells_passing(),
        out.cells.len(),
        if fails.is_empty() {
            String::new()
        } else {
            format!(
                "; failing cells (all in the duplicated printed Gaussian rows): {}",
                fails.join(" | ")
            )
        }
    );
    report("C2 normal-table", fails.is_empty(), &detail);
}

#[test]
fn criterion_03_t_table_reproduction() {
    let (out, elapsed) = t_repro();
    // the named hard requirement: the df=60, N=500 sign flip
    let wavelet_bias = out
        .computed("t-wavelet", 500, Some(60.0), "bias-wavelet")
        .expect("wavelet cell");
    let plugin_bias = out
        .computed("t-wavelet", 500, Some(60.0), "bias-plug-in[wavelet-table]")
        .expect("plugin cell");
    let sign_flip = wavelet_bias > 0.0 && plugin_bias < 0.0;
    let fails = failing_cells(out, &["t-wavelet", "t-uniform", "t-epanechnikov"]);
    let detail = format!(
        "{}/{} cells within tolerance; sign flip df=60 N=500: wavelet {wavelet_bias:.4} vs plug-in {plugin_bias:.4}; runtime {elapsed:?}{}",
        out.cells_passing(),
        out.cells.len(),
        if fails.is_empty() {
            String::new()
        } else {
            format!("; failing cells: {}", fails.join(" | "))
        }
    );
    report("C3 t-tables", sign_flip && fails.is_empty(), &detail);
}

#[test]
fn criterion_04_ordering_theorems_hard_invariants() {
    let (normal, _) = normal_repro();
    let (t, _) = t_repro();
    let pairs = normal.ordering.pairs + t.ordering.pairs;
    let violations = normal.ordering.violations + t.ordering.violations;
    let min_gap = normal.ordering.min_gap.min(t.ordering.min_gap);
    let ok = pairs >= 10_000 && violations == 0;
    report(
        "C4 ordering-invariants",
        ok,
        &format!("pairs={pairs} violations={violations} min_gap={min_gap:.3e}"),
    );
}

#[test]
fn criterion_05_bandwidth_bound_and_halving() {
    let risk = RiskSpec::higher_order(2.0, 0.05);
    let dist = Distribution::Normal {
        mean: 10.0,
        sd: 3.0_f64.sqrt(),
    };
    let kernels = [
        KernelFamily::Uniform,
        KernelFamily::Epanechnikov,
        KernelFamily::Gaussian,
    ];
    let inv_alpha = 20.0;
    let mut bound_violations = 0usize;
    let mut mono_violations = 0usize;
    let mut checked = 0usize;
    for i in 0..1000u64 {
        let sample = dist.sample(100, seed::derive(0xB0_0D, &[i])).unwrap();
        let plugin =
            minimize_higher_order(&risk, &ExpectationBackend::all_empirical(2), &sample, 1e-10)
                .unwrap();
        let h_rule = bandwidth_rule(&sample).unwrap();
        let max_x = sample.coord_max(0);
        for fam in kernels {
            let kernel = Kernel::new(fam);
            let radius = kernel.quadrature_radius();
            let mut last_gap = f64::INFINITY;
            for halving in 0..=4u32 {
                let h = h_rule / f64::from(1u32 << halving);
                let plan = SmoothingPlan::new(kernel, Bandwidth::Fixed(h)).unwrap();
                let backend = ExpectationBackend::smooth_innermost(2, LevelBackend::Kernel(plan));
                let est = minimize_higher_order(&risk, &backend, &sample, 1e-10).unwrap();
                let gap = est.value - plugin.value;
                if halving == 0 {
                    // Lipschitz modulus of the inner truncated square over the
                    // kernel-extended sample range, anchored at the plug-in
                    // minimizer; the root of the outer map contributes the
                    // exponent 1/2.
                    let ell = 2.0 * (max_x + radius * h - plugin.u_star).max(0.0);
                    let m1 = kernel_moment(&kernel, 1.0).unwrap();
                    let bound = inv_alpha * (ell * h * m1).sqrt();
                    checked += 1;
                    if gap > bound + 1e-6 {
                        bound_violations += 1;
                    }
                }
                if gap > last_gap + 1e-9 {
                    mono_violations += 1;
                }
                last_gap = gap;
            }
        }
    }
    let ok = bound_violations == 0 && mono_violations == 0 && checked == 3000;
    report(
        "C5 bandwidth-bound",
        ok,
        &format!(
            "bound checks={checked} violations={bound_violations} halving-monotonicity violations={mono_violations}"
        ),
    );
}

#[test]
fn criterion_06_wavelet_basis_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let families = [ScalingFunction::linear(), ScalingFunction::quadratic()];
    // (w1) and (w2) at 1000 random points in [-10, 10]
    for phi in families {
        for _ in 0..1000 {
            let x: f64 = rng.random_range(-10.0..10.0);
            let mut unity = 0.0;
            let mut first = 0.0;
            for l in (x - 3.0).floor() as i64..=(x + 3.0).ceil() as i64 {
                let v = phi.eval(x - l as f64);
                unity += v;
                first += l as f64 * v;
            }
            assert!((unity - 1.0).abs() < 1e-12, "(w1) at {x}: {unity}");
            assert!((x - first).abs() < 1e-12, "(w2) at {x}: {first}");
        }
    }
    // 100 random samples: nonnegative on a 10^4 grid, unit mass to 1e-8
    for case in 0..100 {
        let n = rng.random_range(5..=300);
        let (mu, sd): (f64, f64) = (rng.random_range(-5.0..15.0), rng.random_range(0.5..4.0));
        let dist = if case % 3 == 0 {
            Distribution::ShiftedT {
                df: rng.random_range(3.0..40.0),
                mean: mu,
            }
        } else {
            Distribution::Normal { mean: mu, sd }
        };
        let sample = dist.sample(n, seed::derive(600, &[case])).unwrap();
        let phi = families[case as usize % 2];
        let j = resolution_rule(n).unwrap();
        let density = wavelet_density(&sample, &phi, &[j]).unwrap();
        let (lo_idx, hi_idx) = density.window(0);
        let s = density.basis().scale(0);
        let a = phi.support_radius();
        let lo = (lo_idx as f64 - a) / s;
        let hi = (hi_idx as f64 + a) / s;
        for i in 0..10_000 {
            let x = lo + (hi - lo) * i as f64 / 9_999.0;
            assert!(
                density.density_at(&[x]) >= 0.0,
                "negative density at {x} (case {case})"
            );
        }
        // Quadrature over panels aligned with the spline breakpoints (half
        // lattice cells), where the integrand is polynomial and the Gauss
        // rule is exact.
        let mut mass = 0.0;
        let m_lo = (2.0 * s * lo).floor() as i64;
        let m_hi = (2.0 * s * hi).ceil() as i64;
        for m in m_lo..m_hi {
            mass += quad::fixed_gl5(
                |x| density.density_at(&[x]),
                m as f64 / (2.0 * s),
                (m + 1) as f64 / (2.0 * s),
            );
        }
        assert!(
            (mass - 1.0).abs() < 1e-8,
            "case {case}: mass {mass} (n={n}, j={j})"
        );
    }
    report(
        "C6 wavelet-identities",
        true,
        "(w1)/(w2) at 1000 points to 1e-12; 100 densities nonnegative with unit mass to 1e-8",
    );
}

#[test]
fn criterion_07_affine_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let kernels = [
        KernelFamily::Uniform,
        KernelFamily::Epanechnikov,
        KernelFamily::Gaussian,
    ];
    for case in 0..100u64 {
        let n = rng.random_range(2..=200);
        let data: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let sample = Sample::from_1d(data).unwrap();
        let a: f64 = rng.random_range(-3.0..3.0);
        let b: f64 = rng.random_range(-3.0..3.0);
        let stage = Stage::scalar(0, move |_, _, x| a + b * x[0]);
        let empirical = empirical_expectation(&stage, &sample, &[], &[]).unwrap()[0];
        for fam in kernels {
            let plan = match bandwidth_rule(&sample) {
                Ok(h) => SmoothingPlan::new(Kernel::new(fam), Bandwidth::Fixed(h)).unwrap(),
                Err(_) => continue,
            };
            let smoothed = smoothed_expectation(&stage, &sample, &plan, &[], &[]).unwrap()[0];
            assert!(
                (smoothed - empirical).abs() < 1e-10,
                "case {case} {fam:?}: {smoothed} vs {empirical}"
            );
        }
        for phi in [ScalingFunction::linear(), ScalingFunction::quadratic()] {
            let j = resolution_rule(n).unwrap();
            let density = wavelet_density(&sample, &phi, &[j]).unwrap();
            let v = wavelet_expectation(&stage, &density, &[], &[]).unwrap()[0];
            assert!(
                (v - empirical).abs() < 1e-10,
                "case {case} {:?}: {v} vs {empirical}",
                phi.family
            );
        }
    }
    report(
        "C7 affine-exactness",
        true,
        "smoothed and wavelet expectations of affine stages equal the empirical mean to 1e-10 on 100 samples",
    );
}

#[test]
fn criterion_08_coherence_properties() {
    let risk = RiskSpec::higher_order(2.0, 0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let tol_opt = 1e-12;
    for case in 0..100u64 {
        let n = rng.random_range(5..=150);
        let spread: f64 = rng.random_range(0.5..3.0);
        let data: Vec<f64> = (0..n)
            .map(|_| 10.0 + spread * rng.random_range(-3.0..3.0))
            .collect();
        let sample = Sample::from_1d(data).unwrap();

        let backends: Vec<(&str, ExpectationBackend)> = vec![
            ("plugin", ExpectationBackend::all_empirical(2)),
            (
                "uniform",
                ExpectationBackend::smooth_innermost(
                    2,
                    LevelBackend::Kernel(
                        SmoothingPlan::new(Kernel::new(KernelFamily::Uniform), Bandwidth::Rule)
                            .unwrap(),
                    ),
                ),
            ),
            (
                "epanechnikov",
                ExpectationBackend::smooth_innermost(
                    2,
                    LevelBackend::Kernel(
                        SmoothingPlan::new(
                            Kernel::new(KernelFamily::Epanechnikov),
                            Bandwidth::Rule,
                        )
                        .unwrap(),
                    ),
                ),
            ),
            (
                "gaussian",
                ExpectationBackend::smooth_innermost(
                    2,
                    LevelBackend::Kernel(
                        SmoothingPlan::new(Kernel::new(KernelFamily::Gaussian), Bandwidth::Rule)
                            .unwrap(),
                    ),
                ),
            ),
            (
                "wavelet",
                ExpectationBackend::smooth_innermost(
                    2,
                    LevelBackend::Wavelet(WaveletSpec {
                        phi: ScalingFunction::quadratic(),
                        resolution: Resolution::Universal,
                    }),
                ),
            ),
        ];

        for (name, backend) in &backends {
            // The wavelet lattice is anchored at zero, so its estimator is
            // translation-equivariant exactly on dyadic shifts; integer
            // shifts are dyadic at every resolution. Kernels and sample
            // averages are equivariant for arbitrary shifts.
            let c: f64 = if *name == "wavelet" {
                rng.random_range(-5..=5) as f64
            } else {
                rng.random_range(-5.0..5.0)
            };
            let base = minimize_higher_order(&risk, backend, &sample, tol_opt).unwrap();
            let shifted =
                minimize_higher_order(&risk, backend, &sample.shifted(&[c]), tol_opt).unwrap();
            assert!(
                (shifted.value - base.value - c).abs() < 1e-8,
                "case {case} {name}: shift by {c}: {} vs {} + {c}",
                shifted.value,
                base.value
            );
        }

        // positive homogeneity of the plug-in estimator
        let t: f64 = rng.random_range(0.2..4.0);
        let backend = ExpectationBackend::all_empirical(2);
        let base = minimize_higher_order(&risk, &backend, &sample, tol_opt).unwrap();
        let scaled = minimize_higher_order(&risk, &backend, &sample.scaled(t), tol_opt).unwrap();
        assert!(
            (scaled.value - t * base.value).abs() < 1e-10,
            "case {case}: scale by {t}: {} vs {}",
            scaled.value,
            t * base.value
        );
    }
    report(
        "C8 coherence",
        true,
        "translation equivariance (1e-8, dyadic shifts for the zero-anchored wavelet lattice) and plug-in positive homogeneity (1e-10) on 100 samples",
    );
}

// ---- criterion 9: independent straight-line transcription oracle ----

struct RandomChainCase {
    chain: composite_risk_core::CompositeChain,
    stages_naive: Vec<NaiveStage>,
    sample: Sample,
    u: Vec<f64>,
}

#[derive(Clone)]
struct NaiveStage {
    in_dim: usize,
    out_dim: usize,
    coeff_const: Vec<f64>,
    coeff_x: Vec<Vec<f64>>,
    coeff_eta: Vec<Vec<f64>>,
    coeff_u: Vec<Vec<f64>>,
}

impl NaiveStage {
    fn eval(&self, u: &[f64], eta: &[f64], x: &[f64]) -> Vec<f64> {
        (0..self.out_dim)
            .map(|c| {
                let lin_x: f64 = self.coeff_x[c].iter().zip(x).map(|(w, v)| w * v).sum();
                let lin_eta: f64 = self.coeff_eta[c].iter().zip(eta).map(|(w, v)| w * v).sum();
                let lin_u: f64 = self.coeff_u[c].iter().zip(u).map(|(w, v)| w * v).sum();
                self.coeff_const[c] + lin_x + libm::tanh(lin_eta) + libm::sin(lin_u + 0.3 * lin_x)
            })
            .collect()
    }
}

/// Literal nested-sum transcription: the average at each level is recomputed
/// inside the enclosing level's loop, never hoisted.
fn naive_level(stages: &[NaiveStage], sample: &Sample, u: &[f64], level: usize) -> Vec<f64> {
    let stage = &stages[level];
    let mut acc = vec![0.0; stage.out_dim];
    for i in 0..sample.n_obs() {
        let eta = if level + 1 < stages.len() {
            naive_level(stages, sample, u, level + 1)
        } else {
            Vec::new()
        };
        let v = stage.eval(u, &eta, sample.obs(i));
        for (a, b) in acc.iter_mut().zip(&v) {
            *a += b;
        }
    }
    for a in &mut acc {
        *a /= sample.n_obs() as f64;
    }
    acc
}

fn random_chain_case(rng: &mut ChaCha8Rng) -> RandomChainCase {
    let k = *[1usize, 1, 2, 2, 3].get(rng.random_range(0..5)).unwrap();
    let data_dim = rng.random_range(1..=2);
    let decision_dim = rng.random_range(1..=2);
    // dims m_0=1, m_1..m_k in {1,2}, innermost in_dim 0
    let mut dims = vec![1usize];
    for _ in 0..k {
        dims.push(rng.random_range(1..=2));
    }
    let n_max = if k == 3 { 30 } else { 50 };
    let n = rng.random_range(1..=n_max);
    let data: Vec<f64> = (0..n * data_dim)
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    let sample = Sample::new(data, data_dim).unwrap();
    let u: Vec<f64> = (0..decision_dim)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();

    let mut stages_naive = Vec::new();
    for j in 0..=k {
        let out_dim = dims[j];
        let in_dim = if j == k { 0 } else { dims[j + 1] };
        let coeffs = |rng: &mut ChaCha8Rng, len: usize, scale: f64| -> Vec<f64> {
            (0..len).map(|_| rng.random_range(-scale..scale)).collect()
        };
        stages_naive.push(NaiveStage {
            in_dim,
            out_dim,
            coeff_const: coeffs(rng, out_dim, 1.0),
            coeff_x: (0..out_dim).map(|_| coeffs(rng, data_dim, 0.8)).collect(),
            coeff_eta: (0..out_dim).map(|_| coeffs(rng, in_dim, 0.8)).collect(),
            coeff_u: (0..out_dim)
                .map(|_| coeffs(rng, decision_dim, 0.8))
                .collect(),
        });
    }
    let stages: Vec<Stage> = stages_naive
        .iter()
        .map(|ns| {
            let ns = ns.clone();
            Stage::new(ns.in_dim, ns.out_dim, move |u, eta, x, out| {
                out.copy_from_slice(&ns.eval(u, eta, x));
            })
        })
        .collect();
    let chain = make_chain(stages, decision_dim, data_dim).unwrap();
    RandomChainCase {
        chain,
        stages_naive,
        sample,
        u,
    }
}

#[test]
fn criterion_09_empirical_composite_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let c = random_chain_case(&mut rng);
        let backend = ExpectationBackend::all_empirical(c.chain.stages().len());
        let fast = eval_composite(&c.chain, &backend, &c.sample, &c.u).unwrap();
        let naive = naive_level(&c.stages_naive, &c.sample, &c.u, 0)[0];
        let rel = (fast - naive).abs() / naive.abs().max(1.0);
        worst = worst.max(rel);
        assert!(
            rel <= 1e-12,
            "case {case}: fast {fast} vs naive {naive} (rel {rel:.2e})"
        );
    }
    report(
        "C9 straight-line-transcription",
        true,
        &format!("200 random chains (k <= 3), worst relative difference {worst:.2e}"),
    );
}

#[test]
fn criterion_10_consistency_trend() {
    let (out, _) = normal_repro();
    let failing: Vec<String> = out
        .trends
        .iter()
        .filter(|t| !t.pass)
        .map(|t| {
            format!(
                "{} {}: |bias| {:.4} (N=100) -> {:.4} (N=500)",
                t.table, t.column, t.abs_bias_n100, t.abs_bias_n500
            )
        })
        .collect();
    let detail = format!(
        "{}/{} estimator columns shrink in |bias| from N=100 to N=500{}",
        out.trends.iter().filter(|t| t.pass).count(),
        out.trends.len(),
        if failing.is_empty() {
            String::new()
        } else {
            format!(
                "; failing: {} (the standard Gaussian kernel over-smooths into a small positive bias at N=500)",
                failing.join(" | ")
            )
        }
    );
    report("C10 consistency-trend", failing.is_empty(), &detail);
}

// Cross-check of the quadrature oracle against a brute-force Monte Carlo
// estimate at N = 10^7 (the plug-in value is nearly unbiased at that size).
#[test]
fn oracle_cross_check_standard_normal_monte_carlo() {
    let risk = RiskSpec::higher_order(2.0, 0.05);
    let dist = Distribution::Normal { mean: 0.0, sd: 1.0 };
    let quadrature = true_value_oracle(&dist, &risk).unwrap();
    let sample = dist.sample(10_000_000, 271_828).unwrap();
    let mc =
        minimize_higher_order(&risk, &ExpectationBackend::all_empirical(2), &sample, 1e-8).unwrap();
    assert!(
        (quadrature.theta0 - mc.value).abs() < 0.01,
        "quadrature {} vs monte carlo {}",
        quadrature.theta0,
        mc.value
    );
}

// A convex-stage smoothing check used by several criteria: the exact closed
// forms must agree with straight quadrature on the published inner stage.
#[test]
fn closed_form_convolutions_match_quadrature_on_the_inner_stage() {
    let with_hook = Stage::scalar(0, |u, _, x| {
        let t = (x[0] - u[0]).max(0.0);
        t * t
    })
    .with_analytic(|u, _| {
        Some(TruncatedPower {
            coef: 1.0,
            offset: -u[0],
            power: 2,
        })
    });
    let plain = Stage::scalar(0, |u, _, x| {
        let t = (x[0] - u[0]).max(0.0);
        t * t
    });
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..25 {
        let n = rng.random_range(3..=60);
        let data: Vec<f64> = (0..n).map(|_| rng.random_range(5.0..15.0)).collect();
        let sample = Sample::from_1d(data).unwrap();
        let u = rng.random_range(6.0..14.0);
        let h = rng.random_range(0.1..1.5);
        for fam in [
            KernelFamily::Uniform,
            KernelFamily::Epanechnikov,
            KernelFamily::Gaussian,
        ] {
            let plan = SmoothingPlan::new(Kernel::new(fam), Bandwidth::Fixed(h)).unwrap();
            let a = smoothed_expectation(&with_hook, &sample, &plan, &[u], &[]).unwrap()[0];
            let b = smoothed_expectation(&plain, &sample, &plan, &[u], &[]).unwrap()[0];
            // the generic route carries its own adaptive-quadrature noise
            assert!(
                (a - b).abs() < 1e-7 * (1.0 + a.abs()),
                "{fam:?}: {a} vs {b}"
            );
        }
    }
}
