//! Derivative-free minimization: golden-section bracketing for scalar
//! objectives and a multi-start polytope search with budget projection for
//! simplex-constrained portfolio weights.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::seed;

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (sqrt(5) - 1) / 2
const INV_PHI2: f64 = 0.381_966_011_250_105_1; // (3 - sqrt(5)) / 2

/// Search bracket and absolute tolerance on the minimizer.
#[derive(Debug, Clone, Copy)]
pub struct ScalarDomain {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
}

impl ScalarDomain {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) {
            return Err(Error::BadParameters("bracket requires lo < hi"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::BadParameters("tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMinimum {
    pub u_star: f64,
    pub value: f64,
}

/// Golden-section minimization of a unimodal objective on [lo, hi].
///
/// Returns the leftmost point at value ties, so flat objectives resolve
/// deterministically. If a bracket endpoint beats every interior probe
/// strictly, the bracket likely excludes the true minimizer and
/// `BracketTooNarrow` is returned.
pub fn minimize_scalar<F>(mut f: F, domain: &ScalarDomain) -> Result<ScalarMinimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    domain.validate()?;
    let eval = |x: f64, f: &mut F| -> Result<f64> {
        let v = f(x)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteValue);
        }
        Ok(v)
    };

    let (lo, hi) = (domain.lo, domain.hi);
    let f_lo = eval(lo, &mut f)?;
    let f_hi = eval(hi, &mut f)?;

    let mut a = lo;
    let mut b = hi;
    let mut x1 = a + INV_PHI2 * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(x1, &mut f)?;
    let mut f2 = eval(x2, &mut f)?;
    while b - a > domain.tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + INV_PHI2 * (b - a);
            f1 = eval(x1, &mut f)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2, &mut f)?;
        }
    }
    // leftmost on ties
    let (u_star, value) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };

    // An endpoint beating every interior probe beyond rounding noise means
    // the descent continues through the bracket boundary.
    let slack = 1e-9 * (1.0 + libm::fabs(value));
    if f_lo < value - slack {
        return Err(Error::BracketTooNarrow { endpoint: lo });
    }
    if f_hi < value - slack {
        return Err(Error::BracketTooNarrow { endpoint: hi });
    }
    // flat down to the left endpoint: report the leftmost bracketed point
    if f_lo <= value + slack && u_star - lo <= 2.0 * domain.tol {
        return Ok(ScalarMinimum {
            u_star: lo,
            value: f_lo.min(value),
        });
    }
    Ok(ScalarMinimum { u_star, value })
}

/// Budget-constrained box: { u : sum u_i = budget, lower <= u <= upper }.
#[derive(Debug, Clone)]
pub struct SimplexDomain {
    pub dim: usize,
    pub budget: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SimplexDomain {
    /// Unit budget with weights in [0, 1].
    pub fn unit(dim: usize) -> Self {
        Self {
            dim,
            budget: 1.0,
            lower: alloc::vec![0.0; dim],
            upper: alloc::vec![1.0; dim],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.lower.len() != self.dim || self.upper.len() != self.dim {
            return Err(Error::BadParameters("inconsistent simplex dimensions"));
        }
        if self
            .lower
            .iter()
            .zip(&self.upper)
            .any(|(l, b)| !(l.is_finite() && b.is_finite()) || l > b)
        {
            return Err(Error::InfeasibleDomain);
        }
        let lo_sum: f64 = self.lower.iter().sum();
        let hi_sum: f64 = self.upper.iter().sum();
        if lo_sum > self.budget || hi_sum < self.budget {
            return Err(Error::InfeasibleDomain);
        }
        Ok(())
    }

    /// Euclidean projection onto the feasible set: clip to the box after
    /// subtracting the multiplier that restores the budget (monotone in the
    /// multiplier, solved by bisection).
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let total = |tau: f64| -> f64 {
            v.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .map(|(vi, (l, b))| (vi - tau).clamp(*l, *b))
                .sum()
        };
        let mut tau_lo = v
            .iter()
            .zip(&self.upper)
            .map(|(vi, b)| vi - b)
            .fold(f64::INFINITY, f64::min)
            - 1.0;
        let mut tau_hi = v
            .iter()
            .zip(&self.lower)
            .map(|(vi, l)| vi - l)
            .fold(f64::NEG_INFINITY, f64::max)
            + 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (tau_lo + tau_hi);
            if total(mid) > self.budget {
                tau_lo = mid;
            } else {
                tau_hi = mid;
            }
            if tau_hi - tau_lo < 1e-16 * (1.0 + libm::fabs(tau_lo)) {
                break;
            }
        }
        let tau = 0.5 * (tau_lo + tau_hi);
        v.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(vi, (l, b))| (vi - tau).clamp(*l, *b))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexMinimum {
    pub u_star: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

const SIMPLEX_DIAMETER_TOL: f64 = 1e-8;
const SIMPLEX_EVAL_BUDGET: usize = 100_000;

/// Multi-start Nelder-Mead over the projected feasible set. Deterministic
/// given the seed; restart results are reduced by value, then by restart
/// index.
pub fn minimize_simplex<F>(
    mut f: F,
    domain: &SimplexDomain,
    restarts: usize,
    seed_value: u64,
) -> Result<SimplexMinimum>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    domain.validate()?;
    let n = domain.dim;

    if n == 1 {
        // the budget pins the single coordinate
        let u = alloc::vec![domain.budget];
        let value = f(&u)?;
        return Ok(SimplexMinimum {
            u_star: u,
            value,
            evals: 1,
        });
    }

    let restarts = restarts.max(1);
    let budget_per_restart = SIMPLEX_EVAL_BUDGET / restarts;
    let mut best: Option<SimplexMinimum> = None;
    let mut total_evals = 0usize;

    for restart in 0..restarts {
        let mut rng = seed::derive(seed_value, &[restart as u64]);
        // random box point; restart 0 starts from the box midpoint
        let start: Vec<f64> = (0..n)
            .map(|i| {
                let t = if restart == 0 {
                    0.5
                } else {
                    seed::next_f64(&mut rng)
                };
                domain.lower[i] + t * (domain.upper[i] - domain.lower[i])
            })
            .collect();
        let m = nelder_mead(&mut f, domain, &start, budget_per_restart)?;
        total_evals += m.evals;
        let better = match &best {
            None => true,
            Some(b) => m.value < b.value,
        };
        if better {
            best = Some(m);
        }
    }
    let mut out = best.expect("at least one restart");
    out.evals = total_evals;
    Ok(out)
}

fn nelder_mead<F>(
    f: &mut F,
    domain: &SimplexDomain,
    start: &[f64],
    budget: usize,
) -> Result<SimplexMinimum>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = domain.dim;
    let mut evals = 0usize;
    let eval = |v: &[f64], f: &mut F, evals: &mut usize| -> Result<f64> {
        *evals += 1;
        let value = f(&domain.project(v))?;
        if !value.is_finite() {
            return Err(Error::NonFiniteValue);
        }
        Ok(value)
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        let span = domain.upper[i] - domain.lower[i];
        v[i] += if span > 0.0 { 0.1 * span } else { 0.05 };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex
        .iter()
        .map(|v| eval(v, f, &mut evals))
        .collect::<Result<_>>()?;

    while evals < budget {
        // order best..worst
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let revalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalues;

        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .fold(0.0_f64, f64::max);
        if libm::sqrt(diameter) < SIMPLEX_DIAMETER_TOL {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|v| v[i]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&worst)
            .map(|(c, w)| c + (c - w))
            .collect();
        let f_reflect = eval(&reflect, f, &mut evals)?;

        if f_reflect < values[0] {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + 2.0 * (c - w))
                .collect();
            let f_expand = eval(&expand, f, &mut evals)?;
            if f_expand < f_reflect {
                simplex[n] = expand;
                values[n] = f_expand;
            } else {
                simplex[n] = reflect;
                values[n] = f_reflect;
            }
        } else if f_reflect < values[n - 1] {
            simplex[n] = reflect;
            values[n] = f_reflect;
        } else {
            let contract: Vec<f64> = centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + 0.5 * (w - c))
                .collect();
            let f_contract = eval(&contract, f, &mut evals)?;
            if f_contract < values[n] {
                simplex[n] = contract;
                values[n] = f_contract;
            } else {
                // shrink toward the best vertex
                for i in 1..=n {
                    let v: Vec<f64> = simplex[i]
                        .iter()
                        .zip(&simplex[0])
                        .map(|(x, b)| b + 0.5 * (x - b))
                        .collect();
                    values[i] = eval(&v, f, &mut evals)?;
                    simplex[i] = v;
                }
            }
        }
    }

    let mut best_idx = 0;
    for i in 1..=n {
        if values[i] < values[best_idx] {
            best_idx = i;
        }
    }
    let u_star = domain.project(&simplex[best_idx]);
    Ok(SimplexMinimum {
        value: values[best_idx],
        u_star,
        evals,
    })
}
