//! Order-independent floating-point accumulation.
//!
//! Sample expectations must not depend on the order observations arrive in:
//! permuting a sample is required to leave every estimator value bit-identical.
//! A running expansion of non-overlapping components (Shewchuk-style) keeps the
//! accumulated value exact as a real number, so the final rounding does not see
//! the insertion order.

use alloc::vec::Vec;

/// Exact sum of `a + b` as a rounded head plus rounding error.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Running sum that is exact in real arithmetic.
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    parts: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self { parts: Vec::new() }
    }

    pub fn add(&mut self, x: f64) {
        let mut carry = x;
        let mut kept = 0;
        for i in 0..self.parts.len() {
            let (s, err) = two_sum(self.parts[i], carry);
            carry = s;
            if err != 0.0 {
                self.parts[kept] = err;
                kept += 1;
            }
        }
        self.parts.truncate(kept);
        if carry != 0.0 {
            self.parts.push(carry);
        }
    }

    /// Rounded value of the accumulated real sum. Components are
    /// non-overlapping and stored smallest first, so adding them in order
    /// loses nothing.
    pub fn value(&self) -> f64 {
        let mut acc = 0.0;
        for &p in &self.parts {
            acc += p;
        }
        acc
    }
}

/// Convenience: exact sum of a slice.
pub fn exact_sum(xs: &[f64]) -> f64 {
    let mut s = ExactSum::new();
    for &x in xs {
        s.add(x);
    }
    s.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_invariant() {
        let xs = [1.0e16, 1.0, -1.0e16, 3.5e-7, 0.1, -0.30000000001, 7.25];
        let forward = exact_sum(&xs);
        let mut rev = xs;
        rev.reverse();
        assert_eq!(forward.to_bits(), exact_sum(&rev).to_bits());
    }

    #[test]
    fn matches_plain_sum_on_benign_data() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let plain: f64 = xs.iter().sum();
        assert!((exact_sum(&xs) - plain).abs() < 1e-12);
    }

    #[test]
    fn doubling_is_exact() {
        let xs = [0.1, 0.7, -0.3, 1.0 / 3.0, 9.25e3];
        let mut doubled = ExactSum::new();
        for &x in xs.iter().chain(xs.iter()) {
            doubled.add(x);
        }
        let single = exact_sum(&xs);
        assert_eq!((2.0 * single).to_bits(), doubled.value().to_bits());
    }
}
