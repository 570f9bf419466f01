//! Sparse spectral representation of trigonometric polynomials.
//!
//! A `TrigPolynomial` is a finite map from integer frequency vectors to
//! complex coefficients, i.e. f(x) = Σ_k c_k e^{i k·x} on [0,2π)^d. The map
//! is kept free of exact-zero entries so the support is always meaningful,
//! and iteration order is lexicographic in the frequency (BTreeMap), which
//! makes every downstream reduction deterministic.

use crate::error::{Error, Result};
use crate::freq::{FreqIndex, FreqSet};
use num_complex::Complex64;
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrigPolynomial {
    coeffs: BTreeMap<FreqIndex, Complex64>,
    dim: usize,
}

impl TrigPolynomial {
    pub fn new(dim: usize) -> Self {
        TrigPolynomial {
            coeffs: BTreeMap::new(),
            dim,
        }
    }

    /// Builds from (frequency, coefficient) pairs; duplicate frequencies are
    /// accumulated, exact zeros dropped.
    pub fn from_coeffs(
        dim: usize,
        pairs: impl IntoIterator<Item = (FreqIndex, Complex64)>,
    ) -> Result<Self> {
        let mut p = TrigPolynomial::new(dim);
        for (k, c) in pairs {
            if k.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: k.dim(),
                });
            }
            p.add_to_coeff(k, c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored (nonzero) coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: &FreqIndex) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn set_coeff(&mut self, k: FreqIndex, c: Complex64) {
        debug_assert_eq!(k.dim(), self.dim);
        if c == Complex64::ZERO {
            self.coeffs.remove(&k);
        } else {
            self.coeffs.insert(k, c);
        }
    }

    pub fn add_to_coeff(&mut self, k: FreqIndex, c: Complex64) {
        debug_assert_eq!(k.dim(), self.dim);
        let v = self.coeffs.entry(k.clone()).or_insert(Complex64::ZERO);
        *v += c;
        if *v == Complex64::ZERO {
            self.coeffs.remove(&k);
        }
    }

    /// Lexicographic iteration over (frequency, coefficient).
    pub fn iter(&self) -> impl Iterator<Item = (&FreqIndex, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn support(&self) -> FreqSet {
        FreqSet::from_vec(self.dim, self.coeffs.keys().cloned().collect())
    }

    /// Coefficient restriction to a frequency set.
    pub fn restrict(&self, set: &FreqSet) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(k, _)| set.contains(k))
            .map(|(k, c)| (k.clone(), *c))
            .collect();
        TrigPolynomial {
            coeffs,
            dim: self.dim,
        }
    }

    /// Applies a real weight function to every coefficient, dropping the
    /// resulting zeros.
    pub fn weighted(&self, weight: impl Fn(&FreqIndex) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter_map(|(k, c)| {
                let w = weight(k);
                if w == 0.0 {
                    None
                } else {
                    Some((k.clone(), c * w))
                }
            })
            .collect();
        TrigPolynomial {
            coeffs,
            dim: self.dim,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (k, c) in other.iter() {
            out.add_to_coeff(k.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (k, c) in other.iter() {
            out.add_to_coeff(k.clone(), -c);
        }
        out
    }

    pub fn scale(&self, a: Complex64) -> Self {
        if a == Complex64::ZERO {
            return TrigPolynomial::new(self.dim);
        }
        let coeffs = self.coeffs.iter().map(|(k, c)| (k.clone(), c * a)).collect();
        TrigPolynomial {
            coeffs,
            dim: self.dim,
        }
    }

    /// Direct-summation evaluation at a point; O(len) and intended for
    /// oracles, small polynomials and black-box sampling.
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut acc = Complex64::ZERO;
        for (k, c) in self.coeffs.iter() {
            let phase: f64 = k
                .coords()
                .iter()
                .zip(x.iter())
                .map(|(&kj, &xj)| kj as f64 * xj)
                .sum();
            acc += c * Complex64::from_polar(1.0, phase);
        }
        acc
    }

    /// Largest coordinate magnitude of the support, per axis. Zero entries
    /// for an empty polynomial.
    pub fn max_abs_freq(&self) -> Vec<i64> {
        let mut out = vec![0i64; self.dim];
        for k in self.coeffs.keys() {
            for (j, &kj) in k.coords().iter().enumerate() {
                out[j] = out[j].max((kj as i64).abs());
            }
        }
        out
    }

    /// Σ |c_k|², i.e. the squared L₂ norm by Parseval (normalized measure).
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(v: &[i32]) -> FreqIndex {
        FreqIndex::new(v.to_vec())
    }

    #[test]
    fn zero_coefficients_are_not_stored() {
        let mut p = TrigPolynomial::new(2);
        p.set_coeff(k(&[1, 0]), Complex64::new(2.0, 0.0));
        p.set_coeff(k(&[1, 0]), Complex64::ZERO);
        assert!(p.is_empty());
        p.add_to_coeff(k(&[0, 1]), Complex64::new(1.0, 1.0));
        p.add_to_coeff(k(&[0, 1]), Complex64::new(-1.0, -1.0));
        assert!(p.is_empty());
    }

    #[test]
    fn from_coeffs_accumulates_duplicates() {
        let p = TrigPolynomial::from_coeffs(
            1,
            vec![
                (k(&[3]), Complex64::new(1.0, 0.0)),
                (k(&[3]), Complex64::new(0.5, 0.0)),
            ],
        )
        .unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.coeff(&k(&[3])), Complex64::new(1.5, 0.0));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let r = TrigPolynomial::from_coeffs(2, vec![(k(&[1]), Complex64::ONE)]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn eval_matches_cosine() {
        // 2 cos x = e^{ix} + e^{-ix}
        let p = TrigPolynomial::from_coeffs(
            1,
            vec![(k(&[1]), Complex64::ONE), (k(&[-1]), Complex64::ONE)],
        )
        .unwrap();
        for &x in &[0.0, 0.7, 2.1, 5.9] {
            let v = p.eval(&[x]);
            assert!((v.re - 2.0 * x.cos()).abs() < 1e-12);
            assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn parseval_of_tone_is_one() {
        let p = TrigPolynomial::from_coeffs(2, vec![(k(&[3, -1]), Complex64::ONE)]).unwrap();
        assert_eq!(p.l2_norm(), 1.0);
    }

    #[test]
    fn algebra_and_support() {
        let a = TrigPolynomial::from_coeffs(1, vec![(k(&[0]), Complex64::ONE)]).unwrap();
        let b = TrigPolynomial::from_coeffs(1, vec![(k(&[2]), Complex64::new(0.0, 1.0))]).unwrap();
        let sum = a.add(&b);
        assert_eq!(sum.len(), 2);
        let diff = sum.sub(&a);
        assert_eq!(diff.len(), 1);
        assert_eq!(diff.coeff(&k(&[2])), Complex64::new(0.0, 1.0));
        assert_eq!(sum.max_abs_freq(), vec![2]);
        let supp = sum.support();
        assert!(supp.contains(&k(&[0])) && supp.contains(&k(&[2])));
    }
}
