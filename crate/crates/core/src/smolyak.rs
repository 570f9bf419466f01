//! Sparse-grid (Smolyak) trigonometric sampling recovery.
//!
//! The univariate rule I_j interpolates on 2^{j+1} equispaced points and
//! is exact exactly on the frequency band (−2^j, 2^j]. The sparse operator
//! T_n = Σ_{‖s‖₁≤n} ⊗_j (I_{s_j} − I_{s_j−1}) is evaluated through the
//! combination formula, sampling each anisotropic full grid once. All
//! grids are sub-lattices of the 2^{n+1}-fine tensor lattice, so points
//! are keyed by their finest-lattice integer coordinates and every
//! distinct point is evaluated exactly once.

use crate::error::{Error, Result};
use crate::freq::FreqIndex;
use crate::grid::{fft_all_axes, GRID_CAP};
use crate::poly::TrigPolynomial;
use crate::spectral::norm_poly_lp;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

/// Black-box point evaluator with a thread-safe call tally.
pub struct Sampler {
    f: Box<dyn Fn(&[f64]) -> Complex64 + Sync + Send>,
    calls: AtomicU64,
}

impl Sampler {
    pub fn new(f: impl Fn(&[f64]) -> Complex64 + Sync + Send + 'static) -> Self {
        Sampler {
            f: Box::new(f),
            calls: AtomicU64::new(0),
        }
    }

    /// Samples a known polynomial by direct spectral evaluation.
    pub fn from_poly(p: &TrigPolynomial) -> Self {
        let p = p.clone();
        Sampler::new(move |x| p.eval(x))
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        (self.f)(x)
    }

    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

/// Minimal interpolation level whose lattice contains the finest-lattice
/// coordinate c (n is the sparse level, lattices have 2^{t+1} points).
fn min_level(c: u32, n: u32) -> u32 {
    if c == 0 {
        return 0;
    }
    n.saturating_sub(c.trailing_zeros())
}

fn enumerate_union(n: u32, d: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut key = vec![0u32; d];
    fn rec(axis: usize, budget: u32, n: u32, key: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if axis == key.len() {
            out.push(key.clone());
            return;
        }
        // coordinates with min_level ≤ budget are the multiples of 2^{n−budget}
        let step = 1u32 << n.saturating_sub(budget).min(n + 1);
        let fine = 1u32 << (n + 1);
        let mut c = 0u32;
        while c < fine {
            key[axis] = c;
            rec(axis + 1, budget - min_level(c, n), n, key, out);
            c += step;
        }
    }
    rec(0, n, n, &mut key, &mut out);
    out
}

/// Number of distinct points in the level-n union sparse grid.
pub fn sparse_grid_size(n: u32, d: usize) -> Result<u64> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    // new points introduced by level u on one axis: 2 at u=0, 2^u after
    fn new_points(u: u32) -> u64 {
        if u == 0 {
            2
        } else {
            1u64 << u
        }
    }
    fn rec(axis: usize, d: usize, budget: u32) -> u64 {
        if axis == d {
            return 1;
        }
        (0..=budget)
            .map(|u| new_points(u) * rec(axis + 1, d, budget - u))
            .sum()
    }
    Ok(rec(0, d, n))
}

/// Combination coefficient c_t = Σ_{ε ∈ {0,1}^d, ‖t+ε‖₁ ≤ n} (−1)^{‖ε‖₁}.
fn combination_coeff(t: &[u32], n: u32) -> i64 {
    let d = t.len();
    let base: u32 = t.iter().sum();
    let mut c = 0i64;
    for eps in 0u32..(1 << d) {
        let ones = eps.count_ones();
        if base + ones <= n {
            c += if ones % 2 == 0 { 1 } else { -1 };
        }
    }
    c
}

/// Sparse-grid recovery T_n f from point samples. Returns the spectral
/// representation; every distinct grid point is sampled exactly once.
pub fn smolyak_recover(sampler: &Sampler, n: u32, d: usize) -> Result<TrigPolynomial> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let fine = 1u64 << (n + 1);
    let size = sparse_grid_size(n, d)?;
    if size > GRID_CAP {
        return Err(Error::ResourceLimit {
            what: "sparse grid",
            requested: size as u128,
            cap: GRID_CAP as u128,
        });
    }
    // Phase 1: evaluate the union grid (in parallel, order-stable).
    let keys = enumerate_union(n, d);
    debug_assert_eq!(keys.len() as u64, size);
    let step = std::f64::consts::TAU / fine as f64;
    let values: Vec<Complex64> = keys
        .par_iter()
        .map(|key| {
            let x: Vec<f64> = key.iter().map(|&c| c as f64 * step).collect();
            sampler.eval(&x)
        })
        .collect();
    let cache: HashMap<&[u32], Complex64> = keys
        .iter()
        .map(|k| k.as_slice())
        .zip(values.iter().copied())
        .collect();

    // Phase 2: per-component interpolation via FFT, combined with c_t.
    let mut out = TrigPolynomial::new(d);
    let mut t = vec![0u32; d];
    loop {
        let c_t = combination_coeff(&t, n);
        if c_t != 0 {
            let shape: Vec<usize> = t.iter().map(|&tj| 1usize << (tj + 1)).collect();
            let mut grid = vec![Complex64::ZERO; shape.iter().product()];
            let mut idx = vec![0usize; d];
            let mut key = vec![0u32; d];
            'gather: loop {
                for j in 0..d {
                    key[j] = (idx[j] as u32) << (n - t[j]);
                }
                let mut flat = 0usize;
                for j in 0..d {
                    flat = flat * shape[j] + idx[j];
                }
                grid[flat] = cache[key.as_slice()];
                let mut axis = d;
                loop {
                    if axis == 0 {
                        break 'gather;
                    }
                    axis -= 1;
                    idx[axis] += 1;
                    if idx[axis] < shape[axis] {
                        break;
                    }
                    idx[axis] = 0;
                }
            }
            fft_all_axes(&mut grid, &shape, false);
            let total = grid.len() as f64;
            let weight = c_t as f64;
            // bins map to the band (−N/2, N/2], keeping the Nyquist bin
            let mut bin = vec![0usize; d];
            'scatter: loop {
                let mut flat = 0usize;
                let mut freq = smallvec::SmallVec::<[i32; 4]>::with_capacity(d);
                for j in 0..d {
                    flat = flat * shape[j] + bin[j];
                    let half = shape[j] / 2;
                    let k = if bin[j] <= half {
                        bin[j] as i32
                    } else {
                        bin[j] as i32 - shape[j] as i32
                    };
                    freq.push(k);
                }
                let c = grid[flat] * (weight / total);
                if c != Complex64::ZERO {
                    out.add_to_coeff(FreqIndex(freq), c);
                }
                let mut axis = d;
                loop {
                    if axis == 0 {
                        break 'scatter;
                    }
                    axis -= 1;
                    bin[axis] += 1;
                    if bin[axis] < shape[axis] {
                        break;
                    }
                    bin[axis] = 0;
                }
            }
        }
        // odometer over {t : ‖t‖₁ ≤ n}; axes right of the bump are zero
        let mut axis = d;
        loop {
            if axis == 0 {
                return Ok(out);
            }
            axis -= 1;
            t[axis] += 1;
            if t.iter().sum::<u32>() <= n {
                break;
            }
            t[axis] = 0;
        }
    }
}

/// One row of a sampling-recovery sweep.
#[derive(Clone, Copy, Debug)]
pub struct SweepRow {
    pub level: u32,
    pub samples: u64,
    pub error: f64,
}

/// Runs smolyak_recover at each level against a spectrally known target
/// and reports (level, samples used, L_p recovery error). The L₂ error is
/// exact by Parseval; other p go through oversampled grids.
pub fn recovery_error_sweep(
    factory: impl Fn() -> Sampler,
    exact: &TrigPolynomial,
    levels: &[u32],
    p: f64,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(levels.len());
    for &n in levels {
        let sampler = factory();
        let recovered = smolyak_recover(&sampler, n, exact.dim())?;
        let diff = exact.sub(&recovered);
        let error = if p == 2.0 {
            diff.l2_norm()
        } else {
            norm_poly_lp(&diff, p, crate::spectral::DEFAULT_OVERSAMPLE)?
        };
        rows.push(SweepRow {
            level: n,
            samples: sampler.call_count(),
            error,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::cross_indices;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn k(v: &[i32]) -> FreqIndex {
        FreqIndex::new(v.to_vec())
    }

    fn random_poly_on(set: &crate::freq::FreqSet, seed: u64) -> TrigPolynomial {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TrigPolynomial::from_coeffs(
            set.dim(),
            set.iter().map(|kk| {
                (
                    kk.clone(),
                    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
                )
            }),
        )
        .unwrap()
    }

    fn max_coeff_err(a: &TrigPolynomial, b: &TrigPolynomial) -> f64 {
        a.sub(b).iter().map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn recovers_constants_exactly() {
        for (n, d) in [(0u32, 1usize), (3, 1), (2, 2), (4, 2), (2, 3)] {
            let sampler = Sampler::new(|_| Complex64::new(2.5, -1.0));
            let rec = smolyak_recover(&sampler, n, d).unwrap();
            let expect = TrigPolynomial::from_coeffs(
                d,
                vec![(FreqIndex::new(vec![0i32; d]), Complex64::new(2.5, -1.0))],
            )
            .unwrap();
            assert!(max_coeff_err(&rec, &expect) < 1e-13, "n={n} d={d}");
        }
    }

    #[test]
    fn univariate_rule_is_interpolation_up_to_band_edge() {
        for n in 1..=6u32 {
            let kk = (1i32 << n) - 1;
            let tone = TrigPolynomial::from_coeffs(1, vec![(k(&[kk]), Complex64::ONE)]).unwrap();
            let sampler = Sampler::from_poly(&tone);
            let rec = smolyak_recover(&sampler, n, 1).unwrap();
            assert!(max_coeff_err(&rec, &tone) < 1e-12, "n={n} k={kk}");
            // one past the band: −2^n aliases and is not recovered
            let bad = TrigPolynomial::from_coeffs(1, vec![(k(&[-(1 << n)]), Complex64::ONE)])
                .unwrap();
            let rec = smolyak_recover(&Sampler::from_poly(&bad), n, 1).unwrap();
            assert!(max_coeff_err(&rec, &bad) > 0.5, "n={n} aliasing expected");
        }
    }

    #[test]
    fn reproduction_offset_is_zero() {
        // brute force over all tones of Q_n: T_n reproduces every one,
        // so Q_{n−d'} is covered already at d' = 0
        for n in 1..=4u32 {
            for kk in cross_indices(n, 2).unwrap().iter() {
                let tone =
                    TrigPolynomial::from_coeffs(2, vec![(kk.clone(), Complex64::ONE)]).unwrap();
                let rec = smolyak_recover(&Sampler::from_poly(&tone), n, 2).unwrap();
                assert!(
                    max_coeff_err(&rec, &tone) < 1e-10,
                    "n={n} tone {kk:?} not reproduced"
                );
            }
            // witness that the offset cannot be negative: a Q_{n+1} tone fails
            let bad = TrigPolynomial::from_coeffs(2, vec![(k(&[-(1 << n), 0]), Complex64::ONE)])
                .unwrap();
            let rec = smolyak_recover(&Sampler::from_poly(&bad), n, 2).unwrap();
            assert!(max_coeff_err(&rec, &bad) > 0.5, "n={n}");
        }
    }

    #[test]
    fn recovers_cross_polynomials_exactly() {
        for (n, seed) in [(3u32, 1u64), (5, 2), (7, 3)] {
            let f = random_poly_on(&cross_indices(n, 2).unwrap(), seed);
            let rec = smolyak_recover(&Sampler::from_poly(&f), n, 2).unwrap();
            assert!(max_coeff_err(&rec, &f) < 1e-10, "n={n}");
        }
    }

    #[test]
    fn recovery_is_linear() {
        let f = random_poly_on(&cross_indices(6, 2).unwrap(), 4);
        let g = random_poly_on(&cross_indices(6, 2).unwrap(), 5);
        let (a, b) = (Complex64::new(1.3, -0.2), Complex64::new(-0.7, 2.1));
        let combo = f.scale(a).add(&g.scale(b));
        let rec_combo = smolyak_recover(&Sampler::from_poly(&combo), 4, 2).unwrap();
        let rec_f = smolyak_recover(&Sampler::from_poly(&f), 4, 2).unwrap();
        let rec_g = smolyak_recover(&Sampler::from_poly(&g), 4, 2).unwrap();
        let lin = rec_f.scale(a).add(&rec_g.scale(b));
        assert!(max_coeff_err(&rec_combo, &lin) < 1e-10);
    }

    #[test]
    fn recovery_is_idempotent_on_reproduced_polynomials() {
        let f = random_poly_on(&cross_indices(5, 2).unwrap(), 6);
        let once = smolyak_recover(&Sampler::from_poly(&f), 5, 2).unwrap();
        let twice = smolyak_recover(&Sampler::from_poly(&once), 5, 2).unwrap();
        assert!(max_coeff_err(&once, &twice) < 1e-12);
    }

    #[test]
    fn never_evaluates_a_point_twice() {
        for d in 1..=3usize {
            for n in 0..=5u32 {
                let sampler = Sampler::new(|_| Complex64::ONE);
                smolyak_recover(&sampler, n, d).unwrap();
                assert_eq!(
                    sampler.call_count(),
                    sparse_grid_size(n, d).unwrap(),
                    "n={n} d={d}"
                );
            }
        }
    }

    #[test]
    fn sweep_final_row_vanishes_on_reproduced_target() {
        let f = random_poly_on(&cross_indices(3, 2).unwrap(), 7);
        let rows =
            recovery_error_sweep(|| Sampler::from_poly(&f), &f, &[1, 2, 3, 4, 5], 2.0).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows.last().unwrap().error < 1e-12);
        // samples grow with level
        for w in rows.windows(2) {
            assert!(w[1].samples > w[0].samples);
        }
    }

    #[test]
    fn univariate_sweep_rate_matches_tail_oracle() {
        // f̂(k) = |k|^{−1.5}: L₂ interpolation error at level n decays like
        // 2^{−n} ≍ m^{−1}
        let kmax = 1i32 << 12;
        let f = TrigPolynomial::from_coeffs(
            1,
            (1..=kmax).flat_map(|kk| {
                let c = Complex64::new(f64::from(kk).powf(-1.5), 0.0);
                [(k(&[kk]), c), (k(&[-kk]), c)]
            }),
        )
        .unwrap();
        let levels: Vec<u32> = (3..=10).collect();
        let rows = recovery_error_sweep(|| Sampler::from_poly(&f), &f, &levels, 2.0).unwrap();
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| ((r.samples as f64).ln(), r.error.ln()))
            .collect();
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!((-1.2..=-0.8).contains(&slope), "slope {slope}");
    }
}
