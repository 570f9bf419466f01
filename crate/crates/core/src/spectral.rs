//! Analysis/synthesis between grids and sparse spectra, dyadic block
//! operators and their hyperbolic-cross aggregates, and the L_p and
//! mixed-smoothness norms built on top of them.
//!
//! Coefficient convention: f̂(k) = (2π)^{−d} ∫ f(x) e^{−ik·x} dx, so the
//! forward transform is the normalized DFT and synthesis is the plain
//! unnormalized inverse DFT.
//!
//! The block multipliers are dyadic rationals, and every frequency is seen
//! by at most two scales per axis. Cross and layer operators therefore
//! work coefficient-by-coefficient through at most 2^d (scale, weight)
//! patterns, with all the telescoping identities holding exactly in f64.

use crate::error::{Error, Result};
use crate::freq::{BlockIndex, FreqIndex};
use crate::grid::{fft_all_axes, plan_fft_1d, GridFunction, GRID_CAP};
use crate::kernels::{block_eval, block_weight, vp_eval};
use crate::poly::TrigPolynomial;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Default oversampling factor beyond Nyquist for grid-based norms.
pub const DEFAULT_OVERSAMPLE: usize = 4;

/// Above this dense-grid size the d=2 uniform-norm evaluator switches to a
/// row-streaming synthesis that never materializes the full grid.
const STREAM_THRESHOLD: u128 = 1 << 22;

/// Per-axis grid sizes that are alias-free for the given maximum absolute
/// frequencies, oversampled by the given factor: the next power of two
/// ≥ 2(max+1), times `oversample`.
pub fn aliasfree_resolution(max_abs: &[i64], oversample: usize) -> Vec<usize> {
    assert!(oversample >= 1);
    max_abs
        .iter()
        .map(|&m| (2 * (m as usize + 1)).next_power_of_two() * oversample)
        .collect()
}

/// Discrete Fourier analysis: coefficients on the fundamental alias-free
/// box |k_j| ≤ ⌊(N_j−1)/2⌋. Bins below a relative roundoff floor of
/// 1e−13·max|f̂| are dropped so that pure inputs produce pure spectra.
pub fn analyze(f: &GridFunction) -> TrigPolynomial {
    let d = f.dim();
    let mut vals = f.values().to_vec();
    fft_all_axes(&mut vals, f.shape(), false);
    let total = vals.len() as f64;
    let max_mag = vals
        .iter()
        .map(|z| z.norm_sqr())
        .fold(0.0f64, f64::max)
        .sqrt()
        / total;
    let thresh = 1e-13 * max_mag;
    let half: Vec<i64> = f.shape().iter().map(|&n| (n as i64 - 1) / 2).collect();
    let mut poly = TrigPolynomial::new(d);
    let mut k: Vec<i64> = half.iter().map(|&h| -h).collect();
    loop {
        let mut flat = 0usize;
        for (j, &kj) in k.iter().enumerate() {
            let n = f.shape()[j] as i64;
            flat = flat * n as usize + kj.rem_euclid(n) as usize;
        }
        let c = vals[flat] / total;
        if c.norm() > thresh {
            poly.set_coeff(
                FreqIndex::new(k.iter().map(|&v| v as i32).collect::<Vec<_>>()),
                c,
            );
        }
        let mut axis = d;
        loop {
            if axis == 0 {
                return poly;
            }
            axis -= 1;
            k[axis] += 1;
            if k[axis] <= half[axis] {
                break;
            }
            k[axis] = -half[axis];
        }
    }
}

/// Pointwise evaluation of Σ c_k e^{ik·x} on the tensor grid of the given
/// resolution. The resolution must be strictly alias-free per axis.
pub fn synthesize(p: &TrigPolynomial, resolution: &[usize]) -> Result<GridFunction> {
    if resolution.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: resolution.len(),
        });
    }
    let max_abs = p.max_abs_freq();
    for (axis, (&n, &m)) in resolution.iter().zip(max_abs.iter()).enumerate() {
        if (n as i64) <= 2 * m {
            return Err(Error::Aliasing {
                axis,
                points: n,
                required: (2 * m) as usize,
                max_freq: m,
            });
        }
    }
    let mut g = GridFunction::zeros(resolution)?;
    let shape = g.shape().to_vec();
    for (k, &c) in p.iter() {
        let mut flat = 0usize;
        for (j, &kj) in k.coords().iter().enumerate() {
            let n = shape[j] as i64;
            flat = flat * shape[j] + (kj as i64).rem_euclid(n) as usize;
        }
        g.values_mut()[flat] += c;
    }
    fft_all_axes(g.values_mut(), &shape, true);
    Ok(g)
}

/// The (scale, weight) patterns with nonzero block-multiplier weight at
/// frequency k: per axis only the containing scale σ_j and σ_j − 1 can
/// contribute. At most 2^d entries, in a fixed deterministic order.
fn block_patterns(k: &FreqIndex) -> Vec<(BlockIndex, f64)> {
    let sigma = k.block_of();
    let d = k.dim();
    let mut axis_opts: Vec<Vec<(u32, f64)>> = Vec::with_capacity(d);
    for (j, &sj) in sigma.scales().iter().enumerate() {
        let kj = k.coords()[j] as i64;
        let mut opts = Vec::with_capacity(2);
        let w_here = block_weight(sj, kj);
        if w_here != 0.0 {
            opts.push((sj, w_here));
        }
        if sj >= 1 {
            let w_prev = block_weight(sj - 1, kj);
            if w_prev != 0.0 {
                opts.push((sj - 1, w_prev));
            }
        }
        axis_opts.push(opts);
    }
    let mut out = Vec::with_capacity(1 << d.min(4));
    let mut cursor = vec![0usize; d];
    loop {
        let mut s = smallvec::SmallVec::<[u32; 4]>::with_capacity(d);
        let mut w = 1.0f64;
        for (j, &i) in cursor.iter().enumerate() {
            let (sj, wj) = axis_opts[j][i];
            s.push(sj);
            w *= wj;
        }
        out.push((BlockIndex(s), w));
        let mut axis = d;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            cursor[axis] += 1;
            if cursor[axis] < axis_opts[axis].len() {
                break;
            }
            cursor[axis] = 0;
        }
    }
}

/// δ_s: sharp coefficient restriction to the dyadic block ρ(s).
pub fn delta_block(f: &TrigPolynomial, s: &BlockIndex) -> TrigPolynomial {
    let mut out = TrigPolynomial::new(f.dim());
    for (k, &c) in f.iter() {
        if &k.block_of() == s {
            out.set_coeff(k.clone(), c);
        }
    }
    out
}

/// A_s: convolution with the tensor block kernel, i.e. coefficientwise
/// multiplication by the block-multiplier weights.
pub fn vp_block(f: &TrigPolynomial, s: &BlockIndex) -> TrigPolynomial {
    debug_assert_eq!(f.dim(), s.dim());
    f.weighted(|k| {
        k.coords()
            .iter()
            .zip(s.scales().iter())
            .map(|(&kj, &sj)| block_weight(sj, kj as i64))
            .product()
    })
}

/// S_{Q_n}: sharp coefficient restriction to the step hyperbolic cross.
pub fn project_cross(f: &TrigPolynomial, n: u32) -> TrigPolynomial {
    let mut out = TrigPolynomial::new(f.dim());
    for (k, &c) in f.iter() {
        if k.block_of().level() <= n {
            out.set_coeff(k.clone(), c);
        }
    }
    out
}

/// Total A_{Q_n}-multiplier weight at frequency k.
pub fn vp_cross_weight(k: &FreqIndex, n: u32) -> f64 {
    block_patterns(k)
        .iter()
        .filter(|(s, _)| s.level() <= n)
        .map(|&(_, w)| w)
        .sum()
}

/// A_{Q_n} = Σ_{‖s‖₁ ≤ n} A_s, evaluated per coefficient through the
/// pattern weights.
pub fn vp_cross(f: &TrigPolynomial, n: u32) -> TrigPolynomial {
    f.weighted(|k| vp_cross_weight(k, n))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    /// S_{ΔQ_n} = S_{Q_n} − S_{Q_{n−1}}
    Sharp,
    /// A_{ΔQ_n} = A_{Q_n} − A_{Q_{n−1}}
    Vp,
}

/// The level-n layer operator of the requested kind (level 0 returns the
/// level-0 cross operator itself).
pub fn layer_op(f: &TrigPolynomial, n: u32, kind: LayerKind) -> TrigPolynomial {
    match kind {
        LayerKind::Sharp => {
            let mut out = TrigPolynomial::new(f.dim());
            for (k, &c) in f.iter() {
                if k.block_of().level() == n {
                    out.set_coeff(k.clone(), c);
                }
            }
            out
        }
        LayerKind::Vp => f.weighted(|k| {
            block_patterns(k)
                .iter()
                .filter(|(s, _)| s.level() == n)
                .map(|&(_, w)| w)
                .sum()
        }),
    }
}

/// Splits f into all its nonzero layer pieces at once; the values of the
/// pieces sum back to f exactly (finite telescoping).
pub fn layer_decomposition(f: &TrigPolynomial, kind: LayerKind) -> BTreeMap<u32, TrigPolynomial> {
    let mut out: BTreeMap<u32, TrigPolynomial> = BTreeMap::new();
    for (k, &c) in f.iter() {
        match kind {
            LayerKind::Sharp => {
                out.entry(k.block_of().level())
                    .or_insert_with(|| TrigPolynomial::new(f.dim()))
                    .set_coeff(k.clone(), c);
            }
            LayerKind::Vp => {
                for (s, w) in block_patterns(k) {
                    out.entry(s.level())
                        .or_insert_with(|| TrigPolynomial::new(f.dim()))
                        .add_to_coeff(k.clone(), c * w);
                }
            }
        }
    }
    out.retain(|_, p| !p.is_empty());
    out
}

/// Splits f into its nonzero A_s-block pieces, keyed by scale vector.
pub fn block_decomposition(f: &TrigPolynomial) -> BTreeMap<BlockIndex, TrigPolynomial> {
    let mut out: BTreeMap<BlockIndex, TrigPolynomial> = BTreeMap::new();
    for (k, &c) in f.iter() {
        for (s, w) in block_patterns(k) {
            out.entry(s)
                .or_insert_with(|| TrigPolynomial::new(f.dim()))
                .add_to_coeff(k.clone(), c * w);
        }
    }
    out.retain(|_, p| !p.is_empty());
    out
}

/// Deterministic compensated reduction of chunkwise sums. The chunking is
/// fixed, so the result does not depend on thread scheduling.
fn stable_sum(chunk_sums: Vec<f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in chunk_sums {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

const SUM_CHUNK: usize = 4096;

fn mean_of(values: &[Complex64], f: impl Fn(&Complex64) -> f64 + Sync) -> f64 {
    let sums: Vec<f64> = values
        .par_chunks(SUM_CHUNK)
        .map(|c| c.iter().map(&f).sum::<f64>())
        .collect();
    stable_sum(sums) / values.len() as f64
}

/// L_p norm on the grid under normalized measure: ((2π)^{−d} ∫ |f|^p)^{1/p}
/// by the uniform Riemann sum; p = ∞ is the grid maximum of |f|.
pub fn norm_lp(f: &GridFunction, p: f64) -> f64 {
    assert!(p >= 1.0, "L_p norms need p >= 1, got {p}");
    if p.is_infinite() {
        let maxes: Vec<f64> = f
            .values()
            .par_chunks(SUM_CHUNK)
            .map(|c| c.iter().map(|z| z.norm_sqr()).fold(0.0f64, f64::max))
            .collect();
        maxes.into_iter().fold(0.0f64, f64::max).sqrt()
    } else if p == 2.0 {
        mean_of(f.values(), |z| z.norm_sqr()).sqrt()
    } else if p == 1.0 {
        mean_of(f.values(), |z| z.norm())
    } else {
        mean_of(f.values(), |z| z.norm().powf(p)).powf(1.0 / p)
    }
}

/// Row-streaming L_p norm of a d=2 polynomial on the (n1 × n2) grid:
/// for every x₁-row, the dense k₂ spectrum is accumulated and synthesized
/// with a 1-D FFT, so the full grid never exists in memory. Rows are
/// processed in parallel; the cross-row reduction is order-fixed.
fn streaming_lp_2d(f: &TrigPolynomial, shape: &[usize], p: f64) -> f64 {
    let (n1, n2) = (shape[0], shape[1]);
    // coefficients grouped by k1, bins precomputed for the row line
    let mut groups: BTreeMap<i32, Vec<(usize, Complex64)>> = BTreeMap::new();
    for (k, &c) in f.iter() {
        let bin2 = (k.coords()[1] as i64).rem_euclid(n2 as i64) as usize;
        groups.entry(k.coords()[0]).or_default().push((bin2, c));
    }
    let groups: Vec<(i64, Vec<(usize, Complex64)>)> = groups
        .into_iter()
        .map(|(k1, v)| (k1 as i64, v))
        .collect();
    let twiddle: Vec<Complex64> = (0..n1)
        .map(|t| Complex64::from_polar(1.0, std::f64::consts::TAU * t as f64 / n1 as f64))
        .collect();
    let fft = plan_fft_1d(n2, true);
    let row_stats: Vec<f64> = (0..n1)
        .into_par_iter()
        .map_init(
            || {
                (
                    vec![Complex64::ZERO; n2],
                    vec![Complex64::ZERO; fft.get_inplace_scratch_len()],
                )
            },
            |(line, scratch), j1| {
                line.fill(Complex64::ZERO);
                for (k1, entries) in groups.iter() {
                    let phase = twiddle[(k1 * j1 as i64).rem_euclid(n1 as i64) as usize];
                    for &(bin2, c) in entries {
                        line[bin2] += c * phase;
                    }
                }
                fft.process_with_scratch(line, scratch);
                if p.is_infinite() {
                    line.iter().map(|z| z.norm_sqr()).fold(0.0f64, f64::max)
                } else if p == 2.0 {
                    line.iter().map(|z| z.norm_sqr()).sum::<f64>()
                } else {
                    line.iter().map(|z| z.norm().powf(p)).sum::<f64>()
                }
            },
        )
        .collect();
    if p.is_infinite() {
        row_stats.into_iter().fold(0.0f64, f64::max).sqrt()
    } else {
        let mean = stable_sum(row_stats) / (n1 as f64 * n2 as f64);
        if p == 2.0 {
            mean.sqrt()
        } else {
            mean.powf(1.0 / p)
        }
    }
}

/// L_p norm of a polynomial at an oversampled alias-free resolution.
/// p = 2 is computed exactly from the coefficients (Parseval); p = ∞ and
/// general p go through grids, streaming row-wise in d=2 when the dense
/// grid would be large.
pub fn norm_poly_lp(f: &TrigPolynomial, p: f64, oversample: usize) -> Result<f64> {
    assert!(p >= 1.0);
    if f.is_empty() {
        return Ok(0.0);
    }
    if p == 2.0 {
        return Ok(f.l2_norm());
    }
    let shape = aliasfree_resolution(&f.max_abs_freq(), oversample);
    let total: u128 = shape.iter().map(|&n| n as u128).product();
    if f.dim() == 2 && total > STREAM_THRESHOLD {
        return Ok(streaming_lp_2d(f, &shape, p));
    }
    let g = synthesize(f, &shape)?;
    Ok(norm_lp(&g, p))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    W,
    H,
    B,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::W => write!(f, "W"),
            Family::H => write!(f, "H"),
            Family::B => write!(f, "B"),
        }
    }
}

/// A mixed-smoothness function class: Sobolev-type W (Littlewood–Paley
/// square function), Hölder–Nikolskii H (sup of weighted block norms), or
/// Besov-type B with summability q (B with q = ∞ coincides with H).
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothnessSpec {
    pub family: Family,
    pub r: f64,
    pub p: f64,
    pub q: f64,
    pub alpha: Vec<f64>,
}

impl SmoothnessSpec {
    pub fn w(r: f64, p: f64) -> Result<Self> {
        Self::validate(Family::W, r, p, f64::INFINITY)?;
        Ok(SmoothnessSpec {
            family: Family::W,
            r,
            p,
            q: f64::INFINITY,
            alpha: Vec::new(),
        })
    }

    pub fn h(r: f64, p: f64) -> Result<Self> {
        Self::validate(Family::H, r, p, f64::INFINITY)?;
        Ok(SmoothnessSpec {
            family: Family::H,
            r,
            p,
            q: f64::INFINITY,
            alpha: Vec::new(),
        })
    }

    pub fn b(r: f64, p: f64, q: f64) -> Result<Self> {
        Self::validate(Family::B, r, p, q)?;
        Ok(SmoothnessSpec {
            family: Family::B,
            r,
            p,
            q,
            alpha: Vec::new(),
        })
    }

    fn validate(family: Family, r: f64, p: f64, q: f64) -> Result<()> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothness r must be positive, got {r}"
            )));
        }
        if family == Family::H && r >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "H classes are defined here via first-order differences, needing 0 < r < 1, got {r}"
            )));
        }
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!("p must be in [1,∞], got {p}")));
        }
        if !(q >= 1.0) {
            return Err(Error::InvalidParameter(format!("q must be in [1,∞], got {q}")));
        }
        Ok(())
    }
}

/// The block norm of the given class:
///   W: ‖ (Σ_s 2^{2r‖s‖₁} |δ_s f|²)^{1/2} ‖_p   (exact via Parseval at p=2)
///   H: sup_s 2^{r‖s‖₁} ‖A_s f‖_p
///   B: (Σ_s 2^{r‖s‖₁ q} ‖A_s f‖_p^q)^{1/q},  q = ∞ reduces to H exactly.
/// Grid-based pieces are evaluated per block on block-local alias-free
/// grids at the given oversampling.
pub fn norm_smoothness(
    f: &TrigPolynomial,
    spec: &SmoothnessSpec,
    oversample: usize,
) -> Result<f64> {
    if f.is_empty() {
        return Ok(0.0);
    }
    match spec.family {
        Family::W => {
            if spec.p == 2.0 {
                let sum: f64 = f
                    .iter()
                    .map(|(k, c)| {
                        let l = k.block_of().level();
                        (2.0f64).powf(2.0 * spec.r * l as f64) * c.norm_sqr()
                    })
                    .sum();
                return Ok(sum.sqrt());
            }
            // Common grid: accumulate the weighted square function.
            let shape = aliasfree_resolution(&f.max_abs_freq(), oversample);
            let total: u128 = shape.iter().map(|&n| n as u128).product();
            if total > GRID_CAP as u128 {
                return Err(Error::ResourceLimit {
                    what: "square-function grid",
                    requested: total,
                    cap: GRID_CAP as u128,
                });
            }
            let mut acc = vec![0.0f64; total as usize];
            let mut by_block: BTreeMap<BlockIndex, TrigPolynomial> = BTreeMap::new();
            for (k, &c) in f.iter() {
                by_block
                    .entry(k.block_of())
                    .or_insert_with(|| TrigPolynomial::new(f.dim()))
                    .set_coeff(k.clone(), c);
            }
            for (s, piece) in by_block {
                let w = (2.0f64).powf(2.0 * spec.r * s.level() as f64);
                let g = synthesize(&piece, &shape)?;
                acc.par_iter_mut()
                    .zip(g.values().par_iter())
                    .for_each(|(a, z)| *a += w * z.norm_sqr());
            }
            let sq = GridFunction::from_values(
                &shape,
                acc.into_iter()
                    .map(|v| Complex64::new(v.sqrt(), 0.0))
                    .collect(),
            )?;
            Ok(norm_lp(&sq, spec.p))
        }
        Family::H | Family::B => {
            let q = if spec.family == Family::H {
                f64::INFINITY
            } else {
                spec.q
            };
            let blocks = block_decomposition(f);
            let mut evals = Vec::with_capacity(blocks.len());
            for (s, piece) in blocks {
                let nrm = norm_poly_lp(&piece, spec.p, oversample)?;
                evals.push((s.level(), nrm));
            }
            if q.is_infinite() {
                Ok(evals
                    .into_iter()
                    .map(|(l, nrm)| (2.0f64).powf(spec.r * l as f64) * nrm)
                    .fold(0.0f64, f64::max))
            } else {
                let sum: f64 = evals
                    .into_iter()
                    .map(|(l, nrm)| ((2.0f64).powf(spec.r * l as f64) * nrm).powf(q))
                    .sum();
                Ok(sum.powf(1.0 / q))
            }
        }
    }
}

/// Circular mixed first difference Δ_h^e f on the grid, with all shifts in
/// whole grid steps (exact rotations).
fn mixed_difference(f: &GridFunction, axes: &[usize], steps: &[usize]) -> GridFunction {
    debug_assert_eq!(axes.len(), steps.len());
    let shape = f.shape().to_vec();
    let mut cur = f.clone();
    for (&axis, &h) in axes.iter().zip(steps.iter()) {
        let n = shape[axis];
        let h = h % n;
        let stride: usize = shape[axis + 1..].iter().product();
        let block = n * stride;
        let mut next = cur.clone();
        next.values_mut()
            .par_chunks_exact_mut(block)
            .zip(cur.values().par_chunks_exact(block))
            .for_each(|(out, src)| {
                for j in 0..n {
                    let js = (j + h) % n;
                    for i in 0..stride {
                        out[j * stride + i] = src[js * stride + i] - src[j * stride + i];
                    }
                }
            });
        cur = next;
    }
    cur
}

/// Lower approximation of the Hölder–Nikolskii seminorm along the axes in
/// `e`: max over the supplied step vectors (in grid units) of
/// Π |h_i|^{−r} · ‖Δ_h^e f‖_p. An empty `e` returns ‖f‖_p.
pub fn seminorm_h_diff(
    f: &GridFunction,
    r: f64,
    p: f64,
    axes: &[usize],
    step_grid: &[Vec<usize>],
) -> f64 {
    if axes.is_empty() {
        return norm_lp(f, p);
    }
    let mut best = 0.0f64;
    for steps in step_grid {
        debug_assert_eq!(steps.len(), axes.len());
        if steps.iter().any(|&h| h == 0) {
            continue;
        }
        let diff = mixed_difference(f, axes, steps);
        let mut weight = 1.0;
        for (&axis, &h) in axes.iter().zip(steps.iter()) {
            let hval = std::f64::consts::TAU * h as f64 / f.shape()[axis] as f64;
            weight *= hval.powf(-r);
        }
        best = best.max(weight * norm_lp(&diff, p));
    }
    best
}

/// All dyadic step vectors (1, 2, 4, … N/2 per axis) for the given axes.
pub fn dyadic_steps(shape: &[usize], axes: &[usize]) -> Vec<Vec<usize>> {
    let per_axis: Vec<Vec<usize>> = axes
        .iter()
        .map(|&a| {
            let mut v = Vec::new();
            let mut h = 1usize;
            while h <= shape[a] / 2 {
                v.push(h);
                h *= 2;
            }
            v
        })
        .collect();
    let mut out = Vec::new();
    let mut cursor = vec![0usize; axes.len()];
    if per_axis.iter().any(|v| v.is_empty()) {
        return out;
    }
    loop {
        out.push(
            cursor
                .iter()
                .zip(per_axis.iter())
                .map(|(&i, v)| v[i])
                .collect(),
        );
        let mut axis = axes.len();
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            cursor[axis] += 1;
            if cursor[axis] < per_axis[axis].len() {
                break;
            }
            cursor[axis] = 0;
        }
    }
}

/// Quadrature value of (2π)^{−d} ∫ |Σ_{‖s‖₁≤n} A_s(x)| dx, the
/// L_∞ → L_∞ operator norm of the cross convolution operator. Uses the
/// tensor structure: summing the last axis first turns the inner sums into
/// plain de la Vallée Poussin kernels, so each point costs O(n^{d−1}).
pub fn l1_kernel_norm(n: u32, d: usize, oversample: usize) -> Result<f64> {
    if d == 0 || d > 3 {
        return Err(Error::InvalidParameter(
            "kernel quadrature supports 1 <= d <= 3".into(),
        ));
    }
    let npts = oversample
        .checked_mul(1usize << (n + 2))
        .ok_or(Error::Overflow("kernel quadrature resolution"))?;
    let total = (npts as u128).pow(d as u32);
    if total > GRID_CAP as u128 {
        return Err(Error::ResourceLimit {
            what: "kernel quadrature",
            requested: total,
            cap: GRID_CAP as u128,
        });
    }
    let t = |j: usize| std::f64::consts::TAU * j as f64 / npts as f64;
    // Per-axis tables: block kernels A_s and cumulative kernels V_{2^l}.
    let a_tab: Vec<Vec<f64>> = (0..=n)
        .map(|s| (0..npts).map(|j| block_eval(s, t(j))).collect())
        .collect();
    let v_tab: Vec<Vec<f64>> = (0..=n)
        .map(|l| (0..npts).map(|j| vp_eval(1 << l, t(j))).collect())
        .collect();
    let mean = match d {
        1 => {
            let sums: Vec<f64> = (0..npts)
                .into_par_iter()
                .chunks(SUM_CHUNK)
                .map(|js| js.into_iter().map(|j| v_tab[n as usize][j].abs()).sum())
                .collect();
            stable_sum(sums) / npts as f64
        }
        2 => {
            let row_sums: Vec<f64> = (0..npts)
                .into_par_iter()
                .map(|j1| {
                    let mut row = 0.0;
                    for j2 in 0..npts {
                        let mut v = 0.0;
                        for s1 in 0..=n as usize {
                            v += a_tab[s1][j1] * v_tab[n as usize - s1][j2];
                        }
                        row += v.abs();
                    }
                    row
                })
                .collect();
            stable_sum(row_sums) / (npts as f64).powi(2)
        }
        _ => {
            let row_sums: Vec<f64> = (0..npts * npts)
                .into_par_iter()
                .map(|idx| {
                    let (j1, j2) = (idx / npts, idx % npts);
                    let mut row = 0.0;
                    for j3 in 0..npts {
                        let mut v = 0.0;
                        for s1 in 0..=n as usize {
                            for s2 in 0..=(n as usize - s1) {
                                v += a_tab[s1][j1] * a_tab[s2][j2] * v_tab[n as usize - s1 - s2][j3];
                            }
                        }
                        row += v.abs();
                    }
                    row
                })
                .collect();
            stable_sum(row_sums) / (npts as f64).powi(3)
        }
    };
    Ok(mean)
}
