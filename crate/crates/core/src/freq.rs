//! Dyadic frequency blocks, step hyperbolic crosses and their layers.
//!
//! The frequency domain is Z^d. A dyadic block at scale vector `s` contains
//! the integer vectors whose j-th coordinate magnitude lies in
//! `[floor(2^(s_j - 1)), 2^(s_j))`; for `s_j = 0` this forces `k_j = 0`.
//! The step hyperbolic cross at level `n` is the union of all blocks with
//! `|s|_1 <= n`. Blocks are pairwise disjoint and their union over all `s`
//! exhausts Z^d, so everything here reduces to counting and enumerating
//! dyadic intervals per axis.

use crate::error::{Error, Result};
use smallvec::SmallVec;
use std::fmt;

/// Default cap on the number of frequencies any single enumeration may
/// produce. Exceeding it is an error, never silent truncation.
pub const DEFAULT_FREQ_CAP: u64 = 1 << 26;

/// A point of Z^d. Ordering is lexicographic, which fixes every
/// tie-breaking rule downstream.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FreqIndex(pub SmallVec<[i32; 4]>);

impl FreqIndex {
    pub fn new(k: impl Into<SmallVec<[i32; 4]>>) -> Self {
        FreqIndex(k.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i32] {
        &self.0
    }

    /// Largest coordinate magnitude.
    pub fn linf(&self) -> i64 {
        self.0.iter().map(|&k| (k as i64).abs()).max().unwrap_or(0)
    }

    /// Scale vector of the unique dyadic block containing this frequency:
    /// per axis the smallest `s` with `|k| < 2^s` (0 for `k = 0`).
    pub fn block_of(&self) -> BlockIndex {
        let s = self
            .0
            .iter()
            .map(|&k| {
                let a = (k as i64).unsigned_abs();
                if a == 0 {
                    0
                } else {
                    64 - a.leading_zeros()
                }
            })
            .collect();
        BlockIndex(s)
    }
}

impl fmt::Debug for FreqIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k{:?}", self.coords())
    }
}

/// A vector of dyadic scales, one per axis.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockIndex(pub SmallVec<[u32; 4]>);

impl BlockIndex {
    pub fn new(s: impl Into<SmallVec<[u32; 4]>>) -> Self {
        BlockIndex(s.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn scales(&self) -> &[u32] {
        &self.0
    }

    /// `|s|_1`, the total dyadic level of the block.
    pub fn level(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl fmt::Debug for BlockIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{:?}", self.scales())
    }
}

/// A finite set of frequencies, stored sorted lexicographically without
/// duplicates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreqSet {
    elements: Vec<FreqIndex>,
    dim: usize,
}

impl FreqSet {
    /// Builds a set from arbitrary input, sorting and deduplicating.
    pub fn from_vec(dim: usize, mut elements: Vec<FreqIndex>) -> Self {
        debug_assert!(elements.iter().all(|k| k.dim() == dim));
        elements.sort_unstable();
        elements.dedup();
        FreqSet { elements, dim }
    }

    pub fn empty(dim: usize) -> Self {
        FreqSet {
            elements: Vec::new(),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, k: &FreqIndex) -> bool {
        self.elements.binary_search(k).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = &FreqIndex> {
        self.elements.iter()
    }

    pub fn as_slice(&self) -> &[FreqIndex] {
        &self.elements
    }

    pub fn union(&self, other: &FreqSet) -> FreqSet {
        let mut v = self.elements.clone();
        v.extend(other.elements.iter().cloned());
        FreqSet::from_vec(self.dim, v)
    }

    pub fn difference(&self, other: &FreqSet) -> FreqSet {
        let v = self
            .elements
            .iter()
            .filter(|k| !other.contains(k))
            .cloned()
            .collect();
        FreqSet {
            elements: v,
            dim: self.dim,
        }
    }

    pub fn intersection(&self, other: &FreqSet) -> FreqSet {
        let v = self
            .elements
            .iter()
            .filter(|k| other.contains(k))
            .cloned()
            .collect();
        FreqSet {
            elements: v,
            dim: self.dim,
        }
    }
}

/// Integer range of magnitudes in the univariate dyadic block at scale `s`:
/// `[floor(2^(s-1)), 2^s)`. For `s = 0` this is the single value 0.
fn axis_magnitudes(s: u32) -> Vec<i32> {
    if s == 0 {
        return vec![0];
    }
    let lo = 1i64 << (s - 1);
    let hi = 1i64 << s;
    let mut out = Vec::with_capacity(2 * (hi - lo) as usize);
    for a in lo..hi {
        out.push(-(a as i32));
        out.push(a as i32);
    }
    out
}

/// All frequencies of the dyadic block at scale vector `s`.
/// The cardinality is exactly `2^(|s|_1)`.
pub fn block_indices(s: &BlockIndex) -> FreqSet {
    let per_axis: Vec<Vec<i32>> = s.scales().iter().map(|&sj| axis_magnitudes(sj)).collect();
    let mut elements = Vec::with_capacity(1usize << s.level().min(30));
    let mut cursor = vec![0usize; s.dim()];
    if per_axis.iter().any(|v| v.is_empty()) {
        return FreqSet::empty(s.dim());
    }
    loop {
        let k: SmallVec<[i32; 4]> = cursor
            .iter()
            .zip(per_axis.iter())
            .map(|(&i, axis)| axis[i])
            .collect();
        elements.push(FreqIndex(k));
        // odometer increment
        let mut axis = s.dim();
        loop {
            if axis == 0 {
                return FreqSet::from_vec(s.dim(), elements);
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

/// All scale vectors `s >= 0` of dimension `d` with `|s|_1 = level`.
pub fn scales_at_level(level: u32, d: usize) -> Vec<BlockIndex> {
    let mut out = Vec::new();
    let mut current: SmallVec<[u32; 4]> = SmallVec::from_elem(0, d);
    fn rec(axis: usize, remaining: u32, current: &mut SmallVec<[u32; 4]>, out: &mut Vec<BlockIndex>) {
        if axis + 1 == current.len() {
            current[axis] = remaining;
            out.push(BlockIndex(current.clone()));
            return;
        }
        for v in 0..=remaining {
            current[axis] = v;
            rec(axis + 1, remaining - v, current, out);
        }
    }
    rec(0, level, &mut current, &mut out);
    out
}

/// All scale vectors with `|s|_1 <= level`.
pub fn scales_up_to(level: u32, d: usize) -> Vec<BlockIndex> {
    (0..=level).flat_map(|l| scales_at_level(l, d)).collect()
}

/// Number of frequencies in the layer `Q_n \ Q_{n-1}`, i.e.
/// `2^n * binom(n + d - 1, d - 1)`, without materializing the set.
pub fn layer_rank(n: u32, d: usize) -> Result<u64> {
    let mut binom: u64 = 1;
    for i in 0..(d as u64 - 1) {
        binom = binom
            .checked_mul(n as u64 + i + 1)
            .ok_or(Error::Overflow("layer rank binomial"))?
            / (i + 1);
    }
    if n >= 64 {
        return Err(Error::Overflow("layer rank power of two"));
    }
    (1u64 << n)
        .checked_mul(binom)
        .ok_or(Error::Overflow("layer rank"))
}

/// Total number of frequencies in the step hyperbolic cross `Q_n`.
pub fn cross_cardinality(n: u32, d: usize) -> Result<u64> {
    let mut total: u64 = 0;
    for level in 0..=n {
        total = total
            .checked_add(layer_rank(level, d)?)
            .ok_or(Error::Overflow("cross cardinality"))?;
    }
    Ok(total)
}

/// The step hyperbolic cross `Q_n`: union of all dyadic blocks with
/// `|s|_1 <= n`. Errors if the cardinality exceeds `cap`.
pub fn cross_indices_with_cap(n: u32, d: usize, cap: u64) -> Result<FreqSet> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let size = cross_cardinality(n, d)?;
    if size > cap {
        return Err(Error::ResourceLimit {
            what: "hyperbolic cross enumeration",
            requested: size as u128,
            cap: cap as u128,
        });
    }
    let mut elements = Vec::with_capacity(size as usize);
    for s in scales_up_to(n, d) {
        elements.extend(block_indices(&s).elements);
    }
    Ok(FreqSet::from_vec(d, elements))
}

/// `cross_indices_with_cap` at the default cap.
pub fn cross_indices(n: u32, d: usize) -> Result<FreqSet> {
    cross_indices_with_cap(n, d, DEFAULT_FREQ_CAP)
}

/// The layer `Q_n \ Q_{n-1}` (equals `Q_0` for `n = 0`): union of the
/// blocks with `|s|_1 = n` exactly.
pub fn layer_indices(n: u32, d: usize) -> Result<FreqSet> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let size = layer_rank(n, d)?;
    if size > DEFAULT_FREQ_CAP {
        return Err(Error::ResourceLimit {
            what: "layer enumeration",
            requested: size as u128,
            cap: DEFAULT_FREQ_CAP as u128,
        });
    }
    let mut elements = Vec::with_capacity(size as usize);
    for s in scales_at_level(n, d) {
        elements.extend(block_indices(&s).elements);
    }
    Ok(FreqSet::from_vec(d, elements))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute-force oracle: scan the box |k_j| < 2^max_scale and test the
    /// defining inequalities directly.
    fn brute_force_block(s: &[u32]) -> Vec<Vec<i32>> {
        let d = s.len();
        let bound: i32 = 1 << s.iter().max().copied().unwrap_or(0);
        let mut out = Vec::new();
        let mut k = vec![-bound; d];
        'outer: loop {
            let inside = k.iter().zip(s.iter()).all(|(&kj, &sj)| {
                let lo = if sj == 0 { 0 } else { 1i64 << (sj - 1) };
                let hi = 1i64 << sj;
                let a = (kj as i64).abs();
                a >= lo && a < hi
            });
            if inside {
                out.push(k.clone());
            }
            for axis in (0..d).rev() {
                k[axis] += 1;
                if k[axis] <= bound {
                    continue 'outer;
                }
                k[axis] = -bound;
            }
            break;
        }
        out.sort();
        out
    }

    fn as_vecs(set: &FreqSet) -> Vec<Vec<i32>> {
        set.iter().map(|k| k.coords().to_vec()).collect()
    }

    #[test]
    fn zero_scale_block_is_origin() {
        let b = block_indices(&BlockIndex::new(vec![0u32, 0]));
        assert_eq!(b.len(), 1);
        assert!(b.contains(&FreqIndex::new(vec![0, 0])));
    }

    #[test]
    fn univariate_scale_one_block() {
        let b = block_indices(&BlockIndex::new(vec![1u32]));
        assert_eq!(as_vecs(&b), vec![vec![-1], vec![1]]);
    }

    #[test]
    fn block_matches_brute_force_enumeration() {
        for s in [&[2u32, 1][..], &[0, 3], &[2, 2], &[1, 1, 1], &[3, 0, 2]] {
            let fast = as_vecs(&block_indices(&BlockIndex::new(s.to_vec())));
            assert_eq!(fast, brute_force_block(s), "scale {:?}", s);
        }
        let b = block_indices(&BlockIndex::new(vec![2u32, 1]));
        assert_eq!(b.len(), 8);
        for k in b.iter() {
            let a0 = k.coords()[0].abs();
            assert!((2..=3).contains(&a0));
            assert_eq!(k.coords()[1].abs(), 1);
        }
    }

    #[test]
    fn cross_sizes() {
        // n=0 is the origin in every dimension
        for d in 1..=4 {
            let q0 = cross_indices(0, d).unwrap();
            assert_eq!(q0.len(), 1);
        }
        // d=1: |Q_n| = 2^{n+1} - 1
        assert_eq!(cross_indices(3, 1).unwrap().len(), 15);
        // d=2: |Q_n| = n 2^{n+1} + 1
        assert_eq!(cross_indices(2, 2).unwrap().len(), 17);
        for n in 0..=8u32 {
            assert_eq!(
                cross_cardinality(n, 2).unwrap(),
                (n as u64) * (1 << (n + 1)) + 1
            );
        }
    }

    #[test]
    fn layer_sizes_match_rank_formula() {
        assert_eq!(layer_rank(0, 3).unwrap(), 1);
        assert_eq!(layer_rank(5, 2).unwrap(), 192);
        assert_eq!(layer_rank(1, 4).unwrap(), 8);
        assert_eq!(layer_indices(3, 2).unwrap().len(), 32);
        assert_eq!(layer_indices(2, 3).unwrap().len(), 24);
        for d in 1..=4usize {
            for n in 0..=7u32 {
                assert_eq!(
                    layer_indices(n, d).unwrap().len() as u64,
                    layer_rank(n, d).unwrap(),
                    "n={n} d={d}"
                );
            }
        }
    }

    #[test]
    fn layers_partition_the_cross() {
        for d in 1..=3usize {
            for n in 0..=6u32 {
                let q = cross_indices(n, d).unwrap();
                let mut union = FreqSet::empty(d);
                let mut total = 0;
                for v in 0..=n {
                    let layer = layer_indices(v, d).unwrap();
                    total += layer.len();
                    union = union.union(&layer);
                }
                assert_eq!(union, q);
                assert_eq!(total, q.len(), "layers overlap for n={n} d={d}");
                if n > 0 {
                    let prev = cross_indices(n - 1, d).unwrap();
                    assert!(prev.iter().all(|k| q.contains(k)), "nesting failed");
                }
            }
        }
    }

    #[test]
    fn cross_is_contained_in_linf_box() {
        for d in 1..=3usize {
            for n in 0..=6u32 {
                let q = cross_indices(n, d).unwrap();
                assert!(q.iter().all(|k| k.linf() < (1 << n).max(1)));
            }
        }
    }

    #[test]
    fn block_of_inverts_enumeration() {
        for s in scales_up_to(6, 2) {
            for k in block_indices(&s).iter() {
                assert_eq!(k.block_of(), s);
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let err = cross_indices_with_cap(4, 2, 10).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { .. }));
    }

    proptest! {
        #[test]
        fn block_cardinality_law(scales in proptest::collection::vec(0u32..=4, 1..=4)) {
            let s = BlockIndex::new(scales);
            let expected = 1u64 << s.level();
            prop_assert_eq!(block_indices(&s).len() as u64, expected);
        }

        #[test]
        fn distinct_blocks_are_disjoint(
            a in proptest::collection::vec(0u32..=3, 2),
            b in proptest::collection::vec(0u32..=3, 2),
        ) {
            let (sa, sb) = (BlockIndex::new(a), BlockIndex::new(b));
            if sa != sb {
                let inter = block_indices(&sa).intersection(&block_indices(&sb));
                prop_assert!(inter.is_empty());
            }
        }
    }
}
