//! Uniform tensor grids over [0,2π)^d and the FFT analysis/synthesis
//! machinery between grids and sparse spectra.
//!
//! Layout is row-major with axis 0 slowest; the grid point of multi-index
//! (j_1,…,j_d) is x_i = 2π j_i / N_i. Transforms are applied axis by axis;
//! the last axis is processed in place over contiguous chunks, other axes
//! through a gather/scatter with per-line scratch. Chunks are independent,
//! so rayon parallelism is safe and deterministic.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

/// Cap on the total number of grid points a single `GridFunction` may hold.
pub const GRID_CAP: u64 = 1 << 26;

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    shape: Vec<usize>,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(shape: &[usize]) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&n| n == 0) {
            return Err(Error::InvalidParameter(
                "grid shape must be non-empty with positive extents".into(),
            ));
        }
        let total: u128 = shape.iter().map(|&n| n as u128).product();
        if total > GRID_CAP as u128 {
            return Err(Error::ResourceLimit {
                what: "grid allocation",
                requested: total,
                cap: GRID_CAP as u128,
            });
        }
        Ok(GridFunction {
            shape: shape.to_vec(),
            values: vec![Complex64::ZERO; total as usize],
        })
    }

    pub fn from_values(shape: &[usize], values: Vec<Complex64>) -> Result<Self> {
        let mut g = GridFunction::zeros(shape)?;
        if values.len() != g.values.len() {
            return Err(Error::DimensionMismatch {
                expected: g.values.len(),
                got: values.len(),
            });
        }
        g.values = values;
        Ok(g)
    }

    /// Fills the grid by evaluating a function at every point. Intended for
    /// oracles and small grids; O(total · cost of f).
    pub fn from_fn(shape: &[usize], f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let mut g = GridFunction::zeros(shape)?;
        let d = shape.len();
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0f64; d];
        for v in g.values.iter_mut() {
            for j in 0..d {
                x[j] = std::f64::consts::TAU * idx[j] as f64 / shape[j] as f64;
            }
            *v = f(&x);
            let mut axis = d;
            while axis > 0 {
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < shape[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut flat = 0;
        for (j, &i) in idx.iter().enumerate() {
            debug_assert!(i < self.shape[j]);
            flat = flat * self.shape[j] + i;
        }
        flat
    }

    pub fn at(&self, idx: &[usize]) -> Complex64 {
        self.values[self.flat_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: Complex64) {
        let flat = self.flat_index(idx);
        self.values[flat] = v;
    }
}

/// In-place FFT along every axis. Forward uses the e^{−ikx} sign and no
/// normalization; inverse uses e^{+ikx}, also unnormalized.
pub(crate) fn fft_all_axes(values: &mut [Complex64], shape: &[usize], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let direction = if inverse {
        FftDirection::Inverse
    } else {
        FftDirection::Forward
    };
    let total = values.len();
    for (axis, &n) in shape.iter().enumerate() {
        if n == 1 {
            continue;
        }
        let fft: Arc<dyn Fft<f64>> = planner.plan_fft(n, direction);
        let stride: usize = shape[axis + 1..].iter().product();
        let block = n * stride;
        debug_assert_eq!(total % block, 0);
        if stride == 1 {
            values.par_chunks_exact_mut(n).for_each_init(
                || vec![Complex64::ZERO; fft.get_inplace_scratch_len()],
                |scratch, chunk| fft.process_with_scratch(chunk, scratch),
            );
        } else {
            values.par_chunks_exact_mut(block).for_each_init(
                || {
                    (
                        vec![Complex64::ZERO; n],
                        vec![Complex64::ZERO; fft.get_inplace_scratch_len()],
                    )
                },
                |(line, scratch), chunk| {
                    for i in 0..stride {
                        for j in 0..n {
                            line[j] = chunk[j * stride + i];
                        }
                        fft.process_with_scratch(line, scratch);
                        for j in 0..n {
                            chunk[j * stride + i] = line[j];
                        }
                    }
                },
            );
        }
    }
}

/// Plans a single 1-D FFT; shared helper for the streaming evaluators.
pub(crate) fn plan_fft_1d(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::<f64>::new();
    let direction = if inverse {
        FftDirection::Inverse
    } else {
        FftDirection::Forward
    };
    planner.plan_fft(n, direction)
}
