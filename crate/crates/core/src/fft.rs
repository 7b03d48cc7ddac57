//! d-dimensional complex FFT on a [`Grid`].
//!
//! Each pass transforms along the contiguous last axis and then rotates the
//! axes cyclically, so after `d` passes every axis has been transformed and
//! the layout is back to the original order.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::exec;
use crate::grid::Grid;

type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("fft plan cache poisoned");
    map.entry((n, inverse))
        .or_insert_with(|| {
            let dir = if inverse {
                FftDirection::Inverse
            } else {
                FftDirection::Forward
            };
            FftPlanner::new().plan_fft(n, dir)
        })
        .clone()
}

fn transform_rows(data: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    let rows = data.len() / n;
    let rows_per_task = (rows / 64).max(1);
    exec::for_each_chunk_mut(data, rows_per_task * n, |_, chunk| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
    });
}

/// `dst[r·m + q] = src[q·n + r]` for an `m × n` row-major `src`.
fn rotate_axes(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    let m = src.len() / n;
    exec::for_each_chunk_mut(dst, m, |r, out| {
        for (q, o) in out.iter_mut().enumerate() {
            *o = src[q * n + r];
        }
    });
}

fn transform(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    assert_eq!(data.len(), grid.len(), "data length does not match grid");
    let n = grid.n();
    let fft = plan(n, inverse);
    let mut buf = vec![Complex64::new(0.0, 0.0); data.len()];
    for _ in 0..grid.d() {
        transform_rows(data, n, &fft);
        rotate_axes(data, &mut buf, n);
        data.copy_from_slice(&buf);
    }
}

/// Unnormalized forward transform, `f̂(k) = Σ_x f(x) e^{-i k·(x - x_0)}`.
pub fn forward(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, false);
}

/// Inverse transform including the `1/N` normalization.
pub fn inverse(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, true);
    let s = 1.0 / grid.len() as f64;
    data.iter_mut().for_each(|v| *v *= s);
}
