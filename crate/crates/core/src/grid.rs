//! Periodic computational torus and the functions that live on it.
//!
//! Nodes are stored row-major with the last axis contiguous. Node `j` along
//! an axis sits at `-L/2 + j·h`, so the box is centered at the origin of `ℝ^d`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_grid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    d: usize,
    n_per_axis: usize,
    box_length: f64,
}

impl Grid {
    pub fn new(d: usize, n_per_axis: usize, box_length: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be ≥ 1".into()));
        }
        if n_per_axis < 2 || !n_per_axis.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "n_per_axis must be an even integer ≥ 2 (got {n_per_axis})"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "box length must be positive (got {box_length})"
            )));
        }
        if n_per_axis.checked_pow(d as u32).is_none() {
            return Err(Error::InvalidParameter("grid too large".into()));
        }
        Ok(Self {
            d,
            n_per_axis,
            box_length,
        })
    }

    /// Three-dimensional grid; panics on invalid input. Intended for tests and
    /// fixed experiment setups.
    pub fn cube(n_per_axis: usize, box_length: f64) -> Self {
        Self::new(3, n_per_axis, box_length).expect("valid cube grid")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n_per_axis
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Cell width `h = L / n`.
    pub fn h(&self) -> f64 {
        self.box_length / self.n_per_axis as f64
    }

    /// Number of nodes, `n^d`.
    pub fn len(&self) -> usize {
        self.n_per_axis.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.d as i32)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(self.d as i32)
    }

    /// Signed frequency index in `[-n/2, n/2)` for storage index `j`.
    pub fn frequency_index(&self, j: usize) -> i64 {
        let n = self.n_per_axis as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Angular wavenumber `2π m / L` for storage index `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.frequency_index(j) as f64 / self.box_length
    }

    /// True if storage index `j` is the unpaired Nyquist frequency `-n/2`.
    pub fn is_nyquist(&self, j: usize) -> bool {
        j == self.n_per_axis / 2
    }

    pub fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for a in (0..self.d).rev() {
            out[a] = idx % self.n_per_axis;
            idx /= self.n_per_axis;
        }
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .fold(0, |acc, &j| acc * self.n_per_axis + (j % self.n_per_axis))
    }

    /// Coordinate of node index `j` along one axis.
    pub fn coordinate(&self, j: usize) -> f64 {
        -0.5 * self.box_length + j as f64 * self.h()
    }

    pub fn position(&self, idx: usize, out: &mut [f64]) {
        let mut m = vec![0usize; self.d];
        self.multi_index(idx, &mut m);
        for (o, &j) in out.iter_mut().zip(&m) {
            *o = self.coordinate(j);
        }
    }

    /// Wave vector and `|k|²` for storage index `idx`.
    pub fn wave_vector(&self, idx: usize, out: &mut [f64]) -> f64 {
        let mut m = vec![0usize; self.d];
        self.multi_index(idx, &mut m);
        let mut k2 = 0.0;
        for (o, &j) in out.iter_mut().zip(&m) {
            *o = self.wavenumber(j);
            k2 += *o * *o;
        }
        k2
    }

    /// Index of the node nearest to `x` (periodic wrap).
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let h = self.h();
        let n = self.n_per_axis as i64;
        let multi: Vec<usize> = x
            .iter()
            .map(|&xi| {
                let j = ((xi + 0.5 * self.box_length) / h).round() as i64;
                j.rem_euclid(n) as usize
            })
            .collect();
        self.linear_index(&multi)
    }

    /// Minimum-image displacement `x - y` on the torus.
    pub fn periodic_displacement(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let l = self.box_length;
        for ((o, &a), &b) in out.iter_mut().zip(x).zip(y) {
            let mut v = a - b;
            v -= l * (v / l).round();
            *o = v;
        }
    }
}

/// Complex samples of a scalar function on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: Complex64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn<F: Fn(&[f64]) -> Complex64>(grid: Grid, f: F) -> Self {
        let mut x = vec![0.0; grid.d()];
        let values = (0..grid.len())
            .map(|i| {
                grid.position(i, &mut x);
                f(&x)
            })
            .collect();
        Self { grid, values }
    }

    pub fn from_real_fn<F: Fn(&[f64]) -> f64>(grid: Grid, f: F) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Unit-mass discrete delta at node `idx` (value `h^{-d}`).
    pub fn delta(grid: Grid, idx: usize) -> Self {
        let mut f = Self::zeros(grid);
        f.values[idx] = Complex64::new(1.0 / grid.cell_volume(), 0.0);
        f
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn scale_mut(&mut self, s: Complex64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: Complex64, other: &Self) -> Result<Self> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a + s * b)
                .collect(),
        })
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        ensure_same_grid(&self.grid, &other.grid)?;
        self.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(a, &b)| *a += b);
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    /// Trigonometric interpolant evaluated at an arbitrary point. The Nyquist
    /// mode contributes through `cos`, which keeps real data real.
    pub fn interpolate(&self, x: &[f64]) -> Complex64 {
        let g = self.grid;
        let mut spec = self.values.clone();
        crate::fft::forward(&g, &mut spec);
        let n = g.len() as f64;
        let d = g.d();
        let mut m = vec![0usize; d];
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, &c) in spec.iter().enumerate() {
            g.multi_index(idx, &mut m);
            let mut phase = Complex64::new(1.0, 0.0);
            for a in 0..d {
                let k = g.wavenumber(m[a]);
                let y = x[a] + 0.5 * g.box_length();
                if g.is_nyquist(m[a]) {
                    phase *= (k * y).cos();
                } else {
                    phase *= Complex64::from_polar(1.0, k * y);
                }
            }
            acc += c * phase;
        }
        acc / n
    }
}

/// `d` complex components per node, stored component-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GridVectorField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl GridVectorField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.d() * grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} components, got {}",
                grid.d() * grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.d() * grid.len()],
        }
    }

    /// Builds a real field; `f(x, out)` writes the `d` components at `x`.
    pub fn from_real_fn<F: Fn(&[f64], &mut [f64])>(grid: Grid, f: F) -> Self {
        let d = grid.d();
        let len = grid.len();
        let mut values = vec![Complex64::new(0.0, 0.0); d * len];
        let mut x = vec![0.0; d];
        let mut b = vec![0.0; d];
        for i in 0..len {
            grid.position(i, &mut x);
            b.iter_mut().for_each(|v| *v = 0.0);
            f(&x, &mut b);
            for a in 0..d {
                values[a * len + i] = Complex64::new(b[a], 0.0);
            }
        }
        Self { grid, values }
    }

    pub fn from_components(grid: Grid, comps: Vec<Vec<Complex64>>) -> Result<Self> {
        if comps.len() != grid.d() {
            return Err(Error::InvalidParameter("component count must equal d".into()));
        }
        let values: Vec<Complex64> = comps.into_iter().flatten().collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn component(&self, a: usize) -> &[Complex64] {
        let len = self.grid.len();
        &self.values[a * len..(a + 1) * len]
    }

    pub fn component_mut(&mut self, a: usize) -> &mut [Complex64] {
        let len = self.grid.len();
        &mut self.values[a * len..(a + 1) * len]
    }

    pub fn component_function(&self, a: usize) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.component(a).to_vec(),
        }
    }

    /// Nodewise Euclidean magnitude `|b(x)|`.
    pub fn magnitude(&self) -> Vec<f64> {
        let len = self.grid.len();
        (0..len)
            .map(|i| {
                (0..self.grid.d())
                    .map(|a| self.values[a * len + i].norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude().into_iter().fold(0.0, f64::max)
    }

    pub fn at(&self, idx: usize, out: &mut [Complex64]) {
        let len = self.grid.len();
        for (a, o) in out.iter_mut().enumerate() {
            *o = self.values[a * len + idx];
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a + b)
                .collect(),
        })
    }

    /// Nodewise map over the component vector.
    pub fn map_nodes<F: Fn(&mut [Complex64])>(&self, f: F) -> Self {
        let len = self.grid.len();
        let d = self.grid.d();
        let mut out = self.clone();
        let mut buf = vec![Complex64::new(0.0, 0.0); d];
        for i in 0..len {
            for (a, slot) in buf.iter_mut().enumerate() {
                *slot = self.values[a * len + i];
            }
            f(&mut buf);
            for (a, v) in buf.iter().enumerate() {
                out.values[a * len + i] = *v;
            }
        }
        out
    }

    /// Pointwise dot product `w·v` with a second field (no conjugation).
    pub fn dot(&self, other: &Self) -> Result<GridFunction> {
        ensure_same_grid(&self.grid, &other.grid)?;
        let len = self.grid.len();
        let mut values = vec![Complex64::new(0.0, 0.0); len];
        for a in 0..self.grid.d() {
            let (x, y) = (self.component(a), other.component(a));
            for i in 0..len {
                values[i] += x[i] * y[i];
            }
        }
        Ok(GridFunction {
            grid: self.grid,
            values,
        })
    }

    /// Periodic trilinear (multilinear) interpolation of the real parts.
    pub fn interpolate_real(&self, x: &[f64], out: &mut [f64]) {
        let g = self.grid;
        let d = g.d();
        let n = g.n() as i64;
        let h = g.h();
        let len = g.len();
        let mut base = vec![0i64; d];
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let s = (x[a] + 0.5 * g.box_length()) / h;
            let fl = s.floor();
            base[a] = fl as i64;
            frac[a] = s - fl;
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut multi = vec![0usize; d];
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            for a in 0..d {
                let bit = (corner >> a) & 1;
                multi[a] = (base[a] + bit as i64).rem_euclid(n) as usize;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w == 0.0 {
                continue;
            }
            let idx = g.linear_index(&multi);
            for (a, o) in out.iter_mut().enumerate() {
                *o += w * self.values[a * len + idx].re;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_or_tiny_grids() {
        assert!(Grid::new(3, 7, 1.0).is_err());
        assert!(Grid::new(3, 0, 1.0).is_err());
        assert!(Grid::new(3, 8, 0.0).is_err());
        assert!(Grid::new(0, 8, 1.0).is_err());
    }

    #[test]
    fn frequencies_cover_half_open_range_once() {
        let g = Grid::new(1, 8, 2.0 * std::f64::consts::PI).unwrap();
        let f: Vec<i64> = (0..8).map(|j| g.frequency_index(j)).collect();
        assert_eq!(f, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(f.iter().filter(|&&m| m == 0).count(), 1);
        assert!((g.h() * 8.0 - g.box_length()).abs() < 1e-15);
        assert!(g.is_nyquist(4));
    }

    #[test]
    fn index_roundtrip() {
        let g = Grid::cube(8, 1.0);
        let mut m = [0usize; 3];
        for idx in [0, 1, 7, 8, 63, 64, 511] {
            g.multi_index(idx, &mut m);
            assert_eq!(g.linear_index(&m), idx);
        }
    }

    #[test]
    fn box_is_centered() {
        let g = Grid::cube(8, 4.0);
        assert_eq!(g.coordinate(0), -2.0);
        assert_eq!(g.coordinate(4), 0.0);
        let mut x = [0.0; 3];
        g.position(g.nearest_node(&[0.1, -0.2, 1.9]), &mut x);
        // 1.9 rounds to the node at +2, which wraps to -2.
        assert_eq!(x, [0.0, 0.0, -2.0]);
    }

    #[test]
    fn delta_has_unit_mass() {
        let g = Grid::cube(8, 2.0);
        let f = GridFunction::delta(g, 17);
        let mass: f64 = f.values().iter().map(|v| v.re).sum::<f64>() * g.cell_volume();
        assert!((mass - 1.0).abs() < 1e-14);
    }

    #[test]
    fn trilinear_interpolation_reproduces_nodes_and_linear_profiles() {
        let g = Grid::cube(8, 8.0);
        let b = GridVectorField::from_real_fn(g, |x, out| {
            out[0] = x[0];
            out[1] = 2.0;
            out[2] = x[1] + x[2];
        });
        let mut out = [0.0; 3];
        b.interpolate_real(&[0.3, -1.2, 0.5], &mut out);
        assert!((out[0] - 0.3).abs() < 1e-12);
        assert!((out[1] - 2.0).abs() < 1e-12);
        assert!((out[2] - (-0.7)).abs() < 1e-12);
    }

    #[test]
    fn trig_interpolation_is_exact_for_band_limited_data() {
        let g = Grid::cube(8, 2.0 * std::f64::consts::PI);
        let f = GridFunction::from_real_fn(g, |x| (x[0]).sin() + (2.0 * x[1]).cos());
        let x = [0.37, -1.1, 2.0];
        let v = f.interpolate(&x);
        assert!((v.re - (0.37f64.sin() + (-2.2f64).cos())).abs() < 1e-12);
        assert!(v.im.abs() < 1e-12);
    }
}
