//! Fourier multipliers, spectral derivatives, discrete norms and pairings.
//!
//! Odd-order derivative symbols vanish at the Nyquist frequency so that real
//! inputs stay real; the Laplacian keeps `-k²` there.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{ensure_same_grid, Error, Result};
use crate::exec;
use crate::fft;
use crate::grid::{Grid, GridFunction, GridVectorField};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Per-node wave vectors of a grid.
#[derive(Debug)]
pub struct Spectrum {
    grid: Grid,
    /// `k_j` per axis, zero on the Nyquist plane of that axis.
    k: Vec<Vec<f64>>,
    k2: Vec<f64>,
}

impl Spectrum {
    /// Shared, cached spectrum for `grid`.
    pub fn of(grid: &Grid) -> Arc<Spectrum> {
        type Cache = Mutex<HashMap<(usize, usize, u64), Arc<Spectrum>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let key = (grid.d(), grid.n(), grid.box_length().to_bits());
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("spectrum cache poisoned");
        map.entry(key)
            .or_insert_with(|| Arc::new(Spectrum::build(*grid)))
            .clone()
    }

    fn build(grid: Grid) -> Self {
        let d = grid.d();
        let len = grid.len();
        let mut k = vec![vec![0.0; len]; d];
        let mut k2 = vec![0.0; len];
        let mut m = vec![0usize; d];
        for idx in 0..len {
            grid.multi_index(idx, &mut m);
            for a in 0..d {
                let w = grid.wavenumber(m[a]);
                k2[idx] += w * w;
                k[a][idx] = if grid.is_nyquist(m[a]) { 0.0 } else { w };
            }
        }
        Self { grid, k, k2 }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k_squared(&self) -> &[f64] {
        &self.k2
    }

    pub fn k_component(&self, a: usize) -> &[f64] {
        &self.k[a]
    }
}

/// Closed-form symbol `(ζ + |k|²)^{-α}`, optionally multiplied by `i k_j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiplierSymbol {
    pub zeta: Complex64,
    pub alpha: f64,
    pub derivative: Option<usize>,
}

impl MultiplierSymbol {
    pub fn resolvent_power(zeta: Complex64, alpha: f64) -> Self {
        Self {
            zeta,
            alpha,
            derivative: None,
        }
    }

    pub fn gradient_component(zeta: Complex64, alpha: f64, j: usize) -> Self {
        Self {
            zeta,
            alpha,
            derivative: Some(j),
        }
    }

    /// Tabulates the symbol on the grid's frequency set.
    pub fn table(&self, grid: &Grid) -> Result<Vec<Complex64>> {
        let mut t = resolvent_table(grid, self.zeta, self.alpha)?;
        if let Some(j) = self.derivative {
            if j >= grid.d() {
                return Err(Error::InvalidParameter(format!(
                    "derivative index {j} out of range for d = {}",
                    grid.d()
                )));
            }
            let spec = Spectrum::of(grid);
            for (v, &kj) in t.iter_mut().zip(spec.k_component(j)) {
                *v *= I * kj;
            }
        }
        Ok(t)
    }
}

/// `(ζ + |k|²)^{-α}` on the principal branch, tabulated per node.
pub fn resolvent_table(grid: &Grid, zeta: Complex64, alpha: f64) -> Result<Vec<Complex64>> {
    if !(zeta.re > 0.0) {
        return Err(Error::HalfPlane(zeta.re));
    }
    let spec = Spectrum::of(grid);
    Ok(spec
        .k_squared()
        .iter()
        .map(|&k2| {
            if alpha == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                (zeta + k2).powf(-alpha)
            }
        })
        .collect())
}

/// Tabulates an arbitrary radial symbol `σ(|k|²)`.
pub fn radial_table<F: Fn(f64) -> Complex64>(grid: &Grid, sigma: F) -> Vec<Complex64> {
    Spectrum::of(grid).k_squared().iter().map(|&k2| sigma(k2)).collect()
}

pub fn apply_multiplier(sym: &MultiplierSymbol, f: &GridFunction) -> Result<GridFunction> {
    let table = sym.table(f.grid())?;
    apply_table(&table, f)
}

/// `F^{-1}[σ · F f]` for a tabulated symbol `σ`.
pub fn apply_table(table: &[Complex64], f: &GridFunction) -> Result<GridFunction> {
    let grid = *f.grid();
    if table.len() != grid.len() {
        return Err(Error::InvalidParameter("symbol table length mismatch".into()));
    }
    let mut v = f.values().to_vec();
    fft::forward(&grid, &mut v);
    multiply_into(&mut v, table);
    fft::inverse(&grid, &mut v);
    GridFunction::new(grid, v)
}

fn multiply_into(v: &mut [Complex64], table: &[Complex64]) {
    let chunk = (v.len() / 64).max(1024);
    exec::for_each_chunk_mut(v, chunk, |c, out| {
        let base = c * chunk;
        for (i, x) in out.iter_mut().enumerate() {
            *x *= table[base + i];
        }
    });
}

/// `∇ F^{-1}[σ · F f]`: one forward and `d` inverse transforms.
pub fn gradient_of_table(table: Option<&[Complex64]>, f: &GridFunction) -> Result<GridVectorField> {
    let grid = *f.grid();
    let spec = Spectrum::of(&grid);
    let mut fhat = f.values().to_vec();
    fft::forward(&grid, &mut fhat);
    if let Some(t) = table {
        if t.len() != grid.len() {
            return Err(Error::InvalidParameter("symbol table length mismatch".into()));
        }
        multiply_into(&mut fhat, t);
    }
    let comps = (0..grid.d())
        .map(|a| {
            let mut c: Vec<Complex64> = fhat
                .iter()
                .zip(spec.k_component(a))
                .map(|(&v, &k)| v * I * k)
                .collect();
            fft::inverse(&grid, &mut c);
            c
        })
        .collect();
    GridVectorField::from_components(grid, comps)
}

pub fn gradient_apply(f: &GridFunction) -> Result<GridVectorField> {
    gradient_of_table(None, f)
}

/// `Σ_j ∂_j v_j`.
pub fn divergence_apply(v: &GridVectorField) -> Result<GridFunction> {
    let grid = *v.grid();
    let spec = Spectrum::of(&grid);
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    for a in 0..grid.d() {
        let mut c = v.component(a).to_vec();
        fft::forward(&grid, &mut c);
        for ((s, &x), &k) in acc.iter_mut().zip(&c).zip(spec.k_component(a)) {
            *s += x * I * k;
        }
    }
    fft::inverse(&grid, &mut acc);
    GridFunction::new(grid, acc)
}

pub fn laplacian_apply(f: &GridFunction) -> Result<GridFunction> {
    let table = radial_table(f.grid(), |k2| Complex64::new(-k2, 0.0));
    apply_table(&table, f)
}

/// Discrete `(h^d Σ|f|^p)^{1/p}`; `p = ∞` gives the sup norm.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    lp_norm_values(f.grid(), f.values(), p)
}

pub(crate) fn lp_norm_values(grid: &Grid, values: &[Complex64], p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("norm exponent must be ≥ 1 (got {p})")));
    }
    if p.is_infinite() {
        return Ok(values.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    let hd = grid.cell_volume();
    let s: f64 = if p == 2.0 {
        values.iter().map(|z| z.norm_sqr()).sum()
    } else if p == 1.0 {
        values.iter().map(|z| z.norm()).sum()
    } else {
        values.iter().map(|z| z.norm().powf(p)).sum()
    };
    Ok((hd * s).powf(1.0 / p))
}

/// `L²` norm computed on the frequency side (Parseval).
pub fn l2_norm_spectral(f: &GridFunction) -> f64 {
    let grid = *f.grid();
    let mut v = f.values().to_vec();
    fft::forward(&grid, &mut v);
    let s: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    (grid.cell_volume() * s / grid.len() as f64).sqrt()
}

/// `h^d Σ u v̄`.
pub fn pairing(u: &GridFunction, v: &GridFunction) -> Result<Complex64> {
    ensure_same_grid(u.grid(), v.grid())?;
    let s: Complex64 = u
        .values()
        .iter()
        .zip(v.values())
        .map(|(&a, &b)| a * b.conj())
        .sum();
    Ok(s * u.grid().cell_volume())
}

/// `‖(1 - Δ)^{α/2} f‖_p`.
pub fn bessel_norm(f: &GridFunction, alpha: f64, p: f64) -> Result<f64> {
    if alpha == 0.0 {
        return lp_norm(f, p);
    }
    let g = apply_multiplier(
        &MultiplierSymbol::resolvent_power(Complex64::new(1.0, 0.0), -alpha / 2.0),
        f,
    )?;
    lp_norm(&g, p)
}

pub fn multiply_pointwise(w: &GridFunction, f: &GridFunction) -> Result<GridFunction> {
    ensure_same_grid(w.grid(), f.grid())?;
    GridFunction::new(
        *f.grid(),
        w.values()
            .iter()
            .zip(f.values())
            .map(|(&a, &b)| a * b)
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random(grid: Grid, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..grid.len())
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        GridFunction::new(grid, v).unwrap()
    }

    fn max_diff(a: &GridFunction, b: &GridFunction) -> f64 {
        a.sub(b).unwrap().max_abs()
    }

    #[test]
    fn constant_is_fixed_by_unit_resolvent() {
        let g = Grid::cube(8, 3.0);
        let one = GridFunction::constant(g, c(1.0));
        let out = apply_multiplier(&MultiplierSymbol::resolvent_power(c(1.0), 1.0), &one).unwrap();
        assert!(max_diff(&out, &one) < 1e-14);
        let half =
            apply_multiplier(&MultiplierSymbol::resolvent_power(c(2.0), 1.0), &one).unwrap();
        assert!(max_diff(&half, &GridFunction::constant(g, c(0.5))) < 1e-14);
    }

    #[test]
    fn gradient_resolvent_on_single_mode() {
        let g = Grid::cube(16, 2.0 * PI);
        let f = GridFunction::from_real_fn(g, |x| x[0].sin());
        let out =
            apply_multiplier(&MultiplierSymbol::gradient_component(c(1.0), 1.0, 0), &f).unwrap();
        let expect = GridFunction::from_real_fn(g, |x| x[0].cos() / 2.0);
        assert!(max_diff(&out, &expect) < 1e-13);
    }

    #[test]
    fn rejects_left_half_plane() {
        let g = Grid::cube(4, 1.0);
        let f = GridFunction::zeros(g);
        let err = apply_multiplier(&MultiplierSymbol::resolvent_power(c(0.0), 1.0), &f);
        assert!(matches!(err, Err(Error::HalfPlane(_))));
    }

    #[test]
    fn norms_of_simple_functions() {
        let g = Grid::cube(8, 1.0);
        let f = GridFunction::constant(g, c(3.0));
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((lp_norm(&f, p).unwrap() - 3.0).abs() < 1e-12);
        }
        let mut cell = GridFunction::zeros(g);
        cell.values_mut()[5] = c(1.0);
        assert!((lp_norm(&cell, 1.0).unwrap() - g.cell_volume()).abs() < 1e-15);
        assert!(lp_norm(&cell, 0.5).is_err());
    }

    #[test]
    fn pairing_basics() {
        let g = Grid::cube(8, 1.0);
        let one = GridFunction::constant(g, c(1.0));
        assert!((pairing(&one, &one).unwrap() - c(1.0)).norm() < 1e-14);
        let s = GridFunction::from_real_fn(g, |x| (2.0 * PI * x[0]).sin());
        let co = GridFunction::from_real_fn(g, |x| (2.0 * PI * x[0]).cos());
        assert!(pairing(&s, &co).unwrap().norm() < 1e-14);
        let u = random(g, 1);
        let n2 = lp_norm(&u, 2.0).unwrap();
        assert!((pairing(&u, &u).unwrap().re - n2 * n2).abs() < 1e-12);
    }

    #[test]
    fn parseval_and_identity_symbol() {
        let g = Grid::cube(8, 2.5);
        let f = random(g, 2);
        let a = lp_norm(&f, 2.0).unwrap();
        assert!((l2_norm_spectral(&f) - a).abs() / a < 1e-12);
        let id = apply_table(&vec![c(1.0); g.len()], &f).unwrap();
        assert!(max_diff(&id, &f) / f.max_abs() < 1e-12);
    }

    #[test]
    fn powers_compose_on_principal_branch() {
        let g = Grid::cube(8, 2.0);
        let f = random(g, 3);
        let z = Complex64::new(0.3, -5.0);
        let a = MultiplierSymbol::resolvent_power(z, 0.3);
        let b = MultiplierSymbol::resolvent_power(z, 0.45);
        let ab = MultiplierSymbol::resolvent_power(z, 0.75);
        let two = apply_multiplier(&b, &apply_multiplier(&a, &f).unwrap()).unwrap();
        let one = apply_multiplier(&ab, &f).unwrap();
        assert!(max_diff(&two, &one) / one.max_abs() < 1e-10);
    }

    #[test]
    fn resolvent_solves_shifted_equation() {
        let g = Grid::cube(8, 2.0);
        let f = random(g, 4);
        let z = Complex64::new(2.0, 1.0);
        let u = apply_multiplier(&MultiplierSymbol::resolvent_power(z, 1.0), &f).unwrap();
        let lhs = u.scaled(z).sub(&laplacian_apply(&u).unwrap()).unwrap();
        assert!(max_diff(&lhs, &f) / f.max_abs() < 1e-10);
    }

    #[test]
    fn laplacian_of_modes_and_constants() {
        let g = Grid::cube(8, 2.0 * PI);
        let one = GridFunction::constant(g, c(1.0));
        assert!(laplacian_apply(&one).unwrap().max_abs() < 1e-13);
        let s = GridFunction::from_real_fn(g, |x| (x[0] + 2.0 * x[2]).sin());
        let l = laplacian_apply(&s).unwrap();
        assert!(max_diff(&l, &s.scaled(c(-5.0))) < 1e-12);
    }

    #[test]
    fn divergence_of_gradient_is_laplacian_below_nyquist() {
        let g = Grid::cube(8, 2.0 * PI);
        let f = GridFunction::from_real_fn(g, |x| (x[0]).cos() * (2.0 * x[1]).sin() + x[2].sin());
        let lap = divergence_apply(&gradient_apply(&f).unwrap()).unwrap();
        assert!(max_diff(&lap, &laplacian_apply(&f).unwrap()) < 1e-12);
    }

    #[test]
    fn real_input_gives_real_gradient() {
        let g = Grid::cube(8, 1.0);
        let f = GridFunction::from_real(g, &random(g, 5).real_parts()).unwrap();
        let grad = gradient_apply(&f).unwrap();
        assert!(grad.values().iter().all(|z| z.im.abs() < 1e-13));
    }

    #[test]
    fn bessel_norm_of_single_mode() {
        let g = Grid::cube(8, 2.0 * PI);
        let f = GridFunction::from_real_fn(g, |x| (2.0 * x[1]).cos());
        for alpha in [0.0, 0.7, 2.0, -1.0] {
            let got = bessel_norm(&f, alpha, 2.0).unwrap();
            let expect = 5f64.powf(alpha / 2.0) * lp_norm(&f, 2.0).unwrap();
            assert!((got - expect).abs() / expect < 1e-12);
        }
        let one = GridFunction::constant(g, c(1.0));
        let vol = g.volume().powf(1.0 / 3.0);
        assert!((bessel_norm(&one, 1.3, 3.0).unwrap() - vol).abs() < 1e-10);
    }

    #[test]
    fn pointwise_product() {
        let g = Grid::cube(4, 1.0);
        let f = random(g, 6);
        let one = GridFunction::constant(g, c(1.0));
        assert_eq!(multiply_pointwise(&one, &f).unwrap(), f);
        let zero = GridFunction::zeros(g);
        assert_eq!(multiply_pointwise(&zero, &f).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn laplacian_matches_finite_differences_on_smooth_data() {
        // Second differences on a refined grid converge to the spectral value.
        let f = |x: &[f64]| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp();
        let g = Grid::cube(32, 10.0);
        let spec = laplacian_apply(&GridFunction::from_real_fn(g, f)).unwrap();
        let x0 = [0.3125 * 2.0, -0.3125, 0.0];
        let idx = g.nearest_node(&x0);
        let mut x = [0.0; 3];
        g.position(idx, &mut x);
        let mut errs = vec![];
        for h in [0.1, 0.05, 0.025] {
            let mut fd = -6.0 * f(&x);
            for a in 0..3 {
                let mut y = x;
                y[a] += h;
                fd += f(&y);
                y[a] -= 2.0 * h;
                fd += f(&y);
            }
            errs.push((fd / (h * h) - spec.values()[idx].re).abs());
        }
        assert!(errs[1] < errs[0] / 3.5 && errs[2] < errs[1] / 3.5);
    }
}
