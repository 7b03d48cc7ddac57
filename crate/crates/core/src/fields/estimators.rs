use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::fft;
use crate::grid::{GridFunction, GridVectorField};
use crate::linop::largest_eigenvalue;
use crate::spectral::{apply_table, resolvent_table};

const POWER_TOL: f64 = 1e-8;
const POWER_MAX_ITER: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftClass {
    /// `‖b(λ-Δ)^{-1/2}‖_{2→2} ≤ √δ`.
    F,
    /// `‖b(λ-Δ)^{-1/2}‖_{1→1} ≤ δ`.
    K,
    /// `‖|b|^{1/2}(λ-Δ)^{-1/4}‖_{2→2} ≤ √δ`.
    FHalf,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassEstimate {
    pub class: DriftClass,
    /// Smallest value of the curve.
    pub delta: f64,
    /// `λ` where the smallest value occurs.
    pub lambda: f64,
    pub lambda_grid: Vec<f64>,
    pub curve: Vec<f64>,
}

impl ClassEstimate {
    fn from_curve(class: DriftClass, lambda_grid: &[f64], curve: Vec<f64>) -> Self {
        let (i, &delta) = curve
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty λ grid");
        Self {
            class,
            delta,
            lambda: lambda_grid[i],
            lambda_grid: lambda_grid.to_vec(),
            curve,
        }
    }

    /// `δ(λ)` at a grid point.
    pub fn at(&self, lambda: f64) -> Option<f64> {
        self.lambda_grid
            .iter()
            .position(|&l| (l - lambda).abs() <= 1e-12 * lambda.abs())
            .map(|i| self.curve[i])
    }

    /// Smallest grid `λ` whose `δ(λ)` does not exceed `target`.
    pub fn smallest_lambda_within(&self, target: f64) -> Option<(f64, f64)> {
        self.lambda_grid
            .iter()
            .zip(&self.curve)
            .filter(|(_, &d)| d <= target)
            .map(|(&l, &d)| (l, d))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }
}

/// `count` log-spaced points in `[lo, hi]`.
pub fn log_lambda_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

fn check_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidParameter("λ grid must be non-empty and positive".into()));
    }
    Ok(())
}

fn magnitude_function(b: &GridVectorField, power: f64) -> GridFunction {
    let m: Vec<f64> = b.magnitude().into_iter().map(|v| v.powf(power)).collect();
    GridFunction::from_real(*b.grid(), &m).expect("magnitude length")
}

/// Largest eigenvalue of `R w R` with `R = (λ-Δ)^{-s}`.
fn sandwiched_eigenvalue(w: &GridFunction, lambda: f64, s: f64) -> Result<f64> {
    if w.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let grid = *w.grid();
    let table = resolvent_table(&grid, Complex64::new(lambda, 0.0), s)?;
    let apply = |f: &GridFunction| -> Result<GridFunction> {
        let g = apply_table(&table, f)?;
        let g = crate::spectral::multiply_pointwise(w, &g)?;
        apply_table(&table, &g)
    };
    let start = GridFunction::constant(grid, Complex64::new(1.0, 0.0));
    Ok(largest_eigenvalue(apply, start, POWER_TOL, POWER_MAX_ITER)?.value)
}

pub(crate) fn f_half_at(b: &GridVectorField, lambda: f64) -> Result<f64> {
    sandwiched_eigenvalue(&magnitude_function(b, 1.0), lambda, 0.25)
}

pub(crate) fn f_at(b: &GridVectorField, lambda: f64) -> Result<f64> {
    sandwiched_eigenvalue(&magnitude_function(b, 2.0), lambda, 0.5)
}

fn curve<F>(lambdas: &[f64], f: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    exec::map_slice(lambdas, |&l| f(l)).into_iter().collect()
}

/// Weak form-bound: top eigenvalue of `(λ-Δ)^{-1/4}|b|(λ-Δ)^{-1/4}`.
pub fn estimate_f_half(b: &GridVectorField, lambdas: &[f64]) -> Result<ClassEstimate> {
    check_lambdas(lambdas)?;
    let c = curve(lambdas, |l| f_half_at(b, l))?;
    Ok(ClassEstimate::from_curve(DriftClass::FHalf, lambdas, c))
}

/// Form-bound: top eigenvalue of `(λ-Δ)^{-1/2}|b|²(λ-Δ)^{-1/2}`.
pub fn estimate_f(b: &GridVectorField, lambdas: &[f64]) -> Result<ClassEstimate> {
    check_lambdas(lambdas)?;
    let c = curve(lambdas, |l| f_at(b, l))?;
    Ok(ClassEstimate::from_curve(DriftClass::F, lambdas, c))
}

/// Column `ℓ¹` norms `‖|b| (λ-Δ)^{-1/2} δ_y‖₁` for every source `y`, by one
/// periodic correlation.
pub(crate) fn k_columns(b: &GridVectorField, lambda: f64) -> Result<Vec<f64>> {
    let grid = *b.grid();
    let table = resolvent_table(&grid, Complex64::new(lambda, 0.0), 0.5)?;
    let kernel = apply_table(&table, &GridFunction::delta(grid, 0))?;
    let mut kabs: Vec<Complex64> = kernel
        .values()
        .iter()
        .map(|v| Complex64::new(v.norm(), 0.0))
        .collect();
    let mut w: Vec<Complex64> = b
        .magnitude()
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    fft::forward(&grid, &mut kabs);
    fft::forward(&grid, &mut w);
    for (x, k) in w.iter_mut().zip(&kabs) {
        *x *= k.conj();
    }
    fft::inverse(&grid, &mut w);
    let hd = grid.cell_volume();
    Ok(w.iter().map(|v| v.re.max(0.0) * hd).collect())
}

pub(crate) fn k_at(b: &GridVectorField, lambda: f64) -> Result<f64> {
    Ok(k_columns(b, lambda)?.into_iter().fold(0.0, f64::max))
}

/// Kato-type bound `‖|b|(λ-Δ)^{-1/2}‖_{1→1}` with a full sweep over sources.
pub fn estimate_k(b: &GridVectorField, lambdas: &[f64]) -> Result<ClassEstimate> {
    check_lambdas(lambdas)?;
    let c = curve(lambdas, |l| k_at(b, l))?;
    Ok(ClassEstimate::from_curve(DriftClass::K, lambdas, c))
}

/// Sources for the sampled Kato sweep: the `top` nodes of largest `|b|` plus
/// `random` uniformly drawn nodes.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KSweep {
    pub top: usize,
    pub random: usize,
    pub seed: u64,
}

impl Default for KSweep {
    fn default() -> Self {
        Self {
            top: 16,
            random: 48,
            seed: 7,
        }
    }
}

impl KSweep {
    pub fn sources(&self, b: &GridVectorField) -> Vec<usize> {
        let mag = b.magnitude();
        let mut order: Vec<usize> = (0..mag.len()).collect();
        order.sort_by(|&i, &j| mag[j].total_cmp(&mag[i]).then(i.cmp(&j)));
        let mut out: Vec<usize> = order.into_iter().take(self.top).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let k = self.random.min(mag.len());
        out.extend(sample(&mut rng, mag.len(), k));
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Kato-type bound over sampled sources, each handled by applying the
/// operator to a unit-mass delta.
pub fn estimate_k_sampled(
    b: &GridVectorField,
    lambdas: &[f64],
    sweep: &KSweep,
) -> Result<ClassEstimate> {
    check_lambdas(lambdas)?;
    let grid = *b.grid();
    let mag = b.magnitude();
    let sources = sweep.sources(b);
    let hd = grid.cell_volume();
    let c = curve(lambdas, |l| {
        let table = resolvent_table(&grid, Complex64::new(l, 0.0), 0.5)?;
        let cols = exec::map_slice(&sources, |&y| -> Result<f64> {
            let u = apply_table(&table, &GridFunction::delta(grid, y))?;
            Ok(u.values().iter().zip(&mag).map(|(v, m)| v.norm() * m).sum::<f64>() * hd)
        });
        cols.into_iter()
            .try_fold(0.0f64, |acc, c| c.map(|v| acc.max(v)))
    })?;
    Ok(ClassEstimate::from_curve(DriftClass::K, lambdas, c))
}

#[derive(Clone, Debug, Serialize)]
pub struct InclusionReport {
    pub lambda: f64,
    pub delta_half: f64,
    pub delta_f: f64,
    pub delta_k: f64,
    /// `δ_half ≤ √δ_F (1 + tol)`.
    pub form_bound_pass: bool,
    /// `δ_half ≤ δ_K (1 + tol)`.
    pub kato_pass: bool,
    /// `√δ_half(b₁ + f) ≤ δ_F(b₁)^{1/4} + √δ_K(f) + tol`, when a split is given.
    pub sum_rule: Option<(f64, f64, bool)>,
}

/// Checks the inclusions between the three classes at a common `λ`, with a
/// relative allowance `tol` for discretization.
pub fn inclusion_checks(
    b: &GridVectorField,
    lambda: f64,
    split: Option<(&GridVectorField, &GridVectorField)>,
    tol: f64,
) -> Result<InclusionReport> {
    let delta_half = f_half_at(b, lambda)?;
    let delta_f = f_at(b, lambda)?;
    let delta_k = k_at(b, lambda)?;
    let sum_rule = match split {
        Some((b1, f)) => {
            let lhs = delta_half.sqrt();
            let rhs = f_at(b1, lambda)?.powf(0.25) + k_at(f, lambda)?.sqrt();
            Some((lhs, rhs, lhs <= rhs + tol))
        }
        None => None,
    };
    Ok(InclusionReport {
        lambda,
        delta_half,
        delta_f,
        delta_k,
        form_bound_pass: delta_half <= delta_f.sqrt() * (1.0 + tol),
        kato_pass: delta_half <= delta_k * (1.0 + tol),
        sum_rule,
    })
}
