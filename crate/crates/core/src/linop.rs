//! Matrix-free linear operators on grid functions and norm estimation.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constants::conjugate;
use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{Grid, GridFunction};
use crate::spectral::{lp_norm, pairing};

/// A bounded operator on grid functions. The adjoint is taken with respect
/// to the pairing `h^d Σ u v̄`.
pub trait LinearOperator: Sync {
    fn grid(&self) -> &Grid;
    fn apply(&self, f: &GridFunction) -> Result<GridFunction>;
    fn apply_adjoint(&self, f: &GridFunction) -> Result<GridFunction>;
}

/// An operator given by a pair of closures.
pub struct ClosureOperator<A, B> {
    grid: Grid,
    forward: A,
    adjoint: B,
}

impl<A, B> ClosureOperator<A, B>
where
    A: Fn(&GridFunction) -> Result<GridFunction> + Sync,
    B: Fn(&GridFunction) -> Result<GridFunction> + Sync,
{
    pub fn new(grid: Grid, forward: A, adjoint: B) -> Self {
        Self {
            grid,
            forward,
            adjoint,
        }
    }
}

impl<A, B> LinearOperator for ClosureOperator<A, B>
where
    A: Fn(&GridFunction) -> Result<GridFunction> + Sync,
    B: Fn(&GridFunction) -> Result<GridFunction> + Sync,
{
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        (self.forward)(f)
    }

    fn apply_adjoint(&self, f: &GridFunction) -> Result<GridFunction> {
        (self.adjoint)(f)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NormEstimateOptions {
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for NormEstimateOptions {
    fn default() -> Self {
        Self {
            restarts: 64,
            tol: 1e-4,
            max_iter: 100,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NormEstimate {
    /// Largest ratio `‖Ax‖_r / ‖x‖_p` found; a lower bound for the norm.
    pub value: f64,
    pub iterations: usize,
    pub restarts: usize,
}

/// Duality map of `L^s`: returns `y*` with `⟨y, y*⟩ = ‖y‖_s` and `‖y*‖_{s'} = 1`.
fn dual_vector(y: &GridFunction, s: f64) -> Result<GridFunction> {
    let n = lp_norm(y, s)?;
    if n == 0.0 {
        return Ok(GridFunction::zeros(*y.grid()));
    }
    let scale = n.powf(s - 1.0);
    Ok(y.map(|v| {
        let a = v.norm();
        if a == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            v * (a.powf(s - 2.0) / scale)
        }
    }))
}

pub fn random_start(grid: Grid, seed: u64, stream: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    GridFunction::new(
        grid,
        (0..grid.len())
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect(),
    )
    .expect("length matches grid")
}

fn ascent(
    op: &dyn LinearOperator,
    p: f64,
    r: f64,
    start: GridFunction,
    opts: &NormEstimateOptions,
) -> Result<(f64, usize)> {
    let pp = conjugate(p);
    let mut x = start;
    let nx = lp_norm(&x, p)?;
    if nx == 0.0 {
        return Ok((0.0, 0));
    }
    x.scale_mut(Complex64::new(1.0 / nx, 0.0));
    let mut best = 0.0f64;
    for it in 1..=opts.max_iter {
        let y = op.apply(&x)?;
        let value = lp_norm(&y, r)?;
        if value == 0.0 {
            return Ok((0.0, it));
        }
        let converged = it > 1 && (value - best).abs() <= opts.tol * value;
        best = best.max(value);
        if converged {
            return Ok((best, it));
        }
        let z = op.apply_adjoint(&dual_vector(&y, r)?)?;
        let next = dual_vector(&z, pp)?;
        if lp_norm(&next, p)? == 0.0 {
            return Ok((best, it));
        }
        x = next;
    }
    Ok((best, opts.max_iter))
}

/// Lower estimate of `‖A‖_{p→r}` by restarted nonlinear power iteration
/// (Boyd's method). Requires `1 < p, r < ∞`.
pub fn estimate_norm(
    op: &dyn LinearOperator,
    p: f64,
    r: f64,
    opts: &NormEstimateOptions,
    extra_starts: &[GridFunction],
) -> Result<NormEstimate> {
    if !(p > 1.0 && p.is_finite() && r > 1.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "norm estimation needs 1 < p, r < ∞ (got p = {p}, r = {r})"
        )));
    }
    let grid = *op.grid();
    let total = opts.restarts + extra_starts.len();
    let runs = exec::map_range(total, |i| {
        let start = if i < extra_starts.len() {
            extra_starts[i].clone()
        } else {
            random_start(grid, opts.seed, i as u64)
        };
        ascent(op, p, r, start, opts)
    });
    let mut value = 0.0f64;
    let mut iterations = 0;
    for run in runs {
        let (v, it) = run?;
        value = value.max(v);
        iterations += it;
    }
    Ok(NormEstimate {
        value,
        iterations,
        restarts: total,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Eigenpair {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Largest eigenvalue of a self-adjoint positive semidefinite operator by
/// power iteration on the Rayleigh quotient.
pub fn largest_eigenvalue<F>(
    apply: F,
    start: GridFunction,
    tol: f64,
    max_iter: usize,
) -> Result<Eigenpair>
where
    F: Fn(&GridFunction) -> Result<GridFunction>,
{
    let mut v = start;
    let n0 = lp_norm(&v, 2.0)?;
    if n0 == 0.0 {
        return Err(Error::InvalidParameter("zero start vector".into()));
    }
    v.scale_mut(Complex64::new(1.0 / n0, 0.0));
    let mut prev = f64::NAN;
    for it in 1..=max_iter {
        let w = apply(&v)?;
        let rq = pairing(&w, &v)?.re;
        let nw = lp_norm(&w, 2.0)?;
        if nw == 0.0 {
            return Ok(Eigenpair {
                value: 0.0,
                iterations: it,
                residual: 0.0,
            });
        }
        let residual = (rq - prev).abs() / rq.abs().max(f64::MIN_POSITIVE);
        if residual <= tol {
            return Ok(Eigenpair {
                value: rq,
                iterations: it,
                residual,
            });
        }
        prev = rq;
        v = w.scaled(Complex64::new(1.0 / nw, 0.0));
    }
    Err(Error::PowerIteration {
        iterations: max_iter,
        residual: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{apply_multiplier, MultiplierSymbol};

    #[test]
    fn zero_operator_has_zero_norm() {
        let g = Grid::cube(4, 1.0);
        let op = ClosureOperator::new(
            g,
            |f: &GridFunction| Ok(GridFunction::zeros(*f.grid())),
            |f: &GridFunction| Ok(GridFunction::zeros(*f.grid())),
        );
        let e = estimate_norm(&op, 2.5, 2.5, &NormEstimateOptions::default(), &[]).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn resolvent_norm_is_symbol_sup() {
        let g = Grid::cube(8, 4.0);
        let z = Complex64::new(3.0, 0.0);
        let sym = MultiplierSymbol::resolvent_power(z, 1.0);
        let op = ClosureOperator::new(
            g,
            move |f: &GridFunction| apply_multiplier(&sym, f),
            move |f: &GridFunction| apply_multiplier(&sym, f),
        );
        let opts = NormEstimateOptions {
            restarts: 4,
            ..Default::default()
        };
        let e2 = estimate_norm(&op, 2.0, 2.0, &opts, &[]).unwrap();
        assert!((e2.value - 1.0 / 3.0).abs() < 1e-4 / 3.0);
        // Positive kernel with unit mass 1/ζ: the p→p norm is also 1/ζ.
        let e3 = estimate_norm(&op, 3.0, 3.0, &opts, &[]).unwrap();
        assert!(e3.value <= 1.0 / 3.0 + 1e-9);
        assert!(e3.value > 0.99 / 3.0);
    }

    #[test]
    fn diagonal_operator_norm_between_lp_spaces() {
        // Multiplication by w on L^p → L^p has norm sup|w|.
        let g = Grid::cube(4, 1.0);
        let w = GridFunction::from_real_fn(g, |x| 1.0 + x[0] * x[0] + x[1]);
        let sup = w.max_abs();
        let w2 = w.clone();
        let op = ClosureOperator::new(
            g,
            move |f: &GridFunction| crate::spectral::multiply_pointwise(&w, f),
            move |f: &GridFunction| crate::spectral::multiply_pointwise(&w2, f),
        );
        let e = estimate_norm(&op, 1.7, 1.7, &NormEstimateOptions::default(), &[]).unwrap();
        assert!(e.value <= sup * (1.0 + 1e-12));
        assert!(e.value > sup * 0.999);
    }

    #[test]
    fn power_iteration_on_multiplier() {
        let g = Grid::cube(8, 2.0);
        let sym = MultiplierSymbol::resolvent_power(Complex64::new(0.5, 0.0), 1.0);
        let e = largest_eigenvalue(
            |f| apply_multiplier(&sym, f),
            random_start(g, 1, 0),
            1e-12,
            500,
        )
        .unwrap();
        assert!((e.value - 2.0).abs() < 1e-9);
    }
}
