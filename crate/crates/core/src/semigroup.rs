//! `e^{-tΛ}` by backward Euler through the resolvent: `[μ Θ(μ)]^n f`, `μ = n/t`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::fields::truncate;
use crate::fit::loglog_fit;
use crate::grid::{Grid, GridFunction, GridVectorField};
use crate::spectral::lp_norm;
use crate::theta::ThetaAssembly;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemigroupParams {
    pub t: f64,
    pub steps: usize,
    /// Return `2u_{2n} - u_n` instead of `u_n`.
    #[serde(default)]
    pub richardson: bool,
}

impl SemigroupParams {
    pub fn new(t: f64, steps: usize) -> Self {
        Self {
            t,
            steps,
            richardson: false,
        }
    }

    pub fn with_richardson(mut self, on: bool) -> Self {
        self.richardson = on;
        self
    }

    pub fn mu(&self) -> f64 {
        self.steps as f64 / self.t
    }

    fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) || self.steps == 0 {
            return Err(Error::InvalidParameter(format!(
                "need t > 0 and steps ≥ 1 (got t = {}, steps = {})",
                self.t, self.steps
            )));
        }
        Ok(())
    }
}

fn euler(theta: &ThetaAssembly, t: f64, steps: usize, f: &GridFunction) -> Result<GridFunction> {
    let mu = steps as f64 / t;
    let a = theta.with_zeta(Complex64::new(mu, 0.0))?;
    let mut u = f.clone();
    for _ in 0..steps {
        u = a.apply_theta(&u)?.scaled(Complex64::new(mu, 0.0));
    }
    Ok(u)
}

/// `[μΘ(μ)]^n f` using the field, exponents and representation of `theta`.
/// `ζ = μ` must lie in the admissible half-plane, i.e. `n ≥ t κ_d λ`.
pub fn evolve(theta: &ThetaAssembly, sp: &SemigroupParams, f: &GridFunction) -> Result<GridFunction> {
    sp.validate()?;
    let u = euler(theta, sp.t, sp.steps, f)?;
    if !sp.richardson {
        return Ok(u);
    }
    let u2 = euler(theta, sp.t, 2 * sp.steps, f)?;
    u2.scaled(Complex64::new(2.0, 0.0)).sub(&u)
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    pub min_value: f64,
    pub input_sup: f64,
    pub output_sup: f64,
    /// `min ≥ -1e-8 ‖f‖_∞`.
    pub positive: bool,
    /// `‖e^{-tΛ}f‖_∞ ≤ (1 + 1e-8) ‖f‖_∞`.
    pub non_expansive: bool,
}

/// Minimum and sup norm of `e^{-tΛ}f` for a real drift and real `f ≥ 0`.
pub fn positivity_check(
    theta: &ThetaAssembly,
    sp: &SemigroupParams,
    f: &GridFunction,
) -> Result<PositivityReport> {
    if theta.drift().values().iter().any(|v| v.im != 0.0) {
        return Err(Error::InvalidParameter("positivity check needs a real drift".into()));
    }
    if f.values().iter().any(|v| v.im != 0.0 || v.re < 0.0) {
        return Err(Error::InvalidParameter("positivity check needs real f ≥ 0".into()));
    }
    let u = evolve(theta, sp, f)?;
    let input_sup = f.max_abs();
    let min_value = u.values().iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    let output_sup = u.max_abs();
    Ok(PositivityReport {
        min_value,
        input_sup,
        output_sup,
        positive: min_value >= -1e-8 * input_sup,
        non_expansive: output_sup <= (1.0 + 1e-8) * input_sup,
    })
}

/// Grid settings for [`ultracontractivity_study`]. Each `t` gets its own
/// grid of `n` nodes per axis and side `zoom·√t`, centred on a source; the
/// base drift is interpolated onto it multilinearly.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UltraOptions {
    pub zoom: f64,
    pub n: usize,
    pub steps: usize,
    pub richardson: bool,
    /// Source points; empty means the origin.
    pub sources: Vec<Vec<f64>>,
    /// Random trial inputs per source when `p > 1`.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for UltraOptions {
    fn default() -> Self {
        Self {
            zoom: 20.0,
            n: 32,
            steps: 8,
            richardson: false,
            sources: Vec::new(),
            restarts: 32,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UltraPoint {
    pub t: f64,
    pub norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct UltraReport {
    pub p: f64,
    pub r: f64,
    pub points: Vec<UltraPoint>,
    pub slope: f64,
    pub fit_residual: f64,
    /// `-(d/2)(1/p - 1/r)`.
    pub expected_slope: f64,
}

/// `b` restricted to a box around `origin`, interpolated from `base`.
pub fn zoomed_drift(base: &GridVectorField, grid: Grid, origin: &[f64]) -> Result<GridVectorField> {
    if base.grid().d() != grid.d() || origin.len() != grid.d() {
        return Err(Error::InvalidParameter(format!(
            "dimension mismatch: drift d = {}, grid d = {}, origin of length {}",
            base.grid().d(),
            grid.d(),
            origin.len()
        )));
    }
    Ok(GridVectorField::from_real_fn(grid, |x, out| {
        let y: Vec<f64> = x.iter().zip(origin).map(|(a, o)| a + o).collect();
        base.interpolate_real(&y, out);
    }))
}

/// Fits `ln ‖e^{-tΛ}‖_{p→r}` against `ln t`. For `p = 1` the norm is the sup
/// over sources of `‖e^{-tΛ}δ_x‖_r`; otherwise the max over random Gaussian
/// inputs, a lower bound.
///
/// `theta` supplies the drift (on its own grid), exponents and class data.
pub fn ultracontractivity_study(
    theta: &ThetaAssembly,
    p: f64,
    r: f64,
    t_grid: &[f64],
    opts: &UltraOptions,
) -> Result<UltraReport> {
    if !(p >= 1.0 && r > p) {
        return Err(Error::InvalidParameter(format!("need 1 ≤ p < r (got p = {p}, r = {r})")));
    }
    if t_grid.len() < 2 {
        return Err(Error::InvalidParameter("need at least two times".into()));
    }
    let base = theta.drift();
    let d = base.grid().d();
    let quarter = base.grid().box_length() / 4.0;
    let t_max = quarter * quarter / 10.0;
    if let Some(&t) = t_grid.iter().find(|&&t| !(t > 0.0 && t <= t_max)) {
        return Err(Error::BoxGuard(format!(
            "t = {t} outside (0, {t_max:.4}] for box side {}",
            base.grid().box_length()
        )));
    }
    let sources = if opts.sources.is_empty() {
        vec![vec![0.0; d]]
    } else {
        opts.sources.clone()
    };
    let sp_steps = opts.steps;
    let points = exec::map_slice(t_grid, |&t| -> Result<UltraPoint> {
        let grid = Grid::new(d, opts.n, opts.zoom * t.sqrt())?;
        let center = {
            let mid = vec![opts.n / 2; d];
            grid.linear_index(&mid)
        };
        let sp = SemigroupParams::new(t, sp_steps).with_richardson(opts.richardson);
        let mut best = 0.0f64;
        for (si, src) in sources.iter().enumerate() {
            let b = zoomed_drift(base, grid, src)?;
            let a = ThetaAssembly::new(b, *theta.params(), theta.representation(), *theta.neumann_settings())?;
            if p == 1.0 {
                let u = evolve(&a, &sp, &GridFunction::delta(grid, center))?;
                best = best.max(lp_norm(&u, r)?);
            } else {
                let trials = trial_inputs(grid, t, opts.restarts, opts.seed, si as u64);
                for f in trials {
                    let u = evolve(&a, &sp, &f)?;
                    best = best.max(lp_norm(&u, r)? / lp_norm(&f, p)?);
                }
            }
        }
        Ok(UltraPoint { t, norm: best })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let ts: Vec<f64> = points.iter().map(|q| q.t).collect();
    let ns: Vec<f64> = points.iter().map(|q| q.norm).collect();
    let fit = loglog_fit(&ts, &ns)
        .ok_or_else(|| Error::InvalidParameter("norms vanished; nothing to fit".into()))?;
    let r_inv = if r.is_infinite() { 0.0 } else { 1.0 / r };
    Ok(UltraReport {
        p,
        r,
        points,
        slope: fit.slope,
        fit_residual: fit.residual,
        expected_slope: -(d as f64 / 2.0) * (1.0 / p - r_inv),
    })
}

/// Centred Gaussians of random width in `[0.1, 2]·√t`.
fn trial_inputs(grid: Grid, t: f64, count: usize, seed: u64, stream: u64) -> Vec<GridFunction> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count.max(1))
        .map(|_| {
            let s = rng.random_range(0.1..2.0) * t.sqrt();
            GridFunction::from_real_fn(grid, |x| {
                (-x.iter().map(|v| v * v).sum::<f64>() / (2.0 * s * s)).exp()
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SemigroupConvergencePoint {
    pub level: f64,
    pub lp_error: f64,
    pub sup_error: f64,
}

/// `n ↦ ‖e^{-tΛ(b_n)}f - e^{-tΛ(b)}f‖` in `L^p` and sup norm, `b_n` the
/// truncations of the assembly's field.
pub fn semigroup_convergence_study(
    theta: &ThetaAssembly,
    levels: &[f64],
    sp: &SemigroupParams,
    f: &GridFunction,
) -> Result<Vec<SemigroupConvergencePoint>> {
    let p = theta.params().p;
    let reference = evolve(theta, sp, f)?;
    exec::map_slice(levels, |&n| -> Result<SemigroupConvergencePoint> {
        let a = ThetaAssembly::new(
            truncate(theta.drift(), n),
            *theta.params(),
            theta.representation(),
            *theta.neumann_settings(),
        )?;
        let diff = evolve(&a, sp, f)?.sub(&reference)?;
        Ok(SemigroupConvergencePoint {
            level: n,
            lp_error: lp_norm(&diff, p)?,
            sup_error: diff.max_abs(),
        })
    })
    .into_iter()
    .collect()
}

/// `‖e^{-tΛ}f - e^{-(t/2)Λ}e^{-(t/2)Λ}f‖_p` with `n` steps for the whole
/// interval and `n` steps for each half. (With `2n` steps on the left the two
/// sides coincide exactly, as both use the same `μ`.)
pub fn semigroup_law_discrepancy(
    theta: &ThetaAssembly,
    t: f64,
    steps: usize,
    f: &GridFunction,
) -> Result<f64> {
    let p = theta.params().p;
    let whole = evolve(theta, &SemigroupParams::new(t, steps), f)?;
    let half = SemigroupParams::new(0.5 * t, steps);
    let split = evolve(theta, &half, &evolve(theta, &half, f)?)?;
    lp_norm(&whole.sub(&split)?, p)
}

#[derive(Clone, Debug, Serialize)]
pub struct SectorPoint {
    pub zeta_re: f64,
    pub zeta_im: f64,
    /// `|ζ| ‖Θ(ζ)f‖_p / ‖f‖_p`.
    pub scaled_norm: f64,
}

/// `|ζ|‖Θ(ζ)f‖_p/‖f‖_p` along the given `ζ`; boundedness of these values is
/// the sectorial estimate seen through one input.
pub fn sectorial_profile(
    theta: &ThetaAssembly,
    zetas: &[Complex64],
    f: &GridFunction,
) -> Result<Vec<SectorPoint>> {
    let p = theta.params().p;
    let fnorm = lp_norm(f, p)?;
    exec::map_slice(zetas, |&z| -> Result<SectorPoint> {
        let u = theta.with_zeta(z)?.apply_theta(f)?;
        Ok(SectorPoint {
            zeta_re: z.re,
            zeta_im: z.im,
            scaled_norm: z.norm() * lp_norm(&u, p)? / fnorm,
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{mollify, DriftSpec};
    use crate::theta::{NeumannSettings, Representation, ResolventParams};
    use std::f64::consts::PI;

    fn assembly(b: GridVectorField, delta: f64) -> ThetaAssembly {
        let params = ResolventParams::new(2.0, Complex64::new(1.0, 0.0), delta, 0.5);
        ThetaAssembly::new(b, params, Representation::Rp, NeumannSettings::default()).unwrap()
    }

    fn free(grid: Grid) -> ThetaAssembly {
        assembly(GridVectorField::zeros(grid), 0.0)
    }

    #[test]
    fn free_single_mode_matches_scalar_backward_euler() {
        let g = Grid::cube(8, 2.0 * PI);
        let f = GridFunction::from_real_fn(g, |x| (x[0] + 2.0 * x[2]).cos());
        let k2 = 5.0;
        let t = 0.3;
        let a = free(g);
        let mut prev = f64::INFINITY;
        for n in [4usize, 8, 16, 32] {
            let u = evolve(&a, &SemigroupParams::new(t, n), &f).unwrap();
            let factor = (1.0 + t * k2 / n as f64).powi(-(n as i32));
            let err_euler = u.sub(&f.scaled(Complex64::new(factor, 0.0))).unwrap().max_abs();
            assert!(err_euler < 1e-12);
            let err = u.sub(&f.scaled(Complex64::new((-t * k2).exp(), 0.0))).unwrap().max_abs();
            assert!(err < prev);
            if prev.is_finite() {
                assert!((prev / err - 2.0).abs() < 0.3);
            }
            prev = err;
        }
    }

    #[test]
    fn richardson_gains_an_order() {
        let g = Grid::cube(8, 2.0 * PI);
        let f = GridFunction::from_real_fn(g, |x| x[1].sin());
        let a = free(g);
        let exact = f.scaled(Complex64::new((-0.5f64).exp(), 0.0));
        let err = |n, r| {
            let sp = SemigroupParams::new(0.5, n).with_richardson(r);
            evolve(&a, &sp, &f).unwrap().sub(&exact).unwrap().max_abs()
        };
        assert!(err(8, true) < 0.1 * err(8, false));
        assert!((err(8, true) / err(16, true) - 4.0).abs() < 0.6);
    }

    #[test]
    fn short_time_single_step_is_near_identity() {
        let g = Grid::cube(8, 2.0 * PI);
        let f = GridFunction::from_real_fn(g, |x| x[0].cos());
        let u = evolve(&free(g), &SemigroupParams::new(1e-6, 1), &f).unwrap();
        assert!(u.sub(&f).unwrap().max_abs() < 2e-6);
    }

    #[test]
    fn constants_and_mass_are_preserved() {
        let g = Grid::cube(16, 4.0);
        let b = DriftSpec::Hardy { c: 0.2 }.sample(&g).unwrap();
        let a = assembly(b, 0.3);
        let one = GridFunction::constant(g, Complex64::new(1.0, 0.0));
        let u = evolve(&a, &SemigroupParams::new(0.5, 4), &one).unwrap();
        assert!(u.sub(&one).unwrap().max_abs() < 1e-9);

        let f = GridFunction::from_real_fn(g, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp());
        let u = evolve(&free(g), &SemigroupParams::new(0.5, 4), &f).unwrap();
        let mass = |v: &GridFunction| v.values().iter().sum::<Complex64>() * g.cell_volume();
        assert!((mass(&u) - mass(&f)).norm() < 1e-10 * mass(&f).norm());
    }

    #[test]
    fn semigroup_law_discrepancy_shrinks() {
        let g = Grid::cube(16, 4.0);
        let b = mollify(&DriftSpec::Hardy { c: 0.2 }.sample(&g).unwrap(), 0.5).unwrap();
        let a = assembly(b, 0.3);
        let f = GridFunction::from_real_fn(g, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp());
        let d: Vec<f64> = [2usize, 4, 8]
            .iter()
            .map(|&n| semigroup_law_discrepancy(&a, 0.2, n, &f).unwrap())
            .collect();
        assert!(d[1] < d[0] && d[2] < d[1]);
        assert!((d[1] / d[2] - 2.0).abs() < 0.5, "{d:?}");
        let exact = {
            let whole = evolve(&a, &SemigroupParams::new(0.2, 8), &f).unwrap();
            let half = SemigroupParams::new(0.1, 4);
            let split = evolve(&a, &half, &evolve(&a, &half, &f).unwrap()).unwrap();
            whole.sub(&split).unwrap().max_abs()
        };
        assert!(exact < 1e-12);
    }

    #[test]
    fn heat_flow_is_positive_and_contracting() {
        let g = Grid::cube(16, 8.0);
        let f = GridFunction::from_real_fn(g, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp());
        let rep = positivity_check(&free(g), &SemigroupParams::new(1.0, 8), &f).unwrap();
        assert!(rep.positive && rep.non_expansive);
        assert!(rep.min_value > 0.0);
        let bad = f.scaled(Complex64::new(-1.0, 0.0));
        assert!(positivity_check(&free(g), &SemigroupParams::new(1.0, 8), &bad).is_err());
    }

    #[test]
    fn bounded_field_converges_past_its_sup() {
        let g = Grid::cube(8, 2.0);
        let b = DriftSpec::Constant {
            value: vec![0.3, 0.0, 0.0],
        }
        .sample(&g)
        .unwrap();
        let a = assembly(b, 0.2);
        let f = GridFunction::from_real_fn(g, |x| x[0].cos());
        let pts = semigroup_convergence_study(&a, &[0.1, 1.0], &SemigroupParams::new(0.1, 2), &f).unwrap();
        assert!(pts[0].lp_error > 0.0);
        assert_eq!(pts[1].lp_error, 0.0);
        assert_eq!(pts[1].sup_error, 0.0);
    }

    #[test]
    fn free_ultracontractivity_has_heat_exponents() {
        let g = Grid::cube(16, 16.0);
        let a = free(g);
        let ts = [1e-3, 1e-2, 1e-1];
        let opts = UltraOptions {
            n: 16,
            steps: 4,
            ..Default::default()
        };
        let rep = ultracontractivity_study(&a, 1.0, f64::INFINITY, &ts, &opts).unwrap();
        assert!((rep.slope + 1.5).abs() < 1e-6, "{}", rep.slope);
        let rep = ultracontractivity_study(&a, 1.0, 2.0, &ts, &opts).unwrap();
        assert!((rep.slope + 0.75).abs() < 1e-6, "{}", rep.slope);
        assert!(ultracontractivity_study(&a, 1.0, 2.0, &[1e-2, 10.0], &opts).is_err());
    }

    #[test]
    fn sectorial_profile_is_bounded_for_free_flow() {
        let g = Grid::cube(8, 2.0 * PI);
        let f = GridFunction::from_real_fn(g, |x| x[0].cos() + 0.5);
        let z: Vec<Complex64> = [1.0, 10.0, 100.0]
            .iter()
            .flat_map(|&s| [Complex64::new(s, 0.0), Complex64::new(s, s)])
            .collect();
        let pts = sectorial_profile(&free(g), &z, &f).unwrap();
        assert!(pts.iter().all(|q| q.scaled_norm <= 1.0 + 1e-12));
    }
}
