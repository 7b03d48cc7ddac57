use num_complex::Complex64;
use serde::Serialize;

use super::{Factor, NeumannSettings, Representation, ResolventParams, ThetaAssembly};
use crate::constants::{conjugate, kappa, NormBoundConstants};
use crate::error::Result;
use crate::exec;
use crate::fields::truncate;
use crate::grid::{GridFunction, GridVectorField};
use crate::linop::{estimate_norm, LinearOperator, NormEstimateOptions};
use crate::spectral::lp_norm;

/// `‖(ζ + Λ)Θ(ζ)f - f‖_p / ‖f‖_p` with `Λ` applied directly.
pub fn resolvent_residual(theta: &ThetaAssembly, f: &GridFunction) -> Result<f64> {
    let p = theta.params().p;
    let u = theta.apply_theta(f)?;
    let back = u
        .scaled(theta.params().zeta)
        .add(&theta.apply_lambda(&u)?)?;
    Ok(lp_norm(&back.sub(f)?, p)? / lp_norm(f, p)?)
}

/// Residual of `Θ(ζ) - Θ(η) = (η - ζ) Θ(ζ) Θ(η)` applied to `f`, relative to
/// `max(‖Θ(ζ)f‖_p, ‖Θ(η)f‖_p)`.
pub fn pseudo_resolvent_residual(
    theta: &ThetaAssembly,
    zeta: Complex64,
    eta: Complex64,
    f: &GridFunction,
) -> Result<f64> {
    let p = theta.params().p;
    let tz = theta.with_zeta(zeta)?;
    let te = theta.with_zeta(eta)?;
    let uz = tz.apply_theta(f)?;
    let ue = te.apply_theta(f)?;
    let prod = tz.apply_theta(&ue)?.scaled(eta - zeta);
    let res = uz.sub(&ue)?.sub(&prod)?;
    let scale = lp_norm(&uz, p)?.max(lp_norm(&ue, p)?);
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(lp_norm(&res, p)? / scale)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergencePoint {
    pub level: f64,
    pub error: f64,
}

/// `n ↦ ‖Θ(ζ, b_n)f - Θ(ζ, b)f‖_p` for truncations `b_n` of the grid field.
pub fn strong_convergence_study(
    b: &GridVectorField,
    levels: &[f64],
    params: ResolventParams,
    representation: Representation,
    neumann: NeumannSettings,
    f: &GridFunction,
) -> Result<Vec<ConvergencePoint>> {
    let p = params.p;
    let reference = ThetaAssembly::new(b.clone(), params, representation, neumann)?.apply_theta(f)?;
    exec::map_slice(levels, |&n| -> Result<ConvergencePoint> {
        let a = ThetaAssembly::new(truncate(b, n), params, representation, neumann)?;
        let u = a.apply_theta(f)?;
        Ok(ConvergencePoint {
            level: n,
            error: lp_norm(&u.sub(&reference)?, p)?,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TrotterPoint {
    pub mu: f64,
    /// `max_n ‖μ Θ(μ, b_n) f - f‖_p`.
    pub max_deviation: f64,
    /// `max_n μ ‖Θ(μ, b_n) f‖_p / ‖f‖_p`.
    pub max_scaled_norm: f64,
}

/// `μ ↦ max_n ‖μΘ(μ, b_n)f - f‖_p` over truncation levels.
pub fn trotter_decay_study(
    b: &GridVectorField,
    levels: &[f64],
    mus: &[f64],
    params: ResolventParams,
    neumann: NeumannSettings,
    f: &GridFunction,
) -> Result<Vec<TrotterPoint>> {
    let p = params.p;
    let f_norm = lp_norm(f, p)?;
    exec::map_slice(mus, |&mu| -> Result<TrotterPoint> {
        let mut dev = 0.0f64;
        let mut scaled = 0.0f64;
        for &n in levels {
            let a = ThetaAssembly::new(
                truncate(b, n),
                params.with_zeta(Complex64::new(mu, 0.0)),
                Representation::Rp,
                neumann,
            )?;
            let u = a.apply_theta(f)?.scaled(Complex64::new(mu, 0.0));
            dev = dev.max(lp_norm(&u.sub(f)?, p)?);
            scaled = scaled.max(lp_norm(&u, p)? / f_norm);
        }
        Ok(TrotterPoint {
            mu,
            max_deviation: dev,
            max_scaled_norm: scaled,
        })
    })
    .into_iter()
    .collect()
}

/// Eight points on the boundary ray `Re ζ = κ_d λ` and six real points
/// `κ_d λ 2^j`.
pub fn zeta_study_grid(d: usize, lambda: f64) -> Vec<Complex64> {
    let a = kappa(d) * lambda;
    let mut out: Vec<Complex64> = [0.0, 1.0, -1.0, 4.0, -4.0, 16.0, -16.0, 64.0]
        .iter()
        .map(|&m| Complex64::new(a, m * a))
        .collect();
    out.extend((1..=6).map(|j| Complex64::new(a * 2f64.powi(j), 0.0)));
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct NormBoundRow {
    pub quantity: String,
    pub zeta_re: f64,
    pub zeta_im: f64,
    pub lhs: f64,
    pub rhs_bound: f64,
    pub pass: bool,
}

fn row(quantity: &str, zeta: Complex64, lhs: f64, rhs: f64) -> NormBoundRow {
    NormBoundRow {
        quantity: quantity.to_string(),
        zeta_re: zeta.re,
        zeta_im: zeta.im,
        lhs,
        rhs_bound: rhs,
        pass: lhs <= rhs,
    }
}

/// Measured operator norms against the closed-form bounds at each `ζ`.
/// `m_rd` feeds the `G_p(r)` bound; `None` skips that row.
pub fn norm_bound_report(
    theta: &ThetaAssembly,
    zetas: &[Complex64],
    opts: &NormEstimateOptions,
    m_rd: Option<f64>,
) -> Result<Vec<NormBoundRow>> {
    let params = *theta.params();
    let d = theta.grid().d();
    let p = params.p;
    let k = NormBoundConstants::new(d, p, params.delta)?;
    let mut rows = Vec::new();
    for &z in zetas {
        let a = theta.with_zeta(z)?;
        let za = z.norm();
        let norm = |f: Factor| -> Result<f64> {
            Ok(estimate_norm(&a.factor(f), p, p, opts, &[])?.value)
        };
        rows.push(row("T_p", z, norm(Factor::T)?, k.t_bound()));
        rows.push(row("G_p", z, norm(Factor::G)?, k.g_bound(za)));
        let q = norm(Factor::Q)?;
        rows.push(row("Q_p(stated exponent)", z, q, k.q_bound_stated(za)));
        rows.push(row("Q_p(derived exponent)", z, q, k.q_bound_derived(za)));
        rows.push(row("P_p", z, norm(Factor::P)?, k.p_bound(za)));
        if z.re >= params.lambda {
            rows.push(row(
                "Q_p(q)",
                z,
                norm(Factor::QRegularized)?,
                k.k2(params.q, params.lambda)?,
            ));
            if let Some(m) = m_rd {
                if params.r > 1.0 {
                    rows.push(row(
                        "G_p(r)",
                        z,
                        norm(Factor::GRegularized)?,
                        k.k1(params.r, params.lambda, m)?,
                    ));
                }
            }
        }
        let theta_op = ThetaOperator { theta: &a };
        let th = estimate_norm(&theta_op, p, p, opts, &[])?.value;
        rows.push(row("Theta_p", z, th, k.theta_bound(za)));
        if p == 2.0 {
            rows.push(row("T_2 (weak form-bound)", z, norm(Factor::T)?, params.delta));
        }
    }
    Ok(rows)
}

/// `Θ` as a linear operator, with `Θ* = R* - G* (1 + T*)^{-1} Q*`.
pub struct ThetaOperator<'a> {
    pub theta: &'a ThetaAssembly,
}

impl LinearOperator for ThetaOperator<'_> {
    fn grid(&self) -> &crate::grid::Grid {
        self.theta.grid()
    }

    fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        self.theta.apply_theta_as(Representation::Rp, f)
    }

    fn apply_adjoint(&self, g: &GridFunction) -> Result<GridFunction> {
        let a = self.theta;
        let y = a.apply_q_adjoint(g)?;
        let p = conjugate(a.params().p);
        let x = super::neumann::solve(|v| a.apply_t_adjoint(v), &y, a.neumann_settings(), p)?.sum;
        a.apply_resolvent_adjoint(g)?.sub(&a.apply_g_adjoint(&x)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::DriftSpec;
    use crate::grid::Grid;
    use crate::linop::random_start;
    use crate::spectral::pairing;

    fn hardy_assembly(n: usize, p: f64, zeta: Complex64) -> ThetaAssembly {
        let g = Grid::cube(n, 2.0);
        let b = DriftSpec::Hardy { c: 0.2 }.sample(&g).unwrap();
        ThetaAssembly::new(
            b,
            ResolventParams::new(p, zeta, 0.25, 0.5),
            Representation::Rp,
            NeumannSettings::default(),
        )
        .unwrap()
    }

    #[test]
    fn theta_adjoint_pairs_correctly() {
        let a = hardy_assembly(8, 2.5, Complex64::new(1.0, 0.5));
        let op = ThetaOperator { theta: &a };
        let u = random_start(*a.grid(), 1, 0);
        let v = random_start(*a.grid(), 1, 1);
        let lhs = pairing(&op.apply(&u).unwrap(), &v).unwrap();
        let rhs = pairing(&u, &op.apply_adjoint(&v).unwrap()).unwrap();
        assert!((lhs - rhs).norm() < 1e-9 * lhs.norm());
    }

    #[test]
    fn pseudo_resolvent_trivial_cases() {
        let a = hardy_assembly(8, 2.5, Complex64::new(1.0, 0.0));
        let f = random_start(*a.grid(), 2, 0);
        let z = Complex64::new(2.0, 1.0);
        assert!(pseudo_resolvent_residual(&a, z, z, &f).unwrap() < 1e-15);
        let free = ThetaAssembly::new(
            GridVectorField::zeros(*a.grid()),
            *a.params(),
            Representation::Rp,
            NeumannSettings::default(),
        )
        .unwrap();
        let r = pseudo_resolvent_residual(&free, z, Complex64::new(5.0, -3.0), &f).unwrap();
        assert!(r < 1e-12);
        let r = pseudo_resolvent_residual(&a, z, Complex64::new(5.0, -3.0), &f).unwrap();
        assert!(r < 1e-8);
    }

    #[test]
    fn bounded_field_converges_exactly_past_its_sup() {
        let g = Grid::cube(8, 2.0);
        let b = DriftSpec::Constant {
            value: vec![0.1, 0.2, 0.0],
        }
        .sample(&g)
        .unwrap();
        let params = ResolventParams::new(2.0, Complex64::new(1.0, 0.0), 0.1, 0.5);
        let f = random_start(g, 3, 0);
        let pts = strong_convergence_study(
            &b,
            &[0.1, 1.0],
            params,
            Representation::Rp,
            NeumannSettings::default(),
            &f,
        )
        .unwrap();
        assert!(pts[0].error > 0.0);
        assert_eq!(pts[1].error, 0.0);
    }

    #[test]
    fn free_trotter_deviation_decays_like_inverse_mu() {
        // μ(μ-Δ)^{-1}f - f = (μ-Δ)^{-1}Δf, so the deviation is ≈ ‖Δf‖/μ.
        let g = Grid::cube(16, 2.0 * std::f64::consts::PI);
        let f = GridFunction::from_real_fn(g, |x| x[0].sin() + (2.0 * x[1]).cos());
        let params = ResolventParams::new(2.0, Complex64::new(1.0, 0.0), 0.0, 0.5);
        let pts = trotter_decay_study(
            &GridVectorField::zeros(g),
            &[1.0],
            &[10.0, 100.0, 1000.0],
            params,
            NeumannSettings::default(),
            &f,
        )
        .unwrap();
        let lap = lp_norm(&crate::spectral::laplacian_apply(&f).unwrap(), 2.0).unwrap();
        for pt in &pts {
            assert!(pt.max_deviation <= lap / pt.mu);
            assert!(pt.max_deviation >= lap / (pt.mu + 4.0));
        }
    }

    #[test]
    fn zeta_grid_sits_in_the_half_plane() {
        let z = zeta_study_grid(3, 2.0);
        assert_eq!(z.len(), 14);
        assert!(z.iter().all(|v| v.re >= 3.0 - 1e-12));
    }
}
