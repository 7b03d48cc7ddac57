//! Closed-form constants, admissibility intervals and norm-bound constants.

use serde::Serialize;
use statrs::function::beta::beta;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Hölder conjugate `p' = p / (p - 1)`; `1' = ∞`, `∞' = 1`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `m_d = π^{1/2} (2e)^{-1/2} d^{d/2} (d-1)^{(1-d)/2}`.
pub fn m_d(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("m_d needs d ≥ 2 (got {d})")));
    }
    let df = d as f64;
    let ln = 0.5 * std::f64::consts::PI.ln() - 0.5 * (2.0 * std::f64::consts::E).ln()
        + 0.5 * df * df.ln()
        + 0.5 * (1.0 - df) * (df - 1.0).ln();
    Ok(ln.exp())
}

/// The same constant from its squared form `m_d² = π (2e)^{-1} d^d (d-1)^{1-d}`.
pub fn m_d_from_square(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("m_d needs d ≥ 2 (got {d})")));
    }
    let df = d as f64;
    let sq = std::f64::consts::PI / (2.0 * std::f64::consts::E) * df.powi(d as i32)
        * (df - 1.0).powi(1 - d as i32);
    Ok(sq.sqrt())
}

/// `κ_d = d / (d - 1)`.
pub fn kappa(d: usize) -> f64 {
    let df = d as f64;
    df / (df - 1.0)
}

/// `c_p = p p' / 4`.
pub fn c_p(p: f64) -> f64 {
    p * conjugate(p) / 4.0
}

/// Open interval of admissible `p` for a given `δ`. Errors if `m_d δ ≥ 1`.
pub fn interval_i(delta: f64, d: usize) -> Result<(f64, f64)> {
    let md = m_d(d)?;
    let s = md * delta;
    if !(s < 1.0) || delta < 0.0 {
        return Err(Error::Guard(s));
    }
    let root = (1.0 - s).sqrt();
    let hi = if root == 1.0 {
        f64::INFINITY
    } else {
        2.0 / (1.0 - root)
    };
    Ok((2.0 / (1.0 + root), hi))
}

/// `m_d c_p δ`, the quantity that must stay below one.
pub fn neumann_guard(d: usize, p: f64, delta: f64) -> Result<f64> {
    Ok(m_d(d)? * c_p(p) * delta)
}

/// Fails with [`Error::Guard`] unless `m_d c_p δ < 1`.
pub fn check_guard(d: usize, p: f64, delta: f64) -> Result<f64> {
    let g = neumann_guard(d, p, delta)?;
    if g < 1.0 {
        Ok(g)
    } else {
        Err(Error::Guard(g))
    }
}

/// `4(d-2)/(d-1)²`, the smallness threshold for `m_d δ` in the Feller setting.
pub fn feller_threshold(d: usize) -> Result<f64> {
    if d < 3 {
        return Err(Error::InvalidParameter(format!("threshold needs d ≥ 3 (got {d})")));
    }
    let df = d as f64;
    Ok(4.0 * (df - 2.0) / ((df - 1.0) * (df - 1.0)))
}

pub fn feller_admissible(delta: f64, d: usize) -> Result<bool> {
    Ok(m_d(d)? * delta < feller_threshold(d)?)
}

/// `(d - 1, 2/(1 - √(1 - m_d δ)))` when admissible, otherwise `None`.
pub fn feller_p_range(delta: f64, d: usize) -> Result<Option<(f64, f64)>> {
    if !feller_admissible(delta, d)? {
        return Ok(None);
    }
    let (_, hi) = interval_i(delta, d)?;
    Ok(Some(((d - 1) as f64, hi)))
}

/// `c_q = Γ(1/2) / (Γ(1/2q) Γ(1/2q'))`.
pub fn c_q(q: f64) -> Result<f64> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("c_q needs 1 < q < ∞ (got {q})")));
    }
    let a = 1.0 / (2.0 * q);
    let b = 1.0 / (2.0 * conjugate(q));
    Ok(gamma(0.5) / (gamma(a) * gamma(b)))
}

/// `C_{r,δ} = (c_r δ)^{1/r}`.
pub fn c_r_delta(r: f64, delta: f64) -> f64 {
    (c_p(r) * delta).powf(1.0 / r)
}

/// `∫_0^∞ t^{a-1} (t + λ)^{-b} dt = λ^{a-b} B(a, b-a)` for `0 < a < b`.
pub fn laplace_beta_integral(a: f64, b: f64, lambda: f64) -> Result<f64> {
    if !(a > 0.0 && b > a && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "integral needs 0 < a < b and λ > 0 (a = {a}, b = {b}, λ = {lambda})"
        )));
    }
    Ok(lambda.powf(a - b) * beta(a, b - a))
}

/// Constants of the `L^p` operator-norm bounds at fixed `(d, p, δ)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormBoundConstants {
    pub d: usize,
    pub p: f64,
    pub delta: f64,
    pub m_d: f64,
    pub c_p: f64,
    /// `‖G_p‖ ≤ C₁ |ζ|^{-1/2p'}`.
    pub c1: f64,
    /// `‖Q_p‖ ≤ C₂ |ζ|^{-e}` with `e` one of the two candidate exponents.
    pub c2: f64,
    /// `‖P_p‖ ≤ C₃ |ζ|^{-1/2-1/2p'}`.
    pub c3: f64,
    /// `‖Θ_p‖ ≤ C_p |ζ|^{-1}`.
    pub c_theta: f64,
}

impl NormBoundConstants {
    pub fn new(d: usize, p: f64, delta: f64) -> Result<Self> {
        let md = m_d(d)?;
        let guard = check_guard(d, p, delta)?;
        let df = d as f64;
        let pp = conjugate(p);
        let c1 = 2.0 * kappa(d) * md * c_r_delta(p, delta) * 2f64.powf(df / 4.0);
        let c2 = 2.0 * c_r_delta(pp, delta) * 2f64.powf(-df / 4.0 + 0.25);
        let c3 = 2.0 * c_r_delta(p, delta) * 2f64.powf(df / 4.0 + 0.25) * 2f64.powf(-0.5);
        let c_theta = 1.0 + c1 * c2 / (1.0 - guard);
        Ok(Self {
            d,
            p,
            delta,
            m_d: md,
            c_p: c_p(p),
            c1,
            c2,
            c3,
            c_theta,
        })
    }

    pub fn g_bound(&self, zeta_abs: f64) -> f64 {
        self.c1 * zeta_abs.powf(-1.0 / (2.0 * conjugate(self.p)))
    }

    /// `C₂ |ζ|^{-1/2-1/2p}`, the exponent in the statement of the bound.
    pub fn q_bound_stated(&self, zeta_abs: f64) -> f64 {
        self.c2 * zeta_abs.powf(-0.5 - 1.0 / (2.0 * self.p))
    }

    /// `C₂ |ζ|^{-1/2p}`, the exponent reached by the argument.
    pub fn q_bound_derived(&self, zeta_abs: f64) -> f64 {
        self.c2 * zeta_abs.powf(-1.0 / (2.0 * self.p))
    }

    pub fn p_bound(&self, zeta_abs: f64) -> f64 {
        self.c3 * zeta_abs.powf(-0.5 - 1.0 / (2.0 * conjugate(self.p)))
    }

    pub fn t_bound(&self) -> f64 {
        self.m_d * self.c_p * self.delta
    }

    pub fn theta_bound(&self, zeta_abs: f64) -> f64 {
        self.c_theta / zeta_abs
    }

    /// `K_{2,q} = c_q C_{p',δ} ∫_0^∞ t^{-1+1/2q} (t+λ)^{-1/2p} dt`; needs `q > p`.
    pub fn k2(&self, q: f64, lambda: f64) -> Result<f64> {
        let integral = laplace_beta_integral(1.0 / (2.0 * q), 1.0 / (2.0 * self.p), lambda)?;
        Ok(c_q(q)? * c_r_delta(conjugate(self.p), self.delta) * integral)
    }

    /// `K_{1,r} = m_{r,d} c_{r'} C_{p,δ} ∫_0^∞ t^{-1+1/2r'} (t+λ)^{-1/2p'} dt`;
    /// needs `1 < r < p`. `m_rd` is supplied by the caller (it has no closed form).
    pub fn k1(&self, r: f64, lambda: f64, m_rd: f64) -> Result<f64> {
        let rp = conjugate(r);
        let integral =
            laplace_beta_integral(1.0 / (2.0 * rp), 1.0 / (2.0 * conjugate(self.p)), lambda)?;
        Ok(m_rd * c_q(rp)? * c_r_delta(self.p, self.delta) * integral)
    }
}

/// One row of the constants table.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantsRow {
    pub d: usize,
    pub m_d: f64,
    pub kappa_d: f64,
    pub feller_threshold: f64,
    pub delta: f64,
    pub p_lo: f64,
    pub p_hi: f64,
}

pub fn constants_table(ds: &[usize], deltas: &[f64]) -> Result<Vec<ConstantsRow>> {
    let mut rows = Vec::new();
    for &d in ds {
        for &delta in deltas {
            let (p_lo, p_hi) = interval_i(delta, d).unwrap_or((f64::NAN, f64::NAN));
            rows.push(ConstantsRow {
                d,
                m_d: m_d(d)?,
                kappa_d: kappa(d),
                feller_threshold: feller_threshold(d).unwrap_or(f64::NAN),
                delta,
                p_lo,
                p_hi,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::excessive_precision)]
    fn m_d_matches_high_precision_values() {
        // Reference digits from 30-digit arbitrary-precision evaluation.
        let refs = [
            (2, 1.520_346_901_066_280_8),
            (3, 1.974_988_558_332_518_7),
            (4, 2.340_727_180_245_948_1),
            (10, 3.862_081_240_324_850_9),
        ];
        for (d, v) in refs {
            assert!((m_d(d).unwrap() - v).abs() < 1e-13 * v);
        }
        assert!(m_d(1).is_err());
    }

    #[test]
    fn both_forms_of_m_d_agree() {
        for d in 2..=10 {
            let a = m_d(d).unwrap();
            let b = m_d_from_square(d).unwrap();
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn interval_at_three_quarters() {
        let d = 3;
        let delta = 0.75 / m_d(d).unwrap();
        let (lo, hi) = interval_i(delta, d).unwrap();
        assert!((lo - 4.0 / 3.0).abs() < 1e-12);
        assert!((hi - 4.0).abs() < 1e-12);
        let (lo0, hi0) = interval_i(0.0, d).unwrap();
        assert_eq!(lo0, 1.0);
        assert!(hi0.is_infinite());
        assert!(interval_i(1.001 / m_d(d).unwrap(), d).is_err());
    }

    #[test]
    fn feller_threshold_values() {
        assert_eq!(feller_threshold(3).unwrap(), 1.0);
        assert!((feller_threshold(4).unwrap() - 8.0 / 9.0).abs() < 1e-15);
        let delta = 0.75 / m_d(3).unwrap();
        let (lo, hi) = feller_p_range(delta, 3).unwrap().unwrap();
        assert_eq!(lo, 2.0);
        assert!((hi - 4.0).abs() < 1e-12);
        for d in 3..=10 {
            assert!(feller_threshold(d).unwrap() <= 1.0);
        }
    }

    #[test]
    fn c_p_is_minimal_at_two() {
        assert_eq!(c_p(2.0), 1.0);
        for p in [1.1, 1.5, 3.0, 7.0] {
            assert!(c_p(p) > 1.0);
        }
    }

    #[test]
    fn c_q_at_two() {
        assert!((c_q(2.0).unwrap() - 0.134_838_150_297_094_84).abs() < 1e-14);
        assert!((c_q(3.0).unwrap() - 0.118_862_354_635_443_31).abs() < 1e-14);
        assert!(c_q(1.0).is_err());
    }

    #[test]
    fn beta_integral_matches_trapezoid() {
        let (a, b, lam) = (0.2, 0.35, 2.0);
        let closed = laplace_beta_integral(a, b, lam).unwrap();
        // t = e^s; integrand e^{a s} (e^s + λ)^{-b}, decays at both ends.
        let h = 0.01;
        let s: f64 = (-40_000..40_000)
            .map(|i| {
                let s = i as f64 * h;
                (a * s).exp() * (s.exp() + lam).powf(-b)
            })
            .sum::<f64>()
            * h;
        assert!((closed - s).abs() / closed < 1e-6);
        assert!(laplace_beta_integral(0.3, 0.2, 1.0).is_err());
    }

    #[test]
    fn norm_constants_refuse_guard_violation() {
        let d = 3;
        let delta = 1.001 / m_d(d).unwrap();
        assert!(matches!(NormBoundConstants::new(d, 2.0, delta), Err(Error::Guard(_))));
        let k = NormBoundConstants::new(d, 2.5, 0.3).unwrap();
        assert!(k.t_bound() < 1.0);
        assert!(k.c_theta > 1.0);
        assert!(k.k2(3.0, 1.0).unwrap() > 0.0);
        assert!(k.k2(2.0, 1.0).is_err());
        assert!(k.k1(2.0, 1.0, 1.0).unwrap() > 0.0);
    }
}
