//! Trapezoid rule with step halving, for integrands that decay doubly
//! exponentially at both ends (Laplace integrals after `t = e^s`).

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub value: Complex64,
    /// `|I_h - I_{2h}|` at the last halving.
    pub error: f64,
    pub nodes: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct TrapezoidSettings {
    pub rel_tol: f64,
    pub abs_floor: f64,
    pub initial_intervals: usize,
    pub max_halvings: usize,
}

impl Default for TrapezoidSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_floor: 1e-300,
            initial_intervals: 64,
            max_halvings: 14,
        }
    }
}

impl TrapezoidSettings {
    pub fn with_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

/// `∫_a^b f`, halving the step until two successive estimates agree to
/// `rel_tol`. At least two halvings are always done.
pub fn trapezoid<F>(f: F, a: f64, b: f64, s: &TrapezoidSettings) -> Result<Quadrature>
where
    F: Fn(f64) -> Complex64,
{
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Quadrature(format!("bad interval [{a}, {b}]")));
    }
    let mut n = s.initial_intervals.max(2);
    let mut h = (b - a) / n as f64;
    let mut sum = 0.5 * (f(a) + f(b)) + (1..n).map(|i| f(a + i as f64 * h)).sum::<Complex64>();
    let mut prev = sum * h;
    for level in 0..s.max_halvings {
        let mid: Complex64 = (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum();
        sum += mid;
        n *= 2;
        h *= 0.5;
        let cur = sum * h;
        if !cur.re.is_finite() || !cur.im.is_finite() {
            return Err(Error::Quadrature("non-finite integrand".into()));
        }
        let err = (cur - prev).norm();
        if level >= 1 && err <= s.rel_tol * cur.norm() + s.abs_floor {
            return Ok(Quadrature {
                value: cur,
                error: err,
                nodes: n + 1,
            });
        }
        prev = cur;
    }
    Err(Error::Quadrature(format!(
        "no convergence after {} halvings on [{a}, {b}]",
        s.max_halvings
    )))
}
