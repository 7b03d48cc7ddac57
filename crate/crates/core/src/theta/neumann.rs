use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::spectral::lp_norm;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeumannSettings {
    /// Stop once `‖(-T)^k g‖_p < tol ‖g‖_p`.
    pub tol: f64,
    pub kmax: usize,
    /// Number of consecutive growing increments reported as divergence.
    pub growth_window: usize,
}

impl Default for NeumannSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            kmax: 200,
            growth_window: 5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NeumannOutcome {
    pub sum: GridFunction,
    /// `‖(-T)^k g‖_p / ‖g‖_p` for `k = 1, 2, …`.
    pub increments: Vec<f64>,
}

impl NeumannOutcome {
    pub fn terms(&self) -> usize {
        self.increments.len()
    }

    /// Geometric-mean contraction ratio over the last `window` increments.
    pub fn observed_ratio(&self, window: usize) -> Option<f64> {
        let n = self.increments.len();
        if n < 2 {
            return None;
        }
        let w = window.min(n - 1).max(1);
        let (a, b) = (self.increments[n - 1 - w], self.increments[n - 1]);
        if a <= 0.0 || b <= 0.0 {
            return None;
        }
        Some((b / a).powf(1.0 / w as f64))
    }
}

/// Partial sums of `Σ_k (-T)^k g`.
pub(crate) fn solve<F>(
    apply: F,
    g: &GridFunction,
    settings: &NeumannSettings,
    p: f64,
) -> Result<NeumannOutcome>
where
    F: Fn(&GridFunction) -> Result<GridFunction>,
{
    let g_norm = lp_norm(g, p)?;
    let mut sum = g.clone();
    let mut increments = Vec::new();
    if g_norm == 0.0 {
        return Ok(NeumannOutcome { sum, increments });
    }
    let minus = Complex64::new(-1.0, 0.0);
    let mut term = g.clone();
    let mut growing = 0usize;
    for _ in 0..settings.kmax {
        term = apply(&term)?.scaled(minus);
        let inc = lp_norm(&term, p)? / g_norm;
        sum.add_assign(&term)?;
        if let Some(&prev) = increments.last() {
            if inc > prev {
                growing += 1;
            } else {
                growing = 0;
            }
        }
        increments.push(inc);
        if inc < settings.tol {
            return Ok(NeumannOutcome { sum, increments });
        }
        if growing >= settings.growth_window || !inc.is_finite() {
            return Err(Error::NeumannDiverged {
                terms: increments.len(),
                last_increment: inc,
            });
        }
    }
    Err(Error::NeumannStalled {
        kmax: settings.kmax,
        last_increment: increments.last().copied().unwrap_or(f64::NAN),
    })
}
