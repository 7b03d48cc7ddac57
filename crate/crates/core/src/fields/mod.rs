//! Drift catalog, truncation and mollification, and class-membership estimators.

mod estimators;
mod ops;

pub use estimators::{
    estimate_f, estimate_f_half, estimate_k, estimate_k_sampled, inclusion_checks, log_lambda_grid,
    ClassEstimate, DriftClass, InclusionReport, KSweep,
};
pub use ops::{
    build_bn_hat, build_bn_tilde, mollifier_hat, mollifier_inverse_distance_moment, mollify,
    truncate, MollifiedDrift, MollifierSchedule,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridVectorField};

/// Closed-form drift fields. Singular fields are centered at the
/// singular point handed to [`DriftSpec::eval`]; [`DriftSpec::sample`] puts it
/// half a cell off the node lattice so every node value is finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriftSpec {
    Zero,
    /// `c (x - x₀) / |x - x₀|²`.
    Hardy { c: f64 },
    /// `amp · | |x - x₀| - radius |^{-β} · (x - x₀)/|x - x₀|`.
    Sphere {
        beta: f64,
        amp: f64,
        #[serde(default = "unit_radius")]
        radius: f64,
    },
    Constant { value: Vec<f64> },
    /// Sum of random cosine modes with wave vectors `2π m / period`,
    /// `|m_j| ≤ max_mode`.
    SmoothRandom {
        amp: f64,
        #[serde(default = "default_modes")]
        modes: usize,
        #[serde(default = "default_max_mode")]
        max_mode: i64,
        period: f64,
        #[serde(default)]
        seed: u64,
    },
    Sum { terms: Vec<DriftSpec> },
}

fn unit_radius() -> f64 {
    1.0
}

fn default_modes() -> usize {
    6
}

fn default_max_mode() -> i64 {
    2
}

impl DriftSpec {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            DriftSpec::Zero | DriftSpec::Hardy { .. } => Ok(()),
            DriftSpec::Sphere { beta, radius, .. } => {
                if !(*beta < 1.0 && *beta >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "sphere profile needs 0 ≤ beta < 1 (got {beta})"
                    )));
                }
                if !(*radius > 0.0) {
                    return Err(Error::InvalidParameter("sphere radius must be positive".into()));
                }
                Ok(())
            }
            DriftSpec::Constant { value } => {
                if value.len() != d {
                    return Err(Error::InvalidParameter(format!(
                        "constant drift needs {d} components (got {})",
                        value.len()
                    )));
                }
                Ok(())
            }
            DriftSpec::SmoothRandom { period, .. } => {
                if !(*period > 0.0) {
                    return Err(Error::InvalidParameter("period must be positive".into()));
                }
                Ok(())
            }
            DriftSpec::Sum { terms } => terms.iter().try_for_each(|t| t.validate(d)),
        }
    }

    /// Singular point used by [`sample`](Self::sample): `(h/2, …, h/2)`.
    pub fn singular_point(grid: &Grid) -> Vec<f64> {
        vec![0.5 * grid.h(); grid.d()]
    }

    /// Evaluates the field at `x` with singular point `center`; `out` has `d`
    /// entries and is overwritten.
    pub fn eval(&self, x: &[f64], center: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        self.accumulate(x, center, out);
    }

    fn accumulate(&self, x: &[f64], center: &[f64], out: &mut [f64]) {
        match self {
            DriftSpec::Zero => {}
            DriftSpec::Hardy { c } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                if r2 > 0.0 {
                    for ((o, a), b) in out.iter_mut().zip(x).zip(center) {
                        *o += c * (a - b) / r2;
                    }
                }
            }
            DriftSpec::Sphere { beta, amp, radius } => {
                let r: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let gap = (r - radius).abs();
                if r > 0.0 && gap > 0.0 {
                    let mag = amp * gap.powf(-beta);
                    for ((o, a), b) in out.iter_mut().zip(x).zip(center) {
                        *o += mag * (a - b) / r;
                    }
                }
            }
            DriftSpec::Constant { value } => {
                for (o, v) in out.iter_mut().zip(value) {
                    *o += v;
                }
            }
            DriftSpec::SmoothRandom {
                amp,
                modes,
                max_mode,
                period,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let norm = amp / (*modes as f64).sqrt().max(1.0);
                let w = 2.0 * std::f64::consts::PI / period;
                for _ in 0..*modes {
                    let mut phase = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
                    for xa in x {
                        let m = rng.random_range(-*max_mode..=*max_mode) as f64;
                        phase += w * m * xa;
                    }
                    let c = phase.cos();
                    for o in out.iter_mut() {
                        *o += norm * (2.0 * rng.random::<f64>() - 1.0) * c;
                    }
                }
            }
            DriftSpec::Sum { terms } => {
                for t in terms {
                    t.accumulate(x, center, out);
                }
            }
        }
    }

    /// Node samples with the singular point at [`singular_point`](Self::singular_point).
    pub fn sample(&self, grid: &Grid) -> Result<GridVectorField> {
        self.validate(grid.d())?;
        let center = Self::singular_point(grid);
        Ok(GridVectorField::from_real_fn(*grid, |x, out| {
            self.eval(x, &center, out)
        }))
    }

    /// True if the closed form is bounded on `ℝ^d`.
    pub fn is_bounded(&self) -> bool {
        match self {
            DriftSpec::Zero | DriftSpec::Constant { .. } | DriftSpec::SmoothRandom { .. } => true,
            DriftSpec::Hardy { c } => *c == 0.0,
            DriftSpec::Sphere { beta, amp, .. } => *beta == 0.0 || *amp == 0.0,
            DriftSpec::Sum { terms } => terms.iter().all(DriftSpec::is_bounded),
        }
    }
}
