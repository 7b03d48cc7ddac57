use std::collections::HashMap;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use super::estimators::f_half_at;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridVectorField};
use crate::spectral::{apply_table, Spectrum};

/// `b_n = b` where `|b| ≤ n`, `n b/|b|` elsewhere.
pub fn truncate(b: &GridVectorField, n: f64) -> GridVectorField {
    b.map_nodes(|v| {
        let mag = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if mag > n {
            let s = n / mag;
            v.iter_mut().for_each(|c| *c *= s);
        }
    })
}

const MOLLIFIER_NODES: usize = 2048;

fn bump(r: f64) -> f64 {
    if r < 1.0 {
        (1.0 / (r * r - 1.0)).exp()
    } else {
        0.0
    }
}

/// Trapezoid on `[0, 1]`; exact up to rounding because the integrand is even
/// at 0 and flat at 1.
fn radial_integral<F: Fn(f64) -> f64>(f: F) -> f64 {
    let h = 1.0 / MOLLIFIER_NODES as f64;
    (1..MOLLIFIER_NODES).map(|i| f(i as f64 * h)).sum::<f64>() * h
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| radial_integral(|r| bump(r) * r * r))
}

/// Fourier transform of the unit-mass bump in three dimensions at `|ξ| = s`,
/// normalized so that the value at 0 is 1.
pub fn mollifier_hat(s: f64) -> f64 {
    radial_integral(|r| bump(r) * r * r * sinc(s * r)) / bump_mass()
}

/// `∫ η(y)/|y| dy` for the unit-mass bump; `sup |η_ε ∗ (c x/|x|²)| ≤ c·this/ε`.
pub fn mollifier_inverse_distance_moment() -> f64 {
    radial_integral(|r| bump(r) * r) / bump_mass()
}

/// Spectral convolution with `η_ε`.
pub fn mollify(b: &GridVectorField, eps: f64) -> Result<GridVectorField> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("mollifier width must be positive (got {eps})")));
    }
    let grid = *b.grid();
    if grid.d() != 3 {
        return Err(Error::InvalidParameter("mollifier is implemented for d = 3".into()));
    }
    let spec = Spectrum::of(&grid);
    let mut cache: HashMap<u64, f64> = HashMap::new();
    let table: Vec<Complex64> = spec
        .k_squared()
        .iter()
        .map(|&k2| {
            let v = *cache
                .entry(k2.to_bits())
                .or_insert_with(|| mollifier_hat(eps * k2.sqrt()));
            Complex64::new(v, 0.0)
        })
        .collect();
    let comps = (0..grid.d())
        .map(|a| apply_table(&table, &b.component_function(a)).map(GridFunction::into_values))
        .collect::<Result<Vec<_>>>()?;
    let mut out = GridVectorField::from_components(grid, comps)?;
    // Drop the rounding-level imaginary part of real fields.
    if b.values().iter().all(|v| v.im == 0.0) {
        for a in 0..grid.d() {
            out.component_mut(a).iter_mut().for_each(|v| v.im = 0.0);
        }
    }
    Ok(out)
}

/// Width rule for the mollified truncations: the target width is
/// `h · max(start_cells · reference_level / n, floor_cells)`; if the class
/// estimate misses `δ̃` at the target, the width is increased by bisection up
/// to `max_cells · h`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MollifierSchedule {
    pub start_cells: f64,
    pub floor_cells: f64,
    pub max_cells: f64,
    pub reference_level: f64,
    pub lambda: f64,
}

impl Default for MollifierSchedule {
    fn default() -> Self {
        Self {
            start_cells: 8.0,
            floor_cells: 2.0,
            max_cells: 16.0,
            reference_level: 1.0,
            lambda: 1.0,
        }
    }
}

impl MollifierSchedule {
    pub fn target_width(&self, h: f64, n: f64) -> f64 {
        h * (self.start_cells * self.reference_level / n).max(self.floor_cells)
    }
}

#[derive(Clone, Debug)]
pub struct MollifiedDrift {
    pub field: GridVectorField,
    pub level: f64,
    pub epsilon: f64,
    /// Weak form-bound estimate of the result at the schedule's `λ`.
    pub delta: f64,
}

/// `η_{ε_n} ∗ b_n` with `ε_n` chosen so the weak form-bound estimate stays
/// at or below `delta_target`.
pub fn build_bn_tilde(
    b: &GridVectorField,
    n: f64,
    delta_target: f64,
    schedule: &MollifierSchedule,
) -> Result<MollifiedDrift> {
    let h = b.grid().h();
    let bn = truncate(b, n);
    let attempt = |eps: f64| -> Result<(GridVectorField, f64)> {
        let f = mollify(&bn, eps)?;
        let delta = f_half_at(&f, schedule.lambda)?;
        Ok((f, delta))
    };
    let mut lo = schedule.target_width(h, n);
    let (field, delta) = attempt(lo)?;
    if delta <= delta_target {
        return Ok(MollifiedDrift {
            field,
            level: n,
            epsilon: lo,
            delta,
        });
    }
    let mut hi = schedule.max_cells * h;
    let (mut best, mut best_delta) = attempt(hi)?;
    if best_delta > delta_target {
        return Err(Error::MollifierSelection(format!(
            "δ = {best_delta:.4} > {delta_target:.4} even at ε = {hi:.4}; grid too coarse"
        )));
    }
    for _ in 0..8 {
        let mid = 0.5 * (lo + hi);
        let (f, d) = attempt(mid)?;
        if d <= delta_target {
            hi = mid;
            best = f;
            best_delta = d;
        } else {
            lo = mid;
        }
    }
    Ok(MollifiedDrift {
        field: best,
        level: n,
        epsilon: hi,
        delta: best_delta,
    })
}

/// `η_ε ∗ (1_n b)` with `1_n` the indicator of `{|b| ≤ m_n, |x - center| ≤ n}`.
pub fn build_bn_hat(
    b: &GridVectorField,
    n: f64,
    m_n: f64,
    center: &[f64],
    eps: f64,
) -> Result<GridVectorField> {
    let grid = *b.grid();
    let mag = b.magnitude();
    let mut x = vec![0.0; grid.d()];
    let mut disp = vec![0.0; grid.d()];
    let keep: Vec<bool> = (0..grid.len())
        .map(|i| {
            grid.position(i, &mut x);
            grid.periodic_displacement(&x, center, &mut disp);
            let r = disp.iter().map(|v| v * v).sum::<f64>().sqrt();
            mag[i] <= m_n && r <= n
        })
        .collect();
    let len = grid.len();
    let mut cut = b.clone();
    for a in 0..grid.d() {
        let comp = cut.component_mut(a);
        for i in 0..len {
            if !keep[i] {
                comp[i] = Complex64::new(0.0, 0.0);
            }
        }
    }
    mollify(&cut, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::DriftSpec;
    use crate::grid::Grid;

    #[test]
    fn truncation_caps_magnitude_and_keeps_direction() {
        let g = Grid::cube(8, 2.0);
        let b = DriftSpec::Hardy { c: 1.0 }.sample(&g).unwrap();
        let n = 3.0;
        let bn = truncate(&b, n);
        let (mb, mn) = (b.magnitude(), bn.magnitude());
        let mut cb = [Complex64::new(0.0, 0.0); 3];
        let mut cn = cb;
        for i in 0..g.len() {
            assert!(mn[i] <= n * (1.0 + 1e-14));
            if mb[i] <= n {
                assert_eq!(mn[i], mb[i]);
            } else {
                assert!((mn[i] - n).abs() < 1e-12);
                b.at(i, &mut cb);
                bn.at(i, &mut cn);
                for a in 0..3 {
                    assert!((cb[a].re / mb[i] - cn[a].re / n).abs() < 1e-12);
                }
            }
        }
        assert_eq!(truncate(&b, 1e6), b);
    }

    #[test]
    fn mollifier_transform_at_zero_and_decay() {
        assert!((mollifier_hat(0.0) - 1.0).abs() < 1e-14);
        assert!(mollifier_hat(40.0).abs() < 1e-3);
        // Second moment: η̂(s) ≈ 1 - s² ⟨r²⟩ / 6 for small s.
        let r2 = radial_integral(|r| bump(r) * r.powi(4)) / bump_mass();
        let s = 1e-2;
        assert!((mollifier_hat(s) - (1.0 - s * s * r2 / 6.0)).abs() < 1e-9);
    }

    #[test]
    fn constant_field_is_unchanged() {
        let g = Grid::cube(16, 4.0);
        let b = DriftSpec::Constant {
            value: vec![0.3, -1.0, 2.0],
        }
        .sample(&g)
        .unwrap();
        let m = mollify(&b, 0.7).unwrap();
        for (x, y) in m.values().iter().zip(b.values()) {
            assert!((x - y).norm() < 1e-10);
        }
        assert!(mollify(&b, 0.0).is_err());
    }

    #[test]
    fn single_mode_converges_at_second_order() {
        let g = Grid::cube(32, 2.0 * std::f64::consts::PI);
        let b = GridVectorField::from_real_fn(g, |x, out| out[0] = x[1].sin());
        let r2 = radial_integral(|r| bump(r) * r.powi(4)) / bump_mass();
        let mut prev = f64::NAN;
        for eps in [0.4, 0.2, 0.1] {
            let m = mollify(&b, eps).unwrap();
            let err = m
                .component(0)
                .iter()
                .zip(b.component(0))
                .map(|(a, c)| (a - c).norm())
                .fold(0.0, f64::max);
            // Taylor oracle: the mode is damped by 1 - ε² ⟨r²⟩/6.
            let taylor = eps * eps * r2 / 6.0;
            assert!((err - taylor).abs() < 0.05 * taylor);
            if prev.is_finite() {
                assert!((prev / err - 4.0).abs() < 0.2);
            }
            prev = err;
        }
    }

    #[test]
    fn mollified_hardy_respects_inverse_distance_bound() {
        let g = Grid::cube(32, 4.0);
        let c = 0.5;
        let b = DriftSpec::Hardy { c }.sample(&g).unwrap();
        for cells in [2.0, 4.0, 8.0] {
            let eps = cells * g.h();
            let m = mollify(&b, eps).unwrap();
            let bound = c * mollifier_inverse_distance_moment() / eps;
            assert!(m.max_magnitude() <= bound * 1.1, "{} > {}", m.max_magnitude(), bound);
        }
    }

    #[test]
    fn hat_with_large_cutoffs_is_plain_mollification() {
        let g = Grid::cube(8, 2.0);
        let b = DriftSpec::Hardy { c: 0.3 }.sample(&g).unwrap();
        let center = DriftSpec::singular_point(&g);
        let m = build_bn_hat(&b, 10.0, 1e9, &center, 0.5).unwrap();
        assert_eq!(m, mollify(&b, 0.5).unwrap());
    }

    #[test]
    fn tilde_meets_its_target() {
        let g = Grid::cube(16, 4.0);
        let b = DriftSpec::Hardy { c: 0.2 }.sample(&g).unwrap();
        let schedule = MollifierSchedule::default();
        let m = build_bn_tilde(&b, 8.0, 0.45, &schedule).unwrap();
        assert!(m.delta <= 0.45);
        assert!(m.epsilon >= 2.0 * g.h());
    }
}
