//! Smoothness probes: Hölder moduli, Bessel-norm refinement, weak identity.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::constants::conjugate;
use crate::error::{Error, Result};
use crate::exec;
use crate::fields::DriftSpec;
use crate::fit::loglog_fit;
use crate::grid::{Grid, GridFunction};
use crate::spectral::{bessel_norm, gradient_apply, laplacian_apply, pairing, radial_table, apply_table};
use crate::theta::{NeumannSettings, Representation, ResolventParams, ThetaAssembly};

/// Ball `|x - center| ≤ radius`, minus `|x - center| < exclude_radius`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderRegion {
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default)]
    pub exclude_radius: f64,
    /// Largest separation binned; defaults to `radius`.
    #[serde(default)]
    pub max_separation: Option<f64>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HolderBin {
    pub separation: f64,
    pub max_difference: f64,
    pub pairs: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderEstimate {
    /// Fitted exponent; `+∞` when every difference vanishes.
    pub exponent: f64,
    pub fit_residual: f64,
    pub bins: Vec<HolderBin>,
}

/// Smallest separation used, in cells.
pub const MIN_SEPARATION_CELLS: usize = 4;

/// `M(s) = max |u(x) - u(x + s e_a)|` over node pairs inside the region, for
/// `s = 4h, 8h, 16h, …`; the exponent is the slope of `ln M` against `ln s`.
pub fn holder_probe(u: &GridFunction, region: &HolderRegion) -> Result<HolderEstimate> {
    let grid = *u.grid();
    let d = grid.d();
    if region.center.len() != d {
        return Err(Error::InvalidParameter("region centre must have length d".into()));
    }
    let h = grid.h();
    let mut x = vec![0.0; d];
    let mut disp = vec![0.0; d];
    let inside: Vec<bool> = (0..grid.len())
        .map(|i| {
            grid.position(i, &mut x);
            grid.periodic_displacement(&x, &region.center, &mut disp);
            let r = disp.iter().map(|v| v * v).sum::<f64>().sqrt();
            r <= region.radius && r >= region.exclude_radius
        })
        .collect();
    let mut steps = Vec::new();
    let mut k = MIN_SEPARATION_CELLS;
    let s_max = region.max_separation.unwrap_or(region.radius).min(region.radius);
    while (k as f64) * h <= s_max * (1.0 + 1e-12) && k <= grid.n() / 2 {
        steps.push(k);
        k *= 2;
    }
    if steps.len() < 4 {
        return Err(Error::RegionTooSmall(format!(
            "separations up to {s_max} give {} dyadic bins with s ≥ {}h (need 4)",
            steps.len(),
            MIN_SEPARATION_CELLS
        )));
    }
    let vals = u.values();
    let bins = exec::map_slice(&steps, |&k| {
        let mut multi = vec![0usize; d];
        let mut best = 0.0f64;
        let mut pairs = 0usize;
        for i in 0..grid.len() {
            if !inside[i] {
                continue;
            }
            grid.multi_index(i, &mut multi);
            for a in 0..d {
                let orig = multi[a];
                multi[a] = (orig + k) % grid.n();
                let j = grid.linear_index(&multi);
                multi[a] = orig;
                if inside[j] {
                    pairs += 1;
                    best = best.max((vals[i] - vals[j]).norm());
                }
            }
        }
        HolderBin {
            separation: k as f64 * h,
            max_difference: best,
            pairs,
        }
    });
    if bins.iter().any(|b| b.pairs == 0) {
        return Err(Error::RegionTooSmall("a separation bin has no pairs".into()));
    }
    if bins.iter().all(|b| b.max_difference == 0.0) {
        return Ok(HolderEstimate {
            exponent: f64::INFINITY,
            fit_residual: 0.0,
            bins,
        });
    }
    let s: Vec<f64> = bins.iter().map(|b| b.separation).collect();
    let m: Vec<f64> = bins.iter().map(|b| b.max_difference).collect();
    let fit = loglog_fit(&s, &m)
        .ok_or_else(|| Error::RegionTooSmall("fewer than two non-zero bins".into()))?;
    Ok(HolderEstimate {
        exponent: fit.slope,
        fit_residual: fit.residual,
        bins,
    })
}

/// Inputs for the smoothing study, regenerated on each grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RoughInput {
    /// Independent standard normal node values.
    WhiteNoise { seed: u64 },
    /// Indicator of the ball of the given radius about the origin.
    Indicator { radius: f64 },
    /// `(1 - Δ)^{1/2r'} g` for white noise `g`.
    NegativeOrder { r: f64, seed: u64 },
}

impl RoughInput {
    pub fn sample(&self, grid: Grid) -> Result<GridFunction> {
        match *self {
            RoughInput::WhiteNoise { seed } => Ok(white_noise(grid, seed)),
            RoughInput::Indicator { radius } => Ok(GridFunction::from_real_fn(grid, |x| {
                if x.iter().map(|v| v * v).sum::<f64>() <= radius * radius {
                    1.0
                } else {
                    0.0
                }
            })),
            RoughInput::NegativeOrder { r, seed } => {
                if !(r > 1.0) {
                    return Err(Error::InvalidParameter(format!("need r > 1 (got {r})")));
                }
                let s = 0.5 / conjugate(r);
                let table = radial_table(&grid, |k2| Complex64::new((1.0 + k2).powf(s), 0.0));
                apply_table(&table, &white_noise(grid, seed))
            }
        }
    }
}

fn white_noise(grid: Grid, seed: u64) -> GridFunction {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let vals: Vec<f64> = (0..grid.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    GridFunction::from_real(grid, &vals).expect("length matches grid")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingStudy {
    pub drift: DriftSpec,
    pub box_length: f64,
    pub levels: Vec<usize>,
    pub params: ResolventParams,
    pub input: RoughInput,
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothingRow {
    pub n: usize,
    /// `‖Θf‖_{1+1/q, p}`.
    pub output_norm: f64,
    /// `‖f‖_{1+1/q, p}`.
    pub input_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothingReport {
    pub rows: Vec<SmoothingRow>,
    pub max_output_ratio: f64,
    pub min_input_ratio: f64,
    /// Successive output ratios all `≤ 1.1`.
    pub output_bounded: bool,
    /// Successive input ratios all `> 1.1`.
    pub input_diverges: bool,
}

impl SmoothingReport {
    pub fn pass(&self) -> bool {
        self.output_bounded && self.input_diverges
    }
}

/// Bessel norms of order `1 + 1/q` of `Θf` and `f` under refinement.
pub fn bessel_smoothing_study(study: &SmoothingStudy) -> Result<SmoothingReport> {
    let p = study.params.p;
    let q = study.params.q;
    if !(q > p) {
        return Err(Error::InvalidParameter(format!("need q > p (got p = {p}, q = {q})")));
    }
    if study.levels.len() < 2 {
        return Err(Error::InvalidParameter("need at least two grid levels".into()));
    }
    let alpha = 1.0 + 1.0 / q;
    let rows = study
        .levels
        .iter()
        .map(|&n| -> Result<SmoothingRow> {
            let grid = Grid::new(3, n, study.box_length)?;
            let b = study.drift.sample(&grid)?;
            let f = study.input.sample(grid)?;
            let theta = ThetaAssembly::new(b, study.params, Representation::Rp, NeumannSettings::default())?;
            let u = theta.apply_theta(&f)?;
            Ok(SmoothingRow {
                n,
                output_norm: bessel_norm(&u, alpha, p)?,
                input_norm: bessel_norm(&f, alpha, p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ratios = |sel: fn(&SmoothingRow) -> f64| -> Vec<f64> {
        rows.windows(2).map(|w| sel(&w[1]) / sel(&w[0])).collect()
    };
    let out = ratios(|r| r.output_norm);
    let inp = ratios(|r| r.input_norm);
    let max_output_ratio = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_input_ratio = inp.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SmoothingReport {
        rows,
        max_output_ratio,
        min_input_ratio,
        output_bounded: max_output_ratio <= 1.1,
        input_diverges: min_input_ratio > 1.1,
    })
}

/// Gaussian-windowed polynomials `P_k(x - c_k) e^{-|x - c_k|²/2σ²}`, with
/// `σ = L/12` and centres within `L/8` of the origin.
pub fn test_functions(grid: Grid, count: usize) -> Vec<GridFunction> {
    let l = grid.box_length();
    let sigma = l / 12.0;
    let d = grid.d();
    (0..count)
        .map(|k| {
            let mut c = vec![0.0; d];
            for (a, ca) in c.iter_mut().enumerate() {
                let phase = (k * (a + 1)) as f64 * 2.399;
                *ca = l / 8.0 * phase.sin() * if k == 0 { 0.0 } else { 1.0 };
            }
            GridFunction::from_real_fn(grid, move |x| {
                let y: Vec<f64> = x.iter().zip(&c).map(|(a, b)| (a - b) / sigma).collect();
                let r2: f64 = y.iter().map(|v| v * v).sum();
                let poly = match k % 5 {
                    0 => 1.0,
                    1 => y[0],
                    2 => y[0] * y[d - 1],
                    3 => y[1 % d] * y[1 % d] - y[d - 1] * y[d - 1],
                    _ => 1.0 + y[0] - 0.5 * y[1 % d] * y[0],
                };
                poly * (-0.5 * r2).exp()
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakIdentityRow {
    pub test_function: usize,
    pub residual: f64,
    pub scale: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakIdentityReport {
    pub rows: Vec<WeakIdentityRow>,
    pub max_residual: f64,
}

/// With `u = Θ(ζ)f`: `|⟨f - ζu, v⟩ - ⟨u, -Δv⟩ - ⟨b·∇u, v⟩|` divided by the
/// sum of the moduli of the four terms. `b·∇u` is formed as
/// `|b|^{1/p'} (b^{1/p}·∇u)`.
pub fn weak_identity_residual(
    theta: &ThetaAssembly,
    f: &GridFunction,
    tests: &[GridFunction],
) -> Result<WeakIdentityReport> {
    let zeta = theta.params().zeta;
    let u = theta.apply_theta(f)?;
    let grad = gradient_apply(&u)?;
    let inner = theta.weight_vector().dot(&grad)?;
    let drift_term = crate::spectral::multiply_pointwise(theta.weight_dual(), &inner)?;
    let lhs_fn = f.sub(&u.scaled(zeta))?;
    let rows = exec::map_slice(tests, |v| -> Result<(f64, f64)> {
        let a = pairing(&lhs_fn, v)?;
        let b = pairing(&u, &laplacian_apply(v)?.scaled(Complex64::new(-1.0, 0.0)))?;
        let c = pairing(&drift_term, v)?;
        let scale = pairing(f, v)?.norm() + (zeta * pairing(&u, v)?).norm() + b.norm() + c.norm();
        Ok(((a - b - c).norm(), scale))
    })
    .into_iter()
    .enumerate()
    .map(|(i, r)| {
        r.map(|(res, scale)| WeakIdentityRow {
            test_function: i,
            residual: if scale > 0.0 { res / scale } else { 0.0 },
            scale,
        })
    })
    .collect::<Result<Vec<_>>>()?;
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(WeakIdentityReport { rows, max_residual })
}
