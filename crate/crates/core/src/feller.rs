//! Euler–Maruyama for `dX = -b(X) dt + √2 dW`, whose transition semigroup is
//! `e^{-tΛ}` with `Λ = -Δ + b·∇`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::fields::DriftSpec;
use crate::fit::loglog_fit;
use crate::grid::{GridFunction, GridVectorField};
use crate::semigroup::{evolve, SemigroupParams};
use crate::theta::ThetaAssembly;

/// Largest censored fraction for which a run counts as valid.
pub const MAX_CENSORED_FRACTION: f64 = 1e-3;

const CHUNK: usize = 1024;

/// Drift as seen by the simulator.
pub enum SimDrift<'a> {
    /// Closed form with the given singular point.
    Spec { spec: &'a DriftSpec, center: Vec<f64> },
    /// Grid field, interpolated multilinearly and periodically.
    Grid(&'a GridVectorField),
    Custom(&'a (dyn Fn(&[f64], &mut [f64]) + Sync)),
}

impl SimDrift<'_> {
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        match self {
            SimDrift::Spec { spec, center } => spec.eval(x, center, out),
            SimDrift::Grid(b) => b.interpolate_real(x, out),
            SimDrift::Custom(f) => f(x, out),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimParams {
    pub t: f64,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    /// Paths leaving `|x_a - box_center_a| ≤ safety_half_width` are censored.
    pub safety_half_width: f64,
    #[serde(default)]
    pub box_center: Option<Vec<f64>>,
    /// Simulates `dX = +b dt + √2 dW` instead; used as a negative control.
    #[serde(default)]
    pub flip_sign: bool,
}

impl SimParams {
    pub fn new(t: f64, dt: f64, paths: usize, seed: u64, safety_half_width: f64) -> Self {
        Self {
            t,
            dt,
            paths,
            seed,
            safety_half_width,
            box_center: None,
            flip_sign: false,
        }
    }

    pub fn steps(&self) -> usize {
        (self.t / self.dt).ceil().max(1.0) as usize
    }

    fn validate(&self, d: usize) -> Result<()> {
        if !(self.t > 0.0 && self.dt > 0.0 && self.dt <= self.t) || self.paths == 0 {
            return Err(Error::InvalidParameter(format!(
                "need 0 < dt ≤ t and paths ≥ 1 (got t = {}, dt = {}, paths = {})",
                self.t, self.dt, self.paths
            )));
        }
        if !(self.safety_half_width > 0.0) {
            return Err(Error::InvalidParameter("safety box must have positive size".into()));
        }
        if let Some(c) = &self.box_center {
            if c.len() != d {
                return Err(Error::InvalidParameter("box centre must have length d".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimResult {
    pub mean: f64,
    pub std_error: f64,
    pub completed: usize,
    pub censored: usize,
    /// Censored fraction below [`MAX_CENSORED_FRACTION`].
    pub valid: bool,
    #[serde(skip)]
    pub terminal: Option<Vec<Vec<f64>>>,
}

struct Chunk {
    sum: f64,
    sum_sq: f64,
    completed: usize,
    censored: usize,
    terminal: Vec<Vec<f64>>,
}

/// One path; `None` if it left the safety box.
fn path(
    drift: &SimDrift<'_>,
    sp: &SimParams,
    x0: &[f64],
    index: u64,
    scratch: &mut [f64],
) -> Option<Vec<f64>> {
    let d = x0.len();
    let steps = sp.steps();
    let dt = sp.t / steps as f64;
    let noise = (2.0 * dt).sqrt();
    let sign = if sp.flip_sign { 1.0 } else { -1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(sp.seed);
    rng.set_stream(index);
    let mut x = x0.to_vec();
    for _ in 0..steps {
        drift.eval(&x, scratch);
        for a in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            x[a] += sign * scratch[a] * dt + noise * z;
        }
        let escaped = x.iter().enumerate().any(|(a, v)| {
            let c = sp.box_center.as_ref().map_or(0.0, |c| c[a]);
            (v - c).abs() > sp.safety_half_width
        });
        if escaped {
            return None;
        }
    }
    Some(x)
}

/// Runs `paths` independent paths from `x0`; path `i` uses ChaCha8 stream `i`
/// of `seed`, so the statistics are reproducible bit for bit.
pub fn simulate_paths(
    drift: &SimDrift<'_>,
    sp: &SimParams,
    x0: &[f64],
    payoff: &(dyn Fn(&[f64]) -> f64 + Sync),
    keep_terminal: bool,
) -> Result<SimResult> {
    let d = x0.len();
    sp.validate(d)?;
    let chunks = sp.paths.div_ceil(CHUNK);
    let parts = exec::map_range(chunks, |c| {
        let mut out = Chunk {
            sum: 0.0,
            sum_sq: 0.0,
            completed: 0,
            censored: 0,
            terminal: Vec::new(),
        };
        let mut scratch = vec![0.0; d];
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(sp.paths);
        for i in lo..hi {
            match path(drift, sp, x0, i as u64, &mut scratch) {
                Some(x) => {
                    let v = payoff(&x);
                    out.sum += v;
                    out.sum_sq += v * v;
                    out.completed += 1;
                    if keep_terminal {
                        out.terminal.push(x);
                    }
                }
                None => out.censored += 1,
            }
        }
        out
    });
    let (mut sum, mut sum_sq, mut completed, mut censored) = (0.0, 0.0, 0usize, 0usize);
    let mut terminal = keep_terminal.then(Vec::new);
    for p in parts {
        sum += p.sum;
        sum_sq += p.sum_sq;
        completed += p.completed;
        censored += p.censored;
        if let Some(t) = terminal.as_mut() {
            t.extend(p.terminal);
        }
    }
    let n = completed as f64;
    let mean = if completed > 0 { sum / n } else { f64::NAN };
    let var = if completed > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        f64::NAN
    };
    Ok(SimResult {
        mean,
        std_error: (var / n).sqrt(),
        completed,
        censored,
        valid: (censored as f64) < MAX_CENSORED_FRACTION * sp.paths as f64,
        terminal,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct McRow {
    pub start: Vec<f64>,
    pub mc_mean: f64,
    pub mc_se: f64,
    pub pde_value: f64,
    pub difference: f64,
    /// `3 SE + sup|f| (dt + 1/steps)`.
    pub budget: f64,
    pub censored: usize,
    pub pass: bool,
}

/// Compares `E f(X_t^x)` with `(e^{-tΛ}f)(x)` at each start. The grid
/// function is `payoff` sampled on the assembly's grid, evolved, and
/// evaluated off-grid by trigonometric interpolation. A row passes when the
/// difference is within budget and the run is valid.
pub fn mc_vs_semigroup(
    drift: &SimDrift<'_>,
    sp: &SimParams,
    theta: &ThetaAssembly,
    semigroup: &SemigroupParams,
    payoff: &(dyn Fn(&[f64]) -> f64 + Sync),
    starts: &[Vec<f64>],
) -> Result<Vec<McRow>> {
    if (semigroup.t - sp.t).abs() > 1e-12 * sp.t {
        return Err(Error::InvalidParameter(format!(
            "simulation horizon {} differs from semigroup time {}",
            sp.t, semigroup.t
        )));
    }
    let grid = *theta.grid();
    let f = GridFunction::from_real_fn(grid, payoff);
    let c_disc = f.max_abs();
    let u = evolve(theta, semigroup, &f)?;
    let dt = sp.t / sp.steps() as f64;
    starts
        .iter()
        .map(|x0| -> Result<McRow> {
            let sim = simulate_paths(drift, sp, x0, payoff, false)?;
            let pde = u.interpolate(x0).re;
            let budget = 3.0 * sim.std_error + c_disc * (dt + 1.0 / semigroup.steps as f64);
            let difference = (sim.mean - pde).abs();
            Ok(McRow {
                start: x0.clone(),
                mc_mean: sim.mean,
                mc_se: sim.std_error,
                pde_value: pde,
                difference,
                budget,
                censored: sim.censored,
                pass: sim.valid && difference <= budget,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ModulusPoint {
    pub separation: f64,
    pub difference: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModulusReport {
    pub points: Vec<ModulusPoint>,
    /// Slope of `ln |Ef(X^x) - Ef(X^y)|` against `ln |x - y|`.
    pub exponent: f64,
}

/// `|E f(X_t^x) - E f(X_t^{x + s e})|` for each separation `s`, with both
/// starts driven by the same noise.
pub fn strong_feller_probe(
    drift: &SimDrift<'_>,
    sp: &SimParams,
    payoff: &(dyn Fn(&[f64]) -> f64 + Sync),
    x: &[f64],
    direction: &[f64],
    separations: &[f64],
) -> Result<ModulusReport> {
    let d = x.len();
    sp.validate(d)?;
    if direction.len() != d {
        return Err(Error::InvalidParameter("direction must have length d".into()));
    }
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::InvalidParameter("direction must be non-zero".into()));
    }
    let points = separations
        .iter()
        .map(|&s| -> Result<ModulusPoint> {
            let y: Vec<f64> = x.iter().zip(direction).map(|(a, e)| a + s * e / norm).collect();
            let chunks = sp.paths.div_ceil(CHUNK);
            let parts = exec::map_range(chunks, |c| {
                let mut scratch = vec![0.0; d];
                let (mut sum, mut sum_sq, mut n) = (0.0, 0.0, 0usize);
                for i in c * CHUNK..((c + 1) * CHUNK).min(sp.paths) {
                    let a = path(drift, sp, x, i as u64, &mut scratch);
                    let b = path(drift, sp, &y, i as u64, &mut scratch);
                    if let (Some(a), Some(b)) = (a, b) {
                        let v = payoff(&a) - payoff(&b);
                        sum += v;
                        sum_sq += v * v;
                        n += 1;
                    }
                }
                (sum, sum_sq, n)
            });
            let (sum, sum_sq, n) = parts
                .into_iter()
                .fold((0.0, 0.0, 0usize), |acc, p| (acc.0 + p.0, acc.1 + p.1, acc.2 + p.2));
            if n < 2 {
                return Err(Error::InvalidParameter("all paths censored".into()));
            }
            let nf = n as f64;
            let mean = sum / nf;
            let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
            Ok(ModulusPoint {
                separation: s,
                difference: mean.abs(),
                std_error: (var / nf).sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let s: Vec<f64> = points.iter().map(|p| p.separation).collect();
    let m: Vec<f64> = points.iter().map(|p| p.difference).collect();
    let exponent = loglog_fit(&s, &m).map_or(f64::NAN, |f| f.slope);
    Ok(ModulusReport { points, exponent })
}
