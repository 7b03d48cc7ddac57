use anyhow::Result;
use sdlab::acceptance::{
    calibrate, run_criterion, AcceptanceOptions, CheckRow, CRITERIA, GUARD_TARGET,
};
use sdlab::constants::{
    c_p, check_guard, constants_table, interval_i, kappa, m_d, m_d_from_square,
};
use sdlab::feller::{mc_vs_semigroup, strong_feller_probe, SimDrift, SimParams};
use sdlab::fields::{
    estimate_f, estimate_f_half, estimate_k_sampled, inclusion_checks, log_lambda_grid, mollify,
    KSweep,
};
use sdlab::fit::loglog_fit;
use sdlab::kernel::{
    check_a1, check_a2, check_a3_a4, check_a5, demo_a0, kernel_value, yukawa, KernelCheckRow,
    KernelProbe, ProbeLattice,
};
use sdlab::linop::NormEstimateOptions;
use sdlab::regularity::{
    bessel_smoothing_study, holder_probe, test_functions, weak_identity_residual, HolderRegion,
    RoughInput, SmoothingStudy,
};
use sdlab::semigroup::{
    evolve, positivity_check, semigroup_convergence_study, semigroup_law_discrepancy,
    ultracontractivity_study, SemigroupParams,
};
use sdlab::spectral::lp_norm;
use sdlab::theta::{
    norm_bound_report, pseudo_resolvent_residual, resolvent_residual, strong_convergence_study,
    ResolventParams, ThetaAssembly,
};
use sdlab::{Complex64, Grid, GridFunction, GridVectorField};
use serde::Serialize;

use crate::artifacts::Artifacts;
use crate::config::{Config, ConfigError, Experiment, KERNEL_CHECKS};

/// Runs one experiment into `out`. Returns `false` only when an acceptance
/// criterion fails; other experiments report their checks without gating.
pub fn run(exp: Experiment, cfg: &Config, out: &mut Artifacts) -> Result<bool> {
    match exp {
        Experiment::Constants => constants(cfg, out),
        Experiment::EstimateClass => estimate_class(cfg, out),
        Experiment::Resolvent => resolvent(cfg, out),
        Experiment::PseudoResolvent => pseudo_resolvent(cfg, out),
        Experiment::NormBounds => norm_bounds(cfg, out),
        Experiment::ConvergenceStudy => convergence_study(cfg, out),
        Experiment::Semigroup => semigroup(cfg, out),
        Experiment::Ultracontractivity => ultracontractivity(cfg, out),
        Experiment::VerifyKernels => verify_kernels(cfg, out),
        Experiment::HolderProbe => holder(cfg, out),
        Experiment::SmoothingStudy => smoothing(cfg, out),
        Experiment::WeakIdentity => weak_identity(cfg, out),
        Experiment::Simulate => simulate(cfg, out),
        Experiment::Acceptance => return acceptance(cfg, out),
    }?;
    let checks = out.checks();
    let passed = checks.iter().filter(|r| r.pass).count();
    println!("{}: {passed}/{} checks pass", exp.name(), checks.len());
    Ok(true)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn grid(cfg: &Config) -> Result<Grid> {
    let g = cfg.grid();
    Ok(Grid::new(cfg.d, g.n, g.box_length)?)
}

fn drift(cfg: &Config, grid: &Grid, mollify_cells: Option<f64>) -> Result<GridVectorField> {
    let b = cfg.field.sample(grid)?;
    Ok(match mollify_cells {
        Some(cells) => mollify(&b, cells * grid.h())?,
        None => b,
    })
}

/// `(δ, λ)` from the config, or calibrated on the grid field.
fn class_data(cfg: &Config, b: &GridVectorField, out: &mut Artifacts) -> Result<(f64, f64)> {
    let (delta, lambda) = match (cfg.delta, cfg.lambda) {
        (Some(delta), Some(lambda)) => (delta, lambda),
        _ => {
            let cal = calibrate(b, cfg.p, GUARD_TARGET)?;
            out.note("calibration", cal);
            (cal.delta, cal.lambda)
        }
    };
    let guard = check_guard(b.grid().d(), cfg.p, delta)?;
    out.check(CheckRow::at_most("m_d c_p δ", guard, 1.0));
    Ok((delta, lambda))
}

fn params(cfg: &Config, d: usize, delta: f64, lambda: f64) -> ResolventParams {
    let zeta = cfg.zeta().unwrap_or(c(kappa(d) * lambda, 0.0));
    let base = ResolventParams::new(cfg.p, zeta, delta, lambda);
    base.with_exponents(cfg.q.unwrap_or(base.q), cfg.r.unwrap_or(base.r))
}

fn assembly(cfg: &Config, b: GridVectorField, out: &mut Artifacts) -> Result<ThetaAssembly> {
    let d = b.grid().d();
    let (delta, lambda) = class_data(cfg, &b, out)?;
    Ok(ThetaAssembly::new(
        b,
        params(cfg, d, delta, lambda),
        cfg.representation,
        cfg.neumann,
    )?)
}

fn setup(cfg: &Config, out: &mut Artifacts) -> Result<ThetaAssembly> {
    let g = grid(cfg)?;
    let b = drift(cfg, &g, cfg.mollify_cells)?;
    assembly(cfg, b, out)
}

fn gaussian(grid: Grid, sigma: f64) -> GridFunction {
    GridFunction::from_real_fn(grid, |x| {
        (-0.5 * x.iter().map(|v| v * v).sum::<f64>() / (sigma * sigma)).exp()
    })
}

/// The configured input, or a bump of width `L/8` at the origin.
fn input(cfg: &Config, grid: Grid) -> Result<GridFunction> {
    match &cfg.input {
        Some(spec) => Ok(spec.sample(grid)?),
        None => Ok(gaussian(grid, grid.box_length() / 8.0)),
    }
}

fn scaled_zetas(pairs: &[[f64; 2]], a: f64) -> Vec<Complex64> {
    pairs.iter().map(|&[re, im]| c(re * a, im * a)).collect()
}

fn decreasing_checks(out: &mut Artifacts, name: &str, levels: &[f64], values: &[f64]) {
    for (w, n) in values.windows(2).zip(levels.windows(2)) {
        let mut row = CheckRow::at_most(format!("{name}: n = {} below n = {}", n[1], n[0]), w[1], w[0]);
        row.pass = w[1] < w[0];
        out.check(row);
    }
    if let (Some(&first), Some(&last)) = (values.first(), values.last()) {
        let ratio = if first > 0.0 { last / first } else { f64::INFINITY };
        out.check(CheckRow::at_most(format!("{name}: final / initial"), ratio, 0.1));
    }
}

/// `max|b| / 2^k`, `k = 5, …, 1`: every level cuts into the field.
fn default_levels(b: &GridVectorField) -> Vec<f64> {
    let top = b.max_magnitude();
    (1..=5).rev().map(|k| top / f64::from(1u32 << k)).collect()
}

fn constants(cfg: &Config, out: &mut Artifacts) -> Result<()> {
    let ds = cfg.ds.clone().unwrap_or_else(|| vec![cfg.d]);
    if let Some(&d) = ds.iter().find(|d| !(2..=10).contains(*d)) {
        return Err(ConfigError::new("ds", format!("need 2 ≤ d ≤ 10 (got {d})")).into());
    }
    let deltas = cfg.deltas.clone().unwrap_or_else(|| vec![0.05, 0.1, 0.2, 0.3, 0.4]);
    let rows = constants_table(&ds, &deltas)?;
    out.table("constants.csv", &rows)?;
    let mds = ds.iter().map(|&d| m_d(d)).collect::<sdlab::Result<Vec<_>>>()?;
    out.xy("m_d.csv", &ds.iter().map(|&d| d as f64).collect::<Vec<_>>(), &mds)?;
    for (&d, &md) in ds.iter().zip(&mds) {
        let gap = (md - m_d_from_square(d)?).abs() / md;
        out.check(CheckRow::at_most(format!("m_d two forms, relative gap (d = {d})"), gap, 1e-12));
        for &delta in &deltas {
            if let Ok((lo, hi)) = interval_i(delta, d) {
                out.check(CheckRow::flag(format!("2 ∈ I(δ = {delta}), d = {d}"), lo < 2.0 && 2.0 < hi));
            }
        }
    }
    for r in &rows {
        println!(
            "d = {:2}  m_d = {:.12}  κ_d = {:.6}  δ = {:<6}  I(δ) = ({:.6}, {:.6})",
            r.d, r.m_d, r.kappa_d, r.delta, r.p_lo, r.p_hi
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct ClassRow {
    lambda: f64,
    f_half: f64,
    f: f64,
    k: f64,
}

fn estimate_class(cfg: &Config, out: &mut Artifacts) -> Result<()> {
    let g = grid(cfg)?;
    let b = drift(cfg, &g, cfg.mollify_cells)?;
    let (l, h) = (g.box_length(), g.h());
    let lambdas = cfg
        .lambdas
        .clone()
        .unwrap_or_else(|| log_lambda_grid(0.1 / (l * l), 1.0 / (h * h), 13));
    let half = estimate_f_half(&b, &lambdas)?;
    let form = estimate_f(&b, &lambdas)?;
    let kato = estimate_k_sampled(&b, &lambdas, &KSweep::default())?;
    let rows: Vec<ClassRow> = (0..lambdas.len())
        .map(|i| ClassRow {
            lambda: lambdas[i],
            f_half: half.curve[i],
            f: form.curve[i],
            k: kato.curve[i],
        })
        .collect();
    out.table("class_estimates.csv", &rows)?;
    out.xy("f_half.csv", &lambdas, &half.curve)?;
    out.xy("f.csv", &lambdas, &form.curve)?;
    out.xy("k.csv", &lambdas, &kato.curve)?;
    let scale = m_d(cfg.d)? * c_p(cfg.p);
    let (lambda, delta) = half
        .smallest_lambda_within(GUARD_TARGET / scale)
        .unwrap_or((half.lambda, half.delta));
    out.note("calibration", serde_json::json!({ "delta": delta, "lambda": lambda }));
    out.check(CheckRow::at_most(format!("m_d c_p δ at λ = {lambda:.4e}"), scale * delta, 1.0));
    let inc = inclusion_checks(&b, lambda, None, 0.05)?;
    out.check(CheckRow::at_most(
        "weak form-bound δ vs √δ_F (5% allowance)",
        inc.delta_half,
        inc.delta_f.sqrt() * 1.05,
    ));
    out.check(CheckRow::at_most(
        "weak form-bound δ vs δ_K (5% allowance)",
        inc.delta_half,
        inc.delta_k * 1.05,
    ));
    println!("δ = {delta:.6e} at λ = {lambda:.6e} (m_d c_p δ = {:.4})", scale * delta);
    Ok(())
}

fn resolvent(cfg: &Config, out: &mut Artifacts) -> Result<()> {
    let theta = setup(cfg, out)?;
    let f = input(cfg, *theta.grid())?;
    let u = theta.apply_theta(&f)?;
    out.grid_function("theta_f", &u)?;
    let residual = resolvent_residual(&theta, &f)?;
    out.check(CheckRow::at_most("‖(ζ+Λ)Θf - f‖_p / ‖f‖_p", residual, 1e-8));
    let terms = theta.neumann_inverse(&theta.apply_g(&f)?)?.terms();
    out.note("neumann_terms", terms);
    println!("ζ = {}, residual = {residual:.3e}, Neumann terms = {terms}", theta.params().zeta);
    Ok(())
}

fn pseudo_resolvent(cfg: &Config, out: &mut Artifacts) -> Result<()> {
    let theta = setup(cfg, out)?;
    let f = input(cfg, *theta.grid())?;
    let a = kappa(cfg.d) * theta.params().lambda;
    let pairs = cfg.zeta_pairs.clone().unwrap_or_else(|| {
        vec![
            [[1.0, 0.0], [2.0, 0.0]],
            [[1.0, 1.0], [1.0, -1.0]],
            [[1.5, 4.0], [3.0, 0.0]],
            [[2.0, 16.0], [2.0, -16.0]],
        ]
    });
    for [z, e] in pairs {
        let (z, e) = (c(z[0] * a, z[1] * a), c(e[0] * a, e[1] * a));
        let r = pseudo_resolvent_residual(&theta, z, e, &f)?;
        out.check(CheckRow::at_most(format!("(ζ, η) = ({z:.4}, {e:.4})"), r, 1e-8));
    }
    Ok(())
}

fn norm_bounds(cfg: &Config, out: &mut Artifacts) -> Result<()> {
    let theta = setup(cfg, out)?;
    let a = kappa(cfg.d) * theta.params().lambda;
    let zetas = scaled_zetas(
        cfg.zetas.as_deref().unwrap_or(&[[1.0, 0.0], [1.0, 4.0], [4.0, 0.0]]),
        a,
    );
    let opts = NormEstimateOptions {
        restarts: cfg.restarts.unwrap_or(8),
        seed: cfg.seed,
        ..Default::default()
    };
    let rows = norm_bound_report(&theta, &zetas, &opts, None)?;
    out.table("norm_bounds.csv", &rows)?;
    for r in &rows {
        let mut row = CheckRow::at_most(
            format!("{} at ζ = {:.4}{:+.4}i", r.quantity, r.zeta_re, r.zeta_im),
            r.lhs,
            r.rhs_bound,
        );
        row.pass = r.pass;
        out.check(row);
    }
    Ok(())
}

#[derive(Serialize)]
struct ConvergenceRow {
    level: f64,
    resolvent_error: f64,
    semigroup_lp_error: f64,
    semigroup_sup_error: f64,
}

fn convergence_study(cfg: &Config, out: &mut Artifacts) -> Result<()> {
    let theta = setup(cfg, out)?;
    let f = input(cfg, *theta.grid())?;
    let levels = cfg.levels.clone().unwrap_or_else(|| default_levels(theta.drift()));
    let res = strong_convergence_study(
        theta.drift(),
        &levels,
        *theta.params(),
        theta.representation(),
        cfg.neumann,
        &f,
    )?;
    let sp = cfg
        .semigroup
        .unwrap_or_else(|| SemigroupParams::new(1.0 / theta.params().zeta.re, 8));
    let semi = semigroup_convergence_study(&theta, &levels, &sp, &f)?;
    let rows: Vec<ConvergenceRow> = res
        .iter()
        .zip(&semi)
        .map(|(r, s)| ConvergenceRow {
            level: r.level,
            resolvent_error: r.error,
            semigroup_lp_error: s.lp_error,
            semigroup_sup_error: s.sup_error,
        })
        .collect();
    out.table("convergence.csv", &rows)?;
    let re: Vec<f64> = rows.iter().map(|r| r.resolvent_error).collect();
    let se: Vec<f64> = rows.iter().map(|r| r.semigroup_lp_error).collect();
    out.xy("resolvent_error.csv", &levels, &re)?;
    out.xy("semigroup_error.csv", &levels, &se)?;
    decreasing_checks(out, "‖Θ(b_n)f - Θ(b)f‖_p", &levels, &re);
    decreasing_checks(out, "‖e^{-tΛ(b_n)}f - e^{-tΛ(b)}f‖_p", &levels, &se);
    Ok(())
}

#[derive(Serialize)]
struct CurveRow {
    t: f64,
    lp_norm: f64,
    sup_norm: f64,
}

#[derive(Serialize)]
struct FitRow {
    quantity: &'static str,
    slope: f64,
    residual: f64,
}

fn semigroup(cfg: &Config, out: &mut Artifacts) -> Result<()> {
    let theta = setup(cfg, out)?;
    let f = input(cfg, *theta.grid())?;
    let p = theta.params().p;
    let sp = cfg.semigroup.unwrap_or_else(|| SemigroupParams::new(0.05, 32));
    out.grid_function("semigroup_f", &evolve(&theta, &sp, &f)?)?;
    let times = cfg
        .t_grid
        .clone()
        .unwrap_or_else(|| [16.0, 8.0, 4.0, 2.0, 1.0].iter().map(|k| sp.t / k).collect());
    let mut rows = Vec::new();
    for &t in &times {
        let u = evolve(&theta, &SemigroupParams { t, ..sp }, &f)?;
        rows.push(CurveRow {
            t,
            lp_norm: lp_norm(&u, p)?,
            sup_norm: u.max_abs(),
        });
    }
    out.table("semigroup_curve.csv", &rows)?;
    let lp: Vec<f64> = rows.iter().map(|r| r.lp_norm).collect();
    let sup: Vec<f64> = rows.iter().map(|r| r.sup_norm).collect();
    out.xy("lp_norm.csv", &times, &lp)?;
    out.xy("sup_norm.csv", &times, &sup)?;
    let mut fits = Vec::new();
    for (quantity, ys) in [("lp_norm", &lp), ("sup_norm", &sup)] {
        if let Some(fit) = loglog_fit(&times, ys) {
            fits.push(FitRow {
                quantity,
                slope: fit.slope,
                residual: fit.residual,
            });
        }
    }
    out.table("semigroup_fit.csv", &fits)?;
    out.note("law_discrepancy", semigroup_law_discrepancy(&theta, sp.t, sp.steps, &f)?);
    let real_drift = theta.drift().values().iter().all(|v| v.im == 0.0);
    let nonneg = f.values().iter().all(|v| v.im == 0.0 && v.re >= 0.0);
    if real_drift && nonneg {
        let rep = positivity_check(&theta, &sp, &f)?;
        out.check(CheckRow::at_least("min e^{-tΛ}f", rep.min_value, -1e-8 * rep.input_sup));
        out.check(CheckRow::at_most("sup e^{-tΛ}f", rep.output_sup, (1.0 + 1e-8) * rep.input_sup));
    }
    Ok(())
}

fn ultracontractivity(cfg: &Config, out: &mut Artifacts) -> Result<()> {
    let theta = setup(cfg, out)?;
    let times = cfg.t_grid.clone().unwrap_or_else(|| {
        let quarter = theta.grid().box_length() / 4.0;
        let t_max = (quarter * quarter / 10.0).min(0.1);
        let mut ts = log_lambda_grid(t_max / 100.0, t_max, 5);
        ts.iter_mut().for_each(|t| *t = t.min(t_max));
        ts
    });
    let r = cfg.to_r.unwrap_or(f64::INFINITY);
    let rep = ultracontractivity_study(&theta, cfg.from_p, r, &times, &cfg.ultra)?;
    out.table("ultracontractivity.csv", &rep.points)?;
    let ts: Vec<f64> = rep.points.iter().map(|pt| pt.t).collect();
    let ns: Vec<f64> = rep.points.iter().map(|pt| pt.norm).collect();
    out.xy("norm_vs_t.csv", &ts, &ns)?;
    out.note("slope", rep.slope);
    out.note("fit_residual", rep.fit_residual);
    out.check(CheckRow::at_most(
        format!("|slope - ({:.4})| / {:.4} (slope {:.4})", rep.expected_slope, rep.expected_slope.abs(), rep.slope),
        (rep.slope - rep.expected_slope).abs() / rep.expected_slope.abs(),
        0.1,
    ));
    Ok(())
}

fn pass_fraction(out: &mut Artifacts, rows: &[KernelCheckRow]) {
    let mut names: Vec<&str> = rows.iter().map(|r| r.check.as_str()).collect();
    names.dedup();
    for name in names {
        let sel: Vec<_> = rows.iter().filter(|r| r.check == name && !r.skipped).collect();
        let ok = sel.iter().filter(|r| r.pass).count();
        out.check(CheckRow::at_least(
            format!("{name}: fraction of {} probes passing", sel.len()),
            ok as f64 / sel.len().max(1) as f64,
            1.0,
        ));
    }
}

fn verify_kernels(cfg: &Config, out: &mut Artifacts) -> Result<()> {
    let which: Vec<String> = cfg
        .which
        .clone()
        .unwrap_or_else(|| KERNEL_CHECKS.iter().map(|s| s.to_string()).collect());
    let has = |k: &str| which.iter().any(|w| w == k);
    let d = cfg.d;
    let mut rows: Vec<KernelCheckRow> = Vec::new();
    if has("A1") {
        let a1 = check_a1(&ProbeLattice::lower_half(d).probes(2.0))?;
        pass_fraction(out, &a1);
        rows.extend(a1);
    }
    if has("A2") {
        let r = cfg.r.unwrap_or(1.75);
        let rep = check_a2(&ProbeLattice::lower_half(d).probes(2.0), r)?;
        out.note("m_rd", serde_json::json!({ "r": rep.r, "m_rd": rep.m_rd }));
        pass_fraction(out, &rep.rows);
        rows.extend(rep.rows);
    }
    if has("A3") || has("A4") {
        let a34 = check_a3_a4(&ProbeLattice::symmetric(d).probes(2.0))?;
        pass_fraction(out, &a34);
        rows.extend(a34);
    }
    if has("A5") {
        let mut worst = 0.0f64;
        for (i, &q) in [1.5, 3.0].iter().enumerate() {
            for k in 0..10 {
                let dist = 0.05 * 10f64.powf(k as f64 / 5.0);
                let zeta = c(0.5 + k as f64, (i as f64 - 0.5) * k as f64);
                let mut x = vec![0.0; d];
                x[0] = dist;
                let s = check_a5(d, zeta, q, &x, &vec![0.0; d])?;
                worst = worst.max(s.rel_error);
                rows.push(KernelCheckRow {
                    check: format!("subordination(q = {q})"),
                    d,
                    distance: s.distance,
                    zeta_re: s.zeta_re,
                    zeta_im: s.zeta_im,
                    lhs: s.lhs,
                    rhs: s.rhs,
                    ratio: s.lhs / s.rhs,
                    pass: s.pass,
                    skipped: false,
                });
            }
        }
        out.check(CheckRow::at_most("subordination identity, max relative error", worst, 1e-6));
    }
    if d == 3 {
        let mut worst = 0.0f64;
        for &zeta in &[0.1, 1.0, 10.0] {
            for i in 0..=10 {
                let r = 0.1 * 100f64.powf(i as f64 / 10.0);
                let k = kernel_value(&KernelProbe::radial(3, r, c(zeta, 0.0), 2.0))?.value;
                worst = worst.max((k.re / yukawa(r, zeta) - 1.0).abs());
            }
        }
        out.check(CheckRow::at_most("Yukawa closed form, max relative error", worst, 1e-9));
    }
    out.table("kernels.csv", &rows)?;
    if has("A0") {
        let theta = setup(cfg, out)?;
        let f = input(cfg, *theta.grid())?;
        let levels = cfg.levels.clone().unwrap_or_else(|| default_levels(theta.drift()));
        let tail = demo_a0(theta.drift(), &f, theta.params().zeta, &levels)?;
        out.table("truncation_tail.csv", &tail.points)?;
        out.check(CheckRow::flag("‖(b - b_n)·∇(ζ-Δ)^{-1}f‖_1 strictly decreasing", tail.strictly_decreasing));
        out.check(CheckRow::at_most("‖(b - b_n)·∇(ζ-Δ)^{-1}f‖_1 final / initial", tail.final_ratio, 0.05));
    }
    Ok(())
}

fn holder(cfg: &Config, out: &mut Artifacts) -> Result<()> {
    let theta = setup(cfg, out)?;
    let g = *theta.grid();
    let f = match &cfg.input {
        Some(spec) => spec.sample(g)?,
        None => RoughInput::Indicator { radius: g.box_length() / 8.0 }.sample(g)?,
    };
    let u = theta.apply_theta(&f)?;
    let region = cfg.holder.clone().unwrap_or(HolderRegion {
        center: vec![0.0; cfg.d],
        radius: g.box_length() / 2.0,
        exclude_radius: 0.0,
        max_separation: None,
    });
    let est = holder_probe(&u, &region)?;
    out.table("holder_bins.csv", &est.bins)?;
    let s: Vec<f64> = est.bins.iter().map(|b| b.separation).collect();
    let m: Vec<f64> = est.bins.iter().map(|b| b.max_difference).collect();
    out.xy("modulus.csv", &s, &m)?;
    out.note("fit_residual", est.fit_residual);
    let mut row = CheckRow::at_least("fitted Hölder exponent of Θf", est.exponent, 0.0);
    row.pass = est.exponent > 0.0;
    out.check(row);
    Ok(())
}

fn smoothing(cfg: &Config, out: &mut Artifacts) -> Result<()> {
    if cfg.d != 3 {
        return Err(ConfigError::new("d", "smoothing-study runs in d = 3").into());
    }
    let levels = cfg.smoothing_levels.clone().unwrap_or_else(|| vec![16, 32, 64]);
    let Some(&coarse_n) = levels.first() else {
        return Err(ConfigError::new("smoothing_levels", "need at least two levels").into());
    };
    let l = cfg.grid().box_length;
    let coarse = Grid::new(3, coarse_n, l)?;
    let b = drift(cfg, &coarse, None)?;
    let (delta, lambda) = class_data(cfg, &b, out)?;
    let study = SmoothingStudy {
        drift: cfg.field.clone(),
        box_length: l,
        levels,
        params: params(cfg, 3, delta, lambda),
        input: cfg.input.clone().unwrap_or(RoughInput::Indicator { radius: 0.2 * l }),
    };
    let rep = bessel_smoothing_study(&study)?;
    out.table("smoothing.csv", &rep.rows)?;
    for w in rep.rows.windows(2) {
        out.check(CheckRow::at_most(
            format!("‖Θf‖ ratio {}³ → {}³", w[0].n, w[1].n),
            w[1].output_norm / w[0].output_norm,
            1.1,
        ));
    }
    out.check(CheckRow::at_least("‖f‖ smallest refinement ratio", rep.min_input_ratio, 1.1));
    Ok(())
}

fn weak_identity(cfg: &Config, out: &mut Artifacts) -> Result<()> {
    let theta = setup(cfg, out)?;
    let g = *theta.grid();
    let f = input(cfg, g)?;
    let rep = weak_identity_residual(&theta, &f, &test_functions(g, cfg.tests.unwrap_or(5)))?;
    out.table("weak_identity.csv", &rep.rows)?;
    for r in &rep.rows {
        out.check(CheckRow::at_most(format!("test function {}", r.test_function), r.residual, 1e-6));
    }
    Ok(())
}

#[derive(Serialize)]
struct McCsvRow {
    start: String,
    mc_mean: f64,
    mc_se: f64,
    pde_value: f64,
    difference: f64,
    budget: f64,
    censored: usize,
    pass: bool,
}

fn point(x: &[f64]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

fn simulate(cfg: &Config, out: &mut Artifacts) -> Result<()> {
    let g = grid(cfg)?;
    let cells = match cfg.mollify_cells {
        Some(cells) => Some(cells),
        None if cfg.field.is_bounded() => None,
        None => Some(4.0),
    };
    let b = drift(cfg, &g, cells)?;
    let theta = assembly(cfg, b.clone(), out)?;
    let mut sim = cfg
        .simulation
        .clone()
        .unwrap_or_else(|| SimParams::new(0.1, 1e-3, 10_000, cfg.seed, 0.75 * g.box_length()));
    sim.flip_sign ^= cfg.flip_sde_sign;
    let sp = cfg.semigroup.unwrap_or_else(|| SemigroupParams::new(sim.t, 256));
    let starts = cfg.starts.clone().unwrap_or_else(|| {
        let mut s = vec![vec![0.0; cfg.d]];
        for (k, v) in [0.25, -0.3, 0.2].into_iter().enumerate() {
            let mut x = vec![0.0; cfg.d];
            x[k % cfg.d] = v;
            s.push(x);
        }
        s
    });
    if let Some(x) = starts.iter().find(|x| x.len() != cfg.d) {
        return Err(ConfigError::new("starts", format!("start {x:?} does not have length d")).into());
    }
    let width = cfg.payoff_width.unwrap_or(0.3);
    let payoff_fn = move |x: &[f64]| {
        let mut disp = vec![0.0; x.len()];
        g.periodic_displacement(x, &vec![0.0; x.len()], &mut disp);
        (-disp.iter().map(|v| v * v).sum::<f64>() / (2.0 * width * width)).exp()
    };
    let payoff: &(dyn Fn(&[f64]) -> f64 + Sync) = &payoff_fn;
    let sim_drift = SimDrift::Grid(&b);
    let rows = mc_vs_semigroup(&sim_drift, &sim, &theta, &sp, payoff, &starts)?;
    let csv: Vec<McCsvRow> = rows
        .iter()
        .map(|r| McCsvRow {
            start: point(&r.start),
            mc_mean: r.mc_mean,
            mc_se: r.mc_se,
            pde_value: r.pde_value,
            difference: r.difference,
            budget: r.budget,
            censored: r.censored,
            pass: r.pass,
        })
        .collect();
    out.table("mc_vs_semigroup.csv", &csv)?;
    for r in &rows {
        let mut row = CheckRow::at_most(format!("|MC - semigroup| at ({})", point(&r.start)), r.difference, r.budget);
        row.pass = r.pass;
        out.check(row);
    }
    if let Some(seps) = &cfg.separations {
        let mut dir = vec![0.0; cfg.d];
        dir[0] = 1.0;
        let rep = strong_feller_probe(&sim_drift, &sim, payoff, &starts[0], &dir, seps)?;
        out.table("feller_modulus.csv", &rep.points)?;
        out.note("modulus_exponent", rep.exponent);
    }
    Ok(())
}

#[derive(Serialize)]
struct AcceptanceRow {
    id: usize,
    name: String,
    pass: bool,
    rows: usize,
    failed_rows: usize,
    error: String,
}

fn acceptance(cfg: &Config, out: &mut Artifacts) -> Result<bool> {
    if let Some(delta) = cfg.delta {
        check_guard(cfg.d, cfg.p, delta)?;
    }
    let ids = cfg
        .criteria
        .clone()
        .unwrap_or_else(|| CRITERIA.iter().map(|c| c.0).collect());
    if let Some(id) = ids.iter().find(|&&id| !CRITERIA.iter().any(|c| c.0 == id)) {
        return Err(ConfigError::new("criteria", format!("unknown criterion {id} (expected 1..=12)")).into());
    }
    let opts = AcceptanceOptions {
        flip_sde_sign: cfg.flip_sde_sign,
    };
    let mut summary = Vec::new();
    let mut seconds = serde_json::Map::new();
    let mut all = true;
    for id in ids {
        let o = run_criterion(id, &opts)?;
        println!("{}", o.summary_line());
        all &= o.pass;
        out.table(&format!("criterion_{id:02}.csv"), &o.rows)?;
        seconds.insert(format!("{id:02}"), serde_json::json!(o.seconds));
        summary.push(AcceptanceRow {
            id,
            name: o.name.clone(),
            pass: o.pass,
            rows: o.rows.len(),
            failed_rows: o.rows.iter().filter(|r| !r.pass).count(),
            error: o.error.clone().unwrap_or_default(),
        });
    }
    out.table("acceptance.csv", &summary)?;
    out.note("criterion_seconds", seconds);
    let passed = summary.iter().filter(|r| r.pass).count();
    println!("{passed}/{} criteria pass", summary.len());
    Ok(all)
}
