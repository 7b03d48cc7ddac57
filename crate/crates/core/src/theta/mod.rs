//! The resolvent `Θ_p(ζ, b)` of `-Δ + b·∇`, assembled from fractional
//! resolvent powers of the Laplacian and pointwise weights of `b`, with
//! `(1 + T_p)^{-1}` realised by a Neumann series.
//!
//! With `R^α = (ζ - Δ)^{-α}`, `w = |b|^{1/p'}` and `v = b^{1/p} = |b|^{1/p-1} b`:
//!
//! * `G f = v·∇R f`, `Q f = R(w f)`, `P f = |b|^{1/p} R f`, `T f = v·∇R(w f)`
//! * `Θ = R - Q (1 + T)^{-1} G`

mod neumann;
mod studies;

pub use neumann::{NeumannOutcome, NeumannSettings};
pub use studies::{
    norm_bound_report, pseudo_resolvent_residual, resolvent_residual, strong_convergence_study,
    trotter_decay_study, zeta_study_grid, ConvergencePoint, NormBoundRow, ThetaOperator,
    TrotterPoint,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{check_guard, conjugate, kappa};
use crate::error::{ensure_same_grid, Error, Result};
use crate::fft;
use crate::grid::{Grid, GridFunction, GridVectorField};
use crate::linop::LinearOperator;
use crate::spectral::{apply_table, gradient_of_table, laplacian_apply, resolvent_table, Spectrum};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which factorization [`ThetaAssembly::apply_theta`] evaluates. All agree on
/// the grid up to the Neumann tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    /// `R - Q (1+T)^{-1} G`.
    Rp,
    /// `R - R^{1/2+1/2q} Q(q) (1+T)^{-1} G(r) R^{1/2r'}`.
    Regularized,
    /// `R - R^{1/2} S (1+T)^{-1} G` with `S = R^{1/2} w`.
    SemenovA,
    /// `R^{3/4} (1 + H*S)^{-1} R^{1/4}`, `p = 2` only.
    SemenovB,
}

impl Representation {
    pub const ALL: [Representation; 4] = [
        Representation::Rp,
        Representation::Regularized,
        Representation::SemenovA,
        Representation::SemenovB,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventParams {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub zeta: Complex64,
    /// Class estimate `δ` the guard is evaluated with.
    pub delta: f64,
    /// `λ` belonging to `δ`; `ζ` must satisfy `Re ζ ≥ κ_d λ`.
    pub lambda: f64,
}

impl ResolventParams {
    pub fn new(p: f64, zeta: Complex64, delta: f64, lambda: f64) -> Self {
        let q = 2.0 * p;
        let r = 0.5 * (1.0 + p);
        Self {
            p,
            q,
            r,
            zeta,
            delta,
            lambda,
        }
    }

    pub fn with_exponents(mut self, q: f64, r: f64) -> Self {
        self.q = q;
        self.r = r;
        self
    }

    pub fn with_zeta(mut self, zeta: Complex64) -> Self {
        self.zeta = zeta;
        self
    }

    /// Checks `1 ≤ r < p < q`, the Neumann guard and `ζ ∈ 𝒪`. Returns
    /// `m_d c_p δ`.
    pub fn validate(&self, d: usize) -> Result<f64> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p must lie in (1, ∞) (got {})", self.p)));
        }
        if !(self.r >= 1.0 && self.r < self.p && self.q > self.p && self.q.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 1 ≤ r < p < q (got r = {}, p = {}, q = {})",
                self.r, self.p, self.q
            )));
        }
        if !(self.lambda > 0.0) || !(self.delta >= 0.0) {
            return Err(Error::InvalidParameter("δ ≥ 0 and λ > 0 required".into()));
        }
        let guard = check_guard(d, self.p, self.delta)?;
        let bound = kappa(d) * self.lambda;
        if self.zeta.re < bound * (1.0 - 1e-12) {
            return Err(Error::OutsideResolventSet {
                zeta_re: self.zeta.re,
                zeta_im: self.zeta.im,
                bound,
            });
        }
        Ok(guard)
    }
}

/// Tabulated symbols `(ζ + |k|²)^{-α}` used by the factorizations.
#[derive(Clone, Debug)]
struct Tables {
    r1: Vec<Complex64>,
    r_half: Vec<Complex64>,
    r_quarter: Vec<Complex64>,
    r_three_quarter: Vec<Complex64>,
    /// `R^{1/2+1/2q}`
    r_outer_q: Vec<Complex64>,
    /// `R^{1/2q'}`
    r_inner_q: Vec<Complex64>,
    /// `R^{1/2+1/2r}`
    r_grad_r: Vec<Complex64>,
    /// `R^{1/2r'}`
    r_inner_r: Vec<Complex64>,
}

impl Tables {
    fn new(grid: &Grid, params: &ResolventParams) -> Result<Self> {
        let z = params.zeta;
        let t = |a: f64| resolvent_table(grid, z, a);
        Ok(Self {
            r1: t(1.0)?,
            r_half: t(0.5)?,
            r_quarter: t(0.25)?,
            r_three_quarter: t(0.75)?,
            r_outer_q: t(0.5 + 0.5 / params.q)?,
            r_inner_q: t(0.5 / conjugate(params.q))?,
            r_grad_r: t(0.5 + 0.5 / params.r)?,
            r_inner_r: t(0.5 / conjugate(params.r))?,
        })
    }
}

/// `(|b|^{s}, |b|^{t-1} b)` nodewise, with 0 where `b = 0`.
fn weights(b: &GridVectorField, s: f64, t: f64) -> (GridFunction, GridVectorField) {
    let grid = *b.grid();
    let mag = b.magnitude();
    let scalar: Vec<f64> = mag
        .iter()
        .map(|&m| if m > 0.0 { m.powf(s) } else { 0.0 })
        .collect();
    let vector = b.map_nodes(|v| {
        let m = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let f = if m > 0.0 { m.powf(t - 1.0) } else { 0.0 };
        v.iter_mut().for_each(|c| *c *= f);
    });
    (
        GridFunction::from_real(grid, &scalar).expect("length"),
        vector,
    )
}

/// The assembled operator `Θ_p(ζ, b)` together with its factors.
#[derive(Clone, Debug)]
pub struct ThetaAssembly {
    params: ResolventParams,
    representation: Representation,
    neumann: NeumannSettings,
    guard: f64,
    b: GridVectorField,
    /// `|b|^{1/p'}`
    w_dual: GridFunction,
    /// `|b|^{1/p}`
    w_mag: GridFunction,
    /// `b^{1/p}`
    w_vec: GridVectorField,
    /// `|b|^{1/2}` and `b^{1/2}`
    half_mag: GridFunction,
    half_vec: GridVectorField,
    tables: Tables,
}

impl ThetaAssembly {
    /// Builds the assembly after checking the Neumann guard and `ζ ∈ 𝒪`.
    pub fn new(
        b: GridVectorField,
        params: ResolventParams,
        representation: Representation,
        neumann: NeumannSettings,
    ) -> Result<Self> {
        let grid = *b.grid();
        let guard = params.validate(grid.d())?;
        if representation == Representation::SemenovB {
            if params.p != 2.0 {
                return Err(Error::InvalidParameter(
                    "the H*S representation is defined for p = 2 only".into(),
                ));
            }
            if !(params.delta < 1.0) {
                return Err(Error::Guard(params.delta));
            }
        }
        let pp = conjugate(params.p);
        let (w_dual, _) = weights(&b, 1.0 / pp, 1.0);
        let (w_mag, w_vec) = weights(&b, 1.0 / params.p, 1.0 / params.p);
        let (half_mag, half_vec) = weights(&b, 0.5, 0.5);
        let tables = Tables::new(&grid, &params)?;
        Ok(Self {
            params,
            representation,
            neumann,
            guard,
            b,
            w_dual,
            w_mag,
            w_vec,
            half_mag,
            half_vec,
            tables,
        })
    }

    /// Same field and settings at a different `ζ`.
    pub fn with_zeta(&self, zeta: Complex64) -> Result<Self> {
        let params = self.params.with_zeta(zeta);
        params.validate(self.grid().d())?;
        let mut out = self.clone();
        out.tables = Tables::new(self.grid(), &params)?;
        out.params = params;
        Ok(out)
    }

    pub fn with_representation(&self, representation: Representation) -> Result<Self> {
        Self::new(self.b.clone(), self.params, representation, self.neumann)
    }

    pub fn params(&self) -> &ResolventParams {
        &self.params
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn neumann_settings(&self) -> &NeumannSettings {
        &self.neumann
    }

    /// `m_d c_p δ`.
    pub fn guard(&self) -> f64 {
        self.guard
    }

    pub fn grid(&self) -> &Grid {
        self.b.grid()
    }

    pub fn drift(&self) -> &GridVectorField {
        &self.b
    }

    pub fn weight_dual(&self) -> &GridFunction {
        &self.w_dual
    }

    pub fn weight_vector(&self) -> &GridVectorField {
        &self.w_vec
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        ensure_same_grid(self.grid(), f.grid())
    }

    /// `(ζ - Δ)^{-1} f`.
    pub fn apply_resolvent(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check(f)?;
        apply_table(&self.tables.r1, f)
    }

    pub fn apply_g(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check(f)?;
        weighted_gradient(&self.w_vec, &self.tables.r1, f)
    }

    pub fn apply_q(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check(f)?;
        apply_table(&self.tables.r1, &pointwise(&self.w_dual, f))
    }

    pub fn apply_p(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check(f)?;
        Ok(pointwise(&self.w_mag, &apply_table(&self.tables.r1, f)?))
    }

    pub fn apply_t(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check(f)?;
        weighted_gradient(&self.w_vec, &self.tables.r1, &pointwise(&self.w_dual, f))
    }

    /// `Q_p(q) = (ζ-Δ)^{-1/2q'} |b|^{1/p'}`.
    pub fn apply_q_regularized(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check(f)?;
        apply_table(&self.tables.r_inner_q, &pointwise(&self.w_dual, f))
    }

    /// `G_p(r) = b^{1/p}·∇(ζ-Δ)^{-1/2-1/2r}`.
    pub fn apply_g_regularized(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check(f)?;
        weighted_gradient(&self.w_vec, &self.tables.r_grad_r, f)
    }

    /// `S_p = (ζ-Δ)^{-1/2} |b|^{1/p'}`.
    pub fn apply_s(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check(f)?;
        apply_table(&self.tables.r_half, &pointwise(&self.w_dual, f))
    }

    /// `H*S = (ζ-Δ)^{-1/4} |b|^{1/2} b^{1/2}·∇(ζ-Δ)^{-3/4}`.
    pub fn apply_hs(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check(f)?;
        let s = weighted_gradient(&self.half_vec, &self.tables.r_three_quarter, f)?;
        apply_table(&self.tables.r_quarter, &pointwise(&self.half_mag, &s))
    }

    pub fn apply_resolvent_adjoint(&self, g: &GridFunction) -> Result<GridFunction> {
        self.check(g)?;
        apply_conj_table(&self.tables.r1, g)
    }

    pub fn apply_g_adjoint(&self, g: &GridFunction) -> Result<GridFunction> {
        self.check(g)?;
        weighted_gradient_adjoint(&self.w_vec, &self.tables.r1, g)
    }

    pub fn apply_q_adjoint(&self, g: &GridFunction) -> Result<GridFunction> {
        self.check(g)?;
        Ok(pointwise(&self.w_dual, &apply_conj_table(&self.tables.r1, g)?))
    }

    pub fn apply_p_adjoint(&self, g: &GridFunction) -> Result<GridFunction> {
        self.check(g)?;
        apply_conj_table(&self.tables.r1, &pointwise(&self.w_mag, g))
    }

    pub fn apply_t_adjoint(&self, g: &GridFunction) -> Result<GridFunction> {
        self.check(g)?;
        Ok(pointwise(
            &self.w_dual,
            &weighted_gradient_adjoint(&self.w_vec, &self.tables.r1, g)?,
        ))
    }

    pub fn apply_q_regularized_adjoint(&self, g: &GridFunction) -> Result<GridFunction> {
        self.check(g)?;
        Ok(pointwise(&self.w_dual, &apply_conj_table(&self.tables.r_inner_q, g)?))
    }

    pub fn apply_g_regularized_adjoint(&self, g: &GridFunction) -> Result<GridFunction> {
        self.check(g)?;
        weighted_gradient_adjoint(&self.w_vec, &self.tables.r_grad_r, g)
    }

    pub fn apply_hs_adjoint(&self, g: &GridFunction) -> Result<GridFunction> {
        self.check(g)?;
        let u = pointwise(&self.half_mag, &apply_conj_table(&self.tables.r_quarter, g)?);
        weighted_gradient_adjoint(&self.half_vec, &self.tables.r_three_quarter, &u)
    }

    /// `Σ_k (-T)^k g`.
    pub fn neumann_inverse(&self, g: &GridFunction) -> Result<NeumannOutcome> {
        self.check(g)?;
        neumann::solve(|x| self.apply_t(x), g, &self.neumann, self.params.p)
    }

    /// `Θ f` in the assembly's representation.
    pub fn apply_theta(&self, f: &GridFunction) -> Result<GridFunction> {
        self.apply_theta_as(self.representation, f)
    }

    pub fn apply_theta_as(&self, rep: Representation, f: &GridFunction) -> Result<GridFunction> {
        self.check(f)?;
        let t = &self.tables;
        let base = apply_table(&t.r1, f)?;
        match rep {
            Representation::Rp => {
                let x = self.neumann_inverse(&self.apply_g(f)?)?.sum;
                base.sub(&self.apply_q(&x)?)
            }
            Representation::Regularized => {
                let g = self.apply_g_regularized(&apply_table(&t.r_inner_r, f)?)?;
                let x = self.neumann_inverse(&g)?.sum;
                let y = apply_table(&t.r_outer_q, &self.apply_q_regularized(&x)?)?;
                base.sub(&y)
            }
            Representation::SemenovA => {
                let x = self.neumann_inverse(&self.apply_g(f)?)?.sum;
                let y = apply_table(&t.r_half, &self.apply_s(&x)?)?;
                base.sub(&y)
            }
            Representation::SemenovB => {
                if self.params.p != 2.0 {
                    return Err(Error::InvalidParameter(
                        "the H*S representation is defined for p = 2 only".into(),
                    ));
                }
                let g = apply_table(&t.r_quarter, f)?;
                let x = neumann::solve(|v| self.apply_hs(v), &g, &self.neumann, 2.0)?.sum;
                apply_table(&t.r_three_quarter, &x)
            }
        }
    }

    /// `Λ u = -Δu + b·∇u`, applied directly.
    pub fn apply_lambda(&self, u: &GridFunction) -> Result<GridFunction> {
        apply_generator(&self.b, u)
    }

    /// The factor named by `kind` as a matrix-free operator.
    pub fn factor(&self, kind: Factor) -> FactorOperator<'_> {
        FactorOperator { theta: self, kind }
    }
}

/// `-Δu + b·∇u`.
pub fn apply_generator(b: &GridVectorField, u: &GridFunction) -> Result<GridFunction> {
    ensure_same_grid(b.grid(), u.grid())?;
    let lap = laplacian_apply(u)?;
    let grad = crate::spectral::gradient_apply(u)?;
    let adv = b.dot(&grad)?;
    adv.sub(&lap)
}

fn pointwise(w: &GridFunction, f: &GridFunction) -> GridFunction {
    GridFunction::new(
        *f.grid(),
        w.values()
            .iter()
            .zip(f.values())
            .map(|(&a, &b)| a * b)
            .collect(),
    )
    .expect("same grid")
}

fn apply_conj_table(table: &[Complex64], f: &GridFunction) -> Result<GridFunction> {
    let conj: Vec<Complex64> = table.iter().map(|v| v.conj()).collect();
    apply_table(&conj, f)
}

/// `Σ_j w_j · ∂_j F^{-1}[σ f̂]`.
fn weighted_gradient(
    w: &GridVectorField,
    table: &[Complex64],
    f: &GridFunction,
) -> Result<GridFunction> {
    let grad = gradient_of_table(Some(table), f)?;
    w.dot(&grad)
}

/// Adjoint of [`weighted_gradient`]: `F^{-1}[σ̄ Σ_j (-i k_j) F(w̄_j g)]`.
fn weighted_gradient_adjoint(
    w: &GridVectorField,
    table: &[Complex64],
    g: &GridFunction,
) -> Result<GridFunction> {
    let grid = *g.grid();
    let spec = Spectrum::of(&grid);
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    for a in 0..grid.d() {
        let mut c: Vec<Complex64> = w
            .component(a)
            .iter()
            .zip(g.values())
            .map(|(wj, gv)| wj.conj() * gv)
            .collect();
        fft::forward(&grid, &mut c);
        for ((s, &x), &k) in acc.iter_mut().zip(&c).zip(spec.k_component(a)) {
            *s += x * (-I * k);
        }
    }
    for (s, t) in acc.iter_mut().zip(table) {
        *s *= t.conj();
    }
    fft::inverse(&grid, &mut acc);
    GridFunction::new(grid, acc)
}

/// Factors whose operator norms are reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Factor {
    G,
    Q,
    P,
    T,
    QRegularized,
    GRegularized,
    HStarS,
}

pub struct FactorOperator<'a> {
    theta: &'a ThetaAssembly,
    kind: Factor,
}

impl LinearOperator for FactorOperator<'_> {
    fn grid(&self) -> &Grid {
        self.theta.grid()
    }

    fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        let t = self.theta;
        match self.kind {
            Factor::G => t.apply_g(f),
            Factor::Q => t.apply_q(f),
            Factor::P => t.apply_p(f),
            Factor::T => t.apply_t(f),
            Factor::QRegularized => t.apply_q_regularized(f),
            Factor::GRegularized => t.apply_g_regularized(f),
            Factor::HStarS => t.apply_hs(f),
        }
    }

    fn apply_adjoint(&self, g: &GridFunction) -> Result<GridFunction> {
        let t = self.theta;
        match self.kind {
            Factor::G => t.apply_g_adjoint(g),
            Factor::Q => t.apply_q_adjoint(g),
            Factor::P => t.apply_p_adjoint(g),
            Factor::T => t.apply_t_adjoint(g),
            Factor::QRegularized => t.apply_q_regularized_adjoint(g),
            Factor::GRegularized => t.apply_g_regularized_adjoint(g),
            Factor::HStarS => t.apply_hs_adjoint(g),
        }
    }
}
