use crate::grid::Grid;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid mismatch: {0:?} vs {1:?}")]
    GridMismatch(Grid, Grid),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spectral parameter must satisfy Re ζ > 0 (got Re ζ = {0})")]
    HalfPlane(f64),

    #[error("ζ = {zeta_re}{zeta_im:+}i lies outside the half-plane Re ζ ≥ κ_d λ = {bound}")]
    OutsideResolventSet {
        zeta_re: f64,
        zeta_im: f64,
        bound: f64,
    },

    /// `m_d c_p δ ≥ 1`: the Neumann series for `(1 + T_p)^{-1}` is not
    /// guaranteed to converge.
    #[error("smallness guard violated: m_d c_p δ = {0:.6} ≥ 1")]
    Guard(f64),

    #[error("Neumann series diverged after {terms} terms (increment {last_increment:.3e})")]
    NeumannDiverged { terms: usize, last_increment: f64 },

    #[error("Neumann series stopped at kmax = {kmax} with relative increment {last_increment:.3e}")]
    NeumannStalled { kmax: usize, last_increment: f64 },

    #[error("power iteration did not converge in {iterations} iterations (residual {residual:.3e})")]
    PowerIteration { iterations: usize, residual: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("mollifier width selection failed: {0}")]
    MollifierSelection(String),

    #[error("box guard violated: {0}")]
    BoxGuard(String),

    #[error("region too small: {0}")]
    RegionTooSmall(String),

    #[error("missing artifacts: {0}")]
    MissingArtifacts(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch(*a, *b))
    }
}
