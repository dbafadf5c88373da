use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sector: {0}")]
    InvalidSector(String),
    #[error("operator string leaves the magnetization sector {sector}")]
    SectorEscape { sector: i32 },
    #[error("site {site} out of range 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },
    #[error("window error: {0}")]
    Window(String),
    #[error("invalid label (n = {n}, l = {ell}): {reason}")]
    Label { n: f64, ell: usize, reason: String },
    #[error("invalid density matrix: eigenvalue {eigenvalue:e} below tolerance")]
    InvalidDensity { eigenvalue: f64 },
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("size error: {0}")]
    Size(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("eigensolver did not converge after {iterations} iterations (best residual {best_residual:e})")]
    Convergence { iterations: usize, best_residual: f64 },
    #[error("deflated state overlaps the known set by {overlap:e}; increase the shift")]
    DeflationLeak { overlap: f64 },
    #[error("Krylov step did not reach tolerance (estimate {estimate:e})")]
    Step { estimate: f64 },
    #[error("degenerate wave packet: prepared state has zero norm")]
    DegeneratePacket,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed state file: {0}")]
    StateFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. }
                | Error::DeflationLeak { .. }
                | Error::Step { .. }
                | Error::InvalidDensity { .. }
                | Error::ZeroNorm
                | Error::DegeneratePacket
        )
    }
}
