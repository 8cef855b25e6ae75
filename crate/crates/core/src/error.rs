use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Numerical failures and data/IO failures are kept apart so the CLI can
/// map them onto distinct exit codes (see [`Error::is_numerical`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has an eigenvalue with real part {max_real:e} (not asymptotically stable)")]
    NotStable { max_real: f64 },
    #[error("matrix is not symmetric (relative asymmetry {asym:e})")]
    NonSymmetric { asym: f64 },
    #[error("Sylvester equation is not uniquely solvable (spectral margin {margin:e})")]
    SpectraOverlap { margin: f64 },
    #[error("Hamiltonian matrix has no usable stable/antistable splitting: {0}")]
    NoHamiltonianSplit(String),
    #[error("matrix is indefinite (smallest eigenvalue {min_eig:e})")]
    Indefinite { min_eig: f64 },
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("shifted matrix sE - A is numerically singular at s = {re}{im:+}i")]
    SingularShift { re: f64, im: f64 },
    #[error("H2 norm is infinite (nonzero feedthrough, norm {feedthrough:e})")]
    Infinite { feedthrough: f64 },
    #[error("mass matrix E is not symmetric positive definite")]
    ESingular,
    #[error("W(X) is not positive semidefinite (smallest eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("D + D^T is singular and no regularization was requested")]
    SingularFeedthrough,
    #[error("projection bases are not biorthogonal (||W^T V - I|| = {defect:e})")]
    NotBiorthogonal { defect: f64 },
    #[error("projection basis is rank deficient")]
    RankDeficientBasis,
    #[error("no stable reduced model after {attempts} attempts")]
    NoStableRom { attempts: usize },
    #[error("reduced matrix has a defective spectrum (eigenvector condition {cond:e})")]
    DefectiveSpectrum { cond: f64 },
    #[error("KYP solution is not certified: {0}")]
    UncertifiedSolution(String),
    #[error("inner reducer returned an unstable spectral factor ROM")]
    InnerRomUnstable,
    #[error("spectral factors have different feedthrough (||M - M~|| = {gap:e})")]
    FeedthroughMismatch { gap: f64 },
    #[error("reduction result carries no projection matrices")]
    NoProjectionData,
    #[error("reduced Lyapunov solution is not positive definite (smallest eigenvalue {min_eig:e})")]
    XNotPd { min_eig: f64 },
    #[error("dual system is not passive (sampled margin {margin:e})")]
    DualNotPassive { margin: f64 },
    #[error("feedthrough of the Moebius map is singular")]
    FeedthroughSingular,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True for failures of a numerical algorithm, as opposed to bad input
    /// files or configuration.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidConfig(_) | Error::Parse { .. } | Error::Io { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
