use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dispersion table needs at least {min} rows, got {got}")]
    TooFewRows { got: usize, min: usize },

    #[error("wavelengths must be positive and strictly increasing (row {row})")]
    NonMonotone { row: usize },

    #[error("non-finite value in row {row}")]
    NonFinite { row: usize },

    #[error("angular frequency {omega:.6e} rad/s outside model range [{min:.6e}, {max:.6e}]")]
    OutOfRange { omega: f64, min: f64, max: f64 },

    #[error("beta2 has no sign change inside the model range")]
    NoZeroCrossing,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{source_name}:{line}: {msg}")]
    Parse {
        source_name: String,
        line: usize,
        msg: String,
    },

    #[error("spectra do not share a wavelength axis")]
    AxisMismatch,

    #[error("pump powers {p1} W and {p2} W differ by less than 20%")]
    IllConditioned { p1: f64, p2: f64 },

    #[error("band {lo:.3}-{hi:.3} nm overlaps stop band {stop_lo:.3}-{stop_hi:.3} nm")]
    StopBandOverlap {
        lo: f64,
        hi: f64,
        stop_lo: f64,
        stop_hi: f64,
    },

    #[error("band {lo:.3}-{hi:.3} nm not inside the spectrum axis")]
    BandOutsideAxis { lo: f64, hi: f64 },

    #[error("fit did not converge: {0}")]
    FitNonConvergence(String),

    #[error("quadrature not converged: grid doubling changed result by {change:.3e}")]
    QuadratureNonConvergence { change: f64 },

    #[error("event stream not time-sorted at index {0}")]
    Unsorted(usize),

    #[error("cannot read {path}: {source}")]
    File { path: String, source: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical method rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::FitNonConvergence(_) | Error::QuadratureNonConvergence { .. } | Error::NoZeroCrossing
        )
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            3
        } else {
            2
        }
    }

    pub(crate) fn file(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::File {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn parse(source_name: &str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            msg: msg.into(),
        }
    }
}
