use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Every value of the heatmap (or of the sampled window) is equal or
    /// non-positive, so there is no meaningful maximum.
    #[error("flat heatmap: no distinguishable maximum")]
    FlatHeatmap,

    #[error("heatmap peak at ({x}, {y}) lies on the border")]
    BoundaryPeak { x: usize, y: usize },

    #[error("selected anchors are collinear")]
    CollinearAnchors,

    #[error("singular least-squares system (det = {det:e})")]
    SingularSystem { det: f64 },

    #[error("kernel {kernel}x{kernel} does not fit in a {width}x{height} heatmap")]
    KernelTooLarge {
        kernel: usize,
        width: usize,
        height: usize,
    },

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Malformed binary heatmap file. Every variant carries the byte offset at
/// which the problem was detected.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic {found:?} at byte {offset}, expected \"HMAP\"")]
    BadMagic { offset: u64, found: [u8; 4] },

    #[error("unsupported version {found} at byte {offset}")]
    UnsupportedVersion { offset: u64, found: u32 },

    #[error("unsupported dtype {found} at byte {offset}")]
    UnsupportedDtype { offset: u64, found: u32 },

    #[error("truncated file at byte {offset}: expected {expected} bytes, found {actual}")]
    Truncated {
        offset: u64,
        expected: u64,
        actual: u64,
    },

    #[error("{extra} trailing bytes after payload at byte {offset}")]
    TrailingBytes { offset: u64, extra: u64 },

    #[error("non-finite value at byte {offset}")]
    NonFinite { offset: u64 },

    #[error("header at byte {offset}: {reason}")]
    BadHeader { offset: u64, reason: String },
}

impl Error {
    /// Errors raised by the numerical decoders rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::FlatHeatmap
                | Error::BoundaryPeak { .. }
                | Error::CollinearAnchors
                | Error::SingularSystem { .. }
        )
    }
}
