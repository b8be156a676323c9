use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported PGM maxval {0}, only 255 is accepted")]
    UnsupportedMaxval(u32),
    #[error("truncated PGM payload: expected {expected} bytes, got {got}")]
    TruncatedPayload { expected: usize, got: usize },
    #[error("value out of range in PGM payload: {0}")]
    PixelOutOfRange(i64),
    #[error("non-finite value in real matrix")]
    NonFinite,
    #[error("side {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("odd dimension {0}, lifting requires even sides")]
    OddDimension(usize),
    #[error("side {side} cannot hold {levels} decomposition levels")]
    TooManyLevels { side: usize, levels: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("capacity exceeded in {band}: offset {offset} + watermark rank {rank} > {available} singular values")]
    CapacityExceeded {
        band: &'static str,
        offset: usize,
        rank: usize,
        available: usize,
    },
    #[error("SVD did not converge within {0} sweeps")]
    SvdNoConvergence(usize),
    #[error("bad key file magic")]
    BadMagic,
    #[error("unsupported key file version {0}")]
    BadVersion(u32),
    #[error("key file checksum mismatch")]
    ChecksumMismatch,
    #[error("key file truncated: expected {expected} bytes, got {got}")]
    KeyTruncated { expected: usize, got: usize },
    #[error("correlation undefined: a sequence has zero variance")]
    UndefinedCorrelation,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bad attack spec: {0}")]
    BadAttackSpec(String),
}
