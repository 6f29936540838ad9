use thiserror::Error;

/// Errors raised by the simulator and receiver stages.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid almanac: {0}")]
    InvalidAlmanac(String),
    #[error("invalid array geometry: {0}")]
    InvalidGeometry(String),
    #[error("satellite is below the local horizon")]
    BelowHorizon,
    #[error("unknown PRN {0} (expected 1..=32)")]
    UnknownPrn(u8),
    #[error("invalid attacker configuration: {0}")]
    InvalidAttacker(String),
    #[error("window [{start}, {end}) exceeds stream length {len}")]
    WindowOutOfBounds { start: usize, end: usize, len: usize },
    #[error("nulled dimension {nulled} must be below the antenna count {antennas}")]
    NullingDimension { nulled: usize, antennas: usize },
    #[error("insufficient symbols: need {needed}, have {available}")]
    InsufficientSymbols { needed: usize, available: usize },
    #[error("no data step found in the symbol sequence")]
    NoDataStep,
    #[error("pairwise test needs two distinct satellites")]
    SamePair,
    #[error("positioning failed: {0}")]
    PositionFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
