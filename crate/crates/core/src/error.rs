use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library. Variants are grouped into families (see
/// [`Error::family`]) so the command line can map them onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    // space / metric / tree validation
    #[error("similarity is not symmetric at ({i}, {j})")]
    AsymmetricSimilarity { i: usize, j: usize },
    #[error("weights sum to {sum}, expected 1")]
    WeightSumMismatch { sum: f64 },
    #[error("entry at ({i}, {j}) = {value} lies outside [0, {bound}]")]
    OutOfRangeEntry { i: usize, j: usize, value: f64, bound: f64 },
    #[error("negative or non-finite weight at index {index}")]
    NegativeWeight { index: usize },
    #[error("duplicate point identifier {id:?} at index {index}")]
    DuplicatePoint { index: usize, id: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("bound must be positive and finite, got {0}")]
    InvalidBound(f64),
    #[error("negative or non-finite distance at ({i}, {j})")]
    NegativeDistance { i: usize, j: usize },
    #[error("triangle inequality violated by ({x}, {y}, {z})")]
    TriangleViolation { x: usize, y: usize, z: usize },
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("unknown leaf {0:?}")]
    UnknownLeaf(String),
    #[error("tree leaves do not match the points of the space: {0}")]
    LeafMismatch(String),
    #[error("copy map does not match the tree: {0}")]
    MapMismatch(String),

    // hyperbolicity
    #[error("at least one sample is required")]
    ZeroSamples,
    #[error("threshold {t} outside (0, {bound}]")]
    ThresholdOutOfRange { t: f64, bound: f64 },
    #[error("delta0 = {delta0} is not below kappa / 2 = {half_kappa}")]
    Delta0TooLarge { delta0: f64, half_kappa: f64 },
    #[error("no threshold in window {index} avoids the bad set (best mass {best})")]
    NoGoodThreshold { index: usize, best: f64 },
    #[error("space bound must be 1 (rescale first), got {0}")]
    NotUnitBound(f64),

    // regularity
    #[error("weights need a blow-up of size {needed:e}, cap is {cap}")]
    BlowupTooLarge { needed: f64, cap: u64 },
    #[error("eigensolver did not converge in {sweeps} sweeps")]
    EigensolveFailure { sweeps: usize },
    #[error("no spectral cut found: {0}")]
    NoCutFound(String),
    #[error("largest atom {p_star} exceeds the admissible bound {limit}")]
    HeavyAtom { p_star: f64, limit: f64 },
    #[error("graph has zero total mass")]
    ZeroMassGraph,
    #[error("regularity test needs two nonempty parts of positive mass")]
    EmptyPart,
    #[error("partition produced {q} parts, fewer than the required {m}")]
    InsufficientParts { q: usize, m: usize },
    #[error("postcondition violated: {0}")]
    PostconditionViolated(String),

    // cliques
    #[error("not a clique: {0}")]
    NotAClique(String),

    // tree construction
    #[error("largest atom {p_star} is above {limit}; split atoms first")]
    SplitRequired { p_star: f64, limit: f64 },

    // spin glass
    #[error("system size must be at least 2, got {0}")]
    SizeTooSmall(usize),
    #[error("cannot enumerate 2^{n} configurations (cap 2^{cap})")]
    TooLargeForEnumeration { n: usize, cap: usize },
    #[error("bad sampling schedule: {0}")]
    BadSchedule(String),
    #[error("configurations have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two distinct configurations, got {0}")]
    DegenerateSample(usize),
    #[error("value {0} is outside the range of rho")]
    RhoNotInvertibleAtValue(f64),

    // parameters and io
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Coarse grouping of [`Error`] variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorFamily {
    Validation,
    Hyperbolicity,
    Regularity,
    Cliques,
    Tree,
    SpinGlass,
    Parameters,
    Io,
}

impl ErrorFamily {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorFamily::Validation => 2,
            ErrorFamily::Hyperbolicity => 3,
            ErrorFamily::Regularity => 4,
            ErrorFamily::Cliques => 5,
            ErrorFamily::Tree => 6,
            ErrorFamily::SpinGlass => 7,
            ErrorFamily::Parameters => 8,
            ErrorFamily::Io => 9,
        }
    }
}

impl Error {
    pub fn family(&self) -> ErrorFamily {
        use Error::*;
        match self {
            AsymmetricSimilarity { .. }
            | WeightSumMismatch { .. }
            | OutOfRangeEntry { .. }
            | NegativeWeight { .. }
            | DuplicatePoint { .. }
            | DimensionMismatch(_)
            | InvalidBound(_)
            | NegativeDistance { .. }
            | TriangleViolation { .. }
            | MalformedTree(_)
            | UnknownLeaf(_)
            | LeafMismatch(_)
            | MapMismatch(_) => ErrorFamily::Validation,
            ZeroSamples
            | ThresholdOutOfRange { .. }
            | Delta0TooLarge { .. }
            | NoGoodThreshold { .. }
            | NotUnitBound(_) => ErrorFamily::Hyperbolicity,
            BlowupTooLarge { .. }
            | EigensolveFailure { .. }
            | NoCutFound(_)
            | HeavyAtom { .. }
            | ZeroMassGraph
            | EmptyPart
            | InsufficientParts { .. }
            | PostconditionViolated(_) => ErrorFamily::Regularity,
            NotAClique(_) => ErrorFamily::Cliques,
            SplitRequired { .. } => ErrorFamily::Tree,
            SizeTooSmall(_)
            | TooLargeForEnumeration { .. }
            | BadSchedule(_)
            | LengthMismatch(..)
            | DegenerateSample(_)
            | RhoNotInvertibleAtValue(_) => ErrorFamily::SpinGlass,
            InvalidParameter(_) => ErrorFamily::Parameters,
            Io { .. } | Json { .. } => ErrorFamily::Io,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
