use crate::ssa::Decomposition;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the crate.
///
/// Variants split into two broad families: parameter problems (bad
/// coordinates, mismatched topologies, impossible window placements) and
/// numerical problems (non-convergence, rank deficiency, structure
/// violations). Callers that need to map failures onto process exit codes
/// can use [`Error::is_numerical`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("coordinate {value} on the {axis} axis is outside 1..={max}")]
    InvalidCoordinate { axis: char, value: u64, max: u64 },

    #[error("coordinate arithmetic overflow on the {axis} axis ({a} + {b})")]
    CoordinateOverflow { axis: char, a: u64, b: u64 },

    #[error("period {value} is outside 1..={max}")]
    InvalidPeriod { value: u64, max: u64 },

    #[error("operands live on different topologies")]
    TopologyMismatch,

    #[error("shape must contain at least one cell")]
    EmptyShape,

    #[error("window is not a subset of the region")]
    WindowNotInRegion,

    #[error("window fits at no origin inside the region")]
    WindowTooLarge,

    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: &'static str },

    #[error("vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("matrix is not quasi-Hankel: relative fiber spread {spread:.3e} exceeds {tol:.0e}")]
    StructureViolation { spread: f64, tol: f64 },

    #[error("dense path needs {entries} fiber entries, limit is {limit}")]
    DenseTooLarge { entries: u128, limit: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grouping: {0}")]
    InvalidGroups(String),

    #[error("{converged} of {requested} singular triples converged within {iterations} iterations")]
    NonConvergence {
        requested: usize,
        converged: usize,
        iterations: usize,
        partial: Box<Decomposition>,
    },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("window admits no interior shift along the {axis} axis")]
    DegenerateWindow { axis: char },

    #[error("basis rank below {r}: sigma_{r}/sigma_1 = {ratio:.3e}")]
    RankDeficient { r: usize, ratio: f64 },

    #[error("eigenvector basis has condition number {cond:.3e}; root pairing is unreliable")]
    PairingUnreliable { cond: f64 },

    #[error("component incompatible with the topology: {0}")]
    TopologyViolation(String),

    #[error("result has non-negligible imaginary part: max |Im| = {max_imag:.3e}")]
    NonRealResult { max_imag: f64 },

    #[error("array is not a full toroidal grid")]
    NotToroidalFullGrid,

    #[error("polynomial degree {degree} exceeds the supported maximum {max}")]
    PolynomialDegree { degree: u32, max: u32 },

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

impl Error {
    /// True for failures of the numerics rather than of the call itself.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StructureViolation { .. }
                | Error::NonConvergence { .. }
                | Error::NumericalFailure(_)
                | Error::RankDeficient { .. }
                | Error::PairingUnreliable { .. }
                | Error::NonRealResult { .. }
        )
    }
}
