use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("polyhedron is empty")]
    EmptyPolyhedron,
    #[error("row {0} has a zero normal vector")]
    DegenerateRow(usize),
    #[error("no covector satisfies the slice constraints")]
    Infeasible,
    #[error("target value is not in the Jelonek set")]
    NotInJelonekSet,
    #[error("sampled directions did not stabilize over {stages} schedule stages")]
    NotStabilized { stages: usize },
    #[error("no admissible samples inside the window")]
    NoAdmissibleSamples,
    #[error("rg⁺ is infinite; no destabilizing perturbation exists")]
    RgPlusInfinite,
    #[error("cannot place {0} disjoint bumps along the escaping stratum")]
    InsufficientEscape(usize),
    #[error("preimage slice is empty at iteration {iter}")]
    EmptyPreimage { iter: usize },
    #[error("contraction violated at iteration {iter} (ratio {ratio:.6})")]
    ContractionViolated { iter: usize, ratio: f64 },
    #[error("invalid perturbation spec: {0}")]
    InvalidSpec(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}
