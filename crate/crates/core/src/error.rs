use thiserror::Error;

/// Errors produced by graph construction, spectral solves and searches.
#[derive(Debug, Error)]
pub enum Error {
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("edge `{0}` has non-positive or non-finite length {1}")]
    NonPositiveLength(String, f64),
    #[error("slot {0} is assigned to more than one vertex")]
    DuplicateSlot(String),
    #[error("slot {0} is not assigned to any vertex")]
    DanglingSlot(String),
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("vertex `{0}` has no slots")]
    EmptyVertex(String),
    #[error("invalid position: {0}")]
    InvalidPosition(String),
    #[error("blocks do not form a set partition of the slot class of vertex `{0}`")]
    InvalidBlocks(String),
    #[error("contracting every edge leaves an empty graph")]
    CollapseAll,
    #[error("edge map is not an isomorphism of the underlying discrete graphs")]
    NotIsomorphic,
    #[error("graph exceeds the isomorphism size cap ({edges} edges > {cap})")]
    SizeCap { edges: usize, cap: usize },
    #[error("graph is not equilateral")]
    NotEquilateral,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("{0} is not an eigenvalue (smallest singular value ratio {1:.3e})")]
    NotAnEigenvalue(f64, f64),
    #[error("scan window exhausted after {found} of {wanted} roots (k up to {k_max:.6})")]
    ScanExhausted { found: usize, wanted: usize, k_max: f64 },
    #[error("secular and finite-element eigenvalue {index} disagree: {secular} vs {fem} (tolerance {tol:.3e})")]
    CrossCheck { index: usize, secular: f64, fem: f64, tol: f64 },
    #[error("enumeration cap exceeded: more than {0} raw templates")]
    EnumerationCap(usize),
    #[error("infeasible request: {0}")]
    Infeasible(String),
    #[error("partitions are not similar")]
    NotSimilar,
    #[error("eigenfunction vanishes identically")]
    ZeroFunction,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
