use thiserror::Error;

use crate::dynamics::Trajectory;
use crate::laplacian::LaplacianKind;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by graph construction, Laplacian analysis, simulation,
/// and storage computation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("graph must have at least one vertex")]
    EmptyGraph,

    #[error("edge {edge}: vertex index {vertex} out of range for {n} vertices")]
    IndexOutOfRange { edge: usize, vertex: usize, n: usize },

    #[error("edge {edge}: self-loop at vertex {vertex} is not allowed")]
    SelfLoop { edge: usize, vertex: usize },

    #[error("edge {edge}: weight {weight} must be strictly positive")]
    NonPositiveWeight { edge: usize, weight: f64 },

    #[error("graph with {n} vertices exceeds the exhaustive oracle limit of {limit}")]
    GraphTooLargeForOracle { n: usize, limit: usize },

    #[error("matrix is not Metzler: entry ({row},{col}) = {value} is negative off the diagonal")]
    NotMetzler { row: usize, col: usize, value: f64 },

    #[error("matrix is not column diagonally dominant: column {col} violates -m[c,c] >= sum of off-diagonal column entries by {deficit}")]
    NotDiagonallyDominant { col: usize, deficit: f64 },

    #[error("expected a {expected} Laplacian, found {found:?}")]
    WrongKind {
        expected: &'static str,
        found: LaplacianKind,
    },

    #[error("input has {components} weak components; decompose first (see sigma_per_component)")]
    DisconnectedInput { components: usize },

    #[error("kernel vector numerically indeterminate: {detail}")]
    NumericallyIndeterminate { detail: String },

    #[error("graph is not strongly connected per component: vertex {vertex} roots no spanning tree")]
    NotStronglyConnected { vertex: usize },

    #[error("consensus graph has no spanning tree; convergence is not guaranteed")]
    NoSpanningTree,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("sigma entry {index} is zero; transformation undefined")]
    ZeroSigmaEntry { index: usize },

    #[error("state became non-finite at t = {time}; partial trajectory retained")]
    NonFiniteState { time: f64, partial: Box<Trajectory> },

    #[error("Laplacian is not balanced: max row-sum magnitude {row_sum}, max column-sum magnitude {col_sum}")]
    NotBalanced { row_sum: f64, col_sum: f64 },

    #[error("component {component}: derivative samples are not strictly increasing; energy not strictly convex")]
    NotStrictlyConvex { component: usize },

    #[error("component {component}: no inverse derivative available (enable the numeric fallback or provide one)")]
    NoInverseProvided { component: usize },

    #[error("failed to bracket the multiplier within [{lo}, {hi}]")]
    BracketingFailed { lo: f64, hi: f64 },

    #[error("mass {index} is {mass}; masses must be strictly positive")]
    NonPositiveMass { index: usize, mass: f64 },

    #[error("system is not controllable on the incidence subspace: reachable rank {krylov_rank} < incidence rank {incidence_rank}")]
    NotControllable {
        krylov_rank: usize,
        incidence_rank: usize,
    },

    #[error("boundary operator chain broken at level {level}: {detail}")]
    DimensionChainBroken { level: usize, detail: String },

    #[error("level {level} out of range for a complex of order {max}")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("face {face}: value {value} outside the entropy domain")]
    OutOfEntropyDomain { face: usize, value: f64 },

    #[error("invalid {kind:?} Laplacian entries: {detail}")]
    InvalidLaplacian { kind: LaplacianKind, detail: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
