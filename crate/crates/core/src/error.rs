use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("degenerate modulus |u| < 1e-8 at node {node}")]
    DegenerateModulus { node: usize },

    #[error("ball B_{radius}({x}, {y}) leaves the domain")]
    BallOutsideDomain { x: f64, y: f64, radius: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate coefficient: delta_reg = 0 with p < 2 and vanishing gradient in cell {cell}")]
    DegenerateCoefficient { cell: usize },

    #[error("solver diverged at iteration {iteration} (non-finite energy)")]
    Divergence { iteration: usize },

    #[error("continuation stage {stage} failed: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("projection unreliable: {fraction:.3} of nodes have |u| below the core threshold")]
    ProjectionUnreliable { fraction: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("singular point: z coincides with the vortex of the family map")]
    SingularPoint,

    #[error("overlapping reference balls around vortices {a} and {b}")]
    OverlappingBalls { a: usize, b: usize },

    #[error("vortex inside the comparison ball B_2r")]
    VortexInBall,

    #[error("snapshot format: {0}")]
    Format(String),

    #[error("checkpoint config hash mismatch: file has {found}, expected {expected}")]
    CheckpointMismatch { found: String, expected: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
