use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("oversampling bound violated: canvas {canvas_rows}x{canvas_cols} for object {rows}x{cols} (need >= {}x{})", 2 * .rows - 1, 2 * .cols - 1)]
    Oversampling {
        rows: usize,
        cols: usize,
        canvas_rows: usize,
        canvas_cols: usize,
    },

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("support mask has no admissible pixel")]
    EmptySupport,

    #[error("reference image is zero; relative error undefined")]
    ZeroReference,

    #[error("grid of {size} samples exceeds the quadrature cap of {cap}")]
    GridTooLarge { size: usize, cap: usize },

    #[error("optimization diverged at iteration {iteration} (loss is not finite)")]
    Diverged {
        iteration: usize,
        /// Loss history up to the failure.
        losses: Vec<f64>,
    },

    #[error("backward pass requested before a forward pass")]
    MissingForward,

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
