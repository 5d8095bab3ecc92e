use thiserror::Error;

/// Errors raised by tensor construction and tape operations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum TensorError {
    #[error("shape {shape:?} holds {expected} elements but {found} were provided")]
    ShapeDataMismatch {
        shape: Vec<usize>,
        expected: usize,
        found: usize,
    },

    #[error("{op}: dimension mismatch between {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("{op}: expected a matrix, got shape {shape:?}")]
    NotAMatrix { op: &'static str, shape: Vec<usize> },

    #[error("{op}: non-finite input value")]
    NonFinite { op: &'static str },

    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },

    #[error("{op}: column range {start}..{end} out of bounds for {cols} columns")]
    ColumnRange {
        op: &'static str,
        start: usize,
        end: usize,
        cols: usize,
    },

    #[error("{op}: empty input list")]
    EmptyInput { op: &'static str },

    #[error("clamp bounds inverted: lo {lo} > hi {hi}")]
    InvertedClamp { lo: f64, hi: f64 },
}
