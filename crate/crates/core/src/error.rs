use thiserror::Error;

use crate::scenegraph::Axis;

/// Every failure the engine can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error: {0}")]
    Syntax(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("conflicting constraints for pair ({i}, {j}): {detail}")]
    Conflict { i: u32, j: u32, detail: String },

    #[error("cycle in {axis} ordering involving entities {entities:?}")]
    Cycle { axis: Axis, entities: Vec<u32> },

    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("provider transport error: {0}")]
    Transport(String),

    #[error("provider protocol error: {0}")]
    Protocol(String),

    #[error("entity {entity} receives no cells")]
    Starvation { entity: u32 },

    #[error("entity {entity} covers {cells} cells, cannot host quantity {quantity}")]
    Quantity {
        entity: u32,
        cells: usize,
        quantity: u32,
    },

    #[error("entity {entity} has an empty region")]
    EmptyRegion { entity: u32 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value at step {step}: {what}")]
    NonFinite { step: usize, what: String },

    #[error("tensor format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag, used in CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Syntax(_) => "SyntaxError",
            Error::Validation(_) => "ValidationError",
            Error::Conflict { .. } => "ConflictError",
            Error::Cycle { .. } => "CycleError",
            Error::Capacity(_) => "CapacityError",
            Error::Transport(_) => "TransportError",
            Error::Protocol(_) => "ProtocolError",
            Error::Starvation { .. } => "StarvationError",
            Error::Quantity { .. } => "QuantityError",
            Error::EmptyRegion { .. } => "EmptyRegionError",
            Error::Shape(_) => "ShapeError",
            Error::NonFinite { .. } => "NonFiniteError",
            Error::Format(_) => "FormatError",
            Error::Io(_) => "IOError",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
