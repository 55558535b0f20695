//! Algorithm and architecture models.

mod algorithm;
mod architecture;
mod flatten;
mod time;
mod validate;

use thiserror::Error;

pub use algorithm::{
    builtin_type, AlgorithmGraph, Block, BlockKind, DataType, Dependency, Direction, Port, PortRef,
    BUILTIN_TYPES, SELF_BLOCK,
};
pub use architecture::{ArchitectureGraph, GateRef, Medium, MediumKind, Operator};
pub use flatten::flatten;
pub use time::{hyperperiod, time_convert, time_convert_exact, TimeUnit};
pub use validate::{cycles, is_intra, validate_algorithm, validate_architecture};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("DOMAIN: {0}")]
    Domain(String),
    #[error("FLATTEN_DANGLING: boundary port {block}.{port} is not connected inside the body")]
    FlattenDangling { block: String, port: String },
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::Domain(_) => "DOMAIN",
            ModelError::FlattenDangling { .. } => "FLATTEN_DANGLING",
        }
    }
}
