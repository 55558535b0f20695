//! Model-based toolchain for distributed embedded control: dataflow algorithm
//! and architecture models, static adequation scheduling, schedule rendering,
//! macro code generation, hybrid control simulation and executive simulation.

pub mod adequation;
pub mod codegen;
pub mod exec;
pub mod hybrid;
pub mod model;
pub mod parse;
pub mod render;
pub mod report;

pub use model::{
    flatten, hyperperiod, time_convert, validate_algorithm, validate_architecture, AlgorithmGraph,
    ArchitectureGraph, Block, BlockKind, DataType, Dependency, Direction, Medium, MediumKind,
    ModelError, Operator, Port, PortRef, TimeUnit,
};
pub use report::{Code, Finding, ValidationReport};
