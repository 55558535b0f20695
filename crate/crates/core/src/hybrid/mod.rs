//! Hybrid control simulation: discrete PID against a continuous fan model,
//! block diagrams with event clocks, and hybrid-systems helpers.

mod diagram;
mod pid;
mod plant;
mod text;
mod theory;

use thiserror::Error;

use crate::report::ValidationReport;

pub use diagram::{
    check_synchronism, infer_activations, simulate, ActivationLink, Diagram, RegularLink, SimBlock, SimKind,
    SimTrace,
};
pub use pid::{chr_tune, pid_step, PidParams, PidState};
pub use plant::{plant_step, static_map, PlantParams, PlantState};
pub use text::parse_diagram;
pub use theory::{
    classify_time_basis, ode_to_first_order, FirstOrderSystem, HybridAutomaton, HybridTimeBasis,
    HybridTransition, OdeEquation, OdeTerm, TimeBasisClass,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HybridError {
    #[error("DOMAIN: {0}")]
    Domain(String),
    #[error("NO_ACTIVATION: {block} has no activation source")]
    NoActivation { block: String },
    #[error("AMBIGUOUS_INHERITANCE: {block} has predecessors on different clocks")]
    AmbiguousInheritance { block: String },
    #[error("INVALID_DIAGRAM:\n{0}")]
    InvalidDiagram(ValidationReport),
}

impl HybridError {
    pub fn code(&self) -> &'static str {
        match self {
            HybridError::Domain(_) => "DOMAIN",
            HybridError::NoActivation { .. } => "NO_ACTIVATION",
            HybridError::AmbiguousInheritance { .. } => "AMBIGUOUS_INHERITANCE",
            HybridError::InvalidDiagram(_) => "INVALID_DIAGRAM",
        }
    }
}
