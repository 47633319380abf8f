//! Executable kernel for Paradigm coordination models.
//!
//! A model is a set of components, each described by a state-transition
//! diagram (STD). Partitions group a component's behaviour into phases, and
//! consistency rules couple a manager's detailed step to phase transfers of
//! employee roles. On top of those semantics the crate provides:
//!
//! - [`dsl`]: the `.pdm` model format and the `.pprop` property language,
//! - [`engine`]: the interleaving step semantics and trace replay,
//! - [`evolution`]: atomic model deltas and the McPal migration coordinator,
//! - [`explorer`]: explicit-state verification of safety, termination and
//!   progress across model versions.

pub mod bundled;
pub mod diag;
pub mod dot;
pub mod dsl;
pub mod engine;
pub mod evolution;
pub mod explorer;
pub mod model;
pub mod validate;

#[cfg(feature = "testing")]
pub mod testing;

pub use diag::{Diagnostic, DiagnosticKind, Span};
pub use engine::{Engine, StepLabel, Successor, Trace};
pub use evolution::{ChangeSet, McPalSkeleton};
pub use model::{
    Component, Configuration, ConsistencyRule, Partition, Phase, RoleId, Std, StdModel, Transfer,
    Transition, Trap, Value, TRIVIAL_TRAP,
};
