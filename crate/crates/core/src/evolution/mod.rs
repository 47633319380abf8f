//! Runtime model evolution: change sets and the McPal coordinator.

mod changeset;
mod mcpal;

use thiserror::Error;

use crate::diag::Diagnostic;

pub use changeset::{apply_changeset, validate_changeset, ChangeSet, InitialRef};
pub use mcpal::{
    is_hibernating, load_migration, migration_complete, weave_mcpal, McPalSkeleton, END_RULE, HIBERNATE_RULE,
    KICK_OFF_RULE, START_RULE,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvolutionError {
    #[error("change set rejected: {}", summarize(.0))]
    Rejected(Vec<Diagnostic>),
    #[error("name collision: {0} already exists in the model")]
    NameCollision(String),
    #[error("McPal component {0} is not present in the model")]
    NotWoven(String),
    #[error("McPal is not hibernating")]
    NotHibernating,
    #[error("migration fragment is invalid: {}", summarize(.0))]
    InvalidFragment(Vec<Diagnostic>),
}

fn summarize(diags: &[Diagnostic]) -> String {
    match diags {
        [] => "no diagnostics".to_string(),
        [one] => one.to_string(),
        [first, rest @ ..] => format!("{first} (and {} more)", rest.len()),
    }
}
