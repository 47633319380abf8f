//! Diagnostics shared by the validators, the change-set checker and the DSL.

use std::fmt;

use serde::Serialize;

/// A position range in a source document. Lines and columns are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct Span {
    pub line: usize,
    pub column: usize,
    /// Byte offsets into the source text.
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    // STD
    InitialNotAState,
    UnknownSource,
    UnknownTarget,
    // partitions, phases, traps
    EmptyPartition,
    UncoveredState,
    InitialOutsidePhase,
    EmptyPhase,
    UnknownState,
    UnknownTransition,
    TransitionOutsidePhase,
    EmptyTrap,
    ReservedTrapName,
    TrapStateOutsidePhase,
    TrapExit,
    // rules and variables
    UnresolvedComponent,
    UnresolvedPartition,
    UnresolvedPhase,
    UnresolvedTrap,
    UnresolvedTransition,
    UnresolvedVariable,
    VariableNotFragment,
    NonConnectingTrap,
    DuplicateTransfer,
    // configurations
    VersionMismatch,
    MissingState,
    MissingRolePhase,
    PhaseViolation,
    // change sets
    DuplicateName,
    UnknownElement,
    LivePhaseRemoval,
    // parsing
    Syntax,
    UnboundIndex,
}

impl DiagnosticKind {
    pub fn as_str(self) -> &'static str {
        use DiagnosticKind::*;
        match self {
            InitialNotAState => "initial-not-a-state",
            UnknownSource => "unknown-source",
            UnknownTarget => "unknown-target",
            EmptyPartition => "empty-partition",
            UncoveredState => "uncovered-state",
            InitialOutsidePhase => "initial-outside-phase",
            EmptyPhase => "empty-phase",
            UnknownState => "unknown-state",
            UnknownTransition => "unknown-transition",
            TransitionOutsidePhase => "transition-outside-phase",
            EmptyTrap => "empty-trap",
            ReservedTrapName => "reserved-trap-name",
            TrapStateOutsidePhase => "trap-state-outside-phase",
            TrapExit => "exit",
            UnresolvedComponent => "unresolved-component",
            UnresolvedPartition => "unresolved-partition",
            UnresolvedPhase => "unresolved-phase",
            UnresolvedTrap => "unresolved-trap",
            UnresolvedTransition => "unresolved-transition",
            UnresolvedVariable => "unresolved-variable",
            VariableNotFragment => "variable-not-fragment",
            NonConnectingTrap => "non-connecting-trap",
            DuplicateTransfer => "duplicate-transfer",
            VersionMismatch => "version-mismatch",
            MissingState => "missing-state",
            MissingRolePhase => "missing-role-phase",
            PhaseViolation => "phase-violation",
            DuplicateName => "duplicate-name",
            UnknownElement => "unknown-element",
            LivePhaseRemoval => "live-phase-removal",
            Syntax => "syntax",
            UnboundIndex => "unbound-index",
        }
    }
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One violated invariant. `owner` is a dotted path (`Comp.Part.Phase.Trap`,
/// or `rule NAME`); `element` names the offending item inside it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Diagnostic {
    pub owner: String,
    pub element: String,
    pub kind: DiagnosticKind,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
}

impl Diagnostic {
    pub fn new(
        kind: DiagnosticKind,
        owner: impl Into<String>,
        element: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Diagnostic {
            owner: owner.into(),
            element: element.into(),
            kind,
            message: message.into(),
            span: None,
        }
    }

    pub fn with_span(mut self, span: Span) -> Self {
        self.span = Some(span);
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(span) = self.span {
            write!(f, "{span}: ")?;
        }
        write!(f, "{}: {}", self.kind, self.owner)?;
        if !self.element.is_empty() {
            write!(f, " [{}]", self.element)?;
        }
        if !self.message.is_empty() {
            write!(f, ": {}", self.message)?;
        }
        Ok(())
    }
}

/// Sorts by owner, then element, which is the order every validator reports in.
pub fn sort_diagnostics(diags: &mut Vec<Diagnostic>) {
    diags.sort();
    diags.dedup();
}
