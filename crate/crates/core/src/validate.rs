//! Static well-formedness of models and consistency of configurations.
//!
//! Validators never fail; they return diagnostics, sorted by owner then
//! element. An empty list means the checked invariants hold.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::diag::{sort_diagnostics, Diagnostic, DiagnosticKind as K};
use crate::model::{
    Component, Configuration, ConsistencyRule, Partition, Phase, RoleId, Std, StdModel, Trap,
    Value, TRIVIAL_TRAP,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("configuration is for model version {config}, model is at version {model}")]
    VersionMismatch { model: u64, config: u64 },
}

pub fn validate_std(std: &Std) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if !std.states.contains(&std.initial) {
        out.push(Diagnostic::new(
            K::InitialNotAState,
            &std.name,
            &std.initial,
            "initial state is not a declared state",
        ));
    }
    for t in &std.transitions {
        if !std.states.contains(&t.source) {
            out.push(Diagnostic::new(
                K::UnknownSource,
                &std.name,
                &t.source,
                format!("transition {t} starts outside the STD"),
            ));
        }
        if !std.states.contains(&t.target) {
            out.push(Diagnostic::new(
                K::UnknownTarget,
                &std.name,
                &t.target,
                format!("transition {t} ends outside the STD"),
            ));
        }
    }
    sort_diagnostics(&mut out);
    out
}

/// Closure check: no transition of `phase` leaves `trap`.
///
/// Owner of the returned diagnostics is `Phase.Trap`.
pub fn validate_trap(phase: &Phase, trap: &Trap) -> Vec<Diagnostic> {
    let owner = format!("{}.{}", phase.name, trap.name);
    let mut out: Vec<Diagnostic> = phase
        .transitions
        .iter()
        .filter(|t| trap.states.contains(&t.source) && !trap.states.contains(&t.target))
        .map(|t| {
            Diagnostic::new(
                K::TrapExit,
                &owner,
                format!("({},{},{})", t.source, t.action, t.target),
                "transition leaves the trap",
            )
        })
        .collect();
    sort_diagnostics(&mut out);
    out
}

/// A trap connects `source` to `target` when every trap state is a state of
/// `target`, so the detailed state stays valid across the transfer.
pub fn is_connecting(trap: &Trap, _source: &Phase, target: &Phase) -> bool {
    trap.states.is_subset(&target.states)
}

fn prefixed(prefix: &str, mut diags: Vec<Diagnostic>) -> Vec<Diagnostic> {
    for d in &mut diags {
        d.owner = format!("{prefix}.{}", d.owner);
    }
    diags
}

fn validate_phase(std: &Std, part_owner: &str, phase: &Phase, out: &mut Vec<Diagnostic>) {
    let owner = format!("{part_owner}.{}", phase.name);
    if phase.states.is_empty() {
        out.push(Diagnostic::new(K::EmptyPhase, &owner, "", "phase has no states"));
    }
    for s in &phase.states {
        if !std.states.contains(s) {
            out.push(Diagnostic::new(
                K::UnknownState,
                &owner,
                s,
                "phase state is not a state of the STD",
            ));
        }
    }
    for t in &phase.transitions {
        if !std.transitions.contains(t) {
            out.push(Diagnostic::new(
                K::UnknownTransition,
                &owner,
                t.to_string(),
                "phase transition is not a transition of the STD",
            ));
        }
        if !phase.states.contains(&t.source) || !phase.states.contains(&t.target) {
            out.push(Diagnostic::new(
                K::TransitionOutsidePhase,
                &owner,
                t.to_string(),
                "transition endpoint outside the phase",
            ));
        }
    }
    for trap in phase.traps.values() {
        let trap_owner = format!("{owner}.{}", trap.name);
        if trap.name == TRIVIAL_TRAP {
            out.push(Diagnostic::new(
                K::ReservedTrapName,
                &trap_owner,
                "",
                "`triv` is implicit and cannot be declared",
            ));
        }
        if trap.states.is_empty() {
            out.push(Diagnostic::new(K::EmptyTrap, &trap_owner, "", "trap has no states"));
        }
        let outside: Vec<&String> = trap.states.difference(&phase.states).collect();
        for s in &outside {
            out.push(Diagnostic::new(
                K::TrapStateOutsidePhase,
                &trap_owner,
                s.as_str(),
                "trap state is not a state of the phase",
            ));
        }
        out.extend(prefixed(part_owner, validate_trap(phase, trap)));
    }
}

fn validate_partition(std: &Std, part: &Partition, out: &mut Vec<Diagnostic>) {
    let owner = format!("{}.{}", std.name, part.name);
    if part.phases.is_empty() {
        out.push(Diagnostic::new(K::EmptyPartition, &owner, "", "partition has no phases"));
    }
    match part.phases.get(&part.initial) {
        None => out.push(Diagnostic::new(
            K::UnresolvedPhase,
            &owner,
            &part.initial,
            "initial phase is not a phase of the partition",
        )),
        Some(ph) if !ph.states.contains(&std.initial) => out.push(Diagnostic::new(
            K::InitialOutsidePhase,
            &owner,
            &part.initial,
            format!("initial state {} is not in the initial phase", std.initial),
        )),
        Some(_) => {}
    }
    let covered: BTreeSet<&String> = part.phases.values().flat_map(|p| p.states.iter()).collect();
    for s in &std.states {
        if !covered.contains(s) {
            out.push(Diagnostic::new(
                K::UncoveredState,
                &owner,
                s,
                "state lies in no phase of the partition",
            ));
        }
    }
    for phase in part.phases.values() {
        validate_phase(std, &owner, phase, out);
    }
}

fn validate_component(comp: &Component, out: &mut Vec<Diagnostic>) {
    out.extend(validate_std(&comp.std));
    for part in comp.partitions.values() {
        validate_partition(&comp.std, part, out);
    }
}

fn validate_rule(model: &StdModel, rule: &ConsistencyRule, out: &mut Vec<Diagnostic>) {
    let owner = format!("rule {}", rule.name);
    match model.component(&rule.manager) {
        None => out.push(Diagnostic::new(
            K::UnresolvedComponent,
            &owner,
            &rule.manager,
            "manager is not a component",
        )),
        Some(c) if !c.std.transitions.contains(&rule.step) => out.push(Diagnostic::new(
            K::UnresolvedTransition,
            &owner,
            rule.step.to_string(),
            format!("manager step is not a transition of {}", rule.manager),
        )),
        Some(_) => {}
    }
    let mut seen = BTreeSet::new();
    for tr in &rule.transfers {
        let role = tr.role();
        if !seen.insert(role.clone()) {
            out.push(Diagnostic::new(
                K::DuplicateTransfer,
                &owner,
                role.to_string(),
                "role transferred twice by one rule",
            ));
        }
        let Some(comp) = model.component(&tr.component) else {
            out.push(Diagnostic::new(
                K::UnresolvedComponent,
                &owner,
                &tr.component,
                "transferred component does not exist",
            ));
            continue;
        };
        let Some(part) = comp.partitions.get(&tr.partition) else {
            out.push(Diagnostic::new(
                K::UnresolvedPartition,
                &owner,
                role.to_string(),
                "partition does not exist",
            ));
            continue;
        };
        let from = part.phases.get(&tr.from);
        let to = part.phases.get(&tr.to);
        for (name, ph) in [(&tr.from, from), (&tr.to, to)] {
            if ph.is_none() {
                out.push(Diagnostic::new(
                    K::UnresolvedPhase,
                    &owner,
                    format!("{role}.{name}"),
                    "phase does not exist",
                ));
            }
        }
        let (Some(from), Some(to)) = (from, to) else {
            continue;
        };
        let trap = if tr.trap == TRIVIAL_TRAP {
            from.trivial_trap()
        } else {
            match from.traps.get(&tr.trap) {
                Some(t) => t.clone(),
                None => {
                    out.push(Diagnostic::new(
                        K::UnresolvedTrap,
                        &owner,
                        format!("{role}.{}.{}", tr.from, tr.trap),
                        "trap is not a trap of the source phase",
                    ));
                    continue;
                }
            }
        };
        if !is_connecting(&trap, from, to) {
            out.push(Diagnostic::new(
                K::NonConnectingTrap,
                &owner,
                tr.to_string(),
                format!("trap {} is not contained in phase {}", tr.trap, tr.to),
            ));
        }
    }
    if let Some(var) = &rule.change {
        match model.variables.get(var) {
            None => out.push(Diagnostic::new(
                K::UnresolvedVariable,
                &owner,
                var,
                "change clause names no variable",
            )),
            Some(Value::Int(_)) => out.push(Diagnostic::new(
                K::VariableNotFragment,
                &owner,
                var,
                "change clause variable holds an integer",
            )),
            Some(Value::Fragment(_)) => {}
        }
    }
}

/// Conjunction of every STD, partition, phase and trap check plus rule
/// resolution and connecting traps.
pub fn validate_model(model: &StdModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for comp in model.components.values() {
        validate_component(comp, &mut out);
    }
    for rule in model.rules.values() {
        validate_rule(model, rule, &mut out);
    }
    sort_diagnostics(&mut out);
    out
}

/// Consistency of a live configuration: every detailed state lies in the
/// current phase of every partition of its component.
pub fn validate_configuration(
    model: &StdModel,
    config: &Configuration,
) -> Result<Vec<Diagnostic>, ValidationError> {
    if model.version != config.model_version {
        return Err(ValidationError::VersionMismatch {
            model: model.version,
            config: config.model_version,
        });
    }
    Ok(configuration_diagnostics(model, config))
}

pub(crate) fn configuration_diagnostics(model: &StdModel, config: &Configuration) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for comp in model.components.values() {
        let name = comp.name();
        let Some(state) = config.detailed.get(name) else {
            out.push(Diagnostic::new(K::MissingState, name, "", "no detailed state"));
            continue;
        };
        if !comp.std.states.contains(state) {
            out.push(Diagnostic::new(
                K::UnknownState,
                name,
                state,
                "detailed state is not a state of the STD",
            ));
        }
        for part in comp.partitions.values() {
            let role = RoleId::new(name, &part.name);
            let Some(current) = config.phases.get(&role) else {
                out.push(Diagnostic::new(
                    K::MissingRolePhase,
                    role.to_string(),
                    "",
                    "role has no current phase",
                ));
                continue;
            };
            match part.phases.get(current) {
                None => out.push(Diagnostic::new(
                    K::UnresolvedPhase,
                    role.to_string(),
                    current,
                    "current phase does not exist",
                )),
                Some(ph) if !ph.states.contains(state) => out.push(Diagnostic::new(
                    K::PhaseViolation,
                    role.to_string(),
                    current,
                    format!("{name} is in {state}, outside phase {current}"),
                )),
                Some(_) => {}
            }
        }
    }
    for name in config.detailed.keys() {
        if !model.components.contains_key(name) {
            out.push(Diagnostic::new(
                K::UnresolvedComponent,
                name,
                "",
                "configuration names an unknown component",
            ));
        }
    }
    for role in config.phases.keys() {
        if model.partition(&role.component, &role.partition).is_none() {
            out.push(Diagnostic::new(
                K::UnresolvedPartition,
                role.to_string(),
                "",
                "configuration names an unknown partition",
            ));
        }
    }
    sort_diagnostics(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Transfer, Transition};

    fn std_ab() -> Std {
        let mut s = Std::new("C", "A");
        s.states.extend(["A".to_string(), "B".to_string()]);
        s.transitions.insert(Transition::new("A", "go", "B"));
        s
    }

    fn phase(name: &str, states: &[&str], trans: &[(&str, &str, &str)]) -> Phase {
        let mut p = Phase::new(name);
        p.states = states.iter().map(|s| s.to_string()).collect();
        p.transitions = trans.iter().map(|(a, l, b)| Transition::new(*a, *l, *b)).collect();
        p
    }

    #[test]
    fn minimal_std_is_well_formed() {
        assert!(validate_std(&std_ab()).is_empty());
    }

    #[test]
    fn dangling_target_is_reported() {
        let mut s = std_ab();
        s.states.remove("B");
        let d = validate_std(&s);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, K::UnknownTarget);
        assert_eq!(d[0].element, "B");
    }

    #[test]
    fn initial_must_be_a_state() {
        let mut s = std_ab();
        s.transitions.clear();
        s.initial = "C".into();
        let d = validate_std(&s);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, K::InitialNotAState);
        assert_eq!(d[0].element, "C");
    }

    #[test]
    fn trap_closure() {
        let p = phase("P", &["A", "B"], &[("A", "go", "B")]);
        assert!(validate_trap(&p, &Trap::new("t", ["B"])).is_empty());
        let d = validate_trap(&p, &Trap::new("t", ["A"]));
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, K::TrapExit);
        assert_eq!(d[0].element, "(A,go,B)");
        assert!(validate_trap(&p, &p.trivial_trap()).is_empty());
    }

    #[test]
    fn connecting_traps() {
        let src = phase("S", &["A", "B"], &[("A", "go", "B")]);
        let tgt = phase("T", &["B", "C"], &[]);
        assert!(is_connecting(&Trap::new("t", ["B"]), &src, &tgt));
        assert!(!is_connecting(&Trap::new("t", ["A", "B"]), &src, &tgt));
        assert!(is_connecting(&Trap::new("t", ["B"]), &src, &src));
    }

    fn small_model() -> StdModel {
        let mut comp = Component::new(std_ab());
        let mut part = Partition::new("R", "P");
        let mut p = phase("P", &["A", "B"], &[("A", "go", "B")]);
        p.traps.insert("done".into(), Trap::new("done", ["B"]));
        part.phases.insert("P".into(), p);
        part.phases.insert("Q".into(), phase("Q", &["B"], &[]));
        comp.partitions.insert("R".into(), part);
        let mut m = StdModel::default();
        m.components.insert("C".into(), comp);
        m
    }

    #[test]
    fn rule_with_unknown_phase_is_unresolved() {
        let mut m = small_model();
        assert!(validate_model(&m).is_empty());
        m.rules.insert(
            "r".into(),
            ConsistencyRule {
                name: "r".into(),
                manager: "C".into(),
                step: Transition::new("A", "go", "B"),
                transfers: vec![Transfer::new("C", "R", "P", "done", "Nope")],
                change: None,
            },
        );
        let d = validate_model(&m);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, K::UnresolvedPhase);
    }

    #[test]
    fn uncovered_state_is_reported() {
        let mut m = small_model();
        let part = m.components.get_mut("C").unwrap().partitions.get_mut("R").unwrap();
        part.phases.remove("Q");
        part.phases.get_mut("P").unwrap().states.remove("B");
        part.phases.get_mut("P").unwrap().transitions.clear();
        part.phases.get_mut("P").unwrap().traps.clear();
        let d = validate_model(&m);
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].kind, K::UncoveredState);
    }

    #[test]
    fn non_connecting_transfer_is_reported() {
        let mut m = small_model();
        m.rules.insert(
            "r".into(),
            ConsistencyRule {
                name: "r".into(),
                manager: "C".into(),
                step: Transition::new("A", "go", "B"),
                transfers: vec![Transfer::new("C", "R", "P", "triv", "Q")],
                change: None,
            },
        );
        let d = validate_model(&m);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, K::NonConnectingTrap);
    }

    #[test]
    fn configuration_checks() {
        let m = small_model();
        let mut c = m.initial_configuration();
        assert!(validate_configuration(&m, &c).unwrap().is_empty());
        c.phases.insert(RoleId::new("C", "R"), "Q".into());
        let d = validate_configuration(&m, &c).unwrap();
        assert_eq!(d[0].kind, K::PhaseViolation);
        c.phases.insert(RoleId::new("C", "R"), "Gone".into());
        let d = validate_configuration(&m, &c).unwrap();
        assert_eq!(d[0].kind, K::UnresolvedPhase);
        c.model_version = 3;
        assert!(matches!(
            validate_configuration(&m, &c),
            Err(ValidationError::VersionMismatch { .. })
        ));
    }
}
