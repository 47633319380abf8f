//! Atomic model deltas.
//!
//! A change set is applied in one step: all additions first, then all
//! removals, then the version stamp increments. The delta is accepted only if
//! the resulting model validates and the live configuration stays consistent
//! with it.

use std::collections::{BTreeMap, BTreeSet};

use crate::diag::{sort_diagnostics, Diagnostic, DiagnosticKind as K};
use crate::model::{
    Component, Configuration, ConsistencyRule, Partition, Phase, RoleId, StdModel, Transition,
    Trap, Value,
};
use crate::validate::{configuration_diagnostics, validate_model};

use super::EvolutionError;

/// Re-designation of an initial state (`partition == None`) or initial phase.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InitialRef {
    pub component: String,
    pub partition: Option<String>,
    pub name: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChangeSet {
    pub add_components: BTreeMap<String, Component>,
    /// `(component, state)`
    pub add_states: BTreeSet<(String, String)>,
    pub add_transitions: BTreeSet<(String, Transition)>,
    pub add_partitions: BTreeSet<(String, Partition)>,
    /// `(component, partition, phase)`
    pub add_phases: BTreeSet<(String, String, Phase)>,
    /// `(component, partition, phase, trap)`
    pub add_traps: BTreeSet<(String, String, String, Trap)>,
    pub add_rules: BTreeMap<String, ConsistencyRule>,
    pub set_variables: BTreeMap<String, Value>,
    pub set_initials: BTreeSet<InitialRef>,
    pub remove_rules: BTreeSet<String>,
    pub remove_traps: BTreeSet<(String, String, String, String)>,
    pub remove_phases: BTreeSet<(String, String, String)>,
    pub remove_partitions: BTreeSet<(String, String)>,
    pub remove_transitions: BTreeSet<(String, Transition)>,
    pub remove_states: BTreeSet<(String, String)>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self == &ChangeSet::default()
    }
}

/// Applies `cs` without the acceptance check, reporting every problem found
/// along the way together with the validators' verdict on the result.
///
/// Detailed states are read only by the configuration validator; the delta
/// itself is gated by role phases and structure.
fn stage(model: &StdModel, config: &Configuration, cs: &ChangeSet) -> (StdModel, Configuration, Vec<Diagnostic>) {
    let mut m = model.clone();
    let mut c = config.clone();
    let mut diags = Vec::new();
    if model.version != config.model_version {
        diags.push(Diagnostic::new(
            K::VersionMismatch,
            "configuration",
            config.model_version.to_string(),
            format!("model is at version {}", model.version),
        ));
    }
    let dup = |owner: String, element: &str| {
        Diagnostic::new(K::DuplicateName, owner, element, "added element already exists")
    };
    let missing = |owner: String, element: &str| {
        Diagnostic::new(K::UnknownElement, owner, element, "element to change does not exist")
    };

    for (name, comp) in &cs.add_components {
        if m.components.contains_key(name) {
            diags.push(dup(name.clone(), ""));
            continue;
        }
        c.detailed.insert(name.clone(), comp.std.initial.clone());
        for part in comp.partitions.values() {
            c.phases.insert(RoleId::new(name, &part.name), part.initial.clone());
        }
        m.components.insert(name.clone(), comp.clone());
    }
    for (comp, state) in &cs.add_states {
        match m.components.get_mut(comp) {
            None => diags.push(missing(comp.clone(), "")),
            Some(k) => {
                if !k.std.states.insert(state.clone()) {
                    diags.push(dup(comp.clone(), state));
                }
            }
        }
    }
    for (comp, t) in &cs.add_transitions {
        match m.components.get_mut(comp) {
            None => diags.push(missing(comp.clone(), "")),
            Some(k) => {
                if !k.std.transitions.insert(t.clone()) {
                    diags.push(dup(comp.clone(), &t.to_string()));
                }
            }
        }
    }
    for (comp, part) in &cs.add_partitions {
        match m.components.get_mut(comp) {
            None => diags.push(missing(comp.clone(), "")),
            Some(k) if k.partitions.contains_key(&part.name) => {
                diags.push(dup(comp.clone(), &part.name))
            }
            Some(k) => {
                k.partitions.insert(part.name.clone(), part.clone());
                c.phases.insert(RoleId::new(comp, &part.name), part.initial.clone());
            }
        }
    }
    for (comp, part, phase) in &cs.add_phases {
        let owner = format!("{comp}.{part}");
        match m.components.get_mut(comp).and_then(|k| k.partitions.get_mut(part)) {
            None => diags.push(missing(owner, "")),
            Some(p) if p.phases.contains_key(&phase.name) => diags.push(dup(owner, &phase.name)),
            Some(p) => {
                p.phases.insert(phase.name.clone(), phase.clone());
            }
        }
    }
    for (comp, part, phase, trap) in &cs.add_traps {
        let owner = format!("{comp}.{part}.{phase}");
        match m
            .components
            .get_mut(comp)
            .and_then(|k| k.partitions.get_mut(part))
            .and_then(|p| p.phases.get_mut(phase))
        {
            None => diags.push(missing(owner, "")),
            Some(ph) if ph.traps.contains_key(&trap.name) => diags.push(dup(owner, &trap.name)),
            Some(ph) => {
                ph.traps.insert(trap.name.clone(), trap.clone());
            }
        }
    }
    for (name, value) in &cs.set_variables {
        m.variables.insert(name.clone(), value.clone());
    }
    for (name, rule) in &cs.add_rules {
        if m.rules.contains_key(name) {
            diags.push(dup(format!("rule {name}"), ""));
        } else {
            m.rules.insert(name.clone(), rule.clone());
        }
    }
    for init in &cs.set_initials {
        let Some(k) = m.components.get_mut(&init.component) else {
            diags.push(missing(init.component.clone(), ""));
            continue;
        };
        match &init.partition {
            None => k.std.initial = init.name.clone(),
            Some(p) => match k.partitions.get_mut(p) {
                None => diags.push(missing(format!("{}.{p}", init.component), "")),
                Some(part) => part.initial = init.name.clone(),
            },
        }
    }

    for name in &cs.remove_rules {
        if m.rules.remove(name).is_none() {
            diags.push(missing(format!("rule {name}"), ""));
        }
    }
    for (comp, part, phase, trap) in &cs.remove_traps {
        let owner = format!("{comp}.{part}.{phase}");
        let removed = m
            .components
            .get_mut(comp)
            .and_then(|k| k.partitions.get_mut(part))
            .and_then(|p| p.phases.get_mut(phase))
            .and_then(|ph| ph.traps.remove(trap));
        if removed.is_none() {
            diags.push(missing(owner, trap));
        }
    }
    for (comp, part, phase) in &cs.remove_phases {
        let owner = format!("{comp}.{part}");
        let role = RoleId::new(comp, part);
        if c.phases.get(&role) == Some(phase) {
            diags.push(Diagnostic::new(
                K::LivePhaseRemoval,
                &owner,
                phase,
                "role currently occupies the phase",
            ));
        }
        let removed = m
            .components
            .get_mut(comp)
            .and_then(|k| k.partitions.get_mut(part))
            .and_then(|p| p.phases.remove(phase));
        if removed.is_none() {
            diags.push(missing(owner, phase));
        }
    }
    for (comp, part) in &cs.remove_partitions {
        let removed = m
            .components
            .get_mut(comp)
            .and_then(|k| k.partitions.remove(part));
        if removed.is_none() {
            diags.push(missing(comp.clone(), part));
        }
        c.phases.remove(&RoleId::new(comp, part));
    }
    for (comp, t) in &cs.remove_transitions {
        let removed = m
            .components
            .get_mut(comp)
            .map(|k| k.std.transitions.remove(t))
            .unwrap_or(false);
        if !removed {
            diags.push(missing(comp.clone(), &t.to_string()));
        }
    }
    for (comp, state) in &cs.remove_states {
        let removed = m
            .components
            .get_mut(comp)
            .map(|k| k.std.states.remove(state))
            .unwrap_or(false);
        if !removed {
            diags.push(missing(comp.clone(), state));
        }
    }

    m.version = model.version + 1;
    c.model_version = m.version;
    diags.extend(validate_model(&m));
    diags.extend(configuration_diagnostics(&m, &c));
    sort_diagnostics(&mut diags);
    (m, c, diags)
}

/// Empty iff [`apply_changeset`] would succeed.
pub fn validate_changeset(model: &StdModel, config: &Configuration, cs: &ChangeSet) -> Vec<Diagnostic> {
    stage(model, config, cs).2
}

pub fn apply_changeset(
    model: &StdModel,
    config: &Configuration,
    cs: &ChangeSet,
) -> Result<(StdModel, Configuration), EvolutionError> {
    let (m, c, diags) = stage(model, config, cs);
    if diags.is_empty() {
        Ok((m, c))
    } else {
        Err(EvolutionError::Rejected(diags))
    }
}
