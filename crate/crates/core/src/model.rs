//! Domain types: STDs, partitions, phases, traps, rules and configurations.
//!
//! All types are plain values. Sets and maps are ordered so that iteration
//! order, serialization and diagnostics are deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::evolution::ChangeSet;

/// Reserved name of the trap consisting of all states of a phase.
pub const TRIVIAL_TRAP: &str = "triv";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub source: String,
    pub action: String,
    pub target: String,
}

impl Transition {
    pub fn new(source: impl Into<String>, action: impl Into<String>, target: impl Into<String>) -> Self {
        Transition {
            source: source.into(),
            action: action.into(),
            target: target.into(),
        }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -{}-> {}", self.source, self.action, self.target)
    }
}

/// A component's detailed behaviour.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Std {
    pub name: String,
    pub states: BTreeSet<String>,
    pub transitions: BTreeSet<Transition>,
    pub initial: String,
}

impl Std {
    pub fn new(name: impl Into<String>, initial: impl Into<String>) -> Self {
        Std {
            name: name.into(),
            states: BTreeSet::new(),
            transitions: BTreeSet::new(),
            initial: initial.into(),
        }
    }

    /// The action labels in use. Actions are not declared separately.
    pub fn actions(&self) -> BTreeSet<&str> {
        self.transitions.iter().map(|t| t.action.as_str()).collect()
    }

    pub fn outgoing<'a>(&'a self, state: &'a str) -> impl Iterator<Item = &'a Transition> + 'a {
        self.transitions.iter().filter(move |t| t.source == state)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Trap {
    pub name: String,
    pub states: BTreeSet<String>,
}

impl Trap {
    pub fn new<I, S>(name: impl Into<String>, states: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Trap {
            name: name.into(),
            states: states.into_iter().map(Into::into).collect(),
        }
    }
}

/// A sub-STD of a component. Declared traps exclude the implicit `triv`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Phase {
    pub name: String,
    pub states: BTreeSet<String>,
    pub transitions: BTreeSet<Transition>,
    pub traps: BTreeMap<String, Trap>,
}

impl Phase {
    pub fn new(name: impl Into<String>) -> Self {
        Phase {
            name: name.into(),
            states: BTreeSet::new(),
            transitions: BTreeSet::new(),
            traps: BTreeMap::new(),
        }
    }

    pub fn trivial_trap(&self) -> Trap {
        Trap {
            name: TRIVIAL_TRAP.to_string(),
            states: self.states.clone(),
        }
    }

    /// States of a trap by name; `triv` resolves to the whole phase.
    pub fn trap_states(&self, name: &str) -> Option<&BTreeSet<String>> {
        if name == TRIVIAL_TRAP {
            Some(&self.states)
        } else {
            self.traps.get(name).map(|t| &t.states)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    pub name: String,
    pub initial: String,
    pub phases: BTreeMap<String, Phase>,
}

impl Partition {
    pub fn new(name: impl Into<String>, initial: impl Into<String>) -> Self {
        Partition {
            name: name.into(),
            initial: initial.into(),
            phases: BTreeMap::new(),
        }
    }
}

/// An STD together with the partitions defined over it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Component {
    pub std: Std,
    pub partitions: BTreeMap<String, Partition>,
}

impl Component {
    pub fn new(std: Std) -> Self {
        Component {
            std,
            partitions: BTreeMap::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.std.name
    }
}

/// One role transfer `Z(r): from -trap-> to` of a consistency rule.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Transfer {
    pub component: String,
    pub partition: String,
    pub from: String,
    pub trap: String,
    pub to: String,
}

impl Transfer {
    pub fn new(
        component: impl Into<String>,
        partition: impl Into<String>,
        from: impl Into<String>,
        trap: impl Into<String>,
        to: impl Into<String>,
    ) -> Self {
        Transfer {
            component: component.into(),
            partition: partition.into(),
            from: from.into(),
            trap: trap.into(),
            to: to.into(),
        }
    }

    pub fn role(&self) -> RoleId {
        RoleId::new(&self.component, &self.partition)
    }
}

impl fmt::Display for Transfer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}({}): {} -{}-> {}",
            self.component, self.partition, self.from, self.trap, self.to
        )
    }
}

/// `manager: step * transfers [with variable]`.
///
/// The change clause names a model variable; its fragment is looked up when
/// the rule fires, so reassigning the variable rebinds the clause.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConsistencyRule {
    pub name: String,
    pub manager: String,
    pub step: Transition,
    pub transfers: Vec<Transfer>,
    pub change: Option<String>,
}

/// Contents of a model variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Fragment(Box<ChangeSet>),
    Int(i64),
}

impl Value {
    pub fn as_fragment(&self) -> Option<&ChangeSet> {
        match self {
            Value::Fragment(cs) => Some(cs),
            Value::Int(_) => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StdModel {
    pub components: BTreeMap<String, Component>,
    pub rules: BTreeMap<String, ConsistencyRule>,
    pub variables: BTreeMap<String, Value>,
    pub version: u64,
}

impl StdModel {
    pub fn component(&self, name: &str) -> Option<&Component> {
        self.components.get(name)
    }

    pub fn partition(&self, component: &str, partition: &str) -> Option<&Partition> {
        self.components.get(component)?.partitions.get(partition)
    }

    pub fn phase(&self, component: &str, partition: &str, phase: &str) -> Option<&Phase> {
        self.partition(component, partition)?.phases.get(phase)
    }

    pub fn roles(&self) -> impl Iterator<Item = RoleId> + '_ {
        self.components.values().flat_map(|c| {
            c.partitions
                .keys()
                .map(move |p| RoleId::new(c.name(), p.as_str()))
        })
    }

    /// Every component in its initial state, every role in its initial phase.
    pub fn initial_configuration(&self) -> Configuration {
        let mut config = Configuration {
            model_version: self.version,
            ..Configuration::default()
        };
        for comp in self.components.values() {
            config
                .detailed
                .insert(comp.name().to_string(), comp.std.initial.clone());
            for part in comp.partitions.values() {
                config
                    .phases
                    .insert(RoleId::new(comp.name(), &part.name), part.initial.clone());
            }
        }
        config
    }

    /// `(manager, step)` pairs that may only fire through a rule.
    pub fn claimed_steps(&self) -> BTreeSet<(&str, &Transition)> {
        self.rules
            .values()
            .map(|r| (r.manager.as_str(), &r.step))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RoleId {
    pub component: String,
    pub partition: String,
}

impl RoleId {
    pub fn new(component: impl Into<String>, partition: impl Into<String>) -> Self {
        RoleId {
            component: component.into(),
            partition: partition.into(),
        }
    }
}

impl fmt::Display for RoleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.component, self.partition)
    }
}

/// The live global state.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub detailed: BTreeMap<String, String>,
    pub phases: BTreeMap<RoleId, String>,
    pub model_version: u64,
}

impl Configuration {
    pub fn state_of(&self, component: &str) -> Option<&str> {
        self.detailed.get(component).map(String::as_str)
    }

    pub fn phase_of(&self, component: &str, partition: &str) -> Option<&str> {
        self.phases
            .get(&RoleId::new(component, partition))
            .map(String::as_str)
    }

    /// Canonical byte form: sorted keys, unit separators between fields.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64);
        out.extend_from_slice(b"v");
        out.extend_from_slice(self.model_version.to_string().as_bytes());
        for (comp, state) in &self.detailed {
            out.push(0x1e);
            out.extend_from_slice(comp.as_bytes());
            out.push(0x1f);
            out.extend_from_slice(state.as_bytes());
        }
        out.push(0x1d);
        for (role, phase) in &self.phases {
            out.push(0x1e);
            out.extend_from_slice(role.component.as_bytes());
            out.push(b'.');
            out.extend_from_slice(role.partition.as_bytes());
            out.push(0x1f);
            out.extend_from_slice(phase.as_bytes());
        }
        out
    }

    /// Stable 64-bit FNV-1a fingerprint of [`Self::canonical_bytes`].
    pub fn digest(&self) -> u64 {
        let mut h = FnvHasher::default();
        h.write(&self.canonical_bytes());
        h.finish()
    }
}

pub fn digest_hex(digest: u64) -> String {
    format!("{digest:016x}")
}
