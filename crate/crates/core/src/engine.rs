//! Interleaving step semantics.
//!
//! A configuration moves either by a detailed step of one component, taken
//! inside the current phase of each of its partitions, or by firing a
//! consistency rule: the manager's step, the listed role transfers and the
//! optional change clause happen as one atomic move.
//!
//! The functions here are pure. Models are shared through [`Arc`] so that the
//! successors of a configuration reuse the model unless a change clause
//! produced a new one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::Diagnostic;
use crate::evolution::{apply_changeset, EvolutionError};
use crate::model::{digest_hex, Configuration, ConsistencyRule, RoleId, StdModel, Transfer, Transition};
use crate::validate::{validate_configuration, ValidationError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("unknown component {0}")]
    UnknownComponent(String),
    #[error("unknown partition {0}")]
    UnknownPartition(RoleId),
    #[error("unknown rule {0}")]
    UnknownRule(String),
    #[error("step is not enabled: {0}")]
    NotEnabled(String),
    #[error("replay diverged at step {index}")]
    ReplayDivergence { index: usize },
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
}

/// How claimed manager steps are treated outside rule firing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClaimMode {
    /// A transition that is the manager step of some current rule fires only
    /// through that rule.
    #[default]
    Strict,
    /// Claimed transitions may also fire as plain detailed steps.
    Permissive,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Engine {
    pub claim_mode: ClaimMode,
}

/// Identifies one step well enough to replay it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum StepLabel {
    Detailed {
        component: String,
        transition: Transition,
    },
    Rule {
        rule: String,
        manager: String,
        step: Transition,
        transfers: Vec<Transfer>,
        changed: bool,
    },
}

impl StepLabel {
    /// The component whose detailed state moves.
    pub fn actor(&self) -> &str {
        match self {
            StepLabel::Detailed { component, .. } => component,
            StepLabel::Rule { manager, .. } => manager,
        }
    }
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepLabel::Detailed { component, transition } => write!(f, "{component}: {transition}"),
            StepLabel::Rule { rule, manager, step, transfers, changed } => {
                write!(f, "rule {rule} [{manager}: {step}")?;
                for t in transfers {
                    write!(f, "; {t}")?;
                }
                f.write_str("]")?;
                if *changed {
                    f.write_str(" +change")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Successor {
    pub label: StepLabel,
    pub model: Arc<StdModel>,
    pub config: Configuration,
}

/// Why a rule cannot fire in a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DisabledReason {
    #[error("manager {manager} is not a component of the model")]
    UnknownManager { manager: String },
    #[error("manager is in {state}, not at the step's source")]
    ManagerNotAtSource { state: String },
    #[error("manager step lies outside current phase {phase} of {partition}")]
    StepOutsidePhase { partition: String, phase: String },
    #[error("role {role} is in phase {phase}")]
    WrongSourcePhase { role: RoleId, phase: String },
    #[error("role {role} has not entered trap {trap}")]
    TrapNotEntered { role: RoleId, trap: String },
    #[error("resulting configuration is inconsistent: {}", first(.0))]
    Inconsistent(Vec<Diagnostic>),
    #[error("variable {0} does not hold a fragment")]
    MissingFragment(String),
    #[error("change clause rejected: {}", first(.0))]
    ChangeRejected(Vec<Diagnostic>),
}

fn first(diags: &[Diagnostic]) -> String {
    diags.first().map(ToString::to_string).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleStatus {
    pub rule: String,
    pub disabled: Option<DisabledReason>,
}

impl RuleStatus {
    pub fn is_enabled(&self) -> bool {
        self.disabled.is_none()
    }
}

/// Outcome of preparing a rule: the next configuration and, if the change
/// clause produced one, the next model.
struct Fired {
    model: Option<StdModel>,
    config: Configuration,
}

impl Engine {
    pub fn permissive() -> Self {
        Engine { claim_mode: ClaimMode::Permissive }
    }

    pub fn enabled_detailed(
        &self,
        model: &StdModel,
        config: &Configuration,
        component: &str,
    ) -> Result<Vec<Transition>, EngineError> {
        let comp = model
            .component(component)
            .ok_or_else(|| EngineError::UnknownComponent(component.to_string()))?;
        let Some(state) = config.state_of(component) else {
            return Ok(Vec::new());
        };
        let claimed = match self.claim_mode {
            ClaimMode::Strict => model.claimed_steps(),
            ClaimMode::Permissive => BTreeSet::new(),
        };
        let phases: Vec<_> = comp
            .partitions
            .values()
            .filter_map(|p| {
                let current = config.phase_of(component, &p.name)?;
                p.phases.get(current)
            })
            .collect();
        Ok(comp
            .std
            .outgoing(state)
            .filter(|t| phases.iter().all(|ph| ph.transitions.contains(*t)))
            .filter(|t| !claimed.contains(&(component, *t)))
            .cloned()
            .collect())
    }

    pub fn step_detailed(
        &self,
        model: &StdModel,
        config: &Configuration,
        component: &str,
        transition: &Transition,
    ) -> Result<Configuration, EngineError> {
        if !self.enabled_detailed(model, config, component)?.contains(transition) {
            return Err(EngineError::NotEnabled(format!("{component}: {transition}")));
        }
        let next = apply_detailed(config, component, transition);
        assert_consistent(model, &next);
        Ok(next)
    }

    pub fn rule_status(&self, model: &StdModel, config: &Configuration) -> Vec<RuleStatus> {
        model
            .rules
            .values()
            .map(|r| RuleStatus {
                rule: r.name.clone(),
                disabled: prepare_rule(model, config, r).err(),
            })
            .collect()
    }

    pub fn enabled_rules(&self, model: &StdModel, config: &Configuration) -> Vec<String> {
        self.rule_status(model, config)
            .into_iter()
            .filter(RuleStatus::is_enabled)
            .map(|s| s.rule)
            .collect()
    }

    pub fn fire_rule(
        &self,
        model: &StdModel,
        config: &Configuration,
        rule: &str,
    ) -> Result<(StdModel, Configuration), EngineError> {
        let r = model
            .rules
            .get(rule)
            .ok_or_else(|| EngineError::UnknownRule(rule.to_string()))?;
        let fired = prepare_rule(model, config, r)
            .map_err(|why| EngineError::NotEnabled(format!("rule {rule}: {why}")))?;
        let next_model = fired.model.unwrap_or_else(|| model.clone());
        assert_consistent(&next_model, &fired.config);
        Ok((next_model, fired.config))
    }

    /// Every enabled move: detailed steps ordered by component then
    /// transition, followed by rules ordered by name.
    pub fn successors(&self, model: &Arc<StdModel>, config: &Configuration) -> Vec<Successor> {
        let mut out = Vec::new();
        for name in model.components.keys() {
            let Ok(enabled) = self.enabled_detailed(model, config, name) else {
                continue;
            };
            for t in enabled {
                let next = apply_detailed(config, name, &t);
                debug_assert!(is_consistent(model, &next));
                out.push(Successor {
                    label: StepLabel::Detailed { component: name.clone(), transition: t },
                    model: Arc::clone(model),
                    config: next,
                });
            }
        }
        for r in model.rules.values() {
            let Ok(fired) = prepare_rule(model, config, r) else {
                continue;
            };
            let changed = fired.model.is_some();
            let next_model = match fired.model {
                Some(m) => Arc::new(m),
                None => Arc::clone(model),
            };
            debug_assert!(is_consistent(&next_model, &fired.config));
            out.push(Successor {
                label: rule_label(r, changed),
                model: next_model,
                config: fired.config,
            });
        }
        out
    }

    pub fn run(
        &self,
        model: &Arc<StdModel>,
        config: &Configuration,
        policy: Policy<'_>,
        max_steps: usize,
    ) -> Result<Run, EngineError> {
        validate_configuration(model, config)?;
        let mut current_model = Arc::clone(model);
        let mut current = config.clone();
        let mut steps = Vec::new();
        let mut rng = match &policy {
            Policy::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        let mut policy = policy;
        for index in 0..max_steps {
            if let Policy::Scripted(script) = &policy {
                if index >= script.len() {
                    break;
                }
            }
            let options = self.successors(&current_model, &current);
            let pick = match &mut policy {
                Policy::Seeded(_) => {
                    if options.is_empty() {
                        None
                    } else {
                        let rng = rng.as_mut().expect("seeded policy has an rng");
                        Some(rng.gen_range(0..options.len()))
                    }
                }
                Policy::Scripted(script) => {
                    let wanted = &script[index];
                    match options.iter().position(|s| &s.label == wanted) {
                        Some(i) => Some(i),
                        None => return Err(EngineError::ReplayDivergence { index }),
                    }
                }
                Policy::Interactive(chooser) => {
                    if options.is_empty() {
                        None
                    } else {
                        chooser.choose(index, &current, &options)
                    }
                }
            };
            let Some(i) = pick else { break };
            let Some(chosen) = options.into_iter().nth(i) else {
                return Err(EngineError::NotEnabled(format!("choice {i} out of range")));
            };
            current_model = chosen.model;
            current = chosen.config;
            steps.push(TraceStep {
                label: chosen.label,
                digest: current.digest(),
                config: current.clone(),
            });
        }
        Ok(Run {
            trace: Trace {
                initial: config.clone(),
                steps,
                final_version: current_model.version,
                loop_start: None,
            },
            model: current_model,
            config: current,
        })
    }

    /// Re-executes the trace's labels from its initial configuration and
    /// checks every resulting digest.
    pub fn replay(&self, model: &Arc<StdModel>, trace: &Trace) -> Result<Run, EngineError> {
        let labels: Vec<StepLabel> = trace.steps.iter().map(|s| s.label.clone()).collect();
        let mut run = self.run(model, &trace.initial, Policy::Scripted(&labels), labels.len())?;
        run.trace.loop_start = trace.loop_start;
        for (index, (want, got)) in trace.steps.iter().zip(&run.trace.steps).enumerate() {
            if want.digest != got.digest || want.config != got.config {
                return Err(EngineError::ReplayDivergence { index });
            }
        }
        if run.model.version != trace.final_version {
            return Err(EngineError::ReplayDivergence { index: trace.steps.len() });
        }
        Ok(run)
    }
}

/// Traps of the role's current phase that contain the component's current
/// state, `triv` included.
pub fn entered_traps(
    model: &StdModel,
    config: &Configuration,
    component: &str,
    partition: &str,
) -> Result<BTreeSet<String>, EngineError> {
    if model.component(component).is_none() {
        return Err(EngineError::UnknownComponent(component.to_string()));
    }
    let role = RoleId::new(component, partition);
    let part = model
        .partition(component, partition)
        .ok_or_else(|| EngineError::UnknownPartition(role.clone()))?;
    let mut out = BTreeSet::new();
    let (Some(current), Some(state)) = (config.phases.get(&role), config.state_of(component)) else {
        return Ok(out);
    };
    let Some(phase) = part.phases.get(current) else {
        return Ok(out);
    };
    if phase.states.contains(state) {
        out.insert(crate::model::TRIVIAL_TRAP.to_string());
    }
    for trap in phase.traps.values() {
        if trap.states.contains(state) {
            out.insert(trap.name.clone());
        }
    }
    Ok(out)
}

fn apply_detailed(config: &Configuration, component: &str, t: &Transition) -> Configuration {
    let mut next = config.clone();
    next.detailed.insert(component.to_string(), t.target.clone());
    next
}

fn is_consistent(model: &StdModel, config: &Configuration) -> bool {
    matches!(validate_configuration(model, config), Ok(d) if d.is_empty())
}

fn assert_consistent(model: &StdModel, config: &Configuration) {
    let verdict = validate_configuration(model, config);
    assert!(
        matches!(&verdict, Ok(d) if d.is_empty()),
        "step produced an inconsistent configuration: {verdict:?}"
    );
}

fn rule_label(rule: &ConsistencyRule, changed: bool) -> StepLabel {
    StepLabel::Rule {
        rule: rule.name.clone(),
        manager: rule.manager.clone(),
        step: rule.step.clone(),
        transfers: rule.transfers.clone(),
        changed,
    }
}

/// Checks enabledness clauses (a) to (c) and computes the result in one go.
fn prepare_rule(
    model: &StdModel,
    config: &Configuration,
    rule: &ConsistencyRule,
) -> Result<Fired, DisabledReason> {
    let manager = model
        .component(&rule.manager)
        .ok_or_else(|| DisabledReason::UnknownManager { manager: rule.manager.clone() })?;
    let state = config.state_of(&rule.manager).unwrap_or_default();
    if state != rule.step.source || !manager.std.transitions.contains(&rule.step) {
        return Err(DisabledReason::ManagerNotAtSource { state: state.to_string() });
    }
    for part in manager.partitions.values() {
        let current = config.phase_of(&rule.manager, &part.name).unwrap_or_default();
        let inside = part
            .phases
            .get(current)
            .is_some_and(|ph| ph.transitions.contains(&rule.step));
        if !inside {
            return Err(DisabledReason::StepOutsidePhase {
                partition: part.name.clone(),
                phase: current.to_string(),
            });
        }
    }

    let mut next = apply_detailed(config, &rule.manager, &rule.step);
    for t in &rule.transfers {
        let role = t.role();
        let current = config.phases.get(&role).map(String::as_str).unwrap_or_default();
        if current != t.from {
            return Err(DisabledReason::WrongSourcePhase { role, phase: current.to_string() });
        }
        let entered = entered_traps(model, config, &t.component, &t.partition).unwrap_or_default();
        if !entered.contains(&t.trap) {
            return Err(DisabledReason::TrapNotEntered { role, trap: t.trap.clone() });
        }
        next.phases.insert(role, t.to.clone());
    }
    let diags = crate::validate::configuration_diagnostics(model, &next);
    if !diags.is_empty() {
        return Err(DisabledReason::Inconsistent(diags));
    }

    let Some(var) = &rule.change else {
        return Ok(Fired { model: None, config: next });
    };
    let cs = model
        .variables
        .get(var)
        .and_then(|v| v.as_fragment())
        .ok_or_else(|| DisabledReason::MissingFragment(var.clone()))?;
    match apply_changeset(model, &next, cs) {
        Ok((m, c)) => Ok(Fired { model: Some(m), config: c }),
        Err(EvolutionError::Rejected(diags)) => Err(DisabledReason::ChangeRejected(diags)),
        Err(other) => Err(DisabledReason::ChangeRejected(vec![Diagnostic::new(
            crate::diag::DiagnosticKind::UnknownElement,
            format!("rule {}", rule.name),
            var.as_str(),
            other.to_string(),
        )])),
    }
}

pub fn enabled_detailed(
    model: &StdModel,
    config: &Configuration,
    component: &str,
) -> Result<Vec<Transition>, EngineError> {
    Engine::default().enabled_detailed(model, config, component)
}

pub fn enabled_rules(model: &StdModel, config: &Configuration) -> Vec<String> {
    Engine::default().enabled_rules(model, config)
}

pub fn step_detailed(
    model: &StdModel,
    config: &Configuration,
    component: &str,
    transition: &Transition,
) -> Result<Configuration, EngineError> {
    Engine::default().step_detailed(model, config, component, transition)
}

pub fn fire_rule(
    model: &StdModel,
    config: &Configuration,
    rule: &str,
) -> Result<(StdModel, Configuration), EngineError> {
    Engine::default().fire_rule(model, config, rule)
}

pub fn successors(model: &Arc<StdModel>, config: &Configuration) -> Vec<Successor> {
    Engine::default().successors(model, config)
}

/// Picks among successors on behalf of an interactive driver.
pub trait Chooser {
    /// `None` ends the run.
    fn choose(&mut self, index: usize, config: &Configuration, options: &[Successor]) -> Option<usize>;
}

pub enum Policy<'a> {
    Seeded(u64),
    Scripted(&'a [StepLabel]),
    Interactive(&'a mut dyn Chooser),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub label: StepLabel,
    pub config: Configuration,
    pub digest: u64,
}

/// One execution: the initial configuration and each step with the
/// configuration it produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub initial: Configuration,
    pub steps: Vec<TraceStep>,
    pub final_version: u64,
    /// For lasso-shaped counterexamples, the step index where the cycle
    /// returns to.
    pub loop_start: Option<usize>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last_config(&self) -> &Configuration {
        self.steps.last().map(|s| &s.config).unwrap_or(&self.initial)
    }

    pub fn labels(&self) -> impl Iterator<Item = &StepLabel> {
        self.steps.iter().map(|s| &s.label)
    }

    /// One JSON object per line. Line 0 describes the initial configuration
    /// and has a null label.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut header = TraceLine::new(0, None, &self.initial);
        header.loop_start = self.loop_start;
        push_line(&mut out, &header);
        for (i, step) in self.steps.iter().enumerate() {
            push_line(&mut out, &TraceLine::new(i + 1, Some(step.label.clone()), &step.config));
        }
        out
    }

    /// The JSONL lines as values, for embedding in reports.
    pub fn to_json_values(&self) -> Vec<serde_json::Value> {
        self.to_jsonl()
            .lines()
            .map(|l| serde_json::from_str(l).expect("trace lines are JSON"))
            .collect()
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, EngineError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty()).enumerate();
        let Some((_, head)) = lines.next() else {
            return Err(EngineError::MalformedTrace("empty trace".into()));
        };
        let head: TraceLine = parse_line(head, 0)?;
        if head.label.is_some() {
            return Err(EngineError::MalformedTrace("first line must have a null label".into()));
        }
        let initial = head.config()?;
        let mut steps = Vec::new();
        for (n, line) in lines {
            let line: TraceLine = parse_line(line, n)?;
            if line.index != n {
                return Err(EngineError::MalformedTrace(format!("line {n} has index {}", line.index)));
            }
            let label = line
                .label
                .clone()
                .ok_or_else(|| EngineError::MalformedTrace(format!("line {n} has no label")))?;
            let config = line.config()?;
            let digest = u64::from_str_radix(&line.digest, 16)
                .map_err(|e| EngineError::MalformedTrace(format!("line {n}: digest: {e}")))?;
            steps.push(TraceStep { label, config, digest });
        }
        let final_version = steps.last().map(|s| s.config.model_version).unwrap_or(initial.model_version);
        Ok(Trace { initial, steps, final_version, loop_start: head.loop_start })
    }
}

/// Result of [`Engine::run`].
#[derive(Debug, Clone)]
pub struct Run {
    pub trace: Trace,
    pub model: Arc<StdModel>,
    pub config: Configuration,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct TraceLine {
    index: usize,
    label: Option<StepLabel>,
    component_states: BTreeMap<String, String>,
    role_phases: BTreeMap<String, String>,
    model_version: u64,
    digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    loop_start: Option<usize>,
}

impl TraceLine {
    fn new(index: usize, label: Option<StepLabel>, config: &Configuration) -> Self {
        TraceLine {
            index,
            label,
            component_states: config.detailed.clone(),
            role_phases: config
                .phases
                .iter()
                .map(|(role, phase)| (role.to_string(), phase.clone()))
                .collect(),
            model_version: config.model_version,
            digest: digest_hex(config.digest()),
            loop_start: None,
        }
    }

    fn config(&self) -> Result<Configuration, EngineError> {
        let mut phases = BTreeMap::new();
        for (key, phase) in &self.role_phases {
            let (c, p) = key
                .split_once('.')
                .ok_or_else(|| EngineError::MalformedTrace(format!("role key {key}")))?;
            phases.insert(RoleId::new(c, p), phase.clone());
        }
        Ok(Configuration {
            detailed: self.component_states.clone(),
            phases,
            model_version: self.model_version,
        })
    }
}

fn push_line(out: &mut String, line: &TraceLine) {
    out.push_str(&serde_json::to_string(line).expect("trace lines serialize"));
    out.push('\n');
}

fn parse_line(text: &str, n: usize) -> Result<TraceLine, EngineError> {
    serde_json::from_str(text).map_err(|e| EngineError::MalformedTrace(format!("line {n}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Component, ConsistencyRule, Partition, Phase, Std, Trap};

    fn go_model() -> StdModel {
        let mut std = Std::new("W", "A");
        std.states = ["A", "B"].into_iter().map(String::from).collect();
        std.transitions.insert(Transition::new("A", "go", "B"));
        std.transitions.insert(Transition::new("B", "back", "A"));
        let mut comp = Component::new(std);
        let mut part = Partition::new("R", "P1");
        let mut p1 = Phase::new("P1");
        p1.states = ["A", "B"].into_iter().map(String::from).collect();
        p1.transitions.insert(Transition::new("A", "go", "B"));
        p1.traps.insert("done".into(), Trap::new("done", ["B"]));
        let mut p2 = Phase::new("P2");
        p2.states = ["A", "B"].into_iter().map(String::from).collect();
        p2.transitions.insert(Transition::new("B", "back", "A"));
        part.phases.insert("P1".into(), p1);
        part.phases.insert("P2".into(), p2);
        comp.partitions.insert("R".into(), part);

        let mut mgr = Std::new("M", "X");
        mgr.states.insert("X".into());
        mgr.transitions.insert(Transition::new("X", "swap", "X"));
        let mut m = StdModel::default();
        m.components.insert("W".into(), comp);
        m.components.insert("M".into(), Component::new(mgr));
        m.rules.insert(
            "flip".into(),
            ConsistencyRule {
                name: "flip".into(),
                manager: "M".into(),
                step: Transition::new("X", "swap", "X"),
                transfers: vec![Transfer::new("W", "R", "P1", "done", "P2")],
                change: None,
            },
        );
        m
    }

    #[test]
    fn detailed_steps_respect_phase() {
        let m = go_model();
        let c = m.initial_configuration();
        assert_eq!(enabled_detailed(&m, &c, "W").unwrap(), vec![Transition::new("A", "go", "B")]);
        let c2 = step_detailed(&m, &c, "W", &Transition::new("A", "go", "B")).unwrap();
        assert_eq!(c2.state_of("W"), Some("B"));
        assert!(enabled_detailed(&m, &c2, "W").unwrap().is_empty());
        assert!(matches!(
            step_detailed(&m, &c, "W", &Transition::new("B", "back", "A")),
            Err(EngineError::NotEnabled(_))
        ));
        assert!(matches!(enabled_detailed(&m, &c, "Nope"), Err(EngineError::UnknownComponent(_))));
    }

    #[test]
    fn traps_are_membership() {
        let m = go_model();
        let c = m.initial_configuration();
        let triv: BTreeSet<String> = ["triv".to_string()].into();
        assert_eq!(entered_traps(&m, &c, "W", "R").unwrap(), triv);
        let c2 = step_detailed(&m, &c, "W", &Transition::new("A", "go", "B")).unwrap();
        let both: BTreeSet<String> = ["done".to_string(), "triv".to_string()].into();
        assert_eq!(entered_traps(&m, &c2, "W", "R").unwrap(), both);
    }

    #[test]
    fn rule_needs_trap_and_source_phase() {
        let m = go_model();
        let c = m.initial_configuration();
        assert!(enabled_rules(&m, &c).is_empty());
        let c2 = step_detailed(&m, &c, "W", &Transition::new("A", "go", "B")).unwrap();
        assert_eq!(enabled_rules(&m, &c2), vec!["flip".to_string()]);
        let (m3, c3) = fire_rule(&m, &c2, "flip").unwrap();
        assert_eq!(m3.version, m.version);
        assert_eq!(c3.phase_of("W", "R"), Some("P2"));
        let status = Engine::default().rule_status(&m3, &c3);
        assert!(matches!(status[0].disabled, Some(DisabledReason::WrongSourcePhase { .. })));
    }

    #[test]
    fn claimed_step_only_fires_by_rule() {
        let m = go_model();
        let c = m.initial_configuration();
        assert!(enabled_detailed(&m, &c, "M").unwrap().is_empty());
        assert_eq!(
            Engine::permissive().enabled_detailed(&m, &c, "M").unwrap(),
            vec![Transition::new("X", "swap", "X")]
        );
    }

    #[test]
    fn seeded_runs_repeat_and_replay() {
        let m = Arc::new(go_model());
        let c = m.initial_configuration();
        let e = Engine::default();
        let a = e.run(&m, &c, Policy::Seeded(7), 20).unwrap();
        let b = e.run(&m, &c, Policy::Seeded(7), 20).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(e.run(&m, &c, Policy::Seeded(42), 0).unwrap().trace.len(), 0);
        e.replay(&m, &a.trace).unwrap();
        let parsed = Trace::from_jsonl(&a.trace.to_jsonl()).unwrap();
        assert_eq!(parsed, a.trace);
    }

    #[test]
    fn scripted_run_fails_fast() {
        let m = Arc::new(go_model());
        let c = m.initial_configuration();
        let bad = [StepLabel::Detailed {
            component: "W".into(),
            transition: Transition::new("B", "back", "A"),
        }];
        assert_eq!(
            Engine::default().run(&m, &c, Policy::Scripted(&bad), 5).unwrap_err(),
            EngineError::ReplayDivergence { index: 0 }
        );
    }
}
