//! Test support: random small models and reference implementations.
//!
//! Models are built from a seed so proptest cases are reproducible. The
//! reference checks here are deliberately naive and share no code with
//! `validate` or `engine` beyond the data types.

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::StepLabel;
use crate::evolution::apply_changeset;
use crate::model::{
    Component, Configuration, ConsistencyRule, Partition, Phase, RoleId, Std, StdModel, Transfer,
    Transition, Trap, Value, TRIVIAL_TRAP,
};

pub const MAX_COMPONENTS: usize = 4;
pub const MAX_STATES: usize = 6;
pub const MAX_PHASES: usize = 3;

const ACTIONS: [&str; 3] = ["a", "b", "c"];

/// Size limits for generated models.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub components: usize,
    pub states: usize,
    pub phases: usize,
    pub rules: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            components: MAX_COMPONENTS,
            states: MAX_STATES,
            phases: MAX_PHASES,
            rules: 4,
        }
    }
}

/// Forward closure of `seed` under `transitions`.
fn close(seed: BTreeSet<String>, transitions: &BTreeSet<Transition>) -> BTreeSet<String> {
    let mut set = seed;
    loop {
        let more: Vec<String> = transitions
            .iter()
            .filter(|t| set.contains(&t.source) && !set.contains(&t.target))
            .map(|t| t.target.clone())
            .collect();
        if more.is_empty() {
            return set;
        }
        set.extend(more);
    }
}

fn random_component(rng: &mut impl Rng, name: String, shape: Shape) -> Component {
    let n = rng.gen_range(1..=shape.states);
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let mut std = Std::new(name, states[rng.gen_range(0..n)].clone());
    std.states.extend(states.iter().cloned());
    for src in &states {
        for tgt in &states {
            if rng.gen_bool(0.3) {
                let act = ACTIONS[rng.gen_range(0..ACTIONS.len())];
                std.transitions.insert(Transition::new(src.as_str(), act, tgt.as_str()));
            }
        }
    }
    let mut comp = Component::new(std);
    for p in 0..rng.gen_range(0..=2) {
        let part = random_partition(rng, &comp.std, format!("P{p}"), shape);
        comp.partitions.insert(part.name.clone(), part);
    }
    comp
}

fn random_partition(rng: &mut impl Rng, std: &Std, name: String, shape: Shape) -> Partition {
    let k = rng.gen_range(1..=shape.phases);
    let mut members: Vec<BTreeSet<String>> = vec![BTreeSet::new(); k];
    for s in &std.states {
        members[rng.gen_range(0..k)].insert(s.clone());
        for m in members.iter_mut() {
            if rng.gen_bool(0.3) {
                m.insert(s.clone());
            }
        }
    }
    let all: Vec<&String> = std.states.iter().collect();
    let mut part = Partition::new(name, "");
    for (i, states) in members.into_iter().enumerate() {
        let mut ph = Phase::new(format!("Ph{i}"));
        ph.states = states;
        if ph.states.is_empty() {
            ph.states.insert(all[rng.gen_range(0..all.len())].clone());
        }
        ph.transitions = std
            .transitions
            .iter()
            .filter(|t| ph.states.contains(&t.source) && ph.states.contains(&t.target))
            .filter(|_| rng.gen_bool(0.7))
            .cloned()
            .collect();
        for t in 0..rng.gen_range(0..=2) {
            let in_phase: Vec<&String> = ph.states.iter().collect();
            let size = rng.gen_range(1..=in_phase.len());
            let seed: BTreeSet<String> = in_phase
                .choose_multiple(rng, size)
                .map(|s| (*s).clone())
                .collect();
            let states = close(seed, &ph.transitions);
            ph.traps.insert(format!("t{t}"), Trap::new(format!("t{t}"), states));
        }
        part.phases.insert(ph.name.clone(), ph);
    }
    let candidates: Vec<&String> = part
        .phases
        .values()
        .filter(|ph| ph.states.contains(&std.initial))
        .map(|ph| &ph.name)
        .collect();
    part.initial = candidates[rng.gen_range(0..candidates.len())].clone();
    part
}

fn random_rule(rng: &mut impl Rng, model: &StdModel, name: String) -> Option<ConsistencyRule> {
    let comps: Vec<&Component> = model.components.values().collect();
    let manager = comps[rng.gen_range(0..comps.len())];
    let steps: Vec<&Transition> = manager.std.transitions.iter().collect();
    let step = (*steps.choose(rng)?).clone();
    let mut roles: Vec<RoleId> = model.roles().collect();
    roles.shuffle(rng);
    let mut transfers = Vec::new();
    for role in roles.into_iter().take(rng.gen_range(0..=2)) {
        let part = model.partition(&role.component, &role.partition)?;
        let phases: Vec<&Phase> = part.phases.values().collect();
        let from = phases[rng.gen_range(0..phases.len())];
        let mut traps: Vec<Trap> = vec![from.trivial_trap()];
        traps.extend(from.traps.values().cloned());
        let trap = traps[rng.gen_range(0..traps.len())].clone();
        let targets: Vec<&&Phase> = phases.iter().filter(|p| trap.states.is_subset(&p.states)).collect();
        let to = targets[rng.gen_range(0..targets.len())];
        transfers.push(Transfer::new(
            role.component.as_str(),
            role.partition.as_str(),
            from.name.as_str(),
            trap.name.as_str(),
            to.name.as_str(),
        ));
    }
    Some(ConsistencyRule {
        name,
        manager: manager.name().to_string(),
        step,
        transfers,
        change: None,
    })
}

/// A valid model built from `seed`.
pub fn valid_model(seed: u64, shape: Shape) -> StdModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = StdModel::default();
    for c in 0..rng.gen_range(1..=shape.components) {
        let comp = random_component(&mut rng, format!("C{c}"), shape);
        model.components.insert(comp.name().to_string(), comp);
    }
    for r in 0..rng.gen_range(0..=shape.rules) {
        if let Some(rule) = random_rule(&mut rng, &model, format!("r{r}")) {
            model.rules.insert(rule.name.clone(), rule);
        }
    }
    model
}

/// Number of distinct mutation kinds [`mutate`] chooses from.
pub const MUTATIONS: u8 = 16;

/// Applies one structural edit that usually, but not always, breaks
/// well-formedness.
pub fn mutate(model: &mut StdModel, kind: u8, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = model.components.keys().cloned().collect();
    let cname = names[rng.gen_range(0..names.len())].clone();
    let comp = model.components.get_mut(&cname).expect("component");
    let states: Vec<String> = comp.std.states.iter().cloned().collect();
    let any_state = states[rng.gen_range(0..states.len())].clone();
    let part_names: Vec<String> = comp.partitions.keys().cloned().collect();
    let part = part_names
        .choose(&mut rng)
        .cloned()
        .and_then(|p| comp.partitions.get_mut(&p));
    match (kind % MUTATIONS, part) {
        (0, _) => {
            comp.std.transitions.insert(Transition::new(any_state, "a", "zz"));
        }
        (1, _) => comp.std.initial = "zz".into(),
        (2, Some(part)) => {
            let all: Vec<Transition> = comp.std.transitions.iter().cloned().collect();
            if let (Some(ph), Some(t)) = (part.phases.values_mut().next(), all.choose(&mut rng)) {
                ph.transitions.insert(t.clone());
            }
        }
        (3, Some(part)) => {
            if let Some(ph) = part.phases.values_mut().last() {
                let s: Vec<String> = ph.states.iter().cloned().collect();
                let pick: BTreeSet<String> = s.choose_multiple(&mut rng, 1).cloned().collect();
                ph.traps.insert("bad".into(), Trap::new("bad", pick));
            }
        }
        (4, Some(part)) => {
            for ph in part.phases.values_mut() {
                ph.states.remove(&any_state);
                ph.transitions.retain(|t| t.source != any_state && t.target != any_state);
                for trap in ph.traps.values_mut() {
                    trap.states.remove(&any_state);
                }
            }
        }
        (5, _) => {
            if let Some(r) = model.rules.values_mut().find(|r| !r.transfers.is_empty()) {
                r.transfers[0].to = "Nope".into();
            }
        }
        (6, _) => {
            let phases: Vec<(String, String, String)> = model
                .components
                .values()
                .flat_map(|c| {
                    c.partitions.values().flat_map(move |p| {
                        p.phases.keys().map(move |ph| (c.name().to_string(), p.name.clone(), ph.clone()))
                    })
                })
                .collect();
            if let (Some(r), Some((c, p, ph))) =
                (model.rules.values_mut().find(|r| !r.transfers.is_empty()), phases.choose(&mut rng))
            {
                let t = &mut r.transfers[0];
                t.component = c.clone();
                t.partition = p.clone();
                t.to = ph.clone();
            }
        }
        (7, _) => {
            if let Some(r) = model.rules.values_mut().find(|r| !r.transfers.is_empty()) {
                let dup = r.transfers[0].clone();
                r.transfers.push(dup);
            }
        }
        (8, Some(part)) => {
            if let Some(ph) = part.phases.values_mut().next() {
                let states = ph.states.clone();
                ph.traps.insert(TRIVIAL_TRAP.into(), Trap::new(TRIVIAL_TRAP, states));
            }
        }
        (9, Some(part)) => {
            if let Some(ph) = part.phases.values_mut().next() {
                ph.traps.insert("out".into(), Trap::new("out", ["zz"]));
            }
        }
        (10, Some(part)) => part.initial = "Nope".into(),
        (11, Some(part)) => part.phases.clear(),
        (12, _) => {
            if let Some(r) = model.rules.values_mut().next() {
                r.change = Some(if rng.gen_bool(0.5) { "Missing" } else { "N" }.into());
            }
            model.variables.insert("N".into(), Value::Int(1));
        }
        (13, _) => {
            if let Some(r) = model.rules.values_mut().next() {
                r.manager = "Nobody".into();
            }
        }
        (14, Some(part)) => {
            if let Some(ph) = part.phases.values_mut().next() {
                ph.traps.insert("none".into(), Trap::new("none", Vec::<String>::new()));
            }
        }
        (15, Some(part)) => {
            if let Some(ph) = part.phases.values_mut().next() {
                let s = ph.states.iter().next().cloned().unwrap_or_default();
                ph.transitions.insert(Transition::new(s.as_str(), "zz", s.as_str()));
            }
        }
        // Partition-level edits on a component without partitions fall
        // back to breaking a rule step.
        (_, None) => {
            if let Some(r) = model.rules.values_mut().next() {
                r.step = Transition::new("zz", "a", "zz");
            } else {
                comp.std.initial = "zz".into();
            }
        }
        _ => {}
    }
}

pub fn arb_valid_model() -> impl Strategy<Value = StdModel> {
    any::<u64>().prop_map(|s| valid_model(s, Shape::default()))
}

/// Valid models with zero to three mutations applied.
pub fn arb_model() -> impl Strategy<Value = StdModel> {
    (any::<u64>(), proptest::collection::vec((0..MUTATIONS, any::<u64>()), 0..=3)).prop_map(|(s, edits)| {
        let mut m = valid_model(s, Shape::default());
        for (kind, seed) in edits {
            mutate(&mut m, kind, seed);
        }
        m
    })
}

// ---- reference well-formedness ----

fn phase_ok(std: &Std, ph: &Phase) -> bool {
    !ph.states.is_empty()
        && ph.states.iter().all(|s| std.states.contains(s))
        && ph.transitions.iter().all(|t| {
            std.transitions.contains(t) && ph.states.contains(&t.source) && ph.states.contains(&t.target)
        })
        && ph.traps.values().all(|trap| {
            trap.name != TRIVIAL_TRAP
                && !trap.states.is_empty()
                && trap.states.iter().all(|s| ph.states.contains(s))
                && ph
                    .transitions
                    .iter()
                    .all(|t| !trap.states.contains(&t.source) || trap.states.contains(&t.target))
        })
}

fn partition_ok(std: &Std, part: &Partition) -> bool {
    let initial_ok = part
        .phases
        .get(&part.initial)
        .is_some_and(|ph| ph.states.contains(&std.initial));
    let covered = std
        .states
        .iter()
        .all(|s| part.phases.values().any(|ph| ph.states.contains(s)));
    !part.phases.is_empty() && initial_ok && covered && part.phases.values().all(|ph| phase_ok(std, ph))
}

fn std_ok(std: &Std) -> bool {
    std.states.contains(&std.initial)
        && std
            .transitions
            .iter()
            .all(|t| std.states.contains(&t.source) && std.states.contains(&t.target))
}

fn rule_ok(model: &StdModel, rule: &ConsistencyRule) -> bool {
    let step_ok = model
        .components
        .get(&rule.manager)
        .is_some_and(|c| c.std.transitions.contains(&rule.step));
    let roles: BTreeSet<(&String, &String)> = rule.transfers.iter().map(|t| (&t.component, &t.partition)).collect();
    let transfers_ok = roles.len() == rule.transfers.len()
        && rule.transfers.iter().all(|t| {
            let Some(part) = model.components.get(&t.component).and_then(|c| c.partitions.get(&t.partition)) else {
                return false;
            };
            let (Some(from), Some(to)) = (part.phases.get(&t.from), part.phases.get(&t.to)) else {
                return false;
            };
            let trap_states = if t.trap == TRIVIAL_TRAP {
                Some(&from.states)
            } else {
                from.traps.get(&t.trap).map(|tr| &tr.states)
            };
            trap_states.is_some_and(|s| s.iter().all(|x| to.states.contains(x)))
        });
    let change_ok = match &rule.change {
        None => true,
        Some(v) => matches!(model.variables.get(v), Some(Value::Fragment(_))),
    };
    step_ok && transfers_ok && change_ok
}

/// Independent statement of every static model invariant.
pub fn well_formed(model: &StdModel) -> bool {
    model
        .components
        .values()
        .all(|c| std_ok(&c.std) && c.partitions.values().all(|p| partition_ok(&c.std, p)))
        && model.rules.values().all(|r| rule_ok(model, r))
}

/// Whether every detailed state lies in each current phase.
pub fn consistent(model: &StdModel, config: &Configuration) -> bool {
    config.model_version == model.version
        && model.components.values().all(|c| {
            let Some(state) = config.detailed.get(c.name()) else {
                return false;
            };
            c.std.states.contains(state)
                && c.partitions.values().all(|p| {
                    config
                        .phases
                        .get(&RoleId::new(c.name(), p.name.as_str()))
                        .and_then(|ph| p.phases.get(ph))
                        .is_some_and(|ph| ph.states.contains(state))
                })
        })
}

// ---- reference successors ----

/// One step found by [`naive_successors`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct NaiveStep {
    pub label: StepLabel,
    /// `None` when the model is unchanged.
    pub model: Option<StdModel>,
    pub config: Configuration,
}

fn current_phase<'a>(model: &'a StdModel, config: &Configuration, c: &str, p: &str) -> Option<&'a Phase> {
    let name = config.phases.get(&RoleId::new(c, p))?;
    model.components.get(c)?.partitions.get(p)?.phases.get(name)
}

/// Enumerates successors straight from the definitions: every transition
/// of every component is tried as a free step, every rule as a coupled one.
pub fn naive_successors(model: &StdModel, config: &Configuration) -> Vec<NaiveStep> {
    let mut out = Vec::new();
    let claimed: Vec<(&String, &Transition)> = model.rules.values().map(|r| (&r.manager, &r.step)).collect();
    for (name, comp) in &model.components {
        let here = &config.detailed[name];
        for t in &comp.std.transitions {
            let inside = comp.partitions.keys().all(|p| {
                current_phase(model, config, name, p).is_some_and(|ph| ph.transitions.contains(t))
            });
            if t.source == *here && inside && !claimed.contains(&(name, t)) {
                let mut next = config.clone();
                next.detailed.insert(name.clone(), t.target.clone());
                out.push(NaiveStep {
                    label: StepLabel::Detailed { component: name.clone(), transition: t.clone() },
                    model: None,
                    config: next,
                });
            }
        }
    }
    for rule in model.rules.values() {
        let Some(mgr) = model.components.get(&rule.manager) else { continue };
        if config.detailed.get(&rule.manager) != Some(&rule.step.source) || !mgr.std.transitions.contains(&rule.step) {
            continue;
        }
        let step_inside = mgr.partitions.keys().all(|p| {
            current_phase(model, config, &rule.manager, p).is_some_and(|ph| ph.transitions.contains(&rule.step))
        });
        if !step_inside {
            continue;
        }
        let transfers_ok = rule.transfers.iter().all(|t| {
            let Some(ph) = current_phase(model, config, &t.component, &t.partition) else {
                return false;
            };
            let state = &config.detailed[&t.component];
            ph.name == t.from
                && if t.trap == TRIVIAL_TRAP {
                    ph.states.contains(state)
                } else {
                    ph.traps.get(&t.trap).is_some_and(|tr| tr.states.contains(state))
                }
        });
        if !transfers_ok {
            continue;
        }
        let mut next = config.clone();
        next.detailed.insert(rule.manager.clone(), rule.step.target.clone());
        for t in &rule.transfers {
            next.phases.insert(RoleId::new(t.component.as_str(), t.partition.as_str()), t.to.clone());
        }
        if !consistent(model, &next) {
            continue;
        }
        let (new_model, next) = match &rule.change {
            None => (None, next),
            Some(var) => {
                let Some(Value::Fragment(cs)) = model.variables.get(var) else { continue };
                match apply_changeset(model, &next, cs) {
                    Ok((m, c)) if consistent(&m, &c) => (Some(m), c),
                    _ => continue,
                }
            }
        };
        out.push(NaiveStep {
            label: StepLabel::Rule {
                rule: rule.name.clone(),
                manager: rule.manager.clone(),
                step: rule.step.clone(),
                transfers: rule.transfers.clone(),
                changed: new_model.is_some(),
            },
            model: new_model,
            config: next,
        });
    }
    out.sort();
    out
}

/// All configurations reachable by [`naive_successors`], model changes
/// included, as `(model, config)` pairs in discovery order.
pub fn naive_reachable(model: &StdModel, config: &Configuration, limit: usize) -> Vec<(StdModel, Configuration)> {
    let mut seen: BTreeSet<(StdModel, Configuration)> = BTreeSet::new();
    let mut order = Vec::new();
    let mut stack = vec![(model.clone(), config.clone())];
    while let Some((m, c)) = stack.pop() {
        if order.len() >= limit || !seen.insert((m.clone(), c.clone())) {
            continue;
        }
        for s in naive_successors(&m, &c) {
            stack.push((s.model.unwrap_or_else(|| m.clone()), s.config));
        }
        order.push((m, c));
    }
    order
}
