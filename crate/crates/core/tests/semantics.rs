use std::collections::BTreeSet;
use std::sync::Arc;

use paradigm::engine::*;
use paradigm::model::*;
use paradigm::testing::{arb_valid_model, consistent};
use paradigm::validate::validate_configuration;
use proptest::prelude::*;

fn w_model() -> StdModel {
    let mut std = Std::new("W", "A");
    std.states.extend(["A".to_string(), "B".to_string()]);
    std.transitions.insert(Transition::new("A", "go", "B"));
    std.transitions.insert(Transition::new("B", "tick", "B"));
    let mut comp = Component::new(std);
    let mut part = Partition::new("R", "P");
    let mut p = Phase::new("P");
    p.states.extend(["A".to_string(), "B".to_string()]);
    p.transitions.insert(Transition::new("A", "go", "B"));
    p.transitions.insert(Transition::new("B", "tick", "B"));
    p.traps.insert("done".into(), Trap::new("done", ["B"]));
    part.phases.insert("P".into(), p);
    let mut q = Phase::new("Q");
    q.states.insert("B".into());
    part.phases.insert("Q".into(), q);
    comp.partitions.insert("R".into(), part);
    let mut m = StdModel::default();
    m.components.insert("W".into(), comp);
    m
}

#[test]
fn detailed_examples() {
    let m = w_model();
    let c = m.initial_configuration();
    assert_eq!(enabled_detailed(&m, &c, "W").unwrap(), vec![Transition::new("A", "go", "B")]);
    let b = step_detailed(&m, &c, "W", &Transition::new("A", "go", "B")).unwrap();
    assert_eq!(b.state_of("W"), Some("B"));
    let again = step_detailed(&m, &b, "W", &Transition::new("B", "tick", "B")).unwrap();
    assert_eq!(again, b);
    assert!(matches!(
        step_detailed(&m, &c, "W", &Transition::new("B", "tick", "B")),
        Err(EngineError::NotEnabled(_))
    ));
    assert!(matches!(enabled_detailed(&m, &c, "X"), Err(EngineError::UnknownComponent(_))));
}

#[test]
fn second_partition_restricts() {
    let mut m = w_model();
    let comp = m.components.get_mut("W").unwrap();
    let mut part = Partition::new("S", "Only");
    let mut only = Phase::new("Only");
    only.states.extend(["A".to_string(), "B".to_string()]);
    part.phases.insert("Only".into(), only);
    comp.partitions.insert("S".into(), part);
    assert!(enabled_detailed(&m, &m.initial_configuration(), "W").unwrap().is_empty());
}

#[test]
fn trap_entry() {
    let m = w_model();
    let c = m.initial_configuration();
    let traps = |c: &Configuration| entered_traps(&m, c, "W", "R").unwrap();
    assert_eq!(traps(&c), BTreeSet::from(["triv".to_string()]));
    let b = step_detailed(&m, &c, "W", &Transition::new("A", "go", "B")).unwrap();
    assert_eq!(traps(&b), BTreeSet::from(["triv".to_string(), "done".to_string()]));
    assert!(matches!(entered_traps(&m, &c, "W", "Nope"), Err(EngineError::UnknownPartition(..))));
}

#[test]
fn nested_traps() {
    let mut m = w_model();
    let p = m.components.get_mut("W").unwrap().partitions.get_mut("R").unwrap().phases.get_mut("P").unwrap();
    p.traps.insert("wide".into(), Trap::new("wide", ["A", "B"]));
    let c = step_detailed(&m, &m.initial_configuration(), "W", &Transition::new("A", "go", "B")).unwrap();
    assert_eq!(entered_traps(&m, &c, "W", "R").unwrap().len(), 3);
}

/// A manager `M` whose step is claimed by rule `r` moving W's role.
fn managed() -> StdModel {
    let mut m = w_model();
    let mut std = Std::new("M", "x");
    std.states.extend(["x".to_string(), "y".to_string()]);
    std.transitions.insert(Transition::new("x", "move", "y"));
    m.components.insert("M".into(), Component::new(std));
    m.rules.insert(
        "r".into(),
        ConsistencyRule {
            name: "r".into(),
            manager: "M".into(),
            step: Transition::new("x", "move", "y"),
            transfers: vec![Transfer::new("W", "R", "P", "done", "Q")],
            change: None,
        },
    );
    m
}

#[test]
fn rule_examples() {
    let m = managed();
    let c = m.initial_configuration();
    // claimed steps never fire freely
    assert!(enabled_detailed(&m, &c, "M").unwrap().is_empty());
    assert!(enabled_rules(&m, &c).is_empty());
    let b = step_detailed(&m, &c, "W", &Transition::new("A", "go", "B")).unwrap();
    assert_eq!(enabled_rules(&m, &b), vec!["r".to_string()]);
    let (m2, after) = fire_rule(&m, &b, "r").unwrap();
    assert_eq!(m2, m);
    assert_eq!(after.phase_of("W", "R"), Some("Q"));
    assert_eq!(after.state_of("M"), Some("y"));
    assert_eq!(after.model_version, 0);
    assert!(matches!(fire_rule(&m, &after, "r"), Err(EngineError::NotEnabled(_))));

    let mut transferred = b.clone();
    transferred.phases.insert(RoleId::new("W", "R"), "Q".into());
    let status = Engine::default().rule_status(&m, &transferred);
    assert!(matches!(status[0].disabled, Some(DisabledReason::WrongSourcePhase { .. })));
    assert!(Engine::permissive().enabled_detailed(&m, &c, "M").unwrap().len() == 1);
}

#[test]
fn self_transfer_moves_state_and_phase() {
    let mut m = w_model();
    m.rules.insert(
        "self".into(),
        ConsistencyRule {
            name: "self".into(),
            manager: "W".into(),
            step: Transition::new("B", "tick", "B"),
            transfers: vec![Transfer::new("W", "R", "P", "done", "Q")],
            change: None,
        },
    );
    let c = step_detailed(&m, &m.initial_configuration(), "W", &Transition::new("A", "go", "B")).unwrap();
    let (_, after) = fire_rule(&m, &c, "self").unwrap();
    assert_eq!((after.state_of("W"), after.phase_of("W", "R")), (Some("B"), Some("Q")));
}

#[test]
fn successor_counts() {
    let m = Arc::new(managed());
    let c = m.initial_configuration();
    let b = step_detailed(&m, &c, "W", &Transition::new("A", "go", "B")).unwrap();
    // tick and the rule
    assert_eq!(successors(&m, &b).len(), 2);
    let (_, stuck) = fire_rule(&m, &b, "r").unwrap();
    assert!(successors(&m, &stuck).is_empty());
}

#[test]
fn run_examples() {
    let m = Arc::new(managed());
    let c = m.initial_configuration();
    let e = Engine::default();
    assert!(e.run(&m, &c, Policy::Seeded(42), 0).unwrap().trace.is_empty());
    let a = e.run(&m, &c, Policy::Seeded(9), 20).unwrap();
    let b = e.run(&m, &c, Policy::Seeded(9), 20).unwrap();
    assert_eq!(a.trace, b.trace);
    let labels: Vec<StepLabel> = a.trace.labels().cloned().collect();
    let replay = e.run(&m, &c, Policy::Scripted(&labels), labels.len()).unwrap();
    assert_eq!(replay.trace, a.trace);
}

fn transferred_roles(label: &StepLabel) -> BTreeSet<RoleId> {
    match label {
        StepLabel::Rule { transfers, .. } => transfers.iter().map(Transfer::role).collect(),
        StepLabel::Detailed { .. } => BTreeSet::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_walks_keep_invariants(m in arb_valid_model(), seed in any::<u64>()) {
        let m = Arc::new(m);
        let start = m.initial_configuration();
        let run = Engine::default().run(&m, &start, Policy::Seeded(seed), 200).unwrap();
        let mut prev = start;
        for step in &run.trace.steps {
            let c = &step.config;
            prop_assert_eq!(validate_configuration(&m, c).unwrap(), vec![]);
            prop_assert!(consistent(&m, c));
            prop_assert_eq!(step.digest, c.digest());
            if let StepLabel::Detailed { component, transition } = &step.label {
                for part in m.components[component].partitions.values() {
                    let ph = &part.phases[prev.phase_of(component, &part.name).unwrap()];
                    prop_assert!(ph.transitions.contains(transition));
                    prop_assert!(ph.states.contains(&transition.target));
                }
            }
            let moved = transferred_roles(&step.label);
            for role in m.roles().filter(|r| !moved.contains(r)) {
                let before = entered_traps(&m, &prev, &role.component, &role.partition).unwrap();
                let after = entered_traps(&m, c, &role.component, &role.partition).unwrap();
                prop_assert!(before.is_subset(&after), "{} lost traps at {}", role, step.label);
            }
            prev = c.clone();
        }
    }
}
