use paradigm::model::*;
use paradigm::testing::{arb_model, arb_valid_model, well_formed};
use paradigm::validate::*;
use paradigm::DiagnosticKind as K;
use proptest::prelude::*;

fn std_ab(initial: &str, transitions: &[(&str, &str, &str)], states: &[&str]) -> Std {
    let mut s = Std::new("W", initial);
    s.states.extend(states.iter().map(|x| x.to_string()));
    s.transitions
        .extend(transitions.iter().map(|(a, b, c)| Transition::new(*a, *b, *c)));
    s
}

fn phase(name: &str, states: &[&str], transitions: &[(&str, &str, &str)]) -> Phase {
    let mut ph = Phase::new(name);
    ph.states.extend(states.iter().map(|x| x.to_string()));
    ph.transitions
        .extend(transitions.iter().map(|(a, b, c)| Transition::new(*a, *b, *c)));
    ph
}

#[test]
fn std_examples() {
    assert!(validate_std(&std_ab("A", &[("A", "go", "B")], &["A", "B"])).is_empty());
    let d = validate_std(&std_ab("A", &[("A", "go", "B")], &["A"]));
    assert_eq!(d.len(), 1);
    assert_eq!((d[0].kind, d[0].element.as_str()), (K::UnknownTarget, "B"));
    let d = validate_std(&std_ab("C", &[], &["A", "B"]));
    assert_eq!((d[0].kind, d[0].element.as_str()), (K::InitialNotAState, "C"));
}

#[test]
fn trap_examples() {
    let ph = phase("P", &["A", "B"], &[("A", "go", "B")]);
    assert!(validate_trap(&ph, &Trap::new("t", ["B"])).is_empty());
    let d = validate_trap(&ph, &Trap::new("t", ["A"]));
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].kind, K::TrapExit);
    assert_eq!(d[0].element, "(A,go,B)");
    assert!(validate_trap(&ph, &ph.trivial_trap()).is_empty());
}

#[test]
fn connecting_examples() {
    let src = phase("S", &["A", "B"], &[]);
    let tgt = phase("T", &["B", "C"], &[]);
    assert!(is_connecting(&Trap::new("t", ["B"]), &src, &tgt));
    assert!(!is_connecting(&Trap::new("t", ["A", "B"]), &src, &tgt));
    assert!(is_connecting(&Trap::new("t", ["B"]), &src, &src));
}

fn one_partition_model() -> StdModel {
    let mut comp = Component::new(std_ab("A", &[("A", "go", "B")], &["A", "B"]));
    let mut part = Partition::new("R", "P");
    let mut p = phase("P", &["A", "B"], &[("A", "go", "B")]);
    p.traps.insert("done".into(), Trap::new("done", ["B"]));
    part.phases.insert("P".into(), p);
    part.phases.insert("Q".into(), phase("Q", &["B"], &[]));
    comp.partitions.insert("R".into(), part);
    let mut m = StdModel::default();
    m.components.insert("W".into(), comp);
    m
}

#[test]
fn model_examples() {
    let m = one_partition_model();
    assert!(validate_model(&m).is_empty());

    let mut bad = m.clone();
    bad.rules.insert(
        "r".into(),
        ConsistencyRule {
            name: "r".into(),
            manager: "W".into(),
            step: Transition::new("A", "go", "B"),
            transfers: vec![Transfer::new("W", "R", "P", "done", "Nope")],
            change: None,
        },
    );
    let d = validate_model(&bad);
    assert!(d.iter().any(|d| d.kind == K::UnresolvedPhase), "{d:?}");

    let mut uncovered = m.clone();
    let part = uncovered.components.get_mut("W").unwrap().partitions.get_mut("R").unwrap();
    part.phases.remove("Q");
    let p = part.phases.get_mut("P").unwrap();
    p.states.remove("B");
    p.transitions.clear();
    p.traps.clear();
    let d = validate_model(&uncovered);
    assert!(d.iter().any(|d| d.kind == K::UncoveredState && d.element == "B"), "{d:?}");
}

#[test]
fn configuration_examples() {
    let m = one_partition_model();
    let c = m.initial_configuration();
    assert_eq!(validate_configuration(&m, &c).unwrap(), vec![]);

    let mut moved = c.clone();
    moved.phases.insert(RoleId::new("W", "R"), "Q".into());
    let d = validate_configuration(&m, &moved).unwrap();
    assert_eq!(d[0].kind, K::PhaseViolation);

    let mut stale = c.clone();
    stale.phases.insert(RoleId::new("W", "R"), "Gone".into());
    let d = validate_configuration(&m, &stale).unwrap();
    assert_eq!(d[0].kind, K::UnresolvedPhase);

    let mut other = c;
    other.model_version = 3;
    assert!(matches!(
        validate_configuration(&m, &other),
        Err(ValidationError::VersionMismatch { model: 0, config: 3 })
    ));
}

#[test]
fn diagnostics_are_sorted() {
    let mut m = one_partition_model();
    m.components.get_mut("W").unwrap().std.initial = "Z".into();
    m.components.get_mut("W").unwrap().std.transitions.insert(Transition::new("A", "x", "Y"));
    let d = validate_model(&m);
    let keys: Vec<_> = d.iter().map(|d| (d.owner.clone(), d.element.clone())).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

/// Element validators plus the resolution checks they do not cover.
fn conjunction(m: &StdModel) -> bool {
    let elements = m.components.values().all(|c| {
        validate_std(&c.std).is_empty()
            && c.partitions.values().all(|p| {
                p.phases
                    .values()
                    .all(|ph| ph.traps.values().all(|t| validate_trap(ph, t).is_empty()))
            })
    });
    let connecting = m.rules.values().all(|r| {
        r.transfers.iter().all(|t| {
            let Some(part) = m.partition(&t.component, &t.partition) else { return true };
            let (Some(from), Some(to)) = (part.phases.get(&t.from), part.phases.get(&t.to)) else {
                return true;
            };
            let trap = if t.trap == TRIVIAL_TRAP { Some(from.trivial_trap()) } else { from.traps.get(&t.trap).cloned() };
            trap.is_none_or(|tr| is_connecting(&tr, from, to))
        })
    });
    elements && connecting && well_formed(m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn generated_valid_models_validate(m in arb_valid_model()) {
        prop_assert_eq!(validate_model(&m), vec![]);
        prop_assert!(well_formed(&m));
    }

    #[test]
    fn validator_is_the_conjunction(m in arb_model()) {
        let d = validate_model(&m);
        prop_assert_eq!(d.is_empty(), conjunction(&m), "{:?}", d);
    }

    #[test]
    fn closure_survives_transition_removal(m in arb_valid_model(), drop in any::<u64>()) {
        for c in m.components.values() {
            for p in c.partitions.values() {
                for ph in p.phases.values() {
                    let mut thinner = ph.clone();
                    let ts: Vec<_> = thinner.transitions.iter().cloned().collect();
                    for (i, t) in ts.iter().enumerate() {
                        if drop >> (i % 64) & 1 == 1 {
                            thinner.transitions.remove(t);
                        }
                    }
                    for t in ph.traps.values() {
                        prop_assert!(validate_trap(&thinner, t).is_empty());
                    }
                }
            }
        }
    }

    #[test]
    fn trivial_trap_connects_iff_subset(m in arb_valid_model()) {
        for c in m.components.values() {
            for p in c.partitions.values() {
                for a in p.phases.values() {
                    for b in p.phases.values() {
                        prop_assert_eq!(is_connecting(&a.trivial_trap(), a, b), a.states.is_subset(&b.states));
                    }
                }
            }
        }
    }
}
