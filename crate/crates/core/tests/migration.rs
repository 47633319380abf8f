mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use common::NaiveGraph;
use paradigm::bundled::{self, parse_valid, prepare_migration, Bundle};
use paradigm::dsl::{parse_fragment, Pred, Property};
use paradigm::engine::{Engine, Policy, StepLabel};
use paradigm::evolution::*;
use paradigm::explorer::*;
use paradigm::validate::{validate_configuration, validate_model};
use paradigm::{Configuration, StdModel};

/// Census of the loaded shop migration across all versions.
const SHOP_STATES: usize = 424;
/// Longest shortest path to completion from any pre-completion state.
const SHOP_MAX_DEPTH: usize = 12;
/// Minimal progress bound per component.
const SHOP_MIN_K: [(&str, usize); 5] = [("Client1", 7), ("Client2", 7), ("Client3", 7), ("McPal", 6), ("Server", 3)];
/// Length of the shortest mutual-exclusion counterexample in cs-broken.
const CS_BROKEN_CEX: usize = 6;

fn completed(target: u64) -> impl Fn(&StdModel, &Configuration) -> bool {
    let sk = McPalSkeleton::default();
    move |m, c| migration_complete(&sk, target)(m, c)
}

#[test]
fn shop_census_is_consistent_across_versions() {
    let l = bundled::SHOP_MIGRATION.load().unwrap();
    let space = Explorer::default().build(&l.model, &l.config);
    assert!(space.is_complete());
    assert!(space.inconsistent.is_empty());
    for (m, c) in space.states() {
        assert_eq!(validate_configuration(m, c).unwrap(), vec![]);
        assert_eq!(validate_model(m), vec![]);
    }
    assert_eq!(space.model_versions().into_iter().collect::<Vec<_>>(), vec![1, 2, 3, 4]);

    let oracle = NaiveGraph::build(&l.model, &l.config);
    assert_eq!(oracle.states.len(), space.len());
    assert_eq!(space.len(), SHOP_STATES);

    let report = explore(&l.model, &l.config, &l.properties, Bounds::default());
    assert!(report.violations.is_empty(), "{:?}", report.violations);
    assert_eq!(report.inconsistent_states, 0);
    assert!(report.properties.iter().all(|p| p.verdict == "holds"));
}

#[test]
fn shop_migration_terminates() {
    let l = bundled::SHOP_MIGRATION.load().unwrap();
    let result = check_migration_termination(&l.model, &l.config, 4, 1000);
    assert_eq!(result, Termination::Terminates { max_depth: SHOP_MAX_DEPTH });

    let oracle = NaiveGraph::build(&l.model, &l.config);
    let done = completed(4);
    let goal = |s: usize| done(&oracle.states[s].0, &oracle.states[s].1);
    assert_eq!(oracle.completion_depth(&goal), Some(SHOP_MAX_DEPTH));

    assert!(matches!(
        check_migration_termination(&l.model, &l.config, 4, SHOP_MAX_DEPTH - 1),
        Termination::Unknown { max_depth: Some(SHOP_MAX_DEPTH) }
    ));
}

#[test]
fn migrated_host_is_the_round_robin_shop() {
    let l = bundled::SHOP_MIGRATION.load().unwrap();
    let sk = McPalSkeleton::default();
    let trace = shortest_trace_to(
        &l.model,
        &l.config,
        &Pred::And(
            Box::new(Pred::ModelVersionIs(4)),
            Box::new(Pred::InPhase { component: "McPal".into(), partition: "Evol".into(), phase: "Hibernating".into() }),
        ),
        Bounds::default(),
    )
    .unwrap();
    let run = Engine::default().replay(&l.model, &trace).unwrap();
    assert!(migration_complete(&sk, 4)(&run.model, &run.config));

    let mut host = (*run.model).clone();
    host.components.remove("McPal");
    host.rules.retain(|_, r| r.manager != "McPal" && r.transfers.iter().all(|t| t.component != "McPal"));
    host.variables.clear();
    let mut rr = parse_valid("rr", bundled::SHOP_ROUNDROBIN_SOURCE).unwrap().model;
    rr.version = host.version;
    assert_eq!(host, rr);
}

#[test]
fn identity_migration_terminates_quickly() {
    let host = parse_valid("prodcons", bundled::PRODCONS.source).unwrap();
    let (m, c) = prepare_migration("prodcons", &host, "").unwrap();
    let m = Arc::new(m);
    match check_migration_termination(&m, &c, 3, 100) {
        Termination::Terminates { max_depth } => assert!(max_depth <= 5, "{max_depth}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn faulty_migration_cycles() {
    let l = bundled::SHOP_FAULTY.load().unwrap();
    let Termination::Cycle(trace) = check_migration_termination(&l.model, &l.config, 4, 1000) else {
        panic!("expected a cycle");
    };
    let start = trace.loop_start.expect("lasso");
    assert!(start < trace.len());
    let states: Vec<&Configuration> = std::iter::once(&trace.initial).chain(trace.steps.iter().map(|s| &s.config)).collect();
    assert_eq!(states[start], *states.last().unwrap());
    Engine::default().replay(&l.model, &trace).unwrap();
}

#[test]
fn shop_progress_bounds() {
    let l = bundled::SHOP_MIGRATION.load().unwrap();
    let oracle = NaiveGraph::build(&l.model, &l.config);
    for (c, k) in SHOP_MIN_K {
        assert_eq!(oracle.minimal_progress_bound(c), Some(k), "{c}");
        // sweep upward the way the check is meant to be used
        let found = (1..=32).find(|&k| {
            matches!(check_progress(&l.model, &l.config, c, k, Bounds::default()), Progress::Satisfied { .. })
        });
        assert_eq!(found, Some(k), "{c}");
    }
}

#[test]
fn faulty_migration_starves_mcpal() {
    let l = bundled::SHOP_FAULTY.load().unwrap();
    let Progress::Starved(trace) = check_progress(&l.model, &l.config, "McPal", 32, Bounds::default()) else {
        panic!("expected starvation");
    };
    let run = Engine::default().replay(&l.model, &trace).unwrap();
    let space = Explorer::default().build(&run.model, &run.config);
    assert!(space.states().all(|(m, c)| Engine::default()
        .successors(&Arc::new(m.clone()), c)
        .iter()
        .all(|s| s.label.actor() != "McPal")));
}

#[test]
fn never_enabled_claim_starves_at_initial() {
    let src = "component W { states: A, B; initial: A; transitions: A -go-> B; }\n\
               component M { states: x, y; initial: x; transitions: x -m-> y;\n\
                 partition R { initial: P;\n\
                   phase P { states: x, y; transitions: ; trap late { y } }\n\
                   phase Q { states: y; transitions: ; } } }\n\
               rule r: W: A -go-> B * M(R): P -late-> Q;";
    let m = Arc::new(parse_valid("t", src).unwrap().model);
    let c = m.initial_configuration();
    let Progress::Starved(trace) = check_progress(&m, &c, "W", 5, Bounds::default()) else {
        panic!("W should starve");
    };
    assert!(trace.is_empty());
}

#[test]
fn broken_variant_counterexample_is_minimal() {
    let l = bundled::CS_BROKEN.load().unwrap();
    let Property::Invariant(mutex) = &l.properties[0].property else { panic!() };
    let Verdict::Violated(Some(trace)) = check_invariant(&l.model, &l.config, mutex, Bounds::default()) else {
        panic!("expected a violation");
    };
    assert_eq!(trace.len(), CS_BROKEN_CEX);
    let oracle = NaiveGraph::build(&l.model, &l.config);
    let bad = |s: usize| !mutex.eval(&oracle.states[s].0, &oracle.states[s].1);
    assert_eq!(oracle.distance(0, &bad), Some(CS_BROKEN_CEX));
    let run = Engine::default().replay(&l.model, &trace).unwrap();
    assert!(!mutex.eval(&run.model, &run.config));
}

#[test]
fn bundled_mutual_exclusion_holds() {
    for b in [&bundled::CS_ROUNDROBIN, &bundled::CS_NONDET] {
        let l = b.load().unwrap();
        let Property::Invariant(mutex) = &l.properties[0].property else { panic!() };
        assert_eq!(check_invariant(&l.model, &l.config, mutex, Bounds::default()), Verdict::Holds, "{}", b.name);
    }
}

#[test]
fn scripted_demo_trace_completes() {
    let l = bundled::SHOP_MIGRATION.load().unwrap();
    let pred = Pred::ModelVersionIs(4);
    let trace = shortest_trace_to(&l.model, &l.config, &pred, Bounds::default()).unwrap();
    let labels: Vec<StepLabel> = trace.labels().cloned().collect();
    let run = Engine::default().run(&l.model, &l.config, Policy::Scripted(&labels), labels.len()).unwrap();
    assert_eq!(run.trace, trace);
    assert_eq!(run.config.model_version, 4);
}

// ---- change sets ----

fn loaded_shop() -> (Bundle, Arc<StdModel>, Configuration) {
    let l = bundled::SHOP_MIGRATION.load().unwrap();
    (bundled::SHOP_MIGRATION, l.model, l.config)
}

#[test]
fn empty_change_set_bumps_version() {
    let (_, m, c) = loaded_shop();
    let (m2, c2) = apply_changeset(&m, &c, &ChangeSet::default()).unwrap();
    assert_eq!(m2.version, m.version + 1);
    assert_eq!(c2.model_version, m2.version);
    let mut back = m2.clone();
    back.version = m.version;
    assert_eq!(back, *m);
}

#[test]
fn changeset_validation_examples() {
    let (_, m, c) = loaded_shop();
    let families = parse_valid("shop", bundled::SHOP_NONDET_SOURCE).unwrap().families;
    let disjoint = parse_fragment("add rule extra: Client1: Out -enter-> Waiting;", &families).unwrap();
    assert_eq!(validate_changeset(&m, &c, &disjoint), vec![]);

    let live = parse_fragment("remove phase Client1.CSRole.Without;", &families).unwrap();
    let d = validate_changeset(&m, &c, &live);
    assert!(d.iter().any(|d| d.kind == paradigm::DiagnosticKind::LivePhaseRemoval), "{d:?}");
    assert!(matches!(apply_changeset(&m, &c, &live), Err(EvolutionError::Rejected(_))));
}

#[test]
fn add_then_inverse_restores_model() {
    let (_, m, c) = loaded_shop();
    let none = BTreeMap::new();
    let uncovered = parse_fragment("add state Client1.Idle;\nadd transition Client1: Out -rest-> Idle;", &none).unwrap();
    assert!(matches!(apply_changeset(&m, &c, &uncovered), Err(EvolutionError::Rejected(_))));

    let add = parse_fragment("add rule spare: Client2: Out -enter-> Waiting;", &none).unwrap();
    let inverse = parse_fragment("remove rule spare;", &none).unwrap();
    let (m1, c1) = apply_changeset(&m, &c, &add).unwrap();
    let (mut restored, _) = apply_changeset(&m1, &c1, &inverse).unwrap();
    assert_eq!(restored.version, m.version + 2);
    restored.version = m.version;
    assert_eq!(restored, *m);
}

#[test]
fn kick_off_brings_in_migration_rules() {
    let (_, m, c) = loaded_shop();
    let e = Engine::default();
    let want = e.run(&m, &c, Policy::Scripted(&[StepLabel::Detailed {
        component: "McPal".into(),
        transition: paradigm::Transition::new("Observing", "wantChange", "Prepared"),
    }]), 1).unwrap();
    let (m2, c2) = e.fire_rule(&want.model, &want.config, KICK_OFF_RULE).unwrap();
    assert_eq!(m2.version, m.version + 1);
    assert_eq!(c2.model_version, m2.version);
    for r in ["toInterim", "toRR", "finishShop", "grantRR1", "nextRR3"] {
        assert!(m2.rules.contains_key(r), "{r}");
    }
    assert!(!m2.rules.contains_key(END_RULE));
    assert!(matches!(
        load_migration(&m2, &c2, &ChangeSet::default(), &McPalSkeleton::default()),
        Err(EvolutionError::NotHibernating)
    ));
}

#[test]
fn weave_into_prodcons_validates() {
    let host = parse_valid("prodcons", bundled::PRODCONS.source).unwrap().model;
    let woven = weave_mcpal(&host, &McPalSkeleton::default()).unwrap();
    assert_eq!(validate_model(&woven), vec![]);
    assert!(matches!(weave_mcpal(&woven, &McPalSkeleton::default()), Err(EvolutionError::NameCollision(_))));
}
