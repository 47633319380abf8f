//! Canonical `.pdm` output.
//!
//! Families are written out expanded and every collection is emitted in its
//! sorted order, so two structurally equal models serialize identically.

use std::fmt::Write;

use crate::evolution::ChangeSet;
use crate::model::{Component, ConsistencyRule, Partition, Phase, StdModel, Transition, Trap, Value};

const HEADER: &str = "# paradigm model\n";

pub fn serialize_model(model: &StdModel) -> String {
    let mut out = String::from(HEADER);
    let _ = writeln!(out, "version {};", model.version);
    for comp in model.components.values() {
        out.push('\n');
        write_component(&mut out, comp, 0);
    }
    if !model.rules.is_empty() {
        out.push('\n');
    }
    for rule in model.rules.values() {
        out.push_str("rule ");
        write_rule(&mut out, rule);
        out.push('\n');
    }
    for (name, value) in &model.variables {
        out.push('\n');
        let _ = write!(out, "var {name} = ");
        write_value(&mut out, value, 0);
        out.push_str(";\n");
    }
    out
}

/// The items of a change set, one per line, without surrounding braces.
pub fn serialize_changeset(cs: &ChangeSet) -> String {
    let mut out = String::new();
    write_items(&mut out, cs, 0);
    out
}

fn pad(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn join<'a>(names: impl IntoIterator<Item = &'a String>) -> String {
    names.into_iter().map(String::as_str).collect::<Vec<_>>().join(", ")
}

fn trans(t: &Transition) -> String {
    format!("{} -{}-> {}", t.source, t.action, t.target)
}

fn write_component(out: &mut String, comp: &Component, depth: usize) {
    let std = &comp.std;
    let _ = writeln!(out, "component {} {{", std.name);
    pad(out, depth + 1);
    let _ = writeln!(out, "states: {};", join(&std.states));
    pad(out, depth + 1);
    let _ = writeln!(out, "initial: {};", std.initial);
    pad(out, depth + 1);
    out.push_str("transitions:\n");
    for t in &std.transitions {
        pad(out, depth + 2);
        let _ = writeln!(out, "{};", trans(t));
    }
    for part in comp.partitions.values() {
        pad(out, depth + 1);
        let _ = write!(out, "partition {} ", part.name);
        write_partition_body(out, part, depth + 1);
    }
    pad(out, depth);
    out.push_str("}\n");
}

fn write_partition_body(out: &mut String, part: &Partition, depth: usize) {
    out.push_str("{\n");
    pad(out, depth + 1);
    let _ = writeln!(out, "initial: {};", part.initial);
    for ph in part.phases.values() {
        pad(out, depth + 1);
        let _ = write!(out, "phase {} ", ph.name);
        write_phase_body(out, ph, depth + 1);
    }
    pad(out, depth);
    out.push_str("}\n");
}

fn write_phase_body(out: &mut String, ph: &Phase, depth: usize) {
    out.push_str("{\n");
    pad(out, depth + 1);
    let _ = writeln!(out, "states: {};", join(&ph.states));
    pad(out, depth + 1);
    let ts: Vec<String> = ph.transitions.iter().map(trans).collect();
    let _ = writeln!(out, "transitions: {};", ts.join(", "));
    for trap in ph.traps.values() {
        pad(out, depth + 1);
        let _ = write!(out, "trap {} ", trap.name);
        write_trap_body(out, trap);
    }
    pad(out, depth);
    out.push_str("}\n");
}

fn write_trap_body(out: &mut String, trap: &Trap) {
    let _ = writeln!(out, "{{ {} }}", join(&trap.states));
}

/// Rule text after the `rule` keyword, ending in `;`.
fn write_rule(out: &mut String, rule: &ConsistencyRule) {
    let _ = write!(out, "{}: {}: {}", rule.name, rule.manager, trans(&rule.step));
    for t in &rule.transfers {
        let _ = write!(
            out,
            " * {}({}): {} -{}-> {}",
            t.component, t.partition, t.from, t.trap, t.to
        );
    }
    if let Some(var) = &rule.change {
        let _ = write!(out, " with {var}");
    }
    out.push(';');
}

fn write_value(out: &mut String, value: &Value, depth: usize) {
    match value {
        Value::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Value::Fragment(cs) if cs.is_empty() => out.push_str("{}"),
        Value::Fragment(cs) => {
            out.push_str("{\n");
            write_items(out, cs, depth + 1);
            pad(out, depth);
            out.push('}');
        }
    }
}

fn write_items(out: &mut String, cs: &ChangeSet, depth: usize) {
    for comp in cs.add_components.values() {
        pad(out, depth);
        out.push_str("add ");
        write_component(out, comp, depth);
    }
    for (c, s) in &cs.add_states {
        pad(out, depth);
        let _ = writeln!(out, "add state {c}.{s};");
    }
    for (c, t) in &cs.add_transitions {
        pad(out, depth);
        let _ = writeln!(out, "add transition {c}: {};", trans(t));
    }
    for (c, part) in &cs.add_partitions {
        pad(out, depth);
        let _ = write!(out, "add partition {c}.{} ", part.name);
        write_partition_body(out, part, depth);
    }
    for (c, p, ph) in &cs.add_phases {
        pad(out, depth);
        let _ = write!(out, "add phase {c}.{p}.{} ", ph.name);
        write_phase_body(out, ph, depth);
    }
    for (c, p, ph, trap) in &cs.add_traps {
        pad(out, depth);
        let _ = write!(out, "add trap {c}.{p}.{ph}.{} ", trap.name);
        write_trap_body(out, trap);
    }
    for rule in cs.add_rules.values() {
        pad(out, depth);
        out.push_str("add rule ");
        write_rule(out, rule);
        out.push('\n');
    }
    for (name, value) in &cs.set_variables {
        pad(out, depth);
        let _ = write!(out, "set {name} = ");
        write_value(out, value, depth);
        out.push_str(";\n");
    }
    for init in &cs.set_initials {
        pad(out, depth);
        match &init.partition {
            None => {
                let _ = writeln!(out, "initial {} = {};", init.component, init.name);
            }
            Some(p) => {
                let _ = writeln!(out, "initial {}.{p} = {};", init.component, init.name);
            }
        }
    }
    for name in &cs.remove_rules {
        pad(out, depth);
        let _ = writeln!(out, "remove rule {name};");
    }
    for (c, p, ph, t) in &cs.remove_traps {
        pad(out, depth);
        let _ = writeln!(out, "remove trap {c}.{p}.{ph}.{t};");
    }
    for (c, p, ph) in &cs.remove_phases {
        pad(out, depth);
        let _ = writeln!(out, "remove phase {c}.{p}.{ph};");
    }
    for (c, p) in &cs.remove_partitions {
        pad(out, depth);
        let _ = writeln!(out, "remove partition {c}.{p};");
    }
    for (c, t) in &cs.remove_transitions {
        pad(out, depth);
        let _ = writeln!(out, "remove transition {c}: {};", trans(t));
    }
    for (c, s) in &cs.remove_states {
        pad(out, depth);
        let _ = writeln!(out, "remove state {c}.{s};");
    }
}
