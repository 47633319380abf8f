//! Graphviz exports.
//!
//! Node order follows the model's sorted collections, so output is stable.

use std::fmt::Write;

use thiserror::Error;

use crate::explorer::StateSpace;
use crate::model::{Component, StdModel};

pub const DEFAULT_NODE_LIMIT: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DotError {
    #[error("unknown component {0}")]
    UnknownComponent(String),
    #[error("state space has {nodes} states, above the export limit of {limit}")]
    TooLarge { nodes: usize, limit: usize },
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn components<'a>(model: &'a StdModel, only: Option<&str>) -> Result<Vec<&'a Component>, DotError> {
    match only {
        None => Ok(model.components.values().collect()),
        Some(name) => model
            .component(name)
            .map(|c| vec![c])
            .ok_or_else(|| DotError::UnknownComponent(name.into())),
    }
}

/// Detailed STDs, one cluster per component.
pub fn std_dot(model: &StdModel, only: Option<&str>) -> Result<String, DotError> {
    let mut out = String::from("digraph std {\n  rankdir=LR;\n");
    for comp in components(model, only)? {
        let name = comp.name();
        let _ = writeln!(out, "  subgraph {} {{", quote(&format!("cluster_{name}")));
        let _ = writeln!(out, "    label={};", quote(name));
        for s in &comp.std.states {
            let shape = if *s == comp.std.initial { "doublecircle" } else { "ellipse" };
            let _ = writeln!(
                out,
                "    {} [label={}, shape={shape}];",
                quote(&format!("{name}.{s}")),
                quote(s)
            );
        }
        for t in &comp.std.transitions {
            let _ = writeln!(
                out,
                "    {} -> {} [label={}];",
                quote(&format!("{name}.{}", t.source)),
                quote(&format!("{name}.{}", t.target)),
                quote(&t.action)
            );
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    Ok(out)
}

/// Phases as clusters. Trap membership is listed under each state; the
/// trivial trap is left out since every state belongs to it.
pub fn phases_dot(model: &StdModel, only: Option<&str>) -> Result<String, DotError> {
    let mut out = String::from("digraph phases {\n  rankdir=LR;\n");
    for comp in components(model, only)? {
        let c = comp.name();
        for part in comp.partitions.values() {
            for ph in part.phases.values() {
                let id = format!("{c}.{}.{}", part.name, ph.name);
                let _ = writeln!(out, "  subgraph {} {{", quote(&format!("cluster_{id}")));
                let initial = if part.initial == ph.name { " (initial)" } else { "" };
                let _ = writeln!(out, "    label={};", quote(&format!("{id}{initial}")));
                for s in &ph.states {
                    let traps: Vec<&str> = ph
                        .traps
                        .values()
                        .filter(|t| t.name != crate::model::TRIVIAL_TRAP && t.states.contains(s))
                        .map(|t| t.name.as_str())
                        .collect();
                    let label = if traps.is_empty() {
                        s.clone()
                    } else {
                        format!("{s}\\n[{}]", traps.join(", "))
                    };
                    let _ = writeln!(out, "    {} [label=\"{label}\"];", quote(&format!("{id}.{s}")));
                }
                for t in &ph.transitions {
                    let _ = writeln!(
                        out,
                        "    {} -> {} [label={}];",
                        quote(&format!("{id}.{}", t.source)),
                        quote(&format!("{id}.{}", t.target)),
                        quote(&t.action)
                    );
                }
                out.push_str("  }\n");
            }
        }
    }
    out.push_str("}\n");
    Ok(out)
}

/// The explored graph; refused above `limit` states.
pub fn statespace_dot(space: &StateSpace, limit: usize) -> Result<String, DotError> {
    if space.len() > limit {
        return Err(DotError::TooLarge { nodes: space.len(), limit });
    }
    let mut out = String::from("digraph statespace {\n");
    for s in 0..space.len() {
        let c = space.config(s);
        let mut label = format!("v{}", c.model_version);
        for (comp, st) in &c.detailed {
            let _ = write!(label, "\\n{comp}={st}");
        }
        let shape = if s == 0 { ", shape=box" } else { "" };
        let _ = writeln!(out, "  s{s} [label=\"{}\"{shape}];", label.replace('"', "\\\""));
    }
    for s in 0..space.len() {
        for (label, t) in space.successors(s) {
            let _ = writeln!(out, "  s{s} -> s{t} [label={}];", quote(&label.to_string()));
        }
    }
    out.push_str("}\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Std, Transition};

    #[test]
    fn three_state_std() {
        let mut std = Std::new("A", "x");
        for s in ["x", "y", "z"] {
            std.states.insert(s.into());
        }
        std.transitions.insert(Transition::new("x", "go", "y"));
        let mut m = StdModel::default();
        m.components.insert("A".into(), Component::new(std));
        let dot = std_dot(&m, Some("A")).unwrap();
        assert_eq!(dot.matches("label=\"x\"").count() + dot.matches("label=\"y\"").count() + dot.matches("label=\"z\"").count(), 3);
        assert_eq!(std_dot(&m, Some("B")), Err(DotError::UnknownComponent("B".into())));
    }
}
