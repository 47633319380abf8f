//! The `.pdm` model format and the `.pprop` property language.
//!
//! ```text
//! # two workers sharing a critical section
//! component Worker[2] {
//!   states: OutCS, Asking, InCS;
//!   initial: OutCS;
//!   transitions:
//!     OutCS -request-> Asking;
//!     Asking -enter-> InCS;
//!     InCS -leave-> OutCS;
//!   partition CSRole {
//!     initial: NonCrit;
//!     phase NonCrit {
//!       states: OutCS, Asking;
//!       transitions: OutCS -request-> Asking;
//!       trap asking { Asking }
//!     }
//!     phase Crit {
//!       states: OutCS, Asking, InCS;
//!       transitions: Asking -enter-> InCS, InCS -leave-> OutCS;
//!       trap done { OutCS }
//!     }
//!   }
//! }
//!
//! rule grant[i]: Sched: Free -grant-> Busy[i]
//!   * Worker[i](CSRole): NonCrit -asking-> Crit;
//! ```
//!
//! `component Worker[2]` declares `Worker1` and `Worker2`. A rule named with an
//! index variable is instantiated once per family member; `Name[i+1]` wraps
//! around at the family bound. Variables hold change-set literals:
//!
//! ```text
//! var Crs = {
//!   add rule ...;
//!   remove rule old;
//!   set Next = {};
//! };
//! ```

mod lexer;
mod parser;
pub mod property;
mod serialize;

use std::collections::BTreeMap;

use crate::diag::{sort_diagnostics, Diagnostic, DiagnosticKind as K, Span};
use crate::evolution::ChangeSet;
use crate::model::StdModel;
use crate::validate::validate_model;

pub use property::{parse_properties, parse_property, Cmp, Pred, Property, PropertyExpr};
pub use serialize::{serialize_changeset, serialize_model};

/// A document to parse together with the name it is reported under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceModel {
    pub name: String,
    pub text: String,
}

impl SourceModel {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        SourceModel {
            name: name.into(),
            text: text.into(),
        }
    }
}

/// A syntactically sound model. `diagnostics` holds the validator's verdict;
/// it is empty for a well-formed model.
#[derive(Debug, Clone)]
pub struct ParsedModel {
    pub model: StdModel,
    /// Component families and their sizes.
    pub families: BTreeMap<String, usize>,
    pub diagnostics: Vec<Diagnostic>,
    /// Declaration spans keyed by dotted owner path (`C`, `C.P`, `C.P.Ph`,
    /// `C.P.Ph.T`, `rule N`, `var N`).
    pub spans: BTreeMap<String, Span>,
}

impl ParsedModel {
    pub fn is_valid(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

/// Span of the closest declared ancestor of `owner`.
fn span_for(spans: &BTreeMap<String, Span>, owner: &str) -> Option<Span> {
    let mut key = owner;
    loop {
        if let Some(s) = spans.get(key) {
            return Some(*s);
        }
        key = &key[..key.rfind('.')?];
    }
}

fn attach_spans(diags: &mut [Diagnostic], spans: &BTreeMap<String, Span>) {
    for d in diags {
        if d.span.is_none() {
            d.span = span_for(spans, &d.owner);
        }
    }
}

/// Parses and validates a model. `Err` carries syntax, duplicate-name and
/// index errors; validation problems are reported in
/// [`ParsedModel::diagnostics`].
pub fn parse_model(source: &SourceModel) -> Result<ParsedModel, Vec<Diagnostic>> {
    let toks = lexer::lex(&source.text).map_err(|d| vec![d])?;
    let mut p = parser::Parser::new(toks, BTreeMap::new());
    let doc = p.document().map_err(|d| vec![d])?;
    let families = p.families.clone();
    let mut spans = std::mem::take(&mut p.spans);
    let mut errors = std::mem::take(&mut p.errors);
    let lowered = parser::lower_document(&doc, &families, &mut spans, &mut errors);

    let mut model = StdModel {
        version: doc.version.unwrap_or(0),
        ..StdModel::default()
    };
    for comp in lowered.components {
        let name = comp.name().to_string();
        if model.components.contains_key(&name) {
            let span = spans.get(&name).copied().unwrap_or_default();
            errors.push(Diagnostic::new(K::DuplicateName, &name, "", "component declared more than once").with_span(span));
        } else {
            model.components.insert(name, comp);
        }
    }
    for (rule, span) in lowered.rules {
        let owner = format!("rule {}", rule.name);
        if model.rules.contains_key(&rule.name) {
            errors.push(Diagnostic::new(K::DuplicateName, &owner, "", "rule declared more than once").with_span(span));
        } else {
            spans.insert(owner, span);
            model.rules.insert(rule.name.clone(), rule);
        }
    }
    for (name, value, _) in lowered.vars {
        model.variables.entry(name).or_insert(value);
    }
    if !errors.is_empty() {
        sort_diagnostics(&mut errors);
        return Err(errors);
    }
    let mut diagnostics = validate_model(&model);
    attach_spans(&mut diagnostics, &spans);
    Ok(ParsedModel { model, families, diagnostics, spans })
}

/// Parses the items of a change-set literal (without the surrounding braces),
/// expanding indexed rules against `families`.
pub fn parse_fragment(text: &str, families: &BTreeMap<String, usize>) -> Result<ChangeSet, Vec<Diagnostic>> {
    let toks = lexer::lex(text).map_err(|d| vec![d])?;
    let mut p = parser::Parser::new(toks, families.clone());
    let ast = p
        .fragment_items(lexer::Tok::Eof)
        .and_then(|f| p.expect_eof().map(|_| f))
        .map_err(|d| vec![d])?;
    let families = p.families.clone();
    let mut spans = std::mem::take(&mut p.spans);
    let mut errors = std::mem::take(&mut p.errors);
    let cs = parser::lower_fragment(&ast, &families, &mut spans, &mut errors);
    if errors.is_empty() {
        Ok(cs)
    } else {
        sort_diagnostics(&mut errors);
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ParsedModel {
        parse_model(&SourceModel::new("test", text)).unwrap()
    }

    const TWO_STATE: &str = "component W { states: A, B; initial: A; transitions: A -go-> B; }";

    #[test]
    fn minimal_component() {
        let pm = parse(TWO_STATE);
        assert!(pm.is_valid());
        assert_eq!(pm.model.components.len(), 1);
        assert!(pm.model.rules.is_empty());
    }

    #[test]
    fn trap_outside_phase_points_at_trap() {
        let text = "component W {\n  states: A, B;\n  initial: A;\n  transitions: A -go-> B;\n  partition R {\n    initial: P;\n    phase P {\n      states: A;\n      transitions: ;\n      trap t { B }\n    }\n  }\n}\n";
        let pm = parse(text);
        let d = pm
            .diagnostics
            .iter()
            .find(|d| d.kind == K::TrapStateOutsidePhase)
            .expect("trap diagnostic");
        assert_eq!(d.owner, "W.R.P.t");
        assert_eq!(d.span.unwrap().line, 10);
    }

    #[test]
    fn families_and_index_wrap() {
        let text = "component W[3] { states: A; initial: A; transitions: A -go-> A; }\n\
                    component M { states: S1, S2, S3; initial: S1; transitions: S1 -n-> S2; S2 -n-> S3; S3 -n-> S1; }\n\
                    rule next[i]: M: S[i] -n-> S[i+1] * W[i](R): P -triv-> P;";
        let err = parse_model(&SourceModel::new("t", text));
        let pm = err.unwrap();
        assert_eq!(pm.families.get("W"), Some(&3));
        assert!(pm.model.components.contains_key("W3"));
        let r3 = &pm.model.rules["next3"];
        assert_eq!(r3.step, crate::model::Transition::new("S3", "n", "S1"));
        assert_eq!(r3.transfers[0].component, "W3");
    }

    #[test]
    fn unbound_index_is_an_error() {
        let text = format!("{TWO_STATE}\nrule r: W: A -go-> B * X[i](R): P -triv-> P;");
        let errs = parse_model(&SourceModel::new("t", text)).unwrap_err();
        assert_eq!(errs[0].kind, K::UnboundIndex);
    }

    #[test]
    fn duplicate_component() {
        let text = format!("{TWO_STATE}\n{TWO_STATE}");
        let errs = parse_model(&SourceModel::new("t", text)).unwrap_err();
        assert_eq!(errs[0].kind, K::DuplicateName);
        assert_eq!(errs[0].span.unwrap().line, 2);
    }

    #[test]
    fn syntax_error_has_position() {
        let errs = parse_model(&SourceModel::new("t", "component W {\n  states A;")).unwrap_err();
        assert_eq!(errs[0].kind, K::Syntax);
        let s = errs[0].span.unwrap();
        assert_eq!((s.line, s.column), (2, 10));
    }

    #[test]
    fn empty_model_is_header_only() {
        let text = serialize_model(&StdModel::default());
        assert_eq!(text, "# paradigm model\nversion 0;\n");
        assert_eq!(parse(&text).model, StdModel::default());
    }

    #[test]
    fn fragment_items() {
        let cs = parse_fragment(
            "add state W.C;\nadd transition W: B -more-> C;\nremove rule old;\nset X = { set Y = 3; };\ninitial W = B;",
            &BTreeMap::new(),
        )
        .unwrap();
        assert_eq!(cs.add_states.len(), 1);
        assert_eq!(cs.remove_rules.len(), 1);
        let text = serialize_changeset(&cs);
        assert_eq!(parse_fragment(&text, &BTreeMap::new()).unwrap(), cs);
    }
}
