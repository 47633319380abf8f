//! The `.pprop` property language.
//!
//! ```text
//! invariant countInState({Worker1.InCS, Worker2.InCS}, <=, 1)
//! reachable inPhase(Server, Evol, RRServing) && modelVersionIs(3)
//! eventuallyAll modelVersionIs(2) bound 500
//! ```
//!
//! Names are resolved when a predicate is evaluated; an atom naming a
//! component, partition or state the model does not have is simply false.

use std::fmt;

use serde::Serialize;

use crate::diag::{Diagnostic, DiagnosticKind as K, Span};
use crate::model::{Configuration, StdModel};

use super::lexer::{lex, Tok};
use super::parser::{PResult, Parser};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Cmp {
    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Gt => lhs > rhs,
            Cmp::Ge => lhs >= rhs,
            Cmp::Eq => lhs == rhs,
            Cmp::Ne => lhs != rhs,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pred {
    True,
    False,
    Not(Box<Pred>),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    InState { component: String, state: String },
    InPhase { component: String, partition: String, phase: String },
    CountInState { states: Vec<(String, String)>, cmp: Cmp, n: i64 },
    ModelVersionIs(u64),
}

impl Pred {
    /// The model is accepted for symmetry with future atoms; every current
    /// atom reads only the configuration.
    pub fn eval(&self, _model: &StdModel, config: &Configuration) -> bool {
        self.holds(config)
    }

    pub fn holds(&self, config: &Configuration) -> bool {
        match self {
            Pred::True => true,
            Pred::False => false,
            Pred::Not(p) => !p.holds(config),
            Pred::And(a, b) => a.holds(config) && b.holds(config),
            Pred::Or(a, b) => a.holds(config) || b.holds(config),
            Pred::InState { component, state } => config.state_of(component) == Some(state.as_str()),
            Pred::InPhase { component, partition, phase } => {
                config.phase_of(component, partition) == Some(phase.as_str())
            }
            Pred::CountInState { states, cmp, n } => {
                let count = states
                    .iter()
                    .filter(|(c, s)| config.state_of(c) == Some(s.as_str()))
                    .count() as i64;
                cmp.holds(count, *n)
            }
            Pred::ModelVersionIs(v) => config.model_version == *v,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Pred::Or(..) => 1,
            Pred::And(..) => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |f: &mut fmt::Formatter<'_>, p: &Pred, min: u8| {
            if p.precedence() < min {
                write!(f, "({p})")
            } else {
                write!(f, "{p}")
            }
        };
        match self {
            Pred::True => f.write_str("true"),
            Pred::False => f.write_str("false"),
            Pred::Not(p) => {
                f.write_str("!")?;
                sub(f, p, 3)
            }
            Pred::And(a, b) => {
                sub(f, a, 2)?;
                f.write_str(" && ")?;
                sub(f, b, 3)
            }
            Pred::Or(a, b) => {
                sub(f, a, 1)?;
                f.write_str(" || ")?;
                sub(f, b, 2)
            }
            Pred::InState { component, state } => write!(f, "inState({component}, {state})"),
            Pred::InPhase { component, partition, phase } => {
                write!(f, "inPhase({component}, {partition}, {phase})")
            }
            Pred::CountInState { states, cmp, n } => {
                f.write_str("countInState({")?;
                for (i, (c, s)) in states.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c}.{s}")?;
                }
                write!(f, "}}, {}, {n})", cmp.as_str())
            }
            Pred::ModelVersionIs(v) => write!(f, "modelVersionIs({v})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Property {
    Invariant(Pred),
    Reachable(Pred),
    EventuallyAll { pred: Pred, bound: u64 },
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Property::Invariant(p) => write!(f, "invariant {p}"),
            Property::Reachable(p) => write!(f, "reachable {p}"),
            Property::EventuallyAll { pred, bound } => write!(f, "eventuallyAll {pred} bound {bound}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyExpr {
    pub property: Property,
    pub span: Span,
}

impl Parser {
    fn property(&mut self) -> PResult<Property> {
        let (kw, span) = self.ident("`invariant`, `reachable` or `eventuallyAll`")?;
        let prop = match kw.as_str() {
            "invariant" => Property::Invariant(self.pred_or()?),
            "reachable" => Property::Reachable(self.pred_or()?),
            "eventuallyAll" => {
                let pred = self.pred_or()?;
                self.keyword("bound")?;
                let n = self.int()?;
                if n < 0 {
                    return Err(self.unexpected("a non-negative bound"));
                }
                Property::EventuallyAll { pred, bound: n as u64 }
            }
            _ => {
                return Err(Diagnostic::new(
                    K::Syntax,
                    "property",
                    kw,
                    "expected `invariant`, `reachable` or `eventuallyAll`",
                )
                .with_span(span))
            }
        };
        Ok(prop)
    }

    fn pred_or(&mut self) -> PResult<Pred> {
        let mut lhs = self.pred_and()?;
        while self.eat(Tok::OrOr) {
            let rhs = self.pred_and()?;
            lhs = Pred::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn pred_and(&mut self) -> PResult<Pred> {
        let mut lhs = self.pred_not()?;
        while self.eat(Tok::AndAnd) {
            let rhs = self.pred_not()?;
            lhs = Pred::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn pred_not(&mut self) -> PResult<Pred> {
        if self.eat(Tok::Bang) {
            return Ok(Pred::Not(Box::new(self.pred_not()?)));
        }
        if self.eat(Tok::LParen) {
            let p = self.pred_or()?;
            self.expect(Tok::RParen)?;
            return Ok(p);
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Pred> {
        let (name, span) = self.ident("a predicate")?;
        let pred = match name.as_str() {
            "true" => return Ok(Pred::True),
            "false" => return Ok(Pred::False),
            "inState" => {
                self.expect(Tok::LParen)?;
                let component = self.name("a component")?.0;
                self.expect(Tok::Comma)?;
                let state = self.name("a state")?.0;
                Pred::InState { component, state }
            }
            "inPhase" => {
                self.expect(Tok::LParen)?;
                let component = self.name("a component")?.0;
                self.expect(Tok::Comma)?;
                let partition = self.name("a partition")?.0;
                self.expect(Tok::Comma)?;
                let phase = self.name("a phase")?.0;
                Pred::InPhase { component, partition, phase }
            }
            "countInState" => {
                self.expect(Tok::LParen)?;
                self.expect(Tok::LBrace)?;
                let mut states = Vec::new();
                if !self.eat(Tok::RBrace) {
                    loop {
                        let c = self.name("a component")?.0;
                        self.expect(Tok::Dot)?;
                        let s = self.name("a state")?.0;
                        states.push((c, s));
                        if !self.eat(Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RBrace)?;
                }
                self.expect(Tok::Comma)?;
                let cmp = self.cmp()?;
                self.expect(Tok::Comma)?;
                let n = self.int()?;
                Pred::CountInState { states, cmp, n }
            }
            "modelVersionIs" => {
                self.expect(Tok::LParen)?;
                let n = self.int()?;
                if n < 0 {
                    return Err(self.unexpected("a non-negative version"));
                }
                Pred::ModelVersionIs(n as u64)
            }
            _ => {
                return Err(Diagnostic::new(K::Syntax, "property", name, "unknown predicate").with_span(span))
            }
        };
        self.expect(Tok::RParen)?;
        Ok(pred)
    }

    fn cmp(&mut self) -> PResult<Cmp> {
        let c = match self.peek() {
            Tok::Lt => Cmp::Lt,
            Tok::Le => Cmp::Le,
            Tok::Gt => Cmp::Gt,
            Tok::Ge => Cmp::Ge,
            Tok::EqEq | Tok::Eq => Cmp::Eq,
            Tok::Ne => Cmp::Ne,
            _ => return Err(self.unexpected("a comparator")),
        };
        self.bump();
        Ok(c)
    }
}

/// Parses a single property.
pub fn parse_property(text: &str) -> Result<PropertyExpr, Diagnostic> {
    let toks = lex(text)?;
    let mut p = Parser::new(toks, Default::default());
    let start = p.span();
    let property = p.property()?;
    p.expect_eof()?;
    let span = Span {
        end: text.trim_end().len(),
        ..start
    };
    Ok(PropertyExpr { property, span })
}

/// Parses a `.pprop` document: one property per line, blank lines and `#`
/// comments ignored. Spans refer to the whole document.
pub fn parse_properties(text: &str) -> Result<Vec<PropertyExpr>, Vec<Diagnostic>> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    let mut offset = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let body = line.split('#').next().unwrap_or("");
        if !body.trim().is_empty() {
            let shift = |mut s: Span| {
                s.line = i + 1;
                s.start += offset;
                s.end += offset;
                s
            };
            match parse_property(body) {
                Ok(mut p) => {
                    p.span = shift(p.span);
                    out.push(p);
                }
                Err(mut d) => {
                    d.span = d.span.map(shift);
                    errors.push(d);
                }
            }
        }
        offset += line.len();
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mutex_invariant() {
        let p = parse_property("invariant countInState({Worker1.InCS, Worker2.InCS}, <=, 1)").unwrap();
        assert_eq!(
            p.property,
            Property::Invariant(Pred::CountInState {
                states: vec![("Worker1".into(), "InCS".into()), ("Worker2".into(), "InCS".into())],
                cmp: Cmp::Le,
                n: 1
            })
        );
    }

    #[test]
    fn eventually_all_with_bound() {
        let p = parse_property("eventuallyAll modelVersionIs(2) bound 500").unwrap();
        assert_eq!(
            p.property,
            Property::EventuallyAll { pred: Pred::ModelVersionIs(2), bound: 500 }
        );
    }

    #[test]
    fn truncated_atom_reports_column() {
        let text = "invariant inPhase(Server, Evol, ";
        let d = parse_property(text).unwrap_err();
        assert_eq!(d.kind, K::Syntax);
        assert_eq!(d.span.unwrap().column, text.len() + 1);
    }

    #[test]
    fn precedence_and_display_round_trip() {
        let text = "reachable !inState(A, x) && (inState(B, y) || modelVersionIs(1))";
        let p = parse_property(text).unwrap();
        assert_eq!(p.property.to_string(), text);
        assert_eq!(parse_property(&p.property.to_string()).unwrap().property, p.property);
    }

    #[test]
    fn document_lines() {
        let doc = "# props\ninvariant true\n\nreachable inState(Worker[1], InCS) # note\n";
        let ps = parse_properties(doc).unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[1].span.line, 4);
        assert_eq!(
            ps[1].property,
            Property::Reachable(Pred::InState { component: "Worker1".into(), state: "InCS".into() })
        );
    }
}
