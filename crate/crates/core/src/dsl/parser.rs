//! Recursive-descent parser for `.pdm` documents and change-set literals.
//!
//! Everything except rules is lowered while parsing. Rules may use an index
//! variable (`rule grant[i]: ... Client[i](CSRole) ...`), so they are kept as
//! templates and expanded once every family bound is known.

use std::collections::BTreeMap;

use crate::diag::{Diagnostic, DiagnosticKind as K, Span};
use crate::evolution::{ChangeSet, InitialRef};
use crate::model::{Component, ConsistencyRule, Partition, Phase, Std, Transfer, Transition, Trap, Value};

use super::lexer::{Tok, Token};

pub(crate) type PResult<T> = Result<T, Diagnostic>;

#[derive(Debug, Clone)]
enum Index {
    Lit(i64),
    Var { name: String, offset: i64 },
}

/// `Name`, `Name[3]` or `Name[i+1]`.
#[derive(Debug, Clone)]
pub(crate) struct NameRef {
    base: String,
    index: Option<Index>,
    span: Span,
}

impl NameRef {
    fn uses_var(&self, var: &str) -> bool {
        matches!(&self.index, Some(Index::Var { name, .. }) if name == var)
    }
}

/// Binding of a rule's index variable during expansion.
#[derive(Clone, Copy)]
struct Binding<'a> {
    var: &'a str,
    value: i64,
    bound: usize,
}

fn resolve(n: &NameRef, env: Option<Binding<'_>>) -> PResult<String> {
    match &n.index {
        None => Ok(n.base.clone()),
        Some(Index::Lit(v)) => Ok(format!("{}{v}", n.base)),
        Some(Index::Var { name, offset }) => match env {
            Some(b) if b.var == name => {
                let bound = b.bound as i64;
                let v = (b.value + offset - 1).rem_euclid(bound) + 1;
                Ok(format!("{}{v}", n.base))
            }
            _ => Err(Diagnostic::new(
                K::UnboundIndex,
                &n.base,
                name.as_str(),
                "index variable is not bound here",
            )
            .with_span(n.span)),
        },
    }
}

#[derive(Debug, Clone)]
struct TransAst {
    source: NameRef,
    action: NameRef,
    target: NameRef,
}

#[derive(Debug, Clone)]
struct TransferAst {
    component: NameRef,
    partition: NameRef,
    from: NameRef,
    trap: NameRef,
    to: NameRef,
}

#[derive(Debug, Clone)]
pub(crate) struct RuleAst {
    name: NameRef,
    /// Explicit bound from `rule name[i:3]`.
    bound: Option<usize>,
    manager: NameRef,
    step: TransAst,
    transfers: Vec<TransferAst>,
    change: Option<NameRef>,
}

#[derive(Debug, Clone)]
pub(crate) enum ValueAst {
    Int(i64),
    Fragment(FragmentAst),
}

#[derive(Debug, Clone, Default)]
pub(crate) struct FragmentAst {
    /// Everything but rules and variable assignments.
    cs: ChangeSet,
    rules: Vec<RuleAst>,
    sets: Vec<(String, ValueAst, Span)>,
}

#[derive(Debug, Default)]
pub(crate) struct DocAst {
    pub version: Option<u64>,
    pub components: Vec<Component>,
    rules: Vec<RuleAst>,
    vars: Vec<(String, ValueAst, Span)>,
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    pub families: BTreeMap<String, usize>,
    pub spans: BTreeMap<String, Span>,
    /// Non-syntax problems found while parsing (duplicates and the like).
    pub errors: Vec<Diagnostic>,
}

impl Parser {
    pub fn new(toks: Vec<Token>, families: BTreeMap<String, usize>) -> Self {
        Parser {
            toks,
            pos: 0,
            families,
            spans: BTreeMap::new(),
            errors: Vec::new(),
        }
    }

    pub(super) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(super) fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    pub(super) fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub(super) fn unexpected(&self, what: &str) -> Diagnostic {
        Diagnostic::new(
            K::Syntax,
            "input",
            "",
            format!("expected {what}, found {}", self.peek()),
        )
        .with_span(self.span())
    }

    pub(super) fn expect(&mut self, tok: Tok) -> PResult<Span> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    pub(super) fn eat(&mut self, tok: Tok) -> bool {
        if *self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(super) fn keyword(&mut self, kw: &str) -> PResult<Span> {
        if self.at_kw(kw) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub(super) fn ident(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.bump().span)),
            _ => Err(self.unexpected(what)),
        }
    }

    pub(super) fn int(&mut self) -> PResult<i64> {
        let neg = self.eat(Tok::Minus);
        match *self.peek() {
            Tok::Int(n) => {
                self.bump();
                Ok(if neg { -n } else { n })
            }
            _ => Err(self.unexpected("an integer")),
        }
    }

    fn duplicate(&mut self, owner: &str, element: &str, span: Span) {
        self.errors.push(
            Diagnostic::new(K::DuplicateName, owner, element, "declared more than once").with_span(span),
        );
    }

    fn name_ref(&mut self, what: &str) -> PResult<NameRef> {
        let (base, mut span) = self.ident(what)?;
        let mut index = None;
        if self.eat(Tok::LBracket) {
            index = Some(match self.peek().clone() {
                Tok::Int(n) => {
                    self.bump();
                    Index::Lit(n)
                }
                Tok::Ident(name) => {
                    self.bump();
                    // `int` takes the minus sign itself.
                    let offset = if self.eat(Tok::Plus) || *self.peek() == Tok::Minus {
                        self.int()?
                    } else {
                        0
                    };
                    Index::Var { name, offset }
                }
                _ => return Err(self.unexpected("an index")),
            });
            span.end = self.expect(Tok::RBracket)?.end;
        }
        Ok(NameRef { base, index, span })
    }

    /// A name with at most a literal index, resolved on the spot.
    pub(super) fn name(&mut self, what: &str) -> PResult<(String, Span)> {
        let n = self.name_ref(what)?;
        Ok((resolve(&n, None)?, n.span))
    }

    fn name_list(&mut self) -> PResult<Vec<(String, Span)>> {
        let mut out = Vec::new();
        if matches!(self.peek(), Tok::Semi | Tok::RBrace) {
            return Ok(out);
        }
        loop {
            out.push(self.name("a name")?);
            if !self.eat(Tok::Comma) {
                return Ok(out);
            }
        }
    }

    fn trans_ast(&mut self) -> PResult<TransAst> {
        let source = self.name_ref("a source state")?;
        self.expect(Tok::Minus)?;
        let action = self.name_ref("an action")?;
        self.expect(Tok::Arrow)?;
        let target = self.name_ref("a target state")?;
        Ok(TransAst { source, action, target })
    }

    fn transition(&mut self) -> PResult<(Transition, Span)> {
        let t = self.trans_ast()?;
        let mut span = t.source.span;
        span.end = t.target.span.end;
        Ok((lower_trans(&t, None)?, span))
    }

    fn trans_list(&mut self) -> PResult<Vec<(Transition, Span)>> {
        let mut out = Vec::new();
        if *self.peek() == Tok::Semi {
            return Ok(out);
        }
        loop {
            out.push(self.transition()?);
            if !self.eat(Tok::Comma) {
                return Ok(out);
            }
        }
    }

    // ---- documents ----

    pub fn document(&mut self) -> PResult<DocAst> {
        let mut doc = DocAst::default();
        let mut var_names = BTreeMap::new();
        loop {
            match self.peek().clone() {
                Tok::Eof => return Ok(doc),
                Tok::Ident(kw) if kw == "version" => {
                    let span = self.bump().span;
                    let n = self.int()?;
                    if n < 0 {
                        return Err(Diagnostic::new(K::Syntax, "version", n.to_string(), "negative version")
                            .with_span(span));
                    }
                    if doc.version.is_some() {
                        self.duplicate("version", "", span);
                    }
                    doc.version = Some(n as u64);
                    self.expect(Tok::Semi)?;
                }
                Tok::Ident(kw) if kw == "component" => {
                    doc.components.extend(self.component_decl()?);
                }
                Tok::Ident(kw) if kw == "rule" => {
                    self.bump();
                    doc.rules.push(self.rule_body()?);
                }
                Tok::Ident(kw) if kw == "var" => {
                    self.bump();
                    let (name, span) = self.ident("a variable name")?;
                    self.expect(Tok::Eq)?;
                    let value = self.value()?;
                    self.expect(Tok::Semi)?;
                    if var_names.insert(name.clone(), span).is_some() {
                        self.duplicate(&format!("var {name}"), "", span);
                    }
                    self.spans.insert(format!("var {name}"), span);
                    doc.vars.push((name, value, span));
                }
                _ => return Err(self.unexpected("`component`, `rule`, `var` or `version`")),
            }
        }
    }

    /// `component Name[n]? { ... }`; a family yields `n` copies.
    fn component_decl(&mut self) -> PResult<Vec<Component>> {
        self.keyword("component")?;
        let (base, span) = self.ident("a component name")?;
        let family = if self.eat(Tok::LBracket) {
            let n = self.int()?;
            self.expect(Tok::RBracket)?;
            if n < 1 {
                return Err(Diagnostic::new(K::Syntax, &base, n.to_string(), "family size must be positive")
                    .with_span(span));
            }
            Some(n as usize)
        } else {
            None
        };
        let names: Vec<String> = match family {
            None => vec![base.clone()],
            Some(n) => {
                self.families.insert(base.clone(), n);
                (1..=n).map(|i| format!("{base}{i}")).collect()
            }
        };
        let start = self.spans.clone();
        let template = self.component_body(&names[0], span)?;
        // Copy the spans recorded for the first member onto its siblings.
        let recorded: Vec<(String, Span)> = self
            .spans
            .iter()
            .filter(|(k, _)| !start.contains_key(*k))
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        let mut out = vec![template.clone()];
        for name in &names[1..] {
            let mut c = template.clone();
            c.std.name = name.clone();
            for (k, v) in &recorded {
                let rest = k.strip_prefix(names[0].as_str()).unwrap_or("");
                self.spans.insert(format!("{name}{rest}"), *v);
            }
            out.push(c);
        }
        Ok(out)
    }

    fn component_body(&mut self, name: &str, span: Span) -> PResult<Component> {
        self.spans.insert(name.to_string(), span);
        self.expect(Tok::LBrace)?;
        self.keyword("states")?;
        self.expect(Tok::Colon)?;
        let states = self.name_list()?;
        self.expect(Tok::Semi)?;
        self.keyword("initial")?;
        self.expect(Tok::Colon)?;
        let (initial, _) = self.name("an initial state")?;
        self.expect(Tok::Semi)?;
        let mut std = Std::new(name, initial);
        for (s, sp) in states {
            if !std.states.insert(s.clone()) {
                self.duplicate(name, &s, sp);
            }
        }
        self.keyword("transitions")?;
        self.expect(Tok::Colon)?;
        while !self.at_kw("partition") && *self.peek() != Tok::RBrace {
            let (t, sp) = self.transition()?;
            self.expect(Tok::Semi)?;
            if !std.transitions.insert(t.clone()) {
                self.duplicate(name, &t.to_string(), sp);
            }
        }
        let mut comp = Component::new(std);
        while self.at_kw("partition") {
            self.bump();
            let (pname, psp) = self.name("a partition name")?;
            let part = self.partition_body(name, &pname, psp)?;
            if comp.partitions.contains_key(&pname) {
                self.duplicate(name, &pname, psp);
            } else {
                comp.partitions.insert(pname, part);
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(comp)
    }

    fn partition_body(&mut self, comp: &str, name: &str, span: Span) -> PResult<Partition> {
        let owner = format!("{comp}.{name}");
        self.spans.insert(owner.clone(), span);
        self.expect(Tok::LBrace)?;
        self.keyword("initial")?;
        self.expect(Tok::Colon)?;
        let (initial, _) = self.name("an initial phase")?;
        self.expect(Tok::Semi)?;
        let mut part = Partition::new(name, initial);
        while self.at_kw("phase") {
            self.bump();
            let (ph, sp) = self.name("a phase name")?;
            let phase = self.phase_body(&owner, &ph, sp)?;
            if part.phases.contains_key(&ph) {
                self.duplicate(&owner, &ph, sp);
            } else {
                part.phases.insert(ph, phase);
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(part)
    }

    fn phase_body(&mut self, part_owner: &str, name: &str, span: Span) -> PResult<Phase> {
        let owner = format!("{part_owner}.{name}");
        self.spans.insert(owner.clone(), span);
        self.expect(Tok::LBrace)?;
        self.keyword("states")?;
        self.expect(Tok::Colon)?;
        let states = self.name_list()?;
        self.expect(Tok::Semi)?;
        self.keyword("transitions")?;
        self.expect(Tok::Colon)?;
        let transitions = self.trans_list()?;
        self.expect(Tok::Semi)?;
        let mut phase = Phase::new(name);
        for (s, sp) in states {
            if !phase.states.insert(s.clone()) {
                self.duplicate(&owner, &s, sp);
            }
        }
        for (t, sp) in transitions {
            if !phase.transitions.insert(t.clone()) {
                self.duplicate(&owner, &t.to_string(), sp);
            }
        }
        while self.at_kw("trap") {
            self.bump();
            let (tname, tsp) = self.name("a trap name")?;
            let trap = self.trap_body(&owner, &tname, tsp)?;
            if phase.traps.contains_key(&tname) {
                self.duplicate(&owner, &tname, tsp);
            } else {
                phase.traps.insert(tname, trap);
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(phase)
    }

    fn trap_body(&mut self, phase_owner: &str, name: &str, span: Span) -> PResult<Trap> {
        let owner = format!("{phase_owner}.{name}");
        self.spans.insert(owner.clone(), span);
        self.expect(Tok::LBrace)?;
        let states = self.name_list()?;
        self.expect(Tok::RBrace)?;
        let mut trap = Trap::new(name, Vec::<String>::new());
        for (s, sp) in states {
            if !trap.states.insert(s.clone()) {
                self.duplicate(&owner, &s, sp);
            }
        }
        Ok(trap)
    }

    /// Everything after the `rule` keyword, up to and including `;`.
    fn rule_body(&mut self) -> PResult<RuleAst> {
        let (base, mut span) = self.ident("a rule name")?;
        let mut index = None;
        let mut bound = None;
        if self.eat(Tok::LBracket) {
            let (var, _) = self.ident("an index variable")?;
            if self.eat(Tok::Colon) {
                let n = self.int()?;
                if n < 1 {
                    return Err(self.unexpected("a positive bound"));
                }
                bound = Some(n as usize);
            }
            span.end = self.expect(Tok::RBracket)?.end;
            index = Some(Index::Var { name: var, offset: 0 });
        }
        let name = NameRef { base, index, span };
        self.expect(Tok::Colon)?;
        let manager = self.name_ref("a manager component")?;
        self.expect(Tok::Colon)?;
        let step = self.trans_ast()?;
        let mut transfers = Vec::new();
        while self.eat(Tok::Star) {
            let component = self.name_ref("a component")?;
            self.expect(Tok::LParen)?;
            let partition = self.name_ref("a partition")?;
            self.expect(Tok::RParen)?;
            self.expect(Tok::Colon)?;
            let from = self.name_ref("a source phase")?;
            self.expect(Tok::Minus)?;
            let trap = self.name_ref("a trap")?;
            self.expect(Tok::Arrow)?;
            let to = self.name_ref("a target phase")?;
            transfers.push(TransferAst { component, partition, from, trap, to });
        }
        let change = if self.at_kw("with") {
            self.bump();
            Some(self.name_ref("a variable")?)
        } else {
            None
        };
        self.expect(Tok::Semi)?;
        Ok(RuleAst { name, bound, manager, step, transfers, change })
    }

    fn value(&mut self) -> PResult<ValueAst> {
        if *self.peek() == Tok::LBrace {
            self.bump();
            let frag = self.fragment_items(Tok::RBrace)?;
            self.expect(Tok::RBrace)?;
            Ok(ValueAst::Fragment(frag))
        } else {
            Ok(ValueAst::Int(self.int()?))
        }
    }

    fn dotted(&mut self, n: usize, what: &str) -> PResult<(Vec<String>, Span)> {
        let (first, mut span) = self.name(what)?;
        let mut parts = vec![first];
        for _ in 1..n {
            self.expect(Tok::Dot)?;
            let (p, sp) = self.name(what)?;
            span.end = sp.end;
            parts.push(p);
        }
        Ok((parts, span))
    }

    /// Change-set items up to (not including) `end`.
    pub fn fragment_items(&mut self, end: Tok) -> PResult<FragmentAst> {
        let mut f = FragmentAst::default();
        while *self.peek() != end {
            let (kw, kw_span) = self.ident("`add`, `remove`, `set` or `initial`")?;
            match kw.as_str() {
                "add" => self.add_item(&mut f)?,
                "remove" => self.remove_item(&mut f)?,
                "set" => {
                    let (name, span) = self.ident("a variable name")?;
                    self.expect(Tok::Eq)?;
                    let v = self.value()?;
                    self.expect(Tok::Semi)?;
                    if f.sets.iter().any(|(n, _, _)| *n == name) {
                        self.duplicate(&format!("var {name}"), "", span);
                    } else {
                        f.sets.push((name, v, span));
                    }
                }
                "initial" => {
                    let (comp, _) = self.name("a component")?;
                    let partition = if self.eat(Tok::Dot) {
                        Some(self.name("a partition")?.0)
                    } else {
                        None
                    };
                    self.expect(Tok::Eq)?;
                    let (name, _) = self.name("a state or phase")?;
                    self.expect(Tok::Semi)?;
                    f.cs.set_initials.insert(InitialRef { component: comp, partition, name });
                }
                _ => {
                    return Err(Diagnostic::new(
                        K::Syntax,
                        "input",
                        kw,
                        "expected `add`, `remove`, `set` or `initial`",
                    )
                    .with_span(kw_span))
                }
            }
        }
        Ok(f)
    }

    fn add_item(&mut self, f: &mut FragmentAst) -> PResult<()> {
        let (what, span) = self.ident("an element kind")?;
        match what.as_str() {
            "component" => {
                // Re-read the keyword through the ordinary declaration path.
                self.pos -= 1;
                for c in self.component_decl()? {
                    let name = c.name().to_string();
                    if f.cs.add_components.insert(name.clone(), c).is_some() {
                        self.duplicate(&name, "", span);
                    }
                }
            }
            "state" => {
                let (p, _) = self.dotted(2, "a state path")?;
                self.expect(Tok::Semi)?;
                f.cs.add_states.insert((p[0].clone(), p[1].clone()));
            }
            "transition" => {
                let (comp, _) = self.name("a component")?;
                self.expect(Tok::Colon)?;
                let (t, _) = self.transition()?;
                self.expect(Tok::Semi)?;
                f.cs.add_transitions.insert((comp, t));
            }
            "partition" => {
                let (p, sp) = self.dotted(2, "a partition path")?;
                let part = self.partition_body(&p[0], &p[1], sp)?;
                f.cs.add_partitions.insert((p[0].clone(), part));
            }
            "phase" => {
                let (p, sp) = self.dotted(3, "a phase path")?;
                let phase = self.phase_body(&format!("{}.{}", p[0], p[1]), &p[2], sp)?;
                f.cs.add_phases.insert((p[0].clone(), p[1].clone(), phase));
            }
            "trap" => {
                let (p, sp) = self.dotted(4, "a trap path")?;
                let trap = self.trap_body(&format!("{}.{}.{}", p[0], p[1], p[2]), &p[3], sp)?;
                f.cs.add_traps.insert((p[0].clone(), p[1].clone(), p[2].clone(), trap));
            }
            "rule" => f.rules.push(self.rule_body()?),
            _ => {
                return Err(Diagnostic::new(K::Syntax, "input", what, "unknown element kind after `add`")
                    .with_span(span))
            }
        }
        Ok(())
    }

    fn remove_item(&mut self, f: &mut FragmentAst) -> PResult<()> {
        let (what, span) = self.ident("an element kind")?;
        let cs = &mut f.cs;
        match what.as_str() {
            "rule" => {
                let (name, _) = self.name("a rule name")?;
                cs.remove_rules.insert(name);
            }
            "state" => {
                let (p, _) = self.dotted(2, "a state path")?;
                cs.remove_states.insert((p[0].clone(), p[1].clone()));
            }
            "transition" => {
                let (comp, _) = self.name("a component")?;
                self.expect(Tok::Colon)?;
                let (t, _) = self.transition()?;
                cs.remove_transitions.insert((comp, t));
            }
            "partition" => {
                let (p, _) = self.dotted(2, "a partition path")?;
                cs.remove_partitions.insert((p[0].clone(), p[1].clone()));
            }
            "phase" => {
                let (p, _) = self.dotted(3, "a phase path")?;
                cs.remove_phases.insert((p[0].clone(), p[1].clone(), p[2].clone()));
            }
            "trap" => {
                let (p, _) = self.dotted(4, "a trap path")?;
                cs.remove_traps
                    .insert((p[0].clone(), p[1].clone(), p[2].clone(), p[3].clone()));
            }
            _ => {
                return Err(Diagnostic::new(K::Syntax, "input", what, "unknown element kind after `remove`")
                    .with_span(span))
            }
        }
        self.expect(Tok::Semi)?;
        Ok(())
    }

    pub fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub fn expect_eof(&self) -> PResult<()> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }
}

fn lower_trans(t: &TransAst, env: Option<Binding<'_>>) -> PResult<Transition> {
    Ok(Transition::new(
        resolve(&t.source, env)?,
        resolve(&t.action, env)?,
        resolve(&t.target, env)?,
    ))
}

fn rule_var(rule: &RuleAst) -> Option<&str> {
    match &rule.name.index {
        Some(Index::Var { name, .. }) => Some(name),
        _ => None,
    }
}

/// Instantiates a rule template once per index value.
fn expand_rule(rule: &RuleAst, families: &BTreeMap<String, usize>) -> PResult<Vec<ConsistencyRule>> {
    let lower = |env: Option<Binding<'_>>| -> PResult<ConsistencyRule> {
        let mut transfers = Vec::new();
        for t in &rule.transfers {
            transfers.push(Transfer::new(
                resolve(&t.component, env)?,
                resolve(&t.partition, env)?,
                resolve(&t.from, env)?,
                resolve(&t.trap, env)?,
                resolve(&t.to, env)?,
            ));
        }
        Ok(ConsistencyRule {
            name: resolve(&rule.name, env)?,
            manager: resolve(&rule.manager, env)?,
            step: lower_trans(&rule.step, env)?,
            transfers,
            change: rule.change.as_ref().map(|c| resolve(c, env)).transpose()?,
        })
    };
    let Some(var) = rule_var(rule) else {
        return Ok(vec![lower(None)?]);
    };
    let bound = match rule.bound {
        Some(b) => b,
        None => {
            let candidates = std::iter::once(&rule.manager).chain(rule.transfers.iter().map(|t| &t.component));
            let inferred = candidates
                .filter(|n| n.uses_var(var))
                .find_map(|n| families.get(&n.base).copied());
            match inferred {
                Some(b) => b,
                None => {
                    return Err(Diagnostic::new(
                        K::UnboundIndex,
                        format!("rule {}", rule.name.base),
                        var,
                        "no component family gives this index a bound",
                    )
                    .with_span(rule.name.span))
                }
            }
        }
    };
    (1..=bound as i64)
        .map(|value| lower(Some(Binding { var, value, bound })))
        .collect()
}

/// Lowers a fragment, expanding its rules against `families`.
pub(crate) fn lower_fragment(
    f: &FragmentAst,
    families: &BTreeMap<String, usize>,
    spans: &mut BTreeMap<String, Span>,
    errors: &mut Vec<Diagnostic>,
) -> ChangeSet {
    let mut cs = f.cs.clone();
    for rule in &f.rules {
        match expand_rule(rule, families) {
            Err(d) => errors.push(d),
            Ok(rules) => {
                for r in rules {
                    let owner = format!("rule {}", r.name);
                    if cs.add_rules.contains_key(&r.name) {
                        errors.push(
                            Diagnostic::new(K::DuplicateName, &owner, "", "declared more than once")
                                .with_span(rule.name.span),
                        );
                    } else {
                        spans.entry(owner).or_insert(rule.name.span);
                        cs.add_rules.insert(r.name.clone(), r);
                    }
                }
            }
        }
    }
    for (name, v, _) in &f.sets {
        cs.set_variables
            .insert(name.clone(), lower_value(v, families, spans, errors));
    }
    cs
}

pub(crate) fn lower_value(
    v: &ValueAst,
    families: &BTreeMap<String, usize>,
    spans: &mut BTreeMap<String, Span>,
    errors: &mut Vec<Diagnostic>,
) -> Value {
    match v {
        ValueAst::Int(n) => Value::Int(*n),
        ValueAst::Fragment(f) => Value::Fragment(Box::new(lower_fragment(f, families, spans, errors))),
    }
}

/// Lowered top-level document.
pub(crate) struct Lowered {
    pub components: Vec<Component>,
    pub rules: Vec<(ConsistencyRule, Span)>,
    pub vars: Vec<(String, Value, Span)>,
}

pub(crate) fn lower_document(
    doc: &DocAst,
    families: &BTreeMap<String, usize>,
    spans: &mut BTreeMap<String, Span>,
    errors: &mut Vec<Diagnostic>,
) -> Lowered {
    let mut rules = Vec::new();
    for rule in &doc.rules {
        match expand_rule(rule, families) {
            Err(d) => errors.push(d),
            Ok(rs) => rules.extend(rs.into_iter().map(|r| (r, rule.name.span))),
        }
    }
    let vars = doc
        .vars
        .iter()
        .map(|(n, v, sp)| (n.clone(), lower_value(v, families, spans, errors), *sp))
        .collect();
    Lowered {
        components: doc.components.clone(),
        rules,
        vars,
    }
}
