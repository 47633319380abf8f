//! Explicit-state exploration across model versions.
//!
//! The state space is built breadth first, one level at a time. Successors
//! of a level may be computed on several threads, but they are merged in
//! frontier order on one thread, so state numbering, edges and every
//! derived report are identical whatever the thread count.
//!
//! A state is a configuration together with the model it runs under.
//! Models are interned by structure; configurations carry the version
//! stamp, so equal configurations under different versions stay apart.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use fnv::{FnvHashMap, FnvHasher};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value as Json;

use crate::dsl::{Pred, Property, PropertyExpr};
use crate::engine::{Engine, StepLabel, Trace, TraceStep};
use crate::evolution::{migration_complete, McPalSkeleton};
use crate::model::{Configuration, StdModel};
use crate::validate::validate_configuration;

pub const DEFAULT_MAX_STATES: usize = 1_000_000;
pub const DEFAULT_MAX_DEPTH: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub max_states: usize,
    pub max_depth: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_states: DEFAULT_MAX_STATES,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

type StateId = u32;

#[derive(Debug, Clone)]
struct Node {
    model: u32,
    config: Configuration,
    depth: u32,
    /// BFS tree edge: predecessor and label id.
    parent: Option<(StateId, u32)>,
    expanded: bool,
}

/// The explored graph.
#[derive(Debug, Clone)]
pub struct StateSpace {
    models: Vec<Arc<StdModel>>,
    nodes: Vec<Node>,
    labels: Vec<StepLabel>,
    /// Outgoing `(label, target)` per state, in successor order.
    edges: Vec<Vec<(u32, StateId)>>,
    pub max_states_hit: bool,
    pub max_depth_hit: bool,
    /// States whose configuration failed validation.
    pub inconsistent: Vec<StateId>,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn transition_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn is_complete(&self) -> bool {
        !self.max_states_hit && !self.max_depth_hit
    }

    pub fn config(&self, s: usize) -> &Configuration {
        &self.nodes[s].config
    }

    pub fn model(&self, s: usize) -> &Arc<StdModel> {
        &self.models[self.nodes[s].model as usize]
    }

    pub fn depth(&self, s: usize) -> usize {
        self.nodes[s].depth as usize
    }

    pub fn is_expanded(&self, s: usize) -> bool {
        self.nodes[s].expanded
    }

    /// Successors as `(label, target)`.
    pub fn successors(&self, s: usize) -> impl Iterator<Item = (&StepLabel, usize)> + '_ {
        self.edges[s]
            .iter()
            .map(|&(l, t)| (&self.labels[l as usize], t as usize))
    }

    pub fn model_versions(&self) -> BTreeSet<u64> {
        self.nodes.iter().map(|n| n.config.model_version).collect()
    }

    /// Expanded states without successors.
    pub fn deadlocks(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&s| self.nodes[s].expanded && self.edges[s].is_empty())
            .collect()
    }

    pub fn holds(&self, s: usize, pred: &Pred) -> bool {
        pred.eval(self.model(s), self.config(s))
    }

    /// Every state in discovery order, which is non-decreasing depth.
    pub fn states(&self) -> impl Iterator<Item = (&StdModel, &Configuration)> + '_ {
        self.nodes
            .iter()
            .map(|n| (self.models[n.model as usize].as_ref(), &n.config))
    }

    /// The BFS-shortest trace from the initial state to `s`.
    pub fn trace_to(&self, s: usize) -> Trace {
        let mut path = Vec::new();
        let mut cur = s as StateId;
        while let Some((p, l)) = self.nodes[cur as usize].parent {
            path.push((l, cur));
            cur = p;
        }
        path.reverse();
        self.trace_along(&path, None)
    }

    fn trace_along(&self, path: &[(u32, StateId)], loop_start: Option<usize>) -> Trace {
        let steps: Vec<TraceStep> = path
            .iter()
            .map(|&(l, t)| {
                let config = self.nodes[t as usize].config.clone();
                TraceStep {
                    label: self.labels[l as usize].clone(),
                    digest: config.digest(),
                    config,
                }
            })
            .collect();
        let last = path.last().map(|&(_, t)| t as usize).unwrap_or(0);
        Trace {
            initial: self.nodes[0].config.clone(),
            steps,
            final_version: self.model(last).version,
            loop_start,
        }
    }

    fn reverse_edges(&self) -> Vec<Vec<StateId>> {
        let mut rev = vec![Vec::new(); self.len()];
        for (s, out) in self.edges.iter().enumerate() {
            for &(_, t) in out {
                rev[t as usize].push(s as StateId);
            }
        }
        rev
    }

    /// Shortest number of steps from each state to a state in `targets`
    /// (targets at distance 0), moving only out of states `through` allows.
    fn distances_to(&self, targets: &[bool], through: &dyn Fn(usize) -> bool) -> Vec<Option<u32>> {
        let rev = self.reverse_edges();
        let mut dist = vec![None; self.len()];
        let mut queue = VecDeque::new();
        for (s, &t) in targets.iter().enumerate() {
            if t {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            let d = dist[s].unwrap_or(0);
            for &p in &rev[s] {
                let p = p as usize;
                if dist[p].is_none() && through(p) {
                    dist[p] = Some(d + 1);
                    queue.push_back(p);
                }
            }
        }
        dist
    }

    /// BFS from the initial state that does not continue out of states for
    /// which `stop` holds. Returns the visit order and tree parents.
    fn restricted_bfs(&self, stop: &dyn Fn(usize) -> bool) -> (Vec<usize>, Vec<Option<(StateId, u32)>>) {
        let mut parent = vec![None; self.len()];
        let mut seen = vec![false; self.len()];
        let mut order = Vec::new();
        if self.is_empty() {
            return (order, parent);
        }
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(s) = queue.pop_front() {
            order.push(s);
            if stop(s) {
                continue;
            }
            for &(l, t) in &self.edges[s] {
                let t = t as usize;
                if !seen[t] {
                    seen[t] = true;
                    parent[t] = Some((s as StateId, l));
                    queue.push_back(t);
                }
            }
        }
        (order, parent)
    }

    fn path_with(&self, parent: &[Option<(StateId, u32)>], s: usize) -> Vec<(u32, StateId)> {
        let mut path = Vec::new();
        let mut cur = s;
        while let Some((p, l)) = parent[cur] {
            path.push((l, cur as StateId));
            cur = p as usize;
        }
        path.reverse();
        path
    }
}

/// Breadth-first state-space construction.
#[derive(Debug, Clone, Copy)]
pub struct Explorer {
    pub bounds: Bounds,
    /// `1` runs on the calling thread; `0` uses rayon's default pool.
    pub threads: usize,
    pub engine: Engine,
}

impl Default for Explorer {
    fn default() -> Self {
        Explorer {
            bounds: Bounds::default(),
            threads: 1,
            engine: Engine::default(),
        }
    }
}

fn model_hash(m: &StdModel) -> u64 {
    let mut h = FnvHasher::default();
    m.hash(&mut h);
    h.finish()
}

fn state_key(model: u32, config: &Configuration) -> u64 {
    config.digest() ^ (u64::from(model)).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

impl Explorer {
    pub fn new(bounds: Bounds) -> Self {
        Explorer { bounds, ..Explorer::default() }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn build(&self, model: &Arc<StdModel>, initial: &Configuration) -> StateSpace {
        match self.threads {
            1 => self.build_with(model, initial, false),
            0 => self.build_with(model, initial, true),
            n => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(|| self.build_with(model, initial, true)),
                Err(_) => self.build_with(model, initial, false),
            },
        }
    }

    fn build_with(&self, model: &Arc<StdModel>, initial: &Configuration, parallel: bool) -> StateSpace {
        let mut space = StateSpace {
            models: vec![Arc::clone(model)],
            nodes: Vec::new(),
            labels: Vec::new(),
            edges: Vec::new(),
            max_states_hit: false,
            max_depth_hit: false,
            inconsistent: Vec::new(),
        };
        let mut model_index: FnvHashMap<u64, Vec<u32>> = FnvHashMap::default();
        model_index.insert(model_hash(model), vec![0]);
        let mut label_index: HashMap<StepLabel, u32> = HashMap::new();
        let mut seen: FnvHashMap<u64, Vec<StateId>> = FnvHashMap::default();

        let add_state = |space: &mut StateSpace,
                             seen: &mut FnvHashMap<u64, Vec<StateId>>,
                             m: u32,
                             config: Configuration,
                             depth: u32,
                             parent: Option<(StateId, u32)>|
         -> Option<StateId> {
            let key = state_key(m, &config);
            let bucket = seen.entry(key).or_default();
            for &s in bucket.iter() {
                let n = &space.nodes[s as usize];
                if n.model == m && n.config == config {
                    return Some(s);
                }
            }
            if space.nodes.len() >= self.bounds.max_states {
                space.max_states_hit = true;
                return None;
            }
            let id = space.nodes.len() as StateId;
            let valid = matches!(
                validate_configuration(&space.models[m as usize], &config),
                Ok(d) if d.is_empty()
            );
            if !valid {
                space.inconsistent.push(id);
            }
            bucket.push(id);
            space.nodes.push(Node { model: m, config, depth, parent, expanded: false });
            space.edges.push(Vec::new());
            Some(id)
        };

        add_state(&mut space, &mut seen, 0, initial.clone(), 0, None);
        let mut frontier: Vec<StateId> = vec![0];
        let mut depth = 0usize;
        while !frontier.is_empty() {
            if depth >= self.bounds.max_depth {
                space.max_depth_hit = true;
                break;
            }
            let engine = self.engine;
            let expand = |&s: &StateId| {
                let n = &space.nodes[s as usize];
                engine.successors(&space.models[n.model as usize], &n.config)
            };
            let succs: Vec<_> = if parallel {
                frontier.par_iter().map(expand).collect()
            } else {
                frontier.iter().map(expand).collect()
            };
            let mut next = Vec::new();
            for (&s, out) in frontier.iter().zip(succs) {
                space.nodes[s as usize].expanded = true;
                let parent_model = space.nodes[s as usize].model;
                for succ in out {
                    let m = if Arc::ptr_eq(&succ.model, &space.models[parent_model as usize]) {
                        parent_model
                    } else {
                        let h = model_hash(&succ.model);
                        let bucket = model_index.entry(h).or_default();
                        match bucket.iter().find(|&&i| *space.models[i as usize] == *succ.model) {
                            Some(&i) => i,
                            None => {
                                let i = space.models.len() as u32;
                                space.models.push(succ.model);
                                bucket.push(i);
                                i
                            }
                        }
                    };
                    let l = *label_index.entry(succ.label.clone()).or_insert_with(|| {
                        space.labels.push(succ.label);
                        (space.labels.len() - 1) as u32
                    });
                    let before = space.nodes.len();
                    let Some(t) = add_state(&mut space, &mut seen, m, succ.config, depth as u32 + 1, Some((s, l)))
                    else {
                        // Dropped at the state bound: the node's successor set is partial.
                        space.nodes[s as usize].expanded = false;
                        continue;
                    };
                    space.edges[s as usize].push((l, t));
                    if space.nodes.len() > before {
                        next.push(t);
                    }
                }
            }
            frontier = next;
            depth += 1;
        }
        space
    }
}

/// Result of checking one property.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    /// `None` when there is nothing to show, e.g. an unreachable target.
    Violated(Option<Trace>),
    /// The bounds were hit before the question was settled.
    Unknown,
}

impl Verdict {
    fn tag(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Violated(_) => "violated",
            Verdict::Unknown => "unknown",
        }
    }
}

/// Outcome of a termination check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Termination {
    /// Every state reachable before completion can still complete; the
    /// payload is the longest of the shortest completions.
    Terminates { max_depth: usize },
    /// A deadlock before completion.
    Stuck(Trace),
    /// A reachable region from which completion is impossible, shown as a
    /// lasso.
    Cycle(Trace),
    Unknown { max_depth: Option<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Progress {
    /// `minimal_k` is the smallest bound that holds.
    Satisfied { minimal_k: usize },
    /// The smallest sufficient bound exceeds the requested one.
    TooSlow { minimal_k: usize, state: Trace },
    /// The component can never step again from the end of the trace.
    Starved(Trace),
    Unknown,
}

fn invariant_on(space: &StateSpace, pred: &Pred) -> Verdict {
    match (0..space.len()).find(|&s| !space.holds(s, pred)) {
        Some(s) => Verdict::Violated(Some(space.trace_to(s))),
        None if space.is_complete() => Verdict::Holds,
        None => Verdict::Unknown,
    }
}

fn reachable_on(space: &StateSpace, pred: &Pred) -> (Verdict, Option<Trace>) {
    match (0..space.len()).find(|&s| space.holds(s, pred)) {
        Some(s) => (Verdict::Holds, Some(space.trace_to(s))),
        None if space.is_complete() => (Verdict::Violated(None), None),
        None => (Verdict::Unknown, None),
    }
}

/// Completion analysis for a goal treated as absorbing.
pub fn termination_on(
    space: &StateSpace,
    goal: &dyn Fn(&StdModel, &Configuration) -> bool,
    bound: usize,
) -> Termination {
    let is_goal: Vec<bool> = (0..space.len())
        .map(|s| goal(space.model(s), space.config(s)))
        .collect();
    let (order, parent) = space.restricted_bfs(&|s| is_goal[s]);
    let mut in_region = vec![false; space.len()];
    for &s in &order {
        in_region[s] = true;
    }
    let dist = space.distances_to(&is_goal, &|p| in_region[p] && !is_goal[p]);
    let open = order
        .iter()
        .any(|&s| !is_goal[s] && !space.is_expanded(s));
    let bad: Vec<usize> = order.iter().copied().filter(|&s| dist[s].is_none()).collect();
    let max_depth = order.iter().filter_map(|&s| dist[s]).max().unwrap_or(0) as usize;

    if let Some(&s) = bad.iter().find(|&&s| space.is_expanded(s) && space.edges[s].is_empty()) {
        return Termination::Stuck(space.trace_along(&space.path_with(&parent, s), None));
    }
    if open {
        return Termination::Unknown {
            max_depth: bad.is_empty().then_some(max_depth),
        };
    }
    if let Some(&start) = bad.first() {
        let mut path = space.path_with(&parent, start);
        let mut position: HashMap<usize, usize> = HashMap::from([(start, path.len())]);
        let mut cur = start;
        let loop_start = loop {
            let Some(&(l, t)) = space.edges[cur].first() else {
                // Unreachable: a successor-free bad state is reported as stuck.
                break None;
            };
            path.push((l, t));
            cur = t as usize;
            if let Some(&p) = position.get(&cur) {
                break Some(p);
            }
            position.insert(cur, path.len());
        };
        return Termination::Cycle(space.trace_along(&path, loop_start));
    }
    if max_depth > bound {
        return Termination::Unknown { max_depth: Some(max_depth) };
    }
    Termination::Terminates { max_depth }
}

/// Bounded non-starvation of `component` over the states where `scope` holds.
pub fn progress_on(space: &StateSpace, component: &str, k: usize, scope: Option<&Pred>) -> Progress {
    let active: Vec<bool> = (0..space.len())
        .map(|s| space.successors(s).any(|(l, _)| l.actor() == component))
        .collect();
    // Distance 0 marks a state with an active edge; the step itself adds one.
    let dist = space.distances_to(&active, &|_| true);
    let in_scope = |s: usize| scope.is_none_or(|p| space.holds(s, p));
    let mut worst: Option<(usize, usize)> = None;
    for s in (0..space.len()).filter(|&s| in_scope(s)) {
        match dist[s] {
            None if space.is_complete() => return Progress::Starved(space.trace_to(s)),
            None => return Progress::Unknown,
            Some(d) => {
                let d = d as usize + 1;
                if worst.is_none_or(|(w, _)| d > w) {
                    worst = Some((d, s));
                }
            }
        }
    }
    if !space.is_complete() {
        return Progress::Unknown;
    }
    match worst {
        None => Progress::Satisfied { minimal_k: 0 },
        Some((d, _)) if d <= k => Progress::Satisfied { minimal_k: d },
        Some((d, s)) => Progress::TooSlow { minimal_k: d, state: space.trace_to(s) },
    }
}

pub fn check_invariant(model: &Arc<StdModel>, initial: &Configuration, pred: &Pred, bounds: Bounds) -> Verdict {
    invariant_on(&Explorer::new(bounds).build(model, initial), pred)
}

pub fn shortest_trace_to(model: &Arc<StdModel>, initial: &Configuration, pred: &Pred, bounds: Bounds) -> Option<Trace> {
    reachable_on(&Explorer::new(bounds).build(model, initial), pred).1
}

/// Completion of a McPal-coordinated migration: the target version reached
/// with McPal hibernating again.
pub fn check_migration_termination(
    model: &Arc<StdModel>,
    initial: &Configuration,
    target_version: u64,
    bound: usize,
) -> Termination {
    let skeleton = McPalSkeleton::default();
    let goal = migration_complete(&skeleton, target_version);
    let space = Explorer::default().build(model, initial);
    termination_on(&space, &goal, bound)
}

pub fn check_progress(
    model: &Arc<StdModel>,
    initial: &Configuration,
    component: &str,
    k: usize,
    bounds: Bounds,
) -> Progress {
    progress_on(&Explorer::new(bounds).build(model, initial), component, k, None)
}

// ---- reports ----

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundsReport {
    pub max_states: usize,
    pub max_depth: usize,
    pub max_states_hit: bool,
    pub max_depth_hit: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PropertyReport {
    pub property: String,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<Json>>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    pub property: String,
    pub trace: Vec<Json>,
    #[serde(skip)]
    pub raw: Option<Trace>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TerminationReport {
    pub target_version: u64,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<Json>>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProgressReport {
    pub component: String,
    pub k: usize,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minimal_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<Json>>,
}

/// Everything one exploration found. Contains no timing, so equal inputs
/// give byte-identical JSON.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExplorationReport {
    pub states_visited: usize,
    pub transitions_visited: usize,
    pub model_versions_seen: BTreeSet<u64>,
    pub inconsistent_states: usize,
    pub bounds: BoundsReport,
    pub properties: Vec<PropertyReport>,
    pub violations: Vec<Violation>,
    pub deadlock_count: usize,
    /// Shortest traces to the first few deadlocks.
    pub deadlocks: Vec<Vec<Json>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub termination: Option<TerminationReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub progress: Vec<ProgressReport>,
}

const REPORTED_DEADLOCKS: usize = 10;

impl ExplorationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn has_violation(&self) -> bool {
        !self.violations.is_empty()
            || self.inconsistent_states > 0
            || self
                .termination
                .as_ref()
                .is_some_and(|t| t.verdict == "stuck" || t.verdict == "cycle")
            || self.progress.iter().any(|p| p.verdict == "starved" || p.verdict == "too-slow")
    }

    pub fn has_unknown(&self) -> bool {
        self.properties.iter().any(|p| p.verdict == "unknown")
            || self.termination.as_ref().is_some_and(|t| t.verdict == "unknown")
            || self.progress.iter().any(|p| p.verdict == "unknown")
    }
}

/// Extra checks run by [`explore_with`].
#[derive(Debug, Clone, Default)]
pub struct Checks {
    /// Target version for migration termination.
    pub termination: Option<u64>,
    /// Bound `k` checked for every component.
    pub progress: Option<usize>,
}

pub fn explore(
    model: &Arc<StdModel>,
    initial: &Configuration,
    properties: &[PropertyExpr],
    bounds: Bounds,
) -> ExplorationReport {
    explore_with(&Explorer::new(bounds), model, initial, properties, &Checks::default())
}

pub fn explore_with(
    explorer: &Explorer,
    model: &Arc<StdModel>,
    initial: &Configuration,
    properties: &[PropertyExpr],
    checks: &Checks,
) -> ExplorationReport {
    let space = explorer.build(model, initial);
    report_on(&space, explorer.bounds, model, properties, checks)
}

pub fn report_on(
    space: &StateSpace,
    bounds: Bounds,
    model: &StdModel,
    properties: &[PropertyExpr],
    checks: &Checks,
) -> ExplorationReport {
    let mut reports = Vec::new();
    let mut violations = Vec::new();
    for p in properties {
        let text = p.property.to_string();
        let (verdict, witness, max_depth) = match &p.property {
            Property::Invariant(pred) => (invariant_on(space, pred), None, None),
            Property::Reachable(pred) => {
                let (v, w) = reachable_on(space, pred);
                (v, w, None)
            }
            Property::EventuallyAll { pred, bound } => {
                let goal = |m: &StdModel, c: &Configuration| pred.eval(m, c);
                match termination_on(space, &goal, *bound as usize) {
                    Termination::Terminates { max_depth } => (Verdict::Holds, None, Some(max_depth)),
                    Termination::Stuck(t) | Termination::Cycle(t) => (Verdict::Violated(Some(t)), None, None),
                    Termination::Unknown { max_depth } => (Verdict::Unknown, None, max_depth),
                }
            }
        };
        if let Verdict::Violated(trace) = &verdict {
            violations.push(Violation {
                property: text.clone(),
                trace: trace.as_ref().map(Trace::to_json_values).unwrap_or_default(),
                raw: trace.clone(),
            });
        }
        let witness = match (&verdict, witness) {
            (Verdict::Violated(Some(t)), _) => Some(t.to_json_values()),
            (_, Some(t)) => Some(t.to_json_values()),
            _ => None,
        };
        reports.push(PropertyReport {
            property: text,
            verdict: verdict.tag().to_string(),
            max_depth,
            witness,
        });
    }
    violations.sort_by(|a, b| {
        let key = |v: &Violation| {
            let labels: Vec<String> = v
                .raw
                .as_ref()
                .map(|t| t.labels().map(ToString::to_string).collect())
                .unwrap_or_default();
            (v.trace.len(), labels, v.property.clone())
        };
        key(a).cmp(&key(b))
    });

    let termination = checks.termination.map(|target| {
        let skeleton = McPalSkeleton::default();
        let goal = migration_complete(&skeleton, target);
        let (verdict, max_depth, trace) = match termination_on(space, &goal, bounds.max_depth) {
            Termination::Terminates { max_depth } => ("terminates", Some(max_depth), None),
            Termination::Stuck(t) => ("stuck", None, Some(t)),
            Termination::Cycle(t) => ("cycle", None, Some(t)),
            Termination::Unknown { max_depth } => ("unknown", max_depth, None),
        };
        TerminationReport {
            target_version: target,
            verdict: verdict.into(),
            max_depth,
            trace: trace.map(|t| t.to_json_values()),
        }
    });

    let components: BTreeSet<&str> = model.components.keys().map(String::as_str).collect();
    let progress = match checks.progress {
        None => Vec::new(),
        Some(k) => components
            .iter()
            .map(|c| {
                let (verdict, minimal_k, trace) = match progress_on(space, c, k, None) {
                    Progress::Satisfied { minimal_k } => ("satisfied", Some(minimal_k), None),
                    Progress::TooSlow { minimal_k, state } => ("too-slow", Some(minimal_k), Some(state)),
                    Progress::Starved(t) => ("starved", None, Some(t)),
                    Progress::Unknown => ("unknown", None, None),
                };
                ProgressReport {
                    component: c.to_string(),
                    k,
                    verdict: verdict.into(),
                    minimal_k,
                    trace: trace.map(|t| t.to_json_values()),
                }
            })
            .collect(),
    };

    let deadlocks = space.deadlocks();
    ExplorationReport {
        states_visited: space.len(),
        transitions_visited: space.transition_count(),
        model_versions_seen: space.model_versions(),
        inconsistent_states: space.inconsistent.len(),
        bounds: BoundsReport {
            max_states: bounds.max_states,
            max_depth: bounds.max_depth,
            max_states_hit: space.max_states_hit,
            max_depth_hit: space.max_depth_hit,
        },
        properties: reports,
        violations,
        deadlock_count: deadlocks.len(),
        deadlocks: deadlocks
            .iter()
            .take(REPORTED_DEADLOCKS)
            .map(|&s| space.trace_to(s).to_json_values())
            .collect(),
        termination,
        progress,
    }
}

/// Restriction of a configuration to the named components and their roles.
pub fn project(config: &Configuration, components: &BTreeSet<String>) -> Configuration {
    Configuration {
        detailed: config
            .detailed
            .iter()
            .filter(|(c, _)| components.contains(*c))
            .map(|(c, s)| (c.clone(), s.clone()))
            .collect(),
        phases: config
            .phases
            .iter()
            .filter(|(r, _)| components.contains(&r.component))
            .map(|(r, p)| (r.clone(), p.clone()))
            .collect(),
        model_version: 0,
    }
}
