#![allow(dead_code)]

use std::sync::Arc;

use paradigm::engine::Engine;
use paradigm::testing::NaiveStep;
use paradigm::{Configuration, StdModel};

/// Engine successors in the oracle's shape.
pub fn engine_steps(model: &Arc<StdModel>, config: &Configuration) -> Vec<NaiveStep> {
    let mut out: Vec<NaiveStep> = Engine::default()
        .successors(model, config)
        .into_iter()
        .map(|s| NaiveStep {
            label: s.label,
            model: (!Arc::ptr_eq(&s.model, model)).then(|| (*s.model).clone()),
            config: s.config,
        })
        .collect();
    out.sort();
    out
}

use std::collections::{BTreeMap, VecDeque};

use paradigm::engine::StepLabel;
use paradigm::testing::naive_successors;

/// The reachable graph built only from the oracle's successor function.
pub struct NaiveGraph {
    pub states: Vec<(StdModel, Configuration)>,
    pub edges: Vec<Vec<(StepLabel, usize)>>,
}

impl NaiveGraph {
    pub fn build(model: &StdModel, config: &Configuration) -> Self {
        let mut index = BTreeMap::new();
        let mut states = vec![(model.clone(), config.clone())];
        let mut edges = Vec::new();
        index.insert(states[0].clone(), 0usize);
        let mut i = 0;
        while i < states.len() {
            let (m, c) = states[i].clone();
            let mut out = Vec::new();
            for s in naive_successors(&m, &c) {
                let key = (s.model.unwrap_or_else(|| m.clone()), s.config);
                let next = index.len();
                let t = *index.entry(key.clone()).or_insert_with(|| {
                    states.push(key);
                    next
                });
                out.push((s.label, t));
            }
            edges.push(out);
            i += 1;
        }
        NaiveGraph { states, edges }
    }

    /// Steps from `s` to the nearest state satisfying `goal`, never leaving a
    /// goal state once reached.
    pub fn distance(&self, s: usize, goal: &dyn Fn(usize) -> bool) -> Option<usize> {
        let mut seen = vec![false; self.states.len()];
        let mut queue = VecDeque::from([(s, 0)]);
        seen[s] = true;
        while let Some((x, d)) = queue.pop_front() {
            if goal(x) {
                return Some(d);
            }
            for (_, t) in &self.edges[x] {
                if !seen[*t] {
                    seen[*t] = true;
                    queue.push_back((*t, d + 1));
                }
            }
        }
        None
    }

    /// States reachable from the start without passing through `stop`.
    pub fn reachable_until(&self, stop: &dyn Fn(usize) -> bool) -> Vec<usize> {
        let mut seen = vec![false; self.states.len()];
        let mut out = Vec::new();
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(x) = queue.pop_front() {
            out.push(x);
            if stop(x) {
                continue;
            }
            for (_, t) in &self.edges[x] {
                if !seen[*t] {
                    seen[*t] = true;
                    queue.push_back(*t);
                }
            }
        }
        out
    }

    /// Longest shortest completion over states reachable before completion.
    pub fn completion_depth(&self, goal: &dyn Fn(usize) -> bool) -> Option<usize> {
        self.reachable_until(goal)
            .into_iter()
            .map(|s| self.distance(s, goal))
            .try_fold(0, |acc, d| d.map(|d| acc.max(d)))
    }

    /// Smallest k such that every state has a path of at most k steps whose
    /// last step is taken by `component`.
    pub fn minimal_progress_bound(&self, component: &str) -> Option<usize> {
        let active = |x: usize| self.edges[x].iter().any(|(l, _)| l.actor() == component);
        (0..self.states.len())
            .map(|s| self.distance(s, &active).map(|d| d + 1))
            .try_fold(0, |acc, d| d.map(|d| acc.max(d)))
    }
}
