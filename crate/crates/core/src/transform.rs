//! Simplification (dropping release, transfer and receive stages) and its
//! inverse, expansion into canonical gate chains.
//!
//! A gate chain leaves a create or process stage through its machine's
//! release and transfer, hops once to another machine's transfer, enters
//! through that machine's receive, and either ends at a create or process
//! stage or relays onward through the receiving machine's release:
//!
//! ```text
//! s -> release -> transfer => transfer -> receive (-> release -> transfer => transfer -> receive)* -> t
//! ```
//!
//! Only walks of this shape are contracted. A transfer stage reached from
//! another machine must hand over to its own receive, so things never
//! relay from one transfer gate straight through to another.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::model::{ActionKind, Flow, ModelBuilder, ModelError, StaticModel, Trigger};
use crate::naming::{natural_cmp, sort_natural};

use ActionKind::{Receive, Release, Transfer};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("gate chain has no surviving endpoint: {}", stages.join(", "))]
    DanglingChain { stages: Vec<String> },
    #[error("model is not simplified; gate stages present: {}", stages.join(", "))]
    NotSimplified { stages: Vec<String> },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Phase {
    Released,
    Outbound,
    Inbound,
    Received,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Node<'a> {
    Gate(&'a str, Phase),
    End(&'a str),
}

struct FlowGraph<'a> {
    model: &'a StaticModel,
    out: HashMap<&'a str, Vec<(usize, &'a str)>>,
    inc: HashMap<&'a str, Vec<(usize, &'a str)>>,
}

impl<'a> FlowGraph<'a> {
    fn new(model: &'a StaticModel) -> Self {
        let mut out: HashMap<&str, Vec<(usize, &str)>> = HashMap::new();
        let mut inc: HashMap<&str, Vec<(usize, &str)>> = HashMap::new();
        for (i, f) in model.flows().iter().enumerate() {
            out.entry(&f.source).or_default().push((i, &f.target));
            inc.entry(&f.target).or_default().push((i, &f.source));
        }
        FlowGraph { model, out, inc }
    }

    fn kind(&self, stage: &str) -> ActionKind {
        self.model.kind(stage).expect("flow endpoints resolve in a checked model")
    }

    fn is_gate(&self, stage: &str) -> bool {
        self.kind(stage).is_gate()
    }

    fn same_owner(&self, a: &str, b: &str) -> bool {
        self.model.stage(a).map(|s| &s.owner) == self.model.stage(b).map(|s| &s.owner)
    }

    /// Chain steps out of a survivor.
    fn start(&self, s: &'a str) -> Vec<(usize, Node<'a>)> {
        self.out
            .get(s)
            .into_iter()
            .flatten()
            .filter(|(_, t)| self.kind(t) == Release && self.same_owner(s, t))
            .map(|&(i, t)| (i, Node::Gate(t, Phase::Released)))
            .collect()
    }

    fn step(&self, stage: &'a str, phase: Phase) -> Vec<(usize, Node<'a>)> {
        let mut next = Vec::new();
        for &(i, t) in self.out.get(stage).into_iter().flatten() {
            let kind = self.kind(t);
            let same = self.same_owner(stage, t);
            let node = match phase {
                Phase::Released if kind == Transfer && same => Node::Gate(t, Phase::Outbound),
                Phase::Outbound if kind == Transfer && !same => Node::Gate(t, Phase::Inbound),
                Phase::Inbound if kind == Receive && same => Node::Gate(t, Phase::Received),
                Phase::Received if kind == Release && same => Node::Gate(t, Phase::Released),
                Phase::Received if !kind.is_gate() => Node::End(t),
                _ => continue,
            };
            next.push((i, node));
        }
        next
    }

    /// Survivors nearest to `gate`, walking flows backwards (`upstream`) or
    /// forwards through gate stages only.
    fn nearest_survivor(&self, gate: &'a str, upstream: bool) -> Option<&'a str> {
        let adj = if upstream { &self.inc } else { &self.out };
        let mut seen: HashSet<&str> = HashSet::from([gate]);
        let mut frontier = vec![gate];
        while !frontier.is_empty() {
            let mut found: Vec<&str> = Vec::new();
            let mut next = Vec::new();
            for g in frontier {
                for &(_, n) in adj.get(g).into_iter().flatten() {
                    if !seen.insert(n) {
                        continue;
                    }
                    if self.is_gate(n) {
                        next.push(n);
                    } else {
                        found.push(n);
                    }
                }
            }
            if let Some(best) = found.into_iter().min_by(|a, b| natural_cmp(a, b)) {
                return Some(best);
            }
            frontier = next;
        }
        None
    }
}

/// Removes every release, transfer and receive stage, contracting gate
/// chains into direct flows and re-anchoring triggers on removed stages to
/// the nearest surviving stage upstream (sources) or downstream (targets).
///
/// Storage on a removed release or transfer stage moves to the nearest
/// upstream survivor; storage on a removed receive moves downstream.
/// Machines are kept even when left without stages. Edge ids are reassigned
/// in sorted order.
pub fn simplify(model: &StaticModel) -> Result<StaticModel, TransformError> {
    let graph = FlowGraph::new(model);
    let survivors: Vec<&str> =
        model.all_stages().into_iter().filter(|s| !s.kind.is_gate()).map(|s| s.id.as_str()).collect();

    // Forward exploration of chain states from every survivor.
    let mut reachable: HashSet<Node> = HashSet::new();
    let mut transitions: Vec<(Node, usize, Node)> = Vec::new();
    let mut pairs: BTreeSet<(String, String)> = BTreeSet::new();
    for &s in &survivors {
        let mut seen: HashSet<Node> = HashSet::new();
        let mut queue: VecDeque<Node> = VecDeque::new();
        for (i, n) in graph.start(s) {
            transitions.push((Node::End(s), i, n));
            if seen.insert(n) {
                queue.push_back(n);
            }
        }
        while let Some(node) = queue.pop_front() {
            match node {
                Node::End(t) => {
                    if t != s {
                        pairs.insert((s.to_string(), t.to_string()));
                    }
                }
                Node::Gate(g, phase) => {
                    for (i, n) in graph.step(g, phase) {
                        transitions.push((node, i, n));
                        if seen.insert(n) {
                            queue.push_back(n);
                        }
                    }
                }
            }
        }
        reachable.extend(seen);
    }

    // A flow touching a gate stage must lie on some complete chain.
    let mut live: HashSet<Node> = reachable.iter().copied().filter(|n| matches!(n, Node::End(_))).collect();
    loop {
        let before = live.len();
        for (from, _, to) in &transitions {
            if live.contains(to) {
                live.insert(*from);
            }
        }
        if live.len() == before {
            break;
        }
    }
    let used: HashSet<usize> = transitions
        .iter()
        .filter(|(from, _, to)| live.contains(from) && live.contains(to))
        .map(|&(_, i, _)| i)
        .collect();
    let mut flow_order: Vec<usize> = (0..model.flows().len()).collect();
    flow_order.sort_by(|&a, &b| natural_cmp(&model.flows()[a].id, &model.flows()[b].id));
    for i in flow_order {
        let f = &model.flows()[i];
        let touches_gate = graph.is_gate(&f.source) || graph.is_gate(&f.target);
        if touches_gate && !used.contains(&i) {
            let start = if graph.is_gate(&f.source) { &f.source } else { &f.target };
            return Err(TransformError::DanglingChain { stages: gate_component(&graph, start) });
        }
    }

    let mut flows: Vec<(String, String)> = Vec::new();
    let mut direct: HashSet<(String, String)> = HashSet::new();
    for f in model.flows() {
        if !graph.is_gate(&f.source) && !graph.is_gate(&f.target) {
            flows.push((f.source.clone(), f.target.clone()));
            direct.insert((f.source.clone(), f.target.clone()));
        }
    }
    flows.extend(pairs.into_iter().filter(|p| !direct.contains(p)));

    let mut triggers: Vec<(String, String, Option<String>)> = Vec::new();
    for t in model.triggers() {
        let anchor = |stage: &str, upstream: bool| -> Result<String, TransformError> {
            if !graph.is_gate(stage) {
                return Ok(stage.to_string());
            }
            graph
                .nearest_survivor(model.stage(stage).map(|s| s.id.as_str()).unwrap_or(stage), upstream)
                .map(str::to_string)
                .ok_or_else(|| TransformError::DanglingChain { stages: vec![stage.to_string()] })
        };
        let source = anchor(&t.source, true)?;
        let target = anchor(&t.target, false)?;
        if source != target {
            triggers.push((source, target, t.guard.clone()));
        }
    }

    let mut storage: Vec<String> = Vec::new();
    for s in model.all_stages().into_iter().filter(|s| s.kind.is_gate() && s.has_storage) {
        if let Some(keeper) = graph.nearest_survivor(&s.id, s.kind != Receive) {
            storage.push(keeper.to_string());
        }
    }

    let mut b = ModelBuilder::from_model(model);
    b.remove_stages(|s| s.kind.is_gate());
    for keeper in storage {
        if let Some(s) = b.stage_mut(&keeper) {
            s.has_storage = true;
        }
    }
    let (flows, triggers) = renumber(flows, triggers);
    b.replace_edges(flows, triggers);
    Ok(b.build()?)
}

/// Gate stages connected to `start` through flows between gate stages.
fn gate_component(graph: &FlowGraph<'_>, start: &str) -> Vec<String> {
    let mut seen: HashSet<&str> = HashSet::new();
    let mut stack = vec![start];
    let mut out = Vec::new();
    while let Some(g) = stack.pop() {
        if !graph.is_gate(g) {
            continue;
        }
        let Some(id) = graph.model.stage(g).map(|s| s.id.as_str()) else { continue };
        if !seen.insert(id) {
            continue;
        }
        out.push(id.to_string());
        for adj in [&graph.out, &graph.inc] {
            stack.extend(adj.get(id).into_iter().flatten().map(|&(_, n)| n));
        }
    }
    sort_natural(&mut out);
    out
}

/// Replaces every flow between different machines by the canonical chain
/// `s -> release -> transfer => transfer -> receive -> t`, adding the gate
/// stages to the machines involved. Gate stages and the flows between them
/// are shared by all chains through the same machines.
pub fn expand(model: &StaticModel) -> Result<StaticModel, TransformError> {
    let mut gates: Vec<String> =
        model.all_stages().into_iter().filter(|s| s.kind.is_gate()).map(|s| s.id.clone()).collect();
    if !gates.is_empty() {
        sort_natural(&mut gates);
        return Err(TransformError::NotSimplified { stages: gates });
    }
    let mut b = ModelBuilder::from_model(model);
    let mut flows: Vec<(String, String)> = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut push = |flows: &mut Vec<(String, String)>, s: &str, t: &str| {
        if seen.insert((s.to_string(), t.to_string())) {
            flows.push((s.to_string(), t.to_string()));
        }
    };
    for f in model.flows() {
        let (src, dst) = match (model.stage(&f.source), model.stage(&f.target)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(ModelError::UnknownStage(f.source.clone()).into()),
        };
        if src.owner == dst.owner {
            flows.push((f.source.clone(), f.target.clone()));
            continue;
        }
        let release = b.ensure_stage(&src.owner, Release)?;
        let out_gate = b.ensure_stage(&src.owner, Transfer)?;
        let in_gate = b.ensure_stage(&dst.owner, Transfer)?;
        let receive = b.ensure_stage(&dst.owner, Receive)?;
        for (s, t) in [
            (f.source.as_str(), release.as_str()),
            (&release, &out_gate),
            (&out_gate, &in_gate),
            (&in_gate, &receive),
            (&receive, f.target.as_str()),
        ] {
            push(&mut flows, s, t);
        }
    }
    let triggers = model.triggers().iter().map(|t| (t.source.clone(), t.target.clone(), t.guard.clone())).collect();
    let (flows, triggers) = renumber(flows, triggers);
    b.replace_edges(flows, triggers);
    Ok(b.build()?)
}

/// True when no stage is a release, transfer or receive.
pub fn is_simplified(model: &StaticModel) -> bool {
    model.all_stages().iter().all(|s| !s.kind.is_gate())
}

fn renumber(
    mut flows: Vec<(String, String)>,
    mut triggers: Vec<(String, String, Option<String>)>,
) -> (Vec<Flow>, Vec<Trigger>) {
    flows.sort_by(|a, b| natural_cmp(&a.0, &b.0).then_with(|| natural_cmp(&a.1, &b.1)));
    triggers.sort_by(|a, b| natural_cmp(&a.0, &b.0).then_with(|| natural_cmp(&a.1, &b.1)).then_with(|| a.2.cmp(&b.2)));
    let flows = flows
        .into_iter()
        .enumerate()
        .map(|(i, (source, target))| Flow { id: format!("f{}", i + 1), source, target })
        .collect();
    let triggers = triggers
        .into_iter()
        .enumerate()
        .map(|(i, (source, target, guard))| Trigger { id: format!("t{}", i + 1), source, target, guard })
        .collect();
    (flows, triggers)
}

/// Stage count by kind; handy for reports.
pub fn kind_counts(model: &StaticModel) -> [usize; 5] {
    let mut counts = [0; 5];
    for s in model.all_stages() {
        counts[ActionKind::ALL.iter().position(|k| *k == s.kind).unwrap_or(0)] += 1;
    }
    counts
}
