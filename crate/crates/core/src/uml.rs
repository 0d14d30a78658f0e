//! Bridge between TM models and a UML activity-diagram subset.
//!
//! Import maps each action to a machine with a process stage, the initial
//! node to a create stage in the first action's machine, plain control
//! edges to flows and guarded edges (including every branch of a decision)
//! to guarded triggers. Merge and final nodes leave no trace.
//!
//! Export runs the other way on simplified models and re-synthesizes
//! decisions (a stage with two or more guarded successors), merges (an
//! action with two or more predecessors) and one final node per sink.
//!
//! Round trips are exact on the *supported* subset checked by
//! [`check_supported`]:
//!
//! * one initial node with a single unguarded edge to an action or merge;
//! * every action has exactly one incoming and one outgoing edge;
//! * a decision follows an action and has two or more guarded edges, each
//!   to an action or merge, no two alike;
//! * a merge has two or more incoming edges and one unguarded edge to an
//!   action;
//! * a final node follows an action;
//! * guards appear only on decision branches and on edges from an action
//!   to an action or merge;
//! * no action leads straight back to itself.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::model::{ActionKind, LabeledGraph, ModelBuilder, ModelError, StaticModel};
use crate::naming::{natural_cmp, sanitize_identifier, sort_natural};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Initial,
    Final,
    Action,
    Decision,
    Merge,
    /// Any other UML node kind (fork, join, …), kept so it can be reported.
    Unsupported(String),
}

impl NodeKind {
    pub fn as_str(&self) -> &str {
        match self {
            NodeKind::Initial => "Initial",
            NodeKind::Final => "Final",
            NodeKind::Action => "Action",
            NodeKind::Decision => "Decision",
            NodeKind::Merge => "Merge",
            NodeKind::Unsupported(s) => s,
        }
    }

    fn parse(s: &str) -> NodeKind {
        match s {
            "Initial" => NodeKind::Initial,
            "Final" => NodeKind::Final,
            "Action" => NodeKind::Action,
            "Decision" => NodeKind::Decision,
            "Merge" => NodeKind::Merge,
            other => NodeKind::Unsupported(other.to_string()),
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for NodeKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for NodeKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(NodeKind::parse(&String::deserialize(d)?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityNode {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityEdge {
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub guard: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityGraph {
    pub nodes: Vec<ActivityNode>,
    pub edges: Vec<ActivityEdge>,
}

#[derive(Debug, Error)]
pub enum UmlError {
    #[error("unsupported construct at node `{node}`: {reason}")]
    UnsupportedConstruct { node: String, reason: String },
    #[error("malformed decision `{node}`: {reason}")]
    MalformedDecision { node: String, reason: String },
    #[error("malformed activity graph: {0}")]
    MalformedGraph(String),
    #[error("model is not simplified; gate stages present: {}", stages.join(", "))]
    NotSimplified { stages: Vec<String> },
    #[error("expected exactly one create stage without incoming edges, found {}: [{}]", candidates.len(), candidates.join(", "))]
    AmbiguousInitial { candidates: Vec<String> },
    #[error("malformed activity JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl ActivityGraph {
    pub fn from_json(text: &str) -> Result<Self, UmlError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("activity graphs always serialize");
        let mut text = serde_json::to_string_pretty(&value).expect("values always serialize");
        text.push('\n');
        text
    }

    pub fn node(&self, id: &str) -> Option<&ActivityNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn outgoing<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a ActivityEdge> + 'a {
        self.edges.iter().filter(move |e| e.from == id)
    }

    pub fn incoming<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a ActivityEdge> + 'a {
        self.edges.iter().filter(move |e| e.to == id)
    }

    /// The general well-formedness rules: one initial node, at least one
    /// final node, guarded decisions with two or more branches, merges
    /// with two or more inputs, resolvable edges.
    pub fn check_invariants(&self) -> Result<(), UmlError> {
        let bad = |m: String| Err(UmlError::MalformedGraph(m));
        let mut ids = HashSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id.as_str()) {
                return bad(format!("node id `{}` is used twice", n.id));
            }
        }
        for e in &self.edges {
            for end in [&e.from, &e.to] {
                if !ids.contains(end.as_str()) {
                    return bad(format!("edge endpoint `{end}` is not a node"));
                }
            }
        }
        let count = |k: NodeKind| self.nodes.iter().filter(|n| n.kind == k).count();
        if count(NodeKind::Initial) != 1 {
            return bad(format!("expected one initial node, found {}", count(NodeKind::Initial)));
        }
        if count(NodeKind::Final) == 0 {
            return bad("no final node".into());
        }
        for n in &self.nodes {
            match n.kind {
                NodeKind::Decision => {
                    let outs: Vec<_> = self.outgoing(&n.id).collect();
                    if outs.len() < 2 {
                        return Err(UmlError::MalformedDecision {
                            node: n.id.clone(),
                            reason: format!("{} outgoing edge(s); a decision needs at least two", outs.len()),
                        });
                    }
                    if let Some(e) = outs.iter().find(|e| e.guard.is_none()) {
                        return Err(UmlError::MalformedDecision {
                            node: n.id.clone(),
                            reason: format!("edge to `{}` has no guard", e.to),
                        });
                    }
                }
                NodeKind::Merge if self.incoming(&n.id).count() < 2 => {
                    return bad(format!("merge `{}` has fewer than two incoming edges", n.id));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Checks the graph is well formed and inside the round-trippable subset.
pub fn check_supported(g: &ActivityGraph) -> Result<(), UmlError> {
    if let Some(n) = g.nodes.iter().find(|n| matches!(n.kind, NodeKind::Unsupported(_))) {
        return Err(UmlError::UnsupportedConstruct {
            node: n.id.clone(),
            reason: format!("{} nodes are not supported", n.kind),
        });
    }
    g.check_invariants()?;
    let kind = |id: &str| g.node(id).map(|n| n.kind.clone()).expect("endpoints checked");
    let unsupported = |node: &str, reason: String| Err(UmlError::UnsupportedConstruct { node: node.into(), reason });
    for n in &g.nodes {
        let ins: Vec<&ActivityEdge> = g.incoming(&n.id).collect();
        let outs: Vec<&ActivityEdge> = g.outgoing(&n.id).collect();
        match n.kind {
            NodeKind::Initial => {
                if !ins.is_empty() {
                    return unsupported(&n.id, "initial node has incoming edges".into());
                }
                if outs.len() != 1 || outs[0].guard.is_some() {
                    return unsupported(&n.id, "initial node needs exactly one unguarded edge".into());
                }
                if !matches!(kind(&outs[0].to), NodeKind::Action | NodeKind::Merge) {
                    return unsupported(&n.id, "initial node must lead to an action or merge".into());
                }
            }
            NodeKind::Action => {
                if ins.len() != 1 || outs.len() != 1 {
                    return unsupported(
                        &n.id,
                        format!(
                            "action has {} incoming and {} outgoing edges; use merge and decision nodes",
                            ins.len(),
                            outs.len()
                        ),
                    );
                }
                let next = kind(&outs[0].to);
                if outs[0].guard.is_some() && !matches!(next, NodeKind::Action | NodeKind::Merge) {
                    return unsupported(&n.id, format!("guard on an edge into a {next} node"));
                }
            }
            NodeKind::Decision => {
                if ins.len() != 1 || kind(&ins[0].from) != NodeKind::Action {
                    return Err(UmlError::MalformedDecision {
                        node: n.id.clone(),
                        reason: "a decision needs exactly one incoming edge, from an action".into(),
                    });
                }
                let mut seen = HashSet::new();
                for e in &outs {
                    if !matches!(kind(&e.to), NodeKind::Action | NodeKind::Merge) {
                        return unsupported(&n.id, format!("decision branch leads to a {} node", kind(&e.to)));
                    }
                    if !seen.insert((&e.to, &e.guard)) {
                        return Err(UmlError::MalformedDecision {
                            node: n.id.clone(),
                            reason: format!("two branches to `{}` share a guard", e.to),
                        });
                    }
                }
            }
            NodeKind::Merge => {
                if outs.len() != 1 || outs[0].guard.is_some() || kind(&outs[0].to) != NodeKind::Action {
                    return unsupported(&n.id, "merge needs exactly one unguarded edge to an action".into());
                }
            }
            NodeKind::Final => {
                if !outs.is_empty() || ins.len() != 1 || kind(&ins[0].from) != NodeKind::Action {
                    return unsupported(&n.id, "final node needs exactly one incoming edge, from an action".into());
                }
            }
            NodeKind::Unsupported(_) => unreachable!("rejected above"),
        }
    }
    // No action may lead back to itself.
    for n in g.nodes.iter().filter(|n| n.kind == NodeKind::Action) {
        if control_successors(g, &n.id).iter().any(|(to, _)| *to == n.id) {
            return unsupported(&n.id, "action leads straight back to itself".into());
        }
    }
    Ok(())
}

/// The action entered through node `id` (itself, or a merge's successor).
fn entry<'g>(g: &'g ActivityGraph, id: &'g str) -> Option<&'g str> {
    match g.node(id)?.kind {
        NodeKind::Action => Some(id),
        NodeKind::Merge => g.outgoing(id).next().map(|e| e.to.as_str()),
        _ => None,
    }
}

/// Actions reached from action `id`, each with the guard on the way.
fn control_successors<'g>(g: &'g ActivityGraph, id: &'g str) -> Vec<(&'g str, Option<&'g str>)> {
    let mut out = Vec::new();
    for e in g.outgoing(id) {
        match g.node(&e.to).map(|n| &n.kind) {
            Some(NodeKind::Decision) => {
                for b in g.outgoing(&e.to) {
                    if let Some(t) = entry(g, &b.to) {
                        out.push((t, b.guard.as_deref()));
                    }
                }
            }
            _ => {
                if let Some(t) = entry(g, &e.to) {
                    out.push((t, e.guard.as_deref()));
                }
            }
        }
    }
    out
}

/// Maps a supported activity graph to a simplified TM model.
pub fn import_activity(g: &ActivityGraph) -> Result<StaticModel, UmlError> {
    check_supported(g)?;
    let mut b = ModelBuilder::new();
    let mut used: HashSet<String> = HashSet::new();
    let mut machine_of: HashMap<&str, String> = HashMap::new();
    let mut actions: Vec<&ActivityNode> = g.nodes.iter().filter(|n| n.kind == NodeKind::Action).collect();
    actions.sort_by(|a, b| natural_cmp(&a.id, &b.id));
    for a in &actions {
        let base = sanitize_identifier(if a.label.trim().is_empty() { &a.id } else { &a.label });
        let mut name = base.clone();
        let mut n = 2;
        while !used.insert(name.clone()) {
            name = format!("{base}{n}");
            n += 1;
        }
        let id = b.machine(None, &name)?;
        b.set_label(&id, Some(a.label.clone()))?;
        b.stage(&id, ActionKind::Process)?;
        machine_of.insert(a.id.as_str(), id);
    }
    let process = |node: &str| format!("{}.{}", machine_of[node], ActionKind::Process);

    let initial = g.nodes.iter().find(|n| n.kind == NodeKind::Initial).expect("checked");
    let first = g.outgoing(&initial.id).next().and_then(|e| entry(g, &e.to)).expect("checked");
    let create = b.stage(&machine_of[first], ActionKind::Create)?;
    b.flow(&create, &process(first));

    for a in &actions {
        for (to, guard) in control_successors(g, &a.id) {
            match guard {
                Some(guard) => {
                    b.trigger(&process(&a.id), &process(to), Some(guard));
                }
                None => {
                    b.flow(&process(&a.id), &process(to));
                }
            }
        }
    }
    Ok(b.build()?)
}

/// Maps a simplified TM model to an activity graph.
///
/// Process stages become actions labelled with their machine's label (or
/// name). Create stages other than the initial one are passed through: an
/// edge into a create stage continues along that stage's edges.
pub fn export_activity(model: &StaticModel) -> Result<ActivityGraph, UmlError> {
    let mut gates: Vec<String> =
        model.all_stages().into_iter().filter(|s| s.kind.is_gate()).map(|s| s.id.clone()).collect();
    if !gates.is_empty() {
        sort_natural(&mut gates);
        return Err(UmlError::NotSimplified { stages: gates });
    }
    let targeted: HashSet<&str> = model.edges().map(|e| e.target()).collect();
    let mut candidates: Vec<String> = model
        .all_stages()
        .into_iter()
        .filter(|s| s.kind == ActionKind::Create && !targeted.contains(s.id.as_str()))
        .map(|s| s.id.clone())
        .collect();
    sort_natural(&mut candidates);
    if candidates.len() != 1 {
        return Err(UmlError::AmbiguousInitial { candidates });
    }
    let initial_stage = candidates.remove(0);

    let mut out_edges: HashMap<&str, Vec<(&str, Option<&str>)>> = HashMap::new();
    for f in model.flows() {
        out_edges.entry(&f.source).or_default().push((&f.target, None));
    }
    for t in model.triggers() {
        out_edges.entry(&t.source).or_default().push((&t.target, t.guard.as_deref()));
    }
    // Process stages reached from `stage`, looking through create stages.
    let successors = |stage: &str| -> Vec<(String, Option<String>)> {
        let mut found: Vec<(String, Option<String>)> = Vec::new();
        let mut seen: HashSet<&str> = HashSet::from([stage]);
        let mut stack: Vec<(&str, Option<&str>)> = out_edges.get(stage).into_iter().flatten().rev().copied().collect();
        while let Some((next, guard)) = stack.pop() {
            match model.kind(next) {
                Some(ActionKind::Process) => {
                    let item = (next.to_string(), guard.map(str::to_string));
                    if !found.contains(&item) {
                        found.push(item);
                    }
                }
                Some(ActionKind::Create) if next != initial_stage && seen.insert(next) => {
                    for &(n, g) in out_edges.get(next).into_iter().flatten().rev() {
                        stack.push((n, guard.or(g)));
                    }
                }
                _ => {}
            }
        }
        found
    };

    let mut processes: Vec<&str> =
        model.all_stages().into_iter().filter(|s| s.kind == ActionKind::Process).map(|s| s.id.as_str()).collect();
    processes.sort_by(|a, b| natural_cmp(a, b));
    let action_id = |stage: &str| model.owner(stage).map(|m| m.id.clone()).expect("stage resolves");

    let mut g = ActivityGraph::default();
    g.nodes.push(ActivityNode { id: "initial".into(), kind: NodeKind::Initial, label: String::new() });
    for p in &processes {
        let m = model.owner(p).expect("stage resolves");
        g.nodes.push(ActivityNode { id: m.id.clone(), kind: NodeKind::Action, label: m.display_name().to_string() });
    }

    // Control edges keyed by target action so merges can be inserted.
    let mut into: BTreeMap<String, Vec<(String, Option<String>)>> = BTreeMap::new();
    let mut emit_from = |g: &mut ActivityGraph, from: String, succ: Vec<(String, Option<String>)>| {
        let (guarded, plain): (Vec<_>, Vec<_>) = succ.into_iter().partition(|(_, guard)| guard.is_some());
        for (to, _) in plain {
            into.entry(action_id(&to)).or_default().push((from.clone(), None));
        }
        if guarded.len() >= 2 {
            let decision = format!("decision_{from}");
            g.nodes.push(ActivityNode { id: decision.clone(), kind: NodeKind::Decision, label: String::new() });
            g.edges.push(ActivityEdge { from: from.clone(), to: decision.clone(), guard: None });
            for (to, guard) in guarded {
                into.entry(action_id(&to)).or_default().push((decision.clone(), guard));
            }
        } else {
            for (to, guard) in guarded {
                into.entry(action_id(&to)).or_default().push((from.clone(), guard));
            }
        }
    };

    emit_from(&mut g, "initial".into(), successors(&initial_stage));
    let mut sinks = Vec::new();
    for p in &processes {
        let succ = successors(p);
        if succ.is_empty() {
            sinks.push(action_id(p));
        }
        emit_from(&mut g, action_id(p), succ);
    }
    for (target, sources) in into {
        if sources.len() >= 2 {
            let merge = format!("merge_{target}");
            g.nodes.push(ActivityNode { id: merge.clone(), kind: NodeKind::Merge, label: String::new() });
            for (from, guard) in sources {
                g.edges.push(ActivityEdge { from, to: merge.clone(), guard });
            }
            g.edges.push(ActivityEdge { from: merge, to: target, guard: None });
        } else {
            for (from, guard) in sources {
                g.edges.push(ActivityEdge { from, to: target.clone(), guard });
            }
        }
    }
    for s in sinks {
        let fin = format!("final_{s}");
        g.nodes.push(ActivityNode { id: fin.clone(), kind: NodeKind::Final, label: String::new() });
        g.edges.push(ActivityEdge { from: s, to: fin, guard: None });
    }
    g.nodes.sort_by(|a, b| natural_cmp(&a.id, &b.id));
    g.edges.sort_by(|a, b| {
        natural_cmp(&a.from, &b.from).then_with(|| natural_cmp(&a.to, &b.to)).then_with(|| a.guard.cmp(&b.guard))
    });
    Ok(g)
}

fn activity_graph(g: &ActivityGraph) -> LabeledGraph {
    let mut lg = LabeledGraph::new();
    let mut index = HashMap::new();
    for n in &g.nodes {
        let label = match n.kind {
            NodeKind::Action => format!("Action:{}", n.label),
            ref k => k.to_string(),
        };
        index.insert(n.id.as_str(), lg.vertex(label));
    }
    for e in &g.edges {
        if let (Some(&f), Some(&t)) = (index.get(e.from.as_str()), index.get(e.to.as_str())) {
            let label = match &e.guard {
                Some(guard) => format!("edge?{guard}"),
                None => "edge".to_string(),
            };
            lg.edge(f, t, label);
        }
    }
    lg
}

/// Isomorphism ignoring node ids. Node kinds, action labels and guards must
/// match; labels on other node kinds are ignored.
pub fn activity_isomorphic(a: &ActivityGraph, b: &ActivityGraph) -> bool {
    activity_graph(a).isomorphic(&activity_graph(b))
}

/// Distinct guard strings, for byte-exact comparisons.
pub fn guards(g: &ActivityGraph) -> BTreeSet<&str> {
    g.edges.iter().filter_map(|e| e.guard.as_deref()).collect()
}
