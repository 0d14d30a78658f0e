//! Structural legality rules for static models, events and behavior.
//!
//! | rule | checks |
//! |------|--------|
//! | V1 | ids are globally unique |
//! | V2 | intra-machine flow follows the adjacency table |
//! | V3 | inter-machine flow goes transfer to transfer |
//! | V4 | triggers start at create, process or receive |
//! | V5 | at most one stage per kind per machine |
//! | V6 | (warning) stage with no edge and no storage |
//! | V7 | constraint machine has a process stage with a guarded trigger |
//! | V8 | event regions and times |
//! | V9 | behavior references, cycles, reachability |

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::model::{ActionKind, BehavioralModel, Event, Machine, StaticModel};
use crate::naming::natural_cmp;

use ActionKind::{Create, Process, Receive, Release, Transfer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Rule {
    V1,
    V2,
    V3,
    V4,
    V5,
    V6,
    V7,
    V8,
    V9,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub rule: Rule,
    pub subject: String,
    pub message: String,
}

impl Diagnostic {
    fn error(rule: Rule, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, rule, subject: subject.into(), message: message.into() }
    }

    fn warning(rule: Rule, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, rule, subject: subject.into(), message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// `SEVERITY RULE subject: message`
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}: {}", self.severity, self.rule, self.subject, self.message)
    }
}

pub fn error_count(diags: &[Diagnostic]) -> usize {
    diags.iter().filter(|d| d.is_error()).count()
}

/// Whether gate stages are expected (full form) or have been removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Full,
    /// Flows between create/process stages may cross machines directly: any
    /// create or process stage may feed another machine's process stage.
    Simplified,
}

impl Mode {
    /// Simplified when the model has no release, transfer or receive stage.
    pub fn detect(model: &StaticModel) -> Mode {
        if model.all_stages().iter().any(|s| s.kind.is_gate()) {
            Mode::Full
        } else {
            Mode::Simplified
        }
    }
}

/// Permitted flow steps. The default is a reading of the generic machine
/// diagram, not a canonical table; callers may supply their own.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowRules {
    pub intra: BTreeSet<(ActionKind, ActionKind)>,
    pub inter: BTreeSet<(ActionKind, ActionKind)>,
    pub trigger_sources: BTreeSet<ActionKind>,
}

impl Default for FlowRules {
    fn default() -> Self {
        FlowRules {
            intra: [
                (Transfer, Receive),
                (Receive, Process),
                (Receive, Release),
                (Process, Release),
                (Process, Create),
                (Create, Process),
                (Create, Release),
                (Release, Transfer),
            ]
            .into(),
            inter: [(Transfer, Transfer)].into(),
            trigger_sources: [Create, Process, Receive].into(),
        }
    }
}

impl FlowRules {
    pub fn allows_intra(&self, from: ActionKind, to: ActionKind) -> bool {
        self.intra.contains(&(from, to))
    }

    pub fn allows_inter(&self, from: ActionKind, to: ActionKind, mode: Mode) -> bool {
        self.inter.contains(&(from, to))
            || (mode == Mode::Simplified && matches!(from, Create | Process) && to == Process)
    }
}

/// Rules V1 to V7 in full mode with the default flow table.
pub fn validate_static(model: &StaticModel) -> Vec<Diagnostic> {
    validate_static_with(model, &FlowRules::default(), Mode::Full)
}

pub fn validate_simplified(model: &StaticModel) -> Vec<Diagnostic> {
    validate_static_with(model, &FlowRules::default(), Mode::Simplified)
}

pub fn validate_static_with(model: &StaticModel, rules: &FlowRules, mode: Mode) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let machines = model.all_machines();

    // V1
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for m in &machines {
        *counts.entry(&m.id).or_default() += 1;
        for s in &m.stages {
            *counts.entry(&s.id).or_default() += 1;
        }
    }
    for e in model.edges() {
        *counts.entry(e.id()).or_default() += 1;
    }
    for (id, n) in counts.into_iter().filter(|(_, n)| *n > 1) {
        out.push(Diagnostic::error(Rule::V1, id, format!("id is declared {n} times")));
    }

    // V5
    for m in &machines {
        let mut per_kind: BTreeMap<ActionKind, usize> = BTreeMap::new();
        for s in &m.stages {
            *per_kind.entry(s.kind).or_default() += 1;
        }
        for (kind, n) in per_kind.into_iter().filter(|(_, n)| *n > 1) {
            out.push(Diagnostic::error(Rule::V5, &m.id, format!("{n} {kind} stages; at most one is allowed")));
        }
    }

    // V2, V3
    for f in model.flows() {
        let (Some(src), Some(dst)) = (model.stage(&f.source), model.stage(&f.target)) else {
            continue;
        };
        if src.owner == dst.owner {
            if !rules.allows_intra(src.kind, dst.kind) {
                out.push(Diagnostic::error(
                    Rule::V2,
                    &f.id,
                    format!("{} -> {} is not a legal step inside machine `{}`", src.kind, dst.kind, src.owner),
                ));
            }
        } else if !rules.allows_inter(src.kind, dst.kind, mode) {
            let expected = match mode {
                Mode::Full => "transfer -> transfer",
                Mode::Simplified => "transfer -> transfer or create/process -> process",
            };
            out.push(Diagnostic::error(
                Rule::V3,
                &f.id,
                format!(
                    "{} -> {} crosses from `{}` to `{}`; expected {expected}",
                    src.kind, dst.kind, src.owner, dst.owner
                ),
            ));
        }
    }

    // V4
    for t in model.triggers() {
        if let Some(src) = model.stage(&t.source) {
            if !rules.trigger_sources.contains(&src.kind) {
                out.push(Diagnostic::error(
                    Rule::V4,
                    &t.id,
                    format!("trigger starts at a {} stage; only create, process or receive may trigger", src.kind),
                ));
            }
        }
    }

    // V6
    let touched: HashSet<&str> = model.edges().flat_map(|e| [e.source(), e.target()]).collect();
    for s in model.all_stages() {
        if !s.has_storage && !touched.contains(s.id.as_str()) {
            out.push(Diagnostic::warning(Rule::V6, &s.id, "stage has no flow, trigger or storage"));
        }
    }

    // V7
    for m in machines.iter().filter(|m| m.is_constraint) {
        check_constraint(model, m, &mut out);
    }

    sort(&mut out);
    out
}

fn check_constraint(model: &StaticModel, m: &Machine, out: &mut Vec<Diagnostic>) {
    let Some(process) = m.stage(Process) else {
        out.push(Diagnostic::error(Rule::V7, &m.id, "constraint machine has no process stage"));
        return;
    };
    let guarded =
        model.triggers().iter().any(|t| t.source == process.id && t.guard.as_deref().is_some_and(|g| !g.is_empty()));
    if !guarded {
        out.push(Diagnostic::error(
            Rule::V7,
            &m.id,
            "constraint machine's process stage has no outgoing guarded trigger",
        ));
    }
}

/// Rule V8: regions must be non-empty, resolve, and contain their edges'
/// endpoints; every event needs a time.
pub fn validate_events(model: &StaticModel, events: &[Event]) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for ev in events {
        let err = |msg: String| Diagnostic::error(Rule::V8, &ev.id, msg);
        if !seen.insert(ev.id.as_str()) {
            out.push(err("event id is declared more than once".into()));
        }
        if !ev.has_time() {
            out.push(err("event has no time; a timeless region is not an event".into()));
        }
        if ev.region.stage_ids.is_empty() {
            out.push(err("region is empty".into()));
        }
        for s in &ev.region.stage_ids {
            if model.stage(s).is_none() {
                out.push(err(format!("region cites unknown stage `{s}`")));
            }
        }
        for id in &ev.region.edge_ids {
            match model.edge(id) {
                None => out.push(err(format!("region cites unknown edge `{id}`"))),
                Some(e) => {
                    for end in [e.source(), e.target()] {
                        if !ev.region.stage_ids.contains(end) {
                            out.push(err(format!("edge `{id}` leaves the region at `{end}`")));
                        }
                    }
                }
            }
        }
    }
    sort(&mut out);
    out
}

/// Rule V9: undeclared events are errors; cycles and events unreachable from
/// every source event are warnings.
pub fn validate_behavior(_model: &StaticModel, events: &[Event], behavior: &BehavioralModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let declared: HashSet<&str> = events.iter().map(|e| e.id.as_str()).collect();
    let mut undeclared = BTreeSet::new();
    for id in behavior.event_ids() {
        if !declared.contains(id.as_str()) {
            undeclared.insert(id.as_str());
        }
    }
    for e in behavior.edges() {
        for end in [&e.from, &e.to] {
            if !declared.contains(end.as_str()) {
                undeclared.insert(end.as_str());
            }
        }
    }
    for id in &undeclared {
        out.push(Diagnostic::error(Rule::V9, *id, "behavior references an undeclared event"));
    }

    let mut nodes: BTreeSet<&str> = behavior.event_ids().iter().map(String::as_str).collect();
    for e in behavior.edges() {
        nodes.insert(&e.from);
        nodes.insert(&e.to);
    }
    let mut graph = DiGraph::<&str, ()>::new();
    let idx: HashMap<&str, _> = nodes.iter().map(|&n| (n, graph.add_node(n))).collect();
    for e in behavior.edges() {
        if e.from == e.to {
            out.push(Diagnostic::error(Rule::V9, &e.from, "behavior edge loops on itself"));
            continue;
        }
        graph.add_edge(idx[e.from.as_str()], idx[e.to.as_str()], ());
    }
    for scc in tarjan_scc(&graph) {
        if scc.len() > 1 {
            let mut members: Vec<&str> = scc.iter().map(|&n| graph[n]).collect();
            members.sort_by(|a, b| natural_cmp(a, b));
            out.push(Diagnostic::warning(Rule::V9, members[0], format!("events form a cycle: {}", members.join(", "))));
        }
    }

    let sources: Vec<_> = graph
        .node_indices()
        .filter(|&n| graph.neighbors_directed(n, petgraph::Direction::Incoming).next().is_none())
        .collect();
    let mut reached = HashSet::new();
    let mut stack = sources;
    while let Some(n) = stack.pop() {
        if reached.insert(n) {
            stack.extend(graph.neighbors(n));
        }
    }
    for n in graph.node_indices().filter(|n| !reached.contains(n)) {
        out.push(Diagnostic::warning(Rule::V9, graph[n], "event is unreachable from every source event"));
    }
    sort(&mut out);
    out
}

fn sort(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        natural_cmp(&a.subject, &b.subject)
            .then(a.rule.cmp(&b.rule))
            .then(a.severity.cmp(&b.severity))
            .then_with(|| a.message.cmp(&b.message))
    });
}
