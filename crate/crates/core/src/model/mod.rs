//! Thinging machine domain types.
//!
//! A [`StaticModel`] is a forest of [`Machine`]s. Every machine owns at most
//! one [`Stage`] per [`ActionKind`] and may nest submachines. Stages are joined
//! by solid [`Flow`]s and dashed, optionally guarded, [`Trigger`]s. Events put a
//! time annotation on a [`Region`] of the static model, and a
//! [`BehavioralModel`] orders events.
//!
//! Models are immutable once built: [`StaticModel::new`] checks every
//! structural invariant and precomputes lookup tables.

mod builder;
mod iso;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::naming::{is_identifier, is_reserved, natural_cmp};

pub use builder::ModelBuilder;
pub use iso::model_isomorphic;
pub(crate) use iso::LabeledGraph;

/// The five actions a machine performs on things.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Create,
    Process,
    Release,
    Transfer,
    Receive,
}

impl ActionKind {
    pub const ALL: [ActionKind; 5] =
        [ActionKind::Create, ActionKind::Process, ActionKind::Release, ActionKind::Transfer, ActionKind::Receive];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Create => "create",
            ActionKind::Process => "process",
            ActionKind::Release => "release",
            ActionKind::Transfer => "transfer",
            ActionKind::Receive => "receive",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        ActionKind::ALL.into_iter().find(|k| k.as_str() == word)
    }

    /// Release, transfer and receive move things between machines; they are
    /// the stages dropped by simplification.
    pub fn is_gate(self) -> bool {
        matches!(self, ActionKind::Release | ActionKind::Transfer | ActionKind::Receive)
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub id: String,
    pub kind: ActionKind,
    #[serde(default)]
    pub has_storage: bool,
    #[serde(default)]
    pub label: Option<String>,
    pub owner: String,
}

/// A thimac: a thing that is also a machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Machine {
    pub id: String,
    /// Identifier used in dotted paths; unique among siblings.
    pub name: String,
    /// Free-text display name.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub is_constraint: bool,
    #[serde(default)]
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub submachines: Vec<Machine>,
    #[serde(default)]
    pub parent: Option<String>,
}

impl Machine {
    pub fn stage(&self, kind: ActionKind) -> Option<&Stage> {
        self.stages.iter().find(|s| s.kind == kind)
    }

    /// The label if present, otherwise the name.
    pub fn display_name(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flow {
    pub id: String,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trigger {
    pub id: String,
    pub source: String,
    pub target: String,
    #[serde(default)]
    pub guard: Option<String>,
}

/// Either kind of edge, borrowed from a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeRef<'a> {
    Flow(&'a Flow),
    Trigger(&'a Trigger),
}

impl<'a> EdgeRef<'a> {
    pub fn id(&self) -> &'a str {
        match self {
            EdgeRef::Flow(f) => &f.id,
            EdgeRef::Trigger(t) => &t.id,
        }
    }

    pub fn source(&self) -> &'a str {
        match self {
            EdgeRef::Flow(f) => &f.source,
            EdgeRef::Trigger(t) => &t.source,
        }
    }

    pub fn target(&self) -> &'a str {
        match self {
            EdgeRef::Flow(f) => &f.target,
            EdgeRef::Trigger(t) => &t.target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("empty id")]
    EmptyId,
    #[error("`{0}` is not a valid machine name")]
    InvalidName(String),
    #[error("machine `{parent}` has two submachines named `{name}`")]
    DuplicateName { parent: String, name: String },
    #[error("machine `{machine}` has more than one {kind} stage")]
    DuplicateKind { machine: String, kind: ActionKind },
    #[error("constraint machine `{0}` has no process stage")]
    ConstraintWithoutProcess(String),
    #[error("stage `{stage}` names owner `{owner}` but belongs to `{actual}`")]
    InconsistentOwner { stage: String, owner: String, actual: String },
    #[error("machine `{machine}` names parent {parent:?} but is nested in {actual:?}")]
    InconsistentParent { machine: String, parent: Option<String>, actual: Option<String> },
    #[error("unknown machine `{0}`")]
    UnknownMachine(String),
    #[error("unknown stage `{0}`")]
    UnknownStage(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("edge `{0}` starts and ends at the same stage")]
    SelfLoop(String),
    #[error("region is empty")]
    EmptyRegion,
    #[error("edge `{edge}` has endpoint `{stage}` outside the region")]
    EdgeLeavesRegion { edge: String, stage: String },
    #[error("event `{0}` has no time")]
    MissingTime(String),
    #[error("behavior edge references undeclared event `{0}`")]
    UndeclaredEvent(String),
    #[error("behavior edge `{0}` -> `{0}` is a self-edge")]
    SelfEdge(String),
    #[error("behavior edge `{from}` -> `{to}` is declared twice")]
    DuplicateBehaviorEdge { from: String, to: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct StageSlot {
    machine: Vec<usize>,
    index: usize,
}

/// The timeless TM diagram: machines, stages, flows and triggers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticModel {
    machines: Vec<Machine>,
    flows: Vec<Flow>,
    triggers: Vec<Trigger>,
    machine_slots: BTreeMap<String, Vec<usize>>,
    stage_slots: BTreeMap<String, StageSlot>,
}

impl Default for StaticModel {
    fn default() -> Self {
        StaticModel::new_unchecked(Vec::new(), Vec::new(), Vec::new())
    }
}

impl StaticModel {
    /// Builds a model, rejecting anything that breaks a structural invariant.
    pub fn new(machines: Vec<Machine>, flows: Vec<Flow>, triggers: Vec<Trigger>) -> Result<Self, ModelError> {
        let model = Self::new_unchecked(machines, flows, triggers);
        model.check()?;
        Ok(model)
    }

    /// Builds a model without checking invariants.
    ///
    /// Lookups resolve to the first occurrence of a duplicated id. Use this
    /// only to feed the validator; other operations assume a checked model.
    pub fn new_unchecked(machines: Vec<Machine>, flows: Vec<Flow>, triggers: Vec<Trigger>) -> Self {
        let mut machine_slots = BTreeMap::new();
        let mut stage_slots = BTreeMap::new();
        fn walk(
            ms: &[Machine],
            path: &mut Vec<usize>,
            machine_slots: &mut BTreeMap<String, Vec<usize>>,
            stage_slots: &mut BTreeMap<String, StageSlot>,
        ) {
            for (i, m) in ms.iter().enumerate() {
                path.push(i);
                machine_slots.entry(m.id.clone()).or_insert_with(|| path.clone());
                for (j, s) in m.stages.iter().enumerate() {
                    stage_slots.entry(s.id.clone()).or_insert_with(|| StageSlot { machine: path.clone(), index: j });
                }
                walk(&m.submachines, path, machine_slots, stage_slots);
                path.pop();
            }
        }
        walk(&machines, &mut Vec::new(), &mut machine_slots, &mut stage_slots);
        StaticModel { machines, flows, triggers, machine_slots, stage_slots }
    }

    fn check(&self) -> Result<(), ModelError> {
        let mut ids: HashSet<&str> = HashSet::new();
        fn claim<'a>(ids: &mut HashSet<&'a str>, id: &'a str) -> Result<(), ModelError> {
            if id.is_empty() {
                return Err(ModelError::EmptyId);
            }
            if !ids.insert(id) {
                return Err(ModelError::DuplicateId(id.to_string()));
            }
            Ok(())
        }
        let mut stack: Vec<(&Machine, Option<&str>)> = self.machines.iter().rev().map(|m| (m, None)).collect();
        check_sibling_names(None, &self.machines)?;
        while let Some((m, parent)) = stack.pop() {
            claim(&mut ids, &m.id)?;
            if !is_identifier(&m.name) || is_reserved(&m.name) {
                return Err(ModelError::InvalidName(m.name.clone()));
            }
            if m.parent.as_deref() != parent {
                return Err(ModelError::InconsistentParent {
                    machine: m.id.clone(),
                    parent: m.parent.clone(),
                    actual: parent.map(str::to_string),
                });
            }
            let mut kinds = BTreeSet::new();
            for s in &m.stages {
                claim(&mut ids, &s.id)?;
                if s.owner != m.id {
                    return Err(ModelError::InconsistentOwner {
                        stage: s.id.clone(),
                        owner: s.owner.clone(),
                        actual: m.id.clone(),
                    });
                }
                if !kinds.insert(s.kind) {
                    return Err(ModelError::DuplicateKind { machine: m.id.clone(), kind: s.kind });
                }
            }
            if m.is_constraint && !kinds.contains(&ActionKind::Process) {
                return Err(ModelError::ConstraintWithoutProcess(m.id.clone()));
            }
            check_sibling_names(Some(&m.id), &m.submachines)?;
            stack.extend(m.submachines.iter().rev().map(|c| (c, Some(m.id.as_str()))));
        }
        for e in self.edges() {
            claim(&mut ids, e.id())?;
            for end in [e.source(), e.target()] {
                if !self.stage_slots.contains_key(end) {
                    return Err(ModelError::UnknownStage(end.to_string()));
                }
            }
            if e.source() == e.target() {
                return Err(ModelError::SelfLoop(e.id().to_string()));
            }
        }
        Ok(())
    }

    /// Top-level machines.
    pub fn machines(&self) -> &[Machine] {
        &self.machines
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn triggers(&self) -> &[Trigger] {
        &self.triggers
    }

    pub fn is_empty(&self) -> bool {
        self.machines.is_empty() && self.flows.is_empty() && self.triggers.is_empty()
    }

    /// Flows followed by triggers.
    pub fn edges(&self) -> impl Iterator<Item = EdgeRef<'_>> {
        self.flows.iter().map(EdgeRef::Flow).chain(self.triggers.iter().map(EdgeRef::Trigger))
    }

    pub fn edge(&self, id: &str) -> Option<EdgeRef<'_>> {
        self.edges().find(|e| e.id() == id)
    }

    pub fn machine(&self, id: &str) -> Option<&Machine> {
        self.machine_slots.get(id).map(|path| self.machine_at(path))
    }

    fn machine_at(&self, path: &[usize]) -> &Machine {
        let mut m = &self.machines[path[0]];
        for &i in &path[1..] {
            m = &m.submachines[i];
        }
        m
    }

    pub fn stage(&self, id: &str) -> Option<&Stage> {
        self.stage_slots.get(id).map(|slot| &self.machine_at(&slot.machine).stages[slot.index])
    }

    /// The machine owning a stage.
    pub fn owner(&self, stage_id: &str) -> Option<&Machine> {
        self.stage_slots.get(stage_id).map(|slot| self.machine_at(&slot.machine))
    }

    pub fn kind(&self, stage_id: &str) -> Option<ActionKind> {
        self.stage(stage_id).map(|s| s.kind)
    }

    /// Every machine in pre-order.
    pub fn all_machines(&self) -> Vec<&Machine> {
        let mut out = Vec::new();
        let mut stack: Vec<&Machine> = self.machines.iter().rev().collect();
        while let Some(m) = stack.pop() {
            out.push(m);
            stack.extend(m.submachines.iter().rev());
        }
        out
    }

    /// Every stage, machine by machine in pre-order.
    pub fn all_stages(&self) -> Vec<&Stage> {
        self.all_machines().into_iter().flat_map(|m| m.stages.iter()).collect()
    }

    pub fn stage_ids(&self) -> BTreeSet<String> {
        self.stage_slots.keys().cloned().collect()
    }

    /// Names of the machines from the root down to `machine_id`.
    pub fn machine_path(&self, machine_id: &str) -> Option<Vec<&str>> {
        let slots = self.machine_slots.get(machine_id)?;
        let mut names = Vec::with_capacity(slots.len());
        let mut level = &self.machines;
        for &i in slots {
            names.push(level[i].name.as_str());
            level = &level[i].submachines;
        }
        Some(names)
    }

    /// Ids of `machine_id` and all its ancestors, innermost first.
    pub fn ancestors(&self, machine_id: &str) -> Vec<&str> {
        let mut out = Vec::new();
        let mut cur = self.machine(machine_id);
        while let Some(m) = cur {
            out.push(m.id.as_str());
            cur = m.parent.as_deref().and_then(|p| self.machine(p));
        }
        out
    }
}

fn check_sibling_names(parent: Option<&str>, siblings: &[Machine]) -> Result<(), ModelError> {
    let mut seen = HashSet::new();
    for m in siblings {
        if !seen.insert(m.name.as_str()) {
            return Err(ModelError::DuplicateName {
                parent: parent.unwrap_or("<root>").to_string(),
                name: m.name.clone(),
            });
        }
    }
    Ok(())
}

/// A sub-diagram of a static model.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub stage_ids: BTreeSet<String>,
    #[serde(default)]
    pub edge_ids: BTreeSet<String>,
}

impl Region {
    pub fn is_empty(&self) -> bool {
        self.stage_ids.is_empty() && self.edge_ids.is_empty()
    }

    /// Checks the region against a model: non-empty, every id resolves and
    /// every edge stays inside the stage set.
    pub fn check_in(&self, model: &StaticModel) -> Result<(), ModelError> {
        if self.stage_ids.is_empty() {
            return Err(ModelError::EmptyRegion);
        }
        for s in sorted(&self.stage_ids) {
            if model.stage(s).is_none() {
                return Err(ModelError::UnknownStage(s.clone()));
            }
        }
        for id in sorted(&self.edge_ids) {
            let edge = model.edge(id).ok_or_else(|| ModelError::UnknownEdge(id.clone()))?;
            for end in [edge.source(), edge.target()] {
                if !self.stage_ids.contains(end) {
                    return Err(ModelError::EdgeLeavesRegion { edge: id.clone(), stage: end.to_string() });
                }
            }
        }
        Ok(())
    }
}

fn sorted(set: &BTreeSet<String>) -> Vec<&String> {
    let mut v: Vec<&String> = set.iter().collect();
    v.sort_by(|a, b| natural_cmp(a, b));
    v
}

/// A region with a time annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub id: String,
    pub name: String,
    /// Free-form timestamp or ordinal; `None` means the region was never
    /// event-ized.
    #[serde(default)]
    pub time: Option<String>,
    pub region: Region,
    /// Stored verbatim, never interpreted.
    #[serde(default)]
    pub intensity: Option<String>,
}

impl Event {
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        time: impl Into<String>,
        region: Region,
    ) -> Result<Self, ModelError> {
        let event = Event { id: id.into(), name: name.into(), time: Some(time.into()), region, intensity: None };
        if event.id.is_empty() {
            return Err(ModelError::EmptyId);
        }
        if !event.has_time() {
            return Err(ModelError::MissingTime(event.id));
        }
        if event.region.stage_ids.is_empty() {
            return Err(ModelError::EmptyRegion);
        }
        Ok(event)
    }

    pub fn has_time(&self) -> bool {
        self.time.as_deref().is_some_and(|t| !t.trim().is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorEdge {
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub exclusive_group: Option<String>,
}

/// Chronology graph over events.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BehavioralModel {
    event_ids: BTreeSet<String>,
    edges: Vec<BehaviorEdge>,
}

impl BehavioralModel {
    /// Edges are kept in natural `(from, to)` order.
    pub fn new(event_ids: BTreeSet<String>, edges: Vec<BehaviorEdge>) -> Result<Self, ModelError> {
        let mut seen = HashSet::new();
        for e in &edges {
            for end in [&e.from, &e.to] {
                if !event_ids.contains(end) {
                    return Err(ModelError::UndeclaredEvent(end.clone()));
                }
            }
            if e.from == e.to {
                return Err(ModelError::SelfEdge(e.from.clone()));
            }
            if !seen.insert((e.from.as_str(), e.to.as_str())) {
                return Err(ModelError::DuplicateBehaviorEdge { from: e.from.clone(), to: e.to.clone() });
            }
        }
        Ok(Self::new_unchecked(event_ids, edges))
    }

    /// Skips the endpoint checks; for feeding the validator.
    pub fn new_unchecked(event_ids: BTreeSet<String>, mut edges: Vec<BehaviorEdge>) -> Self {
        edges.sort_by(|a, b| natural_cmp(&a.from, &b.from).then_with(|| natural_cmp(&a.to, &b.to)));
        BehavioralModel { event_ids, edges }
    }

    pub fn event_ids(&self) -> &BTreeSet<String> {
        &self.event_ids
    }

    pub fn edges(&self) -> &[BehaviorEdge] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Events without incoming edges.
    pub fn sources(&self) -> BTreeSet<&str> {
        let targets: HashSet<&str> = self.edges.iter().map(|e| e.to.as_str()).collect();
        self.event_ids.iter().map(String::as_str).filter(|e| !targets.contains(e)).collect()
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }
}

/// Resolves a machine by its path of names and returns its stage of `kind`.
pub fn find_stage<'m>(
    model: &'m StaticModel,
    machine_path: &[&str],
    kind: ActionKind,
) -> Result<Option<&'m Stage>, ModelError> {
    let unknown = || ModelError::UnknownMachine(machine_path.join("."));
    let (first, rest) = machine_path.split_first().ok_or_else(unknown)?;
    let mut m = model.machines.iter().find(|m| m.name == *first).ok_or_else(unknown)?;
    for name in rest {
        m = m.submachines.iter().find(|c| c.name == *name).ok_or_else(unknown)?;
    }
    Ok(m.stage(kind))
}

/// The region spanned by `stage_ids` together with every edge whose both
/// endpoints lie in that set.
pub fn induced_region(model: &StaticModel, stage_ids: &BTreeSet<String>) -> Result<Region, ModelError> {
    if stage_ids.is_empty() {
        return Err(ModelError::EmptyRegion);
    }
    if let Some(missing) = sorted(stage_ids).into_iter().find(|s| model.stage(s).is_none()) {
        return Err(ModelError::UnknownStage(missing.clone()));
    }
    let edge_ids = model
        .edges()
        .filter(|e| stage_ids.contains(e.source()) && stage_ids.contains(e.target()))
        .map(|e| e.id().to_string())
        .collect();
    Ok(Region { stage_ids: stage_ids.clone(), edge_ids })
}
