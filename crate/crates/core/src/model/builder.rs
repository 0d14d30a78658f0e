use std::collections::HashMap;

use super::{ActionKind, Flow, Machine, ModelError, Stage, StaticModel, Trigger};

#[derive(Debug, Clone)]
struct Draft {
    id: String,
    name: String,
    label: Option<String>,
    is_constraint: bool,
    parent: Option<usize>,
    stages: Vec<Stage>,
}

/// Incremental construction of a [`StaticModel`] with canonical ids.
///
/// Machine ids are dotted name paths (`Mentcare.Police`), stage ids append
/// the kind (`Mentcare.Police.receive`), and edges get `f1, f2, …` and
/// `t1, t2, …` unless an id is supplied.
#[derive(Debug, Clone, Default)]
pub struct ModelBuilder {
    machines: Vec<Draft>,
    by_id: HashMap<String, usize>,
    flows: Vec<Flow>,
    triggers: Vec<Trigger>,
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts from an existing model, keeping all of its ids.
    pub fn from_model(model: &StaticModel) -> Self {
        let mut b = Self::new();
        fn walk(b: &mut ModelBuilder, ms: &[Machine], parent: Option<usize>) {
            for m in ms {
                let idx = b.machines.len();
                b.machines.push(Draft {
                    id: m.id.clone(),
                    name: m.name.clone(),
                    label: m.label.clone(),
                    is_constraint: m.is_constraint,
                    parent,
                    stages: m.stages.clone(),
                });
                b.by_id.insert(m.id.clone(), idx);
                walk(b, &m.submachines, Some(idx));
            }
        }
        walk(&mut b, model.machines(), None);
        b.flows = model.flows().to_vec();
        b.triggers = model.triggers().to_vec();
        b
    }

    /// Adds a machine under `parent` (or at the top level) and returns its id.
    pub fn machine(&mut self, parent: Option<&str>, name: &str) -> Result<String, ModelError> {
        let parent_idx = match parent {
            Some(p) => Some(*self.by_id.get(p).ok_or_else(|| ModelError::UnknownMachine(p.into()))?),
            None => None,
        };
        let id = match parent {
            Some(p) => format!("{p}.{name}"),
            None => name.to_string(),
        };
        if self.by_id.contains_key(&id) {
            return Err(ModelError::DuplicateId(id));
        }
        self.by_id.insert(id.clone(), self.machines.len());
        self.machines.push(Draft {
            id: id.clone(),
            name: name.to_string(),
            label: None,
            is_constraint: false,
            parent: parent_idx,
            stages: Vec::new(),
        });
        Ok(id)
    }

    fn draft_mut(&mut self, machine: &str) -> Result<&mut Draft, ModelError> {
        let idx = *self.by_id.get(machine).ok_or_else(|| ModelError::UnknownMachine(machine.into()))?;
        Ok(&mut self.machines[idx])
    }

    pub fn set_label(&mut self, machine: &str, label: Option<String>) -> Result<(), ModelError> {
        self.draft_mut(machine)?.label = label;
        Ok(())
    }

    pub fn set_constraint(&mut self, machine: &str, is_constraint: bool) -> Result<(), ModelError> {
        self.draft_mut(machine)?.is_constraint = is_constraint;
        Ok(())
    }

    /// Adds a stage of `kind` to `machine`; fails if one already exists.
    pub fn stage(&mut self, machine: &str, kind: ActionKind) -> Result<String, ModelError> {
        let draft = self.draft_mut(machine)?;
        if draft.stages.iter().any(|s| s.kind == kind) {
            return Err(ModelError::DuplicateKind { machine: machine.into(), kind });
        }
        let id = format!("{}.{}", draft.id, kind);
        draft.stages.push(Stage { id: id.clone(), kind, has_storage: false, label: None, owner: draft.id.clone() });
        Ok(id)
    }

    /// Returns the stage of `kind` in `machine`, adding it if missing.
    pub fn ensure_stage(&mut self, machine: &str, kind: ActionKind) -> Result<String, ModelError> {
        let draft = self.draft_mut(machine)?;
        if let Some(s) = draft.stages.iter().find(|s| s.kind == kind) {
            return Ok(s.id.clone());
        }
        self.stage(machine, kind)
    }

    pub fn stage_mut(&mut self, stage_id: &str) -> Option<&mut Stage> {
        self.machines.iter_mut().flat_map(|d| d.stages.iter_mut()).find(|s| s.id == stage_id)
    }

    /// Removes every stage matching `pred`, returning the removed stages.
    pub fn remove_stages(&mut self, mut pred: impl FnMut(&Stage) -> bool) -> Vec<Stage> {
        let mut removed = Vec::new();
        for d in &mut self.machines {
            let (gone, kept): (Vec<Stage>, Vec<Stage>) = d.stages.drain(..).partition(|s| pred(s));
            d.stages = kept;
            removed.extend(gone);
        }
        removed
    }

    pub fn flow(&mut self, source: &str, target: &str) -> String {
        let id = next_id("f", self.flows.len(), |c| self.flows.iter().any(|f| f.id == c));
        self.flows.push(Flow { id: id.clone(), source: source.into(), target: target.into() });
        id
    }

    pub fn flow_with_id(&mut self, id: &str, source: &str, target: &str) {
        self.flows.push(Flow { id: id.into(), source: source.into(), target: target.into() });
    }

    pub fn trigger(&mut self, source: &str, target: &str, guard: Option<&str>) -> String {
        let id = next_id("t", self.triggers.len(), |c| self.triggers.iter().any(|t| t.id == c));
        self.triggers.push(Trigger {
            id: id.clone(),
            source: source.into(),
            target: target.into(),
            guard: guard.map(str::to_string),
        });
        id
    }

    pub fn trigger_with_id(&mut self, id: &str, source: &str, target: &str, guard: Option<&str>) {
        self.triggers.push(Trigger {
            id: id.into(),
            source: source.into(),
            target: target.into(),
            guard: guard.map(str::to_string),
        });
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn triggers(&self) -> &[Trigger] {
        &self.triggers
    }

    pub fn replace_edges(&mut self, flows: Vec<Flow>, triggers: Vec<Trigger>) {
        self.flows = flows;
        self.triggers = triggers;
    }

    fn assemble(self) -> (Vec<Machine>, Vec<Flow>, Vec<Trigger>) {
        let n = self.machines.len();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut roots = Vec::new();
        for (i, d) in self.machines.iter().enumerate() {
            match d.parent {
                Some(p) => children[p].push(i),
                None => roots.push(i),
            }
        }
        fn build(i: usize, drafts: &[Draft], children: &[Vec<usize>]) -> Machine {
            let d = &drafts[i];
            Machine {
                id: d.id.clone(),
                name: d.name.clone(),
                label: d.label.clone(),
                is_constraint: d.is_constraint,
                stages: d.stages.clone(),
                submachines: children[i].iter().map(|&c| build(c, drafts, children)).collect(),
                parent: d.parent.map(|p| drafts[p].id.clone()),
            }
        }
        let machines = roots.iter().map(|&r| build(r, &self.machines, &children)).collect();
        (machines, self.flows, self.triggers)
    }

    pub fn build(self) -> Result<StaticModel, ModelError> {
        let (m, f, t) = self.assemble();
        StaticModel::new(m, f, t)
    }

    pub fn build_unchecked(self) -> StaticModel {
        let (m, f, t) = self.assemble();
        StaticModel::new_unchecked(m, f, t)
    }
}

fn next_id(prefix: &str, count: usize, taken: impl Fn(&str) -> bool) -> String {
    let mut n = count + 1;
    loop {
        let id = format!("{prefix}{n}");
        if !taken(&id) {
            return id;
        }
        n += 1;
    }
}
