use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BehaviorEdge, BehavioralModel, Event, Flow, Machine, ModelError, StaticModel, Trigger};

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("malformed JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
}

#[derive(Serialize, Deserialize, Default)]
struct BehaviorJson {
    #[serde(default)]
    event_ids: BTreeSet<String>,
    #[serde(default)]
    edges: Vec<BehaviorEdge>,
}

#[derive(Serialize, Deserialize, Default)]
struct Interchange {
    #[serde(default)]
    machines: Vec<Machine>,
    #[serde(default)]
    flows: Vec<Flow>,
    #[serde(default)]
    triggers: Vec<Trigger>,
    #[serde(default)]
    events: Vec<Event>,
    #[serde(default)]
    behavior: BehaviorJson,
}

/// Pretty JSON with keys in alphabetical order at every level.
pub fn to_json(model: &StaticModel, events: &[Event], behavior: &BehavioralModel) -> String {
    let doc = Interchange {
        machines: model.machines().to_vec(),
        flows: model.flows().to_vec(),
        triggers: model.triggers().to_vec(),
        events: events.to_vec(),
        behavior: BehaviorJson { event_ids: behavior.event_ids().clone(), edges: behavior.edges().to_vec() },
    };
    // serde_json's default map is ordered, so going through `Value` sorts keys.
    let value = serde_json::to_value(&doc).expect("model types always serialize");
    let mut text = serde_json::to_string_pretty(&value).expect("values always serialize");
    text.push('\n');
    text
}

/// Reads the interchange form, checking the model invariants. Event regions
/// are not checked here; the validator reports them.
pub fn from_json(text: &str) -> Result<(StaticModel, Vec<Event>, BehavioralModel), JsonError> {
    let doc: Interchange = serde_json::from_str(text)?;
    let model = StaticModel::new(doc.machines, doc.flows, doc.triggers)?;
    let mut ids = doc.behavior.event_ids;
    ids.extend(doc.events.iter().map(|e| e.id.clone()));
    let behavior = BehavioralModel::new(ids, doc.behavior.edges)?;
    Ok((model, doc.events, behavior))
}
