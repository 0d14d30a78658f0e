//! Events over a static model, region coverage, and trace conformance
//! against a behavioral model.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::model::{induced_region, BehavioralModel, Event, StaticModel};
use crate::naming::natural_cmp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BehaviorError {
    #[error("event `{0}` is not declared")]
    UnknownEvent(String),
    #[error("trace is empty")]
    EmptyTrace,
    #[error("region of event `{0}` is empty")]
    EmptyRegion(String),
    #[error("event `{0}` has no time; a timeless region is not an event")]
    MissingTime(String),
    #[error("unknown stage `{0}`")]
    UnknownStage(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("edge `{edge}` leaves the region at `{stage}`")]
    EdgeLeavesRegion { edge: String, stage: String },
}

/// Applies time to a region: checks the event and closes its region over
/// every edge between its stages.
pub fn eventize(model: &StaticModel, event: &Event) -> Result<Event, BehaviorError> {
    if !event.has_time() {
        return Err(BehaviorError::MissingTime(event.id.clone()));
    }
    let region = &event.region;
    if region.stage_ids.is_empty() {
        return Err(BehaviorError::EmptyRegion(event.id.clone()));
    }
    let mut stages: Vec<&String> = region.stage_ids.iter().collect();
    stages.sort_by(|a, b| natural_cmp(a, b));
    if let Some(s) = stages.into_iter().find(|s| model.stage(s).is_none()) {
        return Err(BehaviorError::UnknownStage(s.clone()));
    }
    let mut edges: Vec<&String> = region.edge_ids.iter().collect();
    edges.sort_by(|a, b| natural_cmp(a, b));
    for id in edges {
        let e = model.edge(id).ok_or_else(|| BehaviorError::UnknownEdge(id.clone()))?;
        for end in [e.source(), e.target()] {
            if !region.stage_ids.contains(end) {
                return Err(BehaviorError::EdgeLeavesRegion { edge: id.clone(), stage: end.to_string() });
            }
        }
    }
    let region = induced_region(model, &region.stage_ids).expect("stages checked above");
    Ok(Event { region, ..event.clone() })
}

/// Stages that belong to no event's region, in natural order.
pub fn coverage(model: &StaticModel, events: &[Event]) -> Vec<String> {
    let covered: HashSet<&str> = events.iter().flat_map(|e| e.region.stage_ids.iter().map(String::as_str)).collect();
    let mut out: Vec<String> =
        model.all_stages().into_iter().filter(|s| !covered.contains(s.id.as_str())).map(|s| s.id.clone()).collect();
    out.sort_by(|a, b| natural_cmp(a, b));
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub conforms: bool,
    pub violation_index: Option<usize>,
    pub reason: String,
}

impl Verdict {
    fn pass(len: usize) -> Self {
        Verdict { conforms: true, violation_index: None, reason: format!("all {len} events follow the behavior graph") }
    }

    fn fail(index: usize, reason: String) -> Self {
        Verdict { conforms: false, violation_index: Some(index), reason }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.violation_index {
            None => write!(f, "conforms: {}", self.reason),
            Some(i) => write!(f, "violation at index {i}: {}", self.reason),
        }
    }
}

/// Checks a trace step by step against the behavior graph.
///
/// The first event must be a source. Every step needs a direct edge. An
/// event reached by an edge in an exclusive group may not follow another
/// event of the same group unless a source of that group was visited in
/// between (the branch was taken again).
pub fn conform(trace: &[String], behavior: &BehavioralModel) -> Result<Verdict, BehaviorError> {
    if trace.is_empty() {
        return Err(BehaviorError::EmptyTrace);
    }
    if let Some(e) = trace.iter().find(|e| !behavior.event_ids().contains(*e)) {
        return Err(BehaviorError::UnknownEvent(e.clone()));
    }
    let sources = behavior.sources();
    if !sources.contains(trace[0].as_str()) {
        return Ok(Verdict::fail(0, format!("`{}` has incoming edges, so a trace cannot start there", trace[0])));
    }
    let groups_of = |event: &str| -> BTreeSet<&str> {
        behavior.edges().iter().filter(|e| e.to == event).filter_map(|e| e.exclusive_group.as_deref()).collect()
    };
    let branch_points = |group: &str| -> HashSet<&str> {
        behavior
            .edges()
            .iter()
            .filter(|e| e.exclusive_group.as_deref() == Some(group))
            .map(|e| e.from.as_str())
            .collect()
    };
    for i in 1..trace.len() {
        let (prev, cur) = (&trace[i - 1], &trace[i]);
        let mut problems = Vec::new();
        if !behavior.has_edge(prev, cur) {
            problems.push(format!("no edge `{prev}` -> `{cur}`"));
        }
        for group in groups_of(cur) {
            let from = branch_points(group);
            let clash = (0..i).rev().find(|&j| trace[j] != *cur && groups_of(&trace[j]).contains(group));
            if let Some(j) = clash {
                if !(j + 1..i).any(|k| from.contains(trace[k].as_str())) {
                    problems.push(format!("`{cur}` and `{}` share exclusive group \"{group}\"", trace[j]));
                }
            }
        }
        if !problems.is_empty() {
            return Ok(Verdict::fail(i, problems.join("; ")));
        }
    }
    Ok(Verdict::pass(trace.len()))
}

/// Reads a trace written as a JSON array of event ids.
pub fn trace_from_json(text: &str) -> Result<Vec<String>, serde_json::Error> {
    serde_json::from_str(text)
}

/// Reads a comma-separated trace; blanks around ids are ignored.
pub fn trace_from_list(text: &str) -> Vec<String> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActionKind, BehaviorEdge, ModelBuilder, Region};

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn mentcare_like() -> BehavioralModel {
        let e = |f: &str, t: &str, g: Option<&str>| BehaviorEdge {
            from: f.into(),
            to: t.into(),
            exclusive_group: g.map(str::to_string),
        };
        let events: BTreeSet<String> = (1..=8).map(|i| format!("E{i}")).collect();
        BehavioralModel::new(
            events,
            vec![
                e("E1", "E2", None),
                e("E2", "E3", None),
                e("E3", "E4", Some("dangerousness")),
                e("E3", "E7", Some("dangerousness")),
                e("E4", "E5", Some("secure location")),
                e("E4", "E6", Some("secure location")),
                e("E5", "E8", None),
                e("E6", "E8", None),
                e("E7", "E8", None),
            ],
        )
        .unwrap()
    }

    #[test]
    fn conforming_traces() {
        let b = mentcare_like();
        assert!(conform(&ids(&["E1", "E2", "E3", "E4", "E5", "E8"]), &b).unwrap().conforms);
        assert!(conform(&ids(&["E1", "E2", "E3", "E7", "E8"]), &b).unwrap().conforms);
        assert!(conform(&ids(&["E1"]), &b).unwrap().conforms);
    }

    #[test]
    fn exclusive_violation() {
        let v = conform(&ids(&["E1", "E2", "E3", "E4", "E7"]), &mentcare_like()).unwrap();
        assert_eq!(v.violation_index, Some(4));
        assert!(v.reason.contains("no edge `E4` -> `E7`"));
        assert!(v.reason.contains("dangerousness"));
    }

    #[test]
    fn start_and_errors() {
        let b = mentcare_like();
        assert_eq!(conform(&ids(&["E2", "E3"]), &b).unwrap().violation_index, Some(0));
        assert_eq!(conform(&[], &b), Err(BehaviorError::EmptyTrace));
        assert_eq!(conform(&ids(&["E1", "E99"]), &b), Err(BehaviorError::UnknownEvent("E99".into())));
    }

    #[test]
    fn revisiting_branch_point_clears_exclusivity() {
        let e = |f: &str, t: &str, g: Option<&str>| BehaviorEdge {
            from: f.into(),
            to: t.into(),
            exclusive_group: g.map(str::to_string),
        };
        let events: BTreeSet<String> = ["R", "S", "A", "B"].iter().map(|s| s.to_string()).collect();
        let b = BehavioralModel::new(
            events,
            vec![e("R", "S", None), e("S", "A", Some("g")), e("S", "B", Some("g")), e("A", "S", None)],
        )
        .unwrap();
        assert_eq!(conform(&ids(&["R", "S", "A", "B"]), &b).unwrap().violation_index, Some(3));
        assert!(conform(&ids(&["R", "S", "A", "S", "B"]), &b).unwrap().conforms);
    }

    fn model() -> StaticModel {
        let mut b = ModelBuilder::new();
        let a = b.machine(None, "A").unwrap();
        let c = b.stage(&a, ActionKind::Create).unwrap();
        let p = b.stage(&a, ActionKind::Process).unwrap();
        let m = b.machine(None, "B").unwrap();
        b.stage(&m, ActionKind::Process).unwrap();
        b.flow(&c, &p);
        b.build().unwrap()
    }

    fn event(stages: &[&str], time: &str) -> Event {
        Event {
            id: "E".into(),
            name: "E".into(),
            time: Some(time.into()),
            region: Region { stage_ids: stages.iter().map(|s| s.to_string()).collect(), edge_ids: BTreeSet::new() },
            intensity: None,
        }
    }

    #[test]
    fn eventize_cases() {
        let m = model();
        let e = eventize(&m, &event(&["A.create", "A.process", "B.process"], "t0")).unwrap();
        assert_eq!(e.region.edge_ids.len(), 1);
        assert_eq!(eventize(&m, &e).unwrap(), e);
        assert_eq!(eventize(&m, &event(&["A.create"], " ")), Err(BehaviorError::MissingTime("E".into())));
        assert_eq!(eventize(&m, &event(&[], "t")), Err(BehaviorError::EmptyRegion("E".into())));
        assert_eq!(eventize(&m, &event(&["Z.create"], "t")), Err(BehaviorError::UnknownStage("Z.create".into())));
        let mut bad = event(&["A.create"], "t");
        bad.region.edge_ids.insert("f1".into());
        assert!(matches!(eventize(&m, &bad), Err(BehaviorError::EdgeLeavesRegion { .. })));
    }

    #[test]
    fn coverage_is_set_difference() {
        let m = model();
        assert_eq!(coverage(&m, &[event(&["A.create"], "t")]), ["A.process", "B.process"]);
        assert!(coverage(&m, &[event(&["A.create", "A.process", "B.process"], "t")]).is_empty());
    }

    #[test]
    fn trace_readers() {
        assert_eq!(trace_from_list("E1, E2,E3,"), ids(&["E1", "E2", "E3"]));
        assert_eq!(trace_from_json("[\"E1\",\"E2\"]").unwrap(), ids(&["E1", "E2"]));
    }
}
