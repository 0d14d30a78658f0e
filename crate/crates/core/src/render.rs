//! Graphviz DOT output. Everything is emitted in sorted order so the bytes
//! depend only on the model.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write;

use thiserror::Error;

use crate::model::{BehavioralModel, Event, Machine, Region, StaticModel};
use crate::naming::natural_cmp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("highlight cites unknown stage `{0}`")]
    UnknownStage(String),
    #[error("highlight cites unknown edge `{0}`")]
    UnknownEdge(String),
}

const HIGHLIGHT_FILL: &str = "#ffe08a";
const HIGHLIGHT_EDGE: &str = "#c0392b";
const GROUP_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// A double-quoted DOT id.
pub fn dot_id(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn sorted_by_name(ms: &[Machine]) -> Vec<&Machine> {
    let mut v: Vec<&Machine> = ms.iter().collect();
    v.sort_by(|a, b| natural_cmp(&a.name, &b.name));
    v
}

fn cluster(out: &mut String, m: &Machine, depth: usize, lit: &HashSet<&str>) {
    let pad = "  ".repeat(depth);
    let _ = writeln!(out, "{pad}subgraph {} {{", dot_id(&format!("cluster_{}", m.id)));
    let _ = writeln!(out, "{pad}  label={};", dot_id(m.display_name()));
    if m.is_constraint {
        let _ = writeln!(out, "{pad}  style=dashed;");
    }
    let mut stages: Vec<_> = m.stages.iter().collect();
    stages.sort_by_key(|s| s.kind);
    for s in stages {
        let mut label = s.kind.to_string();
        if let Some(l) = &s.label {
            label.push('\n');
            label.push_str(l);
        }
        let mut attrs = vec![format!("label={}", dot_id(&label))];
        if s.has_storage {
            attrs.push("shape=cylinder".into());
        }
        if lit.contains(s.id.as_str()) {
            attrs.push("style=filled".into());
            attrs.push(format!("fillcolor={}", dot_id(HIGHLIGHT_FILL)));
        }
        let _ = writeln!(out, "{pad}  {} [{}];", dot_id(&s.id), attrs.join(", "));
    }
    for child in sorted_by_name(&m.submachines) {
        cluster(out, child, depth + 1, lit);
    }
    let _ = writeln!(out, "{pad}}}");
}

/// Machines as nested clusters, stages as boxes (cylinders with storage),
/// flows solid, triggers dashed with their guard. Stages and edges of
/// `highlight` are filled and coloured.
pub fn render_static(model: &StaticModel, highlight: Option<&Region>) -> Result<String, RenderError> {
    let empty = Region::default();
    let region = highlight.unwrap_or(&empty);
    let mut stage_ids: Vec<&String> = region.stage_ids.iter().collect();
    stage_ids.sort_by(|a, b| natural_cmp(a, b));
    if let Some(s) = stage_ids.into_iter().find(|s| model.stage(s).is_none()) {
        return Err(RenderError::UnknownStage(s.clone()));
    }
    let mut edge_ids: Vec<&String> = region.edge_ids.iter().collect();
    edge_ids.sort_by(|a, b| natural_cmp(a, b));
    if let Some(e) = edge_ids.into_iter().find(|e| model.edge(e).is_none()) {
        return Err(RenderError::UnknownEdge(e.clone()));
    }
    let lit: HashSet<&str> = region.stage_ids.iter().map(String::as_str).collect();

    let mut out = String::from("digraph tm {\n  rankdir=LR;\n  compound=true;\n  node [shape=box];\n");
    for m in sorted_by_name(model.machines()) {
        cluster(&mut out, m, 1, &lit);
    }
    let mut flows: Vec<_> = model.flows().iter().collect();
    flows.sort_by(|a, b| natural_cmp(&a.id, &b.id));
    for f in flows {
        let mut attrs = Vec::new();
        if region.edge_ids.contains(&f.id) {
            attrs.push(format!("color={}", dot_id(HIGHLIGHT_EDGE)));
            attrs.push("penwidth=2".into());
        }
        edge_line(&mut out, &f.source, &f.target, &attrs);
    }
    let mut triggers: Vec<_> = model.triggers().iter().collect();
    triggers.sort_by(|a, b| natural_cmp(&a.id, &b.id));
    for t in triggers {
        let mut attrs = vec!["style=dashed".to_string()];
        if let Some(g) = &t.guard {
            attrs.push(format!("label={}", dot_id(g)));
        }
        if region.edge_ids.contains(&t.id) {
            attrs.push(format!("color={}", dot_id(HIGHLIGHT_EDGE)));
            attrs.push("penwidth=2".into());
        }
        edge_line(&mut out, &t.source, &t.target, &attrs);
    }
    out.push_str("}\n");
    Ok(out)
}

fn edge_line(out: &mut String, from: &str, to: &str, attrs: &[String]) {
    if attrs.is_empty() {
        let _ = writeln!(out, "  {} -> {};", dot_id(from), dot_id(to));
    } else {
        let _ = writeln!(out, "  {} -> {} [{}];", dot_id(from), dot_id(to), attrs.join(", "));
    }
}

/// Events as nodes labelled `ID: name`, chronology edges between them;
/// edges in an exclusive group share a colour and carry the group name.
pub fn render_behavior(behavior: &BehavioralModel, events: &[Event]) -> String {
    let mut ids: BTreeSet<&str> = behavior.event_ids().iter().map(String::as_str).collect();
    ids.extend(events.iter().map(|e| e.id.as_str()));
    let mut ids: Vec<&str> = ids.into_iter().collect();
    ids.sort_by(|a, b| natural_cmp(a, b));
    let groups: Vec<&str> = behavior
        .edges()
        .iter()
        .filter_map(|e| e.exclusive_group.as_deref())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut out = String::from("digraph behavior {\n  rankdir=TB;\n  node [shape=ellipse];\n");
    for id in ids {
        let label = match events.iter().find(|e| e.id == id) {
            Some(e) if e.name != e.id => format!("{id}: {}", e.name),
            _ => id.to_string(),
        };
        let _ = writeln!(out, "  {} [label={}];", dot_id(id), dot_id(&label));
    }
    for e in behavior.edges() {
        let attrs: Vec<String> = match e.exclusive_group.as_deref() {
            Some(g) => {
                let i = groups.iter().position(|x| *x == g).unwrap_or(0);
                let color = dot_id(GROUP_COLORS[i % GROUP_COLORS.len()]);
                vec![format!("label={}", dot_id(g)), format!("color={color}"), format!("fontcolor={color}")]
            }
            None => Vec::new(),
        };
        edge_line(&mut out, &e.from, &e.to, &attrs);
    }
    out.push_str("}\n");
    out
}
