use std::fmt::Write;

use super::{Anchor, Comments};
use crate::model::{BehavioralModel, Event, Machine, StaticModel};
use crate::naming::natural_cmp;

struct Out<'c> {
    text: String,
    comments: Option<&'c Comments>,
}

impl Out<'_> {
    fn comments(&mut self, anchor: &Anchor, indent: usize) {
        let Some(c) = self.comments else { return };
        for line in c.get(anchor) {
            let _ = writeln!(self.text, "{:indent$}#{line}", "", indent = indent * 2);
        }
    }

    fn line(&mut self, indent: usize, s: &str) {
        let _ = writeln!(self.text, "{:indent$}{s}", "", indent = indent * 2);
    }

    /// Separates sections with one blank line.
    fn gap(&mut self) {
        if !self.text.is_empty() && !self.text.ends_with("\n\n") {
            self.text.push('\n');
        }
    }
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn sorted_machines(ms: &[Machine]) -> Vec<&Machine> {
    let mut v: Vec<&Machine> = ms.iter().collect();
    v.sort_by(|a, b| natural_cmp(&a.name, &b.name));
    v
}

fn machine(out: &mut Out, m: &Machine, indent: usize) {
    out.comments(&Anchor::Machine(m.id.clone()), indent);
    let mut head = format!("machine {}", m.name);
    if m.is_constraint {
        head.push_str(" constraint");
    }
    if let Some(l) = &m.label {
        let _ = write!(head, ": {}", quote(l));
    }
    head.push_str(" {");
    out.line(indent, &head);
    let mut stages: Vec<_> = m.stages.iter().collect();
    stages.sort_by_key(|s| s.kind);
    for s in stages {
        out.comments(&Anchor::Stage(s.id.clone()), indent + 1);
        let mut line = s.kind.to_string();
        if s.has_storage {
            line.push_str(" store");
        }
        if let Some(l) = &s.label {
            let _ = write!(line, ": {}", quote(l));
        }
        line.push(';');
        out.line(indent + 1, &line);
    }
    for child in sorted_machines(&m.submachines) {
        machine(out, child, indent + 1);
    }
    out.comments(&Anchor::MachineEnd(m.id.clone()), indent + 1);
    out.line(indent, "}");
}

pub(crate) fn print_with(
    model: &StaticModel,
    events: &[Event],
    behavior: &BehavioralModel,
    comments: Option<&Comments>,
) -> String {
    let mut out = Out { text: String::new(), comments };

    for m in sorted_machines(model.machines()) {
        out.gap();
        machine(&mut out, m, 0);
    }

    let mut flows: Vec<_> = model.flows().iter().collect();
    flows.sort_by(|a, b| natural_cmp(&a.id, &b.id));
    out.gap();
    for (i, f) in flows.iter().enumerate() {
        out.comments(&Anchor::Flow(f.id.clone()), 0);
        let name = if f.id == format!("f{}", i + 1) { String::new() } else { format!("{}: ", f.id) };
        out.line(0, &format!("flow {name}{} -> {};", f.source, f.target));
    }

    let mut triggers: Vec<_> = model.triggers().iter().collect();
    triggers.sort_by(|a, b| natural_cmp(&a.id, &b.id));
    out.gap();
    for (i, t) in triggers.iter().enumerate() {
        out.comments(&Anchor::Trigger(t.id.clone()), 0);
        let name = if t.id == format!("t{}", i + 1) { String::new() } else { format!("{}: ", t.id) };
        let guard = t.guard.as_deref().map(|g| format!(" if {}", quote(g))).unwrap_or_default();
        out.line(0, &format!("trigger {name}{} => {}{guard};", t.source, t.target));
    }

    let mut evs: Vec<&Event> = events.iter().collect();
    evs.sort_by(|a, b| natural_cmp(&a.id, &b.id));
    for e in evs {
        out.gap();
        out.comments(&Anchor::Event(e.id.clone()), 0);
        if e.name == e.id {
            out.line(0, &format!("event {} {{", e.id));
        } else {
            out.line(0, &format!("event {}: {} {{", e.id, quote(&e.name)));
        }
        out.comments(&Anchor::EventBody(e.id.clone()), 1);
        out.line(1, &format!("time {};", quote(e.time.as_deref().unwrap_or(""))));
        out.line(1, "region {");
        let mut stages: Vec<&String> = e.region.stage_ids.iter().collect();
        stages.sort_by(|a, b| natural_cmp(a, b));
        for s in stages {
            out.line(2, s);
        }
        let mut edges: Vec<&String> = e.region.edge_ids.iter().collect();
        edges.sort_by(|a, b| natural_cmp(a, b));
        for id in edges {
            out.line(2, &format!("edge {id}"));
        }
        out.line(1, "}");
        if let Some(i) = &e.intensity {
            out.line(1, &format!("intensity {};", quote(i)));
        }
        out.line(0, "}");
    }

    let has_behavior_comments = comments.is_some_and(|c| {
        c.leading.keys().any(|a| matches!(a, Anchor::Behavior | Anchor::BehaviorEnd | Anchor::BehaviorEdge(..)))
    });
    if !behavior.edges().is_empty() || has_behavior_comments {
        out.gap();
        out.comments(&Anchor::Behavior, 0);
        out.line(0, "behavior {");
        for e in behavior.edges() {
            out.comments(&Anchor::BehaviorEdge(e.from.clone(), e.to.clone()), 1);
            let excl = e.exclusive_group.as_deref().map(|g| format!(" excl {}", quote(g))).unwrap_or_default();
            out.line(1, &format!("{} -> {}{excl};", e.from, e.to));
        }
        out.comments(&Anchor::BehaviorEnd, 1);
        out.line(0, "}");
    }

    if let Some(c) = comments {
        if !c.trailing.is_empty() {
            out.gap();
            for line in &c.trailing {
                out.line(0, &format!("#{line}"));
            }
        }
    }

    // `gap` may leave a trailing blank line after an empty section.
    while out.text.ends_with("\n\n") {
        out.text.pop();
    }
    out.text
}

#[cfg(test)]
mod tests {
    use crate::dsl::{parse, print};
    use crate::model::model_isomorphic;

    #[test]
    fn empty_prints_empty() {
        let d = parse("").unwrap();
        assert_eq!(print(&d.model, &d.events, &d.behavior), "");
    }

    #[test]
    fn canonical_layout() {
        let text = "machine B { process; receive; }\nmachine A { create; }\nflow A.create -> B.receive;\ntrigger B.receive => A.create if \"say \\\"hi\\\"\";";
        let d = parse(text).unwrap();
        let out = print(&d.model, &d.events, &d.behavior);
        assert_eq!(
            out,
            "machine A {\n  create;\n}\n\nmachine B {\n  process;\n  receive;\n}\n\nflow A.create -> B.receive;\n\ntrigger B.receive => A.create if \"say \\\"hi\\\"\";\n"
        );
        let again = parse(&out).unwrap();
        assert!(model_isomorphic(&again.model, &d.model));
        assert_eq!(print(&again.model, &again.events, &again.behavior), out);
    }

    #[test]
    fn named_edges_survive() {
        let text = "machine A { create; process; }\nflow A.create -> A.process;\nflow back: A.process -> A.create;\n";
        let d = parse(text).unwrap();
        let out = print(&d.model, &d.events, &d.behavior);
        assert!(out.contains("flow back: A.process -> A.create;"));
        let again = parse(&out).unwrap();
        assert_eq!(again.model.edge("back").unwrap().source(), "A.process");
        assert_eq!(print(&again.model, &again.events, &again.behavior), out);
    }

    #[test]
    fn comments_round_trip() {
        let text = "# header\nmachine A {\n  # start here\n  create;\n  process;\n  # end of A\n}\n\n# the flow\nflow A.create -> A.process;\n\nevent E1: \"First\" {\n  # inside\n  time \"t1\";\n  region {\n    A.create\n  }\n}\n\nbehavior {\n  # nothing yet\n}\n\n# bye\n";
        let d = parse(text).unwrap();
        assert_eq!(d.to_text(), text);
    }
}
