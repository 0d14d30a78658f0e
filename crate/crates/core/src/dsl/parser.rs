use std::collections::{BTreeSet, HashMap, HashSet};

use super::lexer::{lex, Tok, Token};
use super::{Anchor, Comments, DiagnosticCode, Document, ParseDiagnostic, SourceSpan};
use crate::model::{
    ActionKind, BehaviorEdge, BehavioralModel, Event, Flow, Machine, Region, Stage, StaticModel, Trigger,
};
use crate::naming::is_reserved;

use DiagnosticCode::{DuplicateId, InvalidStructure, SyntaxError, UnresolvedReference};

struct StageDecl {
    kind: ActionKind,
    store: bool,
    label: Option<String>,
    span: SourceSpan,
}

struct MachineDecl {
    id: String,
    name: String,
    span: SourceSpan,
    label: Option<String>,
    constraint: bool,
    stages: Vec<StageDecl>,
    children: Vec<MachineDecl>,
}

struct RefDecl {
    text: String,
    span: SourceSpan,
}

struct EdgeDecl {
    name: Option<(String, SourceSpan)>,
    span: SourceSpan,
    source: RefDecl,
    target: RefDecl,
    guard: Option<String>,
}

enum RegionItem {
    Stage(RefDecl),
    Edge(String, SourceSpan),
}

struct EventDecl {
    id: String,
    span: SourceSpan,
    name: Option<String>,
    time: String,
    time_span: SourceSpan,
    region: Vec<RegionItem>,
    intensity: Option<String>,
}

struct BehaviorDecl {
    from: (String, SourceSpan),
    to: (String, SourceSpan),
    group: Option<String>,
}

#[derive(Default)]
struct Ast {
    machines: Vec<MachineDecl>,
    flows: Vec<EdgeDecl>,
    triggers: Vec<EdgeDecl>,
    events: Vec<EventDecl>,
    behavior: Vec<BehaviorDecl>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    pending: Vec<String>,
    comments: Comments,
}

type PResult<T> = Result<T, ParseDiagnostic>;

impl Parser {
    /// Next non-comment token; comments are queued for the next anchor.
    fn peek(&mut self) -> &Token {
        while let Tok::Comment(c) = &self.toks[self.pos].tok {
            self.pending.push(c.clone());
            self.pos += 1;
        }
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        self.peek();
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn anchor(&mut self, a: Anchor) {
        if !self.pending.is_empty() {
            let taken = std::mem::take(&mut self.pending);
            self.comments.leading.entry(a).or_default().extend(taken);
        }
    }

    fn error<T>(&self, span: SourceSpan, msg: impl Into<String>) -> PResult<T> {
        Err(ParseDiagnostic::new(span, SyntaxError, msg))
    }

    fn expect(&mut self, want: Tok, what: &str) -> PResult<SourceSpan> {
        let t = self.next();
        if t.tok == want {
            Ok(t.span)
        } else {
            self.error(t.span, format!("expected {what}, found {}", t.tok.describe()))
        }
    }

    fn keyword(&mut self, word: &str) -> PResult<SourceSpan> {
        self.expect(Tok::Ident(word.into()), &format!("`{word}`"))
    }

    fn string(&mut self) -> PResult<(String, SourceSpan)> {
        let t = self.next();
        match t.tok {
            Tok::Str(s) => Ok((s, t.span)),
            other => self.error(t.span, format!("expected string, found {}", other.describe())),
        }
    }

    /// An identifier that is not a reserved word.
    fn name(&mut self, what: &str) -> PResult<(String, SourceSpan)> {
        let t = self.next();
        match t.tok {
            Tok::Ident(s) if is_reserved(&s) => {
                self.error(t.span, format!("`{s}` is a reserved word and cannot be used as {what}"))
            }
            Tok::Ident(s) => Ok((s, t.span)),
            other => self.error(t.span, format!("expected {what}, found {}", other.describe())),
        }
    }

    fn at(&mut self, tok: &Tok) -> bool {
        &self.peek().tok == tok
    }

    fn at_word(&mut self, word: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(w) if w == word)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.next();
            true
        } else {
            false
        }
    }

    fn parse_model(&mut self) -> PResult<Ast> {
        let mut ast = Ast::default();
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Eof => break,
                Tok::Ident(w) if w == "machine" => {
                    let m = self.parse_machine(None)?;
                    ast.machines.push(m);
                }
                Tok::Ident(w) if w == "flow" => {
                    let ordinal = ast.flows.len() + 1;
                    let e = self.parse_edge("flow", Tok::Arrow, ordinal)?;
                    ast.flows.push(e);
                }
                Tok::Ident(w) if w == "trigger" => {
                    let ordinal = ast.triggers.len() + 1;
                    let e = self.parse_edge("trigger", Tok::FatArrow, ordinal)?;
                    ast.triggers.push(e);
                }
                Tok::Ident(w) if w == "event" => {
                    let e = self.parse_event()?;
                    ast.events.push(e);
                }
                Tok::Ident(w) if w == "behavior" => self.parse_behavior(&mut ast.behavior)?,
                other => {
                    return self.error(
                        t.span,
                        format!(
                            "expected `machine`, `flow`, `trigger`, `event` or `behavior`, found {}",
                            other.describe()
                        ),
                    );
                }
            }
        }
        self.comments.trailing = std::mem::take(&mut self.pending);
        Ok(ast)
    }

    fn parse_machine(&mut self, parent: Option<&str>) -> PResult<MachineDecl> {
        self.keyword("machine")?;
        let (name, span) = self.name("a machine name")?;
        let id = match parent {
            Some(p) => format!("{p}.{name}"),
            None => name.clone(),
        };
        self.anchor(Anchor::Machine(id.clone()));
        let mut constraint = false;
        while self.at_word("constraint") {
            self.next();
            constraint = true;
        }
        let label = if self.eat(&Tok::Colon) { Some(self.string()?.0) } else { None };
        self.expect(Tok::LBrace, "`{`")?;
        let mut m = MachineDecl { id, name, span, label, constraint, stages: Vec::new(), children: Vec::new() };
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::RBrace => {
                    self.anchor(Anchor::MachineEnd(m.id.clone()));
                    self.next();
                    break;
                }
                Tok::Ident(w) if w == "machine" => {
                    let child = self.parse_machine(Some(&m.id))?;
                    m.children.push(child);
                }
                Tok::Ident(w) if ActionKind::from_keyword(w).is_some() => {
                    let kind = ActionKind::from_keyword(w).expect("checked");
                    self.next();
                    self.anchor(Anchor::Stage(format!("{}.{kind}", m.id)));
                    let store = if self.at_word("store") {
                        self.next();
                        true
                    } else {
                        false
                    };
                    let label = if self.eat(&Tok::Colon) { Some(self.string()?.0) } else { None };
                    self.expect(Tok::Semi, "`;`")?;
                    m.stages.push(StageDecl { kind, store, label, span: t.span });
                }
                other => {
                    return self.error(
                        t.span,
                        format!("expected a stage kind, `machine` or `}}`, found {}", other.describe()),
                    );
                }
            }
        }
        Ok(m)
    }

    fn parse_ref(&mut self) -> PResult<RefDecl> {
        let (first, span) = self.name("a machine name")?;
        let mut parts = vec![first];
        let end;
        loop {
            self.expect(Tok::Dot, "`.` in a stage reference")?;
            let t = self.next();
            match t.tok {
                Tok::Ident(w) if ActionKind::from_keyword(&w).is_some() => {
                    parts.push(w);
                    end = t.span;
                    break;
                }
                Tok::Ident(w) if !is_reserved(&w) => parts.push(w),
                other => {
                    return self
                        .error(t.span, format!("expected a machine name or stage kind, found {}", other.describe()));
                }
            }
        }
        let length = if end.line == span.line { end.column + end.length - span.column } else { span.length };
        Ok(RefDecl { text: parts.join("."), span: SourceSpan { length, ..span } })
    }

    fn parse_edge(&mut self, keyword: &str, arrow: Tok, ordinal: usize) -> PResult<EdgeDecl> {
        let span = self.keyword(keyword)?;
        // `flow NAME: REF -> REF;` or `flow REF -> REF;`
        self.peek();
        let named = self.toks[self.pos + 1..].iter().find(|t| !matches!(t.tok, Tok::Comment(_))).map(|t| &t.tok)
            == Some(&Tok::Colon);
        let name = if named {
            let n = self.name("an edge name")?;
            self.expect(Tok::Colon, "`:`")?;
            Some(n)
        } else {
            None
        };
        let prefix = if keyword == "flow" { "f" } else { "t" };
        let id = name.as_ref().map(|n| n.0.clone()).unwrap_or_else(|| format!("{prefix}{ordinal}"));
        self.anchor(if keyword == "flow" { Anchor::Flow(id) } else { Anchor::Trigger(id) });
        let source = self.parse_ref()?;
        let arrow_desc = arrow.describe();
        self.expect(arrow, &arrow_desc)?;
        let target = self.parse_ref()?;
        let guard = if keyword == "trigger" && self.at_word("if") {
            self.next();
            Some(self.string()?.0)
        } else {
            None
        };
        self.expect(Tok::Semi, "`;`")?;
        Ok(EdgeDecl { name, span, source, target, guard })
    }

    fn parse_event(&mut self) -> PResult<EventDecl> {
        self.keyword("event")?;
        let (id, span) = self.name("an event id")?;
        self.anchor(Anchor::Event(id.clone()));
        let name = if self.eat(&Tok::Colon) { Some(self.string()?.0) } else { None };
        self.expect(Tok::LBrace, "`{`")?;
        let body = Anchor::EventBody(id.clone());
        self.keyword("time")?;
        self.anchor(body.clone());
        let (time, time_span) = self.string()?;
        self.expect(Tok::Semi, "`;`")?;
        self.keyword("region")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut region = Vec::new();
        loop {
            self.peek();
            self.anchor(body.clone());
            if self.at(&Tok::RBrace) {
                let t = self.next();
                if region.is_empty() {
                    return self.error(t.span, "region needs at least one stage or edge");
                }
                break;
            }
            if self.at_word("edge") {
                self.next();
                let (e, espan) = self.name("an edge id")?;
                region.push(RegionItem::Edge(e, espan));
            } else {
                region.push(RegionItem::Stage(self.parse_ref()?));
            }
        }
        let intensity = if self.at_word("intensity") {
            self.next();
            let s = self.string()?.0;
            self.expect(Tok::Semi, "`;`")?;
            Some(s)
        } else {
            None
        };
        self.peek();
        self.anchor(body);
        self.expect(Tok::RBrace, "`}`")?;
        Ok(EventDecl { id, span, name, time, time_span, region, intensity })
    }

    fn parse_behavior(&mut self, out: &mut Vec<BehaviorDecl>) -> PResult<()> {
        self.keyword("behavior")?;
        self.anchor(Anchor::Behavior);
        self.expect(Tok::LBrace, "`{`")?;
        loop {
            self.peek();
            if self.at(&Tok::RBrace) {
                self.anchor(Anchor::BehaviorEnd);
                self.next();
                return Ok(());
            }
            let from = self.name("an event id")?;
            self.anchor(Anchor::BehaviorEdge(from.0.clone(), String::new()));
            self.expect(Tok::Arrow, "`->`")?;
            let to = self.name("an event id")?;
            // Re-key the comments now that the target is known.
            if let Some(c) = self.comments.leading.remove(&Anchor::BehaviorEdge(from.0.clone(), String::new())) {
                self.comments.leading.entry(Anchor::BehaviorEdge(from.0.clone(), to.0.clone())).or_default().extend(c);
            }
            let group = if self.at_word("excl") {
                self.next();
                Some(self.string()?.0)
            } else {
                None
            };
            self.expect(Tok::Semi, "`;`")?;
            out.push(BehaviorDecl { from, to, group });
        }
    }
}

pub(crate) fn parse(text: &str) -> Result<Document, Vec<ParseDiagnostic>> {
    let toks = lex(text).map_err(|d| vec![d])?;
    let mut p = Parser { toks, pos: 0, pending: Vec::new(), comments: Comments::default() };
    let ast = p.parse_model().map_err(|d| vec![d])?;
    let comments = p.comments;
    let (model, events, behavior) = resolve(ast)?;
    Ok(Document { model, events, behavior, comments })
}

struct Resolver {
    ids: HashSet<String>,
    stages: HashSet<String>,
    diags: Vec<ParseDiagnostic>,
}

impl Resolver {
    fn claim(&mut self, id: &str, span: SourceSpan) {
        if !self.ids.insert(id.to_string()) {
            self.diags.push(ParseDiagnostic::new(span, DuplicateId, format!("`{id}` is already declared")));
        }
    }

    fn stage_ref(&mut self, r: &RefDecl) -> bool {
        if self.stages.contains(&r.text) {
            true
        } else {
            self.diags.push(ParseDiagnostic::new(
                r.span,
                UnresolvedReference,
                format!("no stage `{}` is declared", r.text),
            ));
            false
        }
    }
}

fn resolve(ast: Ast) -> Result<(StaticModel, Vec<Event>, BehavioralModel), Vec<ParseDiagnostic>> {
    let mut r = Resolver { ids: HashSet::new(), stages: HashSet::new(), diags: Vec::new() };

    fn machines(decls: &[MachineDecl], parent: Option<&str>, r: &mut Resolver) -> Vec<Machine> {
        let mut out = Vec::new();
        for d in decls {
            r.claim(&d.id, d.span);
            let mut stages = Vec::new();
            for s in &d.stages {
                let id = format!("{}.{}", d.id, s.kind);
                r.claim(&id, s.span);
                if r.stages.insert(id.clone()) {
                    stages.push(Stage {
                        id,
                        kind: s.kind,
                        has_storage: s.store,
                        label: s.label.clone(),
                        owner: d.id.clone(),
                    });
                }
            }
            if d.constraint && !d.stages.iter().any(|s| s.kind == ActionKind::Process) {
                r.diags.push(ParseDiagnostic::new(
                    d.span,
                    InvalidStructure,
                    format!("constraint machine `{}` needs a process stage", d.id),
                ));
            }
            out.push(Machine {
                id: d.id.clone(),
                name: d.name.clone(),
                label: d.label.clone(),
                is_constraint: d.constraint,
                stages,
                submachines: machines(&d.children, Some(&d.id), r),
                parent: parent.map(str::to_string),
            });
        }
        out
    }
    let model_machines = machines(&ast.machines, None, &mut r);

    let mut edge_ends: HashMap<String, (String, String)> = HashMap::new();
    let mut edges =
        |decls: &[EdgeDecl], prefix: &str, r: &mut Resolver| -> Vec<(String, String, String, Option<String>)> {
            let mut out = Vec::new();
            for (i, e) in decls.iter().enumerate() {
                let (id, span) = match &e.name {
                    Some((n, s)) => (n.clone(), *s),
                    None => (format!("{prefix}{}", i + 1), e.span),
                };
                r.claim(&id, span);
                let ok = r.stage_ref(&e.source) & r.stage_ref(&e.target);
                if e.source.text == e.target.text {
                    r.diags.push(ParseDiagnostic::new(
                        e.target.span,
                        InvalidStructure,
                        format!("edge `{id}` starts and ends at `{}`", e.source.text),
                    ));
                } else if ok {
                    edge_ends.insert(id.clone(), (e.source.text.clone(), e.target.text.clone()));
                    out.push((id, e.source.text.clone(), e.target.text.clone(), e.guard.clone()));
                }
            }
            out
        };
    let flows: Vec<Flow> =
        edges(&ast.flows, "f", &mut r).into_iter().map(|(id, source, target, _)| Flow { id, source, target }).collect();
    let triggers: Vec<Trigger> = edges(&ast.triggers, "t", &mut r)
        .into_iter()
        .map(|(id, source, target, guard)| Trigger { id, source, target, guard })
        .collect();

    let mut events = Vec::new();
    for e in &ast.events {
        r.claim(&e.id, e.span);
        if e.time.trim().is_empty() {
            r.diags.push(ParseDiagnostic::new(
                e.time_span,
                InvalidStructure,
                format!("event `{}` has an empty time; a timeless region is not an event", e.id),
            ));
        }
        let mut region = Region::default();
        for item in &e.region {
            match item {
                RegionItem::Stage(s) => {
                    if r.stage_ref(s) {
                        region.stage_ids.insert(s.text.clone());
                    }
                }
                RegionItem::Edge(id, span) => match edge_ends.get(id) {
                    Some((src, dst)) => {
                        for end in [src, dst] {
                            if !e.region.iter().any(|i| matches!(i, RegionItem::Stage(s) if &s.text == end)) {
                                r.diags.push(ParseDiagnostic::new(
                                    *span,
                                    InvalidStructure,
                                    format!("edge `{id}` leaves the region at `{end}`"),
                                ));
                            }
                        }
                        region.edge_ids.insert(id.clone());
                    }
                    None => r.diags.push(ParseDiagnostic::new(
                        *span,
                        UnresolvedReference,
                        format!("no flow or trigger `{id}` is declared"),
                    )),
                },
            }
        }
        events.push(Event {
            id: e.id.clone(),
            name: e.name.clone().unwrap_or_else(|| e.id.clone()),
            time: Some(e.time.clone()),
            region,
            intensity: e.intensity.clone(),
        });
    }

    let event_ids: BTreeSet<String> = events.iter().map(|e| e.id.clone()).collect();
    let mut seen = HashSet::new();
    let mut bedges = Vec::new();
    for b in &ast.behavior {
        let mut ok = true;
        for (id, span) in [&b.from, &b.to] {
            if !event_ids.contains(id) {
                ok = false;
                r.diags.push(ParseDiagnostic::new(*span, UnresolvedReference, format!("no event `{id}` is declared")));
            }
        }
        if b.from.0 == b.to.0 {
            r.diags.push(ParseDiagnostic::new(
                b.to.1,
                InvalidStructure,
                format!("behavior edge from `{}` to itself", b.from.0),
            ));
            ok = false;
        }
        if !seen.insert((b.from.0.clone(), b.to.0.clone())) {
            r.diags.push(ParseDiagnostic::new(
                b.from.1,
                DuplicateId,
                format!("behavior edge `{}` -> `{}` is declared twice", b.from.0, b.to.0),
            ));
            ok = false;
        }
        if ok {
            bedges.push(BehaviorEdge { from: b.from.0.clone(), to: b.to.0.clone(), exclusive_group: b.group.clone() });
        }
    }

    if !r.diags.is_empty() {
        r.diags.sort_by_key(|d| (d.span.line, d.span.column));
        return Err(r.diags);
    }
    let whole = SourceSpan { line: 1, column: 1, length: 1 };
    let invalid = |e: crate::model::ModelError| vec![ParseDiagnostic::new(whole, InvalidStructure, e.to_string())];
    let model = StaticModel::new(model_machines, flows, triggers).map_err(invalid)?;
    let behavior = BehavioralModel::new(event_ids, bedges).map_err(invalid)?;
    Ok((model, events, behavior))
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: &str = "
machine A { create; release; transfer; }
machine B { transfer; receive; process; }
flow A.release -> A.transfer;
flow A.transfer -> B.transfer;
flow B.transfer -> B.receive;
flow B.receive -> B.process;
";

    fn err(text: &str) -> Vec<ParseDiagnostic> {
        parse(text).unwrap_err()
    }

    #[test]
    fn empty_text() {
        let d = parse("").unwrap();
        assert!(d.model.is_empty() && d.events.is_empty() && d.behavior.is_empty());
    }

    #[test]
    fn canonical_pair() {
        let d = parse(PAIR).unwrap();
        assert_eq!(d.model.machines().len(), 2);
        assert_eq!(d.model.all_stages().len(), 6);
        assert_eq!(d.model.flows().len(), 4);
        assert_eq!(d.model.flows()[1].id, "f2");
        assert_eq!(d.model.flows()[1].target, "B.transfer");
    }

    #[test]
    fn unresolved_flow_span() {
        let e = err("flow X.release -> Y.receive;");
        assert_eq!(e.len(), 2);
        assert!(e.iter().all(|d| d.code == UnresolvedReference));
        assert_eq!((e[0].span.line, e[0].span.column, e[0].span.length), (1, 6, 9));
        assert_eq!(e[1].span.column, 19);
    }

    #[test]
    fn duplicate_ids() {
        let e = err("machine A { create; create; }");
        assert_eq!(e[0].code, DuplicateId);
        assert_eq!(e[0].span.column, 21);
        let e = err("machine A { create; process; }\nflow f2: A.create -> A.process;\nflow A.process -> A.create;");
        assert_eq!(e[0].code, DuplicateId);
        assert_eq!(e[0].span.line, 3);
        let e = err("machine A { create; }\nevent A { time \"t\"; region { A.create } }");
        assert_eq!(e[0].code, DuplicateId);
    }

    #[test]
    fn syntax_errors() {
        let e = err("machine A { create }");
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].code, SyntaxError);
        assert_eq!(e[0].span.column, 20);
        assert_eq!(err("machine flow {}")[0].code, SyntaxError);
        assert_eq!(err("flow A -> B.create;")[0].code, SyntaxError);
        assert_eq!(err("machine A { create; }\nevent E { time \"t\"; region { } }")[0].code, SyntaxError);
        assert_eq!(err("banana")[0].span.length, 6);
    }

    #[test]
    fn structure_errors() {
        assert_eq!(err("machine A constraint { create; }")[0].code, InvalidStructure);
        assert_eq!(err("machine A { create; }\nflow A.create -> A.create;")[0].code, InvalidStructure);
        let e = err("machine A { create; process; }\nflow A.create -> A.process;\nevent E { time \"t\"; region { A.create edge f1 } }");
        assert_eq!(e[0].code, InvalidStructure);
        let e = err("machine A { create; }\nevent E { time \" \"; region { A.create } }");
        assert_eq!(e[0].code, InvalidStructure);
    }

    #[test]
    fn events_and_behavior() {
        let text = "
machine A { create; process store: \"files\"; }
flow A.create -> A.process;
trigger go: A.process => A.create if \"again\";
event E1: \"Start\" { time \"t1\"; region { A.create A.process edge f1 edge go } intensity \"high\"; }
event E2 { time \"t2\"; region { A.process } }
behavior { E1 -> E2 excl \"g\"; }
";
        let d = parse(text).unwrap();
        assert_eq!(d.model.triggers()[0].id, "go");
        assert_eq!(d.model.triggers()[0].guard.as_deref(), Some("again"));
        assert_eq!(d.events[0].name, "Start");
        assert_eq!(d.events[1].name, "E2");
        assert_eq!(d.events[0].region.edge_ids.len(), 2);
        assert_eq!(d.events[0].intensity.as_deref(), Some("high"));
        assert!(d.model.stage("A.process").unwrap().has_storage);
        assert_eq!(d.behavior.edges()[0].exclusive_group.as_deref(), Some("g"));
        let e = err("behavior { E1 -> E99; }");
        assert!(e.iter().all(|d| d.code == UnresolvedReference));
    }

    #[test]
    fn comments_are_anchored() {
        let text = "# top\nmachine A {\n  # the start\n  create;\n  # closing\n}\n# end\n";
        let d = parse(text).unwrap();
        assert_eq!(d.comments.get(&Anchor::Machine("A".into())), [" top".to_string()]);
        assert_eq!(d.comments.get(&Anchor::Stage("A.create".into())), [" the start".to_string()]);
        assert_eq!(d.comments.get(&Anchor::MachineEnd("A".into())), [" closing".to_string()]);
        assert_eq!(d.comments.trailing, [" end".to_string()]);
    }

    #[test]
    fn nested_machines_and_labels() {
        let d = parse("machine Outer: \"The outer\" { process; machine Inner constraint { process; } }").unwrap();
        let inner = d.model.machine("Outer.Inner").unwrap();
        assert!(inner.is_constraint);
        assert_eq!(inner.parent.as_deref(), Some("Outer"));
        assert_eq!(d.model.machine("Outer").unwrap().label.as_deref(), Some("The outer"));
    }
}
