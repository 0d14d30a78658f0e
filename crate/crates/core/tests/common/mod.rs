//! Generators, oracles and fixture helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::PathBuf;

use proptest::prelude::*;
use tmkit::dsl::{parse, Document};
use tmkit::model::{ActionKind, BehaviorEdge, BehavioralModel, Event, ModelBuilder, Region, StaticModel};
use tmkit::transform::expand;
use tmkit::uml::{ActivityEdge, ActivityGraph, ActivityNode, NodeKind};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn read_corpus(name: &str) -> String {
    let path = corpus_dir().join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn corpus_doc() -> Document {
    parse(&read_corpus("mentcare.tm")).expect("corpus parses")
}

/// Compares `actual` with `corpus/golden/<name>`; `UPDATE_GOLDEN=1` rewrites it.
pub fn golden(name: &str, actual: &str) -> Result<(), String> {
    let path = corpus_dir().join("golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some_and(|v| v == "1") {
        std::fs::write(&path, actual).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        let line = expected.lines().zip(actual.lines()).position(|(a, b)| a != b);
        Err(format!("{name} differs from golden (first differing line: {line:?})"))
    }
}

// ---------------------------------------------------------------------------
// Randomness: every generator draws from a byte string chosen by proptest.

pub struct Dice<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Dice<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Dice { bytes, pos: 0 }
    }

    pub fn byte(&mut self) -> u8 {
        let b = self.bytes.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b
    }

    pub fn below(&mut self, n: usize) -> usize {
        if n == 0 {
            0
        } else {
            self.byte() as usize % n
        }
    }

    pub fn chance(&mut self, percent: u8) -> bool {
        (self.byte() % 100) < percent
    }

    pub fn pick<'p, T>(&mut self, pool: &'p [T]) -> &'p T {
        &pool[self.below(pool.len())]
    }
}

pub fn seeds(len: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(any::<u8>(), len)
}

const LABELS: &[&str] = &["pump", "say \"hi\"", "back\\slash", "two\nlines", "tab\there", "ünïcödé", "x > 0", ""];
const GUARDS: &[&str] = &["ok", "x > 0", "not \"done\"", "naïve", "a\\b", "the record is not in the file"];

fn maybe_label(d: &mut Dice) -> Option<String> {
    d.chance(40).then(|| d.pick(LABELS).to_string())
}

/// Adds `n` machines, some nested under earlier ones, and returns their ids.
fn machines(b: &mut ModelBuilder, d: &mut Dice, n: usize) -> Vec<String> {
    const PREFIX: &[&str] = &["M", "Node", "q", "Pump", "Ärzte"];
    let mut ids: Vec<String> = Vec::new();
    for i in 0..n {
        let parent = if !ids.is_empty() && d.chance(30) { Some(ids[d.below(ids.len())].clone()) } else { None };
        let name = format!("{}{i}", d.pick(PREFIX));
        let id = b.machine(parent.as_deref(), &name).expect("fresh name");
        b.set_label(&id, maybe_label(d)).unwrap();
        ids.push(id);
    }
    ids
}

fn decorate(b: &mut ModelBuilder, d: &mut Dice, stage: &str) {
    let store = d.chance(25);
    let label = maybe_label(d);
    let s = b.stage_mut(stage).unwrap();
    s.has_storage = store;
    s.label = label;
}

/// Any well-formed model: random stages, flows and triggers with no regard
/// for the flow rules. Parses back after printing.
pub fn any_model(bytes: &[u8]) -> StaticModel {
    model_of(bytes, 5)
}

/// Like `any_model` with at most two machines, small enough for
/// `brute_force_isomorphic`.
pub fn small_model(bytes: &[u8]) -> StaticModel {
    model_of(bytes, 2)
}

fn model_of(bytes: &[u8], max_machines: usize) -> StaticModel {
    let mut d = Dice::new(bytes);
    let mut b = ModelBuilder::new();
    let n = 1 + d.below(max_machines);
    let ms = machines(&mut b, &mut d, n);
    let mut stages = Vec::new();
    for m in &ms {
        for kind in ActionKind::ALL {
            if d.chance(50) {
                let s = b.stage(m, kind).unwrap();
                decorate(&mut b, &mut d, &s);
                stages.push(s);
            }
        }
        if b_has(&stages, m, ActionKind::Process) && d.chance(20) {
            b.set_constraint(m, true).unwrap();
        }
    }
    if stages.len() >= 2 {
        for _ in 0..d.below(8) {
            let (s, t) = (d.below(stages.len()), d.below(stages.len()));
            if s != t {
                b.flow(&stages[s], &stages[t]);
            }
        }
        for _ in 0..d.below(5) {
            let (s, t) = (d.below(stages.len()), d.below(stages.len()));
            if s != t {
                let guard = d.chance(50).then(|| d.pick(GUARDS).to_string());
                b.trigger(&stages[s], &stages[t], guard.as_deref());
            }
        }
    }
    b.build().expect("generated model is well formed")
}

fn b_has(stages: &[String], machine: &str, kind: ActionKind) -> bool {
    stages.iter().any(|s| *s == format!("{machine}.{kind}"))
}

/// A model plus events over it and a behavior graph.
pub fn any_document(bytes: &[u8]) -> (StaticModel, Vec<Event>, BehavioralModel) {
    let model = any_model(bytes);
    let mut d = Dice::new(&bytes[bytes.len() / 2..]);
    let stage_ids: Vec<String> = model.stage_ids().into_iter().collect();
    let mut events = Vec::new();
    for i in 1..=d.below(4) {
        let picked: BTreeSet<String> = stage_ids.iter().filter(|_| d.chance(40)).cloned().collect();
        if picked.is_empty() {
            continue;
        }
        let region = tmkit::model::induced_region(&model, &picked).unwrap();
        let id = format!("E{i}");
        let name = if d.chance(50) { d.pick(LABELS).to_string() } else { id.clone() };
        let time = Some(format!("t{}", d.byte()));
        let intensity = d.chance(30).then(|| "high".to_string());
        events.push(Event { id, name, time, region, intensity });
    }
    let ids: BTreeSet<String> = events.iter().map(|e| e.id.clone()).collect();
    let list: Vec<&String> = ids.iter().collect();
    let mut edges = Vec::new();
    if list.len() >= 2 {
        for _ in 0..d.below(5) {
            let (a, c) = (list[d.below(list.len())], list[d.below(list.len())]);
            if a != c && !edges.iter().any(|e: &BehaviorEdge| e.from == *a && e.to == *c) {
                let exclusive_group = d.chance(30).then(|| "g".to_string());
                edges.push(BehaviorEdge { from: a.clone(), to: c.clone(), exclusive_group });
            }
        }
    }
    (model, events, BehavioralModel::new(ids, edges).unwrap())
}

/// A simplified model (create and process stages only) in canonical form:
/// whenever a machine sends to several machines, every stage it sends from
/// reaches all of them. Expanding such a model and simplifying again gives
/// the same model back.
pub fn simplified_model(bytes: &[u8]) -> StaticModel {
    use ActionKind::{Create, Process};
    let mut d = Dice::new(bytes);
    let mut b = ModelBuilder::new();
    let n = 1 + d.below(5);
    let ms = machines(&mut b, &mut d, n);
    let mut stages = Vec::new();
    let mut process: HashMap<String, String> = HashMap::new();
    for m in &ms {
        for kind in [Create, Process] {
            if d.chance(60) {
                let s = b.stage(m, kind).unwrap();
                decorate(&mut b, &mut d, &s);
                if kind == Process {
                    process.insert(m.clone(), s.clone());
                }
                stages.push((m.clone(), s));
            }
        }
        if let (Some(p), true) = (process.get(m), d.chance(50)) {
            let c = format!("{m}.create");
            if stages.iter().any(|(_, s)| *s == c) {
                if d.chance(50) {
                    b.flow(&c, p);
                } else {
                    b.flow(p, &c);
                }
            }
        }
    }
    // inter-machine flows, closed per sending machine
    let mut sends: BTreeMap<String, (BTreeSet<String>, BTreeSet<String>)> = BTreeMap::new();
    if !stages.is_empty() {
        for _ in 0..d.below(6) {
            let (m, s) = &stages[d.below(stages.len())];
            let target = &ms[d.below(ms.len())];
            if target != m {
                if let Some(t) = process.get(target) {
                    let entry = sends.entry(m.clone()).or_default();
                    entry.0.insert(s.clone());
                    entry.1.insert(t.clone());
                }
            }
        }
    }
    for (sources, targets) in sends.values() {
        for s in sources {
            for t in targets {
                b.flow(s, t);
            }
        }
    }
    if stages.len() >= 2 {
        for _ in 0..d.below(4) {
            let (s, t) = (&stages[d.below(stages.len())].1, &stages[d.below(stages.len())].1);
            if s != t {
                let guard = d.chance(50).then(|| d.pick(GUARDS).to_string());
                b.trigger(s, t, guard.as_deref());
            }
        }
    }
    let guarded: HashSet<String> =
        b.triggers().iter().filter(|t| t.guard.is_some()).map(|t| t.source.clone()).collect();
    for (m, p) in &process {
        if guarded.contains(p) && d.chance(50) {
            b.set_constraint(m, true).unwrap();
        }
    }
    b.build().expect("generated model is well formed")
}

/// A full-form canonical model: the expansion of a canonical simplified one.
pub fn canonical_model(bytes: &[u8]) -> StaticModel {
    expand(&simplified_model(bytes)).expect("simplified models expand")
}

/// A legal full-form model that is not necessarily canonical: some
/// receive stages also relay onward through their machine's release.
pub fn full_model(bytes: &[u8]) -> StaticModel {
    let m = canonical_model(bytes);
    let mut d = Dice::new(&bytes[bytes.len() / 3..]);
    let mut b = ModelBuilder::from_model(&m);
    for machine in m.all_machines() {
        let (Some(rc), Some(rl)) = (machine.stage(ActionKind::Receive), machine.stage(ActionKind::Release)) else {
            continue;
        };
        if d.chance(50) {
            b.flow(&rc.id, &rl.id);
        }
    }
    b.build().unwrap()
}

// ---------------------------------------------------------------------------
// Supported activity graphs.

struct Activity<'d, 'b> {
    g: ActivityGraph,
    d: &'d mut Dice<'b>,
    /// One final node is owed for every open continuation.
    owed: usize,
    guard_no: usize,
}

pub const MAX_ACTIVITY_NODES: usize = 12;

const ACTION_LABELS: &[&str] =
    &["Take order", "process", "Ship!", "Ünïcode step", "42 items", "Check", "Check", "a\"quote"];
const DECISION_GUARDS: &[&str] = &["yes", "no", "x > 0", "say \"ok\"", "naïve", "a\\b", "else"];

impl Activity<'_, '_> {
    fn room(&self) -> usize {
        MAX_ACTIVITY_NODES.saturating_sub(self.g.nodes.len() + self.owed)
    }

    fn node(&mut self, kind: NodeKind) -> String {
        let id = format!("n{}", self.g.nodes.len());
        let label = if kind == NodeKind::Action { self.d.pick(ACTION_LABELS).to_string() } else { String::new() };
        self.g.nodes.push(ActivityNode { id: id.clone(), kind, label });
        id
    }

    fn edge(&mut self, from: &str, to: &str, guard: Option<String>) {
        self.g.edges.push(ActivityEdge { from: from.into(), to: to.into(), guard });
    }

    fn guard(&mut self) -> String {
        self.guard_no += 1;
        format!("{} {}", self.d.pick(DECISION_GUARDS), self.guard_no)
    }

    /// `from` is an action (or the initial node) still missing its successor;
    /// one owed final is already counted for it.
    fn go(&mut self, from: &str) {
        let room = self.room();
        let choice = self.d.below(5);
        if choice == 1 && room >= 1 {
            let a = self.node(NodeKind::Action);
            self.edge(from, &a, None);
            return self.go(&a);
        }
        if choice == 2 && room >= 4 && from != "n0" {
            // decision whose branches go their own way
            let dec = self.node(NodeKind::Decision);
            self.edge(from, &dec, None);
            let (a, b) = (self.node(NodeKind::Action), self.node(NodeKind::Action));
            let (ga, gb) = (self.guard(), self.guard());
            self.edge(&dec, &a, Some(ga));
            self.edge(&dec, &b, Some(gb));
            self.owed += 1;
            self.go(&a);
            return self.go(&b);
        }
        if choice == 3 && room >= 4 && from != "n0" {
            // decision whose branches meet again; one branch may skip ahead
            let dec = self.node(NodeKind::Decision);
            self.edge(from, &dec, None);
            let skip = self.d.chance(40);
            let a = self.node(NodeKind::Action);
            let b = if skip || self.room() < 3 { None } else { Some(self.node(NodeKind::Action)) };
            let merge = self.node(NodeKind::Merge);
            let ga = self.guard();
            self.edge(&dec, &a, Some(ga));
            let gb = self.guard();
            match &b {
                Some(b) => self.edge(&dec, b, Some(gb)),
                None => self.edge(&dec, &merge, Some(gb)),
            }
            self.edge(&a, &merge, None);
            if let Some(b) = &b {
                self.edge(b, &merge, None);
            }
            let next = self.node(NodeKind::Action);
            self.edge(&merge, &next, None);
            return self.go(&next);
        }
        if choice == 4 && room >= 5 {
            // loop: merge, two actions, decision back to the merge
            let merge = self.node(NodeKind::Merge);
            self.edge(from, &merge, None);
            let a = self.node(NodeKind::Action);
            let b = self.node(NodeKind::Action);
            let dec = self.node(NodeKind::Decision);
            let next = self.node(NodeKind::Action);
            self.edge(&merge, &a, None);
            self.edge(&a, &b, None);
            self.edge(&b, &dec, None);
            let (ga, gb) = (self.guard(), self.guard());
            self.edge(&dec, &merge, Some(ga));
            self.edge(&dec, &next, Some(gb));
            return self.go(&next);
        }
        if from == "n0" {
            // the initial node needs an action before anything else
            let a = self.node(NodeKind::Action);
            self.edge(from, &a, None);
            return self.go(&a);
        }
        self.owed -= 1;
        let f = self.node(NodeKind::Final);
        self.edge(from, &f, None);
    }
}

/// A random activity graph in the supported subset, at most 12 nodes.
pub fn activity_graph(bytes: &[u8]) -> ActivityGraph {
    let mut d = Dice::new(bytes);
    let mut a = Activity { g: ActivityGraph::default(), d: &mut d, owed: 1, guard_no: 0 };
    let init = a.node(NodeKind::Initial);
    a.go(&init);
    let mut g = a.g;
    // shuffle edge order so nothing relies on it
    let k = g.edges.len();
    if k > 1 {
        let r = d.below(k);
        g.edges.rotate_left(r);
    }
    g
}

// ---------------------------------------------------------------------------
// Oracles.

/// Vertex-labelled multigraph of a static model, built independently of the
/// library's own isomorphism code.
#[derive(Debug)]
pub struct Plain {
    pub labels: Vec<String>,
    pub edges: Vec<(usize, usize, String)>,
}

pub fn plain(m: &StaticModel) -> Plain {
    let mut index = HashMap::new();
    let mut labels = Vec::new();
    for mach in m.all_machines() {
        index.insert(mach.id.clone(), labels.len());
        labels.push(format!("machine {}", mach.is_constraint));
    }
    let mut edges = Vec::new();
    for mach in m.all_machines() {
        for s in &mach.stages {
            index.insert(s.id.clone(), labels.len());
            labels.push(format!("{} {}", s.kind, s.has_storage));
            edges.push((index[&mach.id], labels.len() - 1, "has".to_string()));
        }
    }
    for mach in m.all_machines() {
        if let Some(p) = &mach.parent {
            edges.push((index[p], index[&mach.id], "sub".to_string()));
        }
    }
    for f in m.flows() {
        edges.push((index[&f.source], index[&f.target], "flow".to_string()));
    }
    for t in m.triggers() {
        edges.push((index[&t.source], index[&t.target], format!("trigger {:?}", t.guard)));
    }
    Plain { labels, edges }
}

/// Tries every label-preserving bijection. Only for small graphs.
pub fn brute_force_isomorphic(a: &Plain, b: &Plain) -> bool {
    if a.labels.len() != b.labels.len() || a.edges.len() != b.edges.len() {
        return false;
    }
    let mut want: Vec<(usize, usize, String)> = b.edges.clone();
    want.sort();
    let n = a.labels.len();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn search(
        i: usize,
        a: &Plain,
        b: &Plain,
        want: &[(usize, usize, String)],
        map: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if i == a.labels.len() {
            let mut got: Vec<(usize, usize, String)> =
                a.edges.iter().map(|(s, t, l)| (map[*s], map[*t], l.clone())).collect();
            got.sort();
            return got == want;
        }
        for j in 0..b.labels.len() {
            if !used[j] && a.labels[i] == b.labels[j] {
                used[j] = true;
                map[i] = j;
                if search(i + 1, a, b, want, map, used) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    search(0, a, b, &want, &mut map, &mut used)
}

/// Rebuilds `m` with fresh names and a permuted insertion order.
pub fn shuffled(m: &StaticModel, bytes: &[u8]) -> StaticModel {
    let mut d = Dice::new(bytes);
    let mut order: Vec<&tmkit::model::Machine> = m.all_machines();
    // parents must come first, so rotate within depth levels only
    order.sort_by_key(|x| (m.ancestors(&x.id).len(), d.byte()));
    let mut b = ModelBuilder::new();
    let mut ids: HashMap<String, String> = HashMap::new();
    for (i, mach) in order.iter().enumerate() {
        let parent = mach.parent.as_ref().map(|p| ids[p].clone());
        let id = b.machine(parent.as_deref(), &format!("Z{i}")).unwrap();
        b.set_constraint(&id, mach.is_constraint).unwrap();
        let mut stages = mach.stages.clone();
        stages.reverse();
        for s in stages {
            let sid = b.stage(&id, s.kind).unwrap();
            b.stage_mut(&sid).unwrap().has_storage = s.has_storage;
            ids.insert(s.id.clone(), sid);
        }
        ids.insert(mach.id.clone(), id);
    }
    for f in m.flows().iter().rev() {
        b.flow(&ids[&f.source], &ids[&f.target]);
    }
    for t in m.triggers().iter().rev() {
        b.trigger(&ids[&t.source], &ids[&t.target], t.guard.as_deref());
    }
    b.build().unwrap()
}

/// Every walk of at most `max_len` events that starts at a source.
pub fn walks(b: &BehavioralModel, max_len: usize) -> HashSet<Vec<String>> {
    let mut out = HashSet::new();
    let mut frontier: Vec<Vec<String>> = b.sources().into_iter().map(|s| vec![s.to_string()]).collect();
    while let Some(w) = frontier.pop() {
        if w.len() < max_len {
            for e in b.edges().iter().filter(|e| Some(&e.from) == w.last()) {
                let mut next = w.clone();
                next.push(e.to.clone());
                frontier.push(next);
            }
        }
        out.insert(w);
    }
    out
}

// ---------------------------------------------------------------------------
// DOT syntax: just the subset the renderer uses, checked strictly.

#[derive(Debug, Clone, PartialEq)]
enum DotTok {
    Id(String),
    Sym(&'static str),
}

fn dot_tokens(text: &str) -> Result<Vec<DotTok>, String> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    None => return Err("unterminated string".into()),
                    Some('"') => break,
                    Some('\\') => match chars.next() {
                        Some(e @ ('"' | '\\' | 'n' | 'l' | 'r')) => {
                            s.push('\\');
                            s.push(e);
                        }
                        other => return Err(format!("bad escape {other:?}")),
                    },
                    Some('\n') => return Err("raw newline in string".into()),
                    Some(ch) => s.push(ch),
                }
            }
            out.push(DotTok::Id(s));
        } else if c == '-' {
            chars.next();
            if chars.next() != Some('>') {
                return Err("expected ->".into());
            }
            out.push(DotTok::Sym("->"));
        } else if let Some(sym) = ["{", "}", "[", "]", ";", "=", ","].into_iter().find(|s| s.starts_with(c)) {
            chars.next();
            out.push(DotTok::Sym(sym));
        } else if c.is_alphanumeric() || c == '_' || c == '#' || c == '.' {
            let mut s = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_alphanumeric() || ch == '_' || ch == '.' {
                    s.push(ch);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push(DotTok::Id(s));
        } else {
            return Err(format!("unexpected character {c:?}"));
        }
    }
    Ok(out)
}

#[derive(Debug, Default, PartialEq)]
pub struct DotStats {
    pub nodes: BTreeSet<String>,
    pub edges: usize,
    pub subgraphs: usize,
}

struct DotParser {
    toks: Vec<DotTok>,
    pos: usize,
    stats: DotStats,
    endpoints: Vec<String>,
}

impl DotParser {
    fn peek(&self) -> Option<&DotTok> {
        self.toks.get(self.pos)
    }

    fn id(&mut self) -> Result<String, String> {
        match self.toks.get(self.pos).cloned() {
            Some(DotTok::Id(s)) => {
                self.pos += 1;
                Ok(s)
            }
            other => Err(format!("expected id at token {}, found {other:?}", self.pos)),
        }
    }

    fn sym(&mut self, s: &'static str) -> Result<(), String> {
        if self.peek() == Some(&DotTok::Sym(s)) {
            self.pos += 1;
            Ok(())
        } else {
            Err(format!("expected `{s}` at token {}, found {:?}", self.pos, self.peek()))
        }
    }

    fn attrs(&mut self) -> Result<(), String> {
        self.sym("[")?;
        while self.peek() != Some(&DotTok::Sym("]")) {
            self.id()?;
            self.sym("=")?;
            self.id()?;
            if self.peek() == Some(&DotTok::Sym(",")) {
                self.pos += 1;
            }
        }
        self.sym("]")
    }

    fn block(&mut self) -> Result<(), String> {
        self.sym("{")?;
        while self.peek() != Some(&DotTok::Sym("}")) {
            self.stmt()?;
            if self.peek() == Some(&DotTok::Sym(";")) {
                self.pos += 1;
            }
        }
        self.sym("}")
    }

    fn stmt(&mut self) -> Result<(), String> {
        let first = self.id()?;
        if first == "subgraph" {
            self.id()?;
            self.stats.subgraphs += 1;
            return self.block();
        }
        if matches!(first.as_str(), "node" | "edge" | "graph") {
            return self.attrs();
        }
        if self.peek() == Some(&DotTok::Sym("=")) {
            self.pos += 1;
            self.id()?;
            return Ok(());
        }
        if self.peek() == Some(&DotTok::Sym("->")) {
            self.endpoints.push(first);
            while self.peek() == Some(&DotTok::Sym("->")) {
                self.pos += 1;
                let next = self.id()?;
                self.endpoints.push(next);
                self.stats.edges += 1;
            }
        } else if !self.stats.nodes.insert(first.clone()) {
            return Err(format!("node {first} declared twice"));
        }
        if self.peek() == Some(&DotTok::Sym("[")) {
            self.attrs()?;
        }
        Ok(())
    }
}

/// Parses a `digraph` and checks that every edge endpoint is a declared node.
pub fn check_dot(text: &str) -> Result<DotStats, String> {
    let mut p = DotParser { toks: dot_tokens(text)?, pos: 0, stats: DotStats::default(), endpoints: Vec::new() };
    if p.id()? != "digraph" {
        return Err("not a digraph".into());
    }
    p.id()?;
    p.block()?;
    if p.pos != p.toks.len() {
        return Err("trailing tokens".into());
    }
    if let Some(e) = p.endpoints.iter().find(|e| !p.stats.nodes.contains(*e)) {
        return Err(format!("edge endpoint {e} is not declared"));
    }
    Ok(p.stats)
}

pub fn region_of(doc: &Document, event: &str) -> Region {
    doc.events.iter().find(|e| e.id == event).expect("event exists").region.clone()
}
