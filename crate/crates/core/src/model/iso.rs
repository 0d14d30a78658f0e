//! Isomorphism of small vertex- and edge-labelled directed multigraphs.
//!
//! Colour refinement splits vertices into classes that any isomorphism must
//! respect; a backtracking search then assigns vertices class by class,
//! checking edge multiplicities against everything already assigned.

use std::collections::{BTreeMap, HashMap};

use super::StaticModel;

#[derive(Debug, Clone, Default)]
pub(crate) struct LabeledGraph {
    labels: Vec<String>,
    edges: Vec<(usize, usize, String)>,
}

impl LabeledGraph {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn vertex(&mut self, label: impl Into<String>) -> usize {
        self.labels.push(label.into());
        self.labels.len() - 1
    }

    pub(crate) fn edge(&mut self, from: usize, to: usize, label: impl Into<String>) {
        self.edges.push((from, to, label.into()));
    }

    pub(crate) fn isomorphic(&self, other: &LabeledGraph) -> bool {
        if self.labels.len() != other.labels.len() || self.edges.len() != other.edges.len() {
            return false;
        }
        let mut interner = Interner::default();
        let a = Interned::new(self, &mut interner);
        let b = Interned::new(other, &mut interner);
        let Some((ca, cb)) = refine(&a, &b) else {
            return false;
        };
        Search::new(&a, &b, &ca, &cb).run()
    }
}

#[derive(Default)]
struct Interner {
    ids: HashMap<String, usize>,
}

impl Interner {
    fn get(&mut self, s: &str) -> usize {
        let next = self.ids.len();
        *self.ids.entry(s.to_string()).or_insert(next)
    }
}

type Adjacency = HashMap<(usize, usize), BTreeMap<usize, usize>>;

struct Interned {
    labels: Vec<usize>,
    out: Vec<Vec<(usize, usize)>>,
    inc: Vec<Vec<(usize, usize)>>,
    adj: Adjacency,
}

impl Interned {
    fn new(g: &LabeledGraph, interner: &mut Interner) -> Self {
        let n = g.labels.len();
        let labels = g.labels.iter().map(|l| interner.get(l)).collect();
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        let mut adj: Adjacency = HashMap::new();
        for (f, t, l) in &g.edges {
            let l = interner.get(l);
            out[*f].push((l, *t));
            inc[*t].push((l, *f));
            *adj.entry((*f, *t)).or_default().entry(l).or_default() += 1;
        }
        Interned { labels, out, inc, adj }
    }

    fn between(&self, u: usize, v: usize) -> Option<&BTreeMap<usize, usize>> {
        self.adj.get(&(u, v))
    }
}

type Signature = (usize, Vec<(usize, usize)>, Vec<(usize, usize)>);

/// Joint colour refinement; `None` when the colour histograms diverge.
fn refine(a: &Interned, b: &Interned) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut ca = a.labels.clone();
    let mut cb = b.labels.clone();
    let mut classes = 0;
    loop {
        if histogram(&ca) != histogram(&cb) {
            return None;
        }
        let mut palette: BTreeMap<Signature, usize> = BTreeMap::new();
        let sig = |g: &Interned, c: &[usize], v: usize| -> Signature {
            let mut o: Vec<_> = g.out[v].iter().map(|&(l, t)| (l, c[t])).collect();
            let mut i: Vec<_> = g.inc[v].iter().map(|&(l, f)| (l, c[f])).collect();
            o.sort_unstable();
            i.sort_unstable();
            (c[v], o, i)
        };
        let sa: Vec<Signature> = (0..ca.len()).map(|v| sig(a, &ca, v)).collect();
        let sb: Vec<Signature> = (0..cb.len()).map(|v| sig(b, &cb, v)).collect();
        for s in sa.iter().chain(sb.iter()) {
            let next = palette.len();
            palette.entry(s.clone()).or_insert(next);
        }
        let na: Vec<usize> = sa.iter().map(|s| palette[s]).collect();
        let nb: Vec<usize> = sb.iter().map(|s| palette[s]).collect();
        let count = palette.len();
        ca = na;
        cb = nb;
        if count == classes {
            if histogram(&ca) != histogram(&cb) {
                return None;
            }
            return Some((ca, cb));
        }
        classes = count;
    }
}

fn histogram(colors: &[usize]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for &c in colors {
        *h.entry(c).or_insert(0) += 1;
    }
    h
}

struct Search<'a> {
    a: &'a Interned,
    b: &'a Interned,
    order: Vec<usize>,
    candidates: HashMap<usize, Vec<usize>>,
    ca: &'a [usize],
    map: Vec<Option<usize>>,
    used: Vec<bool>,
}

impl<'a> Search<'a> {
    fn new(a: &'a Interned, b: &'a Interned, ca: &'a [usize], cb: &'a [usize]) -> Self {
        let mut candidates: HashMap<usize, Vec<usize>> = HashMap::new();
        for (w, &c) in cb.iter().enumerate() {
            candidates.entry(c).or_default().push(w);
        }
        let mut order: Vec<usize> = (0..ca.len()).collect();
        order.sort_by_key(|&v| (candidates[&ca[v]].len(), ca[v], v));
        Search { a, b, order, candidates, ca, map: vec![None; ca.len()], used: vec![false; cb.len()] }
    }

    fn run(&mut self) -> bool {
        self.assign(0)
    }

    fn assign(&mut self, depth: usize) -> bool {
        let Some(&v) = self.order.get(depth) else {
            return true;
        };
        let cands = self.candidates[&self.ca[v]].clone();
        for w in cands {
            if self.used[w] || !self.consistent(v, w) {
                continue;
            }
            self.map[v] = Some(w);
            self.used[w] = true;
            if self.assign(depth + 1) {
                return true;
            }
            self.map[v] = None;
            self.used[w] = false;
        }
        false
    }

    fn consistent(&self, v: usize, w: usize) -> bool {
        if self.a.between(v, v) != self.b.between(w, w) {
            return false;
        }
        self.order
            .iter()
            .filter_map(|&u| self.map[u].map(|x| (u, x)))
            .all(|(u, x)| self.a.between(v, u) == self.b.between(w, x) && self.a.between(u, v) == self.b.between(x, w))
    }
}

fn model_graph(model: &StaticModel) -> LabeledGraph {
    let mut g = LabeledGraph::new();
    let mut index = HashMap::new();
    let machines = model.all_machines();
    for m in &machines {
        let v = g.vertex(format!("machine:{}", m.is_constraint));
        index.insert(m.id.as_str(), v);
    }
    for m in &machines {
        let mv = index[m.id.as_str()];
        if let Some(p) = m.parent.as_deref().and_then(|p| index.get(p)) {
            g.edge(*p, mv, "sub");
        }
        for s in &m.stages {
            let sv = g.vertex(format!("stage:{}:{}", s.kind, s.has_storage));
            index.insert(s.id.as_str(), sv);
            g.edge(mv, sv, "has");
        }
    }
    for f in model.flows() {
        if let (Some(&s), Some(&t)) = (index.get(f.source.as_str()), index.get(f.target.as_str())) {
            g.edge(s, t, "flow");
        }
    }
    for t in model.triggers() {
        if let (Some(&s), Some(&d)) = (index.get(t.source.as_str()), index.get(t.target.as_str())) {
            let label = match &t.guard {
                Some(guard) => format!("trigger?{guard}"),
                None => "trigger".to_string(),
            };
            g.edge(s, d, label);
        }
    }
    g
}

/// True iff some bijection on machines and stages preserves nesting, kinds,
/// storage, constraint flags, flows, triggers and guards. Ids, names and
/// labels are ignored.
pub fn model_isomorphic(a: &StaticModel, b: &StaticModel) -> bool {
    model_graph(a).isomorphic(&model_graph(b))
}
