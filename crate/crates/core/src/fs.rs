//! Feature structures as graphs, and the declarative operations on them:
//! subsumption, unification (two independent routes), fill, multi-rooted
//! and disjunctive unification, rule application.
//!
//! Node identity is a `usize` index; equality between structures is always
//! alphabetic variance ([`variants`]).

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::signature::{FeatureId, Signature, TypeId};
use crate::term::{expand_disjunctions, Tag, Term};

/// Nodes with types and outgoing arcs sorted by feature.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Graph {
    pub types: Vec<TypeId>,
    pub arcs: Vec<Vec<(FeatureId, usize)>>,
}

impl Graph {
    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn add_node(&mut self, ty: TypeId) -> usize {
        self.types.push(ty);
        self.arcs.push(Vec::new());
        self.types.len() - 1
    }

    /// Adds or redirects the `f` arc of `q`.
    pub fn set_arc(&mut self, q: usize, f: FeatureId, target: usize) {
        let arcs = &mut self.arcs[q];
        match arcs.binary_search_by_key(&f, |&(g, _)| g) {
            Ok(i) => arcs[i].1 = target,
            Err(i) => arcs.insert(i, (f, target)),
        }
    }

    pub fn arc(&self, q: usize, f: FeatureId) -> Option<usize> {
        let arcs = &self.arcs[q];
        arcs.binary_search_by_key(&f, |&(g, _)| g)
            .ok()
            .map(|i| arcs[i].1)
    }

    /// Copies `other` in, returning the offset of its first node.
    pub fn append(&mut self, other: &Graph) -> usize {
        let base = self.len();
        self.types.extend_from_slice(&other.types);
        for arcs in &other.arcs {
            self.arcs.push(arcs.iter().map(|&(f, q)| (f, q + base)).collect());
        }
        base
    }

    /// The nodes reachable from `roots`, renumbered in depth-first preorder.
    /// Returns the new graph and the new ids of the roots.
    pub fn restrict(&self, roots: &[usize]) -> (Graph, Vec<usize>) {
        let mut map: HashMap<usize, usize> = HashMap::new();
        let mut order = Vec::new();
        for &r in roots {
            let mut stack = vec![r];
            while let Some(q) = stack.pop() {
                if map.contains_key(&q) {
                    continue;
                }
                map.insert(q, order.len());
                order.push(q);
                for &(_, t) in self.arcs[q].iter().rev() {
                    if !map.contains_key(&t) {
                        stack.push(t);
                    }
                }
            }
        }
        let mut g = Graph::default();
        for &q in &order {
            g.types.push(self.types[q]);
            g.arcs.push(self.arcs[q].iter().map(|&(f, t)| (f, map[&t])).collect());
        }
        let roots = roots.iter().map(|r| map[r]).collect();
        (g, roots)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureStructure {
    pub graph: Graph,
    pub root: usize,
}

/// Several roots over one graph; repeated roots are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiRooted {
    pub graph: Graph,
    pub roots: Vec<usize>,
}

impl FeatureStructure {
    /// The single node `ty` with no arcs.
    pub fn atom(ty: TypeId) -> Self {
        let mut graph = Graph::default();
        graph.add_node(ty);
        FeatureStructure { graph, root: 0 }
    }

    pub fn root_type(&self) -> TypeId {
        self.graph.types[self.root]
    }

    pub fn as_mrs(&self) -> MultiRooted {
        MultiRooted {
            graph: self.graph.clone(),
            roots: vec![self.root],
        }
    }
}

impl MultiRooted {
    /// The structure rooted at root `i`, cut down to its reachable nodes.
    pub fn item(&self, i: usize) -> FeatureStructure {
        let (graph, roots) = self.graph.restrict(&[self.roots[i]]);
        FeatureStructure { graph, root: roots[0] }
    }

    pub fn normalized(&self) -> MultiRooted {
        let (graph, roots) = self.graph.restrict(&self.roots);
        MultiRooted { graph, roots }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FsError {
    #[error("disjunctive terms have no single feature structure")]
    Disjunctive,
    #[error("node of type `{ty}` does not carry exactly its appropriate features")]
    NotTotal { ty: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum UnifyError {
    #[error("unification failed")]
    Failure,
    #[error("multi-rooted structures of lengths {0} and {1}")]
    LengthMismatch(usize, usize),
}

fn build_term(
    sig: &Signature,
    t: &Term,
    g: &mut Graph,
    tags: &mut HashMap<Tag, usize>,
) -> Result<usize, FsError> {
    match t {
        Term::Typed { tag, ty, args } => {
            let q = g.add_node(*ty);
            if let Some(tag) = tag {
                tags.insert(*tag, q);
            }
            for (arg, &(f, _)) in args.iter().zip(sig.features(*ty)) {
                let c = build_term(sig, arg, g, tags)?;
                g.set_arc(q, f, c);
            }
            Ok(q)
        }
        Term::Tag(tag) => Ok(*tags.entry(*tag).or_insert_with(|| g.add_node(TypeId::BOT))),
        Term::Disjunction(_) => Err(FsError::Disjunctive),
    }
}

pub fn term_to_fs(sig: &Signature, t: &Term) -> Result<FeatureStructure, FsError> {
    let m = mrs_to_fs(sig, std::slice::from_ref(t))?;
    Ok(FeatureStructure {
        graph: m.graph,
        root: m.roots[0],
    })
}

/// Items share one tag scope and one graph.
pub fn mrs_to_fs(sig: &Signature, items: &[Term]) -> Result<MultiRooted, FsError> {
    let mut graph = Graph::default();
    let mut tags = HashMap::new();
    let mut roots = Vec::new();
    for t in items {
        roots.push(build_term(sig, t, &mut graph, &mut tags)?);
    }
    Ok(MultiRooted { graph, roots })
}

struct TermWriter<'a> {
    sig: &'a Signature,
    g: &'a Graph,
    refs: Vec<usize>,
    tag_of: HashMap<usize, Tag>,
    next_tag: Tag,
}

impl TermWriter<'_> {
    fn node(&mut self, q: usize) -> Result<Term, FsError> {
        if let Some(&tag) = self.tag_of.get(&q) {
            return Ok(Term::Tag(tag));
        }
        let ty = self.g.types[q];
        let feats = self.sig.features(ty);
        let arcs = &self.g.arcs[q];
        if ty.is_top() || arcs.len() != feats.len() || arcs.iter().zip(feats).any(|(a, f)| a.0 != f.0) {
            return Err(FsError::NotTotal {
                ty: self.sig.type_name(ty).to_string(),
            });
        }
        let tag = if self.refs[q] > 1 {
            self.next_tag += 1;
            self.tag_of.insert(q, self.next_tag);
            Some(self.next_tag)
        } else {
            None
        };
        let mut args = Vec::with_capacity(arcs.len());
        for &(_, c) in arcs {
            args.push(self.node(c)?);
        }
        Ok(Term::Typed { tag, ty, args })
    }
}

/// Normal terms for each root, tags numbered 1.. in order of first
/// appearance across all items.
pub fn mrs_to_terms(sig: &Signature, m: &MultiRooted) -> Result<Vec<Term>, FsError> {
    let g = &m.graph;
    let mut refs = vec![0usize; g.len()];
    for &r in &m.roots {
        refs[r] += 1;
    }
    let mut seen = vec![false; g.len()];
    let mut stack: Vec<usize> = m.roots.clone();
    while let Some(q) = stack.pop() {
        if std::mem::replace(&mut seen[q], true) {
            continue;
        }
        for &(_, t) in &g.arcs[q] {
            refs[t] += 1;
            stack.push(t);
        }
    }
    let mut w = TermWriter {
        sig,
        g,
        refs,
        tag_of: HashMap::new(),
        next_tag: 0,
    };
    m.roots.iter().map(|&r| w.node(r)).collect()
}

pub fn fs_to_term(sig: &Signature, fs: &FeatureStructure) -> Result<Term, FsError> {
    Ok(mrs_to_terms(sig, &fs.as_mrs())?.remove(0))
}

/// The value of a path; undefined paths give the single node `TOP`.
pub fn path_val(fs: &FeatureStructure, path: &[FeatureId]) -> FeatureStructure {
    let mut q = fs.root;
    for &f in path {
        match fs.graph.arc(q, f) {
            Some(t) => q = t,
            None => return FeatureStructure::atom(TypeId::TOP),
        }
    }
    let (graph, roots) = fs.graph.restrict(&[q]);
    FeatureStructure { graph, root: roots[0] }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypingMode {
    Well,
    Total,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypingViolation {
    NotAppropriate { node: usize, feature: FeatureId },
    BadValue { node: usize, feature: FeatureId },
    Missing { node: usize, feature: FeatureId },
    TopNode { node: usize },
}

/// Checks every node of the graph. A ⊥-typed value is accepted wherever
/// a feature is appropriate.
pub fn check_typing(sig: &Signature, g: &Graph, mode: TypingMode) -> Result<(), TypingViolation> {
    for q in 0..g.len() {
        let ty = g.types[q];
        if ty.is_top() {
            return Err(TypingViolation::TopNode { node: q });
        }
        for &(f, t) in &g.arcs[q] {
            match sig.approp(f, ty) {
                None => return Err(TypingViolation::NotAppropriate { node: q, feature: f }),
                Some(v) => {
                    let vt = g.types[t];
                    if vt != TypeId::BOT && !sig.subsumes(v, vt) {
                        return Err(TypingViolation::BadValue { node: q, feature: f });
                    }
                }
            }
        }
        if mode == TypingMode::Total {
            for &(f, _) in sig.features(ty) {
                if g.arc(q, f).is_none() {
                    return Err(TypingViolation::Missing { node: q, feature: f });
                }
            }
        }
    }
    Ok(())
}

/// The forced morphism from `g1` to `g2` seeded by `pairs`, if one exists.
fn morphism(
    sig: &Signature,
    g1: &Graph,
    g2: &Graph,
    pairs: impl IntoIterator<Item = (usize, usize)>,
) -> Option<Vec<usize>> {
    let mut h: Vec<Option<usize>> = vec![None; g1.len()];
    let mut work: Vec<(usize, usize)> = pairs.into_iter().collect();
    while let Some((q1, q2)) = work.pop() {
        match h[q1] {
            Some(prev) if prev == q2 => continue,
            Some(_) => return None,
            None => h[q1] = Some(q2),
        }
        if !sig.subsumes(g1.types[q1], g2.types[q2]) {
            return None;
        }
        for &(f, t1) in &g1.arcs[q1] {
            let t2 = g2.arc(q2, f)?;
            work.push((t1, t2));
        }
    }
    // Nodes of g1 not reached from the seeds map nowhere; the callers pass
    // restricted graphs, so a total function is required.
    h.into_iter().collect()
}

/// A subsumption morphism from `fs1` to `fs2`, when `fs1 ⊑ fs2`.
pub fn subsumes(sig: &Signature, fs1: &FeatureStructure, fs2: &FeatureStructure) -> Option<Vec<usize>> {
    let (g1, r1) = fs1.graph.restrict(&[fs1.root]);
    morphism(sig, &g1, &fs2.graph, [(r1[0], fs2.root)])
}

/// Root `i` must map to root `i`.
pub fn mrs_subsumes(sig: &Signature, m1: &MultiRooted, m2: &MultiRooted) -> Option<Vec<usize>> {
    if m1.roots.len() != m2.roots.len() {
        return None;
    }
    let (g1, r1) = m1.graph.restrict(&m1.roots);
    morphism(sig, &g1, &m2.graph, r1.into_iter().zip(m2.roots.iter().copied()))
}

pub fn variants(sig: &Signature, fs1: &FeatureStructure, fs2: &FeatureStructure) -> bool {
    subsumes(sig, fs1, fs2).is_some() && subsumes(sig, fs2, fs1).is_some()
}

pub fn mrs_variants(sig: &Signature, m1: &MultiRooted, m2: &MultiRooted) -> bool {
    mrs_subsumes(sig, m1, m2).is_some() && mrs_subsumes(sig, m2, m1).is_some()
}

/// Multiset equality up to variance.
pub fn same_alternatives(sig: &Signature, xs: &[MultiRooted], ys: &[MultiRooted]) -> bool {
    if xs.len() != ys.len() {
        return false;
    }
    let mut used = vec![false; ys.len()];
    xs.iter().all(|x| {
        match (0..ys.len()).find(|&j| !used[j] && mrs_variants(sig, x, &ys[j])) {
            Some(j) => {
                used[j] = true;
                true
            }
            None => false,
        }
    })
}

/// Adds Approp-typed children for every missing appropriate feature,
/// recursively.
pub fn fill(sig: &Signature, g: &mut Graph) {
    let mut q = 0;
    while q < g.len() {
        let ty = g.types[q];
        for &(f, v) in sig.features(ty) {
            if g.arc(q, f).is_none() {
                let c = g.add_node(v);
                g.set_arc(q, f, c);
            }
        }
        q += 1;
    }
}

pub fn fill_fs(sig: &Signature, fs: &FeatureStructure) -> FeatureStructure {
    let mut fs = fs.clone();
    fill(sig, &mut fs.graph);
    fs
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// The ≈ closure over `g` seeded with `pairs`, then one node per class.
/// Returns the quotient graph and the class of every original node.
fn closure(sig: &Signature, g: &Graph, pairs: &[(usize, usize)]) -> Option<(Graph, Vec<usize>)> {
    let n = g.len();
    let mut uf = UnionFind::new(n);
    // Arcs of each class representative, merged as classes join.
    let mut class_arcs: Vec<HashMap<FeatureId, usize>> = g
        .arcs
        .iter()
        .map(|a| a.iter().copied().collect())
        .collect();
    let mut work: Vec<(usize, usize)> = pairs.to_vec();
    while let Some((a, b)) = work.pop() {
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra == rb {
            continue;
        }
        uf.parent[rb] = ra;
        let moved = std::mem::take(&mut class_arcs[rb]);
        for (f, t) in moved {
            match class_arcs[ra].get(&f) {
                Some(&s) => work.push((s, t)),
                None => {
                    class_arcs[ra].insert(f, t);
                }
            }
        }
    }
    let mut class_id = vec![usize::MAX; n];
    let mut out = Graph::default();
    let mut class_of = vec![0; n];
    for q in 0..n {
        let r = uf.find(q);
        if class_id[r] == usize::MAX {
            class_id[r] = out.add_node(TypeId::BOT);
        }
        class_of[q] = class_id[r];
    }
    for q in 0..n {
        let c = class_of[q];
        let t = sig.lub(out.types[c], g.types[q]);
        if t.is_top() {
            return None;
        }
        out.types[c] = t;
        for &(f, target) in &g.arcs[q] {
            out.set_arc(c, f, class_of[target]);
        }
    }
    Some((out, class_of))
}

/// Unification by destructive recursion: each call makes a fresh result
/// node, forwards both arguments to it, and recurses on shared features.
/// Arguments' nodes not involved are reused rather than copied.
struct Recursive<'a> {
    sig: &'a Signature,
    g: Graph,
    forward: Vec<usize>,
}

impl Recursive<'_> {
    fn find(&mut self, mut q: usize) -> usize {
        while self.forward[q] != q {
            q = self.forward[q];
        }
        q
    }

    fn unify(&mut self, q1: usize, q2: usize) -> Option<usize> {
        let (q1, q2) = (self.find(q1), self.find(q2));
        if q1 == q2 {
            return Some(q1);
        }
        let t = self.sig.lub(self.g.types[q1], self.g.types[q2]);
        if t.is_top() {
            return None;
        }
        let q = self.g.add_node(t);
        self.forward.push(q);
        self.forward[q1] = q;
        self.forward[q2] = q;
        let a1 = self.g.arcs[q1].clone();
        let a2 = self.g.arcs[q2].clone();
        // Shared features point at the left value until the recursion
        // merges it with the right one.
        for &(f, t1) in &a1 {
            self.g.set_arc(q, f, t1);
        }
        for &(f, t2) in &a2 {
            if self.g.arc(q1, f).is_none() {
                self.g.set_arc(q, f, t2);
            }
        }
        for &(f, t1) in &a1 {
            if let Some(t2) = self.g.arc(q2, f) {
                self.unify(t1, t2)?;
            }
        }
        Some(q)
    }

    /// Redirects every arc to its representative.
    fn resolve(mut self, roots: &[usize]) -> (Graph, Vec<usize>) {
        for q in 0..self.g.len() {
            let arcs = self.g.arcs[q].clone();
            for (f, t) in arcs {
                let r = self.find(t);
                self.g.set_arc(q, f, r);
            }
        }
        let roots: Vec<usize> = roots.iter().map(|&r| self.find(r)).collect();
        self.g.restrict(&roots)
    }
}

fn disjoint(a: &Graph, b: &Graph) -> (Graph, usize) {
    let mut g = a.clone();
    let base = g.append(b);
    (g, base)
}

/// Which procedure computes the ≈ classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Closure,
    Recursive,
}

fn unify_graph(
    sig: &Signature,
    g: &Graph,
    pairs: &[(usize, usize)],
    roots: &[usize],
    with_fill: bool,
    route: Route,
) -> Result<MultiRooted, UnifyError> {
    let (mut graph, roots) = match route {
        Route::Closure => {
            let (quot, class_of) = closure(sig, g, pairs).ok_or(UnifyError::Failure)?;
            let roots: Vec<usize> = roots.iter().map(|&r| class_of[r]).collect();
            quot.restrict(&roots)
        }
        Route::Recursive => {
            let mut r = Recursive {
                sig,
                g: g.clone(),
                forward: (0..g.len()).collect(),
            };
            for &(a, b) in pairs {
                r.unify(a, b).ok_or(UnifyError::Failure)?;
            }
            r.resolve(roots)
        }
    };
    if with_fill {
        fill(sig, &mut graph);
    }
    Ok(MultiRooted { graph, roots })
}

pub fn unify_oracle(
    sig: &Signature,
    fs1: &FeatureStructure,
    fs2: &FeatureStructure,
    with_fill: bool,
) -> Option<FeatureStructure> {
    unify_with(sig, fs1, fs2, with_fill, Route::Closure)
}

pub fn unify_recursive(
    sig: &Signature,
    fs1: &FeatureStructure,
    fs2: &FeatureStructure,
    with_fill: bool,
) -> Option<FeatureStructure> {
    unify_with(sig, fs1, fs2, with_fill, Route::Recursive)
}

fn unify_with(
    sig: &Signature,
    fs1: &FeatureStructure,
    fs2: &FeatureStructure,
    with_fill: bool,
    route: Route,
) -> Option<FeatureStructure> {
    let (g, base) = disjoint(&fs1.graph, &fs2.graph);
    let pair = (fs1.root, fs2.root + base);
    let m = unify_graph(sig, &g, &[pair], &[fs1.root], with_fill, route).ok()?;
    Some(FeatureStructure {
        graph: m.graph,
        root: m.roots[0],
    })
}

/// Root pairs are equated in the given order; the result does not depend
/// on it.
pub fn mrs_unify_ordered(
    sig: &Signature,
    m1: &MultiRooted,
    m2: &MultiRooted,
    with_fill: bool,
    route: Route,
    order: &[usize],
) -> Result<MultiRooted, UnifyError> {
    if m1.roots.len() != m2.roots.len() {
        return Err(UnifyError::LengthMismatch(m1.roots.len(), m2.roots.len()));
    }
    let (g, base) = disjoint(&m1.graph, &m2.graph);
    let pairs: Vec<(usize, usize)> = order.iter().map(|&i| (m1.roots[i], m2.roots[i] + base)).collect();
    unify_graph(sig, &g, &pairs, &m1.roots, with_fill, route)
}

pub fn mrs_unify_oracle(
    sig: &Signature,
    m1: &MultiRooted,
    m2: &MultiRooted,
    with_fill: bool,
) -> Result<MultiRooted, UnifyError> {
    let order: Vec<usize> = (0..m1.roots.len()).collect();
    mrs_unify_ordered(sig, m1, m2, with_fill, Route::Closure, &order)
}

/// Unifies the rule's body with `resident` and returns the head, filled.
pub fn apply_rule_oracle(
    sig: &Signature,
    body: &[Term],
    head: &Term,
    resident: &MultiRooted,
) -> Result<FeatureStructure, UnifyError> {
    if body.len() != resident.roots.len() {
        return Err(UnifyError::LengthMismatch(body.len(), resident.roots.len()));
    }
    let mut items = body.to_vec();
    items.push(head.clone());
    let rule = mrs_to_fs(sig, &items).map_err(|_| UnifyError::Failure)?;
    let (g, base) = disjoint(&rule.graph, &resident.graph);
    let pairs: Vec<(usize, usize)> = resident
        .roots
        .iter()
        .enumerate()
        .map(|(i, &r)| (rule.roots[i], r + base))
        .collect();
    let m = unify_graph(sig, &g, &pairs, &[*rule.roots.last().unwrap()], true, Route::Closure)?;
    Ok(FeatureStructure {
        graph: m.graph,
        root: m.roots[0],
    })
}

/// All pairwise unifications of the disjunctive normal forms of the two
/// sets, failures dropped. Empty means failure.
pub fn disj_unify_oracle(
    sig: &Signature,
    set1: &[Term],
    set2: &[Term],
) -> Result<Vec<FeatureStructure>, UnifyError> {
    let alts = |set: &[Term]| -> Vec<FeatureStructure> {
        set.iter()
            .flat_map(expand_disjunctions)
            .map(|t| term_to_fs(sig, &t).expect("expanded terms are disjunction free"))
            .collect()
    };
    let (a1, a2) = (alts(set1), alts(set2));
    let mut out = Vec::new();
    for x in &a1 {
        for y in &a2 {
            if let Some(u) = unify_oracle(sig, x, y, true) {
                out.push(u);
            }
        }
    }
    if out.is_empty() {
        Err(UnifyError::Failure)
    } else {
        Ok(out)
    }
}

/// Disjunctive normal form of an MRS: one item list per combination.
pub fn expand_mrs(items: &[Term]) -> Vec<Vec<Term>> {
    let mut acc: Vec<Vec<Term>> = vec![Vec::new()];
    for item in items {
        let alts = expand_disjunctions(item);
        acc = acc
            .into_iter()
            .flat_map(|prefix| {
                alts.iter().map(move |a| {
                    let mut p = prefix.clone();
                    p.push(a.clone());
                    p
                })
            })
            .collect();
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DNode {
    Node { ty: TypeId, arcs: Vec<(FeatureId, usize)> },
    Or(Vec<usize>),
}

/// A graph that may contain OR nodes, as read back from a heap.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DisjGraph {
    pub nodes: Vec<DNode>,
    pub roots: Vec<usize>,
}

impl From<&MultiRooted> for DisjGraph {
    fn from(m: &MultiRooted) -> Self {
        DisjGraph {
            nodes: m
                .graph
                .types
                .iter()
                .zip(&m.graph.arcs)
                .map(|(&ty, arcs)| DNode::Node { ty, arcs: arcs.clone() })
                .collect(),
            roots: m.roots.clone(),
        }
    }
}

impl DisjGraph {
    pub fn has_or(&self) -> bool {
        self.nodes.iter().any(|n| matches!(n, DNode::Or(_)))
    }

    /// Every way of choosing one disjunct per reachable OR node.
    pub fn alternatives(&self) -> Vec<MultiRooted> {
        let mut out = Vec::new();
        let mut choice: HashMap<usize, usize> = HashMap::new();
        self.expand(&mut choice, &mut out);
        out
    }

    fn resolve(&self, mut q: usize, choice: &HashMap<usize, usize>) -> Result<usize, usize> {
        loop {
            match &self.nodes[q] {
                DNode::Node { .. } => return Ok(q),
                DNode::Or(ds) => match choice.get(&q) {
                    Some(&k) => q = ds[k],
                    None => return Err(q),
                },
            }
        }
    }

    fn expand(&self, choice: &mut HashMap<usize, usize>, out: &mut Vec<MultiRooted>) {
        // Walk under the current choices; stop at the first open OR node.
        let mut map: HashMap<usize, usize> = HashMap::new();
        let mut g = Graph::default();
        let mut queue: VecDeque<usize> = VecDeque::new();
        let mut roots = Vec::new();
        let visit = |q: usize, g: &mut Graph, map: &mut HashMap<usize, usize>, queue: &mut VecDeque<usize>| {
            *map.entry(q).or_insert_with(|| {
                queue.push_back(q);
                g.add_node(TypeId::BOT)
            })
        };
        for &r in &self.roots {
            match self.resolve(r, choice) {
                Ok(q) => roots.push(visit(q, &mut g, &mut map, &mut queue)),
                Err(open) => return self.branch(open, choice, out),
            }
        }
        while let Some(q) = queue.pop_front() {
            let DNode::Node { ty, arcs } = &self.nodes[q] else { unreachable!() };
            let id = map[&q];
            g.types[id] = *ty;
            for &(f, t) in arcs {
                match self.resolve(t, choice) {
                    Ok(t) => {
                        let c = visit(t, &mut g, &mut map, &mut queue);
                        g.set_arc(id, f, c);
                    }
                    Err(open) => return self.branch(open, choice, out),
                }
            }
        }
        out.push(MultiRooted { graph: g, roots });
    }

    fn branch(&self, open: usize, choice: &mut HashMap<usize, usize>, out: &mut Vec<MultiRooted>) {
        let DNode::Or(ds) = &self.nodes[open] else { unreachable!() };
        for k in 0..ds.len() {
            choice.insert(open, k);
            self.expand(choice, out);
        }
        choice.remove(&open);
    }

    /// Graphviz rendering: nodes labeled by type, arcs by feature, OR
    /// nodes as diamonds.
    pub fn to_dot(&self, sig: &Signature) -> String {
        let mut s = String::from("digraph fs {\n  node [shape=ellipse];\n");
        for (i, &r) in self.roots.iter().enumerate() {
            let _ = writeln!(s, "  root{i} [shape=plaintext,label=\"{}\"];", i + 1);
            let _ = writeln!(s, "  root{i} -> n{r};");
        }
        for (q, n) in self.nodes.iter().enumerate() {
            match n {
                DNode::Node { ty, arcs } => {
                    let _ = writeln!(s, "  n{q} [label=\"{}\"];", sig.type_name(*ty));
                    for &(f, t) in arcs {
                        let _ = writeln!(s, "  n{q} -> n{t} [label=\"{}\"];", sig.feature_name(f));
                    }
                }
                DNode::Or(ds) => {
                    let _ = writeln!(s, "  n{q} [shape=diamond,label=\"OR\"];");
                    for &t in ds {
                        let _ = writeln!(s, "  n{q} -> n{t};");
                    }
                }
            }
        }
        s.push_str("}\n");
        s
    }
}
