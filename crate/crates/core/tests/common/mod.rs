//! Seeded random corpus: signatures, strictly well-typed structures,
//! query/program pairs, rules and disjunctive cases, plus the
//! machine-versus-oracle check used by several test targets.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tfsam::compiler::{compile_program, compile_query, compile_rule, CompileOptions};
use tfsam::fs::{
    apply_rule_oracle, expand_mrs, fill, mrs_to_fs, mrs_to_terms, mrs_unify_oracle, mrs_variants,
    same_alternatives, Graph, MultiRooted, UnifyError,
};
use tfsam::machine::{execute, Cell, Outcome, Stats};
use tfsam::signature::{load_signature, Signature, TypeId};
use tfsam::term::{Rule, Term};

pub const MAX_NODES: usize = 25;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Sig {
    pub text: String,
    pub sig: Signature,
    min_size: Vec<usize>,
}

/// A random valid signature: at most 12 types and 6 features, each
/// feature with one introducer and one value type.
pub fn signature(rng: &mut ChaCha8Rng) -> Sig {
    loop {
        let n = rng.gen_range(3..=12);
        let name = |i: usize| if i == 0 { "bot".to_string() } else { format!("t{i}") };
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 1..n {
            let p = rng.gen_range(0..i);
            children[p].push(i);
            if i >= 3 && rng.gen_bool(0.25) {
                let q = rng.gen_range(1..i);
                if q != p {
                    children[q].push(i);
                }
            }
        }
        let mut intro: Vec<Vec<(String, usize)>> = vec![Vec::new(); n];
        for f in 0..rng.gen_range(0..=6) {
            let at = rng.gen_range(1..n);
            let v = if rng.gen_bool(0.35) { 0 } else { rng.gen_range(1..n) };
            intro[at].push((format!("f{f}"), v));
        }
        let mut text = String::new();
        for i in 0..n {
            if i > 0 && children[i].is_empty() && intro[i].is_empty() {
                continue;
            }
            text.push_str(&name(i));
            if !children[i].is_empty() {
                let subs: Vec<String> = children[i].iter().map(|&c| name(c)).collect();
                text.push_str(&format!(" sub [{}]", subs.join(",")));
            }
            if !intro[i].is_empty() {
                let fs: Vec<String> = intro[i].iter().map(|(f, v)| format!("{f}:{}", name(*v))).collect();
                text.push_str(&format!(" intro [{}]", fs.join(",")));
            }
            text.push_str(".\n");
        }
        if let Ok(sig) = load_signature(&text) {
            let min_size = min_sizes(&sig);
            return Sig { text, sig, min_size };
        }
    }
}

/// Size of the smallest total structure whose root type is at least `t`.
fn min_sizes(sig: &Signature) -> Vec<usize> {
    let n = sig.type_count();
    let mut own = vec![usize::MAX; n];
    loop {
        let mut best = vec![usize::MAX; n];
        for v in sig.types() {
            best[v.index()] = sig
                .types()
                .filter(|&t| sig.subsumes(v, t))
                .map(|t| own[t.index()])
                .min()
                .unwrap();
        }
        let mut changed = false;
        for t in sig.types() {
            let s = sig
                .features(t)
                .iter()
                .try_fold(1usize, |acc, &(_, v)| acc.checked_add(best[v.index()]))
                .unwrap_or(usize::MAX);
            if s < own[t.index()] {
                own[t.index()] = s;
                changed = true;
            }
        }
        if !changed {
            return best;
        }
    }
}

impl Sig {
    pub fn above(&self, v: TypeId) -> Vec<TypeId> {
        self.sig.types().filter(|&t| self.sig.subsumes(v, t)).collect()
    }

    fn between(&self, lo: TypeId, hi: TypeId) -> Vec<TypeId> {
        self.sig
            .types()
            .filter(|&t| self.sig.subsumes(lo, t) && self.sig.subsumes(t, hi))
            .collect()
    }

    fn pick(&self, rng: &mut ChaCha8Rng, v: TypeId, small: bool) -> TypeId {
        let cands = self.above(v);
        if small {
            let best = cands.iter().map(|t| self.own_size(*t)).min().unwrap();
            let smallest: Vec<TypeId> = cands.into_iter().filter(|t| self.own_size(*t) == best).collect();
            *smallest.choose(rng).unwrap()
        } else {
            *cands.choose(rng).unwrap()
        }
    }

    fn own_size(&self, t: TypeId) -> usize {
        self.sig
            .features(t)
            .iter()
            .fold(1usize, |acc, &(_, v)| acc.saturating_add(self.min_size[v.index()]))
    }
}

/// A random total, strictly well-typed structure with `roots` roots,
/// reentrant and often cyclic.
pub fn graph(rng: &mut ChaCha8Rng, s: &Sig, roots: usize) -> MultiRooted {
    'retry: loop {
        let mut g = Graph::default();
        let mut todo = VecDeque::new();
        let mut rts = Vec::new();
        for _ in 0..roots {
            if !rts.is_empty() && rng.gen_bool(0.15) {
                rts.push(rng.gen_range(0..g.len()));
                continue;
            }
            let t = s.pick(rng, TypeId::BOT, false);
            let q = g.add_node(t);
            todo.push_back(q);
            rts.push(q);
        }
        while let Some(q) = todo.pop_front() {
            for &(f, v) in s.sig.features(g.types[q]) {
                let over = g.len() >= MAX_NODES / 2;
                let reuse: Vec<usize> = (0..g.len()).filter(|&n| s.sig.subsumes(v, g.types[n])).collect();
                if !reuse.is_empty() && (over || rng.gen_bool(0.2)) {
                    g.set_arc(q, f, *reuse.choose(rng).unwrap());
                } else {
                    let n = g.add_node(s.pick(rng, v, over));
                    g.set_arc(q, f, n);
                    todo.push_back(n);
                }
            }
            if g.len() > MAX_NODES {
                continue 'retry;
            }
        }
        return MultiRooted { graph: g, roots: rts };
    }
}

fn incoming_bounds(s: &Sig, g: &Graph) -> Vec<TypeId> {
    let mut lo = vec![TypeId::BOT; g.len()];
    for q in 0..g.len() {
        for &(f, t) in &g.arcs[q] {
            let v = s.sig.approp(f, g.types[q]).unwrap();
            lo[t] = s.sig.lub(lo[t], v);
        }
    }
    lo
}

/// A structure subsuming `m`: some types made more general, arcs they no
/// longer carry dropped.
pub fn generalize(rng: &mut ChaCha8Rng, s: &Sig, m: &MultiRooted) -> MultiRooted {
    let mut g = m.graph.clone();
    let lo = incoming_bounds(s, &g);
    for q in 0..g.len() {
        if rng.gen_bool(0.5) {
            let u = *s.between(lo[q], g.types[q]).choose(rng).unwrap();
            g.types[q] = u;
        }
    }
    retyped(s, g, &m.roots)
}

/// Sets one node to an arbitrary type compatible with its incoming arcs.
pub fn perturb(rng: &mut ChaCha8Rng, s: &Sig, m: &MultiRooted) -> MultiRooted {
    let mut g = m.graph.clone();
    let lo = incoming_bounds(s, &g);
    let q = rng.gen_range(0..g.len());
    g.types[q] = *s.above(lo[q]).choose(rng).unwrap();
    retyped(s, g, &m.roots)
}

fn retyped(s: &Sig, mut g: Graph, roots: &[usize]) -> MultiRooted {
    for q in 0..g.len() {
        let t = g.types[q];
        g.arcs[q].retain(|&(f, _)| s.sig.approp(f, t).is_some());
    }
    fill(&s.sig, &mut g);
    let (graph, roots) = g.restrict(roots);
    MultiRooted { graph, roots }
}

pub fn terms(s: &Sig, m: &MultiRooted) -> Vec<Term> {
    mrs_to_terms(&s.sig, m).expect("generated structures are total")
}

/// A tag-free tree term of root type at least `v`.
pub fn tree(rng: &mut ChaCha8Rng, s: &Sig, v: TypeId, budget: &mut usize) -> Term {
    let ty = s.pick(rng, v, *budget == 0);
    *budget = budget.saturating_sub(1);
    let args = s.sig.features(ty).iter().map(|&(_, fv)| tree(rng, s, fv, budget)).collect();
    Term::Typed { tag: None, ty, args }
}

/// Puts up to `left` disjunctions into tag-free subterms of `t`.
pub fn inject(rng: &mut ChaCha8Rng, s: &Sig, t: &Term, lo: TypeId, left: &mut usize) -> Term {
    if *left > 0 && !t.has_tags() && rng.gen_bool(0.3) {
        *left -= 1;
        let mut ds = vec![t.clone()];
        for _ in 0..rng.gen_range(1..=2) {
            let alt = if rng.gen_bool(0.5) {
                let mut b = 6;
                tree(rng, s, lo, &mut b)
            } else {
                tree_variant(rng, s, t, lo)
            };
            ds.push(alt);
        }
        ds.shuffle(rng);
        return Term::Disjunction(ds);
    }
    match t {
        Term::Typed { tag, ty, args } => {
            let feats = s.sig.features(*ty);
            let args = args
                .iter()
                .zip(feats)
                .map(|(a, &(_, v))| inject(rng, s, a, v, left))
                .collect();
            Term::Typed { tag: *tag, ty: *ty, args }
        }
        other => other.clone(),
    }
}

/// A more general or perturbed copy of a tag-free term.
fn tree_variant(rng: &mut ChaCha8Rng, s: &Sig, t: &Term, lo: TypeId) -> Term {
    let m = mrs_to_fs(&s.sig, std::slice::from_ref(t)).unwrap();
    let m = if rng.gen_bool(0.5) { generalize(rng, s, &m) } else { perturb(rng, s, &m) };
    if s.sig.subsumes(lo, m.graph.types[m.roots[0]]) {
        terms(s, &m).remove(0)
    } else {
        let mut b = 6;
        tree(rng, s, lo, &mut b)
    }
}

pub fn tree_terms(rng: &mut ChaCha8Rng, s: &Sig, roots: usize) -> Vec<Term> {
    (0..roots)
        .map(|_| {
            let mut b = 10;
            tree(rng, s, TypeId::BOT, &mut b)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub enum Case {
    Plain { query: Vec<Term>, program: Vec<Term> },
    Rule { query: Vec<Term>, rule: Rule },
    Disj { query: Vec<Term>, program: Vec<Term> },
}

/// A program related to `q`: more general, perturbed or unrelated.
fn partner(rng: &mut ChaCha8Rng, s: &Sig, q: &MultiRooted) -> MultiRooted {
    match rng.gen_range(0..4) {
        0 => graph(rng, s, q.roots.len()),
        1 => perturb(rng, s, q),
        2 => {
            let g = generalize(rng, s, q);
            perturb(rng, s, &g)
        }
        _ => generalize(rng, s, q),
    }
}

pub fn plain_case(rng: &mut ChaCha8Rng, s: &Sig, roots: usize) -> Case {
    let base = graph(rng, s, roots);
    let other = partner(rng, s, &base);
    let (q, p) = if rng.gen_bool(0.5) { (base, other) } else { (other, base) };
    Case::Plain { query: terms(s, &q), program: terms(s, &p) }
}

pub fn rule_case(rng: &mut ChaCha8Rng, s: &Sig) -> Case {
    let k = rng.gen_range(1..=3);
    let r = graph(rng, s, k + 1);
    let mut items = terms(s, &r);
    let head = items.pop().unwrap();
    let body_fs = mrs_to_fs(&s.sig, &items).unwrap();
    let query = partner(rng, s, &body_fs);
    Case::Rule { query: terms(s, &query), rule: Rule { body: items, head } }
}

/// Disjunctions on either side within the restrictions: the program is
/// tag-free, and the query is tag-free whenever the program has
/// disjunctions.
pub fn disj_case(rng: &mut ChaCha8Rng, s: &Sig, roots: usize) -> Case {
    let program_disj = rng.gen_bool(0.5);
    let query_tags = !program_disj && rng.gen_bool(0.5);
    let base = if query_tags {
        graph(rng, s, roots)
    } else {
        mrs_to_fs(&s.sig, &tree_terms(rng, s, roots)).unwrap()
    };
    let q = terms(s, &base);
    let p_graph = partner(rng, s, &base);
    // unshare the program: print each root on its own, without tags
    let mut p: Vec<Term> = (0..p_graph.roots.len())
        .map(|i| untagged(rng, s, &p_graph, i))
        .collect();
    let mut q = q;
    let mut left = 3;
    if !program_disj || rng.gen_bool(0.5) {
        q = q.iter().map(|t| inject(rng, s, t, TypeId::BOT, &mut left)).collect();
    }
    if program_disj {
        left = 3;
        p = p.iter().map(|t| inject(rng, s, t, TypeId::BOT, &mut left)).collect();
    }
    Case::Disj { query: q, program: p }
}

/// Root `i` of `m` unfolded into a tree, cut at depth 4 by fresh small
/// subterms.
fn untagged(rng: &mut ChaCha8Rng, s: &Sig, m: &MultiRooted, i: usize) -> Term {
    fn go(rng: &mut ChaCha8Rng, s: &Sig, g: &Graph, q: usize, depth: usize) -> Term {
        if depth == 0 {
            let mut b = 0;
            return tree(rng, s, g.types[q], &mut b);
        }
        let args = g.arcs[q].iter().map(|&(_, t)| go(rng, s, g, t, depth - 1)).collect();
        Term::Typed { tag: None, ty: g.types[q], args }
    }
    go(rng, s, &m.graph, m.roots[i], 4)
}

pub fn random_case(rng: &mut ChaCha8Rng, s: &Sig) -> Case {
    match rng.gen_range(0..10) {
        0..=3 => plain_case(rng, s, 1),
        4..=5 => {
            let n = rng.gen_range(2..=4);
            plain_case(rng, s, n)
        }
        6..=7 => rule_case(rng, s),
        _ => {
            let n = rng.gen_range(1..=2);
            disj_case(rng, s, n)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    BothSucceed,
    BothFail,
}

/// Runs the machine and the oracle and compares them.
pub fn check(s: &Sig, case: &Case, opts: CompileOptions) -> Result<(Verdict, Stats), String> {
    let sig = &s.sig;
    let (query, unit, expected) = match case {
        Case::Plain { query, program } => {
            let q = mrs_to_fs(sig, query).map_err(|e| e.to_string())?;
            let p = mrs_to_fs(sig, program).map_err(|e| e.to_string())?;
            let want = match mrs_unify_oracle(sig, &p, &q, true) {
                Ok(m) => Some(vec![m]),
                Err(UnifyError::Failure) => None,
                Err(e) => return Err(e.to_string()),
            };
            (query, compile_program(sig, program, opts), want)
        }
        Case::Rule { query, rule } => {
            let q = mrs_to_fs(sig, query).map_err(|e| e.to_string())?;
            let want = match apply_rule_oracle(sig, &rule.body, &rule.head, &q) {
                Ok(h) => Some(vec![h.as_mrs()]),
                Err(UnifyError::Failure) => None,
                Err(e) => return Err(e.to_string()),
            };
            (query, compile_rule(sig, rule, opts), want)
        }
        Case::Disj { query, program } => {
            let mut alts = Vec::new();
            for qa in expand_mrs(query) {
                for pa in expand_mrs(program) {
                    let q = mrs_to_fs(sig, &qa).map_err(|e| e.to_string())?;
                    let p = mrs_to_fs(sig, &pa).map_err(|e| e.to_string())?;
                    if let Ok(m) = mrs_unify_oracle(sig, &p, &q, true) {
                        alts.push(m);
                    }
                }
            }
            let want = if alts.is_empty() { None } else { Some(alts) };
            (query, compile_program(sig, program, opts), want)
        }
    };
    let qu = compile_query(sig, query, opts);
    let m = execute(sig, &qu, &unit).map_err(|e| format!("machine error: {e}"))?;
    match (m.outcome, expected) {
        (Outcome::Failed, None) => Ok((Verdict::BothFail, m.stats)),
        (Outcome::Failed, Some(_)) => Err("machine failed, oracle succeeded".into()),
        (Outcome::Succeeded, None) => Err("machine succeeded, oracle failed".into()),
        (Outcome::Succeeded, Some(want)) => {
            if m.queue_len() != 0 || !m.ds.is_empty() {
                return Err("queue or disjunction stack not empty at the end".into());
            }
            let g = m.extract(&m.result_roots()).map_err(|e| e.to_string())?;
            let got = g.alternatives();
            let same = if want.len() == 1 && got.len() == 1 {
                mrs_variants(sig, &got[0].normalized(), &want[0].normalized())
            } else {
                same_alternatives(sig, &got, &want)
            };
            if same {
                Ok((Verdict::BothSucceed, m.stats))
            } else {
                Err(format!("results differ: machine {} alternatives, oracle {}", got.len(), want.len()))
            }
        }
    }
}

/// Options the case may run under: basic mode needs a single-root,
/// bracket-free, non-rule case.
pub fn options_for(rng: &mut ChaCha8Rng, case: &Case) -> CompileOptions {
    let single = match case {
        Case::Plain { query, .. } => query.len() == 1,
        _ => false,
    };
    let disj = matches!(case, Case::Disj { .. });
    let loop_brackets = disj || rng.gen_bool(0.7);
    let root_framing = match case {
        Case::Rule { .. } => true,
        Case::Disj { query, .. } => query.len() > 1 || rng.gen_bool(0.5),
        _ => !single || rng.gen_bool(0.7),
    };
    CompileOptions { loop_brackets, root_framing }
}

pub fn describe(s: &Sig, case: &Case) -> String {
    use tfsam::term::{print_mrs, print_rule, Mrs};
    let show = |items: &[Term]| print_mrs(&s.sig, &Mrs { items: items.to_vec() });
    let body = match case {
        Case::Plain { query, program } | Case::Disj { query, program } => {
            format!("query: {}\nprogram: {}", show(query), show(program))
        }
        Case::Rule { query, rule } => format!("query: {}\nrule: {}", show(query), print_rule(&s.sig, rule)),
    };
    format!("signature:\n{}{body}", s.text)
}

/// Every value is at least its appropriate type; no ⊥ exemption.
pub fn strictly_typed(sig: &Signature, t: &Term, lo: TypeId) -> bool {
    match t {
        Term::Typed { ty, args, .. } => {
            sig.subsumes(lo, *ty)
                && args
                    .iter()
                    .zip(sig.features(*ty))
                    .all(|(a, &(_, v))| strictly_typed(sig, a, v))
        }
        Term::Tag(_) => true,
        Term::Disjunction(ds) => ds.iter().all(|d| strictly_typed(sig, d, lo)),
    }
}

/// Cells of the disjunct hanging from `slot` in a heap snapshot.
pub fn subgraph(heap: &[Cell], slot: usize, sig: &Signature) -> HashSet<usize> {
    let mut seen = HashSet::new();
    let mut stack = vec![slot];
    while let Some(a) = stack.pop() {
        if !seen.insert(a) {
            continue;
        }
        match heap[a] {
            Cell::Ref(b) if b != a => stack.push(b),
            Cell::Ref(_) => {}
            Cell::Str(t) => stack.extend((1..=sig.arity(t)).map(|i| a + i)),
            Cell::Or(k) => stack.extend((1..=k).map(|i| a + i)),
        }
    }
    seen
}
