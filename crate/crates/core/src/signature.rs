//! Type hierarchies and appropriateness.
//!
//! A signature source is a sequence of statements
//!
//! ```text
//! t sub [t1,...,tn] intro [f1:r1,...,fm:rm].
//! ```
//!
//! with either clause omissible, `%` line comments and an optional
//! `order [f1,...,fk].` directive fixing the feature order (lexicographic
//! otherwise). `bot` names the most general type; the most specific type
//! is never written. Validation turns a [`SignatureSource`] into a
//! [`Signature`] holding the subsumption closure, the least-upper-bound
//! table, the appropriateness table and one [`TypeUnifyPlan`] per pair of
//! types.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::lexer::{tokenize, Cursor, LexError, Pos, Tok};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeId(pub u32);

impl TypeId {
    pub const BOT: TypeId = TypeId(0);
    /// The contradictory type. Never labels a node of a valid structure.
    pub const TOP: TypeId = TypeId(u32::MAX);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_top(self) -> bool {
        self == TypeId::TOP
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureId(pub u32);

impl FeatureId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The name used for the most general type in sources.
pub const BOT_NAME: &str = "bot";
/// Reserved; `top` may not be written in sources.
pub const TOP_NAME: &str = "top";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("{pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: type `{name}` is characterized more than once")]
    DuplicateCharacterization { name: String, pos: Pos },
    #[error("{pos}: the contradictory type `top` cannot appear in a signature")]
    TopInSignature { pos: Pos },
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("feature `{feature}` listed twice in the intro list of `{ty}`")]
    DuplicateFeature { ty: String, feature: String },
    #[error("bad feature order: {0}")]
    BadFeatureOrder(String),
    #[error("subsumption cycle through {}", .0.join(" -> "))]
    SubsumptionCycle(Vec<String>),
    #[error("hierarchy is not bounded complete: `{0}` and `{1}` have no least upper bound")]
    NotBoundedComplete(String, String),
    #[error("feature `{0}` has inconsistent introducers")]
    MultipleIntroducers(String),
    #[error("appropriateness of `{feature}` is not monotone from `{general}` to `{specific}`")]
    NonMonotoneApprop {
        feature: String,
        general: String,
        specific: String,
    },
    #[error("inherited values of `{feature}` at `{ty}` are inconsistent")]
    ConflictingApprop { feature: String, ty: String },
    #[error("appropriateness loop through {}", .0.join(" -> "))]
    AppropriatenessLoop(Vec<String>),
    #[error("feature `{feature}` is not appropriate for `{ty}`")]
    FeatureNotAppropriate { feature: String, ty: String },
}

impl From<LexError> for SignatureError {
    fn from(e: LexError) -> Self {
        SignatureError::Syntax {
            pos: e.pos,
            message: e.message,
        }
    }
}

/// One `t sub [...] intro [...]` statement, verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub name: String,
    pub subs: Vec<String>,
    pub intro: Vec<(String, String)>,
    pub pos: Pos,
}

/// A parsed but unvalidated signature.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignatureSource {
    pub statements: Vec<Statement>,
    pub order: Option<Vec<String>>,
}

fn check_not_top(name: &str, pos: Pos) -> Result<(), SignatureError> {
    if name == TOP_NAME {
        Err(SignatureError::TopInSignature { pos })
    } else {
        Ok(())
    }
}

fn parse_name_list(cur: &mut Cursor) -> Result<Vec<(String, Pos)>, SignatureError> {
    cur.expect(&Tok::LBracket)?;
    let mut names = Vec::new();
    if cur.eat(&Tok::RBracket) {
        return Ok(names);
    }
    loop {
        let (name, pos) = cur.expect_ident()?;
        names.push((name, pos));
        if cur.eat(&Tok::RBracket) {
            return Ok(names);
        }
        cur.expect(&Tok::Comma)?;
    }
}

/// Reads signature statements. Duplicate characterizations are rejected
/// here; unknown names are left for [`SignatureSource::validate`].
pub fn parse_signature(text: &str) -> Result<SignatureSource, SignatureError> {
    let mut cur = Cursor::new(tokenize(text)?, text);
    let mut src = SignatureSource::default();
    let mut seen: HashMap<String, Pos> = HashMap::new();

    while !cur.is_done() {
        let (name, pos) = cur.expect_ident()?;
        if name == "order" && cur.peek() == Some(&Tok::LBracket) {
            if src.order.is_some() {
                return Err(SignatureError::Syntax {
                    pos,
                    message: "more than one `order` directive".into(),
                });
            }
            let feats = parse_name_list(&mut cur)?;
            cur.expect(&Tok::Dot)?;
            src.order = Some(feats.into_iter().map(|(n, _)| n).collect());
            continue;
        }
        check_not_top(&name, pos)?;
        if seen.contains_key(&name) {
            return Err(SignatureError::DuplicateCharacterization { name, pos });
        }
        seen.insert(name.clone(), pos);

        let mut stmt = Statement {
            name,
            subs: Vec::new(),
            intro: Vec::new(),
            pos,
        };
        if cur.peek() == Some(&Tok::Ident("sub".into())) {
            cur.next();
            for (sub, p) in parse_name_list(&mut cur)? {
                check_not_top(&sub, p)?;
                stmt.subs.push(sub);
            }
        }
        if cur.peek() == Some(&Tok::Ident("intro".into())) {
            cur.next();
            cur.expect(&Tok::LBracket)?;
            if !cur.eat(&Tok::RBracket) {
                loop {
                    let (feat, _) = cur.expect_ident()?;
                    cur.expect(&Tok::Colon)?;
                    let (value, p) = cur.expect_ident()?;
                    check_not_top(&value, p)?;
                    stmt.intro.push((feat, value));
                    if cur.eat(&Tok::RBracket) {
                        break;
                    }
                    cur.expect(&Tok::Comma)?;
                }
            }
        }
        cur.expect(&Tok::Dot)?;
        src.statements.push(stmt);
    }
    Ok(src)
}

/// Where a feature of a unified type comes from. Positions are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// Only the left (incoming) type has it.
    First(usize),
    /// Only the right (resident) type has it.
    Second(usize),
    /// Both types have it, at the given positions.
    Both(usize, usize),
    /// Neither has it; a fresh skeleton of this type is needed.
    New(TypeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannedFeature {
    pub feature: FeatureId,
    pub origin: Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeftActionKind {
    Copy,
    Unify,
}

/// What happens to one feature of the left type; `target` is its 1-based
/// position in the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeftAction {
    pub feature: FeatureId,
    pub kind: LeftActionKind,
    pub target: usize,
}

/// The compiled unification of two types, in the manner of one
/// `unify_type[t1,t2]` entry: result type plus the origin of each feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeUnifyPlan {
    pub left: TypeId,
    pub right: TypeId,
    /// `TypeId::TOP` when the types are inconsistent.
    pub result: TypeId,
    pub per_feature: Vec<PlannedFeature>,
    pub left_actions: Vec<LeftAction>,
}

impl TypeUnifyPlan {
    pub fn is_fail(&self) -> bool {
        self.result.is_top()
    }

    /// True when the right structure can simply be retyped: the result has
    /// exactly the right type's features and nothing comes from the left
    /// only or needs building.
    pub fn in_place(&self) -> bool {
        !self.is_fail()
            && self
                .per_feature
                .iter()
                .enumerate()
                .all(|(i, pf)| match pf.origin {
                    Origin::Second(p) | Origin::Both(_, p) => p == i + 1,
                    Origin::First(_) | Origin::New(_) => false,
                })
    }
}

/// A validated signature. Immutable; share freely.
#[derive(Debug, Clone)]
pub struct Signature {
    type_names: Vec<String>,
    type_index: HashMap<String, TypeId>,
    feature_names: Vec<String>,
    feature_index: HashMap<String, FeatureId>,
    leq: Vec<bool>,
    lub: Vec<TypeId>,
    features: Vec<Vec<(FeatureId, TypeId)>>,
    plans: Vec<TypeUnifyPlan>,
}

impl fmt::Display for TypeUnifyPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

/// Parses and validates in one step.
pub fn load_signature(text: &str) -> Result<Signature, SignatureError> {
    parse_signature(text)?.validate()
}

impl SignatureSource {
    pub fn validate(&self) -> Result<Signature, SignatureError> {
        // Types: bot first, the rest by name.
        let mut names: BTreeSet<String> = BTreeSet::new();
        for st in &self.statements {
            names.insert(st.name.clone());
            names.extend(st.subs.iter().cloned());
        }
        names.remove(BOT_NAME);
        let mut type_names = vec![BOT_NAME.to_string()];
        type_names.extend(names);
        let n = type_names.len();
        let type_index: HashMap<String, TypeId> = type_names
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), TypeId(i as u32)))
            .collect();

        let lookup = |name: &str| -> Result<TypeId, SignatureError> {
            type_index
                .get(name)
                .copied()
                .ok_or_else(|| SignatureError::UnknownType(name.to_string()))
        };

        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for st in &self.statements {
            let parent = lookup(&st.name)?.index();
            for sub in &st.subs {
                children[parent].push(lookup(sub)?.index());
            }
        }
        if let Some(cycle) = find_cycle(&children) {
            return Err(SignatureError::SubsumptionCycle(
                cycle.into_iter().map(|i| type_names[i].clone()).collect(),
            ));
        }

        // Reflexive-transitive closure; bot is below everything.
        let mut leq = vec![false; n * n];
        for start in 0..n {
            let mut stack = vec![start];
            while let Some(t) = stack.pop() {
                if leq[start * n + t] {
                    continue;
                }
                leq[start * n + t] = true;
                stack.extend(children[t].iter().copied());
            }
        }
        for t in 0..n {
            leq[t] = true;
        }

        let mut lub = vec![TypeId::TOP; n * n];
        for i in 0..n {
            for j in i..n {
                let ubs: Vec<usize> = (0..n).filter(|&k| leq[i * n + k] && leq[j * n + k]).collect();
                if ubs.is_empty() {
                    continue;
                }
                let least: Vec<usize> = ubs
                    .iter()
                    .copied()
                    .filter(|&m| ubs.iter().all(|&k| leq[m * n + k]))
                    .collect();
                if least.len() != 1 {
                    return Err(SignatureError::NotBoundedComplete(
                        type_names[i].clone(),
                        type_names[j].clone(),
                    ));
                }
                lub[i * n + j] = TypeId(least[0] as u32);
                lub[j * n + i] = TypeId(least[0] as u32);
            }
        }
        let lub_of = |a: TypeId, b: TypeId| -> TypeId {
            if a.is_top() || b.is_top() {
                TypeId::TOP
            } else {
                lub[a.index() * n + b.index()]
            }
        };
        let below = |a: usize, b: usize| leq[a * n + b];

        // Features and their order.
        let mut declared: BTreeSet<String> = BTreeSet::new();
        for st in &self.statements {
            let mut local = BTreeSet::new();
            for (f, _) in &st.intro {
                if !local.insert(f.clone()) {
                    return Err(SignatureError::DuplicateFeature {
                        ty: st.name.clone(),
                        feature: f.clone(),
                    });
                }
                declared.insert(f.clone());
            }
        }
        let feature_names: Vec<String> = match &self.order {
            None => declared.iter().cloned().collect(),
            Some(order) => {
                let listed: BTreeSet<String> = order.iter().cloned().collect();
                if listed.len() != order.len() {
                    return Err(SignatureError::BadFeatureOrder(
                        "a feature is listed twice".into(),
                    ));
                }
                if let Some(missing) = declared.difference(&listed).next() {
                    return Err(SignatureError::BadFeatureOrder(format!(
                        "feature `{missing}` is missing from the order directive"
                    )));
                }
                if let Some(extra) = listed.difference(&declared).next() {
                    return Err(SignatureError::BadFeatureOrder(format!(
                        "feature `{extra}` is never introduced"
                    )));
                }
                order.clone()
            }
        };
        let feature_index: HashMap<String, FeatureId> = feature_names
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), FeatureId(i as u32)))
            .collect();

        // Declarations per feature: (declaring type, value type).
        let mut decls: Vec<Vec<(usize, TypeId)>> = vec![Vec::new(); feature_names.len()];
        for st in &self.statements {
            let t = lookup(&st.name)?.index();
            for (f, v) in &st.intro {
                decls[feature_index[f].index()].push((t, lookup(v)?));
            }
        }

        let mut approp: Vec<Vec<Option<TypeId>>> = vec![vec![None; n]; feature_names.len()];
        for (fi, ds) in decls.iter().enumerate() {
            let fname = &feature_names[fi];
            for &(d1, v1) in ds {
                for &(d2, v2) in ds {
                    if d1 != d2 && below(d1, d2) && !below(v1.index(), v2.index()) {
                        return Err(SignatureError::NonMonotoneApprop {
                            feature: fname.clone(),
                            general: type_names[d1].clone(),
                            specific: type_names[d2].clone(),
                        });
                    }
                }
            }
            let minimal: Vec<usize> = ds
                .iter()
                .map(|&(d, _)| d)
                .filter(|&d| !ds.iter().any(|&(e, _)| e != d && below(e, d)))
                .collect();
            for (k, &a) in minimal.iter().enumerate() {
                for &b in &minimal[k + 1..] {
                    if lub_of(TypeId(a as u32), TypeId(b as u32)).is_top() {
                        return Err(SignatureError::MultipleIntroducers(fname.clone()));
                    }
                }
            }
            for t in 0..n {
                let mut value: Option<TypeId> = None;
                for &(d, v) in ds {
                    if below(d, t) {
                        value = Some(match value {
                            None => v,
                            Some(acc) => lub_of(acc, v),
                        });
                    }
                }
                if value == Some(TypeId::TOP) {
                    return Err(SignatureError::ConflictingApprop {
                        feature: fname.clone(),
                        ty: type_names[t].clone(),
                    });
                }
                approp[fi][t] = value;
            }
            for t1 in 0..n {
                for t2 in 0..n {
                    if !below(t1, t2) {
                        continue;
                    }
                    if let Some(v1) = approp[fi][t1] {
                        let ok = matches!(approp[fi][t2], Some(v2) if below(v1.index(), v2.index()));
                        if !ok {
                            return Err(SignatureError::NonMonotoneApprop {
                                feature: fname.clone(),
                                general: type_names[t1].clone(),
                                specific: type_names[t2].clone(),
                            });
                        }
                    }
                }
            }
        }

        // Appropriateness loops: edges t -> Approp(f, t).
        let mut value_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
        for col in &approp {
            for t in 0..n {
                if let Some(v) = col[t] {
                    value_edges[t].push(v.index());
                }
            }
        }
        if let Some(cycle) = find_cycle(&value_edges) {
            return Err(SignatureError::AppropriatenessLoop(
                cycle.into_iter().map(|i| type_names[i].clone()).collect(),
            ));
        }

        let features: Vec<Vec<(FeatureId, TypeId)>> = (0..n)
            .map(|t| {
                (0..feature_names.len())
                    .filter_map(|fi| approp[fi][t].map(|v| (FeatureId(fi as u32), v)))
                    .collect()
            })
            .collect();

        let mut sig = Signature {
            type_names,
            type_index,
            feature_names,
            feature_index,
            leq,
            lub,
            features,
            plans: Vec::new(),
        };
        let mut plans = Vec::with_capacity(n * n);
        for l in 0..n {
            for r in 0..n {
                plans.push(sig.build_plan(TypeId(l as u32), TypeId(r as u32)));
            }
        }
        sig.plans = plans;
        Ok(sig)
    }
}

/// Returns the nodes of some directed cycle, if any.
fn find_cycle(edges: &[Vec<usize>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let n = edges.len();
    let mut mark = vec![Mark::New; n];
    for start in 0..n {
        if mark[start] != Mark::New {
            continue;
        }
        // (node, next edge index)
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        mark[start] = Mark::Active;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if let Some(&succ) = edges[node].get(*next) {
                *next += 1;
                match mark[succ] {
                    Mark::New => {
                        mark[succ] = Mark::Active;
                        stack.push((succ, 0));
                    }
                    Mark::Active => {
                        let from = stack.iter().position(|&(v, _)| v == succ).unwrap();
                        return Some(stack[from..].iter().map(|&(v, _)| v).collect());
                    }
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}

impl Signature {
    fn build_plan(&self, left: TypeId, right: TypeId) -> TypeUnifyPlan {
        let result = self.lub(left, right);
        let mut plan = TypeUnifyPlan {
            left,
            right,
            result,
            per_feature: Vec::new(),
            left_actions: Vec::new(),
        };
        if result.is_top() {
            return plan;
        }
        let lf = self.features(left);
        let rf = self.features(right);
        let pos_in = |list: &[(FeatureId, TypeId)], f: FeatureId| {
            list.iter().position(|&(g, _)| g == f).map(|p| p + 1)
        };
        for (i, &(f, v)) in self.features(result).iter().enumerate() {
            let origin = match (pos_in(lf, f), pos_in(rf, f)) {
                (Some(p), None) => Origin::First(p),
                (None, Some(p)) => Origin::Second(p),
                (Some(p1), Some(p2)) => Origin::Both(p1, p2),
                (None, None) => Origin::New(v),
            };
            plan.per_feature.push(PlannedFeature { feature: f, origin });
            let kind = match origin {
                Origin::First(_) => Some(LeftActionKind::Copy),
                Origin::Both(..) => Some(LeftActionKind::Unify),
                _ => None,
            };
            if let Some(kind) = kind {
                plan.left_actions.push(LeftAction {
                    feature: f,
                    kind,
                    target: i + 1,
                });
            }
        }
        plan
    }

    pub fn type_count(&self) -> usize {
        self.type_names.len()
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    /// All types except `TOP`, bot first.
    pub fn types(&self) -> impl Iterator<Item = TypeId> + '_ {
        (0..self.type_names.len()).map(|i| TypeId(i as u32))
    }

    pub fn type_name(&self, t: TypeId) -> &str {
        if t.is_top() {
            TOP_NAME
        } else {
            &self.type_names[t.index()]
        }
    }

    pub fn type_by_name(&self, name: &str) -> Option<TypeId> {
        if name == TOP_NAME {
            return Some(TypeId::TOP);
        }
        self.type_index.get(name).copied()
    }

    pub fn feature_name(&self, f: FeatureId) -> &str {
        &self.feature_names[f.index()]
    }

    pub fn feature_by_name(&self, name: &str) -> Option<FeatureId> {
        self.feature_index.get(name).copied()
    }

    /// `t1 ⊑ t2`: t1 is at least as general as t2.
    pub fn subsumes(&self, t1: TypeId, t2: TypeId) -> bool {
        if t2.is_top() {
            return true;
        }
        if t1.is_top() {
            return false;
        }
        self.leq[t1.index() * self.type_count() + t2.index()]
    }

    /// Least upper bound; `TypeId::TOP` signals inconsistency.
    pub fn lub(&self, t1: TypeId, t2: TypeId) -> TypeId {
        if t1.is_top() || t2.is_top() {
            return TypeId::TOP;
        }
        self.lub[t1.index() * self.type_count() + t2.index()]
    }

    /// Appropriate features of `t` in feature order with their value
    /// types. Empty for `TOP`.
    pub fn features(&self, t: TypeId) -> &[(FeatureId, TypeId)] {
        if t.is_top() {
            return &[];
        }
        &self.features[t.index()]
    }

    pub fn arity(&self, t: TypeId) -> usize {
        self.features(t).len()
    }

    pub fn approp(&self, f: FeatureId, t: TypeId) -> Option<TypeId> {
        self.features(t)
            .iter()
            .find(|&&(g, _)| g == f)
            .map(|&(_, v)| v)
    }

    /// 1-based position of `f` among the features of `t`.
    pub fn feature_pos(&self, t: TypeId, f: FeatureId) -> Result<usize, SignatureError> {
        self.features(t)
            .iter()
            .position(|&(g, _)| g == f)
            .map(|p| p + 1)
            .ok_or_else(|| SignatureError::FeatureNotAppropriate {
                feature: self.feature_name(f).to_string(),
                ty: self.type_name(t).to_string(),
            })
    }

    pub fn unify_plan(&self, left: TypeId, right: TypeId) -> &TypeUnifyPlan {
        assert!(!left.is_top() && !right.is_top(), "no plan involves TOP");
        &self.plans[left.index() * self.type_count() + right.index()]
    }

    /// `c(f1,f2,f3,f4)` style label used by the LUB table.
    pub fn type_label(&self, t: TypeId) -> String {
        let feats = self.features(t);
        if feats.is_empty() {
            self.type_name(t).to_string()
        } else {
            let names: Vec<&str> = feats.iter().map(|&(f, _)| self.feature_name(f)).collect();
            format!("{}({})", self.type_name(t), names.join(","))
        }
    }

    /// Upper triangle of the LUB table, row by row.
    pub fn lub_table(&self) -> Vec<Vec<TypeId>> {
        self.types()
            .map(|a| self.types().skip(a.index()).map(|b| self.lub(a, b)).collect())
            .collect()
    }

    /// Renders the upper triangle in the tab-separated layout of the
    /// classic type-unification table.
    pub fn render_lub_table(&self) -> String {
        let mut out = String::from("unify_type(X, Y)");
        for t in self.types() {
            out.push('\t');
            out.push_str(&self.type_label(t));
        }
        out.push('\n');
        for a in self.types() {
            out.push_str(&self.type_label(a));
            for b in self.types() {
                out.push('\t');
                if b >= a {
                    out.push_str(&self.type_label(self.lub(a, b)));
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub const H: &str = "\
bot sub [a,b,d].
  a sub [c] intro [f1:bot,f3:d1].
    c sub [] intro [f4:bot].
  b sub [c,e] intro [f2:bot,f3:d].
  d sub [d1,d2].
    d1 sub [].
    d2 sub [].
";

    fn t(sig: &Signature, name: &str) -> TypeId {
        sig.type_by_name(name).unwrap()
    }

    fn f(sig: &Signature, name: &str) -> FeatureId {
        sig.feature_by_name(name).unwrap()
    }

    #[test]
    fn parses_running_hierarchy() {
        let sig = load_signature(H).unwrap();
        let names: Vec<_> = sig.types().map(|t| sig.type_name(t).to_string()).collect();
        assert_eq!(names, ["bot", "a", "b", "c", "d", "d1", "d2", "e"]);
        assert_eq!(sig.feature_count(), 4);
    }

    #[test]
    fn empty_hierarchy() {
        let sig = load_signature("bot sub [].").unwrap();
        assert_eq!(sig.type_count(), 1);
        assert_eq!(sig.feature_count(), 0);
    }

    #[test]
    fn duplicate_characterization() {
        let err = parse_signature("t sub []. t sub [].").unwrap_err();
        assert!(matches!(err, SignatureError::DuplicateCharacterization { ref name, .. } if name == "t"));
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_signature("bot sub [a,b].\na sub [c intro").unwrap_err();
        match err {
            SignatureError::Syntax { pos, .. } => assert_eq!((pos.line, pos.col), (2, 10)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_intro_value_is_a_validation_error() {
        let src = parse_signature("bot sub [a]. a intro [f:zz].").unwrap();
        assert_eq!(
            src.validate().unwrap_err(),
            SignatureError::UnknownType("zz".into())
        );
    }

    #[test]
    fn top_is_reserved() {
        assert!(matches!(
            parse_signature("bot sub [a]. a intro [f:top].").unwrap_err(),
            SignatureError::TopInSignature { .. }
        ));
    }

    #[test]
    fn lub_examples() {
        let sig = load_signature(H).unwrap();
        assert_eq!(sig.lub(t(&sig, "a"), t(&sig, "b")), t(&sig, "c"));
        assert_eq!(sig.lub(t(&sig, "d"), t(&sig, "d1")), t(&sig, "d1"));
        assert_eq!(sig.lub(t(&sig, "d1"), t(&sig, "d2")), TypeId::TOP);
        assert_eq!(sig.lub(TypeId::BOT, t(&sig, "e")), t(&sig, "e"));
    }

    #[test]
    fn not_bounded_complete() {
        let err = load_signature(
            "bot sub [t1,t2]. t1 sub [u1,u2]. t2 sub [u1,u2]. u1 sub []. u2 sub [].",
        )
        .unwrap_err();
        assert_eq!(err, SignatureError::NotBoundedComplete("t1".into(), "t2".into()));
    }

    #[test]
    fn appropriateness_loop() {
        let err = load_signature("bot sub [t]. t intro [f:t].").unwrap_err();
        assert_eq!(err, SignatureError::AppropriatenessLoop(vec!["t".into()]));
    }

    #[test]
    fn subsumption_cycle() {
        let err = load_signature("bot sub [a]. a sub [b]. b sub [a].").unwrap_err();
        assert!(matches!(err, SignatureError::SubsumptionCycle(_)));
    }

    #[test]
    fn inconsistent_introducers() {
        let err = load_signature("bot sub [s,t]. s intro [f:bot]. t intro [f:bot].").unwrap_err();
        assert_eq!(err, SignatureError::MultipleIntroducers("f".into()));
    }

    #[test]
    fn non_monotone_restriction() {
        let err =
            load_signature("bot sub [s,v]. v sub [w]. s sub [t] intro [f:w]. t intro [f:v].")
                .unwrap_err();
        assert!(matches!(err, SignatureError::NonMonotoneApprop { .. }));
    }

    #[test]
    fn conflicting_inherited_values() {
        let err = load_signature(
            "bot sub [a,b,v]. v sub [v1,v2]. a sub [c] intro [f:v1]. b sub [c] intro [f:v2].",
        )
        .unwrap_err();
        assert_eq!(
            err,
            SignatureError::ConflictingApprop {
                feature: "f".into(),
                ty: "c".into()
            }
        );
    }

    #[test]
    fn features_of_examples() {
        let sig = load_signature(H).unwrap();
        let c = sig.features(t(&sig, "c"));
        let expect = [
            (f(&sig, "f1"), TypeId::BOT),
            (f(&sig, "f2"), TypeId::BOT),
            (f(&sig, "f3"), t(&sig, "d1")),
            (f(&sig, "f4"), TypeId::BOT),
        ];
        assert_eq!(c, &expect);
        assert!(sig.features(t(&sig, "d1")).is_empty());
        assert!(sig.features(TypeId::BOT).is_empty());
    }

    #[test]
    fn inherited_value_matches_brute_force_closure() {
        // The value at a type is the join of every declaration made at or
        // above it; enumerate declarations directly from the source.
        let src = parse_signature(H).unwrap();
        let sig = src.validate().unwrap();
        for ty in sig.types() {
            for fid in 0..sig.feature_count() {
                let fid = FeatureId(fid as u32);
                let mut expect: Option<TypeId> = None;
                for st in &src.statements {
                    let d = sig.type_by_name(&st.name).unwrap();
                    for (fname, v) in &st.intro {
                        if fname == sig.feature_name(fid) && sig.subsumes(d, ty) {
                            let v = sig.type_by_name(v).unwrap();
                            expect = Some(expect.map_or(v, |e| sig.lub(e, v)));
                        }
                    }
                }
                assert_eq!(sig.approp(fid, ty), expect, "{} at {}", sig.feature_name(fid), sig.type_name(ty));
            }
        }
    }

    #[test]
    fn feature_positions() {
        let sig = load_signature(H).unwrap();
        assert_eq!(sig.feature_pos(t(&sig, "c"), f(&sig, "f3")).unwrap(), 3);
        assert_eq!(sig.feature_pos(t(&sig, "a"), f(&sig, "f3")).unwrap(), 2);
        assert!(matches!(
            sig.feature_pos(t(&sig, "d"), f(&sig, "f1")),
            Err(SignatureError::FeatureNotAppropriate { .. })
        ));
    }

    #[test]
    fn explicit_feature_order() {
        let sig = load_signature("order [g,f]. bot sub [a]. a intro [f:bot,g:bot].").unwrap();
        let a = sig.type_by_name("a").unwrap();
        assert_eq!(sig.type_label(a), "a(g,f)");
        assert!(matches!(
            load_signature("order [g]. bot sub [a]. a intro [f:bot,g:bot]."),
            Err(SignatureError::BadFeatureOrder(_))
        ));
    }

    #[test]
    fn plan_a_b() {
        let sig = load_signature(H).unwrap();
        let plan = sig.unify_plan(t(&sig, "a"), t(&sig, "b"));
        assert_eq!(plan.result, t(&sig, "c"));
        let origins: Vec<_> = plan.per_feature.iter().map(|p| p.origin).collect();
        assert_eq!(
            origins,
            [Origin::First(1), Origin::Second(1), Origin::Both(2, 2), Origin::New(TypeId::BOT)]
        );
        let actions: Vec<_> = plan.left_actions.iter().map(|a| (a.kind, a.target)).collect();
        assert_eq!(actions, [(LeftActionKind::Copy, 1), (LeftActionKind::Unify, 3)]);
        assert!(!plan.in_place());
    }

    #[test]
    fn plan_d1_d_and_failure() {
        let sig = load_signature(H).unwrap();
        let plan = sig.unify_plan(t(&sig, "d1"), t(&sig, "d"));
        assert_eq!(plan.result, t(&sig, "d1"));
        assert!(plan.per_feature.is_empty() && plan.left_actions.is_empty());
        assert!(plan.in_place());
        assert!(sig.unify_plan(t(&sig, "a"), t(&sig, "d")).is_fail());
    }

    #[test]
    fn plans_mirror() {
        let sig = load_signature(H).unwrap();
        for l in sig.types() {
            for r in sig.types() {
                let p = sig.unify_plan(l, r);
                let q = sig.unify_plan(r, l);
                assert_eq!(p.result, q.result);
                for (x, y) in p.per_feature.iter().zip(&q.per_feature) {
                    let mirrored = match x.origin {
                        Origin::First(p) => Origin::Second(p),
                        Origin::Second(p) => Origin::First(p),
                        Origin::Both(a, b) => Origin::Both(b, a),
                        o => o,
                    };
                    assert_eq!(mirrored, y.origin);
                }
                if l == r && !p.is_fail() {
                    assert!(p.per_feature.iter().all(|pf| matches!(pf.origin, Origin::Both(..))));
                }
            }
        }
    }

    #[test]
    fn lub_table_rendering() {
        let sig = load_signature(H).unwrap();
        let table = sig.render_lub_table();
        let row_a: Vec<&str> = table.lines().nth(2).unwrap().split('\t').collect();
        assert_eq!(row_a[0], "a(f1,f3)");
        assert_eq!(row_a[3], "c(f1,f2,f3,f4)");
        assert_eq!(row_a[5], "top");
    }
}
