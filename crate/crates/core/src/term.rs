//! Linear terms: normal terms with tags, disjunctions, multi-rooted
//! structures and rules.
//!
//! ```text
//! a([3]d1,[3])
//! a({b(bot,d) | a(bot,d1)},d1)
//! b(b([2]d,[2]),[4]d1), a([4],[4]) => b(b([2],[4]),d2)
//! ```
//!
//! Tags that occur once in their scope carry no information and are
//! dropped by the reader; a lone bare tag reads as `bot`.

use std::collections::HashMap;

use thiserror::Error;

use crate::lexer::{tokenize, Cursor, LexError, Pos, Tok};
use crate::signature::{Signature, TypeId, TOP_NAME};

pub type Tag = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Typed {
        tag: Option<Tag>,
        ty: TypeId,
        args: Vec<Term>,
    },
    /// An independent occurrence, or a first occurrence typed ⊥.
    Tag(Tag),
    Disjunction(Vec<Term>),
}

/// A multi-rooted structure: items share one tag scope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mrs {
    pub items: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub body: Vec<Term>,
    pub head: Term,
}

impl Rule {
    /// Body followed by head, the rule as one MRS.
    pub fn as_mrs(&self) -> Mrs {
        let mut items = self.body.clone();
        items.push(self.head.clone());
        Mrs { items }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("{pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: unknown type `{name}`")]
    UnknownType { name: String, pos: Pos },
    #[error("{pos}: `top` cannot appear in a term")]
    TopInTerm { pos: Pos },
    #[error("{pos}: `{ty}` takes {expected} arguments, found {found}")]
    Arity {
        ty: String,
        expected: usize,
        found: usize,
        pos: Pos,
    },
    #[error("{pos}: value `{value}` of feature `{feature}` of `{ty}` is not subsumed by `{required}`")]
    IllTyped {
        ty: String,
        feature: String,
        required: String,
        value: String,
        pos: Pos,
    },
    #[error("{pos}: tag [{tag}] is dependent but not at its first occurrence")]
    DependentReoccurrence { tag: Tag, pos: Pos },
    #[error("{pos}: tags are not allowed inside disjunctions")]
    TagInDisjunct { pos: Pos },
    #[error("{pos}: a disjunction cannot carry a tag")]
    TaggedDisjunction { pos: Pos },
    #[error("{pos}: a disjunction cannot directly contain a disjunction")]
    NestedDisjunction { pos: Pos },
    #[error("{pos}: a rule needs a non-empty body")]
    EmptyBody { pos: Pos },
    #[error("{pos}: expected a single term")]
    NotATerm { pos: Pos },
}

impl From<LexError> for TermError {
    fn from(e: LexError) -> Self {
        TermError::Syntax {
            pos: e.pos,
            message: e.message,
        }
    }
}

impl Term {
    pub fn bot() -> Term {
        Term::atom(TypeId::BOT)
    }

    pub fn atom(ty: TypeId) -> Term {
        Term::Typed {
            tag: None,
            ty,
            args: Vec::new(),
        }
    }

    pub fn is_disjunctive(&self) -> bool {
        match self {
            Term::Typed { args, .. } => args.iter().any(Term::is_disjunctive),
            Term::Tag(_) => false,
            Term::Disjunction(_) => true,
        }
    }

    pub fn has_tags(&self) -> bool {
        match self {
            Term::Typed { tag, args, .. } => tag.is_some() || args.iter().any(Term::has_tags),
            Term::Tag(_) => true,
            Term::Disjunction(ds) => ds.iter().any(Term::has_tags),
        }
    }

    fn count_tags(&self, counts: &mut HashMap<Tag, usize>) {
        match self {
            Term::Typed { tag, args, .. } => {
                if let Some(t) = tag {
                    *counts.entry(*t).or_default() += 1;
                }
                for a in args {
                    a.count_tags(counts);
                }
            }
            Term::Tag(t) => *counts.entry(*t).or_default() += 1,
            Term::Disjunction(ds) => {
                for d in ds {
                    d.count_tags(counts);
                }
            }
        }
    }

    fn drop_singletons(&mut self, counts: &HashMap<Tag, usize>) {
        match self {
            Term::Typed { tag, args, .. } => {
                if matches!(tag, Some(t) if counts[t] < 2) {
                    *tag = None;
                }
                for a in args {
                    a.drop_singletons(counts);
                }
            }
            Term::Tag(t) => {
                if counts[t] < 2 {
                    *self = Term::bot();
                }
            }
            Term::Disjunction(ds) => {
                for d in ds {
                    d.drop_singletons(counts);
                }
            }
        }
    }

    /// Applies `f` to every tag occurrence.
    pub fn map_tags(&mut self, f: &mut impl FnMut(Tag) -> Tag) {
        match self {
            Term::Typed { tag, args, .. } => {
                if let Some(t) = tag {
                    *t = f(*t);
                }
                for a in args {
                    a.map_tags(f);
                }
            }
            Term::Tag(t) => *t = f(*t),
            Term::Disjunction(ds) => {
                for d in ds {
                    d.map_tags(f);
                }
            }
        }
    }

    /// Number of typed nodes and bare tags, disjunctions counted by
    /// their disjuncts.
    pub fn size(&self) -> usize {
        match self {
            Term::Typed { args, .. } => 1 + args.iter().map(Term::size).sum::<usize>(),
            Term::Tag(_) => 1,
            Term::Disjunction(ds) => ds.iter().map(Term::size).sum(),
        }
    }
}

fn tag_counts<'a>(items: impl IntoIterator<Item = &'a Term>) -> HashMap<Tag, usize> {
    let mut counts = HashMap::new();
    for t in items {
        t.count_tags(&mut counts);
    }
    counts
}

/// Removes tags occurring once in the scope formed by `items`.
pub fn drop_singleton_tags(items: &mut [Term]) {
    let counts = tag_counts(items.iter());
    for t in items {
        t.drop_singletons(&counts);
    }
}

struct Reader<'a> {
    cur: Cursor,
    sig: &'a Signature,
    /// Type of the node each tag stands for.
    tags: HashMap<Tag, TypeId>,
}

impl<'a> Reader<'a> {
    fn new(text: &str, sig: &'a Signature) -> Result<Self, TermError> {
        Ok(Reader {
            cur: Cursor::new(tokenize(text)?, text),
            sig,
            tags: HashMap::new(),
        })
    }

    fn syntax(&self, message: impl Into<String>) -> TermError {
        TermError::Syntax {
            pos: self.cur.pos(),
            message: message.into(),
        }
    }

    fn tag_prefix(&mut self) -> Result<Option<(Tag, Pos)>, TermError> {
        if self.cur.peek() != Some(&Tok::LBracket) {
            return Ok(None);
        }
        let pos = self.cur.pos();
        self.cur.next();
        let n = match self.cur.next() {
            Some((Tok::Number(n), _)) => n,
            _ => return Err(TermError::Syntax { pos, message: "expected a tag number".into() }),
        };
        self.cur.expect(&Tok::RBracket)?;
        Ok(Some((n, pos)))
    }

    /// Reads one term; returns it with its node type (⊥ for a
    /// disjunction, which is checked disjunct by disjunct).
    fn term(&mut self, in_disj: bool) -> Result<(Term, Vec<TypeId>), TermError> {
        let pos = self.cur.pos();
        let tag = self.tag_prefix()?;
        if let Some((_, tpos)) = tag {
            if in_disj {
                return Err(TermError::TagInDisjunct { pos: tpos });
            }
        }
        match self.cur.peek() {
            Some(Tok::LBrace) => {
                if let Some((_, tpos)) = tag {
                    return Err(TermError::TaggedDisjunction { pos: tpos });
                }
                self.cur.next();
                let mut disjuncts = Vec::new();
                let mut types = Vec::new();
                loop {
                    if self.cur.peek() == Some(&Tok::LBrace) {
                        return Err(TermError::NestedDisjunction { pos: self.cur.pos() });
                    }
                    let (d, ts) = self.term(true)?;
                    disjuncts.push(d);
                    types.extend(ts);
                    if self.cur.eat(&Tok::RBrace) {
                        break;
                    }
                    if !self.cur.eat(&Tok::Bar) {
                        return Err(self.syntax("expected `|` or `}`"));
                    }
                }
                Ok((Term::Disjunction(disjuncts), types))
            }
            Some(Tok::Ident(_)) => {
                let (name, npos) = self.cur.expect_ident()?;
                if name == TOP_NAME {
                    return Err(TermError::TopInTerm { pos: npos });
                }
                let ty = self
                    .sig
                    .type_by_name(&name)
                    .ok_or(TermError::UnknownType { name: name.clone(), pos: npos })?;
                if let Some((t, tpos)) = tag {
                    if self.tags.contains_key(&t) {
                        return Err(TermError::DependentReoccurrence { tag: t, pos: tpos });
                    }
                    self.tags.insert(t, ty);
                }
                let feats = self.sig.features(ty).to_vec();
                let mut args = Vec::new();
                if self.cur.eat(&Tok::LParen) && !self.cur.eat(&Tok::RParen) {
                    loop {
                        let apos = self.cur.pos();
                        let (arg, arg_types) = self.term(in_disj)?;
                        if let Some(&(f, required)) = feats.get(args.len()) {
                            for vt in arg_types {
                                if vt != TypeId::BOT && !self.sig.subsumes(required, vt) {
                                    return Err(TermError::IllTyped {
                                        ty: name.clone(),
                                        feature: self.sig.feature_name(f).into(),
                                        required: self.sig.type_name(required).into(),
                                        value: self.sig.type_name(vt).into(),
                                        pos: apos,
                                    });
                                }
                            }
                        }
                        args.push(arg);
                        if self.cur.eat(&Tok::RParen) {
                            break;
                        }
                        if !self.cur.eat(&Tok::Comma) {
                            return Err(self.syntax("expected `,` or `)`"));
                        }
                    }
                }
                if args.len() != feats.len() {
                    return Err(TermError::Arity {
                        ty: name,
                        expected: feats.len(),
                        found: args.len(),
                        pos: npos,
                    });
                }
                Ok((Term::Typed { tag: tag.map(|(t, _)| t), ty, args }, vec![ty]))
            }
            _ => match tag {
                Some((t, _)) => {
                    let ty = *self.tags.entry(t).or_insert(TypeId::BOT);
                    Ok((Term::Tag(t), vec![ty]))
                }
                None => Err(TermError::Syntax {
                    pos,
                    message: "expected a term".into(),
                }),
            },
        }
    }

    fn item(&mut self) -> Result<Term, TermError> {
        Ok(self.term(false)?.0)
    }

    /// Comma separated items up to `=>`, `.` or the end.
    fn items(&mut self) -> Result<Vec<Term>, TermError> {
        let mut items = vec![self.item()?];
        while self.cur.eat(&Tok::Comma) {
            items.push(self.item()?);
        }
        Ok(items)
    }

    fn finish(&mut self) -> Result<(), TermError> {
        self.cur.eat(&Tok::Dot);
        if self.cur.is_done() {
            Ok(())
        } else {
            Err(self.syntax(format!("unexpected {}", self.cur.peek().unwrap())))
        }
    }
}

pub fn parse_term(text: &str, sig: &Signature) -> Result<Term, TermError> {
    let mrs = parse_mrs(text, sig)?;
    if mrs.items.len() != 1 {
        return Err(TermError::NotATerm { pos: Pos { line: 1, col: 1 } });
    }
    Ok(mrs.items.into_iter().next().unwrap())
}

pub fn parse_mrs(text: &str, sig: &Signature) -> Result<Mrs, TermError> {
    let mut r = Reader::new(text, sig)?;
    let mut items = r.items()?;
    r.finish()?;
    drop_singleton_tags(&mut items);
    Ok(Mrs { items })
}

pub fn parse_rule(text: &str, sig: &Signature) -> Result<Rule, TermError> {
    let mut r = Reader::new(text, sig)?;
    if r.cur.peek() == Some(&Tok::Arrow) {
        return Err(TermError::EmptyBody { pos: r.cur.pos() });
    }
    let mut items = r.items()?;
    if !r.cur.eat(&Tok::Arrow) {
        return Err(r.syntax("expected `=>`"));
    }
    items.push(r.item()?);
    r.finish()?;
    drop_singleton_tags(&mut items);
    let head = items.pop().unwrap();
    Ok(Rule { body: items, head })
}

fn write_term(sig: &Signature, t: &Term, counts: &HashMap<Tag, usize>, out: &mut String) {
    match t {
        Term::Typed { tag, ty, args } => {
            if let Some(tag) = tag {
                if counts.get(tag).copied().unwrap_or(0) > 1 {
                    out.push_str(&format!("[{tag}]"));
                }
            }
            out.push_str(sig.type_name(*ty));
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write_term(sig, a, counts, out);
                }
                out.push(')');
            }
        }
        Term::Tag(tag) => {
            if counts.get(tag).copied().unwrap_or(0) > 1 {
                out.push_str(&format!("[{tag}]"));
            } else {
                out.push_str(sig.type_name(TypeId::BOT));
            }
        }
        Term::Disjunction(ds) => {
            out.push('{');
            for (i, d) in ds.iter().enumerate() {
                if i > 0 {
                    out.push_str(" | ");
                }
                write_term(sig, d, counts, out);
            }
            out.push('}');
        }
    }
}

fn print_items(sig: &Signature, items: &[Term], counts: &HashMap<Tag, usize>) -> Vec<String> {
    items
        .iter()
        .map(|t| {
            let mut s = String::new();
            write_term(sig, t, counts, &mut s);
            s
        })
        .collect()
}

pub fn print_term(sig: &Signature, t: &Term) -> String {
    print_items(sig, std::slice::from_ref(t), &tag_counts([t])).remove(0)
}

pub fn print_mrs(sig: &Signature, m: &Mrs) -> String {
    print_items(sig, &m.items, &tag_counts(&m.items)).join(", ")
}

pub fn print_rule(sig: &Signature, r: &Rule) -> String {
    let counts = tag_counts(r.body.iter().chain([&r.head]));
    let body = print_items(sig, &r.body, &counts).join(", ");
    let head = print_items(sig, std::slice::from_ref(&r.head), &counts).remove(0);
    format!("{body} => {head}")
}

/// Disjunctive normal form: the list of disjunction-free terms a term
/// stands for, in left-to-right order.
pub fn expand_disjunctions(t: &Term) -> Vec<Term> {
    match t {
        Term::Tag(_) => vec![t.clone()],
        Term::Disjunction(ds) => ds.iter().flat_map(expand_disjunctions).collect(),
        Term::Typed { tag, ty, args } => {
            let mut acc: Vec<Vec<Term>> = vec![Vec::new()];
            for a in args {
                let alts = expand_disjunctions(a);
                acc = acc
                    .into_iter()
                    .flat_map(|prefix| {
                        alts.iter().map(move |alt| {
                            let mut p = prefix.clone();
                            p.push(alt.clone());
                            p
                        })
                    })
                    .collect();
            }
            acc.into_iter()
                .map(|args| Term::Typed { tag: *tag, ty: *ty, args })
                .collect()
        }
    }
}
