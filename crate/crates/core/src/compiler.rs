//! Flattening of terms into register equations and code generation for
//! queries, programs and rules.
//!
//! A query section is one listing in which `put_arc` lines form the arc
//! stream and every other line the node stream; the machine runs the node
//! stream to completion before the arc stream. Program sections run in
//! order, with jumps.

use std::collections::HashMap;
use std::fmt;

use crate::signature::{Signature, TypeId};
use crate::term::{Rule, Tag, Term};

/// 1-based register index.
pub type Reg = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    /// `lk`, on a `get_structure`.
    Get(u32),
    /// `lk'`, on the matching `loop_end`.
    End(u32),
    /// `ldk`, on `next_disj` and `end_disj`.
    Disj(u32),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Get(k) => write!(f, "l{k}"),
            Label::End(k) => write!(f, "l{k}'"),
            Label::Disj(k) => write!(f, "ld{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instruction {
    PutNode { ty: TypeId, arity: usize, reg: Reg },
    PutArc { reg: Reg, offset: usize, value: Reg },
    PutDisj { reg: Reg, count: usize },
    AdvanceQ(Reg),
    GetStructure { ty: TypeId, arity: usize, reg: Reg },
    UnifyVariable(Reg),
    UnifyValue(Reg),
    /// `reunify` marks an item that is a tag seen before: the resident
    /// root is unified with the register instead of loaded into it.
    AdvanceP { reg: Reg, reunify: bool },
    /// Start label `lk`; the end label is `lk'`.
    LoopStart { reg: Reg, label: u32 },
    LoopEnd(u32),
    BeginDisj { reg: Reg, count: usize, label: u32 },
    NextDisj { reg: Reg, label: u32 },
    EndDisj,
    ResetCurrRoot,
}

impl Instruction {
    pub fn render(&self, sig: &Signature) -> String {
        use Instruction::*;
        match *self {
            PutNode { ty, arity, reg } => format!("put_node {}/{arity}, X{reg}", sig.type_name(ty)),
            PutArc { reg, offset, value } => format!("put_arc X{reg}, {offset}, X{value}"),
            PutDisj { reg, count } => format!("put_disj X{reg}, {count}"),
            AdvanceQ(r) => format!("advance_q X{r}"),
            GetStructure { ty, arity, reg } => {
                format!("get_structure {}/{arity}, X{reg}", sig.type_name(ty))
            }
            UnifyVariable(r) => format!("unify_variable X{r}"),
            UnifyValue(r) => format!("unify_value X{r}"),
            AdvanceP { reg, .. } => format!("advance_p X{reg}"),
            LoopStart { reg, label } => {
                format!("loop_start X{reg}, {}, {}", Label::Get(label), Label::End(label))
            }
            LoopEnd(l) => format!("loop_end {}", Label::Get(l)),
            BeginDisj { reg, count, label } => {
                format!("begin_disj X{reg}, {count}, {}", Label::Disj(label))
            }
            NextDisj { reg, label } => format!("next_disj X{reg}, {}", Label::Disj(label)),
            EndDisj => "end_disj".into(),
            ResetCurrRoot => "reset_curr_root".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Line {
    pub label: Option<Label>,
    pub instr: Instruction,
    pub comment: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectionKind {
    Query,
    Program,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub kind: SectionKind,
    pub lines: Vec<Line>,
}

impl Section {
    /// Everything but `put_arc`, in order.
    pub fn node_stream(&self) -> impl Iterator<Item = &Instruction> {
        self.lines
            .iter()
            .map(|l| &l.instr)
            .filter(|i| !matches!(i, Instruction::PutArc { .. }))
    }

    pub fn arc_stream(&self) -> impl Iterator<Item = &Instruction> {
        self.lines
            .iter()
            .map(|l| &l.instr)
            .filter(|i| matches!(i, Instruction::PutArc { .. }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitKind {
    Query,
    Program,
    Rule,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledUnit {
    pub kind: UnitKind,
    pub sections: Vec<Section>,
    pub register_count: usize,
    /// First register of every item, in item order.
    pub root_registers: Vec<Reg>,
    /// Whether `reset_curr_root`/`advance_q`/`advance_p` were emitted.
    pub framed: bool,
}

impl CompiledUnit {
    pub fn instructions(&self) -> impl Iterator<Item = &Instruction> {
        self.sections.iter().flat_map(|s| s.lines.iter().map(|l| &l.instr))
    }

    /// Disassembly with a `%` comment column.
    pub fn listing(&self, sig: &Signature) -> String {
        let mut out = String::new();
        for line in self.sections.iter().flat_map(|s| &s.lines) {
            let label = line.label.map(|l| format!("{l}:")).unwrap_or_default();
            let text = format!("{label:<6}{}", line.instr.render(sig));
            if line.comment.is_empty() {
                out.push_str(text.trim_end());
            } else {
                out.push_str(&format!("{text:<34}% {}", line.comment));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    /// Wrap every program subterm in `loop_start`/`loop_end`.
    pub loop_brackets: bool,
    /// Emit `reset_curr_root` and the per-item `advance_q`/`advance_p`.
    /// Without it a unit runs in basic mode, X1 carrying the query root.
    pub root_framing: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            loop_brackets: true,
            root_framing: true,
        }
    }
}

impl CompileOptions {
    pub fn basic() -> Self {
        CompileOptions {
            loop_brackets: false,
            root_framing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rhs {
    Node(TypeId, Vec<Reg>),
    Or(Vec<Reg>),
}

/// `X{lhs} = t(X..,X..)` or `X{lhs} = OR(X..,X..)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub lhs: Reg,
    pub rhs: Rhs,
}

impl Equation {
    pub fn render(&self, sig: &Signature) -> String {
        let (head, args) = match &self.rhs {
            Rhs::Node(t, args) => (sig.type_name(*t).to_string(), args),
            Rhs::Or(args) => ("OR".to_string(), args),
        };
        if args.is_empty() {
            format!("X{} = {head}", self.lhs)
        } else {
            let a: Vec<String> = args.iter().map(|r| format!("X{r}")).collect();
            format!("X{} = {head}({})", self.lhs, a.join(", "))
        }
    }
}

/// An equation with the equations of its subterms nested beneath it.
#[derive(Debug, Clone)]
struct Flat {
    eq: Equation,
    children: Vec<Flat>,
}

#[derive(Default)]
struct Flattener {
    next: Reg,
    tags: HashMap<Tag, Reg>,
}

impl Flattener {
    fn fresh(&mut self) -> Reg {
        self.next += 1;
        self.next
    }

    /// The register a subterm occupies, allocated on first sight.
    fn reg_for(&mut self, t: &Term) -> Reg {
        match t {
            Term::Typed { tag: Some(tag), .. } | Term::Tag(tag) => match self.tags.get(tag) {
                Some(&r) => r,
                None => {
                    let r = self.fresh();
                    self.tags.insert(*tag, r);
                    r
                }
            },
            _ => self.fresh(),
        }
    }

    /// Whether `t` at register `reg` has an equation of its own: bare
    /// re-occurrences do not.
    fn flatten_at(&mut self, t: &Term, reg: Reg, defined: &mut Vec<Reg>) -> Option<Flat> {
        if defined.contains(&reg) {
            return None;
        }
        defined.push(reg);
        let (rhs, subterms): (Rhs, Vec<&Term>) = match t {
            // A first bare occurrence stands for a ⊥ node.
            Term::Tag(_) => (Rhs::Node(TypeId::BOT, Vec::new()), Vec::new()),
            Term::Typed { ty, args, .. } => {
                let regs = args.iter().map(|a| self.reg_for(a)).collect();
                (Rhs::Node(*ty, regs), args.iter().collect())
            }
            Term::Disjunction(ds) => {
                let regs = ds.iter().map(|d| self.reg_for(d)).collect();
                (Rhs::Or(regs), ds.iter().collect())
            }
        };
        let arg_regs = match &rhs {
            Rhs::Node(_, r) | Rhs::Or(r) => r.clone(),
        };
        let children = subterms
            .into_iter()
            .zip(arg_regs)
            .filter_map(|(s, r)| self.flatten_at(s, r, defined))
            .collect();
        Some(Flat {
            eq: Equation { lhs: reg, rhs },
            children,
        })
    }
}

fn preorder(f: &Flat, out: &mut Vec<Equation>) {
    out.push(f.eq.clone());
    for c in &f.children {
        preorder(c, out);
    }
}

struct Items {
    /// Per item: its register and its equations, `None` for a tag seen
    /// before.
    items: Vec<(Reg, Option<Flat>)>,
}

fn flatten_items(fl: &mut Flattener, defined: &mut Vec<Reg>, terms: &[Term]) -> Items {
    let items = terms
        .iter()
        .map(|t| {
            let reg = fl.reg_for(t);
            (reg, fl.flatten_at(t, reg, defined))
        })
        .collect();
    Items { items }
}

/// The equations of an MRS in emission order; registers are shared across
/// items.
pub fn flatten(items: &[Term]) -> Vec<Equation> {
    let mut fl = Flattener::default();
    let mut defined = Vec::new();
    let mut out = Vec::new();
    for (_, f) in flatten_items(&mut fl, &mut defined, items).items {
        if let Some(f) = f {
            preorder(&f, &mut out);
        }
    }
    out
}

fn arg_comment(regs: &[Reg], k: usize, close: &str) -> String {
    let sep = if k + 1 == regs.len() { close } else { "," };
    format!("        X{}{sep}", regs[k])
}

fn head_comment(sig: &Signature, eq: &Equation, open: &str) -> String {
    match &eq.rhs {
        Rhs::Node(t, args) if args.is_empty() => format!("X{} = {}", eq.lhs, sig.type_name(*t)),
        Rhs::Node(t, _) => format!("X{} = {}(", eq.lhs, sig.type_name(*t)),
        Rhs::Or(_) => format!("X{} = {open}", eq.lhs),
    }
}

fn line(instr: Instruction, comment: String) -> Line {
    Line { label: None, instr, comment }
}

fn emit_query(sig: &Signature, f: &Flat, out: &mut Vec<Line>) {
    let eq = &f.eq;
    match &eq.rhs {
        Rhs::Node(ty, args) => {
            out.push(line(
                Instruction::PutNode { ty: *ty, arity: args.len(), reg: eq.lhs },
                head_comment(sig, eq, ""),
            ));
            for (k, &a) in args.iter().enumerate() {
                out.push(line(
                    Instruction::PutArc { reg: eq.lhs, offset: k + 1, value: a },
                    arg_comment(args, k, ")"),
                ));
            }
        }
        Rhs::Or(args) => {
            out.push(line(
                Instruction::PutDisj { reg: eq.lhs, count: args.len() },
                head_comment(sig, eq, "OR("),
            ));
            for (k, &a) in args.iter().enumerate() {
                out.push(line(
                    Instruction::PutArc { reg: eq.lhs, offset: k + 1, value: a },
                    arg_comment(args, k, ")"),
                ));
            }
        }
    }
    for c in &f.children {
        emit_query(sig, c, out);
    }
}

fn query_lines(sig: &Signature, items: &Items, framed: bool) -> Vec<Line> {
    let mut out = Vec::new();
    if framed {
        out.push(line(Instruction::ResetCurrRoot, String::new()));
    }
    for (reg, f) in &items.items {
        if let Some(f) = f {
            emit_query(sig, f, &mut out);
        }
        if framed {
            out.push(line(Instruction::AdvanceQ(*reg), String::new()));
        }
    }
    out
}

struct ProgramEmitter<'a> {
    sig: &'a Signature,
    opts: CompileOptions,
    seen: Vec<Reg>,
    next_label: u32,
    next_disj_label: u32,
    out: Vec<Line>,
}

impl ProgramEmitter<'_> {
    fn see(&mut self, r: Reg) -> bool {
        if self.seen.contains(&r) {
            true
        } else {
            self.seen.push(r);
            false
        }
    }

    fn emit(&mut self, f: &Flat) {
        let eq = &f.eq;
        match &eq.rhs {
            Rhs::Node(ty, args) => {
                self.next_label += 1;
                let l = self.next_label;
                if self.opts.loop_brackets {
                    self.out.push(line(Instruction::LoopStart { reg: eq.lhs, label: l }, String::new()));
                }
                self.see(eq.lhs);
                self.out.push(Line {
                    label: self.opts.loop_brackets.then_some(Label::Get(l)),
                    instr: Instruction::GetStructure { ty: *ty, arity: args.len(), reg: eq.lhs },
                    comment: head_comment(self.sig, eq, ""),
                });
                for (k, &a) in args.iter().enumerate() {
                    let instr = if self.see(a) {
                        Instruction::UnifyValue(a)
                    } else {
                        Instruction::UnifyVariable(a)
                    };
                    self.out.push(line(instr, arg_comment(args, k, ")")));
                }
                for c in &f.children {
                    self.emit(c);
                }
                if self.opts.loop_brackets {
                    self.out.push(Line {
                        label: Some(Label::End(l)),
                        instr: Instruction::LoopEnd(l),
                        comment: String::new(),
                    });
                }
            }
            Rhs::Or(args) => {
                let first = self.next_disj_label + 1;
                self.next_disj_label += args.len() as u32 + 1;
                self.out.push(line(
                    Instruction::BeginDisj { reg: eq.lhs, count: args.len(), label: first },
                    head_comment(self.sig, eq, "{"),
                ));
                for (k, (&a, c)) in args.iter().zip(&f.children).enumerate() {
                    self.see(a);
                    let sep = if k + 1 == args.len() { "" } else { " |" };
                    self.out.push(Line {
                        label: Some(Label::Disj(first + k as u32)),
                        instr: Instruction::NextDisj { reg: a, label: first + k as u32 + 1 },
                        comment: format!("        X{a}{sep}"),
                    });
                    self.emit(c);
                }
                self.out.push(Line {
                    label: Some(Label::Disj(first + args.len() as u32)),
                    instr: Instruction::EndDisj,
                    comment: "        }".into(),
                });
            }
        }
    }

    fn items(&mut self, items: &Items) {
        for (reg, f) in &items.items {
            if self.opts.root_framing {
                let reunify = self.see(*reg);
                self.out.push(line(Instruction::AdvanceP { reg: *reg, reunify }, String::new()));
            }
            if let Some(f) = f {
                self.emit(f);
            }
        }
    }
}

fn count_registers(fl: &Flattener) -> usize {
    fl.next
}

pub fn compile_query(sig: &Signature, items: &[Term], opts: CompileOptions) -> CompiledUnit {
    let mut fl = Flattener::default();
    let mut defined = Vec::new();
    let flat = flatten_items(&mut fl, &mut defined, items);
    let lines = query_lines(sig, &flat, opts.root_framing);
    CompiledUnit {
        kind: UnitKind::Query,
        sections: vec![Section { kind: SectionKind::Query, lines }],
        register_count: count_registers(&fl),
        root_registers: flat.items.iter().map(|(r, _)| *r).collect(),
        framed: opts.root_framing,
    }
}

pub fn compile_program(sig: &Signature, items: &[Term], opts: CompileOptions) -> CompiledUnit {
    let mut fl = Flattener::default();
    let mut defined = Vec::new();
    let flat = flatten_items(&mut fl, &mut defined, items);
    let mut em = ProgramEmitter {
        sig,
        opts,
        seen: Vec::new(),
        next_label: 0,
        next_disj_label: 0,
        out: Vec::new(),
    };
    if opts.root_framing {
        em.out.push(line(Instruction::ResetCurrRoot, String::new()));
    }
    em.items(&flat);
    CompiledUnit {
        kind: UnitKind::Program,
        sections: vec![Section { kind: SectionKind::Program, lines: em.out }],
        register_count: count_registers(&fl),
        root_registers: flat.items.iter().map(|(r, _)| *r).collect(),
        framed: opts.root_framing,
    }
}

/// Body as a program, then the head as a query over the same registers.
/// Rules are always framed.
pub fn compile_rule(sig: &Signature, rule: &Rule, opts: CompileOptions) -> CompiledUnit {
    let opts = CompileOptions { root_framing: true, ..opts };
    let mut fl = Flattener::default();
    let mut defined = Vec::new();
    let body = flatten_items(&mut fl, &mut defined, &rule.body);
    let head = flatten_items(&mut fl, &mut defined, std::slice::from_ref(&rule.head));
    let mut em = ProgramEmitter {
        sig,
        opts,
        seen: Vec::new(),
        next_label: 0,
        next_disj_label: 0,
        out: Vec::new(),
    };
    em.out.push(line(Instruction::ResetCurrRoot, "initialization".into()));
    em.items(&body);
    let mut head_lines = query_lines(sig, &head, true);
    head_lines[0].comment = "head".into();
    let mut roots: Vec<Reg> = body.items.iter().map(|(r, _)| *r).collect();
    roots.push(head.items[0].0);
    CompiledUnit {
        kind: UnitKind::Rule,
        sections: vec![
            Section { kind: SectionKind::Program, lines: em.out },
            Section { kind: SectionKind::Query, lines: head_lines },
        ],
        register_count: count_registers(&fl),
        root_registers: roots,
        framed: true,
    }
}

/// A listing line reduced to its tokens: no comment, no commas, single
/// spaces. Used to compare against hand transcriptions.
pub fn normalize_line(text: &str) -> String {
    let code = text.split('%').next().unwrap_or("");
    code.replace(',', " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn normalize_listing(text: &str) -> Vec<String> {
    text.lines()
        .map(normalize_line)
        .filter(|l| !l.is_empty())
        .collect()
}
