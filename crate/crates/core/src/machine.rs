//! The abstract machine: a heap of tagged cells, registers, the ROOTS
//! array, the work queue Q and the disjunction stack.
//!
//! Heap addresses are 0-based. Type unification interprets the per-pair
//! [`TypeUnifyPlan`](crate::signature::TypeUnifyPlan)s of the signature.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::compiler::{CompiledUnit, Instruction, Label, Reg, Section, SectionKind};
use crate::fs::{DNode, DisjGraph};
use crate::signature::{LeftActionKind, Origin, Signature, TypeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Str(TypeId),
    Ref(usize),
    Or(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Copy,
    Unify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueueItem {
    pub action: Action,
    pub addr: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisjRecord {
    pub start_label: Label,
    pub end_label: Label,
    pub register: Reg,
    pub or_addr: usize,
    /// 1-based ordinal of the disjunct being processed; 0 before the first.
    pub curr_disj: usize,
    pub non_fail: usize,
    pub count: usize,
    pub orig_str: Option<usize>,
    serial: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeUnify {
    Fail,
    Trivial,
    /// The unified structure lives at `target`; `items` follow the left
    /// type's features.
    Built { target: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("OR cell at {0} met outside a loop bracket")]
    OrOutsideLoop(usize),
    #[error("register X{0} read before being set")]
    UnsetRegister(Reg),
    #[error("queue empty on unify instruction")]
    QueueUnderflow,
    #[error("advance_p past the last root")]
    RootsExhausted,
    #[error("no instruction carries label {0}")]
    UnknownLabel(Label),
    #[error("loop or disjunction instruction without a record")]
    NoRecord,
    #[error("malformed heap at {0}")]
    MalformedHeap(usize),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub cells: usize,
    pub instructions: usize,
    pub records: usize,
}

/// One pass over one disjunct, as seen by [`Audit`].
#[derive(Debug, Clone)]
pub struct Iteration {
    pub serial: usize,
    pub disj: usize,
    pub slot: usize,
    /// The heap as it was when the pass began.
    pub heap: Vec<Cell>,
    pub failed: bool,
}

/// A heap write and the passes active when it happened, innermost last.
#[derive(Debug, Clone)]
pub struct Write {
    pub addr: usize,
    pub active: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct Audit {
    pub iterations: Vec<Iteration>,
    pub writes: Vec<Write>,
    active: Vec<usize>,
}

enum Flow {
    Next,
    Jump(Label),
    Halt,
}

pub struct Machine<'s> {
    sig: &'s Signature,
    pub heap: Vec<Cell>,
    regs: Vec<Option<usize>>,
    pub roots: Vec<usize>,
    pub curr_root: usize,
    queue: VecDeque<QueueItem>,
    pub ds: Vec<DisjRecord>,
    pub outcome: Outcome,
    pub stats: Stats,
    trace: Option<Vec<String>>,
    audit: Option<Audit>,
    /// Root of the last unframed query, for basic-mode runs.
    basic_root: Option<usize>,
    serials: usize,
}

impl<'s> Machine<'s> {
    pub fn new(sig: &'s Signature) -> Self {
        Machine {
            sig,
            heap: Vec::new(),
            regs: Vec::new(),
            roots: Vec::new(),
            curr_root: 0,
            queue: VecDeque::new(),
            ds: Vec::new(),
            outcome: Outcome::Succeeded,
            stats: Stats::default(),
            trace: None,
            audit: None,
            basic_root: None,
            serials: 0,
        }
    }

    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn trace_lines(&self) -> &[String] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn enable_audit(&mut self) {
        self.audit = Some(Audit::default());
    }

    pub fn audit(&self) -> Option<&Audit> {
        self.audit.as_ref()
    }

    pub fn h(&self) -> usize {
        self.heap.len()
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn reg(&self, r: Reg) -> Result<usize, MachineError> {
        self.regs
            .get(r)
            .copied()
            .flatten()
            .ok_or(MachineError::UnsetRegister(r))
    }

    pub fn set_reg(&mut self, r: Reg, addr: usize) {
        if self.regs.len() <= r {
            self.regs.resize(r + 1, None);
        }
        self.regs[r] = Some(addr);
    }

    fn write(&mut self, addr: usize, cell: Cell) {
        if let Some(a) = &mut self.audit {
            a.writes.push(Write { addr, active: a.active.clone() });
        }
        self.heap[addr] = cell;
    }

    fn push(&mut self, cell: Cell) -> usize {
        self.heap.push(cell);
        self.stats.cells += 1;
        self.heap.len() - 1
    }

    /// Appends an unbound cell.
    fn push_unbound(&mut self) -> usize {
        let h = self.heap.len();
        self.push(Cell::Ref(h))
    }

    pub fn is_unbound(&self, a: usize) -> bool {
        self.heap[a] == Cell::Ref(a)
    }

    pub fn deref(&self, mut a: usize) -> usize {
        let mut steps = 0;
        while let Cell::Ref(b) = self.heap[a] {
            if b == a {
                break;
            }
            a = b;
            steps += 1;
            debug_assert!(steps <= self.heap.len(), "REF chain revisits an address");
        }
        a
    }

    pub fn bind(&mut self, a: usize, b: usize) {
        self.write(a, Cell::Ref(b));
    }

    /// A fresh structure of type `ty` with every feature filled, block
    /// first and sub-skeletons after it.
    fn build_skeleton(&mut self, ty: TypeId) -> usize {
        let base = self.push(Cell::Str(ty));
        let feats = self.sig.features(ty).to_vec();
        for _ in &feats {
            self.push_unbound();
        }
        for (i, &(_, v)) in feats.iter().enumerate() {
            let s = self.build_skeleton(v);
            self.write(base + 1 + i, Cell::Ref(s));
        }
        base
    }

    /// Unifies type `t1` (left, incoming) with the structure of type `t2`
    /// at `a2`. Queue items for the left type's features are appended to
    /// `items`.
    pub fn run_unify_type(
        &mut self,
        t1: TypeId,
        t2: TypeId,
        a2: usize,
        items: &mut Vec<QueueItem>,
    ) -> TypeUnify {
        let plan = self.sig.unify_plan(t1, t2).clone();
        if plan.is_fail() {
            return TypeUnify::Fail;
        }
        if plan.in_place() {
            if plan.result != t2 {
                self.write(a2, Cell::Str(plan.result));
            }
            if plan.left_actions.is_empty() {
                return TypeUnify::Trivial;
            }
            for act in &plan.left_actions {
                items.push(QueueItem { action: Action::Unify, addr: a2 + act.target });
            }
            return TypeUnify::Built { target: a2 };
        }
        let base = self.push(Cell::Str(plan.result));
        for _ in &plan.per_feature {
            self.push_unbound();
        }
        for (i, pf) in plan.per_feature.iter().enumerate() {
            let cell = base + 1 + i;
            match pf.origin {
                Origin::First(_) => {}
                Origin::Second(p) | Origin::Both(_, p) => self.write(cell, Cell::Ref(a2 + p)),
                Origin::New(v) => {
                    let s = self.build_skeleton(v);
                    self.write(cell, Cell::Ref(s));
                }
            }
        }
        for act in &plan.left_actions {
            let action = match act.kind {
                LeftActionKind::Copy => Action::Copy,
                LeftActionKind::Unify => Action::Unify,
            };
            items.push(QueueItem { action, addr: base + act.target });
        }
        self.bind(a2, base);
        TypeUnify::Built { target: base }
    }

    fn type_at(&self, a: usize) -> Result<TypeId, MachineError> {
        match self.heap[a] {
            Cell::Str(t) => Ok(t),
            Cell::Or(_) => Err(MachineError::OrOutsideLoop(a)),
            Cell::Ref(_) => Err(MachineError::MalformedHeap(a)),
        }
    }

    /// Full unification of two heap structures.
    pub fn run_unify(&mut self, addr1: usize, addr2: usize) -> Result<bool, MachineError> {
        let a1 = self.deref(addr1);
        let a2 = self.deref(addr2);
        if a1 == a2 {
            return Ok(true);
        }
        if self.is_unbound(a1) {
            self.bind(a1, a2);
            return Ok(true);
        }
        if self.is_unbound(a2) {
            self.bind(a2, a1);
            return Ok(true);
        }
        let t1 = self.type_at(a1)?;
        let t2 = self.type_at(a2)?;
        let mut items = Vec::new();
        match self.run_unify_type(t1, t2, a2, &mut items) {
            TypeUnify::Fail => Ok(false),
            TypeUnify::Trivial => {
                self.bind(a1, a2);
                Ok(true)
            }
            TypeUnify::Built { target } => {
                self.bind(a1, target);
                // copies first: a recursive unify may otherwise bind a
                // fresh cell that a later copy would overwrite
                for (i, item) in items.iter().enumerate() {
                    if item.action == Action::Copy {
                        self.write(item.addr, Cell::Ref(a1 + 1 + i));
                    }
                }
                for (i, item) in items.iter().enumerate() {
                    if item.action == Action::Unify && !self.run_unify(item.addr, a1 + 1 + i)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Deep copy of the structure at `src` on top of the heap, sharing
    /// and cycles preserved.
    pub fn copy_structure(&mut self, src: usize) -> usize {
        let mut map = HashMap::new();
        self.copy_node(self.deref(src), &mut map)
    }

    fn copy_node(&mut self, a: usize, map: &mut HashMap<usize, usize>) -> usize {
        if let Some(&c) = map.get(&a) {
            return c;
        }
        let (head, n) = match self.heap[a] {
            Cell::Str(t) => (Cell::Str(t), self.sig.arity(t)),
            Cell::Or(k) => (Cell::Or(k), k),
            Cell::Ref(_) => {
                let c = self.push_unbound();
                map.insert(a, c);
                return c;
            }
        };
        let base = self.push(head);
        map.insert(a, base);
        for _ in 0..n {
            self.push_unbound();
        }
        for i in 1..=n {
            let old = a + i;
            let target = self.deref(old);
            if target == old {
                // An unbound feature cell is itself the node.
                match map.get(&old) {
                    Some(&c) => self.write(base + i, Cell::Ref(c)),
                    None => {
                        map.insert(old, base + i);
                    }
                }
            } else {
                let c = self.copy_node(target, map);
                self.write(base + i, Cell::Ref(c));
            }
        }
        base
    }

    fn dequeue(&mut self) -> Result<QueueItem, MachineError> {
        self.queue.pop_front().ok_or(MachineError::QueueUnderflow)
    }

    fn add_disj_record(&mut self, start: Label, end: Label, or_addr: usize, n: usize, reg: Reg) {
        self.serials += 1;
        self.stats.records += 1;
        self.ds.push(DisjRecord {
            start_label: start,
            end_label: end,
            register: reg,
            or_addr,
            curr_disj: 0,
            non_fail: n,
            count: n,
            orig_str: None,
            serial: self.serials,
        });
    }

    fn begin_iteration(&mut self) {
        if let Some(a) = &mut self.audit {
            let rec = self.ds.last().unwrap();
            a.iterations.push(Iteration {
                serial: rec.serial,
                disj: rec.curr_disj,
                slot: rec.or_addr + rec.curr_disj,
                heap: self.heap.clone(),
                failed: false,
            });
            a.active.push(a.iterations.len() - 1);
        }
    }

    fn end_iteration(&mut self, failed: bool) {
        if let Some(a) = &mut self.audit {
            if let Some(i) = a.active.pop() {
                a.iterations[i].failed |= failed;
            }
        }
    }

    /// Failure: kill the current disjunct of the top record, or stop.
    fn fail_flow(&mut self) -> Flow {
        self.queue.clear();
        match self.ds.last_mut() {
            Some(rec) => {
                let slot = rec.or_addr + rec.curr_disj;
                rec.non_fail -= 1;
                let end = rec.end_label;
                self.write(slot, Cell::Ref(slot));
                self.end_iteration(true);
                Flow::Jump(end)
            }
            None => {
                self.outcome = Outcome::Failed;
                Flow::Halt
            }
        }
    }

    fn rearrange_disj(&mut self) -> Result<Flow, MachineError> {
        let rec = self.ds.last().ok_or(MachineError::NoRecord)?.clone();
        if rec.non_fail == 0 {
            self.ds.pop();
            return Ok(self.fail_flow());
        }
        let addr = rec.or_addr;
        let survivors: Vec<Cell> = (1..=rec.count)
            .map(|i| addr + i)
            .filter(|&s| !self.is_unbound(s))
            .map(|s| self.heap[s])
            .collect();
        if survivors.len() != rec.non_fail {
            return Err(MachineError::MalformedHeap(addr));
        }
        if rec.non_fail == 1 {
            let slot = (1..=rec.count).map(|i| addr + i).find(|&s| !self.is_unbound(s)).unwrap();
            self.bind(addr, slot);
        } else if rec.non_fail < rec.count {
            for (i, c) in survivors.into_iter().enumerate() {
                self.write(addr + 1 + i, c);
            }
            for i in rec.non_fail + 1..=rec.count {
                self.write(addr + i, Cell::Ref(addr + i));
            }
            self.write(addr, Cell::Or(rec.non_fail));
        }
        self.ds.pop();
        Ok(Flow::Next)
    }

    fn exec(&mut self, ins: &Instruction) -> Result<Flow, MachineError> {
        use Instruction::*;
        self.stats.instructions += 1;
        if !matches!(ins, UnifyVariable(_) | UnifyValue(_)) {
            debug_assert!(self.queue.is_empty(), "queue not drained before {ins:?}");
        }
        match *ins {
            PutNode { ty, arity, reg } => {
                let h = self.push(Cell::Str(ty));
                for _ in 0..arity {
                    self.push_unbound();
                }
                self.set_reg(reg, h);
            }
            PutArc { reg, offset, value } => {
                let a = self.reg(reg)?;
                let v = self.reg(value)?;
                self.write(a + offset, Cell::Ref(v));
            }
            PutDisj { reg, count } => {
                let h = self.push(Cell::Or(count));
                for _ in 0..count {
                    self.push_unbound();
                }
                self.set_reg(reg, h);
            }
            AdvanceQ(reg) => {
                let a = self.reg(reg)?;
                if self.roots.len() <= self.curr_root {
                    self.roots.resize(self.curr_root + 1, 0);
                }
                self.roots[self.curr_root] = a;
                self.curr_root += 1;
            }
            ResetCurrRoot => self.curr_root = 0,
            GetStructure { ty, arity, reg } => {
                let a = self.deref(self.reg(reg)?);
                self.set_reg(reg, a);
                match self.heap[a] {
                    Cell::Ref(_) => {
                        let base = self.push(Cell::Str(ty));
                        self.bind(a, base);
                        for _ in 0..arity {
                            let c = self.push_unbound();
                            self.queue.push_back(QueueItem { action: Action::Copy, addr: c });
                        }
                    }
                    Cell::Str(t2) => {
                        let mut items = Vec::new();
                        match self.run_unify_type(ty, t2, a, &mut items) {
                            TypeUnify::Fail => return Ok(self.fail_flow()),
                            _ => self.queue.extend(items),
                        }
                        debug_assert_eq!(self.queue.len(), arity);
                    }
                    Cell::Or(_) => return Err(MachineError::OrOutsideLoop(a)),
                }
            }
            UnifyVariable(reg) => {
                let item = self.dequeue()?;
                self.set_reg(reg, item.addr);
            }
            UnifyValue(reg) => {
                let item = self.dequeue()?;
                let x = self.reg(reg)?;
                match item.action {
                    Action::Copy if self.is_unbound(item.addr) => {
                        if self.deref(x) != item.addr {
                            self.write(item.addr, Cell::Ref(x));
                        }
                    }
                    // bound meanwhile by a nested unify
                    Action::Copy | Action::Unify => {
                        if !self.run_unify(item.addr, x)? {
                            return Ok(self.fail_flow());
                        }
                    }
                }
            }
            AdvanceP { reg, reunify } => {
                let a = *self.roots.get(self.curr_root).ok_or(MachineError::RootsExhausted)?;
                self.curr_root += 1;
                if reunify {
                    let x = self.reg(reg)?;
                    if !self.run_unify(a, x)? {
                        return Ok(self.fail_flow());
                    }
                } else {
                    self.set_reg(reg, a);
                }
            }
            LoopStart { reg, label } => {
                let a = self.deref(self.reg(reg)?);
                self.set_reg(reg, a);
                if let Cell::Or(k) = self.heap[a] {
                    self.add_disj_record(Label::Get(label), Label::End(label), a, k, reg);
                    self.ds.last_mut().unwrap().curr_disj = 1;
                    self.set_reg(reg, a + 1);
                    self.begin_iteration();
                }
            }
            LoopEnd(label) => {
                let top = match self.ds.last() {
                    Some(r) if r.start_label == Label::Get(label) => r.clone(),
                    _ => return Ok(Flow::Next),
                };
                if self.audit.as_ref().is_some_and(|a| {
                    a.active.last().is_some_and(|&i| {
                        let it = &a.iterations[i];
                        it.serial == top.serial && it.disj == top.curr_disj
                    })
                }) {
                    self.end_iteration(false);
                }
                if top.curr_disj < top.count {
                    let rec = self.ds.last_mut().unwrap();
                    rec.curr_disj += 1;
                    let slot = rec.or_addr + rec.curr_disj;
                    self.set_reg(top.register, slot);
                    self.begin_iteration();
                    return Ok(Flow::Jump(Label::Get(label)));
                }
                return self.rearrange_disj();
            }
            BeginDisj { reg, count, label } => {
                let orig = self.deref(self.reg(reg)?);
                let h = self.push(Cell::Or(count));
                for _ in 0..count {
                    self.push_unbound();
                }
                self.add_disj_record(Label::Disj(label), Label::Disj(label), h, count, reg);
                self.ds.last_mut().unwrap().orig_str = Some(orig);
            }
            NextDisj { reg, label } => {
                self.close_program_iteration();
                let rec = self.ds.last_mut().ok_or(MachineError::NoRecord)?;
                rec.curr_disj += 1;
                rec.end_label = Label::Disj(label);
                let slot = rec.or_addr + rec.curr_disj;
                let orig = rec.orig_str.ok_or(MachineError::NoRecord)?;
                self.set_reg(reg, slot);
                self.begin_iteration();
                let c = self.copy_structure(orig);
                self.write(slot, Cell::Ref(c));
            }
            EndDisj => {
                self.close_program_iteration();
                let rec = self.ds.last().ok_or(MachineError::NoRecord)?;
                let orig = rec.orig_str.ok_or(MachineError::NoRecord)?;
                let or_addr = rec.or_addr;
                self.bind(orig, or_addr);
                return self.rearrange_disj();
            }
        }
        Ok(Flow::Next)
    }

    /// Closes the audit pass of the current program disjunct if it was
    /// not already closed by a failure.
    fn close_program_iteration(&mut self) {
        let Some(rec) = self.ds.last() else { return };
        let (serial, disj) = (rec.serial, rec.curr_disj);
        let open = self.audit.as_ref().is_some_and(|a| {
            a.active.last().is_some_and(|&i| {
                let it = &a.iterations[i];
                it.serial == serial && it.disj == disj && !it.failed
            })
        });
        if open {
            self.end_iteration(false);
        }
    }

    fn note(&mut self, ins: &Instruction) {
        if let Some(trace) = &mut self.trace {
            trace.push(format!(
                "{}\tH={}\tCURR_ROOT={}\tD={}\t|Q|={}",
                ins.render(self.sig),
                self.heap.len(),
                self.curr_root,
                self.ds.len(),
                self.queue.len()
            ));
        }
    }

    fn run_query_section(&mut self, s: &Section) -> Result<(), MachineError> {
        let stream: Vec<Instruction> = s.node_stream().chain(s.arc_stream()).copied().collect();
        for ins in &stream {
            self.exec(ins)?;
            self.note(ins);
        }
        Ok(())
    }

    fn run_program_section(&mut self, s: &Section) -> Result<(), MachineError> {
        let labels: HashMap<Label, usize> = s
            .lines
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.label.map(|lb| (lb, i)))
            .collect();
        let mut pc = 0;
        while pc < s.lines.len() {
            let ins = s.lines[pc].instr;
            let flow = self.exec(&ins)?;
            self.note(&ins);
            match flow {
                Flow::Next => pc += 1,
                Flow::Jump(l) => pc = *labels.get(&l).ok_or(MachineError::UnknownLabel(l))?,
                Flow::Halt => return Ok(()),
            }
        }
        Ok(())
    }

    /// Builds the query on the heap: node stream, then arc stream.
    pub fn load_query(&mut self, unit: &CompiledUnit) -> Result<(), MachineError> {
        for s in &unit.sections {
            self.run_query_section(s)?;
        }
        if !unit.framed {
            self.basic_root = Some(self.reg(1)?);
        }
        Ok(())
    }

    /// Runs a program or rule against the resident structure.
    pub fn run_program(&mut self, unit: &CompiledUnit) -> Result<Outcome, MachineError> {
        if !unit.framed {
            if let Some(r) = self.basic_root {
                self.set_reg(1, r);
            }
        }
        for s in &unit.sections {
            match s.kind {
                SectionKind::Program => self.run_program_section(s)?,
                SectionKind::Query => self.run_query_section(s)?,
            }
            if self.outcome == Outcome::Failed {
                break;
            }
        }
        Ok(self.outcome)
    }

    /// ROOTS[0..CURR_ROOT), or the basic-mode root.
    pub fn result_roots(&self) -> Vec<usize> {
        if self.curr_root > 0 {
            self.roots[..self.curr_root].to_vec()
        } else {
            self.basic_root.into_iter().collect()
        }
    }

    /// Reads the structures at `roots` back as a graph, OR cells as OR
    /// nodes and unbound cells as ⊥ nodes.
    pub fn extract(&self, roots: &[usize]) -> Result<DisjGraph, MachineError> {
        let mut order: Vec<usize> = Vec::new();
        let mut ids: HashMap<usize, usize> = HashMap::new();
        let mut visit = |a: usize, order: &mut Vec<usize>| -> usize {
            *ids.entry(a).or_insert_with(|| {
                order.push(a);
                order.len() - 1
            })
        };
        let root_ids: Vec<usize> = roots.iter().map(|&r| visit(self.deref(r), &mut order)).collect();
        let mut nodes = Vec::new();
        let mut next = 0;
        while next < order.len() {
            let a = order[next];
            next += 1;
            let node = match self.heap[a] {
                Cell::Ref(_) => DNode::Node { ty: TypeId::BOT, arcs: Vec::new() },
                Cell::Str(t) => {
                    let mut arcs = Vec::new();
                    for (i, &(f, _)) in self.sig.features(t).iter().enumerate() {
                        arcs.push((f, visit(self.deref(a + 1 + i), &mut order)));
                    }
                    DNode::Node { ty: t, arcs }
                }
                Cell::Or(k) => {
                    let mut ds = Vec::new();
                    for i in 1..=k {
                        if self.is_unbound(a + i) {
                            return Err(MachineError::MalformedHeap(a + i));
                        }
                        ds.push(visit(self.deref(a + i), &mut order));
                    }
                    DNode::Or(ds)
                }
            };
            nodes.push(node);
        }
        Ok(DisjGraph { nodes, roots: root_ids })
    }

    /// `addr<TAB>TAG<TAB>value` per cell from `from` on; addresses are
    /// printed relative to `from` plus `origin`.
    pub fn heap_dump(&self, from: usize, origin: usize) -> String {
        let mut out = String::new();
        for (i, c) in self.heap.iter().enumerate().skip(from) {
            let addr = i - from + origin;
            let _ = match *c {
                Cell::Str(t) => writeln!(out, "{addr}\tSTR\t{}", self.sig.type_name(t)),
                Cell::Ref(r) => writeln!(out, "{addr}\tREF\t{}", r as isize - from as isize + origin as isize),
                Cell::Or(k) => writeln!(out, "{addr}\tOR\t{k}"),
            };
        }
        out
    }
}

/// Loads `query`, runs `program` against it and returns the machine.
pub fn execute<'s>(
    sig: &'s Signature,
    query: &CompiledUnit,
    program: &CompiledUnit,
) -> Result<Machine<'s>, MachineError> {
    let mut m = Machine::new(sig);
    m.load_query(query)?;
    m.run_program(program)?;
    Ok(m)
}
