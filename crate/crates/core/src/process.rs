//! Reversible CCS: monitored threads, memories, and the forward/backward LTS.
//!
//! Every step function first brings its argument into *shape*: memories are
//! distributed over parallel code and top-level restrictions of a thread's
//! code are moved to process level, renaming the bound name apart from the
//! memory when needed. Identifiers and free names are left untouched, so
//! traces replay by identifier. [`normal_form`] additionally renames bound
//! names, sorts sums and renumbers identifiers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ccs::{self, CcsContext, Label, Term};
use crate::syntax::{self, ParseError};

pub type EventId = u32;

/// A memory entry `<i, a, P>`: identifier, label, and the discarded sum branch.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MemEvent {
    pub id: EventId,
    pub label: Label,
    pub alt: Term,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MemItem {
    Event(MemEvent),
    Fork,
}

/// A memory stack, oldest entry first; the last item is the top.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Memory(pub Vec<MemItem>);

impl Memory {
    pub fn empty() -> Memory {
        Memory(Vec::new())
    }

    pub fn top(&self) -> Option<&MemItem> {
        self.0.last()
    }

    pub fn pushed(&self, item: MemItem) -> Memory {
        let mut m = self.clone();
        m.0.push(item);
        m
    }

    pub fn popped(&self) -> Memory {
        let mut m = self.clone();
        m.0.pop();
        m
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn events(&self) -> impl Iterator<Item = &MemEvent> {
        self.0.iter().filter_map(|it| match it {
            MemItem::Event(e) => Some(e),
            MemItem::Fork => None,
        })
    }

    pub fn free_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for e in self.events() {
            if let Some(n) = e.label.name() {
                out.insert(n.to_string());
            }
            out.extend(ccs::free_names(&e.alt));
        }
        out
    }

    fn names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for e in self.events() {
            if let Some(n) = e.label.name() {
                out.insert(n.to_string());
            }
            out.extend(ccs::names(&e.alt));
        }
        out
    }

    fn map_terms(&self, f: &mut dyn FnMut(&Term) -> Term, from: Option<(&str, &str)>) -> Memory {
        Memory(
            self.0
                .iter()
                .map(|it| match it {
                    MemItem::Fork => MemItem::Fork,
                    MemItem::Event(e) => {
                        let label = match from {
                            Some((a, b)) => rename_label(&e.label, a, b),
                            None => e.label.clone(),
                        };
                        MemItem::Event(MemEvent { id: e.id, label, alt: f(&e.alt) })
                    }
                })
                .collect(),
        )
    }
}

fn rename_label(l: &Label, from: &str, to: &str) -> Label {
    match l {
        Label::In(n) if n == from => Label::In(to.to_string()),
        Label::Out(n) if n == from => Label::Out(to.to_string()),
        other => other.clone(),
    }
}

impl fmt::Display for Memory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for it in self.0.iter().rev() {
            match it {
                MemItem::Fork => write!(f, "*.")?,
                MemItem::Event(e) => write!(f, "<{},{},{}>.", e.id, e.label, e.alt)?,
            }
        }
        write!(f, "{{}}")
    }
}

/// A monitored process.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Process {
    Thread(Memory, Term),
    Par(Box<Process>, Box<Process>),
    Res(Box<Process>, String),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Top,
    ParRight,
    ResBody,
}

fn write_proc(out: &mut String, p: &Process, ctx: Ctx) {
    match p {
        Process::Thread(m, code) => {
            let parens = ctx == Ctx::ResBody;
            if parens {
                out.push('(');
            }
            out.push_str(&m.to_string());
            out.push_str(" |> ");
            ccs::write_term(out, code, ccs::SUM_LEVEL);
            if parens {
                out.push(')');
            }
        }
        Process::Par(a, b) => {
            let parens = ctx != Ctx::Top;
            if parens {
                out.push('(');
            }
            write_proc(out, a, Ctx::Top);
            out.push_str(" | ");
            write_proc(out, b, Ctx::ParRight);
            if parens {
                out.push(')');
            }
        }
        Process::Res(q, a) => {
            write_proc(out, q, Ctx::ResBody);
            out.push_str(" \\ ");
            out.push_str(a);
        }
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_proc(&mut s, self, Ctx::Top);
        f.write_str(&s)
    }
}

impl Process {
    pub fn parse(src: &str) -> Result<Process, ParseError> {
        syntax::parse_process(src)
    }

    /// Accepts either RCCS syntax or a bare CCS term, read as `{} |> P`.
    /// Errors come from the RCCS parser only when the input mentions `|>`.
    pub fn parse_lenient(src: &str) -> Result<Process, ParseError> {
        match syntax::parse_process(src) {
            Ok(p) => Ok(p),
            Err(e) => match ccs::parse_term(src) {
                Ok(t) => Ok(Process::init(t)),
                Err(te) => Err(if src.contains("|>") { e } else { te }),
            },
        }
    }

    /// The empty-memory process `{} |> t`.
    pub fn init(t: Term) -> Process {
        Process::Thread(Memory::empty(), t)
    }

    pub fn par(a: Process, b: Process) -> Process {
        Process::Par(Box::new(a), Box::new(b))
    }

    pub fn res(p: Process, name: impl Into<String>) -> Process {
        Process::Res(Box::new(p), name.into())
    }

    /// Thread memories, left to right.
    pub fn memories(&self) -> Vec<&Memory> {
        let mut out = Vec::new();
        fn go<'a>(p: &'a Process, out: &mut Vec<&'a Memory>) {
            match p {
                Process::Thread(m, _) => out.push(m),
                Process::Par(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Process::Res(q, _) => go(q, out),
            }
        }
        go(self, &mut out);
        out
    }
}

pub fn ids(r: &Process) -> BTreeSet<EventId> {
    r.memories().into_iter().flat_map(|m| m.events().map(|e| e.id)).collect()
}

pub fn free_names(r: &Process) -> BTreeSet<String> {
    match r {
        Process::Thread(m, code) => {
            let mut s = m.free_names();
            s.extend(ccs::free_names(code));
            s
        }
        Process::Par(a, b) => {
            let mut s = free_names(a);
            s.extend(free_names(b));
            s
        }
        Process::Res(q, a) => {
            let mut s = free_names(q);
            s.remove(a);
            s
        }
    }
}

fn rename_proc(r: &Process, from: &str, to: &str) -> Process {
    match r {
        Process::Thread(m, code) => Process::Thread(
            m.map_terms(&mut |t| ccs::rename_free(t, from, to), Some((from, to))),
            ccs::rename_free(code, from, to),
        ),
        Process::Par(a, b) => Process::par(rename_proc(a, from, to), rename_proc(b, from, to)),
        Process::Res(_, a) if a == from => r.clone(),
        Process::Res(q, a) => Process::res(rename_proc(q, from, to), a.clone()),
    }
}

/// The memory-free CCS term underlying a process.
pub fn erase(r: &Process) -> Term {
    match r {
        Process::Thread(_, code) => code.clone(),
        Process::Par(a, b) => Term::par(erase(a), erase(b)),
        Process::Res(q, a) => Term::res(erase(q), a.clone()),
    }
}

pub(crate) fn shape(r: &Process) -> Process {
    match r {
        Process::Thread(m, code) => {
            let m = m.map_terms(&mut ccs::simplify, None);
            shape_thread(m, ccs::simplify(code))
        }
        Process::Par(a, b) => Process::par(shape(a), shape(b)),
        Process::Res(q, a) => close_res(shape(q), a),
    }
}

fn shape_thread(m: Memory, code: Term) -> Process {
    match code {
        Term::Par(p, q) => {
            let m2 = m.pushed(MemItem::Fork);
            Process::par(shape_thread(m2.clone(), *p), shape_thread(m2, *q))
        }
        Term::Res(p, a) => {
            let fm = m.free_names();
            if fm.contains(&a) {
                let mut avoid = m.names();
                avoid.extend(ccs::names(&p));
                avoid.insert(a.clone());
                let b = ccs::fresh_name(&a, &avoid);
                let p = ccs::rename_free(&p, &a, &b);
                Process::res(shape_thread(m, p), b)
            } else {
                Process::res(shape_thread(m, *p), a)
            }
        }
        other => Process::Thread(m, other),
    }
}

fn close_res(q: Process, a: &str) -> Process {
    if !free_names(&q).contains(a) {
        return q;
    }
    if let Process::Thread(m, code) = &q {
        if !m.free_names().contains(a) {
            let c = ccs::push_res(code.clone(), a);
            if !matches!(c, Term::Res(..)) {
                return Process::Thread(m.clone(), c);
            }
        }
    }
    Process::res(q, a.to_string())
}

/// One transition of the reversible LTS.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub id: EventId,
    pub label: Label,
    pub target: Process,
}

fn fwd_raw(r: &Process, id: EventId) -> Vec<(Label, Process)> {
    match r {
        Process::Thread(m, Term::Sum(s)) => s
            .iter()
            .enumerate()
            .map(|(k, (l, cont))| {
                let others: Vec<_> = s.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, x)| x.clone()).collect();
                let ev = MemEvent { id, label: l.clone(), alt: Term::sum(others) };
                (l.clone(), Process::Thread(m.pushed(MemItem::Event(ev)), cont.clone()))
            })
            .collect(),
        Process::Thread(..) => Vec::new(),
        Process::Par(a, b) => {
            let la = fwd_raw(a, id);
            let lb = fwd_raw(b, id);
            let mut out = Vec::new();
            for (l, a2) in &la {
                out.push((l.clone(), Process::par(a2.clone(), (**b).clone())));
            }
            for (l, b2) in &lb {
                out.push((l.clone(), Process::par((**a).clone(), b2.clone())));
            }
            for (l1, a2) in &la {
                for (l2, b2) in &lb {
                    if l1.is_complement_of(l2) {
                        out.push((Label::Tau, Process::par(a2.clone(), b2.clone())));
                    }
                }
            }
            out
        }
        Process::Res(q, a) => fwd_raw(q, id)
            .into_iter()
            .filter(|(l, _)| l.name() != Some(a.as_str()))
            .map(|(l, q2)| (l, Process::res(q2, a.clone())))
            .collect(),
    }
}

/// The identifier offered to forward steps: the least one not in use.
pub fn fresh_id(r: &Process) -> EventId {
    let used = ids(r);
    (1..).find(|i| !used.contains(i)).expect("unbounded counter")
}

/// Forward transitions using the given identifier, which must be unused.
pub fn fwd_steps_with_id(r: &Process, id: EventId) -> Vec<Transition> {
    let s = shape(r);
    let mut out: BTreeSet<Transition> = BTreeSet::new();
    for (label, target) in fwd_raw(&s, id) {
        out.insert(Transition { id, label, target: shape(&target) });
    }
    out.into_iter().collect()
}

pub fn fwd_steps(r: &Process) -> Vec<Transition> {
    fwd_steps_with_id(r, fresh_id(r))
}

fn undo_top(m: &Memory, code: &Term) -> Option<(EventId, Label, Process)> {
    let e = match m.top()? {
        MemItem::Event(e) => e,
        MemItem::Fork => return None,
    };
    let mut summands = vec![(e.label.clone(), code.clone())];
    match &e.alt {
        Term::Nil => {}
        Term::Sum(s) => summands.extend(s.iter().cloned()),
        _ => return None,
    }
    Some((e.id, e.label.clone(), Process::Thread(m.popped(), Term::Sum(summands))))
}

/// Reassembles a shaped subtree into a single thread, undoing memory
/// distribution and restriction extrusion.
fn collapse(r: &Process) -> Option<(Memory, Term)> {
    match r {
        Process::Thread(m, code) => Some((m.clone(), code.clone())),
        Process::Par(a, b) => {
            let (ma, ca) = collapse(a)?;
            let (mb, cb) = collapse(b)?;
            if ma == mb && ma.top() == Some(&MemItem::Fork) {
                Some((ma.popped(), Term::par(ca, cb)))
            } else {
                None
            }
        }
        Process::Res(q, a) => {
            let (m, c) = collapse(q)?;
            if m.free_names().contains(a) {
                None
            } else {
                Some((m, Term::res(c, a.clone())))
            }
        }
    }
}

fn bwd_raw(r: &Process) -> Vec<(EventId, Label, Process)> {
    match r {
        Process::Thread(m, code) => undo_top(m, code).into_iter().collect(),
        Process::Par(a, b) => {
            let la = bwd_raw(a);
            let lb = bwd_raw(b);
            let ia = ids(a);
            let ib = ids(b);
            let mut out = Vec::new();
            for (i, l, a2) in &la {
                if !ib.contains(i) {
                    out.push((*i, l.clone(), Process::par(a2.clone(), (**b).clone())));
                }
            }
            for (i, l, b2) in &lb {
                if !ia.contains(i) {
                    out.push((*i, l.clone(), Process::par((**a).clone(), b2.clone())));
                }
            }
            for (i, l1, a2) in &la {
                for (j, l2, b2) in &lb {
                    if i == j && l1.is_complement_of(l2) {
                        out.push((*i, Label::Tau, Process::par(a2.clone(), b2.clone())));
                    }
                }
            }
            if let Some((m, code)) = collapse(r) {
                out.extend(undo_top(&m, &code));
            }
            out
        }
        Process::Res(q, a) => bwd_raw(q)
            .into_iter()
            .filter(|(_, l, _)| l.name() != Some(a.as_str()))
            .map(|(i, l, q2)| (i, l, Process::res(q2, a.clone())))
            .collect(),
    }
}

pub fn bwd_steps(r: &Process) -> Vec<Transition> {
    let s = shape(r);
    let mut out: BTreeSet<Transition> = BTreeSet::new();
    for (id, label, target) in bwd_raw(&s) {
        out.insert(Transition { id, label, target: shape(&target) });
    }
    out.into_iter().collect()
}

fn uniquify_proc(r: &Process, counter: &mut usize) -> Process {
    match r {
        Process::Thread(..) => r.clone(),
        Process::Par(a, b) => Process::par(uniquify_proc(a, counter), uniquify_proc(b, counter)),
        Process::Res(q, a) => {
            let tmp = format!("#p{counter}");
            *counter += 1;
            Process::res(uniquify_proc(&rename_proc(q, a, &tmp), counter), tmp)
        }
    }
}

fn canon_names(r: &Process, depth: usize) -> Process {
    match r {
        Process::Thread(m, code) => {
            Process::Thread(m.map_terms(&mut |t| ccs::canonical_at(t, depth), None), ccs::canonical_at(code, depth))
        }
        Process::Par(a, b) => Process::par(canon_names(a, depth), canon_names(b, depth)),
        Process::Res(q, a) => {
            let name = format!("%{depth}");
            Process::res(canon_names(&rename_proc(q, a, &name), depth + 1), name)
        }
    }
}

fn renumber(r: &Process, map: &mut BTreeMap<EventId, EventId>) -> Process {
    match r {
        Process::Thread(m, code) => {
            let items =
                m.0.iter()
                    .map(|it| match it {
                        MemItem::Fork => MemItem::Fork,
                        MemItem::Event(e) => {
                            let next = map.len() as EventId + 1;
                            let id = *map.entry(e.id).or_insert(next);
                            MemItem::Event(MemEvent { id, label: e.label.clone(), alt: e.alt.clone() })
                        }
                    })
                    .collect();
            Process::Thread(Memory(items), code.clone())
        }
        Process::Par(a, b) => {
            let a2 = renumber(a, map);
            let b2 = renumber(b, map);
            Process::par(a2, b2)
        }
        Process::Res(q, a) => Process::res(renumber(q, map), a.clone()),
    }
}

/// Canonical representative of the structural congruence class.
pub fn normal_form(r: &Process) -> Process {
    let s = shape(r);
    let mut counter = 0;
    let s = canon_names(&uniquify_proc(&s, &mut counter), 0);
    renumber(&s, &mut BTreeMap::new())
}

pub fn congruent(r: &Process, s: &Process) -> bool {
    normal_form(r) == normal_form(s)
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RccsError {
    #[error("process is not coherent: rollback stops at {stuck}")]
    NotCoherent { stuck: String },
    #[error("trace does not replay at step {step}: {reason}")]
    Replay { step: usize, reason: String },
    #[error("unsupported context `{0}`: only `[]` and `P | C` are allowed")]
    UnsupportedContext(String),
}

/// Greedy backward reduction; returns the visited states (first is the
/// shaped input) and the undone transitions, in rollback order.
pub fn rollback(r: &Process) -> (Vec<Process>, Vec<(EventId, Label)>) {
    let mut states = vec![shape(r)];
    let mut undone = Vec::new();
    loop {
        let cur = states.last().expect("nonempty");
        let steps = bwd_steps(cur);
        let Some(t) = steps.into_iter().next() else { break };
        undone.push((t.id, t.label));
        states.push(t.target);
    }
    (states, undone)
}

fn origin_of_stuck(stuck: &Process) -> Result<Process, RccsError> {
    let o = Process::init(erase(stuck));
    if congruent(stuck, &o) {
        Ok(o)
    } else {
        Err(RccsError::NotCoherent { stuck: stuck.to_string() })
    }
}

/// The empty-memory ancestor of a coherent process.
pub fn origin(r: &Process) -> Result<Process, RccsError> {
    let (states, _) = rollback(r);
    origin_of_stuck(states.last().expect("nonempty"))
}

pub fn is_coherent(r: &Process) -> bool {
    origin(r).is_ok()
}

/// Normal forms of the end points of every maximal backward reduction.
pub fn all_rollback_ends(r: &Process) -> BTreeSet<Process> {
    let mut seen = BTreeSet::new();
    let mut ends = BTreeSet::new();
    let mut stack = vec![shape(r)];
    while let Some(s) = stack.pop() {
        if !seen.insert(normal_form(&s)) {
            continue;
        }
        let steps = bwd_steps(&s);
        if steps.is_empty() {
            ends.insert(normal_form(&s));
        }
        stack.extend(steps.into_iter().map(|t| t.target));
    }
    ends
}

pub fn rccs_barbs(r: &Process) -> BTreeSet<Label> {
    fwd_steps(r).into_iter().map(|t| t.label).filter(|l| !l.is_tau()).collect()
}

/// Inserts a fork at the base of every thread memory.
pub fn addfork(r: &Process) -> Process {
    match r {
        Process::Thread(m, code) => {
            let mut items = vec![MemItem::Fork];
            items.extend(m.0.iter().cloned());
            Process::Thread(Memory(items), code.clone())
        }
        Process::Par(a, b) => Process::par(addfork(a), addfork(b)),
        Process::Res(q, a) => Process::res(addfork(q), a.clone()),
    }
}

pub fn instantiate_context(c: &CcsContext, r: &Process) -> Result<Process, RccsError> {
    match c {
        CcsContext::Hole => Ok(r.clone()),
        CcsContext::Par(p, inner) => {
            let filled = instantiate_context(inner, r)?;
            Ok(Process::par(Process::Thread(Memory(vec![MemItem::Fork]), p.clone()), addfork(&filled)))
        }
        other => Err(RccsError::UnsupportedContext(other.to_string())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub dir: Direction,
    pub id: EventId,
    pub label: Label,
}

impl TransitionRecord {
    pub fn fwd(id: EventId, label: Label) -> Self {
        TransitionRecord { dir: Direction::Forward, id, label }
    }

    pub fn bwd(id: EventId, label: Label) -> Self {
        TransitionRecord { dir: Direction::Backward, id, label }
    }
}

impl fmt::Display for TransitionRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.dir {
            Direction::Forward => '+',
            Direction::Backward => '-',
        };
        write!(f, "{sign} {}:{}", self.id, self.label)
    }
}

/// Reads `+ i:label` / `- i:label` lines; blank lines and `#` comments are skipped.
pub fn parse_trace(text: &str) -> Result<Vec<TransitionRecord>, String> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || format!("line {}: expected `+ i:label` or `- i:label`, got `{line}`", n + 1);
        let (dir, rest) = match line.split_at(1) {
            ("+", rest) => (Direction::Forward, rest),
            ("-", rest) => (Direction::Backward, rest),
            _ => return Err(bad()),
        };
        let (id, label) = rest.trim().split_once(':').ok_or_else(bad)?;
        let id: EventId = id.trim().parse().map_err(|_| bad())?;
        let label = Label::parse(label.trim()).map_err(|_| bad())?;
        out.push(TransitionRecord { dir, id, label });
    }
    Ok(out)
}

/// The unique transition of `r` matching a record, up to congruence of targets.
pub fn step_matching(r: &Process, rec: &TransitionRecord) -> Result<Transition, String> {
    let cands: Vec<Transition> = match rec.dir {
        Direction::Forward => {
            if ids(r).contains(&rec.id) {
                return Err(format!("identifier {} is already in use", rec.id));
            }
            fwd_steps_with_id(r, rec.id)
        }
        Direction::Backward => bwd_steps(r),
    }
    .into_iter()
    .filter(|t| t.id == rec.id && t.label == rec.label)
    .collect();
    let mut distinct: BTreeMap<Process, Transition> = BTreeMap::new();
    for t in cands {
        distinct.entry(normal_form(&t.target)).or_insert(t);
    }
    match distinct.len() {
        0 => Err(format!("no transition {rec}")),
        1 => Ok(distinct.into_values().next().expect("one")),
        n => Err(format!("{n} distinct transitions match {rec}")),
    }
}

/// Every state visited while replaying, starting with the shaped source.
pub fn replay_states(src: &Process, trace: &[TransitionRecord]) -> Result<Vec<Process>, RccsError> {
    let mut states = vec![shape(src)];
    for (step, rec) in trace.iter().enumerate() {
        let cur = states.last().expect("nonempty");
        let t = step_matching(cur, rec).map_err(|reason| RccsError::Replay { step, reason })?;
        states.push(t.target);
    }
    Ok(states)
}

pub fn replay(src: &Process, trace: &[TransitionRecord]) -> Result<Process, RccsError> {
    Ok(replay_states(src, trace)?.pop().expect("nonempty"))
}

/// Reorders a trace into backward steps followed by forward steps by
/// cancelling `+i` `-i` pairs and moving backward steps earlier.
pub fn rearrange_parabolic(src: &Process, trace: &[TransitionRecord]) -> Result<Vec<TransitionRecord>, RccsError> {
    replay(src, trace)?;
    let mut t = trace.to_vec();
    loop {
        let k = t.windows(2).position(|w| w[0].dir == Direction::Forward && w[1].dir == Direction::Backward);
        let Some(k) = k else { break };
        if t[k].id == t[k + 1].id {
            t.drain(k..k + 2);
        } else {
            t.swap(k, k + 1);
        }
    }
    Ok(t)
}
