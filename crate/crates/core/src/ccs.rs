//! CCS terms: labels, guarded sums, parallel composition and restriction.
//!
//! Terms are finite (no recursion), so every function here terminates by
//! structural recursion.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use crate::syntax::ParseError;

/// An action: input `a`, output `!a`, or the silent `tau`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    In(String),
    Out(String),
    Tau,
}

impl Label {
    pub fn name(&self) -> Option<&str> {
        match self {
            Label::In(n) | Label::Out(n) => Some(n),
            Label::Tau => None,
        }
    }

    /// `None` for `tau`, which has no complement.
    pub fn complement(&self) -> Option<Label> {
        match self {
            Label::In(n) => Some(Label::Out(n.clone())),
            Label::Out(n) => Some(Label::In(n.clone())),
            Label::Tau => None,
        }
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, Label::Tau)
    }

    pub fn is_complement_of(&self, other: &Label) -> bool {
        self.complement().as_ref() == Some(other)
    }

    pub fn parse(src: &str) -> Result<Label, ParseError> {
        if src.trim() == "tau" {
            Ok(Label::Tau)
        } else {
            crate::syntax::parse_label(src)
        }
    }

    fn renamed(&self, from: &str, to: &str) -> Label {
        match self {
            Label::In(n) if n == from => Label::In(to.to_string()),
            Label::Out(n) if n == from => Label::Out(to.to_string()),
            other => other.clone(),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::In(n) => write!(f, "{n}"),
            Label::Out(n) => write!(f, "!{n}"),
            Label::Tau => write!(f, "tau"),
        }
    }
}

/// A CCS process. Sums are n-ary and guarded: every summand carries a prefix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Nil,
    Sum(Vec<(Label, Term)>),
    Par(Box<Term>, Box<Term>),
    Res(Box<Term>, String),
}

impl Term {
    pub fn parse(src: &str) -> Result<Term, ParseError> {
        parse_term(src)
    }

    pub fn prefix(l: Label, cont: Term) -> Term {
        Term::Sum(vec![(l, cont)])
    }

    /// Builds a sum, collapsing the empty sum to `0`.
    pub fn sum(summands: Vec<(Label, Term)>) -> Term {
        if summands.is_empty() {
            Term::Nil
        } else {
            Term::Sum(summands)
        }
    }

    pub fn par(a: Term, b: Term) -> Term {
        Term::Par(Box::new(a), Box::new(b))
    }

    pub fn res(t: Term, name: impl Into<String>) -> Term {
        Term::Res(Box::new(t), name.into())
    }

    /// Number of prefixes occurring in the term.
    pub fn size(&self) -> usize {
        match self {
            Term::Nil => 0,
            Term::Sum(s) => s.iter().map(|(_, p)| 1 + p.size()).sum(),
            Term::Par(a, b) => a.size() + b.size(),
            Term::Res(p, _) => p.size(),
        }
    }

    pub fn summands(&self) -> &[(Label, Term)] {
        match self {
            Term::Sum(s) => s,
            _ => &[],
        }
    }
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    crate::syntax::parse_term(src)
}

const PAR: u8 = 0;
const SUM: u8 = 1;
const RES: u8 = 2;
const PRE: u8 = 3;

fn level(t: &Term) -> u8 {
    match t {
        Term::Nil => PRE,
        Term::Sum(s) if s.len() == 1 => PRE,
        Term::Sum(_) => SUM,
        Term::Res(..) => RES,
        Term::Par(..) => PAR,
    }
}

fn write_summand(out: &mut String, l: &Label, cont: &Term) {
    out.push_str(&l.to_string());
    if *cont != Term::Nil {
        out.push('.');
        write_term(out, cont, PRE);
    }
}

pub(crate) fn write_term(out: &mut String, t: &Term, required: u8) {
    let parens = level(t) < required;
    if parens {
        out.push('(');
    }
    match t {
        Term::Nil => out.push('0'),
        Term::Sum(s) => {
            for (k, (l, cont)) in s.iter().enumerate() {
                if k > 0 {
                    out.push_str(" + ");
                }
                write_summand(out, l, cont);
            }
        }
        Term::Res(body, a) => {
            write_term(out, body, RES);
            out.push_str(" \\ ");
            out.push_str(a);
        }
        Term::Par(l, r) => {
            write_term(out, l, PAR);
            out.push_str(" | ");
            write_term(out, r, SUM);
        }
    }
    if parens {
        out.push(')');
    }
}

pub(crate) const SUM_LEVEL: u8 = SUM;

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_term(&mut s, self, PAR);
        f.write_str(&s)
    }
}

pub fn free_names(t: &Term) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free(t, &mut out);
    out
}

fn collect_free(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Nil => {}
        Term::Sum(s) => {
            for (l, p) in s {
                if let Some(n) = l.name() {
                    out.insert(n.to_string());
                }
                collect_free(p, out);
            }
        }
        Term::Par(a, b) => {
            collect_free(a, out);
            collect_free(b, out);
        }
        Term::Res(p, a) => {
            let mut inner = BTreeSet::new();
            collect_free(p, &mut inner);
            inner.remove(a);
            out.extend(inner);
        }
    }
}

/// Every name occurring in the term, bound or free.
pub fn names(t: &Term) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_names(t, &mut out);
    out
}

fn collect_names(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Nil => {}
        Term::Sum(s) => {
            for (l, p) in s {
                if let Some(n) = l.name() {
                    out.insert(n.to_string());
                }
                collect_names(p, out);
            }
        }
        Term::Par(a, b) => {
            collect_names(a, out);
            collect_names(b, out);
        }
        Term::Res(p, a) => {
            out.insert(a.clone());
            collect_names(p, out);
        }
    }
}

/// Replaces free occurrences of `from` by `to`. The caller guarantees that
/// `to` is not bound anywhere inside `t`.
pub fn rename_free(t: &Term, from: &str, to: &str) -> Term {
    match t {
        Term::Nil => Term::Nil,
        Term::Sum(s) => Term::Sum(s.iter().map(|(l, p)| (l.renamed(from, to), rename_free(p, from, to))).collect()),
        Term::Par(a, b) => Term::par(rename_free(a, from, to), rename_free(b, from, to)),
        Term::Res(p, a) if a == from => t.clone(),
        Term::Res(p, a) => Term::res(rename_free(p, from, to), a.clone()),
    }
}

/// A name built from `base` that does not belong to `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let base = if base.is_empty() { "x" } else { base };
    (1..).map(|k| format!("{base}{k}")).find(|n| !avoid.contains(n)).expect("unbounded counter")
}

/// One-step derivatives under the standard forward CCS rules.
pub fn ccs_step(t: &Term) -> Vec<(Label, Term)> {
    let mut out: BTreeSet<(Label, Term)> = BTreeSet::new();
    match t {
        Term::Nil => {}
        Term::Sum(s) => {
            for (l, p) in s {
                out.insert((l.clone(), p.clone()));
            }
        }
        Term::Par(p, q) => {
            let sp = ccs_step(p);
            let sq = ccs_step(q);
            for (l, p2) in &sp {
                out.insert((l.clone(), Term::par(p2.clone(), (**q).clone())));
            }
            for (l, q2) in &sq {
                out.insert((l.clone(), Term::par((**p).clone(), q2.clone())));
            }
            for (l1, p2) in &sp {
                for (l2, q2) in &sq {
                    if l1.is_complement_of(l2) {
                        out.insert((Label::Tau, Term::par(p2.clone(), q2.clone())));
                    }
                }
            }
        }
        Term::Res(p, a) => {
            for (l, p2) in ccs_step(p) {
                if l.name() != Some(a.as_str()) {
                    out.insert((l, Term::res(p2, a.clone())));
                }
            }
        }
    }
    out.into_iter().collect()
}

pub fn barbs(t: &Term) -> BTreeSet<Label> {
    ccs_step(t).into_iter().map(|(l, _)| l).filter(|l| !l.is_tau()).collect()
}

/// A term with exactly one hole.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CcsContext {
    Hole,
    Prefix(Label, Box<CcsContext>),
    Par(Term, Box<CcsContext>),
    Res(Box<CcsContext>, String),
}

impl CcsContext {
    pub fn par(t: Term, c: CcsContext) -> CcsContext {
        CcsContext::Par(t, Box::new(c))
    }

    /// True for `[]` and for nestings of `P | [...]`.
    pub fn is_parallel_only(&self) -> bool {
        match self {
            CcsContext::Hole => true,
            CcsContext::Par(_, c) => c.is_parallel_only(),
            _ => false,
        }
    }
}

impl fmt::Display for CcsContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CcsContext::Hole => write!(f, "[]"),
            CcsContext::Prefix(l, c) => match **c {
                CcsContext::Hole => write!(f, "{l}.[]"),
                _ => write!(f, "{l}.({c})"),
            },
            CcsContext::Par(t, c) => {
                let mut s = String::new();
                write_term(&mut s, t, PAR);
                match **c {
                    CcsContext::Par(..) => write!(f, "{s} | ({c})"),
                    _ => write!(f, "{s} | {c}"),
                }
            }
            CcsContext::Res(c, a) => write!(f, "({c}) \\ {a}"),
        }
    }
}

/// Plain substitution of the hole: free names of `t` may be captured.
pub fn fill_context(c: &CcsContext, t: &Term) -> Term {
    match c {
        CcsContext::Hole => t.clone(),
        CcsContext::Prefix(l, c) => Term::prefix(l.clone(), fill_context(c, t)),
        CcsContext::Par(p, c) => Term::par(p.clone(), fill_context(c, t)),
        CcsContext::Res(c, a) => Term::res(fill_context(c, t), a.clone()),
    }
}

/// Drops restrictions on unused names and pushes restrictions through
/// prefixed sums whose prefixes do not mention the restricted name.
pub(crate) fn simplify(t: &Term) -> Term {
    match t {
        Term::Nil => Term::Nil,
        Term::Sum(s) => Term::Sum(s.iter().map(|(l, p)| (l.clone(), simplify(p))).collect()),
        Term::Par(a, b) => Term::par(simplify(a), simplify(b)),
        Term::Res(p, a) => push_res(simplify(p), a),
    }
}

pub(crate) fn push_res(p: Term, a: &str) -> Term {
    if !free_names(&p).contains(a) {
        return p;
    }
    match p {
        Term::Sum(s) if s.iter().all(|(l, _)| l.name() != Some(a)) => {
            Term::Sum(s.into_iter().map(|(l, q)| (l, push_res(q, a))).collect())
        }
        other => Term::res(other, a.to_string()),
    }
}

pub(crate) fn uniquify_binders(t: &Term, counter: &mut usize) -> Term {
    match t {
        Term::Nil => Term::Nil,
        Term::Sum(s) => Term::Sum(s.iter().map(|(l, p)| (l.clone(), uniquify_binders(p, counter))).collect()),
        Term::Par(a, b) => Term::par(uniquify_binders(a, counter), uniquify_binders(b, counter)),
        Term::Res(p, a) => {
            let tmp = format!("#{counter}");
            *counter += 1;
            Term::res(uniquify_binders(&rename_free(p, a, &tmp), counter), tmp)
        }
    }
}

/// Names binders after their nesting depth. Binders must already be unique.
pub(crate) fn depth_binders(t: &Term, depth: usize) -> Term {
    match t {
        Term::Nil => Term::Nil,
        Term::Sum(s) => Term::Sum(s.iter().map(|(l, p)| (l.clone(), depth_binders(p, depth))).collect()),
        Term::Par(a, b) => Term::par(depth_binders(a, depth), depth_binders(b, depth)),
        Term::Res(p, a) => {
            let name = format!("%{depth}");
            Term::res(depth_binders(&rename_free(p, a, &name), depth + 1), name)
        }
    }
}

pub(crate) fn sort_sums(t: &Term) -> Term {
    match t {
        Term::Nil => Term::Nil,
        Term::Sum(s) => {
            let mut s: Vec<_> = s.iter().map(|(l, p)| (l.clone(), sort_sums(p))).collect();
            s.sort();
            Term::Sum(s)
        }
        Term::Par(a, b) => Term::par(sort_sums(a), sort_sums(b)),
        Term::Res(p, a) => Term::res(sort_sums(p), a.clone()),
    }
}

pub(crate) fn canonical_at(t: &Term, depth: usize) -> Term {
    let mut counter = 0;
    let t = uniquify_binders(&simplify(t), &mut counter);
    sort_sums(&depth_binders(&t, depth))
}

/// Canonical representative: sums sorted, bound names renamed by depth,
/// unused restrictions dropped and restrictions pushed under prefixes.
pub fn canonical(t: &Term) -> Term {
    canonical_at(t, 0)
}

pub fn term_congruent(a: &Term, b: &Term) -> bool {
    canonical(a) == canonical(b)
}
