#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rccs::ccs::{self, Label, Term};
use rccs::confstruct::{self, ConfStruct, Config, EvLabel};
use rccs::encode::{self, encode_ccs};
use rccs::equiv;
use rccs::process::{self, Direction, Process, TransitionRecord};

pub fn t(s: &str) -> Term {
    Term::parse(s).unwrap()
}

pub fn enc(s: &str) -> ConfStruct {
    encode_ccs(&t(s)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const NAMES: [&str; 3] = ["a", "b", "c"];

fn label(r: &mut ChaCha8Rng, names: &[&str]) -> Label {
    let n = names[r.gen_range(0..names.len())].to_string();
    if r.gen_bool(0.7) {
        Label::In(n)
    } else {
        Label::Out(n)
    }
}

fn term(r: &mut ChaCha8Rng, budget: &mut usize, depth: usize, names: &[&str]) -> Term {
    if *budget == 0 || depth > 3 {
        return Term::Nil;
    }
    match r.gen_range(0..12) {
        0..=6 => {
            let k = if r.gen_bool(0.3) { 2 } else { 1 };
            let mut summands = Vec::new();
            for _ in 0..k {
                if *budget == 0 {
                    break;
                }
                *budget -= 1;
                let l = label(r, names);
                let cont = term(r, budget, depth + 1, names);
                summands.push((l, cont));
            }
            Term::sum(summands)
        }
        7..=9 => {
            let a = term(r, budget, depth + 1, names);
            let b = term(r, budget, depth + 1, names);
            Term::par(a, b)
        }
        10 => {
            let n = names[r.gen_range(0..names.len())];
            Term::res(term(r, budget, depth + 1, names), n)
        }
        _ => Term::Nil,
    }
}

/// A random term with at most `max_prefixes` prefixes whose encoding is
/// singly labelled.
pub fn singly_labelled_term(r: &mut ChaCha8Rng, max_prefixes: usize, names: &[&str]) -> Term {
    loop {
        let mut budget = r.gen_range(1..=max_prefixes);
        let p = term(r, &mut budget, 0, names);
        if encode::term_is_singly_labelled(&p).unwrap_or(false) {
            return p;
        }
    }
}

pub fn random_term(seed: u64) -> Term {
    singly_labelled_term(&mut rng(seed), 6, &NAMES)
}

/// A forward walk of at most `max_len` steps from `p`.
pub fn forward_walk(r: &mut ChaCha8Rng, p: &Term, max_len: usize) -> Vec<TransitionRecord> {
    let mut cur = Process::init(p.clone());
    let mut trace = Vec::new();
    let len = r.gen_range(0..=max_len);
    for _ in 0..len {
        let steps = process::fwd_steps(&cur);
        if steps.is_empty() {
            break;
        }
        let s = &steps[r.gen_range(0..steps.len())];
        trace.push(TransitionRecord::fwd(s.id, s.label.clone()));
        cur = s.target.clone();
    }
    trace
}

/// A mixed walk of at most `max_len` steps from `r0`.
pub fn mixed_walk(r: &mut ChaCha8Rng, r0: &Process, max_len: usize) -> Vec<TransitionRecord> {
    let mut cur = r0.clone();
    let mut trace = Vec::new();
    let len = r.gen_range(0..=max_len);
    for _ in 0..len {
        let mut steps: Vec<(Direction, process::Transition)> =
            process::fwd_steps(&cur).into_iter().map(|s| (Direction::Forward, s)).collect();
        steps.extend(process::bwd_steps(&cur).into_iter().map(|s| (Direction::Backward, s)));
        if steps.is_empty() {
            break;
        }
        let (dir, s) = steps.swap_remove(r.gen_range(0..steps.len()));
        trace.push(TransitionRecord { dir, id: s.id, label: s.label.clone() });
        cur = s.target;
    }
    trace
}

/// A random coherent process together with its origin term and the
/// forward trace reaching it.
pub struct Sample {
    pub origin: Term,
    pub trace: Vec<TransitionRecord>,
    pub process: Process,
}

pub fn sample(seed: u64) -> Sample {
    let mut r = rng(seed);
    let origin = singly_labelled_term(&mut r, 6, &NAMES);
    let trace = forward_walk(&mut r, &origin, 5);
    let process = process::replay(&Process::init(origin.clone()), &trace).unwrap();
    Sample { origin, trace, process }
}

fn ctx(s: &Sample) -> String {
    let tr: Vec<String> = s.trace.iter().map(|x| x.to_string()).collect();
    format!("origin {} trace [{}]", s.origin, tr.join(", "))
}

fn step_events(steps: Vec<(usize, Config)>) -> BTreeSet<usize> {
    steps.into_iter().map(|(e, _)| e).collect()
}

/// Forward and backward transitions of a process match the configuration
/// steps at its address, with labels and residuals.
pub fn check_correspondence(s: &Sample) -> Result<(), String> {
    let origin = Process::init(s.origin.clone());
    let addr = encode::encode_along(&origin, &s.trace).map_err(|e| format!("{}: {e}", ctx(s)))?;
    let c = &addr.structure;
    let x = addr.at;
    let r = &s.process;

    let mut fwd_events = BTreeSet::new();
    for step in process::fwd_steps(r) {
        let mut longer = s.trace.clone();
        longer.push(TransitionRecord::fwd(step.id, step.label.clone()));
        let a2 = encode::encode_along(&origin, &longer).map_err(|e| format!("{}: +{}: {e}", ctx(s), step.label))?;
        let added = a2.at.minus(x);
        if !x.is_subset(a2.at) || added.len() != 1 {
            return Err(format!("{}: forward {} is not a single event", ctx(s), step.label));
        }
        let e = added.iter().next().unwrap();
        if c.label(e) != &EvLabel::Act(step.label.clone()) {
            return Err(format!("{}: forward {} hits event labelled {}", ctx(s), step.label, c.label(e)));
        }
        let want = encode_ccs(&process::erase(&step.target)).unwrap();
        if !confstruct::iso(&encode::residual(c, a2.at), &want) {
            return Err(format!("{}: residual after +{} differs", ctx(s), step.label));
        }
        fwd_events.insert(e);
    }
    if fwd_events != step_events(c.config_steps(x)) {
        return Err(format!("{}: forward steps do not cover the enabled events", ctx(s)));
    }

    let mut bwd_events = BTreeSet::new();
    for step in process::bwd_steps(r) {
        let Some(&e) = addr.id_match.get(&step.id) else {
            return Err(format!("{}: identifier {} has no event", ctx(s), step.id));
        };
        let y = x.without(e);
        if !x.contains(e) || !c.is_config(y) || c.label(e) != &EvLabel::Act(step.label.clone()) {
            return Err(format!("{}: backward {}:{} has no matching backstep", ctx(s), step.id, step.label));
        }
        let want = encode_ccs(&process::erase(&step.target)).unwrap();
        if !confstruct::iso(&encode::residual(c, y), &want) {
            return Err(format!("{}: residual after -{} differs", ctx(s), step.id));
        }
        bwd_events.insert(e);
    }
    if bwd_events != step_events(c.config_backsteps(x)) {
        return Err(format!("{}: backward steps do not cover the removable events", ctx(s)));
    }
    Ok(())
}

/// A mixed trace from a coherent process rearranges into backward steps
/// followed by forward steps with a congruent target.
pub fn check_parabolic(seed: u64) -> Result<(), String> {
    let s = sample(seed);
    let mut r = rng(seed ^ 0x5eed);
    let trace = mixed_walk(&mut r, &s.process, 8);
    let para = process::rearrange_parabolic(&s.process, &trace).map_err(|e| e.to_string())?;
    let first_fwd = para.iter().position(|x| x.dir == Direction::Forward).unwrap_or(para.len());
    if para[first_fwd..].iter().any(|x| x.dir == Direction::Backward) {
        return Err(format!("{}: not parabolic", ctx(&s)));
    }
    let a = process::replay(&s.process, &trace).map_err(|e| e.to_string())?;
    let b = process::replay(&s.process, &para).map_err(|e| format!("{}: {e}", ctx(&s)))?;
    if !process::congruent(&a, &b) {
        return Err(format!("{}: targets {a} and {b} differ", ctx(&s)));
    }
    Ok(())
}

/// Every maximal rollback ends at the same origin.
pub fn check_unique_origin(s: &Sample) -> Result<(), String> {
    let ends = process::all_rollback_ends(&s.process);
    let want = Process::init(s.origin.clone());
    if ends.is_empty() || !ends.iter().all(|e| process::congruent(e, &want)) {
        let shown: Vec<String> = ends.iter().map(|e| e.to_string()).collect();
        return Err(format!("{}: rollback ends {:?}", ctx(s), shown));
    }
    match process::origin(&s.process) {
        Ok(o) if process::congruent(&o, &want) => Ok(()),
        other => Err(format!("{}: origin {:?}", ctx(s), other.map(|o| o.to_string()))),
    }
}

/// Forward steps of a process and CCS steps of its erasure match.
pub fn check_erase(s: &Sample) -> Result<(), String> {
    let r = &s.process;
    let ccs_steps = ccs::ccs_step(&process::erase(r));
    let rccs_steps = process::fwd_steps(r);
    for st in &rccs_steps {
        let e = process::erase(&st.target);
        if !ccs_steps.iter().any(|(l, u)| *l == st.label && ccs::term_congruent(u, &e)) {
            return Err(format!("{}: forward {} -> {} has no CCS step", ctx(s), st.label, e));
        }
    }
    for (l, u) in &ccs_steps {
        if !rccs_steps.iter().any(|st| st.label == *l && ccs::term_congruent(u, &process::erase(&st.target))) {
            return Err(format!("{}: CCS step {l} -> {u} has no forward step", ctx(s)));
        }
    }
    Ok(())
}

pub fn random_pair(seed: u64) -> (Term, Term) {
    let mut r = rng(seed);
    let names = ["a", "b"];
    let p = singly_labelled_term(&mut r, 5, &names);
    let q = singly_labelled_term(&mut r, 5, &names);
    (p, q)
}

/// The two back-and-forth barbed checkers agree.
pub fn check_cross(p: &Term, q: &Term) -> Result<bool, String> {
    let a = equiv::rccs_bfb_bisim(&Process::init(p.clone()), &Process::init(q.clone())).equivalent;
    let b = equiv::cs_bfb_barbed_bisim(&encode_ccs(p).unwrap(), &encode_ccs(q).unwrap()).equivalent;
    if a != b {
        return Err(format!("{p} vs {q}: processes say {a}, structures say {b}"));
    }
    Ok(a)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

fn has_concurrent_pair(c: &ConfStruct, x: Config) -> bool {
    let es: Vec<usize> = x.iter().collect();
    es.iter().enumerate().any(|(k, &e)| es[k + 1..].iter().any(|&f| !c.causes(x, e, f) && !c.causes(x, f, e)))
}

/// Every reordering of the forward trace that rebuilds the same process
/// lands on the same configuration. Congruence allows identifiers to be
/// renamed, so the identifier matching may differ. Returns whether the
/// sample had two concurrent past events.
pub fn check_trace_order(s: &Sample) -> Result<bool, String> {
    let origin = Process::init(s.origin.clone());
    let addr = encode::encode_along(&origin, &s.trace).map_err(|e| format!("{}: {e}", ctx(s)))?;
    if !has_concurrent_pair(&addr.structure, addr.at) {
        return Ok(false);
    }
    let mut same_history = 0;
    for perm in permutations(s.trace.len()) {
        let tr: Vec<TransitionRecord> = perm.iter().map(|&k| s.trace[k].clone()).collect();
        match process::replay(&origin, &tr) {
            Ok(end) if process::congruent(&end, &s.process) => {}
            _ => continue,
        }
        same_history += 1;
        let a2 = encode::encode_along(&origin, &tr).map_err(|e| format!("{}: {e}", ctx(s)))?;
        if a2.at != addr.at {
            return Err(format!("{}: reordering {:?} lands elsewhere", ctx(s), perm));
        }
    }
    if same_history < 2 {
        return Err(format!("{}: concurrent events but only {same_history} ordering", ctx(s)));
    }
    Ok(true)
}

/// Pairs checked against the main theorem.
pub fn theorem_corpus() -> Vec<(Term, Term)> {
    let fixed = [
        ("a | b", "a.b + b.a"),
        ("a.(b + c)", "a.b + c"),
        ("a.(b | c)", "a.(b.c + c.b)"),
        ("a.(b | c)", "a.(c | b)"),
        ("a | b", "b | a"),
        ("a.b", "a.b"),
        ("a.b", "b.a"),
        ("a + b", "b + a"),
        ("a + b", "a | b"),
        ("(a | !a) \\ a", "(b | !b) \\ b"),
        ("(a.b | !a) \\ a", "(c.b | !c) \\ c"),
        ("a.b + c", "a.b + c.d"),
        ("a | !b", "a.!b + !b.a"),
        ("a.(b + c)", "a.(c + b)"),
        ("(c | !c) \\ c | a", "a"),
        ("a.b | c", "c | a.b"),
    ];
    let mut out: Vec<(Term, Term)> = fixed.iter().map(|(p, q)| (t(p), t(q))).collect();
    let mut seed = 0;
    while out.len() < 24 {
        let (p, q) = random_pair(1000 + seed);
        seed += 1;
        if encode_ccs(&p).unwrap().len() <= 6 && encode_ccs(&q).unwrap().len() <= 6 {
            out.push((p, q));
        }
    }
    out
}
