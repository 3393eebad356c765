//! Equivalence checkers: hereditary history preserving bisimulation, its
//! level-indexed approximations, back-and-forth barbed bisimulations on
//! terms, processes and structures, and bounded congruence checks.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ccs::{self, CcsContext, Label, Term};
use crate::confstruct::{ConfError, ConfStruct, Config};
use crate::encode::{self, EncodeError};
use crate::process::{self, Process, RccsError};

/// A configuration pair with a bijection between them, `f` sorted by left event.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub x1: Config,
    pub x2: Config,
    pub f: Vec<(usize, usize)>,
}

impl Triple {
    pub fn root() -> Triple {
        Triple { x1: Config::EMPTY, x2: Config::EMPTY, f: Vec::new() }
    }

    pub fn image(&self, e1: usize) -> Option<usize> {
        self.f.iter().find(|p| p.0 == e1).map(|p| p.1)
    }

    pub fn preimage(&self, e2: usize) -> Option<usize> {
        self.f.iter().find(|p| p.1 == e2).map(|p| p.0)
    }

    fn extended(&self, e1: usize, e2: usize) -> Triple {
        let mut f = self.f.clone();
        f.push((e1, e2));
        f.sort_unstable();
        Triple { x1: self.x1.with(e1), x2: self.x2.with(e2), f }
    }

    fn without(&self, e1: usize, e2: usize) -> Triple {
        Triple {
            x1: self.x1.without(e1),
            x2: self.x2.without(e2),
            f: self.f.iter().copied().filter(|p| *p != (e1, e2)).collect(),
        }
    }

    pub fn describe(&self, a: &ConfStruct, b: &ConfStruct) -> String {
        let set = |c: &ConfStruct, x: Config| format!("{{{}}}", c.names(x).join(","));
        let pairs: Vec<String> =
            self.f.iter().map(|(e1, e2)| format!("{}->{}", a.events[*e1].ident, b.events[*e2].ident)).collect();
        format!("({}, {}, {{{}}})", set(a, self.x1), set(b, self.x2), pairs.join(","))
    }
}

/// Checks that `f` maps the causal order of `x1` into that of `x2`, and back
/// when `both` is set.
pub fn order_preserving(a: &ConfStruct, b: &ConfStruct, t: &Triple, both: bool) -> bool {
    let d1 = a.down_sets(t.x1);
    let d2 = b.down_sets(t.x2);
    t.f.iter().all(|&(e, fe)| {
        t.f.iter().all(|&(e2, fe2)| {
            let left = d1[e2].contains(e);
            let right = d2[fe2].contains(fe);
            if both {
                left == right
            } else {
                !left || right
            }
        })
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Move {
    pub side: Side,
    pub backward: bool,
    pub event: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlayStep {
    pub position: Triple,
    pub attack: Move,
    /// The defender's most resilient answer, if any exists.
    pub answer: Option<Triple>,
}

#[derive(Clone, Debug)]
pub struct HhpbOutcome {
    pub equivalent: bool,
    /// Triples of the greatest bisimulation reachable from the root.
    pub witness: Vec<Triple>,
    /// A shortest play the defender loses; empty when equivalent.
    pub losing_play: Vec<PlayStep>,
}

impl HhpbOutcome {
    pub fn ends_with_backward_move(&self) -> bool {
        self.losing_play.last().is_some_and(|s| s.attack.backward)
    }

    pub fn verdict(&self, a: &ConfStruct, b: &ConfStruct) -> Verdict {
        if self.equivalent {
            let w: Vec<String> = self.witness.iter().map(|t| t.describe(a, b)).collect();
            Verdict::new(VerdictKind::Equivalent, json!({ "triples": w }))
        } else {
            let play: Vec<Value> = self
                .losing_play
                .iter()
                .map(|s| {
                    let (c, name) = match s.attack.side {
                        Side::Left => (a, "left"),
                        Side::Right => (b, "right"),
                    };
                    json!({
                        "position": s.position.describe(a, b),
                        "attack": format!(
                            "{} {} {} ({})",
                            name,
                            if s.attack.backward { "undoes" } else { "does" },
                            c.label(s.attack.event),
                            c.events[s.attack.event].ident
                        ),
                        "answer": s.answer.as_ref().map(|t| t.describe(a, b)),
                    })
                })
                .collect();
            Verdict::new(
                VerdictKind::Distinguished,
                json!({ "play": play, "backward": self.ends_with_backward_move() }),
            )
        }
    }
}

fn hhpb_moves(a: &ConfStruct, b: &ConfStruct, t: &Triple) -> Vec<(Move, Vec<Triple>)> {
    let mut out = Vec::new();
    for (e1, _) in a.config_steps(t.x1) {
        let answers = b
            .config_steps(t.x2)
            .into_iter()
            .filter(|(e2, _)| a.label(e1) == b.label(*e2))
            .map(|(e2, _)| t.extended(e1, e2))
            .collect();
        out.push((Move { side: Side::Left, backward: false, event: e1 }, answers));
    }
    for (e2, _) in b.config_steps(t.x2) {
        let answers = a
            .config_steps(t.x1)
            .into_iter()
            .filter(|(e1, _)| a.label(*e1) == b.label(e2))
            .map(|(e1, _)| t.extended(e1, e2))
            .collect();
        out.push((Move { side: Side::Right, backward: false, event: e2 }, answers));
    }
    for (e1, _) in a.config_backsteps(t.x1) {
        let e2 = t.image(e1).expect("bijection");
        let answers = if b.is_config(t.x2.without(e2)) { vec![t.without(e1, e2)] } else { vec![] };
        out.push((Move { side: Side::Left, backward: true, event: e1 }, answers));
    }
    for (e2, _) in b.config_backsteps(t.x2) {
        let e1 = t.preimage(e2).expect("bijection");
        let answers = if a.is_config(t.x1.without(e1)) { vec![t.without(e1, e2)] } else { vec![] };
        out.push((Move { side: Side::Right, backward: true, event: e2 }, answers));
    }
    out
}

/// Decides hereditary history preserving bisimilarity by computing the
/// greatest bisimulation over the triples reachable from `(∅, ∅, ∅)`.
///
/// Moves only require label-preserving bijections: with backward moves in
/// the game, every surviving bijection is also an order isomorphism.
pub fn hhpb(a: &ConfStruct, b: &ConfStruct) -> HhpbOutcome {
    let mut index: HashMap<Triple, usize> = HashMap::new();
    let mut nodes = vec![Triple::root()];
    index.insert(Triple::root(), 0);
    let mut moves: Vec<Vec<(Move, Vec<usize>)>> = Vec::new();
    let mut k = 0;
    while k < nodes.len() {
        let t = nodes[k].clone();
        let mut ms = Vec::new();
        for (m, answers) in hhpb_moves(a, b, &t) {
            let ids = answers
                .into_iter()
                .map(|ans| {
                    *index.entry(ans.clone()).or_insert_with(|| {
                        nodes.push(ans);
                        nodes.len() - 1
                    })
                })
                .collect();
            ms.push((m, ids));
        }
        moves.push(ms);
        k += 1;
    }
    // killed[i] = (round, index of the unanswerable move)
    let mut killed: Vec<Option<(usize, usize)>> = vec![None; nodes.len()];
    let mut round = 0;
    loop {
        round += 1;
        let newly: Vec<(usize, usize)> = (0..nodes.len())
            .filter(|&i| killed[i].is_none())
            .filter_map(|i| {
                moves[i].iter().position(|(_, ans)| ans.iter().all(|j| killed[*j].is_some())).map(|m| (i, m))
            })
            .collect();
        if newly.is_empty() {
            break;
        }
        for (i, m) in newly {
            killed[i] = Some((round, m));
        }
    }
    let mut losing_play = Vec::new();
    let mut cur = 0;
    while let Some((_, m)) = killed[cur] {
        let (attack, answers) = &moves[cur][m];
        let best = answers.iter().copied().max_by_key(|j| killed[*j].map(|k| k.0));
        losing_play.push(PlayStep {
            position: nodes[cur].clone(),
            attack: *attack,
            answer: best.map(|j| nodes[j].clone()),
        });
        match best {
            Some(j) => cur = j,
            None => break,
        }
    }
    let witness = if killed[0].is_none() {
        (0..nodes.len()).filter(|i| killed[*i].is_none()).map(|i| nodes[i].clone()).collect()
    } else {
        Vec::new()
    };
    HhpbOutcome { equivalent: killed[0].is_none(), witness, losing_play }
}

/// Level-indexed approximations, indexed by configuration size.
#[derive(Clone, Debug, Default)]
pub struct Levels {
    /// One-sided families: only the left structure's moves are challenged
    /// and `f` need only map causal order forwards.
    pub forward: Vec<BTreeSet<Triple>>,
    pub backward: Vec<BTreeSet<Triple>>,
    /// Both structures' moves are challenged and `f` is an order isomorphism.
    pub sym_forward: Vec<BTreeSet<Triple>>,
    pub sym_backward: Vec<BTreeSet<Triple>>,
}

impl Levels {
    pub fn sizes(&self) -> Value {
        let s = |v: &Vec<BTreeSet<Triple>>| v.iter().map(|l| l.len()).collect::<Vec<_>>();
        json!({
            "F": s(&self.forward),
            "B": s(&self.backward),
            "F_sym": s(&self.sym_forward),
            "B_sym": s(&self.sym_backward),
        })
    }

    pub fn to_json(&self, a: &ConfStruct, b: &ConfStruct) -> Value {
        let d = |v: &Vec<BTreeSet<Triple>>| {
            v.iter().map(|l| l.iter().map(|t| t.describe(a, b)).collect::<Vec<_>>()).collect::<Vec<_>>()
        };
        json!({
            "F": d(&self.forward),
            "B": d(&self.backward),
            "F_sym": d(&self.sym_forward),
            "B_sym": d(&self.sym_backward),
        })
    }
}

fn bijections(a: &ConfStruct, b: &ConfStruct, x1: Config, x2: Config) -> Vec<Vec<(usize, usize)>> {
    let left: Vec<usize> = x1.iter().collect();
    let right: Vec<usize> = x2.iter().collect();
    let mut out = Vec::new();
    fn go(
        a: &ConfStruct,
        b: &ConfStruct,
        left: &[usize],
        right: &[usize],
        used: &mut Vec<bool>,
        acc: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        let k = acc.len();
        if k == left.len() {
            out.push(acc.clone());
            return;
        }
        for (j, &e2) in right.iter().enumerate() {
            if !used[j] && a.label(left[k]) == b.label(e2) {
                used[j] = true;
                acc.push((left[k], e2));
                go(a, b, left, right, used, acc, out);
                acc.pop();
                used[j] = false;
            }
        }
    }
    if left.len() == right.len() {
        go(a, b, &left, &right, &mut vec![false; right.len()], &mut Vec::new(), &mut out);
    }
    out
}

fn level_candidates(a: &ConfStruct, b: &ConfStruct, i: usize, both: bool) -> Vec<Triple> {
    let mut out = Vec::new();
    for x1 in a.configs.iter().filter(|x| x.len() == i) {
        for x2 in b.configs.iter().filter(|x| x.len() == i) {
            for f in bijections(a, b, *x1, *x2) {
                let t = Triple { x1: *x1, x2: *x2, f };
                if order_preserving(a, b, &t, both) {
                    out.push(t);
                }
            }
        }
    }
    out
}

fn forward_matched(a: &ConfStruct, b: &ConfStruct, t: &Triple, next: &BTreeSet<Triple>, left: bool) -> bool {
    if left {
        a.config_steps(t.x1).into_iter().all(|(e1, _)| {
            b.config_steps(t.x2)
                .into_iter()
                .any(|(e2, _)| a.label(e1) == b.label(e2) && next.contains(&t.extended(e1, e2)))
        })
    } else {
        b.config_steps(t.x2).into_iter().all(|(e2, _)| {
            a.config_steps(t.x1)
                .into_iter()
                .any(|(e1, _)| a.label(e1) == b.label(e2) && next.contains(&t.extended(e1, e2)))
        })
    }
}

fn backward_matched(a: &ConfStruct, b: &ConfStruct, t: &Triple, prev: &BTreeSet<Triple>, left: bool) -> bool {
    if left {
        a.config_backsteps(t.x1).into_iter().all(|(e1, _)| {
            let e2 = t.image(e1).expect("bijection");
            b.is_config(t.x2.without(e2)) && prev.contains(&t.without(e1, e2))
        })
    } else {
        b.config_backsteps(t.x2).into_iter().all(|(e2, _)| {
            let e1 = t.preimage(e2).expect("bijection");
            a.is_config(t.x1.without(e1)) && prev.contains(&t.without(e1, e2))
        })
    }
}

/// Computes the forward families from the largest configurations down and
/// the backward families from the empty configuration up.
pub fn forw_backw_levels(a: &ConfStruct, b: &ConfStruct) -> Levels {
    let top = a.configs.iter().chain(b.configs.iter()).map(|x| x.len()).max().unwrap_or(0);
    let mut levels = Levels::default();
    for both in [false, true] {
        let cands: Vec<Vec<Triple>> = (0..=top).map(|i| level_candidates(a, b, i, both)).collect();
        let mut fw: Vec<BTreeSet<Triple>> = vec![BTreeSet::new(); top + 2];
        for i in (0..=top).rev() {
            let next = fw[i + 1].clone();
            fw[i] = cands[i]
                .iter()
                .filter(|t| {
                    let max1 = a.config_steps(t.x1).is_empty();
                    let max2 = b.config_steps(t.x2).is_empty();
                    if max1 && max2 {
                        return true;
                    }
                    if max1 || (both && max2) {
                        return false;
                    }
                    forward_matched(a, b, t, &next, true) && (!both || forward_matched(a, b, t, &next, false))
                })
                .cloned()
                .collect();
        }
        fw.truncate(top + 1);
        let mut bw: Vec<BTreeSet<Triple>> = Vec::new();
        for i in 0..=top {
            let layer = if i == 0 {
                fw[0].clone()
            } else {
                let prev: BTreeSet<Triple> = fw[i - 1].intersection(&bw[i - 1]).cloned().collect();
                fw[i]
                    .iter()
                    .filter(|t| {
                        backward_matched(a, b, t, &prev, true) && (!both || backward_matched(a, b, t, &prev, false))
                    })
                    .cloned()
                    .collect()
            };
            bw.push(layer);
        }
        if both {
            levels.sym_forward = fw;
            levels.sym_backward = bw;
        } else {
            levels.forward = fw;
            levels.backward = bw;
        }
    }
    levels
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictKind {
    Equivalent,
    Distinguished,
    BoundedEquivalent,
}

/// Serialises as `{"verdict": ..., "evidence": ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub verdict: VerdictKind,
    pub evidence: Value,
}

impl Verdict {
    pub fn new(verdict: VerdictKind, evidence: Value) -> Verdict {
        Verdict { verdict, evidence }
    }

    pub fn is_distinguished(&self) -> bool {
        self.verdict == VerdictKind::Distinguished
    }
}

/// A finite state graph for the barbed bisimulation game.
struct Graph<S> {
    states: Vec<S>,
    barbs: Vec<BTreeSet<Label>>,
    fwd: Vec<Vec<usize>>,
    bwd: Vec<Vec<usize>>,
}

fn explore<S: Ord + Clone>(
    start: S,
    succ: impl Fn(&S) -> (Vec<S>, Vec<S>),
    barbs: impl Fn(&S) -> BTreeSet<Label>,
) -> Graph<S> {
    let mut index: BTreeMap<S, usize> = BTreeMap::new();
    let mut g = Graph { states: vec![start.clone()], barbs: Vec::new(), fwd: Vec::new(), bwd: Vec::new() };
    index.insert(start, 0);
    let mut k = 0;
    while k < g.states.len() {
        let s = g.states[k].clone();
        let (f, b) = succ(&s);
        let mut intern = |t: S, states: &mut Vec<S>| {
            *index.entry(t.clone()).or_insert_with(|| {
                states.push(t);
                states.len() - 1
            })
        };
        let f: Vec<usize> = f.into_iter().map(|t| intern(t, &mut g.states)).collect();
        let b: Vec<usize> = b.into_iter().map(|t| intern(t, &mut g.states)).collect();
        g.barbs.push(barbs(&s));
        g.fwd.push(f);
        g.bwd.push(b);
        k += 1;
    }
    g
}

#[derive(Clone, Debug)]
pub struct BisimOutcome {
    pub equivalent: bool,
    /// Number of state pairs in the greatest bisimulation.
    pub relation_size: usize,
    /// A losing play for the defender, one line per move.
    pub evidence: Vec<String>,
}

impl BisimOutcome {
    pub fn verdict(&self) -> Verdict {
        if self.equivalent {
            Verdict::new(VerdictKind::Equivalent, json!({ "related_pairs": self.relation_size }))
        } else {
            Verdict::new(VerdictKind::Distinguished, json!({ "play": self.evidence }))
        }
    }
}

fn barbs_text(b: &BTreeSet<Label>) -> String {
    let v: Vec<String> = b.iter().map(|l| l.to_string()).collect();
    format!("{{{}}}", v.join(","))
}

fn bisim<S, T>(
    g1: &Graph<S>,
    g2: &Graph<T>,
    show1: impl Fn(&S) -> String,
    show2: impl Fn(&T) -> String,
) -> BisimOutcome {
    let n1 = g1.states.len();
    let n2 = g2.states.len();
    let idx = |i: usize, j: usize| i * n2 + j;
    // Per pair: (round, attack) where attack = (side is left, backward, target).
    let mut killed: Vec<Option<(usize, Option<(bool, bool, usize)>)>> = vec![None; n1 * n2];
    for i in 0..n1 {
        for j in 0..n2 {
            if g1.barbs[i] != g2.barbs[j] {
                killed[idx(i, j)] = Some((0, None));
            }
        }
    }
    let mut round = 0;
    loop {
        round += 1;
        let mut newly = Vec::new();
        for i in 0..n1 {
            for j in 0..n2 {
                if killed[idx(i, j)].is_some() {
                    continue;
                }
                let attack = (|| {
                    for (backward, l1, l2) in [(false, &g1.fwd, &g2.fwd), (true, &g1.bwd, &g2.bwd)] {
                        for &i2 in &l1[i] {
                            if l2[j].iter().all(|&j2| killed[idx(i2, j2)].is_some()) {
                                return Some((true, backward, i2));
                            }
                        }
                        for &j2 in &l2[j] {
                            if l1[i].iter().all(|&i2| killed[idx(i2, j2)].is_some()) {
                                return Some((false, backward, j2));
                            }
                        }
                    }
                    None
                })();
                if let Some(a) = attack {
                    newly.push((idx(i, j), a));
                }
            }
        }
        if newly.is_empty() {
            break;
        }
        for (p, a) in newly {
            killed[p] = Some((round, Some(a)));
        }
    }
    let mut evidence = Vec::new();
    let (mut i, mut j) = (0, 0);
    while let Some((_, attack)) = killed[idx(i, j)] {
        let Some((left, backward, target)) = attack else {
            evidence.push(format!(
                "barbs differ: `{}` offers {}, `{}` offers {}",
                show1(&g1.states[i]),
                barbs_text(&g1.barbs[i]),
                show2(&g2.states[j]),
                barbs_text(&g2.barbs[j])
            ));
            break;
        };
        let dir = if backward { "backward" } else { "forward" };
        let rank = |p: usize| killed[p].map(|k| k.0);
        if left {
            let answers = if backward { &g2.bwd[j] } else { &g2.fwd[j] };
            evidence.push(format!("left moves {dir} tau to `{}`", show1(&g1.states[target])));
            match answers.iter().copied().max_by_key(|&j2| rank(idx(target, j2))) {
                Some(j2) => {
                    evidence.push(format!("right answers with `{}`", show2(&g2.states[j2])));
                    (i, j) = (target, j2);
                }
                None => {
                    evidence.push("right cannot answer".into());
                    break;
                }
            }
        } else {
            let answers = if backward { &g1.bwd[i] } else { &g1.fwd[i] };
            evidence.push(format!("right moves {dir} tau to `{}`", show2(&g2.states[target])));
            match answers.iter().copied().max_by_key(|&i2| rank(idx(i2, target))) {
                Some(i2) => {
                    evidence.push(format!("left answers with `{}`", show1(&g1.states[i2])));
                    (i, j) = (i2, target);
                }
                None => {
                    evidence.push("left cannot answer".into());
                    break;
                }
            }
        }
    }
    BisimOutcome {
        equivalent: killed[0].is_none(),
        relation_size: killed.iter().filter(|k| k.is_none()).count(),
        evidence,
    }
}

/// Strong barbed bisimulation over τ-reductions of CCS terms.
pub fn ccs_barbed_bisim(p: &Term, q: &Term) -> BisimOutcome {
    let graph = |t: &Term| {
        explore(
            ccs::canonical(t),
            |s| {
                let f =
                    ccs::ccs_step(s).into_iter().filter(|(l, _)| l.is_tau()).map(|(_, t)| ccs::canonical(&t)).collect();
                (f, Vec::new())
            },
            ccs::barbs,
        )
    };
    bisim(&graph(p), &graph(q), |s| s.to_string(), |s| s.to_string())
}

fn rccs_graph(r: &Process) -> Graph<Process> {
    explore(
        process::normal_form(r),
        |s| {
            let tau = |v: Vec<process::Transition>| {
                v.into_iter().filter(|t| t.label.is_tau()).map(|t| process::normal_form(&t.target)).collect::<Vec<_>>()
            };
            (tau(process::fwd_steps(s)), tau(process::bwd_steps(s)))
        },
        process::rccs_barbs,
    )
}

/// Back-and-forth barbed bisimulation on RCCS processes: forward and
/// backward τ-steps are matched in kind and forward barbs must agree.
pub fn rccs_bfb_bisim(r: &Process, s: &Process) -> BisimOutcome {
    bisim(&rccs_graph(r), &rccs_graph(s), |p| p.to_string(), |p| p.to_string())
}

fn cs_graph(c: &ConfStruct) -> Graph<Config> {
    explore(
        Config::EMPTY,
        |x| {
            let tau =
                |v: Vec<(usize, Config)>| v.into_iter().filter(|(e, _)| c.label(*e).is_tau()).map(|(_, y)| y).collect();
            (tau(c.config_steps(*x)), tau(c.config_backsteps(*x)))
        },
        |x| c.barbs_at(*x),
    )
}

/// Back-and-forth barbed bisimulation on configuration structures.
pub fn cs_bfb_barbed_bisim(a: &ConfStruct, b: &ConfStruct) -> BisimOutcome {
    let show = |c: &ConfStruct| {
        let c = c.clone();
        move |x: &Config| format!("{{{}}}", c.names(*x).join(","))
    };
    bisim(&cs_graph(a), &cs_graph(b), show(a), show(b))
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EquivError {
    #[error("event {0} is labelled tau and has no complement")]
    TauEventInConfig(String),
    #[error(transparent)]
    Rccs(#[from] RccsError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Conf(#[from] ConfError),
    #[error("`{0}` is not singly labelled")]
    NotSinglyLabelled(String),
}

/// Names `c0, c1, ...` not in `avoid`.
fn fresh_names(avoid: &BTreeSet<String>) -> impl Iterator<Item = String> + '_ {
    (0..).map(|k| format!("c{k}")).filter(move |n| !avoid.contains(n))
}

/// `(!l1 + c0) | ... | (!ln + c(n-1)) | []` over the events of `x`, in index order.
pub fn discriminating_context(c: &ConfStruct, x: Config, avoid: &BTreeSet<String>) -> Result<CcsContext, EquivError> {
    let mut names = fresh_names(avoid);
    let mut guards = Vec::new();
    for e in x.iter() {
        let l = match c.label(e).act() {
            Some(l) if !l.is_tau() => l.clone(),
            _ => return Err(EquivError::TauEventInConfig(c.events[e].ident.to_string())),
        };
        let fresh = Label::In(names.next().expect("infinite"));
        guards.push(Term::Sum(vec![(l.complement().expect("visible label"), Term::Nil), (fresh, Term::Nil)]));
    }
    let mut it = guards.into_iter();
    Ok(match it.next() {
        None => CcsContext::Hole,
        Some(first) => CcsContext::par(it.fold(first, Term::par), CcsContext::Hole),
    })
}

#[derive(Clone, Debug)]
pub struct BoundedOutcome {
    pub equivalent_on_all: bool,
    pub contexts_checked: usize,
    pub separating_context: Option<String>,
    pub evidence: Vec<String>,
}

impl BoundedOutcome {
    pub fn verdict(&self) -> Verdict {
        if self.equivalent_on_all {
            Verdict::new(VerdictKind::BoundedEquivalent, json!({ "contexts_checked": self.contexts_checked }))
        } else {
            Verdict::new(
                VerdictKind::Distinguished,
                json!({
                    "context": self.separating_context,
                    "play": self.evidence,
                }),
            )
        }
    }
}

/// Compares the origins of `r` and `s` under each context with
/// [`rccs_bfb_bisim`]; a positive answer only covers the given contexts.
pub fn bounded_congruence(r: &Process, s: &Process, contexts: &[CcsContext]) -> Result<BoundedOutcome, EquivError> {
    let or = process::origin(r)?;
    let os = process::origin(s)?;
    for (k, c) in contexts.iter().enumerate() {
        let out = rccs_bfb_bisim(&process::instantiate_context(c, &or)?, &process::instantiate_context(c, &os)?);
        if !out.equivalent {
            return Ok(BoundedOutcome {
                equivalent_on_all: false,
                contexts_checked: k + 1,
                separating_context: Some(c.to_string()),
                evidence: out.evidence,
            });
        }
    }
    Ok(BoundedOutcome {
        equivalent_on_all: true,
        contexts_checked: contexts.len(),
        separating_context: None,
        evidence: vec![],
    })
}

fn visible_labels(t: &Term) -> BTreeSet<Label> {
    fn go(t: &Term, out: &mut BTreeSet<Label>) {
        match t {
            Term::Nil => {}
            Term::Sum(s) => {
                for (l, c) in s {
                    if !l.is_tau() {
                        out.insert(l.clone());
                    }
                    go(c, out);
                }
            }
            Term::Par(p, q) => {
                go(p, out);
                go(q, out);
            }
            Term::Res(p, _) => go(p, out),
        }
    }
    let mut out = BTreeSet::new();
    go(t, &mut out);
    out
}

/// Parallel contexts up to `depth` nested components, each component being
/// a complemented label, two of them in sequence, or one guarded by a fresh
/// name; the first level uses all three shapes, deeper levels only the
/// last two.
pub fn enumerate_parallel_contexts(
    labels: &BTreeSet<Label>,
    avoid: &BTreeSet<String>,
    depth: usize,
) -> Vec<CcsContext> {
    let fresh = Label::In(fresh_names(avoid).next().expect("infinite"));
    let atoms: Vec<Label> = labels.iter().filter_map(|l| l.complement()).collect();
    let single = |l: &Label| Term::prefix(l.clone(), Term::Nil);
    let guarded: Vec<Term> = atoms
        .iter()
        .flat_map(|l| [single(l), Term::Sum(vec![(l.clone(), Term::Nil), (fresh.clone(), Term::Nil)])])
        .collect();
    let mut first: Vec<Term> = guarded.clone();
    for l in &atoms {
        for m in &atoms {
            first.push(Term::prefix(l.clone(), single(m)));
        }
    }
    let mut out = vec![CcsContext::Hole];
    let mut layer = vec![CcsContext::Hole];
    for level in 0..depth {
        let comps = if level == 0 { &first } else { &guarded };
        let mut next = Vec::new();
        for c in &layer {
            for t in comps {
                next.push(CcsContext::par(t.clone(), c.clone()));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

#[derive(Clone, Debug)]
pub struct MainTheoremReport {
    pub hhpb_equivalent: bool,
    pub congruence: BoundedOutcome,
    pub agree: bool,
}

impl MainTheoremReport {
    pub fn to_json(&self) -> Value {
        json!({
            "hhpb": if self.hhpb_equivalent { "equivalent" } else { "distinguished" },
            "congruence": self.congruence.verdict(),
            "agree": self.agree,
        })
    }
}

/// Every context used by [`main_theorem_check`] for `p` and `q`.
pub fn theorem_contexts(p: &Term, q: &Term, depth: usize) -> Result<Vec<CcsContext>, EquivError> {
    let mut avoid = ccs::names(p);
    avoid.extend(ccs::names(q));
    let mut contexts = vec![CcsContext::Hole];
    let mut seen = HashSet::new();
    for t in [p, q] {
        let c = encode::encode_ccs(t)?;
        for x in &c.configs {
            if x.iter().any(|e| c.label(e).act().is_none_or(|l| l.is_tau())) {
                continue;
            }
            let ctx = discriminating_context(&c, *x, &avoid)?;
            if seen.insert(ctx.to_string()) {
                contexts.push(ctx);
            }
        }
    }
    let mut labels = visible_labels(p);
    labels.extend(visible_labels(q));
    for ctx in enumerate_parallel_contexts(&labels, &avoid, depth) {
        if seen.insert(ctx.to_string()) {
            contexts.push(ctx);
        }
    }
    Ok(contexts)
}

/// Compares HHPB of the encodings with bounded back-and-forth barbed
/// congruence of the empty-memory processes.
pub fn main_theorem_check(p: &Term, q: &Term, depth: usize) -> Result<MainTheoremReport, EquivError> {
    let cp = encode::encode_ccs(p)?;
    let cq = encode::encode_ccs(q)?;
    for (t, c) in [(p, &cp), (q, &cq)] {
        if !encode::is_singly_labelled(c) {
            return Err(EquivError::NotSinglyLabelled(t.to_string()));
        }
    }
    let h = hhpb(&cp, &cq).equivalent;
    let contexts = theorem_contexts(p, q, depth)?;
    let congruence = bounded_congruence(&Process::init(p.clone()), &Process::init(q.clone()), &contexts)?;
    let agree = h == congruence.equivalent_on_all;
    Ok(MainTheoremReport { hhpb_equivalent: h, congruence, agree })
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}
