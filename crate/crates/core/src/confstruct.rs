//! Finite labelled configuration structures.
//!
//! Events are indexed `0..n` and configurations are bitmasks over those
//! indices, so a structure holds at most 64 events. Operations that
//! enumerate subsets refuse inputs above [`event_cap`].

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ccs::Label;

/// Construction-tree identity of an event.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ident {
    Leaf(u32),
    /// A product event; `None` is the undefined side.
    Pair(Option<Box<Ident>>, Option<Box<Ident>>),
    /// A coproduct injection, tagged 1 or 2.
    Tag(u8, Box<Ident>),
    /// An identity read from JSON.
    Named(String),
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ident::Leaf(k) => write!(f, "e{k}"),
            Ident::Tag(t, i) => write!(f, "{t}.{i}"),
            Ident::Named(s) => f.write_str(s),
            Ident::Pair(l, r) => {
                let side = |s: &Option<Box<Ident>>| match s {
                    Some(i) => i.to_string(),
                    None => "*".to_string(),
                };
                write!(f, "({},{})", side(l), side(r))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EvLabel {
    Act(Label),
    Pair(Box<EvLabel>, Box<EvLabel>),
    /// Marks events that parallel composition discards.
    Zero,
}

impl EvLabel {
    pub fn act(&self) -> Option<&Label> {
        match self {
            EvLabel::Act(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, EvLabel::Act(Label::Tau))
    }

    pub fn parse(s: &str) -> Option<EvLabel> {
        let s = s.trim();
        if s == "0" {
            return Some(EvLabel::Zero);
        }
        if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            let mut depth = 0;
            for (i, c) in inner.char_indices() {
                match c {
                    '(' => depth += 1,
                    ')' => depth -= 1,
                    ',' if depth == 0 => {
                        let l = EvLabel::parse(&inner[..i])?;
                        let r = EvLabel::parse(&inner[i + 1..])?;
                        return Some(EvLabel::Pair(Box::new(l), Box::new(r)));
                    }
                    _ => {}
                }
            }
            return None;
        }
        Label::parse(s).ok().map(EvLabel::Act)
    }
}

impl From<Label> for EvLabel {
    fn from(l: Label) -> Self {
        EvLabel::Act(l)
    }
}

impl fmt::Display for EvLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvLabel::Act(l) => write!(f, "{l}"),
            EvLabel::Pair(l, r) => write!(f, "({l},{r})"),
            EvLabel::Zero => f.write_str("0"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Event {
    pub ident: Ident,
    pub label: EvLabel,
}

/// A set of event indices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config(pub u64);

impl Config {
    pub const EMPTY: Config = Config(0);

    pub fn singleton(e: usize) -> Config {
        Config(1 << e)
    }

    pub fn from_events(es: impl IntoIterator<Item = usize>) -> Config {
        Config(es.into_iter().fold(0, |acc, e| acc | (1 << e)))
    }

    pub fn contains(self, e: usize) -> bool {
        self.0 >> e & 1 == 1
    }

    pub fn with(self, e: usize) -> Config {
        Config(self.0 | (1 << e))
    }

    pub fn without(self, e: usize) -> Config {
        Config(self.0 & !(1 << e))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: Config) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: Config) -> Config {
        Config(self.0 | other.0)
    }

    pub fn intersection(self, other: Config) -> Config {
        Config(self.0 & other.0)
    }

    pub fn minus(self, other: Config) -> Config {
        Config(self.0 & !other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |e| self.contains(*e))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConfError {
    #[error("{count} events exceed the cap of {cap} (set RCCS_EVENT_CAP, at most 64)")]
    TooManyEvents { count: usize, cap: usize },
    #[error("invalid structure: {0}")]
    Invalid(String),
}

/// Largest event set a subset enumeration may range over.
pub fn event_cap() -> usize {
    std::env::var("RCCS_EVENT_CAP").ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(16).min(64)
}

fn check_cap(count: usize) -> Result<(), ConfError> {
    let cap = event_cap();
    if count > cap {
        Err(ConfError::TooManyEvents { count, cap })
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfStruct {
    pub events: Vec<Event>,
    pub configs: BTreeSet<Config>,
}

/// Outcome of one axiom check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AxiomCheck {
    Pass,
    Fail { configs: Vec<Config>, events: Vec<usize> },
}

impl AxiomCheck {
    pub fn passed(&self) -> bool {
        matches!(self, AxiomCheck::Pass)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomReport {
    pub rooted: AxiomCheck,
    pub finiteness: AxiomCheck,
    pub coincidence_freeness: AxiomCheck,
    pub finite_completeness: AxiomCheck,
    pub stability: AxiomCheck,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.entries().iter().all(|(_, c)| c.passed())
    }

    pub fn entries(&self) -> [(&'static str, &AxiomCheck); 5] {
        [
            ("rooted", &self.rooted),
            ("finiteness", &self.finiteness),
            ("coincidence_freeness", &self.coincidence_freeness),
            ("finite_completeness", &self.finite_completeness),
            ("stability", &self.stability),
        ]
    }
}

/// A product together with its two projections.
#[derive(Clone, Debug)]
pub struct Product {
    pub structure: ConfStruct,
    pub proj1: Vec<Option<usize>>,
    pub proj2: Vec<Option<usize>>,
}

impl ConfStruct {
    pub fn new(events: Vec<Event>, configs: impl IntoIterator<Item = Config>) -> Result<ConfStruct, ConfError> {
        if events.len() > 64 {
            return Err(ConfError::TooManyEvents { count: events.len(), cap: 64 });
        }
        let all = ConfStruct::full_mask(events.len());
        let configs: BTreeSet<Config> = configs.into_iter().collect();
        if let Some(x) = configs.iter().find(|x| !x.is_subset(all)) {
            return Err(ConfError::Invalid(format!("configuration {:#x} mentions unknown events", x.0)));
        }
        let idents: HashSet<&Ident> = events.iter().map(|e| &e.ident).collect();
        if idents.len() != events.len() {
            return Err(ConfError::Invalid("duplicate event identities".into()));
        }
        Ok(ConfStruct { events, configs })
    }

    /// The structure with no events.
    pub fn zero() -> ConfStruct {
        ConfStruct { events: Vec::new(), configs: [Config::EMPTY].into_iter().collect() }
    }

    fn full_mask(n: usize) -> Config {
        if n >= 64 {
            Config(u64::MAX)
        } else {
            Config((1u64 << n) - 1)
        }
    }

    pub fn all_events(&self) -> Config {
        ConfStruct::full_mask(self.events.len())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn label(&self, e: usize) -> &EvLabel {
        &self.events[e].label
    }

    pub fn is_config(&self, x: Config) -> bool {
        self.configs.contains(&x)
    }

    pub fn index_of(&self, ident: &Ident) -> Option<usize> {
        self.events.iter().position(|e| &e.ident == ident)
    }

    pub fn index_of_name(&self, name: &str) -> Option<usize> {
        self.events.iter().position(|e| e.ident.to_string() == name)
    }

    pub fn names(&self, x: Config) -> Vec<String> {
        let mut v: Vec<String> = x.iter().map(|e| self.events[e].ident.to_string()).collect();
        v.sort();
        v
    }

    pub fn config_steps(&self, x: Config) -> Vec<(usize, Config)> {
        (0..self.len()).filter(|e| !x.contains(*e) && self.is_config(x.with(*e))).map(|e| (e, x.with(e))).collect()
    }

    pub fn config_backsteps(&self, x: Config) -> Vec<(usize, Config)> {
        x.iter().filter(|e| self.is_config(x.without(*e))).map(|e| (e, x.without(e))).collect()
    }

    pub fn barbs_at(&self, x: Config) -> BTreeSet<Label> {
        self.config_steps(x)
            .into_iter()
            .filter_map(|(e, _)| self.label(e).act().cloned())
            .filter(|l| !l.is_tau())
            .collect()
    }

    pub fn maximal_configs(&self) -> Vec<Config> {
        self.configs.iter().copied().filter(|x| self.config_steps(*x).is_empty()).collect()
    }

    /// Maximal configurations of maximum cardinality.
    pub fn top_configs(&self) -> Vec<Config> {
        let max = self.configs.iter().map(|x| x.len()).max().unwrap_or(0);
        self.maximal_configs().into_iter().filter(|x| x.len() == max).collect()
    }

    /// For each event of `x`, the set of its causes in `x` (itself included).
    pub fn down_sets(&self, x: Config) -> Vec<Config> {
        let mut out = vec![Config::EMPTY; self.len()];
        for e in x.iter() {
            let mut acc = x;
            for z in &self.configs {
                if z.is_subset(x) && z.contains(e) {
                    acc = acc.intersection(*z);
                }
            }
            out[e] = acc;
        }
        out
    }

    pub fn causes(&self, x: Config, e1: usize, e2: usize) -> bool {
        self.configs.iter().filter(|z| z.is_subset(x) && z.contains(e2)).all(|z| z.contains(e1))
    }

    pub fn immediate_cause(&self, x: Config, e1: usize, e2: usize) -> bool {
        if e1 == e2 {
            return false;
        }
        let down = self.down_sets(x);
        let lt = |a: usize, b: usize| a != b && down[b].contains(a);
        lt(e1, e2) && !x.iter().any(|e3| lt(e1, e3) && lt(e3, e2))
    }

    pub fn validate_axioms(&self) -> AxiomReport {
        let configs: Vec<Config> = self.configs.iter().copied().collect();
        let rooted = if self.is_config(Config::EMPTY) {
            AxiomCheck::Pass
        } else {
            AxiomCheck::Fail { configs: vec![], events: vec![] }
        };
        let finiteness = configs
            .iter()
            .find_map(|x| {
                x.iter()
                    .find(|e| !configs.iter().any(|z| z.contains(*e) && z.is_subset(*x)))
                    .map(|e| AxiomCheck::Fail { configs: vec![*x], events: vec![e] })
            })
            .unwrap_or(AxiomCheck::Pass);
        let coincidence_freeness = configs
            .iter()
            .find_map(|x| {
                let evs: Vec<usize> = x.iter().collect();
                for (i, &e) in evs.iter().enumerate() {
                    for &f in &evs[i + 1..] {
                        let separated = configs.iter().any(|z| z.is_subset(*x) && z.contains(e) != z.contains(f));
                        if !separated {
                            return Some(AxiomCheck::Fail { configs: vec![*x], events: vec![e, f] });
                        }
                    }
                }
                None
            })
            .unwrap_or(AxiomCheck::Pass);
        let stability = (|| {
            for (i, x) in configs.iter().enumerate() {
                for y in &configs[i + 1..] {
                    if self.is_config(x.union(*y)) && !self.is_config(x.intersection(*y)) {
                        return AxiomCheck::Fail { configs: vec![*x, *y], events: vec![] };
                    }
                }
            }
            AxiomCheck::Pass
        })();
        AxiomReport {
            rooted,
            finiteness,
            coincidence_freeness,
            finite_completeness: self.finite_completeness(&configs),
            stability,
        }
    }

    /// Every pairwise compatible family must have its union in the structure.
    /// Only families in which each member contributes an event missing from
    /// the earlier ones are visited; the others have the same union as a
    /// smaller family.
    fn finite_completeness(&self, configs: &[Config]) -> AxiomCheck {
        let compat: Vec<Vec<bool>> = configs
            .iter()
            .map(|x| configs.iter().map(|y| configs.iter().any(|z| x.union(*y).is_subset(*z))).collect())
            .collect();
        fn go(
            configs: &[Config],
            compat: &[Vec<bool>],
            cs: &ConfStruct,
            start: usize,
            family: &mut Vec<usize>,
            union: Config,
        ) -> Option<Vec<usize>> {
            for k in start..configs.len() {
                let x = configs[k];
                if x.is_subset(union) || !family.iter().all(|&j| compat[j][k]) {
                    continue;
                }
                family.push(k);
                let u = union.union(x);
                if !cs.is_config(u) {
                    return Some(family.clone());
                }
                if let Some(w) = go(configs, compat, cs, k + 1, family, u) {
                    return Some(w);
                }
                family.pop();
            }
            None
        }
        match go(configs, &compat, self, 0, &mut Vec::new(), Config::EMPTY) {
            None => AxiomCheck::Pass,
            Some(fam) => AxiomCheck::Fail { configs: fam.into_iter().map(|k| configs[k]).collect(), events: vec![] },
        }
    }

    /// Keeps the events in `keep` and the configurations inside it.
    pub fn restrict_events(&self, keep: Config) -> ConfStruct {
        let kept: Vec<usize> = keep.intersection(self.all_events()).iter().collect();
        let remap =
            |x: Config| Config::from_events(kept.iter().enumerate().filter(|(_, &e)| x.contains(e)).map(|(k, _)| k));
        ConfStruct {
            events: kept.iter().map(|&e| self.events[e].clone()).collect(),
            configs: self.configs.iter().filter(|x| x.is_subset(keep)).map(|x| remap(*x)).collect(),
        }
    }

    /// Discards every event labelled `a` or `!a`, and the events left in no
    /// configuration.
    pub fn restrict_name(&self, a: &str) -> ConfStruct {
        let keep =
            Config::from_events((0..self.len()).filter(|&e| self.label(e).act().and_then(|l| l.name()) != Some(a)));
        let live = self.configs.iter().filter(|x| x.is_subset(keep)).fold(Config::EMPTY, |acc, x| acc.union(*x));
        self.restrict_events(live)
    }

    pub fn prefix(&self, label: Label) -> ConfStruct {
        let k = 1 + self
            .events
            .iter()
            .filter_map(|e| match e.ident {
                Ident::Leaf(k) => Some(k),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        let mut events = vec![Event { ident: Ident::Leaf(k), label: EvLabel::Act(label) }];
        events.extend(self.events.iter().cloned());
        let mut configs: BTreeSet<Config> = [Config::EMPTY].into_iter().collect();
        configs.extend(self.configs.iter().map(|x| Config((x.0 << 1) | 1)));
        ConfStruct { events, configs }
    }

    pub fn relabel(&self, labels: Vec<EvLabel>) -> ConfStruct {
        assert_eq!(labels.len(), self.len(), "relabelling must be total");
        ConfStruct {
            events: self.events.iter().zip(labels).map(|(e, label)| Event { ident: e.ident.clone(), label }).collect(),
            configs: self.configs.clone(),
        }
    }

    pub fn coproduct(&self, other: &ConfStruct) -> Result<ConfStruct, ConfError> {
        let n1 = self.len();
        if n1 + other.len() > 64 {
            return Err(ConfError::TooManyEvents { count: n1 + other.len(), cap: 64 });
        }
        let tag = |t: u8, e: &Event| Event { ident: Ident::Tag(t, Box::new(e.ident.clone())), label: e.label.clone() };
        let mut events: Vec<Event> = self.events.iter().map(|e| tag(1, e)).collect();
        events.extend(other.events.iter().map(|e| tag(2, e)));
        let mut configs = self.configs.clone();
        configs.extend(other.configs.iter().map(|x| Config(x.0 << n1)));
        Ok(ConfStruct { events, configs })
    }

    /// The residual after `x` has happened: `y` is kept when `x ∪ y` is a
    /// configuration. Events that no remaining configuration reaches are
    /// dropped.
    pub fn remove_config(&self, x: Config) -> ConfStruct {
        let kept = self.remaining_events(x);
        let remap =
            |y: Config| Config::from_events(kept.iter().enumerate().filter(|(_, &e)| y.contains(e)).map(|(k, _)| k));
        ConfStruct {
            events: kept.iter().map(|&e| self.events[e].clone()).collect(),
            configs: self.configs.iter().filter(|z| x.is_subset(**z)).map(|z| remap(z.minus(x))).collect(),
        }
    }

    /// Indices of `remove_config(x)`'s events in `self`.
    pub fn remaining_events(&self, x: Config) -> Vec<usize> {
        let live = self.configs.iter().filter(|z| x.is_subset(**z)).fold(Config::EMPTY, |acc, z| acc.union(*z));
        live.minus(x).iter().collect()
    }

    pub fn to_json(&self) -> ConfJson {
        let mut configs: Vec<Vec<String>> = self.configs.iter().map(|x| self.names(*x)).collect();
        configs.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        ConfJson {
            events: self
                .events
                .iter()
                .map(|e| EventJson { id: e.ident.to_string(), label: e.label.to_string() })
                .collect(),
            configs,
        }
    }

    pub fn from_json(j: &ConfJson) -> Result<ConfStruct, ConfError> {
        let mut events = Vec::new();
        let mut index = HashMap::new();
        for ev in &j.events {
            let label =
                EvLabel::parse(&ev.label).ok_or_else(|| ConfError::Invalid(format!("bad label `{}`", ev.label)))?;
            if index.insert(ev.id.clone(), events.len()).is_some() {
                return Err(ConfError::Invalid(format!("duplicate event `{}`", ev.id)));
            }
            events.push(Event { ident: Ident::Named(ev.id.clone()), label });
        }
        let mut configs = BTreeSet::new();
        for c in &j.configs {
            let mut x = Config::EMPTY;
            for id in c {
                let e = *index.get(id).ok_or_else(|| ConfError::Invalid(format!("unknown event `{id}`")))?;
                x = x.with(e);
            }
            configs.insert(x);
        }
        if !configs.contains(&Config::EMPTY) {
            return Err(ConfError::Invalid("the empty configuration `[]` is missing".into()));
        }
        ConfStruct::new(events, configs)
    }

    pub fn to_dot(&self) -> String {
        let configs: Vec<Config> = self.configs.iter().copied().collect();
        let pos: HashMap<Config, usize> = configs.iter().enumerate().map(|(k, x)| (*x, k)).collect();
        let mut s = String::from("digraph confstruct {\n");
        for (k, x) in configs.iter().enumerate() {
            let mut labels: Vec<String> = x.iter().map(|e| self.label(e).to_string()).collect();
            labels.sort();
            let text = if labels.is_empty() { "{}".to_string() } else { labels.join(",") };
            s.push_str(&format!("  c{k} [label=\"{}\"];\n", text.replace('"', "\\\"")));
        }
        for x in &configs {
            for (e, y) in self.config_steps(*x) {
                s.push_str(&format!("  c{} -> c{} [label=\"{}\"];\n", pos[x], pos[&y], self.label(e)));
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Serialised form: events with string ids and labels, configurations as
/// sorted id lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfJson {
    pub events: Vec<EventJson>,
    pub configs: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventJson {
    pub id: String,
    pub label: String,
}

fn product_over(
    a: &ConfStruct,
    b: &ConfStruct,
    candidates: Vec<(Option<usize>, Option<usize>)>,
    labels: Vec<EvLabel>,
) -> Result<Product, ConfError> {
    check_cap(candidates.len())?;
    let under = |c: &ConfStruct, y: Config| c.configs.iter().any(|z| y.is_subset(*z));
    // Subsets with injective projections that stay below some configuration on each side.
    let mut s_set: Vec<Config> = Vec::new();
    let mut stack = vec![(0usize, Config::EMPTY, Config::EMPTY, Config::EMPTY)];
    while let Some((k, x, left, right)) = stack.pop() {
        if k == candidates.len() {
            if a.is_config(left) && b.is_config(right) {
                s_set.push(x);
            }
            continue;
        }
        stack.push((k + 1, x, left, right));
        let (l, r) = candidates[k];
        if l.is_some_and(|e| left.contains(e)) || r.is_some_and(|e| right.contains(e)) {
            continue;
        }
        let left2 = l.map_or(left, |e| left.with(e));
        let right2 = r.map_or(right, |e| right.with(e));
        if under(a, left2) && under(b, right2) {
            stack.push((k + 1, x.with(k), left2, right2));
        }
    }
    let mut configs = BTreeSet::new();
    for &x in &s_set {
        let below: Vec<Config> = s_set.iter().copied().filter(|z| z.is_subset(x)).collect();
        let mut sigs = HashSet::new();
        let ok = x.iter().all(|e| {
            let sig: Vec<bool> = below.iter().map(|z| z.contains(e)).collect();
            sigs.insert(sig)
        });
        if ok {
            configs.insert(x);
        }
    }
    let events = candidates
        .iter()
        .zip(labels)
        .map(|((l, r), label)| Event {
            ident: Ident::Pair(
                l.map(|e| Box::new(a.events[e].ident.clone())),
                r.map(|e| Box::new(b.events[e].ident.clone())),
            ),
            label,
        })
        .collect();
    Ok(Product {
        structure: ConfStruct { events, configs },
        proj1: candidates.iter().map(|c| c.0).collect(),
        proj2: candidates.iter().map(|c| c.1).collect(),
    })
}

fn all_pairs(a: &ConfStruct, b: &ConfStruct) -> Vec<(Option<usize>, Option<usize>)> {
    let mut v: Vec<(Option<usize>, Option<usize>)> = (0..a.len()).map(|e| (Some(e), None)).collect();
    v.extend((0..b.len()).map(|e| (None, Some(e))));
    for e1 in 0..a.len() {
        for e2 in 0..b.len() {
            v.push((Some(e1), Some(e2)));
        }
    }
    v
}

fn product_label(a: &ConfStruct, b: &ConfStruct, c: (Option<usize>, Option<usize>)) -> EvLabel {
    match c {
        (Some(e), None) => a.label(e).clone(),
        (None, Some(e)) => b.label(e).clone(),
        (Some(e1), Some(e2)) => EvLabel::Pair(Box::new(a.label(e1).clone()), Box::new(b.label(e2).clone())),
        (None, None) => unreachable!("(*,*) is not an event"),
    }
}

pub fn product(a: &ConfStruct, b: &ConfStruct) -> Result<Product, ConfError> {
    let cands = all_pairs(a, b);
    let labels = cands.iter().map(|c| product_label(a, b, *c)).collect();
    product_over(a, b, cands, labels)
}

/// The labelling used by parallel composition.
pub fn sync_label(l: &EvLabel) -> EvLabel {
    match l {
        EvLabel::Act(_) => l.clone(),
        EvLabel::Pair(x, y) => match (x.act(), y.act()) {
            (Some(p), Some(q)) if p.is_complement_of(q) => EvLabel::Act(Label::Tau),
            _ => EvLabel::Zero,
        },
        EvLabel::Zero => EvLabel::Zero,
    }
}

/// Parallel composition together with its projections.
pub fn parallel_with_projections(a: &ConfStruct, b: &ConfStruct) -> Result<Product, ConfError> {
    let cands: Vec<_> =
        all_pairs(a, b).into_iter().filter(|c| sync_label(&product_label(a, b, *c)) != EvLabel::Zero).collect();
    let labels = cands.iter().map(|c| sync_label(&product_label(a, b, *c))).collect();
    product_over(a, b, cands, labels)
}

pub fn parallel(a: &ConfStruct, b: &ConfStruct) -> Result<ConfStruct, ConfError> {
    Ok(parallel_with_projections(a, b)?.structure)
}

/// Checks the morphism laws for a partial map of events; labels are
/// compared only when `labels` is set.
pub fn is_morphism(a: &ConfStruct, b: &ConfStruct, f: &[Option<usize>], labels: bool) -> bool {
    a.configs.iter().all(|x| {
        let mut image = Config::EMPTY;
        for e in x.iter() {
            if let Some(t) = f[e] {
                if image.contains(t) {
                    return false;
                }
                if labels && a.label(e) != b.label(t) {
                    return false;
                }
                image = image.with(t);
            }
        }
        b.is_config(image)
    })
}

/// A label-preserving bijection of events carrying configurations onto
/// configurations, as `map[a_event] = b_event`.
pub fn iso_map(a: &ConfStruct, b: &ConfStruct) -> Option<Vec<usize>> {
    let n = a.len();
    if n != b.len() || a.configs.len() != b.configs.len() {
        return None;
    }
    let sig = |c: &ConfStruct, e: usize| {
        let containing: Vec<usize> = c.configs.iter().filter(|x| x.contains(e)).map(|x| x.len()).collect();
        (c.label(e).clone(), containing.len(), containing.iter().min().copied().unwrap_or(0))
    };
    let sa: Vec<_> = (0..n).map(|e| sig(a, e)).collect();
    let sb: Vec<_> = (0..n).map(|e| sig(b, e)).collect();
    let mut ms: BTreeMap<_, i64> = BTreeMap::new();
    for s in &sa {
        *ms.entry(s.clone()).or_default() += 1;
    }
    for s in &sb {
        *ms.entry(s.clone()).or_default() -= 1;
    }
    if ms.values().any(|v| *v != 0) {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&e| (sa[e].2, e));
    let pos: Vec<usize> = {
        let mut p = vec![0; n];
        for (k, &e) in order.iter().enumerate() {
            p[e] = k;
        }
        p
    };
    // Configurations of `a` become checkable once their last event (in `order`) is mapped.
    let mut due: Vec<Vec<Config>> = vec![Vec::new(); n];
    for x in &a.configs {
        if let Some(last) = x.iter().map(|e| pos[e]).max() {
            due[last].push(*x);
        }
    }
    fn go(
        k: usize,
        order: &[usize],
        due: &[Vec<Config>],
        sa: &[(EvLabel, usize, usize)],
        sb: &[(EvLabel, usize, usize)],
        b: &ConfStruct,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        if k == order.len() {
            return true;
        }
        let e = order[k];
        for t in 0..sb.len() {
            if used[t] || sb[t] != sa[e] {
                continue;
            }
            map[e] = t;
            used[t] = true;
            let ok = due[k].iter().all(|x| b.is_config(Config::from_events(x.iter().map(|d| map[d]))));
            if ok && go(k + 1, order, due, sa, sb, b, map, used) {
                return true;
            }
            used[t] = false;
        }
        false
    }
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    if go(0, &order, &due, &sa, &sb, b, &mut map, &mut used) {
        Some(map)
    } else {
        None
    }
}

pub fn iso(a: &ConfStruct, b: &ConfStruct) -> bool {
    iso_map(a, b).is_some()
}
