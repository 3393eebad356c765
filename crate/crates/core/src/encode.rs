//! Encoding CCS terms as configuration structures, and RCCS processes as a
//! structure plus the configuration reached.

use std::collections::{BTreeMap, BTreeSet};

use crate::ccs::{CcsContext, Label, Term};
use crate::confstruct::{self, ConfError, ConfStruct, Config, EvLabel};
use crate::process::{self, EventId, Process, RccsError, TransitionRecord};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error(transparent)]
    Conf(#[from] ConfError),
    #[error("process is not coherent: rollback stops at {0}")]
    NotCoherent(String),
    #[error("origin `{0}` is not singly labelled")]
    NotSinglyLabelled(String),
    #[error("no address for step {step}: {reason}")]
    AddressFailure { step: usize, reason: String },
    #[error(transparent)]
    Rccs(#[from] RccsError),
}

pub fn encode_ccs(t: &Term) -> Result<ConfStruct, ConfError> {
    match t {
        Term::Nil => Ok(ConfStruct::zero()),
        Term::Sum(s) => {
            let mut acc: Option<ConfStruct> = None;
            for (l, cont) in s {
                let branch = encode_ccs(cont)?.prefix(l.clone());
                acc = Some(match acc {
                    None => branch,
                    Some(prev) => prev.coproduct(&branch)?,
                });
            }
            Ok(acc.unwrap_or_else(ConfStruct::zero))
        }
        Term::Par(p, q) => confstruct::parallel(&encode_ccs(p)?, &encode_ccs(q)?),
        Term::Res(p, a) => Ok(encode_ccs(p)?.restrict_name(a)),
    }
}

/// No configuration enables two distinct events with the same label.
pub fn is_singly_labelled(c: &ConfStruct) -> bool {
    c.configs.iter().all(|x| {
        let mut seen = BTreeSet::new();
        c.config_steps(*x).into_iter().all(|(e, _)| seen.insert(c.label(e).clone()))
    })
}

pub fn term_is_singly_labelled(t: &Term) -> Result<bool, ConfError> {
    Ok(is_singly_labelled(&encode_ccs(t)?))
}

/// Strict order on memory identifiers: an entry precedes every entry
/// stacked above it in the same thread, closed transitively.
pub fn memory_order(r: &Process) -> BTreeSet<(EventId, EventId)> {
    let mut rel = BTreeSet::new();
    for m in r.memories() {
        let ids: Vec<EventId> = m.events().map(|e| e.id).collect();
        for (k, &i) in ids.iter().enumerate() {
            for &j in &ids[k + 1..] {
                if i != j {
                    rel.insert((i, j));
                }
            }
        }
    }
    loop {
        let mut added = Vec::new();
        for &(a, b) in &rel {
            for &(c, d) in rel.range((b, 0)..=(b, EventId::MAX)) {
                debug_assert_eq!(c, b);
                if a != d && !rel.contains(&(a, d)) {
                    added.push((a, d));
                }
            }
        }
        if added.is_empty() {
            return rel;
        }
        rel.extend(added);
    }
}

/// A process located in the encoding of its origin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Address {
    pub structure: ConfStruct,
    pub at: Config,
    pub id_match: BTreeMap<EventId, usize>,
}

fn step_address(
    cs: &ConfStruct,
    x: Config,
    f: &BTreeMap<EventId, usize>,
    id: EventId,
    label: &Label,
    next: &Process,
) -> Result<usize, String> {
    let order = memory_order(next);
    let down_cache = |y: Config| cs.down_sets(y);
    let cands: Vec<usize> = cs
        .config_steps(x)
        .into_iter()
        .filter(|(e, _)| cs.label(*e) == &EvLabel::Act(label.clone()))
        .map(|(e, _)| e)
        .collect();
    let target = encode_ccs(&process::erase(next)).map_err(|e| e.to_string())?;
    let mut fitting = Vec::new();
    for e in cands {
        let y = x.with(e);
        let down = down_cache(y);
        let agrees = f.iter().all(|(&j, &ej)| order.contains(&(j, id)) == (ej != e && down[e].contains(ej)));
        if agrees && confstruct::iso(&cs.remove_config(y), &target) {
            fitting.push(e);
        }
    }
    match fitting.as_slice() {
        [e] => Ok(*e),
        [] => Err(format!("no event for {id}:{label}")),
        _ => Err(format!("several events fit {id}:{label}")),
    }
}

fn address_along(cs: ConfStruct, states: &[Process], steps: &[(EventId, Label)]) -> Result<Address, EncodeError> {
    let mut x = Config::EMPTY;
    let mut f = BTreeMap::new();
    for (k, ((id, label), next)) in steps.iter().zip(&states[1..]).enumerate() {
        let e = step_address(&cs, x, &f, *id, label, next)
            .map_err(|reason| EncodeError::AddressFailure { step: k, reason })?;
        x = x.with(e);
        f.insert(*id, e);
    }
    Ok(Address { structure: cs, at: x, id_match: f })
}

fn origin_structure(origin_term: &Term) -> Result<ConfStruct, EncodeError> {
    let cs = encode_ccs(origin_term)?;
    if !is_singly_labelled(&cs) {
        return Err(EncodeError::NotSinglyLabelled(origin_term.to_string()));
    }
    Ok(cs)
}

/// Locates `r` in the encoding of its origin by replaying its rollback forwards.
pub fn encode_rccs(r: &Process) -> Result<Address, EncodeError> {
    let (mut states, mut undone) = process::rollback(r);
    let stuck = states.last().expect("nonempty").clone();
    let origin = Process::init(process::erase(&stuck));
    if !process::congruent(&stuck, &origin) {
        return Err(EncodeError::NotCoherent(stuck.to_string()));
    }
    let cs = origin_structure(&process::erase(&stuck))?;
    states.reverse();
    undone.reverse();
    address_along(cs, &states, &undone)
}

/// Locates the end of a forward trace from an empty-memory process.
pub fn encode_along(origin: &Process, trace: &[TransitionRecord]) -> Result<Address, EncodeError> {
    if trace.iter().any(|t| t.dir != process::Direction::Forward) {
        return Err(EncodeError::AddressFailure { step: 0, reason: "trace must be forward only".into() });
    }
    let states = process::replay_states(origin, trace)?;
    let cs = origin_structure(&process::erase(origin))?;
    let steps: Vec<(EventId, Label)> = trace.iter().map(|t| (t.id, t.label.clone())).collect();
    address_along(cs, &states, &steps)
}

pub fn residual(c: &ConfStruct, x: Config) -> ConfStruct {
    c.remove_config(x)
}

/// The encoding of `c[p]` with its projection onto the events of `p`.
pub fn projection_context(c: &CcsContext, p: &Term) -> Result<(ConfStruct, Vec<Option<usize>>), EncodeError> {
    match c {
        CcsContext::Hole => {
            let s = encode_ccs(p)?;
            let id = (0..s.len()).map(Some).collect();
            Ok((s, id))
        }
        CcsContext::Par(q, inner) => {
            let (s, pi) = projection_context(inner, p)?;
            let prod = confstruct::parallel_with_projections(&encode_ccs(q)?, &s)?;
            let composed = prod.proj2.iter().map(|e| e.and_then(|e| pi[e])).collect();
            Ok((prod.structure, composed))
        }
        other => Err(RccsError::UnsupportedContext(other.to_string()).into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Term {
        Term::parse(s).unwrap()
    }

    fn enc(s: &str) -> ConfStruct {
        encode_ccs(&t(s)).unwrap()
    }

    fn labels_of(c: &ConfStruct, x: Config) -> Vec<String> {
        let mut v: Vec<String> = x.iter().map(|e| c.label(e).to_string()).collect();
        v.sort();
        v
    }

    #[test]
    fn encodings_of_small_terms() {
        assert_eq!(enc("a | b").configs.len(), 4);
        assert_eq!(enc("a.b + b.a").configs.len(), 5);
        let c = enc("a.(a|c) + b");
        assert_eq!(c.configs.len(), 6);
        let mut shapes: Vec<Vec<String>> = c.configs.iter().map(|x| labels_of(&c, *x)).collect();
        shapes.sort();
        let want: Vec<Vec<&str>> =
            vec![vec![], vec!["a"], vec!["a", "a"], vec!["a", "a", "c"], vec!["a", "c"], vec!["b"]];
        assert_eq!(shapes, want);
        assert_eq!(enc("0"), ConfStruct::zero());
    }

    #[test]
    fn singly_labelled_examples() {
        assert!(!is_singly_labelled(&enc("a.b + a.b")));
        assert!(is_singly_labelled(&enc("a.a")));
        assert!(is_singly_labelled(&enc("a.b + b")));
        assert!(!is_singly_labelled(&enc("a | b.a")));
    }

    #[test]
    fn memory_order_examples() {
        let r = Process::parse("<2,b,0>.<1,a,0>.{} |> 0").unwrap();
        assert_eq!(memory_order(&r), [(1, 2)].into_iter().collect());
        let r = Process::parse("<2,b,0>.*.<1,a,0>.{} |> 0 | <3,c,0>.*.<1,a,0>.{} |> 0").unwrap();
        assert_eq!(memory_order(&r), [(1, 2), (1, 3)].into_iter().collect());
        let r = Process::parse("<1,a,0>.*.{} |> 0 | <2,b,0>.*.{} |> 0").unwrap();
        assert!(memory_order(&r).is_empty());
    }

    #[test]
    fn address_of_running_example() {
        let r = Process::parse("<2,a,0>.*.<1,a,b>.{} |> 0 | *.<1,a,b>.{} |> c").unwrap();
        let addr = encode_rccs(&r).unwrap();
        assert!(confstruct::iso(&addr.structure, &enc("a.(a|c)+b")));
        assert_eq!(labels_of(&addr.structure, addr.at), vec!["a", "a"]);
        let e1 = addr.id_match[&1];
        let e2 = addr.id_match[&2];
        assert!(addr.structure.causes(addr.at, e1, e2));
        assert!(confstruct::iso(&residual(&addr.structure, addr.at), &enc("c")));
    }

    #[test]
    fn address_of_empty_memory() {
        let addr = encode_rccs(&Process::parse("{} |> a.b").unwrap()).unwrap();
        assert_eq!(addr.at, Config::EMPTY);
        assert!(addr.id_match.is_empty());
    }

    #[test]
    fn address_errors() {
        let r = Process::parse("<1,a,a.b>.{} |> b").unwrap();
        assert!(matches!(encode_rccs(&r), Err(EncodeError::NotSinglyLabelled(_))));
        let r = Process::parse("*.<1,a,0>.{} |> b | {} |> c").unwrap();
        assert!(matches!(encode_rccs(&r), Err(EncodeError::NotCoherent(_))));
    }

    #[test]
    fn residual_examples() {
        let ab = enc("a.b");
        let ea = ab.config_steps(Config::EMPTY)[0].0;
        assert!(confstruct::iso(&residual(&ab, Config::singleton(ea)), &enc("b")));
        let c = enc("a.(a|c) + b");
        let outer = c.config_steps(Config::EMPTY).into_iter().find(|(e, _)| c.label(*e).to_string() == "a").unwrap().0;
        assert!(confstruct::iso(&residual(&c, Config::singleton(outer)), &enc("a | c")));
    }

    #[test]
    fn projections_of_parallel_contexts() {
        let p = t("a");
        let (s, pi) = projection_context(&CcsContext::Hole, &p).unwrap();
        assert_eq!(pi, vec![Some(0)]);
        assert_eq!(s.len(), 1);
        let c = CcsContext::par(t("b"), CcsContext::Hole);
        let (s, pi) = projection_context(&c, &p).unwrap();
        let b_event = (0..s.len()).find(|&e| s.label(e).to_string() == "b").unwrap();
        assert_eq!(pi[b_event], None);
        let nested = CcsContext::par(t("b"), CcsContext::par(t("!a"), CcsContext::Hole));
        let (s, pi) = projection_context(&nested, &p).unwrap();
        assert!(confstruct::is_morphism(&s, &enc("a"), &pi, false));
        let bad = CcsContext::Res(Box::new(CcsContext::Hole), "a".into());
        assert!(projection_context(&bad, &p).is_err());
    }
}
