//! One line per acceptance criterion. Exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::{enc, t};
use rccs::confstruct::{AxiomCheck, ConfJson, ConfStruct, Config};
use rccs::encode;
use rccs::equiv::{self, EquivError, Triple, VerdictKind};
use rccs::process::{self, Process};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn structure(json: &str) -> ConfStruct {
    let j: ConfJson = serde_json::from_str(json).unwrap();
    ConfStruct::from_json(&j).unwrap()
}

/// A configuration as sorted labels plus its immediate causal pairs.
fn shape(c: &ConfStruct, x: Config) -> String {
    let mut labels: Vec<String> = x.iter().map(|e| c.label(e).to_string()).collect();
    labels.sort();
    let mut order: Vec<String> = Vec::new();
    for e in x.iter() {
        for f in x.iter() {
            if e != f && c.immediate_cause(x, e, f) {
                order.push(format!("{}<{}", c.label(e), c.label(f)));
            }
        }
    }
    order.sort();
    if order.is_empty() {
        format!("{{{}}}", labels.join(","))
    } else {
        format!("{{{}}} {}", labels.join(","), order.join(" "))
    }
}

fn shapes(c: &ConfStruct) -> BTreeSet<String> {
    c.configs.iter().map(|x| shape(c, *x)).collect()
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn fails_only(r: &rccs::confstruct::AxiomReport, name: &str) -> Result<String, String> {
    let mut witness = String::new();
    for (axiom, check) in r.entries() {
        match check {
            AxiomCheck::Pass => ensure(axiom != name, format!("{name} unexpectedly holds"))?,
            AxiomCheck::Fail { configs, events } => {
                ensure(axiom == name, format!("{axiom} fails too"))?;
                ensure(!configs.is_empty() || !events.is_empty(), "empty witness")?;
                witness = format!("{} configs, {} events", configs.len(), events.len());
            }
        }
    }
    Ok(witness)
}

fn crit1() -> Outcome {
    let ev3 = r#"[{"id":"e1","label":"a"},{"id":"e2","label":"a"},{"id":"e3","label":"a"}]"#;
    let a = structure(r#"{"events":[{"id":"e1","label":"a"},{"id":"e2","label":"a"}],"configs":[[],["e1","e2"]]}"#);
    let b = structure(&format!(
        r#"{{"events":{ev3},"configs":[[],["e1"],["e2"],["e3"],["e1","e2"],["e1","e3"],["e2","e3"]]}}"#
    ));
    let c = structure(&format!(
        r#"{{"events":{ev3},"configs":[[],["e1"],["e2"],["e1","e2"],["e1","e3"],["e2","e3"],["e1","e2","e3"]]}}"#
    ));
    let wa = fails_only(&a.validate_axioms(), "coincidence_freeness")?;
    let wb = fails_only(&b.validate_axioms(), "finite_completeness")?;
    let wc = fails_only(&c.validate_axioms(), "stability")?;
    Ok(format!("witnesses: ({wa}) ({wb}) ({wc})"))
}

fn crit2() -> Outcome {
    let par = enc("a | b");
    let sum = enc("a.b + b.a");
    let nested = enc("a.(a | c) + b");
    ensure(par.configs.len() == 4, format!("a|b has {} configurations", par.configs.len()))?;
    ensure(sum.configs.len() == 5, format!("a.b+b.a has {} configurations", sum.configs.len()))?;
    ensure(nested.configs.len() == 6, format!("a.(a|c)+b has {} configurations", nested.configs.len()))?;
    ensure(shapes(&par) == set(&["{}", "{a}", "{b}", "{a,b}"]), format!("a|b: {:?}", shapes(&par)))?;
    ensure(
        shapes(&sum) == set(&["{}", "{a}", "{b}", "{a,b} a<b", "{a,b} b<a"]),
        format!("a.b+b.a: {:?}", shapes(&sum)),
    )?;
    ensure(
        shapes(&nested) == set(&["{}", "{a}", "{b}", "{a,a} a<a", "{a,c} a<c", "{a,a,c} a<a a<c"]),
        format!("a.(a|c)+b: {:?}", shapes(&nested)),
    )?;
    Ok("4, 5 and 6 configurations with matching labels and causality".into())
}

fn sizes(lv: &[BTreeSet<Triple>]) -> Vec<usize> {
    lv.iter().map(|l| l.len()).collect()
}

fn crit3() -> Outcome {
    let lv = equiv::forw_backw_levels(&enc("a + a.b"), &enc("a.b + a.b"));
    let f = sizes(&lv.forward);
    ensure(f == vec![0, 2, 2], format!("a+a.b vs a.b+a.b: F sizes {f:?}"))?;
    let lv = equiv::forw_backw_levels(&enc("a | b"), &enc("a.b + b.a"));
    let f = sizes(&lv.forward);
    let b = sizes(&lv.backward);
    ensure(f == vec![1, 2, 2], format!("a|b vs a.b+b.a: F sizes {f:?}"))?;
    ensure(lv.forward[0].contains(&Triple::root()), "F0 lacks the root")?;
    ensure(b[1] == 2 && b[2] == 0, format!("a|b vs a.b+b.a: B sizes {b:?}"))?;
    let literal = equiv::forw_backw_levels(&enc("a.b + a.b"), &enc("a.(a | c) + b"));
    Ok(format!("F=[0,2,2] and F=[1,2,2], B=[1,2,0]; a.b+a.b vs a.(a|c)+b gives F={:?}", sizes(&literal.forward)))
}

fn crit4() -> Outcome {
    let out = equiv::hhpb(&enc("a | b"), &enc("a.b + b.a"));
    ensure(!out.equivalent, "a|b and a.b+b.a judged equivalent")?;
    ensure(out.ends_with_backward_move(), "losing play does not end with a backward move")?;
    let left =
        structure(r#"{"events":[{"id":"e1","label":"a"},{"id":"e1'","label":"a"}],"configs":[[],["e1"],["e1'"]]}"#);
    let right =
        structure(r#"{"events":[{"id":"e2","label":"a"},{"id":"e2'","label":"a"}],"configs":[[],["e2"],["e2'"]]}"#);
    let out = equiv::hhpb(&left, &right);
    ensure(out.equivalent, "the two-choice structures are distinguished")?;
    let ix = |c: &ConfStruct, n: &str| c.index_of_name(n).unwrap();
    let triple = |a: &str, b: &str| Triple {
        x1: Config::singleton(ix(&left, a)),
        x2: Config::singleton(ix(&right, b)),
        f: vec![(ix(&left, a), ix(&right, b))],
    };
    for (from_f, pairs) in [("f1", [("e1", "e2"), ("e1'", "e2'")]), ("f2", [("e1", "e2'"), ("e1'", "e2")])] {
        for (a, b) in pairs {
            ensure(out.witness.contains(&triple(a, b)), format!("witness lacks {a}<->{b} from {from_f}"))?;
        }
    }
    Ok(format!(
        "losing play of {} moves; witness of {} triples",
        equiv::hhpb(&enc("a | b"), &enc("a.b + b.a")).losing_play.len(),
        out.witness.len()
    ))
}

fn crit5() -> Outcome {
    let r = Process::parse("<2,a,0>.*.<1,a,b>.{} |> 0 | *.<1,a,b>.{} |> c").unwrap();
    let origin = process::origin(&r).map_err(|e| e.to_string())?;
    ensure(process::congruent(&origin, &Process::init(t("a.(a | c) + b"))), format!("origin {origin}"))?;
    let addr = encode::encode_rccs(&r).map_err(|e| e.to_string())?;
    let c = &addr.structure;
    ensure(rccs::confstruct::iso(c, &enc("a.(a | c) + b")), "structure differs")?;
    let outer = c
        .config_steps(Config::EMPTY)
        .into_iter()
        .map(|(e, _)| e)
        .find(|&e| c.label(e).to_string() == "a")
        .ok_or("no initial a")?;
    let inner = addr.at.without(outer);
    ensure(addr.at.len() == 2 && addr.at.contains(outer), format!("address {:?}", c.names(addr.at)))?;
    let inner = inner.iter().next().unwrap();
    ensure(c.label(inner).to_string() == "a" && c.causes(addr.at, outer, inner), "second a is not the nested one")?;
    ensure(addr.id_match[&1] == outer && addr.id_match[&2] == inner, "identifiers matched to the wrong events")?;
    Ok(format!("address {:?}, origin {origin}", c.names(addr.at)))
}

fn count_passing(n: u64, check: impl Fn(u64) -> Result<(), String>) -> Outcome {
    for seed in 0..n {
        check(seed).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    Ok(format!("{n}/{n} cases"))
}

fn crit6() -> Outcome {
    count_passing(500, |k| common::check_correspondence(&common::sample(k)))
}

fn crit7() -> Outcome {
    count_passing(500, common::check_parabolic)
}

fn crit8() -> Outcome {
    let r = Process::parse("*.<1,a,0>.{} |> b | {} |> c").unwrap();
    ensure(process::origin(&r).is_err(), "incoherent fork accepted")?;
    let summary = count_passing(500, |k| common::check_unique_origin(&common::sample(k)))?;
    Ok(format!("{summary}; incoherent fork rejected"))
}

fn crit9() -> Outcome {
    count_passing(500, |k| common::check_erase(&common::sample(k)))
}

fn crit10() -> Outcome {
    let mut equivalent = 0;
    for seed in 0..200 {
        let (p, q) = common::random_pair(seed);
        if common::check_cross(&p, &q)? {
            equivalent += 1;
        }
    }
    Ok(format!("200/200 pairs agree ({equivalent} equivalent)"))
}

fn crit11() -> Outcome {
    let corpus = common::theorem_corpus();
    let mut bounded = 0;
    for (p, q) in &corpus {
        let r = equiv::main_theorem_check(p, q, 2).map_err(|e| format!("{p} vs {q}: {e}"))?;
        ensure(r.agree, format!("{p} vs {q}: {}", r.to_json()))?;
        if r.hhpb_equivalent {
            ensure(r.congruence.verdict().verdict == VerdictKind::BoundedEquivalent, "positive not labelled bounded")?;
            bounded += 1;
        }
    }
    let refused =
        matches!(equiv::main_theorem_check(&t("a + a.b"), &t("a.b + a.b"), 2), Err(EquivError::NotSinglyLabelled(_)));
    ensure(refused, "a+a.b vs a.b+a.b was not refused as auto-concurrent")?;
    Ok(format!(
        "{}/{} pairs agree ({bounded} bounded-equivalent); a+a.b vs a.b+a.b refused as not singly labelled",
        corpus.len(),
        corpus.len()
    ))
}

fn crit12() -> Outcome {
    let mut applicable = 0;
    let mut seed = 0;
    while applicable < 100 {
        if common::check_trace_order(&common::sample(seed)).map_err(|e| format!("seed {seed}: {e}"))? {
            applicable += 1;
        }
        seed += 1;
    }
    Ok(format!("{applicable} processes with concurrent history over {seed} samples"))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("axiom counterexamples", crit1, Duration::from_secs(1)),
        ("encodings", crit2, Duration::from_secs(1)),
        ("stratification tables", crit3, Duration::from_secs(1)),
        ("hhpb verdicts", crit4, Duration::from_secs(1)),
        ("rccs address", crit5, Duration::from_secs(1)),
        ("operational correspondence", crit6, Duration::from_secs(120)),
        ("parabolic traces", crit7, Duration::from_secs(60)),
        ("unique origin", crit8, Duration::from_secs(120)),
        ("erase bisimulation", crit9, Duration::from_secs(120)),
        ("checker cross-oracle", crit10, Duration::from_secs(120)),
        ("main theorem desk check", crit11, Duration::from_secs(300)),
        ("trace-order independence", crit12, Duration::from_secs(120)),
    ];
    let mut failed = 0;
    for (k, (name, run, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > budget => Err(format!("{msg}; took {took:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} [{took:.2?}]", k + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} [{took:.2?}]", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
