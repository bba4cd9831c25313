mod common;

use std::collections::HashMap;
use std::io::Write;

use common::*;
use nsx_core::lang::{parse, Constraint, VarKind};
use nsx_core::symsolv::{
    brute_force, check_sat, solve, BruteBounds, ConflictClause, SmtAnswer, SmtBridge, SymVerdict,
};
use nsx_core::value::{Assignment, Value};
use rand::Rng;

fn to_env(a: &Assignment) -> HashMap<String, OVal> {
    a.iter()
        .map(|(k, v)| {
            let o = match v {
                Value::Str(s) => OVal::S(s.clone()),
                other => OVal::N(other.as_f64().unwrap()),
            };
            (k.clone(), o)
        })
        .collect()
}

#[test]
fn check_sat_agrees_with_independent_evaluator() {
    let mut r = rng(11);
    for _ in 0..1000 {
        let (decls, cs) = random_instance(&mut r);
        let mut a = Assignment::new();
        for d in &decls {
            let v = match d.kind {
                VarKind::Str => Value::Str("ab".chars().cycle().take(r.gen_range(0..=3)).collect()),
                _ => Value::Int(r.gen_range(-8..=8)),
            };
            a.insert(d.name.clone(), v);
        }
        let env = to_env(&a);
        let want = cs.iter().all(|c| oracle_holds(c, &env));
        assert_eq!(check_sat(&a, &cs).unwrap(), want, "{a} {cs:?}");
    }
}

#[test]
fn solve_agrees_with_brute_force() {
    let mut r = rng(3);
    let mut sat = 0;
    for i in 0..500 {
        let (decls, cs) = random_instance(&mut r);
        let bf = brute_force(&cs, &decls, &BruteBounds::default()).unwrap();
        let sv = solve(&cs, &[], &decls).unwrap();
        assert_eq!(bf.is_sat(), sv.is_sat(), "instance {i}: {cs:?} {decls:?} bf={bf:?} sv={sv:?}");
        if let SymVerdict::Sat(a) = &sv {
            sat += 1;
            assert!(check_sat(a, &cs).unwrap());
            assert!(cs.iter().all(|c| oracle_holds(c, &to_env(a))));
        }
    }
    assert!(sat > 100 && sat < 450, "generator is lopsided: {sat} SAT of 500");
}

#[test]
fn conflict_clauses_are_never_reproposed() {
    let f = parse("int x in 0..4; int y in 0..4; assert x + y >= 6 || x == y;").unwrap();
    let mut conflicts: Vec<ConflictClause> = Vec::new();
    let mut seen: Vec<Assignment> = Vec::new();
    while let SymVerdict::Sat(a) = solve(&f.symbolic, &conflicts, &f.decls).unwrap() {
        assert!(!conflicts.iter().any(|c| c.matches(&a)));
        assert!(!seen.contains(&a));
        conflicts.push(ConflictClause::excluding(&a));
        seen.push(a);
    }
    let bf_count = (0..=4).flat_map(|x| (0..=4).map(move |y| (x, y))).filter(|(x, y)| x + y >= 6 || x == y).count();
    assert_eq!(seen.len(), bf_count);
}

#[test]
fn string_witnesses_have_solved_lengths() {
    let f = parse(
        "str u maxlen 50; str v maxlen 50; int lu; int lv;
         assert lu == strlen(u); assert lv == strlen(v); assert lu + lv > 60; assert lu > lv + 3;",
    )
    .unwrap();
    let a = solve(&f.symbolic, &[], &f.decls).unwrap();
    let a = a.assignment().unwrap();
    assert_eq!(a.get("u").unwrap().as_str().unwrap().len() as f64, a.num("lu").unwrap());
    assert_eq!(a.get("v").unwrap().as_str().unwrap().len() as f64, a.num("lv").unwrap());
    assert!(check_sat(a, &f.symbolic).unwrap());
}

#[cfg(unix)]
#[test]
fn exploit_symbolic_part_round_trips_through_external_solver() {
    use std::os::unix::fs::PermissionsExt;
    let f = parse(
        "str input_uri; str input_version; int uri_length; int ver_length; int ptr;
         assert uri_length == strlen(input_uri);
         assert ver_length == strlen(input_version);
         assert ptr > 99;",
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("fake-solver");
    let seen = dir.path().join("seen.smt2");
    let mut file = std::fs::File::create(&script).unwrap();
    writeln!(
        file,
        "#!/bin/sh\ncat > '{}'\necho sat\necho '((define-fun uri_length () Int 4) (define-fun len_input_uri () Int 4)'\n\
         echo ' (define-fun ver_length () Int 8) (define-fun len_input_version () Int 8) (define-fun ptr () Int 100))'",
        seen.display()
    )
    .unwrap();
    drop(file);
    std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();

    let bridge = SmtBridge::new(&script, vec![]);
    let SmtAnswer::Sat(a) = bridge.query(&f.symbolic, &f.decls).unwrap() else { panic!("expected sat") };
    assert!(check_sat(&a, &f.symbolic).unwrap(), "{a}");
    assert_eq!(a.get("input_version"), Some(&Value::Str("aaaaaaaa".into())));
    let sent = std::fs::read_to_string(&seen).unwrap();
    assert!(sent.contains("(assert (> ptr 99))"));
    assert!(sent.contains("(check-sat)"));
}

#[test]
fn unsat_cores_of_the_cli_examples() {
    let f = parse("int ptr; assert ptr > 99; assert ptr < 50;").unwrap();
    assert_eq!(solve(&f.symbolic, &[], &f.decls).unwrap(), SymVerdict::Unsat { complete: true });
    let c: Vec<Constraint> = f.symbolic.clone();
    assert!(!c.is_empty());
}
