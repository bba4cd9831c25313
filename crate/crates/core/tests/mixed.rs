use std::collections::BTreeSet;
use std::sync::Arc;

use nsx_core::harness::{builtin, loop_suite, run_loop_task, validate_witness, LoopTaskConfig, Validation};
use nsx_core::lang::{parse, VarKind};
use nsx_core::mixed::{build_graph, solve, verify, ComponentClass, SolveConfig, Stage, Verdict};
use nsx_core::nnet::MlpModel;
use nsx_core::value::Value;

fn affine(ins: &[&str], out: &str, w: &[f64], b: f64) -> Arc<MlpModel> {
    let i: Vec<(&str, VarKind)> = ins.iter().map(|n| (*n, VarKind::Int)).collect();
    let mut m = MlpModel::zeros(&[ins.len(), 1], &i, &[(out, VarKind::Int)]);
    m.weights[0] = w.to_vec();
    m.biases[0] = vec![b];
    Arc::new(m)
}

#[test]
fn graph_splits_into_three_classes() {
    let f = parse(
        "int a; int b; int x; int y; int p; int q;\n\
         assert a > 1; assert a < b;\n\
         neural \"m\" (x) -> (y); assert y > 3;\n\
         neural \"n\" (p) -> (q);",
    )
    .unwrap();
    let g = build_graph(&f);
    let classes: Vec<ComponentClass> = g.components.iter().map(|c| c.class).collect();
    assert_eq!(classes, [ComponentClass::PureSymbolic, ComponentClass::Mixed, ComponentClass::PureNeural]);
    assert_eq!(g.components[0].symbolic, [0, 1]);
    assert_eq!(g.components[1].symbolic, [2]);
    assert_eq!(g.components[1].neural, [0]);
    assert_eq!(g.components[2].vars, BTreeSet::from(["p".to_string(), "q".to_string()]));
}

#[test]
fn single_atom_is_one_component() {
    let g = build_graph(&parse("int x; assert x > 1;").unwrap());
    assert_eq!(g.components.len(), 1);
    assert_eq!(g.components[0].class, ComponentClass::PureSymbolic);
}

#[test]
fn symbolic_refutation_skips_the_networks() {
    let f = parse("int ptr; int u; assert ptr > 99 && ptr < 50; neural \"m\" (u) -> (ptr);").unwrap();
    let r = solve(&f, &[affine(&["u"], "ptr", &[1.0], 0.0)], &SolveConfig::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Unsat);
    assert_eq!(r.diagnostics.model_evals, 0);
}

#[test]
fn rejected_picks_are_never_reproposed() {
    // the network only reaches y >= 5, so picks below 5 fail
    let f = parse("int x in 0..20; int y in 0..20; assert y >= 0; neural \"m\" (x) -> (y);").unwrap();
    let r = solve(&f, &[affine(&["x"], "y", &[1.0], 5.0)], &SolveConfig::default()).unwrap();
    let Verdict::Sat(a) = &r.verdict else { panic!("{}", r.report()) };
    assert_eq!(a.num("y").unwrap(), a.num("x").unwrap() + 5.0);
    let c = &r.diagnostics.conflicts;
    let ys: BTreeSet<i64> = c.iter().map(|a| a.num("y").unwrap() as i64).collect();
    assert_eq!(ys.len(), c.len());
    assert_eq!(ys, BTreeSet::from([0, 1, 2, 3, 4]));
    assert_eq!(r.diagnostics.components[0].mixed1_iterations, 6);
}

#[test]
fn unreachable_outputs_stop_after_the_pick_budget() {
    let f = parse("int x in 0..20; int y in 0..20; assert y >= 0; neural \"m\" (x) -> (y);").unwrap();
    let cfg = SolveConfig { max_trial2: 7, ..Default::default() };
    let r = solve(&f, &[affine(&["x"], "y", &[1.0], 100.0)], &cfg).unwrap();
    assert_eq!(r.verdict, Verdict::Unknown);
    let rep = &r.diagnostics.components[0];
    assert_eq!(rep.mixed1_iterations, 7);
    assert_eq!(rep.stage, Stage::Exhausted);
    let ys: BTreeSet<i64> = r.diagnostics.conflicts.iter().map(|a| a.num("y").unwrap() as i64).collect();
    assert_eq!(ys.len(), 7);

    let r = solve(&f, &[affine(&["x"], "y", &[1.0], 100.0)], &SolveConfig { compat_unsat: true, ..cfg }).unwrap();
    assert_eq!(r.verdict, Verdict::Unsat);
    assert!(r.diagnostics.collapsed_unknown);
}

#[test]
fn mixed_two_handles_constraints_on_outputs_only() {
    let f = parse("int x in -30..30; int y; assert y * y == 49; neural \"m\" (x) -> (y);").unwrap();
    let m = affine(&["x"], "y", &[2.0], 1.0);
    let r = solve(&f, std::slice::from_ref(&m), &SolveConfig::default()).unwrap();
    let Verdict::Sat(a) = &r.verdict else { panic!("{}", r.report()) };
    assert!(verify(&f, &[m], a).is_ok());
    assert!([3.0, -4.0].contains(&a.num("x").unwrap()), "{a}");
}

#[test]
fn verify_rejects_inconsistent_assignments() {
    let f = parse("int x in 0..9; int y; assert y > 2; neural \"m\" (x) -> (y);").unwrap();
    let m = [affine(&["x"], "y", &[1.0], 0.0)];
    let mut a: nsx_core::value::Assignment = [("x".to_string(), Value::Int(4)), ("y".to_string(), Value::Int(4))].into_iter().collect();
    assert!(verify(&f, &m, &a).is_ok());
    a.insert("y", Value::Int(5));
    assert!(verify(&f, &m, &a).is_err());
    a.insert("x", Value::Int(12));
    a.insert("y", Value::Int(12));
    assert!(verify(&f, &m, &a).is_err());
    a.insert("x", Value::Real(4.0));
    assert!(verify(&f, &m, &a).is_err());
}

#[test]
fn component_order_does_not_change_the_answer() {
    let m = affine(&["x"], "y", &[3.0], -2.0);
    let a = parse("int s; int x in 0..10; int y; assert s == 4; assert y == 13; neural \"m\" (x) -> (y);").unwrap();
    let b = parse("int s; int x in 0..10; int y; neural \"m\" (x) -> (y); assert y == 13; assert s == 4;").unwrap();
    let ra = solve(&a, std::slice::from_ref(&m), &SolveConfig::default()).unwrap();
    let rb = solve(&b, &[m], &SolveConfig::default()).unwrap();
    assert_eq!(ra.summary_line(), "SAT s=4 x=5 y=13");
    assert_eq!(ra.verdict, rb.verdict);
}

#[test]
fn fig8_witness_reaches_the_negated_guard() {
    let p = loop_suite().into_iter().find(|p| p.name == "fig8").unwrap();
    let rep = run_loop_task(&p, &p.guard, &LoopTaskConfig::default()).unwrap();
    assert!(rep.validated, "{}", rep.to_kv());
    let w = rep.attempts.iter().find_map(|a| a.witness.clone()).unwrap();
    let target = builtin("fig8").unwrap();
    assert_eq!(validate_witness(target.as_ref(), &p.guard, &w), Validation::Concrete);
}
