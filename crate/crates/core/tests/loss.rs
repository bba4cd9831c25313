mod common;

use std::collections::HashMap;

use common::*;
use nsx_core::lang::{parse_constraint, CmpOp, Constraint};
use nsx_core::loss::{encode, minimum_implies_sat_check, LossConfig, LossError, LossFunction};
use rand::Rng;

fn vars() -> Vec<String> {
    ["a", "b", "c"].iter().map(|s| s.to_string()).collect()
}

fn env_of(names: &[String], x: &[f64]) -> HashMap<String, f64> {
    names.iter().cloned().zip(x.iter().copied()).collect()
}

#[test]
fn spec_examples() {
    let cfg = LossConfig::default();
    let e = encode(&parse_constraint("ptr > 99").unwrap(), cfg).unwrap();
    assert_eq!(e.eval(&[50.0]), 49.5);
    let e = encode(&parse_constraint("a != b && c < d").unwrap(), cfg).unwrap();
    assert_eq!(e.eval(&[0.0, 5.0, 0.0, 1.0]), -1.0);
}

#[test]
fn eval_matches_table_transcription() {
    let mut r = rng(21);
    let cfg = LossConfig::default();
    for _ in 0..500 {
        let c = random_constraint(&mut r, &vars(), &[], 2);
        let lf = encode(&c, cfg).unwrap();
        let x: Vec<f64> = lf.vars().iter().map(|_| r.gen_range(-6.0..6.0)).collect();
        let (want, _) = oracle_loss(&c, &env_of(lf.vars(), &x), cfg.alpha, cfg.beta);
        let got = lf.eval(&x);
        if want.is_infinite() {
            assert_eq!(got, want, "{c:?}");
        } else {
            assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{c:?}: {got} vs {want}");
        }
    }
}

#[test]
fn gradients_match_central_differences() {
    let mut r = rng(22);
    let cfg = LossConfig { alpha: 0.5, beta: 0.25 };
    let mut checked = 0;
    while checked < 200 {
        let c = random_constraint(&mut r, &vars(), &[], 2);
        let lf = encode(&c, cfg).unwrap();
        let x: Vec<f64> = lf.vars().iter().map(|_| r.gen_range(-6.0..6.0)).collect();
        let (l, margin) = oracle_loss(&c, &env_of(lf.vars(), &x), cfg.alpha, cfg.beta);
        if !l.is_finite() || margin <= 5e-2 {
            continue;
        }
        let fd = central_diff(|p| lf.eval(p), &x, 1e-5);
        let (_, g) = lf.grad(&x);
        assert!(rel_err(&g, &fd) < 1e-4, "{c:?} at {x:?}: {g:?} vs {fd:?}");
        checked += 1;
    }
}

#[test]
fn zero_loss_soundness_per_row() {
    let mut r = rng(23);
    let cfg = LossConfig::default();
    for op in CmpOp::ALL {
        for _ in 0..200 {
            let c = Constraint::cmp(op, random_expr(&mut r, &vars(), &[], 2), random_expr(&mut r, &vars(), &[], 1));
            let lf = encode(&c, cfg).unwrap();
            let x: Vec<f64> = lf.vars().iter().map(|_| r.gen_range(-4..=4) as f64).collect();
            let l = lf.eval(&x);
            let env: HashMap<String, OVal> = env_of(lf.vars(), &x).into_iter().map(|(k, v)| (k, OVal::N(v))).collect();
            let holds = oracle_holds(&c, &env);
            match op {
                CmpOp::Ne if l == -1.0 => assert!(holds),
                CmpOp::Ne => {}
                CmpOp::Le | CmpOp::Ge | CmpOp::Eq if l.is_finite() => assert_eq!(l == 0.0, holds, "{c:?}"),
                CmpOp::Lt | CmpOp::Gt if l == 0.0 => assert!(holds),
                _ => {}
            }
        }
    }
}

#[test]
fn grid_check_spec_examples() {
    let cfg = LossConfig::default();
    let c = parse_constraint("a < b").unwrap();
    assert!(minimum_implies_sat_check(&c, &encode(&c, cfg).unwrap(), &[(0, 5), (0, 5)]).unwrap());
    let c = parse_constraint("a != b").unwrap();
    assert!(minimum_implies_sat_check(&c, &encode(&c, cfg).unwrap(), &[(0, 3), (0, 3)]).unwrap());
    let c = parse_constraint("x > 3 && x < 4").unwrap();
    assert!(minimum_implies_sat_check(&c, &encode(&c, cfg).unwrap(), &[(-5, 5)]).unwrap());
    assert!(matches!(
        minimum_implies_sat_check(&c, &encode(&c, cfg).unwrap(), &[(0, 1), (0, 1)]),
        Err(LossError::Arity { .. })
    ));
}

#[test]
fn and_sums_and_or_takes_the_minimum() {
    let mut r = rng(24);
    let cfg = LossConfig::default();
    for _ in 0..200 {
        let (p, q) = (random_constraint(&mut r, &vars(), &[], 1), random_constraint(&mut r, &vars(), &[], 1));
        let and = encode(&Constraint::and(p.clone(), q.clone()), cfg).unwrap();
        let or = encode(&Constraint::or(p.clone(), q.clone()), cfg).unwrap();
        let x: Vec<f64> = and.vars().iter().map(|_| r.gen_range(-5.0..5.0)).collect();
        let env = env_of(and.vars(), &x);
        let ((lp, _), (lq, _)) = (oracle_loss(&p, &env, 0.5, 0.5), oracle_loss(&q, &env, 0.5, 0.5));
        if !(lp.is_finite() && lq.is_finite()) {
            continue;
        }
        assert!((and.eval(&x) - (lp + lq)).abs() < 1e-9);
        assert!((or.eval(&x) - lp.min(lq)).abs() < 1e-9);
    }
}
