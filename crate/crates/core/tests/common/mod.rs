#![allow(dead_code)]

use std::collections::HashMap;

use nsx_core::lang::{ArithOp, CmpOp, Constraint, Expr, VarDecl, VarKind};
use nsx_core::nnet::{MlpModel, Stat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub enum OVal {
    N(f64),
    S(String),
}

/// Independent tree-walking evaluator. `None` marks a failed evaluation
/// (division by zero) which makes the enclosing atom false.
pub fn oracle_expr(e: &Expr, env: &HashMap<String, OVal>) -> Option<OVal> {
    match e {
        Expr::Num(v) => Some(OVal::N(*v)),
        Expr::Str(s) => Some(OVal::S(s.clone())),
        Expr::Var(n) => Some(env.get(n).expect("unbound in oracle").clone()),
        Expr::Arith(op, l, r) => {
            let (OVal::N(x), OVal::N(y)) = (oracle_expr(l, env)?, oracle_expr(r, env)?) else { panic!("type") };
            let v = match op {
                ArithOp::Add => x + y,
                ArithOp::Sub => x - y,
                ArithOp::Mul => x * y,
                ArithOp::Div if y == 0.0 => return None,
                ArithOp::Div => x / y,
            };
            Some(OVal::N(v))
        }
        Expr::StrLen(s) => match oracle_expr(s, env)? {
            OVal::S(s) => Some(OVal::N(s.chars().count() as f64)),
            _ => panic!("type"),
        },
        Expr::StrStr(h, n) => match (oracle_expr(h, env)?, oracle_expr(n, env)?) {
            (OVal::S(h), OVal::S(n)) => {
                let hc: Vec<char> = h.chars().collect();
                let nc: Vec<char> = n.chars().collect();
                let idx = (0..=hc.len()).find(|&i| i + nc.len() <= hc.len() && hc[i..i + nc.len()] == nc[..]);
                Some(OVal::N(idx.map_or(-1.0, |i| i as f64)))
            }
            _ => panic!("type"),
        },
        Expr::Concat(l, r) => match (oracle_expr(l, env)?, oracle_expr(r, env)?) {
            (OVal::S(a), OVal::S(b)) => Some(OVal::S(a + &b)),
            _ => panic!("type"),
        },
    }
}

pub fn oracle_holds(c: &Constraint, env: &HashMap<String, OVal>) -> bool {
    match c {
        Constraint::And(l, r) => oracle_holds(l, env) && oracle_holds(r, env),
        Constraint::Or(l, r) => oracle_holds(l, env) || oracle_holds(r, env),
        Constraint::Contains(h, n) => match (oracle_expr(h, env), oracle_expr(n, env)) {
            (Some(OVal::S(h)), Some(OVal::S(n))) => h.contains(&n),
            _ => false,
        },
        Constraint::Cmp(op, l, r) => {
            let (Some(a), Some(b)) = (oracle_expr(l, env), oracle_expr(r, env)) else { return false };
            match (a, b) {
                (OVal::N(x), OVal::N(y)) => match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Gt => x > y,
                    CmpOp::Ge => x >= y,
                },
                (OVal::S(x), OVal::S(y)) => match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    _ => panic!("string order"),
                },
                _ => panic!("type"),
            }
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_op(r: &mut impl Rng) -> CmpOp {
    CmpOp::ALL[r.gen_range(0..6)]
}

/// Random numeric expression over `ints` plus `strlen` of `strs`.
pub fn random_expr(r: &mut impl Rng, ints: &[String], strs: &[String], depth: u32) -> Expr {
    let leaf = depth == 0 || r.gen_bool(0.45);
    if leaf {
        return match r.gen_range(0..10) {
            0..=2 => Expr::Num(r.gen_range(-6..=6) as f64),
            3 if !strs.is_empty() => Expr::strlen(Expr::var(strs[r.gen_range(0..strs.len())].clone())),
            _ => Expr::var(ints[r.gen_range(0..ints.len())].clone()),
        };
    }
    let op = match r.gen_range(0..10) {
        0..=3 => ArithOp::Add,
        4..=6 => ArithOp::Sub,
        7..=8 => ArithOp::Mul,
        _ => ArithOp::Div,
    };
    Expr::arith(op, random_expr(r, ints, strs, depth - 1), random_expr(r, ints, strs, depth - 1))
}

pub fn random_constraint(r: &mut impl Rng, ints: &[String], strs: &[String], depth: u32) -> Constraint {
    if depth == 0 || r.gen_bool(0.5) {
        return Constraint::cmp(random_op(r), random_expr(r, ints, strs, 2), random_expr(r, ints, strs, 1));
    }
    let (a, b) = (random_constraint(r, ints, strs, depth - 1), random_constraint(r, ints, strs, depth - 1));
    if r.gen_bool(0.5) {
        Constraint::and(a, b)
    } else {
        Constraint::or(a, b)
    }
}

/// Small-domain instance: 1–3 integer variables, optionally one bounded string.
pub fn random_instance(r: &mut impl Rng) -> (Vec<VarDecl>, Vec<Constraint>) {
    let n = r.gen_range(1..=3);
    let ints: Vec<String> = ["a", "b", "c"][..n].iter().map(|s| s.to_string()).collect();
    let mut decls: Vec<VarDecl> = ints
        .iter()
        .map(|v| {
            let lo = r.gen_range(-6..=2) as f64;
            let hi = lo + r.gen_range(0..=8) as f64;
            VarDecl::new(v.clone(), VarKind::Int).with_range(lo, hi)
        })
        .collect();
    let strs: Vec<String> = if r.gen_bool(0.3) {
        decls.push(VarDecl::new("s", VarKind::Str).with_max_len(3));
        vec!["s".into()]
    } else {
        vec![]
    };
    let k = r.gen_range(1..=3);
    let cs = (0..k).map(|_| random_constraint(r, &ints, &strs, 2)).collect();
    (decls, cs)
}

/// Random network with standardization stats away from identity.
pub fn random_mlp(r: &mut impl Rng, n_in: usize, hidden: &[usize], n_out: usize) -> MlpModel {
    let mut sizes = vec![n_in];
    sizes.extend_from_slice(hidden);
    sizes.push(n_out);
    let ins: Vec<String> = (0..n_in).map(|i| format!("x{i}")).collect();
    let outs: Vec<String> = (0..n_out).map(|i| format!("y{i}")).collect();
    let ins: Vec<(&str, VarKind)> = ins.iter().map(|s| (s.as_str(), VarKind::Real)).collect();
    let outs: Vec<(&str, VarKind)> = outs.iter().map(|s| (s.as_str(), VarKind::Real)).collect();
    let mut m = MlpModel::zeros(&sizes, &ins, &outs);
    for w in m.weights.iter_mut().chain(m.biases.iter_mut()) {
        w.iter_mut().for_each(|v| *v = r.gen_range(-1.0..1.0));
    }
    for s in m.input_stats.iter_mut().chain(m.output_stats.iter_mut()) {
        *s = Stat { mean: r.gen_range(-3.0..3.0), std: r.gen_range(0.5..3.0) };
    }
    m
}

/// Independent forward pass: raw outputs plus every hidden pre-activation.
pub fn oracle_forward(m: &MlpModel, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut a: Vec<f64> = x.iter().zip(&m.input_stats).map(|(v, s)| (v - s.mean) / s.std).collect();
    let mut pre = Vec::new();
    let n = m.weights.len();
    for l in 0..n {
        let n_in = m.layer_sizes[l];
        let z: Vec<f64> = (0..m.layer_sizes[l + 1])
            .map(|o| m.biases[l][o] + (0..n_in).map(|i| m.weights[l][o * n_in + i] * a[i]).sum::<f64>())
            .collect();
        if l + 1 < n {
            pre.extend_from_slice(&z);
            a = z.into_iter().map(|v| v.max(0.0)).collect();
        } else {
            a = z;
        }
    }
    (a.iter().zip(&m.output_stats).map(|(v, s)| v * s.std + s.mean).collect(), pre)
}

pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Norm-wise relative error, with norms below 1e-6 treated as 1e-6 so that
/// rounding noise around a vanishing gradient does not count.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(a).max(norm(b)).max(1e-6)
}

fn oracle_num(e: &Expr, env: &HashMap<String, f64>, margin: &mut f64) -> Option<f64> {
    Some(match e {
        Expr::Num(v) => *v,
        Expr::Var(n) => env[n],
        Expr::Arith(op, l, r) => {
            let (x, y) = (oracle_num(l, env, margin)?, oracle_num(r, env, margin)?);
            match op {
                ArithOp::Add => x + y,
                ArithOp::Sub => x - y,
                ArithOp::Mul => x * y,
                ArithOp::Div => {
                    *margin = margin.min(y.abs());
                    if y == 0.0 {
                        return None;
                    }
                    x / y
                }
            }
        }
        _ => panic!("numeric oracle only"),
    })
}

/// Encoded loss transcribed operator by operator, with the distance from the
/// nearest non-differentiable point (max/abs switch, Or tie, small divisor).
/// An atom dividing by zero has infinite loss.
pub fn oracle_loss(c: &Constraint, env: &HashMap<String, f64>, alpha: f64, beta: f64) -> (f64, f64) {
    match c {
        Constraint::Cmp(op, l, r) => {
            let mut m = f64::INFINITY;
            let (Some(x), Some(y)) = (oracle_num(l, env, &mut m), oracle_num(r, env, &mut m)) else {
                return (f64::INFINITY, 0.0);
            };
            let d = x - y;
            let (v, k) = match op {
                CmpOp::Lt => ((d + alpha).max(0.0), (d + alpha).abs()),
                CmpOp::Gt => ((-d + alpha).max(0.0), (-d + alpha).abs()),
                CmpOp::Le => (d.max(0.0), d.abs()),
                CmpOp::Ge => ((-d).max(0.0), d.abs()),
                CmpOp::Eq => (d.abs(), d.abs()),
                CmpOp::Ne => {
                    let u = (d + beta).abs();
                    ((-u).max(-1.0), u.min((u - 1.0).abs()))
                }
            };
            (v, k.min(m))
        }
        Constraint::And(a, b) => {
            let (x, kx) = oracle_loss(a, env, alpha, beta);
            let (y, ky) = oracle_loss(b, env, alpha, beta);
            (x + y, kx.min(ky))
        }
        Constraint::Or(a, b) => {
            let (x, kx) = oracle_loss(a, env, alpha, beta);
            let (y, ky) = oracle_loss(b, env, alpha, beta);
            // the losing child's kinks do not matter unless it is infinite
            let k = match (x.is_finite(), y.is_finite()) {
                (true, true) => kx.min(ky).min((x - y).abs()),
                (true, false) => kx,
                (false, true) => ky,
                (false, false) => 0.0,
            };
            (x.min(y), k)
        }
        Constraint::Contains(..) => panic!("string atom"),
    }
}
