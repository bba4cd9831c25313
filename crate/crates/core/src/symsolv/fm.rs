//! Fourier–Motzkin refutation of the mandatory linear atoms. Runs in exact
//! integer arithmetic and only ever proves emptiness; anything it cannot
//! represent is left to the search.

use super::interval::Iv;
use super::lower::{Node, Problem, Term};
use crate::lang::{ArithOp, CmpOp};

const MAX_ROWS: usize = 2000;
const MAX_MAG: i128 = 1 << 52;

/// `sum coef[i] * x[i] + c <= 0`, or `< 0` when strict.
#[derive(Debug, Clone, PartialEq)]
struct Row {
    coef: Vec<i128>,
    c: i128,
    strict: bool,
}

/// Linear form over integers: coefficients plus constant.
fn linear(t: &Term, n: usize) -> Option<(Vec<i128>, i128)> {
    let int = |v: f64| (v.fract() == 0.0 && v.abs() < MAX_MAG as f64).then_some(v as i128);
    match t {
        Term::Const(v) => Some((vec![0; n], int(*v)?)),
        Term::Var(i) => {
            let mut c = vec![0; n];
            c[*i] = 1;
            Some((c, 0))
        }
        Term::Bin(op, l, r) => {
            let (a, ac) = linear(l, n)?;
            let (b, bc) = linear(r, n)?;
            match op {
                ArithOp::Add => Some((a.iter().zip(&b).map(|(x, y)| x + y).collect(), ac + bc)),
                ArithOp::Sub => Some((a.iter().zip(&b).map(|(x, y)| x - y).collect(), ac - bc)),
                ArithOp::Mul => {
                    let (k, form, fc) = if a.iter().all(|&x| x == 0) {
                        (ac, b, bc)
                    } else if b.iter().all(|&x| x == 0) {
                        (bc, a, ac)
                    } else {
                        return None;
                    };
                    Some((form.iter().map(|x| x * k).collect(), fc * k))
                }
                ArithOp::Div => None,
            }
        }
    }
}

fn mandatory<'a>(n: &'a Node, out: &mut Vec<&'a Node>) {
    match n {
        Node::And(ch) => ch.iter().for_each(|c| mandatory(c, out)),
        Node::Or(ch) if ch.len() == 1 => mandatory(&ch[0], out),
        Node::Atom(_) => out.push(n),
        _ => {}
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Divide through by the coefficient gcd. For all-integer rows the constant
/// may then be rounded (a Chvátal–Gomory cut).
fn normalize(mut r: Row, ints: &[bool]) -> Row {
    let g = r.coef.iter().fold(0, |g, &x| gcd(g, x));
    let all_int = r.coef.iter().zip(ints).all(|(&k, &int)| k == 0 || int);
    if all_int && r.strict {
        r.c += 1;
        r.strict = false;
    }
    if g > 1 {
        if all_int {
            r.coef.iter_mut().for_each(|x| *x /= g);
            // sum <= -c  becomes  sum/g <= floor(-c/g)
            r.c = -(-r.c).div_euclid(g);
        } else if r.c % g == 0 {
            r.coef.iter_mut().for_each(|x| *x /= g);
            r.c /= g;
        }
    }
    r
}

fn contradiction(r: &Row) -> bool {
    r.coef.iter().all(|&x| x == 0) && (r.c > 0 || (r.strict && r.c >= 0))
}

pub(crate) fn refutes(p: &Problem, bx: &[Iv]) -> bool {
    let n = p.vars.len();
    let ints: Vec<bool> = p.vars.iter().map(|v| v.int).collect();
    let mut atoms = Vec::new();
    mandatory(&p.root, &mut atoms);
    let mut rows = Vec::new();
    for node in atoms {
        let Node::Atom(a) = node else { continue };
        let Some((coef, c)) = linear(&a.e, n) else { continue };
        let negate = |coef: &[i128], c: i128| (coef.iter().map(|x| -x).collect::<Vec<_>>(), -c);
        match a.op {
            CmpOp::Le => rows.push(Row { coef, c, strict: false }),
            CmpOp::Lt => rows.push(Row { coef, c, strict: true }),
            CmpOp::Ge => {
                let (coef, c) = negate(&coef, c);
                rows.push(Row { coef, c, strict: false });
            }
            CmpOp::Gt => {
                let (coef, c) = negate(&coef, c);
                rows.push(Row { coef, c, strict: true });
            }
            CmpOp::Eq => {
                let (nc, ncc) = negate(&coef, c);
                rows.push(Row { coef, c, strict: false });
                rows.push(Row { coef: nc, c: ncc, strict: false });
            }
            CmpOp::Ne => {}
        }
    }
    if rows.len() < 2 {
        return false;
    }
    let used: Vec<usize> = (0..n).filter(|&i| rows.iter().any(|r| r.coef[i] != 0)).collect();
    for &i in &used {
        let iv = bx[i];
        let bound = |v: f64| (v.is_finite() && v.fract() == 0.0 && v.abs() < MAX_MAG as f64).then_some(v as i128);
        if let Some(hi) = bound(iv.hi) {
            let mut coef = vec![0; n];
            coef[i] = 1;
            rows.push(Row { coef, c: -hi, strict: false });
        }
        if let Some(lo) = bound(iv.lo) {
            let mut coef = vec![0; n];
            coef[i] = -1;
            rows.push(Row { coef, c: lo, strict: false });
        }
    }
    let mut rows: Vec<Row> = rows.into_iter().map(|r| normalize(r, &ints)).collect();
    let mut remaining = used;
    loop {
        if rows.iter().any(contradiction) {
            return true;
        }
        if remaining.is_empty() {
            return false;
        }
        // eliminate the variable producing the fewest new rows
        let (pos_i, &v) = remaining
            .iter()
            .enumerate()
            .min_by_key(|(_, &v)| {
                let p = rows.iter().filter(|r| r.coef[v] > 0).count();
                let q = rows.iter().filter(|r| r.coef[v] < 0).count();
                p * q
            })
            .unwrap();
        remaining.remove(pos_i);
        let (mut keep, mut pos, mut neg) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows {
            match r.coef[v].signum() {
                1 => pos.push(r),
                -1 => neg.push(r),
                _ => keep.push(r),
            }
        }
        if keep.len() + pos.len() * neg.len() > MAX_ROWS {
            return false;
        }
        for p in &pos {
            for q in &neg {
                let (a, b) = (p.coef[v], -q.coef[v]);
                let coef: Vec<i128> = p.coef.iter().zip(&q.coef).map(|(x, y)| b * x + a * y).collect();
                let c = b * p.c + a * q.c;
                if coef.iter().any(|x| x.abs() > MAX_MAG) || c.abs() > MAX_MAG {
                    return false;
                }
                let row = normalize(Row { coef, c, strict: p.strict || q.strict }, &ints);
                if !keep.contains(&row) {
                    keep.push(row);
                }
            }
        }
        rows = keep;
    }
}
