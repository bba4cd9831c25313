//! Interval propagation with case splitting.

use super::interval::{self, Iv, FULL};
use super::lower::{Node, NumAtom, Problem, Term};
use super::{fm, materialize, SymConfig, SymError, SymStats, SymVerdict};
use crate::lang::{ArithOp, CmpOp, VarKind};
use crate::value::{eval_constraint, Assignment, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Tv {
    T,
    F,
    U,
}

fn atom_tv(a: &NumAtom, bx: &[Iv]) -> Tv {
    let z = a.e.eval_iv(bx);
    if z.is_empty() {
        return Tv::F;
    }
    let (t, f) = match a.op {
        CmpOp::Le => (z.hi <= 0.0, z.lo > 0.0),
        CmpOp::Lt => (z.hi < 0.0, z.lo >= 0.0),
        CmpOp::Ge => (z.lo >= 0.0, z.hi < 0.0),
        CmpOp::Gt => (z.lo > 0.0, z.hi <= 0.0),
        CmpOp::Eq => (z.lo == 0.0 && z.hi == 0.0, z.lo > 0.0 || z.hi < 0.0),
        CmpOp::Ne => (z.lo > 0.0 || z.hi < 0.0, z.lo == 0.0 && z.hi == 0.0),
    };
    if t && !has_div(&a.e) {
        Tv::T
    } else if f {
        Tv::F
    } else {
        Tv::U
    }
}

/// Atoms with a division can fail on a zero divisor even when the interval
/// says true, so they never count as certainly true.
fn has_div(t: &Term) -> bool {
    match t {
        Term::Bin(ArithOp::Div, ..) => true,
        Term::Bin(_, l, r) => has_div(l) || has_div(r),
        _ => false,
    }
}

pub(crate) fn tv(n: &Node, bx: &[Iv]) -> Tv {
    match n {
        Node::True => Tv::T,
        Node::False => Tv::F,
        Node::Atom(a) => atom_tv(a, bx),
        Node::Deferred(_) => Tv::U,
        Node::And(ch) => {
            let mut all = true;
            for c in ch {
                match tv(c, bx) {
                    Tv::F => return Tv::F,
                    Tv::U => all = false,
                    Tv::T => {}
                }
            }
            if all {
                Tv::T
            } else {
                Tv::U
            }
        }
        Node::Or(ch) => {
            let mut none = true;
            for c in ch {
                match tv(c, bx) {
                    Tv::T => return Tv::T,
                    Tv::U => none = false,
                    Tv::F => {}
                }
            }
            if none {
                Tv::F
            } else {
                Tv::U
            }
        }
    }
}

fn target(a: &NumAtom, bx: &[Iv]) -> Iv {
    let step = if a.integral { 1.0 } else { 0.0 };
    match a.op {
        CmpOp::Le => Iv::new(f64::NEG_INFINITY, 0.0),
        CmpOp::Lt => Iv::new(f64::NEG_INFINITY, -step),
        CmpOp::Ge => Iv::new(0.0, f64::INFINITY),
        CmpOp::Gt => Iv::new(step, f64::INFINITY),
        CmpOp::Eq => Iv::point(0.0),
        CmpOp::Ne => {
            if !a.integral {
                return FULL;
            }
            let z = a.e.eval_iv(bx);
            if z.lo == 0.0 {
                Iv::new(1.0, f64::INFINITY)
            } else if z.hi == 0.0 {
                Iv::new(f64::NEG_INFINITY, -1.0)
            } else {
                FULL
            }
        }
    }
}

/// HC4-style backward narrowing of `t` into `want`. Returns false when empty.
fn revise(t: &Term, want: Iv, bx: &mut [Iv], ints: &[bool]) -> bool {
    match t {
        Term::Const(c) => want.contains(*c),
        Term::Var(i) => {
            let mut r = bx[*i].meet(want);
            if ints[*i] {
                r = r.integral();
            }
            bx[*i] = r;
            !r.is_empty()
        }
        Term::Bin(op, l, r) => {
            let (x, y) = (l.eval_iv(bx), r.eval_iv(bx));
            let z = interval::apply(*op, x, y).meet(want);
            if z.is_empty() {
                return false;
            }
            let (tl, tr) = match op {
                ArithOp::Add => (interval::sub(z, y), interval::sub(z, x)),
                ArithOp::Sub => (interval::add(z, y), interval::sub(x, z)),
                ArithOp::Mul => (
                    if y.contains(0.0) { FULL } else { interval::div(z, y) },
                    if x.contains(0.0) { FULL } else { interval::div(z, x) },
                ),
                ArithOp::Div => (interval::mul(z, y), if z.contains(0.0) { FULL } else { interval::div(x, z) }),
            };
            revise(l, tl, bx, ints) && revise(r, tr, bx, ints)
        }
    }
}

fn narrow(n: &Node, bx: &mut [Iv], ints: &[bool]) -> bool {
    match n {
        Node::True | Node::Deferred(_) => true,
        Node::False => false,
        Node::Atom(a) => match atom_tv(a, bx) {
            Tv::F => false,
            Tv::T => true,
            Tv::U => {
                let want = target(a, bx);
                revise(&a.e, want, bx, ints)
            }
        },
        Node::And(ch) => ch.iter().all(|c| narrow(c, bx, ints)),
        Node::Or(ch) => {
            let mut live = None;
            let mut count = 0;
            for c in ch {
                match tv(c, bx) {
                    Tv::T => return true,
                    Tv::F => {}
                    Tv::U => {
                        count += 1;
                        live = Some(c);
                    }
                }
            }
            match (count, live) {
                (0, _) => false,
                (1, Some(c)) => narrow(c, bx, ints),
                _ => true,
            }
        }
    }
}

const MAX_ROUNDS: usize = 64;

pub(crate) fn propagate(root: &Node, bx: &mut [Iv], ints: &[bool]) -> bool {
    for _ in 0..MAX_ROUNDS {
        let before = bx.to_vec();
        if !narrow(root, bx, ints) || bx.iter().any(Iv::is_empty) {
            return false;
        }
        if before == bx {
            break;
        }
    }
    true
}

/// Variables of the sub-formulas whose truth is still open.
fn open_vars(n: &Node, bx: &[Iv], out: &mut Vec<usize>, deferred: &mut bool) {
    match n {
        Node::True | Node::False => {}
        Node::Atom(a) => {
            if atom_tv(a, bx) == Tv::U {
                for v in &a.vars {
                    if !out.contains(v) {
                        out.push(*v);
                    }
                }
            }
        }
        Node::Deferred(vs) => {
            *deferred = true;
            for v in vs {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
        }
        Node::And(ch) | Node::Or(ch) => {
            if tv(n, bx) == Tv::U {
                for c in ch {
                    open_vars(c, bx, out, deferred);
                }
            }
        }
    }
}

fn splittable(iv: Iv, int: bool) -> bool {
    if int {
        iv.lo < iv.hi
    } else {
        iv.width() > 1e-9 * iv.lo.abs().max(iv.hi.abs()).max(1.0)
    }
}

fn halves(iv: Iv, int: bool) -> (Iv, Iv) {
    let (a, b) = if int {
        let mid = ((iv.lo + iv.hi) / 2.0).floor();
        (Iv::new(iv.lo, mid), Iv::new(mid + 1.0, iv.hi))
    } else {
        let mid = iv.lo + (iv.hi - iv.lo) / 2.0;
        (Iv::new(iv.lo, mid), Iv::new(mid, iv.hi))
    };
    if b.nearest_zero().abs() < a.nearest_zero().abs() {
        (b, a)
    } else {
        (a, b)
    }
}

pub(crate) fn run(p: &Problem, cfg: &SymConfig) -> Result<(SymVerdict, SymStats), SymError> {
    let ints: Vec<bool> = p.vars.iter().map(|v| v.int).collect();
    let mut stats = SymStats::default();
    let root_box: Vec<Iv> = p.vars.iter().map(|v| v.dom).collect();
    if root_box.iter().any(Iv::is_empty) {
        return Ok((SymVerdict::Unsat { complete: true }, stats));
    }
    if fm::refutes(p, &root_box) {
        stats.fm_refuted = true;
        return Ok((SymVerdict::Unsat { complete: true }, stats));
    }

    let mut complete = true;
    let mut stack = vec![root_box];
    while let Some(mut bx) = stack.pop() {
        stats.nodes += 1;
        if stats.nodes > cfg.node_budget {
            return Err(SymError::Budget { nodes: cfg.node_budget });
        }
        if !propagate(&p.root, &mut bx, &ints) {
            continue;
        }
        let mut open = Vec::new();
        let mut deferred = false;
        match tv(&p.root, &bx) {
            Tv::F => continue,
            Tv::T => {}
            Tv::U => open_vars(&p.root, &bx, &mut open, &mut deferred),
        }
        let pick = open
            .iter()
            .copied()
            .filter(|&v| splittable(bx[v], ints[v]))
            .min_by(|&a, &b| bx[a].width().total_cmp(&bx[b].width()).then(a.cmp(&b)));
        if let Some(v) = pick {
            let (near, far) = halves(bx[v], ints[v]);
            let mut far_box = bx.clone();
            far_box[v] = far;
            bx[v] = near;
            stack.push(far_box);
            stack.push(bx);
            continue;
        }
        stats.leaves += 1;
        if let Some(a) = try_leaf(p, &bx, &open) {
            return Ok((SymVerdict::Sat(a), stats));
        }
        let real_open = open.iter().any(|&v| !ints[v] && bx[v].lo < bx[v].hi);
        if deferred || real_open {
            complete = false;
        }
    }
    Ok((SymVerdict::Unsat { complete }, stats))
}

/// Concrete candidates for a box whose open variables are all fixed (or, for
/// reals, below split tolerance).
fn try_leaf(p: &Problem, bx: &[Iv], open: &[usize]) -> Option<Assignment> {
    let reals: Vec<usize> = open.iter().copied().filter(|&v| !p.vars[v].int && bx[v].lo < bx[v].hi).collect();
    let pickers: &[fn(Iv) -> f64] = if reals.is_empty() {
        &[|iv| iv.nearest_zero()]
    } else {
        &[|iv| iv.nearest_zero(), |iv| iv.lo, |iv| iv.hi, |iv| iv.lo + (iv.hi - iv.lo) / 2.0]
    };
    for pick in pickers {
        let point: Vec<f64> = bx
            .iter()
            .enumerate()
            .map(|(i, iv)| if reals.contains(&i) { pick(*iv) } else { iv.nearest_zero() })
            .collect();
        let a = assignment_at(p, &point);
        if p.checks.iter().all(|c| eval_constraint(c, &a).unwrap_or(false)) {
            return Some(a);
        }
    }
    None
}

pub(crate) fn assignment_at(p: &Problem, point: &[f64]) -> Assignment {
    let mut a = Assignment::new();
    let mut lens = Vec::new();
    for (v, x) in p.vars.iter().zip(point) {
        match &v.string {
            Some(s) => lens.push((s.clone(), *x as usize)),
            None => {
                let kind = if v.int { VarKind::Int } else { VarKind::Real };
                a.insert(v.name.clone(), Value::numeric(kind, *x));
            }
        }
    }
    materialize::strings(&p.checks, &lens, &mut a);
    a
}
