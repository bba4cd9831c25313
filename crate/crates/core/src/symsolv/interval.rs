//! Closed intervals with outward rounding. Exact results are left unrounded
//! so integer bounds stay integral.

use crate::lang::ArithOp;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Iv {
    pub lo: f64,
    pub hi: f64,
}

pub(crate) const EMPTY: Iv = Iv { lo: f64::INFINITY, hi: f64::NEG_INFINITY };
pub(crate) const FULL: Iv = Iv { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

impl Iv {
    pub fn new(lo: f64, hi: f64) -> Iv {
        Iv { lo, hi }
    }

    pub fn point(v: f64) -> Iv {
        Iv { lo: v, hi: v }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo <= self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn meet(&self, o: Iv) -> Iv {
        let r = Iv { lo: self.lo.max(o.lo), hi: self.hi.min(o.hi) };
        if r.is_empty() {
            EMPTY
        } else {
            r
        }
    }

    /// Shrink to the integers inside.
    pub fn integral(&self) -> Iv {
        let r = Iv { lo: self.lo.ceil(), hi: self.hi.floor() };
        if r.is_empty() {
            EMPTY
        } else {
            r
        }
    }

    /// Point of the interval closest to zero.
    pub fn nearest_zero(&self) -> f64 {
        0f64.clamp(self.lo, self.hi)
    }
}

fn down(exact: bool, v: f64) -> f64 {
    if exact || v.is_infinite() {
        v
    } else {
        v.next_down()
    }
}

fn up(exact: bool, v: f64) -> f64 {
    if exact || v.is_infinite() {
        v
    } else {
        v.next_up()
    }
}

fn add_exact(a: f64, b: f64, s: f64) -> bool {
    if !s.is_finite() {
        return true;
    }
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    err == 0.0
}

fn add_lo(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.is_nan() {
        return f64::NEG_INFINITY;
    }
    down(add_exact(a, b, s), s)
}

fn add_hi(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.is_nan() {
        return f64::INFINITY;
    }
    up(add_exact(a, b, s), s)
}

/// Product with the interval convention 0 * inf = 0.
fn mul_pair(a: f64, b: f64) -> (f64, bool) {
    if a == 0.0 || b == 0.0 {
        return (0.0, true);
    }
    let p = a * b;
    if !p.is_finite() {
        return (p, true);
    }
    (p, a.mul_add(b, -p) == 0.0)
}

fn div_pair(a: f64, b: f64) -> (f64, bool) {
    if a == 0.0 {
        return (0.0, true);
    }
    let q = a / b;
    if !q.is_finite() || b.is_infinite() {
        return (q, q == 0.0 || q.is_infinite());
    }
    (q, (-q).mul_add(b, a) == 0.0)
}

fn hull4(vals: [(f64, bool); 4]) -> Iv {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (v, exact) in vals {
        if v.is_nan() {
            return FULL;
        }
        lo = lo.min(down(exact, v));
        hi = hi.max(up(exact, v));
    }
    Iv { lo, hi }
}

pub(crate) fn add(x: Iv, y: Iv) -> Iv {
    if x.is_empty() || y.is_empty() {
        return EMPTY;
    }
    Iv { lo: add_lo(x.lo, y.lo), hi: add_hi(x.hi, y.hi) }
}

pub(crate) fn neg(x: Iv) -> Iv {
    if x.is_empty() {
        return EMPTY;
    }
    Iv { lo: -x.hi, hi: -x.lo }
}

pub(crate) fn sub(x: Iv, y: Iv) -> Iv {
    add(x, neg(y))
}

pub(crate) fn mul(x: Iv, y: Iv) -> Iv {
    if x.is_empty() || y.is_empty() {
        return EMPTY;
    }
    hull4([mul_pair(x.lo, y.lo), mul_pair(x.lo, y.hi), mul_pair(x.hi, y.lo), mul_pair(x.hi, y.hi)])
}

/// Quotient over the points where the divisor is non-zero. A divisor of
/// exactly `[0, 0]` leaves nothing.
pub(crate) fn div(x: Iv, y: Iv) -> Iv {
    if x.is_empty() || y.is_empty() || (y.lo == 0.0 && y.hi == 0.0) {
        return EMPTY;
    }
    if y.contains(0.0) {
        return FULL;
    }
    hull4([div_pair(x.lo, y.lo), div_pair(x.lo, y.hi), div_pair(x.hi, y.lo), div_pair(x.hi, y.hi)])
}

pub(crate) fn apply(op: ArithOp, x: Iv, y: Iv) -> Iv {
    match op {
        ArithOp::Add => add(x, y),
        ArithOp::Sub => sub(x, y),
        ArithOp::Mul => mul(x, y),
        ArithOp::Div => div(x, y),
    }
}
