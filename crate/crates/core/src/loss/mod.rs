//! Differentiable loss encodings of symbolic constraints.
//!
//! | constraint | loss |
//! |---|---|
//! | `a < b`  | `max(a - b + alpha, 0)` |
//! | `a > b`  | `max(b - a + alpha, 0)` |
//! | `a <= b` | `max(a - b, 0)` |
//! | `a >= b` | `max(b - a, 0)` |
//! | `a == b` | `abs(a - b)` |
//! | `a != b` | `max(-1, -abs(a - b + beta))` |
//! | `S1 && S2` | `L1 + L2` |
//! | `S1 \|\| S2` | `min(L1, L2)` |
//!
//! `max(u, 0)` has derivative 0 at `u = 0` and `abs` uses `sign(0) = 0`.
//! Or-nodes pass the gradient through the smallest child (lowest index on ties).

mod composed;

pub use composed::Composed;

use std::collections::BTreeSet;

use crate::lang::{ArithOp, CmpOp, Constraint, Expr};
use crate::value::{eval_constraint, Assignment, Value};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LossError {
    #[error("string constraint `{0}` cannot be encoded as a loss")]
    StringAtom(String),
    #[error("beta must satisfy |beta| < 1 and alpha must be positive (alpha={alpha}, beta={beta})")]
    Params { alpha: f64, beta: f64 },
    #[error("grid has {0} points, limit is {1}")]
    GridTooLarge(u128, u128),
    #[error("grid bounds for {got} variables, loss has {want}")]
    Arity { got: usize, want: usize },
    #[error("unknown variable `{0}`")]
    UnknownVar(String),
}

/// Scalar function over a fixed, ordered vector of numeric variables.
pub trait LossFunction: Sync {
    fn vars(&self) -> &[String];

    fn eval(&self, x: &[f64]) -> f64;

    /// Loss and gradient at `x`.
    fn grad(&self, x: &[f64]) -> (f64, Vec<f64>);

    /// Evaluate at an assignment binding every variable.
    fn eval_at(&self, a: &Assignment) -> Result<f64, LossError> {
        Ok(self.eval(&point_of(self.vars(), a)?))
    }

    fn grad_at(&self, a: &Assignment) -> Result<Vec<f64>, LossError> {
        Ok(self.grad(&point_of(self.vars(), a)?).1)
    }
}

fn point_of(vars: &[String], a: &Assignment) -> Result<Vec<f64>, LossError> {
    vars.iter().map(|v| a.num(v).ok_or_else(|| LossError::UnknownVar(v.clone()))).collect()
}

/// Loss given by closures, mostly for tests and ad-hoc objectives.
pub struct FnLoss<F, G> {
    pub vars: Vec<String>,
    pub f: F,
    pub g: G,
}

impl<F, G> LossFunction for FnLoss<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn vars(&self) -> &[String] {
        &self.vars
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        ((self.f)(x), (self.g)(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { alpha: 0.5, beta: 0.5 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), LossError> {
        if self.alpha > 0.0 && self.alpha.is_finite() && self.beta.abs() < 1.0 {
            Ok(())
        } else {
            Err(LossError::Params { alpha: self.alpha, beta: self.beta })
        }
    }
}

/// Name of the numeric variable standing for the length of string `s`.
pub fn length_var(s: &str) -> String {
    format!("strlen({s})")
}

#[derive(Debug, Clone, PartialEq)]
enum Term {
    Const(f64),
    Var(usize),
    Bin(ArithOp, Box<Term>, Box<Term>),
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Atom(CmpOp, Term, Term),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
}

fn collect(c: &Constraint, out: &mut BTreeSet<String>) -> Result<(), LossError> {
    fn expr(e: &Expr, out: &mut BTreeSet<String>) -> Result<(), LossError> {
        match e {
            Expr::Num(_) => Ok(()),
            Expr::Var(v) => {
                out.insert(v.clone());
                Ok(())
            }
            Expr::Arith(_, l, r) => {
                expr(l, out)?;
                expr(r, out)
            }
            Expr::StrLen(s) => match &**s {
                Expr::Var(v) => {
                    out.insert(length_var(v));
                    Ok(())
                }
                Expr::Str(_) => Ok(()),
                other => Err(LossError::StringAtom(format!("strlen({other})"))),
            },
            other => Err(LossError::StringAtom(other.to_string())),
        }
    }
    match c {
        Constraint::Cmp(_, l, r) => {
            expr(l, out)?;
            expr(r, out)
        }
        Constraint::Contains(..) => Err(LossError::StringAtom(c.to_string())),
        Constraint::And(l, r) | Constraint::Or(l, r) => {
            collect(l, out)?;
            collect(r, out)
        }
    }
}

fn lower_expr(e: &Expr, vars: &[String]) -> Term {
    let idx = |n: &str| Term::Var(vars.iter().position(|v| v == n).expect("collected"));
    match e {
        Expr::Num(v) => Term::Const(*v),
        Expr::Var(v) => idx(v),
        Expr::Arith(op, l, r) => Term::Bin(*op, Box::new(lower_expr(l, vars)), Box::new(lower_expr(r, vars))),
        Expr::StrLen(s) => match &**s {
            Expr::Var(v) => idx(&length_var(v)),
            Expr::Str(s) => Term::Const(s.chars().count() as f64),
            _ => unreachable!("rejected while collecting"),
        },
        _ => unreachable!("rejected while collecting"),
    }
}

fn lower(c: &Constraint, vars: &[String]) -> Node {
    match c {
        Constraint::Cmp(op, l, r) => Node::Atom(*op, lower_expr(l, vars), lower_expr(r, vars)),
        Constraint::And(l, r) => Node::And(Box::new(lower(l, vars)), Box::new(lower(r, vars))),
        Constraint::Or(l, r) => Node::Or(Box::new(lower(l, vars)), Box::new(lower(r, vars))),
        Constraint::Contains(..) => unreachable!("rejected while collecting"),
    }
}

impl Term {
    /// Value, or `None` on division by zero.
    fn val(&self, x: &[f64]) -> Option<f64> {
        match self {
            Term::Const(c) => Some(*c),
            Term::Var(i) => Some(x[*i]),
            Term::Bin(op, l, r) => {
                let (a, b) = (l.val(x)?, r.val(x)?);
                match op {
                    ArithOp::Add => Some(a + b),
                    ArithOp::Sub => Some(a - b),
                    ArithOp::Mul => Some(a * b),
                    ArithOp::Div if b == 0.0 => None,
                    ArithOp::Div => Some(a / b),
                }
            }
        }
    }

    /// Forward-mode value and gradient.
    fn dual(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        match self {
            Term::Const(c) => Some((*c, vec![0.0; x.len()])),
            Term::Var(i) => {
                let mut g = vec![0.0; x.len()];
                g[*i] = 1.0;
                Some((x[*i], g))
            }
            Term::Bin(op, l, r) => {
                let (a, ga) = l.dual(x)?;
                let (b, gb) = r.dual(x)?;
                let comb = |fa: f64, fb: f64| ga.iter().zip(&gb).map(|(p, q)| fa * p + fb * q).collect();
                match op {
                    ArithOp::Add => Some((a + b, comb(1.0, 1.0))),
                    ArithOp::Sub => Some((a - b, comb(1.0, -1.0))),
                    ArithOp::Mul => Some((a * b, comb(b, a))),
                    ArithOp::Div if b == 0.0 => None,
                    ArithOp::Div => Some((a / b, comb(1.0 / b, -a / (b * b)))),
                }
            }
        }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Atom loss as a function of `d = a - b`, with `dL/dd`.
fn atom(op: CmpOp, d: f64, cfg: &LossConfig) -> (f64, f64) {
    let hinge = |u: f64, du: f64| if u > 0.0 { (u, du) } else { (0.0, 0.0) };
    match op {
        CmpOp::Lt => hinge(d + cfg.alpha, 1.0),
        CmpOp::Gt => hinge(-d + cfg.alpha, -1.0),
        CmpOp::Le => hinge(d, 1.0),
        CmpOp::Ge => hinge(-d, -1.0),
        CmpOp::Eq => (d.abs(), sign(d)),
        CmpOp::Ne => {
            let v = -(d + cfg.beta).abs();
            if v > -1.0 {
                (v, -sign(d + cfg.beta))
            } else {
                (-1.0, 0.0)
            }
        }
    }
}

impl Node {
    fn eval(&self, x: &[f64], cfg: &LossConfig) -> f64 {
        match self {
            Node::Atom(op, l, r) => match (l.val(x), r.val(x)) {
                (Some(a), Some(b)) => atom(*op, a - b, cfg).0,
                _ => f64::INFINITY,
            },
            Node::And(l, r) => l.eval(x, cfg) + r.eval(x, cfg),
            Node::Or(l, r) => {
                let (a, b) = (l.eval(x, cfg), r.eval(x, cfg));
                if b < a {
                    b
                } else {
                    a
                }
            }
        }
    }

    /// Accumulate `seed * dL/dx` into `g`; returns the loss.
    fn grad(&self, x: &[f64], cfg: &LossConfig, seed: f64, g: &mut [f64]) -> f64 {
        match self {
            Node::Atom(op, l, r) => match (l.dual(x), r.dual(x)) {
                (Some((a, ga)), Some((b, gb))) => {
                    let (v, dd) = atom(*op, a - b, cfg);
                    if dd != 0.0 {
                        for i in 0..g.len() {
                            g[i] += seed * dd * (ga[i] - gb[i]);
                        }
                    }
                    v
                }
                _ => f64::INFINITY,
            },
            Node::And(l, r) => l.grad(x, cfg, seed, g) + r.grad(x, cfg, seed, g),
            Node::Or(l, r) => {
                let (a, b) = (l.eval(x, cfg), r.eval(x, cfg));
                if b < a {
                    r.grad(x, cfg, seed, g)
                } else {
                    l.grad(x, cfg, seed, g)
                }
            }
        }
    }
}

/// Loss encoding of a conjunction of symbolic constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    vars: Vec<String>,
    roots: Vec<Node>,
    pub cfg: LossConfig,
}

impl Encoded {
    /// Variables in this encoding; string lengths appear as [`length_var`] names.
    pub fn var_names(&self) -> &[String] {
        &self.vars
    }

    /// Same loss over an explicit variable order (a superset of the encoded variables).
    pub fn reindexed(constraints: &[Constraint], vars: Vec<String>, cfg: LossConfig) -> Result<Encoded, LossError> {
        cfg.validate()?;
        let mut need = BTreeSet::new();
        for c in constraints {
            collect(c, &mut need)?;
        }
        if let Some(missing) = need.iter().find(|n| !vars.contains(n)) {
            return Err(LossError::UnknownVar(missing.clone()));
        }
        let roots = constraints.iter().map(|c| lower(c, &vars)).collect();
        Ok(Encoded { vars, roots, cfg })
    }
}

impl LossFunction for Encoded {
    fn vars(&self) -> &[String] {
        &self.vars
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.roots.iter().map(|r| r.eval(x, &self.cfg)).sum()
    }

    fn grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; x.len()];
        let v = self.roots.iter().map(|r| r.grad(x, &self.cfg, 1.0, &mut g)).sum();
        (v, g)
    }
}

/// Encode one constraint; variables are its free numeric names in sorted order.
pub fn encode(c: &Constraint, cfg: LossConfig) -> Result<Encoded, LossError> {
    encode_all(std::slice::from_ref(c), cfg)
}

/// Encode a conjunction (sum of member losses).
pub fn encode_all(constraints: &[Constraint], cfg: LossConfig) -> Result<Encoded, LossError> {
    let mut vars = BTreeSet::new();
    for c in constraints {
        collect(c, &mut vars)?;
    }
    Encoded::reindexed(constraints, vars.into_iter().collect(), cfg)
}

/// Exhaustive check over an integer grid that every global minimizer of `lf`
/// satisfies `c`, whenever some grid point satisfies `c`.
///
/// `bounds[i]` is the inclusive range of `lf.vars()[i]`.
pub fn minimum_implies_sat_check(c: &Constraint, lf: &dyn LossFunction, bounds: &[(i64, i64)]) -> Result<bool, LossError> {
    const LIMIT: u128 = 1_000_000;
    let vars = lf.vars();
    if bounds.len() != vars.len() {
        return Err(LossError::Arity { got: bounds.len(), want: vars.len() });
    }
    let size = bounds.iter().map(|(lo, hi)| (hi - lo + 1).max(0) as u128).product::<u128>();
    if size > LIMIT {
        return Err(LossError::GridTooLarge(size, LIMIT));
    }
    if size == 0 {
        return Ok(true);
    }
    let mut best = f64::INFINITY;
    let mut minimizers_sat = true;
    let mut any_sat = false;
    let mut p: Vec<i64> = bounds.iter().map(|b| b.0).collect();
    let mut a = Assignment::new();
    loop {
        let x: Vec<f64> = p.iter().map(|&v| v as f64).collect();
        let l = lf.eval(&x);
        for (n, &v) in vars.iter().zip(&p) {
            a.insert(n.clone(), Value::Int(v));
        }
        let sat = eval_constraint(c, &a).unwrap_or(false);
        any_sat |= sat;
        if l < best {
            best = l;
            minimizers_sat = sat;
        } else if l == best {
            minimizers_sat &= sat;
        }
        let mut i = 0;
        loop {
            if i == p.len() {
                return Ok(!any_sat || minimizers_sat);
            }
            if p[i] < bounds[i].1 {
                p[i] += 1;
                break;
            }
            p[i] = bounds[i].0;
            i += 1;
        }
    }
}
