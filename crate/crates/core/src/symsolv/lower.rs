//! Lowering of typed constraints to numeric atoms. Strings become length
//! variables; atoms that depend on string content are deferred to concrete
//! checks once lengths are fixed.

use std::collections::HashMap;

use super::interval::{self, Iv};
use super::{SymConfig, SymError};
use crate::lang::{ArithOp, CmpOp, Constraint, Domain, Expr, VarDecl, VarKind};
use crate::value::{eval_constraint, Assignment};

#[derive(Debug, Clone)]
pub(crate) struct PVar {
    pub name: String,
    pub int: bool,
    pub dom: Iv,
    /// Set for string length variables: the string's name.
    pub string: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Term {
    Const(f64),
    Var(usize),
    Bin(ArithOp, Box<Term>, Box<Term>),
}

impl Term {
    fn bin(op: ArithOp, l: Term, r: Term) -> Term {
        Term::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn collect_vars(&self, out: &mut Vec<usize>) {
        match self {
            Term::Const(_) => {}
            Term::Var(i) => {
                if !out.contains(i) {
                    out.push(*i);
                }
            }
            Term::Bin(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn eval_iv(&self, bx: &[Iv]) -> Iv {
        match self {
            Term::Const(c) => Iv::point(*c),
            Term::Var(i) => bx[*i],
            Term::Bin(op, l, r) => interval::apply(*op, l.eval_iv(bx), r.eval_iv(bx)),
        }
    }

    /// Whether every value the term takes is an integer.
    fn integral(&self, vars: &[PVar]) -> bool {
        match self {
            Term::Const(c) => c.fract() == 0.0,
            Term::Var(i) => vars[*i].int,
            Term::Bin(ArithOp::Div, ..) => false,
            Term::Bin(_, l, r) => l.integral(vars) && r.integral(vars),
        }
    }
}

/// `e op 0`.
#[derive(Debug, Clone)]
pub(crate) struct NumAtom {
    pub op: CmpOp,
    pub e: Term,
    pub integral: bool,
    pub vars: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) enum Node {
    True,
    False,
    Atom(NumAtom),
    /// Content-dependent atom: unknown until the listed variables are fixed.
    Deferred(Vec<usize>),
    And(Vec<Node>),
    Or(Vec<Node>),
}

pub(crate) struct Problem {
    pub vars: Vec<PVar>,
    pub root: Node,
    /// Everything the final assignment must satisfy, conflict clauses included.
    pub checks: Vec<Constraint>,
}

struct Lowerer<'a> {
    vars: Vec<PVar>,
    by_name: HashMap<String, usize>,
    kinds: HashMap<&'a str, VarKind>,
}

pub(crate) fn lower(
    constraints: &[Constraint],
    extra_checks: Vec<Constraint>,
    decls: &[VarDecl],
    cfg: &SymConfig,
) -> Result<Problem, SymError> {
    let mut lw = Lowerer { vars: Vec::new(), by_name: HashMap::new(), kinds: HashMap::new() };
    for d in decls {
        lw.kinds.insert(d.name.as_str(), d.kind);
        let (int, dom, string) = match (d.kind, d.domain) {
            (VarKind::Str, dom) => {
                let max = match dom {
                    Some(Domain::MaxLen(n)) => n,
                    _ => cfg.default_max_len,
                };
                (true, Iv::new(0.0, max as f64), Some(d.name.clone()))
            }
            (kind, Some(Domain::Range { lo, hi })) => (kind == VarKind::Int, Iv::new(lo, hi), None),
            (kind, _) => (kind == VarKind::Int, Iv::new(-cfg.default_bound, cfg.default_bound), None),
        };
        let name = match &string {
            Some(s) => format!("strlen({s})"),
            None => d.name.clone(),
        };
        lw.by_name.insert(d.name.clone(), lw.vars.len());
        lw.vars.push(PVar { name, int, dom: if int { dom.integral() } else { dom }, string });
    }

    let mut checks: Vec<Constraint> = constraints.to_vec();
    checks.extend(extra_checks);
    let mut conj = Vec::with_capacity(checks.len());
    for c in &checks {
        conj.push(lw.constraint(c)?);
    }
    Ok(Problem { vars: lw.vars, root: Node::And(conj), checks })
}

impl Lowerer<'_> {
    fn var(&self, name: &str) -> Result<usize, SymError> {
        self.by_name.get(name).copied().ok_or_else(|| SymError::Undeclared(name.to_string()))
    }

    fn is_string(&self, e: &Expr) -> Result<bool, SymError> {
        Ok(match e {
            Expr::Str(_) | Expr::Concat(..) => true,
            Expr::Var(v) => match self.kinds.get(v.as_str()) {
                Some(k) => *k == VarKind::Str,
                None => return Err(SymError::Undeclared(v.clone())),
            },
            _ => false,
        })
    }

    fn constraint(&mut self, c: &Constraint) -> Result<Node, SymError> {
        Ok(match c {
            Constraint::And(l, r) => Node::And(vec![self.constraint(l)?, self.constraint(r)?]),
            Constraint::Or(l, r) => Node::Or(vec![self.constraint(l)?, self.constraint(r)?]),
            Constraint::Contains(h, n) => {
                if let Some(b) = self.constant(c) {
                    return Ok(b);
                }
                let atom = self.atom(CmpOp::Ge, self.length(h)?, self.length(n)?);
                Node::And(vec![atom, Node::Deferred(self.all_vars(c)?)])
            }
            Constraint::Cmp(op, l, r) if self.is_string(l)? => {
                if let Some(b) = self.constant(c) {
                    return Ok(b);
                }
                let lens = self.atom(*op, self.length(l)?, self.length(r)?);
                let content = Node::Deferred(self.all_vars(c)?);
                match op {
                    CmpOp::Eq => Node::And(vec![lens, content]),
                    CmpOp::Ne => Node::Or(vec![lens, content]),
                    _ => return Err(SymError::Unsupported(format!("`{}` on strings", op.symbol()))),
                }
            }
            Constraint::Cmp(op, l, r) => match (self.term(l)?, self.term(r)?) {
                (Some(a), Some(b)) => self.atom(*op, a, b),
                _ => {
                    if let Some(b) = self.constant(c) {
                        return Ok(b);
                    }
                    Node::Deferred(self.all_vars(c)?)
                }
            },
        })
    }

    /// Fold atoms whose operands mention no variable.
    fn constant(&self, c: &Constraint) -> Option<Node> {
        if !c.free_vars().is_empty() {
            return None;
        }
        match eval_constraint(c, &Assignment::new()) {
            Ok(true) => Some(Node::True),
            _ => Some(Node::False),
        }
    }

    fn atom(&self, op: CmpOp, l: Term, r: Term) -> Node {
        let e = Term::bin(ArithOp::Sub, l, r);
        let mut vars = Vec::new();
        e.collect_vars(&mut vars);
        let integral = e.integral(&self.vars);
        Node::Atom(NumAtom { op, e, integral, vars })
    }

    /// Numeric term, or `None` when the value depends on string content.
    fn term(&self, e: &Expr) -> Result<Option<Term>, SymError> {
        Ok(Some(match e {
            Expr::Num(v) => Term::Const(*v),
            Expr::Var(name) => Term::Var(self.var(name)?),
            Expr::Arith(op, l, r) => match (self.term(l)?, self.term(r)?) {
                (Some(a), Some(b)) => Term::bin(*op, a, b),
                _ => return Ok(None),
            },
            Expr::StrLen(s) => self.length(s)?,
            Expr::StrStr(h, n) => {
                let mut vs = std::collections::BTreeSet::new();
                h.collect_vars(&mut vs);
                n.collect_vars(&mut vs);
                if !vs.is_empty() {
                    return Ok(None);
                }
                match crate::value::eval_num(e, &Assignment::new()) {
                    Ok(v) => Term::Const(v),
                    Err(_) => return Ok(None),
                }
            }
            Expr::Str(_) | Expr::Concat(..) => {
                return Err(SymError::Unsupported(format!("string `{e}` in numeric position")))
            }
        }))
    }

    fn length(&self, e: &Expr) -> Result<Term, SymError> {
        Ok(match e {
            Expr::Str(s) => Term::Const(s.chars().count() as f64),
            Expr::Var(name) => Term::Var(self.var(name)?),
            Expr::Concat(l, r) => Term::bin(ArithOp::Add, self.length(l)?, self.length(r)?),
            other => return Err(SymError::Unsupported(format!("`{other}` is not a string"))),
        })
    }

    fn all_vars(&self, c: &Constraint) -> Result<Vec<usize>, SymError> {
        c.free_vars().iter().map(|v| self.var(v)).collect()
    }
}
