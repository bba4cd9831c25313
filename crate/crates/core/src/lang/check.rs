use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use super::LangError;

/// A type problem found before source positions are attached.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Problem {
    Type(String),
    Undeclared(String),
    Duplicate(String),
    Domain(String),
    Neural(String),
}

impl Problem {
    pub(crate) fn at(self, (line, col): (usize, usize)) -> LangError {
        match self {
            Problem::Type(msg) => LangError::Type { line, col, msg },
            Problem::Undeclared(name) => LangError::Undeclared { line, col, name },
            Problem::Duplicate(name) => LangError::Duplicate { line, col, name },
            Problem::Domain(msg) => LangError::Domain { line, col, msg },
            Problem::Neural(msg) => LangError::Neural { line, col, msg },
        }
    }
}

/// Which statement a problem belongs to (index within its category).
pub(crate) enum Issue {
    Decl(usize, Problem),
    Assert(usize, Problem),
    Neural(usize, Problem),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Num,
    Str,
}

pub(crate) fn check_file(file: &ConstraintFile) -> Result<(), Issue> {
    let mut kinds: HashMap<&str, VarKind> = HashMap::new();
    for (i, d) in file.decls.iter().enumerate() {
        if kinds.insert(d.name.as_str(), d.kind).is_some() {
            return Err(Issue::Decl(i, Problem::Duplicate(d.name.clone())));
        }
        check_decl(d).map_err(|p| Issue::Decl(i, p))?;
    }
    for (i, c) in file.symbolic.iter().enumerate() {
        check_constraint(c, &kinds).map_err(|p| Issue::Assert(i, p))?;
    }
    for (i, n) in file.neural.iter().enumerate() {
        check_neural(n, &kinds).map_err(|p| Issue::Neural(i, p))?;
    }
    Ok(())
}

fn check_decl(d: &VarDecl) -> Result<(), Problem> {
    match (d.kind, d.domain) {
        (_, None) => Ok(()),
        (VarKind::Str, Some(Domain::MaxLen(_))) => Ok(()),
        (VarKind::Str, Some(Domain::Range { .. })) => {
            Err(Problem::Domain(format!("string `{}` takes `maxlen`, not a range", d.name)))
        }
        (_, Some(Domain::MaxLen(_))) => {
            Err(Problem::Domain(format!("numeric `{}` takes a range, not `maxlen`", d.name)))
        }
        (kind, Some(Domain::Range { lo, hi })) => {
            if lo > hi {
                return Err(Problem::Domain(format!("empty range {lo}..{hi} for `{}`", d.name)));
            }
            if kind == VarKind::Int && (lo.fract() != 0.0 || hi.fract() != 0.0) {
                return Err(Problem::Domain(format!("integer `{}` needs integral bounds", d.name)));
            }
            Ok(())
        }
    }
}

fn check_neural(n: &NeuralDecl, kinds: &HashMap<&str, VarKind>) -> Result<(), Problem> {
    if n.inputs.is_empty() || n.outputs.is_empty() {
        return Err(Problem::Neural("inputs and outputs must be non-empty".into()));
    }
    let mut seen = BTreeSet::new();
    for name in n.inputs.iter().chain(&n.outputs) {
        match kinds.get(name.as_str()) {
            None => return Err(Problem::Undeclared(name.clone())),
            Some(VarKind::Str) => {
                return Err(Problem::Neural(format!("`{name}` is a string; neural constraints take numeric variables")))
            }
            Some(_) => {}
        }
        if !seen.insert(name.as_str()) {
            return Err(Problem::Neural(format!("`{name}` appears more than once")));
        }
    }
    Ok(())
}

fn check_constraint(c: &Constraint, kinds: &HashMap<&str, VarKind>) -> Result<(), Problem> {
    match c {
        Constraint::And(l, r) | Constraint::Or(l, r) => {
            check_constraint(l, kinds)?;
            check_constraint(r, kinds)
        }
        Constraint::Contains(h, n) => {
            expect(h, Ty::Str, kinds, "contains")?;
            expect(n, Ty::Str, kinds, "contains")
        }
        Constraint::Cmp(op, l, r) => {
            let (lt, rt) = (type_of(l, kinds)?, type_of(r, kinds)?);
            match (lt, rt) {
                (Ty::Num, Ty::Num) => Ok(()),
                (Ty::Str, Ty::Str) if matches!(op, CmpOp::Eq | CmpOp::Ne) => Ok(()),
                (Ty::Str, Ty::Str) => {
                    Err(Problem::Type(format!("`{}` is not defined on strings", op.symbol())))
                }
                _ => Err(Problem::Type(format!("`{}` compares a string with a number", op.symbol()))),
            }
        }
    }
}

fn expect(e: &Expr, want: Ty, kinds: &HashMap<&str, VarKind>, ctx: &str) -> Result<(), Problem> {
    let got = type_of(e, kinds)?;
    if got == want {
        Ok(())
    } else {
        let name = |t| if t == Ty::Num { "number" } else { "string" };
        Err(Problem::Type(format!("{ctx} expects a {}, got a {}", name(want), name(got))))
    }
}

fn type_of(e: &Expr, kinds: &HashMap<&str, VarKind>) -> Result<Ty, Problem> {
    Ok(match e {
        Expr::Num(v) => {
            if !v.is_finite() {
                return Err(Problem::Type("non-finite constant".into()));
            }
            Ty::Num
        }
        Expr::Str(_) => Ty::Str,
        Expr::Var(name) => match kinds.get(name.as_str()) {
            None => return Err(Problem::Undeclared(name.clone())),
            Some(VarKind::Str) => Ty::Str,
            Some(_) => Ty::Num,
        },
        Expr::Arith(op, l, r) => {
            expect(l, Ty::Num, kinds, op.symbol())?;
            expect(r, Ty::Num, kinds, op.symbol())?;
            Ty::Num
        }
        Expr::StrLen(a) => {
            expect(a, Ty::Str, kinds, "strlen")?;
            Ty::Num
        }
        Expr::StrStr(h, n) => {
            expect(h, Ty::Str, kinds, "strstr")?;
            expect(n, Ty::Str, kinds, "strstr")?;
            Ty::Num
        }
        Expr::Concat(l, r) => {
            expect(l, Ty::Str, kinds, "concat")?;
            expect(r, Ty::Str, kinds, "concat")?;
            Ty::Str
        }
    })
}

/// Type-check a file built in code (no source positions available).
pub fn validate(file: &ConstraintFile) -> Result<(), LangError> {
    check_file(file).map_err(|issue| match issue {
        Issue::Decl(_, p) | Issue::Assert(_, p) | Issue::Neural(_, p) => p.at((0, 0)),
    })
}

/// Type-check a standalone constraint against a set of declarations.
pub fn validate_constraint(c: &Constraint, decls: &[VarDecl]) -> Result<(), LangError> {
    let kinds: HashMap<&str, VarKind> = decls.iter().map(|d| (d.name.as_str(), d.kind)).collect();
    check_constraint(c, &kinds).map_err(|p| p.at((0, 0)))
}
