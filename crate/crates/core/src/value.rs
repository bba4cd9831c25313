//! Typed values, assignments and concrete evaluation of constraints.

use std::collections::BTreeMap;
use std::fmt;

use crate::lang::{write_quoted, ArithOp, Constraint, Expr, VarKind};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Str(String),
}

impl Value {
    pub fn kind(&self) -> VarKind {
        match self {
            Value::Int(_) => VarKind::Int,
            Value::Real(_) => VarKind::Real,
            Value::Str(_) => VarKind::Str,
        }
    }

    /// Numeric view; strings have none.
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Int(i) => Some(i as f64),
            Value::Real(r) => Some(r),
            Value::Str(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Build a numeric value of the given kind, rounding for integers.
    pub fn numeric(kind: VarKind, v: f64) -> Value {
        match kind {
            VarKind::Int => Value::Int(v.round() as i64),
            _ => Value::Real(v),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Str(s) => write_quoted(f, s),
        }
    }
}

/// Finite map from variable names to values, ordered by name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment(BTreeMap<String, Value>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.get(name)
    }

    pub fn num(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(Value::as_f64)
    }

    pub fn insert(&mut self, name: impl Into<String>, v: Value) -> Option<Value> {
        self.0.insert(name.into(), v)
    }

    pub fn remove(&mut self, name: &str) -> Option<Value> {
        self.0.remove(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.0.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.0.keys()
    }

    /// Union with `other`; bindings in `other` win.
    pub fn extend(&mut self, other: &Assignment) {
        for (k, v) in other.iter() {
            self.0.insert(k.clone(), v.clone());
        }
    }

    /// Restriction to the given names (missing names are skipped).
    pub fn restrict<'a>(&self, names: impl IntoIterator<Item = &'a String>) -> Assignment {
        let mut out = Assignment::new();
        for n in names {
            if let Some(v) = self.get(n) {
                out.insert(n.clone(), v.clone());
            }
        }
        out
    }
}

impl FromIterator<(String, Value)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Assignment {
    type Item = (&'a String, &'a Value);
    type IntoIter = std::collections::btree_map::Iter<'a, String, Value>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Space-separated `name=value` pairs.
impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("division by zero")]
    DivByZero,
    #[error("type mismatch: {0}")]
    Type(String),
}

/// Result of evaluating an expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Num(f64),
    Str(String),
}

pub fn eval_expr(e: &Expr, a: &Assignment) -> Result<Scalar, EvalError> {
    Ok(match e {
        Expr::Num(v) => Scalar::Num(*v),
        Expr::Str(s) => Scalar::Str(s.clone()),
        Expr::Var(name) => match a.get(name) {
            None => return Err(EvalError::Unbound(name.clone())),
            Some(Value::Str(s)) => Scalar::Str(s.clone()),
            Some(v) => Scalar::Num(v.as_f64().unwrap_or(f64::NAN)),
        },
        Expr::Arith(op, l, r) => {
            let (x, y) = (eval_num(l, a)?, eval_num(r, a)?);
            Scalar::Num(match op {
                ArithOp::Add => x + y,
                ArithOp::Sub => x - y,
                ArithOp::Mul => x * y,
                ArithOp::Div => {
                    if y == 0.0 {
                        return Err(EvalError::DivByZero);
                    }
                    x / y
                }
            })
        }
        Expr::StrLen(s) => Scalar::Num(eval_str(s, a)?.chars().count() as f64),
        Expr::StrStr(h, n) => {
            let (h, n) = (eval_str(h, a)?, eval_str(n, a)?);
            Scalar::Num(match h.find(&n) {
                Some(byte) => h[..byte].chars().count() as f64,
                None => -1.0,
            })
        }
        Expr::Concat(l, r) => {
            let mut s = eval_str(l, a)?;
            s.push_str(&eval_str(r, a)?);
            Scalar::Str(s)
        }
    })
}

pub fn eval_num(e: &Expr, a: &Assignment) -> Result<f64, EvalError> {
    match eval_expr(e, a)? {
        Scalar::Num(v) => Ok(v),
        Scalar::Str(_) => Err(EvalError::Type(format!("`{e}` is a string"))),
    }
}

pub fn eval_str(e: &Expr, a: &Assignment) -> Result<String, EvalError> {
    match eval_expr(e, a)? {
        Scalar::Str(s) => Ok(s),
        Scalar::Num(_) => Err(EvalError::Type(format!("`{e}` is a number"))),
    }
}

/// Big-step truth value. An atom whose evaluation divides by zero is false;
/// unbound variables and type mismatches are errors.
pub fn eval_constraint(c: &Constraint, a: &Assignment) -> Result<bool, EvalError> {
    let atom = |r: Result<bool, EvalError>| match r {
        Err(EvalError::DivByZero) => Ok(false),
        other => other,
    };
    match c {
        Constraint::And(l, r) => Ok(eval_constraint(l, a)? & eval_constraint(r, a)?),
        Constraint::Or(l, r) => Ok(eval_constraint(l, a)? | eval_constraint(r, a)?),
        Constraint::Contains(h, n) => atom((|| Ok(eval_str(h, a)?.contains(&eval_str(n, a)?)))()),
        Constraint::Cmp(op, l, r) => atom((|| match (eval_expr(l, a)?, eval_expr(r, a)?) {
            (Scalar::Num(x), Scalar::Num(y)) => Ok(op.holds(x, y)),
            (Scalar::Str(x), Scalar::Str(y)) => match op {
                crate::lang::CmpOp::Eq => Ok(x == y),
                crate::lang::CmpOp::Ne => Ok(x != y),
                _ => Err(EvalError::Type(format!("`{}` on strings", op.symbol()))),
            },
            _ => Err(EvalError::Type(format!("`{}` mixes strings and numbers", op.symbol()))),
        })()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_constraint;

    fn asg(pairs: &[(&str, Value)]) -> Assignment {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn strstr_reports_char_index_or_minus_one() {
        let a = asg(&[("s", Value::Str("xxab".into()))]);
        let e = |t: &str| match parse_constraint(t).unwrap() {
            Constraint::Cmp(_, l, _) => eval_num(&l, &a).unwrap(),
            _ => unreachable!(),
        };
        assert_eq!(e("strstr(s, \"ab\") == 0"), 2.0);
        assert_eq!(e("strstr(s, \"zz\") == 0"), -1.0);
        assert_eq!(e("strlen(concat(s, \"q\")) == 0"), 5.0);
    }

    #[test]
    fn division_by_zero_falsifies_only_its_atom() {
        let a = asg(&[("x", Value::Int(0))]);
        assert!(!eval_constraint(&parse_constraint("1 / x > 0").unwrap(), &a).unwrap());
        assert!(eval_constraint(&parse_constraint("1 / x > 0 || x == 0").unwrap(), &a).unwrap());
    }

    #[test]
    fn unbound_is_an_error() {
        let err = eval_constraint(&parse_constraint("y > 0").unwrap(), &Assignment::new()).unwrap_err();
        assert_eq!(err, EvalError::Unbound("y".into()));
    }

    #[test]
    fn display_is_name_value_pairs() {
        let a = asg(&[("x", Value::Int(4)), ("s", Value::Str("a\"b".into())), ("r", Value::Real(0.5))]);
        assert_eq!(a.to_string(), "r=0.5 s=\"a\\\"b\" x=4");
    }
}
