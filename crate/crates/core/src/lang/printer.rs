//! Canonical text form. `parse(print(f))` reproduces `f` structurally.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;

pub fn print(file: &ConstraintFile) -> String {
    file.to_string()
}

pub(crate) fn write_quoted(f: &mut impl Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for ch in s.chars() {
        match ch {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Str(s) => write_quoted(f, s),
            Expr::Var(v) => f.write_str(v),
            Expr::StrLen(e) => write!(f, "strlen({e})"),
            Expr::StrStr(h, n) => write!(f, "strstr({h}, {n})"),
            Expr::Concat(l, r) => write!(f, "concat({l}, {r})"),
            Expr::Arith(op, l, r) => {
                let prec = op.precedence();
                let wrap_l = matches!(**l, Expr::Arith(lop, ..) if lop.precedence() < prec);
                let wrap_r = matches!(**r, Expr::Arith(rop, ..) if rop.precedence() <= prec);
                write_operand(f, l, wrap_l)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, r, wrap_r)
            }
        }
    }
}

fn write_operand(f: &mut Formatter<'_>, e: &impl Display, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl Display for Constraint {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Cmp(op, l, r) => write!(f, "{l} {} {r}", op.symbol()),
            Constraint::Contains(h, n) => write!(f, "contains({h}, {n})"),
            Constraint::And(l, r) => {
                write_operand(f, l, matches!(**l, Constraint::Or(..)))?;
                f.write_str(" && ")?;
                write_operand(f, r, matches!(**r, Constraint::Or(..) | Constraint::And(..)))
            }
            Constraint::Or(l, r) => {
                write!(f, "{l} || ")?;
                write_operand(f, r, matches!(**r, Constraint::Or(..)))
            }
        }
    }
}

impl Display for VarDecl {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind, self.name)?;
        match self.domain {
            Some(Domain::Range { lo, hi }) => write!(f, " in {lo}..{hi}")?,
            Some(Domain::MaxLen(n)) => write!(f, " maxlen {n}")?,
            None => {}
        }
        f.write_char(';')
    }
}

impl Display for NeuralDecl {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str("neural ")?;
        write_quoted(f, &self.model)?;
        write!(f, " ({}) -> ({});", self.inputs.join(", "), self.outputs.join(", "))
    }
}

impl Display for ConstraintFile {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for d in &self.decls {
            writeln!(f, "{d}")?;
        }
        for c in &self.symbolic {
            writeln!(f, "assert {c};")?;
        }
        for n in &self.neural {
            writeln!(f, "{n}")?;
        }
        Ok(())
    }
}
