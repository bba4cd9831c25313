use super::ast::*;
use super::check::{self, Issue};
use super::lexer::{tokenize, Spanned, Tok};
use super::LangError;

/// Parse and type-check a constraint file.
pub fn parse(text: &str) -> Result<ConstraintFile, LangError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    let mut file = ConstraintFile::default();
    let mut decl_pos = Vec::new();
    let mut assert_pos = Vec::new();
    let mut neural_pos = Vec::new();

    while !p.at(&Tok::Eof) {
        let (line, col) = p.here();
        let Tok::Ident(kw) = p.peek().clone() else {
            return Err(p.unexpected("a declaration, `assert` or `neural`"));
        };
        match kw.as_str() {
            "int" | "real" | "str" => {
                p.bump();
                let kind = match kw.as_str() {
                    "int" => VarKind::Int,
                    "real" => VarKind::Real,
                    _ => VarKind::Str,
                };
                file.decls.push(p.decl_rest(kind)?);
                decl_pos.push((line, col));
            }
            "assert" => {
                p.bump();
                let c = p.constraint()?;
                p.expect(&Tok::Semi)?;
                file.symbolic.push(c);
                assert_pos.push((line, col));
            }
            "neural" => {
                p.bump();
                file.neural.push(p.neural_rest()?);
                neural_pos.push((line, col));
            }
            _ => return Err(p.unexpected("a declaration, `assert` or `neural`")),
        }
    }

    let at = |pos: &[(usize, usize)], i: usize| pos[i];
    check::check_file(&file).map_err(|issue| match issue {
        Issue::Decl(i, e) => e.at(at(&decl_pos, i)),
        Issue::Assert(i, e) => e.at(at(&assert_pos, i)),
        Issue::Neural(i, e) => e.at(at(&neural_pos, i)),
    })?;
    Ok(file)
}

/// Parse a single constraint (no surrounding `assert`/`;`), without type checking.
pub fn parse_constraint(text: &str) -> Result<Constraint, LangError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    let c = p.constraint()?;
    if !p.at(&Tok::Eof) {
        return Err(p.unexpected("end of constraint"));
    }
    Ok(c)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, wanted: &str) -> LangError {
        let (line, col) = self.here();
        LangError::Syntax { line, col, msg: format!("expected {wanted}, found {}", self.peek().describe()) }
    }

    fn expect(&mut self, t: &Tok) -> Result<(), LangError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.unexpected(&t.describe()))
        }
    }

    fn ident(&mut self) -> Result<String, LangError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Tok::Ident(s) if s == kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn signed_number(&mut self) -> Result<f64, LangError> {
        let neg = self.eat(&Tok::Minus);
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    fn decl_rest(&mut self, kind: VarKind) -> Result<VarDecl, LangError> {
        let name = self.ident()?;
        let mut decl = VarDecl::new(name, kind);
        if self.keyword("in") {
            let lo = self.signed_number()?;
            self.expect(&Tok::DotDot)?;
            let hi = self.signed_number()?;
            decl.domain = Some(Domain::Range { lo, hi });
        } else if self.keyword("maxlen") {
            let (line, col) = self.here();
            let n = self.signed_number()?;
            if n < 0.0 || n.fract() != 0.0 || n > u32::MAX as f64 {
                return Err(LangError::Domain { line, col, msg: format!("maxlen must be a non-negative integer, got {n}") });
            }
            decl.domain = Some(Domain::MaxLen(n as usize));
        }
        self.expect(&Tok::Semi)?;
        Ok(decl)
    }

    fn neural_rest(&mut self) -> Result<NeuralDecl, LangError> {
        let model = match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                s
            }
            _ => return Err(self.unexpected("a quoted model path")),
        };
        let inputs = self.name_list()?;
        self.expect(&Tok::Arrow)?;
        let outputs = self.name_list()?;
        self.expect(&Tok::Semi)?;
        Ok(NeuralDecl { model, inputs, outputs })
    }

    fn name_list(&mut self) -> Result<Vec<String>, LangError> {
        self.expect(&Tok::LParen)?;
        let mut names = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                names.push(self.ident()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::RParen)?;
        Ok(names)
    }

    fn constraint(&mut self) -> Result<Constraint, LangError> {
        let mut lhs = self.conjunction()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.conjunction()?;
            lhs = Constraint::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Constraint, LangError> {
        let mut lhs = self.constraint_atom()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.constraint_atom()?;
            lhs = Constraint::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn constraint_atom(&mut self) -> Result<Constraint, LangError> {
        if matches!(self.peek(), Tok::Ident(s) if s == "contains") {
            self.bump();
            self.expect(&Tok::LParen)?;
            let h = self.expr()?;
            self.expect(&Tok::Comma)?;
            let n = self.expr()?;
            self.expect(&Tok::RParen)?;
            return Ok(Constraint::Contains(h, n));
        }
        // `(` may open either an arithmetic operand or a nested constraint.
        let start = self.pos;
        let as_cmp = self.comparison();
        if as_cmp.is_ok() || self.toks[start].tok != Tok::LParen {
            return as_cmp;
        }
        let cmp_err = as_cmp.unwrap_err();
        let cmp_reach = self.pos;
        self.pos = start;
        self.bump();
        let nested = self.constraint().and_then(|c| {
            self.expect(&Tok::RParen)?;
            Ok(c)
        });
        match nested {
            Ok(c) => Ok(c),
            Err(e) if self.pos >= cmp_reach => Err(e),
            Err(_) => Err(cmp_err),
        }
    }

    fn comparison(&mut self) -> Result<Constraint, LangError> {
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::EqEq => CmpOp::Eq,
            Tok::NotEq => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Err(self.unexpected("a comparison operator")),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Constraint::Cmp(op, lhs, rhs))
    }

    fn expr(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::arith(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::arith(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, LangError> {
        if self.eat(&Tok::Minus) {
            if let Tok::Num(v) = *self.peek() {
                self.bump();
                return Ok(Expr::Num(-v));
            }
            let inner = self.unary()?;
            return Ok(Expr::arith(ArithOp::Sub, Expr::Num(0.0), inner));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, LangError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "strlen" => {
                    self.bump();
                    self.expect(&Tok::LParen)?;
                    let e = self.expr()?;
                    self.expect(&Tok::RParen)?;
                    Ok(Expr::strlen(e))
                }
                "strstr" | "concat" => {
                    self.bump();
                    self.expect(&Tok::LParen)?;
                    let a = self.expr()?;
                    self.expect(&Tok::Comma)?;
                    let b = self.expr()?;
                    self.expect(&Tok::RParen)?;
                    let (a, b) = (Box::new(a), Box::new(b));
                    Ok(if name == "strstr" { Expr::StrStr(a, b) } else { Expr::Concat(a, b) })
                }
                _ => Ok(Expr::Var(self.ident()?)),
            },
            _ => Err(self.unexpected("an expression")),
        }
    }
}

pub(crate) fn is_reserved(s: &str) -> bool {
    matches!(
        s,
        "int" | "real" | "str" | "in" | "maxlen" | "assert" | "neural" | "strlen" | "strstr" | "concat" | "contains"
    )
}
