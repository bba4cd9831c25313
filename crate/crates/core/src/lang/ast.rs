use std::collections::BTreeSet;
use std::fmt;

/// Value kind of a declared variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    Int,
    Real,
    Str,
}

impl VarKind {
    pub fn is_numeric(self) -> bool {
        !matches!(self, VarKind::Str)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            VarKind::Int => "int",
            VarKind::Real => "real",
            VarKind::Str => "str",
        }
    }
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Declared domain: a closed interval for numeric kinds, a maximum length for strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Range { lo: f64, hi: f64 },
    MaxLen(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub kind: VarKind,
    pub domain: Option<Domain>,
}

impl VarDecl {
    pub fn new(name: impl Into<String>, kind: VarKind) -> Self {
        Self { name: name.into(), kind, domain: None }
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Self {
        self.domain = Some(Domain::Range { lo, hi });
        self
    }

    pub fn with_max_len(mut self, n: usize) -> Self {
        self.domain = Some(Domain::MaxLen(n));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            ArithOp::Add | ArithOp::Sub => 1,
            ArithOp::Mul | ArithOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Gt,
    Ge,
    Lt,
    Le,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Gt, CmpOp::Ge, CmpOp::Lt, CmpOp::Le];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
        }
    }

    /// The comparison that holds exactly when `self` does not.
    pub fn dual(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
        }
    }

    pub fn holds(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Str(String),
    Var(String),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    StrLen(Box<Expr>),
    /// Index of the first occurrence of the needle, -1 when absent.
    StrStr(Box<Expr>, Box<Expr>),
    Concat(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn arith(op: ArithOp, l: Expr, r: Expr) -> Expr {
        Expr::Arith(op, Box::new(l), Box::new(r))
    }

    pub fn strlen(e: Expr) -> Expr {
        Expr::StrLen(Box::new(e))
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) | Expr::Str(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::StrLen(e) => e.collect_vars(out),
            Expr::Arith(_, l, r) | Expr::StrStr(l, r) | Expr::Concat(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }
}

/// Boolean tree over comparison atoms.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    Cmp(CmpOp, Expr, Expr),
    Contains(Expr, Expr),
    And(Box<Constraint>, Box<Constraint>),
    Or(Box<Constraint>, Box<Constraint>),
}

impl Constraint {
    pub fn cmp(op: CmpOp, l: Expr, r: Expr) -> Constraint {
        Constraint::Cmp(op, l, r)
    }

    pub fn and(l: Constraint, r: Constraint) -> Constraint {
        Constraint::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Constraint, r: Constraint) -> Constraint {
        Constraint::Or(Box::new(l), Box::new(r))
    }

    /// Left-nested conjunction of a non-empty list.
    pub fn conjunction(mut items: Vec<Constraint>) -> Option<Constraint> {
        if items.is_empty() {
            return None;
        }
        let first = items.remove(0);
        Some(items.into_iter().fold(first, Constraint::and))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Constraint::Cmp(_, l, r) | Constraint::Contains(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Constraint::And(l, r) | Constraint::Or(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    /// Negation by comparison dualization and De Morgan. `contains` has no
    /// dual in the grammar, so negating it yields `None`.
    pub fn dual(&self) -> Option<Constraint> {
        Some(match self {
            Constraint::Cmp(op, l, r) => Constraint::Cmp(op.dual(), l.clone(), r.clone()),
            Constraint::Contains(..) => return None,
            Constraint::And(l, r) => Constraint::or(l.dual()?, r.dual()?),
            Constraint::Or(l, r) => Constraint::and(l.dual()?, r.dual()?),
        })
    }

    /// Visit every leaf atom, left to right.
    pub fn atoms(&self) -> Vec<&Constraint> {
        let mut out = Vec::new();
        fn walk<'a>(c: &'a Constraint, out: &mut Vec<&'a Constraint>) {
            match c {
                Constraint::And(l, r) | Constraint::Or(l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                atom => out.push(atom),
            }
        }
        walk(self, &mut out);
        out
    }
}

/// Neural constraint: a model file mapping named inputs to named outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralDecl {
    pub model: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl NeuralDecl {
    pub fn vars(&self) -> BTreeSet<String> {
        self.inputs.iter().chain(&self.outputs).cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintFile {
    pub decls: Vec<VarDecl>,
    /// Implicit conjunction.
    pub symbolic: Vec<Constraint>,
    pub neural: Vec<NeuralDecl>,
}

impl ConstraintFile {
    pub fn decl(&self, name: &str) -> Option<&VarDecl> {
        self.decls.iter().find(|d| d.name == name)
    }

    pub fn kind_of(&self, name: &str) -> Option<VarKind> {
        self.decl(name).map(|d| d.kind)
    }
}
