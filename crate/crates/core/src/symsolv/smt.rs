//! SMT-LIB v2 export, model import, and a child-process bridge.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::Mutex;

use super::{materialize, SymError};
use crate::lang::{ArithOp, CmpOp, Constraint, Domain, Expr, VarDecl, VarKind};
use crate::value::{Assignment, Value};

const RESERVED: &[&str] = &[
    "and", "or", "not", "let", "ite", "true", "false", "distinct", "div", "mod", "abs", "to_real", "to_int",
    "is_int", "forall", "exists", "par", "as", "xor", "assert", "model",
];

fn sym(name: &str) -> String {
    if RESERVED.contains(&name) {
        format!("|{name}|")
    } else {
        name.to_string()
    }
}

fn len_name(s: &str) -> String {
    format!("len_{s}")
}

fn num_lit(v: f64) -> (String, bool) {
    let real = v.fract() != 0.0;
    let body = if real { format!("{}", v.abs()) } else { format!("{}", v.abs() as i128) };
    let s = if v < 0.0 { format!("(- {body})") } else { body };
    (s, real)
}

fn as_real((s, real): (String, bool)) -> String {
    if real {
        s
    } else {
        format!("(to_real {s})")
    }
}

struct Exporter<'a> {
    kinds: HashMap<&'a str, VarKind>,
    ints: bool,
    reals: bool,
    nonlinear: bool,
}

impl Exporter<'_> {
    fn unsupported(what: &str) -> SymError {
        SymError::Unsupported(format!("{what} cannot be exported to integer/real arithmetic"))
    }

    fn term(&mut self, e: &Expr) -> Result<(String, bool), SymError> {
        Ok(match e {
            Expr::Num(v) => num_lit(*v),
            Expr::Var(name) => match self.kinds.get(name.as_str()) {
                Some(VarKind::Int) => (sym(name), false),
                Some(VarKind::Real) => (sym(name), true),
                Some(VarKind::Str) => return Err(Self::unsupported("a string in numeric position")),
                None => return Err(SymError::Undeclared(name.clone())),
            },
            Expr::StrLen(s) => (self.length(s)?, false),
            Expr::StrStr(..) => return Err(Self::unsupported("`strstr`")),
            Expr::Str(_) | Expr::Concat(..) => return Err(Self::unsupported("a string in numeric position")),
            Expr::Arith(op, l, r) => {
                let (lc, rc) = (l.collect_free().is_empty(), r.collect_free().is_empty());
                let (a, b) = (self.term(l)?, self.term(r)?);
                match op {
                    ArithOp::Div => {
                        if !rc {
                            self.nonlinear = true;
                        }
                        self.reals = true;
                        (format!("(/ {} {})", as_real(a), as_real(b)), true)
                    }
                    _ => {
                        if *op == ArithOp::Mul && !lc && !rc {
                            self.nonlinear = true;
                        }
                        let f = match op {
                            ArithOp::Add => "+",
                            ArithOp::Sub => "-",
                            _ => "*",
                        };
                        if a.1 || b.1 {
                            self.reals = true;
                            (format!("({f} {} {})", as_real(a), as_real(b)), true)
                        } else {
                            (format!("({f} {} {})", a.0, b.0), false)
                        }
                    }
                }
            }
        })
    }

    fn length(&mut self, e: &Expr) -> Result<String, SymError> {
        Ok(match e {
            Expr::Str(s) => s.chars().count().to_string(),
            Expr::Var(v) => {
                if !self.kinds.contains_key(v.as_str()) {
                    return Err(SymError::Undeclared(v.clone()));
                }
                len_name(v)
            }
            Expr::Concat(l, r) => format!("(+ {} {})", self.length(l)?, self.length(r)?),
            _ => return Err(Self::unsupported("a non-string `strlen` argument")),
        })
    }

    fn constraint(&mut self, c: &Constraint) -> Result<String, SymError> {
        Ok(match c {
            Constraint::And(l, r) => format!("(and {} {})", self.constraint(l)?, self.constraint(r)?),
            Constraint::Or(l, r) => format!("(or {} {})", self.constraint(l)?, self.constraint(r)?),
            Constraint::Contains(..) => return Err(Self::unsupported("`contains`")),
            Constraint::Cmp(op, l, r) => {
                let (a, b) = (self.term(l)?, self.term(r)?);
                let (a, b) = if a.1 || b.1 {
                    self.reals = true;
                    (as_real(a), as_real(b))
                } else {
                    (a.0, b.0)
                };
                match op {
                    CmpOp::Ne => format!("(not (= {a} {b}))"),
                    CmpOp::Eq => format!("(= {a} {b})"),
                    other => format!("({} {a} {b})", other.symbol()),
                }
            }
        })
    }
}

trait FreeVars {
    fn collect_free(&self) -> BTreeSet<String>;
}

impl FreeVars for Expr {
    fn collect_free(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        self.collect_vars(&mut s);
        s
    }
}

/// SMT-LIB v2 script deciding `constraints` over `decls`, with `(get-model)`.
/// String variables are represented by `len_<name>` integers.
pub fn export_smt(constraints: &[Constraint], decls: &[VarDecl]) -> Result<String, SymError> {
    let mut ex = Exporter { kinds: HashMap::new(), ints: false, reals: false, nonlinear: false };
    for d in decls {
        ex.kinds.insert(d.name.as_str(), d.kind);
    }
    for d in decls {
        if d.kind == VarKind::Str && ex.kinds.contains_key(len_name(&d.name).as_str()) {
            return Err(SymError::Unsupported(format!("`{}` collides with the length of `{}`", len_name(&d.name), d.name)));
        }
    }
    let mut decl_lines = String::new();
    let mut dom_lines = String::new();
    for d in decls {
        match d.kind {
            VarKind::Int | VarKind::Real => {
                let sort = if d.kind == VarKind::Int { "Int" } else { "Real" };
                if d.kind == VarKind::Int {
                    ex.ints = true;
                } else {
                    ex.reals = true;
                }
                let _ = writeln!(decl_lines, "(declare-const {} {sort})", sym(&d.name));
                if let Some(Domain::Range { lo, hi }) = d.domain {
                    let lit = |v: f64| {
                        let (s, real) = num_lit(v);
                        if d.kind == VarKind::Real && !real {
                            as_real((s, false))
                        } else {
                            s
                        }
                    };
                    let _ = writeln!(dom_lines, "(assert (and (>= {0} {1}) (<= {0} {2})))", sym(&d.name), lit(lo), lit(hi));
                }
            }
            VarKind::Str => {
                ex.ints = true;
                let l = len_name(&d.name);
                let _ = writeln!(decl_lines, "(declare-const {l} Int)");
                let _ = writeln!(dom_lines, "(assert (>= {l} 0))");
                if let Some(Domain::MaxLen(m)) = d.domain {
                    let _ = writeln!(dom_lines, "(assert (<= {l} {m}))");
                }
            }
        }
    }
    let mut body = String::new();
    for c in constraints {
        let _ = writeln!(body, "(assert {})", ex.constraint(c)?);
    }
    let arith = match (ex.ints, ex.reals) {
        (true, true) => "IRA",
        (false, true) => "RA",
        _ => "IA",
    };
    let logic = format!("QF_{}{arith}", if ex.nonlinear { "N" } else { "L" });
    Ok(format!(
        "(set-option :produce-models true)\n(set-logic {logic})\n{decl_lines}{dom_lines}{body}(check-sat)\n(get-model)\n"
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub enum SmtAnswer {
    Sat(Assignment),
    Unsat,
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
enum Sx {
    Atom(String),
    List(Vec<Sx>),
}

fn parse_sx(text: &str) -> Result<Vec<Sx>, SymError> {
    let mut stack: Vec<Vec<Sx>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' => stack.push(Vec::new()),
            ')' => {
                let done = stack.pop().filter(|_| !stack.is_empty());
                let Some(done) = done else {
                    return Err(SymError::External("unbalanced `)` in solver output".into()));
                };
                stack.last_mut().unwrap().push(Sx::List(done));
            }
            ';' => {
                while chars.next_if(|&c| c != '\n').is_some() {}
            }
            '"' => {
                let mut s = String::from('"');
                for c in chars.by_ref() {
                    s.push(c);
                    if c == '"' {
                        break;
                    }
                }
                stack.last_mut().unwrap().push(Sx::Atom(s));
            }
            '|' => {
                let mut s = String::new();
                for c in chars.by_ref() {
                    if c == '|' {
                        break;
                    }
                    s.push(c);
                }
                stack.last_mut().unwrap().push(Sx::Atom(s));
            }
            c if c.is_whitespace() => {}
            c => {
                let mut s = String::from(c);
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' {
                        break;
                    }
                    s.push(n);
                    chars.next();
                }
                stack.last_mut().unwrap().push(Sx::Atom(s));
            }
        }
    }
    if stack.len() != 1 {
        return Err(SymError::External("unbalanced `(` in solver output".into()));
    }
    Ok(stack.pop().unwrap())
}

fn sx_value(s: &Sx) -> Option<f64> {
    match s {
        Sx::Atom(a) => a.parse().ok(),
        Sx::List(items) => match items.as_slice() {
            [Sx::Atom(op), x] if op == "-" => Some(-sx_value(x)?),
            [Sx::Atom(op), x] if op == "to_real" => sx_value(x),
            [Sx::Atom(op), x, y] if op == "/" => Some(sx_value(x)? / sx_value(y)?),
            _ => None,
        },
    }
}

fn collect_defs(items: &[Sx], out: &mut HashMap<String, f64>) {
    for it in items {
        if let Sx::List(l) = it {
            match l.as_slice() {
                [Sx::Atom(kw), Sx::Atom(name), Sx::List(args), _sort, val] if kw == "define-fun" && args.is_empty() => {
                    if let Some(v) = sx_value(val) {
                        out.insert(name.clone(), v);
                    }
                }
                _ => collect_defs(l, out),
            }
        }
    }
}

/// Parse solver output for a script produced by [`export_smt`]. Strings are
/// materialized at their solved lengths; variables absent from the model take
/// the domain value closest to zero.
pub fn import_smt(output: &str, constraints: &[Constraint], decls: &[VarDecl]) -> Result<SmtAnswer, SymError> {
    let items = parse_sx(output)?;
    let status = items.iter().find_map(|s| match s {
        Sx::Atom(a) if a == "sat" || a == "unsat" || a == "unknown" => Some(a.as_str()),
        _ => None,
    });
    match status {
        Some("unsat") => return Ok(SmtAnswer::Unsat),
        Some("unknown") => return Ok(SmtAnswer::Unknown),
        Some(_) => {}
        None => return Err(SymError::External(format!("no verdict in solver output: {}", output.trim()))),
    }
    let mut defs = HashMap::new();
    collect_defs(&items, &mut defs);
    let mut a = Assignment::new();
    let mut lens = Vec::new();
    for d in decls {
        let fallback = match d.domain {
            Some(Domain::Range { lo, hi }) => 0f64.clamp(lo, hi),
            _ => 0.0,
        };
        match d.kind {
            VarKind::Str => {
                let l = defs.get(&len_name(&d.name)).copied().unwrap_or(0.0);
                if l < 0.0 || l.fract() != 0.0 {
                    return Err(SymError::External(format!("invalid length {l} for `{}`", d.name)));
                }
                lens.push((d.name.clone(), l as usize));
            }
            kind => {
                let v = defs.get(&d.name).copied().unwrap_or(fallback);
                a.insert(d.name.clone(), Value::numeric(kind, v));
            }
        }
    }
    materialize::strings(constraints, &lens, &mut a);
    Ok(SmtAnswer::Sat(a))
}

/// Runs an external SMT-LIB solver, one process per query. Access is
/// serialized; separate bridges are independent.
#[derive(Debug)]
pub struct SmtBridge {
    program: PathBuf,
    args: Vec<String>,
    lock: Mutex<()>,
}

impl SmtBridge {
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        Self { program: program.into(), args, lock: Mutex::new(()) }
    }

    /// Configured from `NSX_SMT_SOLVER` (binary) and `NSX_SMT_ARGS`
    /// (whitespace-separated, default `-in`).
    pub fn from_env() -> Option<Self> {
        let program = std::env::var_os("NSX_SMT_SOLVER")?;
        let args = std::env::var("NSX_SMT_ARGS").unwrap_or_else(|_| "-in".into());
        Some(Self::new(program, args.split_whitespace().map(String::from).collect()))
    }

    pub fn query(&self, constraints: &[Constraint], decls: &[VarDecl]) -> Result<SmtAnswer, SymError> {
        let script = export_smt(constraints, decls)?;
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| SymError::External(format!("cannot start {}: {e}", self.program.display())))?;
        child
            .stdin
            .take()
            .expect("piped stdin")
            .write_all(script.as_bytes())
            .map_err(|e| SymError::External(format!("writing script: {e}")))?;
        let out = child.wait_with_output().map_err(|e| SymError::External(e.to_string()))?;
        let stdout = String::from_utf8_lossy(&out.stdout);
        match import_smt(&stdout, constraints, decls) {
            Err(e) if !out.status.success() => {
                Err(SymError::External(format!("{e}; stderr: {}", String::from_utf8_lossy(&out.stderr).trim())))
            }
            r => r,
        }
    }
}
