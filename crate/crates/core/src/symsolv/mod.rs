//! Decision procedure for symbolic constraints.
//!
//! Atoms are lowered to numeric comparisons (strings through their lengths),
//! then decided by interval propagation and case splitting over the declared
//! domains. Atoms that depend on string content are checked concretely once
//! the lengths they mention are fixed. Linear conjunctions are additionally
//! refuted by Fourier–Motzkin elimination before any splitting.

mod brute;
mod fm;
mod interval;
mod lower;
mod materialize;
mod search;
mod smt;

pub use brute::{brute_force, BruteBounds};
pub use smt::{export_smt, import_smt, SmtAnswer, SmtBridge};

use crate::lang::{CmpOp, Constraint, Expr, VarDecl};
use crate::value::{eval_constraint, Assignment, EvalError, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum SymVerdict {
    Sat(Assignment),
    /// No assignment exists within the declared domains. `complete` is false
    /// when some region was rejected without proof (real-valued leaves below
    /// split tolerance, or string content the materializer could not satisfy).
    Unsat { complete: bool },
}

impl SymVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, SymVerdict::Sat(_))
    }

    pub fn assignment(&self) -> Option<&Assignment> {
        match self {
            SymVerdict::Sat(a) => Some(a),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SymError {
    #[error("undeclared variable `{0}`")]
    Undeclared(String),
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("search budget of {nodes} nodes exhausted")]
    Budget { nodes: usize },
    #[error("enumeration of {tuples} tuples exceeds the limit of {limit}")]
    TooLarge { tuples: f64, limit: u64 },
    #[error("external solver: {0}")]
    External(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone)]
pub struct SymConfig {
    /// Bound used for numeric variables declared without a range.
    pub default_bound: f64,
    /// Maximum length for strings declared without `maxlen`.
    pub default_max_len: usize,
    pub node_budget: usize,
}

impl Default for SymConfig {
    fn default() -> Self {
        Self { default_bound: 1e6, default_max_len: 4096, node_budget: 1_000_000 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymStats {
    pub nodes: usize,
    pub leaves: usize,
    pub fm_refuted: bool,
}

/// A disjunction `x1 != v1 || x2 != v2 || ...` excluding one assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictClause {
    pub disjuncts: Vec<(String, Value)>,
}

impl ConflictClause {
    pub fn excluding(a: &Assignment) -> ConflictClause {
        ConflictClause { disjuncts: a.iter().map(|(k, v)| (k.clone(), v.clone())).collect() }
    }

    /// True when `a` agrees with every excluded value, i.e. the clause is violated.
    pub fn matches(&self, a: &Assignment) -> bool {
        self.disjuncts.iter().all(|(k, v)| a.get(k) == Some(v))
    }

    pub fn to_constraint(&self) -> Option<Constraint> {
        let atoms = self
            .disjuncts
            .iter()
            .map(|(k, v)| {
                let lit = match v {
                    Value::Int(i) => Expr::Num(*i as f64),
                    Value::Real(r) => Expr::Num(*r),
                    Value::Str(s) => Expr::Str(s.clone()),
                };
                Constraint::cmp(CmpOp::Ne, Expr::var(k.clone()), lit)
            })
            .collect::<Vec<_>>();
        atoms.into_iter().reduce(Constraint::or)
    }
}

/// True iff every constraint holds under `a`.
pub fn check_sat(a: &Assignment, constraints: &[Constraint]) -> Result<bool, EvalError> {
    for c in constraints {
        if !eval_constraint(c, a)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Default)]
pub struct SymSolver {
    pub config: SymConfig,
}

impl SymSolver {
    pub fn new(config: SymConfig) -> Self {
        Self { config }
    }

    /// Decide `constraints` plus `conflicts` over `decls`. A SAT assignment binds
    /// every declared variable.
    pub fn solve(
        &self,
        constraints: &[Constraint],
        conflicts: &[ConflictClause],
        decls: &[VarDecl],
    ) -> Result<(SymVerdict, SymStats), SymError> {
        if conflicts.iter().any(|c| c.disjuncts.is_empty()) {
            return Ok((SymVerdict::Unsat { complete: true }, SymStats::default()));
        }
        let extra = conflicts.iter().filter_map(ConflictClause::to_constraint).collect();
        let problem = lower::lower(constraints, extra, decls, &self.config)?;
        search::run(&problem, &self.config)
    }
}

/// [`SymSolver::solve`] with default configuration.
pub fn solve(
    constraints: &[Constraint],
    conflicts: &[ConflictClause],
    decls: &[VarDecl],
) -> Result<SymVerdict, SymError> {
    SymSolver::default().solve(constraints, conflicts, decls).map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, parse_constraint, VarKind};

    fn run(text: &str) -> SymVerdict {
        let f = parse(text).unwrap();
        let v = solve(&f.symbolic, &[], &f.decls).unwrap();
        if let SymVerdict::Sat(a) = &v {
            assert!(check_sat(a, &f.symbolic).unwrap(), "unsound witness {a}");
        }
        v
    }

    #[test]
    fn unique_integer_solution() {
        let v = run("int x; assert x > 3; assert x < 5;");
        assert_eq!(v.assignment().unwrap().get("x"), Some(&Value::Int(4)));
    }

    #[test]
    fn empty_integer_interval() {
        assert_eq!(run("int x; assert x > 3; assert x < 4;"), SymVerdict::Unsat { complete: true });
    }

    #[test]
    fn exploit_symbolic_part() {
        let v = run(
            "str input_uri; str input_version; int uri_length; int ver_length; int ptr;
             assert uri_length == strlen(input_uri);
             assert ver_length == strlen(input_version);
             assert ptr > 99;",
        );
        let a = v.assignment().unwrap();
        assert_eq!(a.get("ptr"), Some(&Value::Int(100)));
        let u = a.get("input_uri").unwrap().as_str().unwrap();
        assert_eq!(u.len() as f64, a.num("uri_length").unwrap());
    }

    #[test]
    fn antisymmetry_over_wide_domain_is_refuted_quickly() {
        let f = parse("int a; int b; assert a < b; assert b < a;").unwrap();
        let (v, stats) = SymSolver::default().solve(&f.symbolic, &[], &f.decls).unwrap();
        assert_eq!(v, SymVerdict::Unsat { complete: true });
        assert!(stats.fm_refuted);
    }

    #[test]
    fn disjunction_and_nonlinear() {
        let v = run("int x in -10..10; int y in -10..10; assert x * y == 12 && (x > y || x + y < 0);");
        let a = v.assignment().unwrap();
        assert_eq!(a.num("x").unwrap() * a.num("y").unwrap(), 12.0);
    }

    #[test]
    fn reals() {
        let v = run("real r in -5..5; assert r * 2 > 3.5; assert r <= 1.8;");
        let r = v.assignment().unwrap().num("r").unwrap();
        assert!(r > 1.75 && r <= 1.8);
    }

    #[test]
    fn division_guards() {
        let v = run("int x in -3..3; assert 6 / x == 3;");
        assert_eq!(v.assignment().unwrap().get("x"), Some(&Value::Int(2)));
        assert_eq!(run("int x in 0..0; assert 1 / x > 0;"), SymVerdict::Unsat { complete: true });
    }

    #[test]
    fn conflicts_exclude_previous_picks() {
        let decls = vec![VarDecl::new("x", VarKind::Int).with_range(0.0, 3.0)];
        let c = vec![parse_constraint("x >= 0").unwrap()];
        let mut conflicts = Vec::new();
        let mut seen = Vec::new();
        loop {
            match solve(&c, &conflicts, &decls).unwrap() {
                SymVerdict::Sat(a) => {
                    assert!(!seen.contains(&a));
                    conflicts.push(ConflictClause::excluding(&a));
                    seen.push(a);
                }
                SymVerdict::Unsat { complete } => {
                    assert!(complete);
                    break;
                }
            }
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn string_content_atoms() {
        let v = run("str s maxlen 6; assert contains(s, \"ab\"); assert strlen(s) == 5;");
        assert_eq!(v.assignment().unwrap().get("s"), Some(&Value::Str("abaaa".into())));
        let v = run("str s maxlen 4; str t maxlen 4; assert s == t; assert strlen(s) == 3; assert t != \"aaa\";");
        assert!(matches!(v, SymVerdict::Unsat { complete: false }));
    }

    #[test]
    fn clause_text() {
        let mut a = Assignment::new();
        a.insert("V5", Value::Int(5));
        a.insert("V6", Value::Int(6));
        let cl = ConflictClause::excluding(&a);
        assert_eq!(cl.to_constraint().unwrap().to_string(), "V5 != 5 || V6 != 6");
        assert!(cl.matches(&a));
    }

    #[test]
    fn check_sat_examples() {
        let mut a = Assignment::new();
        a.insert("ptr", Value::Int(100));
        assert!(check_sat(&a, &[parse_constraint("ptr > 99").unwrap()]).unwrap());
        let mut a = Assignment::new();
        a.insert("a", Value::Int(3));
        a.insert("b", Value::Int(3));
        assert!(!check_sat(&a, &[parse_constraint("a != b").unwrap()]).unwrap());
    }
}
