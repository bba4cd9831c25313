//! Concrete strings of solved lengths.

use crate::lang::{CmpOp, Constraint, Expr};
use crate::value::{Assignment, Value};

const FILL: char = 'a';

fn literal_needles(e: &Expr, var: &str, out: &mut Vec<String>) {
    match e {
        Expr::StrStr(h, n) => {
            if let (Expr::Var(v), Expr::Str(lit)) = (&**h, &**n) {
                if v == var && !out.contains(lit) {
                    out.push(lit.clone());
                }
            }
            literal_needles(h, var, out);
            literal_needles(n, var, out);
        }
        Expr::Arith(_, l, r) | Expr::Concat(l, r) => {
            literal_needles(l, var, out);
            literal_needles(r, var, out);
        }
        Expr::StrLen(x) => literal_needles(x, var, out),
        _ => {}
    }
}

/// Bind every string in `lens` to a string of exactly that length. Literal
/// equalities are honoured when the length fits; otherwise literal needles
/// from `contains`/`strstr` are placed leftmost over a filler.
pub(crate) fn strings(checks: &[Constraint], lens: &[(String, usize)], a: &mut Assignment) {
    let atoms: Vec<&Constraint> = checks.iter().flat_map(|c| c.atoms()).collect();
    for (name, len) in lens {
        let mut exact = None;
        let mut needles = Vec::new();
        for atom in &atoms {
            match atom {
                Constraint::Cmp(CmpOp::Eq, Expr::Var(v), Expr::Str(lit))
                | Constraint::Cmp(CmpOp::Eq, Expr::Str(lit), Expr::Var(v))
                    if v == name && lit.chars().count() == *len =>
                {
                    exact.get_or_insert_with(|| lit.clone());
                }
                Constraint::Contains(Expr::Var(v), Expr::Str(lit)) if v == name => {
                    if !needles.contains(lit) {
                        needles.push(lit.clone());
                    }
                }
                Constraint::Cmp(_, l, r) | Constraint::Contains(l, r) => {
                    literal_needles(l, name, &mut needles);
                    literal_needles(r, name, &mut needles);
                }
                _ => {}
            }
        }
        let s = exact.unwrap_or_else(|| place(&needles, *len));
        a.insert(name.clone(), Value::Str(s));
    }

    // Propagate variable-to-variable equalities between equal-length strings.
    for _ in 0..2 {
        for atom in &atoms {
            if let Constraint::Cmp(CmpOp::Eq, Expr::Var(x), Expr::Var(y)) = atom {
                let (Some(Value::Str(sx)), Some(Value::Str(sy))) = (a.get(x), a.get(y)) else {
                    continue;
                };
                if sx.chars().count() == sy.chars().count() && sx != sy {
                    let sx = sx.clone();
                    a.insert(y.clone(), Value::Str(sx));
                }
            }
        }
    }
}

fn place(needles: &[String], len: usize) -> String {
    let mut s = String::new();
    let mut used = 0;
    for n in needles {
        let k = n.chars().count();
        if used + k <= len {
            s.push_str(n);
            used += k;
        }
    }
    s.extend(std::iter::repeat_n(FILL, len - used));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_constraint;

    fn run(cs: &[&str], lens: &[(&str, usize)]) -> Assignment {
        let checks: Vec<Constraint> = cs.iter().map(|c| parse_constraint(c).unwrap()).collect();
        let lens: Vec<(String, usize)> = lens.iter().map(|(n, l)| (n.to_string(), *l)).collect();
        let mut a = Assignment::new();
        strings(&checks, &lens, &mut a);
        a
    }

    #[test]
    fn filler_of_solved_length() {
        let a = run(&[], &[("u", 4)]);
        assert_eq!(a.get("u"), Some(&Value::Str("aaaa".into())));
    }

    #[test]
    fn needles_go_leftmost() {
        let a = run(&["contains(u, \"GET\")", "strstr(u, \"/\") >= 0"], &[("u", 6)]);
        assert_eq!(a.get("u"), Some(&Value::Str("GET/aa".into())));
    }

    #[test]
    fn literal_equality_wins_when_length_fits() {
        let a = run(&["u == \"HTTP\""], &[("u", 4)]);
        assert_eq!(a.get("u"), Some(&Value::Str("HTTP".into())));
        let a = run(&["u == \"HTTP\""], &[("u", 2)]);
        assert_eq!(a.get("u"), Some(&Value::Str("aa".into())));
    }

    #[test]
    fn equal_strings_are_copied() {
        let a = run(&["u == v", "contains(u, \"z\")"], &[("u", 2), ("v", 2)]);
        assert_eq!(a.get("v"), a.get("u"));
    }
}
