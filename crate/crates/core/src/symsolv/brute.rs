use super::{check_sat, SymError, SymVerdict};
use crate::lang::{Constraint, Domain, VarDecl, VarKind};
use crate::value::{Assignment, Value};

/// Enumeration limits for [`brute_force`].
#[derive(Debug, Clone)]
pub struct BruteBounds {
    pub alphabet: Vec<char>,
    /// Strings are enumerated up to `min(maxlen, max_str_len)`.
    pub max_str_len: usize,
    pub max_tuples: u64,
}

impl Default for BruteBounds {
    fn default() -> Self {
        Self { alphabet: vec!['a', 'b'], max_str_len: 3, max_tuples: 10_000_000 }
    }
}

fn strings_up_to(alphabet: &[char], max: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut layer = vec![String::new()];
    for _ in 0..max {
        let mut next = Vec::with_capacity(layer.len() * alphabet.len());
        for s in &layer {
            for &c in alphabet {
                let mut t = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Exhaustive enumeration over integer ranges and bounded strings.
pub fn brute_force(constraints: &[Constraint], decls: &[VarDecl], bounds: &BruteBounds) -> Result<SymVerdict, SymError> {
    let mut total = 1f64;
    for d in decls {
        let n = match (d.kind, d.domain) {
            (VarKind::Int, Some(Domain::Range { lo, hi })) => (hi - lo + 1.0).max(0.0),
            (VarKind::Str, dom) => {
                let max = match dom {
                    Some(Domain::MaxLen(m)) => m.min(bounds.max_str_len),
                    _ => bounds.max_str_len,
                };
                let k = bounds.alphabet.len() as f64;
                (0..=max).map(|l| k.powi(l as i32)).sum()
            }
            _ => return Err(SymError::Unsupported(format!("`{}` has no enumerable domain", d.name))),
        };
        total *= n;
    }
    if total > bounds.max_tuples as f64 {
        return Err(SymError::TooLarge { tuples: total, limit: bounds.max_tuples });
    }
    if total == 0.0 {
        return Ok(SymVerdict::Unsat { complete: true });
    }

    let choices: Vec<Vec<Value>> = decls
        .iter()
        .map(|d| match (d.kind, d.domain) {
            (VarKind::Int, Some(Domain::Range { lo, hi })) => (lo as i64..=hi as i64).map(Value::Int).collect(),
            (_, dom) => {
                let max = match dom {
                    Some(Domain::MaxLen(m)) => m.min(bounds.max_str_len),
                    _ => bounds.max_str_len,
                };
                strings_up_to(&bounds.alphabet, max).into_iter().map(Value::Str).collect()
            }
        })
        .collect();

    let mut idx = vec![0usize; decls.len()];
    loop {
        let a: Assignment =
            decls.iter().zip(&idx).enumerate().map(|(k, (d, &i))| (d.name.clone(), choices[k][i].clone())).collect();
        if check_sat(&a, constraints)? {
            return Ok(SymVerdict::Sat(a));
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok(SymVerdict::Unsat { complete: true });
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}
