use crate::lang::{parse_constraint, Constraint, VarDecl, VarKind};
use crate::value::{eval_constraint, Assignment, Value};

use super::{SampleRun, TargetProgram};

/// `while (guard) body` over integer state, started from `init(inputs)`.
#[derive(Debug, Clone)]
pub struct LoopProgram {
    pub name: &'static str,
    pub inputs: Vec<VarDecl>,
    pub vars: Vec<VarDecl>,
    /// Loop guard over the inputs and loop variables.
    pub guard: Constraint,
    init: fn(&[i64]) -> Vec<i64>,
    body: fn(&[i64], &mut [i64]),
    pub step_limit: usize,
    /// Default number of sampled executions.
    pub runs: usize,
}

impl LoopProgram {
    #[allow(clippy::too_many_arguments)]
    fn new(
        name: &'static str,
        inputs: &[(&str, i64, i64)],
        vars: &[&str],
        guard: &str,
        init: fn(&[i64]) -> Vec<i64>,
        body: fn(&[i64], &mut [i64]),
        step_limit: usize,
        runs: usize,
    ) -> LoopProgram {
        LoopProgram {
            name,
            inputs: inputs.iter().map(|&(n, lo, hi)| VarDecl::new(n, VarKind::Int).with_range(lo as f64, hi as f64)).collect(),
            vars: vars.iter().map(|n| VarDecl::new(*n, VarKind::Int)).collect(),
            guard: parse_constraint(guard).expect("built-in guard"),
            init,
            body,
            step_limit,
            runs,
        }
    }

    fn state(&self, input: &Assignment, x: &[i64]) -> Assignment {
        let mut a = input.clone();
        for (d, v) in self.vars.iter().zip(x) {
            a.insert(d.name.clone(), Value::Int(*v));
        }
        a
    }
}

impl TargetProgram for LoopProgram {
    fn name(&self) -> &str {
        self.name
    }

    fn inputs(&self) -> &[VarDecl] {
        &self.inputs
    }

    fn observed(&self) -> &[VarDecl] {
        &self.vars
    }

    fn step_limit(&self) -> usize {
        self.step_limit
    }

    fn default_runs(&self) -> usize {
        self.runs
    }

    fn run(&self, input: &Assignment) -> Result<SampleRun, String> {
        let args: Vec<i64> = self
            .inputs
            .iter()
            .map(|d| match input.get(&d.name) {
                Some(Value::Int(v)) => Ok(*v),
                _ => Err(format!("input `{}` missing or not an integer", d.name)),
            })
            .collect::<Result<_, _>>()?;
        let mut x = (self.init)(&args);
        let mut rows = vec![(0, self.state(input, &x).restrict(self.vars.iter().map(|d| &d.name)))];
        for cnt in 1..=self.step_limit {
            let s = self.state(input, &x);
            if !eval_constraint(&self.guard, &s).map_err(|e| e.to_string())? {
                break;
            }
            (self.body)(&args, &mut x);
            if x.iter().any(|v| v.unsigned_abs() > 1 << 40) {
                return Err("state overflow".into());
            }
            rows.push((cnt, self.state(input, &x).restrict(self.vars.iter().map(|d| &d.name))));
        }
        Ok(SampleRun { inputs: input.clone(), rows })
    }
}

/// Twenty small integer loops: counters, sums, products, gcd-like and geometric updates.
pub fn loop_suite() -> Vec<LoopProgram> {
    vec![
        LoopProgram::new(
            "fig8",
            &[("a", -10, 10), ("b", -10, 10)],
            &["c", "d"],
            "c > d",
            |i| vec![i[0], i[1]],
            |_, x| {
                x[0] = x[0] + x[1] + 1;
                x[1] += 1;
            },
            16,
            1200,
        ),
        LoopProgram::new(
            "sum_to",
            &[("n", 0, 15)],
            &["i", "s"],
            "i < n",
            |_| vec![0, 0],
            |_, x| {
                x[0] += 1;
                x[1] += x[0];
            },
            256,
            1000,
        ),
        LoopProgram::new(
            "square_sum",
            &[("k", 0, 12)],
            &["c", "y", "x"],
            "c < k",
            |_| vec![0, 0, 0],
            |_, x| {
                x[0] += 1;
                x[1] += 1;
                x[2] += x[1] * x[1];
            },
            256,
            1000,
        ),
        LoopProgram::new(
            "doubling",
            &[("n", 1, 200)],
            &["x"],
            "x < n",
            |_| vec![1],
            |_, x| x[0] *= 2,
            256,
            1000,
        ),
        LoopProgram::new(
            "two_counters",
            &[("n", 0, 15)],
            &["x", "y"],
            "x < n",
            |_| vec![0, 0],
            |_, x| {
                x[0] += 1;
                x[1] += 2;
            },
            256,
            1000,
        ),
        LoopProgram::new(
            "countdown",
            &[("a", 0, 30)],
            &["x", "y"],
            "x > 0",
            |i| vec![i[0], 0],
            |_, x| {
                x[0] -= 3;
                x[1] += 1;
            },
            256,
            1000,
        ),
        LoopProgram::new(
            "chase",
            &[("a", 0, 20), ("b", 0, 20)],
            &["x", "y"],
            "x < y",
            |i| vec![i[0], i[1]],
            |_, x| {
                x[0] += 2;
                x[1] += 1;
            },
            256,
            1000,
        ),
        LoopProgram::new(
            "divide",
            &[("x", 0, 60), ("y", 1, 8)],
            &["q", "r"],
            "r >= y",
            |i| vec![0, i[0]],
            |i, x| {
                x[1] -= i[1];
                x[0] += 1;
            },
            256,
            1000,
        ),
        LoopProgram::new(
            "isqrt",
            &[("n", 0, 100)],
            &["a", "s", "t"],
            "s <= n",
            |_| vec![0, 1, 1],
            |_, x| {
                x[0] += 1;
                x[2] += 2;
                x[1] += x[2];
            },
            256,
            1000,
        ),
        LoopProgram::new(
            "cubes",
            &[("a", 0, 8)],
            &["n", "x", "y", "z"],
            "n <= a",
            |_| vec![0, 0, 1, 6],
            |_, v| {
                v[0] += 1;
                v[1] += v[2];
                v[2] += v[3];
                v[3] += 6;
            },
            256,
            1000,
        ),
        LoopProgram::new(
            "triangle_down",
            &[("a", 0, 40)],
            &["x", "s"],
            "x >= 1",
            |i| vec![i[0], 0],
            |_, v| {
                v[1] += v[0];
                v[0] -= 1;
            },
            256,
            1000,
        ),
        LoopProgram::new(
            "stride",
            &[("a", 1, 10), ("b", 0, 40)],
            &["x"],
            "x <= b",
            |_| vec![0],
            |i, v| v[0] += i[0],
            256,
            1000,
        ),
        LoopProgram::new(
            "count_to",
            &[("n", 0, 20)],
            &["i", "j"],
            "i != n",
            |i| vec![0, i[0]],
            |_, v| {
                v[0] += 1;
                v[1] -= 1;
            },
            256,
            1000,
        ),
        LoopProgram::new(
            "approach",
            &[("a", -10, 10), ("b", -10, 10)],
            &["x"],
            "x != b",
            |i| vec![i[0]],
            |i, v| v[0] += if v[0] < i[1] { 1 } else { -1 },
            256,
            1000,
        ),
        LoopProgram::new(
            "drain",
            &[("a", 0, 15)],
            &["x", "y"],
            "x != 0",
            |i| vec![i[0], 0],
            |_, v| {
                v[0] -= 1;
                v[1] += 2;
            },
            256,
            1000,
        ),
        LoopProgram::new(
            "gcd",
            &[("a", 1, 12), ("b", 1, 12)],
            &["x", "y"],
            "x != y",
            |i| vec![i[0], i[1]],
            |_, v| {
                if v[0] > v[1] {
                    v[0] -= v[1];
                } else {
                    v[1] -= v[0];
                }
            },
            256,
            1000,
        ),
        LoopProgram::new(
            "both_below",
            &[("n", 0, 12), ("m", 0, 24)],
            &["x", "y"],
            "x < n && y < m",
            |_| vec![0, 0],
            |_, v| {
                v[0] += 1;
                v[1] += 2;
            },
            256,
            1000,
        ),
        LoopProgram::new(
            "either_below",
            &[("n", 0, 15)],
            &["i", "j"],
            "i < n || j < 5",
            |_| vec![0, 0],
            |_, v| {
                v[0] += 1;
                v[1] += 1;
            },
            256,
            1000,
        ),
        LoopProgram::new(
            "window",
            &[("a", -10, 10)],
            &["x", "k"],
            "x < 0 || x > 5",
            |i| vec![i[0], 0],
            |_, v| {
                v[0] += if v[0] < 0 { 2 } else { -1 };
                v[1] += 1;
            },
            256,
            1000,
        ),
        LoopProgram::new(
            "dual_countdown",
            &[("a", 0, 12), ("b", 0, 12)],
            &["x", "y"],
            "x > 0 && y > 0",
            |i| vec![i[0], i[1]],
            |_, v| {
                v[0] -= 1;
                v[1] -= 1;
            },
            256,
            1000,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(p: &LoopProgram, args: &[i64]) -> SampleRun {
        let a: Assignment = p.inputs.iter().zip(args).map(|(d, v)| (d.name.clone(), Value::Int(*v))).collect();
        p.run(&a).unwrap()
    }

    #[test]
    fn suite_respects_step_limit_at_domain_corners() {
        for p in loop_suite() {
            let corner = |pick_hi: bool| -> Vec<i64> {
                p.inputs
                    .iter()
                    .map(|d| match d.domain {
                        Some(crate::lang::Domain::Range { lo, hi }) => (if pick_hi { hi } else { lo }) as i64,
                        _ => 0,
                    })
                    .collect()
            };
            for args in [corner(false), corner(true)] {
                let r = run(&p, &args);
                assert!(r.rows.len() <= p.step_limit + 1, "{}", p.name);
                assert!(r.rows.iter().enumerate().all(|(i, (cnt, _))| *cnt == i), "{}", p.name);
            }
        }
    }

    #[test]
    fn closed_forms() {
        let s = loop_suite();
        let get = |n: &str| s.iter().find(|p| p.name == n).unwrap();
        let r = run(get("sum_to"), &[5]);
        assert_eq!(r.rows.len(), 6);
        assert_eq!(r.at(5).unwrap().num("s"), Some(15.0));
        let r = run(get("divide"), &[17, 5]);
        let last = &r.rows.last().unwrap().1;
        assert_eq!((last.num("q"), last.num("r")), (Some(3.0), Some(2.0)));
        let r = run(get("cubes"), &[4]);
        assert_eq!(r.at(5).unwrap().num("x"), Some(125.0));
        let r = run(get("gcd"), &[12, 8]);
        assert_eq!(r.rows.last().unwrap().1.num("x"), Some(4.0));
        let r = run(get("isqrt"), &[50]);
        assert_eq!(r.rows.last().unwrap().1.num("a"), Some(7.0));
    }
}
