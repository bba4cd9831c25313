//! Black-box target programs, execution sampling and the benchmark runner.

mod external;
mod http;
mod loops;
mod task;

pub use external::ExternalProgram;
pub use http::{materialize_request, process_request, HttpOutcome, HttpParser, MSGBUF_LEN};
pub use loops::{loop_suite, LoopProgram};
pub use task::{
    bench_table, classify_guard, exploit_task_file, loop_task_file, request_from_witness, run_exploit_task, run_loop_task,
    validate_witness, Attempt,
    ExploitConfig, ExploitReport, GuardType, LoopReport, LoopTaskConfig, Validation,
};

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::lang::{Domain, VarDecl, VarKind};
use crate::nnet::{Column, Dataset, NnetError};
use crate::value::{Assignment, Value};

/// Name of the implicit iteration counter column.
pub const CNT: &str = "cnt";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("program `{0}` failed: {1}")]
    Program(String, String),
    #[error("unknown program `{0}`")]
    UnknownProgram(String),
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Nnet(#[from] NnetError),
    #[error(transparent)]
    Solve(#[from] crate::mixed::SolveError),
    #[error(transparent)]
    Lang(#[from] crate::lang::LangError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One execution: the inputs and one observation per iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRun {
    pub inputs: Assignment,
    /// `(cnt, observed state)` with `cnt` strictly increasing from 0.
    pub rows: Vec<(usize, Assignment)>,
}

impl SampleRun {
    pub fn at(&self, cnt: usize) -> Option<&Assignment> {
        self.rows.iter().find(|(c, _)| *c == cnt).map(|(_, a)| a)
    }
}

/// A program the harness can only run, not inspect.
pub trait TargetProgram: Sync {
    fn name(&self) -> &str;
    /// Inputs with the domains sampling draws from.
    fn inputs(&self) -> &[VarDecl];
    /// Observed variables (numeric).
    fn observed(&self) -> &[VarDecl];
    fn step_limit(&self) -> usize;
    /// Executions sampled when the caller does not say.
    fn default_runs(&self) -> usize {
        1000
    }
    /// Execute on in-domain inputs. An error means the run produced no rows.
    fn run(&self, inputs: &Assignment) -> Result<SampleRun, String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SampleStats {
    pub runs: usize,
    pub rows: usize,
    /// Runs that failed or were rejected by the program.
    pub skipped: usize,
}

/// Dataset column carrying the length of string input `s`.
pub fn length_column(s: &str) -> String {
    format!("{s}_length")
}

/// Input columns: numeric inputs as-is, strings as length columns.
pub fn input_columns(p: &dyn TargetProgram) -> Vec<Column> {
    p.inputs()
        .iter()
        .map(|d| match d.kind {
            VarKind::Str => Column::new(length_column(&d.name), VarKind::Int),
            k => Column::new(d.name.clone(), k),
        })
        .collect()
}

fn draw(d: &VarDecl, rng: &mut ChaCha8Rng) -> Value {
    match (d.kind, d.domain) {
        (VarKind::Str, dom) => {
            let max = match dom {
                Some(Domain::MaxLen(n)) => n,
                _ => 64,
            };
            let len = rng.gen_range(0..=max);
            Value::Str((0..len).map(|_| rng.gen_range(b'a'..=b'z') as char).collect())
        }
        (VarKind::Int, Some(Domain::Range { lo, hi })) => Value::Int(rng.gen_range(lo.ceil() as i64..=hi.floor() as i64)),
        (VarKind::Int, _) => Value::Int(rng.gen_range(-100..=100)),
        (VarKind::Real, Some(Domain::Range { lo, hi })) => Value::Real(Uniform::new_inclusive(lo, hi).sample(rng)),
        (VarKind::Real, _) => Value::Real(rng.gen_range(-100.0..=100.0)),
    }
}

/// `n` seeded uniform input tuples.
pub fn draw_inputs(p: &dyn TargetProgram, n: usize, seed: u64) -> Vec<Assignment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| p.inputs().iter().map(|d| (d.name.clone(), draw(d, &mut rng))).collect()).collect()
}

fn flatten(p: &dyn TargetProgram, run: &SampleRun) -> Vec<Vec<f64>> {
    let mut base = Vec::new();
    for d in p.inputs() {
        base.push(match run.inputs.get(&d.name) {
            Some(Value::Str(s)) => s.chars().count() as f64,
            Some(v) => v.as_f64().unwrap_or(f64::NAN),
            None => f64::NAN,
        });
    }
    run.rows
        .iter()
        .map(|(cnt, obs)| {
            let mut row = base.clone();
            row.push(*cnt as f64);
            row.extend(p.observed().iter().map(|d| obs.num(&d.name).unwrap_or(f64::NAN)));
            row
        })
        .collect()
}

/// Run `p` on `n` uniform inputs and flatten every observation row into a
/// dataset with columns inputs, `cnt`, observed variables.
pub fn sample(p: &dyn TargetProgram, n: usize, seed: u64) -> Result<(Dataset, SampleStats), HarnessError> {
    if n == 0 {
        return Err(HarnessError::Precondition("sample count must be at least 1".into()));
    }
    let inputs = draw_inputs(p, n, seed);
    let runs: Vec<Option<Vec<Vec<f64>>>> =
        inputs.par_iter().map(|a| p.run(a).ok().map(|r| flatten(p, &r))).collect();
    let mut columns = input_columns(p);
    columns.push(Column::new(CNT, VarKind::Int));
    columns.extend(p.observed().iter().map(|d| Column::new(d.name.clone(), d.kind)));
    let mut data = Dataset::new(columns);
    let mut stats = SampleStats { runs: n, ..Default::default() };
    for r in runs {
        match r {
            Some(rows) => {
                for row in rows {
                    data.push(row)?;
                    stats.rows += 1;
                }
            }
            None => stats.skipped += 1,
        }
    }
    Ok((data, stats))
}

/// Seeded shuffle-and-split into disjoint, exhaustive parts.
pub fn split(d: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset), HarnessError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(HarnessError::Precondition(format!("split ratio {ratio} must lie strictly between 0 and 1")));
    }
    if d.len() < 2 {
        return Err(HarnessError::Precondition(format!("cannot split {} rows", d.len())));
    }
    Ok(d.split(ratio, seed))
}

/// Built-in programs by name: the loop suite plus `http`.
pub fn builtin(name: &str) -> Result<Box<dyn TargetProgram>, HarnessError> {
    if name == "http" {
        return Ok(Box::new(HttpParser::default()));
    }
    loop_suite()
        .into_iter()
        .find(|p| p.name == name)
        .map(|p| Box::new(p) as Box<dyn TargetProgram>)
        .ok_or_else(|| HarnessError::UnknownProgram(name.into()))
}

/// Names accepted by [`builtin`].
pub fn builtin_names() -> Vec<String> {
    let mut v: Vec<String> = loop_suite().iter().map(|p| p.name.to_string()).collect();
    v.push("http".into());
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig8_rows() {
        let p = builtin("fig8").unwrap();
        let a: Assignment = [("a".to_string(), Value::Int(5)), ("b".to_string(), Value::Int(2))].into_iter().collect();
        let r = p.run(&a).unwrap();
        let cd = |i: usize| (r.rows[i].0, r.rows[i].1.num("c").unwrap(), r.rows[i].1.num("d").unwrap());
        assert_eq!(cd(0), (0, 5.0, 2.0));
        assert_eq!(cd(1), (1, 8.0, 3.0));
        assert_eq!(cd(2), (2, 12.0, 4.0));
        assert_eq!(r.rows.len(), p.step_limit() + 1);

        let a: Assignment = [("a".to_string(), Value::Int(2)), ("b".to_string(), Value::Int(5))].into_iter().collect();
        let r = p.run(&a).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!((r.rows[0].1.num("c"), r.rows[0].1.num("d")), (Some(2.0), Some(5.0)));
    }

    #[test]
    fn sample_is_reproducible() {
        let p = builtin("fig8").unwrap();
        let (d1, s1) = sample(p.as_ref(), 200, 7).unwrap();
        let (d2, _) = sample(p.as_ref(), 200, 7).unwrap();
        assert_eq!(d1, d2);
        assert_eq!(s1.runs, 200);
        assert!(s1.rows >= 200 && s1.rows <= 200 * (p.step_limit() + 1));
        let names: Vec<_> = d1.columns.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["a", "b", "cnt", "c", "d"]);
        let (d3, _) = sample(p.as_ref(), 200, 8).unwrap();
        assert_ne!(d1, d3);
    }

    #[test]
    fn split_checks() {
        let p = builtin("fig8").unwrap();
        let (d, _) = sample(p.as_ref(), 100, 1).unwrap();
        let d = Dataset { columns: d.columns, rows: d.rows[..100].to_vec() };
        let (a, b) = split(&d, 0.8, 3).unwrap();
        assert_eq!((a.len(), b.len()), (80, 20));
        assert_eq!(split(&d, 0.8, 3).unwrap(), (a, b));
        assert!(split(&d, 0.0, 3).is_err());
        assert!(split(&d, 1.0, 3).is_err());
        let one = Dataset { columns: d.columns.clone(), rows: d.rows[..1].to_vec() };
        assert!(split(&one, 0.5, 3).is_err());
    }

    #[test]
    fn unknown_program() {
        assert!(matches!(builtin("nope"), Err(HarnessError::UnknownProgram(_))));
        assert!(builtin_names().len() >= 21);
    }
}
