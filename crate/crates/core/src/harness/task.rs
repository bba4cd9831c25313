use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::lang::{parse, Constraint, ConstraintFile, NeuralDecl, VarDecl, VarKind};
use crate::mixed::{self, ComponentClass, SolveConfig, SolveResult, Stage, Verdict};
use crate::nnet::{train, Dataset, TrainConfig};
use crate::value::{eval_constraint, Assignment, Value};

use super::{input_columns, materialize_request, process_request, sample, HarnessError, HttpOutcome, HttpParser, TargetProgram, CNT, MSGBUF_LEN};

/// Operator class of a (negated) loop guard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GuardType {
    /// `<=` or `>=`
    T1,
    /// `<` or `>`
    T2,
    /// `==` or `!=`
    T3,
    /// `&&` or `||`
    T4,
}

impl GuardType {
    pub fn name(self) -> &'static str {
        match self {
            GuardType::T1 => "T1",
            GuardType::T2 => "T2",
            GuardType::T3 => "T3",
            GuardType::T4 => "T4",
        }
    }
}

pub fn classify_guard(c: &Constraint) -> GuardType {
    use crate::lang::CmpOp::*;
    match c {
        Constraint::And(..) | Constraint::Or(..) => GuardType::T4,
        Constraint::Cmp(Le | Ge, ..) => GuardType::T1,
        Constraint::Cmp(Lt | Gt, ..) => GuardType::T2,
        Constraint::Cmp(Eq | Ne, ..) | Constraint::Contains(..) => GuardType::T3,
    }
}

#[derive(Debug, Clone)]
pub struct LoopTaskConfig {
    /// Sampled executions; `None` uses the program's default.
    pub runs: Option<usize>,
    pub seed: u64,
    pub train: TrainConfig,
    pub solve: SolveConfig,
    /// Solve attempts (seeds `seed`, `seed + 1`, ...) spent looking for a
    /// witness that survives concrete execution.
    pub max_attempts: usize,
}

impl Default for LoopTaskConfig {
    fn default() -> Self {
        LoopTaskConfig { runs: None, seed: 0, train: TrainConfig::default(), solve: SolveConfig::default(), max_attempts: 5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Validation {
    /// Re-execution reaches a state satisfying the negated guard at `cnt`.
    Concrete,
    /// The witness satisfies the learned model only.
    ModelRelative(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub seed: u64,
    pub verdict: &'static str,
    pub neusolv_trials: usize,
    pub stage: Option<Stage>,
    pub mixed2_trials: usize,
    pub witness: Option<Assignment>,
    pub validation: Option<Validation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopReport {
    pub program: String,
    pub guard_type: GuardType,
    pub negated_guard: String,
    pub rows: usize,
    pub skipped_runs: usize,
    pub accuracy: Option<f64>,
    pub epochs: usize,
    pub attempts: Vec<Attempt>,
    /// NeuSolv trials of the first solve, when it was SAT.
    pub t_ns: Option<usize>,
    /// Solve attempts until a concretely validated witness, if any.
    pub t_ne: Option<usize>,
    /// The validated witness, or the last model-relative one.
    pub witness: Option<Assignment>,
    pub validated: bool,
    pub elapsed: Duration,
}

impl LoopReport {
    pub fn first(&self) -> &Attempt {
        &self.attempts[0]
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "program={}", self.program).unwrap();
        writeln!(s, "guard_type={}", self.guard_type.name()).unwrap();
        writeln!(s, "negated_guard={}", self.negated_guard).unwrap();
        writeln!(s, "rows={}", self.rows).unwrap();
        writeln!(s, "skipped_runs={}", self.skipped_runs).unwrap();
        if let Some(a) = self.accuracy {
            writeln!(s, "accuracy={a:.4}").unwrap();
        }
        writeln!(s, "epochs={}", self.epochs).unwrap();
        for (i, a) in self.attempts.iter().enumerate() {
            writeln!(s, "attempt.{i}.seed={}", a.seed).unwrap();
            writeln!(s, "attempt.{i}.verdict={}", a.verdict).unwrap();
            writeln!(s, "attempt.{i}.neusolv_trials={}", a.neusolv_trials).unwrap();
            if let Some(st) = a.stage {
                writeln!(s, "attempt.{i}.stage={}", st.name()).unwrap();
            }
            if let Some(w) = &a.witness {
                writeln!(s, "attempt.{i}.witness={w}").unwrap();
            }
            match &a.validation {
                Some(Validation::Concrete) => writeln!(s, "attempt.{i}.validation=concrete").unwrap(),
                Some(Validation::ModelRelative(why)) => writeln!(s, "attempt.{i}.validation=model-relative ({why})").unwrap(),
                None => {}
            }
        }
        let opt = |v: Option<usize>| v.map_or("-".to_string(), |v| v.to_string());
        writeln!(s, "t_ns={}", opt(self.t_ns)).unwrap();
        writeln!(s, "t_ne={}", opt(self.t_ne)).unwrap();
        writeln!(s, "validated={}", self.validated).unwrap();
        writeln!(s, "wall_ms={}", self.elapsed.as_millis()).unwrap();
        s
    }
}

/// One row per program: program, guard type, T_NS, T_NE, accuracy, validated.
pub fn bench_table(reports: &[LoopReport]) -> String {
    let w = reports.iter().map(|r| r.program.len()).max().unwrap_or(0).max(7);
    let mut s = format!("{:<w$}  {:<5}  {:>4}  {:>4}  {:>8}  {}\n", "program", "type", "T_NS", "T_NE", "accuracy", "validated");
    for r in reports {
        let opt = |v: Option<usize>| v.map_or("-".to_string(), |v| v.to_string());
        let acc = r.accuracy.map_or("-".to_string(), |a| format!("{a:.3}"));
        let val = if r.validated { "yes" } else if r.witness.is_some() { "model-only" } else { "no" };
        writeln!(s, "{:<w$}  {:<5}  {:>4}  {:>4}  {:>8}  {}", r.program, r.guard_type.name(), opt(r.t_ns), opt(r.t_ne), acc, val)
            .unwrap();
    }
    s
}

fn observed_range(data: &Dataset, name: &str) -> (f64, f64) {
    let i = data.index(name).expect("observed column");
    data.rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[i]), hi.max(r[i])))
}

/// `N ∧ ¬guard` with `N: inputs ∪ {cnt} ↦ observed`. Inputs keep their
/// sampling domains; `cnt` and the observed variables range over what the
/// samples showed.
pub fn loop_task_file(p: &dyn TargetProgram, guard: &Constraint, data: &Dataset, model_path: &str) -> Result<ConstraintFile, HarnessError> {
    let negated = guard.dual().ok_or_else(|| HarnessError::Precondition("guard cannot be negated".into()))?;
    if p.inputs().iter().any(|d| d.kind == VarKind::Str) {
        return Err(HarnessError::Precondition("loop tasks need numeric inputs".into()));
    }
    let mut decls: Vec<VarDecl> = p.inputs().to_vec();
    let (_, max_cnt) = observed_range(data, CNT);
    decls.push(VarDecl::new(CNT, VarKind::Int).with_range(0.0, max_cnt));
    for d in p.observed() {
        let (lo, hi) = observed_range(data, &d.name);
        decls.push(VarDecl::new(d.name.clone(), d.kind).with_range(lo, hi));
    }
    let mut inputs: Vec<String> = p.inputs().iter().map(|d| d.name.clone()).collect();
    inputs.push(CNT.into());
    Ok(ConstraintFile {
        decls,
        symbolic: vec![negated],
        neural: vec![NeuralDecl {
            model: model_path.into(),
            inputs,
            outputs: p.observed().iter().map(|d| d.name.clone()).collect(),
        }],
    })
}

/// Re-run `p` on the witness inputs and check `¬guard` on the state
/// observed at the witness `cnt`.
pub fn validate_witness(p: &dyn TargetProgram, guard: &Constraint, w: &Assignment) -> Validation {
    let inputs = w.restrict(p.inputs().iter().map(|d| &d.name));
    let Some(cnt) = w.num(CNT) else { return Validation::ModelRelative("witness has no cnt".into()) };
    let run = match p.run(&inputs) {
        Ok(r) => r,
        Err(e) => return Validation::ModelRelative(format!("execution failed: {e}")),
    };
    let Some(state) = run.at(cnt as usize) else {
        let last = run.rows.last().map_or(0, |r| r.0);
        return Validation::ModelRelative(format!("execution stops at cnt={last} before cnt={cnt}"));
    };
    let mut full = inputs.clone();
    full.extend(state);
    match eval_constraint(guard, &full) {
        Ok(false) => Validation::Concrete,
        Ok(true) => Validation::ModelRelative(format!("guard still holds at cnt={cnt}: {state}")),
        Err(e) => Validation::ModelRelative(e.to_string()),
    }
}

fn mixed_stage(r: &SolveResult) -> (Option<Stage>, usize) {
    r.diagnostics
        .components
        .iter()
        .find(|c| c.class == ComponentClass::Mixed)
        .map_or((None, 0), |c| (Some(c.stage), c.mixed2_trials))
}

/// Learn the loop's state as a function of inputs and iteration count, solve
/// it conjoined with the negated guard, and validate witnesses concretely.
pub fn run_loop_task(p: &dyn TargetProgram, guard: &Constraint, cfg: &LoopTaskConfig) -> Result<LoopReport, HarnessError> {
    let start = Instant::now();
    let runs = cfg.runs.unwrap_or_else(|| p.default_runs());
    let (data, stats) = sample(p, runs, cfg.seed)?;
    let mut ins: Vec<String> = input_columns(p).into_iter().map(|c| c.name).collect();
    ins.push(CNT.into());
    let outs: Vec<String> = p.observed().iter().map(|d| d.name.clone()).collect();
    let (model, tr) = train(&data, &ins, &outs, &TrainConfig { seed: cfg.seed, ..cfg.train.clone() })?;
    let models = [Arc::new(model)];
    let cf = loop_task_file(p, guard, &data, &format!("{}.nsxmodel", p.name()))?;

    let mut attempts = Vec::new();
    let mut t_ne = None;
    let mut witness = None;
    for t in 0..cfg.max_attempts.max(1) {
        let seed = cfg.seed.wrapping_add(t as u64);
        let mut scfg = cfg.solve.clone();
        scfg.search.seed = seed;
        let r = mixed::solve(&cf, &models, &scfg)?;
        let (stage, mixed2_trials) = mixed_stage(&r);
        let mut a = Attempt {
            seed,
            verdict: r.verdict.name(),
            neusolv_trials: r.neusolv_trials(),
            stage,
            mixed2_trials,
            witness: None,
            validation: None,
        };
        if let Verdict::Sat(w) = &r.verdict {
            let v = validate_witness(p, guard, w);
            a.witness = Some(w.clone());
            witness = Some(w.clone());
            let ok = v == Validation::Concrete;
            a.validation = Some(v);
            attempts.push(a);
            if ok {
                t_ne = Some(t + 1);
                break;
            }
        } else {
            attempts.push(a);
        }
    }
    let t_ns = (attempts[0].verdict == "SAT").then_some(attempts[0].neusolv_trials);
    Ok(LoopReport {
        program: p.name().into(),
        guard_type: classify_guard(&guard.dual().expect("checked above")),
        negated_guard: guard.dual().expect("checked above").to_string(),
        rows: stats.rows,
        skipped_runs: stats.skipped,
        accuracy: tr.accuracy,
        epochs: tr.epochs_run,
        attempts,
        t_ns,
        t_ne,
        witness,
        validated: t_ne.is_some(),
        elapsed: start.elapsed(),
    })
}

#[derive(Debug, Clone)]
pub struct ExploitConfig {
    pub samples: usize,
    pub seed: u64,
    pub train: TrainConfig,
    pub solve: SolveConfig,
}

impl Default for ExploitConfig {
    fn default() -> Self {
        ExploitConfig { samples: 2000, seed: 0, train: TrainConfig::default(), solve: SolveConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExploitReport {
    pub samples: usize,
    pub rows: usize,
    pub rejected: usize,
    pub accuracy: Option<f64>,
    pub verdict: &'static str,
    pub neusolv_trials: usize,
    pub witness: Option<Assignment>,
    pub request: Option<String>,
    pub outcome: Option<Result<HttpOutcome, String>>,
    pub elapsed: Duration,
}

impl ExploitReport {
    pub fn overflow(&self) -> bool {
        matches!(self.outcome, Some(Ok(HttpOutcome { overflow: true, .. })))
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "samples={}", self.samples).unwrap();
        writeln!(s, "rows={}", self.rows).unwrap();
        writeln!(s, "rejected={}", self.rejected).unwrap();
        if let Some(a) = self.accuracy {
            writeln!(s, "accuracy={a:.4}").unwrap();
        }
        writeln!(s, "verdict={}", self.verdict).unwrap();
        writeln!(s, "neusolv_trials={}", self.neusolv_trials).unwrap();
        if let Some(w) = &self.witness {
            writeln!(s, "witness={w}").unwrap();
        }
        if let Some(r) = &self.request {
            writeln!(s, "request={r:?}").unwrap();
        }
        match &self.outcome {
            Some(Ok(o)) => writeln!(s, "ptr={}\noverflow={}", o.ptr, o.overflow).unwrap(),
            Some(Err(e)) => writeln!(s, "rejected_by_program={e}").unwrap(),
            None => {}
        }
        writeln!(s, "wall_ms={}", self.elapsed.as_millis()).unwrap();
        s
    }
}

/// The field-length equations, the overflow condition `ptr > 99` and the
/// learned `N: {uri_length, ver_length} ↦ {ptr}`.
pub fn exploit_task_file(max_field_len: usize, model_path: &str) -> ConstraintFile {
    let m = max_field_len;
    let text = format!(
        "str input_uri maxlen {m};\n\
         str input_version maxlen {m};\n\
         int uri_length in 0..{m};\n\
         int ver_length in 8..{m};\n\
         int ptr;\n\
         assert uri_length == strlen(input_uri);\n\
         assert ver_length == strlen(input_version);\n\
         assert ptr > {};\n\
         neural \"{model_path}\" (uri_length, ver_length) -> (ptr);\n",
        MSGBUF_LEN - 1
    );
    parse(&text).expect("exploit task text")
}

/// Request built from a solved exploit task.
pub fn request_from_witness(w: &Assignment) -> Option<String> {
    let field = |n: &str| w.get(n).and_then(Value::as_str);
    Some(materialize_request(field("input_uri")?, field("input_version")?))
}

/// Learn `ptr` from field lengths, solve for an overflowing request, then
/// build it and run the parser on it.
pub fn run_exploit_task(p: &HttpParser, cfg: &ExploitConfig) -> Result<ExploitReport, HarnessError> {
    let start = Instant::now();
    let (data, stats) = sample(p, cfg.samples, cfg.seed)?;
    let ins = vec!["uri_length".to_string(), "ver_length".to_string()];
    let (model, tr) = train(&data, &ins, &["ptr".to_string()], &TrainConfig { seed: cfg.seed, ..cfg.train.clone() })?;
    let max_len = p.inputs().iter().filter_map(|d| match d.domain {
        Some(crate::lang::Domain::MaxLen(n)) => Some(n),
        _ => None,
    }).max().unwrap_or(128);
    let cf = exploit_task_file(max_len, "http.nsxmodel");
    let mut scfg = cfg.solve.clone();
    scfg.search.seed = cfg.seed;
    let r = mixed::solve(&cf, &[Arc::new(model)], &scfg)?;
    let witness = match &r.verdict {
        Verdict::Sat(w) => Some(w.clone()),
        _ => None,
    };
    let request = witness.as_ref().and_then(request_from_witness);
    let outcome = request.as_deref().map(process_request);
    Ok(ExploitReport {
        samples: cfg.samples,
        rows: stats.rows,
        rejected: stats.skipped,
        accuracy: tr.accuracy,
        verdict: r.verdict.name(),
        neusolv_trials: r.neusolv_trials(),
        witness,
        request,
        outcome,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{builtin, loop_suite};
    use crate::lang::parse_constraint;

    #[test]
    fn suite_covers_all_guard_types() {
        let suite = loop_suite();
        assert!(suite.len() >= 20);
        let types: std::collections::BTreeSet<_> = suite.iter().map(|p| classify_guard(&p.guard.dual().unwrap())).collect();
        assert_eq!(types.len(), 4);
    }

    #[test]
    fn validation_uses_concrete_state() {
        let p = builtin("fig8").unwrap();
        let g = parse_constraint("c > d").unwrap();
        let w = |a: i64, b: i64, cnt: i64| -> Assignment {
            [("a", a), ("b", b), ("cnt", cnt), ("c", 0), ("d", 0)].iter().map(|(k, v)| (k.to_string(), Value::Int(*v))).collect()
        };
        assert_eq!(validate_witness(p.as_ref(), &g, &w(2, 5, 0)), Validation::Concrete);
        // the loop never runs at (2, 5), so cnt = 1 is never observed
        assert!(matches!(validate_witness(p.as_ref(), &g, &w(2, 5, 1)), Validation::ModelRelative(_)));
        assert!(matches!(validate_witness(p.as_ref(), &g, &w(5, 2, 1)), Validation::ModelRelative(_)));
    }

    #[test]
    fn exploit_file_shape() {
        let cf = exploit_task_file(128, "m");
        assert_eq!(cf.symbolic.len(), 3);
        assert_eq!(cf.neural[0].inputs, ["uri_length", "ver_length"]);
        let w: Assignment = [
            ("input_uri".to_string(), Value::Str("a".repeat(50))),
            ("input_version".to_string(), Value::Str("a".repeat(50))),
        ]
        .into_iter()
        .collect();
        let req = request_from_witness(&w).unwrap();
        assert!(process_request(&req).unwrap().overflow);
    }
}
