//! Solving conjunctions of symbolic and neural constraints.
//!
//! The constraint–variable graph is split into connected components. Purely
//! symbolic components are decided first (any UNSAT ends the solve), purely
//! neural components are satisfied by running their networks, and mixed
//! components go through two stages: conflict-driven alternation between the
//! symbolic solver and gradient search (stage I), then gradient search over a
//! joint loss with the networks composed inside it (stage II).

mod graph;

pub use graph::{build_graph, Component, ComponentClass, ConstraintGraph};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::lang::{CmpOp, Constraint, ConstraintFile, Domain, Expr, VarDecl, VarKind};
use crate::loss::{Composed, LossConfig, LossFunction};
use crate::neusolv::{initial_state, search_multi, SearchConfig, SearchOutcome};
use crate::nnet::{output_matches, MlpModel, NnetError};
use crate::symsolv::{check_sat, ConflictClause, SmtAnswer, SmtBridge, SymConfig, SymError, SymSolver, SymVerdict};
use crate::value::{Assignment, Value};

#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Gradient-search restarts per stage-I iteration.
    pub max_trial1: usize,
    /// Stage-I iterations (symbolic picks) per mixed component.
    pub max_trial2: usize,
    /// Stage-II restarts per mixed component.
    pub mixed2_trials: usize,
    pub search: SearchConfig,
    pub loss: LossConfig,
    pub sym: SymConfig,
    /// Report exhausted searches as UNSAT instead of UNKNOWN.
    pub compat_unsat: bool,
    /// External SMT solver for symbolic queries (falls back to the built-in one
    /// on constructs it cannot express).
    pub smt: Option<Arc<SmtBridge>>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_trial1: 10,
            max_trial2: 100,
            mixed2_trials: 10,
            search: SearchConfig::default(),
            loss: LossConfig::default(),
            sym: SymConfig::default(),
            compat_unsat: false,
            smt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Sat(Assignment),
    Unsat,
    Unknown,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Sat(_) => "SAT",
            Verdict::Unsat => "UNSAT",
            Verdict::Unknown => "UNKNOWN",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Symbolic,
    Forward,
    MixedI,
    MixedII,
    /// Proved unsatisfiable.
    Refuted,
    /// Budgets exhausted.
    Exhausted,
    /// Not attempted (an earlier component decided the result).
    Skipped,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Symbolic => "symbolic",
            Stage::Forward => "forward",
            Stage::MixedI => "mixed-1",
            Stage::MixedII => "mixed-2",
            Stage::Refuted => "refuted",
            Stage::Exhausted => "exhausted",
            Stage::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentReport {
    pub class: ComponentClass,
    pub vars: Vec<String>,
    pub stage: Stage,
    pub mixed1_iterations: usize,
    /// Gradient-search trials spent in stage I.
    pub mixed1_trials: usize,
    /// Gradient-search trials spent in stage II.
    pub mixed2_trials: usize,
    pub enumerations: usize,
    pub best_loss: Option<f64>,
    pub notes: Vec<String>,
}

impl ComponentReport {
    fn new(c: &Component) -> Self {
        ComponentReport {
            class: c.class,
            vars: c.vars.iter().cloned().collect(),
            stage: Stage::Skipped,
            mixed1_iterations: 0,
            mixed1_trials: 0,
            mixed2_trials: 0,
            enumerations: 0,
            best_loss: None,
            notes: Vec::new(),
        }
    }

    pub fn neusolv_trials(&self) -> usize {
        self.mixed1_trials + self.mixed2_trials
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub components: Vec<ComponentReport>,
    pub model_evals: u64,
    /// Symbolic picks rejected in stage I, in order.
    pub conflicts: Vec<Assignment>,
    /// True when an UNKNOWN was reported as UNSAT.
    pub collapsed_unknown: bool,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub verdict: Verdict,
    pub diagnostics: Diagnostics,
}

impl SolveResult {
    /// Gradient-search trials over all components.
    pub fn neusolv_trials(&self) -> usize {
        self.diagnostics.components.iter().map(ComponentReport::neusolv_trials).sum()
    }

    /// `SAT name=value ...`, `UNSAT` or `UNKNOWN`.
    pub fn summary_line(&self) -> String {
        match &self.verdict {
            Verdict::Sat(a) if a.is_empty() => "SAT".into(),
            Verdict::Sat(a) => format!("SAT {a}"),
            v => v.name().into(),
        }
    }

    /// Line-oriented `key=value` record. Wall time is the only
    /// non-deterministic field.
    pub fn report(&self) -> String {
        let d = &self.diagnostics;
        let mut s = format!("verdict={}\n", self.verdict.name());
        if let Verdict::Sat(a) = &self.verdict {
            for (k, v) in a.iter() {
                writeln!(s, "value.{k}={v}").unwrap();
            }
        }
        writeln!(s, "components={}", d.components.len()).unwrap();
        for (i, c) in d.components.iter().enumerate() {
            writeln!(s, "component.{i}.class={}", c.class.name()).unwrap();
            writeln!(s, "component.{i}.vars={}", c.vars.join(",")).unwrap();
            writeln!(s, "component.{i}.stage={}", c.stage.name()).unwrap();
            writeln!(s, "component.{i}.mixed1_iterations={}", c.mixed1_iterations).unwrap();
            writeln!(s, "component.{i}.mixed1_trials={}", c.mixed1_trials).unwrap();
            writeln!(s, "component.{i}.mixed2_trials={}", c.mixed2_trials).unwrap();
            writeln!(s, "component.{i}.enumerations={}", c.enumerations).unwrap();
            if let Some(l) = c.best_loss {
                writeln!(s, "component.{i}.best_loss={l}").unwrap();
            }
            for n in &c.notes {
                writeln!(s, "component.{i}.note={n}").unwrap();
            }
        }
        writeln!(s, "neusolv_trials={}", self.neusolv_trials()).unwrap();
        writeln!(s, "conflicts={}", d.conflicts.len()).unwrap();
        writeln!(s, "model_evals={}", d.model_evals).unwrap();
        if d.collapsed_unknown {
            writeln!(s, "collapsed_unknown=true").unwrap();
        }
        writeln!(s, "wall_ms={}", d.elapsed.as_millis()).unwrap();
        s
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("{expected} neural constraints but {got} models")]
    ModelCount { expected: usize, got: usize },
    #[error("model for neural constraint {index} (`{path}`) has {model_in}->{model_out} ports, declaration has {decl_in}->{decl_out}")]
    ModelArity { index: usize, path: String, model_in: usize, model_out: usize, decl_in: usize, decl_out: usize },
    #[error("loading `{path}`: {source}")]
    Load { path: String, source: NnetError },
    #[error("symbolic solver: {0}")]
    Sym(#[from] SymError),
}

/// Load each `neural` model, resolving relative paths against `base`.
pub fn load_models(cf: &ConstraintFile, base: &Path) -> Result<Vec<Arc<MlpModel>>, SolveError> {
    cf.neural
        .iter()
        .map(|n| {
            let p = Path::new(&n.model);
            let p = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
            MlpModel::load(&p).map(Arc::new).map_err(|source| SolveError::Load { path: n.model.clone(), source })
        })
        .collect()
}

/// Inputs, models and configuration shared by the stages.
pub struct Problem<'a> {
    pub cf: &'a ConstraintFile,
    pub models: &'a [Arc<MlpModel>],
    pub cfg: &'a SolveConfig,
    evals: Arc<AtomicU64>,
}

/// Outcome of one component.
#[derive(Debug, Clone, PartialEq)]
pub enum Partial {
    Sat(Assignment),
    Unsat,
    Unknown,
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl<'a> Problem<'a> {
    pub fn new(cf: &'a ConstraintFile, models: &'a [Arc<MlpModel>], cfg: &'a SolveConfig) -> Result<Self, SolveError> {
        if models.len() != cf.neural.len() {
            return Err(SolveError::ModelCount { expected: cf.neural.len(), got: models.len() });
        }
        for (index, (n, m)) in cf.neural.iter().zip(models).enumerate() {
            if m.n_inputs() != n.inputs.len() || m.n_outputs() != n.outputs.len() {
                return Err(SolveError::ModelArity {
                    index,
                    path: n.model.clone(),
                    model_in: m.n_inputs(),
                    model_out: m.n_outputs(),
                    decl_in: n.inputs.len(),
                    decl_out: n.outputs.len(),
                });
            }
        }
        Ok(Problem { cf, models, cfg, evals: Arc::new(AtomicU64::new(0)) })
    }

    /// Network forward passes so far.
    pub fn model_evals(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    fn decls_for(&self, vars: &BTreeSet<String>) -> Vec<VarDecl> {
        self.cf.decls.iter().filter(|d| vars.contains(&d.name)).cloned().collect()
    }

    fn symbolic_of(&self, comp: &Component) -> Vec<Constraint> {
        comp.symbolic.iter().map(|&i| self.cf.symbolic[i].clone()).collect()
    }

    fn nets_of(&self, comp: &Component) -> Vec<(Arc<MlpModel>, Vec<String>, Vec<String>)> {
        comp.neural
            .iter()
            .map(|&i| (self.models[i].clone(), self.cf.neural[i].inputs.clone(), self.cf.neural[i].outputs.clone()))
            .collect()
    }

    fn sym_solve(&self, cs: &[Constraint], conflicts: &[ConflictClause], decls: &[VarDecl]) -> Result<SymVerdict, SymError> {
        if let Some(smt) = &self.cfg.smt {
            let mut all = cs.to_vec();
            if conflicts.iter().any(|c| c.disjuncts.is_empty()) {
                return Ok(SymVerdict::Unsat { complete: true });
            }
            all.extend(conflicts.iter().filter_map(ConflictClause::to_constraint));
            match smt.query(&all, decls) {
                Ok(SmtAnswer::Sat(a)) => return Ok(SymVerdict::Sat(a)),
                Ok(SmtAnswer::Unsat) => return Ok(SymVerdict::Unsat { complete: true }),
                Ok(SmtAnswer::Unknown) | Err(SymError::Unsupported(_)) => {}
                Err(e) => return Err(e),
            }
        }
        SymSolver::new(self.cfg.sym.clone()).solve(cs, conflicts, decls).map(|(v, _)| v)
    }

    /// Search domain and integrality for a numeric (or string-length) variable.
    fn search_space(&self, vars: &[String], seed: u64) -> SearchConfig {
        let mut sc = self.cfg.search.clone();
        sc.seed = seed;
        let bound = self.cfg.sym.default_bound;
        for v in vars {
            if let Some(s) = v.strip_prefix("strlen(").and_then(|r| r.strip_suffix(')')) {
                let max = match self.cf.decl(s).and_then(|d| d.domain) {
                    Some(Domain::MaxLen(n)) => n,
                    _ => self.cfg.sym.default_max_len,
                };
                sc.domains.insert(v.clone(), (0.0, max as f64));
                sc.integer_vars.insert(v.clone());
                continue;
            }
            let Some(d) = self.cf.decl(v) else { continue };
            let dom = match d.domain {
                Some(Domain::Range { lo, hi }) => (lo, hi),
                _ => (-bound, bound),
            };
            sc.domains.insert(v.clone(), dom);
            if d.kind == VarKind::Int {
                sc.integer_vars.insert(v.clone());
            }
        }
        sc
    }

    fn kind(&self, v: &str) -> VarKind {
        self.cf.kind_of(v).unwrap_or(VarKind::Real)
    }

    /// Typed assignment from realized values; length variables become strings.
    fn typed(&self, names: &[String], values: &[f64]) -> Assignment {
        let mut a = Assignment::new();
        for (n, &v) in names.iter().zip(values) {
            if let Some(s) = n.strip_prefix("strlen(").and_then(|r| r.strip_suffix(')')) {
                a.insert(s, Value::Str("a".repeat(v.round().max(0.0) as usize)));
            } else {
                a.insert(n.clone(), Value::numeric(self.kind(n), v));
            }
        }
        a
    }

    fn within_domains(&self, a: &Assignment) -> bool {
        a.iter().all(|(n, v)| in_domain(self.cf.decl(n), v))
    }

    fn solve_pure_symbolic(&self, comp: &Component, rep: &mut ComponentReport) -> Result<Partial, SolveError> {
        let cs = self.symbolic_of(comp);
        match self.sym_solve(&cs, &[], &self.decls_for(&comp.vars)) {
            Ok(SymVerdict::Sat(a)) => {
                rep.stage = Stage::Symbolic;
                Ok(Partial::Sat(a))
            }
            Ok(SymVerdict::Unsat { complete: true }) => {
                rep.stage = Stage::Refuted;
                Ok(Partial::Unsat)
            }
            Ok(SymVerdict::Unsat { complete: false }) => {
                rep.stage = Stage::Exhausted;
                rep.notes.push("no witness found but the refutation is incomplete".into());
                Ok(Partial::Unknown)
            }
            Err(e @ SymError::Budget { .. }) => {
                rep.stage = Stage::Exhausted;
                rep.notes.push(e.to_string());
                Ok(Partial::Unknown)
            }
            Err(e) => Err(e.into()),
        }
    }

    fn solve_pure_neural(&self, index: usize, comp: &Component, rep: &mut ComponentReport) -> Partial {
        let nets = self.nets_of(comp);
        let Ok(lf) = Composed::new(&[], &nets, &Assignment::new(), self.cfg.loss) else {
            rep.stage = Stage::Exhausted;
            rep.notes.push("networks form a cycle".into());
            return Partial::Unknown;
        };
        let lf = lf.with_counter(self.evals.clone());
        let sc = self.search_space(lf.vars(), mix(self.cfg.search.seed, index as u64, 0x4e));
        let x0 = initial_state(lf.vars(), &sc, 0);
        let x: Vec<f64> = lf.vars().iter().map(|v| x0.num(v).unwrap()).collect();
        let a = self.typed(lf.all_vars(), &lf.realize(&x));
        if !self.within_domains(&a) {
            rep.stage = Stage::Exhausted;
            rep.notes.push("network output outside its declared domain".into());
            return Partial::Unknown;
        }
        rep.stage = Stage::Forward;
        Partial::Sat(a)
    }

    /// Stage I: alternate symbolic picks with gradient search over the
    /// networks' remaining inputs; each rejected pick becomes a conflict clause.
    pub fn mixed_solve_i(
        &self,
        index: usize,
        comp: &Component,
        db: &mut Vec<Assignment>,
        rep: &mut ComponentReport,
    ) -> Result<Partial, SolveError> {
        let cs = self.symbolic_of(comp);
        let sym_vars: BTreeSet<String> = cs.iter().flat_map(|c| c.free_vars()).collect();
        let decls = self.decls_for(&sym_vars);
        let nets = self.nets_of(comp);
        for it in 0..self.cfg.max_trial2 {
            let conflicts: Vec<ConflictClause> = db.iter().map(ConflictClause::excluding).collect();
            let pick = match self.sym_solve(&cs, &conflicts, &decls) {
                Ok(SymVerdict::Sat(a)) => a,
                Ok(SymVerdict::Unsat { complete }) => {
                    if db.is_empty() && complete {
                        return Ok(Partial::Unsat);
                    }
                    rep.notes.push(format!("stage I ran out of symbolic picks after {it} iterations"));
                    return Ok(Partial::Unknown);
                }
                Err(e @ SymError::Budget { .. }) => {
                    rep.notes.push(e.to_string());
                    return Ok(Partial::Unknown);
                }
                Err(e) => return Err(e.into()),
            };
            assert!(!db.contains(&pick), "symbolic solver re-proposed a rejected assignment");
            rep.mixed1_iterations = it + 1;

            let required: Vec<(String, f64)> = nets
                .iter()
                .flat_map(|n| n.2.iter())
                .filter_map(|o| pick.num(o).map(|v| (o.clone(), v)))
                .collect();
            let bands: Vec<Constraint> = required
                .iter()
                .flat_map(|(o, v)| {
                    let w = match self.kind(o) {
                        VarKind::Int => 0.45,
                        _ => 0.9e-2 * v.abs().max(1.0),
                    };
                    [
                        Constraint::cmp(CmpOp::Ge, Expr::var(o.clone()), Expr::Num(v - w)),
                        Constraint::cmp(CmpOp::Le, Expr::var(o.clone()), Expr::Num(v + w)),
                    ]
                })
                .collect();
            let lf = match Composed::new(&bands, &nets, &pick, self.cfg.loss) {
                Ok(lf) => lf.with_counter(self.evals.clone()),
                Err(e) => {
                    rep.notes.push(format!("stage I: {e}"));
                    return Ok(Partial::Unknown);
                }
            };
            let names = lf.all_vars().to_vec();
            let outputs_match = |full: &[f64]| {
                required.iter().all(|(o, v)| {
                    let i = names.iter().position(|n| n == o).unwrap();
                    output_matches(self.kind(o), full[i], *v)
                })
            };
            let accept = |a: &Assignment| {
                let x: Vec<f64> = lf.vars().iter().map(|v| a.num(v).unwrap()).collect();
                let full = lf.realize(&x);
                outputs_match(&full) && self.within_domains(&self.typed(&names, &full))
            };
            let found = if lf.vars().is_empty() {
                accept(&Assignment::new()).then(Assignment::new)
            } else {
                let sc = self.search_space(lf.vars(), mix(self.cfg.search.seed, index as u64, it as u64 + 1));
                let m = search_multi(&lf, &accept, &sc, self.cfg.max_trial1);
                rep.mixed1_trials += m.trials_used;
                rep.enumerations += m.enumerations;
                if let SearchOutcome::Exhausted { best_loss, .. } = &m.outcome {
                    rep.best_loss = Some(rep.best_loss.map_or(*best_loss, |b: f64| b.min(*best_loss)));
                }
                match m.outcome {
                    SearchOutcome::Found { assignment, .. } => Some(assignment),
                    _ => None,
                }
            };
            if let Some(free) = found {
                let x: Vec<f64> = lf.vars().iter().map(|v| free.num(v).unwrap()).collect();
                let full = lf.realize(&x);
                let mut a = pick.clone();
                for (n, v) in self.typed(&names, &full).iter() {
                    if !a.contains(n) {
                        a.insert(n.clone(), v.clone());
                    }
                }
                rep.stage = Stage::MixedI;
                return Ok(Partial::Sat(a));
            }
            db.push(pick);
        }
        Ok(Partial::Unknown)
    }

    /// Stage II: minimize the encoded symbolic constraints with every network
    /// output computed from its inputs, accepting on a concrete check.
    pub fn mixed_solve_ii(&self, index: usize, comp: &Component, rep: &mut ComponentReport) -> Partial {
        let cs = self.symbolic_of(comp);
        let nets = self.nets_of(comp);
        let lf = match Composed::new(&cs, &nets, &Assignment::new(), self.cfg.loss) {
            Ok(lf) => lf.with_counter(self.evals.clone()),
            Err(e) => {
                rep.notes.push(format!("stage II unavailable: {e}"));
                return Partial::Unknown;
            }
        };
        let names = lf.all_vars().to_vec();
        let realize = |a: &Assignment| {
            let x: Vec<f64> = lf.vars().iter().map(|v| a.num(v).unwrap()).collect();
            self.typed(&names, &lf.realize(&x))
        };
        let accept = |a: &Assignment| {
            let full = realize(a);
            self.within_domains(&full) && check_sat(&full, &cs).unwrap_or(false)
        };
        let sc = self.search_space(lf.vars(), mix(self.cfg.search.seed, index as u64, 0x2_0000_0000));
        let m = search_multi(&lf, &accept, &sc, self.cfg.mixed2_trials);
        rep.mixed2_trials = m.trials_used;
        rep.enumerations += m.enumerations;
        match m.outcome {
            SearchOutcome::Found { assignment, .. } => {
                rep.stage = Stage::MixedII;
                Partial::Sat(realize(&assignment))
            }
            SearchOutcome::Exhausted { best_loss, .. } => {
                rep.best_loss = Some(rep.best_loss.map_or(best_loss, |b| b.min(best_loss)));
                Partial::Unknown
            }
        }
    }
}

fn in_domain(d: Option<&VarDecl>, v: &Value) -> bool {
    let Some(d) = d else { return true };
    match (d.domain, v) {
        (Some(Domain::Range { lo, hi }), v) => v.as_f64().is_some_and(|x| lo <= x && x <= hi),
        (Some(Domain::MaxLen(n)), Value::Str(s)) => s.chars().count() <= n,
        _ => true,
    }
}

fn default_value(d: &VarDecl) -> Value {
    match (d.kind, d.domain) {
        (VarKind::Str, _) => Value::Str(String::new()),
        (k, Some(Domain::Range { lo, hi })) => Value::numeric(k, 0f64.clamp(lo, hi)),
        (k, _) => Value::numeric(k, 0.0),
    }
}

/// Re-check a full assignment: kinds, domains, every symbolic constraint
/// exactly and every network output within tolerance.
pub fn verify(cf: &ConstraintFile, models: &[Arc<MlpModel>], a: &Assignment) -> Result<(), String> {
    for d in &cf.decls {
        let v = a.get(&d.name).ok_or_else(|| format!("`{}` is unbound", d.name))?;
        if v.kind() != d.kind {
            return Err(format!("`{}` bound to a {} value", d.name, v.kind().keyword()));
        }
        if !in_domain(Some(d), v) {
            return Err(format!("`{}` = {v} is outside its domain", d.name));
        }
    }
    match check_sat(a, &cf.symbolic) {
        Ok(true) => {}
        Ok(false) => return Err("a symbolic constraint is violated".into()),
        Err(e) => return Err(e.to_string()),
    }
    for (n, m) in cf.neural.iter().zip(models) {
        let x: Vec<f64> = n.inputs.iter().map(|v| a.num(v).ok_or_else(|| format!("`{v}` is not numeric"))).collect::<Result<_, _>>()?;
        let y = m.forward(&x);
        for (o, p) in n.outputs.iter().zip(y) {
            let actual = a.num(o).ok_or_else(|| format!("`{o}` is not numeric"))?;
            if !output_matches(cf.kind_of(o).unwrap_or(VarKind::Real), p, actual) {
                return Err(format!("network `{}` gives {o} = {p}, assignment has {actual}", n.model));
            }
        }
    }
    Ok(())
}

/// Solve `cf` with `models[i]` implementing `cf.neural[i]`.
pub fn solve(cf: &ConstraintFile, models: &[Arc<MlpModel>], cfg: &SolveConfig) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let p = Problem::new(cf, models, cfg)?;
    let g = build_graph(cf);
    let mut reps: Vec<ComponentReport> = g.components.iter().map(ComponentReport::new).collect();
    let mut diag = Diagnostics::default();
    let mut parts: BTreeMap<usize, Assignment> = BTreeMap::new();
    let mut unknown = false;

    let finish = |verdict: Verdict, mut diag: Diagnostics, reps: Vec<ComponentReport>| {
        let verdict = match verdict {
            Verdict::Unknown if cfg.compat_unsat => {
                diag.collapsed_unknown = true;
                Verdict::Unsat
            }
            v => v,
        };
        diag.components = reps;
        diag.model_evals = p.model_evals();
        diag.elapsed = start.elapsed();
        Ok(SolveResult { verdict, diagnostics: diag })
    };

    for (i, comp) in g.of_class(ComponentClass::PureSymbolic) {
        match p.solve_pure_symbolic(comp, &mut reps[i])? {
            Partial::Sat(a) => {
                parts.insert(i, a);
            }
            Partial::Unsat => return finish(Verdict::Unsat, diag, reps),
            Partial::Unknown => unknown = true,
        }
    }
    for (i, comp) in g.of_class(ComponentClass::PureNeural) {
        match p.solve_pure_neural(i, comp, &mut reps[i]) {
            Partial::Sat(a) => {
                parts.insert(i, a);
            }
            _ => unknown = true,
        }
    }
    for (i, comp) in g.of_class(ComponentClass::Mixed) {
        let mut db = Vec::new();
        let r = p.mixed_solve_i(i, comp, &mut db, &mut reps[i])?;
        diag.conflicts.extend(db);
        let r = match r {
            Partial::Unknown => p.mixed_solve_ii(i, comp, &mut reps[i]),
            r => r,
        };
        match r {
            Partial::Sat(a) => {
                parts.insert(i, a);
            }
            Partial::Unsat => {
                reps[i].stage = Stage::Refuted;
                return finish(Verdict::Unsat, diag, reps);
            }
            Partial::Unknown => {
                reps[i].stage = Stage::Exhausted;
                unknown = true;
            }
        }
    }
    if unknown {
        return finish(Verdict::Unknown, diag, reps);
    }

    let mut a = Assignment::new();
    for part in parts.values() {
        a.extend(part);
    }
    let a: Assignment = cf
        .decls
        .iter()
        .map(|d| (d.name.clone(), a.get(&d.name).cloned().unwrap_or_else(|| default_value(d))))
        .collect();
    if let Err(e) = verify(cf, models, &a) {
        for r in reps.iter_mut().filter(|r| r.class != ComponentClass::PureSymbolic) {
            r.notes.push(format!("final verification failed: {e}"));
        }
        return finish(Verdict::Unknown, diag, reps);
    }
    finish(Verdict::Sat(a), diag, reps)
}
