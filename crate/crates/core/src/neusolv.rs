//! Gradient search over loss functions.
//!
//! Each enumeration moves only the coordinate with the largest absolute
//! derivative: integers by one unit against the derivative's sign, reals by
//! `learning_rate * derivative`. Coordinates are clamped into their domains and
//! every visited state is cached; a revisit ends the trial.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::loss::LossFunction;
use crate::value::{Assignment, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub max_enumerations: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Closed domain per variable; missing variables use `default_domain`.
    pub domains: BTreeMap<String, (f64, f64)>,
    pub integer_vars: BTreeSet<String>,
    pub default_domain: (f64, f64),
    /// Initial states are drawn from each domain intersected with `[-r, r]`.
    pub init_radius: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_enumerations: 10_000,
            learning_rate: 0.1,
            seed: 0,
            domains: BTreeMap::new(),
            integer_vars: BTreeSet::new(),
            default_domain: (-1e6, 1e6),
            init_radius: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    Budget,
    /// The update left the state unchanged (zero gradient or blocked by a bound).
    FixedPoint,
    /// The update reached a state visited earlier in this trial.
    Revisit,
    /// Loss was not finite at the current state.
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SearchOutcome {
    Found { assignment: Assignment, enumerations: usize, trial: usize },
    Exhausted { best: Assignment, best_loss: f64, enumerations: usize, reason: StopReason },
}

impl SearchOutcome {
    pub fn is_found(&self) -> bool {
        matches!(self, SearchOutcome::Found { .. })
    }

    pub fn assignment(&self) -> &Assignment {
        match self {
            SearchOutcome::Found { assignment, .. } => assignment,
            SearchOutcome::Exhausted { best, .. } => best,
        }
    }

    pub fn enumerations(&self) -> usize {
        match self {
            SearchOutcome::Found { enumerations, .. } | SearchOutcome::Exhausted { enumerations, .. } => *enumerations,
        }
    }
}

/// Result of [`search_multi`]: the selected outcome and how many trials ran
/// up to and including it.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiOutcome {
    pub outcome: SearchOutcome,
    pub trials_used: usize,
    pub enumerations: usize,
}

struct Space {
    lo: Vec<f64>,
    hi: Vec<f64>,
    int: Vec<bool>,
}

impl Space {
    fn of(vars: &[String], cfg: &SearchConfig) -> Space {
        let mut s = Space { lo: Vec::new(), hi: Vec::new(), int: Vec::new() };
        for v in vars {
            let int = cfg.integer_vars.contains(v);
            let (mut lo, mut hi) = cfg.domains.get(v).copied().unwrap_or(cfg.default_domain);
            if int {
                lo = lo.ceil();
                hi = hi.floor();
            }
            s.lo.push(lo);
            s.hi.push(hi);
            s.int.push(int);
        }
        s
    }

    fn assignment(&self, vars: &[String], x: &[f64]) -> Assignment {
        vars.iter()
            .zip(x)
            .zip(&self.int)
            .map(|((n, &v), &int)| (n.clone(), if int { Value::Int(v as i64) } else { Value::Real(v) }))
            .collect()
    }
}

fn key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

/// Gradient search from `x0` until `accept` holds, the budget runs out, or
/// the state stops changing.
pub fn search(
    lf: &dyn LossFunction,
    accept: &(dyn Fn(&Assignment) -> bool + Sync),
    cfg: &SearchConfig,
    x0: &Assignment,
) -> SearchOutcome {
    let vars = lf.vars();
    let sp = Space::of(vars, cfg);
    let mut x: Vec<f64> = vars
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let raw = x0.num(v).unwrap_or(0.0);
            let raw = if sp.int[i] { raw.round() } else { raw };
            raw.clamp(sp.lo[i], sp.hi[i])
        })
        .collect();
    let mut seen = HashSet::new();
    seen.insert(key(&x));
    let mut best = (f64::INFINITY, x.clone());

    let exhausted = |best: (f64, Vec<f64>), n: usize, reason| SearchOutcome::Exhausted {
        best: sp.assignment(vars, &best.1),
        best_loss: best.0,
        enumerations: n,
        reason,
    };

    for n in 1..=cfg.max_enumerations.max(1) {
        let (l, g) = lf.grad(&x);
        if !l.is_finite() {
            if best.0 == f64::INFINITY {
                best.1 = x.clone();
            }
            return exhausted(best, n - 1, StopReason::NonFinite);
        }
        if l < best.0 {
            best = (l, x.clone());
        }
        // steepest admissible coordinate; moves into a bound count as zero
        let mut pick: Option<(usize, f64)> = None;
        for (i, &gi) in g.iter().enumerate() {
            let blocked = (gi > 0.0 && x[i] <= sp.lo[i]) || (gi < 0.0 && x[i] >= sp.hi[i]);
            if blocked || !gi.is_finite() || gi == 0.0 {
                continue;
            }
            if pick.is_none_or(|(_, b)| gi.abs() > b.abs()) {
                pick = Some((i, gi));
            }
        }
        let before = x.clone();
        if let Some((i, gi)) = pick {
            let step = if sp.int[i] { gi.signum() } else { cfg.learning_rate * gi };
            x[i] = (x[i] - step).clamp(sp.lo[i], sp.hi[i]);
        }
        let a = sp.assignment(vars, &x);
        if accept(&a) {
            return SearchOutcome::Found { assignment: a, enumerations: n, trial: 0 };
        }
        if x == before {
            return exhausted(best, n, StopReason::FixedPoint);
        }
        if !seen.insert(key(&x)) {
            return exhausted(best, n, StopReason::Revisit);
        }
    }
    let l = lf.eval(&x);
    if l < best.0 {
        best = (l, x);
    }
    exhausted(best, cfg.max_enumerations.max(1), StopReason::Budget)
}

/// Uniform initial state for trial `t` (seeded with `seed ^ t`).
pub fn initial_state(vars: &[String], cfg: &SearchConfig, t: u64) -> Assignment {
    let sp = Space::of(vars, cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ t);
    let x: Vec<f64> = (0..vars.len())
        .map(|i| {
            let lo = sp.lo[i].max(-cfg.init_radius);
            let hi = sp.hi[i].min(cfg.init_radius);
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (sp.lo[i], sp.lo[i]) };
            if sp.int[i] {
                rng.gen_range(lo as i64..=hi as i64) as f64
            } else if lo < hi {
                rng.gen_range(lo..=hi)
            } else {
                lo
            }
        })
        .collect();
    sp.assignment(vars, &x)
}

/// Run `trials` independent searches from seeded random starts (concurrently)
/// and return the lowest-index `Found`, else the lowest-loss exhaustion.
pub fn search_multi(
    lf: &dyn LossFunction,
    accept: &(dyn Fn(&Assignment) -> bool + Sync),
    cfg: &SearchConfig,
    trials: usize,
) -> MultiOutcome {
    let trials = trials.max(1);
    let outcomes: Vec<SearchOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let x0 = initial_state(lf.vars(), cfg, t as u64);
            match search(lf, accept, cfg, &x0) {
                SearchOutcome::Found { assignment, enumerations, .. } => SearchOutcome::Found { assignment, enumerations, trial: t },
                other => other,
            }
        })
        .collect();
    if let Some(t) = outcomes.iter().position(|o| o.is_found()) {
        let enumerations = outcomes[..=t].iter().map(|o| o.enumerations()).sum();
        return MultiOutcome { outcome: outcomes[t].clone(), trials_used: t + 1, enumerations };
    }
    let enumerations = outcomes.iter().map(|o| o.enumerations()).sum();
    let best = outcomes
        .into_iter()
        .min_by(|a, b| {
            let l = |o: &SearchOutcome| match o {
                SearchOutcome::Exhausted { best_loss, .. } => *best_loss,
                _ => f64::NEG_INFINITY,
            };
            l(a).total_cmp(&l(b))
        })
        .unwrap();
    MultiOutcome { outcome: best, trials_used: trials, enumerations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::FnLoss;

    fn quad() -> FnLoss<impl Fn(&[f64]) -> f64 + Sync, impl Fn(&[f64]) -> Vec<f64> + Sync> {
        FnLoss { vars: vec!["x".into()], f: |x: &[f64]| (x[0] - 3.0).powi(2), g: |x: &[f64]| vec![2.0 * (x[0] - 3.0)] }
    }

    fn at(x: f64) -> Assignment {
        [("x".to_string(), Value::Real(x))].into_iter().collect()
    }

    #[test]
    fn converges_on_quadratic() {
        let accept = |a: &Assignment| (a.num("x").unwrap() - 3.0).abs() < 0.01;
        let out = search(&quad(), &accept, &SearchConfig::default(), &at(0.0));
        let SearchOutcome::Found { assignment, enumerations, .. } = out else { panic!("{out:?}") };
        assert!((assignment.num("x").unwrap() - 3.0).abs() < 0.01);
        // error shrinks by 0.8 per step: 3 * 0.8^n < 0.01
        assert_eq!(enumerations, ((0.01f64 / 3.0).ln() / 0.8f64.ln()).ceil() as usize);
    }

    #[test]
    fn single_real_step() {
        let lf = FnLoss { vars: vec!["x".into()], f: |_: &[f64]| 0.0, g: |_: &[f64]| vec![2.0] };
        let cfg = SearchConfig { max_enumerations: 1, ..Default::default() };
        let out = search(&lf, &|_: &Assignment| false, &cfg, &at(1.0));
        assert!((out.assignment().num("x").unwrap() - 1.0).abs() < 1e-12);
        let out = search(&lf, &|a: &Assignment| a.num("x").unwrap() < 0.9, &cfg, &at(1.0));
        assert_eq!(out.assignment().num("x").unwrap(), 0.8);
    }

    #[test]
    fn accept_true_finds_at_first_enumeration() {
        let out = search(&quad(), &|_: &Assignment| true, &SearchConfig::default(), &at(-40.0));
        assert!(matches!(out, SearchOutcome::Found { enumerations: 1, .. }));
    }

    #[test]
    fn integers_step_by_one_along_largest_derivative() {
        let lf = FnLoss {
            vars: vec!["a".into(), "b".into()],
            f: |x: &[f64]| (x[0] - 10.0).abs() + 3.0 * (x[1] - 2.0).abs(),
            g: |x: &[f64]| {
                let sgn = |v: f64| if v == 0.0 { 0.0 } else { v.signum() };
                vec![sgn(x[0] - 10.0), 3.0 * sgn(x[1] - 2.0)]
            },
        };
        let cfg = SearchConfig { integer_vars: ["a".to_string(), "b".to_string()].into(), ..Default::default() };
        let accept = |a: &Assignment| a.num("a") == Some(10.0) && a.num("b") == Some(2.0);
        let x0: Assignment = [("a".to_string(), Value::Int(7)), ("b".to_string(), Value::Int(0))].into_iter().collect();
        let out = search(&lf, &accept, &cfg, &x0);
        let SearchOutcome::Found { enumerations, .. } = out else { panic!() };
        assert_eq!(enumerations, 5);
    }

    #[test]
    fn projection_blocks_moves_past_bounds() {
        let lf = FnLoss { vars: vec!["x".into()], f: |x: &[f64]| -x[0], g: |_: &[f64]| vec![-1.0] };
        let cfg = SearchConfig {
            integer_vars: ["x".to_string()].into(),
            domains: [("x".to_string(), (0.0, 3.0))].into(),
            ..Default::default()
        };
        let x0: Assignment = [("x".to_string(), Value::Int(0))].into_iter().collect();
        let out = search(&lf, &|_: &Assignment| false, &cfg, &x0);
        let SearchOutcome::Exhausted { best, best_loss, enumerations, reason } = out else { panic!() };
        assert_eq!((best.num("x"), best_loss, enumerations, reason), (Some(3.0), -3.0, 4, StopReason::FixedPoint));
    }

    #[test]
    fn cycles_end_the_trial() {
        let lf = FnLoss { vars: vec!["x".into()], f: |x: &[f64]| x[0].abs(), g: |x: &[f64]| vec![if x[0] >= 0.0 { 1.0 } else { -1.0 }] };
        let cfg = SearchConfig { integer_vars: ["x".to_string()].into(), ..Default::default() };
        let x0: Assignment = [("x".to_string(), Value::Int(2))].into_iter().collect();
        let out = search(&lf, &|_: &Assignment| false, &cfg, &x0);
        assert!(matches!(out, SearchOutcome::Exhausted { reason: StopReason::Revisit, enumerations: 4, .. }), "{out:?}");
    }

    #[test]
    fn multi_start_finds_other_basin_deterministically() {
        let lf = FnLoss {
            vars: vec!["x".into()],
            f: |x: &[f64]| ((x[0] + 5.0).powi(2)).min((x[0] - 5.0).powi(2)) + 1.0,
            g: |x: &[f64]| vec![if (x[0] + 5.0).abs() <= (x[0] - 5.0).abs() { 2.0 * (x[0] + 5.0) } else { 2.0 * (x[0] - 5.0) }],
        };
        let accept = |a: &Assignment| (a.num("x").unwrap() - 5.0).abs() < 0.01;
        let cfg = SearchConfig { domains: [("x".to_string(), (-10.0, 10.0))].into(), seed: 42, ..Default::default() };
        let r1 = search_multi(&lf, &accept, &cfg, 8);
        let r2 = search_multi(&lf, &accept, &cfg, 8);
        assert!(r1.outcome.is_found());
        assert_eq!(r1, r2);
        let SearchOutcome::Found { trial, .. } = r1.outcome else { unreachable!() };
        // the selected trial is the first whose start lies in the positive basin
        let first_pos = (0..8u64).find(|&t| initial_state(&lf.vars, &cfg, t).num("x").unwrap() > 0.0).unwrap();
        assert_eq!(trial as u64, first_pos);
    }

    #[test]
    fn one_trial_is_plain_search() {
        let cfg = SearchConfig { seed: 9, ..Default::default() };
        let accept = |a: &Assignment| (a.num("x").unwrap() - 3.0).abs() < 0.01;
        let m = search_multi(&quad(), &accept, &cfg, 1);
        let s = search(&quad(), &accept, &cfg, &initial_state(&["x".to_string()], &cfg, 0));
        assert_eq!(m.outcome, s);
        assert_eq!(m.trials_used, 1);
    }
}
