use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::{collect, Encoded, LossConfig, LossError, LossFunction};
use crate::lang::Constraint;
use crate::nnet::MlpModel;
use crate::value::Assignment;

#[derive(Debug, Clone)]
struct Link {
    model: Arc<MlpModel>,
    ins: Vec<usize>,
    outs: Vec<usize>,
}

/// Encoded symbolic loss whose network-output variables are computed by
/// running the networks on the search variables.
#[derive(Debug, Clone)]
pub struct Composed {
    base: Encoded,
    free: Vec<String>,
    free_idx: Vec<usize>,
    fixed: Vec<(usize, f64)>,
    links: Vec<Link>,
    counter: Option<Arc<AtomicU64>>,
}

impl Composed {
    /// `nets` are `(model, input names, output names)`. Variables bound in
    /// `fixed` are held constant; every other non-output variable is searched.
    pub fn new(
        constraints: &[Constraint],
        nets: &[(Arc<MlpModel>, Vec<String>, Vec<String>)],
        fixed: &Assignment,
        cfg: LossConfig,
    ) -> Result<Composed, LossError> {
        let mut names = BTreeSet::new();
        for c in constraints {
            collect(c, &mut names)?;
        }
        for (_, ins, outs) in nets {
            names.extend(ins.iter().cloned());
            names.extend(outs.iter().cloned());
        }
        let vars: Vec<String> = names.into_iter().collect();
        let pos = |n: &str| vars.iter().position(|v| v == n).unwrap();
        let produced: BTreeSet<&String> = nets.iter().flat_map(|n| &n.2).collect();

        let mut fixed_vals = Vec::new();
        let mut free = Vec::new();
        let mut free_idx = Vec::new();
        for (i, v) in vars.iter().enumerate() {
            if produced.contains(v) {
                continue;
            }
            match fixed.num(v) {
                Some(val) => fixed_vals.push((i, val)),
                None => {
                    free.push(v.clone());
                    free_idx.push(i);
                }
            }
        }

        // order networks so each runs after the ones feeding it
        let mut known: BTreeSet<usize> = free_idx.iter().chain(fixed_vals.iter().map(|p| &p.0)).copied().collect();
        let mut pending: Vec<usize> = (0..nets.len()).collect();
        let mut links = Vec::new();
        while !pending.is_empty() {
            let ready = pending.iter().position(|&k| nets[k].1.iter().all(|n| known.contains(&pos(n))));
            let Some(p) = ready else {
                return Err(LossError::UnknownVar(format!("cyclic network outputs {:?}", nets[pending[0]].2)));
            };
            let k = pending.remove(p);
            let (model, ins, outs) = &nets[k];
            let link = Link { model: model.clone(), ins: ins.iter().map(|n| pos(n)).collect(), outs: outs.iter().map(|n| pos(n)).collect() };
            known.extend(link.outs.iter().copied());
            links.push(link);
        }

        let base = Encoded::reindexed(constraints, vars, cfg)?;
        Ok(Composed { base, free, free_idx, fixed: fixed_vals, links, counter: None })
    }

    /// Count every network forward pass in `c`.
    pub fn with_counter(mut self, c: Arc<AtomicU64>) -> Composed {
        self.counter = Some(c);
        self
    }

    /// Values of every variable (search, fixed and network outputs).
    pub fn realize(&self, x: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.base.vars.len()];
        for (&i, &v) in self.free_idx.iter().zip(x) {
            full[i] = v;
        }
        for &(i, v) in &self.fixed {
            full[i] = v;
        }
        if let Some(c) = &self.counter {
            c.fetch_add(self.links.len() as u64, Ordering::Relaxed);
        }
        for l in &self.links {
            let input: Vec<f64> = l.ins.iter().map(|&i| full[i]).collect();
            for (&o, y) in l.outs.iter().zip(l.model.forward(&input)) {
                full[o] = y;
            }
        }
        full
    }

    /// Names matching the positions of [`Self::realize`].
    pub fn all_vars(&self) -> &[String] {
        &self.base.vars
    }
}

impl LossFunction for Composed {
    fn vars(&self) -> &[String] {
        &self.free
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.base.eval(&self.realize(x))
    }

    fn grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let full = self.realize(x);
        let (v, mut g) = self.base.grad(&full);
        for l in self.links.iter().rev() {
            let down: Vec<f64> = l.outs.iter().map(|&o| g[o]).collect();
            if down.iter().all(|d| *d == 0.0) {
                continue;
            }
            let input: Vec<f64> = l.ins.iter().map(|&i| full[i]).collect();
            for (&i, gi) in l.ins.iter().zip(l.model.input_gradient_at(&input, &down)) {
                g[i] += gi;
            }
        }
        (v, self.free_idx.iter().map(|&i| g[i]).collect())
    }
}
