use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, MlpModel, NnetError, Stat};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Sgd { lr: f64 },
    Adam { lr: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub optimizer: Optimizer,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Epochs without improvement before the learning rate is multiplied by
    /// `decay_factor`; 0 disables decay.
    pub decay_patience: usize,
    pub decay_factor: f64,
    /// Fraction of rows used for fitting; the rest is held out for accuracy.
    pub train_fraction: f64,
    /// Fraction of the fitting rows set aside for early stopping.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: vec![64],
            optimizer: Optimizer::Adam { lr: 1e-3 },
            batch_size: 128,
            max_epochs: 1000,
            patience: 30,
            decay_patience: 10,
            decay_factor: 0.5,
            train_fraction: 0.8,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Plain mini-batch gradient descent with the conservative schedule.
    pub fn sgd_baseline() -> Self {
        TrainConfig {
            optimizer: Optimizer::Sgd { lr: 1e-2 },
            max_epochs: 200,
            patience: 5,
            decay_patience: 0,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// MSE of the returned model on the fitting rows, standardized units.
    pub final_train_loss: f64,
    pub validation_curve: Vec<f64>,
    pub best_epoch: usize,
    /// Held-out accuracy, `None` when nothing was held out.
    pub accuracy: Option<f64>,
    pub held_out: usize,
    pub stopped_early: bool,
}

struct Scratch {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
    gw: Vec<Vec<f64>>,
    gb: Vec<Vec<f64>>,
}

impl Scratch {
    fn new(m: &MlpModel) -> Scratch {
        Scratch {
            acts: Vec::new(),
            deltas: m.layer_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            gw: m.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            gb: m.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn zero(&mut self) {
        self.gw.iter_mut().chain(self.gb.iter_mut()).for_each(|g| g.fill(0.0));
    }

    /// Accumulate `scale * d(sum (pred - y)^2)/d params` for one sample.
    fn accumulate(&mut self, m: &MlpModel, x: &[f64], y: &[f64], scale: f64) -> f64 {
        m.forward_std(x, &mut self.acts);
        let nl = m.layer_sizes.len() - 1;
        let mut sq = 0.0;
        for (j, (p, t)) in self.acts[nl].iter().zip(y).enumerate() {
            let e = p - t;
            sq += e * e;
            self.deltas[nl][j] = 2.0 * e * scale;
        }
        for l in (0..nl).rev() {
            let (n_in, n_out) = (m.layer_sizes[l], m.layer_sizes[l + 1]);
            let (lower, upper) = self.deltas.split_at_mut(l + 1);
            let d_out = &upper[0];
            let d_in = &mut lower[l];
            d_in.fill(0.0);
            let a_in = &self.acts[l];
            let w = &m.weights[l];
            let gw = &mut self.gw[l];
            for o in 0..n_out {
                let d = d_out[o];
                if d == 0.0 {
                    continue;
                }
                self.gb[l][o] += d;
                let row = &w[o * n_in..(o + 1) * n_in];
                let grow = &mut gw[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    grow[i] += d * a_in[i];
                    d_in[i] += d * row[i];
                }
            }
            if l > 0 {
                for (d, a) in d_in.iter_mut().zip(a_in) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
        }
        sq
    }
}

/// Squared error of one standardized sample and its gradient with respect to
/// every weight and bias, laid out like `m.weights` and `m.biases`.
pub fn sample_gradient(m: &MlpModel, x: &[f64], y: &[f64]) -> (f64, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut s = Scratch::new(m);
    let l = s.accumulate(m, x, y, 1.0);
    (l, s.gw, s.gb)
}

fn mse(m: &MlpModel, xs: &[Vec<f64>], ys: &[Vec<f64>], acts: &mut Vec<Vec<f64>>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        m.forward_std(x, acts);
        total += acts.last().unwrap().iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>();
    }
    total / (xs.len() * ys[0].len()) as f64
}

/// Fit an MLP from `inputs` to `outputs` by minimizing standardized MSE.
pub fn train(
    data: &Dataset,
    inputs: &[String],
    outputs: &[String],
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainReport), NnetError> {
    if inputs.is_empty() || outputs.is_empty() {
        return Err(NnetError::Precondition("training needs at least one input and one output".into()));
    }
    if let Some(n) = inputs.iter().find(|n| outputs.contains(n)) {
        return Err(NnetError::Precondition(format!("`{n}` is both an input and an output")));
    }
    if data.len() < 10 {
        return Err(NnetError::Precondition(format!("training needs at least 10 rows, got {}", data.len())));
    }
    if !(cfg.decay_factor > 0.0 && cfg.decay_factor <= 1.0) {
        return Err(NnetError::Precondition(format!("decay factor {} must lie in (0, 1]", cfg.decay_factor)));
    }
    if cfg.batch_size == 0 || cfg.hidden.contains(&0) {
        return Err(NnetError::Precondition("batch size and hidden widths must be positive".into()));
    }
    let xi = data.indices(inputs)?;
    let yi = data.indices(outputs)?;

    let (fit, held) = data.split(cfg.train_fraction, cfg.seed);
    let (tr, va) = fit.split(1.0 - cfg.validation_fraction, cfg.seed ^ 0x5eed);
    let (tr, va) = if tr.is_empty() || va.is_empty() { (fit.clone(), fit.clone()) } else { (tr, va) };

    let mut sizes = vec![inputs.len()];
    sizes.extend(&cfg.hidden);
    sizes.push(outputs.len());
    let named = |names: &[String], idx: &[usize]| -> Vec<(String, crate::lang::VarKind)> {
        names.iter().zip(idx).map(|(n, &i)| (n.clone(), data.columns[i].kind)).collect()
    };
    let ins = named(inputs, &xi);
    let outs = named(outputs, &yi);
    let ins_ref: Vec<(&str, _)> = ins.iter().map(|(n, k)| (n.as_str(), *k)).collect();
    let outs_ref: Vec<(&str, _)> = outs.iter().map(|(n, k)| (n.as_str(), *k)).collect();
    let mut m = MlpModel::zeros(&sizes, &ins_ref, &outs_ref);
    m.input_stats = xi.iter().map(|&i| Stat::of(tr.rows.iter().map(move |r| r[i]))).collect();
    m.output_stats = yi.iter().map(|&i| Stat::of(tr.rows.iter().map(move |r| r[i]))).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for l in 0..sizes.len() - 1 {
        let bound = 1.0 / (sizes[l] as f64).sqrt();
        let u = Uniform::new_inclusive(-bound, bound);
        m.weights[l].iter_mut().for_each(|w| *w = u.sample(&mut rng));
        m.biases[l].iter_mut().for_each(|b| *b = u.sample(&mut rng));
    }

    let standardize = |d: &Dataset| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let xs = d.rows.iter().map(|r| xi.iter().zip(&m.input_stats).map(|(&i, s)| (r[i] - s.mean) / s.std).collect()).collect();
        let ys = d.rows.iter().map(|r| yi.iter().zip(&m.output_stats).map(|(&i, s)| (r[i] - s.mean) / s.std).collect()).collect();
        (xs, ys)
    };
    let (tx, ty) = standardize(&tr);
    let (vx, vy) = standardize(&va);

    let mut scratch = Scratch::new(&m);
    let mut mom: Vec<Vec<f64>> = m.weights.iter().chain(&m.biases).map(|p| vec![0.0; p.len()]).collect();
    let mut vel = mom.clone();
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..tx.len()).collect();
    let mut acts = Vec::new();

    let mut best = (f64::INFINITY, m.clone(), 0usize);
    let mut curve = Vec::new();
    let mut since_best = 0;
    let mut stopped_early = false;
    let mut lr_scale = 1.0;
    let n_out = outputs.len() as f64;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            scratch.zero();
            let scale = 1.0 / (batch.len() as f64 * n_out);
            let mut loss = 0.0;
            for &k in batch {
                loss += scratch.accumulate(&m, &tx[k], &ty[k], scale);
            }
            if !loss.is_finite() {
                return Err(NnetError::NonFinite { epoch });
            }
            step += 1;
            let params = m.weights.iter_mut().chain(m.biases.iter_mut());
            let grads = scratch.gw.iter().chain(&scratch.gb);
            for (((p, g), mo), ve) in params.zip(grads).zip(&mut mom).zip(&mut vel) {
                match cfg.optimizer {
                    Optimizer::Sgd { lr } => p.iter_mut().zip(g).for_each(|(p, g)| *p -= lr * lr_scale * g),
                    Optimizer::Adam { lr } => {
                        let lr = lr * lr_scale;
                        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
                        let c1 = 1.0 - b1.powi(step);
                        let c2 = 1.0 - b2.powi(step);
                        for i in 0..p.len() {
                            mo[i] = b1 * mo[i] + (1.0 - b1) * g[i];
                            ve[i] = b2 * ve[i] + (1.0 - b2) * g[i] * g[i];
                            p[i] -= lr * (mo[i] / c1) / ((ve[i] / c2).sqrt() + eps);
                        }
                    }
                }
            }
        }
        let vl = mse(&m, &vx, &vy, &mut acts);
        if !vl.is_finite() {
            return Err(NnetError::NonFinite { epoch });
        }
        curve.push(vl);
        if vl < best.0 {
            best = (vl, m.clone(), epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if cfg.decay_patience > 0 && since_best % cfg.decay_patience == 0 {
                lr_scale *= cfg.decay_factor;
            }
            if since_best >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    let (_, model, best_epoch) = best;
    let final_train_loss = mse(&model, &tx, &ty, &mut acts);
    let accuracy = if held.is_empty() { None } else { Some(model.accuracy(&held)?) };
    let report = TrainReport {
        epochs_run: curve.len(),
        final_train_loss,
        validation_curve: curve,
        best_epoch,
        accuracy,
        held_out: held.len(),
        stopped_early,
    };
    Ok((model, report))
}
