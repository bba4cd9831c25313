//! Feed-forward networks standing in for opaque program logic.
//!
//! Inputs and outputs are standardized with training-set statistics; hidden
//! layers use ReLU (subgradient 0 at 0) and the output layer is linear.

mod dataset;
mod format;
mod train;

pub use dataset::{Column, Dataset};
pub use train::{sample_gradient, train, Optimizer, TrainConfig, TrainReport};

use crate::lang::VarKind;
use crate::value::{Assignment, Value};

#[derive(Debug, thiserror::Error)]
pub enum NnetError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(String),
    #[error("unsupported model format version `{0}`")]
    Version(String),
    #[error("malformed model file at line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("missing binding for input `{0}`")]
    MissingInput(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("{0}")]
    Precondition(String),
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    NonFinite { epoch: usize },
}

/// Per-column standardization `(x - mean) / std`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub const IDENTITY: Stat = Stat { mean: 0.0, std: 1.0 };

    /// Mean and population standard deviation; constant columns get std 1.
    pub fn of(values: impl Iterator<Item = f64> + Clone) -> Stat {
        let n = values.clone().count().max(1) as f64;
        let mean = values.clone().sum::<f64>() / n;
        let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        Stat { mean, std: if std > 1e-12 && std.is_finite() { std } else { 1.0 } }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    /// Input width, hidden widths, output width.
    pub layer_sizes: Vec<usize>,
    /// Per layer, row-major `out x in`.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub input_names: Vec<String>,
    pub input_kinds: Vec<VarKind>,
    pub output_names: Vec<String>,
    pub output_kinds: Vec<VarKind>,
    pub input_stats: Vec<Stat>,
    pub output_stats: Vec<Stat>,
}

impl MlpModel {
    /// All-zero network with identity standardization.
    pub fn zeros(layer_sizes: &[usize], inputs: &[(&str, VarKind)], outputs: &[(&str, VarKind)]) -> MlpModel {
        let n = layer_sizes.len() - 1;
        MlpModel {
            layer_sizes: layer_sizes.to_vec(),
            weights: (0..n).map(|l| vec![0.0; layer_sizes[l] * layer_sizes[l + 1]]).collect(),
            biases: (0..n).map(|l| vec![0.0; layer_sizes[l + 1]]).collect(),
            input_names: inputs.iter().map(|(n, _)| n.to_string()).collect(),
            input_kinds: inputs.iter().map(|(_, k)| *k).collect(),
            output_names: outputs.iter().map(|(n, _)| n.to_string()).collect(),
            output_kinds: outputs.iter().map(|(_, k)| *k).collect(),
            input_stats: vec![Stat::IDENTITY; inputs.len()],
            output_stats: vec![Stat::IDENTITY; outputs.len()],
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Check the shape invariants.
    pub fn validate(&self) -> Result<(), NnetError> {
        let ls = &self.layer_sizes;
        let bad = |m: String| Err(NnetError::Shape(m));
        if ls.len() < 2 || ls.contains(&0) {
            return bad(format!("layer sizes {ls:?}"));
        }
        if self.weights.len() != ls.len() - 1 || self.biases.len() != ls.len() - 1 {
            return bad(format!("{} weight blocks for {} layers", self.weights.len(), ls.len()));
        }
        for l in 0..ls.len() - 1 {
            if self.weights[l].len() != ls[l] * ls[l + 1] || self.biases[l].len() != ls[l + 1] {
                return bad(format!("layer {l} is not {}x{}", ls[l + 1], ls[l]));
            }
        }
        if self.input_names.len() != ls[0]
            || self.input_kinds.len() != ls[0]
            || self.input_stats.len() != ls[0]
            || self.output_names.len() != self.n_outputs()
            || self.output_kinds.len() != self.n_outputs()
            || self.output_stats.len() != self.n_outputs()
        {
            return bad("name/stat arity differs from layer sizes".into());
        }
        if self.input_stats.iter().chain(&self.output_stats).any(|s| !(s.std > 0.0) || !s.mean.is_finite()) {
            return bad("standard deviations must be positive".into());
        }
        Ok(())
    }

    /// Network on standardized vectors; fills `acts` with each layer's
    /// post-activation values (`acts[0]` is the input).
    fn forward_std(&self, xs: &[f64], acts: &mut Vec<Vec<f64>>) {
        acts.resize(self.layer_sizes.len(), Vec::new());
        acts[0].clear();
        acts[0].extend_from_slice(xs);
        let last = self.layer_sizes.len() - 2;
        for l in 0..=last {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let (prev, rest) = acts.split_at_mut(l + 1);
            let x = &prev[l];
            let out = &mut rest[0];
            out.clear();
            let w = &self.weights[l];
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let mut z = self.biases[l][o];
                for i in 0..n_in {
                    z += row[i] * x[i];
                }
                out.push(if l < last { z.max(0.0) } else { z });
            }
        }
    }

    /// Raw outputs for raw inputs, in `input_names` / `output_names` order.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let xs: Vec<f64> = x.iter().zip(&self.input_stats).map(|(v, s)| (v - s.mean) / s.std).collect();
        let mut acts = Vec::new();
        self.forward_std(&xs, &mut acts);
        acts.last().unwrap().iter().zip(&self.output_stats).map(|(v, s)| v * s.std + s.mean).collect()
    }

    fn inputs_of(&self, a: &Assignment) -> Result<Vec<f64>, NnetError> {
        self.input_names.iter().map(|n| a.num(n).ok_or_else(|| NnetError::MissingInput(n.clone()))).collect()
    }

    /// Bind every output name to the network's real-valued prediction.
    pub fn predict(&self, a: &Assignment) -> Result<Assignment, NnetError> {
        let y = self.forward(&self.inputs_of(a)?);
        Ok(self.output_names.iter().cloned().zip(y.into_iter().map(Value::Real)).collect())
    }

    /// Gradient of `downstream · forward(x)` with respect to raw `x`.
    pub fn input_gradient_at(&self, x: &[f64], downstream: &[f64]) -> Vec<f64> {
        let xs: Vec<f64> = x.iter().zip(&self.input_stats).map(|(v, s)| (v - s.mean) / s.std).collect();
        let mut acts = Vec::new();
        self.forward_std(&xs, &mut acts);
        let mut delta: Vec<f64> = downstream.iter().zip(&self.output_stats).map(|(d, s)| d * s.std).collect();
        let last = self.layer_sizes.len() - 2;
        for l in (0..=last).rev() {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            if l < last {
                for (d, a) in delta.iter_mut().zip(&acts[l + 1]) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let w = &self.weights[l];
            let mut prev = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &w[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    prev[i] += row[i] * d;
                }
            }
            delta = prev;
        }
        delta.iter().zip(&self.input_stats).map(|(d, s)| d / s.std).collect()
    }

    /// [`Self::input_gradient_at`] reading inputs from an assignment.
    pub fn input_gradient(&self, a: &Assignment, downstream: &[f64]) -> Result<Vec<f64>, NnetError> {
        if downstream.len() != self.n_outputs() {
            return Err(NnetError::Shape(format!("downstream has {} entries, expected {}", downstream.len(), self.n_outputs())));
        }
        Ok(self.input_gradient_at(&self.inputs_of(a)?, downstream))
    }

    /// Whether `pred` counts as the observed `actual` for output `j`.
    pub fn output_matches(&self, j: usize, pred: f64, actual: f64) -> bool {
        output_matches(self.output_kinds[j], pred, actual)
    }

    /// Fraction of rows whose every output matches (see [`output_matches`]).
    pub fn accuracy(&self, held_out: &Dataset) -> Result<f64, NnetError> {
        if held_out.rows.is_empty() {
            return Err(NnetError::Precondition("accuracy needs at least one held-out row".into()));
        }
        let xi = held_out.indices(&self.input_names)?;
        let yi = held_out.indices(&self.output_names)?;
        let right = held_out
            .rows
            .iter()
            .filter(|row| {
                let x: Vec<f64> = xi.iter().map(|&i| row[i]).collect();
                let y = self.forward(&x);
                yi.iter().enumerate().all(|(j, &i)| self.output_matches(j, y[j], row[i]))
            })
            .count();
        Ok(right as f64 / held_out.rows.len() as f64)
    }

    /// Inputs ranked by the summed magnitude of all weight paths to the outputs.
    pub fn explain(&self) -> Vec<(String, f64)> {
        let ls = &self.layer_sizes;
        // m is out_l x n_inputs, starting from |W_0|
        let mut m: Vec<f64> = self.weights[0].iter().map(|w| w.abs()).collect();
        for l in 1..ls.len() - 1 {
            let (n_mid, n_out, n_in) = (ls[l], ls[l + 1], ls[0]);
            let mut next = vec![0.0; n_out * n_in];
            for o in 0..n_out {
                for k in 0..n_mid {
                    let w = self.weights[l][o * n_mid + k].abs();
                    if w == 0.0 {
                        continue;
                    }
                    for i in 0..n_in {
                        next[o * n_in + i] += w * m[k * n_in + i];
                    }
                }
            }
            m = next;
        }
        let n_in = ls[0];
        let n_out = self.n_outputs();
        let mut scores: Vec<(String, f64)> = (0..n_in)
            .map(|i| (self.input_names[i].clone(), (0..n_out).map(|o| m[o * n_in + i]).sum()))
            .collect();
        scores.sort_by(|a, b| b.1.total_cmp(&a.1));
        scores
    }
}

/// Integer outputs match when the prediction rounds to the observed value;
/// real outputs within 1e-2 relative (absolute 1e-2 below magnitude 1).
pub fn output_matches(kind: VarKind, pred: f64, actual: f64) -> bool {
    match kind {
        VarKind::Int => pred.round() == actual.round(),
        _ => (pred - actual).abs() <= 1e-2 * actual.abs().max(1.0),
    }
}
