use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::math;
use crate::models::{argmax, Layer, MlpModel};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: vec![800, 100],
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 32,
        }
    }
}

impl MlpParams {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.hidden.contains(&0) {
            return Err(Error::InvalidParameter(
                "MLP epochs, batch size and layer widths must be positive".into(),
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Glorot-uniform weights, zero biases.
fn init(sizes: &[usize], seed: u64) -> Result<MlpModel> {
    let mut rng = rng::stream(seed, 0);
    let layers = sizes
        .windows(2)
        .map(|w| {
            let (i, o) = (w[0], w[1]);
            let limit = math::sqrt(6.0 / (i + o) as f64);
            Layer {
                inputs: i,
                outputs: o,
                weights: (0..i * o).map(|_| rng.random_range(-limit..=limit)).collect(),
                bias: vec![0.0; o],
            }
        })
        .collect();
    MlpModel::new(layers)
}

/// Softmax cross-entropy of one example, accumulating `∂loss/∂θ` into `grads`.
fn accumulate(model: &MlpModel, x: &[f64], label: usize, grads: &mut [Layer]) -> f64 {
    let layers = model.layers();
    let last = layers.len() - 1;
    // acts[k] is the input of layer k; acts[last + 1] holds the raw scores.
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers.len() + 1);
    acts.push(x.to_vec());
    for (k, l) in layers.iter().enumerate() {
        let mut z = l.affine(&acts[k]);
        if k < last {
            for v in &mut z {
                // NaN passes through so divergence stays visible.
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        acts.push(z);
    }
    let scores = &acts[last + 1];
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = scores.iter().map(|s| math::exp(s - top)).sum();
    let lse = top + math::ln(sum);
    let loss = lse - scores[label];

    let mut delta: Vec<f64> = scores.iter().map(|s| math::exp(s - lse)).collect();
    delta[label] -= 1.0;
    for k in (0..layers.len()).rev() {
        let l = &layers[k];
        let input = &acts[k];
        let g = &mut grads[k];
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            g.bias[o] += d;
            let row = &mut g.weights[o * l.inputs..(o + 1) * l.inputs];
            for (w, &a) in row.iter_mut().zip(input) {
                *w += d * a;
            }
        }
        if k == 0 {
            break;
        }
        let mut back = vec![0.0; l.inputs];
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
            for (b, &w) in back.iter_mut().zip(row) {
                *b += d * w;
            }
        }
        // Rectifier derivative: zero where the activation was clipped.
        for (b, &a) in back.iter_mut().zip(input) {
            if a <= 0.0 {
                *b = 0.0;
            }
        }
        delta = back;
    }
    loss
}

fn zero_grads(model: &MlpModel) -> Vec<Layer> {
    model
        .layers()
        .iter()
        .map(|l| Layer::zeros(l.inputs, l.outputs))
        .collect()
}

/// Loss and parameter gradient of a single example, shaped like the model's layers.
pub fn loss_and_gradient(model: &MlpModel, x: &[f64], label: usize) -> Result<(f64, Vec<Layer>)> {
    if x.len() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            got: x.len(),
        });
    }
    if label >= model.n_classes() {
        return Err(Error::IndexOutOfBounds {
            index: label,
            len: model.n_classes(),
        });
    }
    let mut grads = zero_grads(model);
    let loss = accumulate(model, x, label, &mut grads);
    Ok((loss, grads))
}

/// Mean softmax cross-entropy over a set of examples.
pub fn mean_loss(model: &MlpModel, rows: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for (x, &y) in rows.iter().zip(labels) {
        let s = model.scores(x)?;
        let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = top + math::ln(s.iter().map(|v| math::exp(v - top)).sum());
        total += lse - s[y];
    }
    Ok(total / rows.len().max(1) as f64)
}

fn held_out_loss(model: &MlpModel, rows: &[Vec<f64>], labels: &[usize], idx: &[usize]) -> Result<f64> {
    let r: Vec<Vec<f64>> = idx.iter().map(|&k| rows[k].clone()).collect();
    let l: Vec<usize> = idx.iter().map(|&k| labels[k]).collect();
    mean_loss(model, &r, &l)
}

fn accuracy(model: &MlpModel, rows: &[Vec<f64>], labels: &[usize], idx: &[usize]) -> Result<f64> {
    let mut hits = 0;
    for &k in idx {
        if argmax(&model.scores(&rows[k])?) == labels[k] {
            hits += 1;
        }
    }
    Ok(hits as f64 / idx.len().max(1) as f64)
}

/// Mini-batch SGD on softmax cross-entropy.
///
/// A tenth of the rows (at least one, when there are ten or more) is held out;
/// the returned network is the end-of-epoch snapshot with the best held-out
/// accuracy, ties going to the lower held-out loss and then the earlier epoch.
/// Without a holdout, the training rows are scored instead.
pub fn train_mlp(
    rows: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    params: &MlpParams,
    seed: u64,
) -> Result<MlpModel> {
    params.validate()?;
    if rows.is_empty() || rows.len() != labels.len() || n_classes == 0 {
        return Err(Error::InvalidDataset("MLP training needs labelled rows".into()));
    }
    let f = rows[0].len();
    let mut sizes = vec![f];
    sizes.extend_from_slice(&params.hidden);
    sizes.push(n_classes);
    let mut model = init(&sizes, seed)?;

    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut rng::stream(seed, 1));
    let n_hold = rows.len() / 10;
    let (holdout, fit) = order.split_at(n_hold);
    let holdout = if holdout.is_empty() { fit } else { holdout };
    let mut fit = fit.to_vec();

    let mut shuffle = rng::stream(seed, 2);
    let mut grads = zero_grads(&model);
    let mut best = (f64::NEG_INFINITY, f64::INFINITY, model.clone());
    for epoch in 1..=params.epochs {
        fit.shuffle(&mut shuffle);
        let mut epoch_loss = 0.0;
        for batch in fit.chunks(params.batch_size) {
            for g in &mut grads {
                g.weights.fill(0.0);
                g.bias.fill(0.0);
            }
            for &k in batch {
                epoch_loss += accumulate(&model, &rows[k], labels[k], &mut grads);
            }
            let step = params.learning_rate / batch.len() as f64;
            for (l, g) in model.layers_mut().iter_mut().zip(&grads) {
                for (w, d) in l.weights.iter_mut().zip(&g.weights) {
                    *w -= step * d;
                }
                for (b, d) in l.bias.iter_mut().zip(&g.bias) {
                    *b -= step * d;
                }
            }
        }
        if !epoch_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        let acc = accuracy(&model, rows, labels, holdout)?;
        let loss = held_out_loss(&model, rows, labels, holdout)?;
        if acc > best.0 || (acc == best.0 && loss < best.1) {
            best = (acc, loss, model.clone());
        }
    }
    Ok(best.2)
}
