//! Two-layer fully connected network with ReLU hidden activation and
//! softmax cross-entropy loss, differentiated by hand. Small enough to
//! verify every gradient entry against finite differences, real enough to
//! produce genuine gradient distributions for the compression pipeline.

use rand::Rng;

use crate::error::{Error, Result};

use super::data::ClientDataset;

/// Names of the two compressible layers, in tensor order: each groups a
/// weight matrix with its bias vector.
pub const LAYER_LABELS: [&str; 2] = ["hidden", "output"];

/// Model parameters. Weight matrices are row-major: `w1[i * h + j]`
/// connects input `i` to hidden unit `j`, `w2[j * c + k]` hidden unit `j`
/// to logit `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub classes: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Per-tensor gradients, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub classes: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl ToyModel {
    /// Seeded initialization, uniform in ±1/sqrt(fan-in).
    pub fn init<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, classes: usize, rng: &mut R) -> Self {
        let scale1 = 1.0 / (input_dim as f64).sqrt();
        let scale2 = 1.0 / (hidden_dim as f64).sqrt();
        let mut draw = |n: usize, s: f64| -> Vec<f64> {
            (0..n).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * s).collect()
        };
        Self {
            input_dim,
            hidden_dim,
            classes,
            w1: draw(input_dim * hidden_dim, scale1),
            b1: vec![0.0; hidden_dim],
            w2: draw(hidden_dim * classes, scale2),
            b2: vec![0.0; classes],
        }
    }

    /// Class probabilities for one feature vector.
    fn forward(&self, x: &[f64], hidden: &mut [f64], probs: &mut [f64]) {
        let (d, h, c) = (self.input_dim, self.hidden_dim, self.classes);
        for j in 0..h {
            let mut z = self.b1[j];
            for i in 0..d {
                z += x[i] * self.w1[i * h + j];
            }
            hidden[j] = z.max(0.0);
        }
        for k in 0..c {
            let mut z = self.b2[k];
            for j in 0..h {
                z += hidden[j] * self.w2[j * c + k];
            }
            probs[k] = z;
        }
        softmax_in_place(probs);
    }

    /// Mean cross-entropy loss and classification accuracy over a dataset.
    pub fn evaluate(&self, data: &ClientDataset) -> Result<(f64, f64)> {
        self.check_shapes(data)?;
        let d = self.input_dim;
        let mut hidden = vec![0.0; self.hidden_dim];
        let mut probs = vec![0.0; self.classes];
        let mut loss = 0.0;
        let mut correct = 0usize;
        for (x, &label) in data.features.chunks_exact(d).zip(&data.labels) {
            self.forward(x, &mut hidden, &mut probs);
            loss -= probs[label].max(1e-300).ln();
            let argmax = probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(k, _)| k)
                .unwrap();
            if argmax == label {
                correct += 1;
            }
        }
        let n = data.labels.len() as f64;
        Ok((loss / n, correct as f64 / n))
    }

    fn check_shapes(&self, data: &ClientDataset) -> Result<()> {
        if data.input_dim != self.input_dim {
            return Err(Error::Input(format!(
                "dataset has {} features, model expects {}",
                data.input_dim, self.input_dim
            )));
        }
        if let Some(&bad) = data.labels.iter().find(|&&l| l >= self.classes) {
            return Err(Error::Input(format!(
                "label {bad} outside the model's {} classes",
                self.classes
            )));
        }
        if data.labels.is_empty() {
            return Err(Error::Input("dataset is empty".into()));
        }
        Ok(())
    }
}

fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for z in logits.iter_mut() {
        *z = (*z - max).exp();
        total += *z;
    }
    for z in logits.iter_mut() {
        *z /= total;
    }
}

impl Gradients {
    pub fn zeros_like(model: &ToyModel) -> Self {
        Self {
            input_dim: model.input_dim,
            hidden_dim: model.hidden_dim,
            classes: model.classes,
            w1: vec![0.0; model.w1.len()],
            b1: vec![0.0; model.b1.len()],
            w2: vec![0.0; model.w2.len()],
            b2: vec![0.0; model.b2.len()],
        }
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.input_dim == other.input_dim
            && self.hidden_dim == other.hidden_dim
            && self.classes == other.classes
    }

    /// Flattened values of one compressible layer: weights then biases.
    pub fn layer_values(&self, layer: usize) -> Vec<f64> {
        match layer {
            0 => self.w1.iter().chain(&self.b1).copied().collect(),
            1 => self.w2.iter().chain(&self.b2).copied().collect(),
            _ => panic!("layer index out of range"),
        }
    }

    /// Rebuild a gradient bundle from per-layer flattened values (the
    /// reconstruction path after dequantization).
    pub fn from_layer_values(model: &ToyModel, layers: [&[f64]; 2]) -> Result<Self> {
        let (d, h, c) = (model.input_dim, model.hidden_dim, model.classes);
        if layers[0].len() != d * h + h || layers[1].len() != h * c + c {
            return Err(Error::Input(format!(
                "layer value lengths ({}, {}) do not match the model",
                layers[0].len(),
                layers[1].len()
            )));
        }
        Ok(Self {
            input_dim: d,
            hidden_dim: h,
            classes: c,
            w1: layers[0][..d * h].to_vec(),
            b1: layers[0][d * h..].to_vec(),
            w2: layers[1][..h * c].to_vec(),
            b2: layers[1][h * c..].to_vec(),
        })
    }
}

/// Exact average over the client's samples of the analytic gradient of the
/// softmax cross-entropy loss.
pub fn local_gradient(model: &ToyModel, data: &ClientDataset) -> Result<Gradients> {
    model.check_shapes(data)?;
    let (d, h, c) = (model.input_dim, model.hidden_dim, model.classes);
    let mut grads = Gradients::zeros_like(model);
    let mut pre_hidden = vec![0.0; h];
    let mut hidden = vec![0.0; h];
    let mut probs = vec![0.0; c];
    let mut delta_hidden = vec![0.0; h];

    for (x, &label) in data.features.chunks_exact(d).zip(&data.labels) {
        for j in 0..h {
            let mut z = model.b1[j];
            for i in 0..d {
                z += x[i] * model.w1[i * h + j];
            }
            pre_hidden[j] = z;
            hidden[j] = z.max(0.0);
        }
        for k in 0..c {
            let mut z = model.b2[k];
            for j in 0..h {
                z += hidden[j] * model.w2[j * c + k];
            }
            probs[k] = z;
        }
        softmax_in_place(&mut probs);

        // dL/dz2 = p - onehot(label)
        probs[label] -= 1.0;
        for j in 0..h {
            let a = hidden[j];
            let mut back = 0.0;
            for k in 0..c {
                grads.w2[j * c + k] += a * probs[k];
                back += probs[k] * model.w2[j * c + k];
            }
            delta_hidden[j] = if pre_hidden[j] > 0.0 { back } else { 0.0 };
        }
        for k in 0..c {
            grads.b2[k] += probs[k];
        }
        for i in 0..d {
            let xi = x[i];
            for j in 0..h {
                grads.w1[i * h + j] += xi * delta_hidden[j];
            }
        }
        for j in 0..h {
            grads.b1[j] += delta_hidden[j];
        }
    }

    let inv_n = 1.0 / data.labels.len() as f64;
    for g in grads
        .w1
        .iter_mut()
        .chain(&mut grads.b1)
        .chain(&mut grads.w2)
        .chain(&mut grads.b2)
    {
        *g *= inv_n;
    }
    Ok(grads)
}

/// Unweighted mean of per-user gradients (distributed mean estimation).
pub fn aggregate(gradients: &[Gradients]) -> Result<Gradients> {
    let first = gradients
        .first()
        .ok_or_else(|| Error::Input("no gradients to aggregate".into()))?;
    let mut out = first.clone();
    for g in &gradients[1..] {
        if !g.same_shape(first) {
            return Err(Error::Input("gradient shapes differ across users".into()));
        }
        for (acc, v) in out
            .w1
            .iter_mut()
            .chain(&mut out.b1)
            .chain(&mut out.w2)
            .chain(&mut out.b2)
            .zip(g.w1.iter().chain(&g.b1).chain(&g.w2).chain(&g.b2))
        {
            *acc += v;
        }
    }
    let inv_u = 1.0 / gradients.len() as f64;
    for v in out
        .w1
        .iter_mut()
        .chain(&mut out.b1)
        .chain(&mut out.w2)
        .chain(&mut out.b2)
    {
        *v *= inv_u;
    }
    Ok(out)
}

/// One gradient-descent step: `w <- w - lr * g`, elementwise.
pub fn update(model: &ToyModel, aggregated: &Gradients, learning_rate: f64) -> Result<ToyModel> {
    if model.input_dim != aggregated.input_dim
        || model.hidden_dim != aggregated.hidden_dim
        || model.classes != aggregated.classes
    {
        return Err(Error::Input("gradient shape does not match the model".into()));
    }
    if learning_rate <= 0.0 {
        return Err(Error::Input(format!("learning rate must be positive, got {learning_rate}")));
    }
    let mut next = model.clone();
    for (w, g) in next
        .w1
        .iter_mut()
        .chain(&mut next.b1)
        .chain(&mut next.w2)
        .chain(&mut next.b2)
        .zip(
            aggregated
                .w1
                .iter()
                .chain(&aggregated.b1)
                .chain(&aggregated.w2)
                .chain(&aggregated.b2),
        )
    {
        *w -= learning_rate * g;
    }
    Ok(next)
}
