use serde::{Deserialize, Serialize};

use super::activation::ActivationKind;
use crate::error::{contract, Error, Result};
use crate::linalg::{Matrix, Rng};
use crate::tasks::{sample_dataset, Phase, TaskSpec, DEFAULT_TRAIN_PER_CLUSTER};

/// How the hidden→output weights are set and whether they learn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutMode {
    /// Fixed at values in {−1, 0, +1}; neurons split evenly across every
    /// nonzero readout pattern.
    FrozenDiscrete,
    /// Fixed at Gaussian values with variance 1/H.
    FrozenRandom,
    /// Gaussian init, updated by SGD.
    Trainable,
}

impl ReadoutMode {
    pub fn is_frozen(self) -> bool {
        !matches!(self, ReadoutMode::Trainable)
    }
}

/// One fully connected hidden layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// out × in
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: ActivationKind,
}

/// Feedforward network with sigmoid outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<DenseLayer>,
    pub readout_mode: ReadoutMode,
    /// k × H (H = width of the last hidden layer).
    pub readout: Matrix,
}

/// Activations of one forward pass over a batch (columns are samples).
#[derive(Clone, Debug)]
pub struct ForwardPass {
    /// Pre-activations per hidden layer.
    pub pre: Vec<Matrix>,
    /// Post-activations per hidden layer.
    pub hidden: Vec<Matrix>,
    /// k × n logits.
    pub logits: Matrix,
    /// k × n sigmoid outputs.
    pub outputs: Matrix,
}

/// Loss gradient with respect to every parameter.
#[derive(Clone, Debug)]
pub struct Gradient {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub readout: Matrix,
}

/// All nonzero vectors in {−1, 0, +1}ᵏ, in a fixed order.
pub fn readout_patterns(k: usize) -> Vec<Vec<f64>> {
    let total = 3usize.pow(k as u32);
    let mut out = Vec::with_capacity(total - 1);
    for code in 0..total {
        let mut v = Vec::with_capacity(k);
        let mut c = code;
        for _ in 0..k {
            // digit 0 → +1, 1 → −1, 2 → 0 so that k = 1 yields (+1, −1).
            v.push([1.0, -1.0, 0.0][c % 3]);
            c /= 3;
        }
        if v.iter().any(|&x| x != 0.0) {
            out.push(v);
        }
    }
    out
}

/// Builds a network for `task` with the given hidden widths.
///
/// Input weights are N(0, 1/fan_in), biases start at 0.
pub fn init_network(
    task: &TaskSpec,
    hidden: &[usize],
    kind: ActivationKind,
    mode: ReadoutMode,
    rng: &mut Rng,
) -> Result<Network> {
    if hidden.is_empty() || hidden.contains(&0) {
        return Err(contract("at least one non-empty hidden layer is required"));
    }
    let k = task.n_outputs();
    let last = *hidden.last().unwrap();
    if mode == ReadoutMode::FrozenDiscrete {
        let groups = 3usize.pow(k as u32) - 1;
        if last % groups != 0 {
            return Err(contract(format!(
                "hidden width {last} is not divisible by the {groups} discrete readout groups for k = {k}"
            )));
        }
    }
    let mut layers = Vec::with_capacity(hidden.len());
    let mut fan_in = task.input_dim();
    for &width in hidden {
        let sd = 1.0 / (fan_in as f64).sqrt();
        let weights = Matrix::from_fn(width, fan_in, |_, _| sd * rng.normal());
        layers.push(DenseLayer { weights, bias: vec![0.0; width], activation: kind });
        fan_in = width;
    }
    let readout = match mode {
        ReadoutMode::FrozenDiscrete => {
            let patterns = readout_patterns(k);
            let block = last / patterns.len();
            Matrix::from_fn(k, last, |r, j| patterns[j / block][r])
        }
        ReadoutMode::FrozenRandom | ReadoutMode::Trainable => {
            let sd = 1.0 / (last as f64).sqrt();
            Matrix::from_fn(k, last, |_, _| sd * rng.normal())
        }
    };
    Ok(Network { layers, readout_mode: mode, readout })
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// −[t log σ(z) + (1−t) log(1−σ(z))], evaluated stably.
#[inline]
fn bce_from_logit(z: f64, t: f64) -> f64 {
    z.max(0.0) - z * t + (-z.abs()).exp().ln_1p()
}

impl Network {
    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.cols()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.readout.rows()
    }

    pub fn first_layer(&self) -> &DenseLayer {
        &self.layers[0]
    }

    /// Readout pattern (column of the readout matrix) for each last-layer neuron.
    pub fn readout_column(&self, neuron: usize) -> Vec<f64> {
        self.readout.col(neuron)
    }

    /// Group index per last-layer neuron: neurons sharing an identical
    /// readout column share a group. Groups are numbered by first appearance.
    pub fn readout_groups(&self) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut patterns: Vec<Vec<f64>> = Vec::new();
        let mut assignment = Vec::with_capacity(self.readout.cols());
        for j in 0..self.readout.cols() {
            let col = self.readout.col(j);
            let idx = match patterns.iter().position(|p| p == &col) {
                Some(i) => i,
                None => {
                    patterns.push(col);
                    patterns.len() - 1
                }
            };
            assignment.push(idx);
        }
        (patterns, assignment)
    }

    pub fn forward(&self, x: &Matrix) -> Result<ForwardPass> {
        if x.rows() != self.input_dim() {
            return Err(contract(format!(
                "input has {} rows, network expects {}",
                x.rows(),
                self.input_dim()
            )));
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut hidden: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = hidden.last().unwrap_or(x);
            let mut z = layer.weights.matmul(input);
            for (r, &b) in layer.bias.iter().enumerate() {
                if b != 0.0 {
                    z.row_mut(r).iter_mut().for_each(|v| *v += b);
                }
            }
            let act = layer.activation;
            let h = z.map(|v| act.f(v));
            pre.push(z);
            hidden.push(h);
        }
        let logits = self.readout.matmul(hidden.last().unwrap());
        let outputs = logits.map(sigmoid);
        Ok(ForwardPass { pre, hidden, logits, outputs })
    }

    /// Mean over samples of the binary cross-entropy summed over outputs.
    /// `labels` are ±1 and mapped to {0, 1} targets.
    pub fn loss(&self, x: &Matrix, labels: &Matrix) -> Result<f64> {
        let pass = self.forward(x)?;
        Ok(mean_bce(&pass.logits, labels))
    }

    /// Loss and backpropagated gradient over a batch.
    pub fn loss_and_gradient(&self, x: &Matrix, labels: &Matrix) -> Result<(f64, Gradient)> {
        let pass = self.forward(x)?;
        let n = x.cols() as f64;
        let loss = mean_bce(&pass.logits, labels);
        // dL/dlogit = (σ(z) − t)/n
        let mut delta = pass.outputs.clone();
        for (d, &y) in delta.as_mut_slice().iter_mut().zip(labels.as_slice()) {
            let t = if y > 0.0 { 1.0 } else { 0.0 };
            *d = (*d - t) / n;
        }
        let last_hidden = pass.hidden.last().unwrap();
        let readout_grad = delta.matmul_nt(last_hidden);
        let mut back = self.readout.matmul_tn(&delta);

        let depth = self.layers.len();
        let mut weights = vec![Matrix::zeros(0, 0); depth];
        let mut biases = vec![Vec::new(); depth];
        for l in (0..depth).rev() {
            let act = self.layers[l].activation;
            for (b, &z) in back.as_mut_slice().iter_mut().zip(pass.pre[l].as_slice()) {
                *b *= act.fprime(z);
            }
            let input = if l == 0 { x } else { &pass.hidden[l - 1] };
            weights[l] = back.matmul_nt(input);
            biases[l] = (0..back.rows()).map(|r| back.row(r).iter().sum()).collect();
            if l > 0 {
                back = self.layers[l].weights.matmul_tn(&back);
            }
        }
        Ok((loss, Gradient { weights, biases, readout: readout_grad }))
    }

    /// One gradient-descent step; frozen readouts ignore their gradient.
    pub fn apply_gradient(&mut self, grad: &Gradient, lr: f64) {
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(grad.weights.iter().zip(&grad.biases)) {
            layer.weights.add_scaled(-lr, gw);
            for (b, g) in layer.bias.iter_mut().zip(gb) {
                *b -= lr * g;
            }
        }
        if !self.readout_mode.is_frozen() {
            self.readout.add_scaled(-lr, &grad.readout);
        }
    }

    /// Fraction of samples whose output sign matches each label row.
    pub fn accuracy(&self, x: &Matrix, labels: &Matrix) -> Result<Vec<f64>> {
        let pass = self.forward(x)?;
        Ok((0..labels.rows())
            .map(|r| {
                let hits = pass
                    .logits
                    .row(r)
                    .iter()
                    .zip(labels.row(r))
                    .filter(|(z, y)| (**z > 0.0) == (**y > 0.0))
                    .count();
                hits as f64 / labels.cols() as f64
            })
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn mean_bce(logits: &Matrix, labels: &Matrix) -> f64 {
    let n = logits.cols() as f64;
    logits
        .as_slice()
        .iter()
        .zip(labels.as_slice())
        .map(|(&z, &y)| bce_from_logit(z, if y > 0.0 { 1.0 } else { 0.0 }))
        .sum::<f64>()
        / n
}

/// SGD hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Maximum number of epochs.
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    /// Training stops once an epoch's mean batch loss falls below this.
    pub convergence_loss: f64,
    /// Record first-layer weights every this many steps (0 disables).
    pub record_every: usize,
    /// Fresh training samples per cluster drawn each epoch.
    pub train_per_cluster: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 2000,
            batch: 32,
            seed: 0,
            convergence_loss: 0.05,
            record_every: 0,
            train_per_cluster: DEFAULT_TRAIN_PER_CLUSTER,
        }
    }
}

impl TrainConfig {
    /// Defaults for networks with several hidden layers.
    pub fn deep() -> Self {
        Self { learning_rate: 0.01, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(contract("learning rate must be finite and non-negative"));
        }
        if self.epochs == 0 || self.batch == 0 || self.train_per_cluster == 0 {
            return Err(contract("epochs, batch and train_per_cluster must be positive"));
        }
        Ok(())
    }
}

/// First-layer weights at one training step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSnapshot {
    pub step: usize,
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Collects first-layer weight snapshots during training.
#[derive(Clone, Debug, Default)]
pub struct WeightRecorder {
    pub every: usize,
    pub snapshots: Vec<WeightSnapshot>,
}

impl WeightRecorder {
    pub fn new(every: usize) -> Self {
        Self { every, snapshots: Vec::new() }
    }

    fn record(&mut self, step: usize, net: &Network) {
        if self.snapshots.last().is_some_and(|s| s.step == step) {
            return;
        }
        let layer = net.first_layer();
        self.snapshots.push(WeightSnapshot { step, weights: layer.weights.clone(), bias: layer.bias.clone() });
    }
}

/// Outcome of a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub final_loss: f64,
    /// Per label row, measured on the last epoch's training samples after training.
    pub train_accuracy: Vec<f64>,
    pub steps: usize,
    pub epochs: usize,
    pub converged: bool,
    /// Mean batch loss of every epoch.
    pub epoch_losses: Vec<f64>,
}

/// Minibatch SGD on fresh noisy samples each epoch.
pub fn train(
    net: &mut Network,
    task: &TaskSpec,
    cfg: &TrainConfig,
    recorder: Option<&mut WeightRecorder>,
) -> Result<TrainingSummary> {
    train_with_hook(net, task, cfg, recorder, |_, _| Ok(()))
}

/// [`train`], calling `hook(epochs_done, net)` before the first epoch and
/// after every completed epoch.
pub fn train_with_hook(
    net: &mut Network,
    task: &TaskSpec,
    cfg: &TrainConfig,
    mut recorder: Option<&mut WeightRecorder>,
    mut hook: impl FnMut(usize, &Network) -> Result<()>,
) -> Result<TrainingSummary> {
    cfg.validate()?;
    if task.input_dim() != net.input_dim() || task.n_outputs() != net.n_outputs() {
        return Err(contract("network shape does not match the task"));
    }
    let root = Rng::new(cfg.seed);
    let mut step = 0usize;
    let mut epoch_losses = Vec::new();
    let mut converged = false;
    let mut last_data = None;
    if let Some(rec) = recorder.as_deref_mut() {
        rec.record(0, net);
    }
    hook(0, net)?;
    for epoch in 0..cfg.epochs {
        let mut data_rng = root.child(2 * epoch as u64);
        let mut order_rng = root.child(2 * epoch as u64 + 1);
        let data = sample_dataset(task, cfg.train_per_cluster, Phase::Train, &mut data_rng)?;
        let mut order: Vec<usize> = (0..data.len()).collect();
        order_rng.shuffle(&mut order);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch) {
            let x = data.samples.select_cols(chunk);
            let y = data.labels.select_cols(chunk);
            let (loss, grad) = net.loss_and_gradient(&x, &y)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { step, loss });
            }
            net.apply_gradient(&grad, cfg.learning_rate);
            step += 1;
            total += loss;
            batches += 1;
            if let Some(rec) = recorder.as_deref_mut() {
                if rec.every > 0 && step % rec.every == 0 {
                    rec.record(step, net);
                }
            }
        }
        let mean = total / batches as f64;
        epoch_losses.push(mean);
        last_data = Some(data);
        hook(epoch + 1, net)?;
        if mean < cfg.convergence_loss {
            converged = true;
            break;
        }
    }
    if let Some(rec) = recorder.as_deref_mut() {
        rec.record(step, net);
    }
    let data = last_data.expect("at least one epoch runs");
    let final_loss = net.loss(&data.samples, &data.labels)?;
    if !final_loss.is_finite() {
        return Err(Error::Diverged { step, loss: final_loss });
    }
    let train_accuracy = net.accuracy(&data.samples, &data.labels)?;
    Ok(TrainingSummary {
        final_loss,
        train_accuracy,
        steps: step,
        epochs: epoch_losses.len(),
        converged,
        epoch_losses,
    })
}
