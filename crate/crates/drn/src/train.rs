//! Loss, exact reverse-mode gradients, parameter initialization and the
//! optimization loop.
//!
//! Gradients are hand-derived through the whole propagation path
//! (transformation kernels, bias vectors, Hadamard products, per-node
//! normalization and the Jensen-Shannon cost) and checked against central
//! finite differences. Training uses full-batch first-order updates with
//! adaptive-moment smoothing and validation-based early stopping; the best
//! validation snapshot is returned, not the last epoch.

use crate::data::Dataset;
use crate::dist::{jsd, BinnedDistribution, DistError, Support};
use crate::net::{node_backward, DrnNetwork, NetError, NetworkSpec};
use crate::rdrn::{rdrn_forward_traced, RdrnParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("model expects {want} input distributions per sample, dataset provides {got}")]
    ShapeMismatch { want: usize, got: usize },
    #[error("gradient became non-finite{0}")]
    NonFiniteGradient(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Anything trainable by [`train`]: exposes its parameters as a flat vector
/// and computes its per-sample training loss with gradient.
pub trait Model: Clone {
    /// The prediction as a normalized distribution, from `T×K` inputs.
    fn predict(
        &self,
        inputs: &[Vec<BinnedDistribution>],
    ) -> Result<BinnedDistribution, TrainError>;
    fn num_params(&self) -> usize;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, v: &[f64]) -> Result<(), TrainError>;
    /// Training loss of one sample (JSD for distribution networks, MSE for
    /// the MLP baseline).
    fn sample_loss(&self, sample: &crate::data::SequenceSample) -> Result<f64, TrainError>;
    /// As [`sample_loss`](Model::sample_loss), accumulating `d loss / d θ`
    /// into `grad` (same layout as [`params`](Model::params)).
    fn sample_loss_grad(
        &self,
        sample: &crate::data::SequenceSample,
        grad: &mut [f64],
    ) -> Result<f64, TrainError>;
}

/// `d JSD(p, t) / d p_k = ½ ln(p_k / m_k)` with `m = (p + t)/2`.
/// Defined whenever `p` is strictly positive, which holds for every network
/// output here.
fn jsd_grad(prediction: &[f64], target: &[f64]) -> Vec<f64> {
    prediction
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let m = 0.5 * (p + t);
            0.5 * (p / m).ln()
        })
        .collect()
}

fn flatten_inputs(inputs: &[Vec<BinnedDistribution>]) -> Vec<BinnedDistribution> {
    inputs.iter().flat_map(|step| step.iter().cloned()).collect()
}

impl Model for DrnNetwork {
    fn predict(
        &self,
        inputs: &[Vec<BinnedDistribution>],
    ) -> Result<BinnedDistribution, TrainError> {
        let flat = flatten_inputs(inputs);
        let (out, _) = self.forward(&flat)?;
        Ok(out)
    }

    fn num_params(&self) -> usize {
        self.count_params()
    }

    fn params(&self) -> Vec<f64> {
        self.flatten()
    }

    fn set_params(&mut self, v: &[f64]) -> Result<(), TrainError> {
        Ok(self.unflatten(v)?)
    }

    fn sample_loss(&self, sample: &crate::data::SequenceSample) -> Result<f64, TrainError> {
        let out = self.predict(&sample.inputs)?;
        Ok(jsd(&out, &sample.target)?)
    }

    fn sample_loss_grad(
        &self,
        sample: &crate::data::SequenceSample,
        grad: &mut [f64],
    ) -> Result<f64, TrainError> {
        let flat = flatten_inputs(&sample.inputs);
        let (out, trace) = self.forward(&flat)?;
        let loss = jsd(&out, &sample.target)?;
        let g_out = jsd_grad(out.mass(), sample.target.mass());

        let ls = self.spec().layer_sizes().to_vec();
        let support = self.support();
        let q = support.q();
        // per-layer activation gradients, same shape as trace.activations
        let mut act_grads: Vec<Vec<Vec<f64>>> =
            ls.iter().map(|&n| vec![vec![0.0; q]; n]).collect();
        *act_grads.last_mut().unwrap().first_mut().unwrap() = g_out;

        // node parameter offsets in the flat layout
        let mut offsets = Vec::with_capacity(self.nodes().len());
        let mut pos = 0;
        for node in self.nodes() {
            offsets.push(pos);
            pos += node.weights.len() + 4;
        }
        // first global node index of each non-input layer
        let mut layer_node_start = vec![0usize; ls.len()];
        for l in 2..ls.len() {
            layer_node_start[l] = layer_node_start[l - 1] + ls[l - 1];
        }

        for l in (1..ls.len()).rev() {
            let prev_acts = &trace.activations[l - 1];
            for k in 0..ls[l] {
                let g = &act_grads[l][k];
                if g.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let node_id = layer_node_start[l] + k;
                let node = &self.nodes()[node_id];
                let ng = node_backward(
                    node,
                    prev_acts,
                    support,
                    trace.activations[l][k].mass(),
                    trace.pre_normalization_totals[node_id],
                    g,
                );
                let off = offsets[node_id];
                let n_in = node.weights.len();
                for (i, dw) in ng.d_weights.iter().enumerate() {
                    grad[off + i] += dw;
                }
                grad[off + n_in] += ng.d_b_q;
                grad[off + n_in + 1] += ng.d_b_a;
                grad[off + n_in + 2] += ng.d_lambda_q;
                grad[off + n_in + 3] += ng.d_lambda_a;
                if l > 1 {
                    for (i, d_in) in ng.d_incoming.iter().enumerate() {
                        for (a, v) in act_grads[l - 1][i].iter_mut().zip(d_in) {
                            *a += v;
                        }
                    }
                }
            }
        }
        Ok(loss)
    }
}

impl Model for RdrnParams {
    fn predict(
        &self,
        inputs: &[Vec<BinnedDistribution>],
    ) -> Result<BinnedDistribution, TrainError> {
        Ok(crate::rdrn::rdrn_forward(self, inputs)?)
    }

    fn num_params(&self) -> usize {
        self.count_params()
    }

    fn params(&self) -> Vec<f64> {
        self.flatten()
    }

    fn set_params(&mut self, v: &[f64]) -> Result<(), TrainError> {
        Ok(self.unflatten(v)?)
    }

    fn sample_loss(&self, sample: &crate::data::SequenceSample) -> Result<f64, TrainError> {
        let out = self.predict(&sample.inputs)?;
        Ok(jsd(&out, &sample.target)?)
    }

    fn sample_loss_grad(
        &self,
        sample: &crate::data::SequenceSample,
        grad: &mut [f64],
    ) -> Result<f64, TrainError> {
        let (out, trace) = rdrn_forward_traced(self, &sample.inputs, None)?;
        let loss = jsd(&out, &sample.target)?;
        let g_out = jsd_grad(out.mass(), sample.target.mass());
        let (n, m) = (self.n(), self.m());
        let support = self.support();
        let t_steps = sample.inputs.len();

        // output node: incoming is the final hidden state
        let out_node = self.output_node();
        let ng = node_backward(
            &out_node,
            &trace.hidden[t_steps],
            support,
            out.mass(),
            trace.output_total,
            &g_out,
        );
        let off_u = 0;
        let off_w = n * m;
        let off_hb = off_w + m * m;
        let off_v = off_hb + 4 * m;
        let off_ob = off_v + m;
        for (j, dv) in ng.d_weights.iter().enumerate() {
            grad[off_v + j] += dv;
        }
        grad[off_ob] += ng.d_b_q;
        grad[off_ob + 1] += ng.d_b_a;
        grad[off_ob + 2] += ng.d_lambda_q;
        grad[off_ob + 3] += ng.d_lambda_a;
        let mut g_hidden: Vec<Vec<f64>> = ng.d_incoming;

        // backpropagation through time over the shared-weight steps
        for t in (0..t_steps).rev() {
            let incoming: Vec<BinnedDistribution> = sample.inputs[t]
                .iter()
                .chain(trace.hidden[t].iter())
                .cloned()
                .collect();
            let mut g_prev = vec![vec![0.0; support.q()]; m];
            for k in 0..m {
                let g = &g_hidden[k];
                if g.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let node = self.hidden_node(k);
                let ng = node_backward(
                    &node,
                    &incoming,
                    support,
                    trace.hidden[t + 1][k].mass(),
                    trace.hidden_totals[t][k],
                    g,
                );
                for i in 0..n {
                    grad[off_u + k * n + i] += ng.d_weights[i];
                }
                for j in 0..m {
                    grad[off_w + k * m + j] += ng.d_weights[n + j];
                }
                let hb = off_hb + 4 * k;
                grad[hb] += ng.d_b_q;
                grad[hb + 1] += ng.d_b_a;
                grad[hb + 2] += ng.d_lambda_q;
                grad[hb + 3] += ng.d_lambda_a;
                // inputs carry no gradient; previous hidden state does
                for j in 0..m {
                    for (a, v) in g_prev[j].iter_mut().zip(&ng.d_incoming[n + j]) {
                        *a += v;
                    }
                }
            }
            g_hidden = g_prev;
        }
        Ok(loss)
    }
}

/// Mean Jensen-Shannon divergence between predictions and targets.
pub fn dataset_loss<M: Model>(model: &M, data: &Dataset) -> Result<f64, TrainError> {
    if data.samples.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut acc = 0.0;
    for s in &data.samples {
        acc += jsd(&model.predict(&s.inputs)?, &s.target)?;
    }
    Ok(acc / data.samples.len() as f64)
}

/// Mean model training loss over the batch (gradient-free path).
pub fn batch_loss<M: Model>(model: &M, data: &Dataset) -> Result<f64, TrainError> {
    if data.samples.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut acc = 0.0;
    for s in &data.samples {
        acc += model.sample_loss(s)?;
    }
    Ok(acc / data.samples.len() as f64)
}

/// Exact reverse-mode gradient of the mean training loss over `batch`.
pub fn gradient<M: Model>(model: &M, batch: &Dataset) -> Result<Vec<f64>, TrainError> {
    let (grad, _) = gradient_with_loss(model, batch)?;
    Ok(grad)
}

fn gradient_with_loss<M: Model>(
    model: &M,
    batch: &Dataset,
) -> Result<(Vec<f64>, f64), TrainError> {
    if batch.samples.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut grad = vec![0.0; model.num_params()];
    let mut loss = 0.0;
    for s in &batch.samples {
        loss += model.sample_loss_grad(s, &mut grad)?;
    }
    let scale = 1.0 / batch.samples.len() as f64;
    for g in grad.iter_mut() {
        *g *= scale;
    }
    Ok((grad, loss * scale))
}

/// Central-difference gradient oracle:
/// `(L(θ + h·e_i) − L(θ − h·e_i)) / 2h` per parameter.
pub fn finite_diff_gradient<M: Model>(
    model: &M,
    batch: &Dataset,
    h: f64,
) -> Result<Vec<f64>, TrainError> {
    let theta = model.params();
    let mut probe = model.clone();
    let mut grad = Vec::with_capacity(theta.len());
    let mut shifted = theta.clone();
    for i in 0..theta.len() {
        shifted[i] = theta[i] + h;
        probe.set_params(&shifted)?;
        let up = batch_loss(&probe, batch)?;
        shifted[i] = theta[i] - h;
        probe.set_params(&shifted)?;
        let down = batch_loss(&probe, batch)?;
        shifted[i] = theta[i];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Optimizer and stopping hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Validation evaluations without improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub weight_init_range: (f64, f64),
    pub bias_mag_init_range: (f64, f64),
    /// `None` trains full-batch; `Some(b)` uses shuffled mini-batches.
    pub batch: Option<usize>,
    /// Evaluate validation loss every this many epochs.
    pub val_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            max_epochs: 5000,
            patience: 50,
            seed: 0,
            weight_init_range: (0.0, 1.0),
            bias_mag_init_range: (0.0, 1.0),
            batch: None,
            val_every: 1,
        }
    }
}

/// One line of the loss history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Outcome of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub param_count: usize,
    pub wall_clock_secs: f64,
}

impl TrainReport {
    /// Writes the loss history as `epoch,train_loss,val_loss` CSV.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "epoch,train_loss,val_loss")?;
        for r in &self.history {
            writeln!(out, "{},{},{}", r.epoch, r.train_loss, r.val_loss)?;
        }
        Ok(())
    }
}

fn uniform<R: Rng>(rng: &mut R, range: (f64, f64)) -> f64 {
    range.0 + rng.gen::<f64>() * (range.1 - range.0)
}

/// Uniformly initialized DRN: weights from `weight_init_range`, bias
/// magnitudes from `bias_mag_init_range`, bias positions from the support.
pub fn init_drn(spec: NetworkSpec, support: Support, config: &TrainConfig) -> DrnNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = DrnNetwork::zeros(spec, support);
    let mut params = Vec::with_capacity(net.count_params());
    for node in net.nodes() {
        for _ in 0..node.weights.len() {
            params.push(uniform(&mut rng, config.weight_init_range));
        }
        params.push(uniform(&mut rng, config.bias_mag_init_range));
        params.push(uniform(&mut rng, config.bias_mag_init_range));
        params.push(uniform(&mut rng, (support.lower(), support.upper())));
        params.push(uniform(&mut rng, (support.lower(), support.upper())));
    }
    net.unflatten(&params).expect("layout matches");
    net
}

/// Uniformly initialized RDRN with the same parameter conventions.
pub fn init_rdrn(n: usize, m: usize, support: Support, config: &TrainConfig) -> RdrnParams {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = RdrnParams::zeros(n, m, support);
    let mut vals = Vec::with_capacity(params.count_params());
    for _ in 0..(n * m + m * m) {
        vals.push(uniform(&mut rng, config.weight_init_range));
    }
    for _ in 0..m {
        vals.push(uniform(&mut rng, config.bias_mag_init_range));
        vals.push(uniform(&mut rng, config.bias_mag_init_range));
        vals.push(uniform(&mut rng, (support.lower(), support.upper())));
        vals.push(uniform(&mut rng, (support.lower(), support.upper())));
    }
    for _ in 0..m {
        vals.push(uniform(&mut rng, config.weight_init_range));
    }
    vals.push(uniform(&mut rng, config.bias_mag_init_range));
    vals.push(uniform(&mut rng, config.bias_mag_init_range));
    vals.push(uniform(&mut rng, (support.lower(), support.upper())));
    vals.push(uniform(&mut rng, (support.lower(), support.upper())));
    params.unflatten(&vals).expect("layout matches");
    params
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0, lr }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - Self::BETA1.powi(self.t as i32);
        let bc2 = 1.0 - Self::BETA2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= self.lr * mhat / (vhat.sqrt() + Self::EPS);
        }
    }
}

fn subset(data: &Dataset, indices: &[usize]) -> Dataset {
    Dataset {
        samples: indices.iter().map(|&i| data.samples[i].clone()).collect(),
        meta: data.meta.clone(),
    }
}

/// Trains `model` with adaptive-moment updates and early stopping; returns
/// the best-validation snapshot. A non-finite gradient triggers one automatic
/// restart with a 10× smaller learning rate before aborting.
pub fn train<M: Model>(
    model: M,
    train_data: &Dataset,
    val_data: &Dataset,
    config: &TrainConfig,
) -> Result<(M, TrainReport), TrainError> {
    if train_data.samples.is_empty() || val_data.samples.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    match train_once(model.clone(), train_data, val_data, config, config.learning_rate) {
        Err(TrainError::NonFiniteGradient(_)) => {
            let reduced = config.learning_rate / 10.0;
            train_once(model, train_data, val_data, config, reduced).map_err(|e| match e {
                TrainError::NonFiniteGradient(_) => TrainError::NonFiniteGradient(format!(
                    " even after reducing the learning rate to {reduced}"
                )),
                other => other,
            })
        }
        other => other,
    }
}

fn train_once<M: Model>(
    mut model: M,
    train_data: &Dataset,
    val_data: &Dataset,
    config: &TrainConfig,
    lr: f64,
) -> Result<(M, TrainReport), TrainError> {
    let start = Instant::now();
    let n_params = model.num_params();
    if config.max_epochs == 0 {
        return Ok((
            model,
            TrainReport {
                history: Vec::new(),
                best_epoch: 0,
                best_val_loss: f64::INFINITY,
                param_count: n_params,
                wall_clock_secs: start.elapsed().as_secs_f64(),
            },
        ));
    }
    let mut params = model.params();
    let mut adam = Adam::new(n_params, lr);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed));
    let mut history = Vec::new();
    let mut best_params = params.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut evals_since_best = 0usize;
    let mut last_val = f64::NAN;
    let n_train = train_data.samples.len();

    for epoch in 1..=config.max_epochs {
        let train_loss = match config.batch {
            None => {
                let (grad, loss) = gradient_with_loss(&model, train_data)?;
                if grad.iter().any(|g| !g.is_finite()) {
                    return Err(TrainError::NonFiniteGradient(String::new()));
                }
                adam.step(&mut params, &grad);
                model.set_params(&params)?;
                loss
            }
            Some(batch_size) => {
                let mut indices: Vec<usize> = (0..n_train).collect();
                // Fisher-Yates with the run's own stream
                for i in (1..n_train).rev() {
                    let j = rng.gen_range(0..=i);
                    indices.swap(i, j);
                }
                let mut loss_acc = 0.0;
                let mut batches = 0;
                for chunk in indices.chunks(batch_size.max(1)) {
                    let batch = subset(train_data, chunk);
                    let (grad, loss) = gradient_with_loss(&model, &batch)?;
                    if grad.iter().any(|g| !g.is_finite()) {
                        return Err(TrainError::NonFiniteGradient(String::new()));
                    }
                    adam.step(&mut params, &grad);
                    model.set_params(&params)?;
                    loss_acc += loss;
                    batches += 1;
                }
                loss_acc / batches as f64
            }
        };
        if !train_loss.is_finite() {
            return Err(TrainError::NonFiniteGradient(String::new()));
        }
        if epoch % config.val_every.max(1) == 0 || epoch == config.max_epochs {
            last_val = batch_loss(&model, val_data)?;
            if last_val < best_val {
                best_val = last_val;
                best_epoch = epoch;
                best_params.copy_from_slice(&params);
                evals_since_best = 0;
            } else {
                evals_since_best += 1;
            }
        }
        history.push(EpochRecord { epoch, train_loss, val_loss: last_val });
        if evals_since_best >= config.patience {
            break;
        }
    }
    model.set_params(&best_params)?;
    Ok((
        model,
        TrainReport {
            history,
            best_epoch,
            best_val_loss: best_val,
            param_count: n_params,
            wall_clock_secs: start.elapsed().as_secs_f64(),
        },
    ))
}

/// Mean and standard error of a metric over the dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub std_error: f64,
}

fn summarize(values: &[f64]) -> MetricSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    MetricSummary { mean, std_error: (var / n).sqrt() }
}

/// Test-set evaluation of any model: JSD and L2 as mean ± standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalMetrics {
    pub jsd: MetricSummary,
    pub l2: MetricSummary,
}

pub fn evaluate<M: Model>(model: &M, data: &Dataset) -> Result<EvalMetrics, TrainError> {
    if data.samples.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut jsds = Vec::with_capacity(data.samples.len());
    let mut l2s = Vec::with_capacity(data.samples.len());
    for s in &data.samples {
        let out = model.predict(&s.inputs)?;
        jsds.push(jsd(&out, &s.target)?);
        l2s.push(crate::dist::l2_distance(&out, &s.target)?);
    }
    Ok(EvalMetrics { jsd: summarize(&jsds), l2: summarize(&l2s) })
}
