//! Recurrent distribution regression: the input-hidden weights `U`, the
//! hidden-hidden weights `W` and the hidden bias parameters are shared across
//! time steps. The initial hidden state is uniform by default and the output
//! distribution is produced from the final hidden state through `V`.

use crate::dist::{BinnedDistribution, Support};
use crate::net::{propagate_node, NetError, NodeParams};

/// The four bias parameters shared by every node type.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BiasParams {
    pub b_q: f64,
    pub b_a: f64,
    pub lambda_q: f64,
    pub lambda_a: f64,
}

/// Full RDRN parameterization for `n` input distributions per time step and
/// `m` hidden nodes per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct RdrnParams {
    n: usize,
    m: usize,
    /// Input-hidden weights, row-major `m×n`: `u[k*n + i]`.
    pub u: Vec<f64>,
    /// Hidden-hidden weights, row-major `m×m`: `w[k*m + j]`.
    pub w: Vec<f64>,
    /// One bias quadruple per hidden node, shared across time.
    pub hidden_biases: Vec<BiasParams>,
    /// Output fan-in weights, length `m`.
    pub v: Vec<f64>,
    pub output_bias: BiasParams,
    support: Support,
}

/// Trainable parameter count: `n·m + m² + 4m + m + 4`.
pub fn rdrn_count_params(n: usize, m: usize) -> usize {
    n * m + m * m + 4 * m + m + 4
}

/// Forward cache: hidden states per time step plus the per-node
/// pre-normalization totals, used by the gradient computation.
#[derive(Debug, Clone)]
pub struct RdrnTrace {
    /// `hidden[t]` is the hidden state after step `t`; `hidden[0]` is the
    /// initial state.
    pub hidden: Vec<Vec<BinnedDistribution>>,
    /// Totals per step, `m` per entry.
    pub hidden_totals: Vec<Vec<f64>>,
    pub output_total: f64,
}

impl RdrnParams {
    pub fn zeros(n: usize, m: usize, support: Support) -> Self {
        RdrnParams {
            n,
            m,
            u: vec![0.0; n * m],
            w: vec![0.0; m * m],
            hidden_biases: vec![BiasParams::default(); m],
            v: vec![0.0; m],
            output_bias: BiasParams::default(),
            support,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn count_params(&self) -> usize {
        rdrn_count_params(self.n, self.m)
    }

    /// Layout: `U` row-major, `W` row-major, hidden biases
    /// `(b_q, b_a, λ_q, λ_a)` per node, `V`, output bias quadruple.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count_params());
        out.extend_from_slice(&self.u);
        out.extend_from_slice(&self.w);
        for b in &self.hidden_biases {
            out.extend_from_slice(&[b.b_q, b.b_a, b.lambda_q, b.lambda_a]);
        }
        out.extend_from_slice(&self.v);
        let b = &self.output_bias;
        out.extend_from_slice(&[b.b_q, b.b_a, b.lambda_q, b.lambda_a]);
        out
    }

    pub fn unflatten(&mut self, vals: &[f64]) -> Result<(), NetError> {
        if vals.len() != self.count_params() {
            return Err(NetError::ParamLenMismatch { got: vals.len(), want: self.count_params() });
        }
        let (n, m) = (self.n, self.m);
        let mut pos = 0;
        self.u.copy_from_slice(&vals[pos..pos + n * m]);
        pos += n * m;
        self.w.copy_from_slice(&vals[pos..pos + m * m]);
        pos += m * m;
        for b in self.hidden_biases.iter_mut() {
            *b = BiasParams {
                b_q: vals[pos],
                b_a: vals[pos + 1],
                lambda_q: vals[pos + 2],
                lambda_a: vals[pos + 3],
            };
            pos += 4;
        }
        self.v.copy_from_slice(&vals[pos..pos + m]);
        pos += m;
        self.output_bias = BiasParams {
            b_q: vals[pos],
            b_a: vals[pos + 1],
            lambda_q: vals[pos + 2],
            lambda_a: vals[pos + 3],
        };
        Ok(())
    }

    /// The equivalent feedforward node for hidden node `k`: incoming list is
    /// the `n` inputs of the current step followed by the `m` previous hidden
    /// states.
    pub(crate) fn hidden_node(&self, k: usize) -> NodeParams {
        let mut weights = Vec::with_capacity(self.n + self.m);
        weights.extend_from_slice(&self.u[k * self.n..(k + 1) * self.n]);
        weights.extend_from_slice(&self.w[k * self.m..(k + 1) * self.m]);
        let b = self.hidden_biases[k];
        NodeParams { weights, b_q: b.b_q, b_a: b.b_a, lambda_q: b.lambda_q, lambda_a: b.lambda_a }
    }

    pub(crate) fn output_node(&self) -> NodeParams {
        let b = self.output_bias;
        NodeParams {
            weights: self.v.clone(),
            b_q: b.b_q,
            b_a: b.b_a,
            lambda_q: b.lambda_q,
            lambda_a: b.lambda_a,
        }
    }

    /// The uniform initial hidden state.
    pub fn initial_hidden(&self) -> Vec<BinnedDistribution> {
        vec![BinnedDistribution::uniform(self.support); self.m]
    }
}

fn normalize_raw(
    raw: Vec<f64>,
    support: Support,
) -> Result<(BinnedDistribution, f64), NetError> {
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(NetError::NormalizationUnderflow(total));
    }
    let mass: Vec<f64> = raw.into_iter().map(|v| v / total).collect();
    let d = BinnedDistribution::normalize(mass, support)
        .map_err(|_| NetError::NormalizationUnderflow(total))?;
    Ok((d, total))
}

/// One recurrence step: each hidden node propagates from the current inputs
/// and the previous hidden state, then normalizes.
pub fn rdrn_step(
    params: &RdrnParams,
    inputs_t: &[BinnedDistribution],
    hidden_prev: &[BinnedDistribution],
) -> Result<Vec<BinnedDistribution>, NetError> {
    let (hidden, _) = rdrn_step_traced(params, inputs_t, hidden_prev)?;
    Ok(hidden)
}

pub(crate) fn rdrn_step_traced(
    params: &RdrnParams,
    inputs_t: &[BinnedDistribution],
    hidden_prev: &[BinnedDistribution],
) -> Result<(Vec<BinnedDistribution>, Vec<f64>), NetError> {
    if inputs_t.len() != params.n || hidden_prev.len() != params.m {
        return Err(NetError::FanInMismatch {
            want: params.n + params.m,
            got: inputs_t.len() + hidden_prev.len(),
        });
    }
    let incoming: Vec<BinnedDistribution> =
        inputs_t.iter().chain(hidden_prev.iter()).cloned().collect();
    let mut hidden = Vec::with_capacity(params.m);
    let mut totals = Vec::with_capacity(params.m);
    for k in 0..params.m {
        let node = params.hidden_node(k);
        let raw = propagate_node(&node, &incoming, params.support)?;
        let (d, total) = normalize_raw(raw, params.support)?;
        hidden.push(d);
        totals.push(total);
    }
    Ok((hidden, totals))
}

/// Runs the recurrence over a `T`-step sequence from the uniform initial
/// hidden state and produces the output distribution.
pub fn rdrn_forward(
    params: &RdrnParams,
    sequence: &[Vec<BinnedDistribution>],
) -> Result<BinnedDistribution, NetError> {
    let (out, _) = rdrn_forward_traced(params, sequence, None)?;
    Ok(out)
}

/// As [`rdrn_forward`], but keeps the trace and allows injecting a non-uniform
/// initial hidden state.
pub fn rdrn_forward_traced(
    params: &RdrnParams,
    sequence: &[Vec<BinnedDistribution>],
    initial_hidden: Option<Vec<BinnedDistribution>>,
) -> Result<(BinnedDistribution, RdrnTrace), NetError> {
    if sequence.is_empty() {
        return Err(NetError::BadSpec);
    }
    let h0 = initial_hidden.unwrap_or_else(|| params.initial_hidden());
    if h0.len() != params.m {
        return Err(NetError::FanInMismatch { want: params.m, got: h0.len() });
    }
    let mut hidden = vec![h0];
    let mut hidden_totals = Vec::with_capacity(sequence.len());
    for inputs_t in sequence {
        let (h, totals) = rdrn_step_traced(params, inputs_t, hidden.last().unwrap())?;
        hidden.push(h);
        hidden_totals.push(totals);
    }
    let raw = propagate_node(&params.output_node(), hidden.last().unwrap(), params.support)?;
    let (out, output_total) = normalize_raw(raw, params.support)?;
    Ok((out, RdrnTrace { hidden, hidden_totals, output_total }))
}
