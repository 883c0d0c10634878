//! The distribution regression network: Boltzmann-energy propagation of
//! binned distributions through fully-connected layers.
//!
//! Propagation is implemented in the separable form
//! `B_0 ∘ (T_{w_1}·p_1) ∘ … ∘ (T_{w_n}·p_n)`: one symmetric transformation
//! matrix per connection, combined by Hadamard products and scaled by the
//! node's bias vector. Because the bin grid is uniform, `T_w` is Toeplitz and
//! each matrix-vector product is evaluated as a correlation with a
//! length-`q` kernel, so the `q×q` matrix is never materialized on the hot
//! path. The direct marginalization of the underlying energy model exists as
//! [`brute_force_node`], used only as a test oracle, together with
//! [`cross_term_expansion`] and [`linearized_node_output`].

use crate::dist::{BinnedDistribution, Support};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("node has fan-in {want} but received {got} incoming distributions")]
    FanInMismatch { want: usize, got: usize },
    #[error("incoming distribution support does not match the network support")]
    SupportMismatch,
    #[error("instance too large for the exhaustive oracle (fan-in {fan_in}, q {q})")]
    InstanceTooLarge { fan_in: usize, q: usize },
    #[error("unnormalized node total is not a positive finite number: {0}")]
    NormalizationUnderflow(f64),
    #[error("network spec needs at least an input and an output layer")]
    BadSpec,
    #[error("parameter vector has length {got}, network needs {want}")]
    ParamLenMismatch { got: usize, want: usize },
    #[error("input layer has {want} nodes but received {got} distributions")]
    InputArity { want: usize, got: usize },
}

/// One node's incoming connection weights plus its four bias parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeParams {
    /// Connection weights, one per incoming node.
    pub weights: Vec<f64>,
    /// Quadratic bias magnitude.
    pub b_q: f64,
    /// Absolute bias magnitude.
    pub b_a: f64,
    /// Position of the quadratic bias, in support units.
    pub lambda_q: f64,
    /// Position of the absolute bias, in support units.
    pub lambda_a: f64,
}

impl NodeParams {
    pub fn zeros(fan_in: usize) -> Self {
        NodeParams { weights: vec![0.0; fan_in], b_q: 0.0, b_a: 0.0, lambda_q: 0.0, lambda_a: 0.0 }
    }
}

/// Layer sizes `[n_0, n_1, …, n_out]` of a feedforward network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    layer_sizes: Vec<usize>,
}

impl NetworkSpec {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self, NetError> {
        if layer_sizes.len() < 2 || layer_sizes.iter().any(|&n| n == 0) {
            return Err(NetError::BadSpec);
        }
        Ok(NetworkSpec { layer_sizes })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Total number of non-input nodes, in layer-major order.
    pub fn n_nodes(&self) -> usize {
        self.layer_sizes[1..].iter().sum()
    }

    /// Total trainable parameters: each node has `fan_in` weights plus the
    /// four bias parameters.
    pub fn count_params(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[1] * (w[0] + 4))
            .sum()
    }
}

/// Correlation kernel of the transformation matrix: `k[d] = exp(-w (d/q)^2)`
/// where `d` is the bin-index offset. `(s_a - s_b)/Δ = (a - b)/q` on the
/// uniform grid, so the support drops out.
pub(crate) fn kernel(w: f64, q: usize) -> Vec<f64> {
    let inv_q = 1.0 / q as f64;
    (0..q)
        .map(|d| {
            let z = d as f64 * inv_q;
            (-w * z * z).exp()
        })
        .collect()
}

/// `y[a] = Σ_b k[|a-b|] x[b]`, the Toeplitz matrix-vector product.
pub(crate) fn kernel_matvec(k: &[f64], x: &[f64]) -> Vec<f64> {
    let q = x.len();
    let mut y = vec![0.0; q];
    for a in 0..q {
        let mut acc = 0.0;
        for b in 0..a {
            acc += k[a - b] * x[b];
        }
        for b in a..q {
            acc += k[b - a] * x[b];
        }
        y[a] = acc;
    }
    y
}

/// The full `q×q` transformation matrix `exp(-w ((s_a - s_b)/Δ)^2)`.
/// Symmetric with unit diagonal; all-ones at `w = 0`, identity as `w → ∞`.
pub fn transformation_matrix(w: f64, support: Support) -> Vec<Vec<f64>> {
    let q = support.q();
    let k = kernel(w, q);
    (0..q)
        .map(|a| (0..q).map(|b| k[a.abs_diff(b)]).collect())
        .collect()
}

/// The node's multiplicative bias vector
/// `exp(-b_q ((s_i - λ_q)/Δ)^2 - b_a |s_i - λ_a|/Δ)`.
pub fn bias_vector(node: &NodeParams, support: Support) -> Vec<f64> {
    let delta = support.delta();
    support
        .bin_centers()
        .iter()
        .map(|&s| {
            let zq = (s - node.lambda_q) / delta;
            let za = (s - node.lambda_a) / delta;
            (-node.b_q * zq * zq - node.b_a * za.abs()).exp()
        })
        .collect()
}

fn check_incoming(
    node: &NodeParams,
    incoming: &[BinnedDistribution],
    support: Support,
) -> Result<(), NetError> {
    if incoming.len() != node.weights.len() {
        return Err(NetError::FanInMismatch { want: node.weights.len(), got: incoming.len() });
    }
    if incoming.iter().any(|p| p.support() != support) {
        return Err(NetError::SupportMismatch);
    }
    Ok(())
}

/// Unnormalized node activation `B_0 ∘ (T_{w_1}·p_1) ∘ … ∘ (T_{w_n}·p_n)`.
pub fn propagate_node(
    node: &NodeParams,
    incoming: &[BinnedDistribution],
    support: Support,
) -> Result<Vec<f64>, NetError> {
    check_incoming(node, incoming, support)?;
    let q = support.q();
    let mut out = bias_vector(node, support);
    for (w, p) in node.weights.iter().zip(incoming) {
        let k = kernel(*w, q);
        let y = kernel_matvec(&k, p.mass());
        for (o, v) in out.iter_mut().zip(y) {
            *o *= v;
        }
    }
    Ok(out)
}

/// Direct nested summation of the discretized marginalization: for every
/// output bin, sums `exp(-E) · Π p_i` over all `q^n` incoming index
/// combinations. Exponential cost; guarded to fan-in ≤ 4 and q ≤ 16.
pub fn brute_force_node(
    node: &NodeParams,
    incoming: &[BinnedDistribution],
    support: Support,
) -> Result<Vec<f64>, NetError> {
    check_incoming(node, incoming, support)?;
    let n = incoming.len();
    let q = support.q();
    if n > 4 || q > 16 {
        return Err(NetError::InstanceTooLarge { fan_in: n, q });
    }
    let centers = support.bin_centers();
    let delta = support.delta();
    let bias = bias_vector(node, support);
    let mut out = vec![0.0; q];
    let mut idx = vec![0usize; n];
    loop {
        let mut prob = 1.0;
        for (i, &j) in idx.iter().enumerate() {
            prob *= incoming[i].mass()[j];
        }
        if prob != 0.0 {
            for (k, o) in out.iter_mut().enumerate() {
                let mut energy = 0.0;
                for (i, &j) in idx.iter().enumerate() {
                    let z = (centers[k] - centers[j]) / delta;
                    energy += node.weights[i] * z * z;
                }
                *o += (-energy).exp() * prob;
            }
        }
        // advance the odometer over q^n index combinations
        let mut pos = 0;
        loop {
            if pos == n {
                let result = out.iter().zip(&bias).map(|(o, b)| o * b).collect();
                return Ok(result);
            }
            idx[pos] += 1;
            if idx[pos] < q {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Term-by-term evaluation of the n-th order cross-term expansion: the
/// coefficient tensor `(B_0)_i (T_{w_1})_{i,j_1} … (T_{w_n})_{i,j_n}` against
/// the cross terms `(p_1)_{j_1} … (p_n)_{j_n}`. Guarded to fan-in ≤ 3, q ≤ 8.
pub fn cross_term_expansion(
    node: &NodeParams,
    incoming: &[BinnedDistribution],
    support: Support,
) -> Result<Vec<f64>, NetError> {
    check_incoming(node, incoming, support)?;
    let n = incoming.len();
    let q = support.q();
    if n > 3 || q > 8 {
        return Err(NetError::InstanceTooLarge { fan_in: n, q });
    }
    let mats: Vec<Vec<Vec<f64>>> =
        node.weights.iter().map(|&w| transformation_matrix(w, support)).collect();
    let bias = bias_vector(node, support);
    let mut out = vec![0.0; q];
    let mut idx = vec![0usize; n];
    loop {
        let mut cross = 1.0;
        for (i, &j) in idx.iter().enumerate() {
            cross *= incoming[i].mass()[j];
        }
        for (i_out, o) in out.iter_mut().enumerate() {
            let mut coeff = bias[i_out];
            for (i, &j) in idx.iter().enumerate() {
                coeff *= mats[i][i_out][j];
            }
            *o += coeff * cross;
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(out);
            }
            idx[pos] += 1;
            if idx[pos] < q {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// First-order small-weight approximation of the normalized node output:
/// `T_w ≈ E + ℰ(w)` with `ℰ` linear in `w` (zero diagonal), giving a fraction
/// of two linear combinations of the incoming activations.
pub fn linearized_node_output(
    node: &NodeParams,
    incoming: &[BinnedDistribution],
    support: Support,
) -> Result<BinnedDistribution, NetError> {
    check_incoming(node, incoming, support)?;
    let q = support.q();
    let bias = bias_vector(node, support);
    let mut numer = bias.clone();
    for (&w, p) in node.weights.iter().zip(incoming) {
        // (ℰ(w)·p)_a = Σ_b -w ((a-b)/q)^2 p_b, diagonal term vanishes anyway
        let inv_q2 = 1.0 / (q as f64 * q as f64);
        for a in 0..q {
            let mut acc = 0.0;
            for (b, &m) in p.mass().iter().enumerate() {
                let d = a.abs_diff(b) as f64;
                acc += -w * d * d * inv_q2 * m;
            }
            numer[a] += bias[a] * acc;
        }
    }
    BinnedDistribution::normalize(numer, support)
        .map_err(|_| NetError::NormalizationUnderflow(f64::NAN))
}

/// A fully parameterized feedforward network over one shared [`Support`].
#[derive(Debug, Clone, PartialEq)]
pub struct DrnNetwork {
    spec: NetworkSpec,
    /// One entry per non-input node, layer-major.
    nodes: Vec<NodeParams>,
    support: Support,
}

/// Per-node activations cached by [`DrnNetwork::forward`]; consumed by the
/// gradient computation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Layer activations including the input layer.
    pub activations: Vec<Vec<BinnedDistribution>>,
    /// Pre-normalization total per non-input node, layer-major.
    pub pre_normalization_totals: Vec<f64>,
}

impl DrnNetwork {
    /// Builds a network with all parameters zero.
    pub fn zeros(spec: NetworkSpec, support: Support) -> Self {
        let mut nodes = Vec::with_capacity(spec.n_nodes());
        for w in spec.layer_sizes().windows(2) {
            for _ in 0..w[1] {
                nodes.push(NodeParams::zeros(w[0]));
            }
        }
        DrnNetwork { spec, nodes, support }
    }

    pub fn from_nodes(
        spec: NetworkSpec,
        nodes: Vec<NodeParams>,
        support: Support,
    ) -> Result<Self, NetError> {
        let mut net = DrnNetwork::zeros(spec, support);
        if nodes.len() != net.nodes.len()
            || nodes
                .iter()
                .zip(&net.nodes)
                .any(|(a, b)| a.weights.len() != b.weights.len())
        {
            return Err(NetError::BadSpec);
        }
        net.nodes = nodes;
        Ok(net)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn nodes(&self) -> &[NodeParams] {
        &self.nodes
    }

    pub fn nodes_mut(&mut self) -> &mut [NodeParams] {
        &mut self.nodes
    }

    pub fn count_params(&self) -> usize {
        self.spec.count_params()
    }

    /// Flattens all parameters into one vector: per node (layer-major) the
    /// weights followed by `b_q, b_a, λ_q, λ_a`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.count_params());
        for node in &self.nodes {
            v.extend_from_slice(&node.weights);
            v.extend_from_slice(&[node.b_q, node.b_a, node.lambda_q, node.lambda_a]);
        }
        v
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn unflatten(&mut self, v: &[f64]) -> Result<(), NetError> {
        if v.len() != self.count_params() {
            return Err(NetError::ParamLenMismatch { got: v.len(), want: self.count_params() });
        }
        let mut pos = 0;
        for node in &mut self.nodes {
            let n = node.weights.len();
            node.weights.copy_from_slice(&v[pos..pos + n]);
            node.b_q = v[pos + n];
            node.b_a = v[pos + n + 1];
            node.lambda_q = v[pos + n + 2];
            node.lambda_a = v[pos + n + 3];
            pos += n + 4;
        }
        Ok(())
    }

    /// Layer-wise forward pass; every node is normalized immediately after
    /// propagation. Returns the first output node's activation and the trace.
    pub fn forward(
        &self,
        inputs: &[BinnedDistribution],
    ) -> Result<(BinnedDistribution, ForwardTrace), NetError> {
        if inputs.len() != self.spec.n_inputs() {
            return Err(NetError::InputArity { want: self.spec.n_inputs(), got: inputs.len() });
        }
        if inputs.iter().any(|p| p.support() != self.support) {
            return Err(NetError::SupportMismatch);
        }
        let mut activations: Vec<Vec<BinnedDistribution>> = vec![inputs.to_vec()];
        let mut totals = Vec::with_capacity(self.spec.n_nodes());
        let mut node_iter = self.nodes.iter();
        for layer in 1..self.spec.layer_sizes().len() {
            let prev = &activations[layer - 1];
            let mut acts = Vec::with_capacity(self.spec.layer_sizes()[layer]);
            for _ in 0..self.spec.layer_sizes()[layer] {
                let node = node_iter.next().expect("node count matches spec");
                let raw = propagate_node(node, prev, self.support)?;
                let total: f64 = raw.iter().sum();
                if !(total > 0.0) || !total.is_finite() {
                    return Err(NetError::NormalizationUnderflow(total));
                }
                totals.push(total);
                let mass = raw.into_iter().map(|v| v / total).collect();
                acts.push(
                    BinnedDistribution::normalize(mass, self.support)
                        .map_err(|_| NetError::NormalizationUnderflow(total))?,
                );
            }
            activations.push(acts);
        }
        let output = activations.last().unwrap()[0].clone();
        Ok((output, ForwardTrace { activations, pre_normalization_totals: totals }))
    }

    /// Reference forward pass that skips per-node sum-normalization: each
    /// node is only rescaled by its sup-norm (a pure scaling, tracked in log
    /// space for stability) and the sum-normalization happens once at the
    /// output. Used to verify normalization invariance.
    pub fn forward_output_normalized_only(
        &self,
        inputs: &[BinnedDistribution],
    ) -> Result<BinnedDistribution, NetError> {
        if inputs.len() != self.spec.n_inputs() {
            return Err(NetError::InputArity { want: self.spec.n_inputs(), got: inputs.len() });
        }
        let q = self.support.q();
        // (vector scaled to sup-norm 1, accumulated log scale)
        let mut prev: Vec<(Vec<f64>, f64)> =
            inputs.iter().map(|p| (p.mass().to_vec(), 0.0)).collect();
        let mut node_iter = self.nodes.iter();
        for layer in 1..self.spec.layer_sizes().len() {
            let mut next = Vec::with_capacity(self.spec.layer_sizes()[layer]);
            for _ in 0..self.spec.layer_sizes()[layer] {
                let node = node_iter.next().unwrap();
                let mut out = bias_vector(node, self.support);
                let mut log_scale = 0.0;
                for (w, (vec, ls)) in node.weights.iter().zip(&prev) {
                    let k = kernel(*w, q);
                    let y = kernel_matvec(&k, vec);
                    for (o, v) in out.iter_mut().zip(y) {
                        *o *= v;
                    }
                    log_scale += ls;
                }
                let sup = out.iter().cloned().fold(0.0, f64::max);
                if !(sup > 0.0) || !sup.is_finite() {
                    return Err(NetError::NormalizationUnderflow(sup));
                }
                for o in out.iter_mut() {
                    *o /= sup;
                }
                next.push((out, log_scale + sup.ln()));
            }
            prev = next;
        }
        BinnedDistribution::normalize(prev[0].0.clone(), self.support)
            .map_err(|_| NetError::NormalizationUnderflow(0.0))
    }
}

/// Gradients produced by [`node_backward`].
#[derive(Debug, Clone)]
pub(crate) struct NodeGrads {
    pub d_weights: Vec<f64>,
    pub d_b_q: f64,
    pub d_b_a: f64,
    pub d_lambda_q: f64,
    pub d_lambda_a: f64,
    /// Gradient with respect to each incoming mass vector.
    pub d_incoming: Vec<Vec<f64>>,
}

/// Reverse-mode step through one node: given the normalized output `p_out`,
/// its pre-normalization total, and the loss gradient `g_out` with respect to
/// `p_out`, produces gradients for the node parameters and the incoming
/// mass vectors. The transformed vectors `T_w·p` are recomputed here rather
/// than stored in the trace.
pub(crate) fn node_backward(
    node: &NodeParams,
    incoming: &[BinnedDistribution],
    support: Support,
    p_out: &[f64],
    total: f64,
    g_out: &[f64],
) -> NodeGrads {
    let q = support.q();
    let n = incoming.len();
    let delta = support.delta();
    let centers = support.bin_centers();
    let bias = bias_vector(node, support);
    let kernels: Vec<Vec<f64>> = node.weights.iter().map(|&w| kernel(w, q)).collect();
    let ys: Vec<Vec<f64>> =
        kernels.iter().zip(incoming).map(|(k, p)| kernel_matvec(k, p.mass())).collect();

    // d loss / d unnormalized entry: (g_j - g·p) / total
    let gdotp: f64 = g_out.iter().zip(p_out).map(|(g, p)| g * p).sum();
    let g_u: Vec<f64> = g_out.iter().map(|g| (g - gdotp) / total).collect();

    // Hadamard factor gradients via prefix/suffix products over [bias, y_1..y_n].
    let factors: Vec<&[f64]> =
        std::iter::once(bias.as_slice()).chain(ys.iter().map(|y| y.as_slice())).collect();
    let n_factors = factors.len();
    let mut prefix = vec![1.0; q];
    let mut prefixes = Vec::with_capacity(n_factors);
    for f in &factors {
        prefixes.push(prefix.clone());
        for (p, v) in prefix.iter_mut().zip(f.iter()) {
            *p *= v;
        }
    }
    let mut suffix = vec![1.0; q];
    let mut factor_grads = vec![vec![0.0; q]; n_factors];
    for t in (0..n_factors).rev() {
        for j in 0..q {
            factor_grads[t][j] = g_u[j] * prefixes[t][j] * suffix[j];
        }
        for (s, v) in suffix.iter_mut().zip(factors[t].iter()) {
            *s *= v;
        }
    }

    // Bias parameters from the gradient of the bias factor.
    let (mut d_b_q, mut d_b_a, mut d_lambda_q, mut d_lambda_a) = (0.0, 0.0, 0.0, 0.0);
    for (j, &g) in factor_grads[0].iter().enumerate() {
        let zq = (centers[j] - node.lambda_q) / delta;
        let za = (centers[j] - node.lambda_a) / delta;
        let gb = g * bias[j];
        d_b_q += gb * (-zq * zq);
        d_lambda_q += gb * (2.0 * node.b_q * zq / delta);
        d_b_a += gb * (-za.abs());
        // subgradient 0 at the kink
        let sgn = if za > 0.0 {
            1.0
        } else if za < 0.0 {
            -1.0
        } else {
            0.0
        };
        d_lambda_a += gb * (node.b_a * sgn / delta);
    }

    // Connection weights and incoming activations.
    let mut d_weights = Vec::with_capacity(n);
    let mut d_incoming = Vec::with_capacity(n);
    let inv_q2 = 1.0 / (q as f64 * q as f64);
    for i in 0..n {
        let gy = &factor_grads[i + 1];
        // dT/dw has kernel -(d/q)^2 k[d]
        let dk: Vec<f64> = kernels[i]
            .iter()
            .enumerate()
            .map(|(d, &kv)| -(d as f64 * d as f64) * inv_q2 * kv)
            .collect();
        let tmp = kernel_matvec(&dk, incoming[i].mass());
        d_weights.push(gy.iter().zip(&tmp).map(|(a, b)| a * b).sum());
        d_incoming.push(kernel_matvec(&kernels[i], gy));
    }

    NodeGrads { d_weights, d_b_q, d_b_a, d_lambda_q, d_lambda_a, d_incoming }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sup(q: usize) -> Support {
        Support::new(0.0, 1.0, q).unwrap()
    }

    fn random_dist<R: Rng>(rng: &mut R, support: Support) -> BinnedDistribution {
        let raw: Vec<f64> = (0..support.q()).map(|_| rng.gen::<f64>() + 1e-3).collect();
        BinnedDistribution::normalize(raw, support).unwrap()
    }

    fn random_node<R: Rng>(rng: &mut R, fan_in: usize, support: Support) -> NodeParams {
        NodeParams {
            weights: (0..fan_in).map(|_| rng.gen::<f64>() * 2.0).collect(),
            b_q: rng.gen(),
            b_a: rng.gen(),
            lambda_q: rng.gen::<f64>() * (support.upper() - support.lower()) + support.lower(),
            lambda_a: rng.gen::<f64>() * (support.upper() - support.lower()) + support.lower(),
        }
    }

    #[test]
    fn transformation_matrix_examples() {
        // w = 0: every connection passes total mass, all entries 1
        for row in transformation_matrix(0.0, sup(5)) {
            assert!(row.iter().all(|&v| v == 1.0));
        }
        // large w: effectively the identity
        let t = transformation_matrix(1e6, sup(100));
        for (a, row) in t.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                if a == b {
                    assert_eq!(v, 1.0);
                } else {
                    assert!(v < 1e-30);
                }
            }
        }
        // centers 0.25 and 0.75 at q = 2: off-diagonal exp(-(0.5)^2)
        let t = transformation_matrix(1.0, sup(2));
        let off = (-0.25f64).exp();
        assert!((t[0][1] - off).abs() < 1e-12);
        assert!((off - 0.778801).abs() < 1e-6);
        assert_eq!(t[0][1], t[1][0]);
    }

    #[test]
    fn bias_vector_examples() {
        let node = NodeParams::zeros(1);
        assert!(bias_vector(&node, sup(7)).iter().all(|&v| v == 1.0));

        // quadratic bias centered on the first bin center
        let node = NodeParams { b_q: 1.0, lambda_q: 0.25, ..NodeParams::zeros(1) };
        let b = bias_vector(&node, sup(2));
        assert!((b[0] - 1.0).abs() < 1e-15);
        assert!((b[1] - (-0.25f64).exp()).abs() < 1e-12);

        // a center hit by lambda_q is the maximum
        let node = NodeParams { b_q: 2.0, lambda_q: 0.45, ..NodeParams::zeros(1) };
        let b = bias_vector(&node, sup(10));
        let max = b.iter().cloned().fold(0.0, f64::max);
        assert_eq!(b[4], max);
        assert!((b[4] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_node_is_uniform_after_normalization() {
        let s = sup(9);
        let node = NodeParams::zeros(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_dist(&mut rng, s);
        let raw = propagate_node(&node, &[p], s).unwrap();
        let first = raw[0];
        assert!(raw.iter().all(|&v| (v - first).abs() < 1e-12));
        let out = BinnedDistribution::normalize(raw, s).unwrap();
        let u = BinnedDistribution::uniform(s);
        for (a, b) in out.mass().iter().zip(u.mass()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_weight_node_reproduces_input() {
        let s = sup(50);
        let node = NodeParams { weights: vec![1e6 * 2500.0], ..NodeParams::zeros(1) };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_dist(&mut rng, s);
        let raw = propagate_node(&node, std::slice::from_ref(&p), s).unwrap();
        let out = BinnedDistribution::normalize(raw, s).unwrap();
        for (a, b) in out.mass().iter().zip(p.mass()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn propagate_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for &(fan_in, q) in &[(1usize, 8usize), (2, 8), (3, 6)] {
            let s = sup(q);
            let node = random_node(&mut rng, fan_in, s);
            let incoming: Vec<_> = (0..fan_in).map(|_| random_dist(&mut rng, s)).collect();
            let fast = propagate_node(&node, &incoming, s).unwrap();
            let brute = brute_force_node(&node, &incoming, s).unwrap();
            for (f, b) in fast.iter().zip(&brute) {
                assert!((f - b).abs() / b < 1e-10);
            }
        }
    }

    #[test]
    fn brute_force_with_zero_energy_sums_to_one_per_entry() {
        let s = sup(4);
        let node = NodeParams::zeros(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let incoming = vec![random_dist(&mut rng, s), random_dist(&mut rng, s)];
        for v in brute_force_node(&node, &incoming, s).unwrap() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn oracles_enforce_cost_guards() {
        let s = sup(10);
        let node = NodeParams::zeros(1);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = vec![random_dist(&mut rng, s)];
        assert!(matches!(
            cross_term_expansion(&node, &p, s),
            Err(NetError::InstanceTooLarge { .. })
        ));
        let s17 = sup(17);
        let p17 = vec![random_dist(&mut rng, s17)];
        assert!(matches!(
            brute_force_node(&NodeParams::zeros(1), &p17, s17),
            Err(NetError::InstanceTooLarge { .. })
        ));
    }

    #[test]
    fn cross_term_expansion_matches_propagation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = sup(4);
        let node = random_node(&mut rng, 2, s);
        let incoming = vec![random_dist(&mut rng, s), random_dist(&mut rng, s)];
        let fast = propagate_node(&node, &incoming, s).unwrap();
        let expanded = cross_term_expansion(&node, &incoming, s).unwrap();
        for (f, e) in fast.iter().zip(&expanded) {
            assert!((f - e).abs() / e < 1e-12);
        }
    }

    #[test]
    fn linearization_error_examples() {
        let s = sup(10);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = vec![random_dist(&mut rng, s)];
        // w = 0: both reduce to the normalized bias vector
        let mut node = random_node(&mut rng, 1, s);
        node.weights[0] = 0.0;
        let raw = propagate_node(&node, &p, s).unwrap();
        let exact = BinnedDistribution::normalize(raw, s).unwrap();
        let lin = linearized_node_output(&node, &p, s).unwrap();
        for (a, b) in exact.mass().iter().zip(lin.mass()) {
            assert!((a - b).abs() < 1e-14);
        }
        // tiny w: first-order expansion is accurate
        node.weights[0] = 1e-4;
        let raw = propagate_node(&node, &p, s).unwrap();
        let exact = BinnedDistribution::normalize(raw, s).unwrap();
        let lin = linearized_node_output(&node, &p, s).unwrap();
        for (a, b) in exact.mass().iter().zip(lin.mass()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn count_params_examples() {
        assert_eq!(NetworkSpec::new(vec![3, 10, 10, 1]).unwrap().count_params(), 224);
        assert_eq!(NetworkSpec::new(vec![3, 5, 1]).unwrap().count_params(), 44);
        assert_eq!(NetworkSpec::new(vec![1, 1]).unwrap().count_params(), 5);
    }

    #[test]
    fn forward_identity_chain() {
        let s = sup(30);
        let spec = NetworkSpec::new(vec![1, 1, 1]).unwrap();
        let w = 1e6 * 900.0;
        let node = NodeParams { weights: vec![w], ..NodeParams::zeros(1) };
        let net = DrnNetwork::from_nodes(spec, vec![node.clone(), node], s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = random_dist(&mut rng, s);
        let (out, trace) = net.forward(std::slice::from_ref(&p)).unwrap();
        for (a, b) in out.mass().iter().zip(p.mass()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(trace.activations.len(), 3);
        assert_eq!(trace.pre_normalization_totals.len(), 2);
    }

    #[test]
    fn zero_weight_output_node_ignores_inputs() {
        let s = sup(12);
        let spec = NetworkSpec::new(vec![2, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut node = random_node(&mut rng, 2, s);
        node.weights = vec![0.0, 0.0];
        let net = DrnNetwork::from_nodes(spec, vec![node], s).unwrap();
        let (a, _) =
            net.forward(&[random_dist(&mut rng, s), random_dist(&mut rng, s)]).unwrap();
        let (b, _) =
            net.forward(&[random_dist(&mut rng, s), random_dist(&mut rng, s)]).unwrap();
        for (x, y) in a.mass().iter().zip(b.mass()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn flatten_roundtrip_and_length_check() {
        let s = sup(8);
        let spec = NetworkSpec::new(vec![2, 3, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut net = DrnNetwork::zeros(spec, s);
        let v: Vec<f64> = (0..net.count_params()).map(|_| rng.gen()).collect();
        net.unflatten(&v).unwrap();
        assert_eq!(net.flatten(), v);
        assert!(matches!(
            net.unflatten(&v[1..]),
            Err(NetError::ParamLenMismatch { .. })
        ));
    }

    #[test]
    fn forward_rejects_wrong_arity_and_support() {
        let s = sup(6);
        let net = DrnNetwork::zeros(NetworkSpec::new(vec![2, 1]).unwrap(), s);
        let p = BinnedDistribution::uniform(s);
        assert!(matches!(
            net.forward(std::slice::from_ref(&p)),
            Err(NetError::InputArity { want: 2, got: 1 })
        ));
        let other = BinnedDistribution::uniform(sup(7));
        assert!(matches!(
            net.forward(&[p, other]),
            Err(NetError::SupportMismatch)
        ));
    }
}
