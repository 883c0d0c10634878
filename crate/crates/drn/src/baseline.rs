//! MLP baseline: the concatenated input masses pass through dense layers
//! with logistic-sigmoid activations; the output layer is also sigmoid and is
//! normalized into a distribution for evaluation. Training minimizes the mean
//! squared error between the pre-normalization output and the target masses.

use crate::data::SequenceSample;
use crate::dist::{BinnedDistribution, Support};
use crate::net::NetError;
use crate::train::{Model, TrainConfig, TrainError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense-layer parameterization; `dims = [d_in, h_1, …, d_out]` with
/// `d_in = T·K·q` and `d_out = q`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    dims: Vec<usize>,
    /// Row-major `fan_out × fan_in` matrices, one per layer.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    support: Support,
}

/// `Σ over layers of (fan_in · fan_out + fan_out)`.
pub fn mlp_count_params(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl MlpParams {
    pub fn zeros(dims: Vec<usize>, support: Support) -> Result<Self, NetError> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(NetError::BadSpec);
        }
        if *dims.last().unwrap() != support.q() {
            return Err(NetError::BadSpec);
        }
        let weights = dims.windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect();
        let biases = dims.windows(2).map(|w| vec![0.0; w[1]]).collect();
        Ok(MlpParams { dims, weights, biases, support })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn count_params(&self) -> usize {
        mlp_count_params(&self.dims)
    }

    fn concat_inputs(&self, inputs: &[Vec<BinnedDistribution>]) -> Result<Vec<f64>, TrainError> {
        let flat: Vec<f64> = inputs
            .iter()
            .flat_map(|step| step.iter().flat_map(|d| d.mass().iter().copied()))
            .collect();
        if flat.len() != self.dims[0] {
            return Err(TrainError::ShapeMismatch { want: self.dims[0], got: flat.len() });
        }
        Ok(flat)
    }

    /// All layer activations, input first; the last entry is the sigmoid
    /// output before normalization.
    fn forward_raw(&self, input: Vec<f64>) -> Vec<Vec<f64>> {
        let mut acts = vec![input];
        for layer in 0..self.weights.len() {
            let (fan_in, fan_out) = (self.dims[layer], self.dims[layer + 1]);
            let w = &self.weights[layer];
            let prev = acts.last().unwrap();
            let mut next = Vec::with_capacity(fan_out);
            for k in 0..fan_out {
                let row = &w[k * fan_in..(k + 1) * fan_in];
                let z: f64 =
                    row.iter().zip(prev).map(|(a, b)| a * b).sum::<f64>() + self.biases[layer][k];
                next.push(sigmoid(z));
            }
            acts.push(next);
        }
        acts
    }

    /// Pre-normalization sigmoid output for `T×K` distribution inputs.
    pub fn forward_unnormalized(
        &self,
        inputs: &[Vec<BinnedDistribution>],
    ) -> Result<Vec<f64>, TrainError> {
        let flat = self.concat_inputs(inputs)?;
        Ok(self.forward_raw(flat).pop().unwrap())
    }
}

/// Symmetric fan-scaled uniform initialization,
/// `±sqrt(6/(fan_in + fan_out))` per layer.
pub fn init_mlp(
    dims: Vec<usize>,
    support: Support,
    config: &TrainConfig,
) -> Result<MlpParams, NetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut mlp = MlpParams::zeros(dims, support)?;
    for layer in 0..mlp.weights.len() {
        let (fan_in, fan_out) = (mlp.dims[layer], mlp.dims[layer + 1]);
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for w in mlp.weights[layer].iter_mut() {
            *w = (rng.gen::<f64>() * 2.0 - 1.0) * bound;
        }
        // biases start at zero
    }
    Ok(mlp)
}

impl Model for MlpParams {
    fn predict(
        &self,
        inputs: &[Vec<BinnedDistribution>],
    ) -> Result<BinnedDistribution, TrainError> {
        let raw = self.forward_unnormalized(inputs)?;
        Ok(BinnedDistribution::normalize(raw, self.support)?)
    }

    fn num_params(&self) -> usize {
        self.count_params()
    }

    fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count_params());
        for layer in 0..self.weights.len() {
            out.extend_from_slice(&self.weights[layer]);
            out.extend_from_slice(&self.biases[layer]);
        }
        out
    }

    fn set_params(&mut self, v: &[f64]) -> Result<(), TrainError> {
        if v.len() != self.count_params() {
            return Err(TrainError::Net(NetError::ParamLenMismatch {
                got: v.len(),
                want: self.count_params(),
            }));
        }
        let mut pos = 0;
        for layer in 0..self.weights.len() {
            let nw = self.weights[layer].len();
            self.weights[layer].copy_from_slice(&v[pos..pos + nw]);
            pos += nw;
            let nb = self.biases[layer].len();
            self.biases[layer].copy_from_slice(&v[pos..pos + nb]);
            pos += nb;
        }
        Ok(())
    }

    fn sample_loss(&self, sample: &SequenceSample) -> Result<f64, TrainError> {
        let out = self.forward_unnormalized(&sample.inputs)?;
        let q = out.len() as f64;
        let mse = out
            .iter()
            .zip(sample.target.mass())
            .map(|(o, t)| (o - t) * (o - t))
            .sum::<f64>()
            / q;
        Ok(mse)
    }

    fn sample_loss_grad(
        &self,
        sample: &SequenceSample,
        grad: &mut [f64],
    ) -> Result<f64, TrainError> {
        let flat = self.concat_inputs(&sample.inputs)?;
        let acts = self.forward_raw(flat);
        let out = acts.last().unwrap();
        let q = out.len() as f64;
        let mse = out
            .iter()
            .zip(sample.target.mass())
            .map(|(o, t)| (o - t) * (o - t))
            .sum::<f64>()
            / q;

        // dL/d(sigmoid out), then backward through each dense+sigmoid layer
        let mut delta: Vec<f64> = out
            .iter()
            .zip(sample.target.mass())
            .map(|(o, t)| 2.0 * (o - t) / q * o * (1.0 - o))
            .collect();
        // parameter offsets per layer in the flat layout
        let mut offsets = Vec::with_capacity(self.weights.len());
        let mut pos = 0;
        for layer in 0..self.weights.len() {
            offsets.push(pos);
            pos += self.weights[layer].len() + self.biases[layer].len();
        }
        for layer in (0..self.weights.len()).rev() {
            let (fan_in, fan_out) = (self.dims[layer], self.dims[layer + 1]);
            let prev = &acts[layer];
            let off = offsets[layer];
            for k in 0..fan_out {
                let d = delta[k];
                let row = off + k * fan_in;
                for (i, &p) in prev.iter().enumerate() {
                    grad[row + i] += d * p;
                }
                grad[off + fan_out * fan_in + k] += d;
            }
            if layer > 0 {
                let w = &self.weights[layer];
                let mut next_delta = vec![0.0; fan_in];
                for k in 0..fan_out {
                    let d = delta[k];
                    let row = &w[k * fan_in..(k + 1) * fan_in];
                    for (i, &wv) in row.iter().enumerate() {
                        next_delta[i] += d * wv;
                    }
                }
                for (nd, &a) in next_delta.iter_mut().zip(prev.iter()) {
                    *nd *= a * (1.0 - a);
                }
                delta = next_delta;
            }
        }
        Ok(mse)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_shifting_gaussian;
    use crate::train::{finite_diff_gradient, gradient};

    fn sup(q: usize) -> Support {
        Support::new(0.0, 1.0, q).unwrap()
    }

    #[test]
    fn param_counts_match_tables() {
        assert_eq!(mlp_count_params(&[300, 3, 100]), 1303);
        assert_eq!(mlp_count_params(&[300, 50, 50, 100]), 22700);
        assert_eq!(mlp_count_params(&[7, 7]), 56);
    }

    #[test]
    fn zero_weights_ignore_inputs() {
        let s = sup(100);
        let mlp = MlpParams::zeros(vec![300, 100], s).unwrap();
        let a = gen_shifting_gaussian(1, 3, 0.2, 0.1, 1).unwrap();
        let b = gen_shifting_gaussian(1, 3, 0.2, 0.1, 2).unwrap();
        let pa = mlp.predict(&a.samples[0].inputs).unwrap();
        let pb = mlp.predict(&b.samples[0].inputs).unwrap();
        assert_eq!(pa, pb);
    }

    #[test]
    fn permuting_input_bins_with_matching_columns_is_equivariant() {
        let s = sup(100);
        let mut mlp = init_mlp(vec![300, 100], s, &TrainConfig::default()).unwrap();
        let data = gen_shifting_gaussian(1, 3, 0.2, 0.1, 7).unwrap();
        let base = mlp.predict(&data.samples[0].inputs).unwrap();

        // swap input positions 4 and 9 together with first-layer columns 4 and 9
        let mut swapped = data.samples[0].inputs.clone();
        let mut mass = swapped[0][0].mass().to_vec();
        mass.swap(4, 9);
        swapped[0][0] = BinnedDistribution::normalize(mass, s).unwrap();
        for k in 0..100 {
            mlp.weights[0].swap(k * 300 + 4, k * 300 + 9);
        }
        let permuted = mlp.predict(&swapped).unwrap();
        for (a, b) in base.mass().iter().zip(permuted.mass()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let s = sup(20);
        let data = {
            // shrink the generated q=100 task to q=20 by regenerating manually
            let mut samples = Vec::new();
            for seed in 0..3u64 {
                let mu = 0.3 + 0.1 * seed as f64;
                let inputs = vec![
                    vec![BinnedDistribution::gaussian(mu, 0.02, s).unwrap()],
                    vec![BinnedDistribution::gaussian(mu + 0.1, 0.02, s).unwrap()],
                ];
                let target = BinnedDistribution::gaussian(mu + 0.2, 0.02, s).unwrap();
                samples.push(crate::data::SequenceSample { inputs, target });
            }
            crate::data::Dataset {
                samples,
                meta: crate::data::DatasetMeta {
                    generator: "test".into(),
                    seed: 0,
                    params: vec![],
                },
            }
        };
        let mlp =
            init_mlp(vec![40, 7, 20], s, &TrainConfig { seed: 3, ..TrainConfig::default() })
                .unwrap();
        let g = gradient(&mlp, &data).unwrap();
        let fd = finite_diff_gradient(&mlp, &data, 1e-5).unwrap();
        for (a, b) in g.iter().zip(&fd) {
            let rel = (a - b).abs() / b.abs().max(1.0);
            assert!(rel < 1e-4, "analytic {a} vs numeric {b}");
        }
    }
}
