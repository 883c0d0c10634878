//! The code snippets from `book/src/*.md`, kept compiling and passing here.
//! If a snippet changes in the book, change it in this file too.

use drn::data::gen_shifting_gaussian;
use drn::dist::{jsd, l2_distance, nll, BinnedDistribution, Support};
use drn::net::{brute_force_node, propagate_node, DrnNetwork, NetworkSpec, NodeParams};
use drn::rdrn::{rdrn_count_params, rdrn_forward, RdrnParams};
use drn::train::{init_drn, train, TrainConfig};

// book/src/distributions.md
#[test]
fn construction_and_normalization() {
    let support = Support::new(0.0, 1.0, 100).unwrap();
    assert_eq!(support.bin_width(), 0.01);

    let g = BinnedDistribution::gaussian(0.4, 0.01, support).unwrap();
    assert!((g.mass().iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

// book/src/distributions.md
#[test]
fn the_three_metrics() {
    let s = Support::new(0.0, 1.0, 100).unwrap();
    let a = BinnedDistribution::gaussian(0.4, 0.01, s).unwrap();
    let b = BinnedDistribution::gaussian(0.6, 0.01, s).unwrap();

    let d = jsd(&a, &b).unwrap();
    assert!(d > 0.0 && d <= std::f64::consts::LN_2);
    assert_eq!(d, jsd(&b, &a).unwrap());

    assert!(l2_distance(&a, &a).unwrap() == 0.0);

    let n = nll(&a, &[0.4, 0.41]).unwrap();
    assert!(n.is_finite());
}

// book/src/propagation.md
#[test]
fn node_params_shape() {
    let node =
        NodeParams { weights: vec![0.5, 1.0], b_q: 0.2, b_a: 0.0, lambda_q: 0.5, lambda_a: 0.5 };
    assert_eq!(node.weights.len(), 2);
}

// book/src/propagation.md
#[test]
fn factorized_matches_brute_force() {
    let s = Support::new(0.0, 1.0, 8).unwrap();
    let p1 = BinnedDistribution::gaussian(0.3, 0.02, s).unwrap();
    let p2 = BinnedDistribution::gaussian(0.7, 0.02, s).unwrap();
    let node =
        NodeParams { weights: vec![1.0, 2.0], b_q: 0.1, b_a: 0.3, lambda_q: 0.4, lambda_a: 0.6 };

    let fast = propagate_node(&node, &[p1.clone(), p2.clone()], s).unwrap();
    let slow = brute_force_node(&node, &[p1, p2], s).unwrap();
    for (a, b) in fast.iter().zip(&slow) {
        assert!((a - b).abs() < 1e-12 * b.max(1.0));
    }
}

// book/src/propagation.md
#[test]
fn zero_network_is_uniform() {
    let s = Support::new(0.0, 1.0, 50).unwrap();
    let spec = NetworkSpec::new(vec![2, 3, 1]).unwrap();
    assert_eq!(spec.count_params(), 3 * (2 + 4) + 1 * (3 + 4));

    let net = DrnNetwork::zeros(spec, s);
    let a = BinnedDistribution::gaussian(0.3, 0.01, s).unwrap();
    let b = BinnedDistribution::gaussian(0.6, 0.01, s).unwrap();
    let (out, trace) = net.forward(&[a, b]).unwrap();
    assert_eq!(out, BinnedDistribution::uniform(s));
    assert_eq!(trace.activations.len(), 3);
}

// book/src/properties.md
#[test]
fn zero_weight_parent_is_ignored() {
    let s = Support::new(0.0, 1.0, 30).unwrap();
    let node =
        NodeParams { weights: vec![0.0], b_q: 0.0, b_a: 0.0, lambda_q: 0.0, lambda_a: 0.0 };
    let any = BinnedDistribution::gaussian(0.2, 0.005, s).unwrap();
    let raw = propagate_node(&node, &[any], s).unwrap();
    for v in &raw {
        assert!((v - 1.0).abs() < 1e-12);
    }
}

// book/src/recurrence.md
#[test]
fn recurrent_parameter_count_and_forward() {
    assert_eq!(rdrn_count_params(1, 5), 59);

    let s = Support::new(0.0, 1.0, 40).unwrap();
    let params = RdrnParams::zeros(1, 3, s);
    let step = |mu: f64| vec![BinnedDistribution::gaussian(mu, 0.01, s).unwrap()];
    let sequence = vec![step(0.3), step(0.4), step(0.5)];
    let out = rdrn_forward(&params, &sequence).unwrap();
    assert_eq!(out.support(), s);
}

// book/src/training.md
#[test]
fn a_short_training_run() {
    let train_data = gen_shifting_gaussian(20, 3, 0.2, 0.1, 1).unwrap();
    let val_data = gen_shifting_gaussian(20, 3, 0.2, 0.1, 2).unwrap();
    let config = TrainConfig {
        learning_rate: 0.05,
        max_epochs: 20,
        batch: Some(10),
        val_every: 5,
        seed: 0,
        ..TrainConfig::default()
    };
    let support = Support::new(0.0, 1.0, 100).unwrap();
    let model = init_drn(NetworkSpec::new(vec![3, 10, 10, 1]).unwrap(), support, &config);
    let (best, report) = train(model, &train_data, &val_data, &config).unwrap();
    assert_eq!(report.param_count, 224);
    assert!(report.best_val_loss.is_finite());
    let _ = best;
}
