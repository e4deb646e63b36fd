use super::*;
use crate::error::Error;
use crate::linalg::{axpy, cosine, dot, Matrix, Rng};
use crate::tasks::{class_axes, sample_dataset, two_output_task, unstructured_task, Phase, TaskSpec};

const KINDS: [ActivationKind; 5] = [
    ActivationKind::Tanh,
    ActivationKind::Relu,
    ActivationKind::SaturatingRelu,
    ActivationKind::ShiftedRelu { b: 0.3 },
    ActivationKind::Linear,
];

fn small_task(seed: u64) -> TaskSpec {
    unstructured_task(4, 6, &mut Rng::new(seed)).unwrap()
}

#[test]
fn discrete_readout_groups() {
    let t1 = unstructured_task(4, 10, &mut Rng::new(1)).unwrap();
    let net = init_network(&t1, &[128], ActivationKind::Tanh, ReadoutMode::FrozenDiscrete, &mut Rng::new(2)).unwrap();
    let plus = net.readout.row(0).iter().filter(|&&v| v == 1.0).count();
    let minus = net.readout.row(0).iter().filter(|&&v| v == -1.0).count();
    assert_eq!((plus, minus), (64, 64));

    let t2 = two_output_task(10, &mut Rng::new(1)).unwrap();
    let net = init_network(&t2, &[128], ActivationKind::Relu, ReadoutMode::FrozenDiscrete, &mut Rng::new(2)).unwrap();
    let (patterns, assignment) = net.readout_groups();
    assert_eq!(patterns.len(), 8);
    for g in 0..8 {
        assert_eq!(assignment.iter().filter(|&&a| a == g).count(), 16);
    }
    assert!(net.readout.as_slice().iter().all(|v| [-1.0, 0.0, 1.0].contains(v)));

    let err = init_network(&t2, &[100], ActivationKind::Relu, ReadoutMode::FrozenDiscrete, &mut Rng::new(2));
    assert!(matches!(err, Err(Error::Contract(_))));
}

#[test]
fn readout_pattern_counts() {
    assert_eq!(readout_patterns(1), vec![vec![1.0], vec![-1.0]]);
    assert_eq!(readout_patterns(2).len(), 8);
    assert_eq!(readout_patterns(3).len(), 26);
}

#[test]
fn input_weight_norms_near_one() {
    let t = unstructured_task(4, 100, &mut Rng::new(3)).unwrap();
    let net = init_network(&t, &[128], ActivationKind::Tanh, ReadoutMode::FrozenDiscrete, &mut Rng::new(4)).unwrap();
    let w = &net.first_layer().weights;
    let mean: f64 = (0..128).map(|j| dot(w.row(j), w.row(j))).sum::<f64>() / 128.0;
    // ‖w‖² ~ χ²_N / N: sd √(2/N) per neuron, averaged over 128 neurons.
    let tol = 4.0 * (2.0f64 / 100.0).sqrt() / (128.0f64).sqrt();
    assert!((mean - 1.0).abs() < tol, "mean {mean}");
}

#[test]
fn forward_zero_input() {
    let t = small_task(1);
    let net = init_network(&t, &[8], ActivationKind::Tanh, ReadoutMode::FrozenDiscrete, &mut Rng::new(1)).unwrap();
    let pass = net.forward(&Matrix::zeros(6, 3)).unwrap();
    assert!(pass.hidden[0].as_slice().iter().all(|&h| h == 0.0));
    assert!(pass.outputs.as_slice().iter().all(|&o| o == 0.5));
}

#[test]
fn forward_monotone_along_positive_margin() {
    let t = small_task(2);
    let mut net = init_network(&t, &[2], ActivationKind::Relu, ReadoutMode::FrozenDiscrete, &mut Rng::new(1)).unwrap();
    let x: Vec<f64> = t.center(0);
    // Neuron 0 (readout +1) points along x, neuron 1 (readout −1) is silent on x.
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    net.layers[0].weights = Matrix::from_rows(&[x.clone(), neg]).unwrap().scale(0.01);
    let mut last = 0.0;
    for s in [0.5, 1.0, 2.0, 4.0] {
        let input = Matrix::from_columns(&[x.iter().map(|v| v * s).collect()]).unwrap();
        let out = net.forward(&input).unwrap().outputs[(0, 0)];
        assert!(out > last && out < 1.0);
        last = out;
    }
}

#[test]
fn output_shapes_any_depth() {
    let t = two_output_task(7, &mut Rng::new(3)).unwrap();
    for depth in 1..4 {
        let widths = vec![16; depth];
        let net = init_network(&t, &widths, ActivationKind::Tanh, ReadoutMode::FrozenDiscrete, &mut Rng::new(1)).unwrap();
        let pass = net.forward(&Matrix::zeros(7, 5)).unwrap();
        assert_eq!(pass.outputs.shape(), (2, 5));
        assert_eq!(pass.hidden.len(), depth);
        assert!(pass.outputs.as_slice().iter().all(|&o| o > 0.0 && o < 1.0));
    }
}

/// Central-difference gradient of the loss with respect to every parameter.
fn finite_difference(net: &Network, x: &Matrix, y: &Matrix, h: f64) -> Gradient {
    let loss = |n: &Network| n.loss(x, y).unwrap();
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for l in 0..net.layers.len() {
        let shape = net.layers[l].weights.shape();
        let mut gw = Matrix::zeros(shape.0, shape.1);
        for i in 0..shape.0 {
            for j in 0..shape.1 {
                let mut p = net.clone();
                p.layers[l].weights[(i, j)] += h;
                let mut m = net.clone();
                m.layers[l].weights[(i, j)] -= h;
                gw[(i, j)] = (loss(&p) - loss(&m)) / (2.0 * h);
            }
        }
        let gb = (0..shape.0)
            .map(|i| {
                let mut p = net.clone();
                p.layers[l].bias[i] += h;
                let mut m = net.clone();
                m.layers[l].bias[i] -= h;
                (loss(&p) - loss(&m)) / (2.0 * h)
            })
            .collect();
        weights.push(gw);
        biases.push(gb);
    }
    let shape = net.readout.shape();
    let mut readout = Matrix::zeros(shape.0, shape.1);
    for i in 0..shape.0 {
        for j in 0..shape.1 {
            let mut p = net.clone();
            p.readout[(i, j)] += h;
            let mut m = net.clone();
            m.readout[(i, j)] -= h;
            readout[(i, j)] = (loss(&p) - loss(&m)) / (2.0 * h);
        }
    }
    Gradient { weights, biases, readout }
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale = dot(a, a).sqrt().max(dot(b, b).sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Smallest distance from any pre-activation to a kink of its layer's activation.
fn kink_clearance(net: &Network, x: &Matrix) -> f64 {
    let pass = net.forward(x).unwrap();
    let mut best = f64::INFINITY;
    for (layer, pre) in net.layers.iter().zip(&pass.pre) {
        for k in layer.activation.kinks() {
            for &z in pre.as_slice() {
                best = best.min((z - k).abs());
            }
        }
    }
    best
}

/// Max relative error of backprop against central differences over every parameter block.
pub(crate) fn gradient_check(kind: ActivationKind, hidden: &[usize], seed: u64) -> f64 {
    let t = small_task(seed);
    let mut rng = Rng::new(seed);
    loop {
        let mut net = init_network(&t, hidden, kind, ReadoutMode::Trainable, &mut rng).unwrap();
        for layer in &mut net.layers {
            layer.bias.iter_mut().for_each(|b| *b = 0.3 * rng.normal());
        }
        let data = sample_dataset(&t, 2, Phase::Test, &mut rng).unwrap();
        if kink_clearance(&net, &data.samples) < 1e-3 {
            continue;
        }
        let (_, analytic) = net.loss_and_gradient(&data.samples, &data.labels).unwrap();
        let numeric = finite_difference(&net, &data.samples, &data.labels, 1e-6);
        let mut worst: f64 = relative_error(analytic.readout.as_slice(), numeric.readout.as_slice());
        for l in 0..net.layers.len() {
            worst = worst.max(relative_error(analytic.weights[l].as_slice(), numeric.weights[l].as_slice()));
            worst = worst.max(relative_error(&analytic.biases[l], &numeric.biases[l]));
        }
        return worst;
    }
}

#[test]
fn backprop_matches_finite_differences_five_neuron_tanh() {
    assert!(gradient_check(ActivationKind::Tanh, &[5], 1) <= 1e-5);
}

#[test]
fn backprop_matches_finite_differences_all_kinds_deep() {
    for kind in KINDS {
        for seed in 0..3 {
            let err = gradient_check(kind, &[5, 4], seed);
            assert!(err <= 1e-5, "{kind}: {err}");
        }
    }
}

#[test]
fn zero_learning_rate_keeps_weights() {
    let t = small_task(3);
    let mut net = init_network(&t, &[8], ActivationKind::Relu, ReadoutMode::Trainable, &mut Rng::new(1)).unwrap();
    let before = net.clone();
    let cfg = TrainConfig { learning_rate: 0.0, epochs: 3, ..TrainConfig::default() };
    train(&mut net, &t, &cfg, None).unwrap();
    assert_eq!(net, before);
}

#[test]
fn frozen_readouts_are_bit_identical_after_training() {
    let t = small_task(4);
    for mode in [ReadoutMode::FrozenDiscrete, ReadoutMode::FrozenRandom] {
        let mut net = init_network(&t, &[8], ActivationKind::Tanh, mode, &mut Rng::new(1)).unwrap();
        let before = net.readout.clone();
        let cfg = TrainConfig { epochs: 5, ..TrainConfig::default() };
        train(&mut net, &t, &cfg, None).unwrap();
        let same = before.as_slice().iter().zip(net.readout.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same);
        assert_ne!(net.first_layer().weights, init_network(&t, &[8], ActivationKind::Tanh, mode, &mut Rng::new(1)).unwrap().first_layer().weights);
    }
    let mut net = init_network(&t, &[8], ActivationKind::Tanh, ReadoutMode::Trainable, &mut Rng::new(1)).unwrap();
    let before = net.readout.clone();
    train(&mut net, &t, &TrainConfig { epochs: 2, ..TrainConfig::default() }, None).unwrap();
    assert_ne!(net.readout, before);
}

#[test]
fn training_is_deterministic() {
    let run = || {
        let t = unstructured_task(4, 20, &mut Rng::new(9)).unwrap();
        let mut net = init_network(&t, &[16], ActivationKind::Relu, ReadoutMode::FrozenDiscrete, &mut Rng::new(5)).unwrap();
        let cfg = TrainConfig { epochs: 4, seed: 17, ..TrainConfig::default() };
        train(&mut net, &t, &cfg, None).unwrap();
        net
    };
    assert_eq!(run(), run());
}

#[test]
fn noiseless_loss_is_monotone() {
    let t = unstructured_task(4, 100, &mut Rng::new(10)).unwrap().with_sigma_train(0.0);
    for kind in [ActivationKind::Tanh, ActivationKind::Relu] {
        let mut net = init_network(&t, &[128], kind, ReadoutMode::FrozenDiscrete, &mut Rng::new(2)).unwrap();
        let cfg = TrainConfig { learning_rate: 0.01, epochs: 30, convergence_loss: 0.0, ..TrainConfig::default() };
        let centers = &t.centers;
        let mut losses = vec![net.loss(centers, &t.labels).unwrap()];
        for epoch in 0..cfg.epochs {
            let one = TrainConfig { epochs: 1, seed: epoch as u64, ..cfg.clone() };
            train(&mut net, &t, &one, None).unwrap();
            losses.push(net.loss(centers, &t.labels).unwrap());
        }
        for w in losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-6, "{kind}: {losses:?}");
        }
    }
}

#[test]
fn training_learns_the_four_cluster_task() {
    let t = unstructured_task(4, 100, &mut Rng::new(11)).unwrap();
    for kind in [ActivationKind::Tanh, ActivationKind::Relu] {
        let mut net = init_network(&t, &[128], kind, ReadoutMode::FrozenDiscrete, &mut Rng::new(3)).unwrap();
        let summary = train(&mut net, &t, &TrainConfig::default(), None).unwrap();
        assert!(summary.converged, "{kind}: {summary:?}");
        assert!(summary.train_accuracy[0] > 0.95);
        let test = sample_dataset(&t, 256, Phase::Test, &mut Rng::new(99)).unwrap();
        assert!(net.accuracy(&test.samples, &test.labels).unwrap()[0] > 0.95);
    }
}

#[test]
fn divergence_is_reported() {
    let t = small_task(5);
    let mut net = init_network(&t, &[8], ActivationKind::Linear, ReadoutMode::Trainable, &mut Rng::new(1)).unwrap();
    let cfg = TrainConfig { learning_rate: 1e300, epochs: 50, ..TrainConfig::default() };
    assert!(matches!(train(&mut net, &t, &cfg, None), Err(Error::Diverged { .. })));
}

#[test]
fn recorder_cadence() {
    let t = small_task(6);
    let mut net = init_network(&t, &[4], ActivationKind::Tanh, ReadoutMode::FrozenDiscrete, &mut Rng::new(1)).unwrap();
    let mut rec = WeightRecorder::new(5);
    let cfg = TrainConfig { epochs: 3, convergence_loss: 0.0, ..TrainConfig::default() };
    let summary = train(&mut net, &t, &cfg, Some(&mut rec)).unwrap();
    let steps: Vec<usize> = rec.snapshots.iter().map(|s| s.step).collect();
    assert_eq!(steps[0], 0);
    assert_eq!(*steps.last().unwrap(), summary.steps);
    assert!(steps.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(rec.snapshots.last().unwrap().weights, net.first_layer().weights);
}

#[test]
fn checkpoint_round_trip() {
    let t = small_task(7);
    let net = init_network(&t, &[4, 4], ActivationKind::ShiftedRelu { b: -0.25 }, ReadoutMode::FrozenRandom, &mut Rng::new(1)).unwrap();
    let json = net.to_json().unwrap();
    assert!(json.contains("\"shifted_relu\"") && json.contains("\"frozen_random\""));
    assert_eq!(Network::from_json(&json).unwrap(), net);
}

#[test]
fn expected_update_at_origin_follows_inter_axis() {
    let t = unstructured_task(4, 30, &mut Rng::new(12)).unwrap();
    let axes = class_axes(&t).unwrap();
    let u = expected_update(&vec![0.0; 30], 0.0, ActivationKind::Tanh, 1.0, &t, None).unwrap();
    assert!((cosine(&u, &axes.inter).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn expected_update_relu_fully_gated_is_zero() {
    let t = unstructured_task(4, 30, &mut Rng::new(13)).unwrap();
    // Pick w with wᵀxᵢ < 0 for all clusters: minus the sum of the centers, checked.
    let mut w = vec![0.0; 30];
    for i in 0..4 {
        axpy(-1.0, &t.center(i), &mut w);
    }
    assert!((0..4).all(|i| dot(&w, &t.center(i)) < 0.0));
    let u = expected_update(&w, 0.0, ActivationKind::Relu, 1.0, &t, None).unwrap();
    assert!(u.iter().all(|&v| v == 0.0));
}

#[test]
fn expected_update_rejects_multi_output() {
    let t = two_output_task(10, &mut Rng::new(1)).unwrap();
    let r = expected_update(&[0.0; 10], 0.0, ActivationKind::Tanh, 1.0, &t, None);
    assert!(matches!(r, Err(Error::Unsupported(_))));
}

/// Monte-Carlo oracle: mean backprop update of neuron 0 in a two-neuron
/// network whose neurons share input weights but carry opposite readouts,
/// so the output stays at ½ and the error is 0.5·yᵢ for every cluster.
pub(crate) fn monte_carlo_update(t: &TaskSpec, w: &[f64], kind: ActivationKind, w_o: f64, draws: usize, seed: u64) -> Vec<f64> {
    let mut net = init_network(t, &[2], kind, ReadoutMode::FrozenRandom, &mut Rng::new(0)).unwrap();
    net.layers[0].weights = Matrix::from_rows(&[w.to_vec(), w.to_vec()]).unwrap();
    net.readout = Matrix::from_rows(&[vec![w_o, -w_o]]).unwrap();
    let mut rng = Rng::new(seed);
    let mut acc = vec![0.0; w.len()];
    let noiseless = t.clone().with_sigma_train(0.0);
    for _ in 0..draws {
        let c = rng.below(t.n_clusters());
        let x = Matrix::from_columns(&[noiseless.center(c)]).unwrap();
        let y = Matrix::from_rows(&[vec![t.labels[(0, c)]]]).unwrap();
        let (_, g) = net.loss_and_gradient(&x, &y).unwrap();
        axpy(-1.0 / draws as f64, g.weights[0].row(0), &mut acc);
    }
    acc
}

#[test]
fn expected_update_matches_monte_carlo_sgd() {
    let t = unstructured_task(4, 20, &mut Rng::new(14)).unwrap();
    let mut rng = Rng::new(15);
    for kind in [ActivationKind::Tanh, ActivationKind::Relu, ActivationKind::SaturatingRelu] {
        for w_o in [1.0, -1.0] {
            let w: Vec<f64> = rng.normals(20).iter().map(|v| v * 0.2).collect();
            let analytic = expected_update(&w, 0.0, kind, w_o, &t, None).unwrap();
            let mc = monte_carlo_update(&t, &w, kind, w_o, 10_000, 3);
            if dot(&analytic, &analytic) == 0.0 {
                assert!(dot(&mc, &mc) < 1e-20);
                continue;
            }
            assert!(cosine(&analytic, &mc).unwrap() >= 0.999, "{kind} {w_o}");
        }
    }
}
