use chainnet::model::{ChainNet, Mode, NetworkConfig};
use chainnet_nn::ops::softmax_cross_entropy;
use chainnet_nn::{Graph, Shape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_frames(n: usize, len: usize, seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * 2 * len)
        .map(|_| rng.random_range(-1.5..1.5))
        .collect();
    Tensor::from_vec(Shape::new(n, 2, len, 1), data).unwrap()
}

fn one_hot(labels: &[usize], classes: usize) -> Tensor<f64> {
    let mut data = vec![0.0; labels.len() * classes];
    for (i, l) in labels.iter().enumerate() {
        data[i * classes + l] = 1.0;
    }
    Tensor::from_vec(Shape::new(labels.len(), 1, 1, classes), data).unwrap()
}

/// Parameter count summed layer by layer from the architecture description.
fn walk_count(cfg: &NetworkConfig) -> usize {
    let conv = |kh: usize, kw: usize, cin: usize, cout: usize| kh * kw * cin * cout + cout;
    let dense = |i: usize, o: usize| i * o + o;
    let k = cfg.kernel_count;
    let mut total = conv(1, 5, 1, k);
    for _ in 0..cfg.block_count {
        total += conv(1, 3, k, k) + conv(3, 1, k, k) + conv(1, 1, 2 * k, k);
    }
    total + dense(2 * k, 128) + dense(128, 128) + dense(128, cfg.class_count)
}

#[test]
fn default_parameter_count() {
    let cfg = NetworkConfig::default();
    assert_eq!(walk_count(&cfg), 232_974);
    assert_eq!(cfg.count_parameters(), 232_974);
    assert_eq!(
        ChainNet::<f32>::new(cfg).unwrap().parameter_count(),
        232_974
    );
    let two = NetworkConfig {
        class_count: 2,
        ..cfg
    };
    assert_eq!(cfg.count_parameters() - two.count_parameters(), 1_548);
    let counts: Vec<usize> = [16, 32, 64, 128]
        .iter()
        .map(|&k| {
            NetworkConfig {
                kernel_count: k,
                ..cfg
            }
            .count_parameters()
        })
        .collect();
    assert!(counts.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn all_sweep_combinations_build_and_run() {
    for l in [128, 256, 512, 1024] {
        for k in [16, 32, 64, 128] {
            let cfg = NetworkConfig {
                signal_length: l,
                kernel_count: k,
                ..Default::default()
            };
            let mut net = ChainNet::<f32>::new(cfg).unwrap();
            assert_eq!(net.parameter_count(), cfg.count_parameters());
            assert_eq!(net.parameter_count(), walk_count(&cfg));
            let trace = net.shape_trace().unwrap();
            assert_eq!(trace.get("avgpool").unwrap().dims(), [1, 1, 1, 2 * k]);
            assert_eq!(trace.get("fc").unwrap().dims(), [1, 1, 1, 14]);
            let frames = random_frames(1, l, 1).cast::<f32>();
            let targets = one_hot(&[3], 14).cast::<f32>();
            let mut g = Graph::new();
            let nodes = net
                .forward(&mut g, frames, Mode::Train { dropout_seed: 1 })
                .unwrap();
            let (_, _, grad) = softmax_cross_entropy(g.value(nodes.logits), &targets, 1).unwrap();
            g.backward(nodes.logits, &grad, net.params_mut()).unwrap();
        }
    }
}

#[test]
fn short_signal_trace_uses_ceil_widths() {
    let net = ChainNet::<f32>::new(NetworkConfig {
        signal_length: 128,
        ..Default::default()
    })
    .unwrap();
    let t = net.shape_trace().unwrap();
    assert_eq!(t.get("stack").unwrap().width, 32);
    let widths: Vec<usize> = (1..=6)
        .map(|i| t.get(&format!("block{i}.out_h")).unwrap().width)
        .collect();
    assert_eq!(widths, vec![16, 8, 4, 2, 1, 1]);
    assert_eq!(t.get("avgpool").unwrap().to_string(), "1 x 1 x 128");
}

#[test]
fn two_class_head() {
    let net = ChainNet::<f64>::new(NetworkConfig {
        signal_length: 64,
        kernel_count: 4,
        class_count: 2,
        ..Default::default()
    })
    .unwrap();
    let p = net.forward_classify(&random_frames(3, 64, 2)).unwrap();
    assert_eq!(p.shape().dims(), [3, 1, 1, 2]);
    for row in p.data().chunks(2) {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

fn randomize_head(net: &mut ChainNet<f64>, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = net.params().find("fc3.weight").unwrap();
    for v in net.params_mut().get_mut(id).value.data_mut() {
        *v = rng.random_range(-0.3..0.3);
    }
    for p in net.params_mut().iter_mut() {
        if p.tag.ends_with("bias") {
            for v in p.value.data_mut() {
                *v = rng.random_range(-0.1..0.1);
            }
        }
    }
}

#[test]
fn probabilities_are_batch_independent() {
    let mut net = ChainNet::<f64>::new(NetworkConfig {
        signal_length: 128,
        kernel_count: 8,
        ..Default::default()
    })
    .unwrap();
    randomize_head(&mut net, 3);
    let frames = random_frames(5, 128, 4);
    let batch = net.forward_classify(&frames).unwrap();
    for row in batch.data().chunks(14) {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }
    for i in 0..5 {
        let single = net.forward_classify(&frames.slice_batch(i, 1)).unwrap();
        for (a, b) in single
            .data()
            .iter()
            .zip(&batch.data()[i * 14..(i + 1) * 14])
        {
            assert!((a - b).abs() < 1e-6);
        }
    }
    let same = Tensor::stack(&[
        frames.slice_batch(0, 1),
        frames.slice_batch(0, 1),
        frames.slice_batch(0, 1),
    ])
    .unwrap();
    let p = net.forward_classify(&same).unwrap();
    assert_eq!(&p.data()[..14], &p.data()[14..28]);
    assert_eq!(&p.data()[..14], &p.data()[28..]);
}

#[test]
fn zero_input_with_zero_biases_gives_zero_block_outputs() {
    let net = ChainNet::<f64>::new(NetworkConfig {
        signal_length: 64,
        kernel_count: 4,
        ..Default::default()
    })
    .unwrap();
    let mut g = Graph::new();
    let nodes = net
        .forward(&mut g, Tensor::zeros(Shape::new(1, 2, 64, 1)), Mode::Infer)
        .unwrap();
    for b in &nodes.blocks {
        assert!(g.value(b.out_h).data().iter().all(|v| *v == 0.0));
        assert!(g.value(b.out_v).data().iter().all(|v| *v == 0.0));
    }
}

#[test]
fn zeroed_correction_leaves_the_flows() {
    let mut net = ChainNet::<f64>::new(NetworkConfig {
        signal_length: 64,
        kernel_count: 4,
        ..Default::default()
    })
    .unwrap();
    for p in net.params_mut().iter_mut() {
        if p.tag.contains("conv_1x1") {
            p.value.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
    }
    let mut g = Graph::new();
    let nodes = net
        .forward(&mut g, random_frames(2, 64, 5), Mode::Infer)
        .unwrap();
    for b in &nodes.blocks {
        assert_eq!(g.value(b.out_h).data(), g.value(b.flow_h).data());
        assert_eq!(g.value(b.out_v).data(), g.value(b.flow_v).data());
    }
}

#[test]
fn zeroed_blocks_give_constant_logits() {
    let mut net = ChainNet::<f64>::new(NetworkConfig {
        signal_length: 64,
        kernel_count: 4,
        ..Default::default()
    })
    .unwrap();
    randomize_head(&mut net, 6);
    for p in net.params_mut().iter_mut() {
        if p.tag.contains("conv_1x3") || p.tag.contains("conv_3x1") {
            p.value.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        if p.tag.starts_with("block") && p.tag.ends_with("bias") {
            p.value.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
    }
    let mut g = Graph::new();
    let nodes = net
        .forward(&mut g, random_frames(3, 64, 7), Mode::Infer)
        .unwrap();
    for b in &nodes.blocks {
        assert!(g.value(b.out_h).data().iter().all(|v| *v == 0.0));
        assert!(g.value(b.out_v).data().iter().all(|v| *v == 0.0));
    }
    let logits = g.value(nodes.logits).data();
    assert_eq!(&logits[..14], &logits[14..28]);
    assert_eq!(&logits[..14], &logits[28..]);
    assert!(logits[..14].iter().any(|v| *v != logits[0]));
}

fn tiny_loss(net: &ChainNet<f64>, frames: &Tensor<f64>, targets: &Tensor<f64>) -> f64 {
    let mut g = Graph::new();
    let nodes = net
        .forward(&mut g, frames.clone(), Mode::Train { dropout_seed: 9 })
        .unwrap();
    let (loss, _, _) =
        softmax_cross_entropy(g.value(nodes.logits), targets, frames.shape().batch).unwrap();
    loss / frames.shape().batch as f64
}

#[test]
fn end_to_end_gradient_matches_finite_differences() {
    let cfg = NetworkConfig {
        signal_length: 16,
        kernel_count: 2,
        class_count: 3,
        block_count: 2,
        dropout_ratio: 0.5,
        seed: 11,
    };
    let mut net = ChainNet::<f64>::new(cfg).unwrap();
    randomize_head(&mut net, 12);
    let frames = random_frames(3, 16, 13);
    let targets = one_hot(&[0, 2, 1], 3);

    let mut g = Graph::new();
    let nodes = net
        .forward(&mut g, frames.clone(), Mode::Train { dropout_seed: 9 })
        .unwrap();
    let (_, _, grad) = softmax_cross_entropy(g.value(nodes.logits), &targets, 3).unwrap();
    net.params_mut().zero_grad();
    g.backward(nodes.logits, &grad, net.params_mut()).unwrap();
    let analytic: Vec<(String, Vec<f64>)> = net
        .params()
        .iter()
        .map(|p| (p.tag.clone(), p.grad.data().to_vec()))
        .collect();

    let h = 1e-5;
    let (mut max_diff, mut max_mag) = (0.0f64, 0.0f64);
    let mut checked = 0;
    for (pi, (tag, grads)) in analytic.iter().enumerate() {
        // every entry of small tensors, a strided sample of the wide fc layers
        let stride = if grads.len() > 400 { 37 } else { 1 };
        for i in (0..grads.len()).step_by(stride) {
            let id = net.params().find(tag).unwrap();
            let orig = net.params().get(id).value.data()[i];
            net.params_mut().get_mut(id).value.data_mut()[i] = orig + h;
            let up = tiny_loss(&net, &frames, &targets);
            net.params_mut().get_mut(id).value.data_mut()[i] = orig - h;
            let down = tiny_loss(&net, &frames, &targets);
            net.params_mut().get_mut(id).value.data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            max_diff = max_diff.max((numeric - grads[i]).abs());
            max_mag = max_mag.max(numeric.abs()).max(grads[i].abs());
            checked += 1;
        }
        assert!(
            grads.iter().any(|g| *g != 0.0),
            "parameter {pi} ({tag}) received no gradient"
        );
    }
    let rel = max_diff / max_mag;
    assert!(checked > 300);
    assert!(rel < 1e-5, "relative error {rel:e}");
}
