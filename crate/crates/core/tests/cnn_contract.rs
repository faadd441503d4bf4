use ihards_core::cnn::network::Layer;
use ihards_core::cnn::{
    build_architecture, evaluate_model, ops, train_model, ArchSpec, Checkpoint, Tensor, TrainConfig, ARCH_NAMES,
};
use ihards_core::drwcc::FeatureMask;
use ihards_core::integrate::{IhardsDataset, SeededRng, StandardizationStats};
use ihards_core::metrics::{confusion_matrix, derive_scores};
use ihards_core::pipeline::synthetic_dataset;
use ihards_core::{Error, Matrix};

fn standardized_synth(per_class: usize, seed: u64) -> IhardsDataset {
    let d = synthetic_dataset(per_class, 0.5, seed).unwrap();
    let s = StandardizationStats::fit(&d.features).unwrap();
    IhardsDataset::new(s.apply(&d.features).unwrap(), d.labels, seed).unwrap()
}

fn quick_cfg(seed: u64) -> TrainConfig {
    TrainConfig {
        batch_size: 16,
        epochs: 2,
        seed,
        ..TrainConfig::default()
    }
}

/// Trainable parameter count from the layer arithmetic alone.
fn param_oracle(spec: &ArchSpec, n: usize) -> usize {
    let (mut len, mut ch, mut total) = (n, 1, 0);
    for (&f, &k) in spec.conv_filters.iter().zip(&spec.conv_kernels) {
        total += k * ch * f + f;
        len = len - k + 1;
        ch = f;
    }
    let mut width = (len / spec.pool_size) * ch;
    for (i, &u) in spec.dense_units.iter().enumerate() {
        total += width * u + u;
        if spec.batch_norm && i + 1 < spec.dense_units.len() {
            total += 2 * u;
        }
        width = u;
    }
    total
}

#[test]
fn parameter_counts() {
    for name in ARCH_NAMES {
        let spec = ArchSpec::preset(name).unwrap();
        let net = build_architecture(&spec, 571).unwrap();
        assert_eq!(net.trainable_param_count(), param_oracle(&spec, 571), "{name}");
    }
    // 16*3+16 conv, 4544*256+256 dense, 2*256 batch-norm, 256*5+5 output
    let arch4 = build_architecture(&ArchSpec::preset("arch4").unwrap(), 571).unwrap();
    assert_eq!(arch4.trainable_param_count(), 1_165_381);
}

#[test]
fn conv_and_pool_lengths_for_every_arch() {
    let mut rng = SeededRng::new(1);
    for name in ARCH_NAMES {
        let spec = ArchSpec::preset(name).unwrap();
        for n in 16..=1024usize {
            let mut x = Tensor::zeros(vec![1, n, 1]);
            x.data_mut().iter_mut().for_each(|v| *v = rng.normal());
            let mut ch = 1;
            for (&f, &k) in spec.conv_filters.iter().zip(&spec.conv_kernels) {
                let w = Tensor::zeros(vec![k, ch, f]);
                let len = x.dim(1);
                x = ops::conv1d_forward(&x, &w, &Tensor::zeros(vec![f])).unwrap();
                assert_eq!(x.shape(), &[1, len - k + 1, f]);
                ch = f;
            }
            let len = x.dim(1);
            let (p, _) = ops::maxpool1d(&x, spec.pool_size).unwrap();
            assert_eq!(p.shape(), &[1, len / 2, ch]);
        }
    }
}

#[test]
fn full_networks_produce_logits_over_input_sizes() {
    for name in ARCH_NAMES {
        let spec = ArchSpec::preset(name).unwrap();
        for n in [16, 17, 31, 64, 255, 571, 1023, 1024] {
            let mut net = build_architecture(&spec, n).unwrap();
            net.initialize(&mut SeededRng::new(n as u64));
            let mut h = Tensor::zeros(vec![2, n, 1]);
            let mut len = n;
            for layer in &net.layers {
                h = layer.infer(&h).unwrap();
                match layer {
                    Layer::Conv1d(c) => {
                        len = len - c.weight.dim(0) + 1;
                        assert_eq!(h.dim(1), len);
                    }
                    Layer::MaxPool1d { pool, .. } => {
                        len /= pool;
                        assert_eq!(h.dim(1), len);
                    }
                    _ => {}
                }
            }
            assert_eq!(h.shape(), &[2, 5], "{name} at {n}");
        }
    }
}

#[test]
fn softmax_rows_and_uniform_loss() {
    let mut rng = SeededRng::new(2);
    let logits = Tensor::new(vec![6, 5], (0..30).map(|_| 10.0 * rng.normal()).collect()).unwrap();
    let p = ops::softmax(&logits).unwrap();
    for row in p.data().chunks(5) {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }
    let (loss, _) = ops::softmax_xent(&Tensor::zeros(vec![3, 5]), &[0, 3, 4]).unwrap();
    assert!((loss - 5f64.ln()).abs() < 1e-9);
}

#[test]
fn training_is_deterministic() {
    let d = standardized_synth(8, 3);
    let spec = ArchSpec::preset("arch5").unwrap();
    let a = train_model(&d, &spec, &quick_cfg(17)).unwrap();
    let b = train_model(&d, &spec, &quick_cfg(17)).unwrap();
    assert_eq!(a.curve, b.curve);
    assert_eq!(a.checkpoint.to_bytes(), b.checkpoint.to_bytes());
    let c = train_model(&d, &spec, &quick_cfg(18)).unwrap();
    assert_ne!(a.checkpoint.to_bytes(), c.checkpoint.to_bytes());
    assert_eq!(a.curve.len(), 2);
}

#[test]
fn train_accuracy_matches_metrics_module() {
    let d = standardized_synth(8, 4);
    let out = train_model(&d, &ArchSpec::preset("arch4").unwrap(), &quick_cfg(5)).unwrap();
    let r = derive_scores(&confusion_matrix(&d.labels, &out.train_predictions).unwrap()).unwrap();
    assert_eq!(r.accuracy, out.train_accuracy);
}

#[test]
fn checkpoint_round_trip_and_reload_predictions() {
    let d = standardized_synth(8, 6);
    let out = train_model(&d, &ArchSpec::preset("arch2").unwrap(), &quick_cfg(7)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ihck");
    out.checkpoint.save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    assert_eq!(loaded, out.checkpoint);
    assert_eq!(loaded.to_bytes(), std::fs::read(&path).unwrap());
    let e1 = evaluate_model(&out.checkpoint, &d).unwrap();
    let e2 = evaluate_model(&loaded, &d).unwrap();
    assert_eq!(e1, e2);
    // inference is pure: repeated evaluation agrees and leaves the checkpoint alone
    let before = loaded.to_bytes();
    assert_eq!(evaluate_model(&loaded, &d).unwrap(), e2);
    assert_eq!(loaded.to_bytes(), before);
}

#[test]
fn checkpoint_rejects_damage() {
    let d = standardized_synth(4, 8);
    let ckpt = train_model(&d, &ArchSpec::preset("arch5").unwrap(), &quick_cfg(1)).unwrap().checkpoint;
    let bytes = ckpt.to_bytes();
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(Checkpoint::from_bytes(&bad), Err(Error::Format(_))));
    let mut bad = bytes.clone();
    bad[4..8].copy_from_slice(&9u32.to_le_bytes());
    assert!(matches!(Checkpoint::from_bytes(&bad), Err(Error::Version { found: 9, .. })));
    for cut in [3, 10, bytes.len() / 2, bytes.len() - 1] {
        assert!(matches!(Checkpoint::from_bytes(&bytes[..cut]), Err(Error::Corrupt(_))), "cut {cut}");
    }
    let mut long = bytes.clone();
    long.push(0);
    assert!(matches!(Checkpoint::from_bytes(&long), Err(Error::Corrupt(_))));
}

#[test]
fn masked_checkpoint_rejects_unmasked_width() {
    let mut keep = vec![false; 571];
    keep.iter_mut().take(251).for_each(|k| *k = true);
    let mask = FeatureMask::new(keep, 0.9).unwrap();
    let spec = ArchSpec::preset("arch5").unwrap();
    let mut rng = SeededRng::new(1);
    let f: Vec<f32> = (0..10 * 251).map(|_| rng.normal() as f32).collect();
    let labels: Vec<u8> = (0..10).map(|i| (i % 5) as u8).collect();
    let train = IhardsDataset::new(Matrix::from_vec(10, 251, f).unwrap(), labels.clone(), 0).unwrap();
    let ckpt = train_model(&train, &spec, &quick_cfg(2))
        .unwrap()
        .checkpoint
        .with_preprocessing(&mask, &StandardizationStats::identity(251))
        .unwrap();
    let reloaded = Checkpoint::from_bytes(&ckpt.to_bytes()).unwrap();
    assert_eq!(reloaded.input_features(), 251);
    assert_eq!(reloaded.total_features, 571);
    let wide = IhardsDataset::new(Matrix::zeros(10, 571), labels, 0).unwrap();
    assert!(matches!(evaluate_model(&reloaded, &wide), Err(Error::Shape(_))));
    // raw 571-column rows are accepted through preprocess
    let pre = reloaded.preprocess(&wide.features).unwrap();
    assert_eq!(pre.cols(), 251);
}

#[test]
fn non_finite_loss_reports_epoch() {
    let mut f = vec![0.5f32; 10 * 40];
    f[123] = f32::NAN;
    let labels: Vec<u8> = (0..10).map(|i| (i % 5) as u8).collect();
    let d = IhardsDataset::new(Matrix::from_vec(10, 40, f).unwrap(), labels, 0).unwrap();
    let spec = ArchSpec::preset("arch1").unwrap();
    match train_model(&d, &spec, &quick_cfg(1)) {
        Err(Error::Numeric(msg)) => assert!(msg.contains("epoch"), "{msg}"),
        other => panic!("expected numeric error, got {:?}", other.map(|o| o.curve)),
    }
}
