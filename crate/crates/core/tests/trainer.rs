use chainnet::channel::Scenario;
use chainnet::checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
use chainnet::dataset::{split_dataset, Batch, Dataset, DatasetManifest, Split, SplitSpec};
use chainnet::modem::{Modem, ModulationScheme};
use chainnet::trainer::{
    accumulate_gradients, evaluate, run_experiment_suite, train, train_step, SuiteConfig,
    SuiteKind, TrainConfig,
};
use chainnet::{ChainNet, Error, NetworkConfig};
use chainnet_nn::Sgd;

fn manifest(schemes: Vec<ModulationScheme>, frames: usize, len: usize) -> DatasetManifest {
    DatasetManifest {
        frame_len: len,
        schemes,
        snrs_db: vec![20],
        frames_per_cell: frames,
        scenario: Scenario::None,
        seed: 21,
    }
}

fn all_train(m: &DatasetManifest) -> Split {
    split_dataset(
        m,
        &SplitSpec {
            train: 1.0,
            val: 0.0,
            test: 0.0,
            seed: 0,
        },
    )
    .unwrap()
}

fn small_net(len: usize, k: usize) -> NetworkConfig {
    NetworkConfig {
        signal_length: len,
        kernel_count: k,
        ..Default::default()
    }
}

#[test]
fn empty_training_split_is_an_error() {
    let m = manifest(vec![ModulationScheme::Fm], 2, 64);
    let d = Dataset::generate(&m, &Modem::default()).unwrap();
    let split = Split {
        train: vec![],
        val: vec![0],
        test: vec![1],
    };
    let net = ChainNet::<f32>::new(small_net(64, 4)).unwrap();
    let cfg = TrainConfig {
        epochs: 1,
        ..Default::default()
    };
    assert!(matches!(
        train(net, &d.records, &split, &cfg),
        Err(Error::Empty { .. })
    ));
}

#[test]
fn overfits_three_easy_classes() {
    let m = manifest(
        vec![
            ModulationScheme::Fm,
            ModulationScheme::Pam16,
            ModulationScheme::Qam16,
        ],
        10,
        256,
    );
    let d = Dataset::generate(&m, &Modem::default()).unwrap();
    let split = all_train(&m);
    let net = ChainNet::<f32>::new(small_net(256, 16)).unwrap();
    let cfg = TrainConfig {
        epochs: 200,
        batch_size: 10,
        ..Default::default()
    };
    let out = train(net, &d.records, &split, &cfg).unwrap();
    let report = evaluate(&out.network, &d.records, &split.train, 64).unwrap();
    assert!(
        report.pooled_accuracy() >= 0.99,
        "training accuracy {}",
        report.pooled_accuracy()
    );
    assert!(out.history.iter().all(|e| e.train_loss.is_finite()));
}

#[test]
fn untrained_loss_is_near_ln_classes() {
    let m = manifest(ModulationScheme::ALL.to_vec(), 4, 1024);
    let d = Dataset::generate(&m, &Modem::default()).unwrap();
    let mut net = ChainNet::<f32>::new(NetworkConfig::default()).unwrap();
    let indices: Vec<usize> = (0..d.len()).collect();
    let batch = Batch::<f32>::assemble(&d.records, &indices, 1024, 14).unwrap();
    let (loss, _) = accumulate_gradients(&mut net, &batch, 1, 32).unwrap();
    let mean = loss / batch.len() as f64;
    assert!((mean - 14f64.ln()).abs() < 0.5, "{mean}");
}

#[test]
fn small_plain_step_decreases_batch_loss() {
    let m = manifest(ModulationScheme::ALL.to_vec(), 2, 128);
    let d = Dataset::generate(&m, &Modem::default()).unwrap();
    let mut net = ChainNet::<f64>::new(small_net(128, 8)).unwrap();
    let indices: Vec<usize> = (0..d.len()).collect();
    let batch = Batch::<f64>::assemble(&d.records, &indices, 128, 14).unwrap();
    // move away from the all-zero output layer so every layer sees gradient
    let mut warm = Sgd::new(0.01, 0.0).unwrap();
    for s in 0..3 {
        train_step(&mut net, &mut warm, &batch, 100 + s, 8).unwrap();
    }
    let mut sgd = Sgd::new(1e-4, 0.0).unwrap();
    for seed in [1, 2, 3] {
        let before = accumulate_gradients(&mut net, &batch, seed, 8).unwrap().0;
        train_step(&mut net, &mut sgd, &batch, seed, 8).unwrap();
        let after = accumulate_gradients(&mut net, &batch, seed, 8).unwrap().0;
        assert!(after < before, "{after} !< {before}");
    }
}

#[test]
fn evaluation_is_pure_and_consistent() {
    let m = manifest(
        vec![
            ModulationScheme::Fm,
            ModulationScheme::Qam16,
            ModulationScheme::AmDsbWc,
        ],
        6,
        128,
    );
    let d = Dataset::generate(&m, &Modem::default()).unwrap();
    let mut net = ChainNet::<f32>::new(small_net(128, 4)).unwrap();
    let split = all_train(&m);
    let mut sgd = Sgd::new(0.01, 0.9).unwrap();
    let batch = Batch::<f32>::assemble(&d.records, &split.train, 128, 14).unwrap();
    train_step(&mut net, &mut sgd, &batch, 0, 8).unwrap();

    let before = net.params().checksum();
    let a = evaluate(&net, &d.records, &split.train, 5).unwrap();
    let b = evaluate(&net, &d.records, &split.train, 7).unwrap();
    assert_eq!(net.params().checksum(), before);
    assert_eq!(a.confusion(), b.confusion());
    assert_eq!(a.pooled_accuracy(), b.pooled_accuracy());
    let cm = a.confusion();
    let trace: usize = (0..14).map(|i| cm[i][i]).sum();
    assert_eq!(trace as f64 / a.total() as f64, a.pooled_accuracy());
    let bucket = a.bucket(20).unwrap();
    let counts = bucket.class_counts();
    for s in &m.schemes {
        assert_eq!(counts[s.label() as usize], 6);
    }
    assert!(matches!(
        evaluate(&net, &d.records, &[], 4),
        Err(Error::Empty { .. })
    ));
}

#[test]
fn constant_predictor_scores_one_in_fourteen() {
    let m = DatasetManifest {
        snrs_db: vec![0, 10],
        ..manifest(ModulationScheme::ALL.to_vec(), 3, 64)
    };
    let d = Dataset::generate(&m, &Modem::default()).unwrap();
    let mut net = ChainNet::<f32>::new(small_net(64, 4)).unwrap();
    let id = net.params().find("fc3.bias").unwrap();
    net.params_mut().get_mut(id).value.data_mut()[0] = 50.0;
    let indices: Vec<usize> = (0..d.len()).collect();
    let r = evaluate(&net, &d.records, &indices, 16).unwrap();
    assert!((r.pooled_accuracy() - 1.0 / 14.0).abs() < 1e-12);
    assert!((r.accuracy_at(0).unwrap() - 1.0 / 14.0).abs() < 1e-12);
    assert!((r.mean_snr_accuracy() - 1.0 / 14.0).abs() < 1e-12);
    let csv = r.to_csv(Some(3), "test");
    assert!(csv.starts_with("epoch,split,snr_db,accuracy,loss\n3,test,0,"));
    assert!(csv.contains("3,test,all_pooled,"));
    let cm = r.confusion_csv(10).unwrap();
    assert!(cm.starts_with("true\\predicted,128APSK,128QAM"));
    assert!(cm.lines().nth(1).unwrap().starts_with("128APSK,3,0"));
}

#[test]
fn seeded_training_is_reproducible() {
    let m = manifest(vec![ModulationScheme::Fm, ModulationScheme::Qam16], 8, 128);
    let d = Dataset::generate(&m, &Modem::default()).unwrap();
    let split = split_dataset(&m, &SplitSpec::default()).unwrap();
    let cfg = TrainConfig {
        epochs: 3,
        batch_size: 4,
        ..Default::default()
    };
    let run = || {
        train(
            ChainNet::<f32>::new(small_net(128, 4)).unwrap(),
            &d.records,
            &split,
            &cfg,
        )
        .unwrap()
    };
    let a = run();
    let b = run();
    let bits = |v: Vec<f64>| v.into_iter().map(f64::to_bits).collect::<Vec<_>>();
    assert_eq!(bits(a.losses()), bits(b.losses()));
    assert_eq!(a.network.params().checksum(), b.network.params().checksum());
    let c = train(
        ChainNet::<f32>::new(small_net(128, 4)).unwrap(),
        &d.records,
        &split,
        &TrainConfig {
            seed: 1,
            ..cfg.clone()
        },
    )
    .unwrap();
    assert_ne!(bits(a.losses()), bits(c.losses()));
    assert!(a
        .history_csv()
        .starts_with("epoch,split,snr_db,accuracy,loss\n0,train,all,"));
}

#[test]
fn divergence_aborts_with_last_good_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(vec![ModulationScheme::Fm, ModulationScheme::Qam16], 4, 64);
    let d = Dataset::generate(&m, &Modem::default()).unwrap();
    let split = all_train(&m);
    let cfg = TrainConfig {
        epochs: 20,
        batch_size: 64,
        learning_rate: 1e30,
        momentum: 0.0,
        checkpoint_every: 1,
        checkpoint_dir: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let err = train(
        ChainNet::<f32>::new(small_net(64, 4)).unwrap(),
        &d.records,
        &split,
        &cfg,
    )
    .unwrap_err();
    match err {
        Error::Divergence {
            epoch, last_good, ..
        } => {
            assert!(epoch >= 1);
            let path = last_good.expect("a checkpoint was written before the blow-up");
            assert!(path.exists());
        }
        other => panic!("expected divergence, got {other}"),
    }
}

#[test]
fn checkpoint_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = NetworkConfig {
        seed: 4,
        ..small_net(128, 8)
    };
    let net = ChainNet::<f32>::new(cfg).unwrap();
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&net, &path).unwrap();
    let back: ChainNet<f32> = load_checkpoint(&path).unwrap();
    assert_eq!(back.config(), net.config());
    assert_eq!(back.params().checksum(), net.params().checksum());

    let wide: ChainNet<f64> = load_checkpoint(&path).unwrap();
    assert_eq!(wide.parameter_count(), net.parameter_count());

    let mut bytes = Vec::new();
    write_checkpoint(&net, &mut bytes).unwrap();
    let text = String::from_utf8_lossy(&bytes[..60]).to_string();
    assert!(text.starts_with("chainnet-checkpoint v1\nsignal_length=128\n"));
    assert!(read_checkpoint::<f32, _>(&bytes[..bytes.len() - 5], "cut").is_err());
    assert!(read_checkpoint::<f32, _>(&b"garbage\n"[..], "junk").is_err());
}

#[test]
fn suite_reports_and_missing_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SuiteConfig {
        network: NetworkConfig {
            kernel_count: 4,
            ..Default::default()
        },
        train: TrainConfig {
            epochs: 1,
            batch_size: 16,
            ..Default::default()
        },
        ..Default::default()
    };
    let err = run_experiment_suite(SuiteKind::LengthSweep, &cfg, dir.path(), None).unwrap_err();
    assert!(matches!(err, Error::MissingDataset { .. }));
    assert!(err.to_string().contains("chainnet gen"), "{err}");

    let m = DatasetManifest {
        schemes: vec![ModulationScheme::Fm, ModulationScheme::Qam16],
        snrs_db: vec![0, 10],
        frames_per_cell: 10,
        scenario: Scenario::Epa,
        ..DatasetManifest::desk_scale()
    };
    chainnet::dataset::write_dataset_file(
        &m,
        &Modem::default(),
        &chainnet::trainer::dataset_path(dir.path(), Scenario::Epa),
    )
    .unwrap();
    let out = dir.path().join("out");
    let report =
        run_experiment_suite(SuiteKind::LengthSweep, &cfg, dir.path(), Some(&out)).unwrap();
    let csv = std::fs::read_to_string(out.join("length-sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "signal_length,snr_0,snr_10");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("128,") && lines[4].starts_with("1024,"));
    assert_eq!(report.points.len(), 4);
    assert!(out.join("length-sweep-512-eval.csv").exists());
}
