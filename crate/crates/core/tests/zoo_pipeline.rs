mod common;

use std::fs;
use std::path::Path;

use prunability::measures::MeasureKind;
use prunability::nncore::checkpoint;
use prunability::zoo::*;
use prunability::Error;

fn tiny_manifest() -> SweepManifest {
    let mut m = SweepManifest::fast();
    m.manifest_id = "tiny-8".into();
    m.axes = SweepAxes {
        widths: vec![4, 8],
        depths: vec![1],
        dropouts: vec![0.0],
        weight_decays: vec![0.0],
        augmentations: vec![false, true],
        seeds: vec![0, 1],
    };
    m.train.epochs = 3;
    m.measures = vec![MeasureKind::Prunability, MeasureKind::Fro, MeasureKind::ParameterCount, MeasureKind::PacBayes];
    if let DatasetSpec::SyntheticGaussianMixture(spec) = &mut m.dataset {
        spec.m_train = 64;
        spec.m_test = 64;
    }
    m
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn rerun_reuses_every_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let m = tiny_manifest();
    let first = run_sweep(&m, dir.path()).unwrap();
    assert_eq!((first.trained, first.reused), (8, 0));
    let measures = read(dir.path(), MEASURES_FILE);
    let models = read(dir.path(), MODELS_FILE);

    let second = run_sweep(&m, dir.path()).unwrap();
    assert_eq!((second.trained, second.reused), (0, 8));
    assert_eq!(read(dir.path(), MEASURES_FILE), measures);
    assert_eq!(read(dir.path(), MODELS_FILE), models);
}

#[test]
fn missing_or_corrupt_checkpoints_are_retrained() {
    let dir = tempfile::tempdir().unwrap();
    let m = tiny_manifest();
    run_sweep(&m, dir.path()).unwrap();
    let measures = read(dir.path(), MEASURES_FILE);
    let points = m.axes.points();
    let ckpt = |i: usize| dir.path().join(CHECKPOINT_DIR).join(checkpoint_name(&m.manifest_id, &points[i].model_id()));

    fs::remove_file(ckpt(2)).unwrap();
    let mut bytes = fs::read(ckpt(5)).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x40;
    fs::write(ckpt(5), bytes).unwrap();

    let again = run_sweep(&m, dir.path()).unwrap();
    assert_eq!((again.trained, again.reused), (2, 6));
    // Retraining from the same seeds reproduces the same models.
    assert_eq!(read(dir.path(), MEASURES_FILE), measures);
}

#[test]
fn measure_recompute_matches_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let m = tiny_manifest();
    let outcome = run_sweep(&m, dir.path()).unwrap();
    let redo = measure_existing(dir.path(), &m).unwrap();
    assert_eq!(redo.table.to_csv(), outcome.table.to_csv());
    assert_eq!(redo.trained, 0);

    let (stored, records) = load_sweep(dir.path()).unwrap();
    assert_eq!(stored, m);
    assert_eq!(records.len(), 8);
    assert_eq!(records[3].id, m.axes.points()[3].model_id());
}

#[test]
fn changed_grid_is_rejected_for_recompute() {
    let dir = tempfile::tempdir().unwrap();
    let m = tiny_manifest();
    run_sweep(&m, dir.path()).unwrap();
    let mut other = m.clone();
    other.axes.seeds = vec![0];
    assert!(matches!(measure_existing(dir.path(), &other), Err(Error::Config(_))));
}

#[test]
fn model_table_lists_axes_and_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_sweep(&tiny_manifest(), dir.path()).unwrap();
    let text = read(dir.path(), MODELS_FILE);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with(MODELS_HEADER));
    assert!(header.contains("width") && header.contains("seed"));
    assert_eq!(lines.count(), 8);
    let gaps = prunability::evalstats::ModelGaps::from_csv(&text).unwrap();
    assert_eq!(gaps.ids, outcome.models.ids);
    for (a, b) in gaps.gaps.iter().zip(&outcome.models.gaps) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn failure_cap_stops_before_measures() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = tiny_manifest();
    // A huge learning rate diverges every run.
    m.train.learning_rate.initial = 1e250;
    match run_sweep(&m, dir.path()) {
        Err(Error::FailureCap { failed, total, .. }) => assert_eq!((failed, total), (8, 8)),
        other => panic!("expected failure cap, got {other:?}"),
    }
    assert!(!dir.path().join(MEASURES_FILE).exists());
    let ledger = RunLedger::open(&dir.path().join(LEDGER_FILE)).unwrap();
    assert!(ledger.entries().all(|e| e.status == RunStatus::Failed && e.error.is_some()));
}

#[test]
fn manifest_json_round_trip_and_errors() {
    let m = SweepManifest::miniature();
    assert_eq!(m.axes.model_count(), 216);
    assert_eq!(SweepManifest::from_json(&m.to_json()).unwrap(), m);
    assert!(matches!(SweepManifest::from_json("{\"schema_version\": 1,"), Err(Error::Schema { .. })));
    let mut bad = m.clone();
    bad.schema_version = 9;
    assert!(SweepManifest::from_json(&bad.to_json()).is_err());
}

#[test]
fn checkpoint_names_are_stable_and_distinct() {
    let a = checkpoint_name("m", "w16-d1-p0-wd0-aug0-s0");
    assert_eq!(a, checkpoint_name("m", "w16-d1-p0-wd0-aug0-s0"));
    assert_ne!(a, checkpoint_name("m", "w16-d1-p0-wd0-aug0-s1"));
    assert_ne!(a, checkpoint_name("n", "w16-d1-p0-wd0-aug0-s0"));
    assert!(a.ends_with(".ckpt") && a.len() == 24 + 5);
}

#[test]
fn ledger_keeps_latest_entry() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("l.jsonl");
    let entry = |status| LedgerEntry {
        model_id: "a".into(),
        status,
        checkpoint: None,
        digest: None,
        wall_time_s: 0.0,
        error: None,
    };
    {
        let l = RunLedger::open(&path).unwrap();
        l.append(&entry(RunStatus::Failed)).unwrap();
        l.append(&entry(RunStatus::Trained)).unwrap();
    }
    let l = RunLedger::open(&path).unwrap();
    assert_eq!(l.latest("a").unwrap().status, RunStatus::Trained);
    fs::write(&path, "not json\n").unwrap();
    assert!(matches!(RunLedger::open(&path), Err(Error::Schema { .. })));
}

#[test]
fn checkpoint_round_trip_and_digest_check() {
    let (record, _, _) = common::trained_toy(1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    let digest = checkpoint::save(&path, &record).unwrap();
    let back = checkpoint::load(&path, Some(&digest)).unwrap();
    assert_eq!(back, record);
    assert!(checkpoint::load(&path, Some("00")).is_err());
    let bytes = fs::read(&path).unwrap();
    assert!(checkpoint::decode(&bytes[..bytes.len() - 3]).is_err());
    assert!(checkpoint::decode(b"NOTACKPT").is_err());
}

#[test]
fn idx_round_trip() {
    let (rows, cols) = (3, 2);
    let pixels: Vec<u8> = (0..4 * rows * cols).map(|i| (i * 37 % 256) as u8).collect();
    let labels = vec![0u8, 3, 1, 9];
    let images = encode_images(rows, cols, &pixels);
    let encoded_labels = encode_labels(&labels);
    assert_eq!(parse_images(&images).unwrap(), (4, rows, cols, pixels.clone()));
    assert_eq!(parse_labels(&encoded_labels).unwrap(), labels);

    let data = dataset_from_idx(&images, &encoded_labels).unwrap();
    assert_eq!(data.inputs().shape(), &[4, 1, rows, cols]);
    assert_eq!(data.labels(), &[0, 3, 1, 9]);
    assert!((data.inputs().data()[1] - pixels[1] as f64 / 255.0).abs() < 1e-15);

    let dir = tempfile::tempdir().unwrap();
    let (ip, lp) = (dir.path().join("i.idx"), dir.path().join("l.idx"));
    write_idx(&ip, &lp, rows, cols, &pixels, &labels).unwrap();
    assert_eq!(load_idx(&ip, &lp).unwrap(), data);
}

#[test]
fn idx_rejects_bad_input() {
    let images = encode_images(2, 2, &[1, 2, 3, 4, 5, 6, 7, 8]);
    assert!(matches!(parse_images(&images[..images.len() - 1]), Err(Error::Parse { .. })));
    let mut wrong_magic = images.clone();
    wrong_magic[3] = 0x01;
    assert!(parse_images(&wrong_magic).is_err());
    assert!(parse_labels(&images).is_err());
    // Label count must match the image count.
    assert!(dataset_from_idx(&images, &encode_labels(&[1, 2, 3])).is_err());
}

#[test]
fn cifar_records_parse() {
    let mut bytes = Vec::new();
    for label in [2u8, 7] {
        bytes.push(label);
        bytes.extend((0..RECORD_BYTES - 1).map(|i| (i % 256) as u8));
    }
    let (mut data, mut labels) = (Vec::new(), Vec::new());
    parse_cifar(&bytes, 10, &mut data, &mut labels).unwrap();
    assert_eq!(labels, vec![2, 7]);
    assert_eq!(data.len(), 2 * 3072);
    assert!((data[3072 + 255] - 1.0).abs() < 1e-15);
    assert!(parse_cifar(&bytes[..RECORD_BYTES + 10], 10, &mut Vec::new(), &mut Vec::new()).is_err());
    assert!(parse_cifar(&bytes, 5, &mut Vec::new(), &mut Vec::new()).is_err());
}

#[test]
fn synthetic_data_is_seeded() {
    let spec = SyntheticSpec { m_train: 32, m_test: 16, label_noise: 0.25, ..Default::default() };
    let (a, b) = gen_synthetic(&spec).unwrap();
    assert_eq!(gen_synthetic(&spec).unwrap(), (a.clone(), b.clone()));
    assert_eq!((a.len(), b.len()), (32, 16));
    let other = gen_synthetic(&SyntheticSpec { seed: 1, ..spec }).unwrap();
    assert_ne!(other.0, a);
}
