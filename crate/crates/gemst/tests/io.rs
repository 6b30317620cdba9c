//! File-format and plumbing tests: GSTW round trips and structured parse
//! errors, config grammar and preset merging, CIFAR batch validation,
//! runner output helpers.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use gemst::config::parse_config;
use gemst::error::Error;
use gemst::init::{kaiming_init, synthetic_batch};
use gemst::runner::{logits_csv, top_k};
use gemst::verify::toy_config;
use gemst::{cifar, gstw, write_atomic};
use gemst_core::model::{Model, ModelConfig, StageKind, WeightContainer};

fn sample_container() -> WeightContainer {
    let mut entries = BTreeMap::new();
    entries.insert("a.weight".to_string(), (vec![2, 3], vec![1.0f32, -2.0, 0.5, 0.0, 3.25, -0.125]));
    entries.insert("meta/t".to_string(), (vec![1], vec![4.0f32]));
    WeightContainer { entries }
}

#[test]
fn gstw_round_trip_is_byte_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.gstw");
    let container = sample_container();
    gstw::save(&path, &container).unwrap();
    let first = fs::read(&path).unwrap();
    let loaded = gstw::load(&path).unwrap();
    assert_eq!(loaded, container);
    gstw::save(&path, &loaded).unwrap();
    assert_eq!(fs::read(&path).unwrap(), first);
}

#[test]
fn gstw_structural_defects_are_distinct_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bytes = gstw::to_bytes(&sample_container());

    let check = |mutate: &dyn Fn(&mut Vec<u8>), needle: &str| {
        let mut b = bytes.clone();
        mutate(&mut b);
        let err = gstw::from_bytes(&b, Path::new("x.gstw")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(needle), "expected '{needle}' in '{msg}'");
        assert!(matches!(err, Error::Weights(_)));
    };
    check(&|b| b[0] = b'X', "bad magic");
    check(&|b| b[4] = 9, "unsupported version 9");
    check(&|b| b.truncate(b.len() - 3), "truncated");
    check(&|b| b.extend_from_slice(&[0, 0]), "trailing bytes");

    // Entry shape conflicts are caught by the model, naming the entry.
    let mut model = Model::build(toy_config(StageKind::Conv)).unwrap();
    let mut container = gstw::container_for(&model);
    *container.entries.get_mut("header.bias").unwrap() = (vec![3], vec![0.0; 3]);
    let path = dir.path().join("bad.gstw");
    gstw::save(&path, &container).unwrap();
    let err = gstw::load_into(&path, &mut model).unwrap_err();
    assert!(err.to_string().contains("header.bias"));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn gstw_meta_round_trips_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let mut model = Model::build(toy_config(StageKind::SsaGw)).unwrap();
    kaiming_init(&mut model, 9).unwrap();
    let path = dir.path().join("w.gstw");
    gstw::save(&path, &gstw::container_for(&model)).unwrap();

    let mut fresh = Model::build(toy_config(StageKind::SsaGw)).unwrap();
    gstw::load_into(&path, &mut fresh).unwrap();
    assert_eq!(fresh.export_weights(), model.export_weights());

    // A model with a different coding period rejects the file up front.
    let mut cfg = toy_config(StageKind::SsaGw);
    cfg.t = 2;
    let mut other = Model::build(cfg).unwrap();
    let err = gstw::load_into(&path, &mut other).unwrap_err();
    assert!(err.to_string().contains("meta/t"));
}

#[test]
fn config_preset_and_overrides() {
    let cfg = parse_config("preset = small\n").unwrap();
    assert_eq!(cfg.stages[2].channels, 96);

    // Explicit sections win over the preset.
    let cfg = parse_config(
        "preset = small\nclasses = 100\n[stage.3]\ndepth = 4\nheads = 4\n",
    )
    .unwrap();
    assert_eq!(cfg.classes, 100);
    assert_eq!(cfg.stages[2].depth, 4);
    assert_eq!(cfg.stages[2].heads, 4);
    assert_eq!(cfg.stages[2].channels, 96, "unstated fields keep preset values");
    assert_eq!(cfg.stages[3].depth, ModelConfig::small().stages[3].depth);

    let text = "\
# toy model
input_size = 16
stem_kernel = 3
stem_stride = 2
stem_channels = 8
classes = 10

[stage.1]
kind = ssa_plain
depth = 1
channels = 8
feature = 8
heads = 2
";
    let cfg = parse_config(text).unwrap();
    assert_eq!(cfg.stages.len(), 1);
    assert_eq!(cfg.stages[0].kind, StageKind::SsaPlain);
    assert_eq!(cfg.t, 4, "defaults fill unstated header keys");
    Model::build(cfg).unwrap();
}

#[test]
fn config_errors_name_the_line() {
    for (text, needle) in [
        ("bogus = 1\n", "unknown key"),
        ("preset = huge\n", "unknown preset"),
        ("[stage.0]\n", "unknown section"),
        ("input_size = nope\n", "cannot parse"),
        (
            "input_size = 16\n[stage.1]\nkind = conv\ndepth = 1\nchannels = 8\nfeature = 8\n",
            "missing stem_kernel",
        ),
        ("", "no stages"),
    ] {
        let err = parse_config(text).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{text:?}");
        assert!(err.to_string().contains(needle), "{text:?} -> {err}");
        assert_eq!(err.exit_code(), 2);
    }
}

#[test]
fn cifar_batch_parsing_and_resize() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("batch.bin");

    // Two records: label byte, then R/G/B planes with a recognizable value.
    let mut bytes = Vec::new();
    for label in [3u8, 7] {
        bytes.push(label);
        for plane in 0u16..3 {
            bytes.extend((0..1024).map(|i| (plane * 50 + (i as u16 % 13) * 2) as u8));
        }
    }
    fs::write(&path, &bytes).unwrap();
    let records = cifar::read_batch(&path).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0].label, 3);
    assert_eq!(records[1].label, 7);

    let t = cifar::to_tensor(&records, 16, 10).unwrap();
    assert_eq!((t.shape.b, t.shape.h, t.shape.w, t.shape.c), (2, 16, 16, 3));
    // Nearest neighbor: destination (y, x) reads source (2y, 2x).
    let want = records[0].pixels[1 * 1024 + 4 * 32 + 6] as f64 / 255.0;
    assert_eq!(t.get(0, 0, 2, 3, 1), want);
    assert!(t.data.iter().all(|v| (0.0..=1.0).contains(v)));

    fs::write(&path, &bytes[..100]).unwrap();
    let err = cifar::read_batch(&path).unwrap_err();
    assert!(matches!(err, Error::Input(_)));
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn runner_helpers() {
    let row = [0.1, 0.9, -0.3, 0.9, 0.5];
    let top = top_k(&row, 3);
    assert_eq!(top.iter().map(|t| t.0).collect::<Vec<_>>(), vec![1, 3, 4]);

    let csv = logits_csv(&[1.0, 2.0, 3.0, 4.0], 2);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), 2);
    // Round-trip precision: the printed value parses back bit-identically.
    let v: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(v, 4.0);
}

#[test]
fn synthetic_batches_are_seed_deterministic() {
    let a = synthetic_batch(5, 2, 8, 3).unwrap();
    let b = synthetic_batch(5, 2, 8, 3).unwrap();
    let c = synthetic_batch(6, 2, 8, 3).unwrap();
    assert_eq!(a.data, b.data);
    assert_ne!(a.data, c.data);
}

#[test]
fn atomic_write_replaces_and_leaves_no_temp() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    write_atomic(&path, b"one").unwrap();
    write_atomic(&path, b"two").unwrap();
    assert_eq!(fs::read(&path).unwrap(), b"two");
    let names: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(names.len(), 1, "no temp files left: {names:?}");
}
