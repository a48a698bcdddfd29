use std::fs;

use panospa::io::sequence_from_json;
use panospa::{
    generate, load_dataset, perturb, save_manifest, save_sequence, sequence_to_json, synth_taxonomy, LoadOptions,
    Manifest, ManifestEntry, PerturbParams, SynthParams, World,
};

fn tracking() -> LoadOptions {
    LoadOptions {
        tracking: true,
        world: World::Closed,
    }
}

#[test]
fn fifty_synthetic_sequences_round_trip() {
    let tax = synth_taxonomy(3, 2);
    for seed in 0..50 {
        let params = SynthParams {
            seed,
            sequence_id: format!("s{seed}"),
            frames: 4,
            height: 64,
            width: 80,
            thing_classes: 3,
            stuff_classes: 2,
            object_size: (4, 12),
            ..SynthParams::default()
        };
        let seq = generate(&params).unwrap();
        let text = sequence_to_json(&seq);
        let loaded = sequence_from_json(&text, std::path::Path::new("mem"), &tax, tracking()).unwrap();
        assert!(loaded.warnings.is_empty());
        assert_eq!(loaded.sequence, seq, "seed {seed}");
        assert_eq!(sequence_to_json(&loaded.sequence), text);
    }
}

#[test]
fn manifest_dataset_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let tax = synth_taxonomy(2, 1);
    let mut manifest = Manifest::new("disk");
    let mut originals = Vec::new();
    for i in 0..3u64 {
        let params = SynthParams {
            seed: 100 + i,
            sequence_id: format!("seq-{i}"),
            frames: 3,
            ..SynthParams::default()
        };
        let seq = generate(&params).unwrap();
        let noisy = perturb(&seq, &PerturbParams { shift_px: 1, ..PerturbParams::default() }, &tax, i).unwrap();
        let rel = format!("nested/seq-{i}.json");
        save_sequence(dir.path().join(&rel), &noisy).unwrap();
        manifest.sequences.push(ManifestEntry {
            id: seq.sequence_id.clone(),
            path: rel.into(),
            frames: Some(3),
            height: Some(seq.height),
            width: Some(seq.width),
        });
        originals.push(noisy);
    }
    let path = dir.path().join("manifest.json");
    save_manifest(&path, &manifest).unwrap();
    let ds = load_dataset(&path, &tax, tracking()).unwrap();
    assert_eq!(ds.name, "disk");
    assert_eq!(ds.sequences, originals);
}

#[test]
fn manifest_mismatch_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let tax = synth_taxonomy(1, 1);
    let seq = generate(&SynthParams {
        thing_classes: 1,
        frames: 2,
        ..SynthParams::default()
    })
    .unwrap();
    save_sequence(dir.path().join("a.json"), &seq).unwrap();
    let mut manifest = Manifest::new("bad");
    manifest.sequences.push(ManifestEntry {
        id: "other".into(),
        path: "a.json".into(),
        frames: Some(5),
        height: None,
        width: None,
    });
    let path = dir.path().join("manifest.json");
    save_manifest(&path, &manifest).unwrap();
    let err = load_dataset(&path, &tax, LoadOptions::default()).unwrap_err();
    let text = err.to_string();
    assert!(err.is_validation(), "{text}");
    let kinds: Vec<String> = match err {
        panospa::Error::Validation(v) => v.into_iter().map(|v| v.kind).collect(),
        _ => unreachable!(),
    };
    assert!(kinds.contains(&"sequence-id-mismatch".to_string()), "{kinds:?}");
    assert!(kinds.contains(&"frame-count-mismatch".to_string()), "{kinds:?}");
}

#[test]
fn invalid_files_list_every_problem_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let tax = synth_taxonomy(1, 1);
    let text = r#"{
  "sequence": "x", "height": 4, "width": 4,
  "frames": [
    {"frame_id": 0, "segments": [
      {"class": "thing-0", "track_id": 1, "rle": {"size": [4, 4], "counts": [0, 4, 12]}},
      {"class": "thing-0", "track_id": 2, "rle": {"size": [4, 4], "counts": [2, 4, 10]}}
    ]},
    {"frame_id": 1, "segments": [
      {"class": "thing-0", "track_id": 1, "rle": {"size": [4, 4], "counts": [0, 4, 3]}}
    ]}
  ]
}"#;
    fs::write(dir.path().join("x.json"), text).unwrap();
    let mut manifest = Manifest::new("d");
    manifest.sequences.push(ManifestEntry {
        id: "x".into(),
        path: "x.json".into(),
        frames: None,
        height: None,
        width: None,
    });
    let path = dir.path().join("manifest.json");
    save_manifest(&path, &manifest).unwrap();
    let reports = panospa::validate_manifest(&path, &tax, tracking()).unwrap();
    let v = &reports[0].violations;
    let found: Vec<(&str, Option<u64>)> = v.iter().map(|v| (v.kind.as_str(), v.frame)).collect();
    assert!(found.iter().any(|(k, f)| *k == "disjointness" && *f == Some(0)), "{found:?}");
    assert!(found.iter().any(|(k, f)| k.ends_with("counts") && *f == Some(1)), "{found:?}");
}
