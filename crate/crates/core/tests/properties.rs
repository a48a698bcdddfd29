use panospa::io::flatten_multilabel;
use panospa::pipeline::{evaluate_ps_datasets, evaluate_pt_datasets, EvalOptions};
use panospa::{
    generate, ospa2_breakdowns, ospa_ps_dataset, perturb, pq, synth_taxonomy, ClassFilter, Dataset, FrameAnnotation,
    Mask, PerturbParams, PtOptions, Subset, SynthParams,
};
use proptest::prelude::*;

fn synth(seed: u64, things: usize, stuff: usize, objects: (usize, usize), frames: usize) -> SynthParams {
    SynthParams {
        seed,
        frames,
        height: 64,
        width: 96,
        thing_classes: things,
        stuff_classes: stuff,
        objects_per_class: objects,
        object_size: (4, 12),
        ..SynthParams::default()
    }
}

fn pixels(frame: &FrameAnnotation) -> Mask {
    Mask::union_all(frame.height, frame.width, frame.segments.iter().map(|s| &s.mask)).unwrap()
}

fn dataset(seq: panospa::SequenceAnnotation) -> Dataset {
    Dataset {
        name: "d".into(),
        sequences: vec![seq],
        warnings: Vec::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn flatten_is_idempotent_and_conserves_pixels(seed in 0u64..10_000, things in 1usize..4, stuff in 1usize..4) {
        let tax = synth_taxonomy(things, stuff);
        let seq = generate(&synth(seed, things, stuff, (0, 3), 3)).unwrap();
        for f in &seq.frames {
            let flat = flatten_multilabel(f, &tax).unwrap();
            prop_assert_eq!(&flatten_multilabel(&flat, &tax).unwrap(), &flat);
            prop_assert_eq!(pixels(&flat), pixels(f));
            prop_assert!(flat.ensure_single_label().is_ok());
        }
    }

    #[test]
    fn noisy_prediction_scores_stay_in_range(seed in 0u64..10_000, drop in 0.0f64..1.0, shift in 0u32..4, switch in 0.0f64..0.5) {
        let tax = synth_taxonomy(2, 2);
        let gt = generate(&synth(seed, 2, 2, (1, 3), 4)).unwrap();
        let noise = PerturbParams { drop_prob: drop, shift_px: shift, id_switch_prob: switch, ..PerturbParams::default() };
        let pred = perturb(&gt, &noise, &tax, seed ^ 7).unwrap();
        let s = ospa_ps_dataset(&gt.frames, &pred.frames, &tax, ClassFilter::ALL).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&s.total));
        prop_assert!((s.total - s.loc - s.card).abs() < 1e-12);
        let b = ospa2_breakdowns(&gt, &pred, &tax, ClassFilter::ALL, PtOptions::default()).unwrap();
        for part in [&b.all, &b.thing, &b.stuff, &b.known, &b.unknown] {
            prop_assert!((0.0..=1.0).contains(&part.mean.total));
        }
    }

    #[test]
    fn known_and_unknown_partition_the_classes(seed in 0u64..10_000) {
        let tax = synth_taxonomy(3, 3);
        let gt = generate(&synth(seed, 3, 3, (1, 2), 2)).unwrap();
        let known = gt.filter_subset(&tax, ClassFilter::KNOWN);
        let unknown = gt.filter_subset(&tax, ClassFilter::UNKNOWN);
        prop_assert_eq!(known.segment_count() + unknown.segment_count(), gt.segment_count());
        prop_assert_eq!(gt.filter_subset(&tax, ClassFilter::ALL), gt.clone());
    }
}

#[test]
fn drop_quarter_of_twenty_objects_costs_a_quarter() {
    let tax = synth_taxonomy(1, 0);
    let mut total = 0.0;
    for seed in 0..50 {
        let params = SynthParams {
            height: 200,
            width: 250,
            object_size: (8, 30),
            ..synth(seed, 1, 0, (20, 20), 10)
        };
        let gt = generate(&params).unwrap();
        let noise = PerturbParams {
            drop_prob: 0.25,
            ..PerturbParams::default()
        };
        let pred = perturb(&gt, &noise, &tax, 500 + seed).unwrap();
        let v = ospa_ps_dataset(&gt.frames, &pred.frames, &tax, ClassFilter::ALL).unwrap().value;
        assert_eq!(v.loc, 0.0);
        total += v.total;
    }
    let mean = total / 50.0;
    assert!((mean - 0.25).abs() <= 0.03, "mean {mean}");
}

#[test]
fn perfect_pq_implies_zero_ospa() {
    let tax = synth_taxonomy(2, 2);
    for seed in 0..10 {
        let gt = generate(&synth(seed, 2, 2, (1, 4), 3)).unwrap();
        let flat: Vec<_> = gt.frames.iter().map(|f| flatten_multilabel(f, &tax).unwrap()).collect();
        assert_eq!(pq(&flat, &flat, &tax, ClassFilter::ALL).unwrap().pq, 1.0);
        assert_eq!(ospa_ps_dataset(&flat, &flat, &tax, ClassFilter::ALL).unwrap().value.total, 0.0);
    }
}

#[test]
fn missing_unknown_tracks_only_hurt_the_unknown_split() {
    let tax = synth_taxonomy(3, 3);
    let gt = generate(&synth(11, 3, 3, (1, 3), 5)).unwrap();
    let mut pred = gt.clone();
    for f in &mut pred.frames {
        f.segments.retain(|s| tax.get(&s.class_name).unwrap().split == panospa::Split::Known);
    }
    let b = ospa2_breakdowns(&gt, &pred, &tax, ClassFilter::ALL, PtOptions::default()).unwrap();
    assert_eq!(b.unknown.mean.total, 1.0);
    assert_eq!(b.known.mean.total, 0.0);

    let report = evaluate_pt_datasets(&dataset(gt.clone()), &dataset(pred), &tax, &EvalOptions::default()).unwrap();
    let block = report.ospa2_pt.unwrap();
    assert_eq!(block.unknown.unwrap().value.total, 1.0);
    assert_eq!(block.known.unwrap().value.total, 0.0);
}

#[test]
fn subset_reports_restrict_the_class_set() {
    let tax = synth_taxonomy(2, 2);
    let gt = generate(&synth(3, 2, 2, (1, 3), 4)).unwrap();
    let pred = perturb(&gt, &PerturbParams { shift_px: 2, ..PerturbParams::default() }, &tax, 4).unwrap();
    let opts = EvalOptions {
        subset: Subset::Thing,
        ..EvalOptions::default()
    };
    let report = evaluate_ps_datasets(&dataset(gt), &dataset(pred), &tax, &opts).unwrap();
    let block = report.ospa_ps.unwrap();
    assert!(block.all.per_class.keys().all(|c| c.starts_with("thing-")));
    assert!(block.thing.is_none() && block.stuff.is_none());
}

#[test]
fn reports_are_reproducible() {
    let tax = synth_taxonomy(2, 1);
    let gt = generate(&synth(21, 2, 1, (1, 3), 6)).unwrap();
    let noise = PerturbParams {
        drop_prob: 0.2,
        shift_px: 1,
        iou_jitter: -1,
        id_switch_prob: 0.1,
        class_flip_prob: 0.1,
    };
    let a = perturb(&gt, &noise, &tax, 9).unwrap();
    let b = perturb(&gt, &noise, &tax, 9).unwrap();
    assert_eq!(a, b);
    let r1 = evaluate_pt_datasets(&dataset(gt.clone()), &dataset(a), &tax, &EvalOptions::default()).unwrap();
    let r2 = evaluate_pt_datasets(&dataset(gt), &dataset(b), &tax, &EvalOptions::default()).unwrap();
    assert_eq!(r1.to_json(), r2.to_json());
    assert_eq!(r1.to_csv().unwrap(), r2.to_csv().unwrap());
}
