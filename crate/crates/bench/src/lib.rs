//! Fixture builders shared by the benchmarks.

use panospa::{generate, perturb, synth_taxonomy, PerturbParams, SequenceAnnotation, SynthParams, Taxonomy};

/// A synthetic ground-truth sequence with `masks` segments per frame and a
/// noisy prediction of it.
pub fn scene(frames: usize, masks: usize, seed: u64) -> (Taxonomy, SequenceAnnotation, SequenceAnnotation) {
    let stuff = 4.min(masks);
    let thing_classes = 4;
    let per_class = (masks - stuff) / thing_classes;
    let params = SynthParams {
        seed,
        frames,
        height: 240,
        width: 320,
        thing_classes,
        stuff_classes: stuff,
        objects_per_class: (per_class, per_class),
        object_size: (6, 20),
        ..SynthParams::default()
    };
    let taxonomy = synth_taxonomy(thing_classes, stuff);
    let gt = generate(&params).expect("feasible benchmark scene");
    let noise = PerturbParams {
        drop_prob: 0.1,
        shift_px: 2,
        ..PerturbParams::default()
    };
    let pred = perturb(&gt, &noise, &taxonomy, seed ^ 0x5eed).expect("valid noise");
    (taxonomy, gt, pred)
}
