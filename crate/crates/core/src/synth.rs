//! Deterministic synthetic sequences and a seeded noise model.
//!
//! Random stream contract: `Xoshiro256PlusPlus` seeded with
//! `seed_from_u64(seed)` (SplitMix64 state expansion). A uniform draw is
//! `(next_u64() >> 11) * 2^-53` in `[0, 1)`; an integer in `[lo, hi]` is
//! `lo + floor(u * (hi - lo + 1))`.

use std::collections::{BTreeMap, HashMap};

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::annotation::{FrameAnnotation, Segment, SequenceAnnotation};
use crate::error::{Error, Result};
use crate::mask::Mask;
use crate::taxonomy::{ClassInfo, ClassKind, Split, Taxonomy};

struct Stream(Xoshiro256PlusPlus);

impl Stream {
    fn new(seed: u64) -> Self {
        Stream(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn int(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        let span = (hi - lo + 1) as f64;
        lo + ((self.uniform() * span) as u64).min(hi - lo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub seed: u64,
    pub sequence_id: String,
    pub frames: usize,
    pub height: u32,
    pub width: u32,
    pub thing_classes: usize,
    pub stuff_classes: usize,
    /// Inclusive range of objects per thing class.
    pub objects_per_class: (usize, usize),
    /// Inclusive range of object side lengths in pixels.
    pub object_size: (u32, u32),
    /// Pixels moved per frame along each axis.
    pub motion_step: u32,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            seed: 0,
            sequence_id: "synth".into(),
            frames: 10,
            height: 128,
            width: 128,
            thing_classes: 2,
            stuff_classes: 1,
            objects_per_class: (1, 3),
            object_size: (8, 24),
            motion_step: 2,
        }
    }
}

pub fn thing_class_name(i: usize) -> String {
    format!("thing-{i}")
}

pub fn stuff_class_name(i: usize) -> String {
    format!("stuff-{i}")
}

/// Every third class is held out as unknown.
fn split_of(i: usize) -> Split {
    if i % 3 == 2 {
        Split::Unknown
    } else {
        Split::Known
    }
}

/// Taxonomy matching [`generate`]'s class names. Always holds at least one
/// class of each kind.
pub fn synth_taxonomy(thing_classes: usize, stuff_classes: usize) -> Taxonomy {
    let mut classes = Vec::new();
    for i in 0..thing_classes.max(1) {
        classes.push(ClassInfo {
            name: thing_class_name(i),
            id: classes.len() as u32 + 1,
            kind: ClassKind::Thing,
            split: split_of(i),
        });
    }
    for i in 0..stuff_classes.max(1) {
        classes.push(ClassInfo {
            name: stuff_class_name(i),
            id: classes.len() as u32 + 1,
            kind: ClassKind::Stuff,
            split: split_of(i),
        });
    }
    Taxonomy::new(classes, BTreeMap::new()).expect("synthetic taxonomy is valid")
}

// Position bouncing inside [0, range].
fn bounce(start: i64, velocity: i64, t: i64, range: i64) -> i64 {
    if range == 0 {
        return 0;
    }
    let period = 2 * range;
    let p = (start + velocity * t).rem_euclid(period);
    if p <= range {
        p
    } else {
        period - p
    }
}

struct Object {
    class: usize,
    track_id: u64,
    cell_top: i64,
    cell_left: i64,
    h: i64,
    w: i64,
    range_y: i64,
    range_x: i64,
    y0: i64,
    x0: i64,
    vy: i64,
    vx: i64,
}

/// Rectangular thing objects moving linearly inside private grid cells (so
/// same-class masks never overlap), drawn over full-height vertical stuff
/// bands on layer 1.
pub fn generate(params: &SynthParams) -> Result<SequenceAnnotation> {
    let p = params;
    let (h, w) = (p.height, p.width);
    if p.objects_per_class.0 > p.objects_per_class.1 || p.object_size.0 > p.object_size.1 {
        return Err(Error::InfeasibleParams("range minimum exceeds maximum".into()));
    }
    if p.object_size.0 == 0 {
        return Err(Error::InfeasibleParams("objects must be at least 1 pixel".into()));
    }
    if p.stuff_classes as u64 > w as u64 {
        return Err(Error::InfeasibleParams(format!(
            "{} stuff bands do not fit in width {w}",
            p.stuff_classes
        )));
    }

    let mut rng = Stream::new(p.seed);
    let mut counts = Vec::with_capacity(p.thing_classes);
    for _ in 0..p.thing_classes {
        counts.push(rng.int(p.objects_per_class.0 as u64, p.objects_per_class.1 as u64) as usize);
    }
    let total: usize = counts.iter().sum();

    let mut objects = Vec::with_capacity(total);
    if total > 0 {
        let aspect = w as f64 / h as f64;
        let cols = ((total as f64 * aspect).sqrt().ceil() as usize).clamp(1, total);
        let rows = total.div_ceil(cols);
        let (cell_h, cell_w) = (h as usize / rows, w as usize / cols);
        let fit = cell_h.min(cell_w) as u32;
        if fit < p.object_size.0 {
            return Err(Error::InfeasibleParams(format!(
                "{total} objects of size >= {} do not fit a {h}x{w} frame",
                p.object_size.0
            )));
        }
        let max_side = p.object_size.1.min(fit) as u64;
        let mut slot = 0usize;
        for (class, &n) in counts.iter().enumerate() {
            for k in 0..n {
                let oh = rng.int(p.object_size.0 as u64, max_side) as i64;
                let ow = rng.int(p.object_size.0 as u64, max_side) as i64;
                let range_y = cell_h as i64 - oh;
                let range_x = cell_w as i64 - ow;
                let y0 = rng.int(0, range_y as u64) as i64;
                let x0 = rng.int(0, range_x as u64) as i64;
                let sy = if rng.uniform() < 0.5 { -1 } else { 1 };
                let sx = if rng.uniform() < 0.5 { -1 } else { 1 };
                objects.push(Object {
                    class,
                    track_id: k as u64 + 1,
                    cell_top: ((slot / cols) * cell_h) as i64,
                    cell_left: ((slot % cols) * cell_w) as i64,
                    h: oh,
                    w: ow,
                    range_y,
                    range_x,
                    y0,
                    x0,
                    vy: sy * p.motion_step as i64,
                    vx: sx * p.motion_step as i64,
                });
                slot += 1;
            }
        }
    }

    let bands: Vec<Mask> = (0..p.stuff_classes)
        .map(|i| {
            let left = (i as u64 * w as u64 / p.stuff_classes as u64) as u32;
            let right = ((i as u64 + 1) * w as u64 / p.stuff_classes as u64) as u32;
            Mask::from_rect(h, w, 0, left, h, right)
        })
        .collect();

    let mut seq = SequenceAnnotation::new(p.sequence_id.clone(), h, w);
    for t in 0..p.frames {
        let mut frame = FrameAnnotation::new(t as u64, h, w);
        for o in &objects {
            let top = o.cell_top + bounce(o.y0, o.vy, t as i64, o.range_y);
            let left = o.cell_left + bounce(o.x0, o.vx, t as i64, o.range_x);
            let mask = Mask::from_rect(h, w, top as u32, left as u32, (top + o.h) as u32, (left + o.w) as u32);
            frame
                .segments
                .push(Segment::new(mask, thing_class_name(o.class)).with_track(o.track_id));
        }
        for (i, band) in bands.iter().enumerate() {
            frame
                .segments
                .push(Segment::new(band.clone(), stuff_class_name(i)).with_layer(1));
        }
        seq.frames.push(frame);
    }
    Ok(seq)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PerturbParams {
    pub drop_prob: f64,
    /// Translation in pixels along a randomly chosen axis direction.
    pub shift_px: u32,
    /// Positive dilates, negative erodes, by this many pixels.
    pub iou_jitter: i32,
    pub id_switch_prob: f64,
    pub class_flip_prob: f64,
}

impl PerturbParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("drop_prob", self.drop_prob),
            ("id_switch_prob", self.id_switch_prob),
            ("class_flip_prob", self.class_flip_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParams(format!("{name} = {v} is not in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Applies, per segment and in this order: drop, shift, erode/dilate, track
/// id switch (the track keeps the new id afterwards), class flip to another
/// class of the same kind. Each segment consumes exactly five draws, so
/// changing one probability never shifts the stream seen by other stages.
/// Same-class thing overlaps created by the noise are resolved in favour of
/// the earlier segment.
pub fn perturb(
    gt: &SequenceAnnotation,
    params: &PerturbParams,
    taxonomy: &Taxonomy,
    seed: u64,
) -> Result<SequenceAnnotation> {
    params.validate()?;
    let mut rng = Stream::new(seed);
    let mut next_id = gt
        .frames
        .iter()
        .flat_map(|f| f.segments.iter().filter_map(|s| s.track_id))
        .max()
        .unwrap_or(0)
        + 1;
    let mut renamed: HashMap<(String, u64), u64> = HashMap::new();
    let same_kind = |kind: ClassKind| -> Vec<&str> {
        taxonomy
            .classes()
            .iter()
            .filter(|c| c.kind == kind)
            .map(|c| c.name.as_str())
            .collect()
    };
    let things = same_kind(ClassKind::Thing);
    let stuff = same_kind(ClassKind::Stuff);

    let mut out = gt.cleared();
    for (fi, frame) in gt.frames.iter().enumerate() {
        let mut segments = Vec::with_capacity(frame.segments.len());
        for seg in &frame.segments {
            let u_drop = rng.uniform();
            let u_dir = rng.uniform();
            let u_switch = rng.uniform();
            let u_flip = rng.uniform();
            let u_class = rng.uniform();

            if u_drop < params.drop_prob {
                continue;
            }
            let mut seg = seg.clone();
            if params.shift_px > 0 || params.iou_jitter != 0 {
                let mut bitmap = seg.mask.decode();
                if params.shift_px > 0 {
                    let d = params.shift_px as i64;
                    let (dx, dy) = match (u_dir * 4.0) as u32 {
                        0 => (d, 0),
                        1 => (-d, 0),
                        2 => (0, d),
                        _ => (0, -d),
                    };
                    bitmap = bitmap.shifted(dx, dy);
                }
                if params.iou_jitter > 0 {
                    bitmap = bitmap.dilated(params.iou_jitter as u32);
                } else if params.iou_jitter < 0 {
                    bitmap = bitmap.eroded(params.iou_jitter.unsigned_abs());
                }
                seg.mask = Mask::encode(&bitmap);
            }

            let class = taxonomy.class(&seg.class_name)?;
            if let Some(id) = seg.track_id {
                let key = (seg.class_name.clone(), id);
                if u_switch < params.id_switch_prob {
                    renamed.insert(key.clone(), next_id);
                    next_id += 1;
                }
                if let Some(&new) = renamed.get(&key) {
                    seg.track_id = Some(new);
                }
            }
            if u_flip < params.class_flip_prob {
                let pool = if class.is_thing() { &things } else { &stuff };
                let others: Vec<&str> = pool.iter().copied().filter(|c| *c != class.name).collect();
                if !others.is_empty() {
                    let pick = ((u_class * others.len() as f64) as usize).min(others.len() - 1);
                    seg.class_name = others[pick].to_string();
                    if seg.track_id.is_some() {
                        seg.track_id = Some(next_id);
                        next_id += 1;
                    }
                }
            }
            if !seg.mask.is_empty() {
                segments.push(seg);
            }
        }

        // earlier same-class things keep contested pixels
        let mut claimed: HashMap<String, Mask> = HashMap::new();
        let mut kept = Vec::with_capacity(segments.len());
        for mut seg in segments {
            if taxonomy.class(&seg.class_name)?.is_thing() {
                if let Some(acc) = claimed.get_mut(&seg.class_name) {
                    let rest = seg.mask.difference(acc)?;
                    *acc = acc.union(&seg.mask)?;
                    seg.mask = rest;
                } else {
                    claimed.insert(seg.class_name.clone(), seg.mask.clone());
                }
                if seg.mask.is_empty() {
                    continue;
                }
            }
            kept.push(seg);
        }
        out.frames[fi].segments = kept;
    }
    Ok(out)
}
