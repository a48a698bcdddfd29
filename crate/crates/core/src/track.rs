//! Trajectory-level OSPA² for panoptic tracking.
//!
//! Two tracks are compared frame by frame over their time domains: `1 - IoU`
//! where both exist, 1 where only one does. The time average of that distance
//! is the base distance fed to the same OSPA set formula used for frames.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::{SequenceAnnotation, Track};
use crate::error::{Error, Result};
use crate::ospa::{ospa_from_distances, OspaComponents, OspaScore, OspaSummary, SummaryBuilder};
use crate::taxonomy::{ClassFilter, Taxonomy};

/// Frames over which a pair of tracks is averaged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemporalWindow {
    /// Union of the two tracks' domains.
    #[default]
    Union,
    /// Every frame of the sequence; frames where neither track exists add 0.
    Sequence,
}

impl TemporalWindow {
    pub fn as_str(self) -> &'static str {
        match self {
            TemporalWindow::Union => "union",
            TemporalWindow::Sequence => "sequence",
        }
    }
}

/// Time-averaged distance over the union of both domains.
pub fn track_distance(a: &Track, b: &Track) -> Result<f64> {
    let (sum, union) = track_distance_parts(a, b)?;
    Ok(if union == 0 { 0.0 } else { sum / union as f64 })
}

/// Time-averaged distance over a fixed window of `window_len` frames that
/// contains both domains.
pub fn track_distance_windowed(a: &Track, b: &Track, window_len: usize) -> Result<f64> {
    let (sum, union) = track_distance_parts(a, b)?;
    if window_len < union {
        return Err(Error::InvalidWindow(format!(
            "window of {window_len} frames is shorter than the {union}-frame track union"
        )));
    }
    Ok(if window_len == 0 { 0.0 } else { sum / window_len as f64 })
}

// (sum of per-frame distances, |D_a ∪ D_b|)
fn track_distance_parts(a: &Track, b: &Track) -> Result<(f64, usize)> {
    if a.class_name != b.class_name {
        return Err(Error::ClassMismatch {
            left: a.class_name.clone(),
            right: b.class_name.clone(),
        });
    }
    let mut ia = a.observations.iter().peekable();
    let mut ib = b.observations.iter().peekable();
    let mut sum = 0.0;
    let mut union = 0usize;
    loop {
        let step = match (ia.peek(), ib.peek()) {
            (None, None) => break,
            (Some(_), None) => {
                ia.next();
                1.0
            }
            (None, Some(_)) => {
                ib.next();
                1.0
            }
            (Some((ta, ma)), Some((tb, mb))) => match ta.cmp(tb) {
                std::cmp::Ordering::Less => {
                    ia.next();
                    1.0
                }
                std::cmp::Ordering::Greater => {
                    ib.next();
                    1.0
                }
                std::cmp::Ordering::Equal => {
                    let d = 1.0 - ma.iou(mb)?;
                    ia.next();
                    ib.next();
                    d
                }
            },
        };
        sum += step;
        union += 1;
    }
    Ok((sum, union))
}

/// OSPA² between two track sets of one class.
pub fn ospa2_tracks(
    gt: &[&Track],
    pred: &[&Track],
    window: TemporalWindow,
    sequence_len: usize,
) -> Result<OspaComponents> {
    let cols = pred.len();
    let dist = gt
        .par_iter()
        .flat_map_iter(|g| {
            pred.iter().map(move |p| match window {
                TemporalWindow::Union => track_distance(g, p),
                TemporalWindow::Sequence => track_distance_windowed(g, p, sequence_len),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    ospa_from_distances(gt.len(), pred.len(), |i, j| dist[i * cols + j])
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PtOptions {
    pub window: TemporalWindow,
}

/// Sequence-level OSPA²_PT: per-class OSPA over track sets, averaged over the
/// classes (within `filter`) that have a track on either side.
pub fn ospa2_pt(
    gt: &SequenceAnnotation,
    pred: &SequenceAnnotation,
    taxonomy: &Taxonomy,
    filter: ClassFilter,
    options: PtOptions,
) -> Result<OspaScore> {
    if gt.dims() != pred.dims() {
        return Err(Error::DimensionMismatch {
            left: gt.dims(),
            right: pred.dims(),
        });
    }
    let gt_tracks = gt.tracks(taxonomy, filter)?;
    let pred_tracks = pred.tracks(taxonomy, filter)?;
    let mut by_class: BTreeMap<&str, (Vec<&Track>, Vec<&Track>)> = BTreeMap::new();
    for t in &gt_tracks {
        by_class.entry(&t.class_name).or_default().0.push(t);
    }
    for t in &pred_tracks {
        by_class.entry(&t.class_name).or_default().1.push(t);
    }
    let sequence_len = window_len(gt, pred);
    let per_class = by_class
        .into_par_iter()
        .map(|(class, (g, p))| {
            ospa2_tracks(&g, &p, options.window, sequence_len).map(|c| (class.to_string(), c))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(OspaScore::from_classes(per_class))
}

// Frames spanned by either sequence.
fn window_len(gt: &SequenceAnnotation, pred: &SequenceAnnotation) -> usize {
    let mut ids: Vec<u64> = gt
        .frames
        .iter()
        .chain(&pred.frames)
        .map(|f| f.frame_id)
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids.len()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PtBreakdown {
    pub all: OspaScore,
    pub thing: OspaScore,
    pub stuff: OspaScore,
    pub known: OspaScore,
    pub unknown: OspaScore,
}

/// O²_PT restricted to thing, stuff, known and unknown classes, each
/// intersected with `base`.
pub fn ospa2_breakdowns(
    gt: &SequenceAnnotation,
    pred: &SequenceAnnotation,
    taxonomy: &Taxonomy,
    base: ClassFilter,
    options: PtOptions,
) -> Result<PtBreakdown> {
    let run = |f: ClassFilter| match base.and(f) {
        Some(filter) => ospa2_pt(gt, pred, taxonomy, filter, options),
        None => Ok(OspaScore::default()),
    };
    Ok(PtBreakdown {
        all: run(ClassFilter::ALL)?,
        thing: run(ClassFilter::THING)?,
        stuff: run(ClassFilter::STUFF)?,
        known: run(ClassFilter::KNOWN)?,
        unknown: run(ClassFilter::UNKNOWN)?,
    })
}

/// Dataset-level aggregate: mean of per-sequence class means.
pub fn summarize_sequences<'a>(scores: impl IntoIterator<Item = &'a OspaScore>) -> OspaSummary {
    let mut builder = SummaryBuilder::default();
    for s in scores {
        builder.add(s);
    }
    builder.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{FrameAnnotation, Segment};
    use crate::mask::Mask;
    use crate::ospa::ospa_ps;
    use crate::taxonomy::{ClassInfo, ClassKind, Split};
    use rand_core::{RngCore, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    const EPS: f64 = 1e-12;

    fn track(class: &str, id: u64, frames: impl IntoIterator<Item = (u64, Mask)>) -> Track {
        Track {
            class_name: class.into(),
            track_id: Some(id),
            observations: frames.into_iter().collect(),
        }
    }

    fn sq(t: u32, l: u32) -> Mask {
        Mask::from_rect(16, 16, t, l, t + 4, l + 4)
    }

    fn taxonomy() -> Taxonomy {
        Taxonomy::new(
            vec![
                ClassInfo {
                    name: "person".into(),
                    id: 1,
                    kind: ClassKind::Thing,
                    split: Split::Known,
                },
                ClassInfo {
                    name: "cart".into(),
                    id: 2,
                    kind: ClassKind::Thing,
                    split: Split::Unknown,
                },
                ClassInfo {
                    name: "floor".into(),
                    id: 3,
                    kind: ClassKind::Stuff,
                    split: Split::Known,
                },
            ],
            Default::default(),
        )
        .unwrap()
    }

    fn sequence(n: u64, tracks: &[(&str, Option<u64>, Vec<(u64, Mask)>)]) -> SequenceAnnotation {
        let mut seq = SequenceAnnotation::new("seq", 16, 16);
        for t in 1..=n {
            let mut frame = FrameAnnotation::new(t, 16, 16);
            for (class, id, obs) in tracks {
                for (ft, m) in obs {
                    if *ft == t {
                        let mut s = Segment::new(m.clone(), *class);
                        s.track_id = *id;
                        frame.segments.push(s);
                    }
                }
            }
            seq.frames.push(frame);
        }
        seq
    }

    #[test]
    fn distance_examples() {
        let a = track("person", 1, (1..=4).map(|t| (t, sq(0, 0))));
        assert_eq!(track_distance(&a, &a).unwrap(), 0.0);
        let far = track("person", 2, (5..=8).map(|t| (t, sq(0, 0))));
        assert_eq!(track_distance(&a, &far).unwrap(), 1.0);
        let b = track("person", 3, (3..=6).map(|t| (t, sq(0, 0))));
        assert!((track_distance(&a, &b).unwrap() - 2.0 / 3.0).abs() <= EPS);
        assert!((track_distance_windowed(&a, &b, 10).unwrap() - 0.4).abs() <= EPS);
        assert!(matches!(track_distance_windowed(&a, &b, 5), Err(Error::InvalidWindow(_))));
        let other = track("cart", 1, [(1, sq(0, 0))]);
        assert!(matches!(track_distance(&a, &other), Err(Error::ClassMismatch { .. })));
    }

    #[test]
    fn split_track_fixture() {
        let tax = taxonomy();
        let gt = sequence(6, &[("person", Some(1), (1..=6).map(|t| (t, sq(2, 2))).collect())]);
        let pred = sequence(
            6,
            &[
                ("person", Some(10), (1..=3).map(|t| (t, sq(2, 2))).collect()),
                ("person", Some(11), (4..=6).map(|t| (t, sq(2, 2))).collect()),
            ],
        );
        let s = ospa2_pt(&gt, &pred, &tax, ClassFilter::ALL, PtOptions::default()).unwrap();
        assert!((s.mean.total - 0.75).abs() <= EPS);
        assert!((s.mean.loc - 0.25).abs() <= EPS);
        assert!((s.mean.card - 0.5).abs() <= EPS);

        let missing = sequence(6, &[]);
        let s = ospa2_pt(&gt, &missing, &tax, ClassFilter::ALL, PtOptions::default()).unwrap();
        assert_eq!(s.per_class["person"], OspaComponents::UNMATCHED);

        let same = ospa2_pt(&gt, &gt, &tax, ClassFilter::ALL, PtOptions::default()).unwrap();
        assert_eq!(same.mean, OspaComponents::ZERO);
    }

    #[test]
    fn merging_disjoint_fragments_never_hurts() {
        let tax = taxonomy();
        let gt = sequence(6, &[("person", Some(1), (1..=6).map(|t| (t, sq(2, 2))).collect())]);
        let split = sequence(
            6,
            &[
                ("person", Some(10), (1..=3).map(|t| (t, sq(2, 3))).collect()),
                ("person", Some(11), (4..=6).map(|t| (t, sq(2, 2))).collect()),
            ],
        );
        let merged = sequence(
            6,
            &[(
                "person",
                Some(10),
                (1..=6).map(|t| (t, if t <= 3 { sq(2, 3) } else { sq(2, 2) })).collect(),
            )],
        );
        let opts = PtOptions::default();
        let a = ospa2_pt(&gt, &split, &tax, ClassFilter::ALL, opts).unwrap().mean.total;
        let b = ospa2_pt(&gt, &merged, &tax, ClassFilter::ALL, opts).unwrap().mean.total;
        assert!(b <= a + EPS);
    }

    #[test]
    fn random_track_axioms_and_renaming() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(77);
        let mut random_track = |id| {
            let mut obs = Vec::new();
            for t in 1..=8u64 {
                if rng.next_u64() % 3 != 0 {
                    let r = (rng.next_u64() % 10) as u32;
                    let c = (rng.next_u64() % 10) as u32;
                    obs.push((t, sq(r, c)));
                }
            }
            track("person", id, obs)
        };
        for i in 0..200 {
            let (a, b, c) = (random_track(i), random_track(i + 1), random_track(i + 2));
            let ab = track_distance(&a, &b).unwrap();
            assert_eq!(ab, track_distance(&b, &a).unwrap());
            let ac = track_distance(&a, &c).unwrap();
            let cb = track_distance(&c, &b).unwrap();
            assert!(ab <= ac + cb + EPS, "{ab} > {ac} + {cb}");
        }
    }

    #[test]
    fn ids_do_not_matter_and_single_frame_matches_ps() {
        let tax = taxonomy();
        let gt = sequence(
            1,
            &[
                ("person", Some(1), vec![(1, sq(0, 0))]),
                ("person", Some(2), vec![(1, sq(8, 8))]),
                ("floor", None, vec![(1, Mask::from_rect(16, 16, 12, 0, 16, 16))]),
            ],
        );
        let pred = sequence(
            1,
            &[
                ("person", Some(5), vec![(1, sq(1, 0))]),
                ("floor", None, vec![(1, Mask::from_rect(16, 16, 10, 0, 16, 16))]),
            ],
        );
        let renamed = sequence(
            1,
            &[
                ("person", Some(99), vec![(1, sq(1, 0))]),
                ("floor", None, vec![(1, Mask::from_rect(16, 16, 10, 0, 16, 16))]),
            ],
        );
        let opts = PtOptions::default();
        let a = ospa2_pt(&gt, &pred, &tax, ClassFilter::ALL, opts).unwrap();
        let b = ospa2_pt(&gt, &renamed, &tax, ClassFilter::ALL, opts).unwrap();
        assert_eq!(a, b);
        let ps = ospa_ps(&gt.frames[0], &pred.frames[0], &tax, ClassFilter::ALL).unwrap();
        assert!((a.mean.total - ps.mean.total).abs() <= EPS);
        for (class, c) in &ps.per_class {
            assert!((a.per_class[class].total - c.total).abs() <= EPS);
        }
    }

    #[test]
    fn breakdowns_partition_classes() {
        let tax = taxonomy();
        let gt = sequence(
            3,
            &[
                ("person", Some(1), (1..=3).map(|t| (t, sq(0, 0))).collect()),
                ("cart", Some(1), (1..=3).map(|t| (t, sq(8, 8))).collect()),
                ("floor", None, (1..=3).map(|t| (t, Mask::from_rect(16, 16, 12, 0, 16, 16))).collect()),
            ],
        );
        let no_cart = sequence(
            3,
            &[
                ("person", Some(1), (1..=3).map(|t| (t, sq(0, 0))).collect()),
                ("floor", None, (1..=3).map(|t| (t, Mask::from_rect(16, 16, 12, 0, 16, 16))).collect()),
            ],
        );
        let b = ospa2_breakdowns(&gt, &no_cart, &tax, ClassFilter::ALL, PtOptions::default()).unwrap();
        assert_eq!(b.unknown.mean.total, 1.0);
        assert_eq!(b.known.mean.total, 0.0);
        let known: Vec<_> = b.known.per_class.keys().collect();
        let unknown: Vec<_> = b.unknown.per_class.keys().collect();
        let mut union: Vec<_> = known.iter().chain(&unknown).cloned().collect();
        union.sort();
        assert!(known.iter().all(|k| !unknown.contains(k)));
        assert_eq!(union, b.all.per_class.keys().collect::<Vec<_>>());
        assert_eq!(b.stuff.mean.total, 0.0);
        assert!((b.thing.mean.total - 0.5).abs() <= EPS);

        let stuff_only = ospa2_breakdowns(&gt, &no_cart, &tax, ClassFilter::STUFF, PtOptions::default()).unwrap();
        assert!(stuff_only.thing.per_class.is_empty());
    }
}
