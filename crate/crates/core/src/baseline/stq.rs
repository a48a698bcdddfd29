//! Segmentation and Tracking Quality: geometric mean of a pixel-level
//! association score over thing tracks and the class-level semantic IoU.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::annotation::{FrameAnnotation, SequenceAnnotation};
use crate::error::{Error, Result};
use crate::mask::Mask;
use crate::ospa::align_frames;
use crate::sum::NeumaierSum;
use crate::taxonomy::{ClassKind, Taxonomy};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StqScores {
    pub stq: f64,
    /// Association quality.
    pub aq: f64,
    /// Semantic segmentation quality (class-level mean IoU).
    pub semantic: f64,
}

type TrackKey = (String, u64);

/// Pools STQ statistics over any number of sequences.
#[derive(Debug, Default)]
pub struct StqAccumulator {
    aq_sum: NeumaierSum,
    gt_tracks: usize,
    pred_tracks: usize,
    // class -> (intersection, union) pixel counts
    semantic: BTreeMap<String, (u64, u64)>,
}

fn thing_key(taxonomy: &Taxonomy, frame: &FrameAnnotation, idx: usize) -> Result<Option<TrackKey>> {
    let seg = &frame.segments[idx];
    let class = taxonomy.class(&seg.class_name)?;
    if class.kind != ClassKind::Thing {
        return Ok(None);
    }
    let id = seg.track_id.ok_or_else(|| Error::MissingTrackId {
        class: class.name.clone(),
        frame_id: frame.frame_id,
    })?;
    Ok(Some((class.name.clone(), id)))
}

impl StqAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_sequence(
        &mut self,
        gt: &SequenceAnnotation,
        pred: &SequenceAnnotation,
        taxonomy: &Taxonomy,
    ) -> Result<()> {
        let aligned = align_frames(&gt.frames, &pred.frames)?;
        let mut gt_area: BTreeMap<TrackKey, u64> = BTreeMap::new();
        let mut pred_area: HashMap<TrackKey, u64> = HashMap::new();
        let mut overlap: BTreeMap<TrackKey, BTreeMap<TrackKey, u64>> = BTreeMap::new();

        for pair in &aligned.pairs {
            let g = pair.gt;
            g.ensure_single_label()?;
            let cleared;
            let p = match pair.pred {
                Some(p) => p,
                None => {
                    cleared = g.cleared();
                    &cleared
                }
            };
            if g.dims() != p.dims() {
                return Err(Error::DimensionMismatch {
                    left: g.dims(),
                    right: p.dims(),
                });
            }

            // semantic term
            let union_by_class = |f: &FrameAnnotation| -> Result<BTreeMap<String, Mask>> {
                let mut out: BTreeMap<String, Mask> = BTreeMap::new();
                for s in &f.segments {
                    let name = taxonomy.class(&s.class_name)?.name.clone();
                    match out.get_mut(&name) {
                        Some(acc) => *acc = acc.union(&s.mask)?,
                        None => {
                            out.insert(name, s.mask.clone());
                        }
                    }
                }
                Ok(out)
            };
            let gu = union_by_class(g)?;
            let pu = union_by_class(p)?;
            let classes: std::collections::BTreeSet<&String> = gu.keys().chain(pu.keys()).collect();
            for class in classes {
                let (inter, union) = match (gu.get(class), pu.get(class)) {
                    (Some(a), Some(b)) => {
                        let i = a.intersection_area(b)?;
                        (i, a.area() + b.area() - i)
                    }
                    (Some(a), None) | (None, Some(a)) => (0, a.area()),
                    (None, None) => unreachable!(),
                };
                let acc = self.semantic.entry(class.clone()).or_default();
                acc.0 += inter;
                acc.1 += union;
            }

            // association term
            let mut pred_things = Vec::new();
            for j in 0..p.segments.len() {
                if let Some(k) = thing_key(taxonomy, p, j)? {
                    *pred_area.entry(k.clone()).or_default() += p.segments[j].mask.area();
                    pred_things.push((k, &p.segments[j].mask, p.segments[j].mask.bbox()));
                }
            }
            for i in 0..g.segments.len() {
                let Some(gk) = thing_key(taxonomy, g, i)? else {
                    continue;
                };
                let gm = &g.segments[i].mask;
                *gt_area.entry(gk.clone()).or_default() += gm.area();
                let gb = gm.bbox();
                for (pk, pm, pb) in &pred_things {
                    let touching = matches!((gb, pb), (Some(a), Some(b)) if a.intersects(b));
                    if !touching {
                        continue;
                    }
                    let inter = gm.intersection_area(pm)?;
                    if inter > 0 {
                        *overlap
                            .entry(gk.clone())
                            .or_default()
                            .entry(pk.clone())
                            .or_default() += inter;
                    }
                }
            }
        }

        for (gk, &g_area) in &gt_area {
            let mut score = NeumaierSum::new();
            if let Some(row) = overlap.get(gk) {
                for (pk, &tpa) in row {
                    let p_area = pred_area[pk];
                    let iou = tpa as f64 / (g_area + p_area - tpa) as f64;
                    score.add(tpa as f64 * iou);
                }
            }
            if g_area > 0 {
                self.aq_sum.add(score.total() / g_area as f64);
            } else {
                self.aq_sum.add(0.0);
            }
        }
        self.gt_tracks += gt_area.len();
        self.pred_tracks += pred_area.len();
        Ok(())
    }

    pub fn finish(&self) -> StqScores {
        let aq = if self.gt_tracks == 0 {
            if self.pred_tracks == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            self.aq_sum.total() / self.gt_tracks as f64
        };
        let ious: NeumaierSum = self
            .semantic
            .values()
            .filter(|(_, u)| *u > 0)
            .map(|&(i, u)| i as f64 / u as f64)
            .collect();
        let semantic = if ious.count() == 0 { 1.0 } else { ious.mean() };
        StqScores {
            stq: (aq * semantic).sqrt(),
            aq,
            semantic,
        }
    }
}

/// STQ for one sequence pair. Ground truth must be single-label.
pub fn stq(gt: &SequenceAnnotation, pred: &SequenceAnnotation, taxonomy: &Taxonomy) -> Result<StqScores> {
    let mut acc = StqAccumulator::new();
    acc.add_sequence(gt, pred, taxonomy)?;
    Ok(acc.finish())
}
