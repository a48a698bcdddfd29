//! Identity F1 under a global per-class track assignment, and fragmentation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::annotation::{FrameAnnotation, SequenceAnnotation};
use crate::assignment::{solve_assignment, CostMatrix};
use crate::baseline::pq::MATCH_IOU;
use crate::error::{Error, Result};
use crate::ospa::align_frames;
use crate::taxonomy::{ClassKind, Taxonomy};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityScores {
    pub idf1: f64,
    pub idp: f64,
    pub idr: f64,
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
    pub frag: u64,
}

/// Pools identity counts over sequences; tracks never cross sequences.
#[derive(Debug, Default)]
pub struct IdentityAccumulator {
    idtp: u64,
    gt_dets: u64,
    pred_dets: u64,
    frag: u64,
}

#[derive(Default)]
struct ClassTable {
    gt: BTreeMap<u64, u64>,
    pred: BTreeMap<u64, u64>,
    matched: BTreeMap<(u64, u64), u64>,
}

fn things(frame: &FrameAnnotation, taxonomy: &Taxonomy) -> Result<BTreeMap<String, Vec<(u64, usize)>>> {
    let mut out: BTreeMap<String, Vec<(u64, usize)>> = BTreeMap::new();
    for (i, seg) in frame.segments.iter().enumerate() {
        let class = taxonomy.class(&seg.class_name)?;
        if class.kind != ClassKind::Thing {
            continue;
        }
        let id = seg.track_id.ok_or_else(|| Error::MissingTrackId {
            class: class.name.clone(),
            frame_id: frame.frame_id,
        })?;
        out.entry(class.name.clone()).or_default().push((id, i));
    }
    Ok(out)
}

impl IdentityAccumulator {
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
        let mut tables: BTreeMap<String, ClassTable> = BTreeMap::new();
        // matched status per gt track, in frame order
        let mut status: BTreeMap<(String, u64), Vec<bool>> = BTreeMap::new();

        for pair in &aligned.pairs {
            let g = pair.gt;
            g.ensure_single_label()?;
            let gt_things = things(g, taxonomy)?;
            let pred_things = match pair.pred {
                Some(p) => {
                    if p.dims() != g.dims() {
                        return Err(Error::DimensionMismatch {
                            left: g.dims(),
                            right: p.dims(),
                        });
                    }
                    things(p, taxonomy)?
                }
                None => BTreeMap::new(),
            };

            for (class, preds) in &pred_things {
                let table = tables.entry(class.clone()).or_default();
                for (id, _) in preds {
                    *table.pred.entry(*id).or_default() += 1;
                }
            }
            for (class, gts) in &gt_things {
                let table = tables.entry(class.clone()).or_default();
                let preds = pred_things.get(class).map(Vec::as_slice).unwrap_or(&[]);
                let mut pred_used = vec![false; preds.len()];
                for &(gid, gi) in gts {
                    *table.gt.entry(gid).or_default() += 1;
                    let gm = &g.segments[gi].mask;
                    let mut hit = None;
                    for (j, &(pid, pj)) in preds.iter().enumerate() {
                        let pm = &pair.pred.expect("pred things imply a pred frame").segments[pj].mask;
                        if gm.iou(pm)? > MATCH_IOU {
                            if hit.is_some() || pred_used[j] {
                                return Err(Error::AmbiguousMatch {
                                    class: class.clone(),
                                    frame_id: g.frame_id,
                                });
                            }
                            hit = Some((j, pid));
                        }
                    }
                    if let Some((j, pid)) = hit {
                        pred_used[j] = true;
                        *table.matched.entry((gid, pid)).or_default() += 1;
                    }
                    status.entry((class.clone(), gid)).or_default().push(hit.is_some());
                }
            }
        }

        for table in tables.values() {
            self.gt_dets += table.gt.values().sum::<u64>();
            self.pred_dets += table.pred.values().sum::<u64>();
            if table.matched.is_empty() {
                continue;
            }
            let gids: Vec<u64> = table.gt.keys().copied().collect();
            let pids: Vec<u64> = table.pred.keys().copied().collect();
            let max = *table.matched.values().max().unwrap_or(&0) as f64;
            let count = |r: usize, c: usize| table.matched.get(&(gids[r], pids[c])).copied().unwrap_or(0);
            let costs = CostMatrix::from_fn(gids.len(), pids.len(), |r, c| max - count(r, c) as f64)?;
            let result = solve_assignment(&costs)?;
            self.idtp += result.pairs.iter().map(|&(r, c)| count(r, c)).sum::<u64>();
        }

        for seen in status.values() {
            self.frag += resumptions(seen);
        }
        Ok(())
    }

    pub fn finish(&self) -> IdentityScores {
        let ratio = |num: u64, den: u64| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        IdentityScores {
            idf1: ratio(2 * self.idtp, self.gt_dets + self.pred_dets),
            idp: ratio(self.idtp, self.pred_dets),
            idr: ratio(self.idtp, self.gt_dets),
            idtp: self.idtp,
            idfp: self.pred_dets - self.idtp,
            idfn: self.gt_dets - self.idtp,
            frag: self.frag,
        }
    }
}

/// Number of unmatched → matched transitions after the first match.
fn resumptions(seen: &[bool]) -> u64 {
    let mut ever = false;
    let mut prev = false;
    let mut n = 0;
    for &s in seen {
        if s && !prev && ever {
            n += 1;
        }
        ever |= s;
        prev = s;
    }
    n
}

/// IDF1 and fragmentation for one sequence pair.
pub fn idf1_frag(
    gt: &SequenceAnnotation,
    pred: &SequenceAnnotation,
    taxonomy: &Taxonomy,
) -> Result<IdentityScores> {
    let mut acc = IdentityAccumulator::new();
    acc.add_sequence(gt, pred, taxonomy)?;
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::Segment;
    use crate::baseline::test_support::{rect, taxonomy};

    fn sequence(frames: u64, seg: impl Fn(u64) -> Vec<Segment>) -> SequenceAnnotation {
        let mut s = SequenceAnnotation::new("s", 16, 16);
        for t in 0..frames {
            s.frames.push(FrameAnnotation::new(t, 16, 16).with_segments(seg(t)));
        }
        s
    }

    #[test]
    fn resumption_counting() {
        assert_eq!(resumptions(&[false, true, true, false, true, false, false, true]), 2);
        assert_eq!(resumptions(&[true, true]), 0);
        assert_eq!(resumptions(&[false, false, true]), 0);
    }

    #[test]
    fn perfect_tracking() {
        let tax = taxonomy();
        let gt = sequence(5, |_| {
            vec![
                Segment::new(rect(0, 0, 4, 4), "person").with_track(1),
                Segment::new(rect(8, 8, 12, 12), "cart").with_track(1),
            ]
        });
        let s = idf1_frag(&gt, &gt, &tax).unwrap();
        assert_eq!((s.idf1, s.frag), (1.0, 0));
    }

    #[test]
    fn gapped_track_fragments() {
        let tax = taxonomy();
        let gt = sequence(10, |_| vec![Segment::new(rect(0, 0, 4, 4), "person").with_track(1)]);
        let hits = [true, true, false, false, true, true, false, false, true, true];
        let pred = sequence(10, |t| {
            if hits[t as usize] {
                vec![Segment::new(rect(0, 0, 4, 4), "person").with_track(7)]
            } else {
                vec![]
            }
        });
        let s = idf1_frag(&gt, &pred, &tax).unwrap();
        assert_eq!(s.frag, 2);
        assert!((s.idf1 - 0.75).abs() <= 1e-12);
    }

    #[test]
    fn split_track_keeps_one_identity() {
        let tax = taxonomy();
        let gt = sequence(10, |_| vec![Segment::new(rect(0, 0, 4, 4), "person").with_track(1)]);
        let pred = sequence(10, |t| vec![Segment::new(rect(0, 0, 4, 4), "person").with_track(1 + t / 5)]);
        let s = idf1_frag(&gt, &pred, &tax).unwrap();
        // 5 identity-true frames out of 10 gt and 10 pred detections
        assert_eq!(s.idtp, 5);
        assert!((s.idf1 - 0.5).abs() <= 1e-12);
        assert_eq!(s.frag, 0);
    }

    #[test]
    fn single_frame_reduces_to_detection_f1() {
        let tax = taxonomy();
        let gt = sequence(1, |_| {
            vec![
                Segment::new(rect(0, 0, 4, 4), "person").with_track(1),
                Segment::new(rect(8, 8, 12, 12), "person").with_track(2),
            ]
        });
        let pred = sequence(1, |_| {
            vec![
                Segment::new(rect(0, 0, 4, 4), "person").with_track(5),
                Segment::new(rect(12, 0, 16, 4), "person").with_track(6),
                Segment::new(rect(4, 12, 8, 16), "person").with_track(7),
            ]
        });
        let s = idf1_frag(&gt, &pred, &tax).unwrap();
        // F1 with 1 TP, 2 FP, 1 FN
        assert!((s.idf1 - 2.0 / 5.0).abs() <= 1e-12);
    }
}
