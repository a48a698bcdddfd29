use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::FrameAnnotation;
use crate::error::{Error, Result};
use crate::ospa::{align_frames, FramePair};
use crate::sum::NeumaierSum;
use crate::taxonomy::{ClassFilter, ClassKind, Taxonomy};

/// IoU a prediction must strictly exceed to count as a true positive.
pub const MATCH_IOU: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PqClass {
    pub pq: f64,
    pub sq: f64,
    pub rq: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub iou_sum: f64,
}

impl PqClass {
    fn from_counts(tp: u64, fp: u64, fn_: u64, iou_sum: f64) -> Self {
        let denom = tp as f64 + 0.5 * fp as f64 + 0.5 * fn_ as f64;
        let (pq, sq, rq) = if denom == 0.0 {
            (0.0, 0.0, 0.0)
        } else {
            let sq = if tp == 0 { 0.0 } else { iou_sum / tp as f64 };
            let rq = tp as f64 / denom;
            (iou_sum / denom, sq, rq)
        };
        PqClass {
            pq,
            sq,
            rq,
            tp,
            fp,
            fn_,
            iou_sum,
        }
    }
}

/// Unweighted mean over a class subset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PqAggregate {
    pub pq: f64,
    pub sq: f64,
    pub rq: f64,
    pub classes: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PqResult {
    pub pq: f64,
    pub sq: f64,
    pub rq: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub thing: PqAggregate,
    pub stuff: PqAggregate,
    pub per_class: BTreeMap<String, PqClass>,
}

#[derive(Debug, Default, Clone)]
struct Counts {
    tp: u64,
    fp: u64,
    fn_: u64,
    iou: NeumaierSum,
}

fn frame_counts(
    gt: &FrameAnnotation,
    pred: &FrameAnnotation,
    taxonomy: &Taxonomy,
    filter: ClassFilter,
) -> Result<BTreeMap<String, Counts>> {
    gt.ensure_single_label()?;
    if gt.dims() != pred.dims() {
        return Err(Error::DimensionMismatch {
            left: gt.dims(),
            right: pred.dims(),
        });
    }
    let gt_sets = gt.class_sets(taxonomy, filter, &|_| true)?;
    let pred_sets = pred.class_sets(taxonomy, filter, &|_| true)?;
    let classes: BTreeSet<&String> = gt_sets.keys().chain(pred_sets.keys()).collect();
    let mut out = BTreeMap::new();
    for class in classes {
        let g = gt_sets.get(class).map(Vec::as_slice).unwrap_or(&[]);
        let p = pred_sets.get(class).map(Vec::as_slice).unwrap_or(&[]);
        let mut pred_used = vec![false; p.len()];
        let mut counts = Counts::default();
        for gm in g {
            let mut hit = None;
            for (j, pm) in p.iter().enumerate() {
                let iou = gm.iou(pm)?;
                if iou > MATCH_IOU {
                    if hit.is_some() || pred_used[j] {
                        return Err(Error::AmbiguousMatch {
                            class: class.clone(),
                            frame_id: gt.frame_id,
                        });
                    }
                    hit = Some((j, iou));
                }
            }
            match hit {
                Some((j, iou)) => {
                    pred_used[j] = true;
                    counts.tp += 1;
                    counts.iou.add(iou);
                }
                None => counts.fn_ += 1,
            }
        }
        counts.fp = pred_used.iter().filter(|u| !**u).count() as u64;
        out.insert(class.clone(), counts);
    }
    Ok(out)
}

/// Panoptic quality over aligned frame pairs. Ground truth must be
/// single-label (flatten multi-label frames first).
pub fn pq_pairs(pairs: &[FramePair<'_>], taxonomy: &Taxonomy, filter: ClassFilter) -> Result<PqResult> {
    let frames = pairs
        .par_iter()
        .map(|p| match p.pred {
            Some(pred) => frame_counts(p.gt, pred, taxonomy, filter),
            None => frame_counts(p.gt, &p.gt.cleared(), taxonomy, filter),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut totals: BTreeMap<String, Counts> = BTreeMap::new();
    for frame in frames {
        for (class, c) in frame {
            let acc = totals.entry(class).or_default();
            acc.tp += c.tp;
            acc.fp += c.fp;
            acc.fn_ += c.fn_;
            acc.iou.add(c.iou.total());
        }
    }
    let per_class: BTreeMap<String, PqClass> = totals
        .into_iter()
        .map(|(class, c)| {
            let v = PqClass::from_counts(c.tp, c.fp, c.fn_, c.iou.total());
            (class, v)
        })
        .collect();

    let aggregate = |kind: Option<ClassKind>| {
        let selected: Vec<&PqClass> = per_class
            .iter()
            .filter(|(name, _)| {
                kind.map_or(true, |k| taxonomy.get(name).is_some_and(|c| c.kind == k))
            })
            .map(|(_, v)| v)
            .collect();
        PqAggregate {
            pq: selected.iter().map(|c| c.pq).collect::<NeumaierSum>().mean(),
            sq: selected.iter().map(|c| c.sq).collect::<NeumaierSum>().mean(),
            rq: selected.iter().map(|c| c.rq).collect::<NeumaierSum>().mean(),
            classes: selected.len(),
        }
    };
    let all = aggregate(None);
    Ok(PqResult {
        pq: all.pq,
        sq: all.sq,
        rq: all.rq,
        tp: per_class.values().map(|c| c.tp).sum(),
        fp: per_class.values().map(|c| c.fp).sum(),
        fn_: per_class.values().map(|c| c.fn_).sum(),
        thing: aggregate(Some(ClassKind::Thing)),
        stuff: aggregate(Some(ClassKind::Stuff)),
        per_class,
    })
}

pub fn pq(
    gt: &[FrameAnnotation],
    pred: &[FrameAnnotation],
    taxonomy: &Taxonomy,
    filter: ClassFilter,
) -> Result<PqResult> {
    let aligned = align_frames(gt, pred)?;
    pq_pairs(&aligned.pairs, taxonomy, filter)
}
