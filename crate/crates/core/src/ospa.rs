//! OSPA set distance over masks and its class-averaged panoptic form.
//!
//! The base distance between two masks is `1 - IoU`, already in `[0, 1]`, so
//! the cutoff is 1 and the order is 1. With `n >= m` the distance between
//! sets of sizes `m` and `n` is
//!
//! ```text
//! total = (min-cost matching of the smaller set into the larger + (n - m)) / n
//! ```
//!
//! which splits exactly into a localization part (`cost / n`) and a
//! cardinality part (`(n - m) / n`).

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::{FrameAnnotation, Segment};
use crate::assignment::{solve_assignment, CostMatrix};
use crate::error::{Error, Result};
use crate::mask::{iou_from_areas, BBox, Mask};
use crate::sum::NeumaierSum;
use crate::taxonomy::{ClassFilter, Taxonomy};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OspaComponents {
    pub total: f64,
    pub loc: f64,
    pub card: f64,
}

impl OspaComponents {
    pub const ZERO: OspaComponents = OspaComponents {
        total: 0.0,
        loc: 0.0,
        card: 0.0,
    };

    /// Exactly one side empty.
    pub const UNMATCHED: OspaComponents = OspaComponents {
        total: 1.0,
        loc: 0.0,
        card: 1.0,
    };

    pub fn from_parts(loc: f64, card: f64) -> Self {
        OspaComponents {
            total: loc + card,
            loc,
            card,
        }
    }
}

/// OSPA (cutoff 1, order 1) between two sets whose pairwise base distances are
/// given by `dist(i, j)` for `i < rows`, `j < cols`. Distances must lie in `[0, 1]`.
pub fn ospa_from_distances(
    rows: usize,
    cols: usize,
    dist: impl FnMut(usize, usize) -> f64,
) -> Result<OspaComponents> {
    match (rows, cols) {
        (0, 0) => return Ok(OspaComponents::ZERO),
        (0, _) | (_, 0) => return Ok(OspaComponents::UNMATCHED),
        _ => {}
    }
    let costs = CostMatrix::from_fn(rows, cols, dist)?;
    let matched = solve_assignment(&costs)?;
    // Sum in value order so that swapping the two sets is bit-for-bit symmetric.
    let mut values: Vec<f64> = matched.pairs.iter().map(|&(r, c)| costs.get(r, c)).collect();
    values.sort_unstable_by(f64::total_cmp);
    let cost: NeumaierSum = values.into_iter().collect();
    let larger = rows.max(cols) as f64;
    let unmatched = rows.abs_diff(cols) as f64;
    Ok(OspaComponents::from_parts(
        cost.total() / larger,
        unmatched / larger,
    ))
}

/// A mask with its area and bounding box cached, so that pairs with disjoint
/// boxes skip the run walk.
struct Indexed<'a> {
    mask: &'a Mask,
    area: u64,
    bbox: Option<BBox>,
}

impl<'a> Indexed<'a> {
    fn new(mask: &'a Mask) -> Self {
        Indexed {
            mask,
            area: mask.area(),
            bbox: mask.bbox(),
        }
    }

    fn distance(&self, other: &Indexed<'_>) -> Result<f64> {
        let inter = match (self.bbox, other.bbox) {
            (Some(a), Some(b)) if a.intersects(&b) => self.mask.intersection_area(other.mask)?,
            _ => 0,
        };
        Ok(1.0 - iou_from_areas(self.area, other.area, inter))
    }
}

fn check_common_dims(x: &[Mask], y: &[Mask]) -> Result<()> {
    let mut all = x.iter().chain(y);
    if let Some(first) = all.next() {
        for m in all {
            if m.dims() != first.dims() {
                return Err(Error::DimensionMismatch {
                    left: first.dims(),
                    right: m.dims(),
                });
            }
        }
    }
    Ok(())
}

/// OSPA between two mask sets under the `1 - IoU` base distance.
pub fn ospa_set_distance(x: &[Mask], y: &[Mask]) -> Result<OspaComponents> {
    check_common_dims(x, y)?;
    let xi: Vec<_> = x.iter().map(Indexed::new).collect();
    let yi: Vec<_> = y.iter().map(Indexed::new).collect();
    let mut dist = Vec::with_capacity(x.len() * y.len());
    for a in &xi {
        for b in &yi {
            dist.push(a.distance(b)?);
        }
    }
    let cols = y.len();
    ospa_from_distances(x.len(), y.len(), |i, j| dist[i * cols + j])
}

/// Per-class components plus their unweighted class mean.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OspaScore {
    pub mean: OspaComponents,
    pub per_class: BTreeMap<String, OspaComponents>,
}

impl OspaScore {
    pub fn from_classes(per_class: BTreeMap<String, OspaComponents>) -> Self {
        let loc: NeumaierSum = per_class.values().map(|c| c.loc).collect();
        let card: NeumaierSum = per_class.values().map(|c| c.card).collect();
        OspaScore {
            mean: OspaComponents::from_parts(loc.mean(), card.mean()),
            per_class,
        }
    }
}

/// Frame-level OSPA_PS: per-class OSPA over the classes present in either
/// frame (restricted to `filter`), averaged with equal class weights.
pub fn ospa_ps(
    gt: &FrameAnnotation,
    pred: &FrameAnnotation,
    taxonomy: &Taxonomy,
    filter: ClassFilter,
) -> Result<OspaScore> {
    ospa_ps_with(gt, pred, taxonomy, filter, &|_| true)
}

fn ospa_ps_with(
    gt: &FrameAnnotation,
    pred: &FrameAnnotation,
    taxonomy: &Taxonomy,
    filter: ClassFilter,
    keep: &dyn Fn(&Segment) -> bool,
) -> Result<OspaScore> {
    if gt.dims() != pred.dims() {
        return Err(Error::DimensionMismatch {
            left: gt.dims(),
            right: pred.dims(),
        });
    }
    let gt_sets = gt.class_sets(taxonomy, filter, keep)?;
    let pred_sets = pred.class_sets(taxonomy, filter, keep)?;
    let classes: Vec<&String> = gt_sets
        .keys()
        .chain(pred_sets.keys())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut per_class = BTreeMap::new();
    for class in classes {
        let x = gt_sets.get(class).map(Vec::as_slice).unwrap_or(&[]);
        let y = pred_sets.get(class).map(Vec::as_slice).unwrap_or(&[]);
        per_class.insert(class.clone(), ospa_set_distance(x, y)?);
    }
    Ok(OspaScore::from_classes(per_class))
}

/// Dataset-level class aggregate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    #[serde(flatten)]
    pub value: OspaComponents,
    /// Number of frames (or sequences) in which the class was evaluated.
    pub frames: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OspaSummary {
    #[serde(flatten)]
    pub value: OspaComponents,
    pub frames: usize,
    pub per_class: BTreeMap<String, ClassSummary>,
}

#[derive(Default)]
pub(crate) struct SummaryBuilder {
    loc: NeumaierSum,
    card: NeumaierSum,
    classes: BTreeMap<String, (NeumaierSum, NeumaierSum)>,
}

impl SummaryBuilder {
    pub(crate) fn add(&mut self, score: &OspaScore) {
        self.loc.add(score.mean.loc);
        self.card.add(score.mean.card);
        for (class, c) in &score.per_class {
            let acc = self.classes.entry(class.clone()).or_default();
            acc.0.add(c.loc);
            acc.1.add(c.card);
        }
    }

    pub(crate) fn finish(self) -> OspaSummary {
        OspaSummary {
            value: OspaComponents::from_parts(self.loc.mean(), self.card.mean()),
            frames: self.loc.count(),
            per_class: self
                .classes
                .into_iter()
                .map(|(class, (loc, card))| {
                    let summary = ClassSummary {
                        value: OspaComponents::from_parts(loc.mean(), card.mean()),
                        frames: loc.count(),
                    };
                    (class, summary)
                })
                .collect(),
        }
    }
}

/// A ground-truth frame and its prediction (`None` = nothing predicted).
#[derive(Debug, Clone, Copy)]
pub struct FramePair<'a> {
    pub gt: &'a FrameAnnotation,
    pub pred: Option<&'a FrameAnnotation>,
}

#[derive(Debug, Clone)]
pub struct Alignment<'a> {
    pub pairs: Vec<FramePair<'a>>,
    /// Prediction frames with no ground-truth counterpart; they are not scored.
    pub ignored_pred_frames: Vec<u64>,
}

/// Aligns predictions to ground truth by `frame_id`.
pub fn align_frames<'a>(
    gt: &'a [FrameAnnotation],
    pred: &'a [FrameAnnotation],
) -> Result<Alignment<'a>> {
    let mut gt_ids = HashSet::with_capacity(gt.len());
    for f in gt {
        if !gt_ids.insert(f.frame_id) {
            return Err(Error::DuplicateFrameId(f.frame_id));
        }
    }
    let mut by_id = HashMap::with_capacity(pred.len());
    let mut ignored = Vec::new();
    for f in pred {
        if by_id.insert(f.frame_id, f).is_some() {
            return Err(Error::DuplicateFrameId(f.frame_id));
        }
        if !gt_ids.contains(&f.frame_id) {
            ignored.push(f.frame_id);
        }
    }
    ignored.sort_unstable();
    let pairs = gt
        .iter()
        .map(|g| FramePair {
            gt: g,
            pred: by_id.get(&g.frame_id).copied(),
        })
        .collect();
    Ok(Alignment {
        pairs,
        ignored_pred_frames: ignored,
    })
}

fn summarize(
    pairs: &[FramePair<'_>],
    taxonomy: &Taxonomy,
    filter: ClassFilter,
    keep: &(dyn Fn(&Segment) -> bool + Sync),
) -> Result<OspaSummary> {
    let scores = pairs
        .par_iter()
        .map(|p| match p.pred {
            Some(pred) => ospa_ps_with(p.gt, pred, taxonomy, filter, keep),
            None => ospa_ps_with(p.gt, &p.gt.cleared(), taxonomy, filter, keep),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut builder = SummaryBuilder::default();
    for s in &scores {
        builder.add(s);
    }
    Ok(builder.finish())
}

/// Dataset O_PS over aligned frame pairs: the mean of per-frame class means
/// over all ground-truth frames, plus per-class means over the frames where
/// each class was evaluated.
pub fn ospa_ps_pairs(
    pairs: &[FramePair<'_>],
    taxonomy: &Taxonomy,
    filter: ClassFilter,
) -> Result<OspaSummary> {
    summarize(pairs, taxonomy, filter, &|_| true)
}

/// Dataset O_PS for one sequence's frames. Missing prediction frames count as
/// empty predictions; extra prediction frames are ignored.
pub fn ospa_ps_dataset(
    gt_frames: &[FrameAnnotation],
    pred_frames: &[FrameAnnotation],
    taxonomy: &Taxonomy,
    filter: ClassFilter,
) -> Result<OspaSummary> {
    let aligned = align_frames(gt_frames, pred_frames)?;
    ospa_ps_pairs(&aligned.pairs, taxonomy, filter)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleBucket {
    Small,
    Medium,
    Large,
}

impl ScaleBucket {
    /// Smallest medium area (32²).
    pub const MEDIUM_MIN: u64 = 32 * 32;
    /// Largest medium area (96²).
    pub const MEDIUM_MAX: u64 = 96 * 96;

    pub const ALL: [ScaleBucket; 3] = [ScaleBucket::Small, ScaleBucket::Medium, ScaleBucket::Large];

    /// `area < 1024` small, `1024 <= area <= 9216` medium, `area > 9216` large.
    pub fn of_area(area: u64) -> ScaleBucket {
        if area < Self::MEDIUM_MIN {
            ScaleBucket::Small
        } else if area <= Self::MEDIUM_MAX {
            ScaleBucket::Medium
        } else {
            ScaleBucket::Large
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScaleBreakdown {
    pub small: OspaSummary,
    pub medium: OspaSummary,
    pub large: OspaSummary,
}

/// O_PS per mask-size bucket. Ground-truth and predicted segments are each
/// bucketed by their own area before the per-class OSPA.
pub fn ospa_ps_pairs_by_scale(
    pairs: &[FramePair<'_>],
    taxonomy: &Taxonomy,
    filter: ClassFilter,
) -> Result<ScaleBreakdown> {
    let run = |bucket: ScaleBucket| {
        summarize(pairs, taxonomy, filter, &move |s: &Segment| {
            ScaleBucket::of_area(s.mask.area()) == bucket
        })
    };
    Ok(ScaleBreakdown {
        small: run(ScaleBucket::Small)?,
        medium: run(ScaleBucket::Medium)?,
        large: run(ScaleBucket::Large)?,
    })
}

pub fn ospa_ps_by_scale(
    gt_frames: &[FrameAnnotation],
    pred_frames: &[FrameAnnotation],
    taxonomy: &Taxonomy,
) -> Result<ScaleBreakdown> {
    let aligned = align_frames(gt_frames, pred_frames)?;
    ospa_ps_pairs_by_scale(&aligned.pairs, taxonomy, ClassFilter::ALL)
}
