//! Whole-dataset evaluation: pairing, flattening, filtering, every metric.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::annotation::SequenceAnnotation;
use crate::baseline::{pq_pairs, TrackScoreAccumulator, MATCH_IOU};
use crate::error::Result;
use crate::io::{flatten_sequence, load_dataset, Dataset, LoadOptions, Violation, World};
use crate::ospa::{align_frames, ospa_ps_pairs, ospa_ps_pairs_by_scale, FramePair, OspaSummary};
use crate::report::{
    ConfigEcho, EvalReport, Flatten, InputsEcho, PsBlock, PtBlock, SequenceValue, Task, REPORT_SCHEMA,
    TOOLKIT_VERSION,
};
use crate::taxonomy::{load_taxonomy, ClassFilter, Subset, Taxonomy};
use crate::track::{ospa2_breakdowns, summarize_sequences, PtOptions, TemporalWindow};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    pub subset: Subset,
    /// Governs unresolved predicted class names.
    pub world: World,
    pub flatten: Flatten,
    pub scale_breakdown: bool,
    pub window: TemporalWindow,
}

struct Paired<'a> {
    gt: &'a SequenceAnnotation,
    pred: SequenceAnnotation,
}

// Matches prediction sequences to ground truth by id; a missing prediction
// becomes an empty one.
fn pair_sequences<'a>(gt: &'a Dataset, pred: &Dataset, warnings: &mut Vec<Violation>) -> Vec<Paired<'a>> {
    let by_id: HashMap<&str, &SequenceAnnotation> =
        pred.sequences.iter().map(|s| (s.sequence_id.as_str(), s)).collect();
    let mut out = Vec::with_capacity(gt.sequences.len());
    for g in &gt.sequences {
        let pred = match by_id.get(g.sequence_id.as_str()) {
            Some(p) => (*p).clone(),
            None => {
                warnings.push(warning(
                    &g.sequence_id,
                    "missing-pred-sequence",
                    "no prediction for this sequence; scored as empty",
                ));
                g.cleared()
            }
        };
        out.push(Paired { gt: g, pred });
    }
    for p in &pred.sequences {
        if !gt.sequences.iter().any(|g| g.sequence_id == p.sequence_id) {
            warnings.push(warning(
                &p.sequence_id,
                "extra-pred-sequence",
                "prediction has no ground truth; ignored",
            ));
        }
    }
    out
}

fn warning(source: &str, kind: &str, message: impl Into<String>) -> Violation {
    Violation {
        source: source.to_string(),
        frame: None,
        segment: None,
        kind: kind.to_string(),
        message: message.into(),
    }
}

fn config(options: &EvalOptions, inputs: Option<InputsEcho>, aggregation: &str, class_set: &str) -> ConfigEcho {
    ConfigEcho {
        inputs,
        subset: options.subset,
        world: options.world,
        flatten: options.flatten,
        ospa_gt_flattened: options.flatten.for_ospa(),
        baseline_gt_flattened: options.flatten.for_baselines(),
        scale_breakdown: options.scale_breakdown,
        temporal_window: options.window,
        class_set: class_set.into(),
        aggregation: aggregation.into(),
        ospa_cutoff: 1.0,
        ospa_order: 1,
        match_iou: MATCH_IOU,
    }
}

fn flatten_all(seqs: &[&SequenceAnnotation], taxonomy: &Taxonomy) -> Result<Vec<SequenceAnnotation>> {
    seqs.iter().map(|s| flatten_sequence(s, taxonomy)).collect()
}

// Frame pairs over all sequences, with warnings for unscored prediction frames.
fn frame_pairs<'a>(
    gts: &'a [SequenceAnnotation],
    preds: &'a [SequenceAnnotation],
    warnings: &mut Vec<Violation>,
) -> Result<Vec<FramePair<'a>>> {
    let mut pairs = Vec::new();
    for (g, p) in gts.iter().zip(preds) {
        let aligned = align_frames(&g.frames, &p.frames)?;
        for id in &aligned.ignored_pred_frames {
            warnings.push(Violation {
                frame: Some(*id),
                ..warning(&g.sequence_id, "extra-pred-frame", "prediction frame has no ground truth; ignored")
            });
        }
        pairs.extend(aligned.pairs);
    }
    Ok(pairs)
}

fn restricted(base: ClassFilter, f: ClassFilter) -> Option<ClassFilter> {
    // a subset equal to the base adds nothing new
    base.and(f).filter(|r| *r != base || base.is_all())
}

/// Panoptic segmentation report: O_PS family (frame mean over all ground-truth
/// frames of all sequences) and PQ.
pub fn evaluate_ps_datasets(
    gt: &Dataset,
    pred: &Dataset,
    taxonomy: &Taxonomy,
    options: &EvalOptions,
) -> Result<EvalReport> {
    evaluate_ps_inner(gt, pred, taxonomy, options, None)
}

fn evaluate_ps_inner(
    gt: &Dataset,
    pred: &Dataset,
    taxonomy: &Taxonomy,
    options: &EvalOptions,
    inputs: Option<InputsEcho>,
) -> Result<EvalReport> {
    let mut warnings = pred.warnings.clone();
    let paired = pair_sequences(gt, pred, &mut warnings);
    let base = options.subset.filter();
    let raw_gt: Vec<&SequenceAnnotation> = paired.iter().map(|p| p.gt).collect();
    let preds: Vec<SequenceAnnotation> = paired.iter().map(|p| p.pred.clone()).collect();
    let (flat_gt, flat_pred) = if options.flatten.for_ospa() || options.flatten.for_baselines() {
        let owned: Vec<&SequenceAnnotation> = preds.iter().collect();
        (Some(flatten_all(&raw_gt, taxonomy)?), Some(flatten_all(&owned, taxonomy)?))
    } else {
        (None, None)
    };
    let owned_raw: Vec<SequenceAnnotation>;
    let (ospa_gt, ospa_pred): (&[SequenceAnnotation], &[SequenceAnnotation]) = if options.flatten.for_ospa() {
        (flat_gt.as_deref().expect("flattened"), flat_pred.as_deref().expect("flattened"))
    } else {
        owned_raw = raw_gt.iter().map(|s| (*s).clone()).collect();
        (&owned_raw, &preds)
    };

    let pairs = frame_pairs(ospa_gt, ospa_pred, &mut warnings)?;
    let run = |f: ClassFilter| ospa_ps_pairs(&pairs, taxonomy, f);
    let opt = |f: ClassFilter| -> Result<Option<OspaSummary>> {
        restricted(base, f).map(run).transpose()
    };
    let ps = PsBlock {
        all: run(base)?,
        thing: opt(ClassFilter::THING)?,
        stuff: opt(ClassFilter::STUFF)?,
        scale: if options.scale_breakdown {
            Some(ospa_ps_pairs_by_scale(&pairs, taxonomy, base)?)
        } else {
            None
        },
    };

    let (pq_gt, pq_pred) = if options.flatten.for_baselines() {
        (flat_gt.as_deref().expect("flattened"), flat_pred.as_deref().expect("flattened"))
    } else {
        (ospa_gt, ospa_pred)
    };
    let mut ignored = Vec::new();
    let pq_pairs_all = frame_pairs(pq_gt, pq_pred, &mut ignored)?;
    let pq = pq_pairs(&pq_pairs_all, taxonomy, base)?;

    Ok(EvalReport {
        toolkit_version: TOOLKIT_VERSION.into(),
        report_schema: REPORT_SCHEMA.into(),
        task: Task::Ps,
        dataset: gt.name.clone(),
        sequences: gt.sequences.iter().map(|s| s.sequence_id.clone()).collect(),
        config: config(options, inputs, "mean over ground-truth frames", "classes present in gt or pred per frame"),
        ospa_ps: Some(ps),
        pq: Some(pq),
        ospa2_pt: None,
        tracking: None,
        warnings,
    })
}

/// Panoptic tracking report: O²_PT family (mean over sequences), STQ, IDF1 and
/// Frag (pooled over sequences).
pub fn evaluate_pt_datasets(
    gt: &Dataset,
    pred: &Dataset,
    taxonomy: &Taxonomy,
    options: &EvalOptions,
) -> Result<EvalReport> {
    evaluate_pt_inner(gt, pred, taxonomy, options, None)
}

fn evaluate_pt_inner(
    gt: &Dataset,
    pred: &Dataset,
    taxonomy: &Taxonomy,
    options: &EvalOptions,
    inputs: Option<InputsEcho>,
) -> Result<EvalReport> {
    let mut warnings = pred.warnings.clone();
    let paired = pair_sequences(gt, pred, &mut warnings);
    let base = options.subset.filter();
    let pt_options = PtOptions {
        window: options.window,
    };
    let raw_gt: Vec<&SequenceAnnotation> = paired.iter().map(|p| p.gt).collect();
    let preds: Vec<SequenceAnnotation> = paired.iter().map(|p| p.pred.clone()).collect();
    let (flat_gt, flat_pred) = if options.flatten.for_ospa() || options.flatten.for_baselines() {
        let owned: Vec<&SequenceAnnotation> = preds.iter().collect();
        (Some(flatten_all(&raw_gt, taxonomy)?), Some(flatten_all(&owned, taxonomy)?))
    } else {
        (None, None)
    };
    let owned_raw: Vec<SequenceAnnotation>;
    let (ospa_gt, ospa_pred): (&[SequenceAnnotation], &[SequenceAnnotation]) = if options.flatten.for_ospa() {
        (flat_gt.as_deref().expect("flattened"), flat_pred.as_deref().expect("flattened"))
    } else {
        owned_raw = raw_gt.iter().map(|s| (*s).clone()).collect();
        (&owned_raw, &preds)
    };
    // surfaces unscored prediction frames
    frame_pairs(ospa_gt, ospa_pred, &mut warnings)?;

    let breakdowns = ospa_gt
        .par_iter()
        .zip(ospa_pred.par_iter())
        .map(|(g, p)| ospa2_breakdowns(g, p, taxonomy, base, pt_options))
        .collect::<Result<Vec<_>>>()?;
    let summary = |pick: fn(&crate::track::PtBreakdown) -> &crate::ospa::OspaScore| {
        summarize_sequences(breakdowns.iter().map(pick))
    };
    let opt = |f: ClassFilter, pick: fn(&crate::track::PtBreakdown) -> &crate::ospa::OspaScore| {
        restricted(base, f).map(|_| summary(pick))
    };
    let pt = PtBlock {
        all: summary(|b| &b.all),
        thing: opt(ClassFilter::THING, |b| &b.thing),
        stuff: opt(ClassFilter::STUFF, |b| &b.stuff),
        known: opt(ClassFilter::KNOWN, |b| &b.known),
        unknown: opt(ClassFilter::UNKNOWN, |b| &b.unknown),
        per_sequence: ospa_gt
            .iter()
            .zip(&breakdowns)
            .map(|(g, b)| SequenceValue {
                sequence: g.sequence_id.clone(),
                value: b.all.mean,
            })
            .collect(),
    };

    let (base_gt, base_pred) = if options.flatten.for_baselines() {
        (flat_gt.as_deref().expect("flattened"), flat_pred.as_deref().expect("flattened"))
    } else {
        (ospa_gt, ospa_pred)
    };
    let mut acc = TrackScoreAccumulator::new();
    for (g, p) in base_gt.iter().zip(base_pred) {
        let (g, p) = if base.is_all() {
            (g.clone(), p.clone())
        } else {
            (g.filter_subset(taxonomy, base), p.filter_subset(taxonomy, base))
        };
        acc.add_sequence(&g, &p, taxonomy)?;
    }

    Ok(EvalReport {
        toolkit_version: TOOLKIT_VERSION.into(),
        report_schema: REPORT_SCHEMA.into(),
        task: Task::Pt,
        dataset: gt.name.clone(),
        sequences: gt.sequences.iter().map(|s| s.sequence_id.clone()).collect(),
        config: config(options, inputs, "mean over sequences", "classes with a track in gt or pred per sequence"),
        ospa_ps: None,
        pq: None,
        ospa2_pt: Some(pt),
        tracking: Some(acc.finish()),
        warnings,
    })
}

struct Loaded {
    taxonomy: Taxonomy,
    gt: Dataset,
    pred: Dataset,
    inputs: InputsEcho,
}

fn load_inputs(gt: &Path, pred: &Path, taxonomy: &Path, options: &EvalOptions, tracking: bool) -> Result<Loaded> {
    let tax = load_taxonomy(taxonomy)?;
    let gt_data = load_dataset(
        gt,
        &tax,
        LoadOptions {
            tracking,
            world: World::Closed,
        },
    )?;
    let pred_data = load_dataset(
        pred,
        &tax,
        LoadOptions {
            tracking,
            world: options.world,
        },
    )?;
    let show = |p: &Path| PathBuf::from(p).display().to_string();
    Ok(Loaded {
        taxonomy: tax,
        gt: gt_data,
        pred: pred_data,
        inputs: InputsEcho {
            gt: show(gt),
            pred: show(pred),
            taxonomy: show(taxonomy),
        },
    })
}

/// Loads manifests and taxonomy from disk and runs [`evaluate_ps_datasets`].
pub fn evaluate_ps(
    gt_manifest: impl AsRef<Path>,
    pred_manifest: impl AsRef<Path>,
    taxonomy: impl AsRef<Path>,
    options: &EvalOptions,
) -> Result<EvalReport> {
    let l = load_inputs(gt_manifest.as_ref(), pred_manifest.as_ref(), taxonomy.as_ref(), options, false)?;
    evaluate_ps_inner(&l.gt, &l.pred, &l.taxonomy, options, Some(l.inputs))
}

/// Loads manifests and taxonomy from disk and runs [`evaluate_pt_datasets`].
pub fn evaluate_pt(
    gt_manifest: impl AsRef<Path>,
    pred_manifest: impl AsRef<Path>,
    taxonomy: impl AsRef<Path>,
    options: &EvalOptions,
) -> Result<EvalReport> {
    let l = load_inputs(gt_manifest.as_ref(), pred_manifest.as_ref(), taxonomy.as_ref(), options, true)?;
    evaluate_pt_inner(&l.gt, &l.pred, &l.taxonomy, options, Some(l.inputs))
}
