//! OSPA-based evaluation for panoptic segmentation and panoptic tracking, with
//! PQ, STQ, IDF1 and fragmentation for comparison.
//!
//! Masks are run-length encoded ([`Mask`]); frames may hold overlapping
//! segments of different classes to express multi-label pixels. The frame
//! metric is [`ospa_ps`], the trajectory metric [`ospa2_pt`]; the
//! [`pipeline`] module evaluates whole datasets into an [`EvalReport`].

pub mod annotation;
pub mod assignment;
pub mod baseline;
pub mod error;
pub mod io;
pub mod mask;
pub mod ospa;
pub mod pipeline;
pub mod report;
pub mod sum;
pub mod synth;
pub mod taxonomy;
pub mod track;

pub use annotation::{FrameAnnotation, Segment, SequenceAnnotation, Track};
pub use assignment::{brute_force_assignment, solve_assignment, AssignmentResult, CostMatrix};
pub use baseline::{idf1_frag, pq, stq, track_scores, PqResult, TrackScores};
pub use error::{Error, Result, TaxonomyError};
pub use io::{
    flatten_multilabel, flatten_sequence, load_dataset, load_manifest, load_sequence, save_manifest,
    save_sequence, sequence_to_json, validate_manifest, Dataset, LoadOptions, Manifest, ManifestEntry,
    Violation, World,
};
pub use mask::{Bitmap, Mask};
pub use ospa::{
    ospa_ps, ospa_ps_by_scale, ospa_ps_dataset, ospa_set_distance, OspaComponents, OspaScore,
    OspaSummary, ScaleBucket,
};
pub use pipeline::{evaluate_ps, evaluate_ps_datasets, evaluate_pt, evaluate_pt_datasets, EvalOptions};
pub use report::{EvalReport, Flatten};
pub use synth::{generate, perturb, synth_taxonomy, PerturbParams, SynthParams};
pub use taxonomy::{load_taxonomy, ClassFilter, ClassInfo, ClassKind, Split, Subset, Taxonomy};
pub use track::{ospa2_breakdowns, ospa2_pt, track_distance, PtOptions, TemporalWindow};
