//! Threshold-based comparison metrics: PQ, STQ, IDF1 and fragmentation.

pub mod identity;
pub mod pq;
pub mod stq;

pub use identity::{idf1_frag, IdentityAccumulator, IdentityScores};
pub use pq::{pq, pq_pairs, PqAggregate, PqClass, PqResult, MATCH_IOU};
pub use stq::{stq, StqAccumulator, StqScores};

use serde::{Deserialize, Serialize};

use crate::annotation::SequenceAnnotation;
use crate::error::Result;
use crate::taxonomy::Taxonomy;

/// Tracking scores pooled over one or more sequences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackScores {
    pub stq: f64,
    pub aq: f64,
    pub semantic_iou: f64,
    pub idf1: f64,
    pub idp: f64,
    pub idr: f64,
    pub frag: u64,
}

#[derive(Debug, Default)]
pub struct TrackScoreAccumulator {
    stq: StqAccumulator,
    identity: IdentityAccumulator,
}

impl TrackScoreAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_sequence(
        &mut self,
        gt: &SequenceAnnotation,
        pred: &SequenceAnnotation,
        taxonomy: &Taxonomy,
    ) -> Result<()> {
        self.stq.add_sequence(gt, pred, taxonomy)?;
        self.identity.add_sequence(gt, pred, taxonomy)
    }

    pub fn finish(&self) -> TrackScores {
        let s = self.stq.finish();
        let i = self.identity.finish();
        TrackScores {
            stq: s.stq,
            aq: s.aq,
            semantic_iou: s.semantic,
            idf1: i.idf1,
            idp: i.idp,
            idr: i.idr,
            frag: i.frag,
        }
    }
}

pub fn track_scores(gt: &SequenceAnnotation, pred: &SequenceAnnotation, taxonomy: &Taxonomy) -> Result<TrackScores> {
    let mut acc = TrackScoreAccumulator::new();
    acc.add_sequence(gt, pred, taxonomy)?;
    Ok(acc.finish())
}
