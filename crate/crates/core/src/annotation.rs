//! In-memory annotation model: segments, frames, sequences and derived tracks.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::mask::Mask;
use crate::taxonomy::{ClassFilter, ClassKind, Taxonomy};

/// One labeled region. Segments of different classes may overlap inside a
/// frame, which is how multi-label pixels (e.g. an object seen through glass)
/// are expressed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub mask: Mask,
    pub class_name: String,
    /// Required for thing classes in tracking data, absent for stuff.
    pub track_id: Option<u64>,
    /// Depth order, 0 = front-most.
    pub layer: u32,
}

impl Segment {
    pub fn new(mask: Mask, class_name: impl Into<String>) -> Self {
        Segment {
            mask,
            class_name: class_name.into(),
            track_id: None,
            layer: 0,
        }
    }

    pub fn with_track(mut self, track_id: u64) -> Self {
        self.track_id = Some(track_id);
        self
    }

    pub fn with_layer(mut self, layer: u32) -> Self {
        self.layer = layer;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameAnnotation {
    pub frame_id: u64,
    pub height: u32,
    pub width: u32,
    pub segments: Vec<Segment>,
}

impl FrameAnnotation {
    pub fn new(frame_id: u64, height: u32, width: u32) -> Self {
        FrameAnnotation {
            frame_id,
            height,
            width,
            segments: Vec::new(),
        }
    }

    pub fn with_segments(mut self, segments: Vec<Segment>) -> Self {
        self.segments = segments;
        self
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.height, self.width)
    }

    /// Empty frame with the same id and dimensions.
    pub fn cleared(&self) -> FrameAnnotation {
        FrameAnnotation::new(self.frame_id, self.height, self.width)
    }

    /// Keeps only segments whose class passes `filter`. Classes missing from the
    /// taxonomy are dropped unless the filter accepts everything.
    pub fn filter_subset(&self, taxonomy: &Taxonomy, filter: ClassFilter) -> FrameAnnotation {
        if filter.is_all() {
            return self.clone();
        }
        FrameAnnotation {
            segments: self
                .segments
                .iter()
                .filter(|s| taxonomy.accepts(&s.class_name, filter))
                .cloned()
                .collect(),
            ..self.cleared()
        }
    }

    /// Per-class mask sets as evaluated by OSPA and PQ: thing classes keep one
    /// element per segment, stuff classes collapse to the union of their
    /// segments. Only classes accepted by `filter` and segments accepted by
    /// `keep` are included.
    pub fn class_sets(
        &self,
        taxonomy: &Taxonomy,
        filter: ClassFilter,
        keep: &dyn Fn(&Segment) -> bool,
    ) -> Result<BTreeMap<String, Vec<Mask>>> {
        let mut sets: BTreeMap<String, Vec<Mask>> = BTreeMap::new();
        for seg in &self.segments {
            let class = taxonomy.class(&seg.class_name)?;
            if seg.mask.dims() != self.dims() {
                return Err(Error::DimensionMismatch {
                    left: self.dims(),
                    right: seg.mask.dims(),
                });
            }
            if !filter.accepts(class) || !keep(seg) {
                continue;
            }
            let entry = sets.entry(class.name.clone()).or_default();
            match class.kind {
                ClassKind::Thing => entry.push(seg.mask.clone()),
                ClassKind::Stuff => match entry.first_mut() {
                    Some(acc) => *acc = acc.union(&seg.mask)?,
                    None => entry.push(seg.mask.clone()),
                },
            }
        }
        Ok(sets)
    }

    /// Fails with [`Error::MultiLabelInput`] if segments of different classes
    /// share a pixel.
    pub fn ensure_single_label(&self) -> Result<()> {
        let boxes: Vec<_> = self.segments.iter().map(|s| s.mask.bbox()).collect();
        for i in 0..self.segments.len() {
            for j in i + 1..self.segments.len() {
                let (a, b) = (&self.segments[i], &self.segments[j]);
                if a.class_name == b.class_name {
                    continue;
                }
                let (Some(ba), Some(bb)) = (boxes[i], boxes[j]) else {
                    continue;
                };
                if ba.intersects(&bb) && a.mask.intersection_area(&b.mask)? > 0 {
                    return Err(Error::MultiLabelInput {
                        frame_id: self.frame_id,
                        first: a.class_name.clone(),
                        second: b.class_name.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// A labeled mask trajectory. Its time domain is the key set of `observations`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Track {
    pub class_name: String,
    /// `None` for the synthetic per-class track of a stuff class.
    pub track_id: Option<u64>,
    pub observations: BTreeMap<u64, Mask>,
}

impl Track {
    pub fn domain(&self) -> impl Iterator<Item = u64> + '_ {
        self.observations.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceAnnotation {
    pub sequence_id: String,
    pub height: u32,
    pub width: u32,
    /// Sorted by strictly increasing `frame_id`.
    pub frames: Vec<FrameAnnotation>,
}

impl SequenceAnnotation {
    pub fn new(sequence_id: impl Into<String>, height: u32, width: u32) -> Self {
        SequenceAnnotation {
            sequence_id: sequence_id.into(),
            height,
            width,
            frames: Vec::new(),
        }
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.height, self.width)
    }

    pub fn frame(&self, frame_id: u64) -> Option<&FrameAnnotation> {
        self.frames
            .binary_search_by_key(&frame_id, |f| f.frame_id)
            .ok()
            .map(|i| &self.frames[i])
    }

    /// Same frames, no segments.
    pub fn cleared(&self) -> SequenceAnnotation {
        SequenceAnnotation {
            frames: self.frames.iter().map(FrameAnnotation::cleared).collect(),
            ..SequenceAnnotation::new(self.sequence_id.clone(), self.height, self.width)
        }
    }

    pub fn filter_subset(&self, taxonomy: &Taxonomy, filter: ClassFilter) -> SequenceAnnotation {
        SequenceAnnotation {
            frames: self
                .frames
                .iter()
                .map(|f| f.filter_subset(taxonomy, filter))
                .collect(),
            ..SequenceAnnotation::new(self.sequence_id.clone(), self.height, self.width)
        }
    }

    pub fn segment_count(&self) -> usize {
        self.frames.iter().map(|f| f.segments.len()).sum()
    }

    /// Builds the track table for classes passing `filter`: one track per
    /// `(class, track_id)` for things, one synthetic track per stuff class
    /// holding that class's per-frame union mask.
    pub fn tracks(&self, taxonomy: &Taxonomy, filter: ClassFilter) -> Result<Vec<Track>> {
        let mut table: BTreeMap<(String, Option<u64>), Track> = BTreeMap::new();
        let mut prev_frame = None;
        for frame in &self.frames {
            if prev_frame.is_some_and(|p| p >= frame.frame_id) {
                return Err(Error::DuplicateFrameId(frame.frame_id));
            }
            prev_frame = Some(frame.frame_id);
            let mut seen = HashSet::new();
            for seg in &frame.segments {
                let class = taxonomy.class(&seg.class_name)?;
                if !filter.accepts(class) {
                    continue;
                }
                if seg.mask.dims() != self.dims() {
                    return Err(Error::DimensionMismatch {
                        left: self.dims(),
                        right: seg.mask.dims(),
                    });
                }
                let key = match class.kind {
                    ClassKind::Thing => {
                        let id = seg.track_id.ok_or_else(|| Error::MissingTrackId {
                            class: class.name.clone(),
                            frame_id: frame.frame_id,
                        })?;
                        if !seen.insert(id_key(&class.name, id)) {
                            return Err(Error::DuplicateTrackId {
                                class: class.name.clone(),
                                track_id: id,
                                frame_id: frame.frame_id,
                            });
                        }
                        (class.name.clone(), Some(id))
                    }
                    ClassKind::Stuff => (class.name.clone(), None),
                };
                let track = table.entry(key.clone()).or_insert_with(|| Track {
                    class_name: key.0.clone(),
                    track_id: key.1,
                    observations: BTreeMap::new(),
                });
                match track.observations.get_mut(&frame.frame_id) {
                    Some(acc) => *acc = acc.union(&seg.mask)?,
                    None => {
                        track.observations.insert(frame.frame_id, seg.mask.clone());
                    }
                }
            }
        }
        Ok(table.into_values().collect())
    }
}

fn id_key(class: &str, id: u64) -> (String, u64) {
    (class.to_string(), id)
}
