//! Sequence and manifest file formats, strict validation, multi-label
//! flattening.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::{FrameAnnotation, Segment, SequenceAnnotation};
use crate::error::{Error, Result};
use crate::mask::{Mask, RleJson};
use crate::taxonomy::{ClassKind, Taxonomy};

/// Closed world: every class name must resolve. Open world: unresolved
/// predicted names are dropped and reported as warnings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum World {
    #[default]
    Closed,
    Open,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Require track ids on thing segments.
    pub tracking: bool,
    pub world: World,
}

/// One broken invariant, located as precisely as possible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<usize>,
    pub kind: String,
    pub message: String,
}

impl Violation {
    fn new(source: &Path, kind: &str, message: impl Into<String>) -> Self {
        Violation {
            source: source.display().to_string(),
            frame: None,
            segment: None,
            kind: kind.to_string(),
            message: message.into(),
        }
    }

    fn at(mut self, frame: u64, segment: Option<usize>) -> Self {
        self.frame = Some(frame);
        self.segment = segment;
        self
    }

    pub fn from_error(source: &Path, err: &Error) -> Self {
        Violation::new(source, err.kind(), err.to_string())
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source)?;
        if let Some(frame) = self.frame {
            write!(f, " frame {frame}")?;
        }
        if let Some(seg) = self.segment {
            write!(f, " segment {seg}")?;
        }
        write!(f, ": [{}] {}", self.kind, self.message)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceFile {
    sequence: String,
    height: u32,
    width: u32,
    frames: Vec<FrameFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameFile {
    frame_id: u64,
    segments: Vec<SegmentFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentFile {
    class: String,
    #[serde(default)]
    track_id: Option<u64>,
    #[serde(default)]
    layer: u32,
    rle: RawRle,
}

// Unvalidated counts so that every bad mask can be reported.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRle {
    size: [u32; 2],
    counts: Vec<u64>,
}

/// A validated sequence plus non-fatal findings (open-world drops).
#[derive(Debug, Clone)]
pub struct LoadedSequence {
    pub sequence: SequenceAnnotation,
    pub warnings: Vec<Violation>,
}

fn read_text(path: &Path) -> std::result::Result<String, Violation> {
    fs::read_to_string(path).map_err(|e| Violation::new(path, "unreadable", e.to_string()))
}

fn parse_sequence(path: &Path, text: &str) -> std::result::Result<SequenceFile, Violation> {
    serde_json::from_str(text).map_err(|e| Violation::new(path, "schema", e.to_string()))
}

fn validate(
    path: &Path,
    file: SequenceFile,
    taxonomy: &Taxonomy,
    options: LoadOptions,
) -> std::result::Result<LoadedSequence, Vec<Violation>> {
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    let dims = (file.height, file.width);
    let mut seq = SequenceAnnotation::new(file.sequence, file.height, file.width);
    let mut prev: Option<u64> = None;

    for frame in file.frames {
        let fid = frame.frame_id;
        if let Some(p) = prev {
            let (kind, msg) = if p == fid {
                ("duplicate-frame-id", format!("frame id {fid} repeats"))
            } else if p > fid {
                ("frame-order", format!("frame id {fid} follows {p}; ids must increase"))
            } else {
                ("", String::new())
            };
            if !kind.is_empty() {
                violations.push(Violation::new(path, kind, msg).at(fid, None));
            }
        }
        prev = Some(prev.map_or(fid, |p| p.max(fid)));

        let mut out = FrameAnnotation::new(fid, file.height, file.width);
        let mut ids: HashSet<(String, u64)> = HashSet::new();
        for (si, seg) in frame.segments.into_iter().enumerate() {
            let here = |kind: &str, msg: String| Violation::new(path, kind, msg).at(fid, Some(si));
            let size = (seg.rle.size[0], seg.rle.size[1]);
            if size != dims {
                violations.push(here(
                    "dimension-mismatch",
                    format!("mask size {size:?} differs from sequence size {dims:?}"),
                ));
                continue;
            }
            let Ok(counts) = seg.rle.counts.iter().map(|&c| u32::try_from(c)).collect::<std::result::Result<Vec<u32>, _>>() else {
                violations.push(here("malformed-counts", "run length exceeds 32 bits".into()));
                continue;
            };
            let mask = match Mask::from_counts(size.0, size.1, counts) {
                Ok(m) => m,
                Err(e) => {
                    violations.push(here(e.kind(), e.to_string()));
                    continue;
                }
            };
            let class = match taxonomy.resolve(&seg.class) {
                Some(c) => c,
                None => {
                    let v = here("unknown-class", format!("class `{}` is not in the taxonomy", seg.class));
                    match options.world {
                        World::Closed => violations.push(v),
                        World::Open => warnings.push(Violation {
                            kind: "unresolved-class".into(),
                            message: format!("class `{}` is not in the taxonomy; segment dropped", seg.class),
                            ..v
                        }),
                    }
                    continue;
                }
            };
            match (class.kind, seg.track_id) {
                (ClassKind::Thing, None) if options.tracking => violations.push(here(
                    "missing-track-id",
                    format!("thing segment of class `{}` has no track id", class.name),
                )),
                (ClassKind::Thing, Some(id)) => {
                    if !ids.insert((class.name.clone(), id)) {
                        violations.push(here(
                            "duplicate-track-id",
                            format!("track id {id} of class `{}` repeats in this frame", class.name),
                        ));
                    }
                }
                (ClassKind::Stuff, Some(id)) => violations.push(here(
                    "stuff-track-id",
                    format!("stuff segment of class `{}` carries track id {id}", class.name),
                )),
                _ => {}
            }
            out.segments.push(Segment {
                mask,
                class_name: class.name.clone(),
                track_id: seg.track_id,
                layer: seg.layer,
            });
        }

        // same-class thing masks must be disjoint
        let boxes: Vec<_> = out.segments.iter().map(|s| s.mask.bbox()).collect();
        for i in 0..out.segments.len() {
            for j in i + 1..out.segments.len() {
                let (a, b) = (&out.segments[i], &out.segments[j]);
                if a.class_name != b.class_name || !taxonomy.get(&a.class_name).is_some_and(|c| c.is_thing()) {
                    continue;
                }
                let (Some(ba), Some(bb)) = (boxes[i], boxes[j]) else {
                    continue;
                };
                if ba.intersects(&bb) && a.mask.intersection_area(&b.mask).unwrap_or(0) > 0 {
                    violations.push(
                        Violation::new(
                            path,
                            "disjointness",
                            format!(
                                "thing segments {i} and {j} of class `{}` overlap",
                                a.class_name
                            ),
                        )
                        .at(fid, Some(j)),
                    );
                }
            }
        }
        seq.frames.push(out);
    }

    if violations.is_empty() {
        Ok(LoadedSequence {
            sequence: seq,
            warnings,
        })
    } else {
        Err(violations)
    }
}

fn check_sequence(
    path: &Path,
    taxonomy: &Taxonomy,
    options: LoadOptions,
) -> std::result::Result<LoadedSequence, Vec<Violation>> {
    let text = read_text(path).map_err(|v| vec![v])?;
    let file = parse_sequence(path, &text).map_err(|v| vec![v])?;
    validate(path, file, taxonomy, options)
}

/// Loads and fully validates one sequence file. All violations are collected
/// before failing.
pub fn load_sequence(path: impl AsRef<Path>, taxonomy: &Taxonomy, options: LoadOptions) -> Result<LoadedSequence> {
    check_sequence(path.as_ref(), taxonomy, options).map_err(Error::Validation)
}

/// Parses and validates a sequence from a string; `source` labels violations.
pub fn sequence_from_json(
    text: &str,
    source: &Path,
    taxonomy: &Taxonomy,
    options: LoadOptions,
) -> Result<LoadedSequence> {
    let file = parse_sequence(source, text).map_err(|v| Error::Validation(vec![v]))?;
    validate(source, file, taxonomy, options).map_err(Error::Validation)
}

/// Deterministic pretty JSON in the sequence file schema.
pub fn sequence_to_json(seq: &SequenceAnnotation) -> String {
    let file = SequenceFile {
        sequence: seq.sequence_id.clone(),
        height: seq.height,
        width: seq.width,
        frames: seq
            .frames
            .iter()
            .map(|f| FrameFile {
                frame_id: f.frame_id,
                segments: f
                    .segments
                    .iter()
                    .map(|s| {
                        let rle: RleJson = s.mask.clone().into();
                        SegmentFile {
                            class: s.class_name.clone(),
                            track_id: s.track_id,
                            layer: s.layer,
                            rle: RawRle {
                                size: rle.size,
                                counts: rle.counts.into_iter().map(u64::from).collect(),
                            },
                        }
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("sequence serializes");
    text.push('\n');
    text
}

pub fn save_sequence(path: impl AsRef<Path>, seq: &SequenceAnnotation) -> Result<()> {
    write_file(path.as_ref(), &sequence_to_json(seq))
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub dataset: String,
    pub sequences: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(dataset: impl Into<String>) -> Self {
        Manifest {
            dataset: dataset.into(),
            sequences: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }
}

/// Reads a manifest and returns it with entry paths made absolute.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = read_text(path).map_err(|v| Error::Validation(vec![v]))?;
    let mut manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::Validation(vec![Violation::new(path, "schema", e.to_string())]))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut seen = HashSet::new();
    let mut violations = Vec::new();
    for entry in &mut manifest.sequences {
        if !seen.insert(entry.id.clone()) {
            violations.push(Violation::new(
                path,
                "duplicate-sequence-id",
                format!("sequence id `{}` repeats", entry.id),
            ));
        }
        if entry.path.is_relative() {
            entry.path = base.join(&entry.path);
        }
    }
    if violations.is_empty() {
        Ok(manifest)
    } else {
        Err(Error::Validation(violations))
    }
}

pub fn save_manifest(path: impl AsRef<Path>, manifest: &Manifest) -> Result<()> {
    write_file(path.as_ref(), &manifest.to_json())
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub sequences: Vec<SequenceAnnotation>,
    pub warnings: Vec<Violation>,
}

impl Dataset {
    pub fn sequence(&self, id: &str) -> Option<&SequenceAnnotation> {
        self.sequences.iter().find(|s| s.sequence_id == id)
    }
}

fn check_entry(
    entry: &ManifestEntry,
    taxonomy: &Taxonomy,
    options: LoadOptions,
) -> std::result::Result<LoadedSequence, Vec<Violation>> {
    let loaded = check_sequence(&entry.path, taxonomy, options)?;
    let seq = &loaded.sequence;
    let mut violations = Vec::new();
    let mut expect = |kind: &str, ok: bool, msg: String| {
        if !ok {
            violations.push(Violation::new(&entry.path, kind, msg));
        }
    };
    expect(
        "sequence-id-mismatch",
        seq.sequence_id == entry.id,
        format!("file declares sequence `{}`, manifest says `{}`", seq.sequence_id, entry.id),
    );
    if let Some(n) = entry.frames {
        expect(
            "frame-count-mismatch",
            seq.frames.len() == n,
            format!("file has {} frames, manifest says {n}", seq.frames.len()),
        );
    }
    if let Some(h) = entry.height {
        expect("dimension-mismatch", seq.height == h, format!("height {} vs manifest {h}", seq.height));
    }
    if let Some(w) = entry.width {
        expect("dimension-mismatch", seq.width == w, format!("width {} vs manifest {w}", seq.width));
    }
    if violations.is_empty() {
        Ok(loaded)
    } else {
        Err(violations)
    }
}

/// Per-file outcome of validating a manifest.
#[derive(Debug, Clone, Serialize)]
pub struct FileReport {
    pub sequence: String,
    pub path: String,
    pub frames: usize,
    pub segments: usize,
    pub violations: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

/// Validates every file of a manifest without stopping at the first failure.
pub fn validate_manifest(path: impl AsRef<Path>, taxonomy: &Taxonomy, options: LoadOptions) -> Result<Vec<FileReport>> {
    let manifest = load_manifest(path)?;
    Ok(manifest
        .sequences
        .par_iter()
        .map(|entry| {
            let (frames, segments, violations, warnings) = match check_entry(entry, taxonomy, options) {
                Ok(l) => (l.sequence.frames.len(), l.sequence.segment_count(), Vec::new(), l.warnings),
                Err(v) => (0, 0, v, Vec::new()),
            };
            FileReport {
                sequence: entry.id.clone(),
                path: entry.path.display().to_string(),
                frames,
                segments,
                violations,
                warnings,
            }
        })
        .collect())
}

/// Loads every sequence of a manifest; fails with all violations found.
pub fn load_dataset(path: impl AsRef<Path>, taxonomy: &Taxonomy, options: LoadOptions) -> Result<Dataset> {
    let manifest = load_manifest(path)?;
    let results: Vec<_> = manifest
        .sequences
        .par_iter()
        .map(|entry| check_entry(entry, taxonomy, options))
        .collect();
    let mut sequences = Vec::with_capacity(results.len());
    let mut warnings = Vec::new();
    let mut violations = Vec::new();
    for r in results {
        match r {
            Ok(l) => {
                sequences.push(l.sequence);
                warnings.extend(l.warnings);
            }
            Err(v) => violations.extend(v),
        }
    }
    if violations.is_empty() {
        Ok(Dataset {
            name: manifest.dataset,
            sequences,
            warnings,
        })
    } else {
        Err(Error::Validation(violations))
    }
}

/// Resolves multi-label pixels to a single owner. Priority: thing over stuff,
/// then lower layer, then smaller area, then lower index. Emptied segments are
/// dropped; survivors keep their original order.
pub fn flatten_multilabel(frame: &FrameAnnotation, taxonomy: &Taxonomy) -> Result<FrameAnnotation> {
    let mut keys = Vec::with_capacity(frame.segments.len());
    for (i, s) in frame.segments.iter().enumerate() {
        let class = taxonomy.class(&s.class_name)?;
        let rank = match class.kind {
            ClassKind::Thing => 0u8,
            ClassKind::Stuff => 1,
        };
        keys.push((rank, s.layer, s.mask.area(), i));
    }
    keys.sort_unstable();

    let mut claimed = Mask::empty(frame.height, frame.width);
    let mut owned: Vec<Option<Mask>> = vec![None; frame.segments.len()];
    for &(_, _, _, i) in &keys {
        let mask = &frame.segments[i].mask;
        let kept = mask.difference(&claimed)?;
        claimed = claimed.union(mask)?;
        owned[i] = Some(kept);
    }
    let segments = frame
        .segments
        .iter()
        .zip(owned)
        .filter_map(|(s, m)| {
            let m = m.expect("every segment visited");
            (!m.is_empty()).then(|| Segment { mask: m, ..s.clone() })
        })
        .collect();
    Ok(FrameAnnotation {
        segments,
        ..frame.cleared()
    })
}

pub fn flatten_sequence(seq: &SequenceAnnotation, taxonomy: &Taxonomy) -> Result<SequenceAnnotation> {
    let frames = seq
        .frames
        .par_iter()
        .map(|f| flatten_multilabel(f, taxonomy))
        .collect::<Result<Vec<_>>>()?;
    Ok(SequenceAnnotation {
        frames,
        ..SequenceAnnotation::new(seq.sequence_id.clone(), seq.height, seq.width)
    })
}

/// Maps sequence id to sequence for quick pairing of gt and pred datasets.
pub fn index_by_id(seqs: &[SequenceAnnotation]) -> HashMap<&str, &SequenceAnnotation> {
    seqs.iter().map(|s| (s.sequence_id.as_str(), s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::{ClassFilter, ClassInfo, Split};

    fn taxonomy() -> Taxonomy {
        let c = |name: &str, id, kind, split| ClassInfo {
            name: name.into(),
            id,
            kind,
            split,
        };
        Taxonomy::new(
            vec![
                c("chair", 1, ClassKind::Thing, Split::Known),
                c("bag", 2, ClassKind::Thing, Split::Unknown),
                c("glass", 3, ClassKind::Stuff, Split::Known),
                c("wall", 4, ClassKind::Stuff, Split::Unknown),
            ],
            [("Window Glass".to_string(), "glass".to_string())].into(),
        )
        .unwrap()
    }

    fn rect(t: u32, l: u32, b: u32, r: u32) -> Mask {
        Mask::from_rect(8, 8, t, l, b, r)
    }

    fn frame(segments: Vec<Segment>) -> FrameAnnotation {
        FrameAnnotation::new(0, 8, 8).with_segments(segments)
    }

    fn src() -> &'static Path {
        Path::new("mem.json")
    }

    #[test]
    fn minimal_file_loads() {
        let tax = taxonomy();
        let text = r#"{"sequence":"a","height":2,"width":2,"frames":[
            {"frame_id":0,"segments":[{"class":"chair","track_id":3,"layer":0,"rle":{"size":[2,2],"counts":[2,1,1]}}]}]}"#;
        let opts = LoadOptions {
            tracking: true,
            world: World::Closed,
        };
        let l = sequence_from_json(text, src(), &tax, opts).unwrap();
        assert_eq!(l.sequence.frames.len(), 1);
        assert_eq!(l.sequence.tracks(&tax, ClassFilter::ALL).unwrap().len(), 1);
    }

    fn violations(text: &str, opts: LoadOptions) -> Vec<Violation> {
        match sequence_from_json(text, src(), &taxonomy(), opts) {
            Err(Error::Validation(v)) => v,
            other => panic!("expected violations, got {other:?}"),
        }
    }

    #[test]
    fn collects_every_violation() {
        let text = r#"{"sequence":"a","height":2,"width":2,"frames":[
            {"frame_id":1,"segments":[
                {"class":"chair","rle":{"size":[2,2],"counts":[3]}},
                {"class":"sofa","track_id":1,"rle":{"size":[2,2],"counts":[4]}},
                {"class":"chair","track_id":1,"rle":{"size":[2,2],"counts":[0,4]}},
                {"class":"chair","track_id":2,"rle":{"size":[2,2],"counts":[0,4]}}]},
            {"frame_id":1,"segments":[]}]}"#;
        let v = violations(
            text,
            LoadOptions {
                tracking: true,
                world: World::Closed,
            },
        );
        let kinds: Vec<&str> = v.iter().map(|v| v.kind.as_str()).collect();
        assert_eq!(
            kinds,
            ["malformed-counts", "unknown-class", "disjointness", "duplicate-frame-id"]
        );
        assert_eq!(v[0].frame, Some(1));
        assert_eq!(v[0].segment, Some(0));
    }

    #[test]
    fn track_ids_required_only_when_tracking() {
        let text = r#"{"sequence":"a","height":2,"width":2,"frames":[
            {"frame_id":0,"segments":[{"class":"chair","rle":{"size":[2,2],"counts":[0,4]}}]}]}"#;
        let seg_only = LoadOptions::default();
        assert!(sequence_from_json(text, src(), &taxonomy(), seg_only).is_ok());
        let v = violations(
            text,
            LoadOptions {
                tracking: true,
                world: World::Closed,
            },
        );
        assert_eq!(v[0].kind, "missing-track-id");
    }

    #[test]
    fn open_world_reports_unresolved_names() {
        let text = r#"{"sequence":"a","height":2,"width":2,"frames":[
            {"frame_id":0,"segments":[
                {"class":"  WINDOW   glass ","rle":{"size":[2,2],"counts":[0,4]}},
                {"class":"zebra","rle":{"size":[2,2],"counts":[0,4]}}]}]}"#;
        let opts = LoadOptions {
            tracking: false,
            world: World::Open,
        };
        let l = sequence_from_json(text, src(), &taxonomy(), opts).unwrap();
        assert_eq!(l.sequence.frames[0].segments.len(), 1);
        assert_eq!(l.sequence.frames[0].segments[0].class_name, "glass");
        assert_eq!(l.warnings.len(), 1);
        assert_eq!(l.warnings[0].kind, "unresolved-class");
        assert!(!violations(text, LoadOptions::default()).is_empty());
    }

    #[test]
    fn json_round_trip() {
        let tax = taxonomy();
        let mut seq = SequenceAnnotation::new("s", 8, 8);
        seq.frames.push(frame(vec![
            Segment::new(rect(0, 0, 3, 3), "chair").with_track(4).with_layer(1),
            Segment::new(rect(0, 0, 8, 8), "wall").with_layer(2),
        ]));
        let text = sequence_to_json(&seq);
        let back = sequence_from_json(&text, src(), &tax, LoadOptions::default()).unwrap();
        assert_eq!(back.sequence, seq);
        assert_eq!(sequence_to_json(&back.sequence), text);
    }

    #[test]
    fn flatten_prefers_things_then_layers() {
        let tax = taxonomy();
        let f = frame(vec![
            Segment::new(rect(0, 0, 8, 8), "glass").with_layer(0),
            Segment::new(rect(2, 2, 5, 5), "chair").with_layer(1),
        ]);
        let flat = flatten_multilabel(&f, &tax).unwrap();
        assert_eq!(flat.segments[1].mask, rect(2, 2, 5, 5));
        assert_eq!(flat.segments[0].mask.area(), 64 - 9);

        let f = frame(vec![
            Segment::new(rect(0, 0, 4, 8), "wall").with_layer(1),
            Segment::new(rect(2, 0, 8, 8), "glass").with_layer(0),
        ]);
        let flat = flatten_multilabel(&f, &tax).unwrap();
        assert_eq!(flat.segments[0].mask, rect(0, 0, 2, 8));
        assert_eq!(flat.segments[1].mask, rect(2, 0, 8, 8));
    }

    #[test]
    fn flatten_is_identity_on_single_label_frames() {
        let tax = taxonomy();
        let f = frame(vec![
            Segment::new(rect(0, 0, 2, 2), "chair").with_track(1),
            Segment::new(rect(4, 4, 8, 8), "wall"),
        ]);
        assert_eq!(flatten_multilabel(&f, &tax).unwrap(), f);
    }

    #[test]
    fn flatten_drops_fully_hidden_segments() {
        let tax = taxonomy();
        let f = frame(vec![
            Segment::new(rect(0, 0, 8, 8), "chair").with_track(1),
            Segment::new(rect(1, 1, 3, 3), "wall"),
        ]);
        let flat = flatten_multilabel(&f, &tax).unwrap();
        assert_eq!(flat.segments.len(), 1);
    }
}
