//! Run-length encoded binary masks.
//!
//! Counts alternate background/foreground runs over the column-major pixel
//! sequence (pixel `(row, col)` sits at index `col * height + row`) and always
//! begin with a background run, which may be zero. This is the layout used by
//! the COCO/panoptic tooling, so stored annotations interoperate.
//!
//! Set operations (area, intersection, IoU, union, difference) walk the runs
//! directly and never materialize a bitmap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major boolean grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    height: u32,
    width: u32,
    bits: Vec<bool>,
}

impl Bitmap {
    pub fn new(height: u32, width: u32) -> Self {
        Bitmap {
            height,
            width,
            bits: vec![false; height as usize * width as usize],
        }
    }

    pub fn from_bits(height: u32, width: u32, bits: Vec<bool>) -> Result<Self> {
        let expected = height as u64 * width as u64;
        if bits.len() as u64 != expected {
            return Err(Error::MalformedCounts {
                expected,
                actual: bits.len() as u64,
            });
        }
        Ok(Bitmap {
            height,
            width,
            bits,
        })
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> bool {
        self.bits[row as usize * self.width as usize + col as usize]
    }

    #[inline]
    pub fn set(&mut self, row: u32, col: u32, value: bool) {
        self.bits[row as usize * self.width as usize + col as usize] = value;
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    /// Translate by `(dx, dy)` pixels (columns, rows); pixels leaving the grid are lost.
    pub fn shifted(&self, dx: i64, dy: i64) -> Bitmap {
        let mut out = Bitmap::new(self.height, self.width);
        for row in 0..self.height {
            for col in 0..self.width {
                if !self.get(row, col) {
                    continue;
                }
                let r = row as i64 + dy;
                let c = col as i64 + dx;
                if r >= 0 && c >= 0 && r < self.height as i64 && c < self.width as i64 {
                    out.set(r as u32, c as u32, true);
                }
            }
        }
        out
    }

    /// Morphological dilation with a square structuring element of the given radius.
    pub fn dilated(&self, radius: u32) -> Bitmap {
        self.morph(radius, true)
    }

    /// Morphological erosion with a square structuring element of the given radius.
    /// Pixels outside the grid count as background.
    pub fn eroded(&self, radius: u32) -> Bitmap {
        self.morph(radius, false)
    }

    // Separable max/min filter: rows first, then columns.
    fn morph(&self, radius: u32, dilate: bool) -> Bitmap {
        if radius == 0 {
            return self.clone();
        }
        let (h, w) = (self.height as i64, self.width as i64);
        let r = radius as i64;
        let pick = |acc: bool, v: bool| if dilate { acc || v } else { acc && v };
        let mut pass = Bitmap::new(self.height, self.width);
        for row in 0..h {
            for col in 0..w {
                let mut acc = !dilate;
                for c in col - r..=col + r {
                    let v = c >= 0 && c < w && self.get(row as u32, c as u32);
                    acc = pick(acc, v);
                }
                pass.set(row as u32, col as u32, acc);
            }
        }
        let mut out = Bitmap::new(self.height, self.width);
        for row in 0..h {
            for col in 0..w {
                let mut acc = !dilate;
                for rr in row - r..=row + r {
                    let v = rr >= 0 && rr < h && pass.get(rr as u32, col as u32);
                    acc = pick(acc, v);
                }
                out.set(row as u32, col as u32, acc);
            }
        }
        out
    }
}

/// Inclusive pixel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BBox {
    pub top: u32,
    pub left: u32,
    pub bottom: u32,
    pub right: u32,
}

impl BBox {
    #[inline]
    pub fn intersects(&self, other: &BBox) -> bool {
        self.left <= other.right
            && other.left <= self.right
            && self.top <= other.bottom
            && other.top <= self.bottom
    }
}

/// Binary mask in run-length form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RleJson", into = "RleJson")]
pub struct Mask {
    height: u32,
    width: u32,
    counts: Vec<u32>,
}

/// Wire form: `{"size": [height, width], "counts": [int, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RleJson {
    pub size: [u32; 2],
    pub counts: Vec<u32>,
}

impl TryFrom<RleJson> for Mask {
    type Error = Error;

    fn try_from(value: RleJson) -> Result<Self> {
        Mask::from_counts(value.size[0], value.size[1], value.counts)
    }
}

impl From<Mask> for RleJson {
    fn from(m: Mask) -> Self {
        RleJson {
            size: [m.height, m.width],
            counts: m.counts,
        }
    }
}

impl Mask {
    /// Validating constructor. Rejects counts that do not cover the grid exactly
    /// and counts with two consecutive zero runs (a single leading zero is fine).
    pub fn from_counts(height: u32, width: u32, counts: Vec<u32>) -> Result<Self> {
        let expected = height as u64 * width as u64;
        let actual: u64 = counts.iter().map(|&c| c as u64).sum();
        if actual != expected {
            return Err(Error::MalformedCounts { expected, actual });
        }
        if let Some(i) = counts.windows(2).position(|w| w[0] == 0 && w[1] == 0) {
            return Err(Error::InvalidCounts(format!(
                "consecutive zero runs at index {i}"
            )));
        }
        Ok(Mask {
            height,
            width,
            counts,
        })
    }

    pub fn empty(height: u32, width: u32) -> Self {
        let n = height * width;
        Mask {
            height,
            width,
            counts: if n == 0 { Vec::new() } else { vec![n] },
        }
    }

    /// Axis-aligned rectangle covering rows `top..bottom` and columns `left..right`
    /// (half-open), clipped to the grid.
    pub fn from_rect(height: u32, width: u32, top: u32, left: u32, bottom: u32, right: u32) -> Self {
        let bottom = bottom.min(height);
        let right = right.min(width);
        if top >= bottom || left >= right {
            return Mask::empty(height, width);
        }
        let rows = bottom - top;
        let mut counts = Vec::with_capacity(2 * (right - left) as usize + 1);
        counts.push(left * height + top);
        for col in left..right {
            counts.push(rows);
            if col + 1 < right {
                counts.push(height - rows);
            }
        }
        counts.push(height * width - (right - 1) * height - bottom);
        // A full-height rectangle produces zero-length gaps between columns.
        let counts = canonical(counts);
        Mask {
            height,
            width,
            counts,
        }
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.height, self.width)
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Foreground pixel count: the sum of odd-indexed runs.
    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| c as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.area() == 0
    }

    pub fn encode(bitmap: &Bitmap) -> Mask {
        let (h, w) = (bitmap.height, bitmap.width);
        let mut builder = RunBuilder::with_capacity(16);
        for col in 0..w {
            for row in 0..h {
                builder.push(bitmap.get(row, col), 1);
            }
        }
        Mask {
            height: h,
            width: w,
            counts: builder.finish(),
        }
    }

    pub fn decode(&self) -> Bitmap {
        let h = self.height as usize;
        let mut bitmap = Bitmap::new(self.height, self.width);
        let mut pos = 0usize;
        for (i, &run) in self.counts.iter().enumerate() {
            if i % 2 == 1 {
                for p in pos..pos + run as usize {
                    let (col, row) = (p / h, p % h);
                    bitmap.bits[row * self.width as usize + col] = true;
                }
            }
            pos += run as usize;
        }
        bitmap
    }

    pub fn bbox(&self) -> Option<BBox> {
        let h = self.height as u64;
        let mut pos = 0u64;
        let mut bbox: Option<BBox> = None;
        for (i, &run) in self.counts.iter().enumerate() {
            let run = run as u64;
            if i % 2 == 1 && run > 0 {
                let (c0, r0) = (pos / h, pos % h);
                let end = pos + run - 1;
                let (c1, r1) = (end / h, end % h);
                let (top, bottom) = if c0 == c1 { (r0, r1) } else { (0, h - 1) };
                let b = BBox {
                    top: top as u32,
                    left: c0 as u32,
                    bottom: bottom as u32,
                    right: c1 as u32,
                };
                bbox = Some(match bbox {
                    None => b,
                    Some(a) => BBox {
                        top: a.top.min(b.top),
                        left: a.left.min(b.left),
                        bottom: a.bottom.max(b.bottom),
                        right: a.right.max(b.right),
                    },
                });
            }
            pos += run;
        }
        bbox
    }

    fn check_dims(&self, other: &Mask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        Ok(())
    }

    pub fn intersection_area(&self, other: &Mask) -> Result<u64> {
        self.check_dims(other)?;
        Ok(intersection_runs(&self.counts, &other.counts))
    }

    /// `|a ∩ b| / |a ∪ b|`, defined as 0 when both masks are empty.
    pub fn iou(&self, other: &Mask) -> Result<f64> {
        let inter = self.intersection_area(other)?;
        Ok(iou_from_areas(self.area(), other.area(), inter))
    }

    pub fn union(&self, other: &Mask) -> Result<Mask> {
        self.merge(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Mask) -> Result<Mask> {
        self.merge(other, |a, b| a && b)
    }

    /// Pixels of `self` not covered by `other`.
    pub fn difference(&self, other: &Mask) -> Result<Mask> {
        self.merge(other, |a, b| a && !b)
    }

    fn merge(&self, other: &Mask, op: impl Fn(bool, bool) -> bool) -> Result<Mask> {
        self.check_dims(other)?;
        let mut a = Runs::new(&self.counts);
        let mut b = Runs::new(&other.counts);
        let mut builder = RunBuilder::with_capacity(self.counts.len() + other.counts.len());
        let (mut ra, mut va) = a.next().unwrap_or((0, false));
        let (mut rb, mut vb) = b.next().unwrap_or((0, false));
        while ra > 0 && rb > 0 {
            let step = ra.min(rb);
            builder.push(op(va, vb), step);
            ra -= step;
            rb -= step;
            if ra == 0 {
                (ra, va) = a.next().unwrap_or((0, false));
            }
            if rb == 0 {
                (rb, vb) = b.next().unwrap_or((0, false));
            }
        }
        Ok(Mask {
            height: self.height,
            width: self.width,
            counts: builder.finish(),
        })
    }

    /// Union of any number of masks on a `height x width` grid.
    pub fn union_all<'a>(
        height: u32,
        width: u32,
        masks: impl IntoIterator<Item = &'a Mask>,
    ) -> Result<Mask> {
        masks
            .into_iter()
            .try_fold(Mask::empty(height, width), |acc, m| acc.union(m))
    }

    /// Nearest-neighbour upscale by an integer factor in both directions.
    pub fn upscale(&self, factor: u32) -> Mask {
        let bitmap = self.decode();
        let (h, w) = (self.height * factor, self.width * factor);
        let mut out = Bitmap::new(h, w);
        for row in 0..h {
            for col in 0..w {
                if bitmap.get(row / factor, col / factor) {
                    out.set(row, col, true);
                }
            }
        }
        Mask::encode(&out)
    }
}

#[inline]
pub(crate) fn iou_from_areas(area_a: u64, area_b: u64, inter: u64) -> f64 {
    let union = area_a + area_b - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Iterator over non-empty `(length, is_foreground)` runs.
struct Runs<'a> {
    counts: &'a [u32],
    idx: usize,
}

impl<'a> Runs<'a> {
    fn new(counts: &'a [u32]) -> Self {
        Runs { counts, idx: 0 }
    }
}

impl Iterator for Runs<'_> {
    type Item = (u32, bool);

    #[inline]
    fn next(&mut self) -> Option<(u32, bool)> {
        while self.idx < self.counts.len() {
            let i = self.idx;
            self.idx += 1;
            if self.counts[i] > 0 {
                return Some((self.counts[i], i % 2 == 1));
            }
        }
        None
    }
}

fn intersection_runs(a: &[u32], b: &[u32]) -> u64 {
    let mut ia = Runs::new(a);
    let mut ib = Runs::new(b);
    let (mut ra, mut va) = ia.next().unwrap_or((0, false));
    let (mut rb, mut vb) = ib.next().unwrap_or((0, false));
    let mut inter = 0u64;
    while ra > 0 && rb > 0 {
        let step = ra.min(rb);
        if va && vb {
            inter += step as u64;
        }
        ra -= step;
        rb -= step;
        if ra == 0 {
            (ra, va) = ia.next().unwrap_or((0, false));
        }
        if rb == 0 {
            (rb, vb) = ib.next().unwrap_or((0, false));
        }
    }
    inter
}

/// Accumulates runs and emits counts starting with a background run.
struct RunBuilder {
    counts: Vec<u32>,
    value: bool,
    len: u32,
}

impl RunBuilder {
    fn with_capacity(cap: usize) -> Self {
        RunBuilder {
            counts: Vec::with_capacity(cap),
            value: false,
            len: 0,
        }
    }

    #[inline]
    fn push(&mut self, value: bool, len: u32) {
        if len == 0 {
            return;
        }
        if value == self.value {
            self.len += len;
        } else {
            self.counts.push(self.len);
            self.value = value;
            self.len = len;
        }
    }

    fn finish(mut self) -> Vec<u32> {
        if self.len > 0 || !self.counts.is_empty() {
            self.counts.push(self.len);
        }
        self.counts
    }
}

fn canonical(counts: Vec<u32>) -> Vec<u32> {
    let mut builder = RunBuilder::with_capacity(counts.len());
    for (i, &c) in counts.iter().enumerate() {
        builder.push(i % 2 == 1, c);
    }
    builder.finish()
}
