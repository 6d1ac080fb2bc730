//! Dataset statistics over COCO person annotations.
//!
//! Everything accumulated here is an integer count, so statistics of a
//! dataset equal the merge of the statistics of any partition of its images,
//! bit for bit.

mod report;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

pub use report::{compare, write_report, ComparisonSummary, ReportError, StatsSummary};

use crate::coco_io::{CocoAnnotation, CocoDataset, PERSON_CATEGORY_ID};
use crate::humanoid::{keypoint_index, NUM_KEYPOINTS};
use crate::Real;

/// Keypoints in torso units: mid-hip at the origin, unit mean hip-shoulder length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizedKeypoints<T> {
    /// `None` for unlabeled keypoints.
    pub points: [Option<[T; 2]>; NUM_KEYPOINTS],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlignSkip {
    /// A hip or shoulder is unlabeled.
    MissingTorso,
    /// Hip-shoulder distances are both zero.
    Degenerate,
}

const LEFT_SHOULDER: usize = 5;
const RIGHT_SHOULDER: usize = 6;
const LEFT_HIP: usize = 11;
const RIGHT_HIP: usize = 12;

/// Translates keypoints to the mid-hip and divides by the mean of the left
/// and right hip-shoulder distances. Input triplets are `(x, y, v)`; any
/// `v > 0` counts as labeled.
pub fn align_keypoints<T: Real>(kps: &[[T; 3]; NUM_KEYPOINTS]) -> Result<NormalizedKeypoints<T>, AlignSkip> {
    let labeled = |k: usize| kps[k][2] > T::zero();
    if ![LEFT_HIP, RIGHT_HIP, LEFT_SHOULDER, RIGHT_SHOULDER].iter().all(|&k| labeled(k)) {
        return Err(AlignSkip::MissingTorso);
    }
    let half = T::lit(0.5);
    let dist = |a: usize, b: usize| (kps[a][0] - kps[b][0]).hypot(kps[a][1] - kps[b][1]);
    let mx = (kps[LEFT_HIP][0] + kps[RIGHT_HIP][0]) * half;
    let my = (kps[LEFT_HIP][1] + kps[RIGHT_HIP][1]) * half;
    let s = (dist(LEFT_HIP, LEFT_SHOULDER) + dist(RIGHT_HIP, RIGHT_SHOULDER)) * half;
    if !(s > T::zero() && s.is_finite()) {
        return Err(AlignSkip::Degenerate);
    }
    Ok(NormalizedKeypoints {
        points: std::array::from_fn(|k| labeled(k).then(|| [(kps[k][0] - mx) / s, (kps[k][1] - my) / s])),
    })
}

/// Triplets of a COCO annotation, or `None` without keypoints.
pub fn triplets(a: &CocoAnnotation) -> Option<[[f64; 3]; NUM_KEYPOINTS]> {
    let k = a.keypoints.as_ref()?;
    (k.len() == 3 * NUM_KEYPOINTS).then(|| std::array::from_fn(|i| [k[3 * i], k[3 * i + 1], k[3 * i + 2]]))
}

/// Axis-aligned coordinate rectangle `[x0, x1) x [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Extent {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

/// 2D grid of counts. Row 0 holds the smallest `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub width: usize,
    pub height: usize,
    pub extent: Extent,
    pub bins: Vec<u64>,
    /// Contributing instances (keypoint heatmaps) or boxes (occupancy).
    pub normalization: u64,
}

impl Heatmap {
    pub fn new(width: usize, height: usize, extent: Extent) -> Self {
        Self { width, height, extent, bins: vec![0; width * height], normalization: 0 }
    }

    /// Bin of a point, or `None` outside the extent.
    pub fn bin_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let e = &self.extent;
        let fx = (x - e.x0) / (e.x1 - e.x0) * self.width as f64;
        let fy = (y - e.y0) / (e.y1 - e.y0) * self.height as f64;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (c, r) = (fx as usize, fy as usize);
        (c < self.width && r < self.height).then_some((c, r))
    }

    /// Counts one point; returns whether it landed inside.
    pub fn add_point(&mut self, x: f64, y: f64) -> bool {
        match self.bin_of(x, y) {
            Some((c, r)) => {
                self.bins[r * self.width + c] += 1;
                true
            }
            None => false,
        }
    }

    pub fn get(&self, col: usize, row: usize) -> u64 {
        self.bins[row * self.width + col]
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    /// Bins divided by the normalization; all zero when it is 0.
    pub fn normalized(&self) -> Vec<f64> {
        let n = self.normalization;
        self.bins.iter().map(|&b| if n == 0 { 0.0 } else { b as f64 / n as f64 }).collect()
    }

    /// Adds another heatmap with the same grid.
    pub fn merge(&mut self, other: &Heatmap) {
        assert!(self.width == other.width && self.height == other.height && self.extent == other.extent, "grid mismatch");
        self.bins.iter_mut().zip(&other.bins).for_each(|(a, b)| *a += b);
        self.normalization += other.normalization;
    }
}

/// Integer-count histogram over `[min, max]` with equal-width bins; the
/// maximum falls into the last bin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub min: f64,
    pub max: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(min: f64, max: f64, bins: usize) -> Self {
        Self { min, max, counts: vec![0; bins] }
    }

    pub fn add(&mut self, v: f64) {
        let n = self.counts.len();
        let f = ((v - self.min) / (self.max - self.min) * n as f64).floor();
        let i = if f.is_nan() { 0 } else { f.clamp(0.0, (n - 1) as f64) as usize };
        self.counts[i] += 1;
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let w = (self.max - self.min) / self.counts.len() as f64;
        (self.min + w * i as f64, self.min + w * (i + 1) as f64)
    }

    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(self.counts.len(), other.counts.len(), "bin mismatch");
        self.counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
    }
}

/// `sqrt(box pixels / image pixels)`.
pub fn relative_size(bbox_w: f64, bbox_h: f64, image_w: f64, image_h: f64) -> f64 {
    (bbox_w * bbox_h / (image_w * image_h)).sqrt()
}

pub const OCCUPANCY_SIZE: usize = 640;

/// Adds filled boxes to a square occupancy grid through a 2D difference
/// array. A cell is covered when its center lies inside the scaled box.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyAccumulator {
    size: usize,
    diff: Vec<i64>,
    boxes: u64,
}

impl OccupancyAccumulator {
    pub fn new(size: usize) -> Self {
        Self { size, diff: vec![0; (size + 1) * (size + 1)], boxes: 0 }
    }

    /// `bbox` in pixels of an `image_w x image_h` image.
    pub fn add_box(&mut self, bbox: [f64; 4], image_w: f64, image_h: f64) {
        let n = self.size as f64;
        let (sx, sy) = (n / image_w, n / image_h);
        let cells = |a: f64, b: f64| {
            let lo = (a - 0.5).ceil().clamp(0.0, n) as usize;
            let hi = (b - 0.5).ceil().clamp(0.0, n) as usize;
            (lo, hi)
        };
        let (c0, c1) = cells(bbox[0] * sx, (bbox[0] + bbox[2]) * sx);
        let (r0, r1) = cells(bbox[1] * sy, (bbox[1] + bbox[3]) * sy);
        self.boxes += 1;
        if c0 >= c1 || r0 >= r1 {
            return;
        }
        let w = self.size + 1;
        self.diff[r0 * w + c0] += 1;
        self.diff[r0 * w + c1] -= 1;
        self.diff[r1 * w + c0] -= 1;
        self.diff[r1 * w + c1] += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        self.diff.iter_mut().zip(&other.diff).for_each(|(a, b)| *a += b);
        self.boxes += other.boxes;
    }

    pub fn finish(&self) -> Heatmap {
        let n = self.size;
        let w = n + 1;
        let mut h = Heatmap::new(n, n, Extent { x0: 0.0, x1: n as f64, y0: 0.0, y1: n as f64 });
        h.normalization = self.boxes;
        let mut row = vec![0i64; n];
        for r in 0..n {
            let mut acc = 0i64;
            for c in 0..n {
                acc += self.diff[r * w + c];
                row[c] += acc;
                h.bins[r * n + c] = row[c] as u64;
            }
        }
        h
    }
}

/// Filled-box occupancy of every person box, scaled to a 640x640 frame.
pub fn bbox_occupancy(dataset: &CocoDataset) -> Heatmap {
    DatasetStats::compute(dataset, &StatsOptions::default()).occupancy.finish()
}

/// Heatmap of one aligned keypoint over the dataset.
pub fn keypoint_heatmap(dataset: &CocoDataset, keypoint: &str, bins: usize, extent: Extent) -> Option<Heatmap> {
    let k = keypoint_index(keypoint)?;
    let opts = StatsOptions { heatmap_bins: bins, heatmap_extent: extent };
    Some(DatasetStats::compute(dataset, &opts).heatmaps.swap_remove(k))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatsOptions {
    pub heatmap_bins: usize,
    pub heatmap_extent: Extent,
}

impl Default for StatsOptions {
    fn default() -> Self {
        Self { heatmap_bins: 100, heatmap_extent: Extent { x0: -5.0, x1: 5.0, y0: -5.0, y1: 5.0 } }
    }
}

pub const RELATIVE_SIZE_BINS: usize = 50;

/// Annotations that did not contribute, by reason.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SkipReport {
    pub crowd: u64,
    /// Boxes with zero width or height (excluded from size and occupancy).
    pub zero_area_boxes: u64,
    /// No hips/shoulders labeled (excluded from heatmaps).
    pub missing_torso: u64,
    pub degenerate_torso: u64,
    pub annotations_without_keypoints: u64,
}

impl SkipReport {
    fn merge(&mut self, o: &Self) {
        self.crowd += o.crowd;
        self.zero_area_boxes += o.zero_area_boxes;
        self.missing_torso += o.missing_torso;
        self.degenerate_torso += o.degenerate_torso;
        self.annotations_without_keypoints += o.annotations_without_keypoints;
    }
}

/// All statistics of a dataset, as mergeable counts.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetStats {
    pub images: u64,
    /// Person annotations (not crowd).
    pub instances: u64,
    /// Person annotations with `num_keypoints > 0`.
    pub instances_with_keypoints: u64,
    /// `boxes_per_image[n]` = images with `n` person boxes.
    pub boxes_per_image: Vec<u64>,
    pub relative_size: Histogram,
    /// Sum of relative sizes in units of 1e-9, kept integral so merges are exact.
    pub relative_size_sum_nano: u64,
    /// `keypoints_per_bbox[n]` = instances with `n` labeled keypoints.
    pub keypoints_per_bbox: [u64; NUM_KEYPOINTS + 1],
    /// Per keypoint, instances where it is labeled (visible or occluded).
    pub keypoint_annotated: [u64; NUM_KEYPOINTS],
    /// Per keypoint, instances where it is visible.
    pub keypoint_visible: [u64; NUM_KEYPOINTS],
    pub heatmaps: Vec<Heatmap>,
    pub occupancy: OccupancyAccumulator,
    pub skipped: SkipReport,
}

impl DatasetStats {
    pub fn empty(options: &StatsOptions) -> Self {
        let b = options.heatmap_bins;
        Self {
            images: 0,
            instances: 0,
            instances_with_keypoints: 0,
            boxes_per_image: Vec::new(),
            relative_size: Histogram::new(0.0, 1.0, RELATIVE_SIZE_BINS),
            relative_size_sum_nano: 0,
            keypoints_per_bbox: [0; NUM_KEYPOINTS + 1],
            keypoint_annotated: [0; NUM_KEYPOINTS],
            keypoint_visible: [0; NUM_KEYPOINTS],
            heatmaps: vec![Heatmap::new(b, b, options.heatmap_extent); NUM_KEYPOINTS],
            occupancy: OccupancyAccumulator::new(OCCUPANCY_SIZE),
            skipped: SkipReport::default(),
        }
    }

    /// Statistics over person annotations, computed in parallel over images.
    pub fn compute(dataset: &CocoDataset, options: &StatsOptions) -> Self {
        let person = dataset
            .categories
            .iter()
            .find(|c| c.name == "person")
            .map(|c| c.id)
            .unwrap_or(PERSON_CATEGORY_ID);
        let mut by_image: HashMap<u64, Vec<&CocoAnnotation>> = HashMap::new();
        for a in dataset.annotations.iter().filter(|a| a.category_id == person) {
            by_image.entry(a.image_id).or_default().push(a);
        }
        dataset
            .images
            .par_iter()
            .fold(
                || Self::empty(options),
                |mut s, img| {
                    let anns = by_image.get(&img.id).map(Vec::as_slice).unwrap_or(&[]);
                    s.add_image(img.width as f64, img.height as f64, anns);
                    s
                },
            )
            .reduce(
                || Self::empty(options),
                |mut a, b| {
                    a.merge(&b);
                    a
                },
            )
    }

    pub fn add_image(&mut self, width: f64, height: f64, annotations: &[&CocoAnnotation]) {
        self.images += 1;
        let mut boxes = 0usize;
        for a in annotations {
            if a.iscrowd != 0 {
                self.skipped.crowd += 1;
                continue;
            }
            boxes += 1;
            self.instances += 1;
            let [_, _, bw, bh] = a.bbox;
            if bw > 0.0 && bh > 0.0 {
                let rel = relative_size(bw, bh, width, height);
                self.relative_size.add(rel);
                self.relative_size_sum_nano += (rel * 1e9).round() as u64;
                self.occupancy.add_box(a.bbox, width, height);
            } else {
                self.skipped.zero_area_boxes += 1;
            }
            let Some(kps) = triplets(a) else {
                self.skipped.annotations_without_keypoints += 1;
                self.keypoints_per_bbox[0] += 1;
                continue;
            };
            let labeled = kps.iter().filter(|t| t[2] > 0.0).count();
            self.keypoints_per_bbox[labeled] += 1;
            if labeled > 0 {
                self.instances_with_keypoints += 1;
            }
            for (k, t) in kps.iter().enumerate() {
                self.keypoint_annotated[k] += (t[2] > 0.0) as u64;
                self.keypoint_visible[k] += (t[2] >= 2.0) as u64;
            }
            match align_keypoints(&kps) {
                Ok(n) => {
                    for (h, p) in self.heatmaps.iter_mut().zip(n.points) {
                        if let Some([x, y]) = p {
                            h.add_point(x, y);
                        }
                    }
                    self.heatmaps.iter_mut().for_each(|h| h.normalization += 1);
                }
                Err(AlignSkip::MissingTorso) => self.skipped.missing_torso += 1,
                Err(AlignSkip::Degenerate) => self.skipped.degenerate_torso += 1,
            }
        }
        if self.boxes_per_image.len() <= boxes {
            self.boxes_per_image.resize(boxes + 1, 0);
        }
        self.boxes_per_image[boxes] += 1;
    }

    pub fn merge(&mut self, o: &Self) {
        self.images += o.images;
        self.instances += o.instances;
        self.instances_with_keypoints += o.instances_with_keypoints;
        if self.boxes_per_image.len() < o.boxes_per_image.len() {
            self.boxes_per_image.resize(o.boxes_per_image.len(), 0);
        }
        self.boxes_per_image.iter_mut().zip(&o.boxes_per_image).for_each(|(a, b)| *a += b);
        self.relative_size.merge(&o.relative_size);
        self.relative_size_sum_nano += o.relative_size_sum_nano;
        self.keypoints_per_bbox.iter_mut().zip(o.keypoints_per_bbox).for_each(|(a, b)| *a += b);
        self.keypoint_annotated.iter_mut().zip(o.keypoint_annotated).for_each(|(a, b)| *a += b);
        self.keypoint_visible.iter_mut().zip(o.keypoint_visible).for_each(|(a, b)| *a += b);
        self.heatmaps.iter_mut().zip(&o.heatmaps).for_each(|(a, b)| a.merge(b));
        self.occupancy.merge(&o.occupancy);
        self.skipped.merge(&o.skipped);
    }

    /// Per keypoint, labeled count over person instances.
    pub fn fraction_per_keypoint(&self) -> [f64; NUM_KEYPOINTS] {
        self.keypoint_annotated.map(|c| if self.instances == 0 { 0.0 } else { c as f64 / self.instances as f64 })
    }

    pub fn mean_boxes_per_image(&self) -> f64 {
        ratio(self.instances, self.images)
    }

    pub fn mean_relative_size(&self) -> f64 {
        let sized = self.instances - self.skipped.zero_area_boxes;
        ratio(self.relative_size_sum_nano, sized) * 1e-9
    }

    pub fn mean_keypoints_per_bbox(&self) -> f64 {
        let total: u64 = self.keypoints_per_bbox.iter().enumerate().map(|(n, c)| n as u64 * c).sum();
        ratio(total, self.instances)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}
