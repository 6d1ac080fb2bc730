//! Report files.
//!
//! `stats` writes into its output directory:
//!
//! | file | columns / format |
//! |---|---|
//! | `boxes_per_image.csv` | `boxes,images,fraction` |
//! | `relative_bbox_size.csv` | `bin_start,bin_end,count,fraction` |
//! | `keypoints_per_bbox.csv` | `keypoints,instances,fraction` |
//! | `fraction_per_keypoint.csv` | `keypoint,annotated,visible,fraction` |
//! | `bbox_occupancy.pgm` | 640x640 16-bit PGM, counts scaled so the max is 65535 |
//! | `heatmaps/<keypoint>.csv` | one row per grid row (smallest `y` first), raw counts |
//! | `heatmaps/<keypoint>.pgm` | same grid as 16-bit PGM, scaled to the max |
//! | `summary.json` | [`StatsSummary`] |
//!
//! `compare` writes paired CSVs (`a` and `b` fraction columns, each
//! normalized by its own dataset) and `comparison.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{DatasetStats, Heatmap, SkipReport};
use crate::humanoid::{COCO_KEYPOINTS, NUM_KEYPOINTS};
use crate::label::encode_pgm16;

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct ReportError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError { path: path.to_owned(), source }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatsSummary {
    pub images: u64,
    pub instances: u64,
    pub instances_with_keypoints: u64,
    pub mean_boxes_per_image: f64,
    pub mean_relative_size: f64,
    pub mean_keypoints_per_bbox: f64,
    /// Instances that entered the keypoint heatmaps.
    pub aligned_instances: u64,
    pub fraction_per_keypoint: Vec<(String, f64)>,
    pub skipped: SkipReport,
}

impl StatsSummary {
    pub fn of(s: &DatasetStats) -> Self {
        Self {
            images: s.images,
            instances: s.instances,
            instances_with_keypoints: s.instances_with_keypoints,
            mean_boxes_per_image: s.mean_boxes_per_image(),
            mean_relative_size: s.mean_relative_size(),
            mean_keypoints_per_bbox: s.mean_keypoints_per_bbox(),
            aligned_instances: s.heatmaps.first().map_or(0, |h| h.normalization),
            fraction_per_keypoint: COCO_KEYPOINTS
                .iter()
                .zip(s.fraction_per_keypoint())
                .map(|(n, f)| ((*n).to_owned(), f))
                .collect(),
            skipped: s.skipped,
        }
    }
}

fn frac(a: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        a as f64 / total as f64
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), ReportError> {
    let to_io = |e: csv::Error| std::io::Error::other(e);
    let mut w = csv::Writer::from_path(path).map_err(to_io).map_err(io_err(path))?;
    w.write_record(header).map_err(to_io).map_err(io_err(path))?;
    for r in rows {
        w.write_record(&r).map_err(to_io).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn scaled_pgm(h: &Heatmap) -> Vec<u8> {
    let max = h.bins.iter().copied().max().unwrap_or(0).max(1);
    let vals = h.bins.iter().map(|&b| ((b as f64 / max as f64) * 65535.0).round() as u16);
    encode_pgm16(vals, h.width as u32, h.height as u32)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    fs::write(path, bytes).map_err(io_err(path))
}

/// Writes every report file into `out` (created if needed).
pub fn write_report(stats: &DatasetStats, out: &Path) -> Result<StatsSummary, ReportError> {
    fs::create_dir_all(out.join("heatmaps")).map_err(io_err(out))?;
    let s = stats;
    write_csv(
        &out.join("boxes_per_image.csv"),
        &["boxes", "images", "fraction"],
        s.boxes_per_image.iter().enumerate().map(|(n, &c)| vec![n.to_string(), c.to_string(), frac(c, s.images).to_string()]),
    )?;
    let sized: u64 = s.relative_size.counts.iter().sum();
    write_csv(
        &out.join("relative_bbox_size.csv"),
        &["bin_start", "bin_end", "count", "fraction"],
        s.relative_size.counts.iter().enumerate().map(|(i, &c)| {
            let (a, b) = s.relative_size.bin_edges(i);
            vec![a.to_string(), b.to_string(), c.to_string(), frac(c, sized).to_string()]
        }),
    )?;
    write_csv(
        &out.join("keypoints_per_bbox.csv"),
        &["keypoints", "instances", "fraction"],
        s.keypoints_per_bbox.iter().enumerate().map(|(n, &c)| vec![n.to_string(), c.to_string(), frac(c, s.instances).to_string()]),
    )?;
    write_csv(
        &out.join("fraction_per_keypoint.csv"),
        &["keypoint", "annotated", "visible", "fraction"],
        (0..NUM_KEYPOINTS).map(|k| {
            vec![
                COCO_KEYPOINTS[k].to_owned(),
                s.keypoint_annotated[k].to_string(),
                s.keypoint_visible[k].to_string(),
                frac(s.keypoint_annotated[k], s.instances).to_string(),
            ]
        }),
    )?;
    write_bytes(&out.join("bbox_occupancy.pgm"), &scaled_pgm(&s.occupancy.finish()))?;
    for (name, h) in COCO_KEYPOINTS.iter().zip(&s.heatmaps) {
        let header: Vec<String> = (0..h.width).map(|c| format!("c{c}")).collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        write_csv(
            &out.join("heatmaps").join(format!("{name}.csv")),
            &header,
            h.bins.chunks(h.width).map(|row| row.iter().map(u64::to_string).collect()),
        )?;
        write_bytes(&out.join("heatmaps").join(format!("{name}.pgm")), &scaled_pgm(h))?;
    }
    let summary = StatsSummary::of(s);
    let json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    write_bytes(&out.join("summary.json"), &json)?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonSummary {
    pub a: StatsSummary,
    pub b: StatsSummary,
    /// `b - a`.
    pub delta_mean_boxes_per_image: f64,
    pub delta_mean_relative_size: f64,
    pub delta_mean_keypoints_per_bbox: f64,
    pub delta_fraction_per_keypoint: Vec<(String, f64)>,
    /// Per keypoint, L1 distance between the normalized heatmaps.
    pub heatmap_l1: Vec<(String, f64)>,
    /// L1 distance between the normalized occupancy grids.
    pub occupancy_l1: f64,
}

fn l1(a: &Heatmap, b: &Heatmap) -> f64 {
    a.normalized().iter().zip(b.normalized()).map(|(x, y)| (x - y).abs()).sum()
}

/// Writes paired reports for two datasets and returns the scalar deltas.
pub fn compare(a: &DatasetStats, b: &DatasetStats, out: &Path) -> Result<ComparisonSummary, ReportError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let n = a.boxes_per_image.len().max(b.boxes_per_image.len());
    let at = |v: &[u64], i: usize| v.get(i).copied().unwrap_or(0);
    write_csv(
        &out.join("boxes_per_image.csv"),
        &["boxes", "a", "b"],
        (0..n).map(|i| {
            vec![
                i.to_string(),
                frac(at(&a.boxes_per_image, i), a.images).to_string(),
                frac(at(&b.boxes_per_image, i), b.images).to_string(),
            ]
        }),
    )?;
    let (sa, sb) = (a.relative_size.counts.iter().sum(), b.relative_size.counts.iter().sum());
    write_csv(
        &out.join("relative_bbox_size.csv"),
        &["bin_start", "bin_end", "a", "b"],
        (0..a.relative_size.counts.len()).map(|i| {
            let (lo, hi) = a.relative_size.bin_edges(i);
            vec![
                lo.to_string(),
                hi.to_string(),
                frac(a.relative_size.counts[i], sa).to_string(),
                frac(b.relative_size.counts[i], sb).to_string(),
            ]
        }),
    )?;
    write_csv(
        &out.join("keypoints_per_bbox.csv"),
        &["keypoints", "a", "b"],
        (0..=NUM_KEYPOINTS).map(|i| {
            vec![
                i.to_string(),
                frac(a.keypoints_per_bbox[i], a.instances).to_string(),
                frac(b.keypoints_per_bbox[i], b.instances).to_string(),
            ]
        }),
    )?;
    let (fa, fb) = (a.fraction_per_keypoint(), b.fraction_per_keypoint());
    write_csv(
        &out.join("fraction_per_keypoint.csv"),
        &["keypoint", "a", "b"],
        (0..NUM_KEYPOINTS).map(|k| vec![COCO_KEYPOINTS[k].to_owned(), fa[k].to_string(), fb[k].to_string()]),
    )?;
    let (pa, pb) = (StatsSummary::of(a), StatsSummary::of(b));
    let named = |f: &dyn Fn(usize) -> f64| COCO_KEYPOINTS.iter().enumerate().map(|(k, n)| ((*n).to_owned(), f(k))).collect();
    let summary = ComparisonSummary {
        delta_mean_boxes_per_image: pb.mean_boxes_per_image - pa.mean_boxes_per_image,
        delta_mean_relative_size: pb.mean_relative_size - pa.mean_relative_size,
        delta_mean_keypoints_per_bbox: pb.mean_keypoints_per_bbox - pa.mean_keypoints_per_bbox,
        delta_fraction_per_keypoint: named(&|k| fb[k] - fa[k]),
        heatmap_l1: named(&|k| l1(&a.heatmaps[k], &b.heatmaps[k])),
        occupancy_l1: l1(&a.occupancy.finish(), &b.occupancy.finish()),
        a: pa,
        b: pb,
    };
    let json = serde_json::to_vec_pretty(&summary).expect("comparison serializes");
    write_bytes(&out.join("comparison.json"), &json)?;
    Ok(summary)
}
