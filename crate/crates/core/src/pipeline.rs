//! Frame-parallel dataset generation.
//!
//! Frames are rendered by a rayon pool in fixed-size batches; each batch is
//! collected in frame order, so the merged dataset does not depend on the
//! worker count. Annotation ids are assigned after the merge.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::coco_io::{
    occluder_category, person_category, write_coco, CocoAnnotation, CocoDataset, CocoError, CocoImage, CocoInfo,
    Segmentation,
};
use crate::config::{ConfigError, ScenarioConfig};
use crate::label::{
    annotate_frame, encode_pgm16, encode_png, post_process, rasterize_with, AnnotationRecord, Category, LabelOptions,
    RenderOptions,
};
use crate::scene::SceneBuilder;

const BATCH: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Coco(#[from] CocoError),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_owned(), source }
}

/// Counts over a generated dataset. Contains nothing time- or host-dependent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GenerationSummary {
    pub seed: u64,
    pub frames: u64,
    pub humans_placed: u64,
    pub person_annotations: u64,
    pub occluder_annotations: u64,
    /// Person keypoints by state 0, 1, 2.
    pub keypoint_states: [u64; 3],
}

/// One rendered frame: its annotations and optional encoded images.
#[derive(Clone, Debug)]
pub struct FrameOutput {
    pub frame: u64,
    pub humans: usize,
    pub records: Vec<AnnotationRecord>,
    pub png: Option<Vec<u8>>,
    /// Instance and semantic id PGMs.
    pub masks: Option<(Vec<u8>, Vec<u8>)>,
}

pub fn frame_file_stem(frame: u64) -> String {
    format!("{frame:08}")
}

/// Builds, renders and annotates one frame.
pub fn render_frame(builder: &SceneBuilder, seed: u64, frame: u64) -> FrameOutput {
    let out = &builder.config().output;
    let scene = builder.build_frame(seed, frame);
    let mut buffers = rasterize_with(&scene, &RenderOptions { shade: out.emit_rgb });
    let options =
        LabelOptions { scheme: out.scheme, self_occlusion: out.self_occlusion, annotate_occluders: out.annotate_occluders };
    let records = annotate_frame(&scene, &buffers, &options);
    let (w, h) = (buffers.width, buffers.height);
    let png = buffers.rgb.as_mut().map(|rgb| {
        if out.post_process {
            post_process(rgb, w, h, &scene.post);
        }
        encode_png(rgb, w, h)
    });
    let masks = out.emit_masks.then(|| {
        (
            encode_pgm16(buffers.instance_id.iter().copied(), w, h),
            encode_pgm16(buffers.semantic_id.iter().map(|&s| s as u16), w, h),
        )
    });
    FrameOutput { frame, humans: scene.humans.len(), records, png, masks }
}

/// Renders frames `0..frame_count` on `workers` threads and returns them in
/// frame order. `sink` sees every frame, in order, as batches complete.
pub fn generate_frames(
    builder: &SceneBuilder,
    workers: usize,
    mut sink: impl FnMut(FrameOutput) -> Result<(), PipelineError>,
) -> Result<(), PipelineError> {
    let cfg = builder.config();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    let frames: Vec<u64> = (0..cfg.frame_count as u64).collect();
    for batch in frames.chunks(BATCH) {
        let outputs: Vec<FrameOutput> =
            pool.install(|| batch.par_iter().map(|&f| render_frame(builder, cfg.seed, f)).collect());
        for o in outputs {
            sink(o)?;
        }
    }
    Ok(())
}

fn record_to_coco(r: &AnnotationRecord, id: u64, image_id: u64, segmentation: bool) -> CocoAnnotation {
    CocoAnnotation {
        id,
        image_id,
        category_id: r.category.coco_id(),
        segmentation: segmentation.then(|| Segmentation::Rle(r.mask.clone())),
        area: r.area as f64,
        bbox: r.bbox.map(f64::from),
        iscrowd: 0,
        keypoints: Some(r.keypoint_values()),
        num_keypoints: r.num_keypoints,
        bbox3d: Some(r.bbox3d.clone()),
    }
}

/// Empty dataset with the image list and categories for a config.
pub fn dataset_skeleton(cfg: &ScenarioConfig) -> CocoDataset {
    let mut categories = vec![person_category()];
    if cfg.output.annotate_occluders {
        categories.push(occluder_category());
    }
    CocoDataset {
        info: CocoInfo {
            description: "synthpose synthetic dataset".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            ..Default::default()
        },
        licenses: Vec::new(),
        images: Vec::new(),
        annotations: Vec::new(),
        categories,
    }
}

/// Generates the whole dataset in memory, writing per-frame image files
/// under `out_dir` when given.
pub fn generate(
    builder: &SceneBuilder,
    workers: usize,
    out_dir: Option<&Path>,
) -> Result<(CocoDataset, GenerationSummary), PipelineError> {
    let cfg = builder.config();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        if cfg.output.emit_rgb {
            let p = dir.join("images");
            fs::create_dir_all(&p).map_err(io_err(&p))?;
        }
        if cfg.output.emit_masks {
            let p = dir.join("masks");
            fs::create_dir_all(&p).map_err(io_err(&p))?;
        }
    }
    let mut dataset = dataset_skeleton(cfg);
    let mut summary = GenerationSummary { seed: cfg.seed, ..Default::default() };
    let mut next_id = 1u64;
    generate_frames(builder, workers, |o| {
        let stem = frame_file_stem(o.frame);
        if let Some(dir) = out_dir {
            if let Some(png) = &o.png {
                let p = dir.join("images").join(format!("{stem}.png"));
                fs::write(&p, png).map_err(io_err(&p))?;
            }
            if let Some((inst, sem)) = &o.masks {
                let p = dir.join("masks").join(format!("{stem}.pgm"));
                fs::write(&p, inst).map_err(io_err(&p))?;
                let p = dir.join("masks").join(format!("{stem}_semantic.pgm"));
                fs::write(&p, sem).map_err(io_err(&p))?;
            }
        }
        dataset.images.push(CocoImage {
            id: o.frame,
            width: cfg.image_width,
            height: cfg.image_height,
            file_name: format!("{stem}.png"),
        });
        summary.frames += 1;
        summary.humans_placed += o.humans as u64;
        for r in &o.records {
            match r.category {
                Category::Person => {
                    summary.person_annotations += 1;
                    for k in &r.keypoints {
                        summary.keypoint_states[k.state as usize] += 1;
                    }
                }
                Category::Occluder => summary.occluder_annotations += 1,
            }
            dataset.annotations.push(record_to_coco(r, next_id, o.frame, cfg.output.emit_segmentation));
            next_id += 1;
        }
        Ok(())
    })?;
    Ok((dataset, summary))
}

/// Generates and writes `annotations.json` and `summary.json` into `out_dir`.
pub fn generate_to_dir(
    builder: &SceneBuilder,
    workers: usize,
    out_dir: &Path,
) -> Result<GenerationSummary, PipelineError> {
    let (dataset, summary) = generate(builder, workers, Some(out_dir))?;
    let bytes = write_coco(&dataset)?;
    let p = out_dir.join("annotations.json");
    fs::write(&p, bytes).map_err(io_err(&p))?;
    let p = out_dir.join("summary.json");
    fs::write(&p, serde_json::to_vec_pretty(&summary).expect("summary serializes")).map_err(io_err(&p))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::LabelingScheme;

    fn small(frames: u32) -> ScenarioConfig {
        ScenarioConfig { frame_count: frames, image_width: 160, image_height: 120, seed: 7, ..Default::default() }
    }

    #[test]
    fn worker_count_does_not_change_bytes() {
        let b = SceneBuilder::new(small(12)).unwrap();
        let one = write_coco(&generate(&b, 1, None).unwrap().0).unwrap();
        let three = write_coco(&generate(&b, 3, None).unwrap().0).unwrap();
        assert_eq!(one, three);
        assert_eq!(one, write_coco(&generate(&b, 1, None).unwrap().0).unwrap());
    }

    #[test]
    fn all_objects_annotates_every_human() {
        let mut cfg = small(20);
        cfg.output.scheme = LabelingScheme::AllObjects;
        let b = SceneBuilder::new(cfg).unwrap();
        let (d, s) = generate(&b, 2, None).unwrap();
        assert_eq!(s.person_annotations, s.humans_placed);
        for img in &d.images {
            assert!(d.annotations.iter().any(|a| a.image_id == img.id));
        }
    }

    #[test]
    fn writes_files() {
        let mut cfg = small(3);
        cfg.output.emit_rgb = true;
        cfg.output.emit_masks = true;
        cfg.output.annotate_occluders = true;
        let b = SceneBuilder::new(cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let s = generate_to_dir(&b, 2, dir.path()).unwrap();
        assert_eq!(s.frames, 3);
        for f in ["annotations.json", "summary.json", "images/00000002.png", "masks/00000000.pgm", "masks/00000001_semantic.pgm"] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        let d = crate::coco_io::read_coco_file(&dir.path().join("annotations.json"), &Default::default()).unwrap();
        assert_eq!(d.annotations.len() as u64, s.person_annotations + s.occluder_annotations);
        assert_eq!(d.categories.len(), 2);
    }
}
