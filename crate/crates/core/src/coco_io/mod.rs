//! COCO keypoint JSON and RLE masks.
//!
//! The writer is strict and byte-deterministic: fields are emitted in
//! declaration order and pixel coordinates are rounded to 6 fractional
//! digits. The reader is tolerant of real COCO files: unknown fields are
//! ignored, compressed RLE strings are decoded and polygon segmentations are
//! dropped or rasterized depending on [`ReadOptions`].
//!
//! On-disk layout written by the generator:
//!
//! ```text
//! <out>/annotations.json
//! <out>/images/{frame:08}.png      (optional)
//! <out>/masks/{frame:08}.pgm       (optional, 16-bit instance ids)
//! <out>/masks/{frame:08}_semantic.pgm
//! ```

mod rle;

use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use rle::{rle_decode, rle_encode, Bitmap, RleMask};
pub(crate) use rle::RunBuilder;

use crate::humanoid::{COCO_KEYPOINTS, COCO_SKELETON, NUM_KEYPOINTS};

pub const PERSON_CATEGORY_ID: u32 = 1;
pub const OCCLUDER_CATEGORY_ID: u32 = 2;
/// Length of a COCO keypoint list: 17 `(x, y, v)` triplets.
pub const KEYPOINT_VALUES: usize = 3 * NUM_KEYPOINTS;

#[derive(Debug, thiserror::Error)]
pub enum CocoError {
    #[error("COCO parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("invalid COCO dataset: {0}")]
    Invalid(String),
    #[error("RLE: {0}")]
    Rle(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CocoInfo {
    pub description: String,
    pub url: String,
    pub version: String,
    pub year: u32,
    pub contributor: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CocoLicense {
    pub id: u32,
    pub name: String,
    pub url: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocoImage {
    pub id: u64,
    pub width: u32,
    pub height: u32,
    pub file_name: String,
}

/// Oriented 3D box in world coordinates (m).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bbox3d {
    pub center: [f64; 3],
    /// Full edge lengths along the box's local axes.
    pub extent: [f64; 3],
    /// Unit quaternion `[w, x, y, z]`.
    pub rotation: [f64; 4],
    pub corners: [[f64; 3]; 8],
}

#[derive(Clone, Debug, PartialEq)]
pub enum Segmentation {
    Rle(RleMask),
    Polygon(Vec<Vec<f64>>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawSegmentation {
    Rle { size: [u32; 2], counts: Vec<u32> },
    Compressed { size: [u32; 2], counts: String },
    Polygon(Vec<Vec<f64>>),
}

impl Serialize for Segmentation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Segmentation::Rle(r) => r.serialize(s),
            Segmentation::Polygon(p) => p.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Segmentation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match RawSegmentation::deserialize(d)? {
            RawSegmentation::Rle { size, counts } => Ok(Segmentation::Rle(RleMask { size, counts })),
            RawSegmentation::Compressed { size, counts } => {
                RleMask::from_compressed(size, &counts).map(Segmentation::Rle).map_err(serde::de::Error::custom)
            }
            RawSegmentation::Polygon(p) => Ok(Segmentation::Polygon(p)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocoAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segmentation: Option<Segmentation>,
    pub area: f64,
    /// `[x, y, w, h]` in pixels.
    pub bbox: [f64; 4],
    #[serde(default)]
    pub iscrowd: u8,
    /// 17 flattened `(x, y, v)` triplets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keypoints: Option<Vec<f64>>,
    #[serde(default)]
    pub num_keypoints: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox3d: Option<Bbox3d>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocoCategory {
    pub id: u32,
    pub name: String,
    #[serde(default)]
    pub supercategory: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub keypoints: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skeleton: Vec<[u32; 2]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CocoDataset {
    #[serde(default)]
    pub info: CocoInfo,
    #[serde(default)]
    pub licenses: Vec<CocoLicense>,
    pub images: Vec<CocoImage>,
    pub annotations: Vec<CocoAnnotation>,
    pub categories: Vec<CocoCategory>,
}

pub fn person_category() -> CocoCategory {
    CocoCategory {
        id: PERSON_CATEGORY_ID,
        name: "person".into(),
        supercategory: "person".into(),
        keypoints: COCO_KEYPOINTS.iter().map(|s| (*s).to_owned()).collect(),
        skeleton: COCO_SKELETON.to_vec(),
    }
}

pub fn occluder_category() -> CocoCategory {
    CocoCategory {
        id: OCCLUDER_CATEGORY_ID,
        name: "occluder".into(),
        supercategory: "object".into(),
        keypoints: Vec::new(),
        skeleton: Vec::new(),
    }
}

/// What to do with polygon segmentations in foreign files.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PolygonMode {
    #[default]
    Skip,
    /// Rasterize at pixel centers (even-odd rule) and store as RLE.
    Convert,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReadOptions {
    pub polygons: PolygonMode,
}

impl CocoDataset {
    pub fn image(&self, id: u64) -> Option<&CocoImage> {
        self.images.iter().find(|i| i.id == id)
    }

    /// Checks the invariants the writer guarantees.
    pub fn validate(&self) -> Result<(), CocoError> {
        self.check_references()?;
        let images: std::collections::HashMap<u64, &CocoImage> = self.images.iter().map(|i| (i.id, i)).collect();
        for a in &self.annotations {
            let err = |m: String| Err(CocoError::Invalid(format!("annotation {}: {m}", a.id)));
            if a.iscrowd != 0 {
                return err(format!("iscrowd is {}, only 0 is written", a.iscrowd));
            }
            if !a.bbox.iter().all(|v| v.is_finite()) || a.bbox[2] < 0.0 || a.bbox[3] < 0.0 {
                return err(format!("bad bbox {:?}", a.bbox));
            }
            if !(a.area.is_finite() && a.area >= 0.0) {
                return err(format!("bad area {}", a.area));
            }
            match &a.keypoints {
                Some(k) => {
                    check_keypoint_len(a.id, k)?;
                    if k.iter().any(|v| !v.is_finite()) {
                        return err("non-finite keypoint".into());
                    }
                    let labeled = k.chunks(3).filter(|t| t[2] > 0.0).count() as u32;
                    if labeled != a.num_keypoints {
                        return err(format!("num_keypoints {} but {labeled} labeled triplets", a.num_keypoints));
                    }
                    if k.chunks(3).any(|t| t[2] == 0.0 && (t[0] != 0.0 || t[1] != 0.0)) {
                        return err("unlabeled keypoint with nonzero coordinates".into());
                    }
                }
                None if a.num_keypoints != 0 => return err("num_keypoints without keypoints".into()),
                None => {}
            }
            if let Some(Segmentation::Rle(r)) = &a.segmentation {
                r.check()?;
                let img = images[&a.image_id];
                if r.size != [img.height, img.width] {
                    return err(format!("mask size {:?} differs from image {}x{}", r.size, img.height, img.width));
                }
            }
        }
        Ok(())
    }

    fn check_references(&self) -> Result<(), CocoError> {
        let mut ids = HashSet::new();
        for i in &self.images {
            if !ids.insert(i.id) {
                return Err(CocoError::Invalid(format!("duplicate image id {}", i.id)));
            }
        }
        let cats: HashSet<u32> = self.categories.iter().map(|c| c.id).collect();
        let mut ann_ids = HashSet::new();
        for a in &self.annotations {
            if !ann_ids.insert(a.id) {
                return Err(CocoError::Invalid(format!("duplicate annotation id {}", a.id)));
            }
            if !ids.contains(&a.image_id) {
                return Err(CocoError::Invalid(format!("annotation {}: unknown image_id {}", a.id, a.image_id)));
            }
            if !cats.contains(&a.category_id) {
                return Err(CocoError::Invalid(format!(
                    "annotation {}: unknown category_id {}",
                    a.id, a.category_id
                )));
            }
        }
        Ok(())
    }
}

fn check_keypoint_len(id: u64, k: &[f64]) -> Result<(), CocoError> {
    if k.len() != KEYPOINT_VALUES {
        return Err(CocoError::Invalid(format!(
            "annotation {id}: keypoints has {} values, expected {KEYPOINT_VALUES}",
            k.len()
        )));
    }
    Ok(())
}

/// Rounds to 6 fractional digits; `-0` becomes `0`.
pub fn round6(v: f64) -> f64 {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Serializes after validation. Identical datasets give identical bytes.
pub fn write_coco(dataset: &CocoDataset) -> Result<Vec<u8>, CocoError> {
    dataset.validate()?;
    let mut d = dataset.clone();
    for a in &mut d.annotations {
        a.bbox = a.bbox.map(round6);
        if let Some(k) = &mut a.keypoints {
            k.iter_mut().for_each(|v| *v = round6(*v));
        }
        if let Some(b) = &mut a.bbox3d {
            b.center = b.center.map(round6);
            b.extent = b.extent.map(round6);
            b.rotation = b.rotation.map(round6);
            for c in &mut b.corners {
                *c = c.map(round6);
            }
        }
        if let Some(Segmentation::Polygon(p)) = &mut a.segmentation {
            p.iter_mut().flatten().for_each(|v| *v = round6(*v));
        }
    }
    serde_json::to_vec(&d).map_err(|e| CocoError::Invalid(e.to_string()))
}

pub fn read_coco(bytes: &[u8], options: &ReadOptions) -> Result<CocoDataset, CocoError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let mut d: CocoDataset = serde_path_to_error::deserialize(de)
        .map_err(|e| CocoError::Parse { path: e.path().to_string(), message: e.inner().to_string() })?;
    d.check_references()?;
    for a in &d.annotations {
        if let Some(k) = &a.keypoints {
            check_keypoint_len(a.id, k)?;
        }
    }
    let sizes: std::collections::HashMap<u64, (u32, u32)> =
        d.images.iter().map(|i| (i.id, (i.width, i.height))).collect();
    for a in &mut d.annotations {
        if let Some(Segmentation::Polygon(p)) = &a.segmentation {
            a.segmentation = match options.polygons {
                PolygonMode::Skip => None,
                PolygonMode::Convert => {
                    let (w, h) = sizes[&a.image_id];
                    Some(Segmentation::Rle(rle_encode(&rasterize_polygons(p, w, h))))
                }
            };
        }
    }
    Ok(d)
}

pub fn read_coco_file(path: &std::path::Path, options: &ReadOptions) -> Result<CocoDataset, CocoError> {
    let bytes = std::fs::read(path).map_err(|source| CocoError::Io { path: path.to_owned(), source })?;
    read_coco(&bytes, options)
}

/// Even-odd fill of flat `[x0, y0, x1, y1, ...]` polygons, sampled at pixel centers.
pub fn rasterize_polygons(polygons: &[Vec<f64>], width: u32, height: u32) -> Bitmap {
    let mut m = Bitmap::new(width, height);
    for y in 0..height {
        let yc = y as f64 + 0.5;
        let mut xs: Vec<f64> = Vec::new();
        for poly in polygons {
            let n = poly.len() / 2;
            for i in 0..n {
                let (x0, y0) = (poly[2 * i], poly[2 * i + 1]);
                let j = (i + 1) % n;
                let (x1, y1) = (poly[2 * j], poly[2 * j + 1]);
                if (y0 <= yc) != (y1 <= yc) {
                    xs.push(x0 + (yc - y0) / (y1 - y0) * (x1 - x0));
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let start = (pair[0] - 0.5).ceil().max(0.0) as u32;
            let end = (pair[1] - 0.5).ceil().min(width as f64).max(0.0) as u32;
            for x in start..end {
                m.set(x, y, true);
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CocoDataset {
        let mut mask = Bitmap::new(4, 3);
        mask.set(1, 1, true);
        mask.set(2, 1, true);
        let mut kp = vec![0.0; KEYPOINT_VALUES];
        kp[0] = 1.25;
        kp[1] = 1.5;
        kp[2] = 2.0;
        CocoDataset {
            info: CocoInfo { description: "t".into(), ..Default::default() },
            licenses: vec![],
            images: vec![CocoImage { id: 0, width: 4, height: 3, file_name: "00000000.png".into() }],
            annotations: vec![CocoAnnotation {
                id: 1,
                image_id: 0,
                category_id: 1,
                segmentation: Some(Segmentation::Rle(rle_encode(&mask))),
                area: 2.0,
                bbox: [1.0, 1.0, 2.0, 1.0],
                iscrowd: 0,
                keypoints: Some(kp),
                num_keypoints: 1,
                bbox3d: None,
            }],
            categories: vec![person_category()],
        }
    }

    #[test]
    fn empty_dataset_is_valid_json() {
        let bytes = write_coco(&CocoDataset::default()).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(v["images"], serde_json::json!([]));
        assert_eq!(v["annotations"], serde_json::json!([]));
    }

    #[test]
    fn roundtrip_and_determinism() {
        let d = sample();
        let a = write_coco(&d).unwrap();
        let b = write_coco(&d.clone()).unwrap();
        assert_eq!(a, b);
        let back = read_coco(&a, &ReadOptions::default()).unwrap();
        assert_eq!(back, d);
        assert_eq!(write_coco(&back).unwrap(), a);
    }

    #[test]
    fn coordinates_are_rounded() {
        let mut d = sample();
        d.annotations[0].keypoints.as_mut().unwrap()[0] = 1.0 / 3.0;
        let text = String::from_utf8(write_coco(&d).unwrap()).unwrap();
        assert!(text.contains("0.333333,"), "{text}");
        assert_eq!(round6(-1e-9), 0.0);
        assert!(round6(-1e-9).is_sign_positive());
    }

    #[test]
    fn short_keypoints_name_the_annotation() {
        let mut v: serde_json::Value = serde_json::from_slice(&write_coco(&sample()).unwrap()).unwrap();
        v["annotations"][0]["id"] = 77.into();
        v["annotations"][0]["keypoints"] = serde_json::json!(vec![0.0; 48]);
        let err = read_coco(v.to_string().as_bytes(), &ReadOptions::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("annotation 77") && msg.contains("48"), "{msg}");
    }

    #[test]
    fn missing_field_reports_path() {
        let text = r#"{"images":[{"id":1,"width":4,"file_name":"a"}],"annotations":[],"categories":[]}"#;
        match read_coco(text.as_bytes(), &ReadOptions::default()).unwrap_err() {
            CocoError::Parse { path, message } => {
                assert_eq!(path, "images[0]");
                assert!(message.contains("height"), "{message}");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn writer_refuses_inconsistent_annotations() {
        let mut d = sample();
        d.annotations[0].num_keypoints = 3;
        assert!(matches!(write_coco(&d), Err(CocoError::Invalid(_))));
        let mut d = sample();
        d.annotations[0].iscrowd = 1;
        assert!(write_coco(&d).is_err());
        let mut d = sample();
        d.annotations[0].image_id = 9;
        assert!(write_coco(&d).is_err());
    }

    /// Shaped like the public COCO person-keypoints validation file.
    const COCO_FIXTURE: &str = r#"{
      "info": {"description": "COCO 2017 Dataset", "url": "http://cocodataset.org", "version": "1.0",
               "year": 2017, "contributor": "COCO Consortium", "date_created": "2017/09/01"},
      "licenses": [{"url": "http://creativecommons.org/licenses/by-nc-sa/2.0/", "id": 1, "name": "Attribution-NonCommercial-ShareAlike License"}],
      "images": [{"license": 4, "file_name": "000000397133.jpg", "coco_url": "http://images.cocodataset.org/val2017/000000397133.jpg",
                  "height": 427, "width": 640, "date_captured": "2013-11-14 17:02:52", "flickr_url": "http://farm7.staticflickr.com/6116/6255196340_da26cf2c9e_z.jpg", "id": 397133}],
      "annotations": [
        {"segmentation": [[125.12, 539.69, 140.94, 522.43, 100.67, 496.54, 84.85, 469.21, 73.35, 450.52, 104.99, 342.65, 168.27, 290.88, 217.16, 217.06, 268.93, 189.73, 315.35, 127.0, 332.8, 125.0, 340.0, 130.0, 340.0, 400.0]],
         "num_keypoints": 10, "area": 47803.27955, "iscrowd": 0,
         "keypoints": [0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,142,309,1,177,320,2,191,398,2,237,317,2,233,426,2,306,233,2,92,452,2,123,468,2,0,0,0,251,469,2,0,0,0,162,551,2],
         "image_id": 397133, "bbox": [73.35, 125.0, 266.65, 414.69], "category_id": 1, "id": 200887},
        {"segmentation": {"counts": "0`0", "size": [4, 4]}, "num_keypoints": 0, "area": 16, "iscrowd": 1,
         "keypoints": [0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0],
         "image_id": 397133, "bbox": [0, 0, 4, 4], "category_id": 1, "id": 900100397133}
      ],
      "categories": [{"supercategory": "person", "id": 1, "name": "person",
        "keypoints": ["nose","left_eye","right_eye","left_ear","right_ear","left_shoulder","right_shoulder","left_elbow","right_elbow","left_wrist","right_wrist","left_hip","right_hip","left_knee","right_knee","left_ankle","right_ankle"],
        "skeleton": [[16,14],[14,12],[17,15],[15,13],[12,13],[6,12],[7,13],[6,7],[6,8],[7,9],[8,10],[9,11],[2,3],[1,2],[1,3],[2,4],[3,5],[4,6],[5,7]]}]
    }"#;

    #[test]
    fn reads_real_coco_shape() {
        let d = read_coco(COCO_FIXTURE.as_bytes(), &ReadOptions::default()).unwrap();
        assert_eq!(d.images[0].width, 640);
        assert_eq!(d.annotations.len(), 2);
        assert_eq!(d.annotations[0].segmentation, None);
        assert_eq!(d.annotations[1].iscrowd, 1);
        assert_eq!(d.annotations[1].segmentation, Some(Segmentation::Rle(RleMask { size: [4, 4], counts: vec![0, 16] })));
        assert_eq!(d.categories[0], person_category());

        let conv = read_coco(COCO_FIXTURE.as_bytes(), &ReadOptions { polygons: PolygonMode::Convert }).unwrap();
        let Some(Segmentation::Rle(r)) = &conv.annotations[0].segmentation else { panic!() };
        assert_eq!(r.size, [427, 640]);
        // Rasterized polygon area lands close to the annotated area.
        let area = r.area() as f64;
        assert!(area > 0.0 && (area / 47803.28 - 1.0).abs() < 0.3, "{area}");
    }

    #[test]
    fn polygon_fill_of_a_square() {
        let m = rasterize_polygons(&[vec![1.0, 1.0, 3.0, 1.0, 3.0, 3.0, 1.0, 3.0]], 5, 5);
        assert_eq!(m.count_ones(), 4);
        assert_eq!(m.bounds(), Some([1, 1, 2, 2]));
    }
}
