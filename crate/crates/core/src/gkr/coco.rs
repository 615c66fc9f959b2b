//! COCO `person_keypoints` ingestion and occlusion-ratio bucketing.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    /// COCO visibility: 0 unlabeled, 1 labeled but occluded, 2 visible.
    pub v: u8,
}

impl Keypoint {
    pub fn labeled(&self) -> bool {
        self.v > 0
    }
}

/// One person instance joined with its image's dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersonAnnotation {
    pub image_id: u64,
    pub annotation_id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    pub keypoints: Vec<Keypoint>,
}

impl PersonAnnotation {
    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn invisible_count(&self) -> usize {
        self.keypoints.iter().filter(|k| !k.labeled()).count()
    }
}

#[derive(Deserialize)]
struct CocoImage {
    id: u64,
    width: u32,
    height: u32,
    #[serde(default)]
    file_name: String,
}

#[derive(Deserialize)]
struct CocoAnnotation {
    #[serde(default)]
    id: u64,
    image_id: u64,
    keypoints: Vec<f64>,
    #[serde(default)]
    num_keypoints: Option<u32>,
}

#[derive(Deserialize)]
struct CocoDoc {
    images: Vec<CocoImage>,
    annotations: Vec<CocoAnnotation>,
}

/// Decode the `images` / `annotations` subset of a COCO keypoint file.
/// `n` is the keypoint count of the active schema.
pub fn parse_annotations(doc: &str, n: usize) -> Result<Vec<PersonAnnotation>> {
    let doc: CocoDoc = serde_json::from_str(doc)?;
    let images: HashMap<u64, &CocoImage> = doc.images.iter().map(|im| (im.id, im)).collect();
    doc.annotations
        .iter()
        .map(|ann| {
            let image = images.get(&ann.image_id).ok_or(Error::DanglingImageId(ann.image_id))?;
            if ann.keypoints.len() != 3 * n {
                return Err(Error::BadKeypointArray {
                    expected: 3 * n,
                    actual: ann.keypoints.len(),
                });
            }
            let keypoints = ann
                .keypoints
                .chunks_exact(3)
                .map(|t| {
                    let v = t[2];
                    if !(v == 0.0 || v == 1.0 || v == 2.0) {
                        return Err(Error::MalformedTable(format!(
                            "annotation {}: visibility {v} not in {{0,1,2}}",
                            ann.id
                        )));
                    }
                    let kp = Keypoint { x: t[0], y: t[1], v: v as u8 };
                    if kp.labeled()
                        && !(kp.x >= 0.0 && kp.y >= 0.0 && kp.x < f64::from(image.width) && kp.y < f64::from(image.height))
                    {
                        return Err(Error::OutOfBounds {
                            x: kp.x,
                            y: kp.y,
                            width: image.width,
                            height: image.height,
                        });
                    }
                    Ok(kp)
                })
                .collect::<Result<Vec<_>>>()?;
            let labeled = keypoints.iter().filter(|k| k.labeled()).count() as u32;
            if let Some(declared) = ann.num_keypoints {
                if declared != labeled {
                    return Err(Error::MalformedTable(format!(
                        "annotation {}: num_keypoints = {declared} but {labeled} are labeled",
                        ann.id
                    )));
                }
            }
            Ok(PersonAnnotation {
                image_id: image.id,
                annotation_id: ann.id,
                file_name: image.file_name.clone(),
                width: image.width,
                height: image.height,
                keypoints,
            })
        })
        .collect()
}

pub const OCCLUSION_BUCKETS: [f64; 4] = [0.0, 0.25, 0.5, 0.75];

/// Bucket lower edge for an occlusion ratio: `[0, .25) → 0`, ...,
/// `[.75, 1] → 0.75`.
pub fn occlusion_bucket(ratio: f64) -> f64 {
    let k = ((ratio * 4.0).floor() as usize).min(3);
    OCCLUSION_BUCKETS[k]
}

/// Per-image occlusion ratio (invisible keypoints over all keypoints of
/// every person in the image) and its bucket, ordered by image id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcclusionRow {
    pub image_id: u64,
    pub ratio: f64,
    pub bucket: f64,
}

pub fn occlusion_stats(people: &[PersonAnnotation]) -> Vec<OcclusionRow> {
    let mut per_image: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    for p in people {
        let e = per_image.entry(p.image_id).or_default();
        e.0 += p.invisible_count();
        e.1 += p.keypoints.len();
    }
    per_image
        .into_iter()
        .map(|(image_id, (invisible, total))| {
            let ratio = if total == 0 { 0.0 } else { invisible as f64 / total as f64 };
            OcclusionRow {
                image_id,
                ratio,
                bucket: occlusion_bucket(ratio),
            }
        })
        .collect()
}
