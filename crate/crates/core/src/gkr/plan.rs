use rand::Rng;
use serde::{Deserialize, Serialize};

use super::coco::PersonAnnotation;
use super::ppm::RgbImage;
use crate::error::{Error, Result};
use crate::grouping::Grouping;
use crate::rect::Rect;
use crate::rng;
use crate::skeleton::KeypointSchema;

/// Erase scale for groups made only of face keypoints.
pub const HEAD_SCALE: f64 = 0.05;
/// Erase scale for every other group.
pub const BODY_SCALE: f64 = 0.15;

const HEAD_KEYPOINTS: &[&str] = &["nose", "l-eye", "r-eye", "l-ear", "r-ear"];

/// Settings for [`plan_gkr`].
///
/// `p` is a *keep* threshold: a group is erased when its uniform draw
/// exceeds `p`, i.e. with probability `1 − p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GkrConfig {
    pub p: f64,
    /// Erase box side as a fraction of the image side, one per group.
    pub scales: Vec<f64>,
    pub seed: u64,
}

impl GkrConfig {
    /// 0.05 for all-head groups and 0.15 otherwise.
    pub fn with_default_scales(grouping: &Grouping, schema: &KeypointSchema, p: f64, seed: u64) -> Self {
        Self::with_scales(grouping, schema, p, seed, HEAD_SCALE, BODY_SCALE)
    }

    /// `head` for groups made only of face keypoints, `body` for the rest.
    pub fn with_scales(grouping: &Grouping, schema: &KeypointSchema, p: f64, seed: u64, head: f64, body: f64) -> Self {
        let scales = grouping
            .groups()
            .iter()
            .map(|g| {
                if g.iter().all(|&i| HEAD_KEYPOINTS.contains(&schema.name(i))) {
                    head
                } else {
                    body
                }
            })
            .collect();
        Self { p, scales, seed }
    }

    pub fn validate(&self, grouping: &Grouping) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Config(format!("p = {} outside [0, 1]", self.p)));
        }
        if self.scales.len() != grouping.g() {
            return Err(Error::Config(format!(
                "{} scales for {} groups",
                self.scales.len(),
                grouping.g()
            )));
        }
        if let Some(s) = self.scales.iter().find(|&&s| !(s > 0.0 && s < 1.0)) {
            return Err(Error::Config(format!("scale {s} outside (0, 1)")));
        }
        Ok(())
    }
}

/// One erased region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Erase {
    /// Source group; absent for the random-erasing baseline.
    pub group: Option<usize>,
    /// Keypoint the box is centred on; absent for the random-erasing baseline.
    pub keypoint: Option<usize>,
    pub rect: Rect,
    pub fill_seed: u64,
}

/// Replayable erase instructions for one person annotation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErasePlan {
    pub image_id: u64,
    pub annotation_id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    /// How box sides were rounded from `W·s`, `H·s`.
    pub rounding: String,
    pub erases: Vec<Erase>,
}

impl ErasePlan {
    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        Ok(serde_json::from_str(line)?)
    }
}

fn check_person(person: &PersonAnnotation, grouping: &Grouping) -> Result<()> {
    if person.keypoints.len() != grouping.n() {
        return Err(Error::SchemaMismatch {
            expected: grouping.n(),
            actual: person.keypoints.len(),
        });
    }
    Ok(())
}

/// Plan group-based keypoint removal for one person.
///
/// For each group in order: draw `u ~ U[0,1)`; if `u > p`, pick one labeled
/// member uniformly and erase a `round(W·s) × round(H·s)` box centred on it.
/// Groups with no labeled member are skipped.
pub fn plan_gkr(person: &PersonAnnotation, grouping: &Grouping, cfg: &GkrConfig) -> Result<ErasePlan> {
    check_person(person, grouping)?;
    cfg.validate(grouping)?;
    let key = [cfg.seed, person.image_id, person.annotation_id];
    let mut r = rng::stream(&[key[0], key[1], key[2], rng::hash_str("gkr")]);
    let (w_img, h_img) = person.dims();
    let mut erases = Vec::new();
    for (h, members) in grouping.groups().iter().enumerate() {
        let u: f64 = r.gen();
        if u <= cfg.p {
            continue;
        }
        let labeled: Vec<usize> = members.iter().copied().filter(|&i| person.keypoints[i].labeled()).collect();
        if labeled.is_empty() {
            continue;
        }
        let j = labeled[r.gen_range(0..labeled.len())];
        let s = cfg.scales[h];
        let bw = ((f64::from(w_img) * s).round() as u32).max(1);
        let bh = ((f64::from(h_img) * s).round() as u32).max(1);
        let kp = person.keypoints[j];
        erases.push(Erase {
            group: Some(h),
            keypoint: Some(j),
            rect: Rect::centered(kp.x, kp.y, bw, bh, (w_img, h_img)),
            fill_seed: rng::mix(&[key[0], key[1], key[2], h as u64]),
        });
    }
    Ok(ErasePlan {
        image_id: person.image_id,
        annotation_id: person.annotation_id,
        file_name: person.file_name.clone(),
        width: w_img,
        height: h_img,
        rounding: "nearest".into(),
        erases,
    })
}

/// Settings for the grouping-agnostic random-erasing comparison planner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomErasingConfig {
    /// Probability of erasing one box.
    pub probability: f64,
    /// Box area as a fraction of the image, uniform in this range.
    pub area: (f64, f64),
    /// Box aspect ratio, log-uniform in this range.
    pub aspect: (f64, f64),
    pub seed: u64,
}

impl Default for RandomErasingConfig {
    fn default() -> Self {
        Self {
            probability: 0.5,
            area: (0.02, 0.4),
            aspect: (0.3, 1.0 / 0.3),
            seed: 0,
        }
    }
}

/// One random box anywhere in the image, ignoring keypoints.
pub fn plan_random_erasing(person: &PersonAnnotation, cfg: &RandomErasingConfig) -> Result<ErasePlan> {
    if !(0.0..=1.0).contains(&cfg.probability) || !(cfg.area.0 > 0.0 && cfg.area.0 <= cfg.area.1 && cfg.area.1 <= 1.0) {
        return Err(Error::Config(format!("invalid random erasing config {cfg:?}")));
    }
    let key = [cfg.seed, person.image_id, person.annotation_id];
    let mut r = rng::stream(&[key[0], key[1], key[2], rng::hash_str("random-erasing")]);
    let (w_img, h_img) = person.dims();
    let mut erases = Vec::new();
    if r.gen::<f64>() < cfg.probability {
        let area = r.gen_range(cfg.area.0..=cfg.area.1) * f64::from(w_img) * f64::from(h_img);
        let aspect = r.gen_range(cfg.aspect.0.ln()..=cfg.aspect.1.ln()).exp();
        let bw = ((area * aspect).sqrt().round() as u32).clamp(1, w_img);
        let bh = ((area / aspect).sqrt().round() as u32).clamp(1, h_img);
        let x0 = r.gen_range(0..=w_img - bw);
        let y0 = r.gen_range(0..=h_img - bh);
        erases.push(Erase {
            group: None,
            keypoint: None,
            rect: Rect { x0, y0, x1: x0 + bw, y1: y0 + bh },
            fill_seed: rng::mix(&[key[0], key[1], key[2], u64::MAX]),
        });
    }
    Ok(ErasePlan {
        image_id: person.image_id,
        annotation_id: person.annotation_id,
        file_name: person.file_name.clone(),
        width: w_img,
        height: h_img,
        rounding: "nearest".into(),
        erases,
    })
}

/// Fill every plan rectangle with uniform noise; all other bytes are copied.
pub fn apply_plan(image: &RgbImage, plan: &ErasePlan) -> Result<RgbImage> {
    if image.dims() != (plan.width, plan.height) {
        return Err(Error::DimensionMismatch(format!(
            "image is {}x{}, plan expects {}x{}",
            image.width(),
            image.height(),
            plan.width,
            plan.height
        )));
    }
    let mut out = image.clone();
    for e in &plan.erases {
        if !e.rect.within(image.dims()) {
            return Err(Error::DimensionMismatch(format!("rectangle {:?} leaves the image", e.rect)));
        }
        let mut r = rng::stream(&[e.fill_seed]);
        for y in e.rect.y0..e.rect.y1 {
            for x in e.rect.x0..e.rect.x1 {
                r.fill(out.pixel_mut(x, y));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gkr::coco::Keypoint;

    fn person(n: usize, w: u32, h: u32, v: u8) -> PersonAnnotation {
        PersonAnnotation {
            image_id: 1,
            annotation_id: 2,
            file_name: "img.ppm".into(),
            width: w,
            height: h,
            keypoints: (0..n)
                .map(|i| Keypoint {
                    x: (10 + 7 * i) as f64 % f64::from(w),
                    y: (20 + 5 * i) as f64 % f64::from(h),
                    v,
                })
                .collect(),
        }
    }

    fn cfg(grouping: &Grouping, p: f64, s: f64, seed: u64) -> GkrConfig {
        GkrConfig {
            p,
            scales: vec![s; grouping.g()],
            seed,
        }
    }

    #[test]
    fn keep_everything_at_p_one() {
        let grouping = Grouping::from_sizes(&[5, 3, 3, 3, 3]).unwrap();
        for seed in 0..50 {
            let plan = plan_gkr(&person(17, 256, 192, 2), &grouping, &cfg(&grouping, 1.0, 0.15, seed)).unwrap();
            assert!(plan.erases.is_empty());
        }
    }

    #[test]
    fn erase_every_group_at_p_zero() {
        let grouping = Grouping::from_sizes(&[5, 3, 3, 3, 3]).unwrap();
        for seed in 0..50 {
            let plan = plan_gkr(&person(17, 256, 192, 2), &grouping, &cfg(&grouping, 0.0, 0.15, seed)).unwrap();
            let groups: Vec<_> = plan.erases.iter().map(|e| e.group.unwrap()).collect();
            assert_eq!(groups, vec![0, 1, 2, 3, 4]);
            for e in &plan.erases {
                assert_eq!(grouping.group_of(e.keypoint.unwrap()), e.group.unwrap());
                assert!(e.rect.within((256, 192)));
            }
        }
    }

    #[test]
    fn box_size_rounds_to_nearest() {
        let grouping = Grouping::from_sizes(&[17]).unwrap();
        let mut p = person(17, 256, 192, 2);
        for kp in &mut p.keypoints {
            *kp = Keypoint { x: 128.0, y: 96.0, v: 2 };
        }
        let plan = plan_gkr(&p, &grouping, &cfg(&grouping, 0.0, 0.15, 0)).unwrap();
        let r = plan.erases[0].rect;
        assert_eq!((r.width(), r.height()), (38, 29));
    }

    #[test]
    fn unlabeled_people_are_untouched() {
        let grouping = Grouping::from_sizes(&[5, 3, 3, 3, 3]).unwrap();
        let plan = plan_gkr(&person(17, 64, 64, 0), &grouping, &cfg(&grouping, 0.0, 0.15, 3)).unwrap();
        assert!(plan.erases.is_empty());
        let img = RgbImage::filled(64, 64, [9, 9, 9]);
        assert_eq!(apply_plan(&img, &plan).unwrap(), img);
    }

    #[test]
    fn config_and_schema_checks() {
        let grouping = Grouping::from_sizes(&[2, 2]).unwrap();
        assert!(plan_gkr(&person(4, 10, 10, 2), &grouping, &cfg(&grouping, 1.5, 0.1, 0)).is_err());
        assert!(plan_gkr(&person(4, 10, 10, 2), &grouping, &cfg(&grouping, 0.5, 1.0, 0)).is_err());
        assert!(matches!(
            plan_gkr(&person(5, 10, 10, 2), &grouping, &cfg(&grouping, 0.5, 0.1, 0)),
            Err(Error::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn default_scales_follow_head_rule() {
        let schema = crate::skeleton::Skeleton::coco17().schema().clone();
        let grouping = Grouping::new(
            vec![
                vec![0, 1, 2, 3, 4],
                vec![5, 7, 9],
                vec![6, 8, 10],
                vec![11, 13, 15],
                vec![12, 14, 16],
            ],
            17,
        )
        .unwrap();
        let c = GkrConfig::with_default_scales(&grouping, &schema, 0.5, 0);
        assert_eq!(c.scales, vec![0.05, 0.15, 0.15, 0.15, 0.15]);
    }

    #[test]
    fn apply_touches_only_rectangles() {
        let mut data = Vec::new();
        for k in 0..(40 * 30 * 3) {
            data.push((k % 251) as u8);
        }
        let img = RgbImage::new(40, 30, data).unwrap();
        let plan = ErasePlan {
            image_id: 0,
            annotation_id: 0,
            file_name: String::new(),
            width: 40,
            height: 30,
            rounding: "nearest".into(),
            erases: vec![Erase {
                group: Some(0),
                keypoint: Some(0),
                rect: Rect { x0: 5, y0: 6, x1: 15, y1: 12 },
                fill_seed: 42,
            }],
        };
        let out = apply_plan(&img, &plan).unwrap();
        let mut changed = 0;
        for y in 0..30 {
            for x in 0..40 {
                if plan.erases[0].rect.contains(x, y) {
                    changed += usize::from(out.pixel(x, y) != img.pixel(x, y));
                } else {
                    assert_eq!(out.pixel(x, y), img.pixel(x, y));
                }
            }
        }
        assert!(changed > 50);
        assert_eq!(apply_plan(&img, &plan).unwrap(), out);
        assert!(apply_plan(&RgbImage::filled(10, 10, [0; 3]), &plan).is_err());
    }

    #[test]
    fn random_erasing_stays_inside() {
        let p = person(17, 50, 40, 2);
        let mut any = 0;
        for seed in 0..200 {
            let plan = plan_random_erasing(&p, &RandomErasingConfig { seed, ..Default::default() }).unwrap();
            for e in &plan.erases {
                assert!(e.rect.within((50, 40)));
                any += 1;
            }
        }
        assert!(any > 50 && any < 150);
    }

    #[test]
    fn plan_json_line_round_trip() {
        let grouping = Grouping::from_sizes(&[5, 3, 3, 3, 3]).unwrap();
        let plan = plan_gkr(&person(17, 256, 192, 2), &grouping, &cfg(&grouping, 0.3, 0.15, 9)).unwrap();
        let line = plan.to_json_line().unwrap();
        assert!(!line.contains('\n'));
        assert_eq!(ErasePlan::from_json_line(&line).unwrap(), plan);
    }
}
