//! Group-based keypoint removal: erase at most one keypoint region per
//! keypoint group so the rest of each group stays available as context.

mod coco;
mod plan;
mod ppm;

pub use coco::{
    occlusion_bucket, occlusion_stats, parse_annotations, Keypoint, OcclusionRow, PersonAnnotation,
    OCCLUSION_BUCKETS,
};
pub use plan::{
    apply_plan, plan_gkr, plan_random_erasing, Erase, ErasePlan, GkrConfig, RandomErasingConfig,
    HEAD_SCALE, BODY_SCALE,
};
pub use ppm::RgbImage;
