//! `gkr plan|apply|stats`.

use std::collections::BTreeMap;
use std::path::Path;

use keyshap::gkr::{
    apply_plan, occlusion_stats, parse_annotations, plan_gkr, plan_random_erasing, ErasePlan, GkrConfig,
    PersonAnnotation, RandomErasingConfig, RgbImage, OCCLUSION_BUCKETS,
};
use keyshap::matrix::format_value;
use keyshap::Error;
use rayon::prelude::*;

use crate::error::CliError;
use crate::run::Run;
use crate::{inputs, GkrApplyArgs, GkrPlanArgs, GkrStatsArgs};

fn people(run: &mut Run, path: &Path) -> Result<Vec<PersonAnnotation>, CliError> {
    let text = run.read_string(path)?;
    Ok(parse_annotations(&text, run.schema().n())?)
}

fn jsonl(plans: &[ErasePlan]) -> Result<Vec<u8>, CliError> {
    let mut out = String::new();
    for p in plans {
        out.push_str(&p.to_json_line()?);
        out.push('\n');
    }
    Ok(out.into_bytes())
}

pub fn plan(run: &mut Run, a: &GkrPlanArgs) -> Result<(), CliError> {
    let people = people(run, &a.annotations)?;
    let plans: Vec<ErasePlan> = match a.planner.as_str() {
        "gkr" => {
            let path = a
                .grouping
                .as_ref()
                .ok_or_else(|| CliError::Usage("the gkr planner needs --grouping".into()))?;
            let grouping = inputs::grouping(run, path)?;
            let seed = run.sub_seed("gkr");
            let cfg = GkrConfig::with_scales(&grouping, run.schema(), a.p, seed, a.head_scale, a.body_scale);
            people
                .par_iter()
                .map(|p| plan_gkr(p, &grouping, &cfg))
                .collect::<keyshap::Result<_>>()?
        }
        "random-erasing" => {
            let cfg = RandomErasingConfig {
                probability: 1.0 - a.p,
                seed: run.sub_seed("random-erasing"),
                ..RandomErasingConfig::default()
            };
            people
                .par_iter()
                .map(|p| plan_random_erasing(p, &cfg))
                .collect::<keyshap::Result<_>>()?
        }
        other => return Err(CliError::Usage(format!("unknown planner {other:?} (gkr, random-erasing)"))),
    };
    let bytes = jsonl(&plans)?;
    run.emit("plans.jsonl", bytes, true)
}

pub fn apply(run: &mut Run, a: &GkrApplyArgs) -> Result<(), CliError> {
    run.require_out_dir("gkr apply")?;
    let text = run.read_string(&a.plans)?;
    // Plans for the same image are applied in file order.
    let mut by_image: BTreeMap<String, Vec<ErasePlan>> = BTreeMap::new();
    for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let plan = ErasePlan::from_json_line(line)
            .map_err(|e| Error::MalformedTable(format!("{} line {}: {e}", a.plans.display(), k + 1)))?;
        if plan.file_name.is_empty() || Path::new(&plan.file_name).is_absolute() || plan.file_name.contains("..") {
            return Err(Error::MalformedTable(format!("plan file name {:?} is not a plain relative path", plan.file_name)).into());
        }
        by_image.entry(plan.file_name.clone()).or_default().push(plan);
    }
    let mut jobs = Vec::with_capacity(by_image.len());
    for (name, plans) in by_image {
        let bytes = run.read(&a.images.join(&name))?;
        jobs.push((name, plans, bytes));
    }
    let outputs: Vec<(String, Vec<u8>)> = jobs
        .par_iter()
        .map(|(name, plans, bytes)| {
            let mut image = RgbImage::from_ppm_bytes(bytes)?;
            for p in plans {
                image = apply_plan(&image, p)?;
            }
            Ok((name.clone(), image.to_ppm_bytes()))
        })
        .collect::<keyshap::Result<_>>()?;
    for (name, bytes) in outputs {
        run.emit(&name, bytes, false)?;
    }
    Ok(())
}

pub fn stats(run: &mut Run, a: &GkrStatsArgs) -> Result<(), CliError> {
    let people = people(run, &a.annotations)?;
    let rows = occlusion_stats(&people);
    let mut per_image = String::from("image_id,ratio,bucket\n");
    let mut counts = [0usize; OCCLUSION_BUCKETS.len()];
    for r in &rows {
        per_image.push_str(&format!("{},{},{}\n", r.image_id, format_value(r.ratio), format_value(r.bucket)));
        let k = OCCLUSION_BUCKETS.iter().position(|&b| b == r.bucket).expect("bucket edge");
        counts[k] += 1;
    }
    let mut summary = String::from("bucket,images\n");
    for (b, c) in OCCLUSION_BUCKETS.iter().zip(counts) {
        summary.push_str(&format!("{},{c}\n", format_value(*b)));
    }
    run.emit("occlusion.csv", per_image.into_bytes(), false)?;
    run.emit("buckets.csv", summary.into_bytes(), true)
}
