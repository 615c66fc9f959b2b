//! Attribution pipeline commands: interdep, cluster, shapley, exact, cost, masks.

use keyshap::matrix::write_labelled_csv;
use keyshap::perturb::{gen_masks, MaskSampling};
use keyshap::shapley::{
    combined_attribution, exact_shapley, query_count, sampled_shapley, GsvConfig, GsvTables, TableGame,
};
use keyshap::{
    delta_perf_matrix, interdependency, perturbation_influence, Error, Grouping, SquareMatrix,
};
use serde::Serialize;

use crate::error::CliError;
use crate::run::Run;
use crate::{inputs, oracle_spec, ClusterArgs, CostArgs, ExactArgs, InterdepArgs, MasksArgs, ShapleyArgs};

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn matrix_csv(run: &Run, m: &SquareMatrix) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_labelled_csv(&mut buf, run.schema().names(), m, 1.0)?;
    Ok(buf)
}

pub fn interdep(run: &mut Run, a: &InterdepArgs) -> Result<(), CliError> {
    let oracle = oracle_spec::open(run, &a.oracle)?;
    let instances = inputs::instances(&a.oracle.instances)?;
    let seed = run.sub_seed("interdep");
    let delta = delta_perf_matrix(&*oracle, &instances, a.trials, seed)?;
    let mut csv = Vec::new();
    delta.write_csv(&mut csv, run.schema())?;
    run.emit("delta.csv", csv, true)?;
    match perturbation_influence(&delta) {
        Ok(pi) => {
            let bytes = matrix_csv(run, &pi)?;
            run.emit("pi.csv", bytes, false)?;
        }
        Err(Error::DegenerateRow(i)) => {
            eprintln!(
                "warning: keypoint {} has no drops; pi.csv not written",
                run.schema().name(i)
            );
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

pub fn cluster(run: &mut Run, a: &ClusterArgs) -> Result<(), CliError> {
    let pi = match (&a.source.delta, &a.source.pi) {
        (Some(path), None) => {
            let delta = inputs::delta(run, path)?;
            for (i, j) in delta.row_dominance_violations() {
                let s = run.schema();
                eprintln!("note: row {} peaks at column {}", s.name(i), s.name(j));
            }
            perturbation_influence(&delta)?
        }
        (None, Some(path)) => inputs::schema_matrix(run, path)?,
        _ => return Err(CliError::Usage("give exactly one of --delta or --pi".into())),
    };
    let kc = if a.no_connectivity {
        SquareMatrix::zeros(pi.n())
    } else {
        run.skeleton.keypoint_connectivity()?
    };
    let s = interdependency(&pi, &kc)?;
    let grouping = keyshap::cluster(&s, a.g, a.linkage)?;
    let mut json = grouping.to_json(run.schema())?;
    json.push('\n');
    run.emit("grouping.json", json.into_bytes(), true)?;
    let bytes = matrix_csv(run, s.matrix())?;
    run.emit("interdependency.csv", bytes, false)?;
    Ok(())
}

pub fn shapley(run: &mut Run, a: &ShapleyArgs) -> Result<(), CliError> {
    let grouping = inputs::grouping(run, &a.grouping)?;
    let oracle = oracle_spec::open(run, &a.oracle)?;
    let cfg = GsvConfig {
        instances: inputs::instances(&a.oracle.instances)?,
        trials: a.trials,
        seed: run.sub_seed("shapley"),
    };
    let tables = GsvTables::compute(&*oracle, &grouping, &cfg)?;
    let report = combined_attribution(&tables, &grouping, run.schema(), a.split)?;
    let mut json = report.to_json()?;
    json.push('\n');
    run.emit("report.json", json.into_bytes(), true)?;
    for (stem, bytes) in report.percent_csvs()? {
        run.emit(&format!("{stem}.csv"), bytes, false)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Sampled {
    permutations: usize,
    seed: u64,
    phi: Vec<f64>,
}

#[derive(Serialize)]
struct ExactReport {
    players: usize,
    phi: Vec<f64>,
    full_value: f64,
    empty_value: f64,
    efficiency_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampled: Option<Sampled>,
}

pub fn exact(run: &mut Run, a: &ExactArgs) -> Result<(), CliError> {
    let bytes = run.read(&a.game)?;
    let game = TableGame::from_csv(bytes.as_slice())?;
    let t = exact_shapley(&game, 0)?;
    let sampled = match a.sample {
        Some(k) => {
            let seed = run.sub_seed("exact-sample");
            Some(Sampled {
                permutations: k,
                seed,
                phi: sampled_shapley(&game, k, seed)?,
            })
        }
        None => None,
    };
    let report = ExactReport {
        players: t.players.len(),
        efficiency_gap: t.efficiency_gap(),
        phi: t.phi,
        full_value: t.full_value,
        empty_value: t.empty_value,
        sampled,
    };
    let bytes = json_bytes(&report)?;
    run.emit("exact.json", bytes, true)
}

pub fn cost(run: &mut Run, a: &CostArgs) -> Result<(), CliError> {
    let grouping = match (&a.groups, &a.grouping) {
        (Some(sizes), None) => {
            let g = Grouping::from_sizes(sizes)?;
            if let Some(n) = a.n {
                if n != g.n() {
                    return Err(CliError::Usage(format!("--n {n} but group sizes sum to {}", g.n())));
                }
            }
            g
        }
        (None, Some(path)) => inputs::grouping(run, path)?,
        _ => return Err(CliError::Usage("give exactly one of --groups or --grouping".into())),
    };
    let report = query_count(&grouping).with_trials(a.trials, a.batches);
    let bytes = json_bytes(&report)?;
    run.emit("cost.json", bytes, true)
}

pub fn masks(run: &mut Run, a: &MasksArgs) -> Result<(), CliError> {
    let seed = run.sub_seed("masks");
    let masks = gen_masks(
        (a.x, a.y),
        a.m,
        a.base_scale,
        (a.width, a.height),
        seed,
        MaskSampling::default(),
    )?;
    let bytes = json_bytes(&masks)?;
    run.emit("masks.json", bytes, true)
}
