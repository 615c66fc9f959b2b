//! `oracle serve-synthetic` and `oracle synthetic-from-delta`.

use std::io::{stdin, stdout};

use keyshap::oracle::{serve, SyntheticModelConfig};
use keyshap::Error;

use crate::error::CliError;
use crate::run::Run;
use crate::{inputs, oracle_spec, Cli, FromDeltaArgs, ServeArgs};

/// Speak the external oracle protocol on stdin/stdout until EOF. Writes no
/// manifest: stdout belongs to the protocol.
pub fn serve_synthetic(cli: &Cli, a: &ServeArgs) -> Result<(), CliError> {
    let mut quiet = cli.clone();
    quiet.out_dir = None;
    let mut run = Run::new(&quiet, &[])?;
    let oracle = oracle_spec::load_synthetic(&mut run, &a.config)?;
    let names = run.schema().names().to_vec();
    serve(&oracle, &names, stdin().lock(), stdout().lock())?;
    Ok(())
}

pub fn synthetic_from_delta(run: &mut Run, a: &FromDeltaArgs) -> Result<(), CliError> {
    let delta = inputs::delta(run, &a.delta)?;
    let mut cfg = SyntheticModelConfig::from_delta(&delta)?;
    cfg.noise_sd = a.noise_sd;
    cfg.instances = a.instances;
    cfg.seed = run.sub_seed("synthetic");
    cfg.validate()?;
    let mut json = serde_json::to_string_pretty(&cfg).map_err(Error::from)?;
    json.push('\n');
    run.emit("synthetic.json", json.into_bytes(), true)
}
