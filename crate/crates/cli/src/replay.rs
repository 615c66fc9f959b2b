//! Re-run a recorded command into a fresh directory and compare digests.

use std::fs;

use clap::Parser;
use keyshap::Error;

use crate::error::CliError;
use crate::run::{sha256_hex, RunManifest, MANIFEST};
use crate::{execute, Cli, Command, ReplayArgs};

fn load(path: &std::path::Path) -> Result<RunManifest, CliError> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text).map_err(Error::from)?)
}

pub fn replay(cli: &Cli, a: &ReplayArgs) -> Result<(), CliError> {
    let out_dir = cli
        .out_dir
        .clone()
        .ok_or_else(|| CliError::Usage("replay needs --out-dir for the new outputs".into()))?;
    let old = load(&a.manifest)?;

    for input in &old.inputs {
        let bytes = fs::read(&input.path).map_err(|e| Error::io(&input.path, e))?;
        if sha256_hex(&bytes) != input.sha256 {
            return Err(CliError::Mismatch(format!("input {} changed since the recorded run", input.path)));
        }
    }

    let mut replayed = Cli::try_parse_from(std::iter::once("keyshap".to_owned()).chain(old.argv.iter().cloned()))
        .map_err(|e| CliError::Usage(format!("recorded argv no longer parses: {e}")))?;
    if matches!(replayed.command, Command::Replay(_)) {
        return Err(CliError::Usage("cannot replay a replay".into()));
    }
    replayed.out_dir = Some(out_dir.clone());
    if cli.jobs.is_some() {
        replayed.jobs = cli.jobs;
    }
    execute(&replayed, &old.argv)?;

    let new = load(&out_dir.join(MANIFEST))?;
    let mut differing = Vec::new();
    for o in &old.outputs {
        match new.outputs.iter().find(|n| n.path == o.path) {
            Some(n) if n.sha256 == o.sha256 => eprintln!("identical {}", o.path),
            Some(_) => differing.push(format!("{} differs", o.path)),
            None => differing.push(format!("{} missing", o.path)),
        }
    }
    for n in &new.outputs {
        if !old.outputs.iter().any(|o| o.path == n.path) {
            differing.push(format!("{} not in the recorded run", n.path));
        }
    }
    if differing.is_empty() {
        Ok(())
    } else {
        Err(CliError::Mismatch(differing.join("; ")))
    }
}
