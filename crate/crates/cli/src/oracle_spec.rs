//! `--oracle` spec strings: `tabular:<csv>`, `synthetic:<json>`,
//! `external:<command line>`.
//!
//! `KEYSHAP_ORACLE_CMD` replaces the command of an `external` spec (and
//! allows a bare `external`).

use std::path::Path;
use std::time::Duration;

use keyshap::oracle::{ExternalOracle, SyntheticModelConfig, SyntheticOracle, TabularOracle};
use keyshap::{CoalitionValueOracle, Error};

use crate::error::CliError;
use crate::run::Run;
use crate::OracleArgs;

pub const CMD_ENV: &str = "KEYSHAP_ORACLE_CMD";

#[derive(Debug, PartialEq, Eq)]
enum Spec<'a> {
    Tabular(&'a str),
    Synthetic(&'a str),
    External(Option<&'a str>),
}

fn parse(spec: &str) -> Result<Spec<'_>, CliError> {
    match spec.split_once(':') {
        Some(("tabular", p)) if !p.is_empty() => Ok(Spec::Tabular(p)),
        Some(("synthetic", p)) if !p.is_empty() => Ok(Spec::Synthetic(p)),
        Some(("external", c)) => Ok(Spec::External(Some(c).filter(|c| !c.trim().is_empty()))),
        None if spec == "external" => Ok(Spec::External(None)),
        _ => Err(CliError::Usage(format!(
            "--oracle {spec:?}: expected tabular:<csv>, synthetic:<json> or external:<command>"
        ))),
    }
}

pub fn load_synthetic(run: &mut Run, path: &Path) -> Result<SyntheticOracle, CliError> {
    let text = run.read_string(path)?;
    let cfg: SyntheticModelConfig = serde_json::from_str(&text).map_err(Error::from)?;
    Ok(SyntheticOracle::for_schema(cfg, run.schema().n())?)
}

pub fn open(run: &mut Run, args: &OracleArgs) -> Result<Box<dyn CoalitionValueOracle>, CliError> {
    let n = run.schema().n();
    let oracle: Box<dyn CoalitionValueOracle> = match parse(&args.oracle)? {
        Spec::Tabular(p) => {
            let bytes = run.read(Path::new(p))?;
            let t = TabularOracle::from_reader(bytes.as_slice())?;
            if t.n() != n {
                return Err(Error::SchemaMismatch { expected: n, actual: t.n() }.into());
            }
            Box::new(t)
        }
        Spec::Synthetic(p) => Box::new(load_synthetic(run, Path::new(p))?),
        Spec::External(cmd) => {
            let env = std::env::var(CMD_ENV).ok().filter(|c| !c.trim().is_empty());
            let line = env
                .as_deref()
                .or(cmd)
                .ok_or_else(|| CliError::Usage(format!("external oracle needs a command or {CMD_ENV}")))?;
            let argv: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
            Box::new(ExternalOracle::spawn(
                &argv,
                run.schema().names(),
                Duration::from_millis(args.oracle_timeout_ms),
            )?)
        }
    };
    run.set_oracle(oracle.identity());
    Ok(oracle)
}
