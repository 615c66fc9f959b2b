//! Per-invocation state: resolved schema, recorded inputs and outputs, and
//! the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use keyshap::rng;
use keyshap::{Error, KeypointSchema, Skeleton};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::Cli;

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce and verify a run. Contains no timestamps
/// or host details, so identical runs write identical manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Arguments after the program name, as given.
    pub argv: Vec<String>,
    /// Parsed subcommand settings.
    pub config: serde_json::Value,
    pub seed: u64,
    pub sub_seeds: BTreeMap<String, u64>,
    pub schema_sha256: String,
    pub oracle: Option<String>,
    pub inputs: Vec<FileDigest>,
    /// Paths relative to the output directory.
    pub outputs: Vec<FileDigest>,
}

pub struct Run {
    pub seed: u64,
    pub skeleton: Skeleton,
    out_dir: Option<PathBuf>,
    manifest: RunManifest,
    /// Artifact printed when there is no output directory.
    primary: Option<Vec<u8>>,
}

impl Run {
    pub fn new(cli: &Cli, argv: &[String]) -> Result<Self, CliError> {
        let mut inputs = Vec::new();
        let skeleton = match &cli.schema {
            Some(path) => {
                let bytes = read_bytes(path)?;
                inputs.push(FileDigest {
                    path: path.display().to_string(),
                    sha256: sha256_hex(&bytes),
                });
                let text = String::from_utf8(bytes)
                    .map_err(|_| Error::SchemaValidation(format!("{} is not UTF-8", path.display())))?;
                Skeleton::from_json(&text)?
            }
            None => Skeleton::coco17(),
        };
        let manifest = RunManifest {
            tool: "keyshap".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            argv: argv.to_vec(),
            config: serde_json::to_value(&cli.command).map_err(Error::from)?,
            seed: cli.seed,
            sub_seeds: BTreeMap::new(),
            schema_sha256: sha256_hex(skeleton.to_json().as_bytes()),
            oracle: None,
            inputs,
            outputs: Vec::new(),
        };
        if let Some(dir) = &cli.out_dir {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        Ok(Self {
            seed: cli.seed,
            skeleton,
            out_dir: cli.out_dir.clone(),
            manifest,
            primary: None,
        })
    }

    pub fn schema(&self) -> &KeypointSchema {
        self.skeleton.schema()
    }

    pub fn out_dir(&self) -> Option<&Path> {
        self.out_dir.as_deref()
    }

    pub fn require_out_dir(&self, what: &str) -> Result<&Path, CliError> {
        self.out_dir()
            .ok_or_else(|| CliError::Usage(format!("{what} needs --out-dir")))
    }

    /// Named sub-seed of the root seed, recorded in the manifest.
    pub fn sub_seed(&mut self, name: &str) -> u64 {
        let s = rng::sub_seed(self.seed, name);
        self.manifest.sub_seeds.insert(name.to_owned(), s);
        s
    }

    pub fn set_oracle(&mut self, identity: String) {
        self.manifest.oracle = Some(identity);
    }

    /// Read an input file and record its digest.
    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = read_bytes(path)?;
        self.manifest.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    pub fn read_string(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = self.read(path)?;
        String::from_utf8(bytes).map_err(|_| Error::MalformedTable(format!("{} is not UTF-8", path.display())).into())
    }

    /// Record an artifact. It is written under the output directory if there
    /// is one; the `primary` artifact is printed to stdout otherwise.
    pub fn emit(&mut self, name: &str, bytes: Vec<u8>, primary: bool) -> Result<(), CliError> {
        if let Some(dir) = &self.out_dir {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
            self.manifest.outputs.push(FileDigest {
                path: name.to_owned(),
                sha256: sha256_hex(&bytes),
            });
        } else if primary {
            self.primary = Some(bytes);
        }
        Ok(())
    }

    /// Write the manifest (or print the primary artifact).
    pub fn finish(self) -> Result<(), CliError> {
        let stdout = std::io::stdout();
        let mut out = stdout.lock();
        let io = |e| CliError::Stage(Error::io("<stdout>", e));
        match &self.out_dir {
            Some(dir) => {
                let path = dir.join(MANIFEST);
                let mut text = serde_json::to_string_pretty(&self.manifest).map_err(Error::from)?;
                text.push('\n');
                fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
                for o in &self.manifest.outputs {
                    writeln!(out, "{}", dir.join(&o.path).display()).map_err(io)?;
                }
            }
            None => {
                if let Some(bytes) = &self.primary {
                    out.write_all(bytes).map_err(io)?;
                }
            }
        }
        Ok(())
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| Error::io(path, e).into())
}
