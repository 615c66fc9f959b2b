//! Line-delimited JSON oracle protocol over a child process's stdio.
//!
//! ```text
//! child  -> {"op":"hello","n":17,"names":[...]}
//! parent -> {"op":"eval","instances":["all"],"visible":[0,1,5],"trial":3}
//! child  -> {"values":[...]}            or {"error":"message"}
//! ```

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_width, CoalitionValueOracle, InstanceSet, PerfVector};
use crate::coalition::Coalition;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub op: String,
    pub n: usize,
    pub names: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub op: String,
    pub instances: Vec<String>,
    pub visible: Vec<usize>,
    pub trial: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Response {
    Values { values: Vec<f64> },
    Error { error: String },
}

struct Pipe {
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

/// Oracle backed by a child process. Requests are serialized over one pipe.
pub struct ExternalOracle {
    command: Vec<String>,
    n: usize,
    timeout: Duration,
    pipe: Mutex<Pipe>,
    child: Mutex<Child>,
}

impl std::fmt::Debug for ExternalOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalOracle")
            .field("command", &self.command)
            .field("n", &self.n)
            .finish()
    }
}

fn recv_line(rx: &Receiver<std::io::Result<String>>, timeout: Duration) -> Result<String> {
    match rx.recv_timeout(timeout) {
        Ok(Ok(line)) => Ok(line),
        Ok(Err(e)) => Err(Error::oracle(format!("read failed: {e}"))),
        Err(RecvTimeoutError::Timeout) => Err(Error::oracle(format!("no response within {timeout:?}"))),
        Err(RecvTimeoutError::Disconnected) => Err(Error::oracle("child closed its stdout")),
    }
}

impl ExternalOracle {
    /// Spawn `command` (program followed by arguments) and check its hello
    /// line against `names`.
    pub fn spawn(command: &[String], names: &[String], timeout: Duration) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::Config("empty oracle command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::oracle(format!("cannot spawn {program:?}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });

        let mut kill_on_err = |e: Error| {
            let _ = child.kill();
            let _ = child.wait();
            e
        };
        let line = recv_line(&rx, timeout).map_err(&mut kill_on_err)?;
        let hello: Hello = serde_json::from_str(&line).map_err(|e| {
            kill_on_err(Error::OracleIo {
                message: format!("bad hello: {e}"),
                payload: Some(line.clone()),
            })
        })?;
        if hello.op != "hello" || hello.n != names.len() || hello.names != names {
            return Err(kill_on_err(Error::OracleIo {
                message: format!("handshake does not match the active schema of {} keypoints", names.len()),
                payload: Some(line),
            }));
        }
        Ok(Self {
            command: command.to_vec(),
            n: names.len(),
            timeout,
            pipe: Mutex::new(Pipe { stdin, lines: rx }),
            child: Mutex::new(child),
        })
    }
}

impl Drop for ExternalOracle {
    fn drop(&mut self) {
        if let Ok(child) = self.child.get_mut() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

impl CoalitionValueOracle for ExternalOracle {
    fn n(&self) -> usize {
        self.n
    }

    fn identity(&self) -> String {
        format!("external:{}", self.command.join(" "))
    }

    fn eval(&self, instances: &InstanceSet, coalition: Coalition, trial: u64) -> Result<PerfVector> {
        check_width(self.n, &coalition)?;
        let req = Request {
            op: "eval".into(),
            instances: instances.to_wire(),
            visible: coalition.indices().collect(),
            trial,
        };
        let mut line = serde_json::to_string(&req)?;
        line.push('\n');

        let mut pipe = self.pipe.lock().map_err(|_| Error::oracle("oracle pipe poisoned"))?;
        pipe.stdin
            .write_all(line.as_bytes())
            .and_then(|_| pipe.stdin.flush())
            .map_err(|e| Error::oracle(format!("write failed: {e}")))?;
        let raw = recv_line(&pipe.lines, self.timeout)?;
        drop(pipe);

        let protocol_err = |message: String| Error::OracleIo {
            message,
            payload: Some(raw.clone()),
        };
        match serde_json::from_str::<Response>(&raw) {
            Ok(Response::Values { values }) if values.len() == self.n => {
                PerfVector::new(values).map_err(|e| protocol_err(e.to_string()))
            }
            Ok(Response::Values { values }) => Err(protocol_err(format!(
                "expected {} values, got {}",
                self.n,
                values.len()
            ))),
            Ok(Response::Error { error }) => Err(protocol_err(format!("child reported: {error}"))),
            Err(e) => Err(protocol_err(format!("malformed response: {e}"))),
        }
    }
}

/// Answer protocol requests from `input` using `oracle` until EOF.
pub fn serve<O, R, W>(oracle: &O, names: &[String], input: R, mut output: W) -> Result<()>
where
    O: CoalitionValueOracle + ?Sized,
    R: BufRead,
    W: Write,
{
    let io_err = |e| Error::io("<stdout>", e);
    let hello = Hello {
        op: "hello".into(),
        n: oracle.n(),
        names: names.to_vec(),
    };
    writeln!(output, "{}", serde_json::to_string(&hello)?).map_err(io_err)?;
    output.flush().map_err(io_err)?;

    for line in input.lines() {
        let line = line.map_err(|e| Error::io("<stdin>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match answer(oracle, &line) {
            Ok(values) => Response::Values { values },
            Err(e) => Response::Error { error: e.to_string() },
        };
        writeln!(output, "{}", serde_json::to_string(&response)?).map_err(io_err)?;
        output.flush().map_err(io_err)?;
    }
    Ok(())
}

fn answer<O: CoalitionValueOracle + ?Sized>(oracle: &O, line: &str) -> Result<Vec<f64>> {
    let req: Request = serde_json::from_str(line)?;
    if req.op != "eval" {
        return Err(Error::oracle(format!("unsupported op {:?}", req.op)));
    }
    let coalition = Coalition::from_indices(req.visible, oracle.n())?;
    let instances = InstanceSet::from_wire(req.instances)?;
    Ok(oracle.eval(&instances, coalition, req.trial)?.into_inner())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{SyntheticModelConfig, SyntheticOracle};

    #[test]
    fn serve_speaks_the_protocol() {
        let o = SyntheticOracle::new(SyntheticModelConfig::noiseless(
            vec![0.8, 0.8],
            vec![vec![0.0, 0.5], vec![0.5, 0.0]],
        ))
        .unwrap();
        let names = vec!["a".to_string(), "b".to_string()];
        let input = concat!(
            r#"{"op":"eval","instances":["all"],"visible":[1],"trial":0}"#,
            "\n",
            r#"{"op":"eval","instances":["all"],"visible":[5],"trial":0}"#,
            "\n",
            "garbage\n"
        );
        let mut out = Vec::new();
        serve(&o, &names, input.as_bytes(), &mut out).unwrap();
        let lines: Vec<&str> = std::str::from_utf8(&out).unwrap().lines().collect();
        assert_eq!(lines[0], r#"{"op":"hello","n":2,"names":["a","b"]}"#);
        assert_eq!(lines[1], r#"{"values":[0.4,0.8]}"#);
        assert!(lines[2].starts_with(r#"{"error":"#));
        assert!(lines[3].starts_with(r#"{"error":"#));
    }

    #[test]
    fn response_shapes_parse() {
        let v: Response = serde_json::from_str(r#"{"values":[0.5]}"#).unwrap();
        assert_eq!(v, Response::Values { values: vec![0.5] });
        let e: Response = serde_json::from_str(r#"{"error":"boom"}"#).unwrap();
        assert_eq!(e, Response::Error { error: "boom".into() });
    }

    #[cfg(unix)]
    #[test]
    fn handshake_mismatch_aborts() {
        let cmd = vec![
            "sh".to_string(),
            "-c".to_string(),
            r#"echo '{"op":"hello","n":1,"names":["x"]}'; sleep 5"#.to_string(),
        ];
        let names = vec!["a".to_string(), "b".to_string()];
        let err = ExternalOracle::spawn(&cmd, &names, Duration::from_secs(5)).unwrap_err();
        assert!(matches!(err, Error::OracleIo { payload: Some(_), .. }));
    }

    #[cfg(unix)]
    #[test]
    fn protocol_violation_carries_payload() {
        let cmd = vec![
            "sh".to_string(),
            "-c".to_string(),
            r#"echo '{"op":"hello","n":2,"names":["a","b"]}'; read line; echo '{"values":[0.1]}'"#.to_string(),
        ];
        let names = vec!["a".to_string(), "b".to_string()];
        let o = ExternalOracle::spawn(&cmd, &names, Duration::from_secs(5)).unwrap();
        match o.eval(&InstanceSet::All, Coalition::full(2), 0) {
            Err(Error::OracleIo { payload: Some(p), .. }) => assert_eq!(p, r#"{"values":[0.1]}"#),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[cfg(unix)]
    #[test]
    fn silent_child_times_out() {
        let cmd = vec!["sh".to_string(), "-c".to_string(), "sleep 5".to_string()];
        let err = ExternalOracle::spawn(&cmd, &["a".into(), "b".into()], Duration::from_millis(200)).unwrap_err();
        assert!(err.is_oracle());
    }
}
