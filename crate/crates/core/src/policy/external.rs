use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::protocol::{parse_reply, reply_id, ProtocolError, Reply, Request, RequestKind, WireObservation};
use super::{Policy, PolicyError};
use crate::env::Observation;
use crate::tasks::SubTask;
use crate::tokenizer::ActionCodec;
use crate::world::Action;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

/// How long `spawn` watches for a child that dies immediately (e.g. command not found).
const STARTUP_GRACE: Duration = Duration::from_millis(50);

/// A policy living in a child process. The command line is run through `sh -c`.
pub struct ExternalPolicy {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
    /// Set once the child's output pipe is closed; it can never answer again.
    disconnected: bool,
    pub timeout: Duration,
    pub codec: ActionCodec,
    rasters: bool,
}

impl ExternalPolicy {
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, PolicyError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ProtocolError::Spawn(format!("`{command}`: {e}")))?;
        let start = Instant::now();
        while start.elapsed() < STARTUP_GRACE {
            if let Ok(Some(status)) = child.try_wait() {
                if !status.success() {
                    return Err(ProtocolError::Spawn(format!("`{command}` exited at startup with {status}")).into());
                }
                break;
            }
            thread::sleep(Duration::from_millis(2));
        }
        let stdout = child.stdout.take().expect("stdout is piped");
        let stdin = child.stdin.take();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            child,
            stdin,
            lines: rx,
            next_id: 1,
            disconnected: false,
            timeout,
            codec: ActionCodec::default(),
            rasters: true,
        })
    }

    /// Skips rendering and sends empty image fields; for clients that only read the symbolic channel.
    pub fn without_rasters(mut self) -> Self {
        self.rasters = false;
        self
    }

    fn round_trip(&mut self, req: Request) -> Result<Reply, ProtocolError> {
        let id = req.id;
        let kind = req.kind;
        let mut frame = serde_json::to_string(&req).map_err(|e| ProtocolError::Io(e.to_string()))?;
        frame.push('\n');
        let stdin = self.stdin.as_mut().ok_or(ProtocolError::ChildExited)?;
        if let Err(e) = stdin.write_all(frame.as_bytes()).and_then(|_| stdin.flush()) {
            return Err(match e.kind() {
                std::io::ErrorKind::BrokenPipe => ProtocolError::ChildExited,
                _ => ProtocolError::Io(e.to_string()),
            });
        }
        let deadline = Instant::now() + self.timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            let line = match self.lines.recv_timeout(left) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => return Err(ProtocolError::Io(e.to_string())),
                Err(RecvTimeoutError::Timeout) => return Err(ProtocolError::Timeout(self.timeout)),
                Err(RecvTimeoutError::Disconnected) => return Err(ProtocolError::ChildExited),
            };
            if line.trim().is_empty() {
                continue;
            }
            if reply_id(&line).is_some_and(|got| got < id) {
                // late answer to a request that already timed out
                continue;
            }
            let (got, reply) = parse_reply(&line, kind)?;
            if got != id {
                return Err(ProtocolError::IdMismatch { expected: id, got });
            }
            return Ok(reply);
        }
    }

    fn request(
        &mut self,
        kind: RequestKind,
        obs: &Observation,
        goal: &str,
        subtask: Option<&SubTask>,
    ) -> Result<Reply, PolicyError> {
        let id = self.next_id;
        self.next_id += 1;
        let obs = WireObservation::from_observation(obs).map_err(|e| ProtocolError::Io(e.to_string()))?;
        let req = Request {
            id,
            kind,
            goal: goal.to_string(),
            subtask: subtask.map(|s| s.text.clone()),
            obs,
        };
        let reply = self.round_trip(req);
        if reply == Err(ProtocolError::ChildExited) {
            self.disconnected = true;
        }
        match reply? {
            Reply::Error(msg, Some(code)) => Err(code.into_oracle_error(msg).into()),
            Reply::Error(msg, None) => Err(ProtocolError::Remote(msg).into()),
            r => Ok(r),
        }
    }
}

impl Policy for ExternalPolicy {
    fn plan(&mut self, obs: &Observation, goal: &str) -> Result<SubTask, PolicyError> {
        match self.request(RequestKind::Plan, obs, goal, None)? {
            Reply::Subtask(s) => Ok(s),
            other => Err(ProtocolError::Malformed(format!("unexpected plan reply {other:?}")).into()),
        }
    }

    fn act(&mut self, obs: &Observation, goal: &str, subtask: &SubTask) -> Result<Action, PolicyError> {
        match self.request(RequestKind::Act, obs, goal, Some(subtask))? {
            Reply::Tokens(t) => Ok(self.codec.decode(&t).map_err(ProtocolError::TokenRange)?),
            other => Err(ProtocolError::Malformed(format!("unexpected act reply {other:?}")).into()),
        }
    }

    fn wants_rasters(&self) -> bool {
        self.rasters
    }

    fn health(&mut self) -> Result<(), PolicyError> {
        match self.child.try_wait() {
            // the pipe closes before the exit status is reapable
            Ok(None) if self.disconnected => Err(ProtocolError::Spawn("policy process closed its output".to_string()).into()),
            Ok(None) => Ok(()),
            Ok(Some(status)) => Err(ProtocolError::Spawn(format!("policy process exited with {status}")).into()),
            Err(e) => Err(ProtocolError::Io(e.to_string()).into()),
        }
    }
}

impl Drop for ExternalPolicy {
    fn drop(&mut self) {
        // closing stdin lets a well-behaved client exit on EOF
        self.stdin.take();
        let deadline = Instant::now() + Duration::from_millis(200);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(5));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
