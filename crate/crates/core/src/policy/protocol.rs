//! Wire frames for external policies: one JSON object per line over the child's stdin/stdout.
//!
//! Request:  `{"id", "type": "plan"|"act", "goal", "subtask"?, "obs": {"color_png_b64", "depth_png_b64", "symbolic"?}}`
//! Plan reply: `{"id", "subtask": {"verb", "source", "target", "text"}}`
//! Act reply:  `{"id", "tokens": [6 ints in 0..1024]}`
//! Error reply: `{"id", "error": "...", "code"?: "replan_impossible"|"already_done"}`
//!
//! Unknown fields are ignored on both sides.

use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::env::{Observation, SymbolicSnapshot};
use crate::tasks::{OracleError, SubTask};
use crate::tokenizer::TokenizerError;
use crate::world::WorldError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("failed to spawn policy process: {0}")]
    Spawn(String),
    #[error("no response within {0:?}")]
    Timeout(Duration),
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("response id {got} does not echo request id {expected}")]
    IdMismatch { expected: u64, got: u64 },
    #[error("tokens out of range: {0}")]
    TokenRange(TokenizerError),
    #[error("policy process exited")]
    ChildExited,
    #[error("i/o error talking to policy process: {0}")]
    Io(String),
    #[error("policy reported error: {0}")]
    Remote(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    Plan,
    Act,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WireObservation {
    pub color_png_b64: String,
    pub depth_png_b64: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbolic: Option<SymbolicSnapshot>,
}

impl WireObservation {
    pub fn from_observation(obs: &Observation) -> Result<Self, WorldError> {
        let color_png_b64 = match &obs.color {
            Some(c) => STANDARD.encode(c.to_png()?),
            None => String::new(),
        };
        let depth_png_b64 = match &obs.depth {
            Some(d) => STANDARD.encode(d.to_png()?),
            None => String::new(),
        };
        Ok(Self {
            color_png_b64,
            depth_png_b64,
            symbolic: obs.symbolic.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    #[serde(rename = "type")]
    pub kind: RequestKind,
    pub goal: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtask: Option<String>,
    pub obs: WireObservation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResponse {
    pub id: u64,
    pub subtask: SubTask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActResponse {
    pub id: u64,
    pub tokens: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub id: u64,
    pub error: String,
    /// Set when the policy knows the episode cannot progress; the harness then ends it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<ErrorCode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    ReplanImpossible,
    AlreadyDone,
}

impl ErrorCode {
    /// The code and message an oracle error travels as.
    pub fn encode(e: &OracleError) -> (Option<ErrorCode>, String) {
        match e {
            OracleError::ReplanImpossible(m) => (Some(ErrorCode::ReplanImpossible), m.clone()),
            OracleError::AlreadyDone => (Some(ErrorCode::AlreadyDone), e.to_string()),
            other => (None, other.to_string()),
        }
    }

    pub fn into_oracle_error(self, message: String) -> OracleError {
        match self {
            ErrorCode::ReplanImpossible => OracleError::ReplanImpossible(message),
            ErrorCode::AlreadyDone => OracleError::AlreadyDone,
        }
    }
}

/// A reply as received, before its payload is checked against the request type.
#[derive(Debug, Clone, PartialEq)]
pub enum Reply {
    Subtask(SubTask),
    Tokens(Vec<i64>),
    Error(String, Option<ErrorCode>),
}

/// The id of a frame, if it parses far enough to have one.
pub fn reply_id(line: &str) -> Option<u64> {
    #[derive(Deserialize)]
    struct IdOnly {
        id: u64,
    }
    serde_json::from_str::<IdOnly>(line).ok().map(|f| f.id)
}

/// Splits a frame into its id and payload. `kind` selects which payload is expected.
pub fn parse_reply(line: &str, kind: RequestKind) -> Result<(u64, Reply), ProtocolError> {
    let v: serde_json::Value =
        serde_json::from_str(line).map_err(|e| ProtocolError::Malformed(format!("{e}: {}", truncate(line))))?;
    let id = v
        .get("id")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| ProtocolError::Malformed(format!("missing integer id: {}", truncate(line))))?;
    if let Some(err) = v.get("error") {
        let msg = err.as_str().map(str::to_string).unwrap_or_else(|| err.to_string());
        // unknown codes degrade to a plain error
        let code = v.get("code").and_then(|c| serde_json::from_value(c.clone()).ok());
        return Ok((id, Reply::Error(msg, code)));
    }
    let reply = match kind {
        RequestKind::Plan => {
            let raw = v
                .get("subtask")
                .ok_or_else(|| ProtocolError::Malformed("plan reply without subtask".to_string()))?;
            let st: SubTask = serde_json::from_value(raw.clone())
                .map_err(|e| ProtocolError::Malformed(format!("bad subtask: {e}")))?;
            Reply::Subtask(st.normalized())
        }
        RequestKind::Act => {
            let raw = v
                .get("tokens")
                .and_then(serde_json::Value::as_array)
                .ok_or_else(|| ProtocolError::Malformed("act reply without tokens array".to_string()))?;
            let tokens = raw
                .iter()
                .map(|t| t.as_i64().ok_or_else(|| ProtocolError::Malformed(format!("non-integer token {t}"))))
                .collect::<Result<Vec<_>, _>>()?;
            Reply::Tokens(tokens)
        }
    };
    Ok((id, reply))
}

fn truncate(s: &str) -> String {
    const MAX: usize = 120;
    if s.len() <= MAX {
        s.to_string()
    } else {
        let mut end = MAX;
        while !s.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}…", &s[..end])
    }
}
