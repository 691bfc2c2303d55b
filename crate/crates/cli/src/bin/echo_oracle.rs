//! Reference external policy: answers plan/act requests with the rule-based oracle, reading only
//! the symbolic channel. The `--*-at <id>` flags inject faults for exercising the harness.

use std::io::{self, BufRead, Write};
use std::thread;
use std::time::Duration;

use clap::Parser;
use serde_json::json;

use tabletop::policy::oracle_plan;
use tabletop::policy::protocol::{ActResponse, ErrorCode, ErrorResponse, PlanResponse, Request, RequestKind};
use tabletop::tasks::{oracle_action, SubTask};
use tabletop::tokenizer::ActionCodec;

#[derive(Debug, Parser)]
#[command(name = "echo-oracle", about = "Oracle policy speaking the NDJSON wire protocol")]
struct Args {
    /// Oracle seed; must match the in-process oracle to reproduce its choices.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reply to this request id with half a frame.
    #[arg(long)]
    truncate_at: Vec<u64>,
    /// Sleep --sleep-ms before answering this request id.
    #[arg(long)]
    sleep_at: Vec<u64>,
    #[arg(long, default_value_t = 0)]
    sleep_ms: u64,
    /// Answer this act request with out-of-range tokens.
    #[arg(long)]
    bad_tokens_at: Vec<u64>,
    /// Answer this request with a different id.
    #[arg(long)]
    wrong_id_at: Vec<u64>,
    /// Answer this request with an error frame.
    #[arg(long)]
    error_at: Vec<u64>,
    /// Exit without answering this request id.
    #[arg(long)]
    exit_at: Option<u64>,
}

/// A reply frame, or an error code and message.
fn answer(req: &Request, seed: u64, codec: &ActionCodec) -> Result<String, (Option<ErrorCode>, String)> {
    let plain = |e: &dyn std::fmt::Display| (None, e.to_string());
    let snap = req
        .obs
        .symbolic
        .as_ref()
        .ok_or_else(|| plain(&"oracle requires symbolic channel"))?;
    Ok(match req.kind {
        RequestKind::Plan => {
            let subtask = oracle_plan(&snap.scene, &snap.goal, seed).map_err(|e| ErrorCode::encode(&e))?;
            serde_json::to_string(&PlanResponse { id: req.id, subtask })
        }
        RequestKind::Act => {
            let text = req.subtask.as_deref().ok_or_else(|| plain(&"act request without subtask"))?;
            let subtask = SubTask::parse(text).map_err(|e| plain(&e))?;
            let action = oracle_action(&snap.scene, &snap.goal, &subtask).map_err(|e| ErrorCode::encode(&e))?;
            let tokens = codec.encode(&action).map_err(|e| plain(&e))?;
            serde_json::to_string(&ActResponse {
                id: req.id,
                tokens: tokens.iter().map(|&t| i64::from(t)).collect(),
            })
        }
    }
    .expect("reply serializes"))
}

fn error_frame(id: u64, code: Option<ErrorCode>, error: String) -> String {
    serde_json::to_string(&ErrorResponse { id, error, code }).expect("reply serializes")
}

fn main() {
    let args = Args::parse();
    let codec = ActionCodec::default();
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let req: Request = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                let id = serde_json::from_str::<serde_json::Value>(&line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(serde_json::Value::as_u64))
                    .unwrap_or(0);
                let frame = error_frame(id, None, format!("bad request: {e}"));
                if writeln!(out, "{frame}").and_then(|_| out.flush()).is_err() {
                    break;
                }
                continue;
            }
        };
        let id = req.id;
        if args.exit_at == Some(id) {
            std::process::exit(1);
        }
        if args.sleep_at.contains(&id) {
            thread::sleep(Duration::from_millis(args.sleep_ms));
        }
        let mut frame = match answer(&req, args.seed, &codec) {
            Ok(f) => f,
            Err((code, e)) => error_frame(id, code, e),
        };
        if args.error_at.contains(&id) {
            frame = error_frame(id, None, "injected error".to_string());
        }
        if args.bad_tokens_at.contains(&id) && req.kind == RequestKind::Act {
            frame = json!({"id": id, "tokens": [1024, 0, 0, -1, 0, 0]}).to_string();
        }
        if args.wrong_id_at.contains(&id) {
            frame = frame.replacen(&format!("\"id\":{id}"), &format!("\"id\":{}", id + 1000), 1);
        }
        if args.truncate_at.contains(&id) {
            frame.truncate(frame.len() / 2);
        }
        if writeln!(out, "{frame}").and_then(|_| out.flush()).is_err() {
            break;
        }
    }
}
