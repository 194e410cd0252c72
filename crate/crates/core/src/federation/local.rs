//! In-process federation: a deterministic FIFO pump between a coordinator
//! and federate drivers, with an optional byte-level transcript.

use std::collections::VecDeque;

use super::coordinator::{ConnId, Coordinator};
use super::driver::{DriverError, FederateDriver};
use super::protocol::Message;

/// One frame crossing the coordinator boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    /// Federate to coordinator.
    In(ConnId, String),
    /// Coordinator to federate.
    Out(ConnId, String),
}

impl Frame {
    /// Transcript line: `> conn json` inbound, `< conn json` outbound.
    pub fn line(&self) -> String {
        match self {
            Frame::In(c, j) => format!("> {c} {j}"),
            Frame::Out(c, j) => format!("< {c} {j}"),
        }
    }

    pub fn parse(line: &str) -> Option<Frame> {
        let (dir, rest) = line.split_once(' ')?;
        let (conn, json) = rest.split_once(' ')?;
        let conn = conn.parse().ok()?;
        match dir {
            ">" => Some(Frame::In(conn, json.to_string())),
            "<" => Some(Frame::Out(conn, json.to_string())),
            _ => None,
        }
    }
}

/// Runs drivers against the coordinator until every driver is done.
/// Connection ids are the drivers' positions.
pub fn pump(coordinator: &mut Coordinator, drivers: &mut [FederateDriver], mut transcript: Option<&mut Vec<Frame>>) -> Result<(), DriverError> {
    let mut queue: VecDeque<(ConnId, Message)> = drivers
        .iter()
        .enumerate()
        .map(|(i, d)| (i as ConnId, d.join()))
        .collect();
    while let Some((conn, msg)) = queue.pop_front() {
        if let Some(t) = transcript.as_deref_mut() {
            t.push(Frame::In(conn, msg.to_json()));
        }
        for o in coordinator.handle(conn, msg) {
            if let Some(t) = transcript.as_deref_mut() {
                t.push(Frame::Out(o.conn, o.message.to_json()));
            }
            let driver = &mut drivers[o.conn as usize];
            if driver.is_done() {
                continue;
            }
            for reply in driver.on_message(&o.message)? {
                queue.push_back((o.conn, reply));
            }
        }
    }
    Ok(())
}

/// Replays the inbound frames of a transcript and returns every frame the
/// coordinator emits, interleaved as they occur.
pub fn replay(coordinator: &mut Coordinator, frames: &[Frame]) -> Vec<Frame> {
    let mut out = Vec::new();
    for f in frames {
        if let Frame::In(conn, json) = f {
            out.push(f.clone());
            match Message::from_json(json.as_bytes()) {
                Ok(msg) => {
                    for o in coordinator.handle(*conn, msg) {
                        out.push(Frame::Out(o.conn, o.message.to_json()));
                    }
                }
                Err(e) => out.push(Frame::Out(
                    *conn,
                    Message::error("", super::protocol::ErrorCode::Malformed, e.to_string()).to_json(),
                )),
            }
        }
    }
    out
}
