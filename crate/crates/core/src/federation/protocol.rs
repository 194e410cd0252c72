//! Wire protocol: JSON messages in length-prefixed frames.
//!
//! Each frame is a 4-byte big-endian payload length followed by one UTF-8
//! JSON object. Every message carries the protocol version and the sending
//! (or addressed) federate's id; the `kind` field selects the body.

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};

use crate::fom::{self, AttributeRef, ObjectClass, Visibility};
use crate::ledger::Publication;
use crate::objectives::RoleScores;
use crate::scenario::Role;

pub const PROTOCOL_VERSION: u32 = 1;

/// Frames larger than this are rejected as malformed.
pub const MAX_FRAME_BYTES: usize = 64 * 1024 * 1024;

/// Federate id the coordinator uses for the societal model it hosts.
pub const SOCIETAL_ID: &str = "societal";

/// Federate id on messages the coordinator originates.
pub const COORDINATOR_ID: &str = "coordinator";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FederateRole {
    Agriculture,
    Water,
    Energy,
    Observer,
}

impl FederateRole {
    pub fn role(self) -> Option<Role> {
        match self {
            FederateRole::Agriculture => Some(Role::Agriculture),
            FederateRole::Water => Some(Role::Water),
            FederateRole::Energy => Some(Role::Energy),
            FederateRole::Observer => None,
        }
    }
}

impl From<Role> for FederateRole {
    fn from(r: Role) -> Self {
        match r {
            Role::Agriculture => FederateRole::Agriculture,
            Role::Water => FederateRole::Water,
            Role::Energy => FederateRole::Energy,
        }
    }
}

/// One published attribute value, stamped with its publisher and sub-step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AttributeUpdate {
    pub federate_id: String,
    pub class_name: String,
    pub object_name: String,
    pub attribute: String,
    pub value: f64,
    pub units: String,
    pub year: i32,
    pub iteration: u32,
}

impl AttributeUpdate {
    pub fn from_publication(federate_id: &str, year: i32, iteration: u32, p: &Publication) -> Self {
        let units = fom::lookup(p.class, p.attribute).map(|d| d.units).unwrap_or("");
        Self {
            federate_id: federate_id.to_string(),
            class_name: p.class.as_str().to_string(),
            object_name: p.object.clone(),
            attribute: p.attribute.to_string(),
            value: p.value,
            units: units.to_string(),
            year,
            iteration,
        }
    }

    pub fn attribute_ref(&self) -> AttributeRef {
        AttributeRef {
            class_name: self.class_name.clone(),
            attribute: self.attribute.clone(),
        }
    }

    /// The object-model definition, when class, attribute and units all
    /// match it.
    pub fn definition(&self) -> Option<&'static fom::AttributeDef> {
        let def = fom::lookup(ObjectClass::parse(&self.class_name)?, &self.attribute)?;
        (def.units == self.units).then_some(def)
    }

    pub fn is_public(&self) -> bool {
        self.definition().map(|d| d.visibility == Visibility::Public).unwrap_or(false)
    }

    pub fn to_publication(&self) -> Option<Publication> {
        let def = self.definition()?;
        Some(Publication::new(def.class, def.name, self.object_name.clone(), self.value))
    }

    /// Delivery order: publisher, object, attribute, then class.
    pub fn sort_key(&self) -> (&str, &str, &str, &str) {
        (&self.federate_id, &self.object_name, &self.attribute, &self.class_name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    StaleUpdate,
    OutOfOrder,
    RoleClaimed,
    UndeclaredAttribute,
    VersionMismatch,
    GateClosed,
    NotJoined,
    Malformed,
}

/// Outcome of a completed execution as seen by one recipient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunSummary {
    pub year: i32,
    /// Numeric joint objective, present only under quantitative visibility.
    pub joint: Option<f64>,
    /// Qualitative joint level ("low", "medium", "high").
    pub joint_level: String,
    /// The recipient's own role scores; absent for observers.
    pub scores: Option<RoleScores>,
    pub budget_violation_years: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Body {
    #[serde(rename_all = "camelCase")]
    Join {
        role: FederateRole,
        publications: Vec<AttributeRef>,
        subscriptions: Vec<AttributeRef>,
    },
    #[serde(rename_all = "camelCase")]
    JoinAck { role: FederateRole, start: i32, end: i32, iterations: u32 },
    Init,
    Execute,
    #[serde(rename_all = "camelCase")]
    GateState {
        initialized: Vec<Role>,
        execute_requested: Vec<Role>,
        open: bool,
        running: bool,
        exchanges: u32,
        summary: Option<RunSummary>,
    },
    #[serde(rename_all = "camelCase")]
    AttrUpdate { year: i32, iteration: u32, updates: Vec<AttributeUpdate> },
    #[serde(rename_all = "camelCase")]
    TimeRequest { year: i32, iteration: u32 },
    #[serde(rename_all = "camelCase")]
    TimeGrant { year: i32, iteration: u32, updates: Vec<AttributeUpdate> },
    Resign,
    #[serde(rename_all = "camelCase")]
    Error { code: ErrorCode, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Message {
    pub protocol_version: u32,
    pub federate_id: String,
    #[serde(flatten)]
    pub body: Body,
}

impl Message {
    pub fn new(federate_id: &str, body: Body) -> Self {
        Self {
            protocol_version: PROTOCOL_VERSION,
            federate_id: federate_id.to_string(),
            body,
        }
    }

    pub fn error(federate_id: &str, code: ErrorCode, message: impl Into<String>) -> Self {
        Self::new(
            federate_id,
            Body::Error {
                code,
                message: message.into(),
            },
        )
    }

    pub fn kind(&self) -> &'static str {
        match self.body {
            Body::Join { .. } => "join",
            Body::JoinAck { .. } => "join_ack",
            Body::Init => "init",
            Body::Execute => "execute",
            Body::GateState { .. } => "gate_state",
            Body::AttrUpdate { .. } => "attr_update",
            Body::TimeRequest { .. } => "time_request",
            Body::TimeGrant { .. } => "time_grant",
            Body::Resign => "resign",
            Body::Error { .. } => "error",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("messages always serialize")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Message, serde_json::Error> {
        serde_json::from_slice(bytes)
    }
}

/// Writes one length-prefixed frame.
pub fn write_frame(w: &mut impl Write, payload: &[u8]) -> io::Result<()> {
    let len = u32::try_from(payload.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

/// Reads one frame; `Ok(None)` on a clean end of stream.
pub fn read_frame(r: &mut impl Read) -> io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME_BYTES {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("frame of {len} bytes exceeds limit")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(Some(buf))
}

pub fn send(w: &mut impl Write, msg: &Message) -> io::Result<()> {
    write_frame(w, msg.to_json().as_bytes())
}
