//! The coordinator: a single-threaded state machine owning membership, the
//! initialize/execute gate, the time barrier and the flow ledger.
//!
//! Inputs are `(connection, message)` pairs; outputs are addressed frames.
//! The coordinator hosts the societal model itself and closes years with
//! the same routine as the monolithic kernel, so a federated run reproduces
//! the single-process ledger exactly.

use std::collections::{BTreeMap, BTreeSet};

use log::{debug, info, warn};

use super::protocol::{AttributeUpdate, Body, ErrorCode, FederateRole, Message, RunSummary, COORDINATOR_ID, PROTOCOL_VERSION, SOCIETAL_ID};
use crate::fom::{self, AttributeRef, Visibility};
use crate::kernel::{self, RunResult, YearSummary};
use crate::ledger::FlowLedger;
use crate::scenario::{JointVisibility, Role, Scenario};
use crate::societal::{self, CurrencyStock};

pub type ConnId = u64;

#[derive(Debug, Clone, PartialEq)]
pub struct Outbound {
    pub conn: ConnId,
    pub message: Message,
}

#[derive(Debug, Clone)]
struct Member {
    federate_id: String,
    role: FederateRole,
    publications: BTreeSet<AttributeRef>,
    subscriptions: BTreeSet<AttributeRef>,
}

/// Key under which undelivered updates wait: a later value replaces an
/// earlier one, exactly as an inbox would.
type PendingKey = (String, String, String);

struct ActiveRun {
    /// The sub-step most recently granted, if any.
    granted: Option<(i32, u32)>,
    /// The only sub-step a federate may request next.
    next: (i32, u32),
    requested: BTreeSet<Role>,
    ledger: FlowLedger,
    currency: CurrencyStock,
    years: Vec<YearSummary>,
    pending: BTreeMap<Role, BTreeMap<PendingKey, AttributeUpdate>>,
}

pub struct Coordinator {
    scenario: Scenario,
    members: BTreeMap<ConnId, Member>,
    initialized: BTreeSet<Role>,
    execute_requested: BTreeSet<Role>,
    run: Option<ActiveRun>,
    exchanges: u32,
    completed: Vec<RunResult>,
}

/// Qualitative band for the joint objective.
pub fn joint_level(joint: f64) -> &'static str {
    if joint < 1000.0 / 3.0 {
        "low"
    } else if joint < 2000.0 / 3.0 {
        "medium"
    } else {
        "high"
    }
}

fn next_substep(year: i32, iteration: u32, per_year: u32) -> (i32, u32) {
    if iteration < per_year {
        (year, iteration + 1)
    } else {
        (year + 1, 1)
    }
}

impl Coordinator {
    /// The scenario supplies the horizon, societal parameters, budget and
    /// objective parameters; role plans stay with the federates.
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            members: BTreeMap::new(),
            initialized: BTreeSet::new(),
            execute_requested: BTreeSet::new(),
            run: None,
            exchanges: 0,
            completed: Vec::new(),
        }
    }

    /// Completed executions, counting one data exchange each.
    pub fn exchanges(&self) -> u32 {
        self.exchanges
    }

    pub fn completed(&self) -> &[RunResult] {
        &self.completed
    }

    pub fn into_completed(self) -> Vec<RunResult> {
        self.completed
    }

    pub fn is_running(&self) -> bool {
        self.run.is_some()
    }

    /// Number of connected role federates (observers excluded).
    pub fn role_members(&self) -> usize {
        self.members.values().filter(|m| m.role.role().is_some()).count()
    }

    fn gate_open(&self) -> bool {
        self.initialized.len() == Role::ALL.len()
    }

    fn conn_of(&self, role: Role) -> Option<ConnId> {
        self.members
            .iter()
            .find(|(_, m)| m.role.role() == Some(role))
            .map(|(&c, _)| c)
    }

    fn gate_state(&self, summary: Option<RunSummary>) -> Body {
        Body::GateState {
            initialized: self.initialized.iter().copied().collect(),
            execute_requested: self.execute_requested.iter().copied().collect(),
            open: self.gate_open(),
            running: self.run.is_some(),
            exchanges: self.exchanges,
            summary,
        }
    }

    fn broadcast_gate(&self, out: &mut Vec<Outbound>) {
        for (&conn, m) in &self.members {
            out.push(Outbound {
                conn,
                message: Message::new(&m.federate_id, self.gate_state(None)),
            });
        }
    }

    fn reject(conn: ConnId, id: &str, code: ErrorCode, message: String, out: &mut Vec<Outbound>) {
        warn!("rejecting {id}: {message}");
        out.push(Outbound {
            conn,
            message: Message::error(id, code, message),
        });
    }

    /// Handles one inbound message and returns the frames to send.
    pub fn handle(&mut self, conn: ConnId, msg: Message) -> Vec<Outbound> {
        let mut out = Vec::new();
        if msg.protocol_version != PROTOCOL_VERSION {
            let text = format!(
                "protocol version {} is not supported (expected {PROTOCOL_VERSION})",
                msg.protocol_version
            );
            Self::reject(conn, &msg.federate_id, ErrorCode::VersionMismatch, text, &mut out);
            return out;
        }
        if let Body::Join {
            role,
            publications,
            subscriptions,
        } = msg.body
        {
            self.join(conn, msg.federate_id, role, publications, subscriptions, &mut out);
            return out;
        }
        let Some(member) = self.members.get(&conn).cloned() else {
            let text = format!("{} must join before sending {}", msg.federate_id, msg.kind());
            Self::reject(conn, &msg.federate_id, ErrorCode::NotJoined, text, &mut out);
            return out;
        };
        let id = member.federate_id.clone();
        if msg.federate_id != id {
            let text = format!("connection belongs to {id}, not {}", msg.federate_id);
            Self::reject(conn, &id, ErrorCode::Malformed, text, &mut out);
            return out;
        }
        match (msg.body, member.role.role()) {
            (Body::Resign, _) => self.leave(conn, &mut out),
            (Body::Init, Some(role)) => self.init(conn, &id, role, &mut out),
            (Body::Execute, Some(role)) => self.execute(conn, &id, role, &mut out),
            (Body::AttrUpdate { year, iteration, updates }, Some(role)) => {
                self.publish(conn, &member, role, year, iteration, updates, &mut out)
            }
            (Body::TimeRequest { year, iteration }, Some(role)) => {
                self.time_request(conn, &id, role, year, iteration, &mut out)
            }
            (body, _) => {
                let kind = Message::new(&id, body).kind();
                let text = format!("{kind} is not accepted from {id} ({:?})", member.role);
                Self::reject(conn, &id, ErrorCode::Malformed, text, &mut out);
            }
        }
        out
    }

    /// Treats a dropped connection as a resignation.
    pub fn disconnect(&mut self, conn: ConnId) -> Vec<Outbound> {
        let mut out = Vec::new();
        if self.members.contains_key(&conn) {
            self.leave(conn, &mut out);
        }
        out
    }

    fn join(
        &mut self,
        conn: ConnId,
        id: String,
        role: FederateRole,
        publications: Vec<AttributeRef>,
        subscriptions: Vec<AttributeRef>,
        out: &mut Vec<Outbound>,
    ) {
        if let Some(m) = self.members.get(&conn) {
            let text = format!("connection already joined as {}", m.federate_id);
            return Self::reject(conn, &id, ErrorCode::RoleClaimed, text, out);
        }
        if role != FederateRole::Observer && self.members.values().any(|m| m.role == role) {
            let text = format!("role {role:?} is already claimed");
            return Self::reject(conn, &id, ErrorCode::RoleClaimed, text, out);
        }
        if id.is_empty() || id == SOCIETAL_ID || id == COORDINATOR_ID || self.members.values().any(|m| m.federate_id == id) {
            let text = format!("federate id {id:?} is unavailable");
            return Self::reject(conn, &id, ErrorCode::RoleClaimed, text, out);
        }
        let allowed = role.role().map(fom::publications).unwrap_or_default();
        if let Some(bad) = publications.iter().find(|p| !allowed.contains(p)) {
            let text = format!("{role:?} may not publish {}/{}", bad.class_name, bad.attribute);
            return Self::reject(conn, &id, ErrorCode::UndeclaredAttribute, text, out);
        }
        let public = |s: &AttributeRef| s.resolve().is_some_and(|d| d.visibility == Visibility::Public);
        if let Some(bad) = subscriptions.iter().find(|s| !public(s)) {
            let text = format!("{}/{} is not a public attribute", bad.class_name, bad.attribute);
            return Self::reject(conn, &id, ErrorCode::UndeclaredAttribute, text, out);
        }
        info!("{id} joined as {role:?}");
        self.members.insert(
            conn,
            Member {
                federate_id: id.clone(),
                role,
                publications: publications.into_iter().collect(),
                subscriptions: subscriptions.into_iter().collect(),
            },
        );
        let h = &self.scenario.horizon;
        out.push(Outbound {
            conn,
            message: Message::new(
                &id,
                Body::JoinAck {
                    role,
                    start: h.start,
                    end: h.end,
                    iterations: h.iterations_per_year,
                },
            ),
        });
        self.broadcast_gate(out);
    }

    fn leave(&mut self, conn: ConnId, out: &mut Vec<Outbound>) {
        let Some(m) = self.members.remove(&conn) else { return };
        info!("{} resigned", m.federate_id);
        if let Some(role) = m.role.role() {
            self.initialized.remove(&role);
            self.execute_requested.remove(&role);
            if self.run.take().is_some() {
                warn!("execution aborted: {} left mid-run", m.federate_id);
            }
            self.broadcast_gate(out);
        }
    }

    fn init(&mut self, conn: ConnId, id: &str, role: Role, out: &mut Vec<Outbound>) {
        if self.run.is_some() {
            return Self::reject(conn, id, ErrorCode::GateClosed, "cannot initialize during an execution".into(), out);
        }
        self.initialized.insert(role);
        self.broadcast_gate(out);
    }

    fn execute(&mut self, conn: ConnId, id: &str, role: Role, out: &mut Vec<Outbound>) {
        if self.run.is_some() || !self.gate_open() {
            let text = format!(
                "execute rejected: {} of {} roles initialized",
                self.initialized.len(),
                Role::ALL.len()
            );
            Self::reject(conn, id, ErrorCode::GateClosed, text, out);
            out.push(Outbound {
                conn,
                message: Message::new(id, self.gate_state(None)),
            });
            return;
        }
        self.execute_requested.insert(role);
        if self.execute_requested.len() == Role::ALL.len() {
            info!("execution {} begins", self.exchanges + 1);
            self.run = Some(ActiveRun {
                granted: None,
                next: (self.scenario.horizon.start, 1),
                requested: BTreeSet::new(),
                ledger: FlowLedger::new(),
                currency: CurrencyStock::new(self.scenario.initial_currency),
                years: Vec::new(),
                pending: BTreeMap::new(),
            });
        }
        self.broadcast_gate(out);
    }

    /// Records updates in the ledger, queues them for subscribers and
    /// forwards public ones to observers.
    fn route(&mut self, updates: Vec<AttributeUpdate>, out: &mut Vec<Outbound>) {
        let Some(run) = self.run.as_mut() else { return };
        let mut observed = Vec::new();
        for u in updates {
            let p = u.to_publication().expect("validated update");
            if let Err(e) = run.ledger.insert(u.year, u.iteration, &p) {
                warn!("ledger rejected {}: {e}", u.attribute);
            }
            let aref = u.attribute_ref();
            for m in self.members.values() {
                if let Some(role) = m.role.role() {
                    if m.subscriptions.contains(&aref) {
                        run.pending
                            .entry(role)
                            .or_default()
                            .insert((u.class_name.clone(), u.object_name.clone(), u.attribute.clone()), u.clone());
                    }
                }
            }
            if u.is_public() {
                observed.push(u);
            }
        }
        observed.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        if observed.is_empty() {
            return;
        }
        let (year, iteration) = (observed[0].year, observed[0].iteration);
        for (&conn, m) in &self.members {
            if m.role == FederateRole::Observer {
                let updates = observed.iter().filter(|u| m.subscriptions.is_empty() || m.subscriptions.contains(&u.attribute_ref())).cloned().collect::<Vec<_>>();
                if !updates.is_empty() {
                    out.push(Outbound {
                        conn,
                        message: Message::new(&m.federate_id, Body::AttrUpdate { year, iteration, updates }),
                    });
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn publish(
        &mut self,
        conn: ConnId,
        member: &Member,
        role: Role,
        year: i32,
        iteration: u32,
        updates: Vec<AttributeUpdate>,
        out: &mut Vec<Outbound>,
    ) {
        let id = &member.federate_id;
        let Some(run) = self.run.as_ref() else {
            return Self::reject(conn, id, ErrorCode::GateClosed, "no execution is running".into(), out);
        };
        let current = run.granted;
        let stale = |y: i32, i: u32| current != Some((y, i));
        if stale(year, iteration) {
            let text = format!("update for ({year}, {iteration}) does not match the current sub-step {current:?}");
            return Self::reject(conn, id, ErrorCode::StaleUpdate, text, out);
        }
        if run.requested.contains(&role) {
            let text = format!("{id} already completed ({year}, {iteration})");
            return Self::reject(conn, id, ErrorCode::StaleUpdate, text, out);
        }
        for u in &updates {
            if stale(u.year, u.iteration) {
                let text = format!("{} stamped ({}, {}) during {current:?}", u.attribute, u.year, u.iteration);
                return Self::reject(conn, id, ErrorCode::StaleUpdate, text, out);
            }
            if u.federate_id != *id {
                let text = format!("update attributed to {} sent by {id}", u.federate_id);
                return Self::reject(conn, id, ErrorCode::Malformed, text, out);
            }
            if u.definition().is_none() || !member.publications.contains(&u.attribute_ref()) {
                let text = format!("{}/{} [{}] is not declared by {id}", u.class_name, u.attribute, u.units);
                return Self::reject(conn, id, ErrorCode::UndeclaredAttribute, text, out);
            }
            if u.to_publication().is_none() || !u.value.is_finite() {
                let text = format!("{}/{} carries an invalid value", u.class_name, u.attribute);
                return Self::reject(conn, id, ErrorCode::Malformed, text, out);
            }
        }
        debug!("{id} published {} updates for ({year}, {iteration})", updates.len());
        self.route(updates, out);
    }

    fn time_request(&mut self, conn: ConnId, id: &str, role: Role, year: i32, iteration: u32, out: &mut Vec<Outbound>) {
        let per_year = self.scenario.horizon.iterations_per_year;
        let Some(run) = self.run.as_mut() else {
            return Self::reject(conn, id, ErrorCode::GateClosed, "no execution is running".into(), out);
        };
        if (year, iteration) != run.next || run.requested.contains(&role) || iteration == 0 || iteration > per_year {
            let text = format!("request for ({year}, {iteration}) is out of order; expected {:?}", run.next);
            return Self::reject(conn, id, ErrorCode::OutOfOrder, text, out);
        }
        run.requested.insert(role);
        if run.requested.len() == Role::ALL.len() {
            self.advance(out);
        }
    }

    /// All roles reached the barrier: close the finished year if any, then
    /// grant the next sub-step or complete the execution.
    fn advance(&mut self, out: &mut Vec<Outbound>) {
        let per_year = self.scenario.horizon.iterations_per_year;
        let end = self.scenario.horizon.end;
        let run = self.run.as_mut().expect("active run");
        let (year, iteration) = run.next;
        if let Some((prev_year, prev_iteration)) = run.granted {
            if prev_iteration == per_year {
                match kernel::close_year(&self.scenario, &run.ledger, prev_year, &mut run.currency) {
                    Ok(summary) => run.years.push(summary),
                    Err(e) => {
                        warn!("execution aborted closing {prev_year}: {e}");
                        let text = format!("closing {prev_year} failed: {e}");
                        self.run = None;
                        for (&conn, m) in &self.members {
                            out.push(Outbound {
                                conn,
                                message: Message::error(&m.federate_id, ErrorCode::Malformed, text.clone()),
                            });
                        }
                        self.execute_requested.clear();
                        self.initialized.clear();
                        self.broadcast_gate(out);
                        return;
                    }
                }
            }
        }
        if year > end {
            return self.complete(out);
        }
        run.granted = Some((year, iteration));
        run.next = next_substep(year, iteration, per_year);
        run.requested.clear();

        let societal = societal::publications(&self.scenario, year)
            .iter()
            .map(|p| AttributeUpdate::from_publication(SOCIETAL_ID, year, iteration, p))
            .collect();
        self.route(societal, out);

        let recipients: Vec<(Role, ConnId)> = Role::ALL
            .into_iter()
            .filter_map(|r| self.conn_of(r).map(|c| (r, c)))
            .collect();
        let run = self.run.as_mut().expect("active run");
        for (role, conn) in recipients {
            let mut updates: Vec<AttributeUpdate> = run.pending.remove(&role).unwrap_or_default().into_values().collect();
            updates.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
            out.push(Outbound {
                conn,
                message: Message::new(&self.members[&conn].federate_id, Body::TimeGrant { year, iteration, updates }),
            });
        }
    }

    fn complete(&mut self, out: &mut Vec<Outbound>) {
        let run = self.run.take().expect("active run");
        self.exchanges += 1;
        self.initialized.clear();
        self.execute_requested.clear();
        let result = RunResult {
            ledger: run.ledger,
            years: run.years,
        };
        info!("execution {} complete", self.exchanges);
        let violations = result.budget_violations();
        let last = result.years.last().and_then(|y| y.report.clone());
        for (&conn, m) in &self.members {
            let summary = last.as_ref().map(|r| RunSummary {
                year: r.year,
                joint: (self.scenario.objectives.joint_visibility == JointVisibility::Quantitative).then_some(r.joint),
                joint_level: joint_level(r.joint).to_string(),
                scores: m.role.role().map(|role| *r.role(role)),
                budget_violation_years: violations.clone(),
            });
            out.push(Outbound {
                conn,
                message: Message::new(&m.federate_id, self.gate_state(summary)),
            });
        }
        self.completed.push(result);
    }
}
