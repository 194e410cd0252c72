//! Design sessions: an append-only decision log, process metrics, replay
//! and archive export.
//!
//! A log is newline-delimited JSON: a header line naming the session,
//! variant and scenario digest, then one event per line. Executions store
//! the objective snapshot they produced, so replay can verify that
//! re-running the logged decisions reproduces every snapshot exactly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::federation::flowfile::{run_local, Boundary, FlowDocument, FlowFileError};
use crate::fom::CAPITAL_EXPENSES;
use crate::kernel::{run_mono, KernelError};
use crate::ledger::FlowLedger;
use crate::objectives::{Account, Evaluator, ObjectiveError, RoleScores};
use crate::scenario::{ElementInstance, Plan, Role, Scenario, ScenarioError};
use crate::sector::SimError;

pub const LOG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Synchronous co-simulation, numeric joint objective.
    #[serde(rename = "1A")]
    V1A,
    /// Synchronous co-simulation, qualitative joint objective.
    #[serde(rename = "1B")]
    V1B,
    /// Asynchronous exchange of static flow files.
    #[serde(rename = "2")]
    V2,
}

impl Variant {
    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "1A" | "1a" => Some(Variant::V1A),
            "1B" | "1b" => Some(Variant::V1B),
            "2" => Some(Variant::V2),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::V1A => "1A",
            Variant::V1B => "1B",
            Variant::V2 => "2",
        }
    }

    pub fn is_synchronous(self) -> bool {
        self != Variant::V2
    }
}

/// What one execution produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExecutionSnapshot {
    /// Evaluation year (the horizon end).
    pub year: i32,
    /// Scores of every role for joint executions; of the executing role for
    /// local ones.
    pub scores: BTreeMap<Role, RoleScores>,
    /// Joint objective, available only from joint executions.
    pub joint: Option<f64>,
    /// Years whose capital expenses exceed the budget, over the sectors the
    /// execution covered.
    pub budget_violation_years: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum EventKind {
    ElementAdded { role: Role, element: ElementInstance },
    ElementEdited { role: Role, element: ElementInstance },
    #[serde(rename_all = "camelCase")]
    ElementRemoved { role: Role, element_id: String },
    Initialize { role: Role },
    /// `role` is absent for a joint execution.
    Execute {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        role: Option<Role>,
        snapshot: ExecutionSnapshot,
    },
    Export { role: Role },
    Import { role: Role, from: Vec<Role> },
    Close,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Milliseconds since the session opened.
    pub t: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogHeader {
    pub format_version: u32,
    pub session_id: String,
    pub variant: Variant,
    pub scenario_digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub header: LogHeader,
    pub events: Vec<Event>,
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("session is closed")]
    Closed,
    #[error("event at {t} ms precedes the previous event at {last} ms")]
    TimeRegression { t: u64, last: u64 },
    #[error("{0}")]
    InvalidEvent(String),
    #[error("{operation} is not available in variant {variant}")]
    WrongVariant { operation: &'static str, variant: &'static str },
    #[error("log format version {found} is not supported (expected {LOG_FORMAT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("log was recorded against scenario {logged}, not {given}")]
    ScenarioMismatch { logged: String, given: String },
    #[error("malformed log line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("replayed execution at event {index} differs from the logged snapshot")]
    ReplayMismatch { index: usize },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    FlowFile(#[from] FlowFileError),
}

impl SessionLog {
    pub fn new(session_id: &str, variant: Variant, scenario: &Scenario) -> Self {
        Self {
            header: LogHeader {
                format_version: LOG_FORMAT_VERSION,
                session_id: session_id.to_string(),
                variant,
                scenario_digest: scenario.digest(),
            },
            events: Vec::new(),
        }
    }

    pub fn is_closed(&self) -> bool {
        matches!(self.events.last(), Some(Event { kind: EventKind::Close, .. }))
    }

    /// Appends an event, enforcing an open session and strictly increasing
    /// timestamps.
    pub fn record(&mut self, event: Event) -> Result<(), SessionError> {
        if self.is_closed() {
            return Err(SessionError::Closed);
        }
        if let Some(last) = self.events.last() {
            if event.t <= last.t {
                return Err(SessionError::TimeRegression { t: event.t, last: last.t });
            }
        }
        self.events.push(event);
        Ok(())
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(text: &str) -> Result<SessionLog, SessionError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(SessionError::Malformed {
            line: 1,
            reason: "missing header".into(),
        })?;
        let header: LogHeader = serde_json::from_str(first).map_err(|e| SessionError::Malformed {
            line: 1,
            reason: e.to_string(),
        })?;
        if header.format_version != LOG_FORMAT_VERSION {
            return Err(SessionError::VersionMismatch {
                found: header.format_version,
            });
        }
        let mut log = SessionLog {
            header,
            events: Vec::new(),
        };
        for (i, line) in lines {
            let event: Event = serde_json::from_str(line).map_err(|e| SessionError::Malformed {
                line: i + 1,
                reason: e.to_string(),
            })?;
            log.record(event)?;
        }
        Ok(log)
    }

    /// Joint or local executions with their event timestamps.
    pub fn executions(&self) -> impl Iterator<Item = (u64, Option<Role>, &ExecutionSnapshot)> {
        self.events.iter().filter_map(|e| match &e.kind {
            EventKind::Execute { role, snapshot } => Some((e.t, *role, snapshot)),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProcessMetrics {
    pub num_exchanges: u32,
    /// Local simulation executions per role (asynchronous sessions).
    pub simulations: BTreeMap<Role, u32>,
    pub joint_executions: u32,
    pub budget_violation_years: Vec<i32>,
    /// Latest scores per role and the latest joint objective.
    pub final_scores: BTreeMap<Role, RoleScores>,
    pub final_joint: Option<f64>,
}

/// Process variables of a session. Synchronous sessions count one exchange
/// per joint execution; asynchronous ones count one each time all three
/// roles have exported a fresh flow file since the previous exchange.
pub fn compute_process_metrics(log: &SessionLog) -> ProcessMetrics {
    let mut simulations: BTreeMap<Role, u32> = Role::ALL.iter().map(|&r| (r, 0)).collect();
    let mut joint_executions = 0;
    let mut fresh = BTreeSet::new();
    let mut refreshes = 0;
    let mut final_scores = BTreeMap::new();
    let mut final_joint = None;
    let mut last_violations: BTreeMap<Option<Role>, Vec<i32>> = BTreeMap::new();
    for e in &log.events {
        match &e.kind {
            EventKind::Execute { role, snapshot } => {
                match role {
                    Some(r) => *simulations.entry(*r).or_default() += 1,
                    None => {
                        joint_executions += 1;
                        final_joint = snapshot.joint;
                        last_violations.clear();
                    }
                }
                final_scores.extend(snapshot.scores.iter().map(|(&r, &s)| (r, s)));
                last_violations.insert(*role, snapshot.budget_violation_years.clone());
            }
            EventKind::Export { role } => {
                fresh.insert(*role);
                if fresh.len() == Role::ALL.len() {
                    refreshes += 1;
                    fresh.clear();
                }
            }
            _ => {}
        }
    }
    let num_exchanges = if log.header.variant.is_synchronous() {
        joint_executions
    } else {
        refreshes
    };
    let budget_violation_years = last_violations
        .into_values()
        .flatten()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    ProcessMetrics {
        num_exchanges,
        simulations,
        joint_executions,
        budget_violation_years,
        final_scores,
        final_joint,
    }
}

/// Capital-budget violations over the given sector accounts.
fn violations(scenario: &Scenario, ledger: &FlowLedger, accounts: &[Account]) -> Vec<i32> {
    let last = scenario.horizon.iterations_per_year;
    scenario
        .horizon
        .years()
        .filter(|&y| {
            let capital: f64 = accounts
                .iter()
                .flat_map(|a| a.classes().iter())
                .map(|&c| ledger.sum(y, last, c, CAPITAL_EXPENSES))
                .sum();
            capital > scenario.budget_limit
        })
        .collect()
}

fn role_scores(ev: &Evaluator, role: Role, t: i32) -> Result<RoleScores, ObjectiveError> {
    let security = match role {
        Role::Agriculture => ev.food_security(t)?,
        Role::Water => ev.aquifer_security(t)?,
        Role::Energy => ev.reservoir_security(t)?,
    };
    Ok(RoleScores {
        security,
        financial: ev.financial_security(role.into(), t)?,
        political: ev.political_power(role.into(), t)?,
    })
}

/// A live session: the log plus the plan and file-exchange state needed to
/// run executions.
pub struct Session {
    log: SessionLog,
    scenario: Scenario,
    plans: BTreeMap<Role, Vec<ElementInstance>>,
    local: BTreeMap<Role, FlowLedger>,
    exports: BTreeMap<Role, FlowDocument>,
    boundaries: BTreeMap<Role, Boundary>,
}

impl Session {
    pub fn new(session_id: &str, variant: Variant, scenario: Scenario) -> Self {
        Self {
            log: SessionLog::new(session_id, variant, &scenario),
            scenario,
            plans: BTreeMap::new(),
            local: BTreeMap::new(),
            exports: BTreeMap::new(),
            boundaries: BTreeMap::new(),
        }
    }

    pub fn log(&self) -> &SessionLog {
        &self.log
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn variant(&self) -> Variant {
        self.log.header.variant
    }

    /// The base scenario with every role's planned elements.
    pub fn planned_scenario(&self) -> Result<Scenario, SessionError> {
        let elements = self.plans.values().flatten().cloned().collect();
        Ok(self.scenario.with_plan(&Plan::new(elements))?)
    }

    fn check_open(&self, t: u64) -> Result<(), SessionError> {
        if self.log.is_closed() {
            return Err(SessionError::Closed);
        }
        match self.log.events.last() {
            Some(last) if t <= last.t => Err(SessionError::TimeRegression { t, last: last.t }),
            _ => Ok(()),
        }
    }

    fn check_owner(&self, role: Role, element: &ElementInstance) -> Result<(), SessionError> {
        let template = self.scenario.template(&element.template).ok_or_else(|| {
            SessionError::InvalidEvent(format!("{} uses unknown template {}", element.id, element.template))
        })?;
        if template.sector().role() != role {
            return Err(SessionError::InvalidEvent(format!(
                "{} ({}) does not belong to the {} role",
                element.id,
                element.template,
                role.as_str()
            )));
        }
        Ok(())
    }

    fn position(&self, role: Role, id: &str) -> Option<usize> {
        self.plans.get(&role)?.iter().position(|e| e.id == id)
    }

    pub fn add_element(&mut self, t: u64, role: Role, element: ElementInstance) -> Result<(), SessionError> {
        self.check_open(t)?;
        self.check_owner(role, &element)?;
        let taken = self.scenario.elements.iter().chain(self.plans.values().flatten()).any(|e| e.id == element.id);
        if taken {
            return Err(SessionError::InvalidEvent(format!("element id {} is already used", element.id)));
        }
        self.plans.entry(role).or_default().push(element.clone());
        self.log.record(Event {
            t,
            kind: EventKind::ElementAdded { role, element },
        })
    }

    pub fn edit_element(&mut self, t: u64, role: Role, element: ElementInstance) -> Result<(), SessionError> {
        self.check_open(t)?;
        self.check_owner(role, &element)?;
        let i = self
            .position(role, &element.id)
            .ok_or_else(|| SessionError::InvalidEvent(format!("no planned element {}", element.id)))?;
        self.plans.get_mut(&role).expect("role plan")[i] = element.clone();
        self.log.record(Event {
            t,
            kind: EventKind::ElementEdited { role, element },
        })
    }

    pub fn remove_element(&mut self, t: u64, role: Role, element_id: &str) -> Result<(), SessionError> {
        self.check_open(t)?;
        let i = self
            .position(role, element_id)
            .ok_or_else(|| SessionError::InvalidEvent(format!("no planned element {element_id}")))?;
        self.plans.get_mut(&role).expect("role plan").remove(i);
        self.log.record(Event {
            t,
            kind: EventKind::ElementRemoved {
                role,
                element_id: element_id.to_string(),
            },
        })
    }

    pub fn initialize(&mut self, t: u64, role: Role) -> Result<(), SessionError> {
        self.check_open(t)?;
        self.log.record(Event {
            t,
            kind: EventKind::Initialize { role },
        })
    }

    /// Runs a joint execution (`role == None`, synchronous variants) or a
    /// local one (asynchronous variant) and logs its snapshot.
    pub fn execute(&mut self, t: u64, role: Option<Role>) -> Result<ExecutionSnapshot, SessionError> {
        self.check_open(t)?;
        let variant = self.variant();
        let snapshot = match (role, variant.is_synchronous()) {
            (None, true) => self.joint_execution()?,
            (Some(r), false) => self.local_execution(r)?,
            (None, false) => {
                return Err(SessionError::WrongVariant {
                    operation: "joint execution",
                    variant: variant.as_str(),
                })
            }
            (Some(_), true) => {
                return Err(SessionError::WrongVariant {
                    operation: "local execution",
                    variant: variant.as_str(),
                })
            }
        };
        self.log.record(Event {
            t,
            kind: EventKind::Execute {
                role,
                snapshot: snapshot.clone(),
            },
        })?;
        Ok(snapshot)
    }

    fn joint_execution(&mut self) -> Result<ExecutionSnapshot, SessionError> {
        let scenario = self.planned_scenario()?;
        let run = run_mono(&scenario)?;
        let end = scenario.horizon.end;
        let report = run.report(end).cloned();
        Ok(ExecutionSnapshot {
            year: end,
            scores: report
                .as_ref()
                .map(|r| Role::ALL.iter().map(|&role| (role, *r.role(role))).collect())
                .unwrap_or_default(),
            joint: report.map(|r| r.joint),
            budget_violation_years: run.budget_violations(),
        })
    }

    fn local_execution(&mut self, role: Role) -> Result<ExecutionSnapshot, SessionError> {
        let scenario = self.planned_scenario()?;
        let boundary = self.boundaries.get(&role).cloned().unwrap_or_default();
        let ledger = run_local(&scenario, role, &boundary)?;
        let end = scenario.horizon.end;
        let mut scores = BTreeMap::new();
        if end >= scenario.horizon.plan_start {
            scores.insert(role, role_scores(&Evaluator::new(&scenario, &ledger), role, end)?);
        }
        let snapshot = ExecutionSnapshot {
            year: end,
            scores,
            joint: None,
            budget_violation_years: violations(&scenario, &ledger, &[Account::from(role)]),
        };
        self.local.insert(role, ledger);
        Ok(snapshot)
    }

    /// Exports the role's latest local run as a flow document.
    pub fn export(&mut self, t: u64, role: Role) -> Result<FlowDocument, SessionError> {
        self.check_open(t)?;
        if self.variant().is_synchronous() {
            return Err(SessionError::WrongVariant {
                operation: "flow export",
                variant: self.variant().as_str(),
            });
        }
        let ledger = self
            .local
            .get(&role)
            .ok_or_else(|| SessionError::InvalidEvent(format!("{} has no completed run to export", role.as_str())))?;
        let doc = FlowDocument::export(&self.planned_scenario()?, role, ledger);
        self.exports.insert(role, doc.clone());
        self.log.record(Event {
            t,
            kind: EventKind::Export { role },
        })?;
        Ok(doc)
    }

    /// Replaces the role's boundary with the latest exports of `from`.
    pub fn import(&mut self, t: u64, role: Role, from: &[Role]) -> Result<(), SessionError> {
        self.check_open(t)?;
        let docs = from
            .iter()
            .map(|r| {
                self.exports
                    .get(r)
                    .cloned()
                    .ok_or_else(|| SessionError::InvalidEvent(format!("{} has not exported a flow file", r.as_str())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let boundary = Boundary::import(&self.scenario, role, &docs)?;
        self.boundaries.insert(role, boundary);
        self.log.record(Event {
            t,
            kind: EventKind::Import {
                role,
                from: from.to_vec(),
            },
        })
    }

    pub fn close(&mut self, t: u64) -> Result<(), SessionError> {
        self.check_open(t)?;
        self.log.record(Event { t, kind: EventKind::Close })
    }

    pub fn metrics(&self) -> ProcessMetrics {
        compute_process_metrics(&self.log)
    }
}

/// Re-executes a log against its scenario and returns every execution
/// snapshot, failing if any differs from the logged one.
pub fn replay(log: &SessionLog, scenario: &Scenario) -> Result<Vec<ExecutionSnapshot>, SessionError> {
    if log.header.format_version != LOG_FORMAT_VERSION {
        return Err(SessionError::VersionMismatch {
            found: log.header.format_version,
        });
    }
    let given = scenario.digest();
    if given != log.header.scenario_digest {
        return Err(SessionError::ScenarioMismatch {
            logged: log.header.scenario_digest.clone(),
            given,
        });
    }
    let mut s = Session::new(&log.header.session_id, log.header.variant, scenario.clone());
    let mut snapshots = Vec::new();
    for (index, e) in log.events.iter().enumerate() {
        match &e.kind {
            EventKind::ElementAdded { role, element } => s.add_element(e.t, *role, element.clone())?,
            EventKind::ElementEdited { role, element } => s.edit_element(e.t, *role, element.clone())?,
            EventKind::ElementRemoved { role, element_id } => s.remove_element(e.t, *role, element_id)?,
            EventKind::Initialize { role } => s.initialize(e.t, *role)?,
            EventKind::Execute { role, snapshot } => {
                let fresh = s.execute(e.t, *role)?;
                if fresh != *snapshot {
                    return Err(SessionError::ReplayMismatch { index });
                }
                snapshots.push(fresh);
            }
            EventKind::Export { role } => {
                s.export(e.t, *role)?;
            }
            EventKind::Import { role, from } => s.import(e.t, *role, from)?,
            EventKind::Close => s.close(e.t)?,
        }
    }
    Ok(snapshots)
}

/// Per-execution objective table.
pub fn objectives_csv(log: &SessionLog) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "execIndex",
        "timestamp",
        "role",
        "agriculture",
        "water",
        "energy",
        "joint",
        "budgetViolationYears",
    ])
    .expect("in-memory write");
    for (i, (t, role, s)) in log.executions().enumerate() {
        let score = |r: Role| s.scores.get(&r).map(|x| x.objective().to_string()).unwrap_or_default();
        let years: Vec<String> = s.budget_violation_years.iter().map(|y| y.to_string()).collect();
        w.write_record([
            (i + 1).to_string(),
            t.to_string(),
            role.map(|r| r.as_str().to_string()).unwrap_or_else(|| "joint".into()),
            score(Role::Agriculture),
            score(Role::Water),
            score(Role::Energy),
            s.joint.map(|j| j.to_string()).unwrap_or_default(),
            years.join(";"),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 output")
}

/// Builds the session archive: scenario, event log and objective table.
pub fn export_archive(log: &SessionLog, scenario: &Scenario) -> std::io::Result<Vec<u8>> {
    let mut builder = tar::Builder::new(Vec::new());
    let files = [
        ("scenario.json", scenario.to_json()),
        ("session.ndjson", log.to_ndjson()),
        ("objectives.csv", objectives_csv(log)),
    ];
    for (name, body) in files {
        let mut header = tar::Header::new_gnu();
        header.set_size(body.len() as u64);
        header.set_mode(0o644);
        header.set_mtime(0);
        header.set_cksum();
        builder.append_data(&mut header, name, body.as_bytes())?;
    }
    builder.into_inner()
}
