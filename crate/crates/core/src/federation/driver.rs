//! Federate-side protocol driver: wraps one sector federate and answers
//! coordinator messages. It is transport-agnostic; the TCP client and the
//! in-process pump both feed it frames.

use std::collections::VecDeque;

use log::{debug, info};
use thiserror::Error;

use super::protocol::{AttributeUpdate, Body, ErrorCode, FederateRole, Message, RunSummary};
use crate::fom;
use crate::kernel;
use crate::scenario::{Role, Scenario};
use crate::sector::{Inbox, SectorFederate, SimError};

#[derive(Debug, Error, PartialEq)]
pub enum DriverError {
    #[error("coordinator rejected {federate}: {code:?}: {message}")]
    Rejected {
        federate: String,
        code: ErrorCode,
        message: String,
    },
    #[error("unexpected {kind} while {state}")]
    Unexpected { kind: &'static str, state: &'static str },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Restricts a scenario to the elements one role owns, so a federate never
/// holds another role's plan.
pub fn role_scenario(scenario: &Scenario, role: Role) -> Scenario {
    let mut s = scenario.clone();
    s.elements = scenario.elements_for(role);
    s
}

fn build(scenario: &Scenario, role: Role) -> Box<dyn SectorFederate> {
    kernel::federates(scenario)
        .into_iter()
        .find(|f| f.role() == role)
        .expect("every role has a federate")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Joining,
    Initialized,
    ExecuteSent,
    Running,
    Done,
}

pub struct FederateDriver {
    id: String,
    role: Role,
    /// One scenario per execution still to run; the front is current.
    executions: VecDeque<Scenario>,
    federate: Option<Box<dyn SectorFederate>>,
    inbox: Inbox,
    iterations: u32,
    start: i32,
    phase: Phase,
    summaries: Vec<RunSummary>,
}

impl FederateDriver {
    /// A driver that runs one execution per scenario in `executions`, then
    /// resigns.
    pub fn new(id: &str, role: Role, executions: Vec<Scenario>) -> Self {
        Self {
            id: id.to_string(),
            role,
            executions: executions.into_iter().map(|s| role_scenario(&s, role)).collect(),
            federate: None,
            inbox: Inbox::new(),
            iterations: 0,
            start: 0,
            phase: Phase::Joining,
            summaries: Vec::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    /// Summaries received at the end of each completed execution.
    pub fn summaries(&self) -> &[RunSummary] {
        &self.summaries
    }

    fn message(&self, body: Body) -> Message {
        Message::new(&self.id, body)
    }

    /// The opening frame.
    pub fn join(&self) -> Message {
        self.message(Body::Join {
            role: FederateRole::from(self.role),
            publications: fom::publications(self.role),
            subscriptions: fom::subscriptions(self.role),
        })
    }

    fn state(&self) -> &'static str {
        match self.phase {
            Phase::Joining => "joining",
            Phase::Initialized => "initialized",
            Phase::ExecuteSent => "awaiting execution",
            Phase::Running => "running",
            Phase::Done => "done",
        }
    }

    fn unexpected(&self, msg: &Message) -> DriverError {
        DriverError::Unexpected {
            kind: msg.kind(),
            state: self.state(),
        }
    }

    /// Reacts to one coordinator message with the frames to send back.
    pub fn on_message(&mut self, msg: &Message) -> Result<Vec<Message>, DriverError> {
        match &msg.body {
            Body::Error { code, message } => Err(DriverError::Rejected {
                federate: self.id.clone(),
                code: *code,
                message: message.clone(),
            }),
            Body::JoinAck { start, iterations, .. } if self.phase == Phase::Joining => {
                self.start = *start;
                self.iterations = *iterations;
                self.phase = Phase::Initialized;
                Ok(vec![self.message(Body::Init)])
            }
            Body::GateState {
                open,
                running,
                summary,
                ..
            } => self.on_gate(*open, *running, summary.as_ref()),
            Body::TimeGrant { year, iteration, updates } if self.phase == Phase::Running => {
                self.on_grant(*year, *iteration, updates)
            }
            Body::AttrUpdate { .. } => Ok(vec![]),
            _ => Err(self.unexpected(msg)),
        }
    }

    fn on_gate(&mut self, open: bool, running: bool, summary: Option<&RunSummary>) -> Result<Vec<Message>, DriverError> {
        match self.phase {
            Phase::Initialized if open && !running => {
                self.phase = Phase::ExecuteSent;
                Ok(vec![self.message(Body::Execute)])
            }
            Phase::ExecuteSent if running => {
                let scenario = self.executions.front().expect("a pending execution");
                self.federate = Some(build(scenario, self.role));
                self.inbox = Inbox::new();
                self.phase = Phase::Running;
                info!("{} starting execution", self.id);
                Ok(vec![self.message(Body::TimeRequest {
                    year: self.start,
                    iteration: 1,
                })])
            }
            Phase::Running if !running => {
                if let Some(s) = summary {
                    self.summaries.push(s.clone());
                }
                self.federate = None;
                self.executions.pop_front();
                if self.executions.is_empty() {
                    self.phase = Phase::Done;
                    Ok(vec![self.message(Body::Resign)])
                } else {
                    self.phase = Phase::Initialized;
                    Ok(vec![self.message(Body::Init)])
                }
            }
            _ => Ok(vec![]),
        }
    }

    fn on_grant(&mut self, year: i32, iteration: u32, updates: &[AttributeUpdate]) -> Result<Vec<Message>, DriverError> {
        for u in updates {
            if let Some(p) = u.to_publication() {
                self.inbox.set(p.class, p.attribute, &p.object, p.value);
            }
        }
        let federate = self.federate.as_mut().expect("running federate");
        let publications = federate.step(year, iteration, &self.inbox)?;
        if iteration == self.iterations {
            federate.commit_year(year)?;
        }
        debug!("{} stepped ({year}, {iteration})", self.id);
        let updates = publications
            .iter()
            .map(|p| AttributeUpdate::from_publication(&self.id, year, iteration, p))
            .collect();
        let (ny, ni) = if iteration < self.iterations {
            (year, iteration + 1)
        } else {
            (year + 1, 1)
        };
        Ok(vec![
            self.message(Body::AttrUpdate { year, iteration, updates }),
            self.message(Body::TimeRequest {
                year: ny,
                iteration: ni,
            }),
        ])
    }
}
