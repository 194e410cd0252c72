//! Plumbing shared by the sector controllers.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::fom::ObjectClass;
use crate::ledger::{LedgerError, Publication};
use crate::lifecycle;
use crate::lp::{self, LinearProgram, LpError, LpSolution, LpStatus};
use crate::scenario::{ElementInstance, ElementTemplate, NodeId, Role, Scenario, Sector};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("{sector:?} dispatch for {year} at node(s) {nodes} is {status:?}")]
    Dispatch {
        sector: Sector,
        year: i32,
        nodes: String,
        status: LpStatus,
    },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("{stock} at {node} would become negative ({value}) in {year}")]
    NegativeStock {
        stock: &'static str,
        node: NodeId,
        year: i32,
        value: f64,
    },
    #[error("element {element} references unknown template {template}")]
    UnknownTemplate { element: String, template: String },
}

/// An element paired with its template.
#[derive(Debug, Clone, Copy)]
pub struct Resolved<'a> {
    pub element: &'a ElementInstance,
    pub template: &'a ElementTemplate,
}

pub fn resolve<'a>(scenario: &'a Scenario, elements: &'a [ElementInstance]) -> Result<Vec<Resolved<'a>>, SimError> {
    elements
        .iter()
        .map(|e| {
            scenario
                .template(&e.template)
                .map(|t| Resolved { element: e, template: t })
                .ok_or_else(|| SimError::UnknownTemplate {
                    element: e.id.clone(),
                    template: e.template.clone(),
                })
        })
        .collect()
}

/// Elements of `sector` in their operating phase in `year`, restricted to
/// declared nodes.
pub fn operating<'a>(scenario: &Scenario, resolved: &[Resolved<'a>], sector: Sector, year: i32) -> Vec<Resolved<'a>> {
    resolved
        .iter()
        .filter(|r| {
            r.template.sector() == sector
                && lifecycle::is_operating(r.element, r.template, year)
                && scenario.node(r.element.origin).is_some()
                && scenario.node(r.element.destination()).is_some()
        })
        .copied()
        .collect()
}

pub fn solve_dispatch(lp: &LinearProgram, sector: Sector, year: i32, nodes: &[NodeId]) -> Result<LpSolution, SimError> {
    let solution = lp::solve(lp)?;
    if solution.status != LpStatus::Optimal {
        return Err(SimError::Dispatch {
            sector,
            year,
            nodes: nodes.iter().map(|n| n.as_str()).collect::<Vec<_>>().join(","),
            status: solution.status,
        });
    }
    Ok(solution)
}

pub fn per_node(nodes: &[NodeId]) -> BTreeMap<NodeId, f64> {
    nodes.iter().map(|&n| (n, 0.0)).collect()
}

/// Splits `supply` across consumers in proportion to their demands.
pub fn split_supply(supply: f64, demands: &[f64]) -> Vec<f64> {
    let total: f64 = demands.iter().sum();
    if total <= 0.0 {
        let mut out = vec![0.0; demands.len()];
        if let Some(first) = out.first_mut() {
            *first = supply.max(0.0);
        }
        return out;
    }
    demands.iter().map(|d| (supply * d / total).max(0.0)).collect()
}

/// Lifecycle and operating expenses of one element in one year, in $.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementCost {
    pub id: String,
    pub node: NodeId,
    pub capital: f64,
    pub fixed: f64,
    pub variable: f64,
}

impl ElementCost {
    pub fn total(&self) -> f64 {
        self.capital + self.fixed + self.variable
    }
}

/// Expenses of every element of `sector`; `variable` gives the operating
/// cost of an element given its dispatch (zero when not operating).
pub fn element_costs(
    resolved: &[Resolved<'_>],
    sector: Sector,
    year: i32,
    variable: impl Fn(&Resolved<'_>) -> f64,
) -> Vec<ElementCost> {
    resolved
        .iter()
        .filter(|r| r.template.sector() == sector)
        .map(|r| ElementCost {
            id: r.element.id.clone(),
            node: r.element.origin,
            capital: lifecycle::capital_expense(r.element, r.template, year),
            fixed: lifecycle::fixed_expense(r.element, r.template, year),
            variable: if lifecycle::is_operating(r.element, r.template, year) {
                variable(r)
            } else {
                0.0
            },
        })
        .collect()
}

/// Per-element expense publications for elements that cost anything.
pub fn element_publications(costs: &[ElementCost]) -> Vec<Publication> {
    let mut out = Vec::new();
    for c in costs.iter().filter(|c| c.total() != 0.0) {
        out.push(Publication::new(ObjectClass::GenericElement, crate::fom::CURRENCY_FLOW, c.id.as_str(), -c.total()));
        out.push(Publication::new(ObjectClass::GenericElement, crate::fom::CAPITAL_EXPENSES, c.id.as_str(), c.capital));
    }
    out
}

/// The most recent value of every subscribed attribute, keyed by
/// (class, attribute, object). Missing entries read as zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Inbox {
    values: BTreeMap<(ObjectClass, String, String), f64>,
}

impl Inbox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, class: ObjectClass, attribute: &str, object: &str, value: f64) {
        self.values
            .insert((class, attribute.to_string(), object.to_string()), value);
    }

    pub fn get(&self, class: ObjectClass, attribute: &str, object: &str) -> f64 {
        self.values
            .get(&(class, attribute.to_string(), object.to_string()))
            .copied()
            .unwrap_or(0.0)
    }

    /// Per-node view of one attribute.
    pub fn by_node(&self, class: ObjectClass, attribute: &str, nodes: &[NodeId]) -> BTreeMap<NodeId, f64> {
        nodes
            .iter()
            .map(|&n| (n, self.get(class, attribute, n.as_str())))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A role's controllers behind one interface, driven identically by the
/// monolithic kernel and by a federate process.
pub trait SectorFederate: Send {
    fn role(&self) -> Role;

    /// Dispatches the role's systems for one sub-step using the latest
    /// counterpart values and returns everything it publishes.
    fn step(&mut self, year: i32, iteration: u32, inbox: &Inbox) -> Result<Vec<Publication>, SimError>;

    /// Commits natural stocks using the final sub-step of `year`.
    fn commit_year(&mut self, year: i32) -> Result<(), SimError>;
}
