//! The simulation kernel: yearly steps of iterative rounds over the sector
//! controllers, stock commits, currency accumulation, budget flags and
//! objective reports.
//!
//! Year closing works on the flow ledger alone, so a coordinator that only
//! sees published values closes years exactly as the monolithic run does.

use std::collections::BTreeMap;

use log::{debug, info};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agriculture::AgricultureFederate;
use crate::energy::EnergyFederate;
use crate::fom::{self, ObjectClass, CAPITAL_EXPENSES, CURRENCY_FLOW};
use crate::ledger::{FlowLedger, Publication};
use crate::objectives::{Evaluator, ObjectiveError, ObjectiveReport};
use crate::scenario::{NodeId, Role, Scenario};
use crate::sector::{Inbox, SectorFederate, SimError};
use crate::societal::{self, CurrencyError, CurrencyStock, SectorNets};
use crate::water::WaterFederate;

/// Magnitudes below this are treated as zero when measuring relative change.
const RESIDUAL_FLOOR: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Currency(#[from] CurrencyError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Bookkeeping for one closed year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct YearSummary {
    pub year: i32,
    /// Capital expenses across all sectors, $.
    pub capital_expenses: f64,
    pub budget_violation: bool,
    /// Currency stock after this year's net revenues, $.
    pub currency: f64,
    /// Largest relative change of any flow between the last two rounds.
    pub residual: f64,
    pub report: Option<ObjectiveReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub ledger: FlowLedger,
    pub years: Vec<YearSummary>,
}

impl RunResult {
    pub fn budget_violations(&self) -> Vec<i32> {
        self.years.iter().filter(|y| y.budget_violation).map(|y| y.year).collect()
    }

    pub fn reports(&self) -> Vec<&ObjectiveReport> {
        self.years.iter().filter_map(|y| y.report.as_ref()).collect()
    }

    pub fn report(&self, year: i32) -> Option<&ObjectiveReport> {
        self.years
            .iter()
            .find(|y| y.year == year)
            .and_then(|y| y.report.as_ref())
    }
}

/// Sector classes whose capital expenses count against the budget.
pub const SECTOR_CLASSES: [ObjectClass; 4] = [
    ObjectClass::AgricultureSystem,
    ObjectClass::WaterSystem,
    ObjectClass::PetroleumSystem,
    ObjectClass::ElectricalSystem,
];

/// Largest relative change of any flow between two rounds of a year.
pub fn residual(ledger: &FlowLedger, year: i32, from: u32, to: u32) -> f64 {
    let before: BTreeMap<_, _> = ledger
        .step(year, from)
        .map(|(k, v)| ((k.object.clone(), k.flow.clone()), *v))
        .collect();
    let mut worst: f64 = 0.0;
    for (k, v) in ledger.step(year, to) {
        let prev = before.get(&(k.object.clone(), k.flow.clone())).copied().unwrap_or(0.0);
        let scale = v.abs().max(prev.abs());
        if scale > RESIDUAL_FLOOR {
            worst = worst.max((v - prev).abs() / scale);
        }
    }
    worst
}

/// Closes `year` from the ledger: accumulates currency, flags the budget
/// and scores objectives from the planning start on.
pub fn close_year(
    scenario: &Scenario,
    ledger: &FlowLedger,
    year: i32,
    currency: &mut CurrencyStock,
) -> Result<YearSummary, KernelError> {
    let last = scenario.horizon.iterations_per_year;
    let mut nets = BTreeMap::new();
    for n in scenario.node_ids() {
        let get = |class| ledger.get(year, last, class, CURRENCY_FLOW, n.as_str());
        let energy = match (get(ObjectClass::PetroleumSystem), get(ObjectClass::ElectricalSystem)) {
            (Some(p), Some(e)) => Some(p + e),
            _ => None,
        };
        nets.insert(
            n,
            SectorNets {
                agriculture: get(ObjectClass::AgricultureSystem),
                water: get(ObjectClass::WaterSystem),
                energy,
            },
        );
    }
    currency.accumulate(&nets)?;

    let capital: f64 = SECTOR_CLASSES
        .iter()
        .map(|&c| ledger.sum(year, last, c, CAPITAL_EXPENSES))
        .sum();
    let budget_violation = capital > scenario.budget_limit;
    let residual = if last > 1 { residual(ledger, year, last - 1, last) } else { 0.0 };
    let report = if year >= scenario.horizon.plan_start {
        Some(Evaluator::new(scenario, ledger).report(year)?)
    } else {
        None
    };
    debug!("closed {year}: capital {capital:.3e} $, residual {residual:.3e}");
    Ok(YearSummary {
        year,
        capital_expenses: capital,
        budget_violation,
        currency: currency.total,
        residual,
        report,
    })
}

/// Keeps one inbox per role holding only that role's subscriptions.
#[derive(Debug, Clone, Default)]
pub struct Router {
    inboxes: BTreeMap<Role, Inbox>,
}

impl Router {
    pub fn new() -> Self {
        Self {
            inboxes: Role::ALL.iter().map(|&r| (r, Inbox::new())).collect(),
        }
    }

    pub fn deliver(&mut self, p: &Publication) {
        for role in Role::ALL {
            let subscribed = fom::subscriptions(role)
                .iter()
                .any(|s| s.class_name == p.class.as_str() && s.attribute == p.attribute);
            if subscribed {
                if let Some(inbox) = self.inboxes.get_mut(&role) {
                    inbox.set(p.class, p.attribute, &p.object, p.value);
                }
            }
        }
    }

    pub fn inbox(&self, role: Role) -> &Inbox {
        &self.inboxes[&role]
    }
}

/// The three role federates in round order.
pub fn federates(scenario: &Scenario) -> Vec<Box<dyn SectorFederate>> {
    vec![
        Box::new(AgricultureFederate::new(scenario.clone())),
        Box::new(WaterFederate::new(scenario.clone())),
        Box::new(EnergyFederate::new(scenario.clone())),
    ]
}

/// Runs every year of the horizon in a single process.
pub fn run_mono(scenario: &Scenario) -> Result<RunResult, KernelError> {
    let mut federates = federates(scenario);
    let mut ledger = FlowLedger::new();
    let mut router = Router::new();
    let mut currency = CurrencyStock::new(scenario.initial_currency);
    let mut years = Vec::new();

    for year in scenario.horizon.years() {
        for iteration in 1..=scenario.horizon.iterations_per_year {
            for p in societal::publications(scenario, year) {
                ledger.insert(year, iteration, &p).map_err(SimError::from)?;
                router.deliver(&p);
            }
            // Every controller reads the same snapshot: values published in
            // earlier rounds plus this round's societal demands.
            let mut round = Vec::new();
            for f in federates.iter_mut() {
                round.extend(f.step(year, iteration, router.inbox(f.role()))?);
            }
            for p in &round {
                ledger.insert(year, iteration, p).map_err(SimError::from)?;
                router.deliver(p);
            }
        }
        for f in federates.iter_mut() {
            f.commit_year(year)?;
        }
        let summary = close_year(scenario, &ledger, year, &mut currency)?;
        if summary.budget_violation {
            info!("{year}: capital expenses exceed the annual budget");
        }
        years.push(summary);
    }
    Ok(RunResult { ledger, years })
}

/// Supply/demand mismatches at the final round of each year:
/// `(year, node, supply attribute, supply, demand)`.
pub fn closure_gaps(scenario: &Scenario, ledger: &FlowLedger) -> Vec<(i32, NodeId, &'static str, f64, f64)> {
    let last = scenario.horizon.iterations_per_year;
    let mut out = Vec::new();
    for year in scenario.horizon.years() {
        for n in scenario.node_ids() {
            for ((sc, sa), (dc, da)) in fom::CLOSURE_PAIRS {
                let supply = ledger.get(year, last, *sc, sa, n.as_str()).unwrap_or(0.0);
                let demand = ledger.get(year, last, *dc, da, n.as_str()).unwrap_or(0.0);
                out.push((year, n, *sa, supply, demand));
            }
        }
    }
    out
}
