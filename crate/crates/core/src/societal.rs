//! Non-player societal model: logistic population and per-capita demand
//! growth, and national currency accumulation.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::fom::{ObjectClass, ELECTRICITY_IN, FOOD_IN, OIL_IN, WATER_IN};
use crate::ledger::Publication;
use crate::scenario::{DemandParams, NodeConfig, NodeId, PopulationParams, Scenario, UnitConventions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Resource {
    Food,
    Water,
    Oil,
    Electricity,
}

impl Resource {
    pub const ALL: [Resource; 4] = [Resource::Food, Resource::Water, Resource::Oil, Resource::Electricity];
}

/// Population in millions.
pub fn population(params: &PopulationParams, year: f64) -> f64 {
    let growth = (params.rate * (year - params.datum_year)).exp();
    params.max * params.datum * growth / (params.max + params.datum * (growth - 1.0))
}

/// Per-capita demand in the scenario's per-capita units.
pub fn per_capita_demand(params: &DemandParams, year: f64) -> f64 {
    let span = params.max - params.min;
    let offset = params.datum - params.min;
    if span == 0.0 || offset == 0.0 {
        // degenerate curve: flat at its minimum
        return params.min;
    }
    let growth = (params.rate * (year - params.datum_year)).exp();
    params.min + span * offset * growth / (span + offset * (growth - 1.0))
}

pub fn demand_params(node: &NodeConfig, resource: Resource) -> &DemandParams {
    match resource {
        Resource::Food => &node.societal.food,
        Resource::Water => &node.societal.water,
        Resource::Oil => &node.societal.oil,
        Resource::Electricity => &node.societal.electricity,
    }
}

/// Converts `population` (millions) times per-capita demand into ledger
/// units: GJ, MCM, Mtoe and TWh per year.
pub fn total_demand(resource: Resource, population: f64, per_capita: f64, units: &UnitConventions) -> f64 {
    let people = population * 1e6;
    match resource {
        // kcal/day -> GJ/year
        Resource::Food => people * per_capita * units.days_per_year / units.kcal_per_gj,
        // L/day -> MCM/year
        Resource::Water => people * per_capita * units.days_per_year / 1e3 / 1e6,
        // toe/year -> Mtoe/year
        Resource::Oil => people * per_capita / 1e6,
        // kWh/day -> TWh/year
        Resource::Electricity => people * per_capita * units.days_per_year / 1e9,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeDemand {
    pub population: f64,
    pub food: f64,
    pub water: f64,
    pub oil: f64,
    pub electricity: f64,
}

impl NodeDemand {
    pub fn zero() -> Self {
        Self {
            population: 0.0,
            food: 0.0,
            water: 0.0,
            oil: 0.0,
            electricity: 0.0,
        }
    }

    pub fn get(&self, resource: Resource) -> f64 {
        match resource {
            Resource::Food => self.food,
            Resource::Water => self.water,
            Resource::Oil => self.oil,
            Resource::Electricity => self.electricity,
        }
    }
}

pub fn node_demand(node: &NodeConfig, units: &UnitConventions, year: i32) -> NodeDemand {
    let t = year as f64;
    let p = population(&node.societal.population, t);
    let total = |r: Resource| total_demand(r, p, per_capita_demand(demand_params(node, r), t), units);
    NodeDemand {
        population: p,
        food: total(Resource::Food),
        water: total(Resource::Water),
        oil: total(Resource::Oil),
        electricity: total(Resource::Electricity),
    }
}

/// Societal demand publications for every node in `year`.
pub fn publications(scenario: &Scenario, year: i32) -> Vec<Publication> {
    let mut out = Vec::new();
    for id in scenario.node_ids() {
        let node = scenario.node(id).expect("declared node");
        let d = node_demand(node, &scenario.units, year);
        out.push(Publication::new(ObjectClass::SocietalSystem, FOOD_IN, id.as_str(), d.food));
        out.push(Publication::new(ObjectClass::SocietalSystem, WATER_IN, id.as_str(), d.water));
        out.push(Publication::new(ObjectClass::SocietalSystem, OIL_IN, id.as_str(), d.oil));
        out.push(Publication::new(ObjectClass::SocietalSystem, ELECTRICITY_IN, id.as_str(), d.electricity));
    }
    out
}

/// Net revenue of each sector at one node, in $.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SectorNets {
    pub agriculture: Option<f64>,
    pub water: Option<f64>,
    pub energy: Option<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum CurrencyError {
    #[error("missing {sector} contribution for node {node}")]
    MissingContribution { node: NodeId, sector: &'static str },
}

/// National currency stock. Each update adds every sector's net revenue at
/// every node.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrencyStock {
    pub total: f64,
    /// Running contribution per (node, sector).
    pub contributions: BTreeMap<(NodeId, &'static str), f64>,
}

impl CurrencyStock {
    pub fn new(initial: f64) -> Self {
        Self {
            total: initial,
            contributions: BTreeMap::new(),
        }
    }

    pub fn accumulate(&mut self, nets: &BTreeMap<NodeId, SectorNets>) -> Result<(), CurrencyError> {
        let mut rows = Vec::new();
        for (&node, n) in nets {
            for (sector, value) in [("agriculture", n.agriculture), ("water", n.water), ("energy", n.energy)] {
                let v = value.ok_or(CurrencyError::MissingContribution { node, sector })?;
                rows.push((node, sector, v));
            }
        }
        for (node, sector, v) in rows {
            self.total += v;
            *self.contributions.entry((node, sector)).or_insert(0.0) += v;
        }
        Ok(())
    }
}
