//! Energy controller: the petroleum system (wells, pipelines, reservoir,
//! trade) and the electrical system (plants, private generation), coupled
//! through oil for generation and electricity for pumping.
//!
//! Oil is carried in Mtoe and electricity in TWh, so $/toe and $/MWh prices
//! read directly as M$ per unit.

use std::collections::BTreeMap;

use crate::fom::{
    ObjectClass, CAPITAL_EXPENSES, CURRENCY_FLOW, ELECTRICITY_IN, ELECTRICITY_OUT_PETROLEUM,
    ELECTRICITY_OUT_SOCIETAL, ELECTRICITY_OUT_WATER, ELECTRICITY_PRODUCTION, OIL_EXPORT, OIL_IMPORT, OIL_IN,
    OIL_OUT_ELECTRICAL, OIL_OUT_SOCIETAL, OIL_PRODUCTION, PRIVATE_GENERATION, RESERVOIR_STOCK, RESERVOIR_WITHDRAWAL,
};
use crate::ledger::Publication;
use crate::lp::{LinearProgram, Sense};
use crate::scenario::{NodeId, Role, Scenario, Sector, TemplateSpec};
use crate::sector::{self, ElementCost, Inbox, Resolved, SectorFederate, SimError};

/// Mtoe per billion toe.
const MTOE_PER_GTOE: f64 = 1e3;
const STOCK_EPS: f64 = 1e-9;

fn get(map: &BTreeMap<NodeId, f64>, n: NodeId) -> f64 {
    map.get(&n).copied().unwrap_or(0.0)
}

fn electricity_price(scenario: &Scenario, n: NodeId) -> f64 {
    scenario.node(n).map_or(0.0, |c| c.energy.electricity_price)
}

fn oil_price(scenario: &Scenario, n: NodeId) -> f64 {
    scenario.node(n).map_or(0.0, |c| c.energy.oil_local_price)
}

// ---------------------------------------------------------------- petroleum

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PetroleumDecision {
    /// Mtoe/year per well.
    pub production: BTreeMap<String, f64>,
    /// Mtoe/year per pipeline.
    pub transport: BTreeMap<String, f64>,
    /// Mtoe/year per node.
    pub import: BTreeMap<NodeId, f64>,
    pub export: BTreeMap<NodeId, f64>,
}

impl PetroleumDecision {
    pub fn produced(&self, id: &str) -> f64 {
        self.production.get(id).copied().unwrap_or(0.0)
    }

    pub fn shipped(&self, id: &str) -> f64 {
        self.transport.get(id).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct PetroleumLp {
    pub lp: LinearProgram,
    pub production: Vec<(String, usize)>,
    pub transport: Vec<(String, usize)>,
    pub import: Vec<(NodeId, usize)>,
    pub export: Vec<(NodeId, usize)>,
}

/// Operating cost of a well or pipeline per toe handled, including
/// electricity for pumping, $/toe.
pub fn petroleum_unit_cost(scenario: &Scenario, r: &Resolved<'_>) -> f64 {
    match r.template.spec {
        TemplateSpec::Well { variable_cost, .. } => variable_cost,
        TemplateSpec::Pipeline {
            variable_cost,
            electricity_intensity,
            ..
        } => variable_cost + electricity_intensity * electricity_price(scenario, r.element.origin) / 1e3,
        _ => 0.0,
    }
}

/// Builds the petroleum LP. `demand` is total oil demand in Mtoe and
/// `reservoir` the available stock in billion toe, per node.
pub fn build_petroleum_lp(
    scenario: &Scenario,
    operating: &[Resolved<'_>],
    demand: &BTreeMap<NodeId, f64>,
    reservoir: &BTreeMap<NodeId, f64>,
) -> PetroleumLp {
    let nodes = scenario.node_ids();
    let mut objective = Vec::new();
    let mut upper = Vec::new();
    let mut production = Vec::new();
    let mut transport = Vec::new();
    let mut import = Vec::new();
    let mut export = Vec::new();

    for r in operating {
        match r.template.spec {
            TemplateSpec::Well { max_production, .. } => {
                production.push((r.element.id.clone(), objective.len()));
                objective.push(petroleum_unit_cost(scenario, r));
                upper.push(Some(max_production));
            }
            TemplateSpec::Pipeline { max_throughput, .. } => {
                transport.push((r.element.id.clone(), objective.len()));
                objective.push(petroleum_unit_cost(scenario, r));
                upper.push(Some(max_throughput));
            }
            _ => {}
        }
    }
    for &n in &nodes {
        let p = &scenario.node(n).expect("declared node").energy;
        import.push((n, objective.len()));
        objective.push(p.oil_import_price);
        upper.push(None);
        export.push((n, objective.len()));
        objective.push(-p.oil_export_price);
        upper.push(None);
    }

    let mut lp = LinearProgram::new(objective.len());
    lp.objective = objective;
    lp.upper = upper;
    let var = |list: &[(String, usize)], id: &str| list.iter().find(|(e, _)| e == id).map(|&(_, v)| v);

    for (k, &n) in nodes.iter().enumerate() {
        let mut stock = Vec::new();
        let mut balance = Vec::new();
        for r in operating {
            match r.template.spec {
                TemplateSpec::Well {
                    reservoir_intensity, ..
                } if r.element.origin == n => {
                    let v = var(&production, &r.element.id).expect("well variable");
                    stock.push((v, reservoir_intensity));
                    balance.push((v, 1.0));
                }
                TemplateSpec::Pipeline { efficiency, .. } => {
                    let v = var(&transport, &r.element.id).expect("pipeline variable");
                    if r.element.origin == n {
                        balance.push((v, -1.0));
                    }
                    if r.element.destination() == n {
                        balance.push((v, efficiency));
                    }
                }
                _ => {}
            }
        }
        if !stock.is_empty() {
            let q = get(reservoir, n).max(0.0);
            lp.add_sparse_row(&stock, Sense::Le, q * MTOE_PER_GTOE);
        }
        balance.push((import[k].1, 1.0));
        balance.push((export[k].1, -1.0));
        lp.add_sparse_row(&balance, Sense::Eq, get(demand, n));
    }

    PetroleumLp {
        lp,
        production,
        transport,
        import,
        export,
    }
}

pub fn dispatch_petroleum(
    scenario: &Scenario,
    resolved: &[Resolved<'_>],
    demand: &BTreeMap<NodeId, f64>,
    reservoir: &BTreeMap<NodeId, f64>,
    year: i32,
) -> Result<PetroleumDecision, SimError> {
    let operating = sector::operating(scenario, resolved, Sector::Petroleum, year);
    let built = build_petroleum_lp(scenario, &operating, demand, reservoir);
    let solution = sector::solve_dispatch(&built.lp, Sector::Petroleum, year, &scenario.node_ids())?;
    let x = &solution.x;
    Ok(PetroleumDecision {
        production: built.production.iter().map(|(id, v)| (id.clone(), x[*v])).collect(),
        transport: built.transport.iter().map(|(id, v)| (id.clone(), x[*v])).collect(),
        import: built.import.iter().map(|&(n, v)| (n, x[v])).collect(),
        export: built.export.iter().map(|&(n, v)| (n, x[v])).collect(),
    })
}

/// Oil produced per node, Mtoe.
pub fn oil_production(scenario: &Scenario, resolved: &[Resolved<'_>], decision: &PetroleumDecision) -> BTreeMap<NodeId, f64> {
    let mut out = sector::per_node(&scenario.node_ids());
    for r in resolved {
        if let TemplateSpec::Well { .. } = r.template.spec {
            *out.entry(r.element.origin).or_insert(0.0) += decision.produced(&r.element.id);
        }
    }
    out
}

/// Supply side of each node's oil balance, Mtoe.
pub fn oil_supplied(scenario: &Scenario, resolved: &[Resolved<'_>], decision: &PetroleumDecision) -> BTreeMap<NodeId, f64> {
    let mut out = oil_production(scenario, resolved, decision);
    for r in resolved {
        if let TemplateSpec::Pipeline { efficiency, .. } = r.template.spec {
            let q = decision.shipped(&r.element.id);
            *out.entry(r.element.origin).or_insert(0.0) -= q;
            *out.entry(r.element.destination()).or_insert(0.0) += efficiency * q;
        }
    }
    for (n, v) in out.iter_mut() {
        *v += get(&decision.import, *n) - get(&decision.export, *n);
    }
    out
}

/// Reservoir withdrawal per node, billion toe.
pub fn reservoir_withdrawal(scenario: &Scenario, resolved: &[Resolved<'_>], decision: &PetroleumDecision) -> BTreeMap<NodeId, f64> {
    let mut out = sector::per_node(&scenario.node_ids());
    for r in resolved {
        if let TemplateSpec::Well {
            reservoir_intensity, ..
        } = r.template.spec
        {
            *out.entry(r.element.origin).or_insert(0.0) +=
                reservoir_intensity * decision.produced(&r.element.id) / MTOE_PER_GTOE;
        }
    }
    out
}

/// Oil reservoir volume per node, billion toe.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirStock {
    pub volume: BTreeMap<NodeId, f64>,
}

impl ReservoirStock {
    pub fn initial(scenario: &Scenario) -> Self {
        Self {
            volume: scenario.nodes.iter().map(|n| (n.id, n.energy.initial_reservoir)).collect(),
        }
    }

    pub fn update(
        &self,
        scenario: &Scenario,
        resolved: &[Resolved<'_>],
        decision: &PetroleumDecision,
        year: i32,
    ) -> Result<ReservoirStock, SimError> {
        let taken = reservoir_withdrawal(scenario, resolved, decision);
        let mut volume = BTreeMap::new();
        for (&n, &q) in &self.volume {
            let next = q - get(&taken, n);
            if next < -STOCK_EPS {
                return Err(SimError::NegativeStock {
                    stock: "reservoir",
                    node: n,
                    year,
                    value: next,
                });
            }
            volume.insert(n, next.max(0.0));
        }
        Ok(ReservoirStock { volume })
    }
}

// -------------------------------------------------------------- electricity

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ElectricityDecision {
    /// TWh/year per plant.
    pub production: BTreeMap<String, f64>,
    /// TWh/year of private generation per node.
    pub private: BTreeMap<NodeId, f64>,
}

impl ElectricityDecision {
    pub fn produced(&self, id: &str) -> f64 {
        self.production.get(id).copied().unwrap_or(0.0)
    }

    pub fn private_at(&self, n: NodeId) -> f64 {
        get(&self.private, n)
    }
}

#[derive(Debug, Clone)]
pub struct ElectricityLp {
    pub lp: LinearProgram,
    pub production: Vec<(String, usize)>,
    pub private: Vec<(NodeId, usize)>,
    /// Private generation penalty, M$/TWh.
    pub private_cost: f64,
}

/// Plant cost per MWh including the oil it burns, $/MWh.
pub fn plant_unit_cost(scenario: &Scenario, r: &Resolved<'_>) -> f64 {
    match r.template.spec {
        TemplateSpec::PowerPlant {
            variable_cost,
            oil_intensity,
            ..
        } => variable_cost + oil_intensity * oil_price(scenario, r.element.origin),
        _ => 0.0,
    }
}

/// Private generation penalty: above the dearest operating plant by the
/// actual cost of private generation (at least 1 $/MWh), so plants always
/// dispatch first.
pub fn private_cost(scenario: &Scenario, operating: &[Resolved<'_>]) -> f64 {
    let plants = operating
        .iter()
        .filter(|r| matches!(r.template.spec, TemplateSpec::PowerPlant { .. }))
        .map(|r| plant_unit_cost(scenario, r))
        .fold(0.0, f64::max);
    let private = scenario
        .nodes
        .iter()
        .map(|n| n.energy.private_oil_intensity * n.energy.oil_local_price)
        .fold(0.0, f64::max);
    plants + private.max(1.0)
}

/// Builds the electricity LP; `demand` is total electricity demand, TWh.
pub fn build_electricity_lp(scenario: &Scenario, operating: &[Resolved<'_>], demand: &BTreeMap<NodeId, f64>) -> ElectricityLp {
    let nodes = scenario.node_ids();
    let c = private_cost(scenario, operating);
    let mut objective = Vec::new();
    let mut upper = Vec::new();
    let mut production = Vec::new();
    let mut private = Vec::new();
    for r in operating {
        if let TemplateSpec::PowerPlant { max_production, .. } = r.template.spec {
            production.push((r.element.id.clone(), objective.len()));
            objective.push(plant_unit_cost(scenario, r));
            upper.push(Some(max_production));
        }
    }
    for &n in &nodes {
        private.push((n, objective.len()));
        objective.push(c);
        upper.push(None);
    }
    let mut lp = LinearProgram::new(objective.len());
    lp.objective = objective;
    lp.upper = upper;
    for (k, &n) in nodes.iter().enumerate() {
        let mut balance: Vec<(usize, f64)> = operating
            .iter()
            .filter(|r| r.element.origin == n)
            .filter_map(|r| production.iter().find(|(id, _)| *id == r.element.id).map(|&(_, v)| (v, 1.0)))
            .collect();
        balance.push((private[k].1, 1.0));
        lp.add_sparse_row(&balance, Sense::Eq, get(demand, n));
    }
    ElectricityLp {
        lp,
        production,
        private,
        private_cost: c,
    }
}

pub fn dispatch_electricity(
    scenario: &Scenario,
    resolved: &[Resolved<'_>],
    demand: &BTreeMap<NodeId, f64>,
    year: i32,
) -> Result<ElectricityDecision, SimError> {
    let operating = sector::operating(scenario, resolved, Sector::Electrical, year);
    let built = build_electricity_lp(scenario, &operating, demand);
    let solution = sector::solve_dispatch(&built.lp, Sector::Electrical, year, &scenario.node_ids())?;
    let x = &solution.x;
    Ok(ElectricityDecision {
        production: built.production.iter().map(|(id, v)| (id.clone(), x[*v])).collect(),
        private: built.private.iter().map(|&(n, v)| (n, x[v])).collect(),
    })
}

/// Electricity generated per node (plants and private), TWh.
pub fn electricity_supplied(scenario: &Scenario, resolved: &[Resolved<'_>], decision: &ElectricityDecision) -> BTreeMap<NodeId, f64> {
    let mut out = sector::per_node(&scenario.node_ids());
    for r in resolved {
        if let TemplateSpec::PowerPlant { .. } = r.template.spec {
            *out.entry(r.element.origin).or_insert(0.0) += decision.produced(&r.element.id);
        }
    }
    for (n, v) in out.iter_mut() {
        *v += decision.private_at(*n);
    }
    out
}

// ------------------------------------------------------------ cross demands

/// Electricity needed to run pipelines (TWh) and oil burned for
/// generation (Mtoe), per node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CrossDemands {
    pub petroleum_electricity: BTreeMap<NodeId, f64>,
    pub electricity_oil: BTreeMap<NodeId, f64>,
}

pub fn petroleum_electricity_demand(
    scenario: &Scenario,
    resolved: &[Resolved<'_>],
    decision: &PetroleumDecision,
) -> BTreeMap<NodeId, f64> {
    let mut out = sector::per_node(&scenario.node_ids());
    for r in resolved {
        if let TemplateSpec::Pipeline {
            electricity_intensity, ..
        } = r.template.spec
        {
            // kWh/toe · Mtoe = GWh
            *out.entry(r.element.origin).or_insert(0.0) += electricity_intensity * decision.shipped(&r.element.id) / 1e3;
        }
    }
    out
}

pub fn electricity_oil_demand(scenario: &Scenario, resolved: &[Resolved<'_>], decision: &ElectricityDecision) -> BTreeMap<NodeId, f64> {
    let mut out = sector::per_node(&scenario.node_ids());
    for (n, v) in out.iter_mut() {
        let f = scenario.node(*n).map_or(0.0, |c| c.energy.private_oil_intensity);
        // toe/MWh · TWh = Mtoe
        *v += f * decision.private_at(*n);
    }
    for r in resolved {
        if let TemplateSpec::PowerPlant { oil_intensity, .. } = r.template.spec {
            *out.entry(r.element.origin).or_insert(0.0) += oil_intensity * decision.produced(&r.element.id);
        }
    }
    out
}

pub fn cross_demands(
    scenario: &Scenario,
    resolved: &[Resolved<'_>],
    petroleum: &PetroleumDecision,
    electricity: &ElectricityDecision,
) -> CrossDemands {
    CrossDemands {
        petroleum_electricity: petroleum_electricity_demand(scenario, resolved, petroleum),
        electricity_oil: electricity_oil_demand(scenario, resolved, electricity),
    }
}

// ----------------------------------------------------------------- revenue

pub fn petroleum_costs(scenario: &Scenario, resolved: &[Resolved<'_>], decision: &PetroleumDecision, year: i32) -> Vec<ElementCost> {
    sector::element_costs(resolved, Sector::Petroleum, year, |r| {
        let handled = decision.produced(&r.element.id) + decision.shipped(&r.element.id);
        petroleum_unit_cost(scenario, r) * handled * 1e6
    })
}

pub fn electricity_costs(scenario: &Scenario, resolved: &[Resolved<'_>], decision: &ElectricityDecision, year: i32) -> Vec<ElementCost> {
    sector::element_costs(resolved, Sector::Electrical, year, |r| {
        plant_unit_cost(scenario, r) * decision.produced(&r.element.id) * 1e6
    })
}

/// Net petroleum revenue in $ per node; `demand` is total oil demand.
pub fn petroleum_revenue(
    scenario: &Scenario,
    resolved: &[Resolved<'_>],
    decision: &PetroleumDecision,
    demand: &BTreeMap<NodeId, f64>,
    year: i32,
) -> BTreeMap<NodeId, f64> {
    let mut out = BTreeMap::new();
    for n in scenario.node_ids() {
        let p = &scenario.node(n).expect("declared node").energy;
        let v = p.oil_local_price * get(demand, n) + p.oil_export_price * get(&decision.export, n)
            - p.oil_import_price * get(&decision.import, n);
        out.insert(n, v * 1e6);
    }
    for r in resolved {
        if let TemplateSpec::Pipeline { efficiency, .. } = r.template.spec {
            let q = decision.shipped(&r.element.id);
            *out.entry(r.element.origin).or_insert(0.0) += oil_price(scenario, r.element.origin) * efficiency * q * 1e6;
            *out.entry(r.element.destination()).or_insert(0.0) -=
                oil_price(scenario, r.element.destination()) * efficiency * q * 1e6;
        }
    }
    for c in petroleum_costs(scenario, resolved, decision, year) {
        *out.entry(c.node).or_insert(0.0) -= c.total();
    }
    out
}

/// Net electricity revenue in $ per node; `demand` is total electricity
/// demand.
pub fn electricity_revenue(
    scenario: &Scenario,
    resolved: &[Resolved<'_>],
    decision: &ElectricityDecision,
    demand: &BTreeMap<NodeId, f64>,
    year: i32,
) -> BTreeMap<NodeId, f64> {
    let mut out = BTreeMap::new();
    for n in scenario.node_ids() {
        let p = &scenario.node(n).expect("declared node").energy;
        let private = decision.private_at(n);
        let v = p.electricity_price * (get(demand, n) - private) - p.oil_local_price * p.private_oil_intensity * private;
        out.insert(n, v * 1e6);
    }
    for c in electricity_costs(scenario, resolved, decision, year) {
        *out.entry(c.node).or_insert(0.0) -= c.total();
    }
    out
}

/// Net energy revenue: petroleum plus electricity.
pub fn energy_revenue(petroleum: &BTreeMap<NodeId, f64>, electricity: &BTreeMap<NodeId, f64>) -> BTreeMap<NodeId, f64> {
    let mut out = petroleum.clone();
    for (n, v) in electricity {
        *out.entry(*n).or_insert(0.0) += v;
    }
    out
}

// ---------------------------------------------------------------- federate

/// The energy role's federate. Electricity dispatches first using the
/// pipeline electricity demand of the previous round, then petroleum
/// dispatches against the oil the plants just burned.
#[derive(Debug, Clone)]
pub struct EnergyFederate {
    scenario: Scenario,
    reservoir: ReservoirStock,
    carried_petroleum_electricity: BTreeMap<NodeId, f64>,
    last: Option<PetroleumDecision>,
}

impl EnergyFederate {
    pub fn new(scenario: Scenario) -> Self {
        let reservoir = ReservoirStock::initial(&scenario);
        let carried = sector::per_node(&scenario.node_ids());
        Self {
            scenario,
            reservoir,
            carried_petroleum_electricity: carried,
            last: None,
        }
    }

    pub fn reservoir(&self) -> &ReservoirStock {
        &self.reservoir
    }
}

impl SectorFederate for EnergyFederate {
    fn role(&self) -> Role {
        Role::Energy
    }

    fn step(&mut self, year: i32, _iteration: u32, inbox: &Inbox) -> Result<Vec<Publication>, SimError> {
        let s = &self.scenario;
        let nodes = s.node_ids();
        let resolved = sector::resolve(s, &s.elements)?;
        let societal_oil = inbox.by_node(ObjectClass::SocietalSystem, OIL_IN, &nodes);
        let societal_elect = inbox.by_node(ObjectClass::SocietalSystem, ELECTRICITY_IN, &nodes);
        let water_elect = inbox.by_node(ObjectClass::WaterSystem, ELECTRICITY_IN, &nodes);
        let pumping = self.carried_petroleum_electricity.clone();

        let elect_demand: BTreeMap<NodeId, f64> = nodes
            .iter()
            .map(|&n| (n, societal_elect[&n] + water_elect[&n] + get(&pumping, n)))
            .collect();
        let elect = dispatch_electricity(s, &resolved, &elect_demand, year)?;
        let burned = electricity_oil_demand(s, &resolved, &elect);

        let oil_demand: BTreeMap<NodeId, f64> = nodes.iter().map(|&n| (n, societal_oil[&n] + burned[&n])).collect();
        let pet = dispatch_petroleum(s, &resolved, &oil_demand, &self.reservoir.volume, year)?;
        let pumping_next = petroleum_electricity_demand(s, &resolved, &pet);

        let pet_net = petroleum_revenue(s, &resolved, &pet, &oil_demand, year);
        let elect_net = electricity_revenue(s, &resolved, &elect, &elect_demand, year);
        let pet_costs = petroleum_costs(s, &resolved, &pet, year);
        let elect_costs = electricity_costs(s, &resolved, &elect, year);
        let produced = oil_production(s, &resolved, &pet);
        let oil_supply = oil_supplied(s, &resolved, &pet);
        let withdrawn = reservoir_withdrawal(s, &resolved, &pet);
        let generated = electricity_supplied(s, &resolved, &elect);

        let mut out = Vec::new();
        for &n in &nodes {
            let name = n.as_str();
            let pet_class = ObjectClass::PetroleumSystem;
            let oil_shares = sector::split_supply(oil_supply[&n], &[societal_oil[&n], burned[&n]]);
            let capital: f64 = pet_costs.iter().filter(|c| c.node == n).fold(0.0, |acc, c| acc + c.capital);
            out.push(Publication::new(pet_class, ELECTRICITY_IN, name, pumping_next[&n]));
            out.push(Publication::new(pet_class, OIL_OUT_SOCIETAL, name, oil_shares[0]));
            out.push(Publication::new(pet_class, OIL_OUT_ELECTRICAL, name, oil_shares[1]));
            out.push(Publication::new(pet_class, CURRENCY_FLOW, name, pet_net[&n]));
            out.push(Publication::new(pet_class, CAPITAL_EXPENSES, name, capital));
            out.push(Publication::new(pet_class, OIL_PRODUCTION, name, produced[&n].max(0.0)));
            out.push(Publication::new(pet_class, OIL_IMPORT, name, get(&pet.import, n).max(0.0)));
            out.push(Publication::new(pet_class, OIL_EXPORT, name, get(&pet.export, n).max(0.0)));
            out.push(Publication::new(pet_class, RESERVOIR_STOCK, name, get(&self.reservoir.volume, n)));
            out.push(Publication::new(pet_class, RESERVOIR_WITHDRAWAL, name, withdrawn[&n].max(0.0)));

            let el_class = ObjectClass::ElectricalSystem;
            let shares =
                sector::split_supply(generated[&n], &[water_elect[&n], societal_elect[&n], get(&pumping, n)]);
            let capital: f64 = elect_costs.iter().filter(|c| c.node == n).fold(0.0, |acc, c| acc + c.capital);
            out.push(Publication::new(el_class, OIL_IN, name, burned[&n]));
            out.push(Publication::new(el_class, ELECTRICITY_OUT_WATER, name, shares[0]));
            out.push(Publication::new(el_class, ELECTRICITY_OUT_SOCIETAL, name, shares[1]));
            out.push(Publication::new(el_class, ELECTRICITY_OUT_PETROLEUM, name, shares[2]));
            out.push(Publication::new(el_class, CURRENCY_FLOW, name, elect_net[&n]));
            out.push(Publication::new(el_class, CAPITAL_EXPENSES, name, capital));
            out.push(Publication::new(
                el_class,
                ELECTRICITY_PRODUCTION,
                name,
                (generated[&n] - elect.private_at(n)).max(0.0),
            ));
            out.push(Publication::new(el_class, PRIVATE_GENERATION, name, elect.private_at(n).max(0.0)));
        }
        out.extend(sector::element_publications(&pet_costs));
        out.extend(sector::element_publications(&elect_costs));

        self.carried_petroleum_electricity = pumping_next;
        self.last = Some(pet);
        Ok(out)
    }

    fn commit_year(&mut self, year: i32) -> Result<(), SimError> {
        if let Some(decision) = self.last.take() {
            let resolved = sector::resolve(&self.scenario, &self.scenario.elements)?;
            self.reservoir = self.reservoir.update(&self.scenario, &resolved, &decision, year)?;
        }
        Ok(())
    }
}
