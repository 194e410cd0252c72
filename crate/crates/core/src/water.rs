//! Water controller: desalination dispatch, aquifer lifting, imports,
//! electricity demand, aquifer depletion and net revenue.
//!
//! Water is carried in MCM, so $/m³ prices read directly as M$/MCM.

use std::collections::BTreeMap;

use crate::fom::{
    ObjectClass, AQUIFER_STOCK, AQUIFER_WITHDRAWAL, CAPITAL_EXPENSES, CURRENCY_FLOW, ELECTRICITY_IN, WATER_IMPORT,
    WATER_IN, WATER_LIFT, WATER_OUT_AGRICULTURE, WATER_OUT_SOCIETAL, WATER_PRODUCTION,
};
use crate::ledger::Publication;
use crate::lp::{LinearProgram, Sense};
use crate::scenario::{NodeId, Role, Scenario, Sector, TemplateSpec};
use crate::sector::{self, ElementCost, Inbox, Resolved, SectorFederate, SimError};

/// MCM per km³.
const MCM_PER_KM3: f64 = 1e3;
/// Tolerance below zero tolerated (and clamped) in stock updates, km³.
const STOCK_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WaterDecision {
    /// MCM/year per desalination plant.
    pub production: BTreeMap<String, f64>,
    /// MCM/year per node.
    pub lift: BTreeMap<NodeId, f64>,
    pub import: BTreeMap<NodeId, f64>,
}

impl WaterDecision {
    pub fn lift_at(&self, n: NodeId) -> f64 {
        self.lift.get(&n).copied().unwrap_or(0.0)
    }

    pub fn import_at(&self, n: NodeId) -> f64 {
        self.import.get(&n).copied().unwrap_or(0.0)
    }

    pub fn produced(&self, id: &str) -> f64 {
        self.production.get(id).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct WaterLp {
    pub lp: LinearProgram,
    pub production: Vec<(String, usize)>,
    pub lift: Vec<(NodeId, usize)>,
    pub import: Vec<(NodeId, usize)>,
    /// Lifting cost used in the objective, M$/MCM.
    pub lifting_cost: f64,
}

fn electricity_price(scenario: &Scenario, n: NodeId) -> f64 {
    scenario.node(n).map_or(0.0, |c| c.energy.electricity_price)
}

/// Unit cost of desalinated water including purchased electricity, $/m³.
pub fn desalination_unit_cost(scenario: &Scenario, r: &Resolved<'_>) -> f64 {
    match r.template.spec {
        TemplateSpec::Desalination {
            variable_cost,
            electricity_intensity,
            ..
        } => variable_cost + electricity_intensity * electricity_price(scenario, r.element.origin) / 1e3,
        _ => 0.0,
    }
}

/// Lifting cost constant: the midpoint between the dearest operating
/// desalination plant (zero when there is none) and the cheapest import
/// price, so plants dispatch before lifting and lifting before imports.
pub fn lifting_cost(scenario: &Scenario, operating: &[Resolved<'_>]) -> f64 {
    let desal = operating
        .iter()
        .filter(|r| matches!(r.template.spec, TemplateSpec::Desalination { .. }))
        .map(|r| desalination_unit_cost(scenario, r))
        .fold(0.0, f64::max);
    let import = scenario
        .nodes
        .iter()
        .map(|n| n.water.import_price)
        .fold(f64::INFINITY, f64::min);
    0.5 * (desal + import)
}

/// Builds the dispatch LP. `demand` is total water demand in MCM and
/// `aquifer` the available stock in km³, per node.
pub fn build_lp(
    scenario: &Scenario,
    operating: &[Resolved<'_>],
    demand: &BTreeMap<NodeId, f64>,
    aquifer: &BTreeMap<NodeId, f64>,
) -> WaterLp {
    let nodes = scenario.node_ids();
    let c = lifting_cost(scenario, operating);
    let mut objective = Vec::new();
    let mut upper = Vec::new();
    let mut production = Vec::new();
    let mut lift = Vec::new();
    let mut import = Vec::new();

    for r in operating {
        if let TemplateSpec::Desalination { max_production, .. } = r.template.spec {
            let coastal = scenario.node(r.element.origin).map_or(0.0, |n| n.water.coastal as f64);
            production.push((r.element.id.clone(), objective.len()));
            objective.push(desalination_unit_cost(scenario, r));
            upper.push(Some(max_production * coastal));
        }
    }
    for &n in &nodes {
        let params = &scenario.node(n).expect("declared node").water;
        lift.push((n, objective.len()));
        objective.push(c);
        upper.push(None);
        import.push((n, objective.len()));
        objective.push(params.import_price);
        upper.push(None);
    }

    let mut lp = LinearProgram::new(objective.len());
    lp.objective = objective;
    lp.upper = upper;

    for (k, &n) in nodes.iter().enumerate() {
        let params = &scenario.node(n).expect("declared node").water;
        let stock = aquifer.get(&n).copied().unwrap_or(0.0).max(0.0);
        lp.add_sparse_row(&[(lift[k].1, params.lift_aquifer_intensity)], Sense::Le, stock * MCM_PER_KM3);

        let mut balance: Vec<(usize, f64)> = operating
            .iter()
            .filter(|r| r.element.origin == n)
            .filter_map(|r| production.iter().find(|(id, _)| *id == r.element.id).map(|&(_, v)| (v, 1.0)))
            .collect();
        balance.push((lift[k].1, 1.0));
        balance.push((import[k].1, 1.0));
        let d = demand.get(&n).copied().unwrap_or(0.0);
        lp.add_sparse_row(&balance, Sense::Eq, d);
    }

    WaterLp {
        lp,
        production,
        lift,
        import,
        lifting_cost: c,
    }
}

pub fn dispatch(
    scenario: &Scenario,
    resolved: &[Resolved<'_>],
    demand: &BTreeMap<NodeId, f64>,
    aquifer: &BTreeMap<NodeId, f64>,
    year: i32,
) -> Result<WaterDecision, SimError> {
    let operating = sector::operating(scenario, resolved, Sector::Water, year);
    let built = build_lp(scenario, &operating, demand, aquifer);
    let solution = sector::solve_dispatch(&built.lp, Sector::Water, year, &scenario.node_ids())?;
    let x = &solution.x;
    Ok(WaterDecision {
        production: built.production.iter().map(|(id, v)| (id.clone(), x[*v])).collect(),
        lift: built.lift.iter().map(|&(n, v)| (n, x[v])).collect(),
        import: built.import.iter().map(|&(n, v)| (n, x[v])).collect(),
    })
}

/// Electricity needed for lifting and desalination, TWh per node.
pub fn electricity_demand(scenario: &Scenario, resolved: &[Resolved<'_>], decision: &WaterDecision) -> BTreeMap<NodeId, f64> {
    let mut out = sector::per_node(&scenario.node_ids());
    for (n, v) in out.iter_mut() {
        let f = scenario.node(*n).map_or(0.0, |c| c.water.lift_electricity_intensity);
        // kWh/m³ · MCM = GWh
        *v += f * decision.lift_at(*n) / 1e3;
    }
    for r in resolved {
        if let TemplateSpec::Desalination {
            electricity_intensity, ..
        } = r.template.spec
        {
            *out.entry(r.element.origin).or_insert(0.0) += electricity_intensity * decision.produced(&r.element.id) / 1e3;
        }
    }
    out
}

/// Aquifer withdrawal in km³ per node.
pub fn withdrawal(scenario: &Scenario, decision: &WaterDecision) -> BTreeMap<NodeId, f64> {
    scenario
        .node_ids()
        .into_iter()
        .map(|n| {
            let f = scenario.node(n).map_or(0.0, |c| c.water.lift_aquifer_intensity);
            (n, f * decision.lift_at(n) / MCM_PER_KM3)
        })
        .collect()
}

/// Aquifer volume per node, km³.
#[derive(Debug, Clone, PartialEq)]
pub struct AquiferStock {
    pub volume: BTreeMap<NodeId, f64>,
}

impl AquiferStock {
    pub fn initial(scenario: &Scenario) -> Self {
        Self {
            volume: scenario.nodes.iter().map(|n| (n.id, n.water.initial_aquifer)).collect(),
        }
    }

    /// Stock after one year of withdrawals. Recharge is added (capped at
    /// the initial volume) only when the scenario enables it.
    pub fn update(&self, scenario: &Scenario, decision: &WaterDecision, year: i32) -> Result<AquiferStock, SimError> {
        let taken = withdrawal(scenario, decision);
        let mut volume = BTreeMap::new();
        for (&n, &q) in &self.volume {
            let mut next = q - taken.get(&n).copied().unwrap_or(0.0);
            if next < -STOCK_EPS {
                return Err(SimError::NegativeStock {
                    stock: "aquifer",
                    node: n,
                    year,
                    value: next,
                });
            }
            next = next.max(0.0);
            if scenario.apply_recharge {
                if let Some(c) = scenario.node(n) {
                    next = (next + c.water.recharge_rate).min(c.water.initial_aquifer.max(next));
                }
            }
            volume.insert(n, next);
        }
        Ok(AquiferStock { volume })
    }
}

pub fn element_costs(scenario: &Scenario, resolved: &[Resolved<'_>], decision: &WaterDecision, year: i32) -> Vec<ElementCost> {
    sector::element_costs(resolved, Sector::Water, year, |r| {
        desalination_unit_cost(scenario, r) * decision.produced(&r.element.id) * 1e6
    })
}

/// Net water revenue in $ per node; `demand` is total water demand.
pub fn revenue(
    scenario: &Scenario,
    resolved: &[Resolved<'_>],
    decision: &WaterDecision,
    demand: &BTreeMap<NodeId, f64>,
    year: i32,
) -> BTreeMap<NodeId, f64> {
    let mut out = BTreeMap::new();
    for n in scenario.node_ids() {
        let c = scenario.node(n).expect("declared node");
        let d = demand.get(&n).copied().unwrap_or(0.0);
        let lift = decision.lift_at(n);
        let v = c.water.local_price * (d - lift) * 1e6
            - c.energy.electricity_price * c.water.lift_electricity_intensity * lift * 1e3
            - c.water.import_price * decision.import_at(n) * 1e6;
        out.insert(n, v);
    }
    for cost in element_costs(scenario, resolved, decision, year) {
        *out.entry(cost.node).or_insert(0.0) -= cost.total();
    }
    out
}

/// The water role's federate. Holds the aquifer stock between years.
#[derive(Debug, Clone)]
pub struct WaterFederate {
    scenario: Scenario,
    aquifer: AquiferStock,
    last: Option<WaterDecision>,
}

impl WaterFederate {
    pub fn new(scenario: Scenario) -> Self {
        let aquifer = AquiferStock::initial(&scenario);
        Self {
            scenario,
            aquifer,
            last: None,
        }
    }

    pub fn aquifer(&self) -> &AquiferStock {
        &self.aquifer
    }
}

impl SectorFederate for WaterFederate {
    fn role(&self) -> Role {
        Role::Water
    }

    fn step(&mut self, year: i32, _iteration: u32, inbox: &Inbox) -> Result<Vec<Publication>, SimError> {
        let s = &self.scenario;
        let nodes = s.node_ids();
        let resolved = sector::resolve(s, &s.elements)?;
        let societal = inbox.by_node(ObjectClass::SocietalSystem, WATER_IN, &nodes);
        let agriculture = inbox.by_node(ObjectClass::AgricultureSystem, WATER_IN, &nodes);
        let demand: BTreeMap<NodeId, f64> = nodes.iter().map(|n| (*n, societal[n] + agriculture[n])).collect();

        let decision = dispatch(s, &resolved, &demand, &self.aquifer.volume, year)?;
        let electricity = electricity_demand(s, &resolved, &decision);
        let taken = withdrawal(s, &decision);
        let net = revenue(s, &resolved, &decision, &demand, year);
        let costs = element_costs(s, &resolved, &decision, year);

        let class = ObjectClass::WaterSystem;
        let mut out = Vec::new();
        for &n in &nodes {
            let name = n.as_str();
            let produced: f64 = resolved
                .iter()
                .filter(|r| r.element.origin == n)
                .map(|r| decision.produced(&r.element.id))
                .sum();
            let supply = produced + decision.lift_at(n) + decision.import_at(n);
            let shares = sector::split_supply(supply, &[agriculture[&n], societal[&n]]);
            let capital: f64 = costs.iter().filter(|c| c.node == n).fold(0.0, |acc, c| acc + c.capital);
            out.push(Publication::new(class, ELECTRICITY_IN, name, electricity[&n]));
            out.push(Publication::new(class, WATER_OUT_AGRICULTURE, name, shares[0]));
            out.push(Publication::new(class, WATER_OUT_SOCIETAL, name, shares[1]));
            out.push(Publication::new(class, CURRENCY_FLOW, name, net[&n]));
            out.push(Publication::new(class, CAPITAL_EXPENSES, name, capital));
            out.push(Publication::new(class, WATER_PRODUCTION, name, produced.max(0.0)));
            out.push(Publication::new(class, WATER_LIFT, name, decision.lift_at(n).max(0.0)));
            out.push(Publication::new(class, WATER_IMPORT, name, decision.import_at(n).max(0.0)));
            out.push(Publication::new(
                class,
                AQUIFER_STOCK,
                name,
                self.aquifer.volume.get(&n).copied().unwrap_or(0.0),
            ));
            out.push(Publication::new(class, AQUIFER_WITHDRAWAL, name, taken[&n].max(0.0)));
        }
        out.extend(sector::element_publications(&costs));
        self.last = Some(decision);
        Ok(out)
    }

    fn commit_year(&mut self, year: i32) -> Result<(), SimError> {
        if let Some(decision) = self.last.take() {
            self.aquifer = self.aquifer.update(&self.scenario, &decision, year)?;
        }
        Ok(())
    }
}
