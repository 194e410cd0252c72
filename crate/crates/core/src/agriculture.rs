//! Agriculture controller: land allocation, food transport, trade,
//! irrigation demand and net revenue.
//!
//! Inside the LP, food is carried in PJ so that $/GJ prices read directly
//! as M$ per unit; decisions are reported in ledger units (km², GJ).

use std::collections::BTreeMap;

use crate::fom::{
    ObjectClass, CAPITAL_EXPENSES, CURRENCY_FLOW, FOOD_EXPORT, FOOD_IMPORT, FOOD_IN, FOOD_OUT_SOCIETAL,
    FOOD_PRODUCTION, WATER_IN,
};
use crate::ledger::Publication;
use crate::lp::{LinearProgram, Sense};
use crate::scenario::{NodeId, Role, Scenario, Sector, TemplateSpec};
use crate::sector::{self, ElementCost, Inbox, Resolved, SectorFederate, SimError};
use crate::societal;

const GJ_PER_PJ: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgricultureDecision {
    /// km² in use per field.
    pub land_use: BTreeMap<String, f64>,
    /// GJ/year shipped per road.
    pub transport: BTreeMap<String, f64>,
    /// GJ/year per node.
    pub import: BTreeMap<NodeId, f64>,
    pub export: BTreeMap<NodeId, f64>,
}

/// The dispatch LP with the variable index of each decision.
#[derive(Debug, Clone)]
pub struct AgricultureLp {
    pub lp: LinearProgram,
    pub land: Vec<(String, usize)>,
    pub transport: Vec<(String, usize)>,
    pub import: Vec<(NodeId, usize)>,
    pub export: Vec<(NodeId, usize)>,
}

/// Builds the dispatch LP over `operating` elements. `demand` is food
/// demand in GJ and `population` in millions, per node.
pub fn build_lp(
    scenario: &Scenario,
    operating: &[Resolved<'_>],
    demand: &BTreeMap<NodeId, f64>,
    population: &BTreeMap<NodeId, f64>,
) -> AgricultureLp {
    let nodes = scenario.node_ids();
    let mut objective = Vec::new();
    let mut upper = Vec::new();
    let mut land = Vec::new();
    let mut transport = Vec::new();
    let mut import = Vec::new();
    let mut export = Vec::new();

    for r in operating {
        let water_price = scenario.node(r.element.origin).map_or(0.0, |n| n.water.local_price);
        match r.template.spec {
            TemplateSpec::Field {
                variable_cost,
                max_land,
                water_intensity,
                ..
            } => {
                land.push((r.element.id.clone(), objective.len()));
                // $/km² -> M$/km²; MCM/km² · $/m³ is already M$/km²
                objective.push(variable_cost / 1e6 + water_intensity * water_price);
                upper.push(Some(max_land));
            }
            TemplateSpec::Road {
                variable_cost,
                max_throughput,
                ..
            } => {
                transport.push((r.element.id.clone(), objective.len()));
                objective.push(variable_cost);
                upper.push(Some(max_throughput / GJ_PER_PJ));
            }
            _ => {}
        }
    }
    for &n in &nodes {
        let params = &scenario.node(n).expect("declared node").agriculture;
        import.push((n, objective.len()));
        objective.push(params.import_price);
        upper.push(None);
        export.push((n, objective.len()));
        objective.push(-params.export_price);
        upper.push(None);
    }

    let mut lp = LinearProgram::new(objective.len());
    lp.objective = objective;
    lp.upper = upper;
    let land_var = |id: &str| land.iter().find(|(e, _)| e == id).map(|&(_, v)| v);
    let road_var = |id: &str| transport.iter().find(|(e, _)| e == id).map(|&(_, v)| v);

    for (k, &n) in nodes.iter().enumerate() {
        let params = &scenario.node(n).expect("declared node").agriculture;
        let p = population.get(&n).copied().unwrap_or(0.0);
        let mut area = Vec::new();
        let mut labor = Vec::new();
        let mut balance = Vec::new();
        for r in operating.iter().filter(|r| r.element.origin == n) {
            if let TemplateSpec::Field {
                labor_intensity,
                food_yield,
                ..
            } = r.template.spec
            {
                let v = land_var(&r.element.id).expect("field variable");
                area.push((v, 1.0));
                // persons -> millions of persons
                labor.push((v, labor_intensity / 1e6));
                // TJ/km² -> PJ/km²
                balance.push((v, food_yield / 1e3));
            }
        }
        for r in operating {
            if let TemplateSpec::Road { efficiency, .. } = r.template.spec {
                let v = road_var(&r.element.id).expect("road variable");
                if r.element.origin == n {
                    balance.push((v, -1.0));
                }
                if r.element.destination() == n {
                    balance.push((v, efficiency));
                }
            }
        }
        if !area.is_empty() {
            // thousand km² -> km²
            lp.add_sparse_row(&area, Sense::Le, params.arable_land * 1e3);
            lp.add_sparse_row(&labor, Sense::Le, params.labor_fraction * p);
        }
        balance.push((import[k].1, 1.0));
        balance.push((export[k].1, -1.0));
        let d = demand.get(&n).copied().unwrap_or(0.0);
        lp.add_sparse_row(&balance, Sense::Eq, d / GJ_PER_PJ);
    }

    AgricultureLp {
        lp,
        land,
        transport,
        import,
        export,
    }
}

/// Solves the agriculture dispatch for `year` over the operating subset of
/// `resolved`.
pub fn dispatch(
    scenario: &Scenario,
    resolved: &[Resolved<'_>],
    demand: &BTreeMap<NodeId, f64>,
    population: &BTreeMap<NodeId, f64>,
    year: i32,
) -> Result<AgricultureDecision, SimError> {
    let operating = sector::operating(scenario, resolved, Sector::Agriculture, year);
    let built = build_lp(scenario, &operating, demand, population);
    let solution = sector::solve_dispatch(&built.lp, Sector::Agriculture, year, &scenario.node_ids())?;
    let x = &solution.x;
    Ok(AgricultureDecision {
        land_use: built.land.iter().map(|(id, v)| (id.clone(), x[*v])).collect(),
        transport: built
            .transport
            .iter()
            .map(|(id, v)| (id.clone(), x[*v] * GJ_PER_PJ))
            .collect(),
        import: built.import.iter().map(|&(n, v)| (n, x[v] * GJ_PER_PJ)).collect(),
        export: built.export.iter().map(|&(n, v)| (n, x[v] * GJ_PER_PJ)).collect(),
    })
}

fn land_of(decision: &AgricultureDecision, id: &str) -> f64 {
    decision.land_use.get(id).copied().unwrap_or(0.0)
}

fn shipped(decision: &AgricultureDecision, id: &str) -> f64 {
    decision.transport.get(id).copied().unwrap_or(0.0)
}

/// Irrigation water demand in MCM per node.
pub fn irrigation_demand(scenario: &Scenario, resolved: &[Resolved<'_>], decision: &AgricultureDecision) -> BTreeMap<NodeId, f64> {
    let mut out = sector::per_node(&scenario.node_ids());
    for r in resolved {
        if let TemplateSpec::Field { water_intensity, .. } = r.template.spec {
            *out.entry(r.element.origin).or_insert(0.0) += water_intensity * land_of(decision, &r.element.id);
        }
    }
    out
}

/// Food produced in GJ per node.
pub fn food_production(scenario: &Scenario, resolved: &[Resolved<'_>], decision: &AgricultureDecision) -> BTreeMap<NodeId, f64> {
    let mut out = sector::per_node(&scenario.node_ids());
    for r in resolved {
        if let TemplateSpec::Field { food_yield, .. } = r.template.spec {
            // TJ -> GJ
            *out.entry(r.element.origin).or_insert(0.0) += food_yield * 1e3 * land_of(decision, &r.element.id);
        }
    }
    out
}

/// Supply side of each node's food balance in GJ: production, net
/// transport after losses, and net trade.
pub fn food_supplied(scenario: &Scenario, resolved: &[Resolved<'_>], decision: &AgricultureDecision) -> BTreeMap<NodeId, f64> {
    let mut out = food_production(scenario, resolved, decision);
    for r in resolved {
        if let TemplateSpec::Road { efficiency, .. } = r.template.spec {
            let q = shipped(decision, &r.element.id);
            *out.entry(r.element.origin).or_insert(0.0) -= q;
            *out.entry(r.element.destination()).or_insert(0.0) += efficiency * q;
        }
    }
    for (n, v) in out.iter_mut() {
        *v += decision.import.get(n).copied().unwrap_or(0.0) - decision.export.get(n).copied().unwrap_or(0.0);
    }
    out
}

/// Capital, fixed and variable expenses of every agriculture element.
pub fn element_costs(scenario: &Scenario, resolved: &[Resolved<'_>], decision: &AgricultureDecision, year: i32) -> Vec<ElementCost> {
    sector::element_costs(resolved, Sector::Agriculture, year, |r| {
        let water_price = scenario.node(r.element.origin).map_or(0.0, |n| n.water.local_price);
        match r.template.spec {
            // MCM · $/m³ -> $ needs 1e6
            TemplateSpec::Field {
                variable_cost,
                water_intensity,
                ..
            } => (variable_cost + water_price * water_intensity * 1e6) * land_of(decision, &r.element.id),
            TemplateSpec::Road { variable_cost, .. } => variable_cost * shipped(decision, &r.element.id),
            _ => 0.0,
        }
    })
}

/// Net agriculture revenue in $ per node.
pub fn revenue(
    scenario: &Scenario,
    resolved: &[Resolved<'_>],
    decision: &AgricultureDecision,
    demand: &BTreeMap<NodeId, f64>,
    year: i32,
) -> BTreeMap<NodeId, f64> {
    let mut out = BTreeMap::new();
    for n in scenario.node_ids() {
        let p = &scenario.node(n).expect("declared node").agriculture;
        let d = demand.get(&n).copied().unwrap_or(0.0);
        let m = decision.import.get(&n).copied().unwrap_or(0.0);
        let x = decision.export.get(&n).copied().unwrap_or(0.0);
        out.insert(n, p.local_price * d + p.export_price * x - p.import_price * m);
    }
    for r in resolved {
        if let TemplateSpec::Road { efficiency, .. } = r.template.spec {
            let q = shipped(decision, &r.element.id);
            let local = |n: NodeId| scenario.node(n).map_or(0.0, |c| c.agriculture.local_price);
            *out.entry(r.element.origin).or_insert(0.0) += local(r.element.origin) * efficiency * q;
            *out.entry(r.element.destination()).or_insert(0.0) -= local(r.element.destination()) * efficiency * q;
        }
    }
    for c in element_costs(scenario, resolved, decision, year) {
        *out.entry(c.node).or_insert(0.0) -= c.total();
    }
    out
}

/// Population per node in millions.
pub fn population(scenario: &Scenario, year: i32) -> BTreeMap<NodeId, f64> {
    scenario
        .node_ids()
        .into_iter()
        .map(|n| {
            let node = scenario.node(n).expect("declared node");
            (n, societal::population(&node.societal.population, year as f64))
        })
        .collect()
}

/// The agriculture role's federate: owns its scenario view and elements.
#[derive(Debug, Clone)]
pub struct AgricultureFederate {
    scenario: Scenario,
}

impl AgricultureFederate {
    pub fn new(scenario: Scenario) -> Self {
        Self { scenario }
    }
}

impl SectorFederate for AgricultureFederate {
    fn role(&self) -> Role {
        Role::Agriculture
    }

    fn step(&mut self, year: i32, _iteration: u32, inbox: &Inbox) -> Result<Vec<Publication>, SimError> {
        let s = &self.scenario;
        let nodes = s.node_ids();
        let resolved = sector::resolve(s, &s.elements)?;
        let demand = inbox.by_node(ObjectClass::SocietalSystem, FOOD_IN, &nodes);
        let population = population(s, year);
        let decision = dispatch(s, &resolved, &demand, &population, year)?;

        let water = irrigation_demand(s, &resolved, &decision);
        let produced = food_production(s, &resolved, &decision);
        let supplied = food_supplied(s, &resolved, &decision);
        let net = revenue(s, &resolved, &decision, &demand, year);
        let costs = element_costs(s, &resolved, &decision, year);

        let class = ObjectClass::AgricultureSystem;
        let mut out = Vec::new();
        for &n in &nodes {
            let capital: f64 = costs.iter().filter(|c| c.node == n).fold(0.0, |acc, c| acc + c.capital);
            let name = n.as_str();
            out.push(Publication::new(class, WATER_IN, name, water[&n]));
            out.push(Publication::new(class, FOOD_OUT_SOCIETAL, name, supplied[&n].max(0.0)));
            out.push(Publication::new(class, CURRENCY_FLOW, name, net[&n]));
            out.push(Publication::new(class, CAPITAL_EXPENSES, name, capital));
            out.push(Publication::new(class, FOOD_PRODUCTION, name, produced[&n]));
            out.push(Publication::new(class, FOOD_IMPORT, name, decision.import[&n].max(0.0)));
            out.push(Publication::new(class, FOOD_EXPORT, name, decision.export[&n].max(0.0)));
        }
        out.extend(sector::element_publications(&costs));
        Ok(out)
    }

    fn commit_year(&mut self, _year: i32) -> Result<(), SimError> {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ElementInstance;

    fn bare() -> Scenario {
        let mut s = Scenario::default_scenario();
        s.elements.clear();
        s
    }

    fn field(id: &str, template: &str, node: NodeId) -> ElementInstance {
        ElementInstance {
            id: id.into(),
            template: template.into(),
            origin: node,
            destination: None,
            commission_start: 1950,
        }
    }

    fn demand(node: NodeId, d: f64) -> BTreeMap<NodeId, f64> {
        NodeId::ALL.iter().map(|&n| (n, if n == node { d } else { 0.0 })).collect()
    }

    fn big_population() -> BTreeMap<NodeId, f64> {
        NodeId::ALL.iter().map(|&n| (n, 100.0)).collect()
    }

    #[test]
    fn zero_demand_no_elements() {
        let s = bare();
        let d = dispatch(&s, &[], &demand(NodeId::Urban, 0.0), &big_population(), 1990).unwrap();
        assert!(d.import.values().chain(d.export.values()).all(|&v| v == 0.0));
        let net = revenue(&s, &[], &d, &demand(NodeId::Urban, 0.0), 1990);
        assert!(net.values().all(|&v| v == 0.0));
    }

    #[test]
    fn import_only_revenue() {
        // (60 − 70) $/GJ on every imported GJ
        let s = bare();
        let dem = demand(NodeId::Urban, 1e6);
        let d = dispatch(&s, &[], &dem, &big_population(), 1990).unwrap();
        assert!((d.import[&NodeId::Urban] - 1e6).abs() < 1e-6);
        let net = revenue(&s, &[], &d, &dem, 1990);
        assert!((net[&NodeId::Urban] + 1e7).abs() < 1e-3);
    }

    #[test]
    fn export_term() {
        let s = bare();
        let mut d = AgricultureDecision::default();
        d.export.insert(NodeId::Rural, 2.0);
        let net = revenue(&s, &[], &d, &demand(NodeId::Rural, 0.0), 1990);
        assert_eq!(net[&NodeId::Rural], 100.0);
    }

    #[test]
    fn irrigation_is_intensity_times_land() {
        let mut s = bare();
        s.elements.push(field("f", "small_field", NodeId::Rural));
        let resolved = sector::resolve(&s, &s.elements).unwrap();
        let mut d = AgricultureDecision::default();
        d.land_use.insert("f".into(), 100.0);
        assert!((irrigation_demand(&s, &resolved, &d)[&NodeId::Rural] - 150.0).abs() < 1e-12);
    }

    #[test]
    fn field_covers_small_demand_without_imports() {
        // Producing at 25 $/GJ beats importing at 70 and exporting at 50,
        // so the field runs at capacity and the surplus is exported.
        let mut s = bare();
        s.elements.push(field("f", "small_field", NodeId::Rural));
        let resolved = sector::resolve(&s, &s.elements).unwrap();
        let dem = demand(NodeId::Rural, 1e6);
        let d = dispatch(&s, &resolved, &dem, &big_population(), 1990).unwrap();
        assert!(d.import[&NodeId::Rural] < 1e-6);
        assert!((d.land_use["f"] - 500.0).abs() < 1e-9);
        assert!((d.export[&NodeId::Rural] - (500.0 * 5e3 - 1e6)).abs() < 1e-3);
    }

    #[test]
    fn labor_binds() {
        // 0.4 · 1 million people / 60 persons per km²
        let mut s = bare();
        s.elements.push(field("f", "large_field", NodeId::Rural));
        let resolved = sector::resolve(&s, &s.elements).unwrap();
        let pop: BTreeMap<NodeId, f64> = NodeId::ALL.iter().map(|&n| (n, 0.001)).collect();
        let dem = demand(NodeId::Rural, 1e9);
        let d = dispatch(&s, &resolved, &dem, &pop, 1990).unwrap();
        let bound = 0.4 * 0.001e6 / 60.0;
        assert!((d.land_use["f"] - bound).abs() < 1e-9, "{}", d.land_use["f"]);
    }

    #[test]
    fn balance_binds_and_trade_is_one_sided() {
        let s = Scenario::default_scenario();
        let resolved = sector::resolve(&s, &s.elements).unwrap();
        let year = 1995;
        let dem: BTreeMap<NodeId, f64> = s
            .node_ids()
            .into_iter()
            .map(|n| (n, societal::node_demand(s.node(n).unwrap(), &s.units, year).food))
            .collect();
        let d = dispatch(&s, &resolved, &dem, &population(&s, year), year).unwrap();
        let supplied = food_supplied(&s, &resolved, &d);
        for n in s.node_ids() {
            assert!((supplied[&n] - dem[&n]).abs() <= 1e-6 * dem[&n].max(1.0));
            assert!(d.import[&n].min(d.export[&n]) <= 1e-9);
        }
    }
}
