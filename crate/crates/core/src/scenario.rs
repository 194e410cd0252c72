//! Scenario data model: nodes, element templates, element instances,
//! objective parameters and the simulation horizon.
//!
//! Scenario documents are JSON. [`Scenario::from_json`] parses, then runs
//! [`validate`], which reports every violated invariant with the path of
//! the offending value.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

const DEFAULT_SCENARIO: &str = include_str!("../data/default_scenario.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeId {
    Industrial,
    Urban,
    Rural,
}

impl NodeId {
    pub const ALL: [NodeId; 3] = [NodeId::Industrial, NodeId::Urban, NodeId::Rural];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeId::Industrial => "industrial",
            NodeId::Urban => "urban",
            NodeId::Rural => "rural",
        }
    }

    pub fn parse(s: &str) -> Option<NodeId> {
        NodeId::ALL.into_iter().find(|n| n.as_str() == s)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Player roles. The energy role owns both petroleum and electrical systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Agriculture,
    Water,
    Energy,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Agriculture, Role::Water, Role::Energy];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Agriculture => "agriculture",
            Role::Water => "water",
            Role::Energy => "energy",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Agriculture,
    Water,
    Petroleum,
    Electrical,
}

impl Sector {
    pub fn role(self) -> Role {
        match self {
            Sector::Agriculture => Role::Agriculture,
            Sector::Water => Role::Water,
            Sector::Petroleum | Sector::Electrical => Role::Energy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Production,
    Distribution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Horizon {
    pub start: i32,
    pub plan_start: i32,
    pub end: i32,
    pub iterations_per_year: u32,
}

impl Horizon {
    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.start..=self.end
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.start..=self.end).contains(&year)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PopulationParams {
    pub datum_year: f64,
    /// Million people at the datum year.
    pub datum: f64,
    pub max: f64,
    /// Logistic growth rate per year (fraction).
    pub rate: f64,
}

/// Per-capita demand growth. Units per resource: food kcal/day, water
/// L/day, oil toe/year, electricity kWh/day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DemandParams {
    pub datum_year: f64,
    pub datum: f64,
    pub min: f64,
    pub max: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SocietalParams {
    pub population: PopulationParams,
    pub food: DemandParams,
    pub water: DemandParams,
    pub oil: DemandParams,
    pub electricity: DemandParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AgricultureNodeParams {
    /// $/GJ
    pub local_price: f64,
    pub import_price: f64,
    pub export_price: f64,
    /// Fraction of population available as farm labour.
    pub labor_fraction: f64,
    /// Thousand km².
    pub arable_land: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct WaterNodeParams {
    /// $/m³
    pub local_price: f64,
    pub import_price: f64,
    /// km³ in the first simulated year.
    pub initial_aquifer: f64,
    /// km³/year
    pub recharge_rate: f64,
    pub coastal: u8,
    /// m³ of aquifer withdrawn per m³ lifted.
    pub lift_aquifer_intensity: f64,
    /// kWh/m³
    pub lift_electricity_intensity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct EnergyNodeParams {
    /// $/toe
    pub oil_local_price: f64,
    pub oil_import_price: f64,
    pub oil_export_price: f64,
    /// Billion toe in the first simulated year.
    pub initial_reservoir: f64,
    /// $/MWh
    pub electricity_price: f64,
    /// toe/MWh for private generation.
    pub private_oil_intensity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NodeConfig {
    pub id: NodeId,
    pub societal: SocietalParams,
    pub agriculture: AgricultureNodeParams,
    pub water: WaterNodeParams,
    pub energy: EnergyNodeParams,
}

/// Operating characteristics by template type. Units follow the flow
/// ledger: km², GJ, MCM, Mtoe, TWh; costs in $ per unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum TemplateSpec {
    #[serde(rename_all = "camelCase")]
    Field {
        /// $/km²/year
        variable_cost: f64,
        /// km²
        max_land: f64,
        /// persons/km²
        labor_intensity: f64,
        /// MCM/km²/year
        water_intensity: f64,
        /// TJ/km²/year
        food_yield: f64,
    },
    #[serde(rename_all = "camelCase")]
    Road {
        /// $/GJ
        variable_cost: f64,
        /// GJ/year
        max_throughput: f64,
        efficiency: f64,
    },
    #[serde(rename_all = "camelCase")]
    Desalination {
        /// $/m³
        variable_cost: f64,
        /// MCM/year
        max_production: f64,
        /// kWh/m³
        electricity_intensity: f64,
    },
    #[serde(rename_all = "camelCase")]
    Well {
        /// $/toe
        variable_cost: f64,
        /// Mtoe/year
        max_production: f64,
        /// toe of reservoir per toe produced
        reservoir_intensity: f64,
    },
    #[serde(rename_all = "camelCase")]
    Pipeline {
        /// $/toe
        variable_cost: f64,
        /// Mtoe/year
        max_throughput: f64,
        /// kWh/toe
        electricity_intensity: f64,
        efficiency: f64,
    },
    #[serde(rename_all = "camelCase")]
    PowerPlant {
        /// $/MWh
        variable_cost: f64,
        /// TWh/year
        max_production: f64,
        /// toe/MWh
        oil_intensity: f64,
    },
}

impl TemplateSpec {
    pub fn sector(&self) -> Sector {
        match self {
            TemplateSpec::Field { .. } | TemplateSpec::Road { .. } => Sector::Agriculture,
            TemplateSpec::Desalination { .. } => Sector::Water,
            TemplateSpec::Well { .. } | TemplateSpec::Pipeline { .. } => Sector::Petroleum,
            TemplateSpec::PowerPlant { .. } => Sector::Electrical,
        }
    }

    pub fn kind(&self) -> ElementKind {
        match self {
            TemplateSpec::Road { .. } | TemplateSpec::Pipeline { .. } => ElementKind::Distribution,
            _ => ElementKind::Production,
        }
    }

    /// Maximum operating level in the template's ledger units.
    pub fn capacity(&self) -> f64 {
        match *self {
            TemplateSpec::Field { max_land, .. } => max_land,
            TemplateSpec::Road { max_throughput, .. } => max_throughput,
            TemplateSpec::Desalination { max_production, .. } => max_production,
            TemplateSpec::Well { max_production, .. } => max_production,
            TemplateSpec::Pipeline { max_throughput, .. } => max_throughput,
            TemplateSpec::PowerPlant { max_production, .. } => max_production,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ElementTemplate {
    pub name: String,
    /// Million $ per commissioning year.
    pub capital_cost: f64,
    pub capital_years: u32,
    /// Million $ per operating year.
    pub fixed_cost: f64,
    #[serde(default = "default_lifespan")]
    pub lifespan: u32,
    pub spec: TemplateSpec,
}

fn default_lifespan() -> u32 {
    60
}

impl ElementTemplate {
    pub fn sector(&self) -> Sector {
        self.spec.sector()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ElementInstance {
    pub id: String,
    pub template: String,
    pub origin: NodeId,
    /// Defaults to `origin` for production elements.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination: Option<NodeId>,
    pub commission_start: i32,
}

impl ElementInstance {
    pub fn destination(&self) -> NodeId {
        self.destination.unwrap_or(self.origin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SectorObjectiveParams {
    /// $ at the reference year.
    pub revenue_min: f64,
    pub revenue_max: f64,
    pub revenue_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub investment_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub investment_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum JointVisibility {
    #[default]
    Quantitative,
    Qualitative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ObjectiveParams {
    pub food_target: f64,
    pub aquifer_band: [f64; 2],
    pub reservoir_band: [f64; 2],
    /// Base year of the compounding growth curve for revenue and investment
    /// targets.
    pub growth_base_year: i32,
    pub reference_year: i32,
    pub agriculture: SectorObjectiveParams,
    pub water: SectorObjectiveParams,
    pub energy: SectorObjectiveParams,
    pub joint: SectorObjectiveParams,
    #[serde(default)]
    pub joint_visibility: JointVisibility,
}

impl ObjectiveParams {
    pub fn for_role(&self, role: Role) -> &SectorObjectiveParams {
        match role {
            Role::Agriculture => &self.agriculture,
            Role::Water => &self.water,
            Role::Energy => &self.energy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct UnitConventions {
    pub kcal_per_gj: f64,
    pub days_per_year: f64,
}

impl Default for UnitConventions {
    fn default() -> Self {
        Self {
            kcal_per_gj: 238_846.0,
            days_per_year: 365.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Scenario {
    pub format_version: u32,
    pub horizon: Horizon,
    /// $ of capital expenses per year before a year is flagged.
    pub budget_limit: f64,
    #[serde(default)]
    pub initial_currency: f64,
    #[serde(default)]
    pub units: UnitConventions,
    #[serde(default)]
    pub apply_recharge: bool,
    pub nodes: Vec<NodeConfig>,
    pub templates: BTreeMap<String, ElementTemplate>,
    #[serde(default)]
    pub elements: Vec<ElementInstance>,
    pub objectives: ObjectiveParams,
}

/// One invariant violation, located by a JSON-pointer-like path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("scenario has {} invariant violation(s): {}", .0.len(), join_findings(.0))]
    Invalid(Vec<Finding>),
    #[error("unsupported format version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn join_findings(findings: &[Finding]) -> String {
    findings
        .iter()
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// A set of elements added on top of the scenario's existing ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Plan {
    #[serde(default = "plan_format_version")]
    pub format_version: u32,
    pub elements: Vec<ElementInstance>,
}

fn plan_format_version() -> u32 {
    FORMAT_VERSION
}

impl Plan {
    pub fn new(elements: Vec<ElementInstance>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            elements,
        }
    }

    pub fn from_json(text: &str) -> Result<Plan, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let plan: Plan = serde_path_to_error::deserialize(de).map_err(schema_error)?;
        if plan.format_version != FORMAT_VERSION {
            return Err(ScenarioError::Version {
                found: plan.format_version,
            });
        }
        Ok(plan)
    }

    /// Elements belonging to `role`.
    pub fn for_role(&self, scenario: &Scenario, role: Role) -> Plan {
        Plan::new(
            self.elements
                .iter()
                .filter(|e| {
                    scenario
                        .templates
                        .get(&e.template)
                        .is_some_and(|t| t.sector().role() == role)
                })
                .cloned()
                .collect(),
        )
    }
}

fn schema_error(err: serde_path_to_error::Error<serde_json::Error>) -> ScenarioError {
    let path = err.path().to_string();
    ScenarioError::Schema {
        path: if path.is_empty() { "/".into() } else { path },
        message: err.into_inner().to_string(),
    }
}

impl Scenario {
    /// The bundled scenario: three regions, the full template catalogue and
    /// a handful of legacy elements commissioned before planning starts.
    pub fn default_scenario() -> Scenario {
        Scenario::from_json(DEFAULT_SCENARIO).expect("bundled scenario is valid")
    }

    pub fn default_document() -> &'static str {
        DEFAULT_SCENARIO
    }

    /// Parses without running invariant checks.
    pub fn parse_unchecked(text: &str) -> Result<Scenario, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(schema_error)?;
        if scenario.format_version != FORMAT_VERSION {
            return Err(ScenarioError::Version {
                found: scenario.format_version,
            });
        }
        Ok(scenario)
    }

    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let scenario = Scenario::parse_unchecked(text)?;
        let findings = validate(&scenario);
        if findings.is_empty() {
            Ok(scenario)
        } else {
            Err(ScenarioError::Invalid(findings))
        }
    }

    pub fn from_path(path: &std::path::Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Scenario::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    /// SHA-256 of the compact JSON form, used to bind session logs to the
    /// scenario they were recorded against.
    pub fn digest(&self) -> String {
        let compact = serde_json::to_vec(self).expect("scenario serialises");
        hex::encode(Sha256::digest(compact))
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeConfig> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self.nodes.iter().map(|n| n.id).collect();
        ids.sort();
        ids
    }

    pub fn template(&self, id: &str) -> Option<&ElementTemplate> {
        self.templates.get(id)
    }

    /// Returns a copy with `plan` appended to the existing elements,
    /// validated as a whole.
    pub fn with_plan(&self, plan: &Plan) -> Result<Scenario, ScenarioError> {
        let mut merged = self.clone();
        merged.elements.extend(plan.elements.iter().cloned());
        let mut findings = validate(&merged);
        let first_plan = self.elements.len();
        for (i, e) in merged.elements.iter().enumerate().skip(first_plan) {
            if e.commission_start < self.horizon.plan_start {
                findings.push(Finding {
                    path: format!("/elements/{i}/commissionStart"),
                    message: format!(
                        "planned element {} starts before the planning period ({})",
                        e.id, self.horizon.plan_start
                    ),
                });
            }
        }
        if findings.is_empty() {
            Ok(merged)
        } else {
            Err(ScenarioError::Invalid(findings))
        }
    }

    /// Elements of `role`, in declaration order.
    pub fn elements_for(&self, role: Role) -> Vec<ElementInstance> {
        self.elements
            .iter()
            .filter(|e| {
                self.templates
                    .get(&e.template)
                    .is_some_and(|t| t.sector().role() == role)
            })
            .cloned()
            .collect()
    }
}

fn check_nonneg(findings: &mut Vec<Finding>, path: String, value: f64) {
    if !value.is_finite() || value < 0.0 {
        findings.push(Finding {
            path,
            message: format!("must be finite and nonnegative, got {value}"),
        });
    }
}

fn check_fraction(findings: &mut Vec<Finding>, path: String, value: f64, open_low: bool) {
    let ok = value.is_finite() && value <= 1.0 && if open_low { value > 0.0 } else { value >= 0.0 };
    if !ok {
        let range = if open_low { "(0, 1]" } else { "[0, 1]" };
        findings.push(Finding {
            path,
            message: format!("must lie in {range}, got {value}"),
        });
    }
}

/// Checks every scenario invariant and returns all violations.
pub fn validate(s: &Scenario) -> Vec<Finding> {
    let mut f = Vec::new();
    let h = &s.horizon;
    if !(h.start <= h.plan_start && h.plan_start < h.end) {
        f.push(Finding {
            path: "/horizon".into(),
            message: format!(
                "requires start <= planStart < end, got {} / {} / {}",
                h.start, h.plan_start, h.end
            ),
        });
    }
    if h.iterations_per_year < 1 {
        f.push(Finding {
            path: "/horizon/iterationsPerYear".into(),
            message: "must be at least 1".into(),
        });
    }
    check_nonneg(&mut f, "/budgetLimit".into(), s.budget_limit);
    if !s.initial_currency.is_finite() {
        f.push(Finding {
            path: "/initialCurrency".into(),
            message: "must be finite".into(),
        });
    }
    if !(s.units.kcal_per_gj > 0.0 && s.units.days_per_year > 0.0) {
        f.push(Finding {
            path: "/units".into(),
            message: "conversion constants must be positive".into(),
        });
    }

    let mut seen_nodes = Vec::new();
    for (i, n) in s.nodes.iter().enumerate() {
        let p = format!("/nodes/{i}");
        if seen_nodes.contains(&n.id) {
            f.push(Finding {
                path: format!("{p}/id"),
                message: format!("duplicate node {}", n.id),
            });
        }
        seen_nodes.push(n.id);
        let pop = &n.societal.population;
        check_nonneg(&mut f, format!("{p}/societal/population/datum"), pop.datum);
        check_nonneg(&mut f, format!("{p}/societal/population/rate"), pop.rate);
        if !(pop.datum > 0.0 && pop.datum <= pop.max) {
            f.push(Finding {
                path: format!("{p}/societal/population"),
                message: "requires 0 < datum <= max".into(),
            });
        }
        for (name, d) in [
            ("food", &n.societal.food),
            ("water", &n.societal.water),
            ("oil", &n.societal.oil),
            ("electricity", &n.societal.electricity),
        ] {
            let dp = format!("{p}/societal/{name}");
            check_nonneg(&mut f, format!("{dp}/min"), d.min);
            check_nonneg(&mut f, format!("{dp}/rate"), d.rate);
            if !(d.min <= d.datum && d.datum <= d.max && d.min < d.max) {
                f.push(Finding {
                    path: dp,
                    message: "requires min <= datum <= max and min < max".into(),
                });
            }
        }
        let a = &n.agriculture;
        for (name, v) in [
            ("localPrice", a.local_price),
            ("importPrice", a.import_price),
            ("exportPrice", a.export_price),
            ("arableLand", a.arable_land),
        ] {
            check_nonneg(&mut f, format!("{p}/agriculture/{name}"), v);
        }
        check_fraction(&mut f, format!("{p}/agriculture/laborFraction"), a.labor_fraction, false);
        let w = &n.water;
        for (name, v) in [
            ("localPrice", w.local_price),
            ("importPrice", w.import_price),
            ("initialAquifer", w.initial_aquifer),
            ("rechargeRate", w.recharge_rate),
            ("liftAquiferIntensity", w.lift_aquifer_intensity),
            ("liftElectricityIntensity", w.lift_electricity_intensity),
        ] {
            check_nonneg(&mut f, format!("{p}/water/{name}"), v);
        }
        if w.coastal > 1 {
            f.push(Finding {
                path: format!("{p}/water/coastal"),
                message: format!("must be 0 or 1, got {}", w.coastal),
            });
        }
        let e = &n.energy;
        for (name, v) in [
            ("oilLocalPrice", e.oil_local_price),
            ("oilImportPrice", e.oil_import_price),
            ("oilExportPrice", e.oil_export_price),
            ("initialReservoir", e.initial_reservoir),
            ("electricityPrice", e.electricity_price),
            ("privateOilIntensity", e.private_oil_intensity),
        ] {
            check_nonneg(&mut f, format!("{p}/energy/{name}"), v);
        }
    }

    for (id, t) in &s.templates {
        let p = format!("/templates/{id}");
        check_nonneg(&mut f, format!("{p}/capitalCost"), t.capital_cost);
        check_nonneg(&mut f, format!("{p}/fixedCost"), t.fixed_cost);
        if t.capital_years < 1 {
            f.push(Finding {
                path: format!("{p}/capitalYears"),
                message: "must be at least 1".into(),
            });
        }
        let sp = format!("{p}/spec");
        let capacity = t.spec.capacity();
        if !(capacity.is_finite() && capacity > 0.0) {
            f.push(Finding {
                path: format!("{sp}/capacity"),
                message: format!("capacity must be positive, got {capacity}"),
            });
        }
        match t.spec {
            TemplateSpec::Field {
                variable_cost,
                labor_intensity,
                water_intensity,
                food_yield,
                ..
            } => {
                check_nonneg(&mut f, format!("{sp}/variableCost"), variable_cost);
                check_nonneg(&mut f, format!("{sp}/laborIntensity"), labor_intensity);
                check_nonneg(&mut f, format!("{sp}/waterIntensity"), water_intensity);
                check_nonneg(&mut f, format!("{sp}/foodYield"), food_yield);
            }
            TemplateSpec::Road {
                variable_cost,
                efficiency,
                ..
            } => {
                check_nonneg(&mut f, format!("{sp}/variableCost"), variable_cost);
                check_fraction(&mut f, format!("{sp}/efficiency"), efficiency, true);
            }
            TemplateSpec::Desalination {
                variable_cost,
                electricity_intensity,
                ..
            } => {
                check_nonneg(&mut f, format!("{sp}/variableCost"), variable_cost);
                check_nonneg(&mut f, format!("{sp}/electricityIntensity"), electricity_intensity);
            }
            TemplateSpec::Well {
                variable_cost,
                reservoir_intensity,
                ..
            } => {
                check_nonneg(&mut f, format!("{sp}/variableCost"), variable_cost);
                check_nonneg(&mut f, format!("{sp}/reservoirIntensity"), reservoir_intensity);
            }
            TemplateSpec::Pipeline {
                variable_cost,
                electricity_intensity,
                efficiency,
                ..
            } => {
                check_nonneg(&mut f, format!("{sp}/variableCost"), variable_cost);
                check_nonneg(&mut f, format!("{sp}/electricityIntensity"), electricity_intensity);
                check_fraction(&mut f, format!("{sp}/efficiency"), efficiency, true);
            }
            TemplateSpec::PowerPlant {
                variable_cost,
                oil_intensity,
                ..
            } => {
                check_nonneg(&mut f, format!("{sp}/variableCost"), variable_cost);
                check_nonneg(&mut f, format!("{sp}/oilIntensity"), oil_intensity);
            }
        }
    }

    let mut seen_ids: Vec<&str> = Vec::new();
    for (i, e) in s.elements.iter().enumerate() {
        let p = format!("/elements/{i}");
        if seen_ids.contains(&e.id.as_str()) {
            f.push(Finding {
                path: format!("{p}/id"),
                message: format!("duplicate element id {}", e.id),
            });
        }
        seen_ids.push(&e.id);
        let template = s.templates.get(&e.template);
        if template.is_none() {
            f.push(Finding {
                path: format!("{p}/template"),
                message: format!("unknown template {}", e.template),
            });
        }
        if !seen_nodes.contains(&e.origin) {
            f.push(Finding {
                path: format!("{p}/origin"),
                message: format!("undeclared node {}", e.origin),
            });
        }
        if !seen_nodes.contains(&e.destination()) {
            f.push(Finding {
                path: format!("{p}/destination"),
                message: format!("undeclared node {}", e.destination()),
            });
        }
        if let Some(t) = template {
            let distinct = e.origin != e.destination();
            match t.spec.kind() {
                ElementKind::Production if distinct => f.push(Finding {
                    path: format!("{p}/destination"),
                    message: "production elements must share origin and destination".into(),
                }),
                ElementKind::Distribution if !distinct => f.push(Finding {
                    path: format!("{p}/destination"),
                    message: "distribution elements need a distinct destination".into(),
                }),
                _ => {}
            }
        }
        if e.commission_start > h.end {
            f.push(Finding {
                path: format!("{p}/commissionStart"),
                message: format!("starts after the horizon ends ({})", h.end),
            });
        }
    }

    let o = &s.objectives;
    check_fraction(&mut f, "/objectives/foodTarget".into(), o.food_target, true);
    for (name, band) in [("aquiferBand", o.aquifer_band), ("reservoirBand", o.reservoir_band)] {
        if !(band[0] >= 0.0 && band[0] < band[1]) {
            f.push(Finding {
                path: format!("/objectives/{name}"),
                message: "requires 0 <= low < high".into(),
            });
        }
    }
    if o.reference_year <= o.growth_base_year {
        f.push(Finding {
            path: "/objectives/referenceYear".into(),
            message: "must follow growthBaseYear".into(),
        });
    }
    for (name, p) in [
        ("agriculture", &o.agriculture),
        ("water", &o.water),
        ("energy", &o.energy),
        ("joint", &o.joint),
    ] {
        let path = format!("/objectives/{name}");
        if !(p.revenue_min < p.revenue_max) {
            f.push(Finding {
                path: format!("{path}/revenueMin"),
                message: "must be below revenueMax".into(),
            });
        }
        if !(p.revenue_rate > 0.0 && p.revenue_rate < 1.0) {
            f.push(Finding {
                path: format!("{path}/revenueRate"),
                message: "must lie in (0, 1)".into(),
            });
        }
        let needs_investment = name != "joint";
        match (p.investment_max, p.investment_rate) {
            (Some(max), Some(rate)) => {
                if !(max > 0.0) {
                    f.push(Finding {
                        path: format!("{path}/investmentMax"),
                        message: "must be positive".into(),
                    });
                }
                if !(rate > 0.0 && rate < 1.0) {
                    f.push(Finding {
                        path: format!("{path}/investmentRate"),
                        message: "must lie in (0, 1)".into(),
                    });
                }
            }
            (None, None) if !needs_investment => {}
            _ => f.push(Finding {
                path: format!("{path}/investmentMax"),
                message: "role sectors need investmentMax and investmentRate".into(),
            }),
        }
    }
    f
}
