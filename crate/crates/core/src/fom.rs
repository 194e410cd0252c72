//! Federation object model: the object classes and attributes exchanged
//! between federates, with their units.
//!
//! Public attributes are the directed resource exchanges every federate may
//! subscribe to. Private attributes carry a role's internal quantities
//! (stocks, trade, production) to the coordinator's ledger for objective
//! scoring; they are never routed to other roles.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scenario::Role;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObjectClass {
    GenericElement,
    AgricultureSystem,
    WaterSystem,
    PetroleumSystem,
    ElectricalSystem,
    SocietalSystem,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 6] = [
        ObjectClass::GenericElement,
        ObjectClass::AgricultureSystem,
        ObjectClass::WaterSystem,
        ObjectClass::PetroleumSystem,
        ObjectClass::ElectricalSystem,
        ObjectClass::SocietalSystem,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectClass::GenericElement => "GenericElement",
            ObjectClass::AgricultureSystem => "AgricultureSystem",
            ObjectClass::WaterSystem => "WaterSystem",
            ObjectClass::PetroleumSystem => "PetroleumSystem",
            ObjectClass::ElectricalSystem => "ElectricalSystem",
            ObjectClass::SocietalSystem => "SocietalSystem",
        }
    }

    pub fn parse(s: &str) -> Option<ObjectClass> {
        ObjectClass::ALL.into_iter().find(|c| c.as_str() == s)
    }

    /// The role allowed to publish this class; `None` for classes owned by
    /// the coordinator.
    pub fn publisher(self) -> Option<Role> {
        match self {
            ObjectClass::AgricultureSystem => Some(Role::Agriculture),
            ObjectClass::WaterSystem => Some(Role::Water),
            ObjectClass::PetroleumSystem | ObjectClass::ElectricalSystem => Some(Role::Energy),
            ObjectClass::GenericElement | ObjectClass::SocietalSystem => None,
        }
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    Public,
    Private,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttributeDef {
    pub class: ObjectClass,
    pub name: &'static str,
    pub units: &'static str,
    pub visibility: Visibility,
}

pub const CURRENCY_FLOW: &str = "Currency Flow";
pub const CAPITAL_EXPENSES: &str = "Capital Expenses";

pub const WATER_IN: &str = "Water In";
pub const FOOD_IN: &str = "Food In";
pub const OIL_IN: &str = "Oil In";
pub const ELECTRICITY_IN: &str = "Electricity In";
pub const FOOD_OUT_SOCIETAL: &str = "Food Out (Societal)";
pub const WATER_OUT_AGRICULTURE: &str = "Water Out (Agriculture)";
pub const WATER_OUT_SOCIETAL: &str = "Water Out (Societal)";
pub const OIL_OUT_SOCIETAL: &str = "Oil Out (Societal)";
pub const OIL_OUT_ELECTRICAL: &str = "Oil Out (Electrical)";
pub const ELECTRICITY_OUT_WATER: &str = "Electricity Out (Water)";
pub const ELECTRICITY_OUT_SOCIETAL: &str = "Electricity Out (Societal)";

pub const FOOD_PRODUCTION: &str = "Food Production";
pub const FOOD_IMPORT: &str = "Food Import";
pub const FOOD_EXPORT: &str = "Food Export";
pub const WATER_PRODUCTION: &str = "Water Production";
pub const WATER_LIFT: &str = "Water Lift";
pub const WATER_IMPORT: &str = "Water Import";
pub const AQUIFER_STOCK: &str = "Aquifer Stock";
pub const AQUIFER_WITHDRAWAL: &str = "Aquifer Withdrawal";
pub const OIL_PRODUCTION: &str = "Oil Production";
pub const OIL_IMPORT: &str = "Oil Import";
pub const OIL_EXPORT: &str = "Oil Export";
pub const RESERVOIR_STOCK: &str = "Reservoir Stock";
pub const RESERVOIR_WITHDRAWAL: &str = "Reservoir Withdrawal";
pub const ELECTRICITY_PRODUCTION: &str = "Electricity Production";
pub const PRIVATE_GENERATION: &str = "Private Generation";
pub const ELECTRICITY_OUT_PETROLEUM: &str = "Electricity Out (Petroleum)";

const fn public(class: ObjectClass, name: &'static str, units: &'static str) -> AttributeDef {
    AttributeDef {
        class,
        name,
        units,
        visibility: Visibility::Public,
    }
}

const fn private(class: ObjectClass, name: &'static str, units: &'static str) -> AttributeDef {
    AttributeDef {
        class,
        name,
        units,
        visibility: Visibility::Private,
    }
}

use ObjectClass::*;

pub static ATTRIBUTES: &[AttributeDef] = &[
    public(GenericElement, CURRENCY_FLOW, "$"),
    public(GenericElement, CAPITAL_EXPENSES, "$"),
    public(AgricultureSystem, CURRENCY_FLOW, "$"),
    public(AgricultureSystem, CAPITAL_EXPENSES, "$"),
    public(AgricultureSystem, WATER_IN, "MCM"),
    public(AgricultureSystem, FOOD_OUT_SOCIETAL, "GJ"),
    private(AgricultureSystem, FOOD_PRODUCTION, "GJ"),
    private(AgricultureSystem, FOOD_IMPORT, "GJ"),
    private(AgricultureSystem, FOOD_EXPORT, "GJ"),
    public(WaterSystem, CURRENCY_FLOW, "$"),
    public(WaterSystem, CAPITAL_EXPENSES, "$"),
    public(WaterSystem, ELECTRICITY_IN, "TWh"),
    public(WaterSystem, WATER_OUT_AGRICULTURE, "MCM"),
    public(WaterSystem, WATER_OUT_SOCIETAL, "MCM"),
    private(WaterSystem, WATER_PRODUCTION, "MCM"),
    private(WaterSystem, WATER_LIFT, "MCM"),
    private(WaterSystem, WATER_IMPORT, "MCM"),
    private(WaterSystem, AQUIFER_STOCK, "km3"),
    private(WaterSystem, AQUIFER_WITHDRAWAL, "km3"),
    public(PetroleumSystem, CURRENCY_FLOW, "$"),
    public(PetroleumSystem, CAPITAL_EXPENSES, "$"),
    public(PetroleumSystem, ELECTRICITY_IN, "TWh"),
    public(PetroleumSystem, OIL_OUT_SOCIETAL, "Mtoe"),
    public(PetroleumSystem, OIL_OUT_ELECTRICAL, "Mtoe"),
    private(PetroleumSystem, OIL_PRODUCTION, "Mtoe"),
    private(PetroleumSystem, OIL_IMPORT, "Mtoe"),
    private(PetroleumSystem, OIL_EXPORT, "Mtoe"),
    private(PetroleumSystem, RESERVOIR_STOCK, "Gtoe"),
    private(PetroleumSystem, RESERVOIR_WITHDRAWAL, "Gtoe"),
    public(ElectricalSystem, CURRENCY_FLOW, "$"),
    public(ElectricalSystem, CAPITAL_EXPENSES, "$"),
    public(ElectricalSystem, OIL_IN, "Mtoe"),
    public(ElectricalSystem, ELECTRICITY_OUT_WATER, "TWh"),
    public(ElectricalSystem, ELECTRICITY_OUT_SOCIETAL, "TWh"),
    private(ElectricalSystem, ELECTRICITY_PRODUCTION, "TWh"),
    private(ElectricalSystem, PRIVATE_GENERATION, "TWh"),
    private(ElectricalSystem, ELECTRICITY_OUT_PETROLEUM, "TWh"),
    public(SocietalSystem, WATER_IN, "MCM"),
    public(SocietalSystem, FOOD_IN, "GJ"),
    public(SocietalSystem, OIL_IN, "Mtoe"),
    public(SocietalSystem, ELECTRICITY_IN, "TWh"),
];

pub fn lookup(class: ObjectClass, name: &str) -> Option<&'static AttributeDef> {
    ATTRIBUTES.iter().find(|a| a.class == class && a.name == name)
}

/// A (class, attribute) pair as declared in publications and
/// subscriptions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AttributeRef {
    pub class_name: String,
    pub attribute: String,
}

impl AttributeRef {
    pub fn new(class: ObjectClass, attribute: &str) -> Self {
        Self {
            class_name: class.as_str().to_string(),
            attribute: attribute.to_string(),
        }
    }

    pub fn resolve(&self) -> Option<&'static AttributeDef> {
        lookup(ObjectClass::parse(&self.class_name)?, &self.attribute)
    }
}

/// Every attribute a role may publish: its own classes plus per-element
/// cost records.
pub fn publications(role: Role) -> Vec<AttributeRef> {
    ATTRIBUTES
        .iter()
        .filter(|a| a.class.publisher() == Some(role) || a.class == GenericElement)
        .map(|a| AttributeRef::new(a.class, a.name))
        .collect()
}

/// The counterpart attributes a role's controllers read.
pub fn subscriptions(role: Role) -> Vec<AttributeRef> {
    match role {
        Role::Agriculture => vec![AttributeRef::new(SocietalSystem, FOOD_IN)],
        Role::Water => vec![
            AttributeRef::new(SocietalSystem, WATER_IN),
            AttributeRef::new(AgricultureSystem, WATER_IN),
        ],
        Role::Energy => vec![
            AttributeRef::new(SocietalSystem, OIL_IN),
            AttributeRef::new(SocietalSystem, ELECTRICITY_IN),
            AttributeRef::new(WaterSystem, ELECTRICITY_IN),
        ],
    }
}

/// Supply/demand pairs that must close at the end of each year:
/// `(supplier, supply attribute)` against `(consumer, demand attribute)`.
pub static CLOSURE_PAIRS: &[((ObjectClass, &str), (ObjectClass, &str))] = &[
    ((AgricultureSystem, FOOD_OUT_SOCIETAL), (SocietalSystem, FOOD_IN)),
    ((WaterSystem, WATER_OUT_AGRICULTURE), (AgricultureSystem, WATER_IN)),
    ((WaterSystem, WATER_OUT_SOCIETAL), (SocietalSystem, WATER_IN)),
    ((ElectricalSystem, ELECTRICITY_OUT_WATER), (WaterSystem, ELECTRICITY_IN)),
    ((ElectricalSystem, ELECTRICITY_OUT_SOCIETAL), (SocietalSystem, ELECTRICITY_IN)),
    ((PetroleumSystem, OIL_OUT_SOCIETAL), (SocietalSystem, OIL_IN)),
    ((PetroleumSystem, OIL_OUT_ELECTRICAL), (ElectricalSystem, OIL_IN)),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attributes_resolve_with_units() {
        assert_eq!(lookup(WaterSystem, ELECTRICITY_IN).unwrap().units, "TWh");
        assert_eq!(lookup(SocietalSystem, FOOD_IN).unwrap().units, "GJ");
        assert!(lookup(WaterSystem, "Wind Out").is_none());
        assert!(lookup(AgricultureSystem, OIL_IN).is_none());
    }

    #[test]
    fn publications_stay_within_role_classes() {
        for role in Role::ALL {
            for p in publications(role) {
                let def = p.resolve().unwrap();
                assert!(def.class.publisher() == Some(role) || def.class == GenericElement);
            }
        }
    }

    #[test]
    fn subscriptions_are_public() {
        for role in Role::ALL {
            for s in subscriptions(role) {
                assert_eq!(s.resolve().unwrap().visibility, Visibility::Public);
            }
        }
    }

    #[test]
    fn closure_pairs_share_units() {
        for ((sc, sa), (dc, da)) in CLOSURE_PAIRS {
            assert_eq!(lookup(*sc, sa).unwrap().units, lookup(*dc, da).unwrap().units);
        }
    }
}
