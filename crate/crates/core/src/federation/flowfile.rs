//! Asynchronous exchange through static flow files.
//!
//! Each role runs its federate locally against boundary series imported
//! from the other roles' files and societal demands, then exports its own
//! public series for the others. A document starts with a version tag line,
//! then a CSV header and one row per (year, class, object, attribute) at the
//! final iteration of each year.

use std::collections::{BTreeMap, BTreeSet};

use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fom::{self, ObjectClass, Visibility};
use crate::ledger::FlowLedger;
use crate::scenario::{Role, Scenario};
use crate::sector::{Inbox, SimError};
use crate::societal;

use super::driver::role_scenario;

pub const FLOW_FORMAT_VERSION: u32 = 1;
const TAG: &str = "# sipg-flows";

#[derive(Debug, Error, PartialEq)]
pub enum FlowFileError {
    #[error("malformed flow document at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("flow document version {found} is not supported (expected {FLOW_FORMAT_VERSION})")]
    VersionMismatch { found: String },
    #[error("flow document is missing the {class}/{attribute} series for {object} in {year}")]
    MissingSeries {
        class: String,
        attribute: String,
        object: String,
        year: i32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FlowRow {
    pub year: i32,
    pub class_name: String,
    pub object_name: String,
    pub attribute: String,
    pub value: f64,
    pub units: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowDocument {
    pub role: Role,
    pub rows: Vec<FlowRow>,
}

fn malformed(line: usize, reason: impl Into<String>) -> FlowFileError {
    FlowFileError::Malformed {
        line,
        reason: reason.into(),
    }
}

impl FlowDocument {
    /// The role's public series at the final iteration of every year.
    pub fn export(scenario: &Scenario, role: Role, ledger: &FlowLedger) -> FlowDocument {
        let last = scenario.horizon.iterations_per_year;
        let own_elements: BTreeSet<String> = scenario.elements_for(role).into_iter().map(|e| e.id).collect();
        let mut rows = Vec::new();
        for (k, v) in ledger.iter() {
            if k.iteration != last {
                continue;
            }
            let Some(def) = fom::lookup(k.flow.class, k.flow.attribute) else { continue };
            let owned = match k.flow.class {
                ObjectClass::GenericElement => own_elements.contains(&k.object),
                c => c.publisher() == Some(role),
            };
            if owned && def.visibility == Visibility::Public {
                rows.push(FlowRow {
                    year: k.year,
                    class_name: def.class.as_str().to_string(),
                    object_name: k.object.clone(),
                    attribute: def.name.to_string(),
                    value: *v,
                    units: def.units.to_string(),
                });
            }
        }
        FlowDocument { role, rows }
    }

    pub fn to_text(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("rows serialize");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 output");
        let header = if self.rows.is_empty() {
            "year,className,objectName,attribute,value,units\n"
        } else {
            ""
        };
        format!("{TAG} v{FLOW_FORMAT_VERSION} role={}\n{header}{body}", self.role.as_str())
    }

    pub fn parse(text: &str) -> Result<FlowDocument, FlowFileError> {
        let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
        let mut parts = first.trim_end_matches('\r').strip_prefix(TAG).ok_or_else(|| malformed(1, "missing version tag"))?.split_whitespace();
        let version = parts.next().ok_or_else(|| malformed(1, "missing version"))?;
        if version != format!("v{FLOW_FORMAT_VERSION}") {
            return Err(FlowFileError::VersionMismatch {
                found: version.to_string(),
            });
        }
        let role = parts
            .next()
            .and_then(|p| p.strip_prefix("role="))
            .and_then(Role::parse)
            .ok_or_else(|| malformed(1, "missing or unknown role"))?;

        let mut reader = csv::Reader::from_reader(rest.as_bytes());
        let headers = reader.headers().map_err(|e| malformed(2, e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["year", "className", "objectName", "attribute", "value", "units"] {
            return Err(malformed(2, "unexpected header"));
        }
        let mut rows = Vec::new();
        for (i, rec) in reader.deserialize::<FlowRow>().enumerate() {
            let line = i + 3;
            let row = rec.map_err(|e| malformed(line, e.to_string()))?;
            let def = ObjectClass::parse(&row.class_name)
                .and_then(|c| fom::lookup(c, &row.attribute))
                .ok_or_else(|| malformed(line, format!("{}/{} is not in the object model", row.class_name, row.attribute)))?;
            if def.units != row.units {
                return Err(malformed(line, format!("{} must be in {}", row.attribute, def.units)));
            }
            if !row.value.is_finite() {
                return Err(malformed(line, "value must be finite"));
            }
            rows.push(row);
        }
        Ok(FlowDocument { role, rows })
    }
}

/// Counterpart series held fixed during a local run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Boundary {
    values: BTreeMap<i32, Inbox>,
}

impl Boundary {
    /// Builds the boundary for `role` from the other roles' documents and
    /// checks that every subscribed counterpart series is present for every
    /// node and year of the horizon.
    pub fn import(scenario: &Scenario, role: Role, docs: &[FlowDocument]) -> Result<Boundary, FlowFileError> {
        let mut values: BTreeMap<i32, Inbox> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for doc in docs.iter().filter(|d| d.role != role) {
            for r in &doc.rows {
                let Some(def) = ObjectClass::parse(&r.class_name).and_then(|c| fom::lookup(c, &r.attribute)) else {
                    continue;
                };
                values.entry(r.year).or_default().set(def.class, def.name, &r.object_name, r.value);
                seen.insert((r.year, def.class, def.name, r.object_name.clone()));
            }
        }
        for s in fom::subscriptions(role) {
            let Some(def) = s.resolve() else { continue };
            if def.class == ObjectClass::SocietalSystem {
                continue;
            }
            for year in scenario.horizon.years() {
                for n in scenario.node_ids() {
                    if !seen.contains(&(year, def.class, def.name, n.as_str().to_string())) {
                        return Err(FlowFileError::MissingSeries {
                            class: def.class.as_str().to_string(),
                            attribute: def.name.to_string(),
                            object: n.as_str().to_string(),
                            year,
                        });
                    }
                }
            }
        }
        Ok(Boundary { values })
    }

    pub fn year(&self, year: i32) -> Inbox {
        self.values.get(&year).cloned().unwrap_or_default()
    }
}

/// Runs one role's federate over the horizon with static boundary series,
/// returning the ledger of its own and the societal publications.
pub fn run_local(scenario: &Scenario, role: Role, boundary: &Boundary) -> Result<FlowLedger, SimError> {
    let own = role_scenario(scenario, role);
    let mut federate = crate::kernel::federates(&own)
        .into_iter()
        .find(|f| f.role() == role)
        .expect("every role has a federate");
    let mut ledger = FlowLedger::new();
    for year in scenario.horizon.years() {
        let mut inbox = boundary.year(year);
        let demands = societal::publications(scenario, year);
        for p in &demands {
            inbox.set(p.class, p.attribute, &p.object, p.value);
        }
        for iteration in 1..=scenario.horizon.iterations_per_year {
            for p in &demands {
                ledger.insert(year, iteration, p)?;
            }
            for p in federate.step(year, iteration, &inbox)? {
                ledger.insert(year, iteration, &p)?;
            }
        }
        federate.commit_year(year)?;
    }
    info!("local {} run finished", role.as_str());
    Ok(ledger)
}
