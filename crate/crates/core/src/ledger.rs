//! The flow ledger: every published quantity keyed by year, iteration,
//! object and attribute.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::fom::{self, ObjectClass, CURRENCY_FLOW};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowKey {
    pub class: ObjectClass,
    pub attribute: &'static str,
}

impl FlowKey {
    pub fn new(class: ObjectClass, attribute: &'static str) -> Self {
        Self { class, attribute }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LedgerKey {
    pub year: i32,
    pub iteration: u32,
    pub object: String,
    pub flow: FlowKey,
}

/// One value published by a controller, before it is stamped with a time
/// and a federate.
#[derive(Debug, Clone, PartialEq)]
pub struct Publication {
    pub class: ObjectClass,
    pub attribute: &'static str,
    pub object: String,
    pub value: f64,
}

impl Publication {
    pub fn new(class: ObjectClass, attribute: &'static str, object: impl Into<String>, value: f64) -> Self {
        Self {
            class,
            attribute,
            object: object.into(),
            value,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LedgerError {
    #[error("{class}/{attribute} is not in the object model")]
    UnknownAttribute { class: String, attribute: String },
    #[error("{class}/{attribute} for {object} must be finite and nonnegative, got {value}")]
    InvalidValue {
        class: ObjectClass,
        attribute: &'static str,
        object: String,
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowLedger {
    entries: BTreeMap<LedgerKey, f64>,
}

impl FlowLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, year: i32, iteration: u32, p: &Publication) -> Result<(), LedgerError> {
        let def = fom::lookup(p.class, p.attribute).ok_or_else(|| LedgerError::UnknownAttribute {
            class: p.class.to_string(),
            attribute: p.attribute.to_string(),
        })?;
        let signed = def.name == CURRENCY_FLOW;
        if !p.value.is_finite() || (!signed && p.value < 0.0) {
            return Err(LedgerError::InvalidValue {
                class: p.class,
                attribute: def.name,
                object: p.object.clone(),
                value: p.value,
            });
        }
        self.entries.insert(
            LedgerKey {
                year,
                iteration,
                object: p.object.clone(),
                flow: FlowKey::new(p.class, def.name),
            },
            p.value,
        );
        Ok(())
    }

    pub fn get(&self, year: i32, iteration: u32, class: ObjectClass, attribute: &'static str, object: &str) -> Option<f64> {
        self.entries
            .get(&LedgerKey {
                year,
                iteration,
                object: object.to_string(),
                flow: FlowKey::new(class, attribute),
            })
            .copied()
    }

    /// Sum over all objects of one attribute at one sub-step.
    pub fn sum(&self, year: i32, iteration: u32, class: ObjectClass, attribute: &str) -> f64 {
        self.step(year, iteration)
            .filter(|(k, _)| k.flow.class == class && k.flow.attribute == attribute)
            .fold(0.0, |acc, (_, v)| acc + v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LedgerKey, &f64)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn years(&self) -> Vec<i32> {
        let mut years: Vec<i32> = self.entries.keys().map(|k| k.year).collect();
        years.dedup();
        years
    }

    /// Entries of a single sub-step.
    pub fn step(&self, year: i32, iteration: u32) -> impl Iterator<Item = (&LedgerKey, &f64)> {
        let first = |year, iteration| LedgerKey {
            year,
            iteration,
            object: String::new(),
            flow: FlowKey::new(ObjectClass::ALL[0], ""),
        };
        self.entries
            .range(first(year, iteration)..)
            .take_while(move |(k, _)| k.year == year && k.iteration == iteration)
    }

    /// Keeps only the entries accepted by `keep`.
    pub fn retain(&mut self, mut keep: impl FnMut(&LedgerKey) -> bool) {
        self.entries.retain(|k, _| keep(k));
    }

    /// CSV with one row per entry, sorted by key.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("year,iteration,className,objectName,attribute,value,units\n");
        for (k, v) in &self.entries {
            let units = fom::lookup(k.flow.class, k.flow.attribute).map_or("", |d| d.units);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                k.year, k.iteration, k.flow.class, k.object, k.flow.attribute, v, units
            );
        }
        out
    }
}
