//! Element lifecycle: empty → commissioning → operating → decommissioning
//! → null, driven by the commission start year and template durations.

use serde::{Deserialize, Serialize};

use crate::scenario::{ElementInstance, ElementTemplate};

/// Length of the decommissioning phase. It carries no cost and no capacity.
pub const DECOMMISSION_YEARS: i32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Empty,
    Commissioning,
    Operating,
    Decommissioning,
    Null,
}

pub fn phase(element: &ElementInstance, template: &ElementTemplate, year: i32) -> Phase {
    let start = element.commission_start;
    let operating = start + template.capital_years as i32;
    let decommissioning = operating + template.lifespan as i32;
    let null = decommissioning + DECOMMISSION_YEARS;
    if year < start {
        Phase::Empty
    } else if year < operating {
        Phase::Commissioning
    } else if year < decommissioning {
        Phase::Operating
    } else if year < null {
        Phase::Decommissioning
    } else {
        Phase::Null
    }
}

pub fn is_operating(element: &ElementInstance, template: &ElementTemplate, year: i32) -> bool {
    phase(element, template, year) == Phase::Operating
}

/// Capital expense in $ charged in `year`.
pub fn capital_expense(element: &ElementInstance, template: &ElementTemplate, year: i32) -> f64 {
    match phase(element, template, year) {
        Phase::Commissioning => template.capital_cost * 1e6,
        _ => 0.0,
    }
}

/// Fixed operating expense in $ charged in `year`.
pub fn fixed_expense(element: &ElementInstance, template: &ElementTemplate, year: i32) -> f64 {
    match phase(element, template, year) {
        Phase::Operating => template.fixed_cost * 1e6,
        _ => 0.0,
    }
}
