//! Role and joint objective scores, computed from the flow ledger.
//!
//! Every score lies in [0, 1000]. Averages over years are normalized by the
//! number of years summed, so a perfect record scores exactly 1000 and the
//! first planning year is defined.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fom::{
    ObjectClass, AQUIFER_STOCK, AQUIFER_WITHDRAWAL, CAPITAL_EXPENSES, CURRENCY_FLOW, FOOD_IN, FOOD_PRODUCTION,
    RESERVOIR_STOCK, RESERVOIR_WITHDRAWAL,
};
use crate::ledger::FlowLedger;
use crate::scenario::{ObjectiveParams, Role, Scenario, SectorObjectiveParams};

pub const MAX_SCORE: f64 = 1000.0;

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("objectives are defined from {plan_start} on, not for {year}")]
    BeforePlanStart { year: i32, plan_start: i32 },
    #[error("the ledger holds no final-iteration data for {0}")]
    NoData(i32),
}

/// Who a financial or political score is computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Account {
    Agriculture,
    Water,
    Energy,
    Joint,
}

impl Account {
    pub fn classes(self) -> &'static [ObjectClass] {
        use ObjectClass::*;
        match self {
            Account::Agriculture => &[AgricultureSystem],
            Account::Water => &[WaterSystem],
            Account::Energy => &[PetroleumSystem, ElectricalSystem],
            Account::Joint => &[AgricultureSystem, WaterSystem, PetroleumSystem, ElectricalSystem],
        }
    }

    pub fn params(self, p: &ObjectiveParams) -> &SectorObjectiveParams {
        match self {
            Account::Agriculture => &p.agriculture,
            Account::Water => &p.water,
            Account::Energy => &p.energy,
            Account::Joint => &p.joint,
        }
    }
}

impl From<Role> for Account {
    fn from(role: Role) -> Self {
        match role {
            Role::Agriculture => Account::Agriculture,
            Role::Water => Account::Water,
            Role::Energy => Account::Energy,
        }
    }
}

// ------------------------------------------------------------ pure scoring

/// Fraction of the target met by domestic supply, clamped to [0, 1]. A year
/// without demand counts as fully met.
pub fn food_fraction(supply: f64, demand: f64, target: f64) -> f64 {
    if demand <= 0.0 {
        return 1.0;
    }
    let ratio = supply / demand;
    if ratio >= target {
        1.0
    } else if ratio < 0.0 {
        0.0
    } else {
        ratio / target
    }
}

/// Expected lifetime V/W mapped linearly onto [0, 1] across `band`. A year
/// without withdrawal counts as the top of the band.
pub fn lifetime_fraction(volume: f64, withdrawal: f64, band: [f64; 2]) -> f64 {
    if withdrawal <= 0.0 {
        return 1.0;
    }
    let years = volume / withdrawal;
    if years >= band[1] {
        1.0
    } else if years < band[0] {
        0.0
    } else {
        (years - band[0]) / (band[1] - band[0])
    }
}

/// Share of the reference-year target reached by year `t` under compound
/// growth at `rate` from `base_year`.
pub fn growth_factor(rate: f64, t: i32, base_year: i32, reference_year: i32) -> f64 {
    ((1.0 + rate).powi(t - base_year) - 1.0) / ((1.0 + rate).powi(reference_year - base_year) - 1.0)
}

pub fn financial_score(r: f64, r_min: f64, r_max: f64) -> f64 {
    if r > r_max {
        MAX_SCORE
    } else if r < r_min {
        0.0
    } else if r_max > r_min {
        MAX_SCORE * (r - r_min) / (r_max - r_min)
    } else {
        MAX_SCORE
    }
}

pub fn political_score(i: f64, i_max: f64) -> f64 {
    if i > i_max {
        MAX_SCORE
    } else if i_max > 0.0 {
        (MAX_SCORE * i / i_max).max(0.0)
    } else {
        0.0
    }
}

fn mean_score(fractions: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = fractions.fold((0.0, 0usize), |(s, n), f| (s + f, n + 1));
    if n == 0 {
        0.0
    } else {
        MAX_SCORE * sum / n as f64
    }
}

// ------------------------------------------------------------ ledger views

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RoleScores {
    /// Food, aquifer or reservoir security depending on the role.
    pub security: f64,
    pub financial: f64,
    pub political: f64,
}

impl RoleScores {
    /// The role's single objective value: the mean of its three scores.
    pub fn objective(&self) -> f64 {
        (self.security + self.financial + self.political) / 3.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ObjectiveReport {
    pub year: i32,
    pub agriculture: RoleScores,
    pub water: RoleScores,
    pub energy: RoleScores,
    pub joint_financial: f64,
    pub joint: f64,
}

impl ObjectiveReport {
    pub fn role(&self, role: Role) -> &RoleScores {
        match role {
            Role::Agriculture => &self.agriculture,
            Role::Water => &self.water,
            Role::Energy => &self.energy,
        }
    }
}

/// Mean of food, aquifer, reservoir and joint financial security.
pub fn joint_objective(food: f64, aquifer: f64, reservoir: f64, joint_financial: f64) -> f64 {
    (food + aquifer + reservoir + joint_financial) / 4.0
}

/// Scores objectives from the final iteration of each year in a ledger.
#[derive(Debug, Clone, Copy)]
pub struct Evaluator<'a> {
    pub ledger: &'a FlowLedger,
    pub params: &'a ObjectiveParams,
    pub plan_start: i32,
    pub iteration: u32,
}

impl<'a> Evaluator<'a> {
    pub fn new(scenario: &'a Scenario, ledger: &'a FlowLedger) -> Self {
        Self {
            ledger,
            params: &scenario.objectives,
            plan_start: scenario.horizon.plan_start,
            iteration: scenario.horizon.iterations_per_year,
        }
    }

    fn total(&self, year: i32, class: ObjectClass, attribute: &str) -> f64 {
        self.ledger.sum(year, self.iteration, class, attribute)
    }

    fn years(&self, t: i32) -> Result<std::ops::RangeInclusive<i32>, ObjectiveError> {
        if t < self.plan_start {
            return Err(ObjectiveError::BeforePlanStart {
                year: t,
                plan_start: self.plan_start,
            });
        }
        if self.ledger.step(t, self.iteration).next().is_none() {
            return Err(ObjectiveError::NoData(t));
        }
        Ok(self.plan_start..=t)
    }

    pub fn food_security(&self, t: i32) -> Result<f64, ObjectiveError> {
        let years = self.years(t)?;
        Ok(mean_score(years.map(|i| {
            let s = self.total(i, ObjectClass::AgricultureSystem, FOOD_PRODUCTION);
            let d = self.total(i, ObjectClass::SocietalSystem, FOOD_IN);
            food_fraction(s, d, self.params.food_target)
        })))
    }

    pub fn aquifer_security(&self, t: i32) -> Result<f64, ObjectiveError> {
        let years = self.years(t)?;
        Ok(mean_score(years.map(|i| {
            let v = self.total(i, ObjectClass::WaterSystem, AQUIFER_STOCK);
            let w = self.total(i, ObjectClass::WaterSystem, AQUIFER_WITHDRAWAL);
            lifetime_fraction(v, w, self.params.aquifer_band)
        })))
    }

    pub fn reservoir_security(&self, t: i32) -> Result<f64, ObjectiveError> {
        let years = self.years(t)?;
        Ok(mean_score(years.map(|i| {
            let v = self.total(i, ObjectClass::PetroleumSystem, RESERVOIR_STOCK);
            let w = self.total(i, ObjectClass::PetroleumSystem, RESERVOIR_WITHDRAWAL);
            lifetime_fraction(v, w, self.params.reservoir_band)
        })))
    }

    fn cumulative(&self, account: Account, attribute: &str, t: i32) -> Result<f64, ObjectiveError> {
        let years = self.years(t)?;
        Ok(years
            .map(|i| account.classes().iter().map(|&c| self.total(i, c, attribute)).sum::<f64>())
            .sum())
    }

    /// Cumulative net revenue since planning began, $.
    pub fn cumulative_revenue(&self, account: Account, t: i32) -> Result<f64, ObjectiveError> {
        self.cumulative(account, CURRENCY_FLOW, t)
    }

    /// Cumulative capital expenses since planning began, $.
    pub fn cumulative_investment(&self, account: Account, t: i32) -> Result<f64, ObjectiveError> {
        self.cumulative(account, CAPITAL_EXPENSES, t)
    }

    pub fn financial_security(&self, account: Account, t: i32) -> Result<f64, ObjectiveError> {
        let r = self.cumulative_revenue(account, t)?;
        let p = account.params(self.params);
        let g = growth_factor(p.revenue_rate, t, self.params.growth_base_year, self.params.reference_year);
        Ok(financial_score(r, p.revenue_min * g, p.revenue_max * g))
    }

    pub fn political_power(&self, account: Account, t: i32) -> Result<f64, ObjectiveError> {
        let i = self.cumulative_investment(account, t)?;
        let p = account.params(self.params);
        let (Some(i_ref), Some(rate)) = (p.investment_max, p.investment_rate) else {
            return Ok(0.0);
        };
        let g = growth_factor(rate, t, self.params.growth_base_year, self.params.reference_year);
        Ok(political_score(i, i_ref * g))
    }

    pub fn report(&self, t: i32) -> Result<ObjectiveReport, ObjectiveError> {
        let food = self.food_security(t)?;
        let aquifer = self.aquifer_security(t)?;
        let reservoir = self.reservoir_security(t)?;
        let scores = |account: Account, security: f64| -> Result<RoleScores, ObjectiveError> {
            Ok(RoleScores {
                security,
                financial: self.financial_security(account, t)?,
                political: self.political_power(account, t)?,
            })
        };
        let joint_financial = self.financial_security(Account::Joint, t)?;
        Ok(ObjectiveReport {
            year: t,
            agriculture: scores(Account::Agriculture, food)?,
            water: scores(Account::Water, aquifer)?,
            energy: scores(Account::Energy, reservoir)?,
            joint_financial,
            joint: joint_objective(food, aquifer, reservoir, joint_financial),
        })
    }
}
