//! Co-simulation service: wire protocol, coordinator, federate drivers,
//! transports, and the static flow-file exchange path.

pub mod coordinator;
pub mod driver;
pub mod flowfile;
pub mod local;
pub mod protocol;
pub mod tcp;

pub use coordinator::{Coordinator, Outbound};
pub use driver::FederateDriver;
pub use protocol::{AttributeUpdate, Body, ErrorCode, FederateRole, Message};

use crate::kernel::RunResult;
use crate::scenario::{Role, Scenario};

/// Runs one synchronous execution of `scenario` through the in-process
/// federation and returns the coordinator's result.
pub fn run_federated(scenario: &Scenario) -> Result<RunResult, driver::DriverError> {
    let mut coordinator = Coordinator::new(scenario.clone());
    let mut drivers: Vec<FederateDriver> = Role::ALL
        .into_iter()
        .map(|r| FederateDriver::new(r.as_str(), r, vec![scenario.clone()]))
        .collect();
    local::pump(&mut coordinator, &mut drivers, None)?;
    Ok(coordinator
        .into_completed()
        .pop()
        .expect("an execution completes once every driver resigns"))
}
