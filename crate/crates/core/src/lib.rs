//! Co-simulation core for a three-role infrastructure planning game:
//! sector models, the monolithic kernel, objectives, the federation
//! protocol and session logging.

pub mod agriculture;
pub mod energy;
pub mod federation;
pub mod fom;
pub mod kernel;
pub mod ledger;
pub mod lifecycle;
pub mod lp;
pub mod objectives;
pub mod scenario;
pub mod sector;
pub mod session;
pub mod societal;
pub mod water;
