//! Two-stage energy market: companies set per-period prices, consumers with
//! logarithmic preferences split fixed budgets across companies and periods.
//!
//! - [`model`]: scenario types and validation.
//! - [`equilibrium`]: consumer best response and the closed-form price equilibrium.
//! - [`allocation`]: how companies spread power over the horizon.
//! - [`distributed`]: message-passing price iteration.
//! - [`asymptotics`]: symmetric-market sweeps over horizon and population.
//! - [`studio`]: case-study pipeline on measured price and load series.

pub mod allocation;
pub mod asymptotics;
pub mod distributed;
pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod model;
pub mod studio;

pub use error::{Error, Result};
pub use exec::Execution;
pub use model::{Company, Consumer, DemandProfile, PriceSchedule, Scenario};
