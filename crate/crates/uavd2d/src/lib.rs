pub mod allocation;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod mcoracle;
pub mod metrics;
pub mod numerics;
pub mod outage;
pub mod power;
pub mod scenario;

pub use error::{Error, Result};
