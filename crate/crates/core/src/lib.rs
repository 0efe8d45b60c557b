//! Finite-horizon throughput region machinery for Gaussian interference
//! networks that treat interference as noise.

pub mod bench;
pub mod error;
pub mod margin;
pub mod numerics;
pub mod oracle;
pub mod policy;
pub mod region;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use scenario::{NetworkScenario, PowerTuple, QueueState, RateTuple, ScenarioFile};
