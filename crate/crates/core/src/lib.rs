//! Online makespan scheduling on identical machines with release dates:
//! the Generalized SLEEPY policy family with global locking, an exact offline
//! optimum, the analysis metrics and exact checks of the parameter conditions.

pub mod conditions;
pub mod engine;
pub mod error;
pub mod instances;
pub mod metrics;
pub mod model;
pub mod opt;
pub mod policies;
pub mod stress;

pub use engine::simulate;
pub use error::{Error, Result};
pub use model::{Instance, Job, JobId, PolicyParams, ScheduleTrace, StartReason, StartRecord, TAU};
pub use opt::{exact_opt, OptResult};
