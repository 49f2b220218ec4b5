//! Deterministic scenario simulator: workload generation, clock, the
//! per-request route-then-sanitize pipeline, and metrics aggregation.

mod metrics;
mod sim;
mod trace;
mod workload;

pub use metrics::RunMetrics;
pub use sim::{ablate, compare, run_scenario, Agent, Policy, SimError, SimOutput};
pub use trace::{render_trace, TraceOutcome, TraceRecord};
pub use workload::{generate_workload, GeneratedRequest, RequestId, WorkloadError};
