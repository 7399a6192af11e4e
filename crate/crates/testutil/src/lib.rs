//! Shared test oracles: an independent RK4 reference integrator, analytic
//! step-response traces, fault-injection datagram shims and small statistics
//! helpers. Everything here is deliberately written from scratch against the
//! model equations rather than calling into the implementation under test.

pub mod rk4;
pub mod shims;
pub mod stats;
pub mod traces;

pub use rk4::rk4_reference;
pub use shims::{DropFirstDatagram, LossyDatagram};
pub use stats::{mean_std, welch_one_sided};
pub use traces::{constant_trace, first_order_trace, ramp_trace, sinusoid_trace, teleport_trace};
