//! Chordal SLE(κ) and SLE(κ, ρ) traces from a discretized Loewner evolution.

mod driving;
mod loewner;

pub use driving::{sample_driving, DrivingPath, MAX_HALVINGS};
pub use loewner::{
    loewner_trace, loewner_trace_exact, loewner_trace_until, recover_driving, slit_forward, slit_inverse, trace_dimension, SleTrace,
    ZipperTree,
};
