//! Tunnel-barrier memristor simulation library.
//!
//! Implements the Simmons-tunneling device model in two flavors, the
//! undamped original and an accuracy-enhanced variant with damped
//! derivative windows and a hard physical-boundary limiter, together with
//! an implicit operating-point solver, a transient harness, a relative-RMS
//! trace error metric, and Nelder-Mead parameter fitting.
//!
//! Units everywhere: energies eV, lengths nm, voltages V, currents A,
//! time s, width rates nm/s.

pub mod config;
pub mod csvio;
pub mod fit;
pub mod metrics;
pub mod model;
pub mod params;
pub mod solver;
pub mod transient;
pub mod waveform;

pub use model::{
    barrier_geometry, clamp_width, state_derivative, tunnel_current, BarrierGeometry, DeviceState,
    ModelError, OperatingPoint, DERIVATIVE_CAP,
};
pub use params::{ModelParams, ParamError, Variant};
pub use solver::{
    advance_state, solve_operating_point, solve_operating_point_warm, OdeMethod, SolverConfig,
    SolverError,
};
pub use transient::{hysteresis_curve, simulate, Sample, Termination, Trace};
pub use waveform::Waveform;
