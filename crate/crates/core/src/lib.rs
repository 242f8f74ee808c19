//! Simulation and analysis library for wafer-level force-deflection probing
//! of cantilever structures with a rigid proof mass.
//!
//! The crate is organised in layers:
//! - [`mechanics`]: linear-elastic beam responses, Hertzian contact
//!   pressure, fracture stress, and the shipped reference device presets.
//! - [`contact`]: large-rotation contact kinematics between the conical
//!   stylus and the pivoting proof mass, the per-step equilibrium solver,
//!   and swept traces with mode-transition events.
//! - [`instrument`]: load-cell, actuator and apparatus error models layered
//!   on top of the ideal solver, plus apparatus-compliance partitioning.
//! - [`analysis`]: stiffness fits, calibration and compliance corrections,
//!   regime segmentation, placement sensitivity, and cross-sample
//!   comparison of measured traces.
//! - [`trace`]: the versioned CSV trace format shared with the CLI.
//!
//! All quantities are SI (m, N, Pa, rad) except in [`trace`] files, which
//! store micrometres and micronewtons.

pub mod analysis;
pub mod contact;
pub mod error;
pub mod instrument;
pub mod mechanics;
pub mod trace;

pub use analysis::{
    RegimeSegmentation, SegmentationConfig, StiffnessFit, Trace, TracePoint, VariationReport,
};
pub use contact::{
    ContactMode, EquilibriumState, EventKind, PlacementSpec, SimEvent, SimTrace, SolverConfig,
};
pub use error::{AnalysisError, InstrumentError, SolveError, SpecError, TraceError};
pub use instrument::{
    ActuatorModel, ApparatusModel, InstrumentModel, LoadCellModel, MeasurementStep,
    MeasurementTrace,
};
pub use mechanics::{
    BeamSpec, DeviceSpec, MaterialProps, ProofMassSpec, StylusSpec, TipResponse,
};
pub use trace::{TraceFile, TraceRow};
