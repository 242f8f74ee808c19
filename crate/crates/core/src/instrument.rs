//! Error model of the measurement apparatus, layered on the ideal contact
//! solver: load-cell noise with sample averaging, a multiplicative
//! calibration bias, a cyclic actuator positioning error, and the series
//! compliance of the apparatus frame.
//!
//! All randomness flows through an explicitly seeded generator, so equal
//! seeds give bit-identical traces and independent runs can execute
//! concurrently without shared state.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::contact::{
    solve_equilibrium_hinted, ContactMode, EquilibriumState, PlacementSpec, SolverConfig,
};
use crate::error::{InstrumentError, SolveError, SpecError};
use crate::mechanics::{DeviceSpec, StylusSpec};

/// Load cell plus its acquisition chain. A force reading is the average of
/// `n_samples()` draws taken over `avg_window` seconds at `sample_rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadCellModel {
    /// Standard deviation of a single sample, N.
    pub noise_std_single: f64,
    /// Samples per second, Hz.
    pub sample_rate: f64,
    /// Averaging window per reading, s.
    pub avg_window: f64,
    /// Multiplicative gain error: the cell reports (1 + bias) times the
    /// true force.
    pub calibration_bias: f64,
    /// Largest force the cell can take, N.
    pub range_max: f64,
}

impl Default for LoadCellModel {
    fn default() -> Self {
        Self {
            noise_std_single: 1e-3,
            sample_rate: 2e4,
            avg_window: 3.0,
            calibration_bias: 0.025,
            range_max: 0.25,
        }
    }
}

impl LoadCellModel {
    /// Samples averaged into one reading; never below 1.
    pub fn n_samples(&self) -> u64 {
        (self.sample_rate * self.avg_window).round().max(1.0) as u64
    }

    /// Standard deviation of one averaged reading, N.
    pub fn readout_std(&self) -> f64 {
        self.noise_std_single / (self.n_samples() as f64).sqrt()
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if !self.noise_std_single.is_finite() || self.noise_std_single < 0.0 {
            return Err(SpecError::new(
                "load_cell.noise_std_single",
                "a finite value >= 0 N",
                self.noise_std_single,
            ));
        }
        for (field, v) in [
            ("load_cell.sample_rate", self.sample_rate),
            ("load_cell.avg_window", self.avg_window),
            ("load_cell.range_max", self.range_max),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(SpecError::new(field, "a finite value > 0", v));
            }
        }
        if !self.calibration_bias.is_finite() || self.calibration_bias <= -1.0 {
            return Err(SpecError::new(
                "load_cell.calibration_bias",
                "a finite fraction > -1",
                self.calibration_bias,
            ));
        }
        if (self.sample_rate * self.avg_window).round() < 1.0 {
            return Err(SpecError::new(
                "load_cell.avg_window",
                "a window covering at least one sample",
                self.avg_window,
            ));
        }
        Ok(())
    }
}

/// Stepper actuator with a systematic cyclic positioning error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActuatorModel {
    /// Smallest commanded move, m. Documentation of the hardware grid; the
    /// model accepts any commanded position.
    pub step_size: f64,
    /// Amplitude A of the cyclic position error, m.
    pub cyclic_amplitude: f64,
    /// Spatial period P of the cyclic error, m.
    pub cyclic_period: f64,
    /// Phase of the cyclic error at z_cmd = 0, rad.
    pub cyclic_phase: f64,
}

impl Default for ActuatorModel {
    fn default() -> Self {
        Self {
            step_size: 1e-7,
            cyclic_amplitude: 1e-6,
            cyclic_period: 1e-5,
            cyclic_phase: 0.0,
        }
    }
}

impl ActuatorModel {
    pub fn validate(&self) -> Result<(), SpecError> {
        if !self.step_size.is_finite() || self.step_size <= 0.0 {
            return Err(SpecError::new(
                "actuator.step_size",
                "a finite value > 0 m",
                self.step_size,
            ));
        }
        if !self.cyclic_amplitude.is_finite() || self.cyclic_amplitude < 0.0 {
            return Err(SpecError::new(
                "actuator.cyclic_amplitude",
                "a finite value >= 0 m",
                self.cyclic_amplitude,
            ));
        }
        if !self.cyclic_period.is_finite() || self.cyclic_period <= 0.0 {
            return Err(SpecError::new(
                "actuator.cyclic_period",
                "a finite value > 0 m",
                self.cyclic_period,
            ));
        }
        if !self.cyclic_phase.is_finite() {
            return Err(SpecError::new(
                "actuator.cyclic_phase",
                "a finite angle in rad",
                self.cyclic_phase,
            ));
        }
        Ok(())
    }
}

/// Everything between the actuator and the stylus tip, lumped into one
/// series spring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApparatusModel {
    /// Frame stiffness k_app, N/m.
    pub stiffness: f64,
}

impl Default for ApparatusModel {
    fn default() -> Self {
        Self { stiffness: 4635.0 }
    }
}

impl ApparatusModel {
    pub fn validate(&self) -> Result<(), SpecError> {
        if !self.stiffness.is_finite() || self.stiffness <= 0.0 {
            return Err(SpecError::new(
                "apparatus.stiffness",
                "a finite value > 0 N/m",
                self.stiffness,
            ));
        }
        Ok(())
    }
}

/// The full instrument. `apparatus: None` models a rigid mount (the frame
/// does not deflect).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstrumentModel {
    pub load_cell: LoadCellModel,
    pub actuator: ActuatorModel,
    pub apparatus: Option<ApparatusModel>,
}

impl Default for InstrumentModel {
    fn default() -> Self {
        Self::reference()
    }
}

impl InstrumentModel {
    /// Every error channel at its reference magnitude: 1 mN single-sample
    /// noise averaged over 3 s at 20 kHz, +2.5% calibration bias, 0.25 N
    /// range, 1 um cyclic actuator error over a 10 um period, 4635 N/m
    /// frame stiffness.
    pub fn reference() -> Self {
        Self {
            load_cell: LoadCellModel::default(),
            actuator: ActuatorModel::default(),
            apparatus: Some(ApparatusModel::default()),
        }
    }

    /// Every error channel off: noiseless unbiased readout, exact
    /// positioning, rigid mount. Measurements reproduce the contact solver
    /// output exactly.
    pub fn ideal() -> Self {
        Self {
            load_cell: LoadCellModel {
                noise_std_single: 0.0,
                calibration_bias: 0.0,
                ..LoadCellModel::default()
            },
            actuator: ActuatorModel {
                cyclic_amplitude: 0.0,
                ..ActuatorModel::default()
            },
            apparatus: None,
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        self.load_cell.validate()?;
        self.actuator.validate()?;
        if let Some(app) = &self.apparatus {
            app.validate()?;
        }
        Ok(())
    }
}

/// One reading: `estimate` is the averaged, biased, noisy value; `std` is
/// the quoted standard deviation of the average.
pub fn read_force(
    true_force: f64,
    cell: &LoadCellModel,
    rng: &mut impl Rng,
) -> Result<(f64, f64), InstrumentError> {
    if true_force.abs() > cell.range_max {
        return Err(InstrumentError::Saturated {
            value: true_force,
            range_max: cell.range_max,
        });
    }
    let std = cell.readout_std();
    let biased = (1.0 + cell.calibration_bias) * true_force;
    // The mean of n independent centred gaussians is itself a centred
    // gaussian with std sigma/sqrt(n); draw it directly instead of looping
    // over tens of thousands of samples.
    let estimate = if cell.noise_std_single == 0.0 {
        biased
    } else {
        let noise = Normal::new(0.0, std).expect("validated std is finite and non-negative");
        biased + noise.sample(rng)
    };
    Ok((estimate, std))
}

/// Where the stylus actually is for a commanded position: the command plus
/// the cyclic error A*sin(2*pi*z/P + phase).
pub fn actual_position(z_cmd: f64, act: &ActuatorModel) -> f64 {
    z_cmd + act.cyclic_amplitude * (TAU * z_cmd / act.cyclic_period + act.cyclic_phase).sin()
}

const PARTITION_MAX_ITER: usize = 100;
const PARTITION_FORCE_TOL: f64 = 1e-9;

/// Split a total descent between the apparatus spring and the device:
/// solves z_actual = z_dut + F(z_dut)/k_app and returns (z_dut, F).
///
/// `device_force` maps a device-side descent to the vertical contact
/// force. The bracketed solve only needs the residual's sign change
/// between z_dut = 0 and z_dut = z_actual, so it stays robust even where
/// the device's force curve is steep or locally falling.
pub fn deflection_partition(
    z_actual: f64,
    mut device_force: impl FnMut(f64) -> Result<f64, SolveError>,
    app: &ApparatusModel,
    warm_bracket: Option<f64>,
) -> Result<(f64, f64), InstrumentError> {
    if z_actual <= 0.0 {
        return Ok((z_actual, 0.0));
    }
    let k = app.stiffness;
    let mut residual = |z_dut: f64| -> Result<f64, InstrumentError> {
        Ok(k * (z_actual - z_dut) - device_force(z_dut)?)
    };
    let mut lo = 0.0;
    let mut hi = z_actual;
    let mut f_lo = residual(lo)?;
    let f_hi = residual(hi)?;
    if f_lo <= 0.0 {
        // The device pushes back harder than the fully-compressed frame
        // even at zero descent; no physical split exists.
        return Err(InstrumentError::PartitionNonConvergence {
            iterations: 0,
            last_step: 0.0,
        });
    }
    if f_hi >= 0.0 {
        return Ok((hi, device_force(hi).map_err(InstrumentError::from)?));
    }
    let mut f_hi = f_hi;
    // A previous step's split seeds the first probe.
    let mut x = match warm_bracket {
        Some(w) if w > lo && w < hi => w,
        _ => 0.5 * (lo + hi),
    };
    for iter in 0..PARTITION_MAX_ITER {
        let fx = residual(x)?;
        if fx.abs() <= PARTITION_FORCE_TOL {
            return Ok((x, device_force(x).map_err(InstrumentError::from)?));
        }
        if fx > 0.0 {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
        let last_step = hi - lo;
        if last_step <= f64::EPSILON * (1.0 + z_actual) {
            let z = 0.5 * (lo + hi);
            return Ok((z, device_force(z).map_err(InstrumentError::from)?));
        }
        let secant = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        let margin = 0.01 * (hi - lo);
        x = if secant > lo + margin && secant < hi - margin {
            secant
        } else {
            0.5 * (lo + hi)
        };
        if iter + 1 == PARTITION_MAX_ITER {
            return Err(InstrumentError::PartitionNonConvergence {
                iterations: PARTITION_MAX_ITER,
                last_step,
            });
        }
    }
    unreachable!("loop always returns")
}

/// One acquired point of a virtual measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementStep {
    /// Commanded actuator position, m.
    pub z_cmd: f64,
    /// Actual stylus descent after the cyclic error, m.
    pub z_actual: f64,
    /// Share of the descent taken by the device (the rest compresses the
    /// apparatus), m.
    pub z_dut: f64,
    /// Averaged load-cell reading, N.
    pub f_readout: f64,
    /// Quoted standard deviation of the reading, N.
    pub f_readout_std: f64,
    pub mode: ContactMode,
}

/// A virtual measurement run: the acquired steps plus everything needed to
/// reproduce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementTrace {
    pub steps: Vec<MeasurementStep>,
    pub device: DeviceSpec,
    pub stylus: StylusSpec,
    /// Placement actually probed, including the landing error.
    pub placement: PlacementSpec,
    pub placement_error: f64,
    pub instrument: InstrumentModel,
    pub seed: u64,
}

/// Simulate a full measurement: per commanded position, apply the actuator
/// error, split the descent against the apparatus spring, solve the device
/// equilibrium, and read the vertical force through the load cell.
/// `placement_error` offsets the landing point before the sweep. A
/// fracture stops acquisition after its step is recorded.
pub fn run_virtual_measurement(
    device: &DeviceSpec,
    stylus: &StylusSpec,
    placement: PlacementSpec,
    placement_error: f64,
    instrument: &InstrumentModel,
    z_cmd_grid: &[f64],
    seed: u64,
) -> Result<MeasurementTrace, InstrumentError> {
    device.validate()?;
    stylus.validate()?;
    instrument.validate()?;
    if !placement_error.is_finite() {
        return Err(SpecError::new(
            "placement_error",
            "a finite offset in m",
            placement_error,
        )
        .into());
    }
    let realized = PlacementSpec::new(placement.x_s + placement_error);
    realized.validate(device)?;
    if z_cmd_grid.is_empty() || z_cmd_grid[0] < 0.0 {
        return Err(InstrumentError::Solve(SolveError::BadGrid { index: 0 }));
    }
    for i in 1..z_cmd_grid.len() {
        if !z_cmd_grid[i].is_finite() || z_cmd_grid[i] <= z_cmd_grid[i - 1] {
            return Err(InstrumentError::Solve(SolveError::BadGrid { index: i }));
        }
    }

    let solver_config = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps = Vec::with_capacity(z_cmd_grid.len());
    let mut hint: Option<f64> = None;
    let mut warm_split: Option<f64> = None;

    for (i, &z_cmd) in z_cmd_grid.iter().enumerate() {
        let solved = (|| -> Result<(MeasurementStep, EquilibriumState), InstrumentError> {
            let z_actual = actual_position(z_cmd, &instrument.actuator);
            let (z_dut, state) = match &instrument.apparatus {
                None => {
                    let state = solve_equilibrium_hinted(
                        device,
                        stylus,
                        realized,
                        z_actual,
                        &solver_config,
                        hint,
                    )?;
                    (z_actual, state)
                }
                Some(app) => {
                    let force_at = |z: f64| -> Result<f64, SolveError> {
                        Ok(solve_equilibrium_hinted(
                            device,
                            stylus,
                            realized,
                            z,
                            &solver_config,
                            hint,
                        )?
                        .f_z)
                    };
                    let (z_dut, _) = deflection_partition(z_actual, force_at, app, warm_split)?;
                    let state = solve_equilibrium_hinted(
                        device,
                        stylus,
                        realized,
                        z_dut,
                        &solver_config,
                        hint,
                    )?;
                    (z_dut, state)
                }
            };
            let (f_readout, f_readout_std) =
                read_force(state.f_z, &instrument.load_cell, &mut rng)?;
            Ok((
                MeasurementStep {
                    z_cmd,
                    z_actual,
                    z_dut,
                    f_readout,
                    f_readout_std,
                    mode: state.mode,
                },
                state,
            ))
        })()
        .map_err(|e| e.at_step(i, z_cmd))?;

        let (step, state) = solved;
        hint = (state.theta > 0.0).then_some(state.theta);
        if step.z_dut > 0.0 {
            warm_split = Some(step.z_dut);
        }
        let fractured = step.mode == ContactMode::Fractured;
        steps.push(step);
        if fractured {
            break;
        }
    }
    Ok(MeasurementTrace {
        steps,
        device: *device,
        stylus: *stylus,
        placement: realized,
        placement_error,
        instrument: *instrument,
        seed,
    })
}

/// Estimate the apparatus stiffness the way it is done on the bench: press
/// the stylus onto a rigid, non-deflecting target, read the (bias-
/// corrected) force at each commanded position, and fit the slope against
/// the command. Sampling at multiples of the actuator's cyclic period
/// cancels the positioning error.
pub fn estimate_apparatus_stiffness(
    instrument: &InstrumentModel,
    z_grid: &[f64],
    seed: u64,
) -> Result<f64, InstrumentError> {
    instrument.validate()?;
    let app = instrument.apparatus.ok_or(InstrumentError::NoApparatus)?;
    if z_grid.len() < 2 {
        return Err(SpecError::new(
            "z_grid",
            "at least two command positions",
            z_grid.len() as f64,
        )
        .into());
    }
    let cell = &instrument.load_cell;
    let gain = 1.0 + cell.calibration_bias;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let n = z_grid.len() as f64;
    for (i, &z_cmd) in z_grid.iter().enumerate() {
        if !z_cmd.is_finite() || z_cmd < 0.0 {
            return Err(SpecError::new("z_grid", "finite values >= 0 m", z_cmd).into());
        }
        let z_actual = actual_position(z_cmd, &instrument.actuator);
        let f_true = app.stiffness * z_actual;
        let (estimate, _) =
            read_force(f_true, cell, &mut rng).map_err(|e| e.at_step(i, z_cmd))?;
        let corrected = estimate / gain;
        sx += z_cmd;
        sy += corrected;
        sxx += z_cmd * z_cmd;
        sxy += z_cmd * corrected;
    }
    let denom = n * sxx - sx * sx;
    if denom <= 0.0 {
        return Err(SpecError::new("z_grid", "distinct command positions", sx / n).into());
    }
    Ok((n * sxy - sx * sy) / denom)
}

/// Command grid for apparatus-stiffness estimation: multiples of the
/// cyclic period, staying clear of the load-cell range on a rigid target.
pub fn default_apparatus_grid(instrument: &InstrumentModel) -> Vec<f64> {
    let p = instrument.actuator.cyclic_period;
    let k_app = instrument
        .apparatus
        .map(|a| a.stiffness)
        .unwrap_or(f64::INFINITY);
    let z_max = 0.95 * instrument.load_cell.range_max / k_app;
    (1..)
        .map(|i| i as f64 * p)
        .take_while(|&z| z <= z_max)
        .take(32)
        .collect()
}
