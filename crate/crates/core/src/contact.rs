//! Large-rotation contact between a sphere-tipped conical stylus and the
//! rigid proof mass of a cantilever device.
//!
//! Geometry (2D section through the stylus axis and the beam axis):
//! - x runs outward from the clamp, y runs up. The beam tip sits at
//!   T = (L, -delta) once the beam has deflected by delta (down positive).
//! - The rigid mass pivots about T. Its flat top surface is the segment
//!   T + s*u for s in [0, Lm], u = (cos theta, -sin theta), theta the
//!   nose-down rotation.
//! - The stylus axis is vertical at x = L + x_s, where x_s is the landing
//!   offset measured outboard from the beam tip. After descending by z_act
//!   the tip-sphere centre is at C = (L + x_s, R - z_act), so z_act = 0 is
//!   first touch on the undeflected surface.
//!
//! As z_act grows the contact walks through regimes:
//! sphere on the flat surface (sliding tangency), sphere against the outer
//! corner, cone flank against the corner, and finally the surface flat on
//! the flank with the rotation pinned at theta* = pi/2 - alpha. Contact is
//! frictionless, so the contact force is always normal to whichever face
//! carries it. Each regime reduces to a one-unknown rotation equilibrium;
//! the solver walks the regimes in order and picks the first consistent one.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{SolveError, SpecError};
use crate::mechanics::{DeviceSpec, StylusSpec};

/// Where the stylus lands on the mass top surface, measured outboard from
/// the beam tip along the undeflected surface, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementSpec {
    pub x_s: f64,
}

impl PlacementSpec {
    pub fn new(x_s: f64) -> Self {
        Self { x_s }
    }

    /// Landing point at the centre of the mass top surface plus `offset`
    /// (positive outboard), the usual way placements are specified.
    pub fn from_center_offset(device: &DeviceSpec, offset: f64) -> Self {
        Self {
            x_s: device.mass.length / 2.0 + offset,
        }
    }

    pub fn validate(&self, device: &DeviceSpec) -> Result<(), SpecError> {
        if !self.x_s.is_finite() || self.x_s <= 0.0 || self.x_s > device.mass.length {
            return Err(SpecError::new(
                "placement.x_s",
                "a landing offset in (0, mass.length] m",
                self.x_s,
            ));
        }
        Ok(())
    }
}

/// Numerical knobs for the equilibrium solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Force-units residual below which a rotation root is accepted, N.
    pub residual_tol: f64,
    /// Iteration cap for each bracketed root solve.
    pub max_iter: usize,
    /// Actuator-depth resolution for regime-transition events, m.
    pub event_resolution: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-9,
            max_iter: 100,
            event_resolution: 1e-8,
        }
    }
}

/// Which face carries the contact at a given actuator depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactMode {
    /// Stylus above the surface, no force.
    NoContact,
    /// Tip sphere tangent to the flat top surface; the contact point slides
    /// outboard as the mass tilts.
    SurfaceSliding,
    /// Contact concentrated at the outer corner of the mass, riding first
    /// on the spherical cap and then on the cone flank.
    EdgeContact,
    /// Top surface parallel to and resting on the cone flank; rotation is
    /// pinned and further descent is pure translation.
    FlankContact,
    /// Root bending stress has reached the fracture strength.
    Fractured,
}

impl ContactMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ContactMode::NoContact => "no_contact",
            ContactMode::SurfaceSliding => "surface_sliding",
            ContactMode::EdgeContact => "edge_contact",
            ContactMode::FlankContact => "flank_contact",
            ContactMode::Fractured => "fractured",
        }
    }
}

impl fmt::Display for ContactMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ContactMode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "no_contact" => ContactMode::NoContact,
            "surface_sliding" => ContactMode::SurfaceSliding,
            "edge_contact" => ContactMode::EdgeContact,
            "flank_contact" => ContactMode::FlankContact,
            "fractured" => ContactMode::Fractured,
            _ => return Err(()),
        })
    }
}

/// Static equilibrium of the device at one actuator depth.
///
/// `f_z` is the vertical load the stylus carries (what a load cell above
/// the stylus reads); `f_x` is the horizontal thrust toward the clamp.
/// `force` is the normal-contact magnitude, so `f_z <= force` always.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumState {
    /// Actuator descent past first touch, m.
    pub z_act: f64,
    /// Nose-down rotation of the proof mass, rad.
    pub theta: f64,
    /// Downward beam-tip deflection, m.
    pub delta: f64,
    /// Arc position of the contact on the mass top surface, m from the beam
    /// tip. Corner contact sits at the mass length; in flank contact this
    /// is the resultant position of the distributed load and may go
    /// negative (see `load_on_beam`).
    pub s: f64,
    /// Normal contact force magnitude, N.
    pub force: f64,
    /// Vertical force component, N.
    pub f_z: f64,
    /// Horizontal force component (toward the clamp), N.
    pub f_x: f64,
    /// Bending moment at the beam root, N*m.
    pub m_root: f64,
    /// Peak bending stress at the beam root, Pa.
    pub sigma_root: f64,
    pub mode: ContactMode,
    /// Set when the flank-contact resultant has moved inboard of the beam
    /// tip: the stylus is effectively loading the beam, outside what the
    /// rigid-mass model represents.
    pub load_on_beam: bool,
}

impl EquilibriumState {
    fn no_contact(z_act: f64) -> Self {
        Self {
            z_act,
            theta: 0.0,
            delta: 0.0,
            s: 0.0,
            force: 0.0,
            f_z: 0.0,
            f_x: 0.0,
            m_root: 0.0,
            sigma_root: 0.0,
            mode: ContactMode::NoContact,
            load_on_beam: false,
        }
    }

    /// Tip moment carried by the beam, N*m (nose-down positive).
    pub fn m_tip(&self, device: &DeviceSpec) -> f64 {
        self.m_root - self.f_z * device.beam.length
    }

    /// Elastic energy stored in the beam and support spring, J. The
    /// response is linear in the tip loads, so this is half the load-times-
    /// displacement sum.
    pub fn stored_elastic_energy(&self, device: &DeviceSpec) -> f64 {
        0.5 * (self.f_z * self.delta + self.m_tip(device) * self.theta)
    }

    /// World coordinates of the contact point (resultant position in flank
    /// contact), with the clamp at the origin. None when out of contact.
    pub fn contact_point(&self, device: &DeviceSpec) -> Option<(f64, f64)> {
        if self.mode == ContactMode::NoContact {
            return None;
        }
        let l = device.beam.length;
        Some((
            l + self.s * self.theta.cos(),
            -self.delta - self.s * self.theta.sin(),
        ))
    }
}

/// Regime changes detected while sweeping the actuator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// The sliding tangency point reached the outer corner of the mass.
    SlideOff,
    /// Contact concentrated onto the corner.
    EdgeContactBegin,
    /// The top surface landed flat on the cone flank.
    FlankContactBegin,
    /// Root stress reached the fracture strength; the trace ends here.
    Fracture,
}

/// One regime change, with the actuator depth refined well below the sweep
/// step (to `SolverConfig::event_resolution`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub kind: EventKind,
    /// First actuator depth inside the new regime, m.
    pub z_act: f64,
}

/// A swept simulation: one equilibrium per grid depth plus the refined
/// regime-change events. A fracture replaces the final grid point with the
/// state at the refined fracture depth and truncates the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub states: Vec<EquilibriumState>,
    pub events: Vec<SimEvent>,
}

impl SimTrace {
    pub fn last(&self) -> Option<&EquilibriumState> {
        self.states.last()
    }

    pub fn fractured(&self) -> bool {
        self.states
            .last()
            .is_some_and(|s| s.mode == ContactMode::Fractured)
    }
}

/// Rotation at which the sliding contact point reaches the outer corner,
/// in closed form from s(theta) = Lm. None when the surface pins flat on
/// the flank before that happens (contact never leaves the surface).
pub fn slide_off_rotation(
    device: &DeviceSpec,
    stylus: &StylusSpec,
    placement: PlacementSpec,
) -> Option<f64> {
    let lm = device.mass.length;
    let r = stylus.tip_radius;
    // x_s = Lm cos(theta) + R sin(theta) has amplitude hypot(Lm, R).
    let amp = lm.hypot(r);
    if placement.x_s > amp {
        return None;
    }
    let theta = (r / lm).atan() + (placement.x_s / amp).acos();
    (theta <= stylus.flank_onset_rotation()).then_some(theta)
}

// ── Per-regime kinematics ────────────────────────────────────────────────
//
// Every pointwise regime reduces to the same template: at rotation theta
// the contact geometry dictates the beam-tip deflection delta_kin(theta)
// and the force direction, giving tip loads (Q, M) = F * (qc, mc) for a
// single unknown magnitude F. The beam's linear response then requires
//
//   delta_kin(theta) = F * g_delta(theta),   theta = F * g_theta(theta)
//
// and eliminating F leaves the scalar residual (in newtons)
//
//   r(theta) = delta_kin/g_delta - theta/g_theta
//
// which decreases monotonically from r > 0 at the regime's lower rotation
// bound. A sign change inside the regime's bracket means the equilibrium
// lives in this regime.

struct RegimeKinematics {
    delta_kin: f64,
    /// Q = force * qc.
    qc: f64,
    /// M_tip = force * mc.
    mc: f64,
    /// Arc position reported for the contact point.
    s: f64,
    /// f_x = force * xc.
    xc: f64,
}

fn surface_kinematics(
    stylus: &StylusSpec,
    placement: PlacementSpec,
    z_act: f64,
    theta: f64,
) -> RegimeKinematics {
    let r = stylus.tip_radius;
    let (sin_t, cos_t) = theta.sin_cos();
    let s = (placement.x_s - r * sin_t) / cos_t;
    RegimeKinematics {
        delta_kin: (r - placement.x_s * sin_t) / cos_t - r + z_act,
        qc: cos_t,
        mc: s,
        s,
        xc: sin_t,
    }
}

fn edge_sphere_kinematics(
    device: &DeviceSpec,
    stylus: &StylusSpec,
    placement: PlacementSpec,
    z_act: f64,
    theta: f64,
) -> RegimeKinematics {
    let lm = device.mass.length;
    let r = stylus.tip_radius;
    let (sin_t, cos_t) = theta.sin_cos();
    // Horizontal reach from the corner to the stylus axis; the corner sits
    // on the lower-left quadrant of the tip sphere.
    let w = placement.x_s - lm * cos_t;
    let v = (r * r - w * w).max(0.0).sqrt();
    let psi = (w / r).asin();
    RegimeKinematics {
        delta_kin: v - r + z_act - lm * sin_t,
        qc: psi.cos(),
        mc: lm * (theta - psi).cos(),
        s: lm,
        xc: psi.sin(),
    }
}

fn edge_flank_kinematics(
    device: &DeviceSpec,
    stylus: &StylusSpec,
    placement: PlacementSpec,
    z_act: f64,
    theta: f64,
) -> RegimeKinematics {
    let lm = device.mass.length;
    let r = stylus.tip_radius;
    let alpha = stylus.cone_half_angle;
    let (sin_a, cos_a) = alpha.sin_cos();
    let (sin_t, cos_t) = theta.sin_cos();
    RegimeKinematics {
        delta_kin: (cos_a / sin_a) * (lm * cos_t - placement.x_s + r * cos_a) + z_act
            - lm * sin_t
            - r * (1.0 - sin_a),
        qc: sin_a,
        mc: lm * (theta + alpha).sin(),
        s: lm,
        xc: cos_a,
    }
}

/// Beam-tip deflection when the surface lies flat on the flank, linear in
/// the descent with slope exactly 1.
fn flank_pinned_delta(stylus: &StylusSpec, placement: PlacementSpec, z_act: f64) -> f64 {
    let r = stylus.tip_radius;
    let (sin_a, cos_a) = stylus.cone_half_angle.sin_cos();
    (r - placement.x_s * cos_a) / sin_a - r + z_act
}

// ── Root finding ─────────────────────────────────────────────────────────

/// Bracketed hybrid root finder for a decreasing residual: secant steps
/// clipped to the bracket, bisection whenever the secant stalls or leaves
/// it. `hint` seeds the first probe (warm start between sweep steps).
fn find_root(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    hint: Option<f64>,
    tol_f: f64,
    max_iter: usize,
) -> Result<f64, SolveError> {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo.abs() <= tol_f {
        return Ok(lo);
    }
    if f_hi.abs() <= tol_f {
        return Ok(hi);
    }
    debug_assert!(f_lo > 0.0 && f_hi < 0.0, "caller must bracket the root");

    let mut x = match hint {
        Some(h) if h > lo && h < hi => h,
        _ => 0.5 * (lo + hi),
    };
    for iter in 0..max_iter {
        let fx = f(x);
        if fx.abs() <= tol_f {
            return Ok(x);
        }
        if fx > 0.0 {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
        if hi - lo <= f64::EPSILON * (1.0 + lo.abs() + hi.abs()) {
            return Ok(0.5 * (lo + hi));
        }
        let secant = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        let margin = 0.01 * (hi - lo);
        x = if secant > lo + margin && secant < hi - margin {
            secant
        } else {
            0.5 * (lo + hi)
        };
        if iter + 1 == max_iter {
            return Err(SolveError::NonConvergence {
                iterations: max_iter,
                last_residual: fx,
            });
        }
    }
    unreachable!("loop always returns")
}

// ── Equilibrium solve ────────────────────────────────────────────────────

struct Solver<'a> {
    device: &'a DeviceSpec,
    stylus: &'a StylusSpec,
    placement: PlacementSpec,
    config: &'a SolverConfig,
}

impl Solver<'_> {
    /// Residual for a pointwise regime at the given rotation.
    fn residual(&self, kin: &RegimeKinematics, theta: f64) -> f64 {
        let gains = self.device.tip_response(kin.qc, kin.mc);
        kin.delta_kin / gains.deflection - theta / gains.rotation
    }

    fn state_from(&self, z_act: f64, theta: f64, kin: RegimeKinematics, mode: ContactMode) -> EquilibriumState {
        let gains = self.device.tip_response(kin.qc, kin.mc);
        let force = if theta > 0.0 {
            theta / gains.rotation
        } else {
            kin.delta_kin / gains.deflection
        };
        let q = force * kin.qc;
        let m_tip = force * kin.mc;
        let m_root = q * self.device.beam.length + m_tip;
        EquilibriumState {
            z_act,
            theta,
            delta: force * gains.deflection,
            s: kin.s,
            force,
            f_z: q,
            f_x: force * kin.xc,
            m_root,
            sigma_root: self.device.root_bending_stress(m_root),
            mode,
            load_on_beam: false,
        }
    }

    fn flank_pinned_state(&self, z_act: f64) -> EquilibriumState {
        let dev = self.device;
        let theta = self.stylus.flank_onset_rotation();
        let delta = flank_pinned_delta(self.stylus, self.placement, z_act);
        // Both tip displacements are prescribed, so invert the 2x2 tip
        // compliance for the loads.
        let l = dev.beam.length;
        let ei = dev.bending_rigidity();
        let cs = dev.support_rot_compliance;
        let c11 = l.powi(3) / (3.0 * ei) + cs * l * l;
        let c12 = l * l / (2.0 * ei) + cs * l;
        let c22 = l / ei + cs;
        let det = c11 * c22 - c12 * c12;
        let q = (c22 * delta - c12 * theta) / det;
        let m_tip = (c11 * theta - c12 * delta) / det;
        let sin_a = self.stylus.cone_half_angle.sin();
        let cos_a = self.stylus.cone_half_angle.cos();
        let force = q / sin_a;
        let s_res = if force.abs() > 0.0 { m_tip / force } else { 0.0 };
        let m_root = q * l + m_tip;
        EquilibriumState {
            z_act,
            theta,
            delta,
            s: s_res,
            force,
            f_z: q,
            f_x: force * cos_a,
            m_root,
            sigma_root: dev.root_bending_stress(m_root),
            mode: ContactMode::FlankContact,
            load_on_beam: s_res < 0.0,
        }
    }

    /// Solve one depth. Walks the regimes in contact order and returns the
    /// first whose rotation equilibrium lands inside its own validity
    /// bracket. `hint` warm-starts the root searches.
    fn solve(&self, z_act: f64, hint: Option<f64>) -> Result<EquilibriumState, SolveError> {
        if !z_act.is_finite() {
            return Err(SolveError::RotationRange { z_act });
        }
        if z_act <= 0.0 {
            return Ok(EquilibriumState::no_contact(z_act));
        }
        let stylus = self.stylus;
        let placement = self.placement;
        let theta_star = stylus.flank_onset_rotation();
        let tol = self.config.residual_tol;
        let iters = self.config.max_iter;

        // Sliding tangency on the flat surface.
        let surf = |theta: f64| surface_kinematics(stylus, placement, z_act, theta);
        let r_surf = |theta: f64| self.residual(&surf(theta), theta);
        let lm = self.device.mass.length;
        if r_surf(theta_star) <= 0.0 {
            let theta = find_root(r_surf, 0.0, theta_star, hint, tol, iters)?;
            let kin = surf(theta);
            if kin.s < 0.0 {
                return Err(SolveError::ContactInboard { s: kin.s });
            }
            if kin.s <= lm {
                return Ok(self.finish(self.state_from(z_act, theta, kin, ContactMode::SurfaceSliding)));
            }
        } else {
            // No equilibrium before the surface turns flank-parallel. If
            // the tangency point is still on the surface there, the surface
            // simply lands on the flank; otherwise fall through to corner
            // contact.
            let kin = surf(theta_star);
            if kin.s < 0.0 {
                return Err(SolveError::ContactInboard { s: kin.s });
            }
            if kin.s <= lm {
                return Ok(self.finish(self.flank_pinned_state(z_act)));
            }
        }

        // Corner on the spherical cap. The corner must sit inboard of the
        // stylus axis (w >= 0) and on the cap side of the sphere-cone
        // junction (w <= R cos alpha).
        let r = stylus.tip_radius;
        let cos_a = stylus.cone_half_angle.cos();
        let theta_corner = (placement.x_s / lm).min(1.0).acos();
        let junction_cos = (placement.x_s - r * cos_a) / lm;
        let theta_junction = if junction_cos >= 1.0 {
            0.0
        } else if junction_cos <= -1.0 {
            std::f64::consts::PI
        } else {
            junction_cos.acos()
        };
        let sphere_hi = theta_star.min(theta_junction);
        if theta_corner < sphere_hi {
            let r_edge = |theta: f64| {
                self.residual(
                    &edge_sphere_kinematics(self.device, stylus, placement, z_act, theta),
                    theta,
                )
            };
            if r_edge(theta_corner) > 0.0 && r_edge(sphere_hi) <= 0.0 {
                let theta = find_root(r_edge, theta_corner, sphere_hi, hint, tol, iters)?;
                let kin = edge_sphere_kinematics(self.device, stylus, placement, z_act, theta);
                return Ok(self.finish(self.state_from(z_act, theta, kin, ContactMode::EdgeContact)));
            }
        }

        // Corner on the cone flank, between the junction and pinning.
        let flank_lo = theta_junction.max(theta_corner).min(theta_star);
        if flank_lo < theta_star {
            let r_flank = |theta: f64| {
                self.residual(
                    &edge_flank_kinematics(self.device, stylus, placement, z_act, theta),
                    theta,
                )
            };
            if r_flank(flank_lo) > 0.0 && r_flank(theta_star) <= 0.0 {
                let theta = find_root(r_flank, flank_lo, theta_star, hint, tol, iters)?;
                let kin = edge_flank_kinematics(self.device, stylus, placement, z_act, theta);
                return Ok(self.finish(self.state_from(z_act, theta, kin, ContactMode::EdgeContact)));
            }
        }

        // Nothing rotated short of flank-parallel: pinned translation.
        Ok(self.finish(self.flank_pinned_state(z_act)))
    }

    /// Fracture masks every other regime label; the state keeps the loads
    /// computed at the threshold.
    fn finish(&self, mut state: EquilibriumState) -> EquilibriumState {
        if state.sigma_root >= self.device.material.fracture_strength {
            state.mode = ContactMode::Fractured;
        }
        state
    }
}

/// Warm-started solve for internal sweep loops. Skips input validation;
/// callers validate once up front.
pub(crate) fn solve_equilibrium_hinted(
    device: &DeviceSpec,
    stylus: &StylusSpec,
    placement: PlacementSpec,
    z_act: f64,
    config: &SolverConfig,
    hint: Option<f64>,
) -> Result<EquilibriumState, SolveError> {
    Solver {
        device,
        stylus,
        placement,
        config,
    }
    .solve(z_act, hint)
}

/// Equilibrium at a single actuator depth (m past first touch on the
/// undeflected surface).
pub fn solve_equilibrium(
    device: &DeviceSpec,
    stylus: &StylusSpec,
    placement: PlacementSpec,
    z_act: f64,
    config: &SolverConfig,
) -> Result<EquilibriumState, SolveError> {
    device.validate()?;
    stylus.validate()?;
    placement.validate(device)?;
    Solver {
        device,
        stylus,
        placement,
        config,
    }
    .solve(z_act, None)
}

fn events_for(prev: ContactMode, next: ContactMode, z: f64, out: &mut Vec<SimEvent>) {
    use ContactMode::*;
    match (prev, next) {
        (SurfaceSliding, EdgeContact) => {
            out.push(SimEvent {
                kind: EventKind::SlideOff,
                z_act: z,
            });
            out.push(SimEvent {
                kind: EventKind::EdgeContactBegin,
                z_act: z,
            });
        }
        (SurfaceSliding | EdgeContact, FlankContact) => out.push(SimEvent {
            kind: EventKind::FlankContactBegin,
            z_act: z,
        }),
        (_, Fractured) => out.push(SimEvent {
            kind: EventKind::Fracture,
            z_act: z,
        }),
        _ => {}
    }
}

/// Sweep the actuator over `z_grid` (m; must start at 0 and strictly
/// increase), solving each depth and refining every regime change to
/// `config.event_resolution`. A fracture truncates the sweep at the refined
/// fracture depth.
pub fn run_sweep(
    device: &DeviceSpec,
    stylus: &StylusSpec,
    placement: PlacementSpec,
    z_grid: &[f64],
    config: &SolverConfig,
) -> Result<SimTrace, SolveError> {
    device.validate()?;
    stylus.validate()?;
    placement.validate(device)?;
    if z_grid.is_empty() || z_grid[0] != 0.0 {
        return Err(SolveError::BadGrid { index: 0 });
    }
    for i in 1..z_grid.len() {
        if !z_grid[i].is_finite() || z_grid[i] <= z_grid[i - 1] {
            return Err(SolveError::BadGrid { index: i });
        }
    }

    let solver = Solver {
        device,
        stylus,
        placement,
        config,
    };
    let mut states: Vec<EquilibriumState> = Vec::with_capacity(z_grid.len());
    let mut events = Vec::new();
    let mut hint = None;

    for (i, &z) in z_grid.iter().enumerate() {
        let state = solver.solve(z, hint)?;
        hint = (state.theta > 0.0).then_some(state.theta);

        if i > 0 && state.mode != states[i - 1].mode {
            // Walk the chain of regime boundaries inside this grid step,
            // bisecting each to event_resolution. Regimes only move forward
            // with depth, so the chain is short.
            let mut lo_z = states[i - 1].z_act;
            let mut lo_mode = states[i - 1].mode;
            let mut fractured_at: Option<EquilibriumState> = None;
            for _ in 0..8 {
                if lo_mode == state.mode {
                    break;
                }
                let mut a = lo_z;
                let mut b = z;
                let mut b_state = state;
                while b - a > config.event_resolution {
                    let mid = 0.5 * (a + b);
                    let mid_state = solver.solve(mid, hint)?;
                    if mid_state.mode == lo_mode {
                        a = mid;
                    } else {
                        b = mid;
                        b_state = mid_state;
                    }
                }
                events_for(lo_mode, b_state.mode, b, &mut events);
                if b_state.mode == ContactMode::Fractured {
                    fractured_at = Some(b_state);
                    break;
                }
                lo_z = b;
                lo_mode = b_state.mode;
            }
            if let Some(final_state) = fractured_at {
                states.push(final_state);
                return Ok(SimTrace { states, events });
            }
        }
        states.push(state);
    }
    Ok(SimTrace { states, events })
}
