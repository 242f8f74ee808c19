//! Elastic building blocks for a cantilever carrying a rigid proof mass,
//! probed from above by a sphere-tipped conical stylus.
//!
//! Conventions shared by the whole crate:
//! - SI units everywhere (m, N, Pa, rad). Unit conversion happens only at
//!   file boundaries.
//! - The beam runs along x from the clamp at x = 0 to the tip at x = L.
//!   Deflections and the proof-mass rotation are positive downward /
//!   nose-down (outer edge dropping).
//! - A transverse tip load Q (downward, N) together with a tip moment M
//!   (nose-down, N*m) produces the tip response
//!
//!   ```text
//!   delta   = Q*L^3/(3EI) + M*L^2/(2EI) + c_s*(Q*L + M)*L
//!   theta_b = Q*L^2/(2EI) + M*L/EI      + c_s*(Q*L + M)
//!   ```
//!
//!   where c_s is an optional rotational compliance of the support,
//!   rad/(N*m). c_s = 0 is the ideally clamped root.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::SpecError;

/// Isotropic elastic material with a simple maximum-stress failure level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialProps {
    /// Young's modulus E, Pa.
    pub youngs_modulus: f64,
    /// Poisson ratio, dimensionless.
    pub poisson_ratio: f64,
    /// Bending stress at which the part is considered broken, Pa.
    pub fracture_strength: f64,
}

impl MaterialProps {
    pub fn validate(&self) -> Result<(), SpecError> {
        if !self.youngs_modulus.is_finite() || self.youngs_modulus <= 0.0 {
            return Err(SpecError::new(
                "material.youngs_modulus",
                "a finite value > 0 Pa",
                self.youngs_modulus,
            ));
        }
        if !(self.poisson_ratio >= 0.0 && self.poisson_ratio < 0.5) {
            return Err(SpecError::new(
                "material.poisson_ratio",
                "a value in [0, 0.5)",
                self.poisson_ratio,
            ));
        }
        if !self.fracture_strength.is_finite() || self.fracture_strength <= 0.0 {
            return Err(SpecError::new(
                "material.fracture_strength",
                "a finite value > 0 Pa",
                self.fracture_strength,
            ));
        }
        Ok(())
    }
}

/// Rectangular-section cantilever beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpec {
    /// Clamp-to-tip length L, m.
    pub length: f64,
    /// Section width b, m.
    pub width: f64,
    /// Section thickness h (the bending direction), m.
    pub thickness: f64,
}

impl BeamSpec {
    /// Second moment of area I = b*h^3/12, m^4. Derived, never stored.
    pub fn second_moment_of_area(&self) -> f64 {
        self.width * self.thickness.powi(3) / 12.0
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        for (field, v) in [
            ("beam.length", self.length),
            ("beam.width", self.width),
            ("beam.thickness", self.thickness),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(SpecError::new(field, "a finite value > 0 m", v));
            }
        }
        Ok(())
    }
}

/// Rigid proof mass attached at the beam tip. Its flat top surface runs from
/// the beam tip (arc coordinate 0) to the outer edge (arc coordinate
/// `length`), in the undeflected state level with the beam axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofMassSpec {
    /// Top-surface extent from beam tip to outer edge, m.
    pub length: f64,
    /// Block thickness below the top surface, m. Documentation of the real
    /// geometry; the planar contact model does not consume it.
    pub thickness: f64,
}

impl ProofMassSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        for (field, v) in [
            ("mass.length", self.length),
            ("mass.thickness", self.thickness),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(SpecError::new(field, "a finite value > 0 m", v));
            }
        }
        Ok(())
    }
}

/// Sphere-tipped conical probe stylus, axis vertical, tip pointing down.
/// The spherical cap blends tangentially into the cone at polar angle
/// pi/2 - cone_half_angle from the bottom of the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StylusSpec {
    /// Tip sphere radius R, m.
    pub tip_radius: f64,
    /// Cone half-angle alpha measured from the stylus axis, rad.
    pub cone_half_angle: f64,
    pub material: MaterialProps,
}

impl StylusSpec {
    /// Proof-mass rotation at which the surface becomes parallel to the cone
    /// flank: theta = pi/2 - alpha. Contact is distributed beyond this tilt.
    pub fn flank_onset_rotation(&self) -> f64 {
        PI / 2.0 - self.cone_half_angle
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if !self.tip_radius.is_finite() || self.tip_radius <= 0.0 {
            return Err(SpecError::new(
                "stylus.tip_radius",
                "a finite value > 0 m",
                self.tip_radius,
            ));
        }
        if !(self.cone_half_angle > 0.0 && self.cone_half_angle < PI / 2.0) {
            return Err(SpecError::new(
                "stylus.cone_half_angle",
                "an angle in (0, pi/2) rad",
                self.cone_half_angle,
            ));
        }
        self.material.validate()
    }

    /// Conical stylus with an 18 um diamond sphere tip and a 27.5 deg cone
    /// half-angle (flank onset at 62.5 deg of surface tilt).
    pub fn conical_reference() -> Self {
        *preset_stylus()
    }
}

/// A probed device: cantilever plus rigid proof mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub beam: BeamSpec,
    pub mass: ProofMassSpec,
    pub material: MaterialProps,
    /// Rotational compliance of the clamp, rad/(N*m). 0 = ideal clamp.
    #[serde(default)]
    pub support_rot_compliance: f64,
    /// Designed point-load stiffness at the mass center, N/m. Documentation
    /// field; all computations derive stiffness from the geometry.
    pub nominal_center_stiffness: f64,
}

/// Threshold above which the slender-beam assumption is flagged.
pub const SLENDERNESS_LIMIT: f64 = 0.2;

impl DeviceSpec {
    /// Bending rigidity EI, N*m^2.
    pub fn bending_rigidity(&self) -> f64 {
        self.material.youngs_modulus * self.beam.second_moment_of_area()
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        self.beam.validate()?;
        self.mass.validate()?;
        self.material.validate()?;
        if !self.support_rot_compliance.is_finite() || self.support_rot_compliance < 0.0 {
            return Err(SpecError::new(
                "support_rot_compliance",
                "a finite value >= 0 rad/(N*m)",
                self.support_rot_compliance,
            ));
        }
        if !self.nominal_center_stiffness.is_finite() || self.nominal_center_stiffness <= 0.0 {
            return Err(SpecError::new(
                "nominal_center_stiffness",
                "a finite value > 0 N/m",
                self.nominal_center_stiffness,
            ));
        }
        Ok(())
    }

    /// Model-validity warnings. Never errors: a thick beam still computes,
    /// it just strains the slender-beam assumptions.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let slenderness = self.beam.thickness / self.beam.length;
        if slenderness > SLENDERNESS_LIMIT {
            out.push(format!(
                "beam thickness/length = {:.3} exceeds {}; slender-beam tip compliance \
                 is a stretch for this geometry",
                slenderness, SLENDERNESS_LIMIT
            ));
        }
        out
    }

    /// Tip deflection and rotation under a transverse tip force `q` (N,
    /// downward) and tip moment `m` (N*m, nose-down).
    pub fn tip_response(&self, q: f64, m: f64) -> TipResponse {
        let l = self.beam.length;
        let ei = self.bending_rigidity();
        let cs = self.support_rot_compliance;
        let m_root = q * l + m;
        TipResponse {
            deflection: q * l.powi(3) / (3.0 * ei) + m * l * l / (2.0 * ei) + cs * m_root * l,
            rotation: q * l * l / (2.0 * ei) + m * l / ei + cs * m_root,
        }
    }

    /// Stored elastic energy of the beam plus support spring for the given
    /// tip loads, J. Equals (Q*delta + M*theta)/2 because the response is
    /// linear in the loads.
    pub fn stored_elastic_energy(&self, q: f64, m: f64) -> f64 {
        let r = self.tip_response(q, m);
        0.5 * (q * r.deflection + m * r.rotation)
    }

    /// Small-deflection stiffness for a vertical point load applied on the
    /// mass top surface at distance `d` from the beam tip, N/m:
    ///
    ///   k(d) = [ (L^3/3 + d*L^2 + L*d^2)/EI + c_s*(L+d)^2 ]^-1
    pub fn point_load_stiffness(&self, d: f64) -> f64 {
        let l = self.beam.length;
        let ei = self.bending_rigidity();
        let cs = self.support_rot_compliance;
        let denom = (l.powi(3) / 3.0 + d * l * l + l * d * d) / ei + cs * (l + d) * (l + d);
        1.0 / denom
    }

    /// Bending stress at the beam root for a root moment `m_root`, Pa:
    /// sigma = |M_root| * (h/2) / I.
    pub fn root_bending_stress(&self, m_root: f64) -> f64 {
        m_root.abs() * (self.beam.thickness / 2.0) / self.beam.second_moment_of_area()
    }

    /// Fracture predicate: the root stress has reached the material's
    /// strength. The boundary case counts as fractured.
    pub fn is_fractured(&self, m_root: f64) -> bool {
        self.root_bending_stress(m_root) >= self.material.fracture_strength
    }

    /// Reference soft device: 500 x 200 um beam, 1000 um mass, thickness
    /// calibrated so the mass-center point-load stiffness is 10.000 N/m.
    pub fn ref_cantilever() -> Self {
        *preset_ref_cantilever()
    }

    /// Reference stiff device: same planform with the thickness calibrated
    /// to 60.000 N/m at the mass center; fracture strength calibrated so a
    /// center sweep breaks at 4.5 mN of vertical force.
    pub fn ref_stiff() -> Self {
        *preset_ref_stiff()
    }
}

/// Tip deflection (m, downward) and rotation (rad, nose-down).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TipResponse {
    pub deflection: f64,
    pub rotation: f64,
}

/// Beam thickness that yields `target_stiffness` for a point load at
/// distance `d` from the beam tip, holding everything else fixed. Closed
/// form: k scales with h^3 once the support term is removed.
pub fn calibrate_thickness_for_stiffness(
    device: &DeviceSpec,
    d: f64,
    target_stiffness: f64,
) -> Result<f64, SpecError> {
    if !target_stiffness.is_finite() || target_stiffness <= 0.0 {
        return Err(SpecError::new(
            "target_stiffness",
            "a finite value > 0 N/m",
            target_stiffness,
        ));
    }
    let l = device.beam.length;
    let cs = device.support_rot_compliance;
    let support = cs * (l + d) * (l + d);
    let beam_compliance = 1.0 / target_stiffness - support;
    if beam_compliance <= 0.0 {
        return Err(SpecError::new(
            "target_stiffness",
            "a stiffness reachable with the given support compliance",
            target_stiffness,
        ));
    }
    let geom = l.powi(3) / 3.0 + d * l * l + l * d * d;
    let ei = geom / beam_compliance;
    let i = ei / device.material.youngs_modulus;
    Ok((12.0 * i / device.beam.width).cbrt())
}

// ── Hertzian sphere-on-flat contact ──────────────────────────────────────

/// Effective contact modulus E* of the two bodies, Pa:
/// 1/E* = (1 - nu1^2)/E1 + (1 - nu2^2)/E2.
pub fn effective_contact_modulus(a: &MaterialProps, b: &MaterialProps) -> f64 {
    1.0 / ((1.0 - a.poisson_ratio * a.poisson_ratio) / a.youngs_modulus
        + (1.0 - b.poisson_ratio * b.poisson_ratio) / b.youngs_modulus)
}

fn check_hertz_inputs(force: f64, radius: f64) -> Result<(), SpecError> {
    if !force.is_finite() || force <= 0.0 {
        return Err(SpecError::new("force", "a finite value > 0 N", force));
    }
    if !radius.is_finite() || radius <= 0.0 {
        return Err(SpecError::new("radius", "a finite value > 0 m", radius));
    }
    Ok(())
}

/// Peak contact pressure p0 for a sphere of radius `radius` pressed on a
/// flat with normal force `force`, Pa:
///
///   p0 = (6 F E*^2 / (pi^3 R^2))^(1/3)
pub fn hertz_peak_pressure(
    force: f64,
    radius: f64,
    sphere: &MaterialProps,
    flat: &MaterialProps,
) -> Result<f64, SpecError> {
    check_hertz_inputs(force, radius)?;
    let e_star = effective_contact_modulus(sphere, flat);
    Ok((6.0 * force * e_star * e_star / (PI.powi(3) * radius * radius)).cbrt())
}

/// Hertz contact circle radius a = (3 F R / (4 E*))^(1/3), m. The peak
/// pressure equals 3F/(2 pi a^2); both routes agree identically.
pub fn hertz_contact_radius(
    force: f64,
    radius: f64,
    sphere: &MaterialProps,
    flat: &MaterialProps,
) -> Result<f64, SpecError> {
    check_hertz_inputs(force, radius)?;
    let e_star = effective_contact_modulus(sphere, flat);
    Ok((3.0 * force * radius / (4.0 * e_star)).cbrt())
}

// ── Shipped reference presets ────────────────────────────────────────────

const REF_CANTILEVER_JSON: &str = include_str!("../../../presets/ref-cantilever.json");
const REF_STIFF_JSON: &str = include_str!("../../../presets/ref-stiff.json");
const STYLUS_CONICAL_JSON: &str = include_str!("../../../presets/stylus-conical.json");

fn preset_ref_cantilever() -> &'static DeviceSpec {
    static CELL: OnceLock<DeviceSpec> = OnceLock::new();
    CELL.get_or_init(|| {
        serde_json::from_str(REF_CANTILEVER_JSON).expect("shipped REF-CANTILEVER preset parses")
    })
}

fn preset_ref_stiff() -> &'static DeviceSpec {
    static CELL: OnceLock<DeviceSpec> = OnceLock::new();
    CELL.get_or_init(|| serde_json::from_str(REF_STIFF_JSON).expect("shipped REF-STIFF preset parses"))
}

fn preset_stylus() -> &'static StylusSpec {
    static CELL: OnceLock<StylusSpec> = OnceLock::new();
    CELL.get_or_init(|| {
        serde_json::from_str(STYLUS_CONICAL_JSON).expect("shipped stylus preset parses")
    })
}

/// Raw JSON text of the shipped presets, keyed by name. The CLI embeds these
/// so preset resolution works without the source tree.
pub fn builtin_preset_json(name: &str) -> Option<&'static str> {
    match name {
        "REF-CANTILEVER" => Some(REF_CANTILEVER_JSON),
        "REF-STIFF" => Some(REF_STIFF_JSON),
        _ => None,
    }
}
