//! Regenerates the derived constants baked into presets/.
//!
//! Prints the beam thickness that hits each preset's target center
//! stiffness, and the stiff preset's fracture strength, solved so that a
//! centered sweep fractures exactly when the vertical force reaches
//! 4.5 mN. Copy the printed values into the JSON files when the geometry
//! or materials change.

use probe_core::contact::{solve_equilibrium, PlacementSpec, SolverConfig};
use probe_core::mechanics::calibrate_thickness_for_stiffness;
use probe_core::{DeviceSpec, StylusSpec};

fn main() {
    let stylus = StylusSpec::conical_reference();

    for (name, device, target_k) in [
        ("REF-CANTILEVER", DeviceSpec::ref_cantilever(), 10.0),
        ("REF-STIFF", DeviceSpec::ref_stiff(), 60.0),
    ] {
        let d = device.mass.length / 2.0;
        let h = calibrate_thickness_for_stiffness(&device, d, target_k).unwrap();
        let mut check = device;
        check.beam.thickness = h;
        println!(
            "{name}: thickness = {h:.16e}  (k(Lm/2) = {})",
            check.point_load_stiffness(d)
        );
    }

    // Fracture strength for REF-STIFF: root stress at the depth where the
    // rising surface-contact branch first carries 4.5 mN.
    let mut device = DeviceSpec::ref_stiff();
    device.material.fracture_strength = 1e15;
    let placement = PlacementSpec::from_center_offset(&device, 0.0);
    let config = SolverConfig::default();
    let target_f = 4.5e-3;

    let f_at = |z: f64| {
        solve_equilibrium(&device, &stylus, placement, z, &config)
            .unwrap()
            .f_z
    };
    let (mut lo, mut hi) = (1e-6, 200e-6);
    assert!(f_at(lo) < target_f && f_at(hi) > target_f);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f_at(mid) < target_f {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < f64::EPSILON * hi {
            break;
        }
    }
    let z_star = 0.5 * (lo + hi);
    let state = solve_equilibrium(&device, &stylus, placement, z_star, &config).unwrap();
    println!(
        "REF-STIFF: fracture_strength = {:.16e}  (f_z = {:.9e} N at z_act = {:.6e} m)",
        state.sigma_root, state.f_z, z_star
    );
}
