//! Checks the closed-form tip response against direct numerical
//! integration of the beam curvature. The oracle never uses the library's
//! formulas: it builds the bending-moment field for a tip force and tip
//! moment, integrates curvature with Simpson's rule, and adds the rigid
//! rotation a compliant support contributes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use probe_core::mechanics::{BeamSpec, DeviceSpec, MaterialProps, ProofMassSpec};

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    assert!(intervals.is_multiple_of(2));
    let h = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Tip deflection and rotation for a cantilever of rigidity ei and root
/// compliance c_s, loaded by force q and moment m at the free end.
fn oracle_tip_response(l: f64, ei: f64, c_s: f64, q: f64, m: f64) -> (f64, f64) {
    let moment = |x: f64| q * (l - x) + m;
    let root_rotation = c_s * moment(0.0);
    let rotation = root_rotation + simpson(|x| moment(x) / ei, 0.0, l, 200);
    let deflection =
        root_rotation * l + simpson(|x| moment(x) * (l - x) / ei, 0.0, l, 200);
    (deflection, rotation)
}

fn random_device(rng: &mut impl Rng) -> DeviceSpec {
    let length = rng.gen_range(200e-6..1000e-6);
    let mut device = DeviceSpec {
        beam: BeamSpec {
            length,
            width: rng.gen_range(50e-6..400e-6),
            thickness: rng.gen_range(2e-6..40e-6),
        },
        mass: ProofMassSpec {
            length: rng.gen_range(400e-6..2000e-6),
            thickness: 300e-6,
        },
        material: MaterialProps {
            youngs_modulus: rng.gen_range(50e9..300e9),
            poisson_ratio: 0.28,
            fracture_strength: 1e15,
        },
        support_rot_compliance: 0.0,
        nominal_center_stiffness: 0.0,
    };
    device.nominal_center_stiffness = device.point_load_stiffness(device.mass.length / 2.0);
    device
}

#[test]
fn tip_response_matches_curvature_quadrature_on_random_loads() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEA41);
    for case in 0..100 {
        let mut device = random_device(&mut rng);
        // Half the cases get a compliant support of beam-like magnitude.
        if case % 2 == 1 {
            let beam_scale = device.beam.length / device.bending_rigidity();
            device.support_rot_compliance = rng.gen_range(0.0..0.5) * beam_scale;
        }
        let q = rng.gen_range(-5e-3..5e-3);
        let m = rng.gen_range(-5e-6..5e-6);

        let got = device.tip_response(q, m);
        let (want_delta, want_theta) = oracle_tip_response(
            device.beam.length,
            device.bending_rigidity(),
            device.support_rot_compliance,
            q,
            m,
        );

        let delta_scale = want_delta.abs().max(1e-12);
        let theta_scale = want_theta.abs().max(1e-12);
        assert!(
            (got.deflection - want_delta).abs() <= 1e-9 * delta_scale,
            "case {case}: deflection {} vs oracle {}",
            got.deflection,
            want_delta
        );
        assert!(
            (got.rotation - want_theta).abs() <= 1e-9 * theta_scale,
            "case {case}: rotation {} vs oracle {}",
            got.rotation,
            want_theta
        );
    }
}

#[test]
fn point_load_stiffness_matches_the_quadrature_at_the_load_point() {
    // A force f at lever arm d from the tip is a tip load (f, f*d). The
    // deflection AT the load point adds the rigid-arm term d * rotation.
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEA42);
    for _ in 0..50 {
        let mut device = random_device(&mut rng);
        if rng.gen_bool(0.5) {
            device.support_rot_compliance =
                rng.gen_range(0.0..0.5) * device.beam.length / device.bending_rigidity();
        }
        let d = rng.gen_range(0.0..device.mass.length);
        let f = 1e-3;
        let (delta, theta) = oracle_tip_response(
            device.beam.length,
            device.bending_rigidity(),
            device.support_rot_compliance,
            f,
            f * d,
        );
        let drop_at_load = delta + d * theta;
        let k_oracle = f / drop_at_load;
        let k = device.point_load_stiffness(d);
        assert!(
            (k - k_oracle).abs() <= 1e-9 * k_oracle,
            "k {k} vs oracle {k_oracle}"
        );
    }
}
