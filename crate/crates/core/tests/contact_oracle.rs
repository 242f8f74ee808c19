//! The equilibrium solver against an independent potential-energy oracle
//! and against small-deflection beam theory, over randomized devices,
//! styli, placements and depths.

mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use probe_core::contact::{solve_equilibrium, PlacementSpec, SolverConfig};
use probe_core::ContactMode;
use support::{oracle_f_z, oracle_solve, random_device, random_stylus};

#[test]
fn solver_force_matches_the_energy_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0AC1E);
    let config = SolverConfig::default();
    let mut seen_modes = [false; 3];
    for case in 0..24 {
        let device = random_device(&mut rng);
        let stylus = random_stylus(&mut rng);
        let x_s = rng.gen_range(0.35..0.9) * device.mass.length;
        let placement = PlacementSpec::new(x_s);
        let z = rng.gen_range(3e-6..700e-6);

        let state = solve_equilibrium(&device, &stylus, placement, z, &config)
            .unwrap_or_else(|e| panic!("case {case}: solver failed: {e}"));
        let h = (z * 0.02).clamp(5e-8, 2.5e-7);
        let f_oracle = oracle_f_z(&device, &stylus, x_s, z, h);

        match state.mode {
            ContactMode::SurfaceSliding => seen_modes[0] = true,
            ContactMode::EdgeContact => seen_modes[1] = true,
            ContactMode::FlankContact => seen_modes[2] = true,
            other => panic!("case {case}: unexpected mode {other}"),
        }
        let scale = f_oracle.abs().max(1e-9);
        assert!(
            (state.f_z - f_oracle).abs() <= 5e-3 * scale,
            "case {case} ({}): f_z {} vs oracle {} at z = {z}",
            state.mode,
            state.f_z,
            f_oracle
        );

        let (_, theta_oracle) = oracle_solve(&device, &stylus, x_s, z);
        assert!(
            (state.theta - theta_oracle).abs() <= 1e-5_f64.max(1e-3 * state.theta),
            "case {case}: theta {} vs oracle {}",
            state.theta,
            theta_oracle
        );
    }
    assert!(
        seen_modes[0],
        "random cases never hit surface contact; widen the ranges"
    );
}

#[test]
fn solver_energy_matches_the_oracle_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0AC2E);
    let config = SolverConfig::default();
    for case in 0..12 {
        let device = random_device(&mut rng);
        let stylus = random_stylus(&mut rng);
        let x_s = rng.gen_range(0.4..0.85) * device.mass.length;
        let z = rng.gen_range(5e-6..400e-6);
        let state =
            solve_equilibrium(&device, &stylus, PlacementSpec::new(x_s), z, &config).unwrap();
        let (u_oracle, _) = oracle_solve(&device, &stylus, x_s, z);
        assert!(
            (state.stored_elastic_energy(&device) - u_oracle).abs() <= 1e-4 * u_oracle.abs().max(1e-15),
            "case {case}: energy {} vs oracle {}",
            state.stored_elastic_energy(&device),
            u_oracle
        );
    }
}

#[test]
fn contact_position_respects_the_mass_extent() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0AC3E);
    let config = SolverConfig::default();
    for _ in 0..40 {
        let device = random_device(&mut rng);
        let stylus = random_stylus(&mut rng);
        let x_s = rng.gen_range(0.35..0.9) * device.mass.length;
        let z = rng.gen_range(3e-6..700e-6);
        let state =
            solve_equilibrium(&device, &stylus, PlacementSpec::new(x_s), z, &config).unwrap();
        match state.mode {
            ContactMode::SurfaceSliding => {
                assert!(state.s >= 0.0 && state.s <= device.mass.length);
            }
            ContactMode::EdgeContact => {
                assert!((state.s - device.mass.length).abs() < 1e-12);
            }
            ContactMode::FlankContact => {
                let theta_max = std::f64::consts::FRAC_PI_2 - stylus.cone_half_angle;
                assert_eq!(state.theta, theta_max);
            }
            other => panic!("unexpected mode {other}"),
        }
    }
}

#[test]
fn shallow_contact_follows_point_load_stiffness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0AC4E);
    let config = SolverConfig::default();
    for case in 0..20 {
        let device = random_device(&mut rng);
        let stylus = random_stylus(&mut rng);
        let x_s = rng.gen_range(0.4..0.9) * device.mass.length;
        let z = rng.gen_range(0.2e-6..2e-6);
        let state =
            solve_equilibrium(&device, &stylus, PlacementSpec::new(x_s), z, &config).unwrap();
        let k = device.point_load_stiffness(x_s);
        assert!(
            (state.f_z - k * z).abs() <= 5e-3 * (k * z),
            "case {case}: f_z {} vs linear {}",
            state.f_z,
            k * z
        );
    }
}

