use std::f64::consts::{FRAC_PI_2, PI};

use chiralsim::calibration::nelder_mead::{minimize_unit_box, NmOptions};
use chiralsim::calibration::{fit_s21_cancellation, synth_trace, FitOptions, NonidealParams, SyntheticNoiseSpec};
use chiralsim::freqdomain::{s21_lossless_cancelled, s_matrix_numeric, symmetric_grid};
use chiralsim::lindblad::{build_single_coupler_generator, SpaceOptions};
use chiralsim::linear::C64;
use chiralsim::model::{cancellation_coupling, validate_params, BusCouplingModel, Direction, WavepacketSpec};
use chiralsim::snail::{expansion_coefficients, potential_derivatives, SnailParams};
use chiralsim::sweeps::{run_sweep, SweepSpec};
use chiralsim::timedomain::{emit_standard, sech_wavepacket, DriveEnvelope};
use chiralsim::units::mhz;
use chiralsim::{CouplerParams, PumpSettings};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cfg(128))]

    #[test]
    fn cancellation_coupling_is_affine_in_g12(g12 in -5.0..5.0f64, d in -5.0..5.0f64, gb in 0.0..3.0f64, det in 0.5..10.0f64) {
        let f = |g12| cancellation_coupling(&BusCouplingModel { g12, g_b: gb, detuning: det }).unwrap();
        prop_assert!((f(g12 + d) - f(g12) - d).abs() < 1e-12);
    }

    #[test]
    fn validation_is_pure(gi in 0.0..0.5f64, g in 0.0..2.0f64, phi in -PI..PI) {
        let p = CouplerParams::measured_device().with_a_internal(mhz(gi), mhz(gi));
        let pumps = PumpSettings::new(mhz(g), mhz(g), 0.0, phi, &p);
        let (p0, q0) = (p, pumps);
        let a = validate_params(&p, &pumps);
        prop_assert_eq!(&a, &validate_params(&p, &pumps));
        prop_assert_eq!(p, p0);
        prop_assert_eq!(pumps, q0);
    }

    #[test]
    fn cancelled_line_is_all_pass(delta in -1e8..1e8f64, gamma in 1e4..1e8f64) {
        prop_assert!((s21_lossless_cancelled(delta, gamma).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn common_pump_phase_only_rephases_b(c in -PI..PI, phi1 in -PI..PI, phi2 in -PI..PI, g in 0.1..1.5f64, d in -5.0..5.0f64) {
        let p = CouplerParams::measured_device();
        let (g, d) = (mhz(g), mhz(d));
        let s0 = s_matrix_numeric(&p, &PumpSettings::new(g, g, phi1, phi2, &p), d).unwrap();
        let s1 = s_matrix_numeric(&p, &PumpSettings::new(g, g, phi1 + c, phi2 + c, &p), d).unwrap();
        for i in 1..=3 {
            for j in 1..=3 {
                let (a, b) = (s0.s(i, j), s1.s(i, j));
                prop_assert!((a.norm() - b.norm()).abs() < 1e-10);
                if (i == 3) == (j == 3) {
                    prop_assert!((a - b).norm() < 1e-10, "S{}{} changed", i, j);
                }
            }
        }
    }

    #[test]
    fn unpumped_coupler_is_reciprocal(d in -10.0..10.0f64, gi1 in 0.0..0.5f64, gi2 in 0.0..0.5f64) {
        let p = CouplerParams::measured_device().with_a_internal(mhz(gi1), mhz(gi2));
        let s = s_matrix_numeric(&p, &PumpSettings::off(&p), mhz(d)).unwrap();
        prop_assert!((s.s(2, 1) - s.s(1, 2)).norm() < 1e-12);
    }

    #[test]
    fn wavepacket_is_even(t in 0.0..1e-5f64, gph in 1e4..1e7f64) {
        let spec = WavepacketSpec::right(gph);
        prop_assert_eq!(sech_wavepacket(&spec, t), sech_wavepacket(&spec, -t));
    }

    #[test]
    fn snail_expansion_sits_at_a_minimum(alpha in 0.05..0.33f64, fe in 0.0..(3.0 * PI)) {
        let e = expansion_coefficients(&SnailParams { e_c: 1.0, e_j: 1.0, alpha, phi_ext: fe }).unwrap();
        let u = potential_derivatives(alpha, fe, e.phi_min);
        prop_assert!(u[1].abs() < 1e-10, "u'(φmin) = {}", u[1]);
        prop_assert!(u[2] > 0.0);
    }

    #[test]
    fn nelder_mead_history_never_increases(c in prop::collection::vec(0.05..0.95f64, 3), x0 in prop::collection::vec(0.0..1.0f64, 3)) {
        let f = |x: &[f64]| x.iter().zip(&c).map(|(a, b)| (a - b).powi(2) * (1.0 + 10.0 * b)).sum::<f64>();
        let r = minimize_unit_box(&f, &x0, &NmOptions::default());
        prop_assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(r.f < 1e-12);
    }

    #[test]
    fn leakage_response_is_smooth_at_zero(h in 1e-6..1e-2f64, g in 0.3..1.2f64) {
        let p = CouplerParams::measured_device();
        let at = |e: f64| s_matrix_numeric(&p, &PumpSettings::isolate(mhz(g), &p).with_leakage(e), 0.0).unwrap().s(2, 1).norm();
        prop_assert!((at(h) - at(0.0)).abs() / h < 10.0);
    }
}

proptest! {
    #![proptest_config(cfg(16))]

    #[test]
    fn mirrored_pumps_mirror_emission(gi in 0.0..0.2f64, gph in 0.1..0.6f64) {
        let p = CouplerParams::symmetric_lossless(mhz(1.0), 0.0).with_a_internal(mhz(gi), mhz(gi));
        let right = emit_standard(&p, &WavepacketSpec::right(mhz(gph))).unwrap().metrics;
        let left = emit_standard(&p, &WavepacketSpec { gamma_ph: mhz(gph), direction: Direction::Left }).unwrap().metrics;
        prop_assert!((right.right_fraction - left.left_fraction).abs() < 1e-9);
        prop_assert!((right.left_fraction - left.right_fraction).abs() < 1e-9);
    }

    #[test]
    fn generator_preserves_trace_and_hermiticity(seed in any::<u64>(), g in 0.0..1.5f64, phi in -PI..PI, gi in 0.0..0.3f64) {
        use rand::{Rng, SeedableRng};
        let p = CouplerParams::measured_device().with_a_internal(mhz(gi), mhz(2.0 * gi));
        let drive = DriveEnvelope::constant(&PumpSettings::new(mhz(g), mhz(g), 0.0, phi, &p));
        let gen = build_single_coupler_generator(&p, &drive, &SpaceOptions { fock_dim: 2, ..SpaceOptions::default() }).unwrap();
        let n = gen.space.dim();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let rho = &a * a.adjoint();
        let rho = &rho / rho.trace();
        let l = gen.apply(0.0, &rho);
        let scale = mhz(10.0);
        prop_assert!(l.trace().norm() / scale < 1e-12);
        prop_assert!((&l - l.adjoint()).norm() / scale < 1e-12);
    }

    #[test]
    fn fit_recovers_identifiable_quantities(ge in 0.5..1.5f64, ratio in 1.05..1.5f64, r1 in 0.05..0.5f64, r2 in 0.05..0.5f64) {
        let ge = mhz(ge);
        let truth = NonidealParams { g_c: -ratio * ge, gamma_e: ge, gamma_i1: r1 * ge, gamma_i2: r2 * ge };
        let trace = synth_trace(|d| truth.s21(d), &symmetric_grid(10.0 * ge, 201), &SyntheticNoiseSpec::none()).unwrap();
        let est = fit_s21_cancellation(&trace, &FitOptions::default()).unwrap().estimate;
        for (a, b) in est.identifiable().iter().zip(truth.identifiable()) {
            prop_assert!((a - b).abs() / b < 1e-6, "{} vs {}", a, b);
        }
        let fixed = FitOptions { fixed_internal: Some((truth.gamma_i1, truth.gamma_i2)), ..FitOptions::default() };
        let est = fit_s21_cancellation(&trace, &fixed).unwrap().estimate;
        prop_assert!((est.g_c - truth.g_c).abs() / truth.g_c.abs() < 1e-6);
        prop_assert!((est.gamma_e - truth.gamma_e).abs() / truth.gamma_e < 1e-6);
    }

    #[test]
    fn sweeps_are_deterministic(eps in prop::collection::vec(0.0..0.6f64, 2..6)) {
        let spec = SweepSpec::pump_leakage(eps);
        let csv = || {
            let mut buf = Vec::new();
            run_sweep(&spec).unwrap().write_csv(&mut buf).unwrap();
            buf
        };
        prop_assert_eq!(csv(), csv());
    }
}

#[test]
fn isolate_and_pass_are_mirror_settings() {
    let p = CouplerParams::measured_device();
    assert_eq!(PumpSettings::isolate(1.0, &p).delta_phi(), -FRAC_PI_2);
    assert_eq!(PumpSettings::pass(1.0, &p).delta_phi(), FRAC_PI_2);
}

#[test]
fn excitation_cap_is_exact() {
    use chiralsim::lindblad::{transfer_experiment, StateSpec, TransferOptions};
    use chiralsim::model::NetworkLayout;
    let c = CouplerParams::symmetric_lossless(mhz(1.0), 0.0).with_a_internal(mhz(0.05), mhz(0.1));
    let layout = NetworkLayout::chain(vec![c, c], 1.0);
    let spec = WavepacketSpec::right(mhz(0.2));
    let run = |full_space| {
        let opts = TransferOptions { fock_dim: 2, full_space, ..TransferOptions::default() };
        transfer_experiment(&StateSpec::Plus, &spec, &layout, &opts).unwrap()
    };
    let (capped, full) = (run(false), run(true));
    assert!((capped.fidelity - full.fidelity).abs() < 1e-9, "{} vs {}", capped.fidelity, full.fidelity);
    assert!((capped.purity - full.purity).abs() < 1e-9);
}
