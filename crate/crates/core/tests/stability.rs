use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use virtspin::encoding::{EncodingScheme, LogicalState};
use virtspin::spinsys::{PerturbationSpec, SystemParams};
use virtspin::stability::{compare_encodings, default_grid, encoded_fidelity, timescale_scaling_sweep, uniform_grid};
use virtspin::C64;

fn reference() -> SystemParams {
    SystemParams::new(500.0, 40.0, 30.0)
}

fn random_state(rng: &mut ChaCha8Rng) -> LogicalState {
    let raw: Vec<C64> = (0..4).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let n = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    LogicalState::new([raw[0] / n, raw[1] / n, raw[2] / n, raw[3] / n]).unwrap()
}

#[test]
fn virtual_encoding_is_stationary() {
    let p = reference();
    let times = default_grid(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut states: Vec<LogicalState> = (0..4).map(|k| LogicalState::basis(k).unwrap()).collect();
    states.extend((0..20).map(|_| random_state(&mut rng)));
    for s in &states {
        let f = encoded_fidelity(s, EncodingScheme::VirtualSpin, &p, &times).unwrap();
        assert!(f.iter().all(|x| (x - 1.0).abs() < 1e-10));
    }
}

#[test]
fn zeeman_instability_is_confined_to_the_mixed_block() {
    let p = reference();
    let times = default_grid(&p);
    for label in ["00", "11"] {
        let f = encoded_fidelity(&LogicalState::from_label(label).unwrap(), EncodingScheme::Zeeman, &p, &times).unwrap();
        assert!(f.iter().all(|x| (x - 1.0).abs() < 1e-12), "{label}");
    }
    for label in ["01", "10"] {
        let f = encoded_fidelity(&LogicalState::from_label(label).unwrap(), EncodingScheme::Zeeman, &p, &times).unwrap();
        assert!(f.iter().cloned().fold(1.0, f64::min) < 0.65, "{label}");
    }
}

#[test]
fn zeeman_dip_equals_mixing_strength() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let p = SystemParams::new(rng.gen_range(100.0..900.0), rng.gen_range(-80.0..80.0), rng.gen_range(1.0..80.0));
        let r = compare_encodings(&LogicalState::from_label("01").unwrap(), &p, &default_grid(&p), 0.99).unwrap();
        let expect = (p.j_coupling / p.theta()).powi(2);
        assert!((r.zeeman_dip_amplitude - expect).abs() < 1e-9, "{} vs {expect}", r.zeeman_dip_amplitude);
    }
}

#[test]
fn reports_for_the_reference_point() {
    let p = reference();
    let r = compare_encodings(&LogicalState::from_label("01").unwrap(), &p, &default_grid(&p), 0.9).unwrap();
    let t1 = (0.1f64 / 0.36).sqrt().asin() * 2.0 / 50.0;
    assert!((r.t1_estimate - t1).abs() < 1e-9);
    assert!(r.t2_estimate.is_infinite());
    assert!((r.fidelity_zeeman[0] - 1.0).abs() < 1e-12 && (r.fidelity_virtual[0] - 1.0).abs() < 1e-12);
    assert!((r.zeeman_dip_amplitude - 0.36).abs() < 1e-9);
    assert!(r.virtual_max_infidelity.abs() < 1e-10);
}

#[test]
fn no_coupling_means_no_disturbance() {
    let p = SystemParams::new(500.0, 40.0, 0.0);
    let r = compare_encodings(&LogicalState::equal_superposition(1, 2).unwrap(), &p, &default_grid(&p), 0.99).unwrap();
    assert!(r.fidelity_zeeman.iter().chain(&r.fidelity_virtual).all(|f| (f - 1.0).abs() < 1e-12));
    assert!(r.t1_estimate.is_infinite() && r.t2_estimate.is_infinite());
}

#[test]
fn secular_dipolar_term_dephases_the_virtual_superposition() {
    // 2d·IzSz shifts Ψ₁ by +d/2 and Ψ₂ by −d/2, so F = cos²(d·t/2).
    let d = 3.0;
    let p = reference().with_perturbation(PerturbationSpec::dipolar(d));
    let times = uniform_grid(20.0 * 2.0 * PI / 50.0, 501).unwrap();
    let f = encoded_fidelity(&LogicalState::equal_superposition(0, 1).unwrap(), EncodingScheme::VirtualSpin, &p, &times).unwrap();
    for (t, f) in times.iter().zip(&f) {
        assert!((f - (d * t / 2.0).cos().powi(2)).abs() < 1e-10);
    }
    for k in 0..4 {
        let f = encoded_fidelity(&LogicalState::basis(k).unwrap(), EncodingScheme::VirtualSpin, &p, &times).unwrap();
        assert!(f.iter().all(|x| (x - 1.0).abs() < 1e-10));
    }
}

#[test]
fn ensemble_average_is_reproducible_and_converges() {
    let times = uniform_grid(2.0, 201).unwrap();
    let state = LogicalState::equal_superposition(0, 3).unwrap();
    let run = |n| {
        let p = reference().with_perturbation(PerturbationSpec::random_fields(2.0, 42, n));
        encoded_fidelity(&state, EncodingScheme::VirtualSpin, &p, &times).unwrap()
    };
    let a = run(256);
    assert_eq!(a, run(256));
    let b = run(512);
    let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(worst < 2.0 / 16.0, "{worst}");
    assert!(a.iter().all(|f| *f >= 0.0 && *f <= 1.0 + 1e-9));
    assert!(a[200] < 0.9);
}

#[test]
fn first_dip_time_tracks_coupling() {
    let base = SystemParams::new(500.0, 0.0, 20.0);
    let table = timescale_scaling_sweep(&base, &[20.0, 40.0], &[0.5]).unwrap();
    let (t_a, t_b) = (table.j_rows[0].first_minimum_time, table.j_rows[1].first_minimum_time);
    assert!((t_a / t_b - 2.0).abs() < 0.02);
    assert!((t_a - PI / 20.0).abs() < 1e-6);
    assert!((table.j_exponent + 1.0).abs() < 1e-3);
}

#[test]
fn zero_perturbation_gives_zero_infidelity() {
    let table = timescale_scaling_sweep(&reference(), &[30.0], &[0.0]).unwrap();
    assert!(table.d_rows[0].virtual_max_infidelity.abs() < 1e-10);
    assert!(table.d_exponent.is_nan());
}
