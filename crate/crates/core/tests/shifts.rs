use num_complex::Complex64;
use poleshift::complexplane::{newton_root, residue, track, winding_number, ContourSpec, NewtonOptions, TrackOptions};
use poleshift::gws::{
    pole_shift, radius_sensitivity_analytic, residue_of_trace, sensitivity_eta, zero_shift, Parameter,
    ScatteringFunction, ShiftMethod, ShiftOptions,
};
use poleshift::{pole_shift_direct, DirectOptions, Error, PoleRecord, SingularityKind};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `M(k; a) = (k - z0) / (k - a^2 + i)`: pole at `a^2 - i`, zero at `z0`.
fn rational(a: f64, z0: Complex64) -> ScatteringFunction {
    ScatteringFunction::new("rational", vec![Parameter::new("a", "1", a)], move |k, p| {
        Ok((k - z0) / (k - p[0] * p[0] + c(0.0, 1.0)))
    })
}

#[test]
fn residue_of_simple_pole() {
    let contour = ContourSpec::new(c(2.0, -1.0), 0.1, 32).unwrap();
    let r = residue(|k| Ok(c(3.0, 1.0) / (k - c(2.0, -1.0)) + k * k), &contour).unwrap();
    assert!((r - c(3.0, 1.0)).norm() < 1e-12);
}

#[test]
fn winding_counts_zeros_minus_poles() {
    let contour = ContourSpec::new(c(0.0, 0.0), 1.0, 64).unwrap();
    let f = |k: Complex64| Ok((k - 0.2) * (k + c(0.0, 0.3)) / (k - c(0.1, 0.1)));
    assert_eq!(winding_number(f, &contour).unwrap(), 1);
    let g = |k: Complex64| Ok(1.0 / ((k - 0.2) * (k + 0.4)));
    assert_eq!(winding_number(g, &contour).unwrap(), -2);
}

#[test]
fn newton_finds_cubic_root() {
    let out = newton_root(|k| Ok(k * k * k - 8.0), c(2.3, 0.1), &NewtonOptions::default()).unwrap();
    assert!((out.root - 2.0).norm() < 1e-12);
}

#[test]
fn residue_prediction_is_exact_to_first_order() {
    let m = rational(2.0, c(10.0, 3.0));
    let k_p = c(4.0, -1.0);
    let opts = ShiftOptions::default();
    let delta = 1e-4;
    let exact = (2.0 + delta) * (2.0 + delta) - 4.0;
    for method in [ShiftMethod::GwsResidue, ShiftMethod::RatioForm, ShiftMethod::Direct] {
        let p = pole_shift(&m, k_p, "a", delta, method, &opts).unwrap();
        let first = 4.0 * delta;
        let reference = if method == ShiftMethod::Direct { exact } else { first };
        assert!((p.delta_k - reference).norm() < 1e-7 * first, "{method:?}: {}", p.delta_k);
    }
}

#[test]
fn zero_shift_of_a_parameterized_zero() {
    let m = ScatteringFunction::new("zero", vec![Parameter::new("b", "1", 1.5)], |k, p| {
        Ok((k - c(p[0], -0.5)) / (k - c(7.0, -2.0)))
    });
    let p = zero_shift(&m, c(1.5, -0.5), "b", 1e-5, ShiftMethod::GwsResidue, &ShiftOptions::default()).unwrap();
    assert!((p.delta_k - 1e-5).norm() < 1e-11);
}

#[test]
fn trace_residue_is_i_for_a_pole() {
    let m = rational(1.0, c(5.0, 0.0));
    let r = residue_of_trace(&m, c(1.0, -1.0), &ShiftOptions::default()).unwrap();
    // L_k = -i M'/M and M'/M has residue -1 at a simple pole.
    assert!((r - c(0.0, 1.0)).norm() < 1e-8);
}

#[test]
fn eta_requires_matching_orientation() {
    let m = rational(1.0, c(5.0, 0.0));
    let zero = PoleRecord::new(c(5.0, 0.0), SingularityKind::Zero, 0, 0.0);
    assert!(matches!(
        sensitivity_eta(&m, &zero, "a", &ShiftOptions::default()),
        Err(Error::InvalidArgument(_))
    ));
    let pole = PoleRecord::new(c(1.0, -1.0), SingularityKind::Pole, 0, 0.0);
    let eta = sensitivity_eta(&m, &pole, "a", &ShiftOptions::default()).unwrap();
    assert!((eta.eta - 2.0).norm() < 1e-7);
}

#[test]
fn unknown_parameter_is_reported() {
    let m = rational(1.0, c(5.0, 0.0));
    let err = pole_shift(&m, c(1.0, -1.0), "zz", 1e-3, ShiftMethod::GwsResidue, &ShiftOptions::default());
    assert!(matches!(err, Err(Error::UnknownParameter(_))));
}

#[test]
fn direct_shift_substeps_near_a_neighbour() {
    let m = rational(1.0, c(5.0, 0.0));
    let opts = DirectOptions {
        known_singularities: vec![c(1.3, -1.0)],
        ..DirectOptions::default()
    };
    let out = pole_shift_direct(&m, c(1.0, -1.0), "a", 0.1, &opts).unwrap();
    assert!(out.substeps > 1);
    assert!((out.delta_k - (1.21 - 1.0)).norm() < 1e-10);
}

#[test]
fn tracking_follows_hyperbola() {
    // Pole of a nondispersive resonator obeys k r = const.
    let kr = c(1.7, -0.2);
    let path: Vec<f64> = (0..21).map(|i| 1.0 + 0.05 * i as f64).collect();
    let records = track(|r, k| Ok(k * r - kr), &path, kr, SingularityKind::Pole, &TrackOptions::default()).unwrap();
    for (r, rec) in path.iter().zip(&records) {
        assert!((rec.location * *r - kr).norm() < 1e-12);
    }
    let slope = radius_sensitivity_analytic(kr, 1.0);
    assert_eq!(slope, -kr);
}

proptest! {
    #[test]
    fn residue_of_shifted_simple_pole(re in -5.0f64..5.0, im in -5.0f64..-0.1, rr in -3.0f64..3.0, ri in -3.0f64..3.0) {
        let pole = c(re, im);
        let weight = c(rr, ri);
        prop_assume!(weight.norm() > 1e-3);
        let contour = ContourSpec::new(pole, 0.05, 32).unwrap();
        let r = residue(|k| Ok(weight / (k - pole) + (k - pole).exp()), &contour).unwrap();
        prop_assert!((r - weight).norm() < 1e-10 * weight.norm().max(1.0));
    }

    #[test]
    fn gws_linear_in_delta(a in 0.5f64..3.0, scale in 1e-6f64..1e-3) {
        let m = rational(a, c(20.0, 0.0));
        let k_p = c(a * a, -1.0);
        let opts = ShiftOptions::default();
        let one = pole_shift(&m, k_p, "a", scale, ShiftMethod::GwsResidue, &opts).unwrap().delta_k;
        let two = pole_shift(&m, k_p, "a", 2.0 * scale, ShiftMethod::GwsResidue, &opts).unwrap().delta_k;
        prop_assert!((two - 2.0 * one).norm() < 1e-12 * one.norm().max(1e-30));
        prop_assert!((one - 2.0 * a * scale).norm() < 1e-6 * one.norm());
    }
}
