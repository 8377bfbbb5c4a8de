use std::sync::Arc;

use num_complex::Complex64;
use poleshift::materials::{DispersionModel, MaterialEntry, MaterialLibrary};
use poleshift::mie::{coated, cross_sections, mie_a, mie_b, Block, IndexProfile, LayeredSphere};
use poleshift::{DispersionMode, ParticleModel};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn psi1(z: Complex64) -> (Complex64, Complex64) {
    (z.sin() / z - z.cos(), z.cos() / z - z.sin() / (z * z) + z.sin())
}

fn xi1(z: Complex64) -> (Complex64, Complex64) {
    let i = c(0.0, 1.0);
    let e = (i * z).exp();
    (-e * (1.0 + i / z), e * (-i + 1.0 / z + i / (z * z)))
}

// Textbook dipole coefficient built from closed-form order-one functions.
fn dipole_a(x: Complex64, m: Complex64) -> Complex64 {
    let (p_mx, dp_mx) = psi1(m * x);
    let (p_x, dp_x) = psi1(x);
    let (x_x, dx_x) = xi1(x);
    (m * p_mx * dp_x - p_x * dp_mx) / (m * p_mx * dx_x - x_x * dp_mx)
}

fn constant(n: Complex64) -> MaterialEntry {
    MaterialEntry {
        model: DispersionModel::Constant { n },
        source: "test".into(),
    }
}

#[test]
fn homogeneous_dipole_matches_closed_form() {
    for (x, m) in [(c(0.8, 0.0), c(1.5, 0.0)), (c(2.3, -0.2), c(2.5, 0.1)), (c(1.1, 0.0), c(0.3, 3.0))] {
        let a = mie_a(1, x, m).unwrap().value;
        let expected = dipole_a(x, m);
        assert!((a - expected).norm() < 1e-11 * expected.norm(), "x={x} m={m}: {a} vs {expected}");
    }
}

#[test]
fn matched_index_scatters_nothing() {
    for n in 1..6 {
        assert!(mie_a(n, c(3.0, 0.0), c(1.0, 0.0)).unwrap().value.norm() < 1e-14);
        assert!(mie_b(n, c(3.0, 0.0), c(1.0, 0.0)).unwrap().value.norm() < 1e-14);
    }
}

#[test]
fn coated_sphere_with_equal_layers_is_homogeneous() {
    let k = c(1.2e7, 0.0);
    let n = c(1.7, 0.02);
    let profile = IndexProfile {
        radii: vec![40e-9, 90e-9],
        indices: vec![n, n],
        background: c(1.33, 0.0),
    };
    for block in [Block::Electric, Block::Magnetic] {
        let layered = coated(block, 2, &profile, k).unwrap().value;
        let x = k * 1.33 * 90e-9;
        let m = n / 1.33;
        let single = match block {
            Block::Electric => mie_a(2, x, m).unwrap().value,
            Block::Magnetic => mie_b(2, x, m).unwrap().value,
        };
        assert!((layered - single).norm() < 1e-11 * single.norm());
    }
}

#[test]
fn thin_shell_limit_approaches_bare_core() {
    let k = c(1.0e7, 0.0);
    let core = c(2.0, 0.0);
    let bare = mie_a(1, k * 50e-9, core).unwrap().value;
    let profile = IndexProfile {
        radii: vec![50e-9, 50e-9 + 1e-13],
        indices: vec![core, c(1.45, 0.0)],
        background: c(1.0, 0.0),
    };
    let thin = coated(Block::Electric, 1, &profile, k).unwrap().value;
    assert!((thin - bare).norm() < 1e-5 * bare.norm());
}

#[test]
fn cross_sections_balance_for_lossy_sphere() {
    let mut lib = MaterialLibrary::new();
    lib.insert("absorber", constant(c(1.8, 0.3))).unwrap();
    lib.insert("air", constant(c(1.0, 0.0))).unwrap();
    let sphere = LayeredSphere::new(vec![120e-9], vec!["absorber".into()], "air").unwrap();
    let cs = cross_sections(&sphere, &lib, 1.1e7, None).unwrap();
    assert!(cs.absorption > 0.0 && cs.scattering > 0.0);
    assert!((cs.extinction - cs.scattering - cs.absorption).abs() < 1e-12 * cs.extinction);
}

#[test]
fn small_sphere_scattering_follows_rayleigh() {
    let mut lib = MaterialLibrary::new();
    lib.insert("glass", constant(c(1.5, 0.0))).unwrap();
    lib.insert("air", constant(c(1.0, 0.0))).unwrap();
    let r = 5e-9;
    let k = 1e7;
    let sphere = LayeredSphere::new(vec![r], vec!["glass".into()], "air").unwrap();
    let cs = cross_sections(&sphere, &lib, k, None).unwrap();
    let eps = 2.25;
    let pol = (eps - 1.0) / (eps + 2.0);
    let rayleigh = 8.0 / 3.0 * std::f64::consts::PI * k.powi(4) * r.powi(6) * pol * pol;
    assert!((cs.scattering - rayleigh).abs() < 1e-3 * rayleigh);
    assert!(cs.absorption.abs() < 1e-12 * cs.scattering.max(1e-40) + 1e-40);
}

#[test]
fn located_pole_is_a_simple_pole_in_the_lower_half_plane() {
    let mut lib = MaterialLibrary::new();
    lib.insert("hi", constant(c(2.5, 0.0))).unwrap();
    lib.insert("vac", constant(c(1.0, 0.0))).unwrap();
    let sphere = LayeredSphere::new(vec![100e-9], vec!["hi".into()], "vac").unwrap();
    let model = ParticleModel::new(sphere, Arc::new(lib), DispersionMode::Continued, Block::Electric, 1).unwrap();
    let located = model
        .locate(poleshift::SingularityKind::Pole, c(1.764e7, -0.243e7), &Default::default())
        .unwrap();
    let k = located.record.location;
    assert!(k.im < 0.0);
    // The pole of a homogeneous nondispersive sphere depends on k r only.
    let big = model
        .with_sphere(LayeredSphere::new(vec![200e-9], vec!["hi".into()], "vac").unwrap())
        .unwrap()
        .locate(poleshift::SingularityKind::Pole, k / 2.0, &Default::default())
        .unwrap();
    assert!((big.record.location * 2.0 - k).norm() < 1e-9 * k.norm());
}

proptest! {
    #[test]
    fn lossless_channels_are_unitary(x in 0.2f64..15.0, m in 0.5f64..3.5, n in 1usize..8) {
        for e in [mie_a(n, c(x, 0.0), c(m, 0.0)).unwrap(), mie_b(n, c(x, 0.0), c(m, 0.0)).unwrap()] {
            prop_assert!((e.s_element().norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn absorbing_channels_are_subunitary(x in 0.2f64..10.0, m in 1.1f64..3.0, kappa in 0.01f64..1.0, n in 1usize..6) {
        let s = mie_a(n, c(x, 0.0), c(m, kappa)).unwrap().s_element();
        prop_assert!(s.norm() < 1.0 + 1e-12);
    }

    #[test]
    fn coefficient_is_numerator_over_denominator(x in 0.2f64..8.0, xi in -0.5f64..0.0, m in 1.2f64..3.0) {
        let e = mie_a(2, c(x, xi), c(m, 0.0)).unwrap();
        prop_assert!((e.value - e.numerator / e.denominator).norm() <= 1e-12 * e.value.norm());
    }
}
