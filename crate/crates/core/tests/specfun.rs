use num_complex::Complex64;
use poleshift::specfun::{riccati, spherical_bessel, BesselKind, RiccatiTable, WRONSKIAN};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

// Closed forms for the first two orders.
fn psi1(z: Complex64) -> Complex64 {
    z.sin() / z - z.cos()
}

fn xi1(z: Complex64) -> Complex64 {
    -(c(0.0, 1.0) * z).exp() * (1.0 + c(0.0, 1.0) / z)
}

#[test]
fn order_zero_matches_sine_and_exponential() {
    for z in [c(0.3, 0.0), c(2.5, -0.4), c(11.0, 1.5), c(0.05, 0.02)] {
        let s = riccati(0, z).unwrap();
        assert!((s.psi - z.sin()).norm() < 1e-13 * z.sin().norm().max(1.0));
        let xi0 = -c(0.0, 1.0) * (c(0.0, 1.0) * z).exp();
        assert!((s.xi - xi0).norm() < 1e-13 * xi0.norm());
    }
}

#[test]
fn order_one_matches_closed_forms() {
    for z in [c(0.7, 0.0), c(3.2, -0.6), c(8.0, 0.9)] {
        let s = riccati(1, z).unwrap();
        assert!((s.psi - psi1(z)).norm() < 1e-12 * psi1(z).norm(), "{z}");
        assert!((s.xi - xi1(z)).norm() < 1e-12 * xi1(z).norm(), "{z}");
    }
}

#[test]
fn small_argument_series_limit() {
    // j_n(z) ~ z^n / (2n + 1)!! for |z| << 1.
    let z = c(1e-3, 0.0);
    let j3 = spherical_bessel(BesselKind::J, 3, z).unwrap();
    let expected = z.powu(3) / 105.0;
    assert!((j3 - expected).norm() < 1e-6 * expected.norm());
}

#[test]
fn high_order_recursion_is_stable() {
    let table = RiccatiTable::new(40, c(5.0, -0.5)).unwrap();
    for n in 0..=40 {
        let w = table.set(n).wronskian();
        assert!((w - WRONSKIAN).norm() < 1e-10, "order {n}: {w}");
    }
}

proptest! {
    #[test]
    fn wronskian_is_constant(re in 0.1f64..30.0, im in -3.0f64..3.0, n in 1usize..25) {
        let s = riccati(n, c(re, im)).unwrap();
        prop_assert!((s.wronskian() - WRONSKIAN).norm() < 1e-9);
    }

    #[test]
    fn derivative_matches_finite_difference(re in 0.5f64..20.0, im in -1.0f64..1.0, n in 1usize..10) {
        let z = c(re, im);
        let h = 1e-5;
        let up = riccati(n, z + h).unwrap();
        let down = riccati(n, z - h).unwrap();
        let s = riccati(n, z).unwrap();
        let fd = (up.psi - down.psi) / (2.0 * h);
        prop_assert!((fd - s.psi_prime).norm() < 1e-6 * s.psi_prime.norm().max(1.0));
    }
}
