//! Riccati-Bessel and spherical Bessel functions of complex argument.
//!
//! Conventions: `psi_n(z) = z j_n(z)` and `xi_n(z) = z h1_n(z)`, so that
//! `psi_n xi_n' - psi_n' xi_n = i` for every order (see [`WRONSKIAN`]).
//! `psi` is generated by downward recurrence seeded from a continued fraction
//! for `psi_N / psi_{N-1}`; `xi` is generated by upward recurrence, which is
//! stable for outgoing waves.

use num_complex::Complex64;
use thiserror::Error;

/// Largest multipole order accepted unless a caller asks for more.
pub const DEFAULT_MAX_ORDER: usize = 60;

/// The order-independent Wronskian `psi xi' - psi' xi` under the adopted convention.
pub const WRONSKIAN: Complex64 = Complex64::new(0.0, 1.0);

const CF_TOLERANCE: f64 = 1e-15;
const CF_MAX_TERMS: usize = 10_000;
const RESCALE_THRESHOLD: f64 = 1e200;
const TINY: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    #[error("argument {0} is zero or on the negative real axis")]
    Domain(Complex64),
    #[error("order {order} exceeds the configured maximum {max}")]
    OrderTooLarge { order: usize, max: usize },
    #[error("intermediate values overflow at argument {0}")]
    Overflow(Complex64),
    #[error("continued fraction for order {order} did not converge at argument {z}")]
    ContinuedFraction { order: usize, z: Complex64 },
}

/// Values of the Riccati-Bessel pair and their derivatives at one order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiSet {
    pub order: usize,
    pub z: Complex64,
    pub psi: Complex64,
    pub psi_prime: Complex64,
    pub xi: Complex64,
    pub xi_prime: Complex64,
}

impl RiccatiSet {
    pub fn wronskian(&self) -> Complex64 {
        self.psi * self.xi_prime - self.psi_prime * self.xi
    }
}

/// Kinds accepted by [`spherical_bessel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselKind {
    J,
    Y,
    H1,
    H2,
}

/// Riccati-Bessel values for all orders `0..=max_order` at a single argument.
///
/// Orders are computed together because the recurrences produce them anyway;
/// the Mie code needs orders `nu - 1` and `nu` at once.
#[derive(Debug, Clone)]
pub struct RiccatiTable {
    z: Complex64,
    // index 0 holds order -1
    psi: Vec<Complex64>,
    xi: Vec<Complex64>,
}

fn check_argument(z: Complex64) -> Result<(), SpecFunError> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(SpecFunError::Domain(z));
    }
    if z.norm() == 0.0 || (z.im == 0.0 && z.re < 0.0) {
        return Err(SpecFunError::Domain(z));
    }
    Ok(())
}

fn finite(v: Complex64) -> bool {
    v.re.is_finite() && v.im.is_finite()
}

/// `psi_n / psi_{n-1}` by modified Lentz evaluation of
/// `1 / (a_n - 1/(a_{n+1} - 1/(a_{n+2} - ...)))` with `a_j = (2j+1)/z`.
fn psi_ratio(order: usize, z: Complex64) -> Result<Complex64, SpecFunError> {
    let a = |j: usize| Complex64::new((2 * j + 1) as f64, 0.0) / z;
    let tiny = Complex64::new(TINY, 0.0);
    let mut f = a(order);
    if f.norm() == 0.0 {
        f = tiny;
    }
    let mut c = f;
    let mut d = Complex64::new(0.0, 0.0);
    for j in 1..=CF_MAX_TERMS {
        let b = a(order + j);
        d = b - d;
        if d.norm() == 0.0 {
            d = tiny;
        }
        c = b - 1.0 / c;
        if c.norm() == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < CF_TOLERANCE {
            return Ok(1.0 / f);
        }
    }
    Err(SpecFunError::ContinuedFraction { order, z })
}

impl RiccatiTable {
    /// Builds the table, honoring [`DEFAULT_MAX_ORDER`].
    pub fn new(max_order: usize, z: Complex64) -> Result<Self, SpecFunError> {
        Self::with_limit(max_order, z, DEFAULT_MAX_ORDER)
    }

    pub fn with_limit(max_order: usize, z: Complex64, limit: usize) -> Result<Self, SpecFunError> {
        if max_order > limit {
            return Err(SpecFunError::OrderTooLarge {
                order: max_order,
                max: limit,
            });
        }
        check_argument(z)?;
        let psi = Self::psi_downward(max_order, z)?;
        let xi = Self::xi_upward(max_order, z)?;
        Ok(Self { z, psi, xi })
    }

    fn psi_downward(max_order: usize, z: Complex64) -> Result<Vec<Complex64>, SpecFunError> {
        // Start well above both the requested order and |z| so the ratio
        // continued fraction converges quickly.
        let start = max_order.max(z.norm().ceil() as usize) + 16;
        let ratio = psi_ratio(start, z)?;
        let mut out = vec![Complex64::new(0.0, 0.0); max_order + 2];
        let mut upper = Complex64::new(1.0, 0.0); // psi_start (unnormalized)
        let mut current = upper / ratio; // psi_{start-1}
        if !finite(current) {
            return Err(SpecFunError::Overflow(z));
        }
        // Walk n = start-1 down to 0, producing psi_{n-1} at each step.
        let mut n = start - 1;
        loop {
            if n <= max_order {
                out[n + 1] = current;
            }
            let lower = Complex64::new((2 * n + 1) as f64, 0.0) / z * current - upper;
            upper = current;
            current = lower;
            let scale = current.norm().max(upper.norm());
            if scale > RESCALE_THRESHOLD {
                let s = 1.0 / RESCALE_THRESHOLD;
                current *= s;
                upper *= s;
                for v in out.iter_mut() {
                    *v *= s;
                }
            }
            if !finite(current) {
                return Err(SpecFunError::Overflow(z));
            }
            if n == 0 {
                out[0] = current; // psi_{-1}
                break;
            }
            n -= 1;
        }
        // Normalize against whichever closed form is better conditioned.
        let (sin_z, cos_z) = (z.sin(), z.cos());
        let factor = if sin_z.norm() >= cos_z.norm() {
            sin_z / out[1]
        } else {
            cos_z / out[0]
        };
        if !finite(factor) || !finite(sin_z) || !finite(cos_z) {
            return Err(SpecFunError::Overflow(z));
        }
        for v in out.iter_mut() {
            *v *= factor;
            if !finite(*v) {
                return Err(SpecFunError::Overflow(z));
            }
        }
        Ok(out)
    }

    fn xi_upward(max_order: usize, z: Complex64) -> Result<Vec<Complex64>, SpecFunError> {
        let i = Complex64::new(0.0, 1.0);
        let mut out = Vec::with_capacity(max_order + 2);
        let e = (i * z).exp();
        out.push(e); // xi_{-1}
        out.push(-i * e); // xi_0
        for n in 0..max_order {
            let next = Complex64::new((2 * n + 1) as f64, 0.0) / z * out[n + 1] - out[n];
            if !finite(next) {
                return Err(SpecFunError::Overflow(z));
            }
            out.push(next);
        }
        if out.iter().any(|v| !finite(*v)) {
            return Err(SpecFunError::Overflow(z));
        }
        Ok(out)
    }

    pub fn argument(&self) -> Complex64 {
        self.z
    }

    pub fn max_order(&self) -> usize {
        self.psi.len() - 2
    }

    pub fn psi(&self, order: usize) -> Complex64 {
        self.psi[order + 1]
    }

    pub fn xi(&self, order: usize) -> Complex64 {
        self.xi[order + 1]
    }

    /// The full set at `order`, with derivatives from `f'_n = f_{n-1} - (n/z) f_n`.
    pub fn set(&self, order: usize) -> RiccatiSet {
        let z = self.z;
        let nz = Complex64::new(order as f64, 0.0) / z;
        let psi = self.psi[order + 1];
        let xi = self.xi[order + 1];
        RiccatiSet {
            order,
            z,
            psi,
            psi_prime: self.psi[order] - nz * psi,
            xi,
            xi_prime: self.xi[order] - nz * xi,
        }
    }
}

/// Riccati-Bessel functions and derivatives at a single order.
pub fn riccati(order: usize, z: Complex64) -> Result<RiccatiSet, SpecFunError> {
    Ok(RiccatiTable::new(order, z)?.set(order))
}

/// Spherical Bessel functions, consistent with [`riccati`] through
/// `psi = z j` and `xi = z h1`.
pub fn spherical_bessel(kind: BesselKind, order: usize, z: Complex64) -> Result<Complex64, SpecFunError> {
    let set = riccati(order, z)?;
    let i = Complex64::new(0.0, 1.0);
    let value = match kind {
        BesselKind::J => set.psi / z,
        BesselKind::Y => (set.xi - set.psi) / (i * z),
        BesselKind::H1 => set.xi / z,
        BesselKind::H2 => (2.0 * set.psi - set.xi) / z,
    };
    Ok(value)
}
