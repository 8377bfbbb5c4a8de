//! Mie coefficients for homogeneous and concentric multilayer spheres.
//!
//! Every coefficient is returned as a ratio `f / g` with both parts exposed,
//! so pole searches can look for zeros of `g` and zero searches for zeros of
//! `f` without dividing near-singular values.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::{refractive_index, EvaluationRule, MaterialLibrary};
use crate::specfun::{RiccatiSet, RiccatiTable, WRONSKIAN};

/// Sign linking Mie coefficients to S-matrix elements, `S = 1 + S_MATRIX_SIGN * 2 a`.
///
/// With the outgoing-wave convention used here, `S = 1 - 2a` is the element
/// that stays on the unit circle for lossless spheres.
pub const S_MATRIX_SIGN: f64 = -1.0;

/// Electric (`a`, TM) or magnetic (`b`, TE) multipole block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Electric,
    Magnetic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MieEvaluation {
    pub order: usize,
    /// Size parameter of the outermost surface, `k n_b r_N`.
    pub x: Complex64,
    /// Relative index of the outermost layer, `n_N / n_b`.
    pub m: Complex64,
    pub value: Complex64,
    pub numerator: Complex64,
    pub denominator: Complex64,
    /// Set when the denominator underflows: the point is treated as a pole.
    pub near_pole: bool,
}

impl MieEvaluation {
    fn from_parts(order: usize, x: Complex64, m: Complex64, f: Complex64, g: Complex64) -> Self {
        let near_pole = g.norm() < f64::MIN_POSITIVE;
        let value = if near_pole {
            Complex64::new(f64::INFINITY, f64::INFINITY)
        } else {
            f / g
        };
        Self {
            order,
            x,
            m,
            value,
            numerator: f,
            denominator: g,
            near_pole,
        }
    }

    /// The diagonal S-matrix element of this multipole channel.
    pub fn s_element(&self) -> Complex64 {
        1.0 + S_MATRIX_SIGN * 2.0 * self.value
    }
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 {
        return Err(Error::InvalidArgument("multipole order must be at least 1".into()));
    }
    Ok(())
}

fn homogeneous(block: Block, order: usize, x: Complex64, m: Complex64) -> Result<MieEvaluation> {
    check_order(order)?;
    if x.norm() == 0.0 {
        return Err(Error::InvalidArgument("size parameter must be nonzero".into()));
    }
    let outer = RiccatiTable::new(order, x)?.set(order);
    let inner = RiccatiTable::new(order, m * x)?.set(order);
    let (f, g) = match block {
        Block::Electric => (
            m * inner.psi * outer.psi_prime - outer.psi * inner.psi_prime,
            m * inner.psi * outer.xi_prime - outer.xi * inner.psi_prime,
        ),
        Block::Magnetic => (
            inner.psi * outer.psi_prime - m * outer.psi * inner.psi_prime,
            inner.psi * outer.xi_prime - m * outer.xi * inner.psi_prime,
        ),
    };
    Ok(MieEvaluation::from_parts(order, x, m, f, g))
}

/// Electric multipole coefficient of a homogeneous sphere.
pub fn mie_a(order: usize, x: Complex64, m: Complex64) -> Result<MieEvaluation> {
    homogeneous(Block::Electric, order, x, m)
}

/// Magnetic multipole coefficient of a homogeneous sphere.
pub fn mie_b(order: usize, x: Complex64, m: Complex64) -> Result<MieEvaluation> {
    homogeneous(Block::Magnetic, order, x, m)
}

/// Concentric sphere geometry with material identifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredSphere {
    /// Outer radius of each layer in metres, innermost first.
    pub radii: Vec<f64>,
    pub materials: Vec<String>,
    pub background: String,
}

impl LayeredSphere {
    pub fn new(radii: Vec<f64>, materials: Vec<String>, background: impl Into<String>) -> Result<Self> {
        let sphere = Self {
            radii,
            materials,
            background: background.into(),
        };
        sphere.validate()?;
        Ok(sphere)
    }

    /// Two-layer particle from core radius and shell thickness.
    pub fn core_shell(
        core_radius: f64,
        shell_thickness: f64,
        core: &str,
        shell: &str,
        background: &str,
    ) -> Result<Self> {
        Self::new(
            vec![core_radius, core_radius + shell_thickness],
            vec![core.to_string(), shell.to_string()],
            background,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() {
            return Err(Error::InvalidGeometry("at least one layer is required".into()));
        }
        if self.radii.len() != self.materials.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} radii but {} materials",
                self.radii.len(),
                self.materials.len()
            )));
        }
        if !(self.radii[0] > 0.0) || self.radii.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidGeometry("radii must be positive and finite".into()));
        }
        if self.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGeometry("radii must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn core_radius(&self) -> f64 {
        self.radii[0]
    }

    /// Thickness of the second layer, if there is one.
    pub fn shell_thickness(&self) -> Option<f64> {
        (self.radii.len() > 1).then(|| self.radii[1] - self.radii[0])
    }

    pub fn outer_radius(&self) -> f64 {
        *self.radii.last().unwrap()
    }
}

/// How material dispersion is handled at complex wavenumbers.
///
/// In both variants the reference wavenumber is held fixed for the duration
/// of a root search or contour integral, which keeps the scattering function
/// analytic in `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DispersionPolicy {
    /// Every material is evaluated at the real wavenumber `reference`.
    Frozen { reference: f64 },
    /// Closed-form models are continued to complex `k`; tabulated media are
    /// evaluated at `reference`.
    Continued { reference: f64 },
}

impl DispersionPolicy {
    pub fn reference(&self) -> f64 {
        match self {
            DispersionPolicy::Frozen { reference } | DispersionPolicy::Continued { reference } => *reference,
        }
    }

    pub fn with_reference(&self, reference: f64) -> Self {
        match self {
            DispersionPolicy::Frozen { .. } => DispersionPolicy::Frozen { reference },
            DispersionPolicy::Continued { .. } => DispersionPolicy::Continued { reference },
        }
    }
}

/// Refractive indices of a sphere resolved at one wavenumber.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexProfile {
    pub radii: Vec<f64>,
    pub indices: Vec<Complex64>,
    pub background: Complex64,
}

fn material_index(
    library: &MaterialLibrary,
    id: &str,
    k: Complex64,
    policy: DispersionPolicy,
) -> Result<Complex64> {
    let model = library.model(id)?;
    let frozen = Complex64::new(policy.reference(), 0.0);
    let n = match policy {
        DispersionPolicy::Frozen { .. } => refractive_index(model, frozen, EvaluationRule::FrozenAtRealPart)?,
        DispersionPolicy::Continued { .. } if model.supports_continuation() => {
            refractive_index(model, k, EvaluationRule::AnalyticContinuation)?
        }
        DispersionPolicy::Continued { .. } => refractive_index(model, frozen, EvaluationRule::FrozenAtRealPart)?,
    };
    Ok(n)
}

/// Resolves every layer and the background at wavenumber `k`.
pub fn resolve(
    sphere: &LayeredSphere,
    library: &MaterialLibrary,
    k: Complex64,
    policy: DispersionPolicy,
) -> Result<IndexProfile> {
    sphere.validate()?;
    let indices = sphere
        .materials
        .iter()
        .map(|id| material_index(library, id, k, policy))
        .collect::<Result<Vec<_>>>()?;
    let background = material_index(library, &sphere.background, k, policy)?;
    Ok(IndexProfile {
        radii: sphere.radii.clone(),
        indices,
        background,
    })
}

/// Generalized Mie coefficient of a layered sphere.
///
/// The radial function in layer `l` is `A psi(k n_l r) + B xi(k n_l r)`. The
/// core starts from `(A, B) = (1, 0)`; at each interface the value/derivative
/// pair is carried outward with the index ratio applied to the value (electric
/// block) or the derivative (magnetic block), then re-expanded in the outer
/// medium's basis. Outside, `f = -iB` and `g = iA`, which reduces term by term
/// to the homogeneous formulas for a single layer.
pub fn coated(block: Block, order: usize, profile: &IndexProfile, k: Complex64) -> Result<MieEvaluation> {
    check_order(order)?;
    if k.norm() == 0.0 {
        return Err(Error::InvalidArgument("wavenumber must be nonzero".into()));
    }
    let layers = profile.radii.len();
    if layers == 0 || layers != profile.indices.len() {
        return Err(Error::InvalidGeometry("index profile does not match radii".into()));
    }
    let i = Complex64::new(0.0, 1.0);
    let mut a = Complex64::new(1.0, 0.0);
    let mut b = Complex64::new(0.0, 0.0);
    let mut outer_set: Option<RiccatiSet> = None;
    for l in 0..layers {
        let r = profile.radii[l];
        let n_in = profile.indices[l];
        let n_out = if l + 1 < layers {
            profile.indices[l + 1]
        } else {
            profile.background
        };
        let inner = RiccatiTable::new(order, k * n_in * r)?.set(order);
        let u = a * inner.psi + b * inner.xi;
        let du = a * inner.psi_prime + b * inner.xi_prime;
        let ratio = n_in / n_out;
        let (u, du) = match block {
            Block::Electric => (ratio * u, du),
            Block::Magnetic => (u, ratio * du),
        };
        let outer = RiccatiTable::new(order, k * n_out * r)?.set(order);
        a = (outer.xi_prime * u - outer.xi * du) / WRONSKIAN;
        b = (outer.psi * du - outer.psi_prime * u) / WRONSKIAN;
        outer_set = Some(outer);
    }
    let outer = outer_set.expect("at least one layer");
    if !(a.re.is_finite() && a.im.is_finite() && b.re.is_finite() && b.im.is_finite()) {
        return Err(crate::specfun::SpecFunError::Overflow(outer.z).into());
    }
    let f = -i * b;
    let g = i * a;
    let m = profile.indices[layers - 1] / profile.background;
    Ok(MieEvaluation::from_parts(order, outer.z, m, f, g))
}

/// Electric coefficient of a layered sphere with materials resolved from `library`.
pub fn coated_a(
    order: usize,
    sphere: &LayeredSphere,
    library: &MaterialLibrary,
    k: Complex64,
    policy: DispersionPolicy,
) -> Result<MieEvaluation> {
    coated(Block::Electric, order, &resolve(sphere, library, k, policy)?, k)
}

/// Magnetic coefficient of a layered sphere with materials resolved from `library`.
pub fn coated_b(
    order: usize,
    sphere: &LayeredSphere,
    library: &MaterialLibrary,
    k: Complex64,
    policy: DispersionPolicy,
) -> Result<MieEvaluation> {
    coated(Block::Magnetic, order, &resolve(sphere, library, k, policy)?, k)
}

/// Truncation order `ceil(x + 4 x^(1/3) + 2)`, clamped to `[3, 60]`.
pub fn nu_max_heuristic(x: f64) -> usize {
    let x = x.abs();
    let n = (x + 4.0 * x.cbrt() + 2.0).ceil() as usize;
    n.clamp(3, crate::specfun::DEFAULT_MAX_ORDER)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSections {
    pub extinction: f64,
    pub scattering: f64,
    pub absorption: f64,
}

/// Relative size of the last retained multipole term above which the
/// truncated sum is reported as unconverged.
const SERIES_TAIL_LIMIT: f64 = 1e-3;

/// Extinction, scattering and absorption cross sections (m^2) at real `k`.
///
/// The background wavenumber is `k Re(n_b)`; the background must be lossless
/// or nearly so for the far-field sums to be meaningful.
pub fn cross_sections(
    sphere: &LayeredSphere,
    library: &MaterialLibrary,
    k: f64,
    nu_max: Option<usize>,
) -> Result<CrossSections> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument("cross sections need a positive real wavenumber".into()));
    }
    let kc = Complex64::new(k, 0.0);
    let profile = resolve(sphere, library, kc, DispersionPolicy::Frozen { reference: k })?;
    let kb = k * profile.background.re;
    let x = kb * sphere.outer_radius();
    let nmax = nu_max.unwrap_or_else(|| nu_max_heuristic(x));
    if nmax == 0 {
        return Err(Error::InvalidArgument("nu_max must be at least 1".into()));
    }
    let (mut ext, mut sca) = (0.0, 0.0);
    let mut last = 0.0;
    for nu in 1..=nmax {
        let a = coated(Block::Electric, nu, &profile, kc)?.value;
        let b = coated(Block::Magnetic, nu, &profile, kc)?.value;
        let w = (2 * nu + 1) as f64;
        let term_ext = w * (a + b).re;
        let term_sca = w * (a.norm_sqr() + b.norm_sqr());
        ext += term_ext;
        sca += term_sca;
        last = term_ext.abs().max(term_sca);
    }
    let scale = ext.abs().max(sca);
    if scale > 0.0 && last > SERIES_TAIL_LIMIT * scale {
        return Err(Error::SeriesNotConverged {
            order: nmax,
            tail: last / scale,
        });
    }
    let prefactor = 2.0 * PI / (kb * kb);
    let extinction = prefactor * ext;
    let scattering = prefactor * sca;
    Ok(CrossSections {
        extinction,
        scattering,
        absorption: extinction - scattering,
    })
}
