//! Stratified two-port slab with closed-form field integrals.
//!
//! Units are chosen so that `eps0 = mu0 = c = 1`; the angular frequency then
//! coincides with the vacuum wavenumber and is given in m⁻¹. Fields are the
//! tangential pair `(E_x, H_y)` obeying `E' = i w H`, `H' = i w eps E` for an
//! `exp(-i w t)` time dependence. Within a layer of index `n` the solution is
//! `E = A e^{i k s} + B e^{-i k s}`, `H = n (A e^{i k s} - B e^{-i k s})`
//! with `k = n w` and `s` measured from the left edge of the layer.
//!
//! Port modes carry the amplitude `c = i sqrt(2 / n_b)`, which makes the
//! unconjugated flux pairing of two unit-amplitude modes equal to `-4 delta`
//! and fixes every constant in the operator identities below without any
//! fitted factor.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::complexplane::{newton_root, winding_number, ContourSpec, NewtonOptions, PoleRecord, SingularityKind};
use crate::direct::{pole_shift_direct, DirectOptions};
use crate::error::{Error, Result};
use crate::gws::{pole_shift, Parameter, ScatteringFunction, ShiftMethod, ShiftOptions};
use crate::materials::{permittivity, EvaluationRule, MaterialLibrary};

pub type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

fn adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

fn frobenius(a: &Mat2) -> f64 {
    a.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn mat_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = *a;
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] -= b[r][c];
        }
    }
    out
}

fn scale(a: &Mat2, s: Complex64) -> Mat2 {
    a.map(|row| row.map(|z| z * s))
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)` in the Frobenius norm (zero when both vanish).
pub fn relative_residual(a: &Mat2, b: &Mat2) -> f64 {
    let denom = frobenius(a).max(frobenius(b));
    let diff = frobenius(&mat_sub(a, b));
    if denom == 0.0 {
        diff
    } else {
        diff / denom
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub thickness: f64,
    pub eps: Complex64,
}

impl Layer {
    pub fn new(thickness: f64, eps: Complex64) -> Self {
        Self { thickness, eps }
    }

    pub fn index(&self) -> Complex64 {
        self.eps.sqrt()
    }
}

/// One entry of a slab description file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LayerSpec {
    Permittivity {
        thickness_m: f64,
        eps_re: f64,
        #[serde(default)]
        eps_im: f64,
    },
    Material {
        thickness_m: f64,
        material_id: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slab1D {
    pub layers: Vec<Layer>,
    /// Real, positive permittivity of the surrounding medium.
    pub background: f64,
}

impl Slab1D {
    pub fn new(layers: Vec<Layer>, background: f64) -> Result<Self> {
        let slab = Self { layers, background };
        slab.validate()?;
        Ok(slab)
    }

    /// The empty slab: both ports share one reference plane.
    pub fn empty(background: f64) -> Result<Self> {
        Self::new(Vec::new(), background)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.background > 0.0 && self.background.is_finite()) {
            return Err(Error::InvalidGeometry("background permittivity must be real and positive".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if !(l.thickness > 0.0 && l.thickness.is_finite()) {
                return Err(Error::InvalidGeometry(format!("layer {i} thickness must be positive")));
            }
            if !(l.eps.re.is_finite() && l.eps.im.is_finite()) || l.eps == ZERO {
                return Err(Error::InvalidGeometry(format!("layer {i} permittivity is invalid")));
            }
        }
        Ok(())
    }

    /// Builds a slab from description-file entries. Material layers are
    /// evaluated at the real wavenumber `reference`.
    pub fn from_specs(
        specs: &[LayerSpec],
        background: f64,
        library: &MaterialLibrary,
        reference: f64,
    ) -> Result<Self> {
        let layers = specs
            .iter()
            .map(|s| match s {
                LayerSpec::Permittivity {
                    thickness_m,
                    eps_re,
                    eps_im,
                } => Ok(Layer::new(*thickness_m, Complex64::new(*eps_re, *eps_im))),
                LayerSpec::Material {
                    thickness_m,
                    material_id,
                } => {
                    let eps = permittivity(
                        library.model(material_id)?,
                        Complex64::new(reference, 0.0),
                        EvaluationRule::FrozenAtRealPart,
                    )?;
                    Ok(Layer::new(*thickness_m, eps))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers, background)
    }

    pub fn from_json(text: &str, background: f64, library: &MaterialLibrary, reference: f64) -> Result<Self> {
        let specs: Vec<LayerSpec> =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("slab description: {e}")))?;
        Self::from_specs(&specs, background, library, reference)
    }

    /// Quarter-wave mirrors of `pairs` high/low bilayers on both sides of a
    /// half-wave cavity, all tuned to the vacuum wavelength `lambda0`.
    pub fn bragg_cavity(pairs: usize, n_hi: f64, n_lo: f64, n_cavity: f64, lambda0: f64, background: f64) -> Result<Self> {
        let quarter = |n: f64| Layer::new(lambda0 / (4.0 * n), Complex64::new(n * n, 0.0));
        let mut layers = Vec::with_capacity(4 * pairs + 1);
        for _ in 0..pairs {
            layers.push(quarter(n_hi));
            layers.push(quarter(n_lo));
        }
        layers.push(Layer::new(lambda0 / (2.0 * n_cavity), Complex64::new(n_cavity * n_cavity, 0.0)));
        for _ in 0..pairs {
            layers.push(quarter(n_lo));
            layers.push(quarter(n_hi));
        }
        Self::new(layers, background)
    }

    pub fn length(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness).sum()
    }

    pub fn background_index(&self) -> f64 {
        self.background.sqrt()
    }

    pub fn basis(&self) -> PortBasis {
        PortBasis::new(self.background_index())
    }

    fn check_layer(&self, layer: usize) -> Result<()> {
        if layer >= self.layers.len() {
            return Err(Error::InvalidArgument(format!(
                "layer {layer} out of range for a slab with {} layers",
                self.layers.len()
            )));
        }
        Ok(())
    }

    /// Copy with `eps_j -> eps_j + delta`.
    pub fn with_eps_offset(&self, layer: usize, delta: Complex64) -> Result<Self> {
        self.check_layer(layer)?;
        let mut out = self.clone();
        out.layers[layer].eps += delta;
        Ok(out)
    }
}

/// Two single-mode ports in a homogeneous background of index `n_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortBasis {
    pub n_b: f64,
    /// Mode amplitude, `i sqrt(2 / n_b)`.
    pub amplitude: Complex64,
}

impl PortBasis {
    pub fn new(n_b: f64) -> Self {
        Self {
            n_b,
            amplitude: I * (2.0 / n_b).sqrt(),
        }
    }

    /// Unconjugated pairing `[E_p H_q + E_q H_p]` of two outgoing modes
    /// normalized by `amplitude`, divided by `4`: equals `-1`.
    pub fn pairing(&self) -> Complex64 {
        self.amplitude * self.amplitude * self.n_b / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Port {
    Left,
    Right,
}

impl Port {
    pub fn index(self) -> usize {
        match self {
            Port::Left => 0,
            Port::Right => 1,
        }
    }

    pub const BOTH: [Port; 2] = [Port::Left, Port::Right];
}

fn propagation(layer: &Layer, omega: Complex64) -> Mat2 {
    let n = layer.index();
    let phase = n * omega * layer.thickness;
    let (s, c) = (phase.sin(), phase.cos());
    [[c, I * s / n], [I * n * s, c]]
}

/// Transfer matrix mapping `(E, H)` at the left face to the right face.
pub fn transfer_matrix(slab: &Slab1D, omega: Complex64) -> Mat2 {
    slab.layers
        .iter()
        .fold([[ONE, ZERO], [ZERO, ONE]], |acc, l| mat_mul(&propagation(l, omega), &acc))
}

/// `n_b t11 - t21 - n_b² t12 + n_b t22`: entire in `w`, zero exactly at the
/// poles of the scattering matrix.
pub fn transfer_denominator(slab: &Slab1D, omega: Complex64) -> Complex64 {
    let t = transfer_matrix(slab, omega);
    let nb = slab.background_index();
    nb * t[0][0] - t[1][0] - nb * nb * t[0][1] + nb * t[1][1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSolution {
    pub omega: Complex64,
    pub port: Port,
    /// `(A, B)` per layer for unit incoming amplitude at `port`.
    pub coefficients: Vec<[Complex64; 2]>,
    /// Outgoing amplitudes `[left, right]`, i.e. column `port` of `S`.
    pub outgoing: [Complex64; 2],
    /// `(E, H)` at the left and right reference planes.
    pub left_face: [Complex64; 2],
    pub right_face: [Complex64; 2],
}

impl FieldSolution {
    /// Largest mismatch of `(E, H)` across interfaces, relative to the field
    /// scale.
    pub fn continuity_residual(&self, slab: &Slab1D) -> f64 {
        let mut previous = self.left_face;
        let mut worst: f64 = 0.0;
        let mut scale = previous[0].norm().max(previous[1].norm());
        for (layer, [a, b]) in slab.layers.iter().zip(&self.coefficients) {
            let n = layer.index();
            let start = [*a + *b, n * (*a - *b)];
            worst = worst.max((start[0] - previous[0]).norm()).max((start[1] - previous[1]).norm());
            let phase = I * n * self.omega * layer.thickness;
            let (f, g) = (phase.exp(), (-phase).exp());
            previous = [*a * f + *b * g, n * (*a * f - *b * g)];
            scale = scale.max(previous[0].norm()).max(previous[1].norm());
        }
        worst = worst
            .max((self.right_face[0] - previous[0]).norm())
            .max((self.right_face[1] - previous[1]).norm());
        worst / scale.max(f64::MIN_POSITIVE)
    }
}

/// Fields excited by a unit incoming wave at `port`.
pub fn internal_fields(slab: &Slab1D, omega: Complex64, port: Port) -> Result<FieldSolution> {
    if omega == ZERO {
        return Err(Error::InvalidArgument("frequency must be nonzero".into()));
    }
    slab.validate()?;
    let t = transfer_matrix(slab, omega);
    let nb = slab.background_index();
    let denom = nb * t[0][0] - t[1][0] - nb * nb * t[0][1] + nb * t[1][1];
    let cross = nb * t[0][0] - t[1][0] + nb * nb * t[0][1] - nb * t[1][1];
    let size = (nb * t[0][0]).norm() + t[1][0].norm() + (nb * nb * t[0][1]).norm() + (nb * t[1][1]).norm();
    if !(denom.norm() > 1e-14 * size) || !denom.re.is_finite() {
        return Err(Error::SingularTransfer(omega));
    }
    let (a_in, b_in) = match port {
        Port::Left => (ONE, ZERO),
        Port::Right => (ZERO, ONE),
    };
    let a_out = (2.0 * nb * b_in - a_in * cross) / denom;
    let e0 = a_in + a_out;
    let h0 = nb * (a_in - a_out);
    let mut coefficients = Vec::with_capacity(slab.layers.len());
    let (mut e, mut h) = (e0, h0);
    for layer in &slab.layers {
        let n = layer.index();
        coefficients.push([(e + h / n) / 2.0, (e - h / n) / 2.0]);
        let p = propagation(layer, omega);
        (e, h) = (p[0][0] * e + p[0][1] * h, p[1][0] * e + p[1][1] * h);
    }
    let b_out = e - b_in;
    Ok(FieldSolution {
        omega,
        port,
        coefficients,
        outgoing: [a_out, b_out],
        left_face: [e0, h0],
        right_face: [e, h],
    })
}

/// Scattering matrix with reference planes at the two outer faces;
/// `S[m][p]` is the outgoing amplitude at port `m` for unit input at `p`.
pub fn slab_smatrix(slab: &Slab1D, omega: Complex64) -> Result<Mat2> {
    let left = internal_fields(slab, omega, Port::Left)?;
    let right = internal_fields(slab, omega, Port::Right)?;
    Ok([
        [left.outgoing[0], right.outgoing[0]],
        [left.outgoing[1], right.outgoing[1]],
    ])
}

pub fn det_s(slab: &Slab1D, omega: Complex64) -> Result<Complex64> {
    let s = slab_smatrix(slab, omega)?;
    Ok(s[0][0] * s[1][1] - s[0][1] * s[1][0])
}

/// A term `coef · s^power · e^{i a s}` of a layer field.
#[derive(Debug, Clone, Copy)]
struct Term {
    coef: Complex64,
    a: Complex64,
    power: u32,
}

impl Term {
    fn conj(self) -> Self {
        Self {
            coef: self.coef.conj(),
            a: -self.a.conj(),
            power: self.power,
        }
    }
}

/// `∫_0^d s^m e^{i a s} ds`.
fn moment(m: u32, a: Complex64, d: f64) -> Complex64 {
    let x = I * a * d;
    if x.norm() < 1.0 {
        let mut sum = ZERO;
        let mut power = ONE;
        let mut factorial = 1.0;
        for k in 0..40u32 {
            if k > 0 {
                power *= x;
                factorial *= k as f64;
            }
            let term = power / (factorial * (k + m + 1) as f64);
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        return sum * d.powi(m as i32 + 1);
    }
    let e = x.exp();
    let ia = I * a;
    let mut value = (e - 1.0) / ia;
    for j in 1..=m {
        value = (d.powi(j as i32) * e - j as f64 * value) / ia;
    }
    value
}

fn integrate(f: &[Term], g: &[Term], d: f64) -> Complex64 {
    let mut sum = ZERO;
    for x in f {
        for y in g {
            sum += x.coef * y.coef * moment(x.power + y.power, x.a + y.a, d);
        }
    }
    sum
}

fn conj_terms(f: &[Term]) -> Vec<Term> {
    f.iter().map(|t| t.conj()).collect()
}

/// `E` and `H` of one layer as term lists.
fn layer_fields(n: Complex64, kappa: Complex64, ab: [Complex64; 2], amp: Complex64) -> (Vec<Term>, Vec<Term>) {
    let (a, b) = (ab[0] * amp, ab[1] * amp);
    let e = vec![
        Term { coef: a, a: kappa, power: 0 },
        Term { coef: b, a: -kappa, power: 0 },
    ];
    let h = vec![
        Term { coef: n * a, a: kappa, power: 0 },
        Term { coef: -n * b, a: -kappa, power: 0 },
    ];
    (e, h)
}

/// Derivatives of `E` and `H` given coefficient derivatives (already in the
/// fixed global frame) and the local `dn`, `dkappa`.
#[allow(clippy::too_many_arguments)]
fn layer_field_derivatives(
    n: Complex64,
    kappa: Complex64,
    ab: [Complex64; 2],
    dab: [Complex64; 2],
    dn: Complex64,
    dkappa: Complex64,
    amp: Complex64,
) -> (Vec<Term>, Vec<Term>) {
    let (a, b) = (ab[0] * amp, ab[1] * amp);
    let (da, db) = (dab[0] * amp, dab[1] * amp);
    let de = vec![
        Term { coef: da, a: kappa, power: 0 },
        Term { coef: db, a: -kappa, power: 0 },
        Term { coef: I * dkappa * a, a: kappa, power: 1 },
        Term { coef: -I * dkappa * b, a: -kappa, power: 1 },
    ];
    let dh = vec![
        Term { coef: dn * a + n * da, a: kappa, power: 0 },
        Term { coef: -dn * b - n * db, a: -kappa, power: 0 },
        Term { coef: n * I * dkappa * a, a: kappa, power: 1 },
        Term { coef: n * I * dkappa * b, a: -kappa, power: 1 },
    ];
    (de, dh)
}

/// Parameters with respect to which `∂S` is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "layer")]
pub enum SlabParameter {
    Frequency,
    /// `eps_j -> eps_j (1 + xi)`.
    PermittivityScale(usize),
    /// `d_j -> d_j + xi` with the right reference plane held fixed.
    Thickness(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityTag {
    /// `SᵀS = I − (i w / 2) ∫ (eps E_p E_q + H_p H_q)`.
    #[serde(rename = "C_eq13")]
    Unitarity,
    /// `−i Sᵀ ∂S` from unconjugated field products.
    #[serde(rename = "D_eq18")]
    WignerSmith,
    /// `S†S` from conjugated field products.
    #[serde(rename = "A_eq4")]
    EnergyBalance,
    /// `−i S† ∂S` from conjugated field products.
    #[serde(rename = "B_eq5")]
    ConjugatedDelay,
}

impl IdentityTag {
    pub const ALL: [IdentityTag; 4] = [
        IdentityTag::Unitarity,
        IdentityTag::WignerSmith,
        IdentityTag::EnergyBalance,
        IdentityTag::ConjugatedDelay,
    ];

    pub fn label(self) -> &'static str {
        match self {
            IdentityTag::Unitarity => "C_eq13",
            IdentityTag::WignerSmith => "D_eq18",
            IdentityTag::EnergyBalance => "A_eq4",
            IdentityTag::ConjugatedDelay => "B_eq5",
        }
    }

    pub fn needs_parameter(self) -> bool {
        matches!(self, IdentityTag::WignerSmith | IdentityTag::ConjugatedDelay)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorIdentityReport {
    pub tag: IdentityTag,
    pub parameter: Option<SlabParameter>,
    pub omega: Complex64,
    pub lhs: Mat2,
    pub rhs: Mat2,
    pub residual: f64,
}

/// Relative finite-difference step used for `∂S` and the coefficient
/// derivatives.
pub const SLAB_FD_STEP: f64 = 1e-4;

fn richardson_vec<F>(f: F, h: f64) -> Result<Vec<Complex64>>
where
    F: Fn(f64) -> Result<Vec<Complex64>>,
{
    let central = |h: f64| -> Result<Vec<Complex64>> {
        let (p, m) = (f(h)?, f(-h)?);
        Ok(p.iter().zip(&m).map(|(p, m)| (p - m) / (2.0 * h)).collect())
    };
    let coarse = central(h)?;
    let fine = central(h / 2.0)?;
    Ok(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect())
}

/// Slab, frequency and right-port phase factor at parameter offset `xi`.
fn perturbed(slab: &Slab1D, omega: Complex64, param: SlabParameter, xi: f64) -> Result<(Slab1D, Complex64, Complex64)> {
    let mut s = slab.clone();
    let mut w = omega;
    let mut right_phase = ONE;
    match param {
        SlabParameter::Frequency => w += xi,
        SlabParameter::PermittivityScale(j) => {
            slab.check_layer(j)?;
            s.layers[j].eps *= 1.0 + xi;
        }
        SlabParameter::Thickness(j) => {
            slab.check_layer(j)?;
            s.layers[j].thickness += xi;
            right_phase = (-I * slab.background_index() * omega * xi).exp();
        }
    }
    Ok((s, w, right_phase))
}

fn parameter_step(slab: &Slab1D, omega: Complex64, param: SlabParameter) -> Result<f64> {
    Ok(match param {
        SlabParameter::Frequency => SLAB_FD_STEP * omega.norm(),
        SlabParameter::PermittivityScale(j) => {
            slab.check_layer(j)?;
            SLAB_FD_STEP
        }
        SlabParameter::Thickness(j) => {
            slab.check_layer(j)?;
            SLAB_FD_STEP * slab.layers[j].thickness
        }
    })
}

/// `∂S/∂xi` with the right reference plane fixed for thickness changes.
pub fn smatrix_derivative(slab: &Slab1D, omega: Complex64, param: SlabParameter) -> Result<Mat2> {
    let h = parameter_step(slab, omega, param)?;
    let flat = richardson_vec(
        |xi| {
            let (s, w, phase) = perturbed(slab, omega, param, xi)?;
            let m = slab_smatrix(&s, w)?;
            Ok(vec![m[0][0], m[0][1] * phase, m[1][0] * phase, m[1][1] * phase * phase])
        },
        h,
    )?;
    Ok([[flat[0], flat[1]], [flat[2], flat[3]]])
}

/// Global-frame derivatives of `(A, B)` in every layer for both ports.
fn coefficient_derivatives(slab: &Slab1D, omega: Complex64, param: SlabParameter) -> Result<[Vec<[Complex64; 2]>; 2]> {
    let h = parameter_step(slab, omega, param)?;
    let layers = slab.layers.len();
    let flat = richardson_vec(
        |xi| {
            let (s, w, phase) = perturbed(slab, omega, param, xi)?;
            let mut out = Vec::with_capacity(4 * layers);
            for port in Port::BOTH {
                let sol = internal_fields(&s, w, port)?;
                let factor = if port == Port::Right { phase } else { ONE };
                for [a, b] in sol.coefficients {
                    out.push(a * factor);
                    out.push(b * factor);
                }
            }
            Ok(out)
        },
        h,
    )?;
    let mut result = [Vec::with_capacity(layers), Vec::with_capacity(layers)];
    for (p, slot) in result.iter_mut().enumerate() {
        for l in 0..layers {
            let base = p * 2 * layers + 2 * l;
            slot.push([flat[base], flat[base + 1]]);
        }
    }
    if let SlabParameter::Thickness(j) = param {
        let sols = [
            internal_fields(slab, omega, Port::Left)?,
            internal_fields(slab, omega, Port::Right)?,
        ];
        for (p, slot) in result.iter_mut().enumerate() {
            for l in (j + 1)..layers {
                let kappa = slab.layers[l].index() * omega;
                let [a, b] = sols[p].coefficients[l];
                slot[l][0] -= I * kappa * a;
                slot[l][1] += I * kappa * b;
            }
        }
    }
    Ok(result)
}

struct LayerData {
    n: Complex64,
    kappa: Complex64,
    eps: Complex64,
    d: f64,
    e: [Vec<Term>; 2],
    h: [Vec<Term>; 2],
    e_end: [Complex64; 2],
}

fn layer_data(slab: &Slab1D, omega: Complex64, sols: &[FieldSolution; 2], amp: Complex64) -> Vec<LayerData> {
    slab.layers
        .iter()
        .enumerate()
        .map(|(l, layer)| {
            let n = layer.index();
            let kappa = n * omega;
            let (e0, h0) = layer_fields(n, kappa, sols[0].coefficients[l], amp);
            let (e1, h1) = layer_fields(n, kappa, sols[1].coefficients[l], amp);
            let phase = I * kappa * layer.thickness;
            let end = |ab: [Complex64; 2]| amp * (ab[0] * phase.exp() + ab[1] * (-phase).exp());
            LayerData {
                n,
                kappa,
                eps: layer.eps,
                d: layer.thickness,
                e: [e0, e1],
                h: [h0, h1],
                e_end: [end(sols[0].coefficients[l]), end(sols[1].coefficients[l])],
            }
        })
        .collect()
}

/// Local `(∂(w eps), ∂w, ∂n, ∂kappa)` of a layer.
fn local_derivatives(
    param: SlabParameter,
    index: usize,
    data: &LayerData,
    omega: Complex64,
) -> (Complex64, Complex64, Complex64, Complex64) {
    match param {
        SlabParameter::Frequency => (data.eps, ONE, ZERO, data.n),
        SlabParameter::PermittivityScale(j) if j == index => {
            (omega * data.eps, ZERO, data.n / 2.0, omega * data.n / 2.0)
        }
        _ => (ZERO, ZERO, ZERO, ZERO),
    }
}

/// Moving-interface contributions `w (eps_left − eps_right) E_p E_q` for a
/// thickness parameter; `conjugate` applies `*` to the `q` factor.
fn interface_terms(slab: &Slab1D, data: &[LayerData], param: SlabParameter, omega: Complex64, conjugate: bool) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    if let SlabParameter::Thickness(j) = param {
        for i in j..data.len() {
            let right = if i + 1 < data.len() {
                data[i + 1].eps
            } else {
                Complex64::new(slab.background, 0.0)
            };
            let jump = omega * (data[i].eps - right);
            for p in 0..2 {
                for q in 0..2 {
                    let eq = if conjugate { data[i].e_end[q].conj() } else { data[i].e_end[q] };
                    out[p][q] += jump * data[i].e_end[p] * eq;
                }
            }
        }
    }
    out
}

/// Compares a scattering-matrix quadratic form with its field-integral
/// representation at frequency `omega`.
pub fn verify_identity(
    slab: &Slab1D,
    omega: Complex64,
    tag: IdentityTag,
    param: Option<SlabParameter>,
) -> Result<OperatorIdentityReport> {
    if tag.needs_parameter() && param.is_none() {
        return Err(Error::InvalidArgument(format!("identity {} needs a parameter", tag.label())));
    }
    let param = if tag.needs_parameter() { param } else { None };
    let s = slab_smatrix(slab, omega)?;
    let sols = [
        internal_fields(slab, omega, Port::Left)?,
        internal_fields(slab, omega, Port::Right)?,
    ];
    let amp = slab.basis().amplitude;
    let data = layer_data(slab, omega, &sols, amp);
    let identity = [[ONE, ZERO], [ZERO, ONE]];
    let (lhs, rhs) = match tag {
        IdentityTag::Unitarity => {
            let mut rhs = identity;
            for d in &data {
                for p in 0..2 {
                    for q in 0..2 {
                        let v = d.eps * integrate(&d.e[p], &d.e[q], d.d) + integrate(&d.h[p], &d.h[q], d.d);
                        rhs[p][q] -= I * omega / 2.0 * v;
                    }
                }
            }
            (mat_mul(&transpose(&s), &s), rhs)
        }
        IdentityTag::EnergyBalance => {
            // Indexed [q][p] to match (S†S)_qp.
            let mut rhs = identity;
            for d in &data {
                let im_weps = (omega * d.eps).im;
                for p in 0..2 {
                    for q in 0..2 {
                        let eq = conj_terms(&d.e[q]);
                        let hq = conj_terms(&d.h[q]);
                        let v = im_weps * integrate(&d.e[p], &eq, d.d) + omega.im * integrate(&d.h[p], &hq, d.d);
                        rhs[q][p] -= 0.5 * v;
                    }
                }
            }
            (mat_mul(&adjoint(&s), &s), rhs)
        }
        IdentityTag::WignerSmith | IdentityTag::ConjugatedDelay => {
            let param = param.expect("checked above");
            let ds = smatrix_derivative(slab, omega, param)?;
            let dab = coefficient_derivatives(slab, omega, param)?;
            let conjugated = tag == IdentityTag::ConjugatedDelay;
            let mut rhs = [[ZERO; 2]; 2];
            for (l, d) in data.iter().enumerate() {
                let (dweps, dw, dn, dkappa) = local_derivatives(param, l, d, omega);
                let derivs = [
                    layer_field_derivatives(d.n, d.kappa, sols[0].coefficients[l], dab[0][l], dn, dkappa, amp),
                    layer_field_derivatives(d.n, d.kappa, sols[1].coefficients[l], dab[1][l], dn, dkappa, amp),
                ];
                for p in 0..2 {
                    for q in 0..2 {
                        if conjugated {
                            // B_qp, stored at [q][p].
                            let eq = conj_terms(&d.e[q]);
                            let hq = conj_terms(&d.h[q]);
                            let (dep, dhp) = (&derivs[p].0, &derivs[p].1);
                            let sym = dweps * integrate(&d.e[p], &eq, d.d) + dw * integrate(&d.h[p], &hq, d.d);
                            let asym = (omega * d.eps).im * integrate(&eq, dep, d.d)
                                + omega.im * integrate(&hq, dhp, d.d);
                            rhs[q][p] += 0.25 * sym + 0.5 * I * asym;
                        } else {
                            let (deq, dhq) = (&derivs[q].0, &derivs[q].1);
                            let v = dweps * integrate(&d.e[p], &d.e[q], d.d)
                                + dw * integrate(&d.h[p], &d.h[q], d.d)
                                + 2.0 * omega * d.eps * integrate(&d.e[p], deq, d.d)
                                + 2.0 * omega * integrate(&d.h[p], dhq, d.d);
                            rhs[p][q] -= 0.25 * v;
                        }
                    }
                }
            }
            let jumps = interface_terms(slab, &data, param, omega, conjugated);
            for p in 0..2 {
                for q in 0..2 {
                    if conjugated {
                        rhs[q][p] += 0.25 * jumps[p][q];
                    } else {
                        rhs[p][q] -= 0.25 * jumps[p][q];
                    }
                }
            }
            let lhs = if conjugated {
                scale(&mat_mul(&adjoint(&s), &ds), -I)
            } else {
                scale(&mat_mul(&transpose(&s), &ds), -I)
            };
            (lhs, rhs)
        }
    };
    Ok(OperatorIdentityReport {
        tag,
        parameter: param,
        omega,
        residual: relative_residual(&lhs, &rhs),
        lhs,
        rhs,
    })
}

/// Largest relative mismatch between the face term `[E_p H_q + E_q H_p]`
/// and the volume term `2 i w ∫ (eps E_p E_q + H_p H_q)` over all port pairs.
pub fn poynting_residual(slab: &Slab1D, omega: Complex64) -> Result<f64> {
    let sols = [
        internal_fields(slab, omega, Port::Left)?,
        internal_fields(slab, omega, Port::Right)?,
    ];
    let data = layer_data(slab, omega, &sols, ONE);
    let mut worst: f64 = 0.0;
    for p in 0..2 {
        for q in 0..2 {
            let face = |f: &[Complex64; 2], g: &[Complex64; 2]| f[0] * g[1] + g[0] * f[1];
            let surface = face(&sols[p].right_face, &sols[q].right_face) - face(&sols[p].left_face, &sols[q].left_face);
            let volume: Complex64 = data
                .iter()
                .map(|d| 2.0 * I * omega * (d.eps * integrate(&d.e[p], &d.e[q], d.d) + integrate(&d.h[p], &d.h[q], d.d)))
                .sum();
            let scale = surface.norm().max(volume.norm()).max(1.0);
            worst = worst.max((surface - volume).norm() / scale);
        }
    }
    Ok(worst)
}

/// Locates a resonance of the slab as a zero of [`transfer_denominator`]
/// and certifies it as a simple pole of `det S`.
pub fn locate_slab_pole(slab: &Slab1D, seed: Complex64, opts: &NewtonOptions) -> Result<PoleRecord> {
    let out = newton_root(|w| Ok(transfer_denominator(slab, w)), seed, opts)?;
    let winding = winding_number(|w| det_s(slab, w), &ContourSpec::around(out.root))?;
    if winding != -1 {
        return Err(Error::SimplePoleViolation {
            location: out.root,
            winding,
        });
    }
    Ok(PoleRecord::new(out.root, SingularityKind::Pole, out.iterations, out.final_step))
}

/// Name of the additive permittivity parameter of [`det_s_function`].
pub const PARAM_DELTA_EPS: &str = "delta_eps";

/// `det S` as a scattering function of `w` and a real additive offset of
/// the permittivity of `layer`.
pub fn det_s_function(slab: &Slab1D, layer: usize) -> Result<ScatteringFunction> {
    slab.check_layer(layer)?;
    let base = slab.clone();
    Ok(ScatteringFunction::new(
        format!("det S (layer {layer})"),
        vec![Parameter::new(PARAM_DELTA_EPS, "1", 0.0)],
        move |w, p| {
            let s = base.with_eps_offset(layer, Complex64::new(p[0], 0.0))?;
            det_s(&s, w)
        },
    ))
}

/// Outgoing-only field at `omega`, normalized to `E(L) = 1`: `(A, B)` per
/// layer and the left-face `E`.
fn resonant_mode(slab: &Slab1D, omega: Complex64) -> (Vec<[Complex64; 2]>, Complex64) {
    let nb = slab.background_index();
    let (mut e, mut h) = (ONE, Complex64::new(nb, 0.0));
    let mut coefficients = vec![[ZERO; 2]; slab.layers.len()];
    for (l, layer) in slab.layers.iter().enumerate().rev() {
        let back = Layer::new(-layer.thickness, layer.eps);
        let p = propagation(&back, omega);
        (e, h) = (p[0][0] * e + p[0][1] * h, p[1][0] * e + p[1][1] * h);
        let n = layer.index();
        coefficients[l] = [(e + h / n) / 2.0, (e - h / n) / 2.0];
    }
    (coefficients, e)
}

/// Shifts of one resonance under `eps_layer -> eps_layer + delta_eps` from
/// four routes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationComparison {
    pub omega_p: Complex64,
    pub q_factor: f64,
    pub layer: usize,
    pub delta_eps: f64,
    /// Energy-normalized first-order formula with conjugated fields.
    pub conjugated: Complex64,
    /// First-order formula with unconjugated fields and outgoing-wave
    /// normalization.
    pub unconjugated: Complex64,
    /// Residue of the generalized Wigner-Smith operator of `det S`.
    pub gws: Complex64,
    /// Re-solved resonance.
    pub direct: Complex64,
}

impl PerturbationComparison {
    fn rel(x: Complex64, reference: Complex64) -> f64 {
        if reference == ZERO {
            x.norm()
        } else {
            (x - reference).norm() / reference.norm()
        }
    }

    pub fn conjugated_error(&self) -> f64 {
        Self::rel(self.conjugated, self.direct)
    }

    pub fn unconjugated_error(&self) -> f64 {
        Self::rel(self.unconjugated, self.direct)
    }

    pub fn gws_error(&self) -> f64 {
        Self::rel(self.gws, self.direct)
    }
}

pub fn perturb_compare(
    slab: &Slab1D,
    seed: Complex64,
    layer: usize,
    delta_eps: f64,
    opts: &NewtonOptions,
) -> Result<PerturbationComparison> {
    slab.check_layer(layer)?;
    let pole = locate_slab_pole(slab, seed, opts)?;
    let w = pole.location;
    if delta_eps == 0.0 {
        return Ok(PerturbationComparison {
            omega_p: w,
            q_factor: pole.q_factor,
            layer,
            delta_eps,
            conjugated: ZERO,
            unconjugated: ZERO,
            gws: ZERO,
            direct: ZERO,
        });
    }
    let (coefficients, e_left) = resonant_mode(slab, w);
    let mut overlap = ZERO;
    let mut norm = ZERO;
    let mut overlap_abs = 0.0;
    let mut energy = 0.0;
    for (l, layer_l) in slab.layers.iter().enumerate() {
        let n = layer_l.index();
        let kappa = n * w;
        let (e, h) = layer_fields(n, kappa, coefficients[l], ONE);
        let (ec, hc) = (conj_terms(&e), conj_terms(&h));
        let e2 = integrate(&e, &e, layer_l.thickness);
        let e_abs = integrate(&e, &ec, layer_l.thickness).re;
        let h_abs = integrate(&h, &hc, layer_l.thickness).re;
        norm += 2.0 * layer_l.eps * e2;
        energy += layer_l.eps.re * e_abs + h_abs;
        if l == layer {
            overlap = e2;
            overlap_abs = e_abs;
        }
    }
    let nb = slab.background_index();
    norm += I * nb / w * (e_left * e_left + ONE);
    let unconjugated = -w * delta_eps * overlap / norm;
    let conjugated = -w * delta_eps * overlap_abs / energy;

    let m = det_s_function(slab, layer)?;
    let shift_opts = ShiftOptions::default();
    let gws = pole_shift(&m, w, PARAM_DELTA_EPS, delta_eps, ShiftMethod::GwsResidue, &shift_opts)?.delta_k;

    let direct = pole_shift_direct(
        &m,
        w,
        PARAM_DELTA_EPS,
        delta_eps,
        &DirectOptions {
            newton: *opts,
            ..DirectOptions::default()
        },
    )?;
    Ok(PerturbationComparison {
        omega_p: w,
        q_factor: pole.q_factor,
        layer,
        delta_eps,
        conjugated,
        unconjugated,
        gws,
        direct: direct.delta_k,
    })
}
