//! Logarithmic-derivative operators and residue-based shift prediction.
//!
//! For a scalar scattering function `M(k; alpha)` the operator
//! `L_alpha = -i M^{-1} dM/dalpha` has a simple pole wherever `M` does. Its
//! residue gives the first-order movement of that pole,
//! `dk_p = i dalpha Res L_alpha`, with no reference to mode normalization.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::complexplane::{
    residue_with_estimate, winding_number, ContourSpec, PoleRecord, SingularityKind,
};
use crate::direct::{pole_shift_direct, DirectOptions};
use crate::error::{Error, Result};

type Evaluator = dyn Fn(Complex64, &[f64]) -> Result<Complex64> + Send + Sync;

/// A named, perturbable scalar parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub unit: String,
    pub value: f64,
}

impl Parameter {
    pub fn new(name: &str, unit: &str, value: f64) -> Self {
        Self {
            name: name.to_string(),
            unit: unit.to_string(),
            value,
        }
    }
}

/// A scalar meromorphic function `M(k; parameters)`.
#[derive(Clone)]
pub struct ScatteringFunction {
    label: String,
    params: Vec<Parameter>,
    inverted: bool,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for ScatteringFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScatteringFunction")
            .field("label", &self.label)
            .field("params", &self.params)
            .field("inverted", &self.inverted)
            .finish()
    }
}

impl ScatteringFunction {
    pub fn new<F>(label: impl Into<String>, params: Vec<Parameter>, eval: F) -> Self
    where
        F: Fn(Complex64, &[f64]) -> Result<Complex64> + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            params,
            inverted: false,
            eval: Arc::new(eval),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn parameters(&self) -> &[Parameter] {
        &self.params
    }

    /// True when this function represents `1/M` of some underlying `M`.
    pub fn is_inverted(&self) -> bool {
        self.inverted
    }

    /// `M' = 1/M`; zeros of `M` become poles of the result.
    pub fn inverted(&self) -> Self {
        let inner = self.eval.clone();
        Self {
            label: format!("1/({})", self.label),
            params: self.params.clone(),
            inverted: !self.inverted,
            eval: Arc::new(move |k, p| Ok(1.0 / inner(k, p)?)),
        }
    }

    /// `h(k) M(k)` for an analytic prefactor `h`.
    pub fn with_prefactor<H>(&self, prefactor: H) -> Self
    where
        H: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        let inner = self.eval.clone();
        Self {
            label: format!("h*{}", self.label),
            params: self.params.clone(),
            inverted: self.inverted,
            eval: Arc::new(move |k, p| Ok(prefactor(k) * inner(k, p)?)),
        }
    }

    pub fn param_index(&self, name: &str) -> Result<usize> {
        self.params
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn param_value(&self, name: &str) -> Result<f64> {
        Ok(self.params[self.param_index(name)?].value)
    }

    fn values(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.value).collect()
    }

    /// Copy with one parameter moved to `value`.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let idx = self.param_index(name)?;
        let mut out = self.clone();
        out.params[idx].value = value;
        Ok(out)
    }

    pub fn eval(&self, k: Complex64) -> Result<Complex64> {
        (self.eval)(k, &self.values())
    }

    pub fn eval_with(&self, k: Complex64, values: &[f64]) -> Result<Complex64> {
        (self.eval)(k, values)
    }
}

/// Default relative finite-difference step for parameter and `k` derivatives.
pub const FD_RELATIVE_STEP: f64 = 1e-6;

fn richardson<F>(g: F, h: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let coarse = (g(h)? - g(-h)?) / (2.0 * h);
    let fine = (g(0.5 * h)? - g(-0.5 * h)?) / h;
    Ok((4.0 * fine - coarse) / 3.0)
}

fn nonzero(m: Complex64, k: Complex64) -> Result<Complex64> {
    if m.norm() < f64::MIN_POSITIVE || !(m.re.is_finite() && m.im.is_finite()) {
        return Err(Error::ZeroValue(k));
    }
    Ok(m)
}

/// `L_param(k) = -i M^{-1} dM/dparam`, central differences with one Richardson halving.
pub fn log_derivative(m: &ScatteringFunction, param: &str, k: Complex64) -> Result<Complex64> {
    log_derivative_with_step(m, param, k, FD_RELATIVE_STEP)
}

pub fn log_derivative_with_step(m: &ScatteringFunction, param: &str, k: Complex64, rel_step: f64) -> Result<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    let idx = m.param_index(param)?;
    let base = m.values();
    let value = nonzero(m.eval_with(k, &base)?, k)?;
    let alpha = base[idx];
    let h = rel_step * alpha.abs().max(f64::MIN_POSITIVE.sqrt());
    let h = if alpha == 0.0 { rel_step } else { h };
    let d = richardson(
        |delta| {
            let mut p = base.clone();
            p[idx] = alpha + delta;
            m.eval_with(k, &p)
        },
        h,
    )?;
    Ok(-i * d / value)
}

/// `L_k(k) = -i M^{-1} dM/dk`.
pub fn log_derivative_k(m: &ScatteringFunction, k: Complex64) -> Result<Complex64> {
    log_derivative_k_with_step(m, k, FD_RELATIVE_STEP)
}

pub fn log_derivative_k_with_step(m: &ScatteringFunction, k: Complex64, rel_step: f64) -> Result<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    let base = m.values();
    let value = nonzero(m.eval_with(k, &base)?, k)?;
    let h = rel_step * k.norm();
    let d = richardson(|delta| m.eval_with(k + delta, &base), h)?;
    Ok(-i * d / value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMethod {
    GwsResidue,
    RatioForm,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftPrediction {
    pub k_p: Complex64,
    pub parameter: String,
    pub delta_alpha: f64,
    pub delta_k: Complex64,
    pub method: ShiftMethod,
    /// `Res L_param` for the residue method.
    pub residue: Option<Complex64>,
    /// Method-specific error indicator: last quadrature change (residue),
    /// spread between stencil averages (ratio), final Newton step (direct).
    pub error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOptions {
    /// Contour radius relative to `|k_p|`.
    pub relative_radius: f64,
    pub samples: usize,
    /// Halvings of the contour radius allowed when the quadrature misbehaves.
    pub max_shrinks: usize,
    pub fd_relative_step: f64,
    pub direct: DirectOptions,
}

impl Default for ShiftOptions {
    fn default() -> Self {
        Self {
            relative_radius: crate::complexplane::DEFAULT_RELATIVE_RADIUS,
            samples: crate::complexplane::DEFAULT_SAMPLES,
            max_shrinks: 4,
            fd_relative_step: FD_RELATIVE_STEP,
            direct: DirectOptions::default(),
        }
    }
}

fn contour_for(k_p: Complex64, opts: &ShiftOptions) -> Result<ContourSpec> {
    let mut radius = opts.relative_radius * k_p.norm();
    if k_p.im != 0.0 {
        radius = radius.min(0.5 * k_p.im.abs());
    }
    ContourSpec::new(k_p, radius, opts.samples)
}

/// Checks that `M` has a simple pole inside `contour` (winding `-1`).
pub fn verify_simple_pole(m: &ScatteringFunction, contour: &ContourSpec) -> Result<()> {
    let winding = winding_number(|k| m.eval(k), contour)?;
    if winding != -1 {
        return Err(Error::SimplePoleViolation {
            location: contour.center,
            winding,
        });
    }
    Ok(())
}

/// `Res_{k_p}` of an arbitrary function built from `M`, shrinking the contour
/// when the quadrature signals interference from a nearby singularity.
fn residue_near<F>(k_p: Complex64, opts: &ShiftOptions, f: F) -> Result<(Complex64, f64, ContourSpec)>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut contour = contour_for(k_p, opts)?;
    let mut attempt = 0;
    loop {
        match residue_with_estimate(&f, &contour) {
            Ok((r, e)) => return Ok((r, e, contour)),
            Err(Error::MultipleSingularities { .. }) | Err(Error::QuadratureNotConverged(_))
                if attempt < opts.max_shrinks =>
            {
                attempt += 1;
                contour = contour.shrunk(0.5);
            }
            Err(e) => return Err(e),
        }
    }
}

/// `Res_{k_p} L_param` after verifying that `k_p` is a simple pole of `M`.
pub fn residue_of_log_derivative(
    m: &ScatteringFunction,
    k_p: Complex64,
    param: &str,
    opts: &ShiftOptions,
) -> Result<(Complex64, f64)> {
    m.param_index(param)?;
    verify_simple_pole(m, &contour_for(k_p, opts)?)?;
    let (r, e, _) = residue_near(k_p, opts, |k| log_derivative_with_step(m, param, k, opts.fd_relative_step))?;
    Ok((r, e))
}

/// `Res_{k_p} tr L_k`; equals `i` at a simple pole.
pub fn residue_of_trace(m: &ScatteringFunction, k_p: Complex64, opts: &ShiftOptions) -> Result<Complex64> {
    verify_simple_pole(m, &contour_for(k_p, opts)?)?;
    let (r, _, _) = residue_near(k_p, opts, |k| log_derivative_k_with_step(m, k, opts.fd_relative_step))?;
    Ok(r)
}

/// First-order (or direct) pole shift under `param -> param + delta_alpha`.
pub fn pole_shift(
    m: &ScatteringFunction,
    k_p: Complex64,
    param: &str,
    delta_alpha: f64,
    method: ShiftMethod,
    opts: &ShiftOptions,
) -> Result<ShiftPrediction> {
    let i = Complex64::new(0.0, 1.0);
    m.param_index(param)?;
    let make = |delta_k, residue, error_estimate| ShiftPrediction {
        k_p,
        parameter: param.to_string(),
        delta_alpha,
        delta_k,
        method,
        residue,
        error_estimate,
    };
    match method {
        ShiftMethod::GwsResidue => {
            let (res, err) = residue_of_log_derivative(m, k_p, param, opts)?;
            Ok(make(i * delta_alpha * res, Some(res), err))
        }
        ShiftMethod::RatioForm => {
            let contour = contour_for(k_p, opts)?;
            verify_simple_pole(m, &contour)?;
            // The ratio L_alpha / L_k is analytic at the pole, so averaging it
            // over points of the residue contour recovers its value at k_p.
            let ratio = |k: Complex64| -> Result<Complex64> {
                let la = log_derivative_with_step(m, param, k, opts.fd_relative_step)?;
                let lk = log_derivative_k_with_step(m, k, opts.fd_relative_step)?;
                Ok(la / lk)
            };
            let rho = contour.radius;
            let pts = [
                Complex64::new(rho, 0.0),
                Complex64::new(0.0, rho),
                Complex64::new(-rho, 0.0),
                Complex64::new(0.0, -rho),
            ];
            let vals = pts.iter().map(|d| ratio(k_p + d)).collect::<Result<Vec<_>>>()?;
            let four = (vals[0] + vals[1] + vals[2] + vals[3]) / 4.0;
            let two = (vals[0] + vals[2]) / 2.0;
            let spread = (four - two).norm() / four.norm().max(f64::MIN_POSITIVE);
            Ok(make(-delta_alpha * four, None, spread))
        }
        ShiftMethod::Direct => {
            let result = pole_shift_direct(m, k_p, param, delta_alpha, &opts.direct)?;
            Ok(make(result.delta_k, None, result.final_step))
        }
    }
}

/// Shift of a simple zero of `M`, computed as a pole shift of `1/M`.
pub fn zero_shift(
    m: &ScatteringFunction,
    k_z: Complex64,
    param: &str,
    delta_alpha: f64,
    method: ShiftMethod,
    opts: &ShiftOptions,
) -> Result<ShiftPrediction> {
    pole_shift(&m.inverted(), k_z, param, delta_alpha, method, opts)
}

/// Complex sensing figure of merit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityMetric {
    pub eta: Complex64,
    pub abs_re: f64,
    pub abs_im: f64,
    pub kind: SingularityKind,
}

/// `eta = i Res L_param / |Im k_p|`, the unit-perturbation shift in units of
/// the half-width. For a zero record, `m` must already be the inverted function.
pub fn sensitivity_eta(
    m: &ScatteringFunction,
    record: &PoleRecord,
    param: &str,
    opts: &ShiftOptions,
) -> Result<SensitivityMetric> {
    let expected_inverted = record.kind == SingularityKind::Zero;
    if m.is_inverted() != expected_inverted {
        return Err(Error::InvalidArgument(format!(
            "record of kind {:?} needs a function with inverted = {}",
            record.kind, expected_inverted
        )));
    }
    let k_p = record.location;
    if k_p.im == 0.0 {
        return Err(Error::RealAxisPole(k_p));
    }
    let (res, _) = residue_of_log_derivative(m, k_p, param, opts)?;
    let eta = Complex64::new(0.0, 1.0) * res / k_p.im.abs();
    Ok(SensitivityMetric {
        eta,
        abs_re: eta.re.abs(),
        abs_im: eta.im.abs(),
        kind: record.kind,
    })
}

/// `dk_p/dr_c = -k_p / r_c` for a homogeneous nondispersive sphere, where
/// `k_p r_c` is fixed by the relative index alone.
pub fn radius_sensitivity_analytic(k_p: Complex64, r_c: f64) -> Complex64 {
    -k_p / r_c
}
