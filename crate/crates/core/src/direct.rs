//! Reference shifts obtained by re-solving for the perturbed pole.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::complexplane::{newton_root, winding_number, ContourSpec, NewtonOptions};
use crate::error::{Error, Result};
use crate::gws::ScatteringFunction;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectOptions {
    pub newton: NewtonOptions,
    /// Other singularities near the tracked one; large predicted moves toward
    /// them trigger sub-stepping.
    pub known_singularities: Vec<Complex64>,
    /// Split when the predicted move exceeds this fraction of the distance to
    /// the nearest known singularity.
    pub split_fraction: f64,
    /// Number of times the sub-step count may be doubled after a failed step.
    pub max_splits: usize,
}

impl Default for DirectOptions {
    fn default() -> Self {
        Self {
            newton: NewtonOptions::default(),
            known_singularities: Vec::new(),
            split_fraction: 0.3,
            max_splits: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectShiftResult {
    pub k_before: Complex64,
    pub k_after: Complex64,
    pub delta_alpha: f64,
    pub delta_k: Complex64,
    pub iterations_before: usize,
    pub iterations_after: usize,
    pub substeps: usize,
    pub final_step: f64,
}

/// `1 / M`, with an exactly singular or non-finite evaluation mapped to zero.
fn reciprocal(m: &ScatteringFunction, z: Complex64) -> Result<Complex64> {
    match m.eval(z) {
        Ok(v) if !(v.re.is_finite() && v.im.is_finite()) => Ok(Complex64::new(0.0, 0.0)),
        Ok(v) => Ok(1.0 / v),
        Err(Error::SingularTransfer(_)) => Ok(Complex64::new(0.0, 0.0)),
        Err(e) => Err(e),
    }
}

fn verify_pole(m: &ScatteringFunction, k: Complex64) -> Result<()> {
    let winding = winding_number(|z| m.eval(z), &ContourSpec::around(k))?;
    if winding != -1 {
        return Err(Error::SimplePoleViolation { location: k, winding });
    }
    Ok(())
}

fn first_order_estimate(m: &ScatteringFunction, k: Complex64, param: &str, delta_alpha: f64) -> Result<Complex64> {
    let alpha = m.param_value(param)?;
    let search = reciprocal;
    let hk = 1e-7 * k.norm();
    let ha = 1e-6 * alpha.abs().max(delta_alpha.abs());
    let ds_dk = (search(m, k + hk)? - search(m, k - hk)?) / (2.0 * hk);
    let up = m.with_param(param, alpha + ha)?;
    let down = m.with_param(param, alpha - ha)?;
    let ds_da = (search(&up, k)? - search(&down, k)?) / (2.0 * ha);
    Ok(-delta_alpha * ds_da / ds_dk)
}

/// Re-solves for the pole of `m` after `param -> param + delta_alpha`.
///
/// The pole is refined on the unperturbed function first, then followed in
/// `n` equal parameter steps (initially one). `n` grows when the first-order
/// estimate says the move is large compared with the distance to a known
/// neighbouring singularity, and doubles whenever a step fails.
pub fn pole_shift_direct(
    m: &ScatteringFunction,
    k_p: Complex64,
    param: &str,
    delta_alpha: f64,
    opts: &DirectOptions,
) -> Result<DirectShiftResult> {
    let alpha = m.param_value(param)?;
    let search = |f: &ScatteringFunction| {
        let f = f.clone();
        move |z: Complex64| -> Result<Complex64> { reciprocal(&f, z) }
    };
    let before = newton_root(search(m), k_p, &opts.newton)?;
    let k0 = before.root;
    verify_pole(m, k0)?;
    if delta_alpha == 0.0 {
        return Ok(DirectShiftResult {
            k_before: k0,
            k_after: k0,
            delta_alpha,
            delta_k: Complex64::new(0.0, 0.0),
            iterations_before: before.iterations,
            iterations_after: 0,
            substeps: 0,
            final_step: before.final_step,
        });
    }
    let mut steps = 1usize;
    if let Some(nearest) = opts
        .known_singularities
        .iter()
        .map(|s| (s - k0).norm())
        .filter(|d| *d > 0.0)
        .min_by(|a, b| a.partial_cmp(b).unwrap())
    {
        let estimate = first_order_estimate(m, k0, param, delta_alpha)?.norm();
        let limit = opts.split_fraction * nearest;
        if estimate > limit {
            steps = (estimate / limit).ceil() as usize;
        }
    }
    for _ in 0..=opts.max_splits {
        match walk(m, k0, alpha, param, delta_alpha, steps, opts, &search) {
            Ok((k, iterations, final_step, perturbed)) => {
                verify_pole(&perturbed, k)?;
                return Ok(DirectShiftResult {
                    k_before: k0,
                    k_after: k,
                    delta_alpha,
                    delta_k: k - k0,
                    iterations_before: before.iterations,
                    iterations_after: iterations,
                    substeps: steps,
                    final_step,
                });
            }
            Err(_) => steps *= 2,
        }
    }
    Err(Error::LostTrack {
        parameter: alpha + delta_alpha,
        last: None,
    })
}

#[allow(clippy::too_many_arguments)]
fn walk<S, G>(
    m: &ScatteringFunction,
    k0: Complex64,
    alpha: f64,
    param: &str,
    delta_alpha: f64,
    steps: usize,
    opts: &DirectOptions,
    search: &S,
) -> Result<(Complex64, usize, f64, ScatteringFunction)>
where
    S: Fn(&ScatteringFunction) -> G,
    G: Fn(Complex64) -> Result<Complex64>,
{
    let mut k = k0;
    let mut iterations = 0;
    let mut final_step = 0.0;
    let mut current = m.clone();
    for s in 1..=steps {
        let value = alpha + delta_alpha * s as f64 / steps as f64;
        current = m.with_param(param, value)?;
        let out = newton_root(search(&current), k, &opts.newton)?;
        if let Some(nearest) = opts
            .known_singularities
            .iter()
            .map(|z| (z - k).norm())
            .filter(|d| *d > 0.0)
            .min_by(|a, b| a.partial_cmp(b).unwrap())
        {
            if (out.root - k).norm() > 0.5 * nearest {
                return Err(Error::LostTrack {
                    parameter: value,
                    last: None,
                });
            }
        }
        iterations += out.iterations;
        final_step = out.final_step;
        k = out.root;
    }
    Ok((k, iterations, final_step, current))
}
